//! Pipelines behind each subcommand.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use herzlab::atoms::{
    atomic_decompose, build_partition, build_restricted_partition, coefficient_ell_q,
    difference_atom, haar_atom, minimal_degree, reconstruction_residual, validate_atom, Atom,
    AtomParams, TOL_MOMENTS, TOL_RECON, TOL_SIZE,
};
use herzlab::duality::{campanato_report, dual_pairing_check, CampanatoConfig};
use herzlab::dyadic::{default_k_max, pow2};
use herzlab::grid::{Grid, GridFunction};
use herzlab::maximal::{
    default_grand_family, grand_maximal, hl_maximal, maximal_equivalence_report, MaximalConfig,
    SmoothingKernel,
};
use herzlab::molecules::{
    eps_floor, molecule_to_atoms, power_tail_molecule, validate_molecule, Molecule, MoleculeParams,
};
use herzlab::norms::{
    herz_norm, herz_norm_report, mixed_lebesgue_norm, norm_identity_check, HerzParams,
};
use herzlab::operators::{
    check_kernel_regularity, harness_window, lp_operator_ratio, operator_atom_harness,
    tf_molecule_check, CzKernel, KernelSpec, Operator, SampleSpec,
};
use herzlab::suite::{self, CriterionResult, SuiteConfig};
use herzlab::{testfns, HerzError};

use crate::config::{exponents, ConfigError, ExperimentConfig, Pipeline};
use crate::plot::Figure;

/// Why a pipeline stopped early.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(HerzError),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<HerzError> for Failure {
    fn from(e: HerzError) -> Self {
        Self::Numerical(e)
    }
}

/// Accumulated results of a run; survives a numerical failure half way through.
#[derive(Default)]
pub struct Outcome {
    pub results: BTreeMap<String, Value>,
    pub checks: BTreeMap<String, bool>,
    pub figures: Vec<Figure>,
    /// Extra files written next to the report.
    pub artifacts: Vec<(String, String)>,
    /// Lines echoed to stdout.
    pub lines: Vec<String>,
}

impl Outcome {
    fn put(&mut self, key: &str, v: impl Serialize) {
        self.results.insert(
            key.into(),
            serde_json::to_value(v).expect("results serialize"),
        );
    }

    fn check(&mut self, key: &str, ok: bool) {
        self.checks.insert(key.into(), ok);
    }

    pub fn pass(&self) -> bool {
        self.checks.values().all(|&b| b)
    }
}

fn field(name: &str) -> impl FnOnce(HerzError) -> ConfigError + '_ {
    move |e| ConfigError::from_core(e, name)
}

/// Names accepted by `--function`.
pub const FUNCTIONS: &[&str] = &[
    "gaussian",
    "odd-gaussian",
    "ring-gaussian",
    "box",
    "ball",
    "haar",
    "bump",
    "square",
    "sqrt-abs",
    "random",
    "mean-zero",
    "power-tail",
];

pub fn test_function(name: &str, grid: &Grid, seed: u64) -> Result<GridFunction, ConfigError> {
    let two_d = grid.dim() == 2;
    let lo = if two_d { [-1.0, -1.0] } else { [-1.0, 0.0] };
    let hi = if two_d { [1.0, 1.0] } else { [1.0, 0.0] };
    Ok(match name {
        "gaussian" => testfns::gaussian(grid, [0.0, 0.0], 1.0, 1.0),
        "odd-gaussian" => testfns::odd_gaussian(grid, 1.0),
        "ring-gaussian" => testfns::ring_gaussian(grid, 1.0),
        "box" => testfns::closed_box_indicator(grid, lo, hi),
        "ball" => testfns::ball_indicator(grid, 1.0),
        "haar" => testfns::haar(grid, 1.0),
        "bump" => testfns::bump(grid, [0.0, 0.0], 1.0),
        "square" => GridFunction::from_fn(grid, |x| x[0] * x[0]),
        "sqrt-abs" => GridFunction::from_fn(grid, |x| x[0].abs().sqrt()),
        "random" => testfns::random_smooth(grid, seed, 6, 3.0, grid.extent() / 2.0),
        "mean-zero" => suite::mean_zero_family(grid, seed).swap_remove(0).1,
        "power-tail" => power_tail_molecule(grid, 2.0, 1.0 / 16.0),
        other => {
            return Err(ConfigError::new(
                "function",
                format!(
                    "unknown function `{other}`; expected one of {}",
                    FUNCTIONS.join(", ")
                ),
            ))
        }
    })
}

/// `{2^k : k}` as `(radius, value)` pairs, useful for log-log figures.
fn by_radius(items: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = items.into_iter().collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Atoms used by the operator and duality pipelines: Haar atoms for `s = 0`,
/// difference atoms otherwise.
fn probe_atom(grid: &Grid, r: f64, params: &AtomParams) -> Result<Atom, HerzError> {
    if params.s == 0 {
        haar_atom(grid, r, params)
    } else {
        difference_atom(grid, r, params)
    }
}

/// Nodes on the first coordinate axis, as `(x_1, value)`.
fn axis_profile(f: &GridFunction) -> Vec<(f64, f64)> {
    let g = f.grid();
    (0..g.len())
        .filter(|&i| g.point(i)[1] == 0.0)
        .map(|i| (g.point(i)[0], f.values()[i]))
        .collect()
}

pub fn execute(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<(), Failure> {
    let grid = cfg.grid.build().map_err(field("grid"))?;
    match &cfg.pipeline {
        Pipeline::Norms {
            function,
            p,
            alpha,
            q,
            k_min,
            k_max,
        } => {
            let f = test_function(function, &grid, cfg.seed)?;
            let p = exponents(p, &grid)?;
            let params = HerzParams::new(
                *alpha,
                *q,
                p.clone(),
                true,
                k_min.unwrap_or(-10),
                k_max.unwrap_or_else(|| default_k_max(&grid)),
            )
            .map_err(field("alpha"))?;
            herz_norm_report(&GridFunction::zeros(&grid), &params).map_err(field("k_range"))?;

            let lp = mixed_lebesgue_norm(&f, &p, None)?;
            out.put("lp_norm", lp);
            let hom = herz_norm_report(&f, &params)?;
            out.put("homogeneous", &hom);
            let inh = herz_norm_report(&f, &params.with_homogeneous(false))?;
            out.put("non_homogeneous", &inh);
            out.put(
                "truncation",
                json!({
                    "inner_tail": hom.inner_tail,
                    "outer_mass": hom.outer_mass,
                    "relative": (hom.inner_tail + hom.outer_mass) / hom.norm.max(f64::MIN_POSITIVE),
                }),
            );
            let id = norm_identity_check(&f, &params)?;
            out.put("identity", &id);
            out.check(
                "finite",
                [lp, hom.norm, inh.norm, id.ratio]
                    .iter()
                    .all(|v| v.is_finite()),
            );
            out.lines.push(format!(
                "Kdot norm {:.6e}, K norm {:.6e}, L^p norm {lp:.6e}, tail {:.3e}",
                hom.norm,
                inh.norm,
                hom.inner_tail + hom.outer_mass
            ));
            out.figures.push(
                Figure::new(
                    "herz_terms",
                    "weighted shell norms",
                    "2^k",
                    "2^{k alpha} ||f chi_k||",
                    true,
                )
                .with(
                    "homogeneous",
                    by_radius(hom.terms.iter().map(|t| (pow2(t.k), t.weighted))),
                )
                .with(
                    "non_homogeneous",
                    by_radius(inh.terms.iter().map(|t| (pow2(t.k), t.weighted))),
                ),
            );
        }

        Pipeline::Maximal {
            function,
            p,
            kernel,
            a,
            b,
            n,
            j,
            max_factor,
        } => {
            let f = test_function(function, &grid, cfg.seed)?;
            let p = exponents(p, &grid)?;
            let phi = match kernel.as_str() {
                "gaussian" => SmoothingKernel::gaussian(1.0),
                "bump" => SmoothingKernel::bump(),
                other => {
                    return Err(ConfigError::new(
                        "kernel",
                        format!("unknown kernel `{other}`; expected gaussian or bump"),
                    )
                    .into())
                }
            };
            let levels =
                j.unwrap_or_else(|| ((grid.points_per_axis() - 1) as f64).log2().round() as u32);
            let mut mcfg = MaximalConfig::with_levels(&grid, levels).map_err(field("j"))?;
            mcfg.aperture = *a;
            mcfg.decay = *b;
            if let Some(n) = n {
                mcfg.n_order = *n;
                mcfg.grand_family = default_grand_family(&grid, *n).map_err(field("n"))?;
            }
            let warnings = mcfg.validate(&grid).map_err(field("maximal"))?;
            out.put("warnings", warnings);

            let rep = maximal_equivalence_report(&f, &phi, &p, &mcfg)?;
            out.put("equivalence", &rep);
            out.check(
                "pair_factor",
                rep.max_pair_factor.is_finite() && rep.max_pair_factor <= *max_factor,
            );
            out.lines.push(format!(
                "max pair factor {:.4} (limit {max_factor}), ||M_N f|| / ||f|| = {:.4}",
                rep.max_pair_factor, rep.operator_norm
            ));
            let gr = grand_maximal(&f, &mcfg)?;
            let hl = hl_maximal(&f);
            out.figures.push(
                Figure::new(
                    "maximal_profile",
                    "maximal functions on the x_1 axis",
                    "x_1",
                    "value",
                    false,
                )
                .with("|f|", axis_profile(&f.abs()))
                .with("M_HL f", axis_profile(&hl))
                .with("M_N f", axis_profile(&gr)),
            );
        }

        Pipeline::Decompose {
            function,
            alpha,
            q,
            p,
            s,
            eps,
            k_min,
            k_max,
            restricted,
        } => {
            let f = test_function(function, &grid, cfg.seed)?;
            let p = exponents(p, &grid)?;
            let s = s.unwrap_or_else(|| minimal_degree(*alpha, &p));
            let params =
                AtomParams::new(*alpha, p.clone(), s, *restricted).map_err(field("alpha"))?;
            let k_lo = k_min.unwrap_or_else(|| -((1.0 / grid.spacing()).log2().round() as i32) - 1);
            let k_hi = k_max.unwrap_or_else(|| default_k_max(&grid));
            let pou = if *restricted {
                build_restricted_partition(&grid, k_hi, *eps)
            } else {
                build_partition(&grid, k_lo, k_hi, *eps)
            }
            .map_err(field("eps"))?;
            let mcfg = MaximalConfig::for_grid(&grid).map_err(field("grid"))?;
            let herz = HerzParams::new(*alpha, *q, p.clone(), !*restricted, k_lo.min(k_hi), k_hi)
                .map_err(field("q"))?;

            let d = atomic_decompose(&f, &params, *q, &pou, &mcfg)?;
            out.artifacts
                .push(("decomposition.json".into(), d.to_json()?));
            let residual = reconstruction_residual(&f, &d, &p)?;
            let ell_q = coefficient_ell_q(&d, *q)?;
            let invalid = d
                .entries
                .iter()
                .filter(|e| !validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass)
                .count();
            let grand = herz_norm(&grand_maximal(&f, &mcfg)?, &herz)?;
            out.put("entries", d.len());
            out.put("ell_q", ell_q);
            out.put("reconstruction_residual", residual);
            out.put("invalid_atoms", invalid);
            out.put("grand_herz_norm", grand);
            out.put(
                "ell_q_over_grand",
                if grand > 0.0 { ell_q / grand } else { 0.0 },
            );
            out.put("diagnostics", &d.diagnostics);
            out.check("reconstruction", residual <= TOL_RECON);
            out.check("atoms_valid", invalid == 0);
            out.lines.push(format!(
                "{} atoms, ell_q {ell_q:.6e}, residual {residual:.3e}, invalid {invalid}",
                d.len()
            ));
            let mut largest: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
            for e in &d.entries {
                let key = (e.atom.radius.log2() * 1024.0).round() as i64;
                let slot = largest.entry(key).or_insert((e.atom.radius, 0.0));
                slot.1 = slot.1.max(e.lambda.abs());
            }
            out.figures.push(
                Figure::new(
                    "coefficients",
                    "largest |lambda| per atom radius",
                    "radius",
                    "|lambda|",
                    true,
                )
                .with("|lambda|", largest.into_values().collect()),
            );
        }

        Pipeline::Molecule {
            gamma,
            width,
            alpha,
            q,
            p,
            s,
            eps,
        } => {
            let p = exponents(p, &grid)?;
            let s = s.unwrap_or_else(|| minimal_degree(*alpha, &p));
            let eps = eps.unwrap_or_else(|| eps_floor(*alpha, &p, s) + 0.1);
            let mp = MoleculeParams::new(*alpha, p.clone(), s, eps, false).map_err(field("eps"))?;
            if !(gamma.is_finite() && *gamma > 0.0) {
                return Err(
                    ConfigError::new("gamma", format!("must be positive, got {gamma}")).into(),
                );
            }
            if !(width.is_finite() && *width > 0.0) {
                return Err(
                    ConfigError::new("width", format!("must be positive, got {width}")).into(),
                );
            }
            let tail_rate = mp.tail_decay_exponent();
            let m = Molecule::new(power_tail_molecule(&grid, *gamma, *width), mp)
                .map_err(field("p"))?;

            let rep = validate_molecule(&m, TOL_MOMENTS);
            out.put("molecule", &rep);
            out.check("molecule_valid", rep.pass);
            let md = molecule_to_atoms(&m, *q)?;
            out.artifacts.push((
                "molecule_decomposition.json".into(),
                md.decomposition.to_json()?,
            ));
            let invalid = md
                .decomposition
                .entries
                .iter()
                .filter(|e| !validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass)
                .count();
            out.put("entries", md.decomposition.len());
            out.put("ell_q", md.decomposition.diagnostics.ell_q);
            out.put("r_scale", md.r_scale);
            out.put("sigma", md.sigma);
            out.put("sigma_consistency", md.sigma_consistency);
            out.put("n0_max", md.n0_max);
            out.put("invalid_atoms", invalid);
            out.put("first_shell", md.first_shell);
            out.put("fitted_decay", md.fitted_decay_exponent(grid.extent()));
            out.put("tail_decay_exponent", tail_rate);
            out.check("atoms_valid", invalid == 0);
            out.check("moments", md.n0_max <= TOL_MOMENTS);
            out.lines.push(format!(
                "{} atoms, ell_q {:.6e}, fitted tail decay {:?} (parameter exponent {tail_rate:.4})",
                md.decomposition.len(),
                md.decomposition.diagnostics.ell_q,
                md.fitted_decay_exponent(grid.extent())
            ));
            out.figures.push(
                Figure::new(
                    "tail_decay",
                    "tail coefficient decay",
                    "2^k sigma",
                    "|N^k| max|psi^k| / |E_k|",
                    true,
                )
                .with(
                    "measured",
                    md.tail_decay
                        .iter()
                        .map(|&(k, v)| (pow2(k) * md.sigma, v))
                        .collect(),
                ),
            );
        }

        Pipeline::Operator {
            kernel,
            alpha,
            q,
            p,
            s,
            delta,
            scales,
            factor,
        } => {
            let k = KernelSpec::parse(kernel).map_err(field("kernel"))?;
            if k.dim() != grid.dim() {
                return Err(ConfigError::new(
                    "kernel",
                    format!(
                        "kernel `{kernel}` acts in dimension {}, the grid has {}",
                        k.dim(),
                        grid.dim()
                    ),
                )
                .into());
            }
            let p = exponents(p, &grid)?;
            let s = s.unwrap_or_else(|| minimal_degree(*alpha, &p));
            let delta = delta.unwrap_or_else(|| k.delta());
            let (lo, hi) = harness_window(&p, s, delta);
            if !(*alpha >= lo - 1e-12 && *alpha < hi) {
                return Err(ConfigError::new(
                    "alpha",
                    format!("must lie in [{lo}, {hi}), got {alpha}"),
                )
                .into());
            }
            let params = AtomParams::new(*alpha, p.clone(), s, false).map_err(field("s"))?;
            if scales.is_empty() {
                return Err(ConfigError::new("scales", "need at least one scale").into());
            }
            let atoms: Vec<Atom> = scales
                .iter()
                .map(|&j| probe_atom(&grid, pow2(j), &params))
                .collect::<Result<_, _>>()
                .map_err(field("scales"))?;
            let herz =
                HerzParams::homogeneous_for(&grid, *alpha, *q, p.clone()).map_err(field("q"))?;

            let op = Operator::Cz(k);
            let harness = operator_atom_harness(&op, &atoms, &herz, delta, *factor)?;
            out.put("harness", &harness);
            out.check("harness", harness.pass);
            out.figures.push(
                Figure::new(
                    "atom_norms",
                    "Herz norm of T a against atom radius",
                    "radius",
                    "||T a||",
                    true,
                )
                .with(
                    &harness.operator,
                    harness
                        .norms
                        .iter()
                        .map(|n| (n.radius, n.herz_norm))
                        .collect(),
                ),
            );

            let samples = if grid.dim() == 1 {
                SampleSpec {
                    extent: 4.0,
                    spacing: 1.0 / 16.0,
                }
            } else {
                SampleSpec {
                    extent: 2.0,
                    spacing: 0.25,
                }
            };
            let reg = check_kernel_regularity(&k, &samples)?;
            out.put("regularity", &reg);
            out.check("regularity", reg.pass);

            let ratio =
                lp_operator_ratio(&op, &testfns::gaussian(&grid, [0.0, 0.0], 1.0, 1.0), &p)?;
            out.put("lp_ratio_gaussian", ratio);

            if s == 0 {
                let mol_eps = eps_floor(*alpha, &p, 0) + 0.1;
                let tf = MoleculeParams::new(*alpha, p.clone(), 0, mol_eps, false)
                    .and_then(|mp| tf_molecule_check(&k, &atoms[atoms.len() / 2], &mp));
                match tf {
                    Ok(rep) => {
                        out.check("tf_molecule", rep.pass);
                        out.put("tf_molecule", rep);
                    }
                    Err(e) => {
                        out.check("tf_molecule", false);
                        out.put("tf_molecule", json!({ "error": e.to_string() }));
                    }
                }
            }
            out.lines.push(format!(
                "{}: spread {:.4} (limit {factor}), C' {:.5}, growth {:.4}",
                harness.operator, harness.spread, reg.fitted, reg.growth
            ));
        }

        Pipeline::Duality {
            function,
            alpha,
            p,
            s,
            radii,
            tol,
        } => {
            let g = test_function(function, &grid, cfg.seed)?;
            let p = exponents(p, &grid)?;
            let s = s.unwrap_or_else(|| minimal_degree(*alpha, &p));
            let radii = if radii.is_empty() {
                (-6..=4).map(pow2).filter(|&r| r <= grid.extent()).collect()
            } else {
                radii.clone()
            };
            let camp = CampanatoConfig::new(*alpha, p.clone(), s, radii.clone())
                .map_err(field("radii"))?;
            let params = AtomParams::new(*alpha, p.clone(), s, false).map_err(field("s"))?;
            if !(tol.is_finite() && *tol >= 0.0) {
                return Err(ConfigError::new(
                    "tol",
                    format!("must be finite and nonnegative, got {tol}"),
                )
                .into());
            }

            let rep = campanato_report(&g, &camp)?;
            out.put("campanato", &rep);
            out.figures.push(
                Figure::new(
                    "campanato_per_radius",
                    "normalized oscillation per radius",
                    "r",
                    "|B|^{-alpha/n} ||g - P g||",
                    true,
                )
                .with("oscillation", rep.per_radius.clone()),
            );
            let mut pairings = Vec::new();
            let mut skipped = Vec::new();
            for &r in &radii {
                match probe_atom(&grid, r, &params) {
                    Ok(a) => pairings.push(dual_pairing_check(&g, &a, &camp, *tol)?),
                    Err(_) => skipped.push(r),
                }
            }
            let violations = pairings.iter().filter(|r| !r.pass).count();
            out.put("pairings", &pairings);
            out.put("skipped_radii", &skipped);
            out.check("pairing", violations == 0);
            out.lines.push(format!(
                "Campanato norm {:.6e} (argmax r = {}), {} pairings, {violations} violations",
                rep.norm,
                rep.argmax,
                pairings.len()
            ));
        }

        Pipeline::Suite { refine, criteria } => {
            type Criterion = fn(&SuiteConfig) -> herzlab::Result<CriterionResult>;
            let all: [Criterion; 9] = [
                suite::criterion_mixed_norms,
                suite::criterion_norm_identity,
                suite::criterion_domination,
                suite::criterion_maximal_equivalence,
                suite::criterion_decomposition,
                suite::criterion_uniform_atom_bound,
                suite::criterion_molecules,
                suite::criterion_operators,
                suite::criterion_duality,
            ];
            if let Some(bad) = criteria.iter().find(|&&c| c == 0 || c as usize > all.len()) {
                return Err(ConfigError::new(
                    "criteria",
                    format!("criterion ids run from 1 to 9, got {bad}"),
                )
                .into());
            }
            let scfg = SuiteConfig {
                seed: cfg.seed,
                refine: *refine,
            };
            let mut done = Vec::new();
            for (i, run) in all.iter().enumerate() {
                let id = i as u32 + 1;
                if !criteria.is_empty() && !criteria.contains(&id) {
                    continue;
                }
                let c = match run(&scfg) {
                    Ok(c) => c,
                    Err(e) => {
                        out.put("criteria", &done);
                        return Err(e.into());
                    }
                };
                out.lines.push(c.line());
                out.check(&format!("criterion_{id}"), c.pass);
                for (name, pts) in &c.series {
                    let log_log = pts.iter().all(|&(x, y)| x > 0.0 && y > 0.0);
                    out.figures.push(
                        Figure::new(
                            &format!("criterion{id}_{name}"),
                            &format!("{} / {name}", c.name),
                            "x",
                            "y",
                            log_log,
                        )
                        .with(name, pts.clone()),
                    );
                }
                done.push(c);
                out.put("criteria", &done);
            }
        }
    }
    Ok(())
}

/// Writes `report.json`, the figures and any artifacts into `dir`.
pub fn write_report(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &Outcome,
    error: Option<&HerzError>,
) -> std::io::Result<serde_json::Value> {
    fs::create_dir_all(dir)?;
    for f in &out.figures {
        f.write(dir)?;
    }
    for (name, body) in &out.artifacts {
        fs::write(dir.join(name), body)?;
    }
    let report = json!({
        "command": cfg.pipeline.command(),
        "config": cfg,
        "config_hash": cfg.content_hash(),
        "status": if error.is_some() { "numerical_failure" } else { "complete" },
        "error": error.map(|e| e.to_string()),
        "checks": out.checks,
        "pass": error.is_none() && out.pass(),
        "results": out.results,
        "figures": out.figures.iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
        "artifacts": out.artifacts.iter().map(|a| a.0.clone()).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    Ok(report)
}
