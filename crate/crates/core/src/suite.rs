//! The acceptance suite: nine criteria evaluated on the built-in test family at desk scale.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{
    atomic_decompose, build_partition, haar_atom, reconstruction_residual, validate_atom, Atom,
    AtomParams, Decomposition, TOL_MOMENTS, TOL_RECON, TOL_SIZE,
};
use crate::duality::{campanato_norm, dual_pairing_check, CampanatoConfig, PAIRING_TOL};
use crate::dyadic::pow2;
use crate::error::Result;
use crate::fit::dyadic_decay_exponent;
use crate::grid::{quadrature_integrate, Grid, GridFunction, Mask};
use crate::maximal::{
    auxiliary_maximal, grand_maximal, interior_mask, maximal_equivalence_report,
    nontangential_maximal, smooth_maximal, MaximalConfig, SmoothingKernel,
};
use crate::molecules::{
    molecule_r, molecule_to_atoms, power_tail_molecule, validate_molecule, Molecule, MoleculeParams,
};
use crate::norms::{
    herz_norm, mixed_lebesgue_norm, norm_identity_check, ExponentVector, HerzParams,
};
use crate::operators::{
    check_kernel_regularity, check_size_condition, cz_apply, hilbert_of_unit_indicator,
    operator_atom_harness, refinement_stable, tf_molecule_check, KernelSpec, Operator, SampleSpec,
};
use crate::testfns;

/// Suite-wide settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Seed for the randomized members of the test family.
    pub seed: u64,
    /// Run the grid-refinement stability checks.
    pub refine: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 20240611,
            refine: true,
        }
    }
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    /// Human-readable descriptions of each failed check.
    pub failures: Vec<String>,
    /// Raw data series for figures, keyed by name; each point is `(x, y)`.
    pub series: BTreeMap<String, Vec<(f64, f64)>>,
}

impl CriterionResult {
    fn new(id: u32, name: &str) -> Self {
        Self {
            id,
            name: name.into(),
            pass: true,
            metrics: BTreeMap::new(),
            failures: Vec::new(),
            series: BTreeMap::new(),
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            self.failures.push(what());
        }
    }

    /// One-line summary: `criterion <id> <name>: PASS|FAIL (<metrics>)`.
    pub fn line(&self) -> String {
        let metrics: Vec<String> = self
            .metrics
            .iter()
            .map(|(k, v)| format!("{k}={v:.6e}"))
            .collect();
        let mut s = format!(
            "criterion {} {}: {} ({})",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            metrics.join(", ")
        );
        if !self.failures.is_empty() {
            s.push_str(" failures: ");
            s.push_str(&self.failures.join("; "));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
}

fn p2() -> ExponentVector {
    ExponentVector::uniform(1, 2.0).expect("2 is a valid exponent")
}

/// Twenty functions on a 1-D grid: Gaussians, indicators, Haar functions, bumps and
/// seeded random smooth functions.
pub fn test_family(grid: &Grid, seed: u64) -> Vec<(String, GridFunction)> {
    let mut out: Vec<(String, GridFunction)> = Vec::with_capacity(20);
    for w in [0.25, 0.5, 1.0, 2.0] {
        out.push((
            format!("gaussian_w{w}"),
            testfns::gaussian(grid, [0.0, 0.0], w, 1.0),
        ));
    }
    out.push((
        "gaussian_shift1.5".into(),
        testfns::gaussian(grid, [1.5, 0.0], 0.5, 1.0),
    ));
    out.push((
        "gaussian_shift-3".into(),
        testfns::gaussian(grid, [-3.0, 0.0], 1.0, 2.0),
    ));
    out.push((
        "indicator_closed_unit".into(),
        testfns::closed_box_indicator(grid, [-1.0, 0.0], [1.0, 0.0]),
    ));
    out.push((
        "indicator_half_open_01".into(),
        testfns::box_indicator(grid, [0.0, 0.0], [1.0, 0.0]),
    ));
    out.push(("ball_r2".into(), testfns::ball_indicator(grid, 2.0)));
    out.push(("shell_1_2".into(), testfns::shell_indicator(grid, 1.0, 2.0)));
    out.push(("haar_r1".into(), testfns::haar(grid, 1.0)));
    out.push(("haar_r4".into(), testfns::haar(grid, 4.0)));
    out.push(("bump_r1".into(), testfns::bump(grid, [0.0, 0.0], 1.0)));
    out.push(("bump_c2_r1.5".into(), testfns::bump(grid, [2.0, 0.0], 1.5)));
    out.push(("odd_gaussian".into(), testfns::odd_gaussian(grid, 1.0)));
    out.push(("ring_gaussian".into(), testfns::ring_gaussian(grid, 1.0)));
    for i in 0..4 {
        out.push((
            format!("random_smooth_{i}"),
            testfns::random_smooth(grid, seed + i, 6, 4.0, 4.0),
        ));
    }
    out
}

/// Ten functions with zero mean and zero value at the origin.
pub fn mean_zero_family(grid: &Grid, seed: u64) -> Vec<(String, GridFunction)> {
    let w = testfns::ring_gaussian(grid, 1.0);
    let bases: Vec<(String, GridFunction)> = vec![
        (
            "gaussian_w0.5".into(),
            testfns::gaussian(grid, [0.0, 0.0], 0.5, 1.0),
        ),
        (
            "gaussian_w2".into(),
            testfns::gaussian(grid, [0.0, 0.0], 2.0, 1.0),
        ),
        (
            "gaussian_shift1".into(),
            testfns::gaussian(grid, [1.0, 0.0], 0.7, 1.0),
        ),
        (
            "gaussian_shift-2".into(),
            testfns::gaussian(grid, [-2.0, 0.0], 1.0, 1.0),
        ),
        ("bump_c1_r1".into(), testfns::bump(grid, [1.0, 0.0], 1.0)),
        ("bump_c-3_r2".into(), testfns::bump(grid, [-3.0, 0.0], 2.0)),
        ("odd_gaussian".into(), testfns::odd_gaussian(grid, 1.5)),
        (
            "random_smooth_0".into(),
            testfns::random_smooth(grid, seed, 6, 3.0, 3.0),
        ),
        (
            "random_smooth_1".into(),
            testfns::random_smooth(grid, seed + 1, 6, 3.0, 3.0),
        ),
        (
            "random_smooth_2".into(),
            testfns::random_smooth(grid, seed + 2, 6, 3.0, 5.0),
        ),
    ];
    bases
        .into_iter()
        .map(|(name, f)| {
            (
                name,
                testfns::remove_mean(&testfns::vanish_at_origin(&f), &w),
            )
        })
        .collect()
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Criterion 1: closed-form mixed norms and the mixed Hölder inequality.
pub fn criterion_mixed_norms(cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(1, "mixed-norm correctness");
    let g2 = Grid::new(2, 4.0, 257)?;
    let unit = testfns::box_indicator(&g2, [0.0, 0.0], [1.0, 1.0]);
    let e1 = rel_err(
        mixed_lebesgue_norm(&unit, &ExponentVector::new(vec![2.0, 3.0])?, None)?,
        1.0,
    );
    let tall = testfns::box_indicator(&g2, [0.0, 0.0], [1.0, 4.0]).scaled(2.0);
    let e2 = rel_err(
        mixed_lebesgue_norm(&tall, &ExponentVector::new(vec![2.0, 2.0])?, None)?,
        4.0,
    );
    let g1 = Grid::desk(1)?;
    let gauss = testfns::gaussian(&g1, [0.0, 0.0], 1.0, 1.0);
    let e3 = rel_err(
        mixed_lebesgue_norm(&gauss, &p2(), None)?,
        (PI / 2.0).powf(0.25),
    );
    for (name, e) in [
        ("unit_box_rel_err", e1),
        ("scaled_box_rel_err", e2),
        ("gaussian_rel_err", e3),
    ] {
        c.metric(name, e);
        c.check(e <= 1e-4, || format!("{name} = {e:.3e} > 1e-4"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grids = [Grid::new(1, 4.0, 257)?, Grid::new(2, 4.0, 65)?];
    let pairs: Vec<(usize, Vec<f64>, u64)> = (0..100u64)
        .map(|i| {
            let dim = 1 + (i % 2) as usize;
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(1.1..6.0)).collect();
            (dim, p, cfg.seed.wrapping_add(1000 + 2 * i))
        })
        .collect();
    let outcomes: Vec<(f64, bool)> = pairs
        .par_iter()
        .map(|(dim, p, s)| {
            let g = &grids[dim - 1];
            let p = ExponentVector::new(p.clone())?;
            let f = testfns::random_smooth(g, *s, 5, 3.0, 3.5);
            let h = testfns::random_smooth(g, s + 1, 5, 3.0, 3.5);
            let lhs = quadrature_integrate(&f.mul(&h)?.abs(), None)?;
            let rhs =
                mixed_lebesgue_norm(&f, &p, None)? * mixed_lebesgue_norm(&h, &p.conjugate(), None)?;
            Ok((lhs / rhs, lhs <= rhs * (1.0 + 1e-12)))
        })
        .collect::<Result<_>>()?;
    let violations = outcomes.iter().filter(|o| !o.1).count();
    c.metric("holder_pairs", outcomes.len() as f64);
    c.metric("holder_violations", violations as f64);
    c.metric(
        "holder_max_ratio",
        outcomes.iter().map(|o| o.0).fold(0.0, f64::max),
    );
    c.check(violations == 0, || {
        format!("{violations} Hölder violations")
    });
    Ok(c)
}

fn identity_factor(grid: &Grid, seed: u64) -> Result<f64> {
    let params = HerzParams::homogeneous_for(grid, 0.5, 1.0, p2())?;
    let factors: Vec<f64> = test_family(grid, seed)
        .par_iter()
        .map(|(_, f)| Ok(norm_identity_check(f, &params)?.two_sided_factor()))
        .collect::<Result<_>>()?;
    Ok(factors.into_iter().fold(1.0, f64::max))
}

/// Criterion 2: `||f||_K` against `||f||_Kdot + ||f||_Lp`.
pub fn criterion_norm_identity(cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(2, "herz-norm identity");
    let grid = Grid::desk(1)?;
    let c3 = identity_factor(&grid, cfg.seed)?;
    c.metric("c3", c3);
    c.check(c3 <= 4.0, || format!("C3 = {c3:.4} > 4"));
    if cfg.refine {
        let fine = identity_factor(&grid.refined(), cfg.seed)?;
        c.metric("c3_refined", fine);
        c.check(fine <= 1.1 * c3, || {
            format!("C3 grows from {c3:.4} to {fine:.4} under refinement")
        });
    }
    Ok(c)
}

/// Criterion 3: `M <= M_a^* <= (1+a)^b M_b^{**}` at interior nodes.
pub fn criterion_domination(cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(3, "maximal domination chain");
    let grid = Grid::desk(1)?;
    let mcfg = MaximalConfig::for_grid(&grid)?;
    let interior = interior_mask(&grid, mcfg.boundary_margin);
    let phi = SmoothingKernel::gaussian(1.0);
    let factor = (1.0 + mcfg.aperture).powf(mcfg.decay);
    let counts: Vec<(usize, usize)> = test_family(&grid, cfg.seed)
        .par_iter()
        .map(|(_, f)| {
            let sm = smooth_maximal(f, &phi, &mcfg)?;
            let nt = nontangential_maximal(f, &phi, mcfg.aperture, &mcfg)?;
            let aux = auxiliary_maximal(f, &phi, mcfg.decay, &mcfg)?;
            let mut bad = 0;
            let mut checked = 0;
            for i in interior.indices() {
                checked += 1;
                let (m, a, b) = (sm.values()[i], nt.values()[i], aux.values()[i]);
                let slack = 1e-12 * a.abs().max(m.abs());
                if m > a + slack || a > factor * b + slack {
                    bad += 1;
                }
            }
            Ok((checked, bad))
        })
        .collect::<Result<_>>()?;
    let checked: usize = counts.iter().map(|c| c.0).sum();
    let bad: usize = counts.iter().map(|c| c.1).sum();
    c.metric("nodes_checked", checked as f64);
    c.metric("violations", bad as f64);
    c.check(bad == 0, || format!("{bad} pointwise violations"));
    Ok(c)
}

fn equivalence_constant(grid: &Grid, seed: u64) -> Result<f64> {
    let mcfg = MaximalConfig::for_grid(grid)?;
    let phi = SmoothingKernel::gaussian(1.0);
    let factors: Vec<f64> = test_family(grid, seed)
        .par_iter()
        .map(|(_, f)| Ok(maximal_equivalence_report(f, &phi, &p2(), &mcfg)?.max_pair_factor))
        .collect::<Result<_>>()?;
    Ok(factors.into_iter().fold(1.0, f64::max))
}

/// Criterion 4: pairwise mixed-norm ratios among the four maximal images.
pub fn criterion_maximal_equivalence(cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(4, "maximal equivalence");
    let grid = Grid::desk(1)?;
    let c2 = equivalence_constant(&grid, cfg.seed)?;
    c.metric("c2", c2);
    c.check(c2 <= 20.0, || format!("C2 = {c2:.4} > 20"));
    if cfg.refine {
        let fine = equivalence_constant(&grid.refined(), cfg.seed)?;
        c.metric("c2_refined", fine);
        let (change, ok) = refinement_stable(c2, fine, 0.2);
        c.metric("c2_refinement_change", change);
        c.check(ok, || {
            format!("C2 changes by {:.1}% under refinement", 100.0 * change)
        });
    }
    Ok(c)
}

struct DecompositionStats {
    invalid_atoms: usize,
    atoms: usize,
    max_residual: f64,
    /// `max(r, 1/r)` over the family for `r = ||M_N f||_Kdot / ell_q`.
    c_t: f64,
    min_ratio: f64,
    max_ratio: f64,
}

fn decomposition_stats(grid: &Grid, seed: u64) -> Result<DecompositionStats> {
    let params = AtomParams::minimal(0.5, p2())?;
    let herz = HerzParams::homogeneous_for(grid, 0.5, 1.0, p2())?;
    let mcfg = MaximalConfig::for_grid(grid)?;
    let k_min = -((1.0 / grid.spacing()).log2().round() as i32) - 1;
    let pou = build_partition(grid, k_min, crate::dyadic::default_k_max(grid), 0.2)?;
    let results: Vec<(usize, usize, f64, f64)> = mean_zero_family(grid, seed)
        .iter()
        .map(|(_, f)| {
            let d = atomic_decompose(f, &params, 1.0, &pou, &mcfg)?;
            let invalid = d
                .entries
                .iter()
                .filter(|e| !validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass)
                .count();
            let residual = reconstruction_residual(f, &d, &p2())?;
            let mn = herz_norm(&grand_maximal(f, &mcfg)?, &herz)?;
            Ok((invalid, d.len(), residual, mn / d.diagnostics.ell_q))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = results.iter().map(|r| r.3).collect();
    Ok(DecompositionStats {
        invalid_atoms: results.iter().map(|r| r.0).sum(),
        atoms: results.iter().map(|r| r.1).sum(),
        max_residual: results.iter().map(|r| r.2).fold(0.0, f64::max),
        c_t: ratios.iter().map(|r| r.max(1.0 / r)).fold(1.0, f64::max),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
    })
}

/// Criterion 5: the constructive decomposition of ten mean-zero functions.
pub fn criterion_decomposition(cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(5, "atom validity and decomposition");
    let grid = Grid::desk(1)?;
    let s = decomposition_stats(&grid, cfg.seed)?;
    c.metric("atoms", s.atoms as f64);
    c.metric("invalid_atoms", s.invalid_atoms as f64);
    c.metric("max_reconstruction_residual", s.max_residual);
    c.metric("c_t", s.c_t);
    c.metric("min_ratio", s.min_ratio);
    c.metric("max_ratio", s.max_ratio);
    c.check(s.invalid_atoms == 0, || {
        format!("{} invalid atoms", s.invalid_atoms)
    });
    c.check(s.max_residual <= TOL_RECON, || {
        format!("residual {:.3e} > {TOL_RECON:e}", s.max_residual)
    });
    c.check(s.c_t <= 50.0, || format!("C_T = {:.3} > 50", s.c_t));
    if cfg.refine {
        let fine = decomposition_stats(&grid.refined(), cfg.seed)?;
        c.metric("c_t_refined", fine.c_t);
        let (change, ok) = refinement_stable(s.c_t, fine.c_t, 0.2);
        c.metric("c_t_refinement_change", change);
        c.check(ok, || {
            format!("C_T changes by {:.1}% under refinement", 100.0 * change)
        });
        c.check(
            fine.invalid_atoms == 0 && fine.max_residual <= TOL_RECON,
            || {
                format!(
                    "refined grid: {} invalid atoms, residual {:.3e}",
                    fine.invalid_atoms, fine.max_residual
                )
            },
        );
    }
    Ok(c)
}

/// Criterion 6: uniform bound on `||M_N a||_Kdot` over Haar atoms and far-field decay.
pub fn criterion_uniform_atom_bound(_cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(6, "uniform atom bound");
    let grid = Grid::desk(1)?;
    let alpha = 0.5;
    let params = AtomParams::minimal(alpha, p2())?;
    let herz = HerzParams::homogeneous_for(&grid, alpha, 1.0, p2())?;
    let mcfg = MaximalConfig::for_grid(&grid)?;
    let norms: Vec<(i32, f64)> = (-4..=4)
        .collect::<Vec<i32>>()
        .par_iter()
        .map(|&k| {
            let a = haar_atom(&grid, pow2(k), &params)?;
            Ok((k, herz_norm(&grand_maximal(&a.values, &mcfg)?, &herz)?))
        })
        .collect::<Result<_>>()?;
    let max = norms.iter().map(|n| n.1).fold(0.0, f64::max);
    let min = norms.iter().map(|n| n.1).fold(f64::INFINITY, f64::min);
    c.metric("max_over_min", max / min);
    c.check(max / min <= 4.0, || {
        format!("max/min = {:.3} > 4", max / min)
    });
    c.series.insert(
        "grand_maximal_norm_by_scale".into(),
        norms.iter().map(|&(k, v)| (k as f64, v)).collect(),
    );

    let k0 = -4;
    let a = haar_atom(&grid, pow2(k0), &params)?;
    let mn = grand_maximal(&a.values, &mcfg)?;
    let k_max = crate::dyadic::default_k_max(&grid);
    let points: Vec<(i32, f64)> = (k0 + 4..=k_max)
        .map(|k| {
            let shell = Mask::annulus(&grid, pow2(k - 1), pow2(k));
            let peak = shell.indices().map(|i| mn.values()[i]).fold(0.0, f64::max);
            (k, pow2(k).powf(alpha) * peak)
        })
        .collect();
    let predicted = (grid.dim() + params.s + 1) as f64 - alpha;
    let fitted = dyadic_decay_exponent(&points).unwrap_or(f64::NAN);
    c.metric("decay_exponent", fitted);
    c.metric("decay_predicted", predicted);
    c.check((fitted - predicted).abs() <= 0.3, || {
        format!("decay exponent {fitted:.3} vs predicted {predicted:.3}")
    });
    c.series.insert(
        "far_field_decay".into(),
        points.iter().map(|&(k, v)| (pow2(k), v)).collect(),
    );
    Ok(c)
}

/// Criterion 7: molecules from atoms, molecule decompositions and the tail decay rate.
pub fn criterion_molecules(_cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(7, "molecule machinery");
    let grid = Grid::desk(1)?;
    let params = AtomParams::minimal(0.5, p2())?;
    let mp = MoleculeParams::with_default_eps(0.5, p2())?;
    let mut r_max = 0.0f64;
    for k in -4..=4 {
        let a = haar_atom(&grid, pow2(k), &params)?;
        r_max = r_max.max(molecule_r(&a.values, &mp)?);
    }
    c.metric("c_l", r_max);
    c.check(r_max <= 10.0, || {
        format!("atom R-functional {r_max:.3} > 10")
    });

    let decay_params = MoleculeParams::new(0.5, p2(), 0, 1.0, false)?;
    let molecules = vec![
        (
            "haar_r1",
            Molecule::from_atom(&haar_atom(&grid, 1.0, &params)?, mp.eps)?,
        ),
        (
            "haar_r4",
            Molecule::from_atom(&haar_atom(&grid, 4.0, &params)?, mp.eps)?,
        ),
        (
            "power_tail_g2",
            Molecule::new(
                power_tail_molecule(&grid, 2.0, 1.0 / 16.0),
                decay_params.clone(),
            )?,
        ),
        (
            "power_tail_g3",
            Molecule::new(power_tail_molecule(&grid, 3.0, 0.25), mp.clone())?,
        ),
    ];
    let mut worst_residual = 0.0f64;
    let mut invalid = 0usize;
    for (name, m) in &molecules {
        let rep = validate_molecule(m, TOL_MOMENTS);
        c.check(rep.pass, || format!("{name} is not a valid molecule"));
        let md = molecule_to_atoms(m, 1.0)?;
        worst_residual = worst_residual.max(reconstruction_residual(
            &m.values,
            &md.decomposition,
            &m.params.p,
        )?);
        invalid += md
            .decomposition
            .entries
            .iter()
            .filter(|e| !validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass)
            .count();
        if *name == "power_tail_g2" {
            let predicted = m.params.tail_decay_exponent();
            let fitted = md
                .fitted_decay_exponent(grid.extent() / 4.0)
                .unwrap_or(f64::NAN);
            c.metric("tail_decay_exponent", fitted);
            c.metric("tail_decay_predicted", predicted);
            c.check((fitted - predicted).abs() <= 0.3, || {
                format!("tail decay {fitted:.3} vs predicted {predicted:.3}")
            });
            c.series.insert(
                "tail_decay".into(),
                md.tail_decay
                    .iter()
                    .map(|&(k, v)| (pow2(k) * md.sigma, v))
                    .collect(),
            );
        }
    }
    c.metric("max_reconstruction_residual", worst_residual);
    c.metric("invalid_atoms", invalid as f64);
    c.check(worst_residual <= TOL_RECON, || {
        format!("residual {worst_residual:.3e} > {TOL_RECON:e}")
    });
    c.check(invalid == 0, || format!("{invalid} invalid atoms"));
    Ok(c)
}

fn haar_size_constant(grid: &Grid) -> Result<f64> {
    let params = AtomParams::minimal(0.5, p2())?;
    let a = haar_atom(grid, 1.0, &params)?;
    let ta = cz_apply(&KernelSpec::Hilbert, &a.values)?;
    Ok(check_size_condition(&ta, &a.values, 0, 1.0)?.fitted)
}

/// Criterion 8: the Calderón–Zygmund harness for the Hilbert transform.
pub fn criterion_operators(cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(8, "operator harness");
    let grid = Grid::desk(1)?;
    let h = grid.spacing();

    let chi = testfns::closed_box_indicator(&grid, [-1.0, 0.0], [1.0, 0.0]);
    let tchi = cz_apply(&KernelSpec::Hilbert, &chi)?;
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.point(i)[0];
        if (x.abs() - 1.0).abs() >= 5.0 * h {
            worst = worst.max((tchi.values()[i] - hilbert_of_unit_indicator(x)).abs());
        }
    }
    c.metric("hilbert_closed_form_err_over_h", worst / h);
    c.check(worst <= 5.0 * h, || {
        format!("closed-form error {worst:.3e} > 5h")
    });

    let reg = check_kernel_regularity(
        &KernelSpec::Hilbert,
        &SampleSpec {
            extent: 4.0,
            spacing: 1.0 / 16.0,
        },
    )?;
    c.metric("regularity_c_prime", reg.fitted);
    c.metric("regularity_growth", reg.growth);
    c.check(reg.fitted <= 2.0 / PI + 1e-3 && reg.pass, || {
        format!("C' = {:.5}, growth {:.3}", reg.fitted, reg.growth)
    });

    let size = haar_size_constant(&grid)?;
    c.metric("size_constant", size);
    if cfg.refine {
        let fine = haar_size_constant(&grid.refined())?;
        let (change, ok) = refinement_stable(size, fine, 0.1);
        c.metric("size_constant_refined", fine);
        c.metric("size_constant_change", change);
        c.check(ok, || {
            format!("size constant changes by {:.1}%", 100.0 * change)
        });
    }

    for alpha in [0.5, 1.0] {
        let params = AtomParams::minimal(alpha, p2())?;
        let atoms: Vec<Atom> = (-4..=4)
            .map(|k| haar_atom(&grid, pow2(k), &params))
            .collect::<Result<_>>()?;
        let herz = HerzParams::homogeneous_for(&grid, alpha, 1.0, p2())?;
        let rep =
            operator_atom_harness(&Operator::Cz(KernelSpec::Hilbert), &atoms, &herz, 1.0, 4.0)?;
        c.metric(&format!("harness_spread_alpha{alpha}"), rep.spread);
        c.check(rep.pass, || {
            format!("alpha = {alpha}: max/min = {:.3} > 4", rep.spread)
        });
        c.series.insert(
            format!("hilbert_atom_norm_alpha{alpha}"),
            rep.norms.iter().map(|n| (n.radius, n.herz_norm)).collect(),
        );
    }

    let params = AtomParams::minimal(0.5, p2())?;
    let a = haar_atom(&grid, 1.0, &params)?;
    let floor = crate::molecules::eps_floor(0.5, &p2(), 0);
    let mut r_worst = 0.0f64;
    for eps in [floor + 0.1, 0.5] {
        let mp = MoleculeParams::new(0.5, p2(), 0, eps, false)?;
        let rep = tf_molecule_check(&KernelSpec::Hilbert, &a, &mp)?;
        r_worst = r_worst.max(rep.r_value);
        c.check(rep.pass, || {
            format!(
                "eps = {eps}: R = {:.3}, outer growth {:.3}",
                rep.r_value, rep.outer_growth
            )
        });
    }
    c.metric("c_r", r_worst);
    Ok(c)
}

fn pairing_functions(grid: &Grid, seed: u64) -> Vec<(String, GridFunction)> {
    vec![
        (
            "square".into(),
            GridFunction::from_fn(grid, |x| x[0] * x[0]),
        ),
        (
            "linear_plus_square".into(),
            GridFunction::from_fn(grid, |x| x[0] + x[0] * x[0]),
        ),
        (
            "sqrt_abs".into(),
            GridFunction::from_fn(grid, |x| x[0].abs().sqrt()),
        ),
        (
            "gaussian_w2".into(),
            testfns::gaussian(grid, [0.5, 0.0], 2.0, 1.0),
        ),
        (
            "random_smooth".into(),
            testfns::random_smooth(grid, seed, 6, 3.0, 6.0),
        ),
    ]
}

/// Criterion 9: the Campanato pairing bound and polynomial absorption.
pub fn criterion_duality(cfg: &SuiteConfig) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(9, "duality pairing");
    let grid = Grid::desk(1)?;
    let alpha = 0.5;
    let params = AtomParams::minimal(alpha, p2())?;
    let camp = CampanatoConfig::dyadic(alpha, p2(), 0, -6, 4)?;

    let mut atoms: Vec<Atom> = (-4..=4)
        .map(|k| haar_atom(&grid, pow2(k), &params))
        .collect::<Result<_>>()?;
    let f = &mean_zero_family(&grid, cfg.seed)[0].1;
    let k_min = -((1.0 / grid.spacing()).log2().round() as i32) - 1;
    let pou = build_partition(&grid, k_min, crate::dyadic::default_k_max(&grid), 0.2)?;
    let d: Decomposition =
        atomic_decompose(f, &params, 1.0, &pou, &MaximalConfig::for_grid(&grid)?)?;
    atoms.extend(
        d.entries
            .into_iter()
            .map(|e| e.atom)
            .filter(|a| a.radius <= grid.max_radius()),
    );

    let gs = pairing_functions(&grid, cfg.seed);
    let results: Vec<(f64, bool)> = gs
        .par_iter()
        .flat_map(|(_, g)| atoms.par_iter().map(move |a| (g, a)))
        .map(|(g, a)| {
            let rep = dual_pairing_check(g, a, &camp, PAIRING_TOL)?;
            Ok((rep.ratio, rep.pass))
        })
        .collect::<Result<_>>()?;
    let violations = results.iter().filter(|r| !r.1).count();
    c.metric("pairs", results.len() as f64);
    c.metric("violations", violations as f64);
    c.metric("max_ratio", results.iter().map(|r| r.0).fold(0.0, f64::max));
    c.check(violations == 0, || {
        format!("{violations} pairing violations")
    });

    let camp1 = CampanatoConfig::dyadic(alpha, p2(), 1, -6, 4)?;
    let mut worst = 0.0f64;
    for (_, g) in &gs {
        for (cc, poly) in [
            (&camp, GridFunction::constant(&grid, 3.7)),
            (&camp1, GridFunction::from_fn(&grid, |x| 3.7 - 1.3 * x[0])),
        ] {
            let base = campanato_norm(g, cc)?;
            let shifted = campanato_norm(&g.add(&poly)?, cc)?;
            worst = worst.max((shifted - base).abs() / base.max(f64::MIN_POSITIVE));
        }
    }
    c.metric("absorption_rel_err", worst);
    c.check(worst <= 1e-8, || {
        format!("absorption error {worst:.3e} > 1e-8")
    });
    Ok(c)
}

/// Runs all nine criteria in order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    type Criterion = fn(&SuiteConfig) -> Result<CriterionResult>;
    let all: [Criterion; 9] = [
        criterion_mixed_norms,
        criterion_norm_identity,
        criterion_domination,
        criterion_maximal_equivalence,
        criterion_decomposition,
        criterion_uniform_atom_bound,
        criterion_molecules,
        criterion_operators,
        criterion_duality,
    ];
    let criteria = all.iter().map(|f| f(cfg)).collect::<Result<Vec<_>>>()?;
    let pass = criteria.iter().all(|c| c.pass);
    Ok(SuiteReport {
        config: cfg.clone(),
        criteria,
        pass,
    })
}
