//! Central molecules, the R-functional, and the molecule to atom decomposition.

use serde::{Deserialize, Serialize};

use crate::atoms::{
    minimal_degree, moment, project_and_telescope, Atom, AtomParams, Block, Decomposition,
    DecompositionDiagnostics, DecompositionEntry, PieceKind,
};
use crate::error::{HerzError, Result};
use crate::fit::dyadic_decay_exponent;
use crate::grid::{ball_volume, Grid, GridFunction, Mask};
use crate::norms::{mixed_lebesgue_norm, ExponentVector};
use crate::poly::{multi_indices, total_degree, PolyBasis};

/// Parameters of central `(alpha, p; s, eps)`-molecules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeParams {
    pub alpha: f64,
    pub p: ExponentVector,
    pub s: usize,
    pub eps: f64,
    /// Restricted type: `||M|| <= 1`.
    pub restricted: bool,
    a: f64,
    b: f64,
}

/// `max{s/n, alpha/n + (1/n) sum 1/p_i - 1}`.
pub fn eps_floor(alpha: f64, p: &ExponentVector, s: usize) -> f64 {
    let n = p.dim() as f64;
    (s as f64 / n).max(alpha / n + p.sum_inv() / n - 1.0)
}

impl MoleculeParams {
    pub fn new(
        alpha: f64,
        p: ExponentVector,
        s: usize,
        eps: f64,
        restricted: bool,
    ) -> Result<Self> {
        let n = p.dim() as f64;
        let floor = p.sum_inv_conjugate();
        if !(alpha.is_finite() && alpha >= floor - 1e-12) {
            return Err(HerzError::param(
                "alpha",
                format!("must satisfy alpha >= sum 1/p'_i = {floor}, got {alpha}"),
            ));
        }
        let m = minimal_degree(alpha, &p);
        if s < m {
            return Err(HerzError::param(
                "s",
                format!("must be at least {m}, got {s}"),
            ));
        }
        let lo = eps_floor(alpha, &p, s);
        if !(eps.is_finite() && eps > lo) {
            return Err(HerzError::param(
                "eps",
                format!("must exceed {lo}, got {eps}"),
            ));
        }
        let a = p.sum_inv_conjugate() / n - alpha / n + eps;
        let b = p.sum_inv_conjugate() / n + eps;
        let out = Self {
            alpha,
            p,
            s,
            eps,
            restricted,
            a,
            b,
        };
        debug_assert!((out.b - out.a - alpha / n).abs() <= 1e-12 * (1.0 + out.b.abs()));
        Ok(out)
    }

    /// Smallest admissible moment degree and `eps = floor + 0.1`.
    pub fn with_default_eps(alpha: f64, p: ExponentVector) -> Result<Self> {
        let s = minimal_degree(alpha, &p);
        let eps = eps_floor(alpha, &p, s) + 0.1;
        Self::new(alpha, p, s, eps, false)
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn eps_floor(&self) -> f64 {
        eps_floor(self.alpha, &self.p, self.s)
    }

    /// Atom parameters sharing `alpha`, `p` and `s`.
    pub fn atom_params(&self) -> AtomParams {
        AtomParams {
            alpha: self.alpha,
            p: self.p.clone(),
            s: self.s,
            restricted: self.restricted,
        }
    }

    /// Decay exponent `n(b + 1) - sum 1/p'_i` of the tail blocks.
    pub fn tail_decay_exponent(&self) -> f64 {
        self.dim() as f64 * (self.b + 1.0) - self.p.sum_inv_conjugate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub values: GridFunction,
    pub params: MoleculeParams,
    /// Dyadic index `l` with the size bound `||M|| <= 2^{-l alpha}`.
    pub dyadic_index: Option<i32>,
}

impl Molecule {
    pub fn new(values: GridFunction, params: MoleculeParams) -> Result<Self> {
        params.p.check_grid(values.grid())?;
        Ok(Self {
            values,
            params,
            dyadic_index: None,
        })
    }

    pub fn dyadic(mut self, l: i32) -> Self {
        self.dyadic_index = Some(l);
        self
    }

    /// Wraps an atom with the same `alpha`, `p`, `s`.
    pub fn from_atom(a: &Atom, eps: f64) -> Result<Self> {
        let params = MoleculeParams::new(
            a.params.alpha,
            a.params.p.clone(),
            a.params.s,
            eps,
            a.params.restricted,
        )?;
        Self::new(a.values.clone(), params)
    }
}

/// `|| |x|^{nb} M ||` with the weight evaluated at the nodes.
pub fn weighted_norm(
    m: &GridFunction,
    p: &ExponentVector,
    nb: f64,
    mask: Option<&Mask>,
) -> Result<f64> {
    let g = m.grid();
    let w = GridFunction::new(
        *g,
        m.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v == 0.0 {
                    0.0
                } else {
                    v * g.norm(i).powf(nb)
                }
            })
            .collect(),
    )?;
    mixed_lebesgue_norm(&w, p, mask)
}

/// `R(M) = ||M||^{a/b} || |x|^{nb} M ||^{1 - a/b}`; zero for the zero function.
pub fn molecule_r(m: &GridFunction, params: &MoleculeParams) -> Result<f64> {
    params.p.check_grid(m.grid())?;
    let nm = mixed_lebesgue_norm(m, &params.p, None)?;
    if nm == 0.0 {
        return Ok(0.0);
    }
    let n = params.dim() as f64;
    let w = weighted_norm(m, &params.p, n * params.b, None)?;
    let t = params.a / params.b;
    Ok(nm.powf(t) * w.powf(1.0 - t))
}

/// Largest `|int M x^beta| / int |M| |x|^{|beta|}` over `|beta| <= s`.
pub fn scaled_moment_max(m: &GridFunction, s: usize) -> f64 {
    let g = m.grid();
    multi_indices(g.dim(), s)
        .iter()
        .map(|beta| {
            let d = total_degree(beta) as i32;
            let denom: f64 = m
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs() * g.norm(i).powi(d))
                .sum::<f64>()
                * g.cell_volume();
            if denom == 0.0 {
                0.0
            } else {
                moment(m, beta).abs() / denom
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeReport {
    pub moment_max: f64,
    pub moments_ok: bool,
    pub r_value: f64,
    pub r_finite: bool,
    pub norm: f64,
    pub dyadic_size_ok: bool,
    pub restricted_ok: bool,
    pub pass: bool,
}

/// Checks vanishing moments (scaled by `int |M| |x|^{|beta|}`), finiteness of `R`,
/// the dyadic size bound when an index is set, and `||M|| <= 1` for restricted type.
pub fn validate_molecule(m: &Molecule, tol_moments: f64) -> MoleculeReport {
    let moment_max = scaled_moment_max(&m.values, m.params.s);
    let r_value = molecule_r(&m.values, &m.params).unwrap_or(f64::INFINITY);
    let norm = mixed_lebesgue_norm(&m.values, &m.params.p, None).unwrap_or(f64::INFINITY);
    let dyadic_size_ok = m
        .dyadic_index
        .is_none_or(|l| norm <= 2f64.powf(-(l as f64) * m.params.alpha));
    let restricted_ok = !m.params.restricted || norm <= 1.0;
    let moments_ok = moment_max <= tol_moments;
    let r_finite = r_value.is_finite();
    MoleculeReport {
        moment_max,
        moments_ok,
        r_value,
        r_finite,
        norm,
        dyadic_size_ok,
        restricted_ok,
        pass: moments_ok && r_finite && dyadic_size_ok && restricted_ok,
    }
}

/// Sharp shells `E_0 = {|x| <= sigma}`, `E_k = {2^{k-1} sigma < |x| <= 2^k sigma}`.
#[derive(Debug, Clone)]
pub struct MoleculeShellGeometry {
    sigma: f64,
    k_max: i32,
    grid: Grid,
}

impl MoleculeShellGeometry {
    /// Shells up to the first `k` with `2^k sigma` beyond every grid node.
    pub fn new(grid: &Grid, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(HerzError::param(
                "sigma",
                format!("must be positive, got {sigma}"),
            ));
        }
        let mut k_max = 0;
        while 2f64.powi(k_max) * sigma < grid.max_radius() {
            k_max += 1;
        }
        Ok(Self {
            sigma,
            k_max,
            grid: *grid,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    /// Outer radius `2^k sigma` of shell `k`.
    pub fn radius(&self, k: i32) -> f64 {
        2f64.powi(k) * self.sigma
    }

    pub fn ball(&self, k: i32) -> Mask {
        Mask::ball(&self.grid, self.radius(k))
    }

    pub fn shell(&self, k: i32) -> Mask {
        if k == 0 {
            self.ball(0)
        } else {
            Mask::annulus(&self.grid, self.radius(k - 1), self.radius(k))
        }
    }
}

/// Decomposition of one molecule plus the quantities tracked along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeDecomposition {
    pub decomposition: Decomposition,
    /// `R(M)`; the molecule is divided by it before splitting.
    pub r_scale: f64,
    pub sigma: f64,
    /// `| || |x|^{nb} M~ || / sigma^{na} - 1 |` for the normalized molecule.
    pub sigma_consistency: f64,
    /// Largest scaled total moment `N_l^0`.
    pub n0_max: f64,
    /// `(k, |N^k| max|psi^k| / |E_k|)` for every shell after the first.
    pub tail_decay: Vec<(i32, f64)>,
    /// Innermost shell label (shells below it were merged into its ball).
    pub first_shell: i32,
}

impl MoleculeDecomposition {
    /// Fitted decay exponent of `tail_decay` over shells with `2^k sigma <= r_max`.
    pub fn fitted_decay_exponent(&self, r_max: f64) -> Option<f64> {
        let pts: Vec<(i32, f64)> = self
            .tail_decay
            .iter()
            .copied()
            .filter(|(k, _)| 2f64.powi(*k) * self.sigma <= r_max)
            .collect();
        dyadic_decay_exponent(&pts)
    }
}

/// Splits a molecule into `M_k - Q_k` on sharp shells and the telescoped
/// polynomial tail; coefficients are `R(M) C 2^{-k n a}` with `C` fitted
/// separately for interior and tail atoms.
pub fn molecule_to_atoms(m: &Molecule, q: f64) -> Result<MoleculeDecomposition> {
    let grid = m.values.grid();
    let params = &m.params;
    if !(q.is_finite() && q > 0.0) {
        return Err(HerzError::param(
            "q",
            format!("must satisfy 0 < q < inf, got {q}"),
        ));
    }
    if !(params.alpha > 0.0) {
        return Err(HerzError::InvalidMolecule("sigma needs alpha > 0".into()));
    }
    let r0 = molecule_r(&m.values, params)?;
    if r0 == 0.0 {
        return Ok(MoleculeDecomposition {
            decomposition: Decomposition::default(),
            r_scale: 0.0,
            sigma: f64::INFINITY,
            sigma_consistency: 0.0,
            n0_max: 0.0,
            tail_decay: vec![],
            first_shell: 0,
        });
    }
    let moment_max = scaled_moment_max(&m.values, params.s);
    if moment_max > crate::atoms::TOL_MOMENTS {
        return Err(HerzError::MomentsNotVanishing {
            degree: params.s,
            max_moment: moment_max,
        });
    }
    let n = params.dim() as f64;
    let mt = m.values.scaled(1.0 / r0);
    let norm = mixed_lebesgue_norm(&mt, &params.p, None)?;
    let sigma = norm.powf(-1.0 / params.alpha);
    let w = weighted_norm(&mt, &params.p, n * params.b(), None)?;
    let sigma_consistency = (w / sigma.powf(n * params.a()) - 1.0).abs();

    let geo = MoleculeShellGeometry::new(grid, sigma)?;
    let dim_p = multi_indices(grid.dim(), params.s).len();
    // Shells too small to carry a basis are merged into the first ball that can.
    let min_nodes = 2 * dim_p;
    let mut first = 0;
    while first < geo.k_max() && geo.ball(first).count() < min_nodes {
        first += 1;
    }
    let mut blocks = Vec::new();
    for k in first..=geo.k_max() {
        let mask = if k == first {
            geo.ball(k)
        } else {
            geo.shell(k)
        };
        let piece = mt.restricted(&mask);
        if piece.is_zero() {
            continue;
        }
        let scale = if k == first {
            geo.radius(k)
        } else {
            geo.radius(k - 1)
        };
        let basis = PolyBasis::new(grid, &mask, params.s, scale, k)?;
        blocks.push(Block {
            label: k,
            piece,
            basis,
            tail_radius: geo.radius(k),
        });
    }
    let l1 = mt.l1_norm();
    let pieces = project_and_telescope(grid, &blocks, &params.p, l1)?;
    let indices = blocks[0].basis.indices().to_vec();
    let rho = mt.support_radius().unwrap_or(0.0).max(grid.spacing());
    let n0_max = crate::atoms::scaled_total_moment(&pieces.total_moments, &indices, l1, rho);

    // Tail sequence from suffix sums of the block moments.
    let mut tail_decay = Vec::new();
    for j in 1..blocks.len() {
        let nk: Vec<f64> = (0..dim_p)
            .map(|d| pieces.projections[j..].iter().map(|pr| pr.moments[d]).sum())
            .collect();
        let meas = blocks[j].basis.measure();
        let v = (0..dim_p)
            .map(|d| {
                let psi_max = blocks[j]
                    .basis
                    .nodes()
                    .iter()
                    .map(|&i| blocks[j].basis.dual(d, grid.point(i)).abs())
                    .fold(0.0, f64::max);
                nk[d].abs() * psi_max / meas
            })
            .fold(0.0, f64::max);
        tail_decay.push((blocks[j].label, v));
    }

    let alpha_n = params.alpha / n;
    let decay = |k: i32| 2f64.powf(-(k as f64) * n * params.a());
    let dim = grid.dim();
    let mut c_int = 0.0f64;
    let mut interior = Vec::new();
    for (pc, _) in &pieces.interior {
        let r = geo.radius(pc.label);
        let gn = mixed_lebesgue_norm(&pc.g, &params.p, None)?;
        c_int = c_int.max(gn * ball_volume(dim, r).powf(alpha_n) / decay(pc.label));
        interior.push((pc.label, pc.g.clone(), r));
    }
    let mut c_tail = 0.0f64;
    for t in &pieces.tails {
        let hn = mixed_lebesgue_norm(&t.h, &params.p, None)?;
        c_tail = c_tail.max(hn * ball_volume(dim, t.radius).powf(alpha_n) / decay(t.label));
    }

    let aparams = params.atom_params();
    let mut entries = Vec::new();
    for (k, g, r) in interior {
        let lambda = r0 * c_int * decay(k);
        entries.push(DecompositionEntry {
            lambda,
            shell: k,
            kind: PieceKind::Interior,
            multi_index: vec![],
            atom: Atom::new(g.scaled(r0 / lambda), r, aparams.clone())?,
        });
    }
    for t in &pieces.tails {
        let lambda = r0 * c_tail * decay(t.label);
        entries.push(DecompositionEntry {
            lambda,
            shell: t.label,
            kind: PieceKind::Tail,
            multi_index: t.index[..dim].to_vec(),
            atom: Atom::new(t.h.scaled(r0 / lambda), t.radius, aparams.clone())?,
        });
    }
    let mut d = Decomposition {
        entries,
        diagnostics: DecompositionDiagnostics {
            c_interior: c_int,
            c_tail,
            normalizers: vec![],
            projections: pieces.projections,
            dropped: pieces.dropped,
            boundary_moment: n0_max,
            abel_residual: pieces.abel_residual,
            uncovered_mass: 0.0,
            ell_q: 0.0,
            notes: vec![format!(
                "molecule divided by R(M) = {r0:e} before splitting"
            )],
        },
        sigma: Some(sigma),
    };
    d.sort();
    d.diagnostics.ell_q = crate::atoms::coefficient_ell_q(&d, q)?;
    Ok(MoleculeDecomposition {
        decomposition: d,
        r_scale: r0,
        sigma,
        sigma_consistency,
        n0_max,
        tail_decay,
        first_shell: first,
    })
}

/// `(w^2 + |x|^2)^{-gamma/2} - c exp(-|x|^2 / w^2)` with `c` chosen so the discrete
/// integral vanishes. An even molecule with a power tail.
pub fn power_tail_molecule(grid: &Grid, gamma: f64, w: f64) -> GridFunction {
    let tail = GridFunction::from_fn(grid, |x| {
        (w * w + x[0] * x[0] + x[1] * x[1]).powf(-gamma / 2.0)
    });
    let core = GridFunction::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1]) / (w * w)).exp());
    crate::testfns::remove_mean(&tail, &core)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{haar_atom, reconstruction_residual, validate_atom, TOL_MOMENTS, TOL_SIZE};

    fn p2() -> ExponentVector {
        ExponentVector::uniform(1, 2.0).unwrap()
    }

    #[test]
    fn params_identity_and_floor() {
        let mp = MoleculeParams::with_default_eps(0.5, p2()).unwrap();
        assert!((mp.b() - mp.a() - 0.5).abs() < 1e-15);
        assert!((mp.eps - 0.1).abs() < 1e-15);
        assert!(MoleculeParams::new(0.5, p2(), 0, 0.0, false).is_err());
        let p = ExponentVector::new(vec![2.0, 4.0]).unwrap();
        // floor = max{0, 2.5/2 + 0.75/2 - 1} = 0.625
        assert!((eps_floor(2.5, &p, 0) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn zero_molecule() {
        let g = Grid::new(1, 4.0, 129).unwrap();
        let mp = MoleculeParams::with_default_eps(0.5, p2()).unwrap();
        assert_eq!(molecule_r(&GridFunction::zeros(&g), &mp).unwrap(), 0.0);
        let m = Molecule::new(GridFunction::zeros(&g), mp).unwrap();
        assert!(molecule_to_atoms(&m, 1.0).unwrap().decomposition.is_empty());
    }

    #[test]
    fn atom_is_molecule_and_r_is_scale_free() {
        let g = Grid::desk(1).unwrap();
        let ap = AtomParams::minimal(0.5, p2()).unwrap();
        let a1 = haar_atom(&g, 1.0, &ap).unwrap();
        let a2 = haar_atom(&g, 2.0, &ap).unwrap();
        let m1 = Molecule::from_atom(&a1, 0.1).unwrap();
        let rep = validate_molecule(&m1, TOL_MOMENTS);
        assert!(rep.pass);
        let r1 = rep.r_value;
        let r2 = molecule_r(&a2.values, &m1.params).unwrap();
        assert!(r1 <= 10.0);
        assert!((0.5..=2.0).contains(&(r2 / r1)));
    }

    #[test]
    fn validation_failures() {
        let g = Grid::desk(1).unwrap();
        let mp = MoleculeParams::with_default_eps(0.5, p2()).unwrap();
        let b0 = crate::testfns::ball_indicator(&g, 1.0);
        assert!(
            !validate_molecule(&Molecule::new(b0, mp.clone()).unwrap(), TOL_MOMENTS).moments_ok
        );
        let a = haar_atom(&g, 1.0, &mp.atom_params()).unwrap();
        let m = Molecule::new(a.values.scaled(2.0), mp).unwrap().dyadic(1);
        let rep = validate_molecule(&m, TOL_MOMENTS);
        assert!(!rep.dyadic_size_ok && !rep.pass);
    }

    #[test]
    fn atom_round_trip() {
        let g = Grid::desk(1).unwrap();
        let ap = AtomParams::minimal(0.5, p2()).unwrap();
        let a = haar_atom(&g, 2.0, &ap).unwrap();
        let m = Molecule::from_atom(&a, 0.1).unwrap();
        let md = molecule_to_atoms(&m, 1.0).unwrap();
        assert!(reconstruction_residual(&a.values, &md.decomposition, &p2()).unwrap() <= 1e-6);
        for e in &md.decomposition.entries {
            assert!(validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass);
        }
        assert!(md.sigma_consistency < 1e-6);
        assert!(md.n0_max < 1e-8);
    }

    #[test]
    fn power_tail_decay_rate() {
        let g = Grid::desk(1).unwrap();
        let mp = MoleculeParams::new(0.5, p2(), 0, 1.0, false).unwrap();
        assert!((mp.tail_decay_exponent() - 2.0).abs() < 1e-12);
        let m = Molecule::new(power_tail_molecule(&g, 2.0, 1.0 / 16.0), mp).unwrap();
        assert!(validate_molecule(&m, TOL_MOMENTS).pass);
        let md = molecule_to_atoms(&m, 1.0).unwrap();
        assert!(reconstruction_residual(&m.values, &md.decomposition, &p2()).unwrap() <= 1e-6);
        for e in &md.decomposition.entries {
            assert!(
                validate_atom(&e.atom, TOL_MOMENTS, crate::atoms::TOL_SIZE).pass,
                "shell {}",
                e.shell
            );
        }
        let e = md.fitted_decay_exponent(g.extent() / 4.0).unwrap();
        assert!((e - 2.0).abs() <= 0.3, "exponent {e}, sigma {}", md.sigma);
    }
}
