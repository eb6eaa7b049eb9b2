//! Central atoms, their validation, and the constructive atomic decomposition.

mod basis;
mod decompose;
mod partition;

pub use basis::{annulus_basis, AnnulusBasis};
pub use decompose::atomic_decompose;
pub(crate) use decompose::{project_and_telescope, scaled_total_moment, Block};
pub use partition::{
    ball_profile, build_partition, build_restricted_partition, shell_profile, smooth_step,
    PartitionOfUnity,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HerzError, Result};
use crate::grid::{ball_volume, quadrature_integrate, Grid, GridFunction, GridFunctionFile};
use crate::norms::{mixed_lebesgue_norm, ExponentVector};
use crate::poly::{monomial, multi_indices, total_degree};
use crate::testfns;

/// Default tolerance on scaled moments.
pub const TOL_MOMENTS: f64 = 1e-8;
/// Default relative tolerance on the size condition.
pub const TOL_SIZE: f64 = 1e-6;
/// Default relative tolerance on reconstruction.
pub const TOL_RECON: f64 = 1e-6;

/// `floor(alpha - sum_i 1/p'_i)`, clamped at zero.
pub fn minimal_degree(alpha: f64, p: &ExponentVector) -> usize {
    (alpha - p.sum_inv_conjugate() + 1e-12).floor().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    pub alpha: f64,
    pub p: ExponentVector,
    /// Moment degree.
    pub s: usize,
    /// Restricted type: the support radius must be at least 1.
    pub restricted: bool,
}

impl AtomParams {
    pub fn new(alpha: f64, p: ExponentVector, s: usize, restricted: bool) -> Result<Self> {
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
        Ok(Self {
            alpha,
            p,
            s,
            restricted,
        })
    }

    /// Parameters with the smallest admissible moment degree.
    pub fn minimal(alpha: f64, p: ExponentVector) -> Result<Self> {
        let s = minimal_degree(alpha, &p);
        Self::new(alpha, p, s, false)
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    /// `|B(0, r)|^{-alpha/n}`.
    pub fn size_bound(&self, r: f64) -> f64 {
        ball_volume(self.dim(), r).powf(-self.alpha / self.dim() as f64)
    }
}

/// A grid function claimed to be a central atom supported in `B(0, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub values: GridFunction,
    pub radius: f64,
    pub params: AtomParams,
}

impl Atom {
    pub fn new(values: GridFunction, radius: f64, params: AtomParams) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(HerzError::InvalidAtom(format!(
                "radius must be positive, got {radius}"
            )));
        }
        params.p.check_grid(values.grid())?;
        Ok(Self {
            values,
            radius,
            params,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    /// Same atom times `c` (not an atom unless `|c| <= 1`).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.scaled(c),
            ..self.clone()
        }
    }
}

/// `c sign(x_1) chi_{B(0,r)}` with `c` chosen so the size condition holds with equality.
pub fn haar_atom(grid: &Grid, r: f64, params: &AtomParams) -> Result<Atom> {
    let raw = testfns::haar(grid, r);
    let n = mixed_lebesgue_norm(&raw, &params.p, None)?;
    if n == 0.0 {
        return Err(HerzError::InvalidAtom(format!(
            "radius {r} holds no nonzero node"
        )));
    }
    Atom::new(raw.scaled(params.size_bound(r) / n), r, params.clone())
}

/// `(s+1)`-th forward difference along `x_1` of a bump, normalized like [`haar_atom`].
///
/// The difference is taken on grid offsets, so every moment of degree `<= s` cancels up
/// to rounding.
pub fn difference_atom(grid: &Grid, r: f64, params: &AtomParams) -> Result<Atom> {
    let order = params.s + 1;
    let h = grid.spacing();
    let rho = r - (order as f64 + 1.0) * h;
    if rho <= 2.0 * h {
        return Err(HerzError::InvalidAtom(format!(
            "radius {r} is too small for a difference of order {order} at spacing {h}"
        )));
    }
    let shift = (order / 2) as f64;
    let weights: Vec<f64> = (0..=order)
        .map(|j| {
            let sign = if (order - j).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sign * binomial(order, j)
        })
        .collect();
    let profile = |x: [f64; 2]| {
        let s = (x[0] * x[0] + x[1] * x[1]) / (rho * rho);
        if s < 1.0 {
            (-1.0 / (1.0 - s)).exp()
        } else {
            0.0
        }
    };
    let raw = GridFunction::from_fn(grid, |x| {
        weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * profile([x[0] + (j as f64 - shift) * h, x[1]]))
            .sum()
    });
    let n = mixed_lebesgue_norm(&raw, &params.p, None)?;
    if n == 0.0 {
        return Err(HerzError::InvalidAtom(format!(
            "radius {r} holds no nonzero node"
        )));
    }
    Atom::new(raw.scaled(params.size_bound(r) / n), r, params.clone())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Outcome of checking the three atom conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub support_ok: bool,
    pub size_ok: bool,
    pub radius_ok: bool,
    pub norm: f64,
    pub size_bound: f64,
    /// `max_{|beta| <= s} |int a x^beta| / (||a||_1 r^{|beta|})`.
    pub moment_max: f64,
    pub moments_ok: bool,
    pub pass: bool,
}

/// Checks support in the closed ball, the size bound against the continuum ball
/// volume, and scaled vanishing moments up to degree `s`.
pub fn validate_atom(a: &Atom, tol_moments: f64, tol_size: f64) -> AtomReport {
    let grid = a.grid();
    let r = a.radius;
    let r2 = r * r * (1.0 + 1e-12);
    let support_ok = a
        .values
        .values()
        .iter()
        .enumerate()
        .all(|(i, &v)| v == 0.0 || grid.norm_sq(i) <= r2);
    let norm = mixed_lebesgue_norm(&a.values, &a.params.p, None).unwrap_or(f64::INFINITY);
    let size_bound = a.params.size_bound(r);
    let size_ok = norm <= (1.0 + tol_size) * size_bound;
    let l1 = a.values.l1_norm();
    let mut moment_max = 0.0f64;
    if l1 > 0.0 {
        for beta in multi_indices(grid.dim(), a.params.s) {
            let mom = moment(&a.values, &beta);
            let scaled = mom.abs() / (l1 * r.powi(total_degree(&beta) as i32));
            moment_max = moment_max.max(scaled);
        }
    }
    let moments_ok = moment_max <= tol_moments;
    let radius_ok = !a.params.restricted || r >= 1.0;
    AtomReport {
        support_ok,
        size_ok,
        radius_ok,
        norm,
        size_bound,
        moment_max,
        moments_ok,
        pass: support_ok && size_ok && moments_ok && radius_ok,
    }
}

/// `int f x^beta`.
pub fn moment(f: &GridFunction, beta: &[usize; 2]) -> f64 {
    let g = f.grid();
    let s: f64 = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| v * monomial(beta, g.point(i)))
        .sum();
    s * g.cell_volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Interior,
    Tail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionEntry {
    pub lambda: f64,
    pub shell: i32,
    pub kind: PieceKind,
    pub multi_index: Vec<usize>,
    pub atom: Atom,
}

/// A piece left out of the decomposition and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPiece {
    pub shell: i32,
    pub kind: PieceKind,
    pub multi_index: Vec<usize>,
    pub l1_norm: f64,
    pub reason: String,
}

/// Moments and projection size of one shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellProjection {
    pub shell: i32,
    /// `int f_k x^d` for every multi-index `d` of degree `<= s`.
    pub moments: Vec<f64>,
    /// Partial sums of the moments over shells `<= k`.
    pub partial_moments: Vec<f64>,
    /// Mixed norm of the polynomial projection on the shell.
    pub projection_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecompositionDiagnostics {
    /// Fitted constant in the interior coefficients.
    pub c_interior: f64,
    /// Fitted constant in the tail coefficients.
    pub c_tail: f64,
    /// Per-shell normalizers: `(k, N_k)`.
    pub normalizers: Vec<(i32, f64)>,
    pub projections: Vec<ShellProjection>,
    pub dropped: Vec<DroppedPiece>,
    /// Largest scaled total moment (the dropped boundary term of the tail sum).
    pub boundary_moment: f64,
    /// Largest relative residual of the summation-by-parts identity, shell by shell.
    pub abel_residual: f64,
    /// Mass of `f` on nodes no shell covers (below the rejection threshold).
    pub uncovered_mass: f64,
    /// `(sum |lambda|^q)^{1/q}` for the requested `q`.
    pub ell_q: f64,
    pub notes: Vec<String>,
}

/// Coefficients paired with atoms, ordered by `(shell, kind, multi_index)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decomposition {
    pub entries: Vec<DecompositionEntry>,
    pub diagnostics: DecompositionDiagnostics,
    /// Shell scale of a molecular decomposition.
    pub sigma: Option<f64>,
}

impl Decomposition {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            (a.shell, a.kind, &a.multi_index).cmp(&(b.shell, b.kind, &b.multi_index))
        });
    }

    /// Support radius implied by a shell label and piece kind.
    pub fn derived_radius(shell: i32, kind: PieceKind, sigma: Option<f64>) -> f64 {
        let base = match sigma {
            None => 2f64.powi(shell + 1),
            Some(s) => 2f64.powi(shell) * s,
        };
        match kind {
            PieceKind::Interior => base,
            PieceKind::Tail => 2.0 * base,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let entries: Vec<EntryFile> = self
            .entries
            .iter()
            .map(|e| EntryFile {
                lambda: e.lambda,
                shell: e.shell,
                kind: e.kind,
                multi_index: e.multi_index.clone(),
                atom: e.atom.values.to_file(),
            })
            .collect();
        Ok(match self.sigma {
            None => serde_json::to_string(&entries)?,
            Some(sigma) => serde_json::to_string(&MoleculeFile {
                header: MoleculeHeader { sigma },
                entries,
            })?,
        })
    }

    /// Parses either the bare entry array or the molecular form with a header.
    pub fn from_json(s: &str, params: &AtomParams) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        let (entries, sigma): (Vec<EntryFile>, Option<f64>) = if value.is_array() {
            (serde_json::from_value(value)?, None)
        } else {
            let m: MoleculeFile = serde_json::from_value(value)?;
            (m.entries, Some(m.header.sigma))
        };
        let entries = entries
            .into_iter()
            .map(|e| {
                let values = e.atom.into_function()?;
                let radius = Self::derived_radius(e.shell, e.kind, sigma);
                Ok(DecompositionEntry {
                    lambda: e.lambda,
                    shell: e.shell,
                    kind: e.kind,
                    multi_index: e.multi_index,
                    atom: Atom::new(values, radius, params.clone())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            entries,
            diagnostics: DecompositionDiagnostics::default(),
            sigma,
        })
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    lambda: f64,
    shell: i32,
    kind: PieceKind,
    multi_index: Vec<usize>,
    atom: GridFunctionFile,
}

#[derive(Serialize, Deserialize)]
struct MoleculeHeader {
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
struct MoleculeFile {
    header: MoleculeHeader,
    entries: Vec<EntryFile>,
}

/// `sum lambda_k a_k`, accumulated in entry order.
pub fn reconstruct(d: &Decomposition, grid: &Grid) -> Result<GridFunction> {
    let mut out = GridFunction::zeros(grid);
    for e in &d.entries {
        out.axpy(e.lambda, &e.atom.values)?;
    }
    Ok(out)
}

/// `(sum |lambda_k|^q)^{1/q}`.
pub fn coefficient_ell_q(d: &Decomposition, q: f64) -> Result<f64> {
    ell_q(d.entries.iter().map(|e| e.lambda), q)
}

pub(crate) fn ell_q(values: impl Iterator<Item = f64>, q: f64) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(HerzError::param(
            "q",
            format!("must satisfy 0 < q < inf, got {q}"),
        ));
    }
    let s: f64 = values.map(|l| l.abs().powf(q)).sum();
    Ok(if s > 0.0 { s.powf(1.0 / q) } else { 0.0 })
}

/// Relative reconstruction residual `||f - sum lambda a|| / ||f||` in the mixed norm.
pub fn reconstruction_residual(
    f: &GridFunction,
    d: &Decomposition,
    p: &ExponentVector,
) -> Result<f64> {
    let r = reconstruct(d, f.grid())?;
    let diff = f.sub(&r)?;
    let nf = mixed_lebesgue_norm(f, p, None)?;
    let nd = mixed_lebesgue_norm(&diff, p, None)?;
    Ok(if nf == 0.0 { nd } else { nd / nf })
}

/// `int f` over the whole grid.
pub fn total_mass(f: &GridFunction) -> f64 {
    quadrature_integrate(f, None).expect("mask-free quadrature")
}
