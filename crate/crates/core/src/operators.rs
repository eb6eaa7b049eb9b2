//! Calderón–Zygmund kernels, principal-value application, and the size,
//! regularity, boundedness and molecule checks built on them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{moment, validate_atom, Atom, TOL_MOMENTS, TOL_SIZE};
use crate::error::{HerzError, Result};
use crate::grid::{Grid, GridFunction, Mask, Point};
use crate::molecules::{molecule_r, weighted_norm, MoleculeParams};
use crate::norms::{herz_norm, mixed_lebesgue_norm, ExponentVector, HerzParams};
use crate::poly::multi_indices;

/// Evaluation interface for off-diagonal kernels `K(x, y)`.
pub trait CzKernel: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: Point, y: Point) -> f64;
    /// `A` in `|K(x, y)| <= A / |x - y|^n`.
    fn size_constant(&self) -> f64;
    /// Regularity exponent `delta`.
    fn delta(&self) -> f64;
    fn name(&self) -> String;
}

/// Built-in kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    /// `1 / (pi (x - y))`.
    Hilbert,
    /// `(x_j - y_j) / (2 pi |x - y|^3)` in two dimensions, `j` in `{1, 2}`.
    Riesz(usize),
    /// `cos(1 / (x - y)) / (x - y)`: satisfies the size bound but not the regularity bound.
    Oscillatory,
}

impl KernelSpec {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "hilbert" => Ok(Self::Hilbert),
            "riesz1" => Ok(Self::Riesz(1)),
            "riesz2" => Ok(Self::Riesz(2)),
            "oscillatory" => Ok(Self::Oscillatory),
            other => Err(HerzError::param(
                "kernel",
                format!(
                    "unknown kernel `{other}` (expected hilbert, riesz1, riesz2 or oscillatory)"
                ),
            )),
        }
    }
}

impl CzKernel for KernelSpec {
    fn dim(&self) -> usize {
        match self {
            Self::Hilbert | Self::Oscillatory => 1,
            Self::Riesz(_) => 2,
        }
    }

    fn eval(&self, x: Point, y: Point) -> f64 {
        match *self {
            Self::Hilbert => 1.0 / (PI * (x[0] - y[0])),
            Self::Oscillatory => {
                let u = x[0] - y[0];
                (1.0 / u).cos() / u
            }
            Self::Riesz(j) => {
                let d = [x[0] - y[0], x[1] - y[1]];
                let r2 = d[0] * d[0] + d[1] * d[1];
                d[j - 1] / (2.0 * PI * r2 * r2.sqrt())
            }
        }
    }

    fn size_constant(&self) -> f64 {
        match self {
            Self::Hilbert => 1.0 / PI,
            Self::Oscillatory => 1.0,
            Self::Riesz(_) => 1.0 / (2.0 * PI),
        }
    }

    fn delta(&self) -> f64 {
        1.0
    }

    fn name(&self) -> String {
        match self {
            Self::Hilbert => "hilbert".into(),
            Self::Oscillatory => "oscillatory".into(),
            Self::Riesz(j) => format!("riesz{j}"),
        }
    }
}

fn check_kernel_grid(k: &dyn CzKernel, grid: &Grid) -> Result<()> {
    if k.dim() != grid.dim() {
        return Err(HerzError::Kernel(format!(
            "kernel `{}` is {}-dimensional but the grid is {}-dimensional",
            k.name(),
            k.dim(),
            grid.dim()
        )));
    }
    Ok(())
}

/// `Tf(x) = sum_{y != x} K(x, y) f(y) h^n`: the diagonal node is excluded, which on an
/// origin-symmetric grid is the symmetric principal value.
pub fn cz_apply(k: &dyn CzKernel, f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid();
    check_kernel_grid(k, grid)?;
    let support: Vec<(usize, Point, f64)> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| (i, grid.point(i), v))
        .collect();
    let hn = grid.cell_volume();
    let vals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let terms = support
                .iter()
                .filter(|(j, _, _)| *j != i)
                .map(|&(_, y, v)| k.eval(x, y) * v);
            sign_split_sum(terms) * hn
        })
        .collect();
    GridFunction::new(*grid, vals)
}

/// Sums positive and negative terms separately, each in increasing magnitude, so
/// that negating every term negates the result exactly.
fn sign_split_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut pos, mut neg): (Vec<f64>, Vec<f64>) = terms.partition(|t| *t >= 0.0);
    pos.sort_unstable_by(f64::total_cmp);
    neg.sort_unstable_by(|a, b| b.total_cmp(a));
    pos.iter().sum::<f64>() + neg.iter().sum::<f64>()
}

/// `A int |f(y)| / |x - y|^n dy`, the pointwise majorant of `|Tf(x)|` off the support.
pub fn size_majorant(k: &dyn CzKernel, f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid();
    check_kernel_grid(k, grid)?;
    let n = grid.dim() as i32;
    let support: Vec<(usize, Point, f64)> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| (i, grid.point(i), v.abs()))
        .collect();
    let a = k.size_constant();
    let hn = grid.cell_volume();
    let vals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            support
                .iter()
                .filter(|(j, _, _)| *j != i)
                .map(|&(_, y, v)| {
                    let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                    v / d.powi(n)
                })
                .sum::<f64>()
                * hn
                * a
        })
        .collect();
    GridFunction::new(*grid, vals)
}

/// Linear operators exercised by the harnesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Operator {
    Cz(KernelSpec),
    Identity,
    Zero,
}

impl Operator {
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            Self::Cz(k) => cz_apply(k, f),
            Self::Identity => Ok(f.clone()),
            Self::Zero => Ok(GridFunction::zeros(f.grid())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Cz(k) => k.name(),
            Self::Identity => "identity".into(),
            Self::Zero => "zero".into(),
        }
    }
}

/// Sample set for the regularity check: lattice points of spacing `spacing` in
/// `[-extent, extent]^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub extent: f64,
    pub spacing: f64,
}

impl SampleSpec {
    pub fn refined(&self) -> Self {
        Self {
            extent: self.extent,
            spacing: self.spacing / 2.0,
        }
    }

    fn lattice(&self, dim: usize) -> Vec<Point> {
        let n = (self.extent / self.spacing).round() as i64;
        let axis: Vec<f64> = (-n..=n).map(|i| i as f64 * self.spacing).collect();
        if dim == 1 {
            axis.iter().map(|&x| [x, 0.0]).collect()
        } else {
            axis.iter()
                .flat_map(|&a| axis.iter().map(move |&b| [a, b]))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub kernel: String,
    pub delta: f64,
    /// Fitted `C'` on the given samples.
    pub fitted: f64,
    /// Fitted `C'` after each halving of the spacing.
    pub fitted_refined: Vec<f64>,
    /// Largest relative growth between consecutive fits.
    pub growth: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Number of spacing halvings used by [`check_kernel_regularity`].
pub const REGULARITY_REFINEMENTS: usize = 2;

/// Max of `|K(x, y) - K(x, 0)| |x - y|^{n + delta} / |y|^delta` over lattice pairs with
/// `|x| >= 2|y|`, `y != 0`.
pub fn fitted_regularity_constant(k: &dyn CzKernel, samples: &SampleSpec) -> Result<(f64, usize)> {
    let pts = samples.lattice(k.dim());
    let n = k.dim() as f64;
    let delta = k.delta();
    let norm = |p: Point| (p[0] * p[0] + p[1] * p[1]).sqrt();
    let origin = [0.0, 0.0];
    let results: Vec<(f64, usize)> = pts
        .par_iter()
        .filter(|x| norm(**x) > 0.0)
        .map(|&x| {
            let k0 = k.eval(x, origin);
            if !k0.is_finite() {
                return Err(HerzError::Kernel(format!(
                    "K(x, 0) is not finite at x = {x:?}"
                )));
            }
            let nx = norm(x);
            let mut best = 0.0f64;
            let mut count = 0usize;
            for &y in &pts {
                let ny = norm(y);
                if ny == 0.0 || nx < 2.0 * ny {
                    continue;
                }
                let d = norm([x[0] - y[0], x[1] - y[1]]);
                let v = (k.eval(x, y) - k0).abs() * d.powf(n + delta) / ny.powf(delta);
                best = best.max(v);
                count += 1;
            }
            Ok((best, count))
        })
        .collect::<Result<_>>()?;
    Ok(results
        .into_iter()
        .fold((0.0, 0), |(b, c), (v, n)| (b.max(v), c + n)))
}

/// Fits `C'` on `samples` and on successive refinements; passes iff no step grows
/// the fit by more than 10%.
pub fn check_kernel_regularity(k: &dyn CzKernel, samples: &SampleSpec) -> Result<RegularityReport> {
    if !(samples.spacing > 0.0 && samples.extent > 2.0 * samples.spacing) {
        return Err(HerzError::param("samples", "need extent > 2 spacing > 0"));
    }
    let (fitted, count) = fitted_regularity_constant(k, samples)?;
    let mut spec = *samples;
    let mut prev = fitted;
    let mut growth = 0.0f64;
    let mut fitted_refined = Vec::with_capacity(REGULARITY_REFINEMENTS);
    for _ in 0..REGULARITY_REFINEMENTS {
        spec = spec.refined();
        let (c, _) = fitted_regularity_constant(k, &spec)?;
        if prev > 0.0 {
            growth = growth.max(c / prev - 1.0);
        }
        fitted_refined.push(c);
        prev = c;
    }
    Ok(RegularityReport {
        kernel: k.name(),
        delta: k.delta(),
        fitted,
        fitted_refined,
        growth,
        samples: count,
        pass: growth <= 0.10 && fitted.is_finite(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeConditionReport {
    /// `max |Tf(x)| |x|^{n+s+delta} / (diam^{s+delta} ||f||_1)` over admissible nodes.
    pub fitted: f64,
    /// Ratio of the fitted quantity's max over `|x| > R/2` to its max over `|x| <= R/2`.
    pub max_violation_ratio: f64,
    pub samples: usize,
    pub diameter: f64,
    pub pass: bool,
}

/// Fitted size constant without the moment precondition.
pub fn size_condition_constant(
    tf: &GridFunction,
    f: &GridFunction,
    s: usize,
    delta: f64,
) -> Result<SizeConditionReport> {
    let grid = f.grid();
    grid.ensure_same(tf.grid())?;
    let l1 = f.l1_norm();
    let Some(r) = f.support_radius().filter(|_| l1 > 0.0) else {
        return Ok(SizeConditionReport {
            fitted: 0.0,
            max_violation_ratio: 0.0,
            samples: 0,
            diameter: 0.0,
            pass: true,
        });
    };
    let diameter = 2.0 * r;
    let supp: Vec<Point> = f.support().indices().map(|i| grid.point(i)).collect();
    let n = grid.dim() as f64;
    let e = s as f64 + delta;
    let half = grid.extent() / 2.0;
    let vals: Vec<Option<(f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let nx = grid.norm(i);
            if nx == 0.0 {
                return None;
            }
            let lim = nx * nx / 4.0;
            let admissible = supp
                .iter()
                .all(|y| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) >= lim);
            admissible.then(|| {
                (
                    nx,
                    tf.values()[i].abs() * nx.powf(n + e) / (diameter.powf(e) * l1),
                )
            })
        })
        .collect();
    let (mut inner, mut outer, mut count) = (0.0f64, 0.0f64, 0usize);
    for (nx, v) in vals.into_iter().flatten() {
        count += 1;
        if nx <= half {
            inner = inner.max(v);
        } else {
            outer = outer.max(v);
        }
    }
    let fitted = inner.max(outer);
    Ok(SizeConditionReport {
        fitted,
        max_violation_ratio: if inner > 0.0 { outer / inner } else { 0.0 },
        samples: count,
        diameter,
        pass: fitted.is_finite(),
    })
}

/// Size-condition fit on nodes with `dist(x, supp f) >= |x|/2`; `f` must have
/// vanishing moments up to degree `s`.
pub fn check_size_condition(
    tf: &GridFunction,
    f: &GridFunction,
    s: usize,
    delta: f64,
) -> Result<SizeConditionReport> {
    let grid = f.grid();
    let l1 = f.l1_norm();
    if l1 > 0.0 {
        let r = f.support_radius().unwrap_or(0.0).max(grid.spacing());
        let worst = multi_indices(grid.dim(), s)
            .iter()
            .map(|b| moment(f, b).abs() / (l1 * r.powi((b[0] + b[1]) as i32)))
            .fold(0.0, f64::max);
        if worst > TOL_MOMENTS {
            return Err(HerzError::MomentsNotVanishing {
                degree: s,
                max_moment: worst,
            });
        }
    }
    size_condition_constant(tf, f, s, delta)
}

/// Relative change of a fitted constant under refinement; stable iff at most `tol`.
pub fn refinement_stable(coarse: f64, fine: f64, tol: f64) -> (f64, bool) {
    let change = if coarse > 0.0 {
        (fine - coarse).abs() / coarse
    } else {
        fine.abs()
    };
    (change, change <= tol)
}

/// `[sum 1/p'_i, s + delta + sum 1/p'_i)`.
pub fn harness_window(p: &ExponentVector, s: usize, delta: f64) -> (f64, f64) {
    let lo = p.sum_inv_conjugate();
    (lo, s as f64 + delta + lo)
}

/// Top of the admissible `eps` range for `Tf` to be a molecule: `1 + delta/n - (1/n) sum 1/p'_i`.
pub fn molecule_eps_top(p: &ExponentVector, delta: f64) -> f64 {
    let n = p.dim() as f64;
    1.0 + delta / n - p.sum_inv_conjugate() / n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomNorm {
    pub radius: f64,
    pub herz_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub operator: String,
    pub norms: Vec<AtomNorm>,
    pub sup: f64,
    pub min: f64,
    /// `sup / min`, or 1 when every norm vanishes.
    pub spread: f64,
    pub factor: f64,
    pub pass: bool,
}

/// `||T a||` in the Herz norm of `herz` for each atom; uniform iff `sup / min <= factor`.
pub fn operator_atom_harness(
    op: &Operator,
    atoms: &[Atom],
    herz: &HerzParams,
    delta: f64,
    factor: f64,
) -> Result<HarnessReport> {
    let mut norms = Vec::with_capacity(atoms.len());
    for a in atoms {
        let (lo, hi) = harness_window(&a.params.p, a.params.s, delta);
        if !(herz.alpha >= lo - 1e-12 && herz.alpha < hi) {
            return Err(HerzError::Window(format!(
                "need sum 1/p'_i <= alpha < s + delta + sum 1/p'_i, i.e. {lo} <= alpha < {hi}, got alpha = {}",
                herz.alpha
            )));
        }
        let rep = validate_atom(a, TOL_MOMENTS, TOL_SIZE);
        if !rep.pass {
            return Err(HerzError::InvalidAtom(format!(
                "atom of radius {} fails validation: {rep:?}",
                a.radius
            )));
        }
        let ta = op.apply(&a.values)?;
        norms.push(AtomNorm {
            radius: a.radius,
            herz_norm: herz_norm(&ta, herz)?,
        });
    }
    let sup = norms.iter().map(|n| n.herz_norm).fold(0.0, f64::max);
    let min = norms
        .iter()
        .map(|n| n.herz_norm)
        .fold(f64::INFINITY, f64::min);
    let spread = if sup == 0.0 { 1.0 } else { sup / min };
    Ok(HarnessReport {
        operator: op.name(),
        norms,
        sup,
        min: if min.is_finite() { min } else { 0.0 },
        spread,
        factor,
        pass: spread <= factor,
    })
}

/// Relative size of the mean of `Ta` that may be subtracted.
pub const TF_MEAN_TOL: f64 = 0.05;
/// Upper limit on `R(Ta)`.
pub const TF_R_LIMIT: f64 = 20.0;
/// Largest admissible growth of the outer weighted norm when the domain doubles.
pub const TF_OUTER_GROWTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfMoleculeReport {
    /// `int Ta` before correction.
    pub mean: f64,
    /// Whether a constant on `B(0, r)` was subtracted to cancel the mean.
    pub mean_subtracted: bool,
    pub r_value: f64,
    /// `|| |x|^{nb} Ta ||` on `|x| <= 2r`, divided by `r^{nb - alpha}`.
    pub inner_bound: f64,
    /// `|| |x|^{nb} Ta ||` on `|x| > 2r`, divided by `r^{nb - alpha}`.
    pub outer_bound: f64,
    /// Relative growth of the outer norm from `|x| <= R/2` to the full grid.
    pub outer_growth: f64,
    pub eps: f64,
    pub eps_top: f64,
    pub pass: bool,
}

/// Checks the molecule size bounds for `Ta` with `a` an atom with `s = 0`.
pub fn tf_molecule_check(
    k: &dyn CzKernel,
    a: &Atom,
    mol: &MoleculeParams,
) -> Result<TfMoleculeReport> {
    let grid = a.grid();
    let rep = validate_atom(a, TOL_MOMENTS, TOL_SIZE);
    if !rep.pass || a.params.s != 0 {
        return Err(HerzError::InvalidAtom(
            "need a valid atom with s = 0".into(),
        ));
    }
    let mut ta = cz_apply(k, &a.values)?;
    let mean = moment(&ta, &[0, 0]);
    let l1 = ta.l1_norm();
    let tol = TF_MEAN_TOL * l1;
    let mut mean_subtracted = false;
    if mean.abs() > tol {
        return Err(HerzError::NonzeroMean { mean, tol });
    }
    let ball = Mask::ball(grid, a.radius);
    if mean != 0.0 {
        let c = mean / ball.measure(grid);
        for i in ball.indices() {
            ta.values_mut()[i] -= c;
        }
        mean_subtracted = true;
    }
    let n = grid.dim() as f64;
    let nb = n * mol.b();
    let r = a.radius;
    let scale = r.powf(nb - mol.alpha);
    let inner_mask = Mask::ball(grid, 2.0 * r);
    let outer_mask = inner_mask.not();
    let inner = weighted_norm(&ta, &mol.p, nb, Some(&inner_mask))?;
    let outer = weighted_norm(&ta, &mol.p, nb, Some(&outer_mask))?;
    let half = outer_mask.and(&Mask::ball(grid, grid.extent() / 2.0));
    let outer_half = weighted_norm(&ta, &mol.p, nb, Some(&half))?;
    let outer_growth = if outer_half > 0.0 {
        outer / outer_half - 1.0
    } else {
        0.0
    };
    let r_value = molecule_r(&ta, mol)?;
    Ok(TfMoleculeReport {
        mean,
        mean_subtracted,
        r_value,
        inner_bound: inner / scale,
        outer_bound: outer / scale,
        outer_growth,
        eps: mol.eps,
        eps_top: molecule_eps_top(&mol.p, k.delta()),
        pass: r_value <= TF_R_LIMIT && outer_growth <= TF_OUTER_GROWTH,
    })
}

/// `||Tf|| / ||f||` in `L^p`.
pub fn lp_operator_ratio(op: &Operator, f: &GridFunction, p: &ExponentVector) -> Result<f64> {
    let nf = mixed_lebesgue_norm(f, p, None)?;
    if nf == 0.0 {
        return Ok(0.0);
    }
    Ok(mixed_lebesgue_norm(&op.apply(f)?, p, None)? / nf)
}

/// `(1/pi) ln |(x + 1)/(x - 1)|`, the Hilbert transform of the indicator of `[-1, 1]`.
pub fn hilbert_of_unit_indicator(x: f64) -> f64 {
    ((x + 1.0) / (x - 1.0)).abs().ln() / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{haar_atom, AtomParams};
    use crate::testfns;

    fn p2() -> ExponentVector {
        ExponentVector::uniform(1, 2.0).unwrap()
    }

    #[test]
    fn hilbert_of_indicator() {
        let g = Grid::desk(1).unwrap();
        let h = g.spacing();
        let f = testfns::closed_box_indicator(&g, [-1.0, 0.0], [1.0, 0.0]);
        let tf = cz_apply(&KernelSpec::Hilbert, &f).unwrap();
        for i in 0..g.len() {
            let x = g.point(i)[0];
            if (x.abs() - 1.0).abs() >= 5.0 * h {
                assert!(
                    (tf.values()[i] - hilbert_of_unit_indicator(x)).abs() <= 5.0 * h,
                    "x = {x}"
                );
            }
        }
        // Even input, odd output.
        let c = g.center_index();
        for j in 1..c {
            assert_eq!(tf.values()[c + j], -tf.values()[c - j]);
        }
        assert!(cz_apply(&KernelSpec::Hilbert, &GridFunction::zeros(&g))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn regularity_constants() {
        let s = SampleSpec {
            extent: 4.0,
            spacing: 1.0 / 16.0,
        };
        let rep = check_kernel_regularity(&KernelSpec::Hilbert, &s).unwrap();
        assert!(rep.pass);
        assert!(rep.fitted <= 2.0 / PI + 1e-6);
        assert!((rep.fitted - 1.5 / PI).abs() < 1e-12);
        let osc = check_kernel_regularity(&KernelSpec::Oscillatory, &s).unwrap();
        assert!(!osc.pass && osc.growth > 0.5, "{osc:?}");
    }

    #[test]
    fn size_condition_for_haar() {
        let g = Grid::desk(1).unwrap();
        let params = AtomParams::minimal(0.5, p2()).unwrap();
        let a = haar_atom(&g, 1.0, &params).unwrap();
        let ta = cz_apply(&KernelSpec::Hilbert, &a.values).unwrap();
        let rep = check_size_condition(&ta, &a.values, 0, 1.0).unwrap();
        assert!(rep.pass && rep.fitted > 0.0 && rep.max_violation_ratio <= 1.1);
        assert_eq!(rep.diameter, 2.0);

        let chi = testfns::closed_box_indicator(&g, [-1.0, 0.0], [1.0, 0.0]);
        let tchi = cz_apply(&KernelSpec::Hilbert, &chi).unwrap();
        assert!(matches!(
            check_size_condition(&tchi, &chi, 0, 1.0),
            Err(HerzError::MomentsNotVanishing { .. })
        ));
        let forced = size_condition_constant(&tchi, &chi, 0, 1.0).unwrap();
        assert!(forced.max_violation_ratio > 1.5);
        let zero = GridFunction::zeros(&g);
        assert_eq!(
            check_size_condition(&zero, &zero, 0, 1.0).unwrap().fitted,
            0.0
        );
    }

    #[test]
    fn majorant_bounds_transform_off_support() {
        let g = Grid::new(2, 4.0, 33).unwrap();
        let f = testfns::haar(&g, 1.0);
        let supp = f.support();
        for j in [1, 2] {
            let k = KernelSpec::Riesz(j);
            let tf = cz_apply(&k, &f).unwrap();
            let maj = size_majorant(&k, &f).unwrap();
            for i in 0..g.len() {
                if !supp.get(i) {
                    assert!(tf.values()[i].abs() <= maj.values()[i] * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn harness_window_and_trivial_operators() {
        let g = Grid::new(1, 16.0, 1025).unwrap();
        let params = AtomParams::minimal(0.5, p2()).unwrap();
        let atoms: Vec<Atom> = (-2..=2)
            .map(|k| haar_atom(&g, 2f64.powi(k), &params).unwrap())
            .collect();
        let herz = HerzParams::homogeneous_for(&g, 0.5, 1.0, p2()).unwrap();
        let zero = operator_atom_harness(&Operator::Zero, &atoms, &herz, 1.0, 4.0).unwrap();
        assert_eq!(zero.sup, 0.0);
        let id = operator_atom_harness(&Operator::Identity, &atoms, &herz, 1.0, 4.0).unwrap();
        assert!(id.pass, "{id:?}");
        let bad = HerzParams::homogeneous_for(&g, 1.6, 1.0, p2()).unwrap();
        assert!(matches!(
            operator_atom_harness(&Operator::Identity, &atoms, &bad, 1.0, 4.0),
            Err(HerzError::Window(_))
        ));
    }

    #[test]
    fn tf_molecule_window() {
        let g = Grid::desk(1).unwrap();
        let params = AtomParams::minimal(0.5, p2()).unwrap();
        let a = haar_atom(&g, 1.0, &params).unwrap();
        for (eps, expect) in [(0.1, true), (0.5, true), (2.0, false)] {
            let mol = MoleculeParams::new(0.5, p2(), 0, eps, false).unwrap();
            let rep = tf_molecule_check(&KernelSpec::Hilbert, &a, &mol).unwrap();
            assert_eq!(rep.pass, expect, "eps {eps}: {rep:?}");
        }
        assert!((molecule_eps_top(&p2(), 1.0) - 1.5).abs() < 1e-15);
    }
}
