//! Maximal operators on grid functions.
//!
//! All scale suprema run over a finite dyadic set `t in {2^j h : j = 0..J}` and all
//! spatial suprema over grid nodes. Convolutions are direct sums; the function is
//! taken to vanish outside the grid.

mod kernel;

pub use kernel::{gaussian_derivative, hermite_e, Profile, SmoothingKernel};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HerzError, Result};
use crate::grid::{Grid, GridFunction, Mask};
use crate::norms::{mixed_lebesgue_norm, ExponentVector};
use kernel::DiscreteKernel;

/// Scales, aperture, decay exponent and kernel family shared by the operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalConfig {
    pub t_set: Vec<f64>,
    /// Aperture `a` of the non-tangential operator.
    pub aperture: f64,
    /// Decay exponent `b` of the auxiliary operator.
    pub decay: f64,
    /// Order `N` of the Schwartz seminorm bounding the grand family.
    pub n_order: usize,
    pub grand_family: Vec<SmoothingKernel>,
    /// Nodes closer than this to the edge of the grid are flagged as truncated.
    pub boundary_margin: f64,
}

impl MaximalConfig {
    /// Default configuration: `J = log2(2R/h)`, `a = 2`, `b = 2`, `N = n + 2`,
    /// boundary margin `R/8`.
    pub fn for_grid(grid: &Grid) -> Result<Self> {
        let j = ((grid.points_per_axis() - 1) as f64).log2().round() as u32;
        Self::with_levels(grid, j)
    }

    /// Like [`MaximalConfig::for_grid`] with `t_set = {2^j h : j = 0..=levels}`.
    pub fn with_levels(grid: &Grid, levels: u32) -> Result<Self> {
        let n_order = grid.dim() + 2;
        let h = grid.spacing();
        Ok(Self {
            t_set: (0..=levels).map(|j| h * 2f64.powi(j as i32)).collect(),
            aperture: 2.0,
            decay: 2.0,
            n_order,
            grand_family: default_grand_family(grid, n_order)?,
            boundary_margin: grid.extent() / 8.0,
        })
    }

    /// Checks the configuration; returns advisory warnings.
    pub fn validate(&self, grid: &Grid) -> Result<Vec<String>> {
        if self.t_set.is_empty() {
            return Err(HerzError::param("t_set", "must be nonempty"));
        }
        if self.t_set.iter().any(|t| !(t.is_finite() && *t > 0.0))
            || self.t_set.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(HerzError::param(
                "t_set",
                "must be positive and strictly ascending",
            ));
        }
        if self.aperture < 1.0 {
            return Err(HerzError::param(
                "a",
                format!("aperture must be >= 1, got {}", self.aperture),
            ));
        }
        if !(self.decay > 0.0) {
            return Err(HerzError::param(
                "b",
                format!("decay must be > 0, got {}", self.decay),
            ));
        }
        let mut warnings = Vec::new();
        let n_req = 2.0 * grid.dim() as f64 + self.decay + 2.0;
        if (self.n_order as f64) <= n_req {
            warnings.push(format!(
                "N = {} does not exceed 2n + b + 2 = {n_req}; equivalence constants are empirical",
                self.n_order
            ));
        }
        Ok(warnings)
    }
}

/// Gaussians with `sigma in {1, 1.5, 2}` and first partial derivatives of those
/// with `sigma in {1.5, 2}`, each scaled to unit `N`-seminorm.
pub fn default_grand_family(grid: &Grid, n_order: usize) -> Result<Vec<SmoothingKernel>> {
    let mut fam = Vec::new();
    for sigma in [1.0, 1.5, 2.0] {
        fam.push(SmoothingKernel::grand_member(grid, sigma, [0, 0], n_order)?);
    }
    for sigma in [1.5, 2.0] {
        fam.push(SmoothingKernel::grand_member(grid, sigma, [1, 0], n_order)?);
        if grid.dim() == 2 {
            fam.push(SmoothingKernel::grand_member(grid, sigma, [0, 1], n_order)?);
        }
    }
    Ok(fam)
}

/// Nodes at least `margin` away from every face of the grid.
pub fn interior_mask(grid: &Grid, margin: f64) -> Mask {
    let lim = grid.extent() - margin;
    Mask::from_fn(grid, |i| {
        let p = grid.point(i);
        p[0].abs() <= lim && p[1].abs() <= lim
    })
}

/// Bounding index box `[lo, hi]` per axis of the nonzero values.
fn nonzero_box(f: &GridFunction) -> Option<[(usize, usize); 2]> {
    let g = f.grid();
    let mut b = [(usize::MAX, 0usize), (usize::MAX, 0usize)];
    let mut any = false;
    for (i, &v) in f.values().iter().enumerate() {
        if v != 0.0 {
            any = true;
            let ix = g.unflatten(i);
            for d in 0..2 {
                b[d].0 = b[d].0.min(ix[d]);
                b[d].1 = b[d].1.max(ix[d]);
            }
        }
    }
    any.then_some(b)
}

/// One-dimensional correlation along an axis: `out[i] = h sum_d src[i - d] k[d + half]`,
/// restricted to source indices in `[lo, hi]`.
#[inline]
fn conv_line(
    out_i: usize,
    half: usize,
    k: &[f64],
    lo: usize,
    hi: usize,
    src: impl Fn(usize) -> f64,
) -> f64 {
    let jlo = lo.max(out_i.saturating_sub(half));
    let jhi = hi.min(out_i + half);
    let mut s = 0.0;
    for j in jlo..=jhi {
        // offset d = i - j in [-half, half]
        let idx = out_i + half - j;
        s += src(j) * k[idx];
    }
    s
}

/// `(f * phi_t)` at every node.
pub(crate) fn convolve(f: &GridFunction, k: &DiscreteKernel) -> Vec<f64> {
    let g = f.grid();
    let m = g.points_per_axis();
    let h = g.spacing();
    let vals = f.values();
    let Some(bx) = nonzero_box(f) else {
        return vec![0.0; g.len()];
    };
    match (g.dim(), k) {
        (1, DiscreteKernel::Separable { half, f0, .. }) => (0..m)
            .into_par_iter()
            .map(|i| h * conv_line(i, *half, f0, bx[0].0, bx[0].1, |j| vals[j]))
            .collect(),
        (_, DiscreteKernel::Separable { half, f0, f1 }) => {
            // Axis 0 (stride m) first, then axis 1, restricted to the support box.
            let (jlo, jhi) = bx[1];
            let tmp: Vec<f64> = (0..m)
                .into_par_iter()
                .flat_map_iter(|i| {
                    (0..m).map(move |j| {
                        if j < jlo || j > jhi {
                            0.0
                        } else {
                            h * conv_line(i, *half, f0, bx[0].0, bx[0].1, |r| vals[r * m + j])
                        }
                    })
                })
                .collect();
            (0..m)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let row = &tmp[i * m..(i + 1) * m];
                    (0..m).map(move |j| h * conv_line(j, *half, f1, jlo, jhi, |c| row[c]))
                })
                .collect()
        }
        (_, DiscreteKernel::Full { half, vals: kv }) => {
            let half = *half;
            let w = 2 * half + 1;
            let h2 = h * h;
            (0..m)
                .into_par_iter()
                .flat_map_iter(|i| {
                    (0..m).map(move |j| {
                        let ilo = bx[0].0.max(i.saturating_sub(half));
                        let ihi = bx[0].1.min(i + half);
                        let jlo = bx[1].0.max(j.saturating_sub(half));
                        let jhi = bx[1].1.min(j + half);
                        let mut s = 0.0;
                        for r in ilo..=ihi {
                            let a = i + half - r;
                            for c in jlo..=jhi {
                                let b = j + half - c;
                                s += vals[r * m + c] * kv[a * w + b];
                            }
                        }
                        s * h2
                    })
                })
                .collect()
        }
    }
}

fn check_t_set(cfg: &MaximalConfig) -> Result<()> {
    if cfg.t_set.is_empty() {
        return Err(HerzError::param("t_set", "must be nonempty"));
    }
    Ok(())
}

/// `|f * phi_t|` for each `t` in the configured scale set.
fn smoothed_abs(f: &GridFunction, phi: &SmoothingKernel, cfg: &MaximalConfig) -> Vec<Vec<f64>> {
    cfg.t_set
        .iter()
        .map(|&t| {
            let k = phi.discretize(f.grid(), t);
            convolve(f, &k).into_iter().map(f64::abs).collect()
        })
        .collect()
}

/// `sup_t |f * phi_t|(x)`.
pub fn smooth_maximal(
    f: &GridFunction,
    phi: &SmoothingKernel,
    cfg: &MaximalConfig,
) -> Result<GridFunction> {
    check_t_set(cfg)?;
    if !phi.unit_mass {
        return Err(HerzError::param(
            "phi",
            "the smooth maximal operator needs a unit-mass kernel",
        ));
    }
    let mut out = vec![0.0f64; f.grid().len()];
    for u in smoothed_abs(f, phi, cfg) {
        for (o, v) in out.iter_mut().zip(u) {
            *o = o.max(v);
        }
    }
    Ok(GridFunction::from_vec_unchecked(*f.grid(), out))
}

/// Largest integer `d >= 0` with `d * h < radius`.
fn strict_steps(h: f64, radius: f64) -> usize {
    let mut d = (radius / h).floor().max(0.0) as usize;
    while d > 0 && d as f64 * h >= radius {
        d -= 1;
    }
    d
}

/// Centered running maximum with half-width `w` along a line of length `n`.
fn sliding_max(src: &[f64], w: usize) -> Vec<f64> {
    let n = src.len();
    if w == 0 {
        return src.to_vec();
    }
    if w >= n - 1 {
        let mx = src.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        return vec![mx; n];
    }
    let mut out = vec![0.0f64; n];
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut next = 0usize;
    for (i, o) in out.iter_mut().enumerate() {
        let hi = (i + w).min(n - 1);
        while next <= hi {
            while let Some(&b) = dq.back() {
                if src[b] <= src[next] {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(w);
        while let Some(&f) = dq.front() {
            if f < lo {
                dq.pop_front();
            } else {
                break;
            }
        }
        *o = src[*dq.front().expect("window is nonempty")];
    }
    out
}

/// Maximum of `u` over nodes `y` with `|x - y| < radius`.
fn disk_max(grid: &Grid, u: &[f64], radius: f64) -> Vec<f64> {
    let h = grid.spacing();
    let m = grid.points_per_axis();
    if grid.dim() == 1 {
        return sliding_max(u, strict_steps(h, radius).min(m - 1));
    }
    let wmax = strict_steps(h, radius).min(m - 1);
    let r2 = radius * radius;
    // Row half-widths for each row offset.
    let widths: Vec<usize> = (0..=wmax)
        .map(|di| {
            let mut w = wmax;
            let dy = di as f64 * h;
            loop {
                let dx = w as f64 * h;
                if dx * dx + dy * dy < r2 || w == 0 {
                    break;
                }
                w -= 1;
            }
            w
        })
        .collect();
    let mut cache: std::collections::BTreeMap<usize, Vec<f64>> = std::collections::BTreeMap::new();
    for &w in &widths {
        cache.entry(w).or_insert_with(|| {
            (0..m)
                .into_par_iter()
                .flat_map_iter(|i| sliding_max(&u[i * m..(i + 1) * m], w))
                .collect()
        });
    }
    (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let widths = &widths;
            let cache = &cache;
            (0..m).map(move |j| {
                let mut best = f64::NEG_INFINITY;
                for (di, &w) in widths.iter().enumerate() {
                    // Row 0 is included with any radius > 0.
                    let rows = if di == 0 {
                        [Some(i), None]
                    } else {
                        [i.checked_sub(di), Some(i + di).filter(|&r| r < m)]
                    };
                    let rm = &cache[&w];
                    for r in rows.into_iter().flatten() {
                        best = best.max(rm[r * m + j]);
                    }
                }
                best
            })
        })
        .collect()
}

/// `sup_t sup_{|x - y| < a t} |f * phi_t|(y)`.
pub fn nontangential_maximal(
    f: &GridFunction,
    phi: &SmoothingKernel,
    a: f64,
    cfg: &MaximalConfig,
) -> Result<GridFunction> {
    check_t_set(cfg)?;
    if !(a >= 1.0) {
        return Err(HerzError::param(
            "a",
            format!("aperture must be >= 1, got {a}"),
        ));
    }
    let grid = *f.grid();
    let mut out = vec![0.0f64; grid.len()];
    for (u, &t) in smoothed_abs(f, phi, cfg).iter().zip(&cfg.t_set) {
        let w = disk_max(&grid, u, a * t);
        for (o, v) in out.iter_mut().zip(w) {
            *o = o.max(v);
        }
    }
    Ok(GridFunction::from_vec_unchecked(grid, out))
}

/// All grid offsets sorted by length, with their lengths.
fn sorted_offsets(grid: &Grid) -> Vec<([i64; 2], f64)> {
    let m = grid.points_per_axis() as i64;
    let h = grid.spacing();
    let mut offs: Vec<([i64; 2], i64)> = if grid.dim() == 1 {
        (-(m - 1)..m).map(|d| ([d, 0], d * d)).collect()
    } else {
        let mut v = Vec::with_capacity(((2 * m - 1) * (2 * m - 1)) as usize);
        for a in -(m - 1)..m {
            for b in -(m - 1)..m {
                v.push(([a, b], a * a + b * b));
            }
        }
        v
    };
    offs.sort_by_key(|&(o, d2)| (d2, o));
    offs.into_iter()
        .map(|(o, d2)| (o, (d2 as f64).sqrt() * h))
        .collect()
}

/// `sup_{t, y} |f * phi_t|(y) (t / (|x - y| + t))^b`.
pub fn auxiliary_maximal(
    f: &GridFunction,
    phi: &SmoothingKernel,
    b: f64,
    cfg: &MaximalConfig,
) -> Result<GridFunction> {
    check_t_set(cfg)?;
    if !(b > 0.0) {
        return Err(HerzError::param("b", format!("decay must be > 0, got {b}")));
    }
    let grid = *f.grid();
    let m = grid.points_per_axis() as i64;
    let dim = grid.dim();
    let offs = sorted_offsets(&grid);
    let mut best = vec![0.0f64; grid.len()];
    for (u, &t) in smoothed_abs(f, phi, cfg).iter().zip(&cfg.t_set) {
        let umax = u.iter().fold(0.0f64, |a, &v| a.max(v));
        if umax == 0.0 {
            continue;
        }
        let weights: Vec<f64> = offs.iter().map(|&(_, d)| (t / (d + t)).powf(b)).collect();
        best.par_iter_mut().enumerate().for_each(|(x, bx)| {
            let xi = grid.unflatten(x);
            for ((o, _), &w) in offs.iter().zip(&weights) {
                if umax * w <= *bx {
                    break;
                }
                let r = xi[0] as i64 + o[0];
                let c = xi[1] as i64 + o[1];
                if r < 0 || r >= m || (dim == 2 && (c < 0 || c >= m)) {
                    continue;
                }
                let y = if dim == 1 {
                    r as usize
                } else {
                    (r * m + c) as usize
                };
                let v = u[y] * w;
                if v > *bx {
                    *bx = v;
                }
            }
        });
    }
    Ok(GridFunction::from_vec_unchecked(grid, best))
}

/// Rejects family members whose `N`-seminorm exceeds 1 at the nodes of `grid`.
pub fn check_grand_family(grid: &Grid, cfg: &MaximalConfig) -> Result<()> {
    if cfg.grand_family.is_empty() {
        return Err(HerzError::param("grand_family", "must be nonempty"));
    }
    for k in &cfg.grand_family {
        let s = k.schwartz_seminorm(grid, cfg.n_order)?;
        if s > 1.0 + 1e-12 {
            return Err(HerzError::param(
                "grand_family",
                format!("member {} has seminorm {s} > 1", k.label()),
            ));
        }
    }
    Ok(())
}

/// Pointwise maximum over the grand family of the aperture-1 non-tangential operator.
pub fn grand_maximal(f: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    check_grand_family(f.grid(), cfg)?;
    let mut out = vec![0.0f64; f.grid().len()];
    for k in &cfg.grand_family {
        let v = nontangential_maximal(f, k, 1.0, cfg)?;
        for (o, &x) in out.iter_mut().zip(v.values()) {
            *o = o.max(x);
        }
    }
    Ok(GridFunction::from_vec_unchecked(*f.grid(), out))
}

/// Centered Hardy–Littlewood maximal function: the largest node-average of `|f|` over
/// `B(x, r)` restricted to the grid, for `r in {h, 2h, .., 2R}`.
pub fn hl_maximal(f: &GridFunction) -> GridFunction {
    let grid = *f.grid();
    let m = grid.points_per_axis();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let kmax = m - 1;
    if grid.dim() == 1 {
        let mut prefix = vec![0.0; m + 1];
        for i in 0..m {
            prefix[i + 1] = prefix[i] + abs[i];
        }
        let out = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut best = 0.0f64;
                for k in 1..=kmax {
                    let lo = i.saturating_sub(k);
                    let hi = (i + k).min(m - 1);
                    let mean = (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64;
                    best = best.max(mean);
                }
                best
            })
            .collect();
        return GridFunction::from_vec_unchecked(grid, out);
    }
    let offs: Vec<([i64; 2], i64)> = {
        let mut v = Vec::new();
        let lim = kmax as i64;
        for a in -lim..=lim {
            for b in -lim..=lim {
                if a * a + b * b <= lim * lim {
                    v.push(([a, b], a * a + b * b));
                }
            }
        }
        v.sort_by_key(|&(o, d2)| (d2, o));
        v
    };
    let mi = m as i64;
    let out = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let xi = grid.unflatten(x);
            let (mut sum, mut cnt) = (0.0, 0usize);
            let mut best = 0.0f64;
            let mut ptr = 0;
            for k in 1..=kmax as i64 {
                while ptr < offs.len() && offs[ptr].1 <= k * k {
                    let (o, _) = offs[ptr];
                    let r = xi[0] as i64 + o[0];
                    let c = xi[1] as i64 + o[1];
                    if r >= 0 && r < mi && c >= 0 && c < mi {
                        sum += abs[(r * mi + c) as usize];
                        cnt += 1;
                    }
                    ptr += 1;
                }
                if cnt > 0 {
                    best = best.max(sum / cnt as f64);
                }
            }
            best
        })
        .collect();
    GridFunction::from_vec_unchecked(grid, out)
}

/// Ratio of two maximal images in the mixed norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    pub numerator: String,
    pub denominator: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalEquivalenceReport {
    pub smooth_norm: f64,
    pub nontangential_norm: f64,
    pub auxiliary_norm: f64,
    pub grand_norm: f64,
    pub f_norm: f64,
    pub ratios: Vec<PairRatio>,
    /// Largest `max(r, 1/r)` over the pairwise ratios.
    pub max_pair_factor: f64,
    /// `||M_N f|| / ||f||`.
    pub operator_norm: f64,
    pub aperture: f64,
    pub decay: f64,
    pub n_order: usize,
    pub levels: usize,
    pub interior_nodes: usize,
    pub warnings: Vec<String>,
}

/// Mixed norms over interior nodes of the four maximal images and their pairwise ratios.
pub fn maximal_equivalence_report(
    f: &GridFunction,
    phi: &SmoothingKernel,
    p: &ExponentVector,
    cfg: &MaximalConfig,
) -> Result<MaximalEquivalenceReport> {
    let grid = f.grid();
    let warnings = cfg.validate(grid)?;
    let interior = interior_mask(grid, cfg.boundary_margin);
    let sm = smooth_maximal(f, phi, cfg)?;
    let nt = nontangential_maximal(f, phi, cfg.aperture, cfg)?;
    let aux = auxiliary_maximal(f, phi, cfg.decay, cfg)?;
    let gr = grand_maximal(f, cfg)?;
    let norms: Vec<(&str, f64)> = vec![
        ("smooth", mixed_lebesgue_norm(&sm, p, Some(&interior))?),
        (
            "nontangential",
            mixed_lebesgue_norm(&nt, p, Some(&interior))?,
        ),
        ("auxiliary", mixed_lebesgue_norm(&aux, p, Some(&interior))?),
        ("grand", mixed_lebesgue_norm(&gr, p, Some(&interior))?),
    ];
    let mut ratios = Vec::new();
    let mut max_pair_factor = 1.0f64;
    for i in 0..norms.len() {
        for j in (i + 1)..norms.len() {
            let (a, b) = (norms[i].1, norms[j].1);
            let ratio = if a == 0.0 && b == 0.0 { 1.0 } else { a / b };
            let factor = if ratio == 0.0 {
                f64::INFINITY
            } else {
                ratio.max(1.0 / ratio)
            };
            max_pair_factor = max_pair_factor.max(factor);
            ratios.push(PairRatio {
                numerator: norms[i].0.into(),
                denominator: norms[j].0.into(),
                ratio,
            });
        }
    }
    let f_norm = mixed_lebesgue_norm(f, p, None)?;
    let operator_norm = if f_norm == 0.0 {
        1.0
    } else {
        norms[3].1 / f_norm
    };
    Ok(MaximalEquivalenceReport {
        smooth_norm: norms[0].1,
        nontangential_norm: norms[1].1,
        auxiliary_norm: norms[2].1,
        grand_norm: norms[3].1,
        f_norm,
        ratios,
        max_pair_factor,
        operator_norm,
        aperture: cfg.aperture,
        decay: cfg.decay,
        n_order: cfg.n_order,
        levels: cfg.t_set.len().saturating_sub(1),
        interior_nodes: interior.count(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sliding_max_matches_brute_force() {
        let src: Vec<f64> = (0..37).map(|i| ((i * 7919) % 23) as f64).collect();
        for w in [0, 1, 3, 10, 36, 50] {
            let fast = sliding_max(&src, w);
            for i in 0..src.len() {
                let lo = i.saturating_sub(w);
                let hi = (i + w).min(src.len() - 1);
                let brute = src[lo..=hi].iter().fold(f64::MIN, |a, &b| a.max(b));
                assert_eq!(fast[i], brute);
            }
        }
    }

    #[test]
    fn strict_steps_are_strict() {
        assert_eq!(strict_steps(0.5, 1.0), 1);
        assert_eq!(strict_steps(0.5, 1.01), 2);
        assert_eq!(strict_steps(0.5, 0.4), 0);
    }

    #[test]
    fn disk_max_two_dimensional_brute_force() {
        let g = Grid::new(2, 1.0, 9).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|i| ((i * 31) % 17) as f64).collect();
        for radius in [0.2, 0.25, 0.3, 0.6, 3.0] {
            let fast = disk_max(&g, &u, radius);
            for x in 0..g.len() {
                let px = g.point(x);
                let mut best = f64::MIN;
                for y in 0..g.len() {
                    let py = g.point(y);
                    let d = ((px[0] - py[0]).powi(2) + (px[1] - py[1]).powi(2)).sqrt();
                    if d < radius {
                        best = best.max(u[y]);
                    }
                }
                assert_eq!(fast[x], best, "radius {radius} node {x}");
            }
        }
    }

    #[test]
    fn convolution_of_constant_interior() {
        let g = Grid::new(1, 8.0, 257).unwrap();
        let f = GridFunction::from_fn(&g, |p| if p[0].abs() <= 4.0 { 1.0 } else { 0.0 });
        let k = SmoothingKernel::bump().discretize(&g, 1.0);
        let c = convolve(&f, &k);
        assert!((c[g.origin()] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spike_matches_exhaustive_scale_scan() {
        let g = Grid::new(1, 4.0, 257).unwrap();
        let h = g.spacing();
        let c = g.center_index();
        let mut f = GridFunction::zeros(&g);
        f.values_mut()[c] = 1.0 / h;
        let cfg = MaximalConfig::with_levels(&g, 6).unwrap();
        let phi = SmoothingKernel::gaussian(1.0);
        let m = smooth_maximal(&f, &phi, &cfg).unwrap();
        for off in [1usize, 5, 17, 60] {
            let mut brute = 0.0f64;
            for &t in &cfg.t_set {
                if let DiscreteKernel::Separable { half, f0, .. } = phi.discretize(&g, t) {
                    if off <= half {
                        brute = brute.max((h * (f.values()[c] * f0[half - off])).abs());
                    }
                }
            }
            assert!(
                (m.values()[c + off] - brute).abs() <= 1e-15 * brute,
                "offset {off}"
            );
        }
    }

    #[test]
    fn plateau_lower_bound_for_grand_maximal() {
        let g = Grid::new(1, 8.0, 513).unwrap();
        let cfg = MaximalConfig::with_levels(&g, 4).unwrap();
        let c = 1.5;
        let f = GridFunction::from_fn(&g, |x| if x[0].abs() <= 4.0 { c } else { 0.0 });
        let mn = grand_maximal(&f, &cfg).unwrap();
        let h = g.spacing();
        let best = cfg
            .grand_family
            .iter()
            .map(|k| match k.discretize(&g, cfg.t_set[0]) {
                DiscreteKernel::Separable { f0, .. } => (f0.iter().sum::<f64>() * h).abs(),
                DiscreteKernel::Full { vals, .. } => (vals.iter().sum::<f64>() * h * h).abs(),
            })
            .fold(0.0, f64::max);
        assert!(best > 0.0);
        assert!(mn.values()[g.origin()] >= c * best * (1.0 - 1e-12));
    }
}
