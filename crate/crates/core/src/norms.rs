//! Mixed Lebesgue norms and mixed Herz norms.

use serde::{Deserialize, Serialize};

use crate::dyadic::{self, pow2};
use crate::error::{HerzError, Result};
use crate::grid::{Grid, GridFunction, Mask};

/// Per-axis integrability exponents `(p_1, .., p_n)` with `1 < p_i < inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentVector {
    p: Vec<f64>,
}

impl ExponentVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() > 2 {
            return Err(HerzError::param(
                "p",
                format!("expected 1 or 2 exponents, got {}", p.len()),
            ));
        }
        for &pi in &p {
            if !(pi.is_finite() && pi > 1.0) {
                return Err(HerzError::param(
                    "p",
                    format!("each exponent must satisfy 1 < p < inf, got {pi}"),
                ));
            }
        }
        Ok(Self { p })
    }

    /// The same exponent on every axis.
    pub fn uniform(dim: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; dim])
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn conjugate(&self) -> ExponentVector {
        ExponentVector {
            p: self.p.iter().map(|&p| p / (p - 1.0)).collect(),
        }
    }

    /// `sum_i 1/p_i`.
    pub fn sum_inv(&self) -> f64 {
        self.p.iter().map(|p| 1.0 / p).sum()
    }

    /// `sum_i 1/p'_i = n - sum_i 1/p_i`.
    pub fn sum_inv_conjugate(&self) -> f64 {
        self.p.iter().map(|p| 1.0 - 1.0 / p).sum()
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.dim() == grid.dim() {
            Ok(())
        } else {
            Err(HerzError::param(
                "p",
                format!("{} exponents given for a {}-D grid", self.dim(), grid.dim()),
            ))
        }
    }
}

/// Parameters of a mixed Herz norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerzParams {
    pub alpha: f64,
    pub q: f64,
    pub p: ExponentVector,
    pub homogeneous: bool,
    pub k_min: i32,
    pub k_max: i32,
}

impl HerzParams {
    pub fn new(
        alpha: f64,
        q: f64,
        p: ExponentVector,
        homogeneous: bool,
        k_min: i32,
        k_max: i32,
    ) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(HerzError::param(
                "q",
                format!("must satisfy 0 < q < inf, got {q}"),
            ));
        }
        if !alpha.is_finite() {
            return Err(HerzError::param("alpha", "must be finite"));
        }
        if k_min > k_max {
            return Err(HerzError::ShellRange {
                k_min,
                k_max,
                reason: "empty shell range".into(),
            });
        }
        Ok(Self {
            alpha,
            q,
            p,
            homogeneous,
            k_min,
            k_max,
        })
    }

    /// Homogeneous parameters with shells `-10..=floor(log2 R)`.
    pub fn homogeneous_for(grid: &Grid, alpha: f64, q: f64, p: ExponentVector) -> Result<Self> {
        Self::new(alpha, q, p, true, -10, dyadic::default_k_max(grid))
    }

    pub fn with_homogeneous(&self, homogeneous: bool) -> Self {
        Self {
            homogeneous,
            ..self.clone()
        }
    }
}

/// Iterated mixed norm with `x_1` innermost; nodes outside `mask` contribute 0.
pub fn mixed_lebesgue_norm(
    f: &GridFunction,
    p: &ExponentVector,
    mask: Option<&Mask>,
) -> Result<f64> {
    let grid = f.grid();
    p.check_grid(grid)?;
    if let Some(m) = mask {
        if m.len() != grid.len() {
            return Err(HerzError::GridMismatch(format!(
                "mask has {} entries, grid has {}",
                m.len(),
                grid.len()
            )));
        }
    }
    let keep = |i: usize| mask.is_none_or(|m| m.get(i));
    let scale = f
        .values()
        .iter()
        .enumerate()
        .filter(|&(i, _)| keep(i))
        .fold(0.0f64, |acc, (_, v)| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let h = grid.spacing();
    let m = grid.points_per_axis();
    let vals = f.values();
    let ps = p.as_slice();
    let norm = match grid.dim() {
        1 => {
            let p1 = ps[0];
            let s: f64 = (0..m)
                .filter(|&i| keep(i))
                .map(|i| (vals[i].abs() / scale).powf(p1))
                .sum();
            (s * h).powf(1.0 / p1)
        }
        _ => {
            let (p1, p2) = (ps[0], ps[1]);
            let mut outer = 0.0;
            for j in 0..m {
                let mut inner = 0.0;
                for i in 0..m {
                    let idx = i * m + j;
                    if keep(idx) {
                        inner += (vals[idx].abs() / scale).powf(p1);
                    }
                }
                if inner > 0.0 {
                    outer += (inner * h).powf(p2 / p1);
                }
            }
            (outer * h).powf(1.0 / p2)
        }
    };
    Ok(norm * scale)
}

/// Mixed norm of `f` restricted to every dyadic block used by the Herz sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerzTerm {
    pub k: i32,
    pub block_norm: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerzNormReport {
    pub norm: f64,
    pub terms: Vec<HerzTerm>,
    /// `||f chi_{B_{k_min - 1}}||` weighted by `2^{(k_min - 1) alpha}`: an estimate of the
    /// homogeneous terms dropped below `k_min` (zero in the non-homogeneous case).
    pub inner_tail: f64,
    /// Mixed norm of `f` on nodes beyond `2^{k_max}` that the sum does not see.
    pub outer_mass: f64,
}

/// `(sum_k 2^{k alpha q} ||f chi_k||^q)^{1/q}` over the configured shells.
pub fn herz_norm(f: &GridFunction, params: &HerzParams) -> Result<f64> {
    Ok(herz_norm_report(f, params)?.norm)
}

pub fn herz_norm_report(f: &GridFunction, params: &HerzParams) -> Result<HerzNormReport> {
    let grid = f.grid();
    params.p.check_grid(grid)?;
    dyadic::check_shell_range(grid, params.k_min, params.k_max)?;
    let shells = dyadic::shell_indices(grid);
    let k_lo = if params.homogeneous { params.k_min } else { 0 };
    let k_hi = params.k_max;
    let block = |k: i32| -> Mask {
        if !params.homogeneous && k == 0 {
            Mask::ball(grid, 1.0)
        } else {
            Mask(shells.iter().map(|&s| s == Some(k)).collect())
        }
    };
    let mut terms = Vec::new();
    let mut acc = 0.0;
    if k_lo <= k_hi {
        for k in k_lo..=k_hi {
            let block_norm = mixed_lebesgue_norm(f, &params.p, Some(&block(k)))?;
            let weighted = pow2(k).powf(params.alpha) * block_norm;
            acc += weighted.powf(params.q);
            terms.push(HerzTerm {
                k,
                block_norm,
                weighted,
            });
        }
    }
    let inner_tail = if params.homogeneous {
        let inner = Mask::ball(grid, pow2(params.k_min - 1));
        pow2(params.k_min - 1).powf(params.alpha) * mixed_lebesgue_norm(f, &params.p, Some(&inner))?
    } else {
        0.0
    };
    let outer = Mask::ball(grid, pow2(params.k_max)).not();
    let outer_mass = mixed_lebesgue_norm(f, &params.p, Some(&outer))?;
    Ok(HerzNormReport {
        norm: if acc > 0.0 {
            acc.powf(1.0 / params.q)
        } else {
            0.0
        },
        terms,
        inner_tail,
        outer_mass,
    })
}

/// Comparison of the non-homogeneous norm with `||f||_{K-dot} + ||f||_{L^p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormIdentityReport {
    #[serde(rename = "K_norm")]
    pub k_norm: f64,
    #[serde(rename = "Kdot_norm")]
    pub kdot_norm: f64,
    #[serde(rename = "Lp_norm")]
    pub lp_norm: f64,
    /// `(Kdot_norm + Lp_norm) / K_norm`, defined as 1 when everything vanishes.
    pub ratio: f64,
}

impl NormIdentityReport {
    /// `max(ratio, 1/ratio)`.
    pub fn two_sided_factor(&self) -> f64 {
        if self.ratio == 0.0 || !self.ratio.is_finite() {
            f64::INFINITY
        } else {
            self.ratio.max(1.0 / self.ratio)
        }
    }
}

pub fn norm_identity_check(f: &GridFunction, params: &HerzParams) -> Result<NormIdentityReport> {
    let k_norm = herz_norm(f, &params.with_homogeneous(false))?;
    let kdot_norm = herz_norm(f, &params.with_homogeneous(true))?;
    let lp_norm = mixed_lebesgue_norm(f, &params.p, None)?;
    let ratio = if k_norm == 0.0 && kdot_norm + lp_norm == 0.0 {
        1.0
    } else if k_norm == 0.0 {
        f64::INFINITY
    } else {
        (kdot_norm + lp_norm) / k_norm
    };
    Ok(NormIdentityReport {
        k_norm,
        kdot_norm,
        lp_norm,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn ind(grid: &Grid, pred: impl Fn(f64) -> bool) -> GridFunction {
        GridFunction::from_fn(grid, |p| if pred(p[0]) { 1.0 } else { 0.0 })
    }

    #[test]
    fn exponent_vector_validation() {
        assert!(ExponentVector::new(vec![1.0]).is_err());
        assert!(ExponentVector::new(vec![f64::INFINITY]).is_err());
        assert!(ExponentVector::new(vec![]).is_err());
        let p = ExponentVector::new(vec![2.0, 3.0]).unwrap();
        let c = p.conjugate();
        for (a, b) in p.as_slice().iter().zip(c.as_slice()) {
            assert!((1.0 / a + 1.0 / b - 1.0).abs() < 1e-15);
        }
        assert!((p.sum_inv() + p.sum_inv_conjugate() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn herz_single_shell() {
        let g = Grid::desk(1).unwrap();
        let p = ExponentVector::uniform(1, 2.0).unwrap();
        let a0 = ind(&g, |x| x.abs() > 0.5 && x.abs() <= 1.0);
        for (alpha, q) in [(0.5, 1.0), (1.3, 2.5), (-0.2, 0.7)] {
            let hp = HerzParams::homogeneous_for(&g, alpha, q, p.clone()).unwrap();
            let v = herz_norm(&a0, &hp).unwrap();
            assert!((v - 1.0).abs() <= g.spacing(), "{v}");
        }
    }

    #[test]
    fn herz_two_shells() {
        let g = Grid::desk(1).unwrap();
        let p = ExponentVector::uniform(1, 2.0).unwrap();
        let f = ind(&g, |x| x.abs() > 1.0 && x.abs() <= 4.0);
        let hp = HerzParams::homogeneous_for(&g, 0.5, 1.0, p).unwrap();
        // term_k = 2^{k/2} |A_k|^{1/2} = 2^k.
        let v = herz_norm(&f, &hp).unwrap();
        assert!((v - 6.0).abs() <= 8.0 * g.spacing(), "{v}");
    }

    #[test]
    fn herz_rejects_bad_inputs() {
        let g = Grid::new(1, 4.0, 65).unwrap();
        let p = ExponentVector::uniform(1, 2.0).unwrap();
        assert!(HerzParams::new(0.0, 0.0, p.clone(), true, 0, 1).is_err());
        let hp = HerzParams::new(0.0, 1.0, p.clone(), true, 0, 3).unwrap();
        assert!(herz_norm(&GridFunction::zeros(&g), &hp).is_err());
        let hp = HerzParams::new(0.0, 1.0, p, true, -3, 2).unwrap();
        assert_eq!(herz_norm(&GridFunction::zeros(&g), &hp).unwrap(), 0.0);
    }

    #[test]
    fn identity_examples() {
        let g = Grid::desk(1).unwrap();
        let p = ExponentVector::uniform(1, 2.0).unwrap();
        let hp = HerzParams::homogeneous_for(&g, 0.0, 2.0, p).unwrap();
        let f = ind(&g, |x| x.abs() <= 1.0);
        let r = norm_identity_check(&f, &hp).unwrap();
        let s2 = 2f64.sqrt();
        assert!((r.kdot_norm - s2).abs() < 0.01, "{r:?}");
        assert!((r.lp_norm - s2).abs() < 0.01);
        assert!((r.k_norm - s2).abs() < 0.01);
        assert!((r.ratio - 2.0).abs() < 0.01);

        let z = norm_identity_check(&GridFunction::zeros(&g), &hp).unwrap();
        assert_eq!(
            (z.k_norm, z.kdot_norm, z.lp_norm, z.ratio),
            (0.0, 0.0, 0.0, 1.0)
        );

        let a3 = ind(&g, |x| x.abs() > 4.0 && x.abs() <= 8.0);
        let hp =
            HerzParams::homogeneous_for(&g, 0.7, 1.5, ExponentVector::uniform(1, 3.0).unwrap())
                .unwrap();
        let r = norm_identity_check(&a3, &hp).unwrap();
        let term = 8f64.powf(0.7) * mixed_lebesgue_norm(&a3, &hp.p, None).unwrap();
        assert!((r.k_norm - term).abs() <= 1e-12 * term);
        assert!((r.kdot_norm - term).abs() <= 1e-12 * term);
    }

    #[test]
    fn report_records_truncation() {
        let g = Grid::desk(1).unwrap();
        let p = ExponentVector::uniform(1, 2.0).unwrap();
        let hp = HerzParams::new(0.5, 1.0, p, true, -2, 2).unwrap();
        let f = ind(&g, |x| x.abs() <= 8.0);
        let r = herz_norm_report(&f, &hp).unwrap();
        assert!(r.inner_tail > 0.0);
        assert!(r.outer_mass > 0.0);
        assert_eq!(r.terms.len(), 5);
    }
}
