//! Dyadic balls `B_k = {|x| <= 2^k}`, shells `A_k = B_k \ B_{k-1}` and fattened
//! shells `2^k (1/2 - eps) <= |x| <= 2^k (1 + eps)` on a grid.
//!
//! Membership is decided on squared norms against powers of two, so node
//! classification is exact whenever the spacing is dyadic.

use crate::error::{HerzError, Result};
use crate::grid::{Grid, Mask};

/// `2^k` as an exact power of two.
#[inline]
pub fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

/// The unique `k` with `4^(k-1) < r2 <= 4^k`, i.e. the shell `A_k` containing a
/// point with squared norm `r2`. Returns `None` at the origin.
pub fn shell_of_norm_sq(r2: f64) -> Option<i32> {
    if r2 <= 0.0 {
        return None;
    }
    let mut k = (r2.log2() / 2.0).ceil() as i32;
    while r2 > pow2(2 * k) {
        k += 1;
    }
    while r2 <= pow2(2 * k - 2) {
        k -= 1;
    }
    Some(k)
}

/// Largest `k` with `2^k <= extent`.
pub fn default_k_max(grid: &Grid) -> i32 {
    let mut k = grid.extent().log2().floor() as i32;
    while pow2(k + 1) <= grid.extent() {
        k += 1;
    }
    while pow2(k) > grid.extent() {
        k -= 1;
    }
    k
}

/// Shell index of every node (`None` for the origin).
pub fn shell_indices(grid: &Grid) -> Vec<Option<i32>> {
    (0..grid.len())
        .map(|i| shell_of_norm_sq(grid.norm_sq(i)))
        .collect()
}

/// Dyadic masks for a fixed shell range and fattening parameter.
#[derive(Debug, Clone)]
pub struct DyadicGeometry {
    grid: Grid,
    k_min: i32,
    k_max: i32,
    eps: f64,
    shells: Vec<Option<i32>>,
}

/// Builds the dyadic geometry for shells `k_min..=k_max`.
pub fn dyadic_masks(grid: &Grid, k_min: i32, k_max: i32, eps: f64) -> Result<DyadicGeometry> {
    DyadicGeometry::new(grid, k_min, k_max, eps)
}

impl DyadicGeometry {
    pub fn new(grid: &Grid, k_min: i32, k_max: i32, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(HerzError::param(
                "eps",
                format!("must lie in (0, 1/4), got {eps}"),
            ));
        }
        check_shell_range(grid, k_min, k_max)?;
        Ok(Self {
            grid: *grid,
            k_min,
            k_max,
            eps,
            shells: shell_indices(grid),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn shells(&self) -> std::ops::RangeInclusive<i32> {
        self.k_min..=self.k_max
    }

    /// Shell index of node `i`.
    pub fn shell_of(&self, i: usize) -> Option<i32> {
        self.shells[i]
    }

    /// `B_k`.
    pub fn ball(&self, k: i32) -> Mask {
        Mask::ball(&self.grid, pow2(k))
    }

    /// `A_k`, i.e. `chi_k`.
    pub fn annulus(&self, k: i32) -> Mask {
        Mask(self.shells.iter().map(|&s| s == Some(k)).collect())
    }

    /// Non-homogeneous blocks: `B_0` for `k = 0`, `A_k` for `k >= 1`.
    pub fn chi_tilde(&self, k: i32) -> Mask {
        if k == 0 {
            self.ball(0)
        } else {
            self.annulus(k)
        }
    }

    /// Fattened shell `2^k (1/2 - eps) <= |x| <= 2^k (1 + eps)`.
    pub fn fattened(&self, k: i32) -> Mask {
        fattened_annulus(&self.grid, k, self.eps)
    }

    /// `B_{k_max} \ B_{k_min - 1}`, the union of the covered shells.
    pub fn covered(&self) -> Mask {
        let (lo, hi) = (self.k_min, self.k_max);
        Mask(
            self.shells
                .iter()
                .map(|s| matches!(s, Some(k) if (lo..=hi).contains(k)))
                .collect(),
        )
    }
}

/// Closed fattened shell `2^k (1/2 - eps) <= |x| <= 2^k (1 + eps)`.
pub fn fattened_annulus(grid: &Grid, k: i32, eps: f64) -> Mask {
    let lo = pow2(k) * (0.5 - eps);
    let hi = pow2(k) * (1.0 + eps);
    let (lo2, hi2) = (lo * lo, hi * hi);
    Mask::from_fn(grid, |i| {
        let r2 = grid.norm_sq(i);
        r2 >= lo2 && r2 <= hi2
    })
}

pub(crate) fn check_shell_range(grid: &Grid, k_min: i32, k_max: i32) -> Result<()> {
    if k_min > k_max {
        return Err(HerzError::ShellRange {
            k_min,
            k_max,
            reason: "k_min exceeds k_max".into(),
        });
    }
    if pow2(k_max) > grid.extent() {
        return Err(HerzError::ShellRange {
            k_min,
            k_max,
            reason: format!(
                "2^k_max = {} exceeds the extent {}",
                pow2(k_max),
                grid.extent()
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{quadrature_integrate, GridFunction};

    #[test]
    fn shell_index_boundaries() {
        assert_eq!(shell_of_norm_sq(0.0), None);
        assert_eq!(shell_of_norm_sq(1.0), Some(0));
        assert_eq!(shell_of_norm_sq(1.0 + 1e-12), Some(1));
        assert_eq!(shell_of_norm_sq(0.25), Some(-1));
        assert_eq!(shell_of_norm_sq(0.26), Some(0));
        assert_eq!(shell_of_norm_sq(16.0), Some(2));
        assert_eq!(shell_of_norm_sq(2f64.powi(-20)), Some(-10));
    }

    #[test]
    fn a2_selects_the_outer_shell() {
        let g = Grid::new(1, 4.0, 65).unwrap();
        let geo = dyadic_masks(&g, -1, 2, 0.1).unwrap();
        let a2 = geo.annulus(2);
        for i in 0..g.len() {
            let x = g.point(i)[0].abs();
            assert_eq!(a2.get(i), x > 2.0 && x <= 4.0, "x = {x}");
        }
    }

    #[test]
    fn origin_is_in_b0_only() {
        let g = Grid::new(2, 2.0, 33).unwrap();
        let geo = dyadic_masks(&g, -3, 1, 0.1).unwrap();
        let o = g.origin();
        assert!(geo.ball(0).get(o));
        for k in -6..=1 {
            assert!(!geo.annulus(k).get(o));
        }
        assert!(geo.chi_tilde(0).get(o));
    }

    #[test]
    fn shell_measure_in_one_dimension() {
        let g = Grid::desk(1).unwrap();
        let geo = dyadic_masks(&g, -4, 4, 0.1).unwrap();
        let one = GridFunction::constant(&g, 1.0);
        for k in -4..=4 {
            let m = quadrature_integrate(&one, Some(&geo.annulus(k))).unwrap();
            assert!((m - pow2(k)).abs() <= 2.0 * g.spacing(), "k = {k}: {m}");
        }
    }

    #[test]
    fn shells_partition_and_fattened_contains() {
        let g = Grid::new(2, 4.0, 65).unwrap();
        let geo = dyadic_masks(&g, -2, 2, 0.2).unwrap();
        let cov = geo.covered();
        for i in 0..g.len() {
            let hits = geo.shells().filter(|&k| geo.annulus(k).get(i)).count();
            assert_eq!(hits, usize::from(cov.get(i)));
        }
        for k in geo.shells() {
            assert!(geo.annulus(k).is_subset_of(&geo.fattened(k)));
        }
    }

    #[test]
    fn additivity_is_exact() {
        let g = Grid::new(1, 8.0, 257).unwrap();
        let geo = dyadic_masks(&g, -3, 3, 0.1).unwrap();
        let f = GridFunction::from_fn(&g, |p| (p[0] * 0.7).sin() + 0.3);
        let total = quadrature_integrate(&f, Some(&geo.covered())).unwrap();
        let parts: f64 = geo
            .shells()
            .map(|k| quadrature_integrate(&f, Some(&geo.annulus(k))).unwrap())
            .sum();
        assert!((total - parts).abs() <= 1e-12 * total.abs().max(1.0));
    }

    #[test]
    fn rejects_bad_ranges() {
        let g = Grid::new(1, 4.0, 65).unwrap();
        assert!(dyadic_masks(&g, 0, 3, 0.1).is_err());
        assert!(dyadic_masks(&g, 1, 0, 0.1).is_err());
        assert!(dyadic_masks(&g, 0, 2, 0.25).is_err());
        assert!(dyadic_masks(&g, 0, 2, 0.0).is_err());
        assert_eq!(default_k_max(&g), 2);
        assert_eq!(default_k_max(&Grid::new(1, 5.0, 11).unwrap()), 2);
    }
}
