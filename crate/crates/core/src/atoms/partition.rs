//! Smooth radial partition of unity subordinate to fattened dyadic shells.

use crate::dyadic::{pow2, DyadicGeometry};
use crate::error::Result;
use crate::grid::{Grid, GridFunction, Mask};

/// `exp(-1/t)` for `t > 0`, zero otherwise.
fn e(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`, all derivatives flat at both ends.
pub fn smooth_step(t: f64) -> f64 {
    let a = e(t);
    let b = e(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Radial profile equal to 1 on `[1/2, 1]` and supported in `[1/2 - eps, 1 + eps]`.
pub fn shell_profile(r: f64, eps: f64) -> f64 {
    let lo = 0.5 - eps;
    if r <= lo || r >= 1.0 + eps {
        0.0
    } else if r < 0.5 {
        smooth_step((r - lo) / eps)
    } else if r <= 1.0 {
        1.0
    } else {
        smooth_step((1.0 + eps - r) / eps)
    }
}

/// Radial profile equal to 1 on `[0, 1]` and supported in `[0, 1 + eps]`.
pub fn ball_profile(r: f64, eps: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 1.0 + eps {
        0.0
    } else {
        smooth_step((1.0 + eps - r) / eps)
    }
}

/// `psi_k(x) = psi(2^{-k} x)` and the normalized `Phi_k = psi_k / sum_l psi_l`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    geometry: DyadicGeometry,
    restricted: bool,
    psi: Vec<GridFunction>,
    phi: Vec<GridFunction>,
    sum: GridFunction,
}

/// Partition over shells `k_min..=k_max`; the origin is never covered.
pub fn build_partition(grid: &Grid, k_min: i32, k_max: i32, eps: f64) -> Result<PartitionOfUnity> {
    PartitionOfUnity::new(grid, k_min, k_max, eps, false)
}

/// Partition over shells `0..=k_max` whose innermost member is a ball cutoff equal
/// to 1 on `|x| <= 1`, so that every node up to `2^{k_max}` is covered.
pub fn build_restricted_partition(grid: &Grid, k_max: i32, eps: f64) -> Result<PartitionOfUnity> {
    PartitionOfUnity::new(grid, 0, k_max, eps, true)
}

impl PartitionOfUnity {
    fn new(grid: &Grid, k_min: i32, k_max: i32, eps: f64, restricted: bool) -> Result<Self> {
        let geometry = DyadicGeometry::new(grid, k_min, k_max, eps)?;
        let psi: Vec<GridFunction> = (k_min..=k_max)
            .map(|k| {
                let s = pow2(k);
                GridFunction::from_fn(grid, |p| {
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt() / s;
                    if restricted && k == 0 {
                        ball_profile(r, eps)
                    } else {
                        shell_profile(r, eps)
                    }
                })
            })
            .collect();
        let mut sum = GridFunction::zeros(grid);
        for p in &psi {
            sum.axpy(1.0, p)?;
        }
        let phi = psi
            .iter()
            .map(|p| {
                p.zip_with(&sum, |a, s| if s > 0.0 { a / s } else { 0.0 })
                    .expect("same grid")
            })
            .collect();
        Ok(Self {
            geometry,
            restricted,
            psi,
            phi,
            sum,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.geometry.grid()
    }

    pub fn geometry(&self) -> &DyadicGeometry {
        &self.geometry
    }

    pub fn eps(&self) -> f64 {
        self.geometry.eps()
    }

    pub fn k_min(&self) -> i32 {
        self.geometry.k_min()
    }

    pub fn k_max(&self) -> i32 {
        self.geometry.k_max()
    }

    pub fn restricted(&self) -> bool {
        self.restricted
    }

    pub fn shells(&self) -> std::ops::RangeInclusive<i32> {
        self.geometry.shells()
    }

    fn slot(&self, k: i32) -> usize {
        assert!(
            self.shells().contains(&k),
            "shell {k} outside the partition"
        );
        (k - self.k_min()) as usize
    }

    pub fn psi(&self, k: i32) -> &GridFunction {
        &self.psi[self.slot(k)]
    }

    pub fn phi(&self, k: i32) -> &GridFunction {
        &self.phi[self.slot(k)]
    }

    /// `sum_k psi_k`.
    pub fn sum_psi(&self) -> &GridFunction {
        &self.sum
    }

    /// Nodes where some `psi_k` is positive.
    pub fn covered(&self) -> Mask {
        Mask(self.sum.values().iter().map(|&s| s > 0.0).collect())
    }

    /// Closed node set on which shell `k` is projected.
    pub fn support_mask(&self, k: i32) -> Mask {
        if self.restricted && k == 0 {
            Mask::ball(self.grid(), 1.0 + self.eps())
        } else {
            self.geometry.fattened(k)
        }
    }

    /// Scale used to condition the polynomial basis of shell `k`.
    pub fn basis_scale(&self, k: i32) -> f64 {
        if self.restricted && k == 0 {
            1.0
        } else {
            pow2(k - 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        for t in [0.1, 0.3, 0.7] {
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn plateau_and_support() {
        let g = Grid::new(1, 8.0, 1025).unwrap();
        let pou = build_partition(&g, -2, 3, 0.15).unwrap();
        for k in pou.shells() {
            let psi = pou.psi(k);
            let s = pow2(k);
            for i in 0..g.len() {
                let r = g.norm(i);
                if r > s / 2.0 && r <= s {
                    assert_eq!(psi.values()[i], 1.0);
                }
                if psi.values()[i] > 0.0 {
                    assert!(r >= s * (0.5 - 0.15) && r <= s * 1.15);
                }
            }
            // A node at 0.75 2^k is on the plateau.
            let x = 0.75 * s;
            assert_eq!(shell_profile(x / s, 0.15), 1.0);
        }
    }

    #[test]
    fn normalized_members_sum_to_one() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 4.0, 129).unwrap();
            let pou = build_partition(&g, -3, 2, 0.2).unwrap();
            let cov = pou.covered();
            for i in cov.indices() {
                let s: f64 = pou.shells().map(|k| pou.phi(k).values()[i]).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
            assert!(!cov.get(g.origin()));
            for k in pou.shells() {
                assert_eq!(pou.phi(k).values()[g.origin()], 0.0);
            }
        }
    }

    #[test]
    fn overlap_sum_between_one_and_two() {
        let g = Grid::new(1, 8.0, 2049).unwrap();
        let pou = build_partition(&g, -3, 3, 0.2).unwrap();
        let geo = pou.geometry();
        for i in geo.covered().indices() {
            let s = pou.sum_psi().values()[i];
            assert!((1.0..=2.0).contains(&s), "sum {s} at {}", g.norm(i));
        }
        // At |x| = 2^k the two neighbours are evaluated directly.
        for k in -2..=2 {
            let x = pow2(k);
            let direct = shell_profile(1.0, 0.2) + shell_profile(0.5, 0.2);
            let i = g.flatten([g.center_index() + (x / g.spacing()) as usize, 0]);
            assert!((pou.sum_psi().values()[i] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn restricted_partition_covers_origin() {
        let g = Grid::new(1, 8.0, 513).unwrap();
        let pou = build_restricted_partition(&g, 3, 0.1).unwrap();
        assert!(pou.covered().get(g.origin()));
        assert_eq!(pou.phi(0).values()[g.origin()], 1.0);
        assert!(build_partition(&g, 0, 3, 0.3).is_err());
    }
}
