//! Orthonormal and dual polynomial bases on fattened dyadic annuli.

use crate::dyadic::{fattened_annulus, pow2};
use crate::error::{HerzError, Result};
use crate::grid::{Grid, Mask, Point};
use crate::poly::{MultiIndex, PolyBasis};

/// Bases of `P_m` on `A~_{k,eps}` under the weight `1/|A~_{k,eps}|`, built in the
/// variable `x / 2^{k-1}`.
#[derive(Debug, Clone)]
pub struct AnnulusBasis {
    shell: i32,
    eps: f64,
    mask: Mask,
    basis: PolyBasis,
}

/// Deviation of a square matrix from the identity in the max norm.
fn identity_defect(m: &[Vec<f64>]) -> f64 {
    let mut d = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            d = d.max((v - target).abs());
        }
    }
    d
}

/// Builds and verifies the bases for shell `k`. Fails when the discrete Gram
/// matrix is numerically singular or either defining relation is off by more
/// than `1e-8`.
pub fn annulus_basis(grid: &Grid, k: i32, eps: f64, m: usize) -> Result<AnnulusBasis> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(HerzError::param(
            "eps",
            format!("must lie in (0, 1/4), got {eps}"),
        ));
    }
    let mask = fattened_annulus(grid, k, eps);
    let basis = PolyBasis::new(grid, &mask, m, pow2(k - 1), k)?;
    let out = AnnulusBasis {
        shell: k,
        eps,
        mask,
        basis,
    };
    let (g, d) = out.defects(grid);
    if g > 1e-8 || d > 1e-8 {
        return Err(HerzError::SingularGram {
            shell: k,
            degree: m,
            nodes: out.mask.count(),
        });
    }
    Ok(out)
}

impl AnnulusBasis {
    pub fn shell(&self) -> i32 {
        self.shell
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn indices(&self) -> &[MultiIndex] {
        self.basis.indices()
    }

    pub fn poly(&self) -> &PolyBasis {
        &self.basis
    }

    /// `phi_d^k(x)`.
    pub fn ortho(&self, d: usize, x: Point) -> f64 {
        self.basis.ortho(d, x)
    }

    /// `psi_d^k(x)`.
    pub fn dual(&self, d: usize, x: Point) -> f64 {
        self.basis.dual(d, x)
    }

    /// Max deviations of the Gram matrix and of the duality matrix from the identity.
    pub fn defects(&self, grid: &Grid) -> (f64, f64) {
        (
            identity_defect(&self.basis.gram(grid)),
            identity_defect(&self.basis.duality_matrix(grid)),
        )
    }

    /// `max_{x in A~} |psi_d^k(x)| * (2^{k-1})^{|d|}` for each `d`.
    pub fn scaled_dual_bounds(&self, grid: &Grid) -> Vec<f64> {
        let s = pow2(self.shell - 1);
        self.indices()
            .iter()
            .enumerate()
            .map(|(d, ix)| {
                let w = s.powi((ix[0] + ix[1]) as i32);
                self.mask
                    .indices()
                    .map(|i| self.dual(d, grid.point(i)).abs() * w)
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}
