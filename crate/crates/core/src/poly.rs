//! Discrete orthonormal and dual polynomial bases on node sets.
//!
//! A basis lives on a set of grid nodes `S` and is expressed in the scaled variable
//! `u = x / s`. The inner product is the normalized sum
//! `<f, g> = (1 / |S|) sum_{x in S} f(x) g(x) h^n`, so the constant `1` has unit norm.

use crate::error::{HerzError, Result};
use crate::grid::{Grid, Mask, Point};

/// Multi-index of a monomial `x_1^{d_0} x_2^{d_1}`.
pub type MultiIndex = [usize; 2];

/// All multi-indices with total degree `<= degree`, ordered by degree then by
/// decreasing power of `x_1`.
pub fn multi_indices(dim: usize, degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 0..=degree {
        if dim == 1 {
            out.push([d, 0]);
        } else {
            for a in (0..=d).rev() {
                out.push([a, d - a]);
            }
        }
    }
    out
}

#[inline]
pub fn total_degree(ix: &MultiIndex) -> usize {
    ix[0] + ix[1]
}

/// `x^ix` in one or two dimensions.
#[inline]
pub fn monomial(ix: &MultiIndex, p: Point) -> f64 {
    p[0].powi(ix[0] as i32) * p[1].powi(ix[1] as i32)
}

/// Orthonormal and dual bases of `P_m` on a node set.
#[derive(Debug, Clone)]
pub struct PolyBasis {
    degree: usize,
    scale: f64,
    indices: Vec<MultiIndex>,
    /// Row `j` holds the `u`-monomial coefficients of the orthonormal polynomial `phi_j`.
    ortho: Vec<Vec<f64>>,
    /// Row `l` holds the `u`-monomial coefficients of the dual polynomial `psi_l`.
    dual: Vec<Vec<f64>>,
    nodes: Vec<usize>,
    measure: f64,
}

impl PolyBasis {
    /// Builds the bases on the nodes selected by `mask`. `label` names the node set
    /// in errors (a shell index).
    pub fn new(grid: &Grid, mask: &Mask, degree: usize, scale: f64, label: i32) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(HerzError::param(
                "scale",
                format!("must be positive, got {scale}"),
            ));
        }
        let nodes: Vec<usize> = mask.indices().collect();
        let indices = multi_indices(grid.dim(), degree);
        let dim_p = indices.len();
        let singular = || HerzError::SingularGram {
            shell: label,
            degree,
            nodes: nodes.len(),
        };
        if nodes.len() < dim_p {
            return Err(singular());
        }
        let us: Vec<Point> = nodes
            .iter()
            .map(|&i| {
                let p = grid.point(i);
                [p[0] / scale, p[1] / scale]
            })
            .collect();
        let count = nodes.len() as f64;
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / count
        };

        let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(dim_p);
        let mut coefs: Vec<Vec<f64>> = Vec::with_capacity(dim_p);
        for (j, ix) in indices.iter().enumerate() {
            let mut v: Vec<f64> = us.iter().map(|&u| monomial(ix, u)).collect();
            let mut c = vec![0.0; dim_p];
            c[j] = 1.0;
            let start = dot(&v, &v).sqrt();
            for _pass in 0..2 {
                for (q, cq) in vecs.iter().zip(&coefs) {
                    let r = dot(&v, q);
                    for (a, b) in v.iter_mut().zip(q) {
                        *a -= r * b;
                    }
                    for (a, b) in c.iter_mut().zip(cq) {
                        *a -= r * b;
                    }
                }
            }
            let nrm = dot(&v, &v).sqrt();
            if !(nrm > 1e-10 * start) || nrm == 0.0 {
                return Err(singular());
            }
            v.iter_mut().for_each(|a| *a /= nrm);
            c.iter_mut().for_each(|a| *a /= nrm);
            vecs.push(v);
            coefs.push(c);
        }
        // psi_l = sum_j C_{jl} phi_j, so its monomial coefficients are (C^T C)_{l, .}.
        let dual = (0..dim_p)
            .map(|l| {
                (0..dim_p)
                    .map(|nu| (0..dim_p).map(|j| coefs[j][l] * coefs[j][nu]).sum())
                    .collect()
            })
            .collect();
        Ok(Self {
            degree,
            scale,
            indices,
            ortho: coefs,
            dual,
            measure: count * grid.cell_volume(),
            nodes,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Discrete measure of the node set.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    fn eval_coeffs(&self, c: &[f64], x: Point) -> f64 {
        let u = [x[0] / self.scale, x[1] / self.scale];
        self.indices
            .iter()
            .zip(c)
            .map(|(ix, &a)| a * monomial(ix, u))
            .sum()
    }

    /// `phi_j(x)`.
    pub fn ortho(&self, j: usize, x: Point) -> f64 {
        self.eval_coeffs(&self.ortho[j], x)
    }

    /// `psi_l(x)`, dual to `x^{indices[l]}` under the normalized inner product.
    pub fn dual(&self, l: usize, x: Point) -> f64 {
        let d = total_degree(&self.indices[l]) as i32;
        self.eval_coeffs(&self.dual[l], x) / self.scale.powi(d)
    }

    /// `<f, phi_j>` for every `j`, with `values` indexed by grid node.
    pub fn ortho_coefficients(&self, grid: &Grid, values: &[f64]) -> Vec<f64> {
        let count = self.nodes.len() as f64;
        (0..self.len())
            .map(|j| {
                self.nodes
                    .iter()
                    .map(|&i| values[i] * self.ortho(j, grid.point(i)))
                    .sum::<f64>()
                    / count
            })
            .collect()
    }

    /// Orthogonal projection of `values` onto `P_m` on the node set, returned as
    /// `u`-monomial coefficients.
    pub fn project_coeffs(&self, grid: &Grid, values: &[f64]) -> Vec<f64> {
        let oc = self.ortho_coefficients(grid, values);
        let mut out = vec![0.0; self.len()];
        for (j, &cj) in oc.iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(&self.ortho[j]) {
                *o += cj * b;
            }
        }
        out
    }

    /// Evaluates a polynomial given by `u`-monomial coefficients.
    pub fn eval_u_poly(&self, coeffs: &[f64], x: Point) -> f64 {
        self.eval_coeffs(coeffs, x)
    }

    /// Converts `u`-monomial coefficients into `x`-monomial coefficients.
    pub fn to_x_coeffs(&self, coeffs: &[f64]) -> Vec<f64> {
        self.indices
            .iter()
            .zip(coeffs)
            .map(|(ix, &c)| c / self.scale.powi(total_degree(ix) as i32))
            .collect()
    }

    /// Discrete Gram matrix of the orthonormal polynomials.
    pub fn gram(&self, grid: &Grid) -> Vec<Vec<f64>> {
        let count = self.nodes.len() as f64;
        let vals: Vec<Vec<f64>> = (0..self.len())
            .map(|j| {
                self.nodes
                    .iter()
                    .map(|&i| self.ortho(j, grid.point(i)))
                    .collect()
            })
            .collect();
        (0..self.len())
            .map(|a| {
                (0..self.len())
                    .map(|b| {
                        vals[a]
                            .iter()
                            .zip(&vals[b])
                            .map(|(x, y)| x * y)
                            .sum::<f64>()
                            / count
                    })
                    .collect()
            })
            .collect()
    }

    /// `<psi_l, x^beta>` for all pairs; the identity for an exact dual basis.
    pub fn duality_matrix(&self, grid: &Grid) -> Vec<Vec<f64>> {
        let count = self.nodes.len() as f64;
        (0..self.len())
            .map(|l| {
                self.indices
                    .iter()
                    .map(|beta| {
                        self.nodes
                            .iter()
                            .map(|&i| {
                                let x = grid.point(i);
                                self.dual(l, x) * monomial(beta, x)
                            })
                            .sum::<f64>()
                            / count
                    })
                    .collect()
            })
            .collect()
    }
}
