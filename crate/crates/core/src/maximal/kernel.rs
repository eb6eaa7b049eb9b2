//! Smoothing kernels and their discretization at a scale `t`.

use serde::{Deserialize, Serialize};

use crate::error::{HerzError, Result};
use crate::grid::{Grid, Point};

/// Shape of a smoothing kernel before amplitude scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `exp(-1/(1 - |x|^2))` on the unit ball.
    Bump,
    /// Product over axes of `D^{order_i} exp(-x_i^2 / (2 sigma^2))`.
    Gaussian { sigma: f64, order: [usize; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    pub profile: Profile,
    pub amplitude: f64,
    /// Renormalize every dilate to unit discrete mass.
    pub unit_mass: bool,
}

/// Probabilists' Hermite polynomial `He_k(u)`.
pub fn hermite_e(k: usize, u: f64) -> f64 {
    let (mut a, mut b) = (1.0, u);
    if k == 0 {
        return a;
    }
    for j in 1..k {
        let c = u * b - j as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// `D^k exp(-x^2 / (2 sigma^2)) = (-1/sigma)^k He_k(x/sigma) exp(-x^2 / (2 sigma^2))`.
pub fn gaussian_derivative(k: usize, sigma: f64, x: f64) -> f64 {
    let u = x / sigma;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * sigma.powi(-(k as i32)) * hermite_e(k, u) * (-0.5 * u * u).exp()
}

impl SmoothingKernel {
    /// Unit-mass compactly supported bump.
    pub fn bump() -> Self {
        Self {
            profile: Profile::Bump,
            amplitude: 1.0,
            unit_mass: true,
        }
    }

    /// Unit-mass Gaussian of width `sigma`.
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            profile: Profile::Gaussian {
                sigma,
                order: [0, 0],
            },
            amplitude: 1.0,
            unit_mass: true,
        }
    }

    /// Gaussian (derivative) scaled so that `sup_{|a|,|b| <= n_order} |x^a D^b phi| <= 1`
    /// on a fine lattice and at the axis coordinates of `grid`.
    pub fn grand_member(
        grid: &Grid,
        sigma: f64,
        order: [usize; 2],
        n_order: usize,
    ) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(HerzError::param(
                "sigma",
                format!("must be positive, got {sigma}"),
            ));
        }
        let order = if grid.dim() == 1 {
            [order[0], 0]
        } else {
            order
        };
        let mut k = Self {
            profile: Profile::Gaussian { sigma, order },
            amplitude: 1.0,
            unit_mass: false,
        };
        k.amplitude = 1.0 / k.schwartz_seminorm(grid, n_order)?;
        Ok(k)
    }

    pub fn label(&self) -> String {
        match &self.profile {
            Profile::Bump => "bump".into(),
            Profile::Gaussian { sigma, order } if *order == [0, 0] => {
                format!("gauss(sigma={sigma})")
            }
            Profile::Gaussian { sigma, order } => {
                format!("gauss(sigma={sigma},D={}{})", order[0], order[1])
            }
        }
    }

    /// Radius beyond which the kernel is treated as zero.
    pub fn support_radius(&self) -> f64 {
        match self.profile {
            Profile::Bump => 1.0,
            Profile::Gaussian { sigma, .. } => 8.0 * sigma,
        }
    }

    pub fn eval(&self, dim: usize, x: Point) -> f64 {
        match self.profile {
            Profile::Bump => {
                let r2 = x[0] * x[0] + if dim == 2 { x[1] * x[1] } else { 0.0 };
                if r2 < 1.0 {
                    self.amplitude * (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
            Profile::Gaussian { sigma, order } => {
                let f0 = gaussian_derivative(order[0], sigma, x[0]);
                let f1 = if dim == 2 {
                    gaussian_derivative(order[1], sigma, x[1])
                } else {
                    1.0
                };
                self.amplitude * f0 * f1
            }
        }
    }

    /// `sup_{|a|,|b| <= n_order} sup_x |x^a D^b phi(x)|` for the kernel as scaled.
    pub fn schwartz_seminorm(&self, grid: &Grid, n_order: usize) -> Result<f64> {
        let (sigma, order) = match self.profile {
            Profile::Gaussian { sigma, order } => (sigma, order),
            Profile::Bump => {
                return Err(HerzError::param(
                    "grand_family",
                    "only Gaussian-type members have a computable seminorm",
                ))
            }
        };
        let axis: Vec<f64> = grid.axis_coords();
        let table = |d: usize| -> Vec<Vec<f64>> {
            let step = sigma / 256.0;
            let n = (16.0 * sigma / step).round() as i64;
            let lattice = (-n..=n)
                .map(|i| i as f64 * step)
                .chain(axis.iter().copied());
            let mut t = vec![vec![0.0f64; n_order + 1]; n_order + 1];
            for x in lattice {
                let g = (-0.5 * (x / sigma).powi(2)).exp();
                for a in 0..=n_order {
                    let xa = x.abs().powi(a as i32);
                    for b in 0..=n_order {
                        let k = b + d;
                        let v = xa * sigma.powi(-(k as i32)) * hermite_e(k, x / sigma).abs() * g;
                        if v > t[a][b] {
                            t[a][b] = v;
                        }
                    }
                }
            }
            t
        };
        let sup = if grid.dim() == 1 {
            let t = table(order[0]);
            t.iter().flatten().fold(0.0f64, |m, &v| m.max(v))
        } else {
            let t1 = table(order[0]);
            let t2 = table(order[1]);
            let mut m = 0.0f64;
            for a1 in 0..=n_order {
                for a2 in 0..=(n_order - a1) {
                    for b1 in 0..=n_order {
                        for b2 in 0..=(n_order - b1) {
                            m = m.max(t1[a1][b1] * t2[a2][b2]);
                        }
                    }
                }
            }
            m
        };
        Ok(self.amplitude.abs() * sup)
    }

    fn is_separable(&self) -> bool {
        matches!(self.profile, Profile::Gaussian { .. })
    }

    /// Half-width (in nodes) of the discrete dilate at scale `t`.
    pub(crate) fn half_width(&self, grid: &Grid, t: f64) -> usize {
        let l = (self.support_radius() * t / grid.spacing()).floor();
        (l as usize).min(grid.points_per_axis() - 1)
    }

    /// Discrete dilate `t^{-n} phi(z / t)` at offsets `z`, unit-mass normalized when requested.
    pub(crate) fn discretize(&self, grid: &Grid, t: f64) -> DiscreteKernel {
        let h = grid.spacing();
        let dim = grid.dim();
        let l = self.half_width(grid, t);
        let w = 2 * l + 1;
        if dim == 1 || self.is_separable() {
            let (o0, o1) = match self.profile {
                Profile::Gaussian { order, .. } => (order[0], order[1]),
                Profile::Bump => (0, 0),
            };
            let factor = |ord: usize| -> Vec<f64> {
                (0..w)
                    .map(|i| {
                        let z = (i as f64 - l as f64) * h / t;
                        match self.profile {
                            Profile::Gaussian { sigma, .. } => {
                                gaussian_derivative(ord, sigma, z) / t
                            }
                            Profile::Bump => self.eval(1, [z, 0.0]) / (self.amplitude * t),
                        }
                    })
                    .collect()
            };
            let mut f0 = factor(o0);
            let mut f1 = if dim == 2 { factor(o1) } else { vec![1.0] };
            if self.unit_mass {
                let s0: f64 = f0.iter().sum::<f64>() * h;
                f0.iter_mut().for_each(|v| *v /= s0);
                if dim == 2 {
                    let s1: f64 = f1.iter().sum::<f64>() * h;
                    f1.iter_mut().for_each(|v| *v /= s1);
                }
            } else {
                f0.iter_mut().for_each(|v| *v *= self.amplitude);
            }
            return DiscreteKernel::Separable { half: l, f0, f1 };
        }
        let mut vals = vec![0.0; w * w];
        for a in 0..w {
            for b in 0..w {
                let z = [(a as f64 - l as f64) * h / t, (b as f64 - l as f64) * h / t];
                vals[a * w + b] = self.eval(2, z) / (t * t);
            }
        }
        if self.unit_mass {
            let s: f64 = vals.iter().sum::<f64>() * h * h;
            vals.iter_mut().for_each(|v| *v /= s);
        }
        DiscreteKernel::Full { half: l, vals }
    }
}

/// Kernel samples on a square window of offsets `-half..=half` per axis.
#[derive(Debug, Clone)]
pub(crate) enum DiscreteKernel {
    /// Product `f0[i] * f1[j]`; `f1 = [1]` in one dimension.
    Separable {
        half: usize,
        f0: Vec<f64>,
        f1: Vec<f64>,
    },
    /// Row-major `vals[a * (2 half + 1) + b]`.
    Full { half: usize, vals: Vec<f64> },
}
