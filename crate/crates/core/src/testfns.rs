//! Built-in test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{quadrature_integrate, Grid, GridFunction, Point};

fn norm2(p: Point) -> f64 {
    p[0] * p[0] + p[1] * p[1]
}

/// `amplitude * exp(-|x - center|^2 / width^2)`.
pub fn gaussian(grid: &Grid, center: Point, width: f64, amplitude: f64) -> GridFunction {
    GridFunction::from_fn(grid, |p| {
        let d = [p[0] - center[0], p[1] - center[1]];
        amplitude * (-norm2(d) / (width * width)).exp()
    })
}

/// Indicator of the half-open box `prod_i [lo_i, hi_i)`.
pub fn box_indicator(grid: &Grid, lo: Point, hi: Point) -> GridFunction {
    let dim = grid.dim();
    GridFunction::from_fn(grid, |p| {
        let inside = (0..dim).all(|d| p[d] >= lo[d] && p[d] < hi[d]);
        f64::from(u8::from(inside))
    })
}

/// Indicator of the closed box `prod_i [lo_i, hi_i]`.
pub fn closed_box_indicator(grid: &Grid, lo: Point, hi: Point) -> GridFunction {
    let dim = grid.dim();
    GridFunction::from_fn(grid, |p| {
        let inside = (0..dim).all(|d| p[d] >= lo[d] && p[d] <= hi[d]);
        f64::from(u8::from(inside))
    })
}

/// Indicator of the closed ball `|x| <= r`.
pub fn ball_indicator(grid: &Grid, r: f64) -> GridFunction {
    GridFunction::from_fn(grid, |p| f64::from(u8::from(norm2(p) <= r * r)))
}

/// Indicator of `lo < |x| <= hi`.
pub fn shell_indicator(grid: &Grid, lo: f64, hi: f64) -> GridFunction {
    GridFunction::from_fn(grid, |p| {
        let r2 = norm2(p);
        f64::from(u8::from(r2 > lo * lo && r2 <= hi * hi))
    })
}

/// `sign(x_1)` on the closed ball `|x| <= r`, zero on the hyperplane `x_1 = 0`.
/// Odd in `x_1`, so every moment of even order in `x_1` vanishes exactly.
pub fn haar(grid: &Grid, r: f64) -> GridFunction {
    GridFunction::from_fn(grid, |p| {
        if norm2(p) <= r * r {
            if p[0] > 0.0 {
                1.0
            } else if p[0] < 0.0 {
                -1.0
            } else {
                0.0
            }
        } else {
            0.0
        }
    })
}

/// Smooth compactly supported bump `exp(-1 / (1 - |x - c|^2 / r^2))`.
pub fn bump(grid: &Grid, center: Point, radius: f64) -> GridFunction {
    GridFunction::from_fn(grid, |p| {
        let d = [p[0] - center[0], p[1] - center[1]];
        let s = norm2(d) / (radius * radius);
        if s < 1.0 {
            (-1.0 / (1.0 - s)).exp()
        } else {
            0.0
        }
    })
}

/// `x_1 exp(-|x|^2 / width^2)`.
pub fn odd_gaussian(grid: &Grid, width: f64) -> GridFunction {
    GridFunction::from_fn(grid, |p| p[0] * (-norm2(p) / (width * width)).exp())
}

/// `|x|^2 exp(-|x|^2 / width^2)`, which vanishes at the origin.
pub fn ring_gaussian(grid: &Grid, width: f64) -> GridFunction {
    GridFunction::from_fn(grid, |p| {
        let r2 = norm2(p) / (width * width);
        r2 * (-r2).exp()
    })
}

/// Band-limited trigonometric sum with `terms` random modes of frequency at most
/// `max_freq`, multiplied by a smooth bump of radius `radius`.
pub fn random_smooth(
    grid: &Grid,
    seed: u64,
    terms: usize,
    max_freq: f64,
    radius: f64,
) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..terms)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-max_freq..max_freq),
                rng.gen_range(-max_freq..max_freq),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let win = bump(grid, [0.0, 0.0], radius);
    let dim = grid.dim();
    let trig = GridFunction::from_fn(grid, |p| {
        modes
            .iter()
            .map(|&(a, w0, w1, ph)| {
                let arg = w0 * p[0] + if dim == 2 { w1 * p[1] } else { 0.0 } + ph;
                a * arg.cos()
            })
            .sum()
    });
    trig.mul(&win).expect("same grid")
}

/// `f - (int f / int w) w`; the result has zero discrete mean when `int w != 0`.
pub fn remove_mean(f: &GridFunction, w: &GridFunction) -> GridFunction {
    let fw = quadrature_integrate(f, None).expect("same grid");
    let ww = quadrature_integrate(w, None).expect("same grid");
    if ww == 0.0 {
        return f.clone();
    }
    let mut out = f.clone();
    out.axpy(-fw / ww, w).expect("same grid");
    out
}

/// Sets the value at the origin to zero.
pub fn vanish_at_origin(f: &GridFunction) -> GridFunction {
    let mut out = f.clone();
    let o = out.grid().origin();
    out.values_mut()[o] = 0.0;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_smooth_is_seeded() {
        let g = Grid::new(1, 4.0, 129).unwrap();
        let a = random_smooth(&g, 7, 5, 3.0, 2.0);
        let b = random_smooth(&g, 7, 5, 3.0, 2.0);
        let c = random_smooth(&g, 8, 5, 3.0, 2.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.support_radius().unwrap() < 2.0);
    }

    #[test]
    fn haar_has_zero_mean() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 4.0, 65).unwrap();
            let f = haar(&g, 1.0);
            assert_eq!(quadrature_integrate(&f, None).unwrap(), 0.0);
        }
    }

    #[test]
    fn remove_mean_zeroes_integral() {
        let g = Grid::new(1, 8.0, 257).unwrap();
        let f = gaussian(&g, [0.5, 0.0], 1.0, 1.0);
        let z = remove_mean(&f, &ring_gaussian(&g, 2.0));
        assert!(quadrature_integrate(&z, None).unwrap().abs() < 1e-14);
        assert_eq!(z.values()[g.origin()], f.values()[g.origin()]);
    }
}
