//! Central Campanato norms, minimizing polynomials and the atom pairing bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{minimal_degree, validate_atom, Atom, TOL_MOMENTS, TOL_SIZE};
use crate::error::{HerzError, Result};
use crate::grid::{ball_volume, quadrature_integrate, GridFunction, Mask, Point};
use crate::norms::{mixed_lebesgue_norm, ExponentVector};
use crate::poly::{monomial, MultiIndex, PolyBasis};

/// Default relative slack of the pairing bound.
pub const PAIRING_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampanatoConfig {
    pub alpha: f64,
    pub p: ExponentVector,
    pub s: usize,
    /// Ascending ball radii replacing the supremum over `r > 0`.
    pub radii: Vec<f64>,
}

impl CampanatoConfig {
    pub fn new(alpha: f64, p: ExponentVector, s: usize, radii: Vec<f64>) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(HerzError::param(
                "alpha",
                format!("must be finite, got {alpha}"),
            ));
        }
        let min_s = minimal_degree(alpha, &p);
        if s < min_s {
            return Err(HerzError::param(
                "s",
                format!("must be at least {min_s} for alpha = {alpha}, got {s}"),
            ));
        }
        if radii.is_empty() {
            return Err(HerzError::param("radii", "at least one radius is required"));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0))
            || radii.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(HerzError::param(
                "radii",
                format!("must be positive and strictly ascending, got {radii:?}"),
            ));
        }
        Ok(Self { alpha, p, s, radii })
    }

    /// Dyadic radii `2^k` for `k` in `k_lo..=k_hi`.
    pub fn dyadic(alpha: f64, p: ExponentVector, s: usize, k_lo: i32, k_hi: i32) -> Result<Self> {
        Self::new(alpha, p, s, (k_lo..=k_hi).map(|k| 2f64.powi(k)).collect())
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }
}

/// `P^s_B g` on `B = B(0, r)` in `x`-monomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizingPolynomial {
    pub radius: f64,
    pub degree: usize,
    pub indices: Vec<MultiIndex>,
    pub coeffs: Vec<f64>,
}

impl MinimizingPolynomial {
    pub fn eval(&self, x: Point) -> f64 {
        self.indices
            .iter()
            .zip(&self.coeffs)
            .map(|(ix, c)| c * monomial(ix, x))
            .sum()
    }
}

/// Least-squares polynomial of degree `<= s` on the nodes of `B(0, r)`, so that
/// `int_B (g - P) x^beta = 0` for `|beta| <= s`.
pub fn minimizing_polynomial(g: &GridFunction, r: f64, s: usize) -> Result<MinimizingPolynomial> {
    let grid = g.grid();
    if !(r.is_finite() && r > 0.0 && r <= grid.max_radius()) {
        return Err(HerzError::param(
            "radius",
            format!("must lie in (0, {}], got {r}", grid.max_radius()),
        ));
    }
    let mask = Mask::ball(grid, r);
    let basis = PolyBasis::new(grid, &mask, s, r, 0)?;
    let u = basis.project_coeffs(grid, g.values());
    Ok(MinimizingPolynomial {
        radius: r,
        degree: s,
        indices: basis.indices().to_vec(),
        coeffs: basis.to_x_coeffs(&u),
    })
}

/// `(g - P^s_B g) chi_B`.
pub fn oscillation(g: &GridFunction, r: f64, s: usize) -> Result<GridFunction> {
    let grid = g.grid();
    let poly = minimizing_polynomial(g, r, s)?;
    let mask = Mask::ball(grid, r);
    let vals = g
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if mask.get(i) {
                v - poly.eval(grid.point(i))
            } else {
                0.0
            }
        })
        .collect();
    GridFunction::new(*grid, vals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampanatoReport {
    /// `(r, |B(0,r)|^{-alpha/n} ||(g - P) chi_B||)` in ascending `r`.
    pub per_radius: Vec<(f64, f64)>,
    pub norm: f64,
    /// Radius attaining the maximum.
    pub argmax: f64,
}

pub fn campanato_report(g: &GridFunction, cfg: &CampanatoConfig) -> Result<CampanatoReport> {
    cfg.p.check_grid(g.grid())?;
    let n = cfg.dim();
    let per_radius: Vec<(f64, f64)> = cfg
        .radii
        .par_iter()
        .map(|&r| {
            let osc = oscillation(g, r, cfg.s)?;
            let v = mixed_lebesgue_norm(&osc, &cfg.p, None)?
                * ball_volume(n, r).powf(-cfg.alpha / n as f64);
            Ok((r, v))
        })
        .collect::<Result<_>>()?;
    let (argmax, norm) = per_radius
        .iter()
        .copied()
        .fold(
            (cfg.radii[0], 0.0f64),
            |acc, (r, v)| if v > acc.1 { (r, v) } else { acc },
        );
    Ok(CampanatoReport {
        per_radius,
        norm,
        argmax,
    })
}

/// Max over `cfg.radii` of `|B(0,r)|^{-alpha/n} ||(g - P^s_B g) chi_B||`.
pub fn campanato_norm(g: &GridFunction, cfg: &CampanatoConfig) -> Result<f64> {
    Ok(campanato_report(g, cfg)?.norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    /// `|int g a|`.
    pub pairing: f64,
    /// Campanato norm of `g` over the configured radii.
    pub bound: f64,
    /// `pairing / bound`, or 0 when both vanish.
    pub ratio: f64,
    pub radius: f64,
    pub radii: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// Checks `|int g a| <= (1 + tol) ||g||_CL`.
pub fn dual_pairing_check(
    g: &GridFunction,
    a: &Atom,
    cfg: &CampanatoConfig,
    tol: f64,
) -> Result<PairingReport> {
    g.grid().ensure_same(a.grid())?;
    let rep = validate_atom(a, TOL_MOMENTS, TOL_SIZE);
    if !rep.pass {
        return Err(HerzError::InvalidAtom(format!(
            "atom of radius {} fails validation: {rep:?}",
            a.radius
        )));
    }
    if !cfg
        .radii
        .iter()
        .any(|r| (r - a.radius).abs() <= 1e-12 * a.radius)
    {
        return Err(HerzError::InvalidAtom(format!(
            "atom radius {} is not among the configured radii {:?}",
            a.radius, cfg.radii
        )));
    }
    if a.params.s < cfg.s {
        return Err(HerzError::InvalidAtom(format!(
            "atom has moments up to degree {} but the Campanato degree is {}",
            a.params.s, cfg.s
        )));
    }
    let pairing = quadrature_integrate(&g.mul(&a.values)?, None)?.abs();
    let bound = campanato_norm(g, cfg)?;
    let ratio = if pairing == 0.0 { 0.0 } else { pairing / bound };
    Ok(PairingReport {
        pairing,
        bound,
        ratio,
        radius: a.radius,
        radii: cfg.radii.clone(),
        tol,
        pass: pairing <= (1.0 + tol) * bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{haar_atom, AtomParams};
    use crate::grid::Grid;

    fn p2() -> ExponentVector {
        ExponentVector::uniform(1, 2.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CampanatoConfig::new(0.5, p2(), 0, vec![]).is_err());
        assert!(CampanatoConfig::new(0.5, p2(), 0, vec![2.0, 1.0]).is_err());
        assert!(CampanatoConfig::new(1.6, p2(), 0, vec![1.0]).is_err());
        assert!(CampanatoConfig::dyadic(1.6, p2(), 1, 0, 2).is_ok());
    }

    #[test]
    fn polynomials_are_fixed() {
        let g = Grid::desk(1).unwrap();
        let f = GridFunction::from_fn(&g, |x| 2.0 - 3.0 * x[0] + 0.5 * x[0] * x[0]);
        let p = minimizing_polynomial(&f, 2.0, 2).unwrap();
        for (c, want) in p.coeffs.iter().zip([2.0, -3.0, 0.5]) {
            assert!((c - want).abs() <= 1e-10);
        }
        let g2 = Grid::new(2, 4.0, 65).unwrap();
        let f2 = GridFunction::from_fn(&g2, |x| 1.0 + x[0] * x[1] - x[1]);
        let osc = oscillation(&f2, 2.0, 2).unwrap();
        assert!(osc.max_abs() <= 1e-10);
    }

    #[test]
    fn square_on_unit_ball() {
        // Mean of x^2 over [-1, 1] is 1/3; the node mean differs by O(h).
        let mut g = Grid::desk(1).unwrap();
        let mut errs = Vec::new();
        for _ in 0..3 {
            let f = GridFunction::from_fn(&g, |x| x[0] * x[0]);
            let p = minimizing_polynomial(&f, 1.0, 0).unwrap();
            errs.push((p.coeffs[0] - 1.0 / 3.0).abs());
            g = g.refined();
        }
        assert!(errs[0] <= 2.0 * g.spacing() * 8.0);
        assert!(errs[1] < 0.6 * errs[0] && errs[2] < 0.6 * errs[1]);

        let f = GridFunction::from_fn(&g, |x| x[0] * x[0]);
        let osc = oscillation(&f, 1.0, 0).unwrap();
        let mask = Mask::ball(&g, 1.0);
        assert!(quadrature_integrate(&osc, Some(&mask)).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn campanato_of_square() {
        let g = Grid::desk(1).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0] * x[0]);
        let alpha = 0.5;
        let cfg = CampanatoConfig::new(alpha, p2(), 0, vec![1.0, 2.0, 4.0]).unwrap();
        let rep = campanato_report(&f, &cfg).unwrap();
        for &(r, v) in &rep.per_radius {
            let want = (2.0 * r).powf(-alpha) * r.powf(2.5) * (8.0f64 / 45.0).sqrt();
            assert!((v - want).abs() <= 2e-2 * want, "r = {r}: {v} vs {want}");
        }
        assert_eq!(rep.argmax, 4.0);
        let c = GridFunction::constant(&g, 3.0);
        assert!(campanato_norm(&c, &cfg).unwrap() <= 1e-12);
        let lin = GridFunction::from_fn(&g, |x| x[0]);
        let cfg1 = CampanatoConfig::new(alpha, p2(), 1, vec![1.0, 2.0]).unwrap();
        assert!(campanato_norm(&lin, &cfg1).unwrap() <= 1e-12);
    }

    #[test]
    fn pairing_with_haar_atoms() {
        let g = Grid::desk(1).unwrap();
        let params = AtomParams::minimal(0.5, p2()).unwrap();
        let cfg = CampanatoConfig::new(0.5, p2(), 0, vec![1.0, 2.0, 4.0]).unwrap();
        let sq = GridFunction::from_fn(&g, |x| x[0] * x[0]);
        let skew = GridFunction::from_fn(&g, |x| x[0] + x[0] * x[0]);
        for r in [1.0, 2.0, 4.0] {
            let a = haar_atom(&g, r, &params).unwrap();
            for f in [&sq, &skew] {
                let rep = dual_pairing_check(f, &a, &cfg, PAIRING_TOL).unwrap();
                assert!(rep.pass, "{rep:?}");
            }
            let c = dual_pairing_check(&GridFunction::constant(&g, 2.0), &a, &cfg, PAIRING_TOL)
                .unwrap();
            assert!(c.pairing <= 1e-12 && c.pass);
        }
        let a = haar_atom(&g, 0.5, &params).unwrap();
        assert!(matches!(
            dual_pairing_check(&sq, &a, &cfg, PAIRING_TOL),
            Err(HerzError::InvalidAtom(_))
        ));
    }
}
