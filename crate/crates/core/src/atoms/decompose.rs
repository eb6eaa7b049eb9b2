//! Projection onto moment-free blocks and the summation-by-parts tail.

use rayon::prelude::*;

use super::{
    Atom, AtomParams, Decomposition, DecompositionDiagnostics, DecompositionEntry, DroppedPiece,
    PartitionOfUnity, PieceKind, ShellProjection,
};
use crate::dyadic::pow2;
use crate::error::{HerzError, Result};
use crate::grid::{ball_volume, Grid, GridFunction, Mask};
use crate::maximal::{grand_maximal, MaximalConfig};
use crate::norms::{mixed_lebesgue_norm, ExponentVector};
use crate::poly::{monomial, MultiIndex, PolyBasis};

/// Interior pieces whose L1 norm falls below this fraction of their source are dropped.
const DROP_INTERIOR: f64 = 1e-12;
/// Tail pieces below this fraction of `||f||_1` are dropped.
const DROP_TAIL: f64 = 1e-13;
/// Largest admissible uncovered mass relative to `||f||_1`.
const LOST_MASS: f64 = 1e-12;

/// One localized piece `F_k` together with the basis of the node set carrying it.
pub(crate) struct Block {
    pub label: i32,
    pub piece: GridFunction,
    pub basis: PolyBasis,
    /// Radius of the ball containing the tail that ends on this block.
    pub tail_radius: f64,
}

pub(crate) struct InteriorPiece {
    pub label: i32,
    pub g: GridFunction,
}

pub(crate) struct TailPiece {
    pub label: i32,
    pub index: MultiIndex,
    pub h: GridFunction,
    pub radius: f64,
}

pub(crate) struct Pieces {
    pub interior: Vec<(InteriorPiece, f64)>,
    pub tails: Vec<TailPiece>,
    pub projections: Vec<ShellProjection>,
    /// `S_{K,d}`: moment sums over all blocks.
    pub total_moments: Vec<f64>,
    pub abel_residual: f64,
    pub dropped: Vec<DroppedPiece>,
}

/// `int F x^d` restricted to the basis nodes, for every `d`.
fn moments_on(grid: &Grid, basis: &PolyBasis, values: &[f64]) -> Vec<f64> {
    let hn = grid.cell_volume();
    basis
        .indices()
        .iter()
        .map(|ix| {
            basis
                .nodes()
                .iter()
                .map(|&i| values[i] * monomial(ix, grid.point(i)))
                .sum::<f64>()
                * hn
        })
        .collect()
}

/// `e_d = psi_d chi / |node set|`, so that `int e_d x^beta = delta_{d beta}`.
fn dual_blocks(grid: &Grid, basis: &PolyBasis) -> Vec<GridFunction> {
    let meas = basis.measure();
    (0..basis.len())
        .map(|d| {
            let mut v = vec![0.0; grid.len()];
            for &i in basis.nodes() {
                v[i] = basis.dual(d, grid.point(i)) / meas;
            }
            GridFunction::from_vec_unchecked(*grid, v)
        })
        .collect()
}

fn combine(grid: &Grid, coeffs: &[f64], fs: &[GridFunction]) -> GridFunction {
    let mut out = GridFunction::zeros(grid);
    for (c, f) in coeffs.iter().zip(fs) {
        if *c != 0.0 {
            out.axpy(*c, f).expect("same grid");
        }
    }
    out
}

/// Splits `sum_k F_k` into moment-free interior pieces `F_k - P_k` and the
/// telescoped tail `sum_k S_k (e_k - e_{k+1})`, where `P_k = sum_d mu_{k,d} e_{k,d}`
/// matches the moments of `F_k` and `S_k` are the partial moment sums.
pub(crate) fn project_and_telescope(
    grid: &Grid,
    blocks: &[Block],
    p: &ExponentVector,
    total_l1: f64,
) -> Result<Pieces> {
    struct Projected {
        mu: Vec<f64>,
        e: Vec<GridFunction>,
        p: GridFunction,
        g: GridFunction,
    }
    let projected: Vec<Projected> = blocks
        .par_iter()
        .map(|b| {
            let e = dual_blocks(grid, &b.basis);
            let mut mu = moments_on(grid, &b.basis, b.piece.values());
            let mut proj = combine(grid, &mu, &e);
            // One refinement pass removes the rounding left in the moment match.
            let resid = b.piece.sub(&proj).expect("same grid");
            let r = moments_on(grid, &b.basis, resid.values());
            for (m, ri) in mu.iter_mut().zip(&r) {
                *m += ri;
            }
            proj = combine(grid, &mu, &e);
            let g = b.piece.sub(&proj).expect("same grid");
            Projected { mu, e, p: proj, g }
        })
        .collect();

    let mut interior = Vec::new();
    let mut dropped = Vec::new();
    let mut projections = Vec::new();
    let dim_p = blocks.first().map_or(0, |b| b.basis.len());
    let mut partial = vec![0.0; dim_p];
    let mut partials = Vec::with_capacity(blocks.len());
    for (b, pr) in blocks.iter().zip(&projected) {
        for (s, m) in partial.iter_mut().zip(&pr.mu) {
            *s += m;
        }
        partials.push(partial.clone());
        projections.push(ShellProjection {
            shell: b.label,
            moments: pr.mu.clone(),
            partial_moments: partial.clone(),
            projection_norm: mixed_lebesgue_norm(&pr.p, p, None)?,
        });
        let src = b.piece.l1_norm();
        let gl1 = pr.g.l1_norm();
        if gl1 <= DROP_INTERIOR * src {
            dropped.push(DroppedPiece {
                shell: b.label,
                kind: PieceKind::Interior,
                multi_index: vec![],
                l1_norm: gl1,
                reason: "projection reproduces the shell piece".into(),
            });
        } else {
            interior.push((
                InteriorPiece {
                    label: b.label,
                    g: pr.g.clone(),
                },
                src,
            ));
        }
    }

    let mut tails = Vec::new();
    for j in 0..blocks.len().saturating_sub(1) {
        let next = &blocks[j + 1];
        for (d, ix) in blocks[j].basis.indices().iter().enumerate() {
            let s = partials[j][d];
            let mut h = projected[j].e[d].scaled(s);
            h.axpy(-s, &projected[j + 1].e[d])?;
            let label = next.label - 1;
            let multi_index = index_vec(grid, ix);
            let l1 = h.l1_norm();
            if l1 <= DROP_TAIL * total_l1 {
                if s != 0.0 {
                    dropped.push(DroppedPiece {
                        shell: label,
                        kind: PieceKind::Tail,
                        multi_index,
                        l1_norm: l1,
                        reason: "negligible partial moment".into(),
                    });
                }
                continue;
            }
            tails.push(TailPiece {
                label,
                index: *ix,
                h,
                radius: next.tail_radius,
            });
        }
    }

    // Summation by parts, checked after every block against the running sum of projections.
    let mut abel_residual = 0.0f64;
    let mut sum_p = GridFunction::zeros(grid);
    let mut sum_h = GridFunction::zeros(grid);
    for j in 0..blocks.len() {
        sum_p.axpy(1.0, &projected[j].p)?;
        if j > 0 {
            for d in 0..dim_p {
                let s = partials[j - 1][d];
                sum_h.axpy(s, &projected[j - 1].e[d])?;
                sum_h.axpy(-s, &projected[j].e[d])?;
            }
        }
        let boundary = combine(grid, &partials[j], &projected[j].e);
        let scale = sum_p.max_abs().max(boundary.max_abs());
        if scale > 0.0 {
            let diff = sum_p.sub(&sum_h)?.sub(&boundary)?;
            abel_residual = abel_residual.max(diff.max_abs() / scale);
        }
    }

    Ok(Pieces {
        interior,
        tails,
        projections,
        total_moments: partials.last().cloned().unwrap_or_default(),
        abel_residual,
        dropped,
    })
}

pub(crate) fn index_vec(grid: &Grid, ix: &MultiIndex) -> Vec<usize> {
    ix[..grid.dim()].to_vec()
}

/// Largest `|S_d| / (||f||_1 rho^{|d|})`.
pub(crate) fn scaled_total_moment(total: &[f64], indices: &[MultiIndex], l1: f64, rho: f64) -> f64 {
    total
        .iter()
        .zip(indices)
        .map(|(s, ix)| s.abs() / (l1 * rho.powi((ix[0] + ix[1]) as i32)))
        .fold(0.0, f64::max)
}

/// Mass of `f` on nodes outside `covered`.
pub(crate) fn uncovered_mass(f: &GridFunction, covered: &Mask) -> f64 {
    let hn = f.grid().cell_volume();
    f.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| !covered.get(*i))
        .map(|(_, v)| v.abs())
        .sum::<f64>()
        * hn
}

pub(crate) fn check_overflow(f: &GridFunction, covered: &Mask) -> Result<f64> {
    let lost = uncovered_mass(f, covered);
    let l1 = f.l1_norm();
    let relative = if l1 > 0.0 { lost / l1 } else { 0.0 };
    if relative > LOST_MASS {
        return Err(HerzError::ShellOverflow {
            lost_mass: lost,
            relative,
        });
    }
    Ok(lost)
}

/// `N_k = sum_{l=k-1}^{k+1} ||(M_N f) chi_l||` for every shell of the partition.
fn normalizers(
    mnf: &GridFunction,
    p: &ExponentVector,
    pou: &PartitionOfUnity,
) -> Result<Vec<(i32, f64)>> {
    let grid = mnf.grid();
    let shell_norm = |l: i32| -> Result<f64> {
        let mask = if pou.restricted() {
            match l {
                l if l < 0 => return Ok(0.0),
                0 => Mask::ball(grid, 1.0),
                l => Mask::annulus(grid, pow2(l - 1), pow2(l)),
            }
        } else {
            Mask::annulus(grid, pow2(l - 1), pow2(l))
        };
        mixed_lebesgue_norm(mnf, p, Some(&mask))
    };
    let lo = pou.k_min() - 1;
    let norms: Vec<f64> = (lo..=pou.k_max() + 1)
        .map(shell_norm)
        .collect::<Result<_>>()?;
    Ok(pou
        .shells()
        .map(|k| {
            let j = (k - lo) as usize;
            (k, norms[j - 1] + norms[j] + norms[j + 1])
        })
        .collect())
}

/// Grid-scale central atomic decomposition of `f` over the shells of `pou`.
///
/// Interior atoms `(f Phi_k - P_k) / lambda_k` are supported in `B_{k+1}`, tail atoms
/// in `B_{k+2}`. Coefficients are `C |B_{k+1}|^{alpha/n} N_k` and
/// `C |B_{k+2}|^{alpha/n} N_k` with `N_k` built from the finite-family grand maximal
/// function; each `C` is the smallest value `>= 1` that makes every atom meet its
/// size bound.
pub fn atomic_decompose(
    f: &GridFunction,
    params: &AtomParams,
    q: f64,
    pou: &PartitionOfUnity,
    cfg: &MaximalConfig,
) -> Result<Decomposition> {
    let grid = f.grid();
    grid.ensure_same(pou.grid())?;
    params.p.check_grid(grid)?;
    if !(q.is_finite() && q > 0.0) {
        return Err(HerzError::param(
            "q",
            format!("must satisfy 0 < q < inf, got {q}"),
        ));
    }
    if f.is_zero() {
        return Ok(Decomposition::default());
    }
    let uncovered = check_overflow(f, &pou.covered())?;
    let l1 = f.l1_norm();
    let rho = f.support_radius().unwrap_or(0.0).max(grid.spacing());

    let mnf = grand_maximal(f, cfg)?;
    let norms = normalizers(&mnf, &params.p, pou)?;
    let norm_of = |k: i32| norms[(k - pou.k_min()) as usize].1;

    let blocks: Vec<Block> = pou
        .shells()
        .collect::<Vec<_>>()
        .into_par_iter()
        .filter_map(|k| {
            let piece = f.mul(pou.phi(k)).expect("same grid");
            if piece.is_zero() {
                return None;
            }
            let basis = PolyBasis::new(grid, &pou.support_mask(k), params.s, pou.basis_scale(k), k);
            let r = pow2(k + 1);
            Some(basis.map(|basis| Block {
                label: k,
                piece,
                basis,
                tail_radius: r,
            }))
        })
        .collect::<Result<_>>()?;

    let pieces = project_and_telescope(grid, &blocks, &params.p, l1)?;
    let indices = blocks[0].basis.indices().to_vec();
    let boundary = scaled_total_moment(&pieces.total_moments, &indices, l1, rho);
    if boundary > super::TOL_MOMENTS {
        return Err(HerzError::MomentsNotVanishing {
            degree: params.s,
            max_moment: boundary,
        });
    }

    let alpha_n = params.alpha / grid.dim() as f64;
    let dim = grid.dim();
    let interior: Vec<(i32, GridFunction, f64)> = pieces
        .interior
        .iter()
        .map(|(pc, _)| {
            Ok((
                pc.label,
                pc.g.clone(),
                mixed_lebesgue_norm(&pc.g, &params.p, None)?,
            ))
        })
        .collect::<Result<_>>()?;
    let tails: Vec<(&TailPiece, f64)> = pieces
        .tails
        .iter()
        .map(|t| Ok((t, mixed_lebesgue_norm(&t.h, &params.p, None)?)))
        .collect::<Result<_>>()?;

    let fit = |items: &mut dyn Iterator<Item = (i32, f64)>| -> Result<f64> {
        let mut c = 1.0f64;
        for (k, n) in items {
            let nk = norm_of(k);
            if nk == 0.0 {
                return Err(HerzError::ZeroNormalizer { shell: k, norm: n });
            }
            c = c.max(n / nk);
        }
        Ok(c)
    };
    let c_int = fit(&mut interior.iter().map(|(k, _, n)| (*k, *n)))?;
    let c_tail = fit(&mut tails.iter().map(|(t, n)| (t.label, *n)))?;

    let mut entries = Vec::with_capacity(interior.len() + tails.len());
    for (k, g, _) in interior {
        let r = pow2(k + 1);
        let lambda = c_int * ball_volume(dim, r).powf(alpha_n) * norm_of(k);
        entries.push(DecompositionEntry {
            lambda,
            shell: k,
            kind: PieceKind::Interior,
            multi_index: vec![],
            atom: Atom::new(g.scaled(1.0 / lambda), r, params.clone())?,
        });
    }
    for (t, _) in tails {
        let lambda = c_tail * ball_volume(dim, t.radius).powf(alpha_n) * norm_of(t.label);
        entries.push(DecompositionEntry {
            lambda,
            shell: t.label,
            kind: PieceKind::Tail,
            multi_index: index_vec(grid, &t.index),
            atom: Atom::new(t.h.scaled(1.0 / lambda), t.radius, params.clone())?,
        });
    }

    let mut d = Decomposition {
        entries,
        diagnostics: DecompositionDiagnostics {
            c_interior: c_int,
            c_tail,
            normalizers: norms,
            projections: pieces.projections,
            dropped: pieces.dropped,
            boundary_moment: boundary,
            abel_residual: pieces.abel_residual,
            uncovered_mass: uncovered,
            ell_q: 0.0,
            notes: vec!["normalizers use the finite-family grand maximal function".into()],
        },
        sigma: None,
    };
    d.sort();
    d.diagnostics.ell_q = super::coefficient_ell_q(&d, q)?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{
        build_partition, build_restricted_partition, haar_atom, reconstruction_residual,
        validate_atom, TOL_MOMENTS, TOL_SIZE,
    };
    use crate::testfns;

    fn setup(dim: usize, extent: f64, m: usize) -> (Grid, MaximalConfig) {
        let g = Grid::new(dim, extent, m).unwrap();
        let cfg = MaximalConfig::with_levels(&g, 6).unwrap();
        (g, cfg)
    }

    #[test]
    fn zero_function_is_empty() {
        let (g, cfg) = setup(1, 8.0, 257);
        let pou = build_partition(&g, -4, 3, 0.2).unwrap();
        let params = AtomParams::minimal(0.5, ExponentVector::uniform(1, 2.0).unwrap()).unwrap();
        let d = atomic_decompose(&GridFunction::zeros(&g), &params, 1.0, &pou, &cfg).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn two_shell_atoms_reconstruct() {
        let (g, cfg) = setup(1, 8.0, 513);
        let p = ExponentVector::uniform(1, 2.0).unwrap();
        let params = AtomParams::minimal(0.5, p.clone()).unwrap();
        let a1 = haar_atom(&g, 2.0, &params).unwrap();
        let a3 = haar_atom(&g, 8.0, &params).unwrap();
        let f = a1.values.add(&a3.values.scaled(0.5)).unwrap();
        let pou = build_partition(&g, -5, 3, 0.2).unwrap();
        let d = atomic_decompose(&f, &params, 1.0, &pou, &cfg).unwrap();
        assert!(reconstruction_residual(&f, &d, &p).unwrap() <= 1e-6);
        for e in &d.entries {
            assert!(
                validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass,
                "{:?}",
                e.shell
            );
            assert!(e.atom.radius <= pow2(e.shell + 2));
        }
        assert!(d.diagnostics.abel_residual < 1e-10);
    }

    #[test]
    fn degree_one_in_two_dimensions() {
        let (g, cfg) = setup(2, 4.0, 65);
        let p = ExponentVector::new(vec![2.0, 3.0]).unwrap();
        let params = AtomParams::new(1.8, p.clone(), 1, false).unwrap();
        // Odd in x_1 with balanced first moment, so per-shell moments telescope.
        let a = testfns::odd_gaussian(&g, 0.5);
        let b = testfns::odd_gaussian(&g, 0.7);
        let c = crate::atoms::moment(&a, &[1, 0]) / crate::atoms::moment(&b, &[1, 0]);
        let f = a.sub(&b.scaled(c)).unwrap();
        let pou = build_partition(&g, -4, 2, 0.2).unwrap();
        let d = atomic_decompose(&f, &params, 1.0, &pou, &cfg).unwrap();
        assert!(reconstruction_residual(&f, &d, &p).unwrap() <= 1e-6);
        assert!(d
            .entries
            .iter()
            .all(|e| validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass));
        assert!(d.entries.iter().any(|e| e.kind == PieceKind::Tail));
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let (g, cfg) = setup(1, 8.0, 257);
        let params = AtomParams::minimal(0.5, ExponentVector::uniform(1, 2.0).unwrap()).unwrap();
        let f = testfns::shell_indicator(&g, 0.5, 1.0);
        let pou = build_partition(&g, -4, 3, 0.2).unwrap();
        let err = atomic_decompose(&f, &params, 1.0, &pou, &cfg).unwrap_err();
        assert!(matches!(err, HerzError::MomentsNotVanishing { .. }));
    }

    #[test]
    fn mass_at_origin_overflows() {
        let (g, cfg) = setup(1, 8.0, 257);
        let params = AtomParams::minimal(0.5, ExponentVector::uniform(1, 2.0).unwrap()).unwrap();
        let f = testfns::haar(&g, 1.0)
            .add(&testfns::ball_indicator(&g, 0.0))
            .unwrap();
        let pou = build_partition(&g, -4, 3, 0.2).unwrap();
        let err = atomic_decompose(&f, &params, 1.0, &pou, &cfg).unwrap_err();
        assert!(matches!(err, HerzError::ShellOverflow { .. }));
    }

    #[test]
    fn restricted_pipeline() {
        let (g, cfg) = setup(1, 8.0, 513);
        let p = ExponentVector::uniform(1, 2.0).unwrap();
        let mut params = AtomParams::minimal(0.5, p.clone()).unwrap();
        params.restricted = true;
        let f = testfns::haar(&g, 1.5);
        let pou = build_restricted_partition(&g, 3, 0.2).unwrap();
        let d = atomic_decompose(&f, &params, 1.0, &pou, &cfg).unwrap();
        assert!(reconstruction_residual(&f, &d, &p).unwrap() <= 1e-6);
        for e in &d.entries {
            assert!(e.shell >= 0);
            assert!(validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass);
        }
    }
}
