use proptest::prelude::*;

use herzlab::atoms::{haar_atom, AtomParams, Decomposition};
use herzlab::duality::{campanato_norm, CampanatoConfig};
use herzlab::dyadic::{dyadic_masks, pow2};
use herzlab::grid::{quadrature_integrate, Grid, GridFunction, Mask};
use herzlab::maximal::{
    auxiliary_maximal, grand_maximal, hl_maximal, nontangential_maximal, smooth_maximal,
    MaximalConfig, SmoothingKernel,
};
use herzlab::norms::{herz_norm, mixed_lebesgue_norm, ExponentVector, HerzParams};
use herzlab::operators::{cz_apply, KernelSpec};
use herzlab::testfns;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

fn p_vec(dim: usize) -> impl Strategy<Value = ExponentVector> {
    prop::collection::vec(1.05f64..8.0, dim).prop_map(|p| ExponentVector::new(p).unwrap())
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn mixed_norm_is_homogeneous(seed in 0u64..1000, c in -50.0f64..50.0, p in p_vec(2)) {
        let g = Grid::new(2, 2.0, 17).unwrap();
        let f = testfns::random_smooth(&g, seed, 4, 3.0, 2.0);
        let base = mixed_lebesgue_norm(&f, &p, None).unwrap();
        let scaled = mixed_lebesgue_norm(&f.scaled(c), &p, None).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * c.abs() * base + f64::MIN_POSITIVE);
        // Powers of two scale exactly.
        let exact = mixed_lebesgue_norm(&f.scaled(-4.0), &p, None).unwrap();
        prop_assert_eq!(exact, 4.0 * base);
    }

    #[test]
    fn mixed_holder(seed in 0u64..1000, p in p_vec(2)) {
        let g = Grid::new(2, 2.0, 17).unwrap();
        let f = testfns::random_smooth(&g, seed, 4, 3.0, 2.0);
        let h = testfns::random_smooth(&g, seed + 7, 4, 3.0, 2.0);
        let lhs = quadrature_integrate(&f.mul(&h).unwrap(), None).unwrap().abs();
        let rhs = mixed_lebesgue_norm(&f, &p, None).unwrap() * mixed_lebesgue_norm(&h, &p.conjugate(), None).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn separable_functions_factor(w0 in 0.3f64..1.0, w1 in 0.3f64..1.0, p0 in 1.1f64..6.0, p1 in 1.1f64..6.0) {
        let g2 = Grid::new(2, 4.0, 65).unwrap();
        let g1 = Grid::new(1, 4.0, 65).unwrap();
        let f = GridFunction::from_fn(&g2, |x| (-(x[0] / w0).powi(2)).exp() * (-(x[1] / w1).powi(2)).exp());
        let a = GridFunction::from_fn(&g1, |x| (-(x[0] / w0).powi(2)).exp());
        let b = GridFunction::from_fn(&g1, |x| (-(x[0] / w1).powi(2)).exp());
        let mixed = mixed_lebesgue_norm(&f, &ExponentVector::new(vec![p0, p1]).unwrap(), None).unwrap();
        let na = mixed_lebesgue_norm(&a, &ExponentVector::new(vec![p0]).unwrap(), None).unwrap();
        let nb = mixed_lebesgue_norm(&b, &ExponentVector::new(vec![p1]).unwrap(), None).unwrap();
        prop_assert!((mixed / (na * nb) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn norms_are_monotone_in_the_mask(seed in 0u64..1000, r in 0.2f64..1.5, p in p_vec(2)) {
        let g = Grid::new(2, 2.0, 17).unwrap();
        let f = testfns::random_smooth(&g, seed, 4, 3.0, 2.0);
        let small = Mask::ball(&g, r);
        let big = Mask::ball(&g, r + 0.4);
        prop_assert!(mixed_lebesgue_norm(&f, &p, Some(&small)).unwrap() <= mixed_lebesgue_norm(&f, &p, Some(&big)).unwrap());
    }

    #[test]
    fn herz_norm_scales(seed in 0u64..1000, c in -10.0f64..10.0, alpha in -0.5f64..1.5, q in 0.5f64..4.0) {
        let g = Grid::new(1, 8.0, 257).unwrap();
        let f = testfns::random_smooth(&g, seed, 5, 3.0, 4.0);
        let params = HerzParams::homogeneous_for(&g, alpha, q, ExponentVector::uniform(1, 2.0).unwrap()).unwrap();
        let base = herz_norm(&f, &params).unwrap();
        let scaled = herz_norm(&f.scaled(c), &params).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (1.0 + c.abs() * base));
    }

    #[test]
    fn shells_partition_the_annulus(k_lo in -3i32..0, k_hi in 0i32..3) {
        let g = Grid::new(2, 4.0, 33).unwrap();
        let geo = dyadic_masks(&g, k_lo, k_hi, 0.1).unwrap();
        for i in 0..g.len() {
            let r = g.norm(i);
            let hits = (k_lo..=k_hi).filter(|&k| geo.annulus(k).get(i)).count();
            let inside = r > pow2(k_lo - 1) && r <= pow2(k_hi);
            prop_assert_eq!(hits, usize::from(inside));
        }
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn maximal_operators_are_sublinear(s1 in 0u64..1000, s2 in 0u64..1000) {
        let g = Grid::new(1, 4.0, 129).unwrap();
        let cfg = MaximalConfig::with_levels(&g, 5).unwrap();
        let phi = SmoothingKernel::gaussian(1.0);
        let f = testfns::random_smooth(&g, s1, 4, 3.0, 2.0);
        let h = testfns::random_smooth(&g, s2, 4, 3.0, 2.0);
        let sum = f.add(&h).unwrap();
        type Op<'a> = Box<dyn Fn(&GridFunction) -> GridFunction + 'a>;
        let ops: Vec<Op> = vec![
            Box::new(hl_maximal),
            Box::new(|u| smooth_maximal(u, &phi, &cfg).unwrap()),
            Box::new(|u| nontangential_maximal(u, &phi, 2.0, &cfg).unwrap()),
            Box::new(|u| auxiliary_maximal(u, &phi, 2.0, &cfg).unwrap()),
            Box::new(|u| grand_maximal(u, &cfg).unwrap()),
        ];
        for op in &ops {
            let (a, b, c) = (op(&f), op(&h), op(&sum));
            for i in 0..g.len() {
                let bound = a.values()[i] + b.values()[i];
                prop_assert!(c.values()[i] <= bound * (1.0 + 1e-12) + 1e-300);
            }
            let (lhs, rhs) = (op(&f.scaled(-2.0)), a.scaled(2.0));
            prop_assert_eq!(lhs.values(), rhs.values());
        }
    }

    #[test]
    fn cz_apply_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, c in -4.0f64..4.0) {
        let g = Grid::new(1, 4.0, 129).unwrap();
        let f = testfns::random_smooth(&g, s1, 4, 3.0, 2.0);
        let h = testfns::random_smooth(&g, s2, 4, 3.0, 2.0);
        let tf = cz_apply(&KernelSpec::Hilbert, &f).unwrap();
        let th = cz_apply(&KernelSpec::Hilbert, &h).unwrap();
        let combo = cz_apply(&KernelSpec::Hilbert, &f.add(&h.scaled(c)).unwrap()).unwrap();
        let scale = tf.max_abs() + c.abs() * th.max_abs() + 1.0;
        for i in 0..g.len() {
            prop_assert!((combo.values()[i] - tf.values()[i] - c * th.values()[i]).abs() <= 1e-12 * scale);
        }
        let (lhs, rhs) = (cz_apply(&KernelSpec::Hilbert, &f.scaled(2.0)).unwrap(), tf.scaled(2.0));
        prop_assert_eq!(lhs.values(), rhs.values());
    }

    #[test]
    fn campanato_absorbs_polynomials_and_scales(seed in 0u64..1000, a0 in -5.0f64..5.0, a1 in -5.0f64..5.0, c in -8.0f64..8.0) {
        let g = Grid::new(1, 8.0, 513).unwrap();
        let f = testfns::random_smooth(&g, seed, 5, 3.0, 6.0);
        let p = ExponentVector::uniform(1, 2.0).unwrap();
        let cfg = CampanatoConfig::dyadic(0.5, p, 1, -3, 3).unwrap();
        let base = campanato_norm(&f, &cfg).unwrap();
        let shifted = campanato_norm(&f.add(&GridFunction::from_fn(&g, |x| a0 + a1 * x[0])).unwrap(), &cfg).unwrap();
        prop_assert!((shifted - base).abs() <= 1e-8 * base);
        let scaled = campanato_norm(&f.scaled(c), &cfg).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * c.abs() * base + f64::MIN_POSITIVE);
        prop_assert_eq!(campanato_norm(&f.scaled(-2.0), &cfg).unwrap(), 2.0 * base);
    }

    #[test]
    fn grid_function_json_round_trip(seed in 0u64..1000) {
        let g = Grid::new(2, 2.0, 9).unwrap();
        let f = testfns::random_smooth(&g, seed, 3, 3.0, 2.0);
        let back = GridFunction::from_json(&f.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn decomposition_json_round_trip(k in -2i32..3) {
        let g = Grid::new(1, 8.0, 257).unwrap();
        let params = AtomParams::minimal(0.5, ExponentVector::uniform(1, 2.0).unwrap()).unwrap();
        let a = haar_atom(&g, pow2(k), &params).unwrap();
        let pou = herzlab::atoms::build_partition(&g, -6, 3, 0.2).unwrap();
        let cfg = MaximalConfig::with_levels(&g, 6).unwrap();
        let d = herzlab::atoms::atomic_decompose(&a.values, &params, 1.0, &pou, &cfg).unwrap();
        let back = Decomposition::from_json(&d.to_json().unwrap(), &params).unwrap();
        prop_assert_eq!(back.entries, d.entries);
    }
}
