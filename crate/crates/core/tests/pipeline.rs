use herzlab::atoms::{
    atomic_decompose, build_partition, build_restricted_partition, coefficient_ell_q, haar_atom,
    reconstruct, reconstruction_residual, validate_atom, AtomParams, TOL_MOMENTS, TOL_RECON,
    TOL_SIZE,
};
use herzlab::grid::Grid;
use herzlab::maximal::{grand_maximal, MaximalConfig};
use herzlab::molecules::{molecule_to_atoms, power_tail_molecule, Molecule, MoleculeParams};
use herzlab::norms::{herz_norm, ExponentVector, HerzParams};
use herzlab::suite::{
    criterion_duality, criterion_mixed_norms, criterion_operators, mean_zero_family, SuiteConfig,
};

fn p2() -> ExponentVector {
    ExponentVector::uniform(1, 2.0).unwrap()
}

#[test]
fn scaled_single_atom_decomposes() {
    let g = Grid::desk(1).unwrap();
    let params = AtomParams::minimal(0.5, p2()).unwrap();
    let f = haar_atom(&g, 2.0, &params).unwrap().values.scaled(3.0);
    let cfg = MaximalConfig::for_grid(&g).unwrap();
    let pou = build_partition(&g, -7, 4, 0.2).unwrap();
    let d = atomic_decompose(&f, &params, 1.0, &pou, &cfg).unwrap();
    assert!(reconstruction_residual(&f, &d, &p2()).unwrap() <= TOL_RECON);
    assert!(d.diagnostics.abel_residual <= 1e-10);
    assert!(d
        .entries
        .iter()
        .all(|e| validate_atom(&e.atom, TOL_MOMENTS, TOL_SIZE).pass));
    let herz = HerzParams::homogeneous_for(&g, 0.5, 1.0, p2()).unwrap();
    let mn = herz_norm(&grand_maximal(&f, &cfg).unwrap(), &herz).unwrap();
    let ell = coefficient_ell_q(&d, 1.0).unwrap();
    assert!(
        ell > 0.0 && ell / mn < 50.0 && mn / ell < 50.0,
        "ell_q {ell}, grand {mn}"
    );
}

#[test]
fn mean_zero_family_reconstructs() {
    let g = Grid::new(1, 8.0, 513).unwrap();
    let params = AtomParams::minimal(0.5, p2()).unwrap();
    let cfg = MaximalConfig::for_grid(&g).unwrap();
    let pou = build_partition(&g, -7, 3, 0.2).unwrap();
    for (name, f) in mean_zero_family(&g, 5).iter().take(4) {
        let d = atomic_decompose(f, &params, 1.0, &pou, &cfg).unwrap();
        assert!(
            reconstruction_residual(f, &d, &p2()).unwrap() <= TOL_RECON,
            "{name}"
        );
        assert!(d.diagnostics.abel_residual <= 1e-10, "{name}");
    }
}

#[test]
fn molecule_invariants_and_composition() {
    let g = Grid::desk(1).unwrap();
    let mp = MoleculeParams::new(0.5, p2(), 0, 1.0, false).unwrap();
    let m = Molecule::new(power_tail_molecule(&g, 2.0, 1.0 / 16.0), mp).unwrap();
    let md = molecule_to_atoms(&m, 1.0).unwrap();
    assert!(md.sigma_consistency <= 1e-6, "{}", md.sigma_consistency);
    assert!(md.n0_max <= TOL_MOMENTS);
    assert!(md.decomposition.diagnostics.ell_q.is_finite());

    let rebuilt = reconstruct(&md.decomposition, &g).unwrap();
    let params = AtomParams::new(0.5, p2(), 0, true).unwrap();
    let pou = build_restricted_partition(&g, 4, 0.2).unwrap();
    let cfg = MaximalConfig::for_grid(&g).unwrap();
    let d = atomic_decompose(&rebuilt, &params, 1.0, &pou, &cfg).unwrap();
    let residual = reconstruction_residual(&m.values, &d, &p2()).unwrap();
    assert!(residual <= 2.0 * TOL_RECON, "{residual}");
}

#[test]
fn suite_reports_are_deterministic() {
    let cfg = SuiteConfig::default();
    for run in [
        criterion_mixed_norms,
        criterion_operators,
        criterion_duality,
    ] {
        let a = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
