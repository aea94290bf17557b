mod common;

use common::{brute_force, eigen_zeta, rel_diff, AffineSurrogate, TunedSquare};
use pem_plate::dynamics::{damping_at, optimize_resistance, SearchOptions};

#[test]
fn reduced_matrices_are_affine_in_resistance() {
    let t = TunedSquare::new(6, "simply_supported+grounded", 4);
    let basis = t.pair_basis();
    let s = AffineSurrogate::new(&t, &basis);
    let direct = t.reduced(0.37, &basis);
    let affine = s.at(0.37);
    assert!(rel_diff(&direct.k1, &affine.k1) < 1e-12);
    assert!(rel_diff(&direct.k0, &affine.k0) < 1e-12);
    assert!((direct.rate_shift - affine.rate_shift).abs() < 1e-14 * direct.rate_shift);
}

#[test]
fn fitted_decay_tracks_eigenvalues_away_from_the_optimum() {
    let t = TunedSquare::new(6, "simply_supported+grounded", 4);
    let s = AffineSurrogate::new(&t, &t.pair_basis());
    let omega = s.base.omega[0];
    let opts = SearchOptions::default();
    // over-damped: one slow real branch dominates the tail
    for r in [0.3, 1.5] {
        let fit = damping_at(&|r| Ok(s.at(r)), r, 0, &opts).unwrap();
        let exact = eigen_zeta(&s.at(r), omega);
        assert!((fit.zeta - exact).abs() < 0.01 * exact, "R = {r}: fit {} vs eigen {exact}", fit.zeta);
    }
    // under-damped: two beating branches with slightly different rates, the
    // fit sees their mix and lands just above the slower one
    let fit = damping_at(&|r| Ok(s.at(r)), 0.02, 0, &opts).unwrap();
    let exact = eigen_zeta(&s.at(0.02), omega);
    assert!(fit.zeta >= exact && fit.zeta < 1.06 * exact, "R = 0.02: fit {} vs eigen {exact}", fit.zeta);
}

#[test]
fn searched_optimum_matches_brute_force() {
    let t = TunedSquare::new(8, "simply_supported+grounded", 4);
    let s = AffineSurrogate::new(&t, &t.pair_basis());
    let (r_bf, z_bf) = brute_force(&s, 1e-3, 10.0, 1e-3);
    let report = optimize_resistance(|r| Ok(s.at(r)), 0, (1e-3, 10.0), &SearchOptions::default()).unwrap();
    let rel = (report.best_resistance / r_bf - 1.0).abs();
    println!("brute force R = {r_bf:.6e} (zeta {z_bf:.6e}), search R = {:.6e} (zeta {:.6e}), rel {rel:.3e}", report.best_resistance, report.best_zeta);
    assert!(report.unimodal);
    assert!(rel <= 0.02);
}
