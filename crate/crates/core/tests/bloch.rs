//! Bloch dispersion relation against independent oracles.

use chfront::bloch::{bloch_d, coarsening_curve, fold_to_cell, solve_bloch_root, Background};
use chfront::dispersion::{spatial_roots, spreading_speed};
use chfront::Parameters;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn constant_background_zeros_are_folded_dispersion_roots() {
    for (m, period) in [(0.0, 8.0), (0.3, 11.0)] {
        let alpha = Parameters::from_mass(m).alpha;
        let k = 2.0 * PI / period;
        let bg = Background::trivial(m, period);
        let lambda = C::new(0.07, 0.21);
        let folded: Vec<C> = spatial_roots(lambda, alpha, 0.0).into_iter().map(|nu| fold_to_cell(nu, k)).collect();
        for nu in &folded {
            let z = fold_to_cell(solve_bloch_root(&bg, lambda, nu + C::new(1e-3, -1e-3)).unwrap(), k);
            let err = folded.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(err < 1e-6, "m = {m}: {z} off by {err}");
        }
    }
}

#[test]
fn homogeneous_zero_set_is_shift_invariant() {
    // e^{nu x} and e^{(nu + i k) x} are the same Bloch mode on period 2 pi / k
    let bg = Background::trivial(0.1, 7.5);
    let k = bg.k_p();
    let (lambda, nu) = (C::new(-0.03, 0.4), C::new(0.2, -0.35));
    let a = bloch_d(&bg, lambda, nu).unwrap();
    let b = bloch_d(&bg, lambda, nu + C::new(0.0, 3.0 * k)).unwrap();
    assert!((a - b).norm() < 1e-8 * a.norm(), "{a} vs {b}");
}

#[test]
fn conjugate_exponents_below_doubling() {
    let masses = [0.1, 0.12, 0.14, 0.16];
    let curve = coarsening_curve(&masses).unwrap();
    for p in &curve.points {
        assert!(!p.doubled);
        let defect = 1.0 / p.delta_k1 + 1.0 / p.delta_k2 - 1.0;
        assert!(defect.abs() < 1e-6, "m = {}: {defect}", p.m);
        assert!(p.s_coars > 0.0 && p.s_coars < p.s_lin);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spreading_speed_scales_with_alpha(alpha in 0.05f64..1.0) {
        let base = spreading_speed(1.0).unwrap();
        let r = spreading_speed(alpha).unwrap();
        prop_assert!((r.s / (base.s * alpha.powf(1.5)) - 1.0).abs() < 1e-8);
        prop_assert!((r.omega / (base.omega * alpha * alpha) - 1.0).abs() < 1e-8);
        prop_assert!((r.k_lin / (base.k_lin * alpha.sqrt()) - 1.0).abs() < 1e-8);
    }
}
