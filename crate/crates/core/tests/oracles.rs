//! Closed forms checked against independent evaluations.

use approx::assert_relative_eq;

use hslab_core::cylinder::{bubble_profile, hs_bubble, rayleigh_quotient, Grid};
use hslab_core::params::{
    gamma_c_star, gamma_thresholds, hardy_sobolev_constant, make_params, sobolev_constant, spectral_gap_formula,
};
use hslab_core::spectrum::{sector_eigs_extrapolated, spectrum_grid};

/// ln Γ(x) by the Lanczos approximation (g = 7, n = 9).
fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

#[test]
fn lanczos_gamma_sanity() {
    assert_relative_eq!(ln_gamma(5.0).exp(), 24.0, max_relative = 1e-13);
    assert_relative_eq!(ln_gamma(0.5).exp(), std::f64::consts::PI.sqrt(), max_relative = 1e-13);
}

#[test]
fn sobolev_constant_matches_gamma_function_form() {
    for dim in 3..=12 {
        let n = dim as f64;
        let ratio = (ln_gamma(n / 2.0) - ln_gamma(n)).exp();
        let oracle = std::f64::consts::PI * n * (n - 2.0) * ratio.powf(2.0 / n);
        assert_relative_eq!(sobolev_constant::<f64>(dim), oracle, max_relative = 1e-12);
    }
}

#[test]
fn hardy_sobolev_constant_scales_with_theta() {
    for (dim, gamma) in [(3, 0.1), (4, 0.75), (5, 1.5), (7, 3.0)] {
        let p = make_params(dim, gamma).unwrap();
        let theta = (1.0 - 4.0 * gamma / ((dim as f64 - 2.0).powi(2))).sqrt();
        assert_relative_eq!(p.theta, theta, max_relative = 1e-14);
        let ts = 2.0 * dim as f64 / (dim as f64 - 2.0);
        let oracle = theta.powf(1.0 + 2.0 / ts) * sobolev_constant::<f64>(dim);
        assert_relative_eq!(hardy_sobolev_constant(&p), oracle, max_relative = 1e-13);
        // the bubble attains it
        let g = Grid::default_for(&p);
        let u = hs_bubble(&p, &g, 0.0).unwrap();
        assert_relative_eq!(rayleigh_quotient(&u), oracle, max_relative = 1e-8);
    }
}

/// Bound-state eigenvalue of sector k, level j, up to the common factor θ²/A.
fn pt_level(dim: usize, eps: f64, theta: f64, k: usize, j: usize) -> f64 {
    let nu = (((k * (k + dim - 2)) as f64) + eps * eps).sqrt() / theta + j as f64;
    nu * (nu + 1.0)
}

#[test]
fn local_level_matches_poschl_teller_ratio() {
    for dim in 3..=8usize {
        let gmax = ((dim - 2) * (dim - 2)) as f64 / 4.0;
        for i in 1..40 {
            let p = make_params(dim, gmax * i as f64 / 40.0).unwrap();
            let mu2 = pt_level(dim, p.eps, p.theta, 0, 1);
            let mu3 = pt_level(dim, p.eps, p.theta, 1, 0).min(pt_level(dim, p.eps, p.theta, 0, 2));
            assert_relative_eq!(spectral_gap_formula(&p), 1.0 - mu2 / mu3, max_relative = 1e-12);
        }
    }
    let p = make_params(4, 0.75).unwrap();
    assert_relative_eq!(spectral_gap_formula(&p), 0.5, max_relative = 1e-14);
    assert_relative_eq!(gamma_c_star::<f64>(4), 0.625, max_relative = 1e-14);
}

#[test]
fn n3_threshold() {
    let th = gamma_thresholds::<f64>(3, None).unwrap();
    let closed = (1.0 - (3.0f64 / 7.0).powf(1.5)) / 4.0;
    assert_relative_eq!(th.gamma0, closed, max_relative = 1e-12);
    assert!((th.gamma0 - 0.1798585).abs() < 5e-8);
    assert_relative_eq!(th.gamma_c_star, 1.0 / 6.0, max_relative = 1e-14);
}

/// −ψ″ + a²ψ = μ A sech²(θt) ψ has bound states μ_j = θ² ν(ν+1)/A with ν = a/θ + j.
#[test]
fn sector_eigenvalues_match_poschl_teller() {
    for (dim, gamma) in [(3, 0.15), (4, 0.75), (5, 1.0)] {
        let p = make_params(dim, gamma).unwrap();
        let g = spectrum_grid(&p);
        let ts = p.two_star;
        let amp = bubble_profile::<f64>(&p, 0.0).powf(ts - 2.0);
        for k in 0..3usize {
            let eigs = sector_eigs_extrapolated(&p, &g, k, 2).unwrap();
            for (j, mu) in eigs.iter().enumerate() {
                let oracle = p.theta * p.theta * pt_level(dim, p.eps, p.theta, k, j) / amp;
                assert_relative_eq!(*mu, oracle, max_relative = 1e-6);
            }
        }
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let p32 = make_params(4usize, 0.75f32).unwrap();
    let p64 = make_params(4usize, 0.75f64).unwrap();
    assert!((hardy_sobolev_constant(&p32) as f64 - hardy_sobolev_constant(&p64)).abs() < 1e-5);
    assert!((spectral_gap_formula(&p32) as f64 - 0.5).abs() < 1e-6);
    let g = hslab_core::Grid32::default_for(&p32);
    let u = hs_bubble(&p32, &g, 0.0f32).unwrap();
    assert!((rayleigh_quotient(&u) as f64 - hardy_sobolev_constant(&p64)).abs() < 1e-3);
}
