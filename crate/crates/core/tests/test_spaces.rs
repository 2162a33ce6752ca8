use furry_density::potential::{RadialFunction, SingularityClass};
use furry_density::test_spaces::{classify, d0_grid, d_grid, inclusion_spotchecks, norm_k0, norm_k0_tol, norm_ksdelta, norm_ksdelta_tol};
use furry_density::{Coupling, Error};
use statrs::function::gamma::{gamma, gamma_lr};

fn indicator() -> RadialFunction {
    RadialFunction::new("1[r<=1]", |r| if r <= 1.0 { 1.0 } else { 0.0 }).with_support(1.0)
}

/// γ(a, x), lower incomplete gamma
fn lower_gamma(a: f64, x: f64) -> f64 {
    gamma_lr(a, x) * gamma(a)
}

/// Γ(3, x) = e^{−x}(x² + 2x + 2)
fn upper_gamma3(x: f64) -> f64 {
    (-x).exp() * (x * x + 2.0 * x + 2.0)
}

#[test]
fn k0_closed_forms() {
    let v = norm_k0(&indicator(), 0.75).unwrap().value.unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-9, "{v}");
    assert_eq!(norm_k0(&RadialFunction::zero(), 0.75).unwrap().value, Some(0.0));
    // ∫₀¹ r^{-1/2} = 2 but ∫₁^∞ 1/r diverges
    assert!(!norm_k0(&RadialFunction::power(1.0, 1.0, 0.0), 0.75).unwrap().is_finite());
    let e = norm_k0(&RadialFunction::exp(1.0, 1.0), 0.75).unwrap().value.unwrap();
    let want = lower_gamma(1.5, 1.0) + (-1.0f64).exp();
    assert!((e - want).abs() < 1e-9 * want);
}

#[test]
fn nan_evaluator_is_an_error() {
    let u = RadialFunction::new("nan", |_| f64::NAN);
    assert!(matches!(norm_k0(&u, 0.75), Err(Error::PotentialEvaluation { .. })));
    assert!(norm_ksdelta(&u, 0.75, 0.0).is_err());
}

#[test]
fn parameters_are_checked() {
    let u = RadialFunction::exp(1.0, 1.0);
    assert!(matches!(norm_k0(&u, 0.4), Err(Error::Parameter(_))));
    assert!(matches!(norm_ksdelta(&u, 0.75, 0.6), Err(Error::Parameter(_))));
}

#[test]
fn compact_support_gives_finite_supremum() {
    let n = norm_ksdelta(&indicator(), 0.75, 0.0).unwrap();
    // only the first piece survives: R^{−1/2}·∫₀¹ r^{1/2} = (2/3)R^{−1/2}, largest at R = 1
    assert!((n.value.unwrap() - 2.0 / 3.0).abs() < 1e-9);
    assert!((n.argmax - 1.0).abs() < 1e-6);
}

/// Bracket of e^{−r} at s = ¾, δ = 0:
/// R^{−1/2} γ(3/2, R) + R^{−2}(Γ(3, R) − Γ(3, R²)) + R² e^{−R²}.
fn exp_bracket(r: f64) -> f64 {
    r.powf(-0.5) * lower_gamma(1.5, r) + (upper_gamma3(r) - upper_gamma3(r * r)) / (r * r) + r * r * (-r * r).exp()
}

#[test]
fn exponential_ksdelta_matches_closed_form() {
    let oracle = (0..=100_000).map(|k| exp_bracket(100f64.powf(k as f64 / 100_000.0))).fold(0.0, f64::max);
    let n = norm_ksdelta(&RadialFunction::exp(1.0, 1.0), 0.75, 0.0).unwrap().value.unwrap();
    assert!((n - oracle).abs() < 1e-6 * oracle, "{n} vs {oracle}");
    for delta in [0.1, 0.3, 0.5] {
        assert!(norm_ksdelta(&RadialFunction::exp(1.0, 1.0), 0.75, delta).unwrap().is_finite());
    }
}

#[test]
fn inverse_three_halves_tail_bracket_grows() {
    // r^{−3/2}1_{r>1}, s = ¾, δ = 0: the pieces are R^{−1/2} ln R,
    // (2/3)(R − R^{−1/2}) and 2R, so the bracket grows like 8R/3 and the
    // supremum over R ≥ 1 is not attained
    let u = RadialFunction::power(1.0, 1.5, 1.0);
    assert!(!norm_ksdelta(&u, 0.75, 0.0).unwrap().is_finite());
    assert!(norm_k0(&u, 0.75).unwrap().is_finite());
}

#[test]
fn norms_are_homogeneous() {
    let us = [RadialFunction::exp(1.0, 1.0), indicator(), RadialFunction::coulomb_power_tail(1.0, 1.6)];
    for u in &us {
        let a0 = norm_k0(u, 0.75).unwrap().value.unwrap();
        let b0 = norm_ksdelta(u, 0.52, 0.02).unwrap().value.unwrap();
        for c in [2.0, 10.0] {
            let cu = u.scaled(c);
            let a = norm_k0(&cu, 0.75).unwrap().value.unwrap();
            let b = norm_ksdelta(&cu, 0.52, 0.02).unwrap().value.unwrap();
            assert!((a - c * a0).abs() <= 1e-12 * a, "{}: {a} vs {}", u.tag, c * a0);
            assert!((b - c * b0).abs() <= 1e-12 * b, "{}: {b} vs {}", u.tag, c * b0);
        }
    }
}

#[test]
fn norms_are_monotone() {
    let small = RadialFunction::exp(1.0, 2.0);
    let big = RadialFunction::exp(1.0, 1.0);
    for s in [0.55, 0.75, 1.0] {
        assert!(norm_k0(&small, s).unwrap().value.unwrap() <= norm_k0(&big, s).unwrap().value.unwrap());
        assert!(norm_ksdelta(&small, s, 0.0).unwrap().value.unwrap() <= norm_ksdelta(&big, s, 0.0).unwrap().value.unwrap());
    }
}

#[test]
fn quadrature_refinement_is_converged() {
    let us = [RadialFunction::exp(1.0, 1.0), RadialFunction::yukawa(1.0, 0.5), RadialFunction::coulomb_power_tail(1.0, 1.6)];
    for u in &us {
        let a = norm_k0_tol(u, 0.75, 1e-8).unwrap().value.unwrap();
        let b = norm_k0_tol(u, 0.75, 1e-11).unwrap().value.unwrap();
        assert!((a - b).abs() < 1e-6 * b, "{}", u.tag);
        let a = norm_ksdelta_tol(u, 0.52, 0.0, 1e-8).unwrap().value.unwrap();
        let b = norm_ksdelta_tol(u, 0.52, 0.0, 1e-11).unwrap().value.unwrap();
        assert!((a - b).abs() < 1e-6 * b, "{}", u.tag);
    }
}

#[test]
fn witness_grids_respect_their_ranges() {
    let c = Coupling::from_gamma(0.5).unwrap();
    let g0 = d0_grid(&c);
    assert_eq!(g0.len(), 25);
    assert!(g0.iter().all(|w| 0.5 < w.s_prime && w.s_prime < w.s && w.s <= 1.0));
    let high = Coupling::from_gamma(0.95).unwrap();
    assert!(d0_grid(&high).iter().all(|w| w.s < 1.5 - high.sigma_gamma));
    let gd = d_grid();
    assert_eq!(gd.len(), 25);
    assert!(gd.iter().all(|w| 0.5 < 2.0 * w.s / 3.0 + 1.0 / 6.0 && 2.0 * w.s / 3.0 + 1.0 / 6.0 <= w.s_prime + 1e-15 && w.s_prime < w.s && w.s <= 0.75));
}

#[test]
fn model_test_functions_are_classified() {
    let c = Coupling::from_gamma(0.5).unwrap();
    let slow = classify(&RadialFunction::coulomb_power_tail(1.0, 1.2), &c).unwrap();
    assert!(slow.split);
    assert!(slow.d0_witness.is_some());
    assert!(slow.d_witness.is_none());
    let fast = classify(&RadialFunction::coulomb_power_tail(1.0, 1.6), &c).unwrap();
    assert!(fast.d0_witness.is_some() && fast.d_witness.is_some());
    assert!(!fast.coulomb_compact);
    let cut = classify(&RadialFunction::cutoff_coulomb(1.0, f64::INFINITY, 5.0), &c).unwrap();
    assert!(cut.coulomb_compact && cut.split);
}

#[test]
fn inclusions_hold_on_samples() {
    let root = RadialFunction::new("r^-1/2*1[r<=1]", |r| if r <= 1.0 { r.powf(-0.5) } else { 0.0 })
        .with_singularity(SingularityClass::Power(0.5))
        .with_support(1.0);
    let samples = [RadialFunction::exp(1.0, 1.0), root, RadialFunction::power(1.0, 1.0, 1.0)];
    let rows = inclusion_spotchecks(&samples, 0.75, 0.7, 0.2).unwrap();
    assert!(rows[0].k0_s && rows[0].ks_delta && rows[0].ks_prime_4 == Some(true));
    assert!(rows[1].k0_s_prime && rows[1].k0_s && rows[1].ks_0 && rows[1].ks_delta);
    assert!(!rows[2].k0_s && !rows[2].ks_0);
    assert!(inclusion_spotchecks(&samples, 0.7, 0.75, 0.0).is_err());
}
