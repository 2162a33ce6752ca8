use furry_density::linalg;
use furry_density::operator_checks::{
    channel_sandwich, domination_constant, domination_stability, hardy_check, kinetic_comparison, momentum_squared, sandwich,
    sandwich_hypothesis_constant,
};
use furry_density::partial_waves::channel_numbers;
use furry_density::potential::RadialFunction;
use furry_density::radial::build_dirac_channel_gamma;
use furry_density::{Error, RadialGrid};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> RadialGrid {
    RadialGrid::logarithmic(1e-4, 60.0, 160).unwrap()
}

#[test]
fn momentum_squared_is_free_dirac_squared() {
    let g = grid();
    for k in [1, -2] {
        let ch = channel_numbers(k).unwrap();
        let p2 = momentum_squared(&ch, &g).unwrap();
        let d0 = build_dirac_channel_gamma(0.0, &ch, &g, &RadialFunction::zero()).unwrap().matrix.to_dense();
        let want = &d0 * &d0 - DMatrix::<f64>::identity(d0.nrows(), d0.nrows());
        assert!((&p2 - want).amax() < 1e-9 * p2.amax());
        let v = linalg::eigvalsh(&p2).unwrap();
        assert!(v[0] >= -1e-10 * v[v.len() - 1]);
    }
}

#[test]
fn component_hardy_inequalities() {
    let g = grid();
    for k in (1..=3).flat_map(|k| [k, -k]) {
        let h = hardy_check(&channel_numbers(k).unwrap(), &g).unwrap();
        assert!(h.hardy_upper >= -1e-8, "kappa={k}: {}", h.hardy_upper);
        assert!(h.hardy_lower >= -1e-8, "kappa={k}: {}", h.hardy_lower);
        if k.abs() >= 2 {
            assert!(h.holds(1e-8), "kappa={k}: {}", h.channel_form);
        }
    }
}

#[test]
fn channel_form_fails_for_the_s_wave() {
    // p²₀ ≥ (κ²/2) r⁻² would need ½ ≤ ¼, the sharp Hardy constant for ℓ = 0;
    // the ratio approaches ¼/½ − 1 from above
    let h = hardy_check(&channel_numbers(1).unwrap(), &grid()).unwrap();
    assert!(h.channel_form < -0.3 && h.channel_form > -0.5 - 1e-9, "{}", h.channel_form);
    assert!(h.hardy_upper >= -1e-8);
}

#[test]
fn kinetic_comparison_holds() {
    let g = grid();
    for k in (1..=3).flat_map(|k| [k, -k]) {
        for a in [0.5, (k * k) as f64] {
            let kc = kinetic_comparison(&channel_numbers(k).unwrap(), &g, a).unwrap();
            assert!(kc.eigmin >= -1e-10 * kc.scale, "kappa={k} a={a}: {}", kc.eigmin / kc.scale);
        }
    }
    assert!(matches!(kinetic_comparison(&channel_numbers(2).unwrap(), &g, 5.0), Err(Error::Parameter(_))));
    assert!(kinetic_comparison(&channel_numbers(2).unwrap(), &g, 0.0).is_err());
}

#[test]
fn domination_constant_is_stable() {
    let g = RadialGrid::logarithmic(1e-5, 60.0, 120).unwrap();
    let ch = channel_numbers(1).unwrap();
    let ds = domination_stability(0.5, &ch, 0.75, &g).unwrap();
    assert!(ds.coarse.is_finite() && ds.coarse > 0.0);
    assert!(ds.relative_change <= 0.05, "{}", ds.relative_change);
    // at γ = 0, F + 1 = |D₀| on the positive part and |p|^{2s} ≤ |D₀|^{2s}
    assert!(domination_constant(0.0, &ch, 0.75, &g).unwrap() <= 1.0 + 1e-9);
    assert!(domination_constant(0.5, &ch, 1.5, &g).is_err());
}

#[test]
fn hypothesis_constant_pins_the_commuting_bounds() {
    for s in [0.55, 0.75, 0.95] {
        let eps = sandwich_hypothesis_constant(s).powf(1.0 / s);
        assert!(((1.0 - eps).powf(2.0 * s) - 0.5).abs() < 1e-14);
        assert!((1.0 + eps).powf(2.0 * s) <= 2.0);
    }
    assert!((sandwich_hypothesis_constant(0.75) - 0.475).abs() < 1e-3);
}

#[test]
fn commuting_sandwich() {
    let a: Vec<f64> = (1..=30).map(|k| 0.1 * k as f64).collect();
    let (s, sp, m) = (0.75, 0.6, 2.0);
    let eps = 0.9 * sandwich_hypothesis_constant(s).powf(1.0 / s);
    for sign in [1.0, -1.0] {
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(30, a.iter().map(|&x| sign * eps * (x + m))));
        let rep = sandwich(&a, &b, s, sp, m).unwrap();
        assert!(rep.holds(1e-12));
        // closed form: (1 ± ε)^{2s}(a+M)^{2s} against ½ and 2 times (a+M)^{2s}
        let lo = a.iter().map(|&x| ((1.0 + sign * eps).powf(2.0 * s) - 0.5) * (x + m).powf(2.0 * s)).fold(f64::INFINITY, f64::min);
        assert!((rep.lower_eigmin - lo).abs() < 1e-10 * rep.scale);
    }
}

#[test]
fn sandwich_under_hypothesis_on_random_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut gated = 0;
    for _ in 0..40 {
        let n = 12;
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..20.0)).collect();
        let x = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let amp: f64 = rng.gen_range(1e-3..1.0);
        let b = &x * x.transpose() * amp;
        for m in [0.1, 1.0, 10.0] {
            let rep = sandwich(&a, &b, 0.75, 0.6, m).unwrap();
            if rep.hypothesis_holds() {
                gated += 1;
                assert!(rep.holds(1e-10), "{rep:?}");
            }
        }
    }
    assert!(gated > 10);
}

#[test]
fn channel_sandwich_cases() {
    let g = RadialGrid::logarithmic(1e-4, 60.0, 120).unwrap();
    let mut n = 0;
    for k in [1, -1, 2] {
        for m in [1.0, 10.0, 100.0] {
            let rep = channel_sandwich(0.5, &channel_numbers(k).unwrap(), &RadialFunction::exp(1.0, 1.0), &g, 0.75, 0.6, m).unwrap();
            if rep.hypothesis_holds() {
                n += 1;
                assert!(rep.holds(1e-8), "kappa={k} M={m}: {rep:?}");
            }
        }
    }
    assert!(n > 0);
}

#[test]
fn sandwich_input_validation() {
    let a = vec![1.0, 2.0];
    let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    assert!(matches!(sandwich(&a, &indefinite, 0.75, 0.6, 1.0), Err(Error::Parameter(_))));
    assert!(matches!(sandwich(&a, &DMatrix::zeros(3, 3), 0.75, 0.6, 1.0), Err(Error::Dimension(_))));
    assert!(sandwich(&a, &DMatrix::zeros(2, 2), 0.5, 0.6, 1.0).is_err());
    assert!(sandwich(&[1.0, -1.0], &DMatrix::zeros(2, 2), 0.75, 0.6, 1.0).is_err());
}
