//! One PASS/FAIL line per acceptance criterion, written straight to stderr
//! so it shows without --nocapture.

use std::f64::consts::PI;
use std::io::Write;

use furry_density::hydrogenic::{channel_density, total_density, verify_theorem3_bound};
use furry_density::operator_checks::{channel_sandwich, domination_stability, hardy_check, kinetic_comparison};
use furry_density::partial_waves::{channel_numbers, dirac_spinor, m_values, sphere_inner, unsold_sum, Direction, Sigma, SphereQuadrature};
use furry_density::potential::RadialFunction;
use furry_density::radial::{bound_states, build_dirac_channel, observed_order};
use furry_density::test_spaces::{classify, norm_k0, norm_ksdelta};
use furry_density::thomas_fermi::{coulomb_energy, mms_probe, solve_tf, tf_small_r_check};
use furry_density::traces::{channel_shift_decay, coulomb_basis, feynman_hellmann_check, spectral_shift};
use furry_density::{Coupling, RadialGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{gamma, gamma_lr};

fn report(n: u32, ok: bool, detail: String) {
    let line = format!("{} criterion {n:2}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

fn lam(gamma: f64, n: u32, kappa: i32) -> f64 {
    let k = kappa as f64;
    let d = n as f64 + (k * k - gamma * gamma).sqrt();
    (1.0 + gamma * gamma / (d * d)).powf(-0.5)
}

fn coulomb_levels(gamma: f64, k: i32, g: &RadialGrid, count: usize) -> Vec<f64> {
    let c = Coupling::from_gamma(gamma).unwrap();
    let op = build_dirac_channel(&c, &channel_numbers(k).unwrap(), g, &RadialFunction::zero()).unwrap();
    bound_states(&op, count).unwrap().values
}

fn sommerfeld_grids(gamma: f64) -> (RadialGrid, RadialGrid) {
    let r_min = if gamma > 0.5 { 1e-8 } else { 1e-5 };
    (
        RadialGrid::logarithmic(r_min, 150.0 / gamma, 1200).unwrap(),
        RadialGrid::logarithmic(r_min, 150.0 / gamma, 2400).unwrap(),
    )
}

#[test]
fn criterion_01_sommerfeld_anchor() {
    let mut worst: f64 = 0.0;
    let mut worst_order: f64 = 0.0;
    for gamma in [0.1, 0.5, 0.9] {
        let (coarse, fine) = sommerfeld_grids(gamma);
        for k in (1..=3).flat_map(|k| [k, -k]) {
            let f = coulomb_levels(gamma, k, &fine, 3);
            let h = coulomb_levels(gamma, k, &coarse, 3);
            let n0 = channel_numbers(k).unwrap().n_min();
            for i in 0..3 {
                let exact = lam(gamma, n0 + i as u32, k);
                let (ef, ec) = ((f[i] - exact).abs() / exact, (h[i] - exact).abs() / exact);
                worst = worst.max(ef);
                worst_order = worst_order.max((observed_order(ec, ef) - 2.0).abs());
            }
        }
    }
    report(1, worst <= 1e-4 && worst_order <= 0.3, format!("max rel error {worst:.2e} (<= 1e-4), max |order - 2| {worst_order:.3} (<= 0.3)"));
}

#[test]
fn criterion_02_ground_state() {
    let mut worst: f64 = 0.0;
    for gamma in [0.1, 0.5, 0.9] {
        let (_, fine) = sommerfeld_grids(gamma);
        let e = coulomb_levels(gamma, 1, &fine, 1)[0];
        let want = (1.0f64 - gamma * gamma).sqrt();
        worst = worst.max((e - want).abs() / want);
    }
    report(2, worst <= 1e-4, format!("max rel deviation from sqrt(1-gamma^2) {worst:.2e} (<= 1e-4)"));
}

#[test]
fn criterion_03_feynman_hellmann() {
    let c = Coupling::from_gamma(0.5).unwrap();
    let g = RadialGrid::logarithmic(1e-4, 100.0, 200).unwrap();
    let mut worst: f64 = 0.0;
    for u in [RadialFunction::power_exp(1.0, 1.0, 1.0), RadialFunction::cutoff_coulomb(1.0, 10.0, 5.0)] {
        for k in [1, -1, 2] {
            let rep = feynman_hellmann_check(&c, &channel_numbers(k).unwrap(), &u, 1e-3, &g).unwrap();
            // first-order sum over bound states, from the eigenvectors
            let (sys, op) = coulomb_basis(&c, &channel_numbers(k).unwrap(), &g).unwrap();
            let mut oracle = 0.0;
            for (j, &e) in sys.values.iter().enumerate() {
                if e > 0.0 && e < 1.0 {
                    oracle += sys.vector(j).iter().zip(&op.radii).map(|(x, &r)| x * x * u.eval(r)).sum::<f64>();
                }
            }
            oracle *= 2.0 * k.abs() as f64;
            worst = worst.max((rep.richardson - oracle).abs() / oracle);
        }
    }
    report(3, worst <= 1e-3, format!("max relative gap {worst:.2e} (<= 1e-3)"));
}

#[test]
fn criterion_04_density_exponents() {
    let c = Coupling::from_gamma(0.5).unwrap();
    let g = RadialGrid::logarithmic(1e-6, 5000.0, 2500).unwrap();
    let large = total_density(&c, 12, 25, &g).unwrap().loglog_slope(20.0, 100.0).unwrap();

    let hot = Coupling::from_gamma(0.97).unwrap();
    let g = RadialGrid::logarithmic(1e-8, 2000.0, 2500).unwrap();
    let small = total_density(&hot, 3, 10, &g).unwrap().loglog_slope(1e-4, 1e-2).unwrap();
    let want_small = -2.0 * hot.sigma_gamma;

    // |κ| ≥ 2: the value near the origin does not grow as r_min shrinks
    let mut bounded = true;
    for k in [2, -2, 3, -3] {
        let near = |r_min: f64| {
            let g = RadialGrid::logarithmic(r_min, 400.0, 1500).unwrap();
            let t = channel_density(&c, &channel_numbers(k).unwrap(), 4, &g).unwrap();
            t.radii.iter().zip(&t.values).filter(|(r, _)| **r < 1e-2).map(|(_, v)| *v).fold(0.0, f64::max)
        };
        let (a, b) = (near(1e-4), near(1e-8));
        bounded &= b.is_finite() && b <= 1.01 * a;
    }
    let ok = (large + 1.5).abs() <= 0.1 && (small - want_small).abs() <= 0.1 && bounded;
    report(
        4,
        ok,
        format!("large-r slope {large:.4} (-1.5 +- 0.1), small-r slope {small:.4} ({want_small:.4} +- 0.1), |kappa|>=2 bounded: {bounded}"),
    );
}

#[test]
fn criterion_05_channel_bound() {
    let c = Coupling::from_gamma(0.5).unwrap();
    let g = RadialGrid::logarithmic(1e-5, 3000.0, 1200).unwrap();
    let kappas: Vec<i32> = (1..=5).flat_map(|k| [k, -k]).collect();
    let rep = verify_theorem3_bound(&c, 0.75, &kappas, 20, &g).unwrap();
    report(5, rep.all_finite && rep.max_drift < 0.05, format!("all constants finite: {}, max drift {:.2e} (< 5%)", rep.all_finite, rep.max_drift));
}

#[test]
fn criterion_06_spectral_shift() {
    let mut ok = true;
    let mut ratios = Vec::new();
    for g in [0.05, 0.1, 0.2, 0.5, 0.9] {
        let r = spectral_shift(&Coupling::from_gamma(g).unwrap(), 2000, 200).unwrap();
        ok &= r.value > 0.0;
        ok &= r.kappa_partials[2..].windows(2).all(|w| w[1] < w[0]);
        if g <= 0.2 {
            ratios.push(r.value / (g * g));
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let drift = (hi - lo) / lo;
    report(6, ok && drift < 0.1, format!("positive with decreasing increments: {ok}; s/gamma^2 drift {drift:.3} (< 0.1)"));
}

#[test]
fn criterion_07_channel_shift_decay() {
    let c = Coupling::from_gamma(0.5).unwrap();
    let g = RadialGrid::logarithmic(1e-4, 1500.0, 300).unwrap();
    let ks: Vec<u32> = (4..=12).collect();
    let rep = channel_shift_decay(&c, &RadialFunction::screened_coulomb(0.5, 1.0), &RadialFunction::exp(1.0, 1.0), 1e-3, &ks, &g).unwrap();
    report(7, rep.slope <= -1.0, format!("slope {:.3} over {} resolved channels (<= -1.0)", rep.slope, rep.resolved));
}

#[test]
fn criterion_08_operator_inequalities() {
    let g = RadialGrid::logarithmic(1e-4, 60.0, 160).unwrap();
    let mut hardy = f64::INFINITY;
    let mut kin = f64::INFINITY;
    for k in (1..=3).flat_map(|k| [k, -k]) {
        let ch = channel_numbers(k).unwrap();
        let h = hardy_check(&ch, &g).unwrap();
        hardy = hardy.min(h.hardy_upper).min(h.hardy_lower);
        if k.abs() >= 2 {
            hardy = hardy.min(h.channel_form);
        }
        for a in [0.5, (k * k) as f64] {
            let kc = kinetic_comparison(&ch, &g, a).unwrap();
            kin = kin.min(kc.eigmin / kc.scale);
        }
    }
    let sg = RadialGrid::logarithmic(1e-4, 60.0, 120).unwrap();
    let mut sw = f64::INFINITY;
    let mut gated = 0;
    for u in [RadialFunction::exp(1.0, 1.0), RadialFunction::cutoff_coulomb(0.1, f64::INFINITY, 5.0)] {
        for k in [1, -1, 2] {
            for m in [0.1, 1.0, 10.0, 100.0] {
                let rep = channel_sandwich(0.5, &channel_numbers(k).unwrap(), &u, &sg, 0.75, 0.6, m).unwrap();
                if rep.hypothesis_holds() {
                    gated += 1;
                    sw = sw.min(rep.lower_eigmin.min(rep.upper_eigmin) / rep.scale);
                }
            }
        }
    }
    let dg = RadialGrid::logarithmic(1e-5, 60.0, 120).unwrap();
    let dom = domination_stability(0.5, &channel_numbers(1).unwrap(), 0.75, &dg).unwrap().relative_change;
    let ok = hardy >= -1e-8 && kin >= -1e-8 && sw >= -1e-8 && gated > 0 && dom <= 0.05;
    report(
        8,
        ok,
        format!("hardy {hardy:.2e}, kinetic {kin:.2e}, sandwich {sw:.2e} over {gated} cases (all >= -1e-8); domination drift {dom:.2e} (<= 5%)"),
    );
}

#[test]
fn criterion_09_test_function_norms() {
    let lower = |a: f64, x: f64| gamma_lr(a, x) * gamma(a);
    let ind = RadialFunction::new("1[r<=1]", |r| if r <= 1.0 { 1.0 } else { 0.0 }).with_support(1.0);
    let e = RadialFunction::exp(1.0, 1.0);
    let bracket = |r: f64| {
        let g3 = |x: f64| (-x).exp() * (x * x + 2.0 * x + 2.0);
        r.powf(-0.5) * lower(1.5, r) + (g3(r) - g3(r * r)) / (r * r) + r * r * (-r * r).exp()
    };
    let pairs = [
        (norm_k0(&ind, 0.75).unwrap().value.unwrap(), 2.0 / 3.0),
        (norm_k0(&e, 0.75).unwrap().value.unwrap(), lower(1.5, 1.0) + (-1.0f64).exp()),
        (norm_ksdelta(&ind, 0.75, 0.0).unwrap().value.unwrap(), 2.0 / 3.0),
        (
            norm_ksdelta(&e, 0.75, 0.0).unwrap().value.unwrap(),
            (0..=100_000).map(|k| bracket(100f64.powf(k as f64 / 100_000.0))).fold(0.0, f64::max),
        ),
    ];
    let worst = pairs.iter().map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    let infinite = !norm_k0(&RadialFunction::power(1.0, 1.0, 0.0), 0.75).unwrap().is_finite();
    let c = Coupling::from_gamma(0.5).unwrap();
    let slow = classify(&RadialFunction::coulomb_power_tail(1.0, 1.2), &c).unwrap();
    let fast = classify(&RadialFunction::coulomb_power_tail(1.0, 1.6), &c).unwrap();
    let classes = slow.d0_witness.is_some() && slow.d_witness.is_none() && fast.d0_witness.is_some() && fast.d_witness.is_some();
    report(
        9,
        worst <= 1e-6 && infinite && classes,
        format!("max rel norm error {worst:.2e} (<= 1e-6); 1/r infinite: {infinite}; alpha=1.2 -> D0 only, alpha=1.6 -> D0 and D: {classes}"),
    );
}

fn shooting_oracle() -> f64 {
    let f = |x: f64, p: f64, q: f64| (q, p.max(0.0).powf(1.5) / x.sqrt());
    let shoot = |a: f64| -> i8 {
        let mut x = 1e-8;
        let mut p = 1.0 + a * x + 4.0 / 3.0 * x.powf(1.5);
        let mut q = a + 2.0 * x.sqrt();
        while x < 25.0 {
            let h = if x < 1.0 { 1e-3 * x } else { 1e-3 };
            let (k1p, k1q) = f(x, p, q);
            let (k2p, k2q) = f(x + 0.5 * h, p + 0.5 * h * k1p, q + 0.5 * h * k1q);
            let (k3p, k3q) = f(x + 0.5 * h, p + 0.5 * h * k2p, q + 0.5 * h * k2q);
            let (k4p, k4q) = f(x + h, p + h * k3p, q + h * k3q);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            x += h;
            if p < 0.0 {
                return -1;
            }
            if q > 0.0 {
                return 1;
            }
        }
        0
    };
    let (mut lo, mut hi) = (-1.7, -1.5);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match shoot(mid) {
            -1 => lo = mid,
            1 => hi = mid,
            _ => break,
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_10_thomas_fermi() {
    let tf = solve_tf().unwrap();
    let oracle = shooting_oracle();
    let slope_ok = (tf.slope0 - oracle).abs() <= 1e-4 && (tf.slope0 + 1.588_071_0).abs() <= 1e-4;
    let charge = (tf.total_charge() - 1.0).abs();
    let small = tf_small_r_check(&tf).slope;

    let mut violations = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 1..=6 {
        let t = tf.scaled(n as f64).unwrap();
        let table = t.screening_table(1e-4, 1e3, 120).unwrap();
        let rep = mms_probe(&t, &table, 10_000, &mut rng);
        violations += rep.draws - rep.satisfied;
    }

    let mut scaling: f64 = 0.0;
    for z in [10.0f64, 40.0] {
        let t = tf.scaled(z).unwrap();
        scaling = scaling.max((t.total_charge() - z).abs() / z);
        for k in 0..20 {
            let x = 1e-4 * 10f64.powf(k as f64 * 0.3);
            let want = z * z * tf.density_at(z.cbrt() * x);
            scaling = scaling.max((t.density_at(x) - want).abs() / want);
        }
        let d = coulomb_energy(&t.grid, &t.density).unwrap();
        let want = z.powf(7.0 / 3.0) * tf.coulomb_energy();
        scaling = scaling.max((d - want).abs() / want);
        // R_Z(x) = Z^{−1/3} R̃(Z^{1/3}x), R̃ holding 1/(2Z) of the Z = 1 atom
        let x = 1.0;
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if tf.ball_mass(z.cbrt() * x, mid) < 0.5 / z { lo = mid } else { hi = mid }
        }
        let want = 0.5 * (lo + hi) / z.cbrt();
        scaling = scaling.max((t.half_radius(x).unwrap() - want).abs() / want);
    }
    let ok = slope_ok && charge <= 1e-3 && (small + 1.5).abs() <= 0.05 && violations == 0 && scaling <= 1e-3;
    report(
        10,
        ok,
        format!(
            "slope0 {:.7} (oracle {oracle:.7}), |Q-1| {charge:.1e}, small-r slope {small:.4}, MMS violations {violations}/60000, max scaling error {scaling:.1e}",
            tf.slope0
        ),
    );
}

#[test]
fn criterion_11_unsold_and_orthonormality() {
    let mut worst_sum: f64 = 0.0;
    let mut worst_ortho: f64 = 0.0;
    for k in (1..=4).flat_map(|k| [k, -k]) {
        let ch = channel_numbers(k).unwrap();
        let want = 2.0 * k.abs() as f64 / (4.0 * PI);
        for (t, p) in [(0.3, 1.1), (1.2, 4.0), (2.9, 0.2), (PI / 2.0, PI)] {
            let om = Direction::new(t, p);
            for sg in [Sigma::Plus, Sigma::Minus] {
                let direct: f64 = m_values(&ch).map(|m| dirac_spinor(&ch, m, sg, om).unwrap().components.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
                worst_sum = worst_sum.max((direct - want).abs() / want).max((unsold_sum(&ch, sg, om) - want).abs() / want);
            }
        }
        let quad = SphereQuadrature::for_ell(ch.ell + 1);
        let ms: Vec<i32> = m_values(&ch).collect();
        for sa in [Sigma::Plus, Sigma::Minus] {
            for sb in [Sigma::Plus, Sigma::Minus] {
                for &ma in &ms {
                    for &mb in &ms {
                        let ip = sphere_inner(
                            &quad,
                            |o| dirac_spinor(&ch, ma, sa, o).unwrap().components,
                            |o| dirac_spinor(&ch, mb, sb, o).unwrap().components,
                        );
                        let want = if sa == sb && ma == mb { 1.0 } else { 0.0 };
                        worst_ortho = worst_ortho.max((ip.re - want).abs().max(ip.im.abs()));
                    }
                }
            }
        }
    }
    report(11, worst_sum <= 1e-10 && worst_ortho <= 1e-10, format!("sum rule {worst_sum:.1e}, orthonormality {worst_ortho:.1e} (<= 1e-10)"));
}
