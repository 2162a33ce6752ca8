use std::f64::consts::PI;

use furry_density::thomas_fermi::{coulomb_energy, mms_probe, solve_tf, tf_small_r_check, TfSolution};
use furry_density::RadialGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tf1() -> TfSolution {
    solve_tf().unwrap()
}

/// φ″ = φ^{3/2}/√x in x itself, started from φ ≈ 1 + a x + (4/3)x^{3/2}
/// with geometric steps near 0 and constant steps beyond x = 1.
fn shoot_in_x(a: f64) -> i8 {
    let f = |x: f64, p: f64, q: f64| (q, p.max(0.0).powf(1.5) / x.sqrt());
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
}

#[test]
fn initial_slope_matches_independent_shooting() {
    let (mut lo, mut hi) = (-1.7, -1.5);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match shoot_in_x(mid) {
            -1 => lo = mid,
            1 => hi = mid,
            _ => break,
        }
    }
    let oracle = 0.5 * (lo + hi);
    let tf = tf1();
    assert!((tf.slope0 - oracle).abs() < 1e-4, "{} vs {oracle}", tf.slope0);
    assert!((tf.slope0 + 1.588_071_0).abs() < 1e-4);
}

#[test]
fn screening_function_shape() {
    let tf = tf1();
    assert!((tf.phi_at(0.0) - 1.0).abs() < 1e-15);
    let xs: Vec<f64> = (0..400).map(|k| 1e-6 * (tf.x_end / 1e-6).powf(k as f64 / 399.0)).collect();
    assert!(xs.windows(2).all(|w| tf.phi_at(w[1]) <= tf.phi_at(w[0])));
    assert!(tf.phi_at(tf.x_end) < 1e-6);
}

#[test]
fn neutral_atom_normalization() {
    let tf = tf1();
    assert!((tf.total_charge() - 1.0).abs() < 1e-3);
    // independent: ∫4πr²ρ with r = u², Simpson in u
    let r_end = tf.x_end * tf.length();
    let n = 20_000;
    let u_end = r_end.sqrt();
    let h = u_end / n as f64;
    let mut acc = 0.0;
    for k in 1..=n {
        let u = k as f64 * h;
        let w = if k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * 8.0 * PI * u.powi(5) * tf.density_at(u * u);
    }
    assert!((acc * h / 3.0 - 1.0).abs() < 1e-3, "{}", acc * h / 3.0);
    for z in [10.0, 40.0] {
        let t = tf.scaled(z).unwrap();
        assert!((t.total_charge() - z).abs() < 1e-3 * z);
    }
}

#[test]
fn density_scales_with_z() {
    let tf = tf1();
    for z in [10.0f64, 40.0] {
        let t = tf.scaled(z).unwrap();
        for k in 0..20 {
            let x = 1e-4 * 10f64.powf(k as f64 * 0.3);
            let want = z * z * tf.density_at(z.cbrt() * x);
            assert!((t.density_at(x) - want).abs() <= 1e-12 * want, "Z={z} x={x}");
        }
    }
}

#[test]
fn small_r_power_law() {
    let tf = tf1();
    let r1 = tf_small_r_check(&tf);
    assert!((r1.slope + 1.5).abs() < 0.05, "{}", r1.slope);
    assert!(r1.prefactor_spread < 0.05);
    let r40 = tf_small_r_check(&tf.scaled(40.0).unwrap());
    assert!((r40.slope - r1.slope).abs() < 1e-9);
}

#[test]
fn centered_half_radius() {
    let tf = tf1().scaled(6.0).unwrap();
    let r0 = tf.half_radius(0.0).unwrap();
    // Simpson on 4πr²ρ, r = u²
    let n = 20_000;
    let h = r0.sqrt() / n as f64;
    let mut acc = 0.0;
    for k in 1..=n {
        let u = k as f64 * h;
        let w = if k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * 8.0 * PI * u.powi(5) * tf.density_at(u * u);
    }
    assert!((acc * h / 3.0 - 0.5).abs() < 1e-6, "{}", acc * h / 3.0);
    // small offsets approach the centered value
    assert!((tf.half_radius(1e-6 * r0).unwrap() - r0).abs() < 1e-4 * r0);
}

#[test]
fn half_radius_grows_outward() {
    let z = 10.0f64;
    let tf = tf1().scaled(z).unwrap();
    let radii: Vec<f64> = (0..20).map(|k| (1.0 + 9.0 * k as f64 / 19.0) * z.powf(-1.0 / 3.0)).collect();
    let rs: Vec<f64> = radii.iter().map(|&d| tf.half_radius(d).unwrap()).collect();
    assert!(rs.windows(2).all(|w| w[1] > w[0]), "{rs:?}");
}

#[test]
fn half_radius_scales_with_z() {
    // ρ_Z(y) = Z²ρ₁(Z^{1/3}y) turns the condition ∫_B ρ_Z = ½ into
    // Z·M₁(Z^{1/3}x, Z^{1/3}R) = ½: the Z = 1 ball must hold 1/(2Z), not ½
    let tf = tf1();
    let z = 10.0f64;
    let t = tf.scaled(z).unwrap();
    for x in [0.3, 1.0, 3.0] {
        let d1 = z.cbrt() * x;
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if tf.ball_mass(d1, mid) < 0.5 / z { lo = mid } else { hi = mid }
        }
        let want = 0.5 * (lo + hi) / z.cbrt();
        let got = t.half_radius(x).unwrap();
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
        assert!((got - tf.half_radius(d1).unwrap() / z.cbrt()).abs() > 1e-2 * got);
    }
}

#[test]
fn screening_potential_bounds() {
    for z in [6.0f64, 20.0] {
        let tf = tf1().scaled(z).unwrap();
        for k in 0..12 {
            let d = 1e-3 * 10f64.powf(k as f64 * 0.4) * z.powf(-1.0 / 3.0);
            let chi = tf.screening_potential(d).unwrap();
            assert!(chi >= 0.0);
            assert!(chi <= tf.electron_potential(d) * (1.0 + 1e-9), "Z={z} d={d}");
        }
        let far = 50.0 * z.powf(-1.0 / 3.0);
        let v = tf.screening_potential(far).unwrap() * far;
        assert!(v >= z - 1.0 && v <= z, "Z={z}: {v}");
    }
}

#[test]
fn screening_table_interpolates() {
    let tf = tf1().scaled(4.0).unwrap();
    let table = tf.screening_table(1e-3, 100.0, 60).unwrap();
    for &r in &[table.radii[5], table.radii[40]] {
        assert!((table.eval(r) - tf.screening_potential(r).unwrap()).abs() < 1e-12);
    }
    let mid = (table.radii[10] * table.radii[11]).sqrt();
    let exact = tf.screening_potential(mid).unwrap();
    assert!((table.eval(mid) - exact).abs() < 1e-2 * exact);
}

#[test]
fn uniform_ball_self_energy() {
    let g = RadialGrid::uniform(0.0, 1.0, 4000).unwrap();
    let rho = vec![3.0 / (4.0 * PI); g.len()];
    let d = coulomb_energy(&g, &rho).unwrap();
    assert!((d - 0.6).abs() < 1e-5, "{d}");
    assert_eq!(coulomb_energy(&g, &vec![0.0; g.len()]).unwrap(), 0.0);
    assert!(coulomb_energy(&g, &rho[1..]).is_err());
}

#[test]
fn tf_self_energy_scaling() {
    let tf = tf1();
    let d1 = tf.coulomb_energy();
    for z in [10.0f64, 40.0] {
        let t = tf.scaled(z).unwrap();
        // grid quadrature on the sampled density, independent of the t-Simpson rule
        let d = coulomb_energy(&t.grid, &t.density).unwrap();
        let want = z.powf(7.0 / 3.0) * d1;
        assert!((d - want).abs() < 1e-3 * want, "Z={z}: {d} vs {want}");
    }
}

#[test]
fn correlation_inequality_probe() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 1..=6 {
        let tf = tf1().scaled(n as f64).unwrap();
        let table = tf.screening_table(1e-4, 1e3, 120).unwrap();
        let rep = mms_probe(&tf, &table, 10_000, &mut rng);
        assert_eq!(rep.n, n);
        assert!(rep.fraction >= 0.99, "N={n}: {}", rep.fraction);
    }
}

#[test]
fn ball_mass_against_monte_carlo() {
    let tf = tf1().scaled(8.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let samples: Vec<[f64; 3]> = (0..1_000_000).map(|_| tf.sample_position(&mut rng)).collect();
    let l = tf.length();
    for (d, radius) in [(0.5 * l, 0.3 * l), (1.0 * l, 1.0 * l), (2.0 * l, 0.5 * l), (0.2 * l, 2.0 * l), (4.0 * l, 3.0 * l)] {
        let inside = samples.iter().filter(|p| (p[0] * p[0] + p[1] * p[1] + (p[2] - d).powi(2)).sqrt() <= radius).count();
        let p = inside as f64 / samples.len() as f64;
        let se = (p * (1.0 - p) / samples.len() as f64).sqrt() * tf.z;
        let q = tf.ball_mass(d, radius);
        assert!((q - p * tf.z).abs() <= 3.0 * se, "d={d} R={radius}: {q} vs {} ± {se}", p * tf.z);
    }
}
