//! Hurwitz zeta for real s > 1 via Euler-Maclaurin.

// B_{2j} / (2j)!
const B2J_OVER_FACT: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// ζ(s, a) = Σ_{k≥0} (k + a)^{-s} for s > 1, a > 0.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    let shift = (12.0 - a).ceil().max(0.0) as usize;
    let mut head = 0.0;
    for k in (0..shift).rev() {
        head += (k as f64 + a).powf(-s);
    }
    let x = a + shift as f64;
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) times x^{-s-2j+1}
    let mut fac = s * x.powf(-s - 1.0);
    for (j, b) in B2J_OVER_FACT.iter().enumerate() {
        let term = b * fac;
        tail += term;
        let m = 2.0 * j as f64;
        fac *= (s + m + 1.0) * (s + m + 2.0) / (x * x);
    }
    head + tail
}
