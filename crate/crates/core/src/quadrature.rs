//! One-dimensional quadrature: Gauss-Legendre rules, adaptive
//! Gauss-Kronrod (7/15) and dyadic decompositions for integrals that run
//! into an endpoint singularity at 0 or out to infinity.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

pub fn gauss_legendre_on(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Single 15-point Kronrod panel: (estimate, error estimate).
pub fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 on a finite interval (bisect the worst panel).
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult {
    const MAX_PANELS: usize = 2000;
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, panels: 0, converged: true };
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&f, a, b);
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut panels = 1;
    while err > abs_tol.max(rel_tol * total.abs()) && panels < MAX_PANELS {
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        panels += 1;
    }
    // resum to shed accumulated rounding from the running updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult { value, error, panels, converged: error <= abs_tol.max(rel_tol * value.abs()) }
}

/// Integral of f over [a, b] that is allowed to blow up (integrably)
/// at a = 0: panels [b/2^{k+1}, b/2^k] are summed until they become
/// negligible or settle into a geometric sequence whose tail is added in
/// closed form. `None` when the panel sequence stops shrinking, i.e. the
/// integral diverges at 0.
pub fn integrate_to_zero(f: impl Fn(f64) -> f64, b: f64, rel_tol: f64) -> Option<f64> {
    dyadic(|k| {
        let hi = b * 0.5f64.powi(k as i32);
        adaptive(&f, 0.5 * hi, hi, 0.0, rel_tol * 1e-2).value
    }, rel_tol)
}

/// Integral of f over [a, ∞) for a > 0 by doubling panels [a 2^k, a 2^{k+1}];
/// `None` signals divergence.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, rel_tol: f64) -> Option<f64> {
    assert!(a > 0.0);
    dyadic(|k| {
        let lo = a * 2f64.powi(k as i32);
        adaptive(&f, lo, 2.0 * lo, 0.0, rel_tol * 1e-2).value
    }, rel_tol)
}

fn dyadic(piece: impl Fn(usize) -> f64, rel_tol: f64) -> Option<f64> {
    const MAX_PIECES: usize = 1000;
    const MIN_PIECES: usize = 8;
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let mut ratios: Vec<f64> = Vec::new();
    let mut stalled = 0;
    let mut quiet = 0;
    for k in 0..MAX_PIECES {
        let p = piece(k).abs();
        if !p.is_finite() {
            return None;
        }
        sum += p;
        if k > 0 && prev > 0.0 {
            let rho = p / prev;
            ratios.push(rho);
            if rho >= 0.999 {
                stalled += 1;
                if stalled >= 3 && k >= MIN_PIECES {
                    return None;
                }
            } else {
                stalled = 0;
            }
        }
        if p <= rel_tol * 1e-3 * sum || p == 0.0 {
            quiet += 1;
            // an all-zero prefix may just mean the support starts further out
            if quiet >= 3 && k >= MIN_PIECES && (sum > 0.0 || k >= 64) {
                return Some(sum);
            }
        } else {
            quiet = 0;
        }
        // geometric regime: extrapolate the tail
        if k >= MIN_PIECES && ratios.len() >= 4 {
            let n = ratios.len();
            let r = &ratios[n - 4..];
            let spread = r.iter().cloned().fold(f64::MIN, f64::max) - r.iter().cloned().fold(f64::MAX, f64::min);
            let rho = r[3];
            if rho < 0.999 && spread < 1e-9 {
                return Some(sum + p * rho / (1.0 - rho));
            }
            if rho < 0.999 && p * rho / (1.0 - rho) <= rel_tol * sum {
                return Some(sum + p * rho / (1.0 - rho));
            }
        }
        prev = p;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        for deg in 0..20 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - exact).abs() < 1e-13, "deg {deg}: {got} vs {exact}");
        }
    }

    #[test]
    fn adaptive_handles_kink() {
        let r = adaptive(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-13, 1e-13);
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn dyadic_singular_and_tails() {
        let v = integrate_to_zero(|r: f64| r.powf(-0.5), 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
        let t = integrate_to_infinity(|r: f64| r.powf(-1.5), 1.0, 1e-10).unwrap();
        assert!((t - 2.0).abs() < 1e-8, "{t}");
        let e = integrate_to_infinity(|r: f64| (-r).exp(), 1.0, 1e-12).unwrap();
        assert!((e - (-1.0f64).exp()).abs() < 1e-13);
        assert!(integrate_to_infinity(|r: f64| 1.0 / r, 1.0, 1e-10).is_none());
        assert!(integrate_to_zero(|r: f64| 1.0 / r, 1.0, 1e-10).is_none());
    }
}
