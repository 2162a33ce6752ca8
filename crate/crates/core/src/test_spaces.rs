//! The weighted L¹ norms K_s^(0), K_{s,δ} and membership witnesses for the
//! test-function spaces built from them.

use serde::Serialize;

use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::potential::{RadialFunction, SingularityClass};
use crate::quadrature::{adaptive, integrate_to_infinity, integrate_to_zero};

const REL_TOL: f64 = 1e-10;
const R_CAP_DECADES: u32 = 6;
const R_PER_DECADE: u32 = 8;

/// A norm value; `None` means the norm is infinite (divergent integral or
/// unbounded supremum).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormValue {
    pub value: Option<f64>,
    /// R at which the K_{s,δ} supremum is attained (1 for K_s^(0)).
    pub argmax: f64,
}

impl NormValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_some()
    }

    pub fn infinite() -> Self {
        Self { value: None, argmax: f64::INFINITY }
    }
}

fn checked(u: &RadialFunction) -> impl Fn(f64) -> f64 + '_ {
    move |r| u.eval(r).abs()
}

fn probe(u: &RadialFunction) -> Result<()> {
    for k in -16..=12 {
        let r = 10f64.powf(k as f64 * 0.5) * 1.000_37;
        let v = u.eval(r);
        if v.is_nan() {
            return Err(Error::PotentialEvaluation { r, detail: format!("{} returned NaN", u.tag) });
        }
    }
    Ok(())
}

/// ∫_a^b w(r)|U(r)| dr on a finite interval; kinks of compact support are
/// found by the adaptive rule.
fn finite_piece(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // split at decades so that power laws are resolved uniformly
    let mut acc = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (lo * 10.0).min(b);
        acc += adaptive(f, lo, hi, 0.0, rel_tol).value;
        lo = hi;
    }
    acc
}

fn tail(u: &RadialFunction, f: impl Fn(f64) -> f64, a: f64, rel_tol: f64) -> Option<f64> {
    match u.support {
        Some(s) if s <= a => Some(0.0),
        Some(s) => Some(finite_piece(&f, a, s, rel_tol)),
        None => integrate_to_infinity(f, a, rel_tol),
    }
}

/// ‖U‖_{K_s^(0)} = ∫₀¹ r^{2s−1}|U| dr + ∫₁^∞ |U| dr.
pub fn norm_k0(u: &RadialFunction, s: f64) -> Result<NormValue> {
    norm_k0_tol(u, s, REL_TOL)
}

pub fn norm_k0_tol(u: &RadialFunction, s: f64, rel_tol: f64) -> Result<NormValue> {
    if s < 0.5 {
        return Err(Error::Parameter(format!("s={s} must be at least 1/2")));
    }
    probe(u)?;
    let f = checked(u);
    let inner = match integrate_to_zero(|r| r.powf(2.0 * s - 1.0) * f(r), 1.0, rel_tol) {
        Some(v) => v,
        None => return Ok(NormValue::infinite()),
    };
    let outer = match tail(u, &f, 1.0, rel_tol) {
        Some(v) => v,
        None => return Ok(NormValue::infinite()),
    };
    Ok(NormValue { value: Some(inner + outer), argmax: 1.0 })
}

/// Pieces of the K_{s,δ} bracket that do not depend on R, precomputed.
struct Bracket<'a> {
    u: &'a RadialFunction,
    s: f64,
    delta: f64,
    rel_tol: f64,
    /// ∫₀¹ r^{2s−1}|U|
    near: f64,
}

impl Bracket<'_> {
    fn eval(&self, big_r: f64) -> Option<f64> {
        let s = self.s;
        let f = checked(self.u);
        let w1 = |r: f64| (r / big_r).powf(2.0 * s - 1.0) * f(r);
        let w2 = |r: f64| (r / big_r).powf(4.0 * s - 1.0) * f(r);
        let p1 = self.near * big_r.powf(1.0 - 2.0 * s) + finite_piece(&w1, 1.0, big_r, self.rel_tol);
        let r2 = big_r * big_r;
        let p2 = match self.u.support {
            Some(sup) => finite_piece(&w2, big_r, r2.min(sup), self.rel_tol),
            None => finite_piece(&w2, big_r, r2, self.rel_tol),
        };
        let p3 = big_r.powf(4.0 * s - 1.0) * tail(self.u, &f, r2, self.rel_tol)?;
        Some(big_r.powf(self.delta) * (p1 + p2 + p3))
    }
}

/// ‖U‖_{K_{s,δ}} as sup_{R≥1} of the three-piece bracket, searched on a
/// logarithmic R grid up to 10⁶ and refined by golden section around the
/// largest grid value. Growth of the bracket over the last two decades is
/// read as an unbounded supremum.
pub fn norm_ksdelta(u: &RadialFunction, s: f64, delta: f64) -> Result<NormValue> {
    norm_ksdelta_tol(u, s, delta, REL_TOL)
}

pub fn norm_ksdelta_tol(u: &RadialFunction, s: f64, delta: f64, rel_tol: f64) -> Result<NormValue> {
    if s < 0.5 {
        return Err(Error::Parameter(format!("s={s} must be at least 1/2")));
    }
    if !(0.0..=2.0 * s - 1.0 + 1e-12).contains(&delta) {
        return Err(Error::Parameter(format!("delta={delta} outside [0, 2s-1] for s={s}")));
    }
    probe(u)?;
    let f = checked(u);
    let near = match integrate_to_zero(|r| r.powf(2.0 * s - 1.0) * f(r), 1.0, rel_tol) {
        Some(v) => v,
        None => return Ok(NormValue::infinite()),
    };
    let b = Bracket { u, s, delta, rel_tol, near };
    let n = (R_CAP_DECADES * R_PER_DECADE) as i32;
    let mut values = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        let r = 10f64.powf(k as f64 / R_PER_DECADE as f64);
        match b.eval(r) {
            Some(v) => values.push((r, v)),
            None => return Ok(NormValue::infinite()),
        }
    }
    // still growing at the cap?
    let last = values[n as usize].1;
    let earlier = values[(n - 2 * R_PER_DECADE as i32) as usize].1;
    if last > 0.0 && earlier > 0.0 && (last / earlier).log10() / 2.0 > 0.01 {
        return Ok(NormValue::infinite());
    }
    let (k_best, &(r_best, mut v_best)) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty grid");
    let mut arg = r_best;
    if k_best > 0 && (k_best as i32) < n {
        // golden section in log R between the neighbours
        let (mut a, mut c) = (values[k_best - 1].0.ln(), values[k_best + 1].0.ln());
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = c - g * (c - a);
        let mut x2 = a + g * (c - a);
        let mut f1 = b.eval(x1.exp()).unwrap_or(f64::INFINITY);
        let mut f2 = b.eval(x2.exp()).unwrap_or(f64::INFINITY);
        for _ in 0..60 {
            if f1 > f2 {
                c = x2;
                x2 = x1;
                f2 = f1;
                x1 = c - g * (c - a);
                f1 = b.eval(x1.exp()).unwrap_or(f64::INFINITY);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (c - a);
                f2 = b.eval(x2.exp()).unwrap_or(f64::INFINITY);
            }
            if c - a < 1e-10 {
                break;
            }
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v > v_best {
                v_best = v;
                arg = x.exp();
            }
        }
    }
    Ok(NormValue { value: Some(v_best), argmax: arg })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub s: f64,
    pub s_prime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub tag: String,
    /// U ∈ r^{−1}L^∞_c.
    pub coulomb_compact: bool,
    /// U₁ = U·1_{r≤1} has r|U₁| bounded, so the split U = U₁ + U₂ applies.
    pub split: bool,
    /// ‖U₂‖_{K_s^(0)} finite, per s of the grid.
    pub k0_finite: Vec<(f64, bool)>,
    pub d0_witness: Option<Witness>,
    pub d_witness: Option<Witness>,
}

const FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// (s, s′) candidates for D_γ^(0): ½ < s′ < s ≤ 1, or s < 3/2 − σ_γ when
/// γ ≥ √3/2.
pub fn d0_grid(coupling: &Coupling) -> Vec<Witness> {
    let s_max = if coupling.gamma < 0.75f64.sqrt() { 1.0 } else { (1.5 - coupling.sigma_gamma) * (1.0 - 1e-9) };
    let mut out = Vec::new();
    for fs in [0.2, 0.4, 0.6, 0.8, 1.0] {
        let s = 0.5 + fs * (s_max - 0.5);
        for f in FRACTIONS {
            out.push(Witness { s, s_prime: 0.5 + f * (s - 0.5) });
        }
    }
    out
}

/// (s, s′) candidates for D: ½ < 2s/3 + 1/6 ≤ s′ < s ≤ ¾. Small s matter
/// for slowly decaying W (K_{s,0} needs decay faster than r^{−2s−1/2}).
pub fn d_grid() -> Vec<Witness> {
    let mut out = Vec::new();
    for s in [0.52, 0.55, 0.6, 0.675, 0.75] {
        let lo = 2.0 * s / 3.0 + 1.0 / 6.0;
        for f in [0.0, 0.2, 0.4, 0.6, 0.8] {
            out.push(Witness { s, s_prime: lo + f * (s - lo) });
        }
    }
    out
}

fn bounded_times_r(u: &RadialFunction, lo: f64, hi: f64) -> bool {
    if let SingularityClass::Power(a) = u.singularity {
        if a > 1.0 {
            return false;
        }
    }
    let mut m = 0.0f64;
    let n = 400;
    for k in 0..=n {
        let r = lo * (hi / lo).powf(k as f64 / n as f64);
        m = m.max(r * u.eval(r).abs());
    }
    m.is_finite()
}

/// Witness search for U = U₁ + U₂ with U₁ = U·1_{r≤1} (when r|U₁| is
/// bounded) and U₂ the rest.
pub fn classify(u: &RadialFunction, coupling: &Coupling) -> Result<Classification> {
    probe(u)?;
    let split = bounded_times_r(u, 1e-12, 1.0);
    let far_zero = match u.support {
        Some(_) => true,
        None => (0..50).all(|k| u.eval(1e3 * 1.5f64.powi(k)) == 0.0),
    };
    let coulomb_compact = far_zero && bounded_times_r(u, 1e-12, u.support.unwrap_or(1e3));
    let w = if split { u.truncated(1.0, false) } else { u.clone() };

    let d0 = d0_grid(coupling);
    let mut k0_cache: Vec<(f64, bool)> = Vec::new();
    let mut d0_witness = None;
    for cand in &d0 {
        let ok_w = match k0_cache.iter().find(|(s, _)| *s == cand.s) {
            Some(&(_, b)) => b,
            None => {
                let b = norm_k0(&w, cand.s)?.is_finite();
                k0_cache.push((cand.s, b));
                b
            }
        };
        if ok_w && norm_k0(&w.abs_pow(2.0 * cand.s), cand.s_prime)?.is_finite() {
            d0_witness = Some(*cand);
            break;
        }
    }
    for cand in &d0 {
        if !k0_cache.iter().any(|(s, _)| *s == cand.s) {
            k0_cache.push((cand.s, norm_k0(&w, cand.s)?.is_finite()));
        }
    }
    let mut d_witness = None;
    for cand in d_grid() {
        if norm_ksdelta(&w, cand.s, 0.0)?.is_finite()
            && norm_ksdelta(&w.abs_pow(2.0 * cand.s), cand.s_prime, 4.0 * (cand.s - cand.s_prime))?.is_finite()
        {
            d_witness = Some(cand);
            break;
        }
    }
    Ok(Classification {
        tag: u.tag.clone(),
        coulomb_compact,
        split,
        k0_finite: k0_cache,
        d0_witness,
        d_witness,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionRow {
    pub tag: String,
    pub k0_s_prime: bool,
    pub k0_s: bool,
    pub ks_delta: bool,
    pub ks_0: bool,
    /// None when the third item's parameter range does not apply.
    pub ks_prime_4: Option<bool>,
}

/// Numerical spot checks of K_{s′}^(0) ⊆ K_s^(0), K_{s,δ} ⊆ K_{s,0} ⊆ K_s^(0)
/// and K_{s′,4(s−s′)} ⊆ K_{s,0}. A sample contradicting one of them is an
/// error: the inclusions are theorems, so it points at the quadrature.
pub fn inclusion_spotchecks(samples: &[RadialFunction], s: f64, s_prime: f64, delta: f64) -> Result<Vec<InclusionRow>> {
    if !(0.5 <= s_prime && s_prime < s) {
        return Err(Error::Parameter(format!("need 1/2 <= s' < s, got s={s}, s'={s_prime}")));
    }
    let third = 0.5 < 2.0 * s / 3.0 + 1.0 / 6.0 && 2.0 * s / 3.0 + 1.0 / 6.0 <= s_prime;
    let mut rows = Vec::new();
    for u in samples {
        let row = InclusionRow {
            tag: u.tag.clone(),
            k0_s_prime: norm_k0(u, s_prime)?.is_finite(),
            k0_s: norm_k0(u, s)?.is_finite(),
            ks_delta: norm_ksdelta(u, s, delta)?.is_finite(),
            ks_0: norm_ksdelta(u, s, 0.0)?.is_finite(),
            ks_prime_4: if third { Some(norm_ksdelta(u, s_prime, 4.0 * (s - s_prime))?.is_finite()) } else { None },
        };
        let bad = (row.k0_s_prime && !row.k0_s)
            || (row.ks_delta && !row.ks_0)
            || (row.ks_0 && !row.k0_s)
            || (row.ks_prime_4 == Some(true) && !row.ks_0);
        if bad {
            return Err(Error::Consistency(format!("inclusion violated for {}: {row:?}", u.tag)));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_k0() {
        let u = RadialFunction::new("1[r<=1]", |r| if r <= 1.0 { 1.0 } else { 0.0 }).with_support(1.0);
        let n = norm_k0(&u, 0.75).unwrap().value.unwrap();
        assert!((n - 2.0 / 3.0).abs() < 1e-9, "{n}");
    }

    #[test]
    fn coulomb_tail_diverges() {
        let u = RadialFunction::power(1.0, 1.0, 0.0);
        assert!(!norm_k0(&u, 0.75).unwrap().is_finite());
    }
}
