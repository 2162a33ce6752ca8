//! Radial functions r ↦ U(r) used as extra potentials and test functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "class", content = "alpha")]
pub enum SingularityClass {
    None,
    /// r·U(r) bounded near 0.
    Coulomb,
    /// |U(r)| ≲ r^{-α} near 0.
    Power(f64),
}

#[derive(Clone)]
pub struct RadialFunction {
    pub tag: String,
    pub singularity: SingularityClass,
    /// Radius beyond which U vanishes, if compactly supported.
    pub support: Option<f64>,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("tag", &self.tag)
            .field("singularity", &self.singularity)
            .field("support", &self.support)
            .finish()
    }
}

impl RadialFunction {
    pub fn new(tag: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { tag: tag.into(), singularity: SingularityClass::None, support: None, eval: Arc::new(f) }
    }

    pub fn with_singularity(mut self, class: SingularityClass) -> Self {
        self.singularity = class;
        self
    }

    pub fn with_support(mut self, radius: f64) -> Self {
        self.support = Some(radius);
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    /// Values on the given radii; NaN/inf is an evaluation error.
    pub fn sample(&self, radii: &[f64]) -> Result<Vec<f64>> {
        radii
            .iter()
            .map(|&r| {
                let v = self.eval(r);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::PotentialEvaluation { r, detail: format!("{} returned {v}", self.tag) })
                }
            })
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            tag: format!("{c}*({})", self.tag),
            singularity: self.singularity,
            support: self.support,
            eval: Arc::new(move |r| c * inner(r)),
        }
    }

    pub fn abs_pow(&self, p: f64) -> Self {
        let inner = self.eval.clone();
        let singularity = match self.singularity {
            SingularityClass::None => SingularityClass::None,
            SingularityClass::Coulomb => SingularityClass::Power(p),
            SingularityClass::Power(a) => SingularityClass::Power(a * p),
        };
        Self {
            tag: format!("|{}|^{p}", self.tag),
            singularity,
            support: self.support,
            eval: Arc::new(move |r| inner(r).abs().powf(p)),
        }
    }

    /// Restriction to r ≤ cut (`inside = true`) or r > cut.
    pub fn truncated(&self, cut: f64, inside: bool) -> Self {
        let inner = self.eval.clone();
        Self {
            tag: format!("{}*1[r{}{cut}]", self.tag, if inside { "<=" } else { ">" }),
            singularity: if inside { self.singularity } else { SingularityClass::None },
            support: if inside { Some(self.support.map_or(cut, |s| s.min(cut))) } else { self.support },
            eval: Arc::new(move |r| if (r <= cut) == inside { inner(r) } else { 0.0 }),
        }
    }

    pub fn zero() -> Self {
        Self::new("0", |_| 0.0).with_support(0.0)
    }

    /// a·e^{-b r}
    pub fn exp(a: f64, b: f64) -> Self {
        Self::new(format!("{a}*exp(-{b}r)"), move |r| a * (-b * r).exp())
    }

    /// a·r^p e^{-b r}
    pub fn power_exp(a: f64, p: f64, b: f64) -> Self {
        let class = if p < 0.0 { SingularityClass::Power(-p) } else { SingularityClass::None };
        Self::new(format!("{a}*r^{p}*exp(-{b}r)"), move |r| a * r.powf(p) * (-b * r).exp()).with_singularity(class)
    }

    /// a·r^{-α} on (r_lo, ∞) (r_lo = 0 allowed), zero below.
    pub fn power(a: f64, alpha: f64, r_lo: f64) -> Self {
        let class = if r_lo > 0.0 || alpha <= 0.0 { SingularityClass::None } else { SingularityClass::Power(alpha) };
        Self::new(format!("{a}*r^-{alpha}*1[r>{r_lo}]"), move |r| if r > r_lo { a * r.powf(-alpha) } else { 0.0 })
            .with_singularity(class)
    }

    /// min(a/r, cap) on [0, radius], zero beyond.
    pub fn cutoff_coulomb(a: f64, cap: f64, radius: f64) -> Self {
        Self::new(format!("min({a}/r,{cap})*1[r<={radius}]"), move |r| {
            if r <= radius { (a / r).min(cap) } else { 0.0 }
        })
        .with_singularity(SingularityClass::Coulomb)
        .with_support(radius)
    }

    /// a·e^{-μ r}/r
    pub fn yukawa(a: f64, mu: f64) -> Self {
        Self::new(format!("{a}*exp(-{mu}r)/r"), move |r| a * (-mu * r).exp() / r)
            .with_singularity(SingularityClass::Coulomb)
    }

    /// r^{-1} 1_{r≤1} + r^{-α} 1_{r>1}, the model test function with Coulomb
    /// singularity and power decay.
    pub fn coulomb_power_tail(a: f64, alpha: f64) -> Self {
        Self::new(format!("{a}*(1/r*1[r<=1]+r^-{alpha}*1[r>1])"), move |r| {
            if r <= 1.0 { a / r } else { a * r.powf(-alpha) }
        })
        .with_singularity(SingularityClass::Coulomb)
    }

    /// γ/r·(1 − e^{−μ r}): Coulomb-dominated and bounded at 0.
    pub fn screened_coulomb(gamma: f64, mu: f64) -> Self {
        Self::new(format!("{gamma}/r*(1-exp(-{mu}r))"), move |r| {
            let x = mu * r;
            // (1 - e^{-x})/r without cancellation
            gamma * mu * if x < 1e-8 { 1.0 - 0.5 * x } else { -(-x).exp_m1() / x }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_shapes() {
        assert_eq!(RadialFunction::cutoff_coulomb(1.0, 10.0, 5.0).eval(0.01), 10.0);
        assert_eq!(RadialFunction::cutoff_coulomb(1.0, 10.0, 5.0).eval(6.0), 0.0);
        assert!((RadialFunction::screened_coulomb(0.5, 1.0).eval(1e-12) - 0.5).abs() < 1e-12);
        let v = RadialFunction::screened_coulomb(0.5, 1.0).eval(2.0);
        assert!((v - 0.25 * (1.0 - (-2.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn nan_is_reported() {
        let f = RadialFunction::new("bad", |r| if r > 1.0 { f64::NAN } else { 0.0 });
        assert!(matches!(f.sample(&[0.5, 2.0]), Err(Error::PotentialEvaluation { .. })));
    }
}
