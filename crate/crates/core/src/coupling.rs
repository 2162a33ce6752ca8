use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling constant γ = Z/c of the Coulomb-Dirac operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub gamma: f64,
    pub z: Option<f64>,
    pub c: Option<f64>,
    pub sigma_gamma: f64,
}

fn sigma(gamma: f64) -> f64 {
    // 1 - sqrt(1 - g^2) without cancellation for small g
    let g2 = gamma * gamma;
    g2 / (1.0 + (1.0 - g2).sqrt())
}

impl Coupling {
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(Self { gamma, z: None, c: None, sigma_gamma: sigma(gamma) })
    }

    pub fn from_z_c(z: f64, c: f64) -> Result<Self> {
        if !(z > 0.0 && c > 0.0) {
            return Err(Error::Config(format!("Z and c must be positive, got Z={z}, c={c}")));
        }
        let mut out = Self::from_gamma(z / c)?;
        out.z = Some(z);
        out.c = Some(c);
        Ok(out)
    }

    pub fn from_z_gamma(z: f64, gamma: f64) -> Result<Self> {
        if !(z > 0.0) {
            return Err(Error::Config(format!("Z must be positive, got {z}")));
        }
        let mut out = Self::from_gamma(gamma)?;
        out.z = Some(z);
        out.c = Some(z / gamma);
        Ok(out)
    }

    pub fn from_c_gamma(c: f64, gamma: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Config(format!("c must be positive, got {c}")));
        }
        let mut out = Self::from_gamma(gamma)?;
        out.z = Some(gamma * c);
        out.c = Some(c);
        Ok(out)
    }

    /// Ground-state exponent: the |κ|=1 radial functions behave like r^{1−σ_γ}.
    pub fn ground_exponent(&self) -> f64 {
        1.0 - self.sigma_gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_matches_definition() {
        for &g in &[1e-4, 0.3, 0.5, 0.97] {
            let c = Coupling::from_gamma(g).unwrap();
            assert!((c.sigma_gamma - (1.0 - (1.0 - g * g).sqrt())).abs() < 1e-15);
            assert!(c.sigma_gamma > 0.0 && c.sigma_gamma < 1.0);
        }
    }

    #[test]
    fn z_and_c_consistent() {
        let c = Coupling::from_z_c(40.0, 137.035999).unwrap();
        assert!((c.gamma - 40.0 / 137.035999).abs() < 1e-12);
        let d = Coupling::from_z_gamma(20.0, 0.5).unwrap();
        assert!((d.z.unwrap() / d.c.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_supercritical() {
        assert!(Coupling::from_gamma(1.0).is_err());
        assert!(Coupling::from_gamma(0.0).is_err());
        assert!(Coupling::from_z_c(200.0, 137.0).is_err());
    }
}
