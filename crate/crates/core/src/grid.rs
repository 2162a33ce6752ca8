//! Radial grids on (0, r_max] with quadrature weights for ∫ · dr.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub kind: GridKind,
    pub r_min: f64,
    pub r_max: f64,
    pub n_points: usize,
    /// Spacing in r (uniform) or in ln r (logarithmic).
    pub step: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub const MIN_POINTS: usize = 16;

/// Uniform grids put nodes at r_min + h, ..., r_max (the left end is a
/// Dirichlet boundary); logarithmic grids include both ends.
pub fn build_grid(kind: GridKind, r_min: f64, r_max: f64, n_points: usize) -> Result<RadialGrid> {
    if n_points < MIN_POINTS {
        return Err(Error::Config(format!(
            "n_points={n_points} below minimum {MIN_POINTS}"
        )));
    }
    if !(r_min.is_finite() && r_max.is_finite()) || r_max <= r_min {
        return Err(Error::Config(format!(
            "need r_min < r_max, got r_min={r_min}, r_max={r_max}"
        )));
    }
    match kind {
        GridKind::Uniform => {
            if r_min < 0.0 {
                return Err(Error::Config(format!("uniform grid needs r_min >= 0, got {r_min}")));
            }
            let h = (r_max - r_min) / n_points as f64;
            let nodes: Vec<f64> = (1..=n_points).map(|i| r_min + h * i as f64).collect();
            // trapezoid on [r_min, r_max] with the missing left value
            // extrapolated linearly from the first two nodes
            let mut weights = vec![h; n_points];
            weights[0] = 2.0 * h;
            weights[1] = 0.5 * h;
            weights[n_points - 1] = 0.5 * h;
            Ok(RadialGrid { kind, r_min, r_max, n_points, step: h, nodes, weights })
        }
        GridKind::Logarithmic => {
            if r_min <= 0.0 {
                return Err(Error::Config(format!(
                    "logarithmic grid needs r_min > 0, got {r_min}"
                )));
            }
            let h = (r_max / r_min).ln() / (n_points - 1) as f64;
            let t0 = r_min.ln();
            let mut nodes: Vec<f64> = (0..n_points).map(|i| (t0 + h * i as f64).exp()).collect();
            nodes[0] = r_min;
            nodes[n_points - 1] = r_max;
            let mut weights: Vec<f64> = nodes.iter().map(|r| r * h).collect();
            weights[0] *= 0.5;
            weights[n_points - 1] *= 0.5;
            Ok(RadialGrid { kind, r_min, r_max, n_points, step: h, nodes, weights })
        }
    }
}

impl RadialGrid {
    pub fn uniform(r_min: f64, r_max: f64, n_points: usize) -> Result<Self> {
        build_grid(GridKind::Uniform, r_min, r_max, n_points)
    }

    pub fn logarithmic(r_min: f64, r_max: f64, n_points: usize) -> Result<Self> {
        build_grid(GridKind::Logarithmic, r_min, r_max, n_points)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Same kind and extent with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let n = match self.kind {
            GridKind::Uniform => self.n_points * factor,
            GridKind::Logarithmic => (self.n_points - 1) * factor + 1,
        };
        build_grid(self.kind, self.r_min, self.r_max, n)
    }

    /// Midpoints between consecutive nodes (geometric for log grids).
    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes
            .windows(2)
            .map(|w| match self.kind {
                GridKind::Uniform => 0.5 * (w[0] + w[1]),
                GridKind::Logarithmic => (w[0] * w[1]).sqrt(),
            })
            .collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, w)| w * f(r)).sum()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// Short hex digest of the defining parameters.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        let tag: &[u8] = match self.kind {
            GridKind::Uniform => b"uniform",
            GridKind::Logarithmic => b"logarithmic",
        };
        hasher.update(tag);
        hasher.update(self.r_min.to_le_bytes());
        hasher.update(self.r_max.to_le_bytes());
        hasher.update((self.n_points as u64).to_le_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Piecewise-linear interpolation in (ln r, value) for log grids and
    /// (r, value) for uniform ones. Outside the node range the end value
    /// is returned.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let nodes = &self.nodes;
        if r <= nodes[0] {
            return values[0];
        }
        if r >= nodes[nodes.len() - 1] {
            return values[values.len() - 1];
        }
        let k = nodes.partition_point(|&x| x <= r) - 1;
        let (a, b) = (nodes[k], nodes[k + 1]);
        let t = match self.kind {
            GridKind::Uniform => (r - a) / (b - a),
            GridKind::Logarithmic => (r / a).ln() / (b / a).ln(),
        };
        values[k] * (1.0 - t) + values[k + 1] * t
    }
}
