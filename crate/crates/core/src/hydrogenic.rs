//! Dirac-Coulomb levels and the hydrogenic (Bohr atom) densities.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::partial_waves::{channel_numbers, Channel};
use crate::potential::RadialFunction;
use crate::radial::{bound_states, build_dirac_channel, EigenSystem, StaggeredLayout};

fn check_state(gamma: f64, n: u32, kappa: i32) -> Result<()> {
    if kappa == 0 {
        return Err(Error::InvalidChannel("kappa must be nonzero".into()));
    }
    if kappa < 0 && n == 0 {
        return Err(Error::InvalidState { n, kappa, reason: "n >= 1 required for kappa < 0".into() });
    }
    if gamma >= kappa.unsigned_abs() as f64 {
        return Err(Error::Subcritical { gamma, kappa });
    }
    Ok(())
}

/// λ_{n,κ} = (1 + γ²/(n + √(κ² − γ²))²)^{−1/2}.
pub fn sommerfeld_eigenvalue(coupling: &Coupling, n: u32, kappa: i32) -> Result<f64> {
    sommerfeld_gamma(coupling.gamma, n, kappa)
}

pub fn sommerfeld_gamma(gamma: f64, n: u32, kappa: i32) -> Result<f64> {
    check_state(gamma, n, kappa)?;
    let k = kappa as f64;
    let d = n as f64 + (k * k - gamma * gamma).sqrt();
    Ok((1.0 + gamma * gamma / (d * d)).powf(-0.5))
}

/// 1 − λ_{n,κ} without cancellation.
pub fn binding_energy(gamma: f64, n: u32, kappa: i32) -> Result<f64> {
    check_state(gamma, n, kappa)?;
    let k = kappa as f64;
    let d = n as f64 + (k * k - gamma * gamma).sqrt();
    Ok(one_minus_inv_sqrt(gamma * gamma / (d * d)))
}

/// 1 − (1+x)^{−1/2} = x / (√(1+x)(1+√(1+x))).
pub fn one_minus_inv_sqrt(x: f64) -> f64 {
    let s = (1.0 + x).sqrt();
    x / (s * (1.0 + s))
}

/// −dλ_{n,κ}/dγ = ⟨1/r⟩ by Hellmann-Feynman (closed form).
pub fn inverse_radius_expectation(gamma: f64, n: u32, kappa: i32) -> Result<f64> {
    check_state(gamma, n, kappa)?;
    let k = kappa as f64;
    let a = (k * k - gamma * gamma).sqrt();
    let d = n as f64 + a;
    let x = gamma * gamma / (d * d);
    // dx/dγ = 2γ/d² + 2γ³/(d³ a)
    let dx = 2.0 * gamma / (d * d) + 2.0 * gamma.powi(3) / (d.powi(3) * a);
    Ok(0.5 * (1.0 + x).powf(-1.5) * dx)
}

/// Computational grid for hydrogenic quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SolverGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_points: usize,
}

impl SolverGrid {
    pub fn build(&self) -> Result<RadialGrid> {
        RadialGrid::logarithmic(self.r_min, self.r_max, self.n_points)
    }

    /// Grid sized for the lowest `n_states` levels of channel κ.
    pub fn for_levels(gamma: f64, kappa_abs: u32, n_states: u32) -> Self {
        let nmax = (n_states + kappa_abs) as f64;
        let r_max = (4.0 * nmax * nmax / gamma + 40.0 / gamma).min(4e4);
        Self { r_min: 1e-5, r_max, n_points: 1200 }
    }
}

/// Bound eigenpairs of channel κ (levels n_min, n_min+1, …).
pub fn channel_levels(coupling: &Coupling, channel: &Channel, grid: &RadialGrid, count: usize) -> Result<(EigenSystem, StaggeredLayout)> {
    let op = build_dirac_channel(coupling, channel, grid, &RadialFunction::zero())?;
    let sys = bound_states(&op, count)?;
    Ok((sys, op.layout()?))
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityTable {
    /// "kappa=<k>" or "total".
    pub label: String,
    pub gamma: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub truncation_estimate: Vec<f64>,
    pub n_max: u32,
    pub kappa_max: Option<u32>,
    pub grid_hash: String,
    /// Number of bound levels actually resolved per channel.
    pub levels_used: u32,
}

impl DensityTable {
    pub fn value_at(&self, r: f64) -> f64 {
        log_interp(&self.radii, &self.values, r)
    }

    /// Least-squares slope of ln ρ against ln r over nodes in [a, b].
    pub fn loglog_slope(&self, a: f64, b: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .radii
            .iter()
            .zip(&self.values)
            .filter(|(r, v)| **r >= a && **r <= b && **v > 0.0)
            .map(|(r, v)| (r.ln(), v.ln()))
            .collect();
        fit_slope(&pts).ok_or_else(|| Error::Range(format!("fewer than 3 positive samples in [{a}, {b}]")))
    }

    /// ∫ ρ 4π r² dr over the table radii (trapezoid in r).
    pub fn total_charge(&self) -> f64 {
        self.radii
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(r, v)| 0.5 * (r[1] - r[0]) * 4.0 * PI * (v[0] * r[0] * r[0] + v[1] * r[1] * r[1]))
            .sum()
    }
}

pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Linear interpolation in ln r, clamped at the ends.
pub fn log_interp(radii: &[f64], values: &[f64], r: f64) -> f64 {
    if r <= radii[0] {
        return values[0];
    }
    if r >= radii[radii.len() - 1] {
        return values[values.len() - 1];
    }
    let k = radii.partition_point(|&x| x <= r) - 1;
    let t = (r / radii[k]).ln() / (radii[k + 1] / radii[k]).ln();
    values[k] * (1.0 - t) + values[k + 1] * t
}

/// Per-level contributions f⁺² + f⁻² at the upper-component radii, the
/// lower component interpolated from the midpoints.
fn level_profiles(sys: &EigenSystem, layout: &StaggeredLayout) -> Vec<Vec<f64>> {
    (0..sys.len())
        .map(|k| {
            let (up, lo) = layout.radial_functions(&sys.vector(k));
            let lo2: Vec<f64> = lo.iter().map(|x| x * x).collect();
            layout
                .r_upper
                .iter()
                .zip(&up)
                .map(|(&r, u)| u * u + log_interp(&layout.r_lower, &lo2, r))
                .collect()
        })
        .collect()
}

/// ρ_κ^H(r) = 2|κ|/(4πr²) Σ_{n=θ(−κ)}^{n_max} (f_n⁺² + f_n⁻²).
pub fn channel_density(coupling: &Coupling, channel: &Channel, n_max: u32, grid: &RadialGrid) -> Result<DensityTable> {
    if n_max < 1 {
        return Err(Error::Parameter("n_max must be >= 1".into()));
    }
    let n_min = channel.n_min();
    let wanted = (n_max + 1).saturating_sub(n_min) as usize;
    let (sys, layout) = channel_levels(coupling, channel, grid, wanted)?;
    if sys.is_empty() {
        return Err(Error::DegenerateDiscretization(format!("no bound states of kappa={} on the grid", channel.kappa)));
    }
    let profiles = level_profiles(&sys, &layout);
    let pref = channel.degeneracy as f64 / (4.0 * PI);
    let radii = layout.r_upper.clone();
    let mut values = vec![0.0; radii.len()];
    for p in &profiles {
        for (v, x) in values.iter_mut().zip(p) {
            *v += x;
        }
    }
    // n-tail: level contributions at fixed r fall off like n^{-3}, so
    // Σ_{n>N} ≈ (last term)·N_eff/2 with N_eff = n_max + |κ|
    let last = profiles.last().expect("non-empty");
    let n_eff = (n_min as usize + profiles.len()) as f64 + channel.abs_kappa() as f64;
    let missing = wanted - profiles.len();
    let truncation_estimate = radii
        .iter()
        .zip(last)
        .map(|(r, l)| pref / (r * r) * l * (0.5 * n_eff + missing as f64))
        .collect();
    for (v, r) in values.iter_mut().zip(&radii) {
        *v *= pref / (r * r);
    }
    Ok(DensityTable {
        label: format!("kappa={}", channel.kappa),
        gamma: coupling.gamma,
        radii,
        values,
        truncation_estimate,
        n_max,
        kappa_max: None,
        grid_hash: grid.hash(),
        levels_used: profiles.len() as u32,
    })
}

/// Channel density bound B_{s,γ,κ}(r) (constant factor omitted):
/// |κ|^{1−4s} r^{−2} times (r/|κ|)^{2s−1}, (r/|κ|)^{4s−1} or |κ|^{4s−1} on
/// r ≤ |κ|, |κ| ≤ r ≤ κ², r ≥ κ².
pub fn theorem3_bound(s: f64, kappa_abs: f64, r: f64) -> f64 {
    let k = kappa_abs;
    let bracket = if r <= k {
        (r / k).powf(2.0 * s - 1.0)
    } else if r <= k * k {
        (r / k).powf(4.0 * s - 1.0)
    } else {
        k.powf(4.0 * s - 1.0)
    };
    k.powf(1.0 - 4.0 * s) / (r * r) * bracket
}

/// Admissible s for the channel bound at this γ.
pub fn check_theorem3_s(s: f64, coupling: &Coupling) -> Result<()> {
    let limit = 15f64.sqrt() / 4.0;
    let ok = if coupling.gamma < limit {
        s > 0.5 && s <= 0.75
    } else {
        s > 0.5 && s < 1.5 - coupling.sigma_gamma
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "s={s} outside the channel-bound range (1/2 < s <= 3/4 for gamma < sqrt(15)/4, 1/2 < s < 3/2 - sigma_gamma otherwise) at gamma={}",
            coupling.gamma
        )))
    }
}

fn default_s(coupling: &Coupling) -> f64 {
    if coupling.gamma < 15f64.sqrt() / 4.0 {
        0.75
    } else {
        0.5 + 0.5 * (1.0 - coupling.sigma_gamma)
    }
}

/// Σ_{0<|κ|≤kappa_max} ρ_κ^H with a κ-tail estimate from the channel bound,
/// scaled by the largest ratio ρ_κ/B observed in the outermost channels.
pub fn total_density(coupling: &Coupling, kappa_max: u32, n_max: u32, grid: &RadialGrid) -> Result<DensityTable> {
    if kappa_max < 1 {
        return Err(Error::Parameter("kappa_max must be >= 1".into()));
    }
    let kappas: Vec<i32> = (1..=kappa_max as i32).flat_map(|k| [k, -k]).collect();
    let tables: Vec<DensityTable> = kappas
        .par_iter()
        .map(|&k| channel_density(coupling, &channel_numbers(k)?, n_max, grid))
        .collect::<Result<_>>()?;
    let radii = tables[0].radii.clone();
    let mut values = vec![0.0; radii.len()];
    let mut trunc = vec![0.0; radii.len()];
    for t in &tables {
        for i in 0..radii.len() {
            values[i] += t.values[i];
            trunc[i] += t.truncation_estimate[i];
        }
    }
    let s = default_s(coupling);
    let outer: Vec<&DensityTable> = tables.iter().filter(|t| t.label.ends_with(&format!("={kappa_max}")) || t.label.ends_with(&format!("=-{kappa_max}"))).collect();
    let mut scale: f64 = 0.0;
    for t in outer {
        for (r, v) in t.radii.iter().zip(&t.values) {
            scale = scale.max(v / theorem3_bound(s, kappa_max as f64, *r));
        }
    }
    for (i, &r) in radii.iter().enumerate() {
        trunc[i] += 2.0 * scale * kappa_tail(s, kappa_max, r);
    }
    Ok(DensityTable {
        label: "total".into(),
        gamma: coupling.gamma,
        radii,
        values,
        truncation_estimate: trunc,
        n_max,
        kappa_max: Some(kappa_max),
        grid_hash: grid.hash(),
        levels_used: tables.iter().map(|t| t.levels_used).min().unwrap_or(0),
    })
}

/// Σ_{k>K} B(s, k, r), summed explicitly to 50K and closed by the
/// integral of the r ≤ k branch (∝ k^{2−6s}).
fn kappa_tail(s: f64, kmax: u32, r: f64) -> f64 {
    let cap = 50 * kmax.max(1);
    let mut sum = 0.0;
    for k in (kmax + 1)..=cap {
        sum += theorem3_bound(s, k as f64, r);
    }
    let p = 6.0 * s - 2.0;
    if p > 1.0 {
        sum += theorem3_bound(s, cap as f64, r) * cap as f64 / (p - 1.0);
    }
    sum
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem3Channel {
    pub kappa: i32,
    pub constant: f64,
    pub r_at_sup: f64,
    pub constant_refined: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem3Report {
    pub s: f64,
    pub gamma: f64,
    pub channels: Vec<Theorem3Channel>,
    pub max_drift: f64,
    pub all_finite: bool,
}

/// sup_r ρ_κ(r)/B_{s,γ,κ}(r) over nodes where the n-truncation is
/// controlled (estimate ≤ 10% of the value) and away from the box edge.
pub fn theorem3_ratio(table: &DensityTable, kappa_abs: u32, s: f64, r_cap: f64) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    for ((r, v), t) in table.radii.iter().zip(&table.values).zip(&table.truncation_estimate) {
        if *r > r_cap || *t > 0.1 * v {
            continue;
        }
        let q = v / theorem3_bound(s, kappa_abs as f64, *r);
        if q > best.0 {
            best = (q, *r);
        }
    }
    best
}

/// Fit the channel constants on `grid` and on its 2× refinement.
pub fn verify_theorem3_bound(coupling: &Coupling, s: f64, kappas: &[i32], n_max: u32, grid: &RadialGrid) -> Result<Theorem3Report> {
    check_theorem3_s(s, coupling)?;
    let fine = grid.refined(2)?;
    let r_cap = grid.r_max / 8.0;
    let channels: Vec<Theorem3Channel> = kappas
        .par_iter()
        .map(|&k| {
            let ch = channel_numbers(k)?;
            let a = channel_density(coupling, &ch, n_max, grid)?;
            let b = channel_density(coupling, &ch, n_max, &fine)?;
            let (c1, r1) = theorem3_ratio(&a, ch.abs_kappa(), s, r_cap);
            let (c2, _) = theorem3_ratio(&b, ch.abs_kappa(), s, r_cap);
            Ok(Theorem3Channel { kappa: k, constant: c1, r_at_sup: r1, constant_refined: c2, drift: (c2 - c1).abs() / c1 })
        })
        .collect::<Result<_>>()?;
    let max_drift = channels.iter().map(|c| c.drift).fold(0.0, f64::max);
    let all_finite = channels.iter().all(|c| c.constant.is_finite() && c.constant > 0.0);
    Ok(Theorem3Report { s, gamma: coupling.gamma, channels, max_drift, all_finite })
}

/// ⟨ψ_{n,κ}, (γ/r) ψ_{n,κ}⟩ from the discrete eigenvector.
pub fn potential_moment(coupling: &Coupling, n: u32, kappa: i32, grid: &RadialGrid) -> Result<f64> {
    check_state(coupling.gamma, n, kappa)?;
    let ch = channel_numbers(kappa)?;
    let idx = (n - ch.n_min()) as usize;
    let op = build_dirac_channel(coupling, &ch, grid, &RadialFunction::zero())?;
    let sys = bound_states(&op, idx + 1)?;
    if sys.len() <= idx {
        return Err(Error::DomainTooSmall(format!("grid resolves only {} levels of kappa={kappa}", sys.len())));
    }
    let v = sys.vector(idx);
    Ok(v.iter().zip(&op.radii).map(|(x, r)| x * x * coupling.gamma / r).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sommerfeld_values() {
        let c = Coupling::from_gamma(0.5).unwrap();
        let e = sommerfeld_eigenvalue(&c, 1, 1).unwrap();
        let want = (1.0 + 0.25 / (1.0 + 0.75f64.sqrt()).powi(2)).powf(-0.5);
        assert!((e - want).abs() < 1e-15);
        assert!((e - 0.965926).abs() < 1e-6);
        assert!((sommerfeld_eigenvalue(&c, 0, 1).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!(matches!(sommerfeld_eigenvalue(&c, 0, -1), Err(Error::InvalidState { .. })));
    }

    #[test]
    fn binding_energy_is_stable() {
        let g = 1e-4;
        let b = binding_energy(g, 0, 1).unwrap();
        // ≈ γ²/2 at small γ
        assert!((b / (g * g * 0.5) - 1.0).abs() < 1e-7);
        let e = sommerfeld_gamma(0.7, 3, -2).unwrap();
        assert!((binding_energy(0.7, 3, -2).unwrap() - (1.0 - e)).abs() < 1e-15);
    }

    #[test]
    fn hellmann_feynman_closed_form() {
        let (g, h) = (0.6, 1e-5);
        for &(n, k) in &[(0u32, 1i32), (2, -1), (1, 3)] {
            let d = (sommerfeld_gamma(g + h, n, k).unwrap() - sommerfeld_gamma(g - h, n, k).unwrap()) / (2.0 * h);
            let m = inverse_radius_expectation(g, n, k).unwrap();
            assert!((m + d).abs() < 1e-8, "{n} {k}");
        }
    }

    #[test]
    fn bound_branches_meet() {
        for &s in &[0.6, 0.75] {
            for &k in &[2.0, 5.0] {
                let a = theorem3_bound(s, k, k * (1.0 - 1e-12));
                let b = theorem3_bound(s, k, k * (1.0 + 1e-12));
                assert!((a / b - 1.0).abs() < 1e-9);
                let a = theorem3_bound(s, k, k * k * (1.0 - 1e-12));
                let b = theorem3_bound(s, k, k * k * (1.0 + 1e-12));
                assert!((a / b - 1.0).abs() < 1e-9);
            }
        }
    }
}
