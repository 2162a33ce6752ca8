//! Operator inequalities between discretized channel operators, checked as
//! matrix facts (smallest eigenvalue of the difference).
//!
//! On the staggered layout p² = D₀² − 1 = blockdiag(AᵀA, AAᵀ) holds exactly,
//! with A the discrete d/dr − κ/r; AᵀA approximates p²_{ℓ_κ} on the upper
//! component and AAᵀ approximates p²_{ℓ'} on the lower one.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::linalg;
use crate::partial_waves::Channel;
use crate::potential::RadialFunction;
use crate::radial::{build_dirac_channel_gamma, eigensolve, first_order_factor, kinetic_matrix, restriction_with, StaggeredLayout};

fn dense_norm(m: &DMatrix<f64>) -> Result<f64> {
    let v = linalg::eigvalsh(m)?;
    Ok(v.iter().fold(0.0f64, |a, x| a.max(x.abs())))
}

/// Interleaved p² = D₀² − 1 of a channel (dense).
pub fn momentum_squared(channel: &Channel, grid: &RadialGrid) -> Result<DMatrix<f64>> {
    let d0 = build_dirac_channel_gamma(0.0, channel, grid, &RadialFunction::zero())?.matrix.to_dense();
    let mut p2 = &d0 * &d0;
    for i in 0..p2.nrows() {
        p2[(i, i)] -= 1.0;
    }
    linalg::symmetrize(&mut p2);
    Ok(p2)
}

/// Hardy-type comparisons in scale-free form: each entry is
/// min_f ⟨f, T f⟩ / ⟨f, w r^{−2} f⟩ − 1, i.e. eigmin(R T R)/w − 1 with
/// R = diag(r) (a congruence, so the sign is that of eigmin(T − w r^{−2})).
#[derive(Debug, Clone, Serialize)]
pub struct HardyReport {
    pub kappa: i32,
    /// T = p²_{ℓ_κ} on the upper component, w = κ²/2.
    pub channel_form: f64,
    /// T = p²_{ℓ_κ}, w = (ℓ_κ + ½)².
    pub hardy_upper: f64,
    /// T = p²_{ℓ′} with ℓ′ = ℓ_κ + sgn κ, w = (ℓ′ + ½)².
    pub hardy_lower: f64,
}

impl HardyReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.channel_form >= -tol
    }
}

fn min_ratio(t: &DMatrix<f64>, radii: &[f64], w: f64) -> Result<f64> {
    let mut m = t.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= radii[i] * radii[j] / w;
        }
    }
    linalg::symmetrize(&mut m);
    Ok(linalg::eigmin(&m)? - 1.0)
}

pub fn hardy_check(channel: &Channel, grid: &RadialGrid) -> Result<HardyReport> {
    let layout = StaggeredLayout::new(grid)?;
    let a = first_order_factor(grid, channel.kappa as f64)?;
    let k2 = (channel.kappa * channel.kappa) as f64;
    // upper block of D₀² − 1
    let t_up = a.transpose() * &a;
    let lu = channel.ell as f64 + 0.5;
    let ell_lower = channel.ell_lower() as f64;
    let t_lo = kinetic_matrix(grid, ell_lower + 1.0)?;
    Ok(HardyReport {
        kappa: channel.kappa,
        channel_form: min_ratio(&t_up, &layout.r_upper, 0.5 * k2)?,
        hardy_upper: min_ratio(&t_up, &layout.r_upper, lu * lu)?,
        hardy_lower: min_ratio(&t_lo, &layout.r_upper, (ell_lower + 0.5).powi(2))?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KineticComparison {
    pub kappa: i32,
    pub a: f64,
    /// eigmin((D₀ − b)² − (√(p²+1) − b)²), b = 1 − a/κ².
    pub eigmin: f64,
    pub scale: f64,
}

/// (D₀ − 1 + aκ^{−2})² ≥ (√(p²+1) − 1 + aκ^{−2})² for 0 < a ≤ κ².
pub fn kinetic_comparison(channel: &Channel, grid: &RadialGrid, a: f64) -> Result<KineticComparison> {
    let k2 = (channel.kappa * channel.kappa) as f64;
    if !(a > 0.0 && a <= k2) {
        return Err(Error::Parameter(format!("a={a} must satisfy 0 < a <= kappa^2 = {k2}")));
    }
    let d0 = build_dirac_channel_gamma(0.0, channel, grid, &RadialFunction::zero())?.matrix.to_dense();
    let eig = linalg::eigh(&d0)?;
    let b = 1.0 - a / k2;
    // √(p²+1) = |D₀| since D₀² = p² + 1 exactly
    let left = eig.apply_fn(|x| (x - b) * (x - b));
    let right = eig.apply_fn(|x| (x.abs() - b) * (x.abs() - b));
    let mut diff = left - &right;
    linalg::symmetrize(&mut diff);
    Ok(KineticComparison { kappa: channel.kappa, a, eigmin: linalg::eigmin(&diff)?, scale: dense_norm(&right)? })
}

/// Largest eigenvalue of (F_γ+1)^{−s} Λ|p|^{2s}Λ (F_γ+1)^{−s} on the
/// positive subspace of the γ-Coulomb channel.
pub fn domination_constant(gamma: f64, channel: &Channel, s: f64, grid: &RadialGrid) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Parameter(format!("s={s} outside (0,1]")));
    }
    let op = build_dirac_channel_gamma(gamma, channel, grid, &RadialFunction::zero())?;
    let sys = eigensolve(&op)?;
    let p2 = linalg::eigh(&momentum_squared(channel, grid)?)?;
    let p2s = p2.apply_fn(|x| x.max(0.0).powf(s));
    let first = sys.values.partition_point(|&x| x <= 0.0);
    let m = sys.values.len() - first;
    let q = sys.vectors.columns(first, m);
    let mut r = q.transpose() * p2s * q;
    for i in 0..m {
        for j in 0..m {
            r[(i, j)] *= (sys.values[first + i] * sys.values[first + j]).powf(-s);
        }
    }
    linalg::symmetrize(&mut r);
    Ok(linalg::eigvalsh(&r)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationStability {
    pub gamma: f64,
    pub kappa: i32,
    pub s: f64,
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
}

pub fn domination_stability(gamma: f64, channel: &Channel, s: f64, grid: &RadialGrid) -> Result<DominationStability> {
    let coarse = domination_constant(gamma, channel, s, grid)?;
    let fine = domination_constant(gamma, channel, s, &grid.refined(2)?)?;
    Ok(DominationStability { gamma, kappa: channel.kappa, s, coarse, fine, relative_change: (fine - coarse).abs() / coarse })
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub s: f64,
    pub s_prime: f64,
    pub m: f64,
    /// ‖|B|^s A^{−s′}‖ / M^{s−s′}
    pub norm_ratio: f64,
    /// eigmin((A+B+M)^{2s} − ½(A+M)^{2s})
    pub lower_eigmin: f64,
    /// eigmin(2(A+M)^{2s} − (A+B+M)^{2s})
    pub upper_eigmin: f64,
    pub scale: f64,
}

/// Largest ‖|B|^s A^{−s′}‖/M^{s−s′} for which the sandwich is asserted.
/// For commuting A, B this bounds |B| ≤ ε(A+M) with (1 ± ε)^{2s} inside
/// [½, 2]; the general statement leaves the constant open.
pub fn sandwich_hypothesis_constant(s: f64) -> f64 {
    (1.0 - 2f64.powf(-0.5 / s)).powf(s)
}

impl SandwichReport {
    pub fn hypothesis_holds(&self) -> bool {
        self.norm_ratio <= sandwich_hypothesis_constant(self.s)
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lower_eigmin >= -rel_tol * self.scale && self.upper_eigmin >= -rel_tol * self.scale
    }
}

/// ½(A+M)^{2s} ≤ (A+B+M)^{2s} ≤ 2(A+M)^{2s} for A = diag(a) > 0 and a
/// semidefinite B.
pub fn sandwich(a: &[f64], b: &DMatrix<f64>, s: f64, s_prime: f64, m: f64) -> Result<SandwichReport> {
    let n = a.len();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::Dimension(format!("A has {n} entries, B is {}x{}", b.nrows(), b.ncols())));
    }
    if a.iter().any(|&x| x <= 0.0) {
        return Err(Error::Parameter("A must be positive".into()));
    }
    if !(s > s_prime.max(0.5) && s < 1.0) {
        return Err(Error::Parameter(format!("need max(s', 1/2) < s < 1, got s={s}, s'={s_prime}")));
    }
    let be = linalg::eigh(b)?;
    let (lo, hi) = be.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let scale_b = hi.abs().max(lo.abs());
    if lo < -1e-12 * scale_b && hi > 1e-12 * scale_b {
        return Err(Error::Parameter("B must be semidefinite".into()));
    }
    let mut x = be.apply_fn(|v| v.abs().powf(s));
    for j in 0..n {
        x.column_mut(j).scale_mut(a[j].powf(-s_prime));
    }
    let norm = linalg::eigvalsh(&(x.transpose() * &x))?.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let base = DVector::from_iterator(n, a.iter().map(|&v| (v + m).powf(2.0 * s)));
    let mut full = b.clone();
    for i in 0..n {
        full[(i, i)] += a[i] + m;
    }
    linalg::symmetrize(&mut full);
    let pw = linalg::eigh(&full)?.apply_fn(|v| v.max(0.0).powf(2.0 * s));
    let mut lower = pw.clone();
    let mut upper = -pw;
    for i in 0..n {
        lower[(i, i)] -= 0.5 * base[i];
        upper[(i, i)] += 2.0 * base[i];
    }
    linalg::symmetrize(&mut lower);
    linalg::symmetrize(&mut upper);
    Ok(SandwichReport {
        s,
        s_prime,
        m,
        norm_ratio: norm / m.powf(s - s_prime),
        lower_eigmin: linalg::eigmin(&lower)?,
        upper_eigmin: linalg::eigmin(&upper)?,
        scale: base.max(),
    })
}

/// Sandwich with A = F_γ + 1 and B = ΛUΛ on one channel.
pub fn channel_sandwich(gamma: f64, channel: &Channel, u: &RadialFunction, grid: &RadialGrid, s: f64, s_prime: f64, m: f64) -> Result<SandwichReport> {
    let op = build_dirac_channel_gamma(gamma, channel, grid, &RadialFunction::zero())?;
    let sys = eigensolve(&op)?;
    let first = sys.values.partition_point(|&x| x <= 0.0);
    let a: Vec<f64> = sys.values[first..].to_vec();
    let mut b = restriction_with(&sys, &u.sample(&op.radii)?)?;
    for (k, ak) in a.iter().enumerate() {
        b[(k, k)] -= ak - 1.0;
    }
    sandwich(&a, &b, s, s_prime, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partial_waves::channel_numbers;

    #[test]
    fn sandwich_with_zero_perturbation() {
        let a = [0.5, 1.0, 3.0];
        let rep = sandwich(&a, &DMatrix::zeros(3, 3), 0.75, 0.6, 1.0).unwrap();
        assert!(rep.norm_ratio == 0.0);
        assert!((rep.lower_eigmin - 0.5 * 1.5f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn momentum_square_blocks() {
        let g = RadialGrid::logarithmic(1e-3, 20.0, 60).unwrap();
        let ch = channel_numbers(-2).unwrap();
        let p2 = momentum_squared(&ch, &g).unwrap();
        // no coupling between upper and lower components
        for i in 0..p2.nrows() {
            for j in 0..p2.ncols() {
                if (i + j) % 2 == 1 {
                    assert!(p2[(i, j)].abs() < 1e-9 * p2.amax());
                }
            }
        }
    }
}
