//! Spin-orbit channels, spherical spinors and the channel projection.
//!
//! Conventions: ℓ_κ = |κ| − θ(κ), so κ = +1 is the s-wave; spherical
//! harmonics carry the Condon-Shortley phase. Only phase-invariant
//! quantities (norms, m-sums) are meaningful across conventions.

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub kappa: i32,
    pub ell: u32,
    pub j_twice: u32,
    pub degeneracy: u32,
}

pub fn channel_numbers(kappa: i32) -> Result<Channel> {
    if kappa == 0 {
        return Err(Error::InvalidChannel("kappa must be nonzero".into()));
    }
    let a = kappa.unsigned_abs();
    Ok(Channel {
        kappa,
        ell: if kappa > 0 { a - 1 } else { a },
        j_twice: 2 * a - 1,
        degeneracy: 2 * a,
    })
}

impl Channel {
    pub fn new(kappa: i32) -> Result<Self> {
        channel_numbers(kappa)
    }

    pub fn abs_kappa(&self) -> u32 {
        self.kappa.unsigned_abs()
    }

    pub fn sign(&self) -> i32 {
        self.kappa.signum()
    }

    /// Orbital number of the lower component, 2j − ℓ = ℓ + sgn κ.
    pub fn ell_lower(&self) -> u32 {
        (self.ell as i32 + self.sign()) as u32
    }

    /// Smallest radial quantum number, θ(−κ).
    pub fn n_min(&self) -> u32 {
        if self.kappa < 0 { 1 } else { 0 }
    }

    /// Inverse of `channel_numbers` on (ℓ, 2j).
    pub fn from_ell_j(ell: u32, j_twice: u32) -> Result<Self> {
        if j_twice == 2 * ell + 1 {
            channel_numbers(ell as i32 + 1)
        } else if ell > 0 && j_twice == 2 * ell - 1 {
            channel_numbers(-(ell as i32))
        } else {
            Err(Error::InvalidQuantumNumber(format!("no channel with l={ell}, 2j={j_twice}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Four spinor components together with the direction they were taken at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorSample {
    pub components: [C64; 4],
    pub omega: Direction,
}

/// Orthonormal Y_{ℓ,m}(θ, φ); zero when |m| > ℓ.
pub fn spherical_harmonic(ell: i32, m: i32, omega: Direction) -> C64 {
    if ell < 0 || m.abs() > ell {
        return C64::new(0.0, 0.0);
    }
    let ma = m.abs();
    let p = normalized_legendre(ell as u32, ma as u32, omega.theta);
    let y = C64::from_polar(p, ma as f64 * omega.phi);
    if m >= 0 {
        y
    } else if ma % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    }
}

/// √((2ℓ+1)/4π (ℓ−m)!/(ℓ+m)!) P_ℓ^m(cos θ) with the Condon-Shortley phase.
fn normalized_legendre(ell: u32, m: u32, theta: f64) -> f64 {
    let (st, x) = theta.sin_cos();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=m {
        let k = k as f64;
        pmm *= -((2.0 * k + 1.0) / (2.0 * k)).sqrt() * st;
    }
    if ell == m {
        return pmm;
    }
    let mf = m as f64;
    let mut p_prev = pmm;
    let mut p = x * (2.0 * mf + 3.0).sqrt() * pmm;
    let mut a_prev = (2.0 * mf + 3.0).sqrt();
    for l in (m + 2)..=ell {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let next = a * (x * p - p_prev / a_prev);
        p_prev = p;
        p = next;
        a_prev = a;
    }
    p
}

/// Two-component spherical spinor Ω_{ℓ,m,s}, with m = m_twice/2 and
/// s = s_sign/2.
pub fn spherical_spinor(ell: u32, m_twice: i32, s_sign: i32, omega: Direction) -> Result<[C64; 2]> {
    if m_twice % 2 == 0 || m_twice.unsigned_abs() > 2 * ell + 1 {
        return Err(Error::InvalidQuantumNumber(format!(
            "2m={m_twice} must be odd with |m| <= l + 1/2 (l={ell})"
        )));
    }
    if s_sign != 1 && s_sign != -1 {
        return Err(Error::InvalidQuantumNumber(format!("spin sign {s_sign} must be ±1")));
    }
    let l = ell as f64;
    // 2sm with s = ±1/2
    let two_sm = s_sign as f64 * m_twice as f64 / 2.0;
    let denom = 2.0 * l + 1.0;
    let a = ((l + 0.5 + two_sm) / denom).max(0.0).sqrt() * s_sign as f64;
    let b = ((l + 0.5 - two_sm) / denom).max(0.0).sqrt();
    let ell = ell as i32;
    Ok([
        spherical_harmonic(ell, (m_twice - 1) / 2, omega) * a,
        spherical_harmonic(ell, (m_twice + 1) / 2, omega) * b,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sigma {
    Plus,
    Minus,
}

/// Dirac spinor Φ^σ_{κ,m}.
pub fn dirac_spinor(channel: &Channel, m_twice: i32, sigma: Sigma, omega: Direction) -> Result<SpinorSample> {
    if m_twice % 2 == 0 || m_twice.unsigned_abs() > channel.j_twice {
        return Err(Error::InvalidQuantumNumber(format!(
            "2m={m_twice} outside [-2j, 2j] for kappa={}",
            channel.kappa
        )));
    }
    let sg = channel.sign();
    let zero = C64::new(0.0, 0.0);
    let components = match sigma {
        Sigma::Plus => {
            let om = spherical_spinor(channel.ell, m_twice, sg, omega)?;
            let f = C64::new(0.0, sg as f64);
            [om[0] * f, om[1] * f, zero, zero]
        }
        Sigma::Minus => {
            let om = spherical_spinor(channel.ell_lower(), m_twice, -sg, omega)?;
            let f = -(sg as f64);
            [zero, zero, om[0] * f, om[1] * f]
        }
    };
    Ok(SpinorSample { components, omega })
}

/// Σ_m |Φ^σ_{κ,m}(ω)|² for one σ; equals 2|κ|/(4π) for every ω.
pub fn unsold_sum(channel: &Channel, sigma: Sigma, omega: Direction) -> f64 {
    m_values(channel)
        .map(|m| {
            let s = dirac_spinor(channel, m, sigma, omega).expect("m in range");
            s.components.iter().map(|c| c.norm_sqr()).sum::<f64>()
        })
        .sum()
}

/// 2m for m = −j, …, j.
pub fn m_values(channel: &Channel) -> impl Iterator<Item = i32> {
    let j2 = channel.j_twice as i32;
    (-j2..=j2).step_by(2)
}

/// Gauss-Legendre in cos θ times the trapezoid rule in φ.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    pub points: Vec<Direction>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Exact for spherical polynomials of degree < min(2 n_theta, n_phi).
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (xi, wi) in x.iter().zip(&w) {
            for k in 0..n_phi {
                points.push(Direction::new(xi.acos(), dphi * k as f64));
                weights.push(wi * dphi);
            }
        }
        Self { points, weights }
    }

    /// Rule adequate for products of two spinors up to orbital number `ell_max`.
    pub fn for_ell(ell_max: u32) -> Self {
        let n = ell_max as usize + 2;
        Self::new(n, 2 * n + 2)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// L²(S²; C⁴) inner product of two spinor-valued functions by quadrature.
pub fn sphere_inner(quad: &SphereQuadrature, a: impl Fn(Direction) -> [C64; 4], b: impl Fn(Direction) -> [C64; 4]) -> C64 {
    quad.points
        .iter()
        .zip(&quad.weights)
        .map(|(&om, &w)| {
            let (x, y) = (a(om), b(om));
            x.iter().zip(&y).map(|(p, q)| p.conj() * q).sum::<C64>() * w
        })
        .sum()
}

/// A 4-spinor field sampled on radii × sphere quadrature points,
/// index [k * quad.len() + q].
#[derive(Debug, Clone)]
pub struct SpinorField {
    pub radii: Vec<f64>,
    pub quad: SphereQuadrature,
    pub values: Vec<[C64; 4]>,
}

impl SpinorField {
    /// x ↦ Σ_m (f⁺_m(r) Φ⁺_{κ,m}(ω) + f⁻_m(r) Φ⁻_{κ,m}(ω)) / r, with
    /// `coefficients` listing (2m, f⁺_m, f⁻_m).
    pub fn from_channel(
        channel: &Channel,
        coefficients: &[(i32, Vec<C64>, Vec<C64>)],
        radii: &[f64],
        quad: &SphereQuadrature,
    ) -> Result<Self> {
        let mut values = vec![[C64::new(0.0, 0.0); 4]; radii.len() * quad.len()];
        for (m_twice, fp, fm) in coefficients {
            if fp.len() != radii.len() || fm.len() != radii.len() {
                return Err(Error::Dimension(format!(
                    "radial coefficient length {} / {} vs {} radii",
                    fp.len(),
                    fm.len(),
                    radii.len()
                )));
            }
            for (q, &om) in quad.points.iter().enumerate() {
                let up = dirac_spinor(channel, *m_twice, Sigma::Plus, om)?.components;
                let lo = dirac_spinor(channel, *m_twice, Sigma::Minus, om)?.components;
                for (k, &r) in radii.iter().enumerate() {
                    let slot = &mut values[k * quad.len() + q];
                    for t in 0..4 {
                        slot[t] += (up[t] * fp[k] + lo[t] * fm[k]) / r;
                    }
                }
            }
        }
        Ok(Self { radii: radii.to_vec(), quad: quad.clone(), values })
    }

    pub fn add(&self, other: &SpinorField) -> Result<SpinorField> {
        if self.radii != other.radii || self.quad != other.quad {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
            .collect();
        Ok(SpinorField { radii: self.radii.clone(), quad: self.quad.clone(), values })
    }
}

/// Radial coefficients of Π_κ g: for each 2m, f^σ_m(r) = r ⟨Φ^σ_{κ,m}, g(r·)⟩_{S²}.
#[derive(Debug, Clone)]
pub struct ChannelProjection {
    pub channel: Channel,
    pub m_twice: Vec<i32>,
    pub f_plus: Vec<Vec<C64>>,
    pub f_minus: Vec<Vec<C64>>,
}

impl ChannelProjection {
    /// Σ_m Σ_σ ∫ |f^σ_m|² dr by the trapezoid rule over the sample radii.
    pub fn radial_norm_sqr(&self, radii: &[f64]) -> f64 {
        let trap = |f: &[C64]| -> f64 {
            radii
                .windows(2)
                .zip(f.windows(2))
                .map(|(r, v)| 0.5 * (r[1] - r[0]) * (v[0].norm_sqr() + v[1].norm_sqr()))
                .sum()
        };
        self.f_plus.iter().chain(&self.f_minus).map(|f| trap(f)).sum()
    }
}

pub fn project_channel(g: &SpinorField, channel: &Channel) -> Result<ChannelProjection> {
    let nq = g.quad.len();
    if g.values.len() != g.radii.len() * nq {
        return Err(Error::Dimension(format!(
            "{} samples for {} radii x {} directions",
            g.values.len(),
            g.radii.len(),
            nq
        )));
    }
    let ms: Vec<i32> = m_values(channel).collect();
    let mut f_plus = Vec::with_capacity(ms.len());
    let mut f_minus = Vec::with_capacity(ms.len());
    for &m in &ms {
        let up: Vec<[C64; 4]> = g
            .quad
            .points
            .iter()
            .map(|&om| dirac_spinor(channel, m, Sigma::Plus, om).map(|s| s.components))
            .collect::<Result<_>>()?;
        let lo: Vec<[C64; 4]> = g
            .quad
            .points
            .iter()
            .map(|&om| dirac_spinor(channel, m, Sigma::Minus, om).map(|s| s.components))
            .collect::<Result<_>>()?;
        let mut fp = Vec::with_capacity(g.radii.len());
        let mut fm = Vec::with_capacity(g.radii.len());
        for (k, &r) in g.radii.iter().enumerate() {
            let mut sp = C64::new(0.0, 0.0);
            let mut sm = C64::new(0.0, 0.0);
            for q in 0..nq {
                let v = &g.values[k * nq + q];
                let w = g.quad.weights[q];
                for t in 0..4 {
                    sp += up[q][t].conj() * v[t] * w;
                    sm += lo[q][t].conj() * v[t] * w;
                }
            }
            fp.push(sp * r);
            fm.push(sm * r);
        }
        f_plus.push(fp);
        f_minus.push(fm);
    }
    Ok(ChannelProjection { channel: *channel, m_twice: ms, f_plus, f_minus })
}
