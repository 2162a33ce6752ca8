//! Matrix realizations of the radial channel operators.
//!
//! The Dirac channel uses a staggered grid: the upper component lives on
//! the interior grid nodes, the lower component on the midpoints between
//! consecutive boundary/interior points, and both vanish on the Dirichlet
//! boundary. On logarithmic grids the unknowns are u = √r f in the
//! variable t = ln r (a unitary change of variables, f² dr = u² dt), on
//! uniform grids they are √h f. Ordered as (v₀, u₀, v₁, u₁, …, u_{m−1}, v_m)
//! the matrix is symmetric tridiagonal.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::grid::{GridKind, RadialGrid};
use crate::linalg::{self, SymmetricEigen, Tridiagonal};
use crate::partial_waves::{channel_numbers, Channel};
use crate::potential::RadialFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Dirac,
    /// −d²/dr² + ℓ(ℓ+1)/r², i.e. p_ℓ².
    Kinetic,
    Momentum,
    Chandrasekhar,
    Furry,
}

#[derive(Debug, Clone)]
pub enum OperatorMatrix {
    Tridiagonal(Tridiagonal),
    Dense(DMatrix<f64>),
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        match self {
            OperatorMatrix::Tridiagonal(t) => t.dim(),
            OperatorMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            OperatorMatrix::Tridiagonal(t) => t.to_dense(),
            OperatorMatrix::Dense(m) => m.clone(),
        }
    }

    pub fn norm_bound(&self) -> f64 {
        match self {
            OperatorMatrix::Tridiagonal(t) => t.norm_bound(),
            OperatorMatrix::Dense(m) => m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max),
        }
    }
}

/// Where each matrix index sits on the radial axis, and the cell size c
/// such that f(r)² = x²/c for a unit-norm coefficient x.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredLayout {
    pub r_upper: Vec<f64>,
    pub r_lower: Vec<f64>,
    pub cell_upper: Vec<f64>,
    pub cell_lower: Vec<f64>,
}

impl StaggeredLayout {
    pub fn new(grid: &RadialGrid) -> Result<Self> {
        let points: Vec<f64> = match grid.kind {
            GridKind::Uniform => std::iter::once(grid.r_min).chain(grid.nodes.iter().copied()).collect(),
            GridKind::Logarithmic => grid.nodes.clone(),
        };
        if points.len() < 4 {
            return Err(Error::DegenerateDiscretization("grid too small for a staggered layout".into()));
        }
        let r_upper = points[1..points.len() - 1].to_vec();
        let r_lower: Vec<f64> = points
            .windows(2)
            .map(|w| match grid.kind {
                GridKind::Uniform => 0.5 * (w[0] + w[1]),
                GridKind::Logarithmic => (w[0] * w[1]).sqrt(),
            })
            .collect();
        let cell = |r: f64| match grid.kind {
            GridKind::Uniform => grid.step,
            GridKind::Logarithmic => grid.step * r,
        };
        Ok(Self {
            cell_upper: r_upper.iter().map(|&r| cell(r)).collect(),
            cell_lower: r_lower.iter().map(|&r| cell(r)).collect(),
            r_upper,
            r_lower,
        })
    }

    pub fn n_upper(&self) -> usize {
        self.r_upper.len()
    }

    pub fn dim(&self) -> usize {
        self.r_upper.len() + self.r_lower.len()
    }

    /// Radius attached to each interleaved index.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| if k % 2 == 0 { self.r_lower[k / 2] } else { self.r_upper[k / 2] }).collect()
    }

    pub fn is_upper(k: usize) -> bool {
        k % 2 == 1
    }

    /// Split an interleaved vector into (f⁺ on r_upper, f⁻ on r_lower).
    pub fn radial_functions(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let up = (0..self.n_upper()).map(|j| x[2 * j + 1] / self.cell_upper[j].sqrt()).collect();
        let lo = (0..self.r_lower.len()).map(|i| x[2 * i] / self.cell_lower[i].sqrt()).collect();
        (up, lo)
    }
}

/// Off-diagonal entries of the interleaved Dirac matrix: the staggered
/// discretization of d/dr − k/r mapping the upper to the lower component.
/// Entry 2i couples v_i to u_i, entry 2i+1 couples u_i to v_{i+1}.
fn staggered_factor(layout: &StaggeredLayout, grid: &RadialGrid, k: f64) -> Vec<f64> {
    let h = grid.step;
    let m = layout.n_upper();
    let mut off = Vec::with_capacity(2 * m);
    for j in 0..m {
        // u_j is the right neighbour of v_j and the left neighbour of v_{j+1}
        let ru = layout.r_upper[j];
        for (i, sign) in [(j, 1.0), (j + 1, -1.0)] {
            let rv = layout.r_lower[i];
            let e = match grid.kind {
                GridKind::Logarithmic => (sign / h - 0.5 * k) / (rv * ru).sqrt(),
                GridKind::Uniform => sign / h - 0.5 * k / rv,
            };
            off.push(e);
        }
    }
    off
}

/// Dense (m+1)×m matrix of d/dr − k/r from upper to lower points.
pub fn first_order_factor(grid: &RadialGrid, k: f64) -> Result<DMatrix<f64>> {
    let layout = StaggeredLayout::new(grid)?;
    let off = staggered_factor(&layout, grid, k);
    let m = layout.n_upper();
    let mut a = DMatrix::zeros(m + 1, m);
    for j in 0..m {
        a[(j, j)] = off[2 * j];
        a[(j + 1, j)] = off[2 * j + 1];
    }
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct ChannelOperator {
    pub matrix: OperatorMatrix,
    pub grid: RadialGrid,
    pub channel: Channel,
    pub kind: OperatorKind,
    pub potential_tag: String,
    /// Radius of each basis index (interleaved for Dirac, nodes otherwise;
    /// empty for the Furry restriction, whose basis is spectral).
    pub radii: Vec<f64>,
    pub gamma: f64,
}

impl ChannelOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn layout(&self) -> Result<StaggeredLayout> {
        StaggeredLayout::new(&self.grid)
    }

    pub fn tridiagonal(&self) -> Option<&Tridiagonal> {
        match &self.matrix {
            OperatorMatrix::Tridiagonal(t) => Some(t),
            OperatorMatrix::Dense(_) => None,
        }
    }
}

pub fn build_dirac_channel(coupling: &Coupling, channel: &Channel, grid: &RadialGrid, extra: &RadialFunction) -> Result<ChannelOperator> {
    build_dirac_channel_gamma(coupling.gamma, channel, grid, extra)
}

/// Same as `build_dirac_channel` but admits γ = 0 (free or purely
/// potential-driven operators such as D₀ − V).
pub fn build_dirac_channel_gamma(gamma: f64, channel: &Channel, grid: &RadialGrid, extra: &RadialFunction) -> Result<ChannelOperator> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Parameter(format!("gamma={gamma} outside [0,1)")));
    }
    let layout = StaggeredLayout::new(grid)?;
    let radii = layout.radii();
    let v = extra.sample(&radii)?;
    let diag: Vec<f64> = radii
        .iter()
        .zip(&v)
        .enumerate()
        .map(|(k, (&r, &vk))| {
            let rest = if StaggeredLayout::is_upper(k) { 1.0 } else { -1.0 };
            rest - gamma / r - vk
        })
        .collect();
    let off = staggered_factor(&layout, grid, channel.kappa as f64);
    Ok(ChannelOperator {
        matrix: OperatorMatrix::Tridiagonal(Tridiagonal::new(diag, off)?),
        grid: grid.clone(),
        channel: *channel,
        kind: OperatorKind::Dirac,
        potential_tag: extra.tag.clone(),
        radii,
        gamma,
    })
}

/// p_ℓ² as AᵀA with A the staggered d/dr − k/r; k = ℓ+1 and k = −ℓ both
/// give −d²/dr² + ℓ(ℓ+1)/r². Exactly positive semidefinite.
pub fn kinetic_matrix(grid: &RadialGrid, k: f64) -> Result<DMatrix<f64>> {
    let a = first_order_factor(grid, k)?;
    Ok(a.transpose() * a)
}

/// p_ℓ², p_ℓ or C_ℓ (+ a·1) on the upper-component points of `grid`.
pub fn build_scalar_channel(kind: OperatorKind, ell: u32, grid: &RadialGrid, mass_shift: f64) -> Result<ChannelOperator> {
    let t = kinetic_matrix(grid, ell as f64 + 1.0)?;
    let mut m = match kind {
        OperatorKind::Kinetic => t,
        OperatorKind::Momentum | OperatorKind::Chandrasekhar => {
            let eig = linalg::eigh(&t)?;
            if kind == OperatorKind::Momentum {
                eig.apply_fn(|x| x.max(0.0).sqrt())
            } else {
                eig.apply_fn(|x| (x.max(0.0) + 1.0).sqrt() - 1.0)
            }
        }
        _ => return Err(Error::Parameter(format!("{kind:?} is not a scalar channel operator"))),
    };
    for i in 0..m.nrows() {
        m[(i, i)] += mass_shift;
    }
    linalg::symmetrize(&mut m);
    let layout = StaggeredLayout::new(grid)?;
    Ok(ChannelOperator {
        matrix: OperatorMatrix::Dense(m),
        grid: grid.clone(),
        channel: channel_numbers(ell as i32 + 1)?,
        kind,
        potential_tag: format!("mass_shift={mass_shift}"),
        radii: layout.r_upper,
        gamma: 0.0,
    })
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Orthonormal columns, one per value.
    pub vectors: DMatrix<f64>,
    pub kind: OperatorKind,
    pub channel: Channel,
    pub grid_hash: String,
    pub potential_tag: String,
    pub gamma: f64,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().copied().collect()
    }

    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        let mut err: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - want).abs());
            }
        }
        err
    }
}

fn system_from(op: &ChannelOperator, values: Vec<f64>, vectors: DMatrix<f64>) -> EigenSystem {
    EigenSystem {
        values,
        vectors,
        kind: op.kind,
        channel: op.channel,
        grid_hash: op.grid.hash(),
        potential_tag: op.potential_tag.clone(),
        gamma: op.gamma,
    }
}

/// Full spectral decomposition (Householder/QL), ascending.
pub fn eigensolve(op: &ChannelOperator) -> Result<EigenSystem> {
    let SymmetricEigen { values, vectors } = match &op.matrix {
        OperatorMatrix::Tridiagonal(t) => t.eigh()?,
        OperatorMatrix::Dense(m) => {
            let asym = linalg::asymmetry(m);
            let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if asym > 1e-12 * scale {
                return Err(Error::Parameter(format!("matrix not symmetric (|A-A^T| = {asym:e})")));
            }
            linalg::eigh(m)?
        }
    };
    Ok(system_from(op, values, vectors))
}

/// Eigenpairs with eigenvalue in (lo, hi), at most `max_count` of the
/// lowest, by Sturm bisection and inverse iteration.
pub fn eigenpairs_in(op: &ChannelOperator, lo: f64, hi: f64, max_count: usize) -> Result<EigenSystem> {
    let t = op
        .tridiagonal()
        .ok_or_else(|| Error::Parameter("interval eigensolver needs a tridiagonal operator".into()))?;
    let base = t.count_below(lo);
    let count = (t.count_below(hi) - base).min(max_count);
    let n = t.dim();
    let mut values = Vec::with_capacity(count);
    let mut vectors = DMatrix::zeros(n, count);
    for k in 0..count {
        let lambda = t.kth_eigenvalue(base + k, lo, hi);
        let (rq, v) = t.inverse_iteration(lambda);
        let residual = {
            let av = t.mul_vec(&v);
            av.iter().zip(&v).map(|(a, x)| (a - rq * x).powi(2)).sum::<f64>().sqrt()
        };
        if residual > 1e-9 * t.norm_bound() {
            return Err(Error::Solver {
                size: n,
                detail: format!("inverse iteration residual {residual:e} at eigenvalue {lambda}"),
            });
        }
        values.push(lambda);
        vectors.set_column(k, &nalgebra::DVector::from_vec(v));
    }
    // nearly degenerate pairs: re-orthogonalize (Gram-Schmidt)
    for k in 1..count {
        for j in 0..k {
            let d = vectors.column(j).dot(&vectors.column(k));
            if d.abs() > 1e-12 {
                let cj = vectors.column(j).into_owned();
                let mut ck = vectors.column_mut(k);
                ck.axpy(-d, &cj, 1.0);
                let nrm = ck.norm();
                ck /= nrm;
            }
        }
    }
    Ok(system_from(op, values, vectors))
}

/// Bound states of a Dirac channel: eigenpairs in (0, 1).
pub fn bound_states(op: &ChannelOperator, max_count: usize) -> Result<EigenSystem> {
    if op.kind != OperatorKind::Dirac {
        return Err(Error::Parameter("bound_states needs a Dirac operator".into()));
    }
    eigenpairs_in(op, 0.0, 1.0, max_count)
}

/// Max over retained pairs of ‖A v − λ v‖ / ‖A‖.
pub fn relative_residual(op: &ChannelOperator, sys: &EigenSystem) -> f64 {
    let norm = op.matrix.norm_bound().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for k in 0..sys.len() {
        let v = sys.vector(k);
        let av: Vec<f64> = match &op.matrix {
            OperatorMatrix::Tridiagonal(t) => t.mul_vec(&v),
            OperatorMatrix::Dense(m) => (m * nalgebra::DVector::from_column_slice(&v)).iter().copied().collect(),
        };
        let r = av.iter().zip(&v).map(|(a, x)| (a - sys.values[k] * x).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(r / norm);
    }
    worst
}

/// Eigenvalues in the gap (−1+δ, 1−δ) of an operator with no potential,
/// which would all be artefacts.
pub fn gap_eigenvalues(op: &ChannelOperator, delta: f64) -> Vec<f64> {
    match &op.matrix {
        OperatorMatrix::Tridiagonal(t) => t.eigenvalues_in(-1.0 + delta, 1.0 - delta),
        OperatorMatrix::Dense(m) => linalg::eigvalsh(m)
            .unwrap_or_default()
            .into_iter()
            .filter(|&x| x > -1.0 + delta && x < 1.0 - delta)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpuriousFilter {
    pub retained: Vec<f64>,
    pub discarded: Vec<f64>,
    /// Median |shift| of matched levels under refinement.
    pub trend: f64,
}

/// Compare gap eigenvalues on a grid and its refinement: a level whose
/// nearest refined partner moved by more than `factor` times the median
/// shift is discarded. Returns the refined values of retained levels.
pub fn filter_spurious(coarse: &[f64], fine: &[f64], factor: f64) -> SpuriousFilter {
    let mut shifts = Vec::with_capacity(coarse.len());
    let mut partner = Vec::with_capacity(coarse.len());
    for &e in coarse {
        let (best, d) = fine
            .iter()
            .map(|&f| (f, (f - e).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((f64::NAN, f64::INFINITY));
        shifts.push(d);
        partner.push(best);
    }
    let mut sorted: Vec<f64> = shifts.iter().copied().filter(|d| d.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let trend = if sorted.is_empty() { 0.0 } else { sorted[sorted.len() / 2] };
    let mut out = SpuriousFilter { retained: Vec::new(), discarded: Vec::new(), trend };
    for (k, &e) in coarse.iter().enumerate() {
        if shifts[k].is_finite() && shifts[k] <= factor * trend.max(f64::EPSILON) {
            out.retained.push(partner[k]);
        } else {
            out.discarded.push(e);
        }
    }
    out
}

/// Order p from errors at N and 2N: err_N / err_2N = 2^p.
pub fn observed_order(err_coarse: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).abs().log2()
}

/// Matrix of Λ(D − 1 + W)Λ in the basis of positive-energy eigenvectors
/// of an unperturbed Dirac channel, W being a diagonal extra term given
/// by its values at the basis points. The unperturbed part is diag(λ_n − 1).
pub fn restriction_with(dirac: &EigenSystem, extra: &[f64]) -> Result<DMatrix<f64>> {
    if dirac.kind != OperatorKind::Dirac {
        return Err(Error::Parameter("restriction needs eigenpairs of a Dirac channel".into()));
    }
    if extra.len() != dirac.vectors.nrows() {
        return Err(Error::Dimension(format!("{} samples for {} basis rows", extra.len(), dirac.vectors.nrows())));
    }
    let first = dirac.values.partition_point(|&x| x <= 0.0);
    let m = dirac.values.len() - first;
    if m == 0 {
        return Err(Error::DegenerateDiscretization("no positive-energy eigenvectors".into()));
    }
    let q = dirac.vectors.columns(first, m);
    let mut wq = q.into_owned();
    for (i, wi) in extra.iter().enumerate() {
        wq.row_mut(i).scale_mut(*wi);
    }
    let mut out = q.transpose() * wq;
    for k in 0..m {
        out[(k, k)] += dirac.values[first + k] - 1.0;
    }
    linalg::symmetrize(&mut out);
    Ok(out)
}

/// Λ(D_γ − 1 − λV)Λ on the positive subspace of `dirac`, the full
/// eigensystem of the unperturbed operator `op`.
pub fn furry_restriction(dirac: &EigenSystem, op: &ChannelOperator, v: &RadialFunction, lambda: f64) -> Result<ChannelOperator> {
    let extra: Vec<f64> = v.sample(&op.radii)?.iter().map(|x| -lambda * x).collect();
    let m = restriction_with(dirac, &extra)?;
    Ok(ChannelOperator {
        matrix: OperatorMatrix::Dense(m),
        grid: op.grid.clone(),
        channel: op.channel,
        kind: OperatorKind::Furry,
        potential_tag: format!("{} * {lambda}", v.tag),
        radii: Vec::new(),
        gamma: op.gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_sizes() {
        let g = RadialGrid::logarithmic(1e-3, 10.0, 40).unwrap();
        let l = StaggeredLayout::new(&g).unwrap();
        assert_eq!(l.n_upper(), 38);
        assert_eq!(l.r_lower.len(), 39);
        let u = RadialGrid::uniform(0.0, 10.0, 40).unwrap();
        let l = StaggeredLayout::new(&u).unwrap();
        assert_eq!(l.n_upper(), 39);
        assert!((l.r_lower[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn factor_matches_dense_matrix() {
        let g = RadialGrid::logarithmic(1e-3, 10.0, 30).unwrap();
        let ch = channel_numbers(-2).unwrap();
        let op = build_dirac_channel_gamma(0.3, &ch, &g, &RadialFunction::zero()).unwrap();
        let d = op.matrix.to_dense();
        let a = first_order_factor(&g, -2.0).unwrap();
        for j in 0..a.ncols() {
            assert_eq!(d[(2 * j, 2 * j + 1)], a[(j, j)]);
            assert_eq!(d[(2 * j + 2, 2 * j + 1)], a[(j + 1, j)]);
        }
        assert_eq!(linalg::asymmetry(&d), 0.0);
    }

    #[test]
    fn spurious_filter_drops_outliers() {
        let coarse = [0.1, 0.2, 0.3, 0.5];
        let fine = [0.1001, 0.2001, 0.3001, 0.9];
        let f = filter_spurious(&coarse, &fine, 100.0);
        assert_eq!(f.discarded, vec![0.5]);
        assert_eq!(f.retained.len(), 3);
    }
}
