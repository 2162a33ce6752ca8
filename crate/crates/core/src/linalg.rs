//! Dense symmetric eigensolver (Householder tridiagonalization followed by
//! implicit-shift QL) and a few tridiagonal helpers.
//!
//! Matrices are `nalgebra::DMatrix<f64>`, which stores columns contiguously;
//! the inner loops below are written so that they walk down columns.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration cap per eigenvalue in the QL sweep.
const MAX_QL_ITERATIONS: usize = 64;

/// Full spectral decomposition `A = V diag(values) Vᵀ`, values ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    /// Rebuilds `V f(Λ) Vᵀ` for a scalar function of the spectrum.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            scaled.column_mut(j).scale_mut(w);
        }
        let mut out = &scaled * self.vectors.transpose();
        symmetrize(&mut out);
        debug_assert_eq!(out.nrows(), n);
        out
    }

    /// `‖V diag(λ) Vᵀ − A‖_F / ‖A‖_F`.
    pub fn reconstruction_error(&self, a: &DMatrix<f64>) -> f64 {
        let rebuilt = self.apply_fn(|x| x);
        let scale = a.norm().max(f64::MIN_POSITIVE);
        (rebuilt - a).norm() / scale
    }
}

/// Symmetric tridiagonal matrix: `diag[i]` on the diagonal and `off[i]`
/// coupling rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Dimension(format!(
                "tridiagonal needs n diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.off.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Number of eigenvalues strictly below `x` (Sturm count from the
    /// LDLᵀ pivots of `T − x`).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut pivot = self.diag[0] - x;
        if pivot < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let denom = if pivot.abs() < tiny { -tiny } else { pivot };
            pivot = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues in `(lo, hi)` by bisection on the Sturm count.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let below_lo = self.count_below(lo);
        let below_hi = self.count_below(hi);
        (below_lo..below_hi)
            .map(|k| self.kth_eigenvalue(k, lo, hi))
            .collect()
    }

    /// The `k`-th eigenvalue (0-based, ascending) known to lie in `[lo, hi]`.
    pub fn kth_eigenvalue(&self, k: usize, lo: f64, hi: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.count_below(mid) > k {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    }

    /// Unit eigenvector for an (accurate) eigenvalue by inverse iteration,
    /// followed by one Rayleigh-quotient refinement of the value.
    pub fn inverse_iteration(&self, lambda: f64) -> (f64, Vec<f64>) {
        let n = self.dim();
        let scale = self.norm_bound().max(1.0);
        let shift = lambda + 8.0 * f64::EPSILON * scale * if lambda >= 0.0 { 1.0 } else { -1.0 };
        let lu = TridiagonalLu::factor(self, shift);
        // deterministic, non-degenerate start vector
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * ((i as f64) * 0.618_033_988_75).sin()).collect();
        normalize(&mut x);
        for _ in 0..4 {
            x = lu.solve(&x);
            normalize(&mut x);
        }
        let tx = self.mul_vec(&x);
        let rq: f64 = x.iter().zip(&tx).map(|(a, b)| a * b).sum();
        (rq, x)
    }

    /// Values only, via implicit QL.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        tql(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    /// Full decomposition via implicit QL with vector accumulation.
    pub fn eigh(&self) -> Result<SymmetricEigen> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        let mut v = DMatrix::identity(n, n);
        tql(&mut d, &mut e, Some(&mut v))?;
        Ok(sort_pairs(d, v))
    }
}

struct TridiagonalLu {
    // Gaussian elimination with partial pivoting; row i of U has entries
    // at columns i, i+1, i+2.
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &Tridiagonal, shift: f64) -> Self {
        let n = t.dim();
        let tiny = f64::EPSILON * t.norm_bound().max(f64::MIN_POSITIVE);
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        // current working row i: (a, b, c) at columns i, i+1, i+2
        let mut a = t.diag[0] - shift;
        let mut b = if n > 1 { t.off[0] } else { 0.0 };
        let mut c = 0.0;
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a.abs() < tiny { tiny } else { a };
                break;
            }
            let sub = t.off[i];
            let next_diag = t.diag[i + 1] - shift;
            let next_super = if i + 2 < n { t.off[i + 1] } else { 0.0 };
            if sub.abs() > a.abs() {
                // swap working row with row i+1
                swapped[i] = true;
                let m = a / sub;
                u0[i] = sub;
                u1[i] = next_diag;
                u2[i] = next_super;
                mult[i] = m;
                a = b - m * next_diag;
                b = c - m * next_super;
                c = 0.0;
            } else {
                let piv = if a.abs() < tiny { tiny } else { a };
                let m = sub / piv;
                u0[i] = piv;
                u1[i] = b;
                u2[i] = c;
                mult[i] = m;
                a = next_diag - m * b;
                b = next_super - m * c;
                c = 0.0;
            }
        }
        Self { u0, u1, u2, mult, swapped }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.mult[i] * y[i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            if i + 1 < n {
                acc -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * x[i + 2];
            }
            x[i] = acc / self.u0[i];
        }
        x
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Largest `|A − Aᵀ|` entry relative to the largest entry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Full spectral decomposition of a dense symmetric matrix.
pub fn eigh(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    check_square(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(SymmetricEigen { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder(&mut v, &mut d, &mut e, true);
    // tql expects the subdiagonal shifted down by one
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    tql(&mut d, &mut e, Some(&mut v))?;
    Ok(sort_pairs(d, v))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_square(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder(&mut v, &mut d, &mut e, false);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn eigmin(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigvalsh(a)?.first().copied().unwrap_or(0.0))
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("matrix is {}x{}, not square", a.nrows(), a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Solver { size: a.nrows(), detail: "non-finite matrix entry".into() });
    }
    Ok(())
}

fn sort_pairs(d: Vec<f64>, v: DMatrix<f64>) -> SymmetricEigen {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DMatrix::zeros(v.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    SymmetricEigen { values, vectors }
}

/// Householder reduction to tridiagonal form. On return `d` holds the
/// diagonal, `e[1..]` the subdiagonal, and (when `accumulate`) `v` the
/// orthogonal transformation. Entry `(k, j)` of the working matrix is read
/// from the lower triangle, i.e. from column `j`.
fn householder(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let n = d.len();
    let data = v.as_mut_slice();
    // col-major: (row k, col j) -> j * n + k
    let at = |k: usize, j: usize| j * n + k;
    for j in 0..n {
        d[j] = data[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = data[at(i - 1, j)];
                data[at(i, j)] = 0.0;
                data[at(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                data[at(j, i)] = f;
                let mut g = e[j] + data[at(j, j)] * f;
                let col = &data[at(0, j)..at(0, j) + n];
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let base = at(0, j);
                for k in j..i {
                    data[base + k] -= f * e[k] + g * d[k];
                }
                d[j] = data[at(i - 1, j)];
                data[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if accumulate {
        for i in 0..n - 1 {
            data[at(n - 1, i)] = data[at(i, i)];
            data[at(i, i)] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    d[k] = data[at(k, i + 1)] / h;
                }
                for j in 0..=i {
                    let mut g = 0.0;
                    for k in 0..=i {
                        g += data[at(k, i + 1)] * data[at(k, j)];
                    }
                    for k in 0..=i {
                        data[at(k, j)] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                data[at(k, i + 1)] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = data[at(n - 1, j)];
            data[at(n - 1, j)] = 0.0;
        }
        data[at(n - 1, n - 1)] = 1.0;
    } else {
        for j in 0..n {
            d[j] = data[at(j, j)];
        }
    }
    e[0] = 0.0;
}

/// Implicit-shift QL on a symmetric tridiagonal matrix with diagonal `d`
/// and subdiagonal `e[0..n-1]` (`e[n-1]` ignored). Rotations are applied to
/// the columns of `z` when given.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut DMatrix<f64>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let rows = z.as_ref().map_or(0, |m| m.nrows());
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    e[n - 1] = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        let m = m.min(n - 1);
        if m > l {
            let mut iter = 0;
            let mut shifts = Vec::new();
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::Solver {
                        size: n,
                        detail: format!(
                            "QL failed to converge at index {l} after {MAX_QL_ITERATIONS} sweeps; \
                             last shifts {:?}",
                            &shifts[shifts.len().saturating_sub(4)..]
                        ),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                shifts.push(f);

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(zm) = z.as_deref_mut() {
                        let (left, right) = zm.as_mut_slice().split_at_mut((i + 1) * rows);
                        let col_i = &mut left[i * rows..];
                        let col_i1 = &mut right[..rows];
                        for k in 0..rows {
                            let hk = col_i1[k];
                            col_i1[k] = s * col_i[k] + c * hk;
                            col_i[k] = c * col_i[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Residual `max_j ‖A v_j − λ_j v_j‖` relative to `‖A‖_F`.
pub fn max_residual(a: &DMatrix<f64>, eig: &SymmetricEigen) -> f64 {
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for (j, &lambda) in eig.values.iter().enumerate() {
        let v: DVector<f64> = eig.vectors.column(j).into_owned();
        let r = a * &v - &v * lambda;
        worst = worst.max(r.norm());
    }
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        m = &m + m.transpose();
        m
    }

    #[test]
    fn two_by_two_swap() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let eig = eigh(&a).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-15);
        assert!((eig.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_spectrum() {
        let a = DMatrix::<f64>::identity(7, 7);
        let eig = eigh(&a).unwrap();
        assert!(eig.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let gram = eig.vectors.transpose() * &eig.vectors;
        assert!((gram - DMatrix::<f64>::identity(7, 7)).norm() < 1e-13);
    }

    #[test]
    fn random_reconstruction() {
        let a = random_symmetric(50, 7);
        let eig = eigh(&a).unwrap();
        assert!(eig.reconstruction_error(&a) <= 1e-10);
        assert!(max_residual(&a, &eig) <= 1e-9);
        let gram = eig.vectors.transpose() * &eig.vectors;
        assert!((gram - DMatrix::<f64>::identity(50, 50)).amax() < 1e-12);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let vals = eigvalsh(&a).unwrap();
        for (x, y) in vals.iter().zip(&eig.values) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn tridiagonal_paths_agree() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 1.0 + 0.5 * (i as f64 * 0.11).cos()).collect();
        let t = Tridiagonal::new(diag, off).unwrap();
        let dense = eigh(&t.to_dense()).unwrap();
        let full = t.eigh().unwrap();
        let vals = t.eigenvalues().unwrap();
        for k in 0..n {
            assert!((dense.values[k] - full.values[k]).abs() < 1e-12);
            assert!((dense.values[k] - vals[k]).abs() < 1e-12);
        }
        let lo = dense.values[5] - 1e-3;
        let hi = dense.values[12] + 1e-3;
        let bis = t.eigenvalues_in(lo, hi);
        assert_eq!(bis.len(), 8);
        for (k, v) in bis.iter().enumerate() {
            assert!((v - dense.values[5 + k]).abs() < 1e-12);
            let (rq, x) = t.inverse_iteration(*v);
            assert!((rq - v).abs() < 1e-12);
            let tx = t.mul_vec(&x);
            let res: f64 = tx.iter().zip(&x).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-10, "residual {res}");
        }
    }

    #[test]
    fn apply_fn_square_root_squares_back() {
        let a = random_symmetric(20, 3);
        let spd = &a * &a + DMatrix::<f64>::identity(20, 20);
        let eig = eigh(&spd).unwrap();
        let root = eig.apply_fn(f64::sqrt);
        assert!((&root * &root - &spd).norm() / spd.norm() < 1e-12);
    }

    #[test]
    fn rejects_non_square() {
        let a = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(eigh(&a), Err(Error::Dimension(_))));
    }
}
