//! Dense symmetric linear algebra.
//!
//! Everything downstream works with small (n ≲ 100) dense symmetric matrices:
//! targets, noise draws and gradient-descent iterates. This module provides the
//! symmetric container, a cyclic Jacobi eigensolver, effective rank, rank-L
//! truncation, and the perturbation inequalities (Weyl, Davis–Kahan and the
//! eigenvector distance bound derived from it).
//!
//! Eigenvectors are returned with a fixed sign: each column is flipped so its
//! largest-magnitude entry is positive. When comparing eigenvectors of two
//! different matrices the second vector is additionally aligned to the first
//! (`⟨v, ṽ⟩ ≥ 0`) before any angle or distance is taken.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::GaussianStream;

/// Relative off-diagonal Frobenius mass at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues closer than this (relative to `max(1, max|λ|)`) count as repeated.
pub const DEGENERATE_GAP_TOL: f64 = 1e-9;

/// Dense real symmetric matrix. Symmetry is exact: the lower triangle is
/// always a mirror of the upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from the upper triangle (diagonal included)
    /// of `m`; the strict lower triangle of `m` is ignored.
    pub fn from_upper(mut m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Err(Error::input("matrix dimension must be positive"));
        }
        if m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
        }
        for j in 0..n {
            for i in 0..=j {
                let v = m[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                m[(j, i)] = v;
            }
        }
        Ok(Self { inner: m })
    }

    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        Self::from_upper(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_upper(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: DMatrix::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { inner: DMatrix::zeros(n, n) }
    }

    /// `V · diag(values) · Vᵀ`.
    pub fn from_eigenpairs(vectors: &DMatrix<f64>, values: &[f64]) -> Result<Self> {
        let n = vectors.nrows();
        if values.len() > vectors.ncols() {
            return Err(Error::DimensionMismatch { expected: vectors.ncols(), found: values.len() });
        }
        let mut scaled = vectors.columns(0, values.len()).clone_owned();
        for (j, &lam) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lam);
        }
        let out = &scaled * vectors.columns(0, values.len()).transpose();
        debug_assert_eq!(out.nrows(), n);
        Self::from_upper(out)
    }

    pub fn n(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn is_zero(&self) -> bool {
        self.inner.iter().all(|&v| v == 0.0)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(other)?;
        Ok(Self { inner: &self.inner + &other.inner })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(other)?;
        Ok(Self { inner: &self.inner - &other.inner })
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        Self { inner: &self.inner * c }
    }

    fn check_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        Ok(())
    }
}

/// Orthogonal eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
    delta_s: f64,
}

impl EigenDecomp {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Eigenvalues, descending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Columns are eigenvectors, ordered like [`values`](Self::values).
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).clone_owned()
    }

    /// Minimal pairwise eigengap; `+∞` for a 1×1 matrix.
    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    /// Gap between the i-th eigenvalue and the rest of the spectrum,
    /// `min_{j≠i} |λ_i − λ_j|`.
    pub fn index_gap(&self, i: usize) -> f64 {
        let lam = self.values[i];
        self.values
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| (lam - v).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Spectral norm, i.e. the largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn effective_rank(&self) -> Result<f64> {
        effective_rank_of_spectrum(&self.values)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_eigenpairs(&self.vectors, &self.values).expect("eigenpairs of a finite matrix are finite")
    }

    /// Tolerance used to decide whether an eigengap is zero.
    pub fn degenerate_tol(&self) -> f64 {
        DEGENERATE_GAP_TOL * self.spectral_norm().max(1.0)
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Row-cyclic sweeps of plane rotations run until the off-diagonal Frobenius
/// mass drops to `JACOBI_TOL · ‖A‖_F`. The result is deterministic for a given
/// input.
pub fn eigendecompose(a: &SymMatrix) -> Result<EigenDecomp> {
    let n = a.n();
    let mut m: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            m.push(v);
        }
    }
    // v stored row-major as well; column c holds the c-th eigenvector.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let total: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOL * total;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * m[p * n + q] * m[p * n + q];
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut m, n, p, q, c, s);
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut best = 0.0_f64;
        let mut sign = 1.0;
        for k in 0..n {
            let x = v[k * n + src];
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        for k in 0..n {
            vectors[(k, col)] = sign * v[k * n + src];
        }
    }
    let delta_s = values.windows(2).map(|w| (w[0] - w[1]).abs()).fold(f64::INFINITY, f64::min);

    Ok(EigenDecomp { vectors, values, delta_s })
}

/// Applies the similarity `Jᵀ A J` for the rotation in the (p, q) plane.
fn rotate(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let apq = m[p * n + q];
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[k * n + p];
        let akq = m[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        m[k * n + p] = new_kp;
        m[p * n + k] = new_kp;
        m[k * n + q] = new_kq;
        m[q * n + k] = new_kq;
    }
    m[p * n + p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    m[q * n + q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;
}

/// `‖W‖_* / ‖W‖` computed from the eigenvalues of a symmetric `W`.
pub fn effective_rank_of_spectrum(values: &[f64]) -> Result<f64> {
    let top = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Err(Error::UndefinedRank);
    }
    Ok(values.iter().map(|v| v.abs()).sum::<f64>() / top)
}

/// Effective rank `r(W) = ‖W‖_* / ‖W‖`, in `[1, n]` for nonzero `W`.
pub fn effective_rank(w: &SymMatrix) -> Result<f64> {
    if w.is_zero() {
        return Err(Error::UndefinedRank);
    }
    eigendecompose(w)?.effective_rank()
}

/// Best rank-L approximation built from the top-L eigenpairs (by value).
pub fn best_rank_l(decomp: &EigenDecomp, l: usize) -> Result<SymMatrix> {
    if l == 0 || l > decomp.n() {
        return Err(Error::input(format!("rank {l} outside 1..={}", decomp.n())));
    }
    SymMatrix::from_eigenpairs(decomp.vectors(), &decomp.values()[..l])
}

/// Weyl's inequality as a runtime check: `|λ − λ̃| ≤ ‖E‖`.
pub fn weyl_gap(lam: f64, lam_tilde: f64, e_norm: f64) -> bool {
    (lam - lam_tilde).abs() <= e_norm
}

/// Returns `v_tilde` with its sign flipped if needed so that `⟨v, ṽ⟩ ≥ 0`.
pub fn align_sign(v: &DVector<f64>, v_tilde: &DVector<f64>) -> DVector<f64> {
    if v.dot(v_tilde) < 0.0 {
        -v_tilde
    } else {
        v_tilde.clone()
    }
}

fn check_unit(v: &DVector<f64>) -> Result<()> {
    if ((v.norm() - 1.0).abs()) > 1e-9 {
        return Err(Error::input(format!("expected unit vector, norm = {}", v.norm())));
    }
    Ok(())
}

/// `sin θ` between two unit vectors, computed as `‖ṽ − ⟨v, ṽ⟩v‖` rather than
/// `sqrt(1 − ⟨v, ṽ⟩²)`, which loses half the digits for nearly equal vectors.
pub fn sin_theta(v: &DVector<f64>, v_tilde: &DVector<f64>) -> Result<f64> {
    check_unit(v)?;
    check_unit(v_tilde)?;
    if v.len() != v_tilde.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), found: v_tilde.len() });
    }
    let c = v.dot(v_tilde);
    Ok((v_tilde - v * c).norm().min(1.0))
}

/// Sign-aligned Euclidean distance `‖v − ṽ‖`.
pub fn eigvec_distance(v: &DVector<f64>, v_tilde: &DVector<f64>) -> f64 {
    (v - align_sign(v, v_tilde)).norm()
}

fn check_gap(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::DegenerateSpectrum { gap: delta });
    }
    Ok(())
}

/// Outcome of a Davis–Kahan comparison for one eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DavisKahanCheck {
    pub sin_theta: f64,
    pub bound: f64,
    /// `‖E‖ ≤ δ/2`.
    pub in_regime: bool,
}

impl DavisKahanCheck {
    /// True when the bound holds or the regime hypothesis is not met.
    pub fn holds(&self) -> bool {
        !self.in_regime || self.sin_theta <= self.bound
    }
}

/// The Davis–Kahan bound `sin θ ≤ 2‖E‖/δ`.
pub fn davis_kahan_bound(e_norm: f64, delta: f64) -> Result<f64> {
    check_gap(delta)?;
    Ok(2.0 * e_norm / delta)
}

pub fn davis_kahan_sin(v: &DVector<f64>, v_tilde: &DVector<f64>, e_norm: f64, delta: f64) -> Result<DavisKahanCheck> {
    let bound = davis_kahan_bound(e_norm, delta)?;
    Ok(DavisKahanCheck { sin_theta: sin_theta(v, v_tilde)?, bound, in_regime: e_norm <= delta / 2.0 })
}

/// `‖v − ṽ‖ ≤ 2√2‖E‖/δ`, valid for `‖E‖ ≤ δ/2`.
pub fn eigvec_distance_bound(e_norm: f64, delta: f64) -> Result<f64> {
    check_gap(delta)?;
    if e_norm < 0.0 {
        return Err(Error::input("operator norm must be nonnegative"));
    }
    if e_norm > delta / 2.0 {
        return Err(Error::regime(format!("‖E‖ = {e_norm} exceeds δ/2 = {}", delta / 2.0)));
    }
    Ok(2.0 * std::f64::consts::SQRT_2 * e_norm / delta)
}

/// How the eigenvalues past the prescribed leading ones are filled in.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFill {
    Constant(f64),
    /// Log-spaced from `hi` down to `lo` (both inclusive).
    LogSpaced {
        hi: f64,
        lo: f64,
    },
}

/// Recipe for a synthetic PSD target `V · diag(λ) · Vᵀ`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectrumSpec {
    pub leading: Vec<f64>,
    pub tail_fill: TailFill,
    pub n: usize,
    pub basis_seed: u64,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self { leading: vec![10.0, 5.0, 1.0], tail_fill: TailFill::Constant(0.01), n: 20, basis_seed: 0 }
    }
}

impl SpectrumSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.leading.len() > self.n {
            return Err(Error::input(format!(
                "{} leading eigenvalues do not fit dimension {}",
                self.leading.len(),
                self.n
            )));
        }
        if self.leading.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::input("leading eigenvalues must be positive and finite"));
        }
        if self.leading.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::input("leading eigenvalues must be strictly descending"));
        }
        match self.tail_fill {
            TailFill::Constant(c) if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::input("tail constant must be nonnegative"))
            }
            TailFill::LogSpaced { hi, lo } if !(lo > 0.0 && hi >= lo && hi.is_finite()) => {
                Err(Error::input("log-spaced tail needs 0 < lo <= hi"))
            }
            _ => Ok(()),
        }
    }

    /// All `n` eigenvalues, leading ones first, then the tail.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let m = self.n - self.leading.len();
        let mut out = self.leading.clone();
        match self.tail_fill {
            TailFill::Constant(c) => out.extend(std::iter::repeat_n(c, m)),
            TailFill::LogSpaced { hi, lo } => {
                let (lh, ll) = (hi.ln(), lo.ln());
                out.extend((0..m).map(
                    |i| {
                        if m == 1 {
                            hi
                        } else {
                            (lh + (ll - lh) * i as f64 / (m - 1) as f64).exp()
                        }
                    },
                ));
            }
        }
        Ok(out)
    }

    /// Synthesizes `Ŵ = V diag(λ) Vᵀ` with a seeded random orthogonal `V`.
    pub fn synthesize(&self) -> Result<SymMatrix> {
        let values = self.eigenvalues()?;
        let basis = random_orthogonal(self.n, self.basis_seed);
        SymMatrix::from_eigenpairs(&basis, &values)
    }
}

/// Seeded random orthogonal matrix: modified Gram–Schmidt on a Gaussian
/// matrix, with the first column negated if needed so that `det = +1`.
pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut g = GaussianStream::new(seed);
    loop {
        let mut q = DMatrix::from_fn(n, n, |_, _| g.standard_normal());
        let mut ok = true;
        for j in 0..n {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).clone_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
            let norm = q.column(j).norm();
            if norm < 1e-10 {
                ok = false;
                break;
            }
            q.column_mut(j).scale_mut(1.0 / norm);
        }
        if !ok {
            continue;
        }
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        return q;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> SymMatrix {
        SymMatrix::from_diagonal(v).unwrap()
    }

    #[test]
    fn construction_mirrors_upper_triangle() {
        let m = SymMatrix::from_row_major(2, &[1.0, 2.0, 99.0, 3.0]).unwrap();
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 2.0);
    }

    #[test]
    fn non_finite_rejected() {
        let err = SymMatrix::from_row_major(2, &[1.0, f64::NAN, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn identity_eigen() {
        let d = eigendecompose(&SymMatrix::identity(3)).unwrap();
        assert_eq!(d.values(), &[1.0, 1.0, 1.0]);
        assert_eq!(d.delta_s(), 0.0);
    }

    #[test]
    fn diagonal_eigen_is_signed_permutation() {
        let d = eigendecompose(&diag(&[1.0, 10.0, 5.0])).unwrap();
        assert_eq!(d.values(), &[10.0, 5.0, 1.0]);
        let v = d.vectors();
        assert_eq!(v[(1, 0)], 1.0);
        assert_eq!(v[(2, 1)], 1.0);
        assert_eq!(v[(0, 2)], 1.0);
        assert_eq!(d.delta_s(), 4.0);
        assert_eq!(d.index_gap(0), 5.0);
    }

    #[test]
    fn effective_rank_examples() {
        assert!((effective_rank(&SymMatrix::identity(7)).unwrap() - 7.0).abs() < 1e-12);
        let mut d = vec![0.0; 6];
        d[..3].copy_from_slice(&[10.0, 5.0, 1.0]);
        assert!((effective_rank(&diag(&d)).unwrap() - 1.6).abs() < 1e-12);
        let v = DVector::from_vec(vec![1.0, 2.0, -2.0]);
        let outer = SymMatrix::from_upper(&v * v.transpose()).unwrap();
        assert!((effective_rank(&outer).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(effective_rank(&SymMatrix::zeros(3)), Err(Error::UndefinedRank)));
    }

    #[test]
    fn truncation() {
        let d = eigendecompose(&diag(&[10.0, 5.0, 1.0])).unwrap();
        let t = best_rank_l(&d, 2).unwrap();
        assert_eq!(t, diag(&[10.0, 5.0, 0.0]));
        assert!(best_rank_l(&d, 0).is_err());
        assert!(best_rank_l(&d, 4).is_err());
    }

    #[test]
    fn weyl_examples() {
        assert!(weyl_gap(5.0, 5.0, 0.0));
        assert!(!weyl_gap(5.0, 7.0, 1.0));
    }

    #[test]
    fn angle_examples() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(sin_theta(&e1, &e1).unwrap(), 0.0);
        assert_eq!(sin_theta(&e1, &(-&e1)).unwrap(), 0.0);
        assert!((sin_theta(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(davis_kahan_bound(1.0, 0.0), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn distance_bound_examples() {
        assert_eq!(eigvec_distance_bound(0.0, 4.0).unwrap(), 0.0);
        assert!((eigvec_distance_bound(2.0, 4.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(eigvec_distance_bound(2.1, 4.0), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn spectrum_spec_tail() {
        let s = SpectrumSpec::default();
        let v = s.eigenvalues().unwrap();
        assert_eq!(v.len(), 20);
        assert_eq!(&v[..4], &[10.0, 5.0, 1.0, 0.01]);
        let s = SpectrumSpec {
            leading: vec![3.0],
            tail_fill: TailFill::LogSpaced { hi: 1.0, lo: 0.01 },
            n: 4,
            basis_seed: 1,
        };
        let v = s.eigenvalues().unwrap();
        assert!((v[1] - 1.0).abs() < 1e-15 && (v[2] - 0.1).abs() < 1e-15 && (v[3] - 0.01).abs() < 1e-15);
        let bad = SpectrumSpec { leading: vec![1.0, 2.0], ..SpectrumSpec::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn orthogonal_basis_is_proper_rotation() {
        let q = random_orthogonal(6, 11);
        let err = (&q.transpose() * &q - DMatrix::identity(6, 6)).amax();
        assert!(err < 1e-12);
        assert!((q.determinant() - 1.0).abs() < 1e-10);
        assert_eq!(q, random_orthogonal(6, 11));
    }

    #[test]
    fn synthesized_target_has_prescribed_spectrum() {
        let w = SpectrumSpec::default().synthesize().unwrap();
        let d = eigendecompose(&w).unwrap();
        let expected = SpectrumSpec::default().eigenvalues().unwrap();
        for (a, b) in d.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
