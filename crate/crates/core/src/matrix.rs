//! Small dense matrices: labeled symmetric matrices for information and
//! covariance, plus a plain square matrix for parameter rotations.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};

const SYMMETRY_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Real square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(order: usize) -> Self {
        Self { order, data: vec![0.0; order * order] }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[i * order + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[&[f64]]) -> CoreResult<Self> {
        let order = rows.len();
        let mut data = Vec::with_capacity(order * order);
        for row in rows {
            if row.len() != order {
                return Err(CoreError::DimensionMismatch { expected: order, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { order, data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let n = self.order;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &SquareMatrix) -> CoreResult<SquareMatrix> {
        let n = self.order;
        if other.order != n {
            return Err(CoreError::DimensionMismatch { expected: n, found: other.order });
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise deviation of `self·selfᵀ` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.order;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut dot = 0.0;
                for k in 0..n {
                    dot += self.get(i, k) * self.get(j, k);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn determinant_2x2(&self) -> Option<f64> {
        (self.order == 2).then(|| self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, j)).collect()
    }
}

/// Labeled real symmetric matrix. Houses Fisher information, quantum Fisher
/// information, covariance and precision matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
    labels: Vec<String>,
}

impl SymMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let order = labels.len();
        Self { order, data: vec![0.0; order * order], labels }
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let mut m = Self::zeros(labels);
        for i in 0..m.order {
            m.data[i * m.order + i] = 1.0;
        }
        m
    }

    pub fn diagonal(labels: Vec<String>, diag: &[f64]) -> CoreResult<Self> {
        if labels.len() != diag.len() {
            return Err(CoreError::DimensionMismatch { expected: labels.len(), found: diag.len() });
        }
        let mut m = Self::zeros(labels);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.order + i] = d;
        }
        Ok(m)
    }

    /// Builds from full rows. Rejects input whose asymmetry exceeds
    /// `1e-12·max(1,|a_ij|)`; the stored matrix is the symmetric part.
    pub fn from_rows(labels: Vec<String>, rows: &[&[f64]]) -> CoreResult<Self> {
        let order = labels.len();
        if rows.len() != order {
            return Err(CoreError::DimensionMismatch { expected: order, found: rows.len() });
        }
        let mut data = Vec::with_capacity(order * order);
        for row in rows {
            if row.len() != order {
                return Err(CoreError::DimensionMismatch { expected: order, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        for i in 0..order {
            for j in (i + 1)..order {
                let (a, b) = (data[i * order + j], data[j * order + i]);
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(CoreError::Domain("matrix is not symmetric"));
                }
                let avg = 0.5 * (a + b);
                data[i * order + j] = avg;
                data[j * order + i] = avg;
            }
        }
        Ok(Self { order, data, labels })
    }

    /// Symmetric part of a square matrix.
    pub fn from_square(labels: Vec<String>, m: &SquareMatrix) -> CoreResult<Self> {
        let n = labels.len();
        if m.order() != n {
            return Err(CoreError::DimensionMismatch { expected: n, found: m.order() });
        }
        let mut out = Self::zeros(labels);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = 0.5 * (m.get(i, j) + m.get(j, i));
            }
        }
        Ok(out)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> CoreResult<Self> {
        if labels.len() != self.order {
            return Err(CoreError::DimensionMismatch { expected: self.order, found: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    /// Sets both `(i,j)` and `(j,i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn to_square(&self) -> SquareMatrix {
        SquareMatrix { order: self.order, data: self.data.clone() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn add(&self, other: &SymMatrix) -> CoreResult<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> CoreResult<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> CoreResult<Self> {
        if other.order != self.order {
            return Err(CoreError::DimensionMismatch { expected: self.order, found: other.order });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { order: self.order, data, labels: self.labels.clone() })
    }

    /// Congruence `Oᵀ·A·O`.
    pub fn congruence(&self, o: &SquareMatrix) -> CoreResult<Self> {
        let n = self.order;
        if o.order() != n {
            return Err(CoreError::DimensionMismatch { expected: n, found: o.order() });
        }
        let mut out = Self::zeros(self.labels.clone());
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    let oki = o.get(k, i);
                    if oki == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += oki * self.get(k, l) * o.get(l, j);
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += v[i] * self.get(i, j) * v[j];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest asymmetry `|a_ij − a_ji|`; zero unless the buffer was mutated
    /// through a non-symmetric path.
    pub fn asymmetry(&self) -> f64 {
        let n = self.order;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Eigen-decomposition by cyclic Jacobi rotations.
    pub fn eigen(&self) -> CoreResult<SymEigen> {
        jacobi_eigen(self.order, &self.data)
    }

    pub fn min_eigenvalue(&self) -> CoreResult<f64> {
        Ok(self.eigen()?.values.last().copied().unwrap_or(0.0))
    }

    /// PSD check at the `−1e-9·trace` floor used for information matrices.
    pub fn check_psd(&self) -> CoreResult<()> {
        let trace = self.trace();
        let min = self.min_eigenvalue()?;
        if min < -1e-9 * trace.abs().max(f64::MIN_POSITIVE) {
            return Err(CoreError::NotPositiveSemidefinite { min_eigenvalue: min, trace });
        }
        Ok(())
    }

    /// Inverse through the eigen-decomposition. Fails on a zero eigenvalue.
    pub fn inverse(&self) -> CoreResult<SymMatrix> {
        let eig = self.eigen()?;
        if eig.values.contains(&0.0) {
            return Err(CoreError::Domain("singular matrix"));
        }
        Ok(eig.reconstruct(self.labels.clone(), |l| 1.0 / l))
    }
}

/// Spectrum sorted nonincreasing, with orthonormal eigenvectors as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: SquareMatrix,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// `V·diag(f(λ))·Vᵀ`.
    pub fn reconstruct(&self, labels: Vec<String>, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = SymMatrix::zeros(labels);
        for i in 0..n {
            for j in i..n {
                let acc: f64 = (0..n).map(|k| self.vectors.get(i, k) * mapped[k] * self.vectors.get(j, k)).sum();
                out.set(i, j, acc);
            }
        }
        out
    }
}

fn jacobi_eigen(n: usize, input: &[f64]) -> CoreResult<SymEigen> {
    let mut a = input.to_vec();
    let mut v = SquareMatrix::identity(n);
    if n == 0 {
        return Ok(SymEigen { values: Vec::new(), vectors: v });
    }
    let idx = |i: usize, j: usize| i * n + j;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 =
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| a[idx(i, j)] * a[idx(i, j)]).sum();
        let diag_scale: f64 = (0..n).map(|i| a[idx(i, i)] * a[idx(i, i)]).sum();
        if off == 0.0 || off <= 1e-34 * diag_scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = 0.5 * (aqq - app) / apq;
                let t = {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
                a[idx(p, q)] = 0.0;
                a[idx(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(CoreError::EigenNoConvergence);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[idx(j, j)].total_cmp(&a[idx(i, i)]));
    let values = order.iter().map(|&i| a[idx(i, i)]).collect();
    let mut vectors = SquareMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Default parameter labels: `x1, x2, …` in 1D and `x1, y1, x2, y2, …` in 2D.
pub fn position_labels(sources: usize, dim: usize) -> Vec<String> {
    let axes = ["x", "y"];
    (0..sources).flat_map(|k| (0..dim).map(move |d| format!("{}{}", axes[d], k + 1))).collect()
}

/// Generic labels `t1, t2, …` for abstract parameter vectors.
pub fn generic_labels(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("t{}", i + 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        generic_labels(n)
    }

    #[test]
    fn eigen_of_2x2_known() {
        let m = SymMatrix::from_rows(labels(2), &[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = m.eigen().unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.vectors.orthogonality_defect() < 1e-14);
    }

    #[test]
    fn reconstruct_round_trip() {
        let m = SymMatrix::from_rows(labels(3), &[&[4.0, -1.0, 0.5], &[-1.0, 3.0, 0.25], &[0.5, 0.25, 2.0]]).unwrap();
        let back = m.eigen().unwrap().reconstruct(labels(3), |l| l);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - m.get(i, j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn inverse_of_spd() {
        let m = SymMatrix::from_rows(labels(2), &[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let inv = m.inverse().unwrap();
        assert!((inv.get(0, 0) - 2.0 / 3.0).abs() < 1e-14);
        assert!((inv.get(0, 1) + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_rows() {
        let err = SymMatrix::from_rows(labels(2), &[&[1.0, 0.5], &[0.4, 1.0]]).unwrap_err();
        assert_eq!(err, CoreError::Domain("matrix is not symmetric"));
    }

    #[test]
    fn psd_check_flags_negative_spectrum() {
        let m = SymMatrix::diagonal(labels(2), &[1.0, -0.5]).unwrap();
        assert!(matches!(m.check_psd(), Err(CoreError::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn labels_follow_source_and_axis() {
        assert_eq!(position_labels(2, 2), ["x1", "y1", "x2", "y2"]);
        assert_eq!(position_labels(3, 1), ["x1", "x2", "x3"]);
    }
}
