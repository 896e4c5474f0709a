//! Cramér–Rao bounds, eigenparameters and the three efficiency measures.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{CoreError, CoreResult};
use crate::matrix::{SquareMatrix, SymMatrix};

/// Relative eigenvalue cutoff below which a direction is unbounded.
pub const NULL_SPACE_EPS: f64 = 1e-12;
/// Component size at which a basis vector counts as touching the null space.
pub const NULL_OVERLAP_TOL: f64 = 1e-9;
/// Relative spectral gap below which ξ is pinned to zero.
pub const XI_DEGENERACY_TOL: f64 = 1e-10;

/// A covariance (or bound) matrix with explicitly unbounded directions.
#[derive(Clone, Debug, PartialEq)]
pub struct Covariance {
    pub matrix: SymMatrix,
    /// Per parameter: the variance is infinite.
    pub unbounded: Vec<bool>,
    /// Orthonormal basis of directions with infinite variance.
    pub null_space: Vec<Vec<f64>>,
}

impl Covariance {
    /// Fully bounded covariance.
    pub fn new(matrix: SymMatrix) -> Self {
        let m = matrix.order();
        Self { matrix, unbounded: vec![false; m], null_space: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    pub fn is_bounded(&self) -> bool {
        self.null_space.is_empty() && !self.unbounded.iter().any(|&u| u)
    }
}

impl From<SymMatrix> for Covariance {
    fn from(matrix: SymMatrix) -> Self {
        Self::new(matrix)
    }
}

/// Outcome of inverting an information matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// `L_ii = (F⁻¹)_ii`, `None` where the variance is unbounded.
    pub variances: Vec<Option<f64>>,
    /// Rank of the pseudo-inverse.
    pub rank: usize,
    /// Pseudo-inverse with unbounded flags and null basis.
    pub covariance: Covariance,
}

impl BoundReport {
    pub fn unbounded(&self) -> &[bool] {
        &self.covariance.unbounded
    }
}

/// Cramér–Rao bound `F⁻¹` with the default null-space cutoff.
pub fn invert_info(f: &SymMatrix) -> CoreResult<BoundReport> {
    invert_info_with(f, NULL_SPACE_EPS)
}

/// As [`invert_info`] with eigenvalues `λ ≤ eps·λ_max` treated as null.
pub fn invert_info_with(f: &SymMatrix, eps: f64) -> CoreResult<BoundReport> {
    if !(eps >= 0.0) {
        return Err(CoreError::Domain("null-space cutoff must be nonnegative"));
    }
    f.check_psd()?;
    let m = f.order();
    let eig = f.eigen()?;
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    let cutoff = eps * lmax;
    let mut null_space = Vec::new();
    let mut inv = SymMatrix::zeros(f.labels().to_vec());
    let mut rank = 0;
    for (k, &l) in eig.values.iter().enumerate() {
        let v = eig.vector(k);
        if lmax <= 0.0 || l <= cutoff {
            null_space.push(v);
            continue;
        }
        rank += 1;
        for i in 0..m {
            for j in i..m {
                inv.set(i, j, inv.get(i, j) + v[i] * v[j] / l);
            }
        }
    }
    let unbounded: Vec<bool> =
        (0..m).map(|i| libm::sqrt(null_space.iter().map(|v| v[i] * v[i]).sum::<f64>()) > NULL_OVERLAP_TOL).collect();
    let variances = (0..m).map(|i| if unbounded[i] { None } else { Some(inv.get(i, i)) }).collect();
    Ok(BoundReport { variances, rank, covariance: Covariance { matrix: inv, unbounded, null_space } })
}

/// Average total precision `M / Tr Cov`; zero if any variance is unbounded.
pub fn h_tot(cov: &Covariance) -> f64 {
    if cov.unbounded.iter().any(|&u| u) {
        return 0.0;
    }
    cov.order() as f64 / cov.matrix.trace()
}

/// Average individual precision `(1/M) Σ 1/Cov_ii`.
pub fn h_ind(cov: &Covariance) -> f64 {
    let m = cov.order();
    let sum: f64 = (0..m).filter(|&i| !cov.unbounded[i]).map(|i| 1.0 / cov.matrix.get(i, i)).sum();
    sum / m as f64
}

/// Average eigenparameter precision `(1/M) Tr Cov⁻¹`. Null directions
/// contribute zero.
pub fn h_eig(cov: &Covariance) -> CoreResult<f64> {
    let m = cov.order();
    let eig = cov.matrix.eigen()?;
    let mut sum = 0.0;
    for (k, &l) in eig.values.iter().enumerate() {
        let v = eig.vector(k);
        let in_null: f64 = cov
            .null_space
            .iter()
            .map(|n| {
                let d: f64 = n.iter().zip(&v).map(|(a, b)| a * b).sum();
                d * d
            })
            .sum();
        if in_null > 0.5 {
            continue;
        }
        if l <= 0.0 {
            return Ok(f64::INFINITY);
        }
        sum += 1.0 / l;
    }
    Ok(sum / m as f64)
}

/// The three measures for one covariance, next to the Fisher bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyReport {
    pub h_tot: f64,
    pub h_ind: f64,
    pub h_eig: f64,
    /// `M / Tr F⁻¹`
    pub bound_tot: f64,
    /// `(1/M) Σ 1/(F⁻¹)_ii`
    pub bound_ind: f64,
    /// `Tr F / M`
    pub bound_eig: f64,
}

/// Measures of `cov` against the bounds implied by `info`.
pub fn efficiency(cov: &Covariance, info: &SymMatrix) -> CoreResult<EfficiencyReport> {
    if cov.order() != info.order() {
        return Err(CoreError::DimensionMismatch { expected: info.order(), found: cov.order() });
    }
    let crb = invert_info(info)?.covariance;
    Ok(EfficiencyReport {
        h_tot: h_tot(cov),
        h_ind: h_ind(cov),
        h_eig: h_eig(cov)?,
        bound_tot: h_tot(&crb),
        bound_ind: h_ind(&crb),
        bound_eig: info.trace() / info.order() as f64,
    })
}

/// Measures of an estimator saturating the bound, i.e. `Cov = F⁻¹`.
pub fn efficiency_at_bound(info: &SymMatrix) -> CoreResult<EfficiencyReport> {
    let crb = invert_info(info)?.covariance;
    efficiency(&crb, info)
}

/// Spectrum and eigenvectors, plus the 2×2 angle ξ.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenReport {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: SquareMatrix,
    /// Angle of the dominant eigenvector for M = 2:
    /// `b = x₁cos ξ + x₂sin ξ`, `w = x₂cos ξ − x₁sin ξ`.
    pub xi: Option<f64>,
}

pub fn eigen_analysis(f: &SymMatrix) -> CoreResult<EigenReport> {
    let eig = f.eigen()?;
    if f.order() != 2 {
        return Ok(EigenReport { values: eig.values, vectors: eig.vectors, xi: None });
    }
    let (l1, l2) = (eig.values[0], eig.values[1]);
    if (l1 - l2).abs() <= XI_DEGENERACY_TOL * (l1.abs() + l2.abs()) {
        return Ok(EigenReport { values: eig.values, vectors: SquareMatrix::identity(2), xi: Some(0.0) });
    }
    let mut b = eig.vector(0);
    if b[0] < 0.0 || (b[0] == 0.0 && b[1] < 0.0) {
        b = vec![-b[0], -b[1]];
    }
    let xi = if b[0] == 0.0 { FRAC_PI_2 } else { libm::atan2(b[1], b[0]) };
    let (s, c) = libm::sincos(xi);
    let vectors = SquareMatrix::from_rows(&[&[c, -s], &[s, c]])?;
    Ok(EigenReport { values: eig.values, vectors, xi: Some(xi) })
}
