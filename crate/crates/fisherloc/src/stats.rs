//! Sampling uncertainty of covariance-derived quantities.

use fisherloc_core::matrix::{generic_labels, SymMatrix};
use fisherloc_core::metrology::{h_eig, h_ind, h_tot, Covariance};

use crate::error::Result;

/// Second-moment matrix of `errors` (already centred on the truth),
/// skipping rows in `skip`.
fn moment(errors: &[Vec<f64>], skip: std::ops::Range<usize>) -> SymMatrix {
    let m = errors[0].len();
    let mut c = SymMatrix::zeros(generic_labels(m));
    let mut n = 0usize;
    for (r, e) in errors.iter().enumerate() {
        if skip.contains(&r) {
            continue;
        }
        n += 1;
        for i in 0..m {
            for j in i..m {
                c.set(i, j, c.get(i, j) + e[i] * e[j]);
            }
        }
    }
    c.scaled(1.0 / n as f64)
}

fn measures(cov: SymMatrix) -> Result<[f64; 3]> {
    let c = Covariance::new(cov);
    Ok([h_tot(&c), h_ind(&c), h_eig(&c)?])
}

/// Delete-one-block jackknife standard errors of `(H_tot, H_ind, H_eig)`.
pub fn jackknife_h(errors: &[Vec<f64>], blocks: usize) -> Result<[f64; 3]> {
    let t = errors.len();
    let b = blocks.clamp(2, t.max(2));
    let mut estimates = Vec::with_capacity(b);
    for k in 0..b {
        let lo = k * t / b;
        let hi = (k + 1) * t / b;
        estimates.push(measures(moment(errors, lo..hi))?);
    }
    let mut se = [0.0; 3];
    for (q, s) in se.iter_mut().enumerate() {
        let mean = estimates.iter().map(|e| e[q]).sum::<f64>() / b as f64;
        let ss: f64 = estimates.iter().map(|e| (e[q] - mean).powi(2)).sum();
        *s = ((b as f64 - 1.0) / b as f64 * ss).sqrt();
    }
    Ok(se)
}

/// Standard error of `vᵀ·Cov·v` for a Gaussian sample of `trials` rows:
/// `√2·vᵀCov v/√(trials − 1)`.
pub fn covariance_se_along(cov: &SymMatrix, v: &[f64], trials: usize) -> f64 {
    std::f64::consts::SQRT_2 * cov.quadratic_form(v) / ((trials.max(2) - 1) as f64).sqrt()
}

/// Standard error of a sample variance `s²` from `trials` Gaussian rows.
pub fn variance_se(variance: f64, trials: usize) -> f64 {
    std::f64::consts::SQRT_2 * variance / ((trials.max(2) - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_constant_rows_is_zero() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| if i % 2 == 0 { vec![1.0, -1.0] } else { vec![-1.0, 1.0] }).collect();
        let se = jackknife_h(&rows, 10).unwrap();
        assert!(se[0].abs() < 1e-12 && se[1].abs() < 1e-12);
    }

    #[test]
    fn se_along_identity() {
        let c = SymMatrix::identity(generic_labels(2));
        let v = [std::f64::consts::FRAC_1_SQRT_2; 2];
        assert!((covariance_se_along(&c, &v, 101) - 2f64.sqrt() / 10.0).abs() < 1e-15);
    }
}
