//! Classical Fisher information: the generic functional, closed forms for
//! blinking sources, the cofluorescent mixture, and parameter rotations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::family::{DensityFamily, Region};
use crate::matrix::{generic_labels, SquareMatrix, SymMatrix};
use crate::model::SourceModel;
use crate::quad::{integrate, integrate_2d, panels_for, QuadratureSpec};

/// Emission regime of a session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// All sources emit at once; every photon follows the mixture.
    Cofluorescent,
    /// Source `k` emits alone in its own windows and contributes `counts[k]` photons.
    Blinking { counts: Vec<u64> },
}

impl Scenario {
    /// Blinking with counts apportioned from the model's brightnesses.
    pub fn blinking_for(model: &SourceModel) -> Self {
        Scenario::Blinking { counts: apportion_counts(model.photons(), model.weights()) }
    }

    pub fn validate(&self, model: &SourceModel) -> CoreResult<()> {
        match self {
            Scenario::Cofluorescent => Ok(()),
            Scenario::Blinking { counts } => check_counts(model, counts),
        }
    }
}

fn check_counts(model: &SourceModel, counts: &[u64]) -> CoreResult<()> {
    if counts.len() != model.sources() {
        return Err(CoreError::DimensionMismatch { expected: model.sources(), found: counts.len() });
    }
    if counts.iter().sum::<u64>() != model.photons() {
        return Err(CoreError::Domain("blinking counts must sum to the photon budget"));
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(CoreError::Domain("at least one blinking count must be positive"));
    }
    Ok(())
}

/// Splits `total` into integer counts proportional to `weights` by largest
/// remainder; ties go to the lower index.
pub fn apportion_counts(total: u64, weights: &[f64]) -> Vec<u64> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| libm::floor(*q) as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - libm::floor(quotas[a]);
        let rb = quotas[b] - libm::floor(quotas[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned) as usize) {
        counts[k] += 1;
    }
    counts
}

/// `∫ (1/q)(∂q/∂θ_i)(∂q/∂θ_j) dX` over the family's region; a finite sum on
/// discrete outcome sets.
pub fn fim_functional<F: DensityFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    quad: &QuadratureSpec,
) -> CoreResult<SymMatrix> {
    quad.validate()?;
    let m = family.parameters();
    if theta.len() != m {
        return Err(CoreError::DimensionMismatch { expected: m, found: theta.len() });
    }
    let entries = m * (m + 1) / 2;
    let mut score = vec![0.0; m];
    let mut integrand = |x: &[f64], out: &mut [f64]| -> CoreResult<()> {
        let q = family.eval(theta, x, &mut score);
        if !(q > 0.0) || !q.is_finite() {
            out.iter_mut().for_each(|o| *o = 0.0);
            return Ok(());
        }
        let mut e = 0;
        for i in 0..m {
            let qi = q * score[i];
            for sj in &score[i..m] {
                out[e] = qi * sj;
                e += 1;
            }
        }
        Ok(())
    };

    let values = match family.region(theta, quad) {
        Region::Line { lo, hi, panels } => {
            integrate(|x, out: &mut [f64]| integrand(&[x], out), lo, hi, entries, panels, quad)?.values
        }
        Region::Plane { x, y, panels } => {
            integrate_2d(|a, b, out: &mut [f64]| integrand(&[a, b], out), x, y, entries, panels, quad)?.values
        }
        Region::Discrete { count } => {
            let mut acc = vec![0.0; entries];
            let mut buf = vec![0.0; entries];
            for k in 0..count {
                integrand(&[k as f64], &mut buf)?;
                acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
            }
            acc
        }
    };

    let mut out = SymMatrix::zeros(family.labels());
    let mut e = 0;
    for i in 0..m {
        for j in i..m {
            out.set(i, j, values[e]);
            e += 1;
        }
    }
    Ok(out)
}

/// `Σ_k N_k F^[k]` with per-photon `F^[k] = σ⁻²` on the coordinates of
/// source k.
pub fn fim_blinking(model: &SourceModel, counts: &[u64]) -> CoreResult<SymMatrix> {
    check_counts(model, counts)?;
    let per_source: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(blinking_from_counts(model, &per_source))
}

/// Blinking information with the real-valued counts `N·μ_k`.
pub fn fim_blinking_expected(model: &SourceModel) -> SymMatrix {
    let n = model.photons() as f64;
    let per_source: Vec<f64> = model.weights().iter().map(|w| n * w).collect();
    blinking_from_counts(model, &per_source)
}

/// Blinking information with equal counts `N/K`.
pub fn fim_blinking_equal(model: &SourceModel) -> SymMatrix {
    let share = model.photons() as f64 / model.sources() as f64;
    blinking_from_counts(model, &vec![share; model.sources()])
}

fn blinking_from_counts(model: &SourceModel, counts: &[f64]) -> SymMatrix {
    let dim = model.dim();
    let var = model.sigma() * model.sigma();
    let diag: Vec<f64> = counts.iter().flat_map(|&c| core::iter::repeat_n(c / var, dim)).collect();
    let mut f = SymMatrix::zeros(model.labels());
    for (i, d) in diag.into_iter().enumerate() {
        f.set(i, i, d);
    }
    f
}

/// `N · F[Σ μ_k ψ²(r − r̄_k)]` by adaptive quadrature.
pub fn fim_cofluorescent(model: &SourceModel, quad: &QuadratureSpec) -> CoreResult<SymMatrix> {
    let single = fim_functional(model, model.theta(), quad)?;
    Ok(single.scaled(model.photons() as f64))
}

/// 1D cofluorescent information from the per-pair integrand
/// `N μ_i μ_j/σ⁴ ∫ (x−x_i)(x−x_j) p_i p_j / p dx`.
///
/// Shares no code with [`fim_functional`] beyond the quadrature rule.
pub fn fim_cofluorescent_1d_integral(model: &SourceModel, quad: &QuadratureSpec) -> CoreResult<SymMatrix> {
    quad.validate()?;
    if model.dim() != 1 {
        return Err(CoreError::Domain("the pairwise integrand is one-dimensional"));
    }
    let k = model.sources();
    let sigma = model.sigma();
    let var = sigma * sigma;
    let mu = model.weights();
    let xs = model.theta();
    let [(lo, hi), _] = model.bounding_box(quad.half_width);
    let log_norm = -0.5 * libm::log(2.0 * core::f64::consts::PI * var);
    let entries = k * (k + 1) / 2;
    let mut log_p = vec![0.0; k];

    let integral = integrate(
        |x, out: &mut [f64]| {
            for j in 0..k {
                log_p[j] = log_norm - 0.5 * (x - xs[j]) * (x - xs[j]) / var;
            }
            let top =
                (0..k).filter(|&j| mu[j] > 0.0).map(|j| log_p[j] + libm::log(mu[j])).fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = (0..k).filter(|&j| mu[j] > 0.0).map(|j| libm::exp(log_p[j] + libm::log(mu[j]) - top)).sum();
            let log_mix = top + libm::log(sum);
            let mut e = 0;
            for i in 0..k {
                for j in i..k {
                    let ratio = libm::exp(log_p[i] + log_p[j] - log_mix);
                    out[e] = (x - xs[i]) * (x - xs[j]) * ratio;
                    e += 1;
                }
            }
            Ok(())
        },
        lo,
        hi,
        entries,
        panels_for(lo, hi, sigma),
        quad,
    )?;

    let n = model.photons() as f64;
    let mut f = SymMatrix::zeros(model.labels());
    let mut e = 0;
    for i in 0..k {
        for j in i..k {
            f.set(i, j, n * mu[i] * mu[j] / (var * var) * integral.values[e]);
            e += 1;
        }
    }
    Ok(f)
}

/// Rotation by `xi`: `[[cos ξ, −sin ξ], [sin ξ, cos ξ]]`.
pub fn rotation_matrix(xi: f64) -> SquareMatrix {
    let (s, c) = libm::sincos(xi);
    let mut o = SquareMatrix::zeros(2);
    o.set(0, 0, c);
    o.set(0, 1, -s);
    o.set(1, 0, s);
    o.set(1, 1, c);
    o
}

/// Information in rotated parameters `φ = Oᵀθ`: `OᵀFO`.
pub fn rotate_fim(f: &SymMatrix, o: &SquareMatrix) -> CoreResult<SymMatrix> {
    if o.order() != f.order() {
        return Err(CoreError::DimensionMismatch { expected: f.order(), found: o.order() });
    }
    if o.orthogonality_defect() > 1e-12 {
        return Err(CoreError::Domain("rotation matrix is not orthogonal"));
    }
    f.congruence(o)?.with_labels(generic_labels(f.order()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{ShiftedGaussian, SingleSource, Uniform};
    use crate::psf::GaussianPsf;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn apportion_largest_remainder() {
        assert_eq!(apportion_counts(10, &[0.55, 0.45]), [6, 4]);
        assert_eq!(apportion_counts(10, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]), [4, 3, 3]);
        assert_eq!(apportion_counts(1000, &[0.6, 0.4]), [600, 400]);
        assert_eq!(apportion_counts(7, &[0.5, 0.5]).iter().sum::<u64>(), 7);
    }

    #[test]
    fn single_gaussian_1d_unit_information() {
        let fam = SingleSource { psf: GaussianPsf::new(1.0, 1).unwrap() };
        let f = fim_functional(&fam, &[0.3], &QuadratureSpec::default()).unwrap();
        assert!(rel(f.get(0, 0), 1.0) < 1e-8);
    }

    #[test]
    fn single_gaussian_2d_isotropic() {
        let fam = SingleSource { psf: GaussianPsf::new(2.0, 2).unwrap() };
        let f = fim_functional(&fam, &[1.0, -0.5], &QuadratureSpec::default()).unwrap();
        assert!(rel(f.get(0, 0), 0.25) < 1e-8);
        assert!(rel(f.get(1, 1), 0.25) < 1e-8);
        assert!(f.get(0, 1).abs() < 1e-10);
    }

    #[test]
    fn irrelevant_parameter_row_is_zero() {
        let fam = ShiftedGaussian { parameters: 3, param: 1, offset: 0.0, sigma: 0.7 };
        let f = fim_functional(&fam, &[5.0, 0.0, -2.0], &QuadratureSpec::default()).unwrap();
        for j in 0..3 {
            assert_eq!(f.get(0, j), 0.0);
            assert_eq!(f.get(2, j), 0.0);
        }
        assert!(rel(f.get(1, 1), 1.0 / 0.49) < 1e-8);
    }

    #[test]
    fn uniform_carries_no_information() {
        let fam = Uniform { parameters: 2, lo: -1.0, hi: 2.0 };
        let f = fim_functional(&fam, &[0.0, 0.0], &QuadratureSpec::default()).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn blinking_closed_form() {
        let m = SourceModel::two_source_1d(0.5, 0.2, 1.0, 1000).unwrap();
        let f = fim_blinking(&m, &[600, 400]).unwrap();
        assert_eq!(f.diag(), [600.0, 400.0]);
        assert_eq!(f.get(0, 1), 0.0);
        assert!(fim_blinking(&m, &[600, 300]).is_err());
        assert!(fim_blinking(&m, &[600]).is_err());
    }

    #[test]
    fn blinking_single_source_and_dark_window() {
        let m = SourceModel::new(2, &[&[0.0, 0.0]], &[1.0], 2.0, 100).unwrap();
        let f = fim_blinking(&m, &[100]).unwrap();
        assert_eq!(f.diag(), [25.0, 25.0]);
        let m2 = SourceModel::new(2, &[&[0.0, 0.0], &[1.0, 0.0]], &[0.5, 0.5], 1.0, 50).unwrap();
        let f2 = fim_blinking(&m2, &[50, 0]).unwrap();
        assert_eq!(f2.diag(), [50.0, 50.0, 0.0, 0.0]);
    }

    #[test]
    fn rotation_matrix_properties() {
        assert_eq!(rotation_matrix(0.0), SquareMatrix::identity(2));
        let o = rotation_matrix(core::f64::consts::FRAC_PI_4);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((o.get(0, 0) - h).abs() < 1e-15 && (o.get(0, 1) + h).abs() < 1e-15);
        assert!((o.get(1, 0) - h).abs() < 1e-15 && (o.get(1, 1) - h).abs() < 1e-15);
        for xi in [0.1, 1.3, -2.7] {
            assert!(rotation_matrix(xi).orthogonality_defect() < 1e-15);
            assert!((rotation_matrix(xi).determinant_2x2().unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rotate_rejects_non_orthogonal() {
        let f = SymMatrix::identity(generic_labels(2));
        let mut o = SquareMatrix::identity(2);
        o.set(0, 1, 0.1);
        assert!(rotate_fim(&f, &o).is_err());
    }
}
