//! Gaussian point-spread function and per-photon detection densities.
//!
//! All coordinates are image-plane coordinates. The parameter vector θ of a
//! [`SourceModel`] is the flattened list of source positions,
//! `(x1, x2, …)` in 1D and `(x1, y1, x2, y2, …)` in 2D.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{CoreError, CoreResult};
use crate::matrix::position_labels;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Gaussian impulse-response amplitude `(2πσ²)^(−1/4)·exp(−x²/4σ²)`.
pub fn psf_amplitude(x: f64, sigma: f64) -> CoreResult<f64> {
    check_sigma(sigma)?;
    Ok(amplitude_unchecked(x, sigma))
}

#[inline]
pub(crate) fn amplitude_unchecked(x: f64, sigma: f64) -> f64 {
    libm::pow(2.0 * PI * sigma * sigma, -0.25) * libm::exp(-x * x / (4.0 * sigma * sigma))
}

#[inline]
fn gauss_density(d2: f64, sigma: f64, dim: usize) -> f64 {
    let var = sigma * sigma;
    let norm = match dim {
        1 => 1.0 / libm::sqrt(2.0 * PI * var),
        _ => 1.0 / (2.0 * PI * var),
    };
    norm * libm::exp(-0.5 * d2 / var)
}

fn check_sigma(sigma: f64) -> CoreResult<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(CoreError::Domain("sigma must be positive and finite"))
    }
}

/// Density `ψ²(r − r̄)` of a photon from a single source at `rbar`.
pub fn single_source_density(r: &[f64], rbar: &[f64], sigma: f64) -> CoreResult<f64> {
    check_sigma(sigma)?;
    if r.len() != rbar.len() {
        return Err(CoreError::DimensionMismatch { expected: rbar.len(), found: r.len() });
    }
    if !(1..=2).contains(&r.len()) {
        return Err(CoreError::Domain("dimension must be 1 or 2"));
    }
    let d2: f64 = r.iter().zip(rbar).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(gauss_density(d2, sigma, r.len()))
}

/// K incoherent point emitters imaged through an isotropic Gaussian PSF.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceModel {
    dim: usize,
    positions: Vec<f64>,
    weights: Vec<f64>,
    sigma: f64,
    photons: u64,
}

impl SourceModel {
    /// `positions` holds one coordinate vector per source.
    pub fn new(dim: usize, positions: &[&[f64]], weights: &[f64], sigma: f64, photons: u64) -> CoreResult<Self> {
        let mut flat = Vec::with_capacity(positions.len() * dim);
        for p in positions {
            if p.len() != dim {
                return Err(CoreError::DimensionMismatch { expected: dim, found: p.len() });
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(dim, flat, weights.to_vec(), sigma, photons)
    }

    /// Builds from a flattened parameter vector θ.
    pub fn from_flat(dim: usize, positions: Vec<f64>, weights: Vec<f64>, sigma: f64, photons: u64) -> CoreResult<Self> {
        if !(1..=2).contains(&dim) {
            return Err(CoreError::Domain("dimension must be 1 or 2"));
        }
        check_sigma(sigma)?;
        if photons == 0 {
            return Err(CoreError::Domain("photon budget must be at least 1"));
        }
        let k = weights.len();
        if k == 0 {
            return Err(CoreError::Domain("at least one source is required"));
        }
        if positions.len() != k * dim {
            return Err(CoreError::DimensionMismatch { expected: k * dim, found: positions.len() });
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(CoreError::Domain("source positions must be finite"));
        }
        if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(CoreError::Domain("relative brightness must lie in [0, 1]"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(CoreError::Domain("relative brightnesses must sum to 1"));
        }
        Ok(Self { dim, positions, weights, sigma, photons })
    }

    /// Two 1D sources at `∓sep/2` with brightnesses `(1±δ)/2`.
    pub fn two_source_1d(sep: f64, delta: f64, sigma: f64, photons: u64) -> CoreResult<Self> {
        if !(delta.abs() < 1.0) {
            return Err(CoreError::Domain("brightness asymmetry must satisfy |delta| < 1"));
        }
        Self::from_flat(1, vec![-0.5 * sep, 0.5 * sep], vec![0.5 * (1.0 + delta), 0.5 * (1.0 - delta)], sigma, photons)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sources(&self) -> usize {
        self.weights.len()
    }

    /// Number of position parameters `K·dim`.
    pub fn parameters(&self) -> usize {
        self.positions.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn photons(&self) -> u64 {
        self.photons
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flattened θ.
    pub fn theta(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn labels(&self) -> Vec<String> {
        position_labels(self.sources(), self.dim)
    }

    /// Indices of sources with zero brightness. Such sources make the
    /// cofluorescent information singular.
    pub fn dark_sources(&self) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, &w)| w == 0.0).map(|(k, _)| k).collect()
    }

    /// Same sources and brightnesses at another θ.
    pub fn with_theta(&self, theta: &[f64]) -> CoreResult<Self> {
        if theta.len() != self.positions.len() {
            return Err(CoreError::DimensionMismatch { expected: self.positions.len(), found: theta.len() });
        }
        if theta.iter().any(|p| !p.is_finite()) {
            return Err(CoreError::Domain("source positions must be finite"));
        }
        Ok(Self { positions: theta.to_vec(), ..self.clone() })
    }

    pub fn with_photons(&self, photons: u64) -> CoreResult<Self> {
        if photons == 0 {
            return Err(CoreError::Domain("photon budget must be at least 1"));
        }
        Ok(Self { photons, ..self.clone() })
    }

    /// Axis-aligned integration box: extreme positions ± `half_width·σ`.
    pub fn bounding_box(&self, half_width: f64) -> [(f64, f64); 2] {
        let mut out = [(0.0, 0.0); 2];
        for (d, slot) in out.iter_mut().enumerate().take(self.dim) {
            let coords = (0..self.sources()).map(|k| self.positions[k * self.dim + d]);
            let lo = coords.clone().fold(f64::INFINITY, f64::min);
            let hi = coords.fold(f64::NEG_INFINITY, f64::max);
            *slot = (lo - half_width * self.sigma, hi + half_width * self.sigma);
        }
        out
    }

    fn check_point(&self, r: &[f64]) -> CoreResult<()> {
        if r.len() != self.dim {
            return Err(CoreError::DimensionMismatch { expected: self.dim, found: r.len() });
        }
        Ok(())
    }

    #[inline]
    fn sq_dist(&self, r: &[f64], k: usize) -> f64 {
        sq_dist_at(self.theta(), self.dim, r, k)
    }

    /// Density and score `∂ ln p/∂θ` at `r`, computed with a shifted
    /// exponent so the score stays finite far in the tails.
    pub(crate) fn density_and_score(&self, r: &[f64], score: &mut [f64]) -> f64 {
        self.density_and_score_at(&self.positions, r, score)
    }

    /// As [`Self::density_and_score`] with positions taken from `theta`.
    pub(crate) fn density_and_score_at(&self, theta: &[f64], r: &[f64], score: &mut [f64]) -> f64 {
        let var = self.sigma * self.sigma;
        let dim = self.dim;
        let k = self.sources();
        let mut min_d2 = f64::INFINITY;
        for j in 0..k {
            if self.weights[j] > 0.0 {
                min_d2 = min_d2.min(sq_dist_at(theta, dim, r, j));
            }
        }
        let mut total = 0.0;
        score.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..k {
            let w = self.weights[j];
            if w == 0.0 {
                continue;
            }
            let rel = w * libm::exp(-0.5 * (sq_dist_at(theta, dim, r, j) - min_d2) / var);
            total += rel;
            for d in 0..dim {
                score[j * dim + d] = rel * (r[d] - theta[j * dim + d]) / var;
            }
        }
        score.iter_mut().for_each(|s| *s /= total);
        total * gauss_density(min_d2, self.sigma, dim)
    }
}

#[inline]
fn sq_dist_at(theta: &[f64], dim: usize, r: &[f64], k: usize) -> f64 {
    let p = &theta[k * dim..(k + 1) * dim];
    r.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `Σ_k μ_k ψ²(r − r̄_k)`.
pub fn mixture_density(r: &[f64], model: &SourceModel) -> CoreResult<f64> {
    model.check_point(r)?;
    Ok((0..model.sources())
        .map(|k| model.weights[k] * gauss_density(model.sq_dist(r, k), model.sigma, model.dim))
        .sum())
}

/// `∂ ln p(r|θ)/∂θ_i` for every position parameter.
pub fn log_density_gradient(r: &[f64], model: &SourceModel) -> CoreResult<Vec<f64>> {
    model.check_point(r)?;
    let mut score = vec![0.0; model.parameters()];
    model.density_and_score(r, &mut score);
    Ok(score)
}

/// Which emission window a detection belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Window {
    /// Exclusive window of source `k` (zero-based).
    Source(usize),
    /// Cofluorescent sample from the mixture.
    Mixed,
}

/// One detected photon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    /// `[x, y]`; `y` is ignored in 1D.
    pub coords: [f64; 2],
    pub window: Window,
}

impl Detection {
    pub fn point(&self, dim: usize) -> &[f64] {
        &self.coords[..dim]
    }
}
