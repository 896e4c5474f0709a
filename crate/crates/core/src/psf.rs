//! Real impulse-response amplitudes `ψ(u)` with spatial gradients.
//!
//! The intensity PSF is `ψ²`. Implementations return `ψ` and `∇_u ψ` at an
//! offset `u = r − r̄` from the source.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::model::amplitude_unchecked;
use crate::quad::{integrate, QuadratureSpec};

pub trait PsfAmplitude {
    fn dim(&self) -> usize;

    /// Returns `ψ(u)` and writes `∇_u ψ` into `grad` (length `dim`).
    fn eval(&self, offset: &[f64], grad: &mut [f64]) -> f64;

    /// Half-width of a square around the source holding all but a
    /// negligible part of `ψ²`.
    fn extent(&self, quad: &QuadratureSpec) -> f64;

    /// Length scale used to seed quadrature panels.
    fn panel_width(&self) -> f64;
}

/// Isotropic Gaussian amplitude of standard deviation σ (intensity).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPsf {
    pub sigma: f64,
    pub dim: usize,
}

impl GaussianPsf {
    pub fn new(sigma: f64, dim: usize) -> CoreResult<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(CoreError::Domain("sigma must be positive and finite"));
        }
        if !(1..=2).contains(&dim) {
            return Err(CoreError::Domain("dimension must be 1 or 2"));
        }
        Ok(Self { sigma, dim })
    }
}

impl PsfAmplitude for GaussianPsf {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, offset: &[f64], grad: &mut [f64]) -> f64 {
        let psi: f64 = offset.iter().map(|&u| amplitude_unchecked(u, self.sigma)).product();
        let two_var = 2.0 * self.sigma * self.sigma;
        for (g, &u) in grad.iter_mut().zip(offset) {
            *g = -u / two_var * psi;
        }
        psi
    }

    fn extent(&self, quad: &QuadratureSpec) -> f64 {
        quad.half_width * self.sigma
    }

    fn panel_width(&self) -> f64 {
        self.sigma
    }
}

/// Separable 2D Gaussian with different widths along x and y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnisotropicGaussianPsf {
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl AnisotropicGaussianPsf {
    pub fn new(sigma_x: f64, sigma_y: f64) -> CoreResult<Self> {
        if !(sigma_x > 0.0 && sigma_y > 0.0 && sigma_x.is_finite() && sigma_y.is_finite()) {
            return Err(CoreError::Domain("sigma must be positive and finite"));
        }
        Ok(Self { sigma_x, sigma_y })
    }
}

impl PsfAmplitude for AnisotropicGaussianPsf {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let psi = amplitude_unchecked(u[0], self.sigma_x) * amplitude_unchecked(u[1], self.sigma_y);
        grad[0] = -u[0] / (2.0 * self.sigma_x * self.sigma_x) * psi;
        grad[1] = -u[1] / (2.0 * self.sigma_y * self.sigma_y) * psi;
        psi
    }

    fn extent(&self, quad: &QuadratureSpec) -> f64 {
        quad.half_width * self.sigma_x.max(self.sigma_y)
    }

    fn panel_width(&self) -> f64 {
        self.sigma_x.min(self.sigma_y)
    }
}

/// A 2D amplitude evaluated in a frame rotated by `angle`:
/// `ψ_R(u) = ψ(Rᵀu)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotated<P> {
    pub inner: P,
    pub angle: f64,
}

impl<P: PsfAmplitude> PsfAmplitude for Rotated<P> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let (s, c) = libm::sincos(self.angle);
        let local = [c * u[0] + s * u[1], -s * u[0] + c * u[1]];
        let mut g = [0.0; 2];
        let psi = self.inner.eval(&local, &mut g);
        grad[0] = c * g[0] - s * g[1];
        grad[1] = s * g[0] + c * g[1];
        psi
    }

    fn extent(&self, quad: &QuadratureSpec) -> f64 {
        self.inner.extent(quad) * core::f64::consts::SQRT_2
    }

    fn panel_width(&self) -> f64 {
        self.inner.panel_width()
    }
}

/// Natural cubic spline through equally spaced knots on `[−L, L]`, zero at
/// both ends and outside, rescaled so that `∫f² = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineProfile {
    half_width: f64,
    step: f64,
    values: Vec<f64>,
    second: Vec<f64>,
    scale: f64,
}

impl SplineProfile {
    /// `interior` are the knot values strictly inside `[−L, L]`.
    pub fn new(interior: &[f64], half_width: f64) -> CoreResult<Self> {
        if interior.is_empty() || !(half_width > 0.0 && half_width.is_finite()) {
            return Err(CoreError::Domain("spline needs interior knots and a positive half-width"));
        }
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(0.0);
        let n = values.len();
        let step = 2.0 * half_width / (n - 1) as f64;
        let second = natural_second_derivatives(&values, step);
        let mut profile = Self { half_width, step, values, second, scale: 1.0 };

        let spec = QuadratureSpec { rel_tol: 1e-13, ..QuadratureSpec::default() };
        let norm = integrate(
            |x, o: &mut [f64]| {
                let (v, _) = profile.raw(x);
                o[0] = v * v;
                Ok(())
            },
            -half_width,
            half_width,
            1,
            n - 1,
            &spec,
        )?;
        if !(norm.values[0] > 0.0) {
            return Err(CoreError::Domain("spline profile has zero norm"));
        }
        profile.scale = 1.0 / libm::sqrt(norm.values[0]);
        Ok(profile)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn knots(&self) -> usize {
        self.values.len()
    }

    fn raw(&self, x: f64) -> (f64, f64) {
        let t = (x + self.half_width) / self.step;
        if !(t >= 0.0 && t <= (self.values.len() - 1) as f64) {
            return (0.0, 0.0);
        }
        let i = (libm::floor(t) as usize).min(self.values.len() - 2);
        let h = self.step;
        let x0 = -self.half_width + h * i as f64;
        let a = (x0 + h - x) / h;
        let b = (x - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        (v, d)
    }

    /// Normalized value and derivative.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (v, d) = self.raw(x);
        (v * self.scale, d * self.scale)
    }
}

fn natural_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Tridiagonal system for interior second derivatives: h/6·m[i-1] + 2h/3·m[i] + h/6·m[i+1] = rhs
    let inner = n - 2;
    let mut c_prime = vec![0.0; inner];
    let mut d_prime = vec![0.0; inner];
    let (sub, diag, sup) = (h / 6.0, 2.0 * h / 3.0, h / 6.0);
    for k in 0..inner {
        let i = k + 1;
        let rhs = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h;
        if k == 0 {
            c_prime[k] = sup / diag;
            d_prime[k] = rhs / diag;
        } else {
            let denom = diag - sub * c_prime[k - 1];
            c_prime[k] = sup / denom;
            d_prime[k] = (rhs - sub * d_prime[k - 1]) / denom;
        }
    }
    for k in (0..inner).rev() {
        let next = if k + 1 < inner { m[k + 2] } else { 0.0 };
        m[k + 1] = d_prime[k] - c_prime[k] * next;
    }
    m
}

/// Separable spline amplitude `ψ(u) = Π_d f_d(u_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplinePsf {
    profiles: Vec<SplineProfile>,
}

impl SplinePsf {
    pub fn new(profiles: Vec<SplineProfile>) -> CoreResult<Self> {
        if !(1..=2).contains(&profiles.len()) {
            return Err(CoreError::Domain("dimension must be 1 or 2"));
        }
        Ok(Self { profiles })
    }
}

impl PsfAmplitude for SplinePsf {
    fn dim(&self) -> usize {
        self.profiles.len()
    }

    fn eval(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let mut vals = [(0.0, 0.0); 2];
        for (d, p) in self.profiles.iter().enumerate() {
            vals[d] = p.eval(u[d]);
        }
        let dim = self.profiles.len();
        let psi: f64 = vals[..dim].iter().map(|v| v.0).product();
        for (d, g) in grad[..dim].iter_mut().enumerate() {
            *g = vals[..dim].iter().enumerate().map(|(e, v)| if e == d { v.1 } else { v.0 }).product();
        }
        psi
    }

    fn extent(&self, _quad: &QuadratureSpec) -> f64 {
        self.profiles.iter().map(|p| p.half_width).fold(0.0, f64::max)
    }

    fn panel_width(&self) -> f64 {
        self.profiles.iter().map(|p| p.step).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_norm_1d<P: PsfAmplitude>(p: &P, lo: f64, hi: f64) -> f64 {
        integrate(
            |x, o: &mut [f64]| {
                let mut g = [0.0];
                let v = p.eval(&[x], &mut g);
                o[0] = v * v;
                Ok(())
            },
            lo,
            hi,
            1,
            32,
            &QuadratureSpec::default(),
        )
        .unwrap()
        .values[0]
    }

    #[test]
    fn gaussian_square_normalized() {
        for sigma in [0.5, 1.0, 2.0] {
            let p = GaussianPsf::new(sigma, 1).unwrap();
            let n = square_norm_1d(&p, -10.0 * sigma, 10.0 * sigma);
            assert!((n - 1.0).abs() < 1e-12, "sigma {sigma}: {n}");
        }
    }

    #[test]
    fn gaussian_gradient_matches_difference() {
        let p = GaussianPsf::new(1.3, 2).unwrap();
        let u = [0.4, -0.9];
        let mut g = [0.0; 2];
        p.eval(&u, &mut g);
        let h = 1e-6;
        let mut scratch = [0.0; 2];
        for d in 0..2 {
            let mut a = u;
            let mut b = u;
            a[d] += h;
            b[d] -= h;
            let fd = (p.eval(&a, &mut scratch) - p.eval(&b, &mut scratch)) / (2.0 * h);
            assert!((fd - g[d]).abs() < 1e-9);
        }
    }

    #[test]
    fn spline_profile_normalized_and_differentiable() {
        let prof = SplineProfile::new(&[0.3, 1.0, 0.7, -0.2, 0.4], 3.0).unwrap();
        let psf = SplinePsf::new(vec![prof.clone()]).unwrap();
        let norm = square_norm_1d(&psf, -3.0, 3.0);
        assert!((norm - 1.0).abs() < 1e-9, "{norm}");
        let h = 1e-6;
        for x in [-2.2, -0.1, 0.77, 1.9] {
            let fd = (prof.eval(x + h).0 - prof.eval(x - h).0) / (2.0 * h);
            assert!((fd - prof.eval(x).1).abs() < 1e-7);
        }
        assert_eq!(prof.eval(3.5), (0.0, 0.0));
    }

    #[test]
    fn rotated_gradient_is_rotated() {
        let base = AnisotropicGaussianPsf::new(1.0, 2.0).unwrap();
        let rot = Rotated { inner: base, angle: 0.7 };
        let u = [0.3, 0.8];
        let mut g = [0.0; 2];
        rot.eval(&u, &mut g);
        let h = 1e-6;
        let mut scratch = [0.0; 2];
        for d in 0..2 {
            let mut a = u;
            let mut b = u;
            a[d] += h;
            b[d] -= h;
            let fd = (rot.eval(&a, &mut scratch) - rot.eval(&b, &mut scratch)) / (2.0 * h);
            assert!((fd - g[d]).abs() < 1e-9);
        }
    }
}
