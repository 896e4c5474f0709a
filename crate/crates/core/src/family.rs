//! Parametric density families `q(X|θ)` accepted by the Fisher information
//! functional, plus the combinators used to exercise additivity and
//! convexity away from microscopy.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{CoreError, CoreResult};
use crate::matrix::generic_labels;
use crate::model::SourceModel;
use crate::psf::PsfAmplitude;
use crate::quad::{panels_for, QuadratureSpec};

/// Where a family's outcomes live and how to seed quadrature over them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Line {
        lo: f64,
        hi: f64,
        panels: usize,
    },
    Plane {
        x: (f64, f64),
        y: (f64, f64),
        panels: (usize, usize),
    },
    /// Outcomes `0..count`, passed to the family as `[index as f64]`.
    Discrete {
        count: usize,
    },
}

impl Region {
    /// Smallest region covering both; `None` if the kinds differ.
    pub fn union(&self, other: &Region) -> Option<Region> {
        match (*self, *other) {
            (Region::Line { lo: a, hi: b, panels: p }, Region::Line { lo: c, hi: d, panels: q }) => {
                Some(Region::Line { lo: a.min(c), hi: b.max(d), panels: p.max(q) })
            }
            (Region::Plane { x: ax, y: ay, panels: ap }, Region::Plane { x: bx, y: by, panels: bp }) => {
                Some(Region::Plane {
                    x: (ax.0.min(bx.0), ax.1.max(bx.1)),
                    y: (ay.0.min(by.0), ay.1.max(by.1)),
                    panels: (ap.0.max(bp.0), ap.1.max(bp.1)),
                })
            }
            (Region::Discrete { count: a }, Region::Discrete { count: b }) if a == b => {
                Some(Region::Discrete { count: a })
            }
            _ => None,
        }
    }
}

/// A density `q(X|θ)` on a line, plane or finite outcome set.
pub trait DensityFamily {
    /// Length M of θ.
    fn parameters(&self) -> usize;

    /// Integration region at θ.
    fn region(&self, theta: &[f64], quad: &QuadratureSpec) -> Region;

    /// Returns `q(x|θ)` and writes the score `∂ ln q/∂θ` into `score`.
    /// Where `q = 0` the score may be left as zeros.
    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64;

    fn labels(&self) -> Vec<String> {
        generic_labels(self.parameters())
    }
}

impl<T: DensityFamily + ?Sized> DensityFamily for &T {
    fn parameters(&self) -> usize {
        (**self).parameters()
    }
    fn region(&self, theta: &[f64], quad: &QuadratureSpec) -> Region {
        (**self).region(theta, quad)
    }
    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        (**self).eval(theta, x, score)
    }
    fn labels(&self) -> Vec<String> {
        (**self).labels()
    }
}

impl<T: DensityFamily + ?Sized> DensityFamily for Box<T> {
    fn parameters(&self) -> usize {
        (**self).parameters()
    }
    fn region(&self, theta: &[f64], quad: &QuadratureSpec) -> Region {
        (**self).region(theta, quad)
    }
    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        (**self).eval(theta, x, score)
    }
    fn labels(&self) -> Vec<String> {
        (**self).labels()
    }
}

/// The cofluorescent mixture `Σ μ_k ψ²(r − r̄_k)`, parameterized by all
/// source positions. Brightnesses and σ come from the model; θ overrides
/// the positions.
impl DensityFamily for SourceModel {
    fn parameters(&self) -> usize {
        SourceModel::parameters(self)
    }

    fn region(&self, theta: &[f64], quad: &QuadratureSpec) -> Region {
        let at = self.with_theta(theta).unwrap_or_else(|_| self.clone());
        let bounds = at.bounding_box(quad.half_width);
        let sigma = self.sigma();
        match self.dim() {
            1 => Region::Line { lo: bounds[0].0, hi: bounds[0].1, panels: panels_for(bounds[0].0, bounds[0].1, sigma) },
            _ => Region::Plane {
                x: bounds[0],
                y: bounds[1],
                panels: (panels_for(bounds[0].0, bounds[0].1, sigma), panels_for(bounds[1].0, bounds[1].1, sigma)),
            },
        }
    }

    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        self.density_and_score_at(theta, x, score)
    }

    fn labels(&self) -> Vec<String> {
        SourceModel::labels(self)
    }
}

/// Single emitter imaged through an arbitrary real amplitude:
/// `q(r|r̄) = ψ²(r − r̄)` with θ = r̄.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleSource<P> {
    pub psf: P,
}

impl<P: PsfAmplitude> DensityFamily for SingleSource<P> {
    fn parameters(&self) -> usize {
        self.psf.dim()
    }

    fn region(&self, theta: &[f64], quad: &QuadratureSpec) -> Region {
        let e = self.psf.extent(quad);
        let w = self.psf.panel_width();
        let span = |c: f64| (c - e, c + e);
        match self.psf.dim() {
            1 => Region::Line { lo: theta[0] - e, hi: theta[0] + e, panels: panels_for(-e, e, w) },
            _ => Region::Plane {
                x: span(theta[0]),
                y: span(theta[1]),
                panels: (panels_for(-e, e, w), panels_for(-e, e, w)),
            },
        }
    }

    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        let dim = self.psf.dim();
        let mut u = [0.0; 2];
        for d in 0..dim {
            u[d] = x[d] - theta[d];
        }
        let mut g = [0.0; 2];
        let psi = self.psf.eval(&u[..dim], &mut g[..dim]);
        if psi == 0.0 {
            score.iter_mut().for_each(|s| *s = 0.0);
            return 0.0;
        }
        // ∂/∂r̄ ln ψ²(r − r̄) = −2 ∇ψ / ψ
        for d in 0..dim {
            score[d] = -2.0 * g[d] / psi;
        }
        psi * psi
    }

    fn labels(&self) -> Vec<String> {
        crate::matrix::position_labels(1, self.psf.dim())
    }
}

/// 1D normal density with mean `θ[param] + offset`, embedded in an
/// `m`-parameter space. It depends on one parameter only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftedGaussian {
    pub parameters: usize,
    pub param: usize,
    pub offset: f64,
    pub sigma: f64,
}

impl DensityFamily for ShiftedGaussian {
    fn parameters(&self) -> usize {
        self.parameters
    }

    fn region(&self, theta: &[f64], quad: &QuadratureSpec) -> Region {
        let c = theta[self.param] + self.offset;
        let e = quad.half_width * self.sigma;
        Region::Line { lo: c - e, hi: c + e, panels: panels_for(-e, e, self.sigma) }
    }

    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        let var = self.sigma * self.sigma;
        let d = x[0] - theta[self.param] - self.offset;
        score.iter_mut().for_each(|s| *s = 0.0);
        score[self.param] = d / var;
        libm::exp(-0.5 * d * d / var) / libm::sqrt(2.0 * PI * var)
    }
}

/// Parameter-free uniform density on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Uniform {
    pub parameters: usize,
    pub lo: f64,
    pub hi: f64,
}

impl DensityFamily for Uniform {
    fn parameters(&self) -> usize {
        self.parameters
    }

    fn region(&self, _theta: &[f64], _quad: &QuadratureSpec) -> Region {
        Region::Line { lo: self.lo, hi: self.hi, panels: 1 }
    }

    fn eval(&self, _theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        score.iter_mut().for_each(|s| *s = 0.0);
        if (self.lo..=self.hi).contains(&x[0]) {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }
}

/// Binomial outcome count with success probability `θ[param]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Binomial {
    pub parameters: usize,
    pub param: usize,
    pub trials: u32,
}

impl DensityFamily for Binomial {
    fn parameters(&self) -> usize {
        self.parameters
    }

    fn region(&self, _theta: &[f64], _quad: &QuadratureSpec) -> Region {
        Region::Discrete { count: self.trials as usize + 1 }
    }

    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        let p = theta[self.param];
        let n = self.trials as f64;
        let k = x[0];
        score.iter_mut().for_each(|s| *s = 0.0);
        score[self.param] = k / p - (n - k) / (1.0 - p);
        let log_choose = libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0);
        libm::exp(log_choose + k * libm::log(p) + (n - k) * libm::log1p(-p))
    }
}

/// Joint density of two independent outcomes `q₁(X₁|θ)·q₂(X₂|θ)` sharing θ.
/// Two lines make a plane; two finite sets make their product set.
#[derive(Clone, Debug, PartialEq)]
pub struct Product<A, B> {
    pub first: A,
    pub second: B,
}

impl<A: DensityFamily, B: DensityFamily> Product<A, B> {
    pub fn new(first: A, second: B) -> CoreResult<Self> {
        if first.parameters() != second.parameters() {
            return Err(CoreError::DimensionMismatch { expected: first.parameters(), found: second.parameters() });
        }
        Ok(Self { first, second })
    }
}

impl<A: DensityFamily, B: DensityFamily> DensityFamily for Product<A, B> {
    fn parameters(&self) -> usize {
        self.first.parameters()
    }

    fn region(&self, theta: &[f64], quad: &QuadratureSpec) -> Region {
        match (self.first.region(theta, quad), self.second.region(theta, quad)) {
            (Region::Line { lo: a, hi: b, panels: p }, Region::Line { lo: c, hi: d, panels: q }) => {
                Region::Plane { x: (a, b), y: (c, d), panels: (p, q) }
            }
            (Region::Discrete { count: a }, Region::Discrete { count: b }) => Region::Discrete { count: a * b },
            // Unsupported pairing: an empty region integrates to nothing.
            _ => Region::Discrete { count: 0 },
        }
    }

    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        let m = self.parameters();
        let (x1, x2) = match self.second.region(theta, &QuadratureSpec::default()) {
            Region::Discrete { count } if count > 0 => {
                let idx = x[0] as usize;
                ([(idx / count) as f64], [(idx % count) as f64])
            }
            _ => ([x[0]], [x[1]]),
        };
        let mut s2 = vec![0.0; m];
        let q1 = self.first.eval(theta, &x1, score);
        let q2 = self.second.eval(theta, &x2, &mut s2);
        for (s, t) in score.iter_mut().zip(&s2) {
            *s += t;
        }
        q1 * q2
    }
}

/// Convex combination `Σ γ_k q_k(X|θ)` over a shared outcome space.
pub struct Mixture<'a> {
    components: Vec<&'a dyn DensityFamily>,
    weights: Vec<f64>,
}

impl<'a> Mixture<'a> {
    pub fn new(components: Vec<&'a dyn DensityFamily>, weights: Vec<f64>) -> CoreResult<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(CoreError::Domain("mixture needs one weight per component"));
        }
        let m = components[0].parameters();
        if components.iter().any(|c| c.parameters() != m) {
            return Err(CoreError::Domain("mixture components must share the parameter space"));
        }
        if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(CoreError::Domain("mixture weights must be a probability vector"));
        }
        Ok(Self { components, weights })
    }
}

impl DensityFamily for Mixture<'_> {
    fn parameters(&self) -> usize {
        self.components[0].parameters()
    }

    fn region(&self, theta: &[f64], quad: &QuadratureSpec) -> Region {
        let mut region = self.components[0].region(theta, quad);
        for c in &self.components[1..] {
            region = region.union(&c.region(theta, quad)).unwrap_or(Region::Discrete { count: 0 });
        }
        region
    }

    fn eval(&self, theta: &[f64], x: &[f64], score: &mut [f64]) -> f64 {
        let m = self.parameters();
        let mut part = vec![0.0; m];
        let mut total = 0.0;
        score.iter_mut().for_each(|s| *s = 0.0);
        for (c, &w) in self.components.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let q = c.eval(theta, x, &mut part) * w;
            total += q;
            for (s, p) in score.iter_mut().zip(&part) {
                *s += q * p;
            }
        }
        if total > 0.0 {
            score.iter_mut().for_each(|s| *s /= total);
        }
        total
    }
}
