//! Numerical certificates for additivity, convexity, invariance and the
//! blinking-advantage inequalities.
//!
//! Every certificate carries a normalized margin and a three-valued verdict:
//! PASS when the margin exceeds [`STRICTNESS_TOL`], FAIL when it is below
//! its negative, INDETERMINATE in between. Claims of equality (additivity,
//! invariance) use the margin `1 − deviation/tolerance`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use rand_core::RngCore;

use crate::error::{CoreError, CoreResult};
use crate::family::{DensityFamily, Mixture, Region, SingleSource};
use crate::fim::{fim_blinking_expected, fim_cofluorescent, fim_functional};
use crate::matrix::SymMatrix;
use crate::metrology::{efficiency_at_bound, invert_info};
use crate::model::SourceModel;
use crate::psf::{PsfAmplitude, Rotated};
use crate::qfim::{qfim_blinking_1d, QfimClosedForm};
use crate::quad::{integrate, integrate_2d, QuadratureSpec};
use crate::text::{Float, FloatList};

pub const STRICTNESS_TOL: f64 = 1e-9;
pub const ADDITIVITY_TOL: f64 = 1e-7;
pub const INVARIANCE_TOL: f64 = 1e-7;
/// `∫|q₁ − q₂|` below which two densities count as identical.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    pub fn from_margin(margin: f64, tol: f64) -> Self {
        if margin > tol {
            Verdict::Pass
        } else if margin < -tol {
            Verdict::Fail
        } else {
            Verdict::Indeterminate
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Indeterminate => "INDETERMINATE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether the configuration meets the hypotheses of the claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scope {
    Theorem,
    /// Evaluated outside the stated hypotheses: evidence, not proof.
    OutsideTheoremScope,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Theorem => "theorem",
            Scope::OutsideTheoremScope => "outside-theorem-scope-evidence",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub claim: String,
    pub verdict: Verdict,
    pub margin: f64,
    /// Strictness tolerance applied to `margin`.
    pub strictness: f64,
    /// Claim-specific tolerance (equality tolerance or PSD floor).
    pub tolerance: f64,
    pub scope: Scope,
    pub config: Vec<(String, String)>,
    /// Normalized spectrum of the difference matrix, when one exists.
    pub spectrum: Vec<f64>,
    pub note: Option<String>,
}

impl Certificate {
    fn new(claim: &str, margin: f64, tolerance: f64) -> Self {
        Self {
            claim: claim.to_string(),
            verdict: Verdict::from_margin(margin, STRICTNESS_TOL),
            margin,
            strictness: STRICTNESS_TOL,
            tolerance,
            scope: Scope::Theorem,
            config: Vec::new(),
            spectrum: Vec::new(),
            note: None,
        }
    }

    fn indeterminate(claim: &str, tolerance: f64, note: &str) -> Self {
        let mut c = Self::new(claim, f64::NAN, tolerance);
        c.verdict = Verdict::Indeterminate;
        c.note = Some(note.to_string());
        c
    }

    fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    fn with_float(self, key: &str, value: f64) -> Self {
        self.with(key, Float(value))
    }

    fn with_list(self, key: &str, values: &[f64]) -> Self {
        self.with(key, FloatList(values))
    }

    /// One `key=value` record per certificate.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "claim={} verdict={} margin={} strictness={} tolerance={} scope={}",
            self.claim,
            self.verdict,
            Float(self.margin),
            Float(self.strictness),
            Float(self.tolerance),
            self.scope.as_str()
        );
        for (k, v) in &self.config {
            let _ = write!(s, " {k}={v}");
        }
        if !self.spectrum.is_empty() {
            let _ = write!(s, " spectrum={}", FloatList(&self.spectrum));
        }
        if let Some(note) = &self.note {
            let _ = write!(s, " note={}", note.replace(' ', "_"));
        }
        s
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

fn quadrature_failed<T>(r: &CoreResult<T>) -> bool {
    matches!(r, Err(CoreError::QuadratureDiverged { .. }))
}

/// Largest entrywise deviation relative to the largest entry of `reference`.
fn relative_deviation(a: &SymMatrix, reference: &SymMatrix) -> CoreResult<f64> {
    let scale = reference.max_abs();
    let d = a.sub(reference)?.max_abs();
    Ok(if scale > 0.0 { d / scale } else { d })
}

/// Information of the joint density of independent outcomes from `a` and
/// `b` against `F[a] + F[b]`.
pub fn certify_additivity<A, B>(a: A, b: B, theta: &[f64], quad: &QuadratureSpec) -> CoreResult<Certificate>
where
    A: DensityFamily + Clone,
    B: DensityFamily + Clone,
{
    const CLAIM: &str = "Additivity";
    let joint = crate::family::Product::new(a.clone(), b.clone())?;
    let fa = fim_functional(&a, theta, quad);
    let fb = fim_functional(&b, theta, quad);
    let fj = fim_functional(&joint, theta, quad);
    if quadrature_failed(&fa) || quadrature_failed(&fb) || quadrature_failed(&fj) {
        return Ok(Certificate::indeterminate(CLAIM, ADDITIVITY_TOL, "quadrature did not converge"));
    }
    let sum = fa?.add(&fb?)?;
    let dev = relative_deviation(&fj?, &sum)?;
    Ok(Certificate::new(CLAIM, 1.0 - dev / ADDITIVITY_TOL, ADDITIVITY_TOL)
        .with("parameters", theta.len())
        .with_float("deviation", dev))
}

/// `∫|q₁(x|θ) − q₂(x|θ)| dx` over the union of both regions.
pub fn l1_distance<A, B>(q1: &A, q2: &B, theta: &[f64], quad: &QuadratureSpec) -> CoreResult<f64>
where
    A: DensityFamily + ?Sized,
    B: DensityFamily + ?Sized,
{
    let m = q1.parameters();
    let mut s = vec![0.0; m];
    let mut diff = |x: &[f64]| {
        let a = q1.eval(theta, x, &mut s);
        let b = q2.eval(theta, x, &mut s);
        (a - b).abs()
    };
    let region = q1
        .region(theta, quad)
        .union(&q2.region(theta, quad))
        .ok_or(CoreError::Domain("densities live on different outcome spaces"))?;
    Ok(match region {
        Region::Line { lo, hi, panels } => {
            integrate(
                |x, out: &mut [f64]| {
                    out[0] = diff(&[x]);
                    Ok(())
                },
                lo,
                hi,
                1,
                panels,
                quad,
            )?
            .values[0]
        }
        Region::Plane { x, y, panels } => {
            integrate_2d(
                |a, b, out: &mut [f64]| {
                    out[0] = diff(&[a, b]);
                    Ok(())
                },
                x,
                y,
                1,
                panels,
                quad,
            )?
            .values[0]
        }
        Region::Discrete { count } => (0..count).map(|k| diff(&[k as f64])).sum(),
    })
}

/// Strict scalar convexity `F[γq₁ + (1−γ)q₂] < γF[q₁] + (1−γ)F[q₂]`.
pub fn certify_cohen(
    q1: &dyn DensityFamily,
    q2: &dyn DensityFamily,
    gamma: f64,
    theta: &[f64],
    quad: &QuadratureSpec,
) -> CoreResult<Certificate> {
    const CLAIM: &str = "CohenConvexity";
    if q1.parameters() != 1 || q2.parameters() != 1 {
        return Err(CoreError::Domain("scalar convexity needs single-parameter families"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(CoreError::Domain("mixing weight must lie in (0, 1)"));
    }
    let mix = Mixture::new(vec![q1, q2], vec![gamma, 1.0 - gamma])?;
    let f1 = fim_functional(q1, theta, quad);
    let f2 = fim_functional(q2, theta, quad);
    let fm = fim_functional(&mix, theta, quad);
    if quadrature_failed(&f1) || quadrature_failed(&f2) || quadrature_failed(&fm) {
        return Ok(Certificate::indeterminate(CLAIM, STRICTNESS_TOL, "quadrature did not converge"));
    }
    let avg = gamma * f1?.get(0, 0) + (1.0 - gamma) * f2?.get(0, 0);
    let fm = fm?.get(0, 0);
    let margin = if avg > 0.0 { (avg - fm) / avg } else { 0.0 };
    let dist = l1_distance(q1, q2, theta, quad)?;
    let mut c = Certificate::new(CLAIM, margin, STRICTNESS_TOL)
        .with_float("gamma", gamma)
        .with_float("theta", theta[0])
        .with_float("l1_distance", dist);
    if dist < IDENTITY_TOL {
        c.verdict = Verdict::Indeterminate;
        c.note = Some("densities coincide; strictness hypothesis violated".to_string());
    }
    Ok(c)
}

fn weights_equal(model: &SourceModel) -> bool {
    let w = model.weights();
    w.iter().all(|&x| (x - w[0]).abs() <= 1e-12)
}

fn min_separation(model: &SourceModel) -> f64 {
    let k = model.sources();
    let mut best = f64::INFINITY;
    for i in 0..k {
        for j in (i + 1)..k {
            let d: f64 = model.position(i).iter().zip(model.position(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(libm::sqrt(d));
        }
    }
    best
}

fn model_config(c: Certificate, model: &SourceModel) -> Certificate {
    c.with("K", model.sources())
        .with("dim", model.dim())
        .with_float("sigma", model.sigma())
        .with("N", model.photons())
        .with_list("weights", model.weights())
        .with_list("positions", model.theta())
        .with_float("min_sep", min_separation(model))
}

/// Normalized spectrum of `a − b` divided by `scale`.
fn difference_spectrum(a: &SymMatrix, b: &SymMatrix, scale: f64) -> CoreResult<Vec<f64>> {
    Ok(a.sub(b)?.eigen()?.values.iter().map(|l| l / scale).collect())
}

/// Blinking against cofluorescence for a classical model: part A is the
/// matrix inequality `F_blink > F_coflu`, part B the trace inequality.
///
/// Blinking counts are `N·μ_k`, so equal brightness gives `N/K`. Unequal
/// brightness is evaluated for part A and labelled outside the theorem's
/// scope.
pub fn certify_theorem2(model: &SourceModel, quad: &QuadratureSpec) -> CoreResult<(Certificate, Certificate)> {
    if model.sources() < 2 {
        return Err(CoreError::Domain("at least two sources are required"));
    }
    let blink = fim_blinking_expected(model);
    let coflu = fim_cofluorescent(model, quad);
    if quadrature_failed(&coflu) {
        let note = "quadrature did not converge";
        return Ok((
            model_config(Certificate::indeterminate("Theorem2A", STRICTNESS_TOL, note), model),
            model_config(Certificate::indeterminate("Theorem2B", STRICTNESS_TOL, note), model),
        ));
    }
    let coflu = coflu?;
    let tr = blink.trace();
    let spectrum = difference_spectrum(&blink, &coflu, tr)?;
    let min = spectrum.last().copied().unwrap_or(0.0);
    let mut a = model_config(Certificate::new("Theorem2A", min, STRICTNESS_TOL), model);
    a.spectrum = spectrum;
    if !weights_equal(model) {
        a.scope = Scope::OutsideTheoremScope;
    }
    let mut b = model_config(Certificate::new("Theorem2B", (tr - coflu.trace()) / tr, STRICTNESS_TOL), model);
    if weights_equal(model) && min_separation(model) == 0.0 {
        for c in [&mut a, &mut b] {
            c.verdict = Verdict::Indeterminate;
            c.note = Some("coincident sources".into());
        }
    }
    Ok((a, b))
}

/// Proof step of the matrix inequality: in the eigenbasis `O` of
/// `f_mixed`, every diagonal entry of `Oᵀ(f_avg − f_mixed)O` is positive.
pub fn certify_rotated_diagonals(f_avg: &SymMatrix, f_mixed: &SymMatrix) -> CoreResult<Certificate> {
    let o = f_mixed.eigen()?.vectors;
    let rotated = f_avg.sub(f_mixed)?.congruence(&o)?;
    let tr = f_avg.trace();
    let diag: Vec<f64> = rotated.diag().iter().map(|d| d / tr).collect();
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let mut c = Certificate::new("Theorem1ProofStep", min, STRICTNESS_TOL);
    c.spectrum = diag;
    Ok(c)
}

/// Corollary of the matrix inequality: smaller bounds `L_ii` and larger
/// saturated H measures for blinking.
pub fn certify_advantage(model: &SourceModel, quad: &QuadratureSpec) -> CoreResult<Certificate> {
    const CLAIM: &str = "AdvantageCorollary";
    let blink = fim_blinking_expected(model);
    let coflu = fim_cofluorescent(model, quad);
    if quadrature_failed(&coflu) {
        return Ok(model_config(
            Certificate::indeterminate(CLAIM, STRICTNESS_TOL, "quadrature did not converge"),
            model,
        ));
    }
    let coflu = coflu?;
    let lb = invert_info(&blink)?;
    let lc = invert_info(&coflu)?;
    let mut gaps = Vec::new();
    for (b, c) in lb.variances.iter().zip(&lc.variances) {
        match (b, c) {
            (Some(b), Some(c)) => gaps.push((c - b) / c),
            (Some(_), None) => gaps.push(1.0),
            (None, Some(_)) => gaps.push(-1.0),
            (None, None) => {}
        }
    }
    let hb = efficiency_at_bound(&blink)?;
    let hc = efficiency_at_bound(&coflu)?;
    for (b, c) in [(hb.h_tot, hc.h_tot), (hb.h_ind, hc.h_ind), (hb.h_eig, hc.h_eig)] {
        gaps.push((b - c) / b);
    }
    let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let mut c = model_config(Certificate::new(CLAIM, min, STRICTNESS_TOL), model);
    if !weights_equal(model) {
        c.scope = Scope::OutsideTheoremScope;
    }
    c.spectrum = gaps;
    Ok(c)
}

/// Single-source information `f₀·I₂` at every sampled position and frame
/// rotation of a 2D amplitude.
pub fn certify_invariance<P>(
    psf: &P,
    positions: &[[f64; 2]],
    angles: &[f64],
    quad: &QuadratureSpec,
) -> CoreResult<Certificate>
where
    P: PsfAmplitude + Clone,
{
    const CLAIM: &str = "Invariance";
    if psf.dim() != 2 {
        return Err(CoreError::Domain("invariance is certified for 2D amplitudes"));
    }
    if positions.len() < 5 || angles.len() < 3 {
        return Err(CoreError::Domain("need at least 5 positions and 3 rotations"));
    }
    let mut f0 = f64::NAN;
    let mut worst: f64 = 0.0;
    for &angle in angles {
        let family = SingleSource { psf: Rotated { inner: psf.clone(), angle } };
        for p in positions {
            let f = match fim_functional(&family, p, quad) {
                Err(CoreError::QuadratureDiverged { .. }) => {
                    return Ok(Certificate::indeterminate(CLAIM, INVARIANCE_TOL, "quadrature did not converge"))
                }
                r => r?,
            };
            if f0.is_nan() {
                f0 = 0.5 * f.trace();
            }
            let dev = (f.get(0, 0) - f0).abs().max((f.get(1, 1) - f0).abs()).max(f.get(0, 1).abs()) / f0;
            worst = worst.max(dev);
        }
    }
    Ok(Certificate::new(CLAIM, 1.0 - worst / INVARIANCE_TOL, INVARIANCE_TOL)
        .with_float("f0", f0)
        .with_float("deviation", worst)
        .with("positions", positions.len())
        .with("rotations", angles.len()))
}

/// Quantum counterpart for two 1D sources, one certificate pair per
/// separation. Part A is reported non-strict: the difference is the rank-1
/// matrix `(Nβ/2σ²)[[1,1],[1,1]]`, so its smallest eigenvalue is zero.
pub fn certify_theorem4(
    photons: f64,
    sigma: f64,
    delta: f64,
    separations: &[f64],
) -> CoreResult<Vec<(Certificate, Certificate)>> {
    let blink = qfim_blinking_1d(photons, sigma, delta)?;
    let tr = blink.trace();
    let mut out = Vec::with_capacity(separations.len());
    for &s in separations {
        let cf = QfimClosedForm::cofluorescent(photons, sigma, delta, s)?;
        let spectrum = difference_spectrum(&blink, &cf.matrix, tr)?;
        let (max, min) = (spectrum[0], spectrum[spectrum.len() - 1]);
        let mut a = Certificate::new("Theorem4A", min, STRICTNESS_TOL);
        if min >= -STRICTNESS_TOL && max > STRICTNESS_TOL {
            a.verdict = Verdict::Pass;
            a.note = Some("non-strict: rank-1 difference".to_string());
        }
        a.spectrum = spectrum;
        let gap = (tr - cf.matrix.trace()) / tr;
        let b = Certificate::new("Theorem4B", gap, STRICTNESS_TOL);
        let tag = |c: Certificate| {
            c.with_float("N", photons)
                .with_float("sigma", sigma)
                .with_float("delta", delta)
                .with_float("sep", s)
                .with_float("beta", cf.beta)
        };
        out.push((tag(a), tag(b)));
    }
    Ok(out)
}

fn unit(rng: &mut dyn RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Randomized search for negative part-A or part-B margins over
/// `s/σ ∈ [0.05, 10]`, `δ ∈ [0, 0.95]`, `K ∈ {2, 3}` in 1D.
/// Returns every certificate evaluated.
pub fn counterexample_search(
    rng: &mut dyn RngCore,
    configurations: usize,
    sigma: f64,
    photons: u64,
    quad: &QuadratureSpec,
) -> CoreResult<Vec<Certificate>> {
    let mut out = Vec::with_capacity(2 * configurations);
    for _ in 0..configurations {
        let k = if rng.next_u32() & 1 == 0 { 2 } else { 3 };
        let delta = 0.95 * unit(rng);
        let mut positions = vec![0.0];
        for _ in 1..k {
            let s = (0.05 + 9.95 * unit(rng)) * sigma;
            positions.push(positions[positions.len() - 1] + s);
        }
        let raw: Vec<f64> = if k == 2 { vec![1.0 + delta, 1.0 - delta] } else { vec![1.0 + delta, 1.0, 1.0 - delta] };
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let model = SourceModel::from_flat(1, positions, weights, sigma, photons)?;
        let (a, b) = certify_theorem2(&model, quad)?;
        out.push(a.with_float("delta", delta));
        out.push(b.with_float("delta", delta));
    }
    Ok(out)
}

/// Human-readable label for a claim identifier.
pub fn describe(claim: &str) -> String {
    match claim {
        "Additivity" => "information of independent outcomes adds".to_string(),
        "CohenConvexity" => "scalar information is strictly convex in the density".to_string(),
        "Theorem2A" => "blinking information exceeds cofluorescent information (matrix order)".to_string(),
        "Theorem2B" => "blinking information exceeds cofluorescent information (trace)".to_string(),
        "Theorem4A" => "blinking QFIM dominates cofluorescent QFIM (matrix order)".to_string(),
        "Theorem4B" => "blinking QFIM dominates cofluorescent QFIM (trace)".to_string(),
        "Invariance" => "single-source information is translation and rotation invariant".to_string(),
        "Theorem1ProofStep" => "rotated diagonal entries of the information gap are positive".to_string(),
        "AdvantageCorollary" => "blinking gives smaller bounds and larger efficiency".to_string(),
        other => format!("claim {other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{ShiftedGaussian, Uniform};
    use crate::psf::{AnisotropicGaussianPsf, GaussianPsf};

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::from_margin(2e-9, 1e-9), Verdict::Pass);
        assert_eq!(Verdict::from_margin(-2e-9, 1e-9), Verdict::Fail);
        assert_eq!(Verdict::from_margin(5e-10, 1e-9), Verdict::Indeterminate);
        assert_eq!(Verdict::from_margin(f64::NAN, 1e-9), Verdict::Indeterminate);
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1e-300, 123456.789, -2.5e20, 0.0, 1.0 / 3.0] {
            let s = Float(x).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(Float(1e-300).to_string(), "1e-300");
        assert_eq!(Float(0.5).to_string(), "0.5");
    }

    #[test]
    fn additivity_two_gaussians() {
        let a = ShiftedGaussian { parameters: 2, param: 0, offset: 0.0, sigma: 1.0 };
        let b = ShiftedGaussian { parameters: 2, param: 1, offset: 0.0, sigma: 2.0 };
        let c = certify_additivity(a, b, &[0.3, -0.2], &quad()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c}");
        let u = Uniform { parameters: 2, lo: -1.0, hi: 1.0 };
        let c = certify_additivity(a, u, &[0.3, -0.2], &quad()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c}");
    }

    #[test]
    fn cohen_shifted_gaussians() {
        let q1 = ShiftedGaussian { parameters: 1, param: 0, offset: -1.0, sigma: 1.0 };
        let q2 = ShiftedGaussian { parameters: 1, param: 0, offset: 1.0, sigma: 1.0 };
        let c = certify_cohen(&q1, &q2, 0.5, &[0.0], &quad()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c}");
        assert!(c.margin > 0.1);
        let c = certify_cohen(&q1, &q1, 0.5, &[0.0], &quad()).unwrap();
        assert_eq!(c.verdict, Verdict::Indeterminate, "{c}");
        assert!(certify_cohen(&q1, &q2, 1.0, &[0.0], &quad()).is_err());
    }

    #[test]
    fn theorem2_equal_brightness_passes() {
        let m = SourceModel::two_source_1d(1.0, 0.0, 1.0, 1000).unwrap();
        let (a, b) = certify_theorem2(&m, &quad()).unwrap();
        assert_eq!(a.verdict, Verdict::Pass, "{a}");
        assert_eq!(b.verdict, Verdict::Pass, "{b}");
        assert_eq!(a.scope, Scope::Theorem);
        let m = SourceModel::two_source_1d(1.0, 0.5, 1.0, 1000).unwrap();
        let (a, b) = certify_theorem2(&m, &quad()).unwrap();
        assert_eq!(a.scope, Scope::OutsideTheoremScope);
        assert_eq!(b.verdict, Verdict::Pass, "{b}");
    }

    #[test]
    fn theorem2_zero_separation_is_indeterminate() {
        let m = SourceModel::two_source_1d(0.0, 0.0, 1.0, 1000).unwrap();
        let (a, _) = certify_theorem2(&m, &quad()).unwrap();
        assert_eq!(a.verdict, Verdict::Indeterminate, "{a}");
    }

    #[test]
    fn theorem4_max_gap() {
        let e = core::f64::consts::E;
        let res = certify_theorem4(1e4, 1.0, 0.0, &[2.0, 0.0]).unwrap();
        let (a, b) = &res[0];
        assert_eq!(a.verdict, Verdict::Pass);
        assert_eq!(b.verdict, Verdict::Pass);
        // gap N/(2eσ²) normalized by Tr Q_blink = N/σ²
        assert!((b.margin - 1.0 / (2.0 * e)).abs() < 1e-15);
        let (a0, b0) = &res[1];
        assert_eq!(a0.verdict, Verdict::Indeterminate);
        assert_eq!(b0.verdict, Verdict::Indeterminate);
    }

    #[test]
    fn invariance_isotropic_and_anisotropic() {
        let positions = [[0.0, 0.0], [1.0, 0.5], [-2.0, 3.0], [0.25, -1.5], [4.0, 4.0]];
        let angles = [0.0, 0.7, 2.0];
        let iso = GaussianPsf::new(1.3, 2).unwrap();
        let c = certify_invariance(&iso, &positions, &angles, &quad()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c}");
        let aniso = AnisotropicGaussianPsf::new(1.0, 1.5).unwrap();
        let c = certify_invariance(&aniso, &positions, &angles, &quad()).unwrap();
        assert_eq!(c.verdict, Verdict::Fail, "{c}");
    }

    #[test]
    fn record_is_one_line() {
        let m = SourceModel::two_source_1d(1.0, 0.0, 1.0, 1000).unwrap();
        let (a, _) = certify_theorem2(&m, &quad()).unwrap();
        let r = a.to_record();
        assert!(!r.contains('\n'));
        assert!(r.starts_with("claim=Theorem2A verdict=PASS margin="));
    }
}
