//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands on finite intervals, with a nested tensor form for rectangles.
//!
//! All components share the subdivision. The error estimate per panel is the
//! largest `|K15 − G7|` over components and convergence is judged against
//! `max(abs_tol, rel_tol·‖I‖∞)`, so small entries of a matrix integrand are
//! resolved to an accuracy relative to its largest entry.

#![allow(clippy::excessive_precision)]

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_PANELS: usize = 20_000;

/// Tolerances and integration box for the information integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Box half-width beyond the extreme source positions, in units of σ.
    pub half_width: f64,
    /// Maximum number of bisections of an initial panel.
    pub max_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-14, half_width: 8.0, max_depth: 40 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> CoreResult<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(CoreError::Domain("quadrature tolerances must be positive"));
        }
        if !(self.half_width >= 5.0) {
            return Err(CoreError::Domain("quadrature half-width must be at least 5 sigma"));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Result of a vector integral.
#[derive(Clone, Debug, PartialEq)]
pub struct Integral {
    pub values: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    values: Vec<f64>,
    error: f64,
}

fn gk15<F>(f: &mut F, a: f64, b: f64, n: usize, buf: &mut [f64]) -> CoreResult<(Vec<f64>, f64)>
where
    F: FnMut(f64, &mut [f64]) -> CoreResult<()>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = vec![0.0; n];
    let mut gauss = vec![0.0; n];

    f(centre, buf)?;
    for c in 0..n {
        kronrod[c] += WGK[7] * buf[c];
        gauss[c] += WG[3] * buf[c];
    }
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        for point in [centre - dx, centre + dx] {
            f(point, buf)?;
            for c in 0..n {
                kronrod[c] += w * buf[c];
                if j % 2 == 1 {
                    gauss[c] += WG[j / 2] * buf[c];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for c in 0..n {
        kronrod[c] *= half;
        gauss[c] *= half;
        err = err.max((kronrod[c] - gauss[c]).abs());
    }
    Ok((kronrod, err))
}

/// Integrates an `n`-component function over `[a, b]`, starting from
/// `initial_panels` equal panels.
pub fn integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    n: usize,
    initial_panels: usize,
    spec: &QuadratureSpec,
) -> CoreResult<Integral>
where
    F: FnMut(f64, &mut [f64]) -> CoreResult<()>,
{
    let initial_panels = initial_panels.max(1);
    let mut buf = vec![0.0; n];
    let mut panels: Vec<Panel> = Vec::with_capacity(initial_panels * 4);
    let width = (b - a) / initial_panels as f64;
    for p in 0..initial_panels {
        let pa = a + width * p as f64;
        let pb = if p + 1 == initial_panels { b } else { pa + width };
        let (values, error) = gk15(&mut f, pa, pb, n, &mut buf)?;
        panels.push(Panel { a: pa, b: pb, depth: 0, values, error });
    }
    let mut evaluations = 15 * initial_panels;

    loop {
        let mut total = vec![0.0; n];
        let mut total_err = 0.0;
        for p in &panels {
            for (t, v) in total.iter_mut().zip(&p.values) {
                *t += v;
            }
            total_err += p.error;
        }
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let target = spec.abs_tol.max(spec.rel_tol * scale);
        if total_err <= target {
            return Ok(Integral { values: total, error: total_err, evaluations });
        }

        // Worst panel that may still be split.
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < spec.max_depth && p.error > 0.0)
            .max_by(|(_, x), (_, y)| x.error.total_cmp(&y.error))
            .map(|(i, _)| i);
        let Some(idx) = worst else {
            return Err(CoreError::QuadratureDiverged { achieved: total_err, requested: target });
        };
        if panels.len() >= MAX_PANELS {
            return Err(CoreError::QuadratureDiverged { achieved: total_err, requested: target });
        }

        let parent = panels.swap_remove(idx);
        let mid = 0.5 * (parent.a + parent.b);
        let (lv, le) = gk15(&mut f, parent.a, mid, n, &mut buf)?;
        let (rv, re) = gk15(&mut f, mid, parent.b, n, &mut buf)?;
        evaluations += 30;
        panels.push(Panel { a: parent.a, b: mid, depth: parent.depth + 1, values: lv, error: le });
        panels.push(Panel { a: mid, b: parent.b, depth: parent.depth + 1, values: rv, error: re });
        // Keep panel order tied to position so summation order is fixed.
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    }
}

/// Integrates over the rectangle `[ax,bx]×[ay,by]` as an outer integral in
/// `y` of inner integrals in `x`.
pub fn integrate_2d<F>(
    mut f: F,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    n: usize,
    initial_panels: (usize, usize),
    spec: &QuadratureSpec,
) -> CoreResult<Integral>
where
    F: FnMut(f64, f64, &mut [f64]) -> CoreResult<()>,
{
    let inner_spec = QuadratureSpec { rel_tol: spec.rel_tol * 0.1, ..*spec };
    let mut inner_evals = 0usize;
    let mut outer = integrate(
        |y, out: &mut [f64]| {
            let inner = integrate(|x, o: &mut [f64]| f(x, y, o), ax, bx, n, initial_panels.0, &inner_spec)?;
            inner_evals += inner.evaluations;
            out.copy_from_slice(&inner.values);
            Ok(())
        },
        ay,
        by,
        n,
        initial_panels.1,
        spec,
    )?;
    outer.evaluations = inner_evals;
    Ok(outer)
}

/// Panel count giving panels of about one σ across `[a, b]`.
pub(crate) fn panels_for(a: f64, b: f64, sigma: f64) -> usize {
    let count = libm::ceil((b - a) / sigma);
    if count.is_finite() && count >= 1.0 {
        (count as usize).min(4096)
    } else {
        1
    }
}
