//! Quantum Fisher information for two incoherent 1D sources (closed forms)
//! and for a single source in a pure state.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::matrix::{position_labels, SymMatrix};
use crate::psf::PsfAmplitude;
use crate::quad::{integrate, integrate_2d, panels_for, QuadratureSpec};

const NORM_TOL: f64 = 1e-6;

fn check_inputs(photons: f64, sigma: f64, delta: f64) -> CoreResult<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CoreError::Domain("sigma must be positive and finite"));
    }
    if !(delta.abs() < 1.0) {
        return Err(CoreError::Domain("brightness asymmetry must satisfy |delta| < 1"));
    }
    if !(photons > 0.0 && photons.is_finite()) {
        return Err(CoreError::Domain("photon budget must be positive"));
    }
    Ok(())
}

/// Overlap term `(1/8σ²)(1−δ²)s²·exp(−s²/4σ²)`.
pub fn beta(separation: f64, sigma: f64, delta: f64) -> CoreResult<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CoreError::Domain("sigma must be positive and finite"));
    }
    let s2 = separation * separation;
    let var = sigma * sigma;
    Ok((1.0 - delta * delta) * s2 * libm::exp(-s2 / (4.0 * var)) / (8.0 * var))
}

/// `(N/2σ²)·diag(1+δ, 1−δ)`. Equal to the blinking classical information.
pub fn qfim_blinking_1d(photons: f64, sigma: f64, delta: f64) -> CoreResult<SymMatrix> {
    check_inputs(photons, sigma, delta)?;
    let h = photons / (2.0 * sigma * sigma);
    SymMatrix::diagonal(position_labels(2, 1), &[h * (1.0 + delta), h * (1.0 - delta)])
}

/// `(N/2σ²)·[[1+δ−β, −β], [−β, 1−δ−β]]`.
pub fn qfim_cofluorescent_1d(photons: f64, sigma: f64, delta: f64, separation: f64) -> CoreResult<SymMatrix> {
    Ok(QfimClosedForm::cofluorescent(photons, sigma, delta, separation)?.matrix)
}

/// Closed-form two-source QFIM together with its β and δ.
#[derive(Clone, Debug, PartialEq)]
pub struct QfimClosedForm {
    pub matrix: SymMatrix,
    pub beta: f64,
    pub delta: f64,
}

impl QfimClosedForm {
    pub fn cofluorescent(photons: f64, sigma: f64, delta: f64, separation: f64) -> CoreResult<Self> {
        check_inputs(photons, sigma, delta)?;
        let b = beta(separation, sigma, delta)?;
        let h = photons / (2.0 * sigma * sigma);
        let matrix = SymMatrix::from_rows(
            position_labels(2, 1),
            &[&[h * (1.0 + delta - b), -h * b], &[-h * b, h * (1.0 - delta - b)]],
        )?;
        Ok(Self { matrix, beta: b, delta })
    }

    pub fn blinking(photons: f64, sigma: f64, delta: f64) -> CoreResult<Self> {
        Ok(Self { matrix: qfim_blinking_1d(photons, sigma, delta)?, beta: 0.0, delta })
    }
}

/// Overlaps of a single-source pure state `|Ψ⟩ = ∫ψ(r − r̄)|r⟩` and its
/// position derivatives.
#[derive(Clone, Debug, PartialEq)]
struct Overlaps {
    norm: f64,
    /// `⟨Ψ|∂_iΨ⟩`
    v: Vec<f64>,
    /// `⟨∂_iΨ|∂_jΨ⟩`, every ordered pair integrated separately.
    g: Vec<f64>,
}

fn overlaps<P: PsfAmplitude>(psf: &P, rbar: &[f64], quad: &QuadratureSpec) -> CoreResult<Overlaps> {
    quad.validate()?;
    let dim = psf.dim();
    if rbar.len() != dim {
        return Err(CoreError::DimensionMismatch { expected: dim, found: rbar.len() });
    }
    let n = 1 + dim + dim * dim;
    let e = psf.extent(quad);
    let w = psf.panel_width();
    let panels = panels_for(-e, e, w);
    let fill = |u: &[f64], out: &mut [f64]| {
        let mut grad = [0.0; 2];
        let psi = psf.eval(u, &mut grad[..dim]);
        // ∂ψ(r − r̄)/∂r̄ = −∇ψ
        let d: [f64; 2] = [-grad[0], -grad[1]];
        out[0] = psi * psi;
        for i in 0..dim {
            out[1 + i] = psi * d[i];
        }
        for i in 0..dim {
            for j in 0..dim {
                out[1 + dim + i * dim + j] = d[i] * d[j];
            }
        }
    };
    let values = match dim {
        1 => {
            integrate(
                |x, out: &mut [f64]| {
                    fill(&[x - rbar[0]], out);
                    Ok(())
                },
                rbar[0] - e,
                rbar[0] + e,
                n,
                panels,
                quad,
            )?
            .values
        }
        _ => {
            integrate_2d(
                |x, y, out: &mut [f64]| {
                    fill(&[x - rbar[0], y - rbar[1]], out);
                    Ok(())
                },
                (rbar[0] - e, rbar[0] + e),
                (rbar[1] - e, rbar[1] + e),
                n,
                (panels, panels),
                quad,
            )?
            .values
        }
    };
    Ok(Overlaps { norm: values[0], v: values[1..1 + dim].to_vec(), g: values[1 + dim..].to_vec() })
}

/// `4·(⟨∂_iΨ|∂_jΨ⟩ − ⟨∂_iΨ|Ψ⟩⟨Ψ|∂_jΨ⟩)` for a real amplitude, per photon.
pub fn qfim_pure_state<P: PsfAmplitude>(psf: &P, rbar: &[f64], quad: &QuadratureSpec) -> CoreResult<SymMatrix> {
    let ov = overlaps(psf, rbar, quad)?;
    if (ov.norm - 1.0).abs() > NORM_TOL {
        return Err(CoreError::Domain("impulse response is not square-normalized"));
    }
    let dim = psf.dim();
    let mut q = SymMatrix::zeros(position_labels(1, dim));
    for i in 0..dim {
        for j in i..dim {
            let sym = 0.5 * (ov.g[i * dim + j] + ov.g[j * dim + i]);
            q.set(i, j, 4.0 * (sym - ov.v[i] * ov.v[j]));
        }
    }
    Ok(q)
}

/// Largest `|⟨Ψ|[L_i, L_j]|Ψ⟩|` over parameter pairs, with
/// `L_i = |∂_iΨ⟩⟨Ψ| + |Ψ⟩⟨∂_iΨ|`. Zero means the position coordinates can
/// be estimated jointly at the quantum limit.
pub fn compatibility_check<P: PsfAmplitude>(psf: &P, rbar: &[f64], quad: &QuadratureSpec) -> CoreResult<f64> {
    let ov = overlaps(psf, rbar, quad)?;
    let dim = psf.dim();
    let n = ov.norm;
    // ⟨Ψ|L_i L_j|Ψ⟩ = n²·g_ij + 3n·v_i·v_j for real amplitudes.
    let lij = |i: usize, j: usize| n * n * ov.g[i * dim + j] + 3.0 * n * ov.v[i] * ov.v[j];
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            worst = worst.max((lij(i, j) - lij(j, i)).abs());
        }
    }
    Ok(worst)
}

/// Norm and first-moment overlaps of the amplitude; exposed for tests of
/// `⟨∂_iΨ|Ψ⟩ = 0`.
pub fn derivative_overlap<P: PsfAmplitude>(
    psf: &P,
    rbar: &[f64],
    quad: &QuadratureSpec,
) -> CoreResult<(f64, Vec<f64>)> {
    let ov = overlaps(psf, rbar, quad)?;
    Ok((ov.norm, ov.v))
}

/// Difference `Q_blink − Q_coflu` in the (x₁, x₂) basis.
pub fn qfim_gap_1d(photons: f64, sigma: f64, delta: f64, separation: f64) -> CoreResult<SymMatrix> {
    let blink = qfim_blinking_1d(photons, sigma, delta)?;
    let coflu = qfim_cofluorescent_1d(photons, sigma, delta, separation)?;
    blink.sub(&coflu)
}

/// `vec![β(s)]` over a grid, convenience for sweeps.
pub fn beta_grid(separations: &[f64], sigma: f64, delta: f64) -> CoreResult<Vec<f64>> {
    let mut out = vec![0.0; separations.len()];
    for (o, &s) in out.iter_mut().zip(separations) {
        *o = beta(s, sigma, delta)?;
    }
    Ok(out)
}
