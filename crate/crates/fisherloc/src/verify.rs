//! Certification runs over configuration grids.

use clap::ValueEnum;
use fisherloc_core::family::{Binomial, ShiftedGaussian, Uniform};
use fisherloc_core::fim::{fim_blinking_expected, fim_cofluorescent};
use fisherloc_core::model::SourceModel;
use fisherloc_core::psf::{AnisotropicGaussianPsf, GaussianPsf};
use fisherloc_core::quad::QuadratureSpec;
use fisherloc_core::theorems::{
    certify_additivity, certify_advantage, certify_cohen, certify_invariance, certify_rotated_diagonals,
    certify_theorem2, certify_theorem4, counterexample_search, Certificate, Verdict,
};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sample::trial_rng;
use crate::sweep::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum)]
pub enum Suite {
    Additivity,
    Cohen,
    Invariance,
    Theorem2,
    ProofStep,
    Advantage,
    Theorem4,
    /// Invariance of an anisotropic Gaussian; expected to FAIL.
    Anisotropic,
    /// Randomized counterexample search for the blinking inequalities.
    Search,
}

impl Suite {
    pub fn default_set() -> Vec<Suite> {
        vec![
            Suite::Additivity,
            Suite::Cohen,
            Suite::Invariance,
            Suite::Theorem2,
            Suite::ProofStep,
            Suite::Advantage,
            Suite::Theorem4,
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    /// Separations in units of σ.
    pub grid: Grid,
    pub deltas: Vec<f64>,
    pub sigma: f64,
    pub photons: u64,
    pub quad: QuadratureSpec,
    pub seed: u64,
    pub search_configurations: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suites: Suite::default_set(),
            grid: Grid::default(),
            deltas: vec![0.0, 0.25, 0.5, 0.75],
            sigma: 1.0,
            photons: 10_000,
            quad: QuadratureSpec::default(),
            seed: 0,
            search_configurations: 200,
        }
    }
}

/// Exit status for a certificate stream: 3 if any FAIL, else 0.
pub fn exit_code(certs: &[Certificate]) -> i32 {
    if certs.iter().any(|c| c.verdict == Verdict::Fail) {
        3
    } else {
        0
    }
}

fn sample_positions() -> [[f64; 2]; 5] {
    [[0.0, 0.0], [1.0, 0.5], [-2.0, 3.0], [0.25, -1.5], [4.0, 4.0]]
}

const ANGLES: [f64; 3] = [0.0, 0.7, 2.0];

fn grid_models(cfg: &VerifyConfig) -> Result<Vec<SourceModel>> {
    let mut out = Vec::new();
    for &d in &cfg.deltas {
        for s in cfg.grid.points() {
            out.push(SourceModel::two_source_1d(s * cfg.sigma, d, cfg.sigma, cfg.photons)?);
        }
    }
    Ok(out)
}

fn suite(cfg: &VerifyConfig, which: Suite) -> Result<Vec<Certificate>> {
    let q = &cfg.quad;
    Ok(match which {
        Suite::Additivity => {
            let a = ShiftedGaussian { parameters: 2, param: 0, offset: 0.0, sigma: cfg.sigma };
            let b = ShiftedGaussian { parameters: 2, param: 1, offset: 0.5, sigma: 2.0 * cfg.sigma };
            let u = Uniform { parameters: 2, lo: -1.0, hi: 1.0 };
            let p = Binomial { parameters: 1, param: 0, trials: 12 };
            vec![
                certify_additivity(a, b, &[0.3, -0.2], q)?,
                certify_additivity(a, a, &[0.3, -0.2], q)?,
                certify_additivity(a, u, &[0.3, -0.2], q)?,
                certify_additivity(p, p, &[0.35], q)?,
            ]
        }
        Suite::Cohen => {
            let q1 = ShiftedGaussian { parameters: 1, param: 0, offset: -cfg.sigma, sigma: cfg.sigma };
            let q2 = ShiftedGaussian { parameters: 1, param: 0, offset: cfg.sigma, sigma: cfg.sigma };
            vec![
                certify_cohen(&q1, &q2, 0.5, &[0.0], q)?,
                certify_cohen(&q1, &q2, 0.2, &[0.0], q)?,
                certify_cohen(&q1, &q1, 0.5, &[0.0], q)?,
            ]
        }
        Suite::Invariance => {
            let psf = GaussianPsf::new(cfg.sigma, 2)?;
            vec![certify_invariance(&psf, &sample_positions(), &ANGLES, q)?]
        }
        Suite::Anisotropic => {
            let psf = AnisotropicGaussianPsf::new(cfg.sigma, 1.5 * cfg.sigma)?;
            vec![certify_invariance(&psf, &sample_positions(), &ANGLES, q)?]
        }
        Suite::Theorem2 => {
            let models = grid_models(cfg)?;
            let pairs = models.par_iter().map(|m| Ok(certify_theorem2(m, q)?)).collect::<Result<Vec<_>>>()?;
            pairs.into_iter().flat_map(|(a, b)| [a, b]).collect()
        }
        Suite::ProofStep => {
            let models = grid_models(cfg)?;
            models
                .par_iter()
                .map(|m| Ok(certify_rotated_diagonals(&fim_blinking_expected(m), &fim_cofluorescent(m, q)?)?))
                .collect::<Result<Vec<_>>>()?
        }
        Suite::Advantage => {
            let models = grid_models(cfg)?;
            models.par_iter().map(|m| Ok(certify_advantage(m, q)?)).collect::<Result<Vec<_>>>()?
        }
        Suite::Theorem4 => {
            let mut out = Vec::new();
            for &d in &cfg.deltas {
                let seps: Vec<f64> = cfg.grid.points().iter().map(|s| s * cfg.sigma).collect();
                for (a, b) in certify_theorem4(cfg.photons as f64, cfg.sigma, d, &seps)? {
                    out.push(a);
                    out.push(b);
                }
            }
            out
        }
        Suite::Search => {
            let mut rng = trial_rng(cfg.seed, 0);
            counterexample_search(&mut rng, cfg.search_configurations, cfg.sigma, cfg.photons, q)?
        }
    })
}

/// Runs the selected suites in order.
pub fn run_verify(cfg: &VerifyConfig) -> Result<Vec<Certificate>> {
    cfg.grid.validate()?;
    if cfg.deltas.iter().any(|d| !(d.abs() < 1.0)) {
        return Err(Error::usage("every delta must satisfy |delta| < 1"));
    }
    let mut out = Vec::new();
    for &s in &cfg.suites {
        out.extend(suite(cfg, s)?);
    }
    Ok(out)
}
