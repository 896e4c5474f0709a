//! Monte Carlo batches of estimation sessions and their comparison with the
//! Cramér–Rao bound.

use std::f64::consts::PI;

use fisherloc_core::fim::{fim_blinking, fim_cofluorescent, Scenario};
use fisherloc_core::matrix::SymMatrix;
use fisherloc_core::metrology::{efficiency, invert_info, BoundReport, Covariance, EfficiencyReport};
use fisherloc_core::mle::{align_to_truth, covariance_about, mle_blinking, mle_cofluorescent, OptimizerSettings};
use fisherloc_core::model::SourceModel;
use fisherloc_core::quad::QuadratureSpec;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sample::{sample_with, trial_rng};
use crate::stats::{covariance_se_along, jackknife_h};

/// Batches below this many accepted trials are flagged low-statistics.
pub const LOW_STATISTICS: usize = 30;

/// Result of one estimation session.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    /// Estimate, relabelled against the truth when labels are exchangeable.
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Reason the trial is excluded from the covariance, if any.
    pub flag: Option<&'static str>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialBatch {
    pub trials: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub model: SourceModel,
    pub settings: OptimizerSettings,
    pub outcomes: Vec<TrialOutcome>,
    /// Empirical covariance of `θ̂ − θ` over accepted trials, about the truth.
    pub covariance: SymMatrix,
}

impl TrialBatch {
    pub fn accepted(&self) -> impl Iterator<Item = &TrialOutcome> {
        self.outcomes.iter().filter(|o| o.flag.is_none())
    }

    pub fn flagged(&self) -> Vec<usize> {
        self.outcomes.iter().enumerate().filter(|(_, o)| o.flag.is_some()).map(|(i, _)| i).collect()
    }

    /// Per-trial errors `θ̂ − θ` of accepted trials.
    pub fn errors(&self) -> Vec<Vec<f64>> {
        let truth = self.model.theta();
        self.accepted().map(|o| o.theta.iter().zip(truth).map(|(a, b)| a - b).collect()).collect()
    }
}

fn exchangeable(model: &SourceModel) -> bool {
    let w = model.weights();
    w.iter().all(|&x| (x - w[0]).abs() <= 1e-12)
}

/// One session: sample, estimate, align.
pub fn run_trial(
    model: &SourceModel,
    scenario: &Scenario,
    seed: u64,
    trial: u64,
    settings: &OptimizerSettings,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(seed, trial);
    let detections = sample_with(model, scenario, &mut rng)?;
    let dim = model.dim();
    let var = model.sigma() * model.sigma();
    let norm = -0.5 * dim as f64 * (2.0 * PI * var).ln();
    let mut out = match scenario {
        Scenario::Blinking { .. } => {
            let est = mle_blinking(&detections, model)?;
            let mut ll = 0.0;
            for d in &detections {
                if let fisherloc_core::model::Window::Source(k) = d.window {
                    let p = &est.theta[k * dim..(k + 1) * dim];
                    let d2: f64 = d.point(dim).iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                    ll += norm - 0.5 * d2 / var;
                }
            }
            TrialOutcome {
                flag: (!est.unestimable.is_empty()).then_some("empty window"),
                theta: est.theta,
                log_likelihood: ll,
                converged: true,
            }
        }
        Scenario::Cofluorescent => {
            let r = mle_cofluorescent(&detections, model, settings, &mut rng)?;
            TrialOutcome {
                flag: (!r.converged).then_some("optimizer did not converge"),
                log_likelihood: r.log_likelihood + norm * detections.len() as f64,
                theta: r.theta,
                converged: r.converged,
            }
        }
    };
    if exchangeable(model) && out.flag.is_none() {
        out.theta = align_to_truth(&out.theta, model.theta(), dim);
    }
    Ok(out)
}

pub fn run_batch(model: &SourceModel, scenario: &Scenario, trials: usize, seed: u64) -> Result<TrialBatch> {
    run_batch_with(model, scenario, trials, seed, &OptimizerSettings::default())
}

/// Runs `trials` independent sessions in parallel and merges them in trial
/// order.
pub fn run_batch_with(
    model: &SourceModel,
    scenario: &Scenario,
    trials: usize,
    seed: u64,
    settings: &OptimizerSettings,
) -> Result<TrialBatch> {
    if trials < 2 {
        return Err(Error::usage("at least two trials are required"));
    }
    scenario.validate(model)?;
    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(model, scenario, seed, t, settings))
        .collect::<Result<_>>()?;
    let accepted: Vec<Vec<f64>> = outcomes.iter().filter(|o| o.flag.is_none()).map(|o| o.theta.clone()).collect();
    let covariance = if accepted.is_empty() {
        SymMatrix::zeros(model.labels())
    } else {
        covariance_about(&accepted, model.theta())?.with_labels(model.labels())?
    };
    Ok(TrialBatch {
        trials,
        seed,
        scenario: scenario.clone(),
        model: model.clone(),
        settings: *settings,
        outcomes,
        covariance,
    })
}

/// Information matrix of the batch's scenario.
pub fn batch_information(batch: &TrialBatch, quad: &QuadratureSpec) -> Result<SymMatrix> {
    Ok(match &batch.scenario {
        Scenario::Blinking { counts } => fim_blinking(&batch.model, counts)?,
        Scenario::Cofluorescent => fim_cofluorescent(&batch.model, quad)?,
    })
}

/// Empirical covariance against the Cramér–Rao bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSummary {
    pub trials: usize,
    pub accepted: usize,
    pub flagged: usize,
    pub low_statistics: bool,
    pub empirical: SymMatrix,
    pub information: SymMatrix,
    pub bound: BoundReport,
    /// `Var_emp / L_ii`, `None` where the bound is unbounded.
    pub variance_ratios: Vec<Option<f64>>,
    pub empirical_h: EfficiencyReport,
    /// H measures of `F⁻¹` itself.
    pub bound_h: EfficiencyReport,
    /// Jackknife standard errors of the empirical H measures.
    pub h_se: [f64; 3],
    pub bias: Vec<f64>,
    pub bias_se: Vec<f64>,
    /// Smallest eigenvalue of `Cov_emp − F⁻¹` and its standard error.
    pub excess_min_eigenvalue: f64,
    pub excess_se: f64,
}

pub fn summarize(batch: &TrialBatch, quad: &QuadratureSpec) -> Result<BatchSummary> {
    let info = batch_information(batch, quad)?;
    let bound = invert_info(&info)?;
    let errors = batch.errors();
    let t = errors.len();
    let m = batch.model.parameters();
    let emp = batch.covariance.clone();
    let variance_ratios = bound.variances.iter().enumerate().map(|(i, l)| l.map(|l| emp.get(i, i) / l)).collect();
    let empirical_h = efficiency(&Covariance::new(emp.clone()), &info)?;
    let bound_h = efficiency(&bound.covariance, &info)?;
    let h_se = if t >= 4 { jackknife_h(&errors, 50)? } else { [f64::NAN; 3] };
    let mut bias = vec![0.0; m];
    for e in &errors {
        for i in 0..m {
            bias[i] += e[i] / t.max(1) as f64;
        }
    }
    let bias_se = (0..m).map(|i| (emp.get(i, i) / t.max(1) as f64).sqrt()).collect();
    let (excess_min_eigenvalue, excess_se) = if bound.rank == m && t >= 2 {
        let diff = emp.sub(&bound.covariance.matrix)?;
        let eig = diff.eigen()?;
        let v = eig.vector(m - 1);
        (eig.values[m - 1], covariance_se_along(&emp, &v, t))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(BatchSummary {
        trials: batch.trials,
        accepted: t,
        flagged: batch.trials - t,
        low_statistics: t < LOW_STATISTICS,
        empirical: emp,
        information: info,
        bound,
        variance_ratios,
        empirical_h,
        bound_h,
        h_se,
        bias,
        bias_se,
        excess_min_eigenvalue,
        excess_se,
    })
}
