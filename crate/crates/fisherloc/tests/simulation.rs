use fisherloc::output::{summary_records, trials_csv};
use fisherloc::sample::{sample_photons, sample_with, trial_rng};
use fisherloc::sim::{run_batch, run_trial, summarize};
use fisherloc_core::fim::{fim_cofluorescent, Scenario};
use fisherloc_core::metrology::invert_info;
use fisherloc_core::mle::{mle_cofluorescent, OptimizerSettings};
use fisherloc_core::model::{SourceModel, Window};
use fisherloc_core::quad::QuadratureSpec;

fn mean_var(xs: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var, n)
}

#[test]
fn blinking_counts_follow_the_windows() {
    let m = SourceModel::new(1, &[&[0.0], &[3.0]], &[1.0, 0.0], 1.0, 10).unwrap();
    let d = sample_photons(&m, &Scenario::Blinking { counts: vec![10, 0] }, 1).unwrap();
    assert_eq!(d.len(), 10);
    assert!(d.iter().all(|p| p.window == Window::Source(0)));

    let m = SourceModel::two_source_1d(2.0, 0.2, 1.0, 1000).unwrap();
    let d = sample_photons(&m, &Scenario::blinking_for(&m), 1).unwrap();
    assert_eq!(d.iter().filter(|p| p.window == Window::Source(0)).count(), 600);
    assert_eq!(d.iter().filter(|p| p.window == Window::Source(1)).count(), 400);
}

#[test]
fn cofluorescent_draws_have_mixture_moments() {
    let a = 1.5;
    let m = SourceModel::two_source_1d(2.0 * a, 0.0, 1.0, 1_000_000).unwrap();
    let d = sample_photons(&m, &Scenario::Cofluorescent, 9).unwrap();
    assert!(d.iter().all(|p| p.window == Window::Mixed));
    let (mean, var, n) = mean_var(d.iter().map(|p| p.point(1)[0]));
    assert!(mean.abs() < 5.0 * ((1.0 + a * a) / n).sqrt(), "{mean}");
    // Central fourth moment of the two-point mixture: 3 + 6a² + a⁴.
    let m4 = 3.0 + 6.0 * a * a + a.powi(4);
    let v = 1.0 + a * a;
    assert!((var - v).abs() < 5.0 * ((m4 - v * v) / n).sqrt(), "{var}");
}

#[test]
fn single_source_draws_have_psf_variance() {
    let sigma = 1.7;
    let m = SourceModel::new(2, &[&[1.0, -2.0]], &[1.0], sigma, 200_000).unwrap();
    let d = sample_photons(&m, &Scenario::Cofluorescent, 3).unwrap();
    for axis in 0..2 {
        let (mean, var, n) = mean_var(d.iter().map(|p| p.point(2)[axis]));
        let truth = m.position(0)[axis];
        assert!((mean - truth).abs() < 5.0 * sigma / n.sqrt());
        assert!((var - sigma * sigma).abs() < 5.0 * sigma * sigma * (2.0 / n).sqrt(), "{var}");
    }
}

#[test]
fn trial_streams_are_independent_of_order() {
    let m = SourceModel::two_source_1d(1.0, 0.0, 1.0, 50).unwrap();
    let s = Scenario::Cofluorescent;
    let first = sample_with(&m, &s, &mut trial_rng(7, 3)).unwrap();
    let _ = sample_with(&m, &s, &mut trial_rng(7, 2)).unwrap();
    assert_eq!(first, sample_with(&m, &s, &mut trial_rng(7, 3)).unwrap());
    assert_ne!(first, sample_with(&m, &s, &mut trial_rng(7, 4)).unwrap());
}

#[test]
fn empty_window_is_flagged_not_imputed() {
    let m = SourceModel::two_source_1d(2.0, 0.0, 1.0, 10).unwrap();
    let t = run_trial(&m, &Scenario::Blinking { counts: vec![10, 0] }, 0, 0, &OptimizerSettings::default()).unwrap();
    assert_eq!(t.flag, Some("empty window"));
    assert!(t.theta[1].is_nan());
    assert!(t.theta[0].is_finite());
}

#[test]
fn single_source_estimate_is_the_sample_mean() {
    let m = SourceModel::new(1, &[&[0.4]], &[1.0], 1.0, 5000).unwrap();
    let mut rng = trial_rng(2, 0);
    let d = sample_with(&m, &Scenario::Cofluorescent, &mut rng).unwrap();
    let (mean, _, _) = mean_var(d.iter().map(|p| p.point(1)[0]));
    let r = mle_cofluorescent(&d, &m, &OptimizerSettings::default(), &mut rng).unwrap();
    assert!(r.converged);
    assert!((r.theta[0] - mean).abs() < 1e-9);
}

#[test]
fn separated_sources_are_found_within_five_bound_widths() {
    let m = SourceModel::two_source_1d(4.0, 0.0, 1.0, 10_000).unwrap();
    let crb = invert_info(&fim_cofluorescent(&m, &QuadratureSpec::default()).unwrap()).unwrap();
    for trial in 0..5 {
        let t = run_trial(&m, &Scenario::Cofluorescent, 21, trial, &OptimizerSettings::default()).unwrap();
        assert!(t.converged);
        for i in 0..2 {
            assert!((t.theta[i] - m.theta()[i]).abs() < 5.0 * crb.variances[i].unwrap().sqrt());
        }
    }
}

#[test]
fn batches_are_reproducible() {
    let m = SourceModel::two_source_1d(1.5, 0.3, 1.0, 2000).unwrap();
    let a = run_batch(&m, &Scenario::Cofluorescent, 6, 17).unwrap();
    let b = run_batch(&m, &Scenario::Cofluorescent, 6, 17).unwrap();
    assert_eq!(a, b);
    assert_eq!(trials_csv(&a).unwrap(), trials_csv(&b).unwrap());
    let c = run_batch(&m, &Scenario::Cofluorescent, 6, 18).unwrap();
    assert_ne!(a.outcomes, c.outcomes);
}

#[test]
fn blinking_batch_is_unbiased_and_near_the_bound() {
    let m = SourceModel::two_source_1d(1.0, 0.0, 1.0, 10_000).unwrap();
    let batch = run_batch(&m, &Scenario::blinking_for(&m), 2000, 1).unwrap();
    let s = summarize(&batch, &QuadratureSpec::default()).unwrap();
    assert_eq!(s.accepted, 2000);
    assert!(!s.low_statistics);
    for i in 0..2 {
        assert!(s.bias[i].abs() <= 3.0 * s.bias_se[i], "{} {}", s.bias[i], s.bias_se[i]);
        let r = s.variance_ratios[i].unwrap();
        assert!((0.9..=1.1).contains(&r), "{r}");
    }
    let h = &s.empirical_h;
    assert!(h.h_tot <= h.h_ind && h.h_ind <= h.h_eig);
    let keys: Vec<String> = summary_records(&s).into_iter().map(|(k, _)| k).collect();
    assert!(keys.contains(&"var_ratio_x1".to_string()));
}

#[test]
fn too_few_trials_is_a_usage_error() {
    let m = SourceModel::two_source_1d(1.0, 0.0, 1.0, 100).unwrap();
    let e = run_batch(&m, &Scenario::Cofluorescent, 1, 0).unwrap_err();
    assert_eq!(e.exit_code(), 1);
}
