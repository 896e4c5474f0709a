use std::f64::consts::{E, FRAC_PI_4};

use fisherloc_core::family::{Binomial, ShiftedGaussian, Uniform};
use fisherloc_core::fim::{
    fim_blinking, fim_blinking_expected, fim_cofluorescent, fim_functional, rotate_fim, rotation_matrix, Scenario,
};
use fisherloc_core::matrix::{generic_labels, SymMatrix};
use fisherloc_core::metrology::{eigen_analysis, invert_info};
use fisherloc_core::model::SourceModel;
use fisherloc_core::qfim::{beta, qfim_blinking_1d, qfim_cofluorescent_1d};
use fisherloc_core::quad::QuadratureSpec;
use fisherloc_core::theorems::{certify_additivity, certify_theorem2, Verdict};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn coincident_sources_give_rank_one_limit() {
    for d in [0.0, 0.5] {
        let m = SourceModel::two_source_1d(1e-4, d, 1.0, 10_000).unwrap();
        let f = fim_cofluorescent(&m, &QuadratureSpec::default()).unwrap();
        let w = m.weights();
        for i in 0..2 {
            for j in 0..2 {
                assert!(rel(f.get(i, j), 1e4 * w[i] * w[j]) < 1e-3);
            }
        }
        let eig = f.eigen().unwrap();
        assert!(eig.values[1] < 1e-6 * f.trace());
        let r = invert_info(&f).unwrap();
        assert!(r.variances.iter().all(Option::is_none) || eig.values[1] > 1e-12 * eig.values[0]);
    }
}

#[test]
fn exact_zero_separation_is_unbounded() {
    let m = SourceModel::two_source_1d(0.0, 0.0, 1.0, 100).unwrap();
    let f = fim_cofluorescent(&m, &QuadratureSpec::default()).unwrap();
    let r = invert_info(&f).unwrap();
    assert_eq!(r.rank, 1);
    assert_eq!(r.variances, [None, None]);
}

#[test]
fn distant_sources_recover_blinking() {
    for d in [0.0, 0.2, 0.5] {
        let m = SourceModel::two_source_1d(12.0, d, 1.0, 10_000).unwrap();
        let f = fim_cofluorescent(&m, &QuadratureSpec::default()).unwrap();
        let b = fim_blinking_expected(&m);
        assert!(f.sub(&b).unwrap().max_abs() < 1e-6 * b.max_abs());
    }
}

#[test]
fn blinking_forms_agree() {
    for d in [0.0, 0.2, 0.5] {
        let m = SourceModel::two_source_1d(1.0, d, 1.0, 10_000).unwrap();
        let counts = [(5000.0 * (1.0 + d)) as u64, (5000.0 * (1.0 - d)) as u64];
        let f = fim_blinking(&m, &counts).unwrap();
        let q = qfim_blinking_1d(1e4, 1.0, d).unwrap();
        assert_eq!(Scenario::blinking_for(&m), Scenario::Blinking { counts: counts.to_vec() });
        for (a, b) in [(f.get(0, 0), 5000.0 * (1.0 + d)), (f.get(1, 1), 5000.0 * (1.0 - d))] {
            assert!(rel(a, b) < 1e-12);
        }
        assert!(rel(q.get(0, 0), f.get(0, 0)) < 1e-12 && rel(q.get(1, 1), f.get(1, 1)) < 1e-12);
    }
}

#[test]
fn rotated_identities() {
    let o = rotation_matrix(FRAC_PI_4);
    for d in [0.0, 0.3, 0.8] {
        let h = 1e4 / 2.0;
        let fb = rotate_fim(&qfim_blinking_1d(1e4, 1.0, d).unwrap(), &o).unwrap();
        let want = [[h, -h * d], [-h * d, h]];
        for s in [0.3, 2.0, 5.0] {
            let b = beta(s, 1.0, d).unwrap();
            let fc = rotate_fim(&qfim_cofluorescent_1d(1e4, 1.0, d, s).unwrap(), &o).unwrap();
            let wc = [[h * (1.0 - 2.0 * b), -h * d], [-h * d, h]];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((fb.get(i, j) - want[i][j]).abs() <= 1e-12 * h);
                    assert!((fc.get(i, j) - wc[i][j]).abs() <= 1e-12 * h);
                }
            }
        }
        let l = invert_info(&fb).unwrap();
        let l0 = 2.0 / 1e4;
        for v in l.variances {
            assert!(rel(v.unwrap(), l0 / (1.0 - d * d)) < 1e-12);
        }
    }
}

#[test]
fn xi_tends_to_zero_at_large_separation() {
    let m = SourceModel::two_source_1d(8.0, 0.5, 1.0, 1000).unwrap();
    let f = fim_cofluorescent(&m, &QuadratureSpec::default()).unwrap();
    assert!(eigen_analysis(&f).unwrap().xi.unwrap().abs() < 1e-3);
    let m = SourceModel::two_source_1d(0.2, 0.0, 1.0, 1000).unwrap();
    let f = fim_cofluorescent(&m, &QuadratureSpec::default()).unwrap();
    assert!(rel(eigen_analysis(&f).unwrap().xi.unwrap(), FRAC_PI_4) < 1e-9);
}

#[test]
fn qfim_gap_maximum() {
    for d in [0.0, 0.4] {
        let gap = |s: f64| {
            qfim_blinking_1d(1e4, 1.0, d).unwrap().trace() - qfim_cofluorescent_1d(1e4, 1.0, d, s).unwrap().trace()
        };
        let peak = 1e4 * (1.0 - d * d) / (2.0 * E);
        assert!((gap(2.0) - peak).abs() < 1e-9 * peak);
        assert!(gap(1.99) < gap(2.0) && gap(2.01) < gap(2.0));
    }
}

#[test]
fn far_separation_margins_vanish_from_above() {
    let m = SourceModel::two_source_1d(20.0, 0.0, 1.0, 1000).unwrap();
    let (a, b) = certify_theorem2(&m, &QuadratureSpec::default()).unwrap();
    assert!(a.margin.abs() < 1e-9 && b.margin.abs() < 1e-9, "{a} {b}");
    assert_ne!(a.verdict, Verdict::Fail);
}

#[test]
fn additivity_examples() {
    let q = QuadratureSpec::default();
    let g = ShiftedGaussian { parameters: 1, param: 0, offset: 0.0, sigma: 1.0 };
    let f1 = fim_functional(&g, &[0.0], &q).unwrap();
    let prod = fisherloc_core::family::Product::new(g, g).unwrap();
    let f2 = fim_functional(&prod, &[0.0], &q).unwrap();
    assert!(rel(f2.get(0, 0), 2.0 * f1.get(0, 0)) < 1e-9);
    let u = Uniform { parameters: 1, lo: -2.0, hi: 2.0 };
    assert_eq!(certify_additivity(g, u, &[0.0], &q).unwrap().verdict, Verdict::Pass);
    let b = Binomial { parameters: 1, param: 0, trials: 9 };
    let fb = fim_functional(&b, &[0.3], &q).unwrap();
    assert!(rel(fb.get(0, 0), 9.0 / (0.3 * 0.7)) < 1e-12);
    assert_eq!(certify_additivity(b, b, &[0.3], &q).unwrap().verdict, Verdict::Pass);
}

#[test]
fn one_zero_row_leaves_others_bounded() {
    let f = SymMatrix::from_rows(generic_labels(2), &[&[600.0, 0.0], &[0.0, 0.0]]).unwrap();
    let r = invert_info(&f).unwrap();
    assert!(rel(r.variances[0].unwrap(), 1.0 / 600.0) < 1e-15);
    assert!(r.variances[1].is_none());
}
