//! CSV tables and atomic file output.

use std::io::Write;
use std::path::Path;

use fisherloc_core::text::Float;

use crate::error::Result;
use crate::sim::{BatchSummary, TrialBatch};

/// Shortest round-trip text for a float; `inf` marks unbounded values.
pub fn fmt_f64(x: f64) -> String {
    Float(x).to_string()
}

/// Header plus numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| fmt_f64(x)))?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so a failed write leaves nothing behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// One row per trial: index, estimate components, log-likelihood,
/// converged flag and exclusion reason.
pub fn trials_csv(batch: &TrialBatch) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["trial".to_string()];
    header.extend(batch.model.labels().iter().map(|l| format!("{l}_hat")));
    header.extend(["log_likelihood", "converged", "flag"].map(String::from));
    w.write_record(&header)?;
    for (t, o) in batch.outcomes.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(o.theta.iter().map(|&x| fmt_f64(x)));
        rec.push(fmt_f64(o.log_likelihood));
        rec.push(u8::from(o.converged).to_string());
        rec.push(o.flag.unwrap_or("").to_string());
        w.write_record(&rec)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// `key,value` records comparing the empirical covariance to the bound.
pub fn summary_records(s: &BatchSummary) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut push = |k: String, v: String| out.push((k, v));
    push("trials".into(), s.trials.to_string());
    push("accepted".into(), s.accepted.to_string());
    push("flagged".into(), s.flagged.to_string());
    push("low_statistics".into(), u8::from(s.low_statistics).to_string());
    let labels = s.information.labels().to_vec();
    let m = labels.len();
    for i in 0..m {
        for j in i..m {
            push(format!("cov_emp_{}_{}", labels[i], labels[j]), fmt_f64(s.empirical.get(i, j)));
        }
    }
    for i in 0..m {
        for j in i..m {
            let bounded = !s.bound.covariance.unbounded[i] && !s.bound.covariance.unbounded[j];
            let v = if bounded { s.bound.covariance.matrix.get(i, j) } else { f64::INFINITY };
            push(format!("crb_{}_{}", labels[i], labels[j]), fmt_f64(v));
        }
    }
    for (i, r) in s.variance_ratios.iter().enumerate() {
        push(format!("var_ratio_{}", labels[i]), fmt_f64(r.unwrap_or(f64::NAN)));
    }
    for (i, (b, se)) in s.bias.iter().zip(&s.bias_se).enumerate() {
        push(format!("bias_{}", labels[i]), fmt_f64(*b));
        push(format!("bias_se_{}", labels[i]), fmt_f64(*se));
    }
    let e = &s.empirical_h;
    let b = &s.bound_h;
    for (name, emp, bound, se) in [
        ("h_tot", e.h_tot, b.h_tot, s.h_se[0]),
        ("h_ind", e.h_ind, b.h_ind, s.h_se[1]),
        ("h_eig", e.h_eig, b.h_eig, s.h_se[2]),
    ] {
        push(format!("{name}_emp"), fmt_f64(emp));
        push(format!("{name}_emp_se"), fmt_f64(se));
        push(format!("{name}_bound"), fmt_f64(bound));
    }
    push("excess_min_eigenvalue".into(), fmt_f64(s.excess_min_eigenvalue));
    push("excess_se".into(), fmt_f64(s.excess_se));
    out
}

pub fn summary_csv(s: &BatchSummary) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])?;
    for (k, v) in summary_records(s) {
        w.write_record([k, v])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}
