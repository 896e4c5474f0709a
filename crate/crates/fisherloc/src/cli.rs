//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fisherloc_core::fim::{fim_blinking, fim_cofluorescent, Scenario};
use fisherloc_core::matrix::SymMatrix;
use fisherloc_core::metrology::{efficiency_at_bound, eigen_analysis, invert_info};
use fisherloc_core::mle::OptimizerSettings;
use fisherloc_core::model::SourceModel;
use fisherloc_core::psf::GaussianPsf;
use fisherloc_core::qfim::{qfim_pure_state, QfimClosedForm};
use fisherloc_core::quad::QuadratureSpec;
use fisherloc_core::text::{Float, FloatList};

use crate::error::{Error, Result};
use crate::output::{summary_csv, summary_records, trials_csv, write_atomic};
use crate::sim::{run_batch_with, summarize};
use crate::sweep::{columns_help, run_sweep, Grid, Quantity, SweepSpec};
use crate::verify::{exit_code, run_verify, Suite, VerifyConfig};

#[derive(Parser, Debug)]
#[command(
    name = "fisherloc",
    version,
    about = "Fisher information, Cramér–Rao bounds and localization efficiency for incoherent point emitters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sweep a bound or efficiency over the separation grid and write CSV.
    #[command(after_help = columns_help())]
    Sweep(SweepArgs),
    /// Run theorem certificates; exit code 3 if any verdict is FAIL.
    Verify(VerifyArgs),
    /// Monte Carlo estimation sessions compared with the bound.
    #[command(after_help = SIMULATE_HELP)]
    Simulate(SimulateArgs),
    /// Print classical Fisher information matrices.
    Fim(ModelArgs),
    /// Print quantum Fisher information matrices.
    Qfim(ModelArgs),
    /// Print Cramér–Rao bounds and eigenparameters.
    Bounds(ModelArgs),
    /// Print the three efficiency measures at the bound.
    Efficiency(ModelArgs),
}

const SIMULATE_HELP: &str = "Per-trial CSV columns: trial, one <label>_hat column per coordinate \
(x1,x2 in 1D; x1,y1,x2,y2 in 2D), log_likelihood, converged (1/0), flag (exclusion reason or empty).\n\
Summary CSV: key,value records with the empirical covariance (cov_emp_*), the bound (crb_*), \
variance ratios, bias, empirical and bound H measures with jackknife standard errors, and the \
smallest eigenvalue of Cov_emp − CRB with its standard error.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Blinking,
    Cofluorescent,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// PSF standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Photon budget N.
    #[arg(long, default_value_t = 10_000)]
    pub photons: u64,
    /// Brightness asymmetry of two sources, weights (1±δ)/2.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    /// Separation of two sources placed at ∓sep/2 on the x axis.
    #[arg(long, default_value_t = 1.0)]
    pub sep: f64,
    /// Image dimension (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Explicit positions: coordinates split by ',' and sources by ';',
    /// e.g. "-0.5;0.5" or "0,0;1,0.5". Overrides --sep.
    #[arg(long, allow_hyphen_values = true)]
    pub positions: Option<String>,
    /// Brightness weights split by ','. Overrides --delta.
    #[arg(long)]
    pub weights: Option<String>,
    /// Emission scenario; both are reported when omitted.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    /// Relative tolerance of the information integrals.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_rel: f64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub quantity: Quantity,
    /// Separation grid in units of σ: start:stop:steps.
    #[arg(long, default_value = "0.05:5:100")]
    pub grid: Grid,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10_000)]
    pub photons: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_rel: f64,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suites to run, comma separated. Defaults to every suite except
    /// anisotropic and search.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suite: Vec<Suite>,
    /// Separation grid in units of σ: start:stop:steps.
    #[arg(long, default_value = "0.05:5:100")]
    pub grid: Grid,
    /// Brightness asymmetries, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75", allow_hyphen_values = true)]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10_000)]
    pub photons: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_rel: f64,
    /// Seed of the counterexample search.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Configurations drawn by the counterexample search.
    #[arg(long, default_value_t = 200)]
    pub search_configurations: usize,
    /// Write certificates here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Independent estimation sessions, at least 2.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Master seed; trial t draws from stream t of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optimizer starts per cofluorescent trial.
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    /// Summary CSV path; defaults to the trials path with `.summary.csv`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| Error::usage(format!("cannot parse '{x}': {e}"))))
        .collect()
}

impl ModelArgs {
    pub fn quad(&self) -> Result<QuadratureSpec> {
        let q = QuadratureSpec::default().with_rel_tol(self.tol_rel);
        q.validate().map_err(|e| Error::usage(e.to_string()))?;
        Ok(q)
    }

    pub fn model(&self) -> Result<SourceModel> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::usage("--dim must be 1 or 2"));
        }
        let positions: Vec<f64> = match &self.positions {
            Some(p) => {
                let mut flat = Vec::new();
                for src in p.split(';') {
                    let c = parse_list(src)?;
                    if c.len() != self.dim {
                        return Err(Error::usage(format!("position '{src}' does not have {} coordinates", self.dim)));
                    }
                    flat.extend(c);
                }
                flat
            }
            None => {
                let h = 0.5 * self.sep;
                if self.dim == 1 {
                    vec![-h, h]
                } else {
                    vec![-h, 0.0, h, 0.0]
                }
            }
        };
        let k = positions.len() / self.dim;
        let weights = match &self.weights {
            Some(w) => parse_list(w)?,
            None if k == 2 => {
                if !(self.delta.abs() < 1.0) {
                    return Err(Error::usage("--delta must satisfy |delta| < 1"));
                }
                vec![0.5 * (1.0 + self.delta), 0.5 * (1.0 - self.delta)]
            }
            None => vec![1.0 / k as f64; k],
        };
        SourceModel::from_flat(self.dim, positions, weights, self.sigma, self.photons)
            .map_err(|e| Error::usage(e.to_string()))
    }

    fn scenarios(&self) -> Vec<ScenarioArg> {
        match self.scenario {
            Some(s) => vec![s],
            None => vec![ScenarioArg::Blinking, ScenarioArg::Cofluorescent],
        }
    }
}

fn scenario_for(model: &SourceModel, s: ScenarioArg) -> Scenario {
    match s {
        ScenarioArg::Blinking => Scenario::blinking_for(model),
        ScenarioArg::Cofluorescent => Scenario::Cofluorescent,
    }
}

fn scenario_name(s: ScenarioArg) -> &'static str {
    match s {
        ScenarioArg::Blinking => "blinking",
        ScenarioArg::Cofluorescent => "cofluorescent",
    }
}

fn information(model: &SourceModel, s: ScenarioArg, quad: &QuadratureSpec) -> Result<SymMatrix> {
    Ok(match scenario_for(model, s) {
        Scenario::Blinking { counts } => fim_blinking(model, &counts)?,
        Scenario::Cofluorescent => fim_cofluorescent(model, quad)?,
    })
}

fn matrix_text(m: &SymMatrix) -> String {
    let n = m.order();
    let rows: Vec<String> = (0..n)
        .map(|i| {
            let r: Vec<f64> = (0..n).map(|j| m.get(i, j)).collect();
            format!("[{}]", FloatList(&r).to_string().replace(';', ", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn cmd_fim(a: &ModelArgs) -> Result<String> {
    let model = a.model()?;
    let quad = a.quad()?;
    let mut s = format!("labels={}\n", model.labels().join(","));
    for sc in a.scenarios() {
        let f = information(&model, sc, &quad)?;
        s.push_str(&format!("{}.F={}\n", scenario_name(sc), matrix_text(&f)));
    }
    Ok(s)
}

fn cmd_qfim(a: &ModelArgs) -> Result<String> {
    let model = a.model()?;
    let quad = a.quad()?;
    let n = model.photons() as f64;
    let mut s = format!("labels={}\n", model.labels().join(","));
    match (model.sources(), model.dim()) {
        (1, d) => {
            let psf = GaussianPsf::new(model.sigma(), d)?;
            let q = qfim_pure_state(&psf, model.position(0), &quad)?.scaled(n);
            s.push_str(&format!("Q={}\n", matrix_text(&q)));
        }
        (2, 1) => {
            let th = model.theta();
            let sep = (th[1] - th[0]).abs();
            let delta = model.weights()[0] - model.weights()[1];
            for sc in a.scenarios() {
                let c = match sc {
                    ScenarioArg::Blinking => QfimClosedForm::blinking(n, model.sigma(), delta)?,
                    ScenarioArg::Cofluorescent => QfimClosedForm::cofluorescent(n, model.sigma(), delta, sep)?,
                };
                s.push_str(&format!("{}.Q={}\n", scenario_name(sc), matrix_text(&c.matrix)));
                s.push_str(&format!("{}.beta={}\n", scenario_name(sc), Float(c.beta)));
            }
        }
        _ => return Err(Error::usage("qfim supports one source, or two sources in 1D")),
    }
    Ok(s)
}

fn cmd_bounds(a: &ModelArgs) -> Result<String> {
    let model = a.model()?;
    let quad = a.quad()?;
    let mut s = format!("labels={}\n", model.labels().join(","));
    for sc in a.scenarios() {
        let f = information(&model, sc, &quad)?;
        let r = invert_info(&f)?;
        let v: Vec<String> =
            r.variances.iter().map(|v| v.map_or("inf".to_string(), |x| Float(x).to_string())).collect();
        let name = scenario_name(sc);
        s.push_str(&format!("{name}.L={}\n", v.join(",")));
        s.push_str(&format!("{name}.rank={}\n", r.rank));
        let e = eigen_analysis(&f)?;
        s.push_str(&format!("{name}.eigenvalues={}\n", FloatList(&e.values).to_string().replace(';', ",")));
        if let Some(xi) = e.xi {
            s.push_str(&format!("{name}.xi={}\n", Float(xi)));
        }
    }
    Ok(s)
}

fn cmd_efficiency(a: &ModelArgs) -> Result<String> {
    let model = a.model()?;
    let quad = a.quad()?;
    let mut s = String::new();
    for sc in a.scenarios() {
        let e = efficiency_at_bound(&information(&model, sc, &quad)?)?;
        let name = scenario_name(sc);
        for (k, v) in [
            ("h_tot", e.h_tot),
            ("h_ind", e.h_ind),
            ("h_eig", e.h_eig),
            ("bound_tot", e.bound_tot),
            ("bound_ind", e.bound_ind),
            ("bound_eig", e.bound_eig),
        ] {
            s.push_str(&format!("{name}.{k}={}\n", Float(v)));
        }
    }
    Ok(s)
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = SweepSpec { quantity: a.quantity, grid: a.grid, delta: a.delta, sigma: a.sigma, photons: a.photons };
    let quad = QuadratureSpec::default().with_rel_tol(a.tol_rel);
    quad.validate().map_err(|e| Error::usage(e.to_string()))?;
    let csv = run_sweep(&spec, &quad)?.to_csv()?;
    match &a.out {
        Some(p) => write_atomic(p, &csv),
        None => Ok(stdout.write_all(&csv)?),
    }
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let quad = QuadratureSpec::default().with_rel_tol(a.tol_rel);
    quad.validate().map_err(|e| Error::usage(e.to_string()))?;
    let cfg = VerifyConfig {
        suites: if a.suite.is_empty() { Suite::default_set() } else { a.suite.clone() },
        grid: a.grid,
        deltas: a.delta.clone(),
        sigma: a.sigma,
        photons: a.photons,
        quad,
        seed: a.seed,
        search_configurations: a.search_configurations,
    };
    let certs = run_verify(&cfg)?;
    let mut text = String::new();
    for c in &certs {
        text.push_str(&c.to_record());
        text.push('\n');
    }
    emit(&a.out, &text, stdout)?;
    Ok(exit_code(&certs))
}

fn summary_path(trials: &Path) -> PathBuf {
    let stem = trials.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trials".into());
    trials.with_file_name(format!("{stem}.summary.csv"))
}

fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = a.model.model()?;
    let quad = a.model.quad()?;
    let sc = a.model.scenario.ok_or_else(|| Error::usage("simulate needs --scenario"))?;
    let settings = OptimizerSettings { starts: a.starts, ..OptimizerSettings::default() };
    let batch = run_batch_with(&model, &scenario_for(&model, sc), a.trials, a.seed, &settings)?;
    let summary = summarize(&batch, &quad)?;
    let mut text = String::new();
    for (k, v) in summary_records(&summary) {
        text.push_str(&format!("{k}={v}\n"));
    }
    match &a.model.out {
        Some(p) => {
            write_atomic(p, &trials_csv(&batch)?)?;
            let sp = a.summary.clone().unwrap_or_else(|| summary_path(p));
            write_atomic(&sp, &summary_csv(&summary)?)?;
            stdout.write_all(text.as_bytes())?;
        }
        None => {
            stdout.write_all(&trials_csv(&batch)?)?;
            if let Some(sp) = &a.summary {
                write_atomic(sp, &summary_csv(&summary)?)?;
            }
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Sweep(a) => cmd_sweep(a, stdout).map(|_| 0),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout).map(|_| 0),
        Command::Fim(a) => emit(&a.out, &cmd_fim(a)?, stdout).map(|_| 0),
        Command::Qfim(a) => emit(&a.out, &cmd_qfim(a)?, stdout).map(|_| 0),
        Command::Bounds(a) => emit(&a.out, &cmd_bounds(a)?, stdout).map(|_| 0),
        Command::Efficiency(a) => emit(&a.out, &cmd_efficiency(a)?, stdout).map(|_| 0),
    }
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 success, 1 usage error, 2 numerical or I/O failure, 3 certification
/// failure.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{}", e.render()) } else { write!(stdout, "{}", e.render()) };
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "fisherloc: {e}");
            e.exit_code()
        }
    }
}
