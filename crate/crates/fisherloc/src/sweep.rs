//! Separation sweeps of bounds and efficiencies for two 1D sources, with
//! blinking and cofluorescent columns side by side.

use std::f64::consts::FRAC_PI_4;

use clap::ValueEnum;
use fisherloc_core::fim::{fim_blinking_expected, fim_cofluorescent, rotate_fim, rotation_matrix};
use fisherloc_core::matrix::SymMatrix;
use fisherloc_core::metrology::{efficiency_at_bound, eigen_analysis, invert_info, NULL_SPACE_EPS};
use fisherloc_core::model::SourceModel;
use fisherloc_core::qfim::{qfim_blinking_1d, qfim_cofluorescent_1d};
use fisherloc_core::quad::QuadratureSpec;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::output::Table;

/// Relative slack for the in-file inequality columns.
const CHECK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    #[value(name = "bounds-xy")]
    BoundsXy,
    #[value(name = "bounds-cs")]
    BoundsCs,
    #[value(name = "bounds-eig")]
    BoundsEig,
    #[value(name = "efficiency")]
    Efficiency,
    #[value(name = "qbounds-xy")]
    QBoundsXy,
    #[value(name = "qbounds-cs")]
    QBoundsCs,
    #[value(name = "qbounds-eig")]
    QBoundsEig,
    #[value(name = "qefficiency")]
    QEfficiency,
}

impl Quantity {
    fn quantum(self) -> bool {
        matches!(self, Quantity::QBoundsXy | Quantity::QBoundsCs | Quantity::QBoundsEig | Quantity::QEfficiency)
    }
}

/// Linear grid of `steps` points from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { start: 0.05, stop: 5.0, steps: 100 }
    }
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::usage("grid needs at least 2 steps"));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start >= 0.0 && self.stop > self.start) {
            return Err(Error::usage("grid must be increasing with a nonnegative start"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..self.steps)
            .map(|i| if i == n { self.stop } else { self.start + (self.stop - self.start) * i as f64 / n as f64 })
            .collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = String;

    /// `start:stop:steps`
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err("expected start:stop:steps".into());
        }
        let f = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"));
        let steps = parts[2].trim().parse::<usize>().map_err(|e| format!("{}: {e}", parts[2]))?;
        Ok(Grid { start: f(parts[0])?, stop: f(parts[1])?, steps })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    pub quantity: Quantity,
    /// Separations in units of σ.
    pub grid: Grid,
    pub delta: f64,
    pub sigma: f64,
    pub photons: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.delta.abs() < 1.0) {
            return Err(Error::usage("delta must satisfy |delta| < 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::usage("sigma must be positive"));
        }
        if self.photons == 0 {
            return Err(Error::usage("photons must be at least 1"));
        }
        Ok(())
    }

    /// `L₀ = 2σ²/N`
    pub fn l0(&self) -> f64 {
        2.0 * self.sigma * self.sigma / self.photons as f64
    }

    /// `H₀ = N/2σ²`
    pub fn h0(&self) -> f64 {
        1.0 / self.l0()
    }
}

/// Column names for a quantity. Normalized columns come first, raw values
/// after, then the inequality checks.
pub fn columns(q: Quantity) -> Vec<String> {
    let scen = ["blink", "coflu"];
    let mut h = vec!["s_over_sigma".to_string()];
    let (names, norm, check): (&[&str], &str, &str) = match q {
        Quantity::BoundsXy | Quantity::QBoundsXy => (&["L11", "L22"], "L0", "blink_le_coflu"),
        Quantity::BoundsCs | Quantity::QBoundsCs => (&["Lcc", "Lss"], "L0", "blink_le_coflu"),
        Quantity::BoundsEig | Quantity::QBoundsEig => (&["Lbb", "Lww"], "L0", "blink_le_coflu"),
        Quantity::Efficiency | Quantity::QEfficiency => (&["Htot", "Hind", "Heig"], "H0", "blink_ge_coflu"),
    };
    if matches!(q, Quantity::BoundsEig | Quantity::QBoundsEig) {
        h.push("blink_xi".into());
        h.push("coflu_xi".into());
    }
    for s in scen {
        for n in names {
            h.push(format!("{s}_{n}_over_{norm}"));
        }
    }
    for s in scen {
        for n in names {
            h.push(format!("{s}_{n}"));
        }
    }
    h.push(check.into());
    if matches!(q, Quantity::Efficiency | Quantity::QEfficiency) {
        h.push("h_ordered".into());
    }
    h
}

/// Help text describing the columns of every quantity.
pub fn columns_help() -> String {
    let mut s = String::from(
        "CSV columns (L0 = 2σ²/N, H0 = N/2σ²; unbounded variances are written as inf; \
         check columns are 1 when the inequality holds row-wise):\n",
    );
    for q in Quantity::value_variants() {
        let name = q.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        s.push_str(&format!("  {name}: {}\n", columns(*q).join(",")));
    }
    s
}

fn matrices(spec: &SweepSpec, s_over_sigma: f64, quad: &QuadratureSpec) -> Result<(SymMatrix, SymMatrix)> {
    let sep = s_over_sigma * spec.sigma;
    if spec.quantity.quantum() {
        let n = spec.photons as f64;
        Ok((qfim_blinking_1d(n, spec.sigma, spec.delta)?, qfim_cofluorescent_1d(n, spec.sigma, spec.delta, sep)?))
    } else {
        let model = SourceModel::two_source_1d(sep, spec.delta, spec.sigma, spec.photons)?;
        Ok((fim_blinking_expected(&model), fim_cofluorescent(&model, quad)?))
    }
}

fn bounds(f: &SymMatrix) -> Result<Vec<f64>> {
    let r = invert_info(f)?;
    Ok(r.variances.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect())
}

/// Variances of the eigenparameters `1/λ_k`, infinite on the null space.
fn eig_bounds(f: &SymMatrix) -> Result<(Vec<f64>, f64)> {
    let r = eigen_analysis(f)?;
    let lmax = r.values[0];
    let v = r
        .values
        .iter()
        .map(|&l| if lmax > 0.0 && l > NULL_SPACE_EPS * lmax { 1.0 / l } else { f64::INFINITY })
        .collect();
    Ok((v, r.xi.unwrap_or(f64::NAN)))
}

fn le(a: f64, b: f64) -> bool {
    a <= b || (a - b).abs() <= CHECK_TOL * b.abs()
}

fn row(spec: &SweepSpec, s: f64, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let (blink, coflu) = matrices(spec, s, quad)?;
    let mut r = vec![s];
    let (raw_b, raw_c, norm, lower_is_better): (Vec<f64>, Vec<f64>, f64, bool) = match spec.quantity {
        Quantity::BoundsXy | Quantity::QBoundsXy => (bounds(&blink)?, bounds(&coflu)?, spec.l0(), true),
        Quantity::BoundsCs | Quantity::QBoundsCs => {
            let o = rotation_matrix(FRAC_PI_4);
            (bounds(&rotate_fim(&blink, &o)?)?, bounds(&rotate_fim(&coflu, &o)?)?, spec.l0(), true)
        }
        Quantity::BoundsEig | Quantity::QBoundsEig => {
            let (b, xb) = eig_bounds(&blink)?;
            let (c, xc) = eig_bounds(&coflu)?;
            r.push(xb);
            r.push(xc);
            (b, c, spec.l0(), true)
        }
        Quantity::Efficiency | Quantity::QEfficiency => {
            let eb = efficiency_at_bound(&blink)?;
            let ec = efficiency_at_bound(&coflu)?;
            (vec![eb.h_tot, eb.h_ind, eb.h_eig], vec![ec.h_tot, ec.h_ind, ec.h_eig], spec.h0(), false)
        }
    };
    r.extend(raw_b.iter().map(|v| v / norm));
    r.extend(raw_c.iter().map(|v| v / norm));
    r.extend(&raw_b);
    r.extend(&raw_c);
    let check = raw_b.iter().zip(&raw_c).all(|(&b, &c)| if lower_is_better { le(b, c) } else { le(c, b) });
    r.push(f64::from(u8::from(check)));
    if !lower_is_better {
        let ordered = |h: &[f64]| le(h[0], h[1]) && le(h[1], h[2]);
        r.push(f64::from(u8::from(ordered(&raw_b) && ordered(&raw_c))));
    }
    Ok(r)
}

/// One row per grid point, computed in parallel and assembled in grid
/// order.
pub fn run_sweep(spec: &SweepSpec, quad: &QuadratureSpec) -> Result<Table> {
    spec.validate()?;
    let rows = spec.grid.points().par_iter().map(|&s| row(spec, s, quad)).collect::<Result<Vec<_>>>()?;
    Ok(Table { header: columns(spec.quantity), rows })
}
