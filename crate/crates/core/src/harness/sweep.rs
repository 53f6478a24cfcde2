//! Bound-sweep experiments over generated instances.

use std::time::Instant;

use serde::Serialize;

use crate::approx::{commuting_approximants, residual_tolerance, BinningParams, Certificate};
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, Tolerances};

use super::generate::{gen_instance, InstanceKind, InstanceRecipe};

/// One CSV row; field order is the file's column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: InstanceKind,
    pub dim: usize,
    pub seed: u64,
    /// The `eps` handed to the construction: the measured commutator norm of
    /// the unit-norm observable.
    pub eps: f64,
    pub delta_eps: f64,
    #[serde(rename = "dX")]
    pub d_x: f64,
    #[serde(rename = "bound_dX")]
    pub bound_d_x: f64,
    #[serde(rename = "dOmega")]
    pub d_omega: f64,
    #[serde(rename = "bound_dOmega")]
    pub bound_d_omega: f64,
    pub residual: f64,
    #[serde(rename = "pass_dX")]
    pub pass_d_x: bool,
    #[serde(rename = "pass_dOmega")]
    pub pass_d_omega: bool,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowOutcome {
    pub recipe: InstanceRecipe,
    pub params: (f64, f64),
    pub eps_target: f64,
    pub result: std::result::Result<(SweepRow, Certificate), String>,
}

impl RowOutcome {
    pub fn row(&self) -> Option<&SweepRow> {
        self.result.as_ref().ok().map(|(r, _)| r)
    }

    pub fn passes(&self) -> bool {
        match &self.result {
            Ok((row, cert)) => row.pass_d_x && row.pass_d_omega && cert.pass_residual(row.dim),
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    /// True when there were no successful rows to summarize.
    pub vacuous: bool,
    pub rows: usize,
    pub errors: usize,
    pub dx_violations: usize,
    pub domega_violations: usize,
    pub residual_violations: usize,
    /// `max dX / bound_dX`.
    pub max_dx_ratio: f64,
    /// Least-squares slope of `log median dX` against `log eps_target`.
    pub loglog_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub outcomes: Vec<RowOutcome>,
    pub summary: SweepSummary,
}

impl SweepResult {
    pub fn rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.outcomes.iter().filter_map(RowOutcome::row)
    }

    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(RowOutcome::passes)
    }

    /// CSV with the fixed header; failed rows are omitted and reported separately.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        if self.rows().next().is_none() {
            w.write_record(CSV_HEADER.split(','))
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

pub const CSV_HEADER: &str =
    "kind,dim,seed,eps,delta_eps,dX,bound_dX,dOmega,bound_dOmega,residual,pass_dX,pass_dOmega,wall_ms";

/// Grid specification: `a:b:logN` for `N` log-spaced points from `a` to `b`,
/// or a comma-separated list.
pub fn parse_eps_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::InvalidParams(format!("bad epsilon grid '{spec}': {why}"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let grid: Vec<f64> = if let [a, b, n] = spec.split(':').collect::<Vec<_>>()[..] {
        let n: usize = n
            .strip_prefix("log")
            .ok_or_else(|| bad("third field must be logN"))?
            .parse()
            .map_err(|_| bad("point count is not an integer"))?;
        let (a, b) = (parse(a)?, parse(b)?);
        if !(a > 0.0 && b > 0.0) {
            return Err(bad("log-spaced endpoints must be positive"));
        }
        match n {
            0 => return Err(bad("need at least one point")),
            1 => vec![a],
            _ => {
                let (la, lb) = (a.log10(), b.log10());
                (0..n)
                    .map(|i| pow10(la + (lb - la) * i as f64 / (n - 1) as f64))
                    .collect()
            }
        }
    } else {
        spec.split(',').map(parse).collect::<Result<_>>()?
    };
    if let Some(e) = grid.iter().find(|e| !(**e >= 0.0 && **e < 1.0)) {
        return Err(bad(&format!("{e} is outside [0, 1)")));
    }
    Ok(grid)
}

/// `10^x`, exact for integral `x`.
fn pow10(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-12 {
        format!("1e{}", r as i64).parse().expect("valid literal")
    } else {
        10f64.powf(x)
    }
}

/// Recipes for every `(dim, eps, kind)` with a shared seed.
pub fn grid_recipes(dims: &[usize], eps_grid: &[f64], kinds: &[InstanceKind], seed: u64) -> Vec<InstanceRecipe> {
    let mut out = Vec::new();
    for &kind in kinds {
        for &dim in dims {
            for &eps in eps_grid {
                out.push(InstanceRecipe::new(kind, dim, eps, seed));
            }
        }
    }
    out
}

pub fn run_row(recipe: &InstanceRecipe, delta_exp: f64, beta_exp: f64, tol: &Tolerances, timing: bool) -> Result<(SweepRow, Certificate)> {
    let start = Instant::now();
    let inst = gen_instance(recipe)?;
    let scale = operator_norm(&inst.x).max(1.0);
    let params = BinningParams::new(inst.eps_measured / scale, delta_exp, beta_exp)?;
    let out = commuting_approximants(&inst.omega, &inst.x, &params, tol)?;
    let c = out.cert;
    let row = SweepRow {
        kind: recipe.kind,
        dim: recipe.dim,
        seed: recipe.seed,
        eps: c.eps,
        delta_eps: c.delta_eps,
        d_x: c.d_x,
        bound_d_x: c.bound_d_x,
        d_omega: c.d_omega,
        bound_d_omega: c.bound_d_omega,
        residual: c.residual,
        pass_d_x: c.pass_dx(),
        pass_d_omega: c.pass_domega(),
        wall_ms: if timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 },
    };
    Ok((row, c))
}

/// Runs every recipe under every `(delta_exp, beta_exp)` pair. Failures are
/// recorded per row and never stop the sweep.
pub fn run_sweep(recipes: &[InstanceRecipe], params: &[(f64, f64)], tol: &Tolerances, timing: bool) -> SweepResult {
    let mut outcomes = Vec::new();
    for recipe in recipes {
        for &(d, b) in params {
            let result = run_row(recipe, d, b, tol, timing).map_err(|e| e.to_string());
            outcomes.push(RowOutcome {
                recipe: recipe.clone(),
                params: (d, b),
                eps_target: recipe.eps_target,
                result,
            });
        }
    }
    let summary = summarize(&outcomes);
    SweepResult { outcomes, summary }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `y` against `x`; `None` with fewer than two distinct `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (points.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

/// Log-log slope of the per-target median `dX`, skipping zero medians.
pub fn median_slope<'a>(rows: impl Iterator<Item = (f64, &'a SweepRow)>) -> Option<f64> {
    let mut by_eps: Vec<(f64, Vec<f64>)> = Vec::new();
    for (target, row) in rows {
        match by_eps.iter_mut().find(|(e, _)| *e == target) {
            Some((_, v)) => v.push(row.d_x),
            None => by_eps.push((target, vec![row.d_x])),
        }
    }
    let points: Vec<(f64, f64)> = by_eps
        .into_iter()
        .filter(|(e, _)| *e > 0.0)
        .filter_map(|(e, mut v)| {
            let m = median(&mut v);
            (m > 0.0).then(|| (e.ln(), m.ln()))
        })
        .collect();
    fit_slope(&points)
}

fn summarize(outcomes: &[RowOutcome]) -> SweepSummary {
    let ok: Vec<(&RowOutcome, &SweepRow, &Certificate)> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok().map(|(r, c)| (o, r, c)))
        .collect();
    SweepSummary {
        vacuous: ok.is_empty(),
        rows: outcomes.len(),
        errors: outcomes.len() - ok.len(),
        dx_violations: ok.iter().filter(|(_, r, _)| !r.pass_d_x).count(),
        domega_violations: ok.iter().filter(|(_, r, _)| !r.pass_d_omega).count(),
        residual_violations: ok.iter().filter(|(_, r, _)| r.residual > residual_tolerance(r.dim)).count(),
        max_dx_ratio: ok
            .iter()
            .filter(|(_, r, _)| r.bound_d_x > 0.0)
            .map(|(_, r, _)| r.d_x / r.bound_d_x)
            .fold(0.0, f64::max),
        loglog_slope: median_slope(ok.iter().map(|(o, r, _)| (o.eps_target, *r))),
    }
}

/// Seeds reserved for calibrating the trace-distance constant; disjoint
/// from every seed used by the acceptance suite.
pub const CALIBRATION_SEED_BASE: u64 = 0xC0FF_EE00;

/// The calibration family: every kind, dimensions up to 64, `eps` from 1e-6 to 1e-2.
pub fn calibration_recipes() -> Vec<InstanceRecipe> {
    let dims = [2, 4, 8, 16, 32, 64];
    let grid = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let mut out = Vec::new();
    let mut seed = CALIBRATION_SEED_BASE;
    for kind in InstanceKind::ALL {
        for &dim in &dims {
            for &eps in &grid {
                out.push(InstanceRecipe::new(kind, dim, eps, seed));
                seed += 1;
            }
        }
    }
    out
}

/// `max (dOmega - 2 Delta_eps) / eps^(1/4)` over a sweep at default exponents.
pub fn calibrate_domega_constant(recipes: &[InstanceRecipe], tol: &Tolerances) -> f64 {
    let params = [(BinningParams::DEFAULT_DELTA, BinningParams::DEFAULT_BETA)];
    run_sweep(recipes, &params, tol, false)
        .rows()
        .filter(|r| r.eps > 0.0)
        .map(|r| (r.d_omega - 2.0 * r.delta_eps) / r.eps.powf(0.25))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_eps_grid("1e-2:1e-6:log3").unwrap(), vec![1e-2, 1e-4, 1e-6]);
        assert_eq!(parse_eps_grid("0.1,0.01").unwrap(), vec![0.1, 0.01]);
        assert_eq!(parse_eps_grid("1e-3:1e-3:log1").unwrap(), vec![1e-3]);
        let g = parse_eps_grid("1e-2:1e-3:log3").unwrap();
        assert!((g[1] - 10f64.powf(-2.5)).abs() < 1e-18);
        assert!(parse_eps_grid("1e-2:1e-6:lin3").is_err());
        assert!(parse_eps_grid("0:1e-6:log3").is_err());
        assert!(parse_eps_grid("2.0").is_err());
        assert!(parse_eps_grid("a,b").is_err());
    }

    #[test]
    fn empty_sweep_is_vacuous() {
        let r = run_sweep(&[], &[(0.25, 0.75)], &Tolerances::default(), false);
        assert!(r.summary.vacuous);
        assert_eq!(r.summary.rows, 0);
        assert_eq!(r.to_csv().unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn invalid_exponents_are_rejected_per_row() {
        let recipes = grid_recipes(&[4], &[1e-3], &[InstanceKind::PerturbedCommuting], 1);
        let r = run_sweep(&recipes, &[(0.3, 0.5), (0.25, 0.75)], &Tolerances::default(), false);
        assert_eq!(r.summary.rows, 2);
        assert_eq!(r.summary.errors, 1);
        assert!(r.outcomes[0].result.as_ref().unwrap_err().contains("beta > 2 delta"));
        assert!(r.outcomes[1].passes());
    }

    #[test]
    fn csv_has_fixed_header() {
        let recipes = grid_recipes(&[4, 8], &parse_eps_grid("1e-2:1e-6:log3").unwrap(), &[InstanceKind::PerturbedCommuting], 7);
        let r = run_sweep(&recipes, &[(0.25, 0.75)], &Tolerances::default(), false);
        let csv = r.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("perturbed_commuting,4,7,"));
        assert!(r.all_pass());
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (1..5).map(|i| (i as f64, 0.5 * i as f64 + 3.0)).collect();
        assert!((fit_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(fit_slope(&[(1.0, 2.0)]), None);
    }
}
