use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use sts_core::hypergraph::{leave_graph, TripleSystem};
use sts_core::quasi::{audit_goodness, check_quasirandom, discrepancy, upper_quasi_defect, CheckMode};

use crate::output::{emit, read_system, run_trials, timed};
use crate::Global;

#[derive(Args, Debug, Serialize)]
pub struct AuditArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Checks to run (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Check::Quasi, Check::Upper, Check::Disc])]
    pub check: Vec<Check>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 2)]
    pub h: usize,
    /// Default: 2·(mean degree)/n.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Inspect every vertex set of the leave graph instead of sampling.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    /// (ε,h)-quasirandomness of the leave graph
    Quasi,
    /// (α/n, β)-upper-quasirandomness
    Upper,
    /// Maximum |e(X,Y,Z) − |X||Y||Z|/n|
    Disc,
    /// Regularity, upper-quasirandomness and absorber resilience
    Good,
}

#[derive(Serialize)]
struct Row {
    trial: usize,
    seed: u64,
    check: &'static str,
    n: usize,
    value: f64,
    threshold: Option<f64>,
    pass: Option<bool>,
    inspected: Option<u64>,
    exhaustive: bool,
    wall_time: Option<f64>,
}

fn rows_for(s: &TripleSystem, a: &AuditArgs, check: Check, trial: usize, seed: u64) -> anyhow::Result<Vec<Row>> {
    let n = s.n();
    let alpha = a.alpha.unwrap_or_else(|| 6.0 * s.edge_count() as f64 / (n * n).max(1) as f64);
    let row = |check, value, threshold, pass, inspected, exhaustive| Row {
        trial,
        seed,
        check,
        n,
        value,
        threshold,
        pass,
        inspected,
        exhaustive,
        wall_time: None,
    };
    Ok(match check {
        Check::Quasi => {
            let mode = if a.exact { CheckMode::Exact } else { CheckMode::Sampled(a.samples) };
            let r = check_quasirandom(&leave_graph(s)?, a.eps, a.h, mode, seed)?;
            vec![row("quasi", r.max_deviation, Some(a.eps), Some(r.pass), Some(r.sets_checked), a.exact)]
        }
        Check::Upper => {
            anyhow::ensure!(alpha > 0.0, "upper-quasirandomness needs α > 0");
            let r = upper_quasi_defect(s, alpha / n as f64, a.samples, seed)?;
            let exhaustive = r.policy == sts_core::quasi::ScanPolicy::Exhaustive;
            vec![row("upper", r.beta_hat, Some(a.beta), Some(r.beta_hat <= a.beta), None, exhaustive)]
        }
        Check::Disc => {
            let r = discrepancy(s, a.samples, seed)?;
            let exhaustive = r.policy == sts_core::quasi::ScanPolicy::Exhaustive;
            vec![row("disc", r.max_deviation, None, None, None, exhaustive)]
        }
        Check::Good => {
            let r = audit_goodness(s, alpha, a.beta, a.samples.min(20), seed)?;
            let centre = alpha * n as f64 / 2.0;
            let spread = (r.min_degree as f64 - centre).abs().max((r.max_degree as f64 - centre).abs()) / n as f64;
            let failing: usize = r.resilience.iter().map(|x| x.failing).sum();
            let allowed: f64 = r.resilience.iter().map(|x| x.allowed).sum();
            let sets: usize = r.resilience.iter().map(|x| x.sets).sum();
            let beta_hat = r.upper_quasi.as_ref().map_or(0.0, |u| u.beta_hat);
            vec![
                row("good.regularity", spread, Some(a.beta), Some(r.regularity_pass), Some(n as u64), true),
                row("good.upper", beta_hat, Some(a.beta), Some(r.upper_quasi_pass), None, n <= 15),
                row("good.resilience", failing as f64, Some(allowed), Some(r.resilience_pass), Some(sets as u64), false),
            ]
        }
    })
}

pub fn run(g: &Global, a: &AuditArgs) -> anyhow::Result<()> {
    let s = read_system(&a.input)?;
    let per_trial = run_trials(g, |i, seed| {
        let mut rows = Vec::new();
        for &c in &a.check {
            let (r, t) = timed(g, || rows_for(&s, a, c, i, seed));
            let mut r = r?;
            r.iter_mut().for_each(|x| x.wall_time = t);
            rows.extend(r);
        }
        Ok(rows)
    })?;
    let rows: Vec<Row> = per_trial.into_iter().flatten().collect();
    emit(g, "audit", a, &rows)
}
