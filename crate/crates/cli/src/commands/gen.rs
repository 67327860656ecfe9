use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;
use sts_core::format::write_sts;
use sts_core::generation::{couple, random_sts, sample_binomial_3graph, triangle_removal};
use sts_core::hypergraph::{admits_sts, choose2, OrderedPartialSts, TripleSystem};

use crate::output::{emit, run_trials, timed, write_text};
use crate::Global;

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Triangle removal steps (default: run until stuck or complete).
    #[arg(long)]
    pub m: Option<usize>,
    /// Coupling density α.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Edge probability for binomial mode.
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = Mode::Sts)]
    pub mode: Mode,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Triangle removal process
    Trp,
    /// Each triple independently with probability p
    Binomial,
    /// Thinned binomial graph disjoint from a triangle removal prefix of m steps
    Couple,
    /// Full system by hill-climbing (not a uniform sample)
    Sts,
}

#[derive(Serialize)]
struct Row {
    trial: usize,
    seed: u64,
    mode: Mode,
    n: usize,
    edges: usize,
    leave_pairs: Option<usize>,
    aborted: Option<bool>,
    q: Option<f64>,
    target: Option<f64>,
    success: Option<bool>,
    wall_time: Option<f64>,
}

struct Generated {
    system: TripleSystem,
    row: Row,
}

fn generate(a: &GenArgs, trial: usize, seed: u64) -> anyhow::Result<Generated> {
    let n = a.n;
    let mut row = Row {
        trial,
        seed,
        mode: a.mode,
        n,
        edges: 0,
        leave_pairs: None,
        aborted: None,
        q: None,
        target: None,
        success: None,
        wall_time: None,
    };
    let system = match a.mode {
        Mode::Sts => random_sts(n, seed)?,
        Mode::Binomial => sample_binomial_3graph(n, a.p, seed)?,
        Mode::Trp => {
            let out = triangle_removal(n, a.m.unwrap_or(choose2(n) / 3), seed)?;
            row.leave_pairs = Some(out.leave.pair_count());
            row.aborted = Some(out.aborted);
            out.partial.into_system()
        }
        Mode::Couple => {
            let start = match a.m {
                Some(m) if m > 0 => triangle_removal(n, m, seed ^ 1)?.partial,
                _ => OrderedPartialSts::empty(n),
            };
            let r = couple(&start, a.alpha, seed)?;
            row.q = Some(r.q);
            row.target = Some(r.target);
            row.success = Some(r.success);
            TripleSystem::linear(n, r.survivors)?
        }
    };
    row.edges = system.edge_count();
    Ok(Generated { system, row })
}

pub fn run(g: &Global, a: &GenArgs) -> anyhow::Result<()> {
    if a.mode == Mode::Sts {
        anyhow::ensure!(admits_sts(a.n), "n must be ≡ 1 or 3 (mod 6), got {}", a.n);
    }
    let to_sts = g.out.as_ref().and_then(|p| p.extension()).is_some_and(|e| e == "sts");
    if to_sts {
        anyhow::ensure!(g.trials == 1, "writing a .sts file needs --trials 1");
        let gen = generate(a, 0, sts_core::rng::derive_seed(g.seed, 0))?;
        if gen.row.aborted == Some(true) {
            eprintln!("note: triangle removal got stuck after {} steps; writing the partial system", gen.row.edges);
        }
        let path: &PathBuf = g.out.as_ref().expect("checked above");
        return write_text(Some(path), &write_sts(&gen.system)).context("writing system");
    }
    let rows = run_trials(g, |i, seed| {
        let (gen, t) = timed(g, || generate(a, i, seed));
        let mut row = gen?.row;
        row.wall_time = t;
        Ok(row)
    })?;
    emit(g, "gen", a, &rows)
}
