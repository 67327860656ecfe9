use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sts_core::exact_cover::Budget;
use sts_core::format::write_res;
use sts_core::matching::{pack_disjoint_pms, ps_decompose, resolve as resolve_system, trim_decomposition, ResolveOutcome};

use crate::output::{emit, read_system, run_trials, timed, write_text};
use crate::{Format, Global};

#[derive(Args, Debug, Serialize)]
pub struct PackArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Search node budget per trial.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    /// Write the largest packing found as a .res file.
    #[arg(long)]
    pub res: Option<PathBuf>,
}

#[derive(Serialize)]
struct PackRow {
    trial: usize,
    seed: u64,
    n: usize,
    matchings: usize,
    upper_bound: usize,
    nodes: u64,
    restarts: usize,
    optimal: bool,
    wall_time: Option<f64>,
}

pub fn pack(g: &Global, a: &PackArgs) -> anyhow::Result<()> {
    let s = read_system(&a.input)?;
    let outs = run_trials(g, |i, seed| {
        let (p, t) = timed(g, || pack_disjoint_pms(&s, a.budget, seed));
        let row = PackRow {
            trial: i,
            seed,
            n: s.n(),
            matchings: p.matchings.len(),
            upper_bound: p.upper_bound,
            nodes: p.nodes_used,
            restarts: p.restarts,
            optimal: p.optimal,
            wall_time: t,
        };
        Ok((row, p.matchings))
    })?;
    if let Some(path) = &a.res {
        let best = outs.iter().max_by_key(|(r, _)| (r.matchings, std::cmp::Reverse(r.trial))).expect("trials > 0");
        write_text(Some(path), &write_res(s.n(), &best.1))?;
    }
    let rows: Vec<PackRow> = outs.into_iter().map(|(r, _)| r).collect();
    emit(g, "pack", a, &rows)
}

#[derive(Args, Debug, Serialize)]
pub struct ResolveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Search node budget (default: unlimited).
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Serialize)]
struct ResolveDoc {
    outcome: &'static str,
    nodes: u64,
    classes: Vec<Vec<[usize; 3]>>,
}

/// Prints the resolution as `.res` text (or JSON); the verdict goes to
/// stderr. Finding nothing is not an error.
pub fn resolve(g: &Global, a: &ResolveArgs) -> anyhow::Result<()> {
    let s = read_system(&a.input)?;
    let budget = a.budget.map_or_else(Budget::unlimited, Budget::new);
    let outcome = resolve_system(&s, &budget)?;
    let (label, classes) = match outcome {
        ResolveOutcome::Resolved(r) => ("resolved", r.classes),
        ResolveOutcome::NotResolvable => ("not resolvable", Vec::new()),
        ResolveOutcome::Indeterminate => ("undecided within budget", Vec::new()),
    };
    eprintln!("{label}: {} parallel classes, {} search nodes", classes.len(), budget.used());
    let text = match g.format {
        Format::Csv => {
            if classes.is_empty() {
                return Ok(());
            }
            write_res(s.n(), &classes)
        }
        Format::Json => {
            let doc = ResolveDoc {
                outcome: label,
                nodes: budget.used(),
                classes: classes.iter().map(|m| m.edges().iter().map(|e| e.vertices().map(|v| v + 1)).collect()).collect(),
            };
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    write_text(g.out.as_deref(), &text)
}

#[derive(Args, Debug, Serialize)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Drop classes with fewer edges than this.
    #[arg(long, default_value_t = 0)]
    pub min_size: usize,
    /// Write the classes as a .res file.
    #[arg(long)]
    pub res: Option<PathBuf>,
}

#[derive(Serialize)]
struct ClassRow {
    class: usize,
    size: usize,
    uncovered: usize,
}

pub fn decompose(g: &Global, a: &DecomposeArgs) -> anyhow::Result<()> {
    let s = read_system(&a.input)?;
    let d = trim_decomposition(&ps_decompose(&s)?, a.min_size);
    eprintln!("{} classes, at most {} missing any vertex", d.matchings.len(), d.max_missing());
    if let Some(path) = &a.res {
        write_text(Some(path), &write_res(s.n(), &d.matchings))?;
    }
    let rows: Vec<ClassRow> = d
        .matchings
        .iter()
        .zip(&d.uncovered_per_class)
        .enumerate()
        .map(|(i, (m, u))| ClassRow { class: i + 1, size: m.len(), uncovered: u.len() })
        .collect();
    emit(g, "decompose", a, &rows)
}
