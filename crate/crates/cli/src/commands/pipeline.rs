use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;
use sts_core::format::write_res;
use sts_core::generation::random_sts;
use sts_core::matching::pack_disjoint_pms;
use sts_core::pipeline::{almost_resolve_with, PipelineOptions, PipelineReport};

use crate::output::{emit, read_system, run_trials, timed, write_text};
use crate::Global;

#[derive(Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "gen"]))]
pub struct PipelineArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Generate a fresh hill-climb STS(n) per trial.
    #[arg(long)]
    pub gen: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Node budget shared by all exact searches of one run.
    #[arg(long, default_value_t = 200_000)]
    pub budget: u64,
    /// Keep classes covering at least (1 − trim) of U_i.
    #[arg(long, default_value_t = 0.5)]
    pub trim: f64,
    /// Stop after the staged classes, without the final search.
    #[arg(long)]
    pub no_final_search: bool,
    /// Also run the plain packer with the same budget and seed.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Serialize)]
struct Row {
    trial: usize,
    seed: u64,
    n: usize,
    ell: usize,
    classes: usize,
    staged: usize,
    bridged: usize,
    f_completions: usize,
    absorber_completions: usize,
    fallbacks: usize,
    dropped: usize,
    matchings: usize,
    coverage: f64,
    baseline: Option<usize>,
    wall_time: Option<f64>,
}

pub fn run(g: &Global, a: &PipelineArgs) -> anyhow::Result<()> {
    let fixed = a.input.as_ref().map(|p| read_system(p)).transpose()?;
    let opts = PipelineOptions {
        delta: a.delta,
        budget: a.budget,
        trim: a.trim,
        final_search: !a.no_final_search,
        ..PipelineOptions::default()
    };
    let outs = run_trials(g, |i, seed| {
        let s = match &fixed {
            Some(s) => s.clone(),
            None => random_sts(a.gen.expect("clap requires a source"), seed)?,
        };
        let (r, t) = timed(g, || almost_resolve_with(&s, &opts, seed));
        let r: PipelineReport = r?;
        let baseline = a.baseline.then(|| pack_disjoint_pms(&s, a.budget, seed).matchings.len());
        let st = &r.stats;
        let row = Row {
            trial: i,
            seed,
            n: r.n,
            ell: r.ell,
            classes: st.classes_attempted,
            staged: st.staged,
            bridged: st.bridge_successes,
            f_completions: st.f_completions,
            absorber_completions: st.absorber_completions,
            fallbacks: st.residual_fallbacks,
            dropped: st.dropped,
            matchings: r.matchings.len(),
            coverage: r.coverage,
            baseline,
            wall_time: t,
        };
        Ok((row, r))
    })?;
    if let Some(out) = &g.out {
        let reports: Vec<&PipelineReport> = outs.iter().map(|(_, r)| r).collect();
        let json = out.with_extension("json");
        write_text(Some(&json), &(serde_json::to_string_pretty(&reports)? + "\n")).context("writing reports")?;
        for (row, r) in &outs {
            let res = if outs.len() == 1 { out.with_extension("res") } else { out.with_extension(format!("{}.res", row.trial)) };
            write_text(Some(&res), &write_res(r.n, &r.matchings))?;
        }
    }
    let rows: Vec<Row> = outs.into_iter().map(|(r, _)| r).collect();
    emit(g, "pipeline", a, &rows)
}
