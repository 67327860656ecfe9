use clap::Args;
use serde::Serialize;
use sts_core::generation::{coupling_survival_probability, couple, triangle_removal};
use sts_core::hypergraph::{choose3, OrderedPartialSts};

use crate::output::{emit, run_trials, timed};
use crate::Global;

#[derive(Args, Debug, Serialize)]
pub struct CoupleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Triangle removal steps for the starting system (0: empty).
    #[arg(long, default_value_t = 0)]
    pub m: usize,
}

#[derive(Serialize)]
struct Row {
    trial: usize,
    seed: u64,
    n: usize,
    q: f64,
    g_edges: usize,
    survivors: usize,
    target: f64,
    success: bool,
    wall_time: Option<f64>,
}

pub fn run(g: &Global, a: &CoupleArgs) -> anyhow::Result<()> {
    let rows = run_trials(g, |i, seed| {
        let start =
            if a.m == 0 { OrderedPartialSts::empty(a.n) } else { triangle_removal(a.n, a.m, seed ^ 1)?.partial };
        let (r, t) = timed(g, || couple(&start, a.alpha, seed));
        let r = r?;
        Ok(Row {
            trial: i,
            seed,
            n: a.n,
            q: r.q,
            g_edges: r.g_edge_count,
            survivors: r.y,
            target: r.target,
            success: r.success,
            wall_time: t,
        })
    })?;
    if a.m == 0 && rows.len() > 1 {
        // every triple is admissible, so Y / C(n,3) estimates the survival probability
        let total = choose3(a.n) as f64;
        let p: Vec<f64> = rows.iter().map(|r| r.survivors as f64 / total).collect();
        let k = p.len() as f64;
        let mean = p.iter().sum::<f64>() / k;
        let sd = (p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        let se = sd / k.sqrt();
        let predicted = coupling_survival_probability(a.n, rows[0].q);
        let z = if se > 0.0 { (mean - predicted) / se } else { 0.0 };
        eprintln!("survival per triple: empirical {mean:.6e}, predicted {predicted:.6e}, z = {z:.2}");
    }
    emit(g, "couple-test", a, &rows)
}
