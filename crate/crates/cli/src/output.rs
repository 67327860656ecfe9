use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use sts_core::format::parse_sts;
use sts_core::hypergraph::TripleSystem;
use sts_core::rng::derive_seed;

use crate::{Format, Global};

/// Runs `trials` independent trials in parallel; results come back in
/// trial order. The closure gets the trial index and its derived seed.
pub fn run_trials<R, F>(g: &Global, f: F) -> anyhow::Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, u64) -> anyhow::Result<R> + Sync,
{
    (0..g.trials)
        .into_par_iter()
        .map(|i| f(i, derive_seed(g.seed, i as u64)).with_context(|| format!("trial {i}")))
        .collect()
}

/// Seconds spent in `f`, when timing is on.
pub fn timed<R>(g: &Global, f: impl FnOnce() -> R) -> (R, Option<f64>) {
    let start = Instant::now();
    let r = f();
    (r, g.timing.then(|| start.elapsed().as_secs_f64()))
}

/// CSV starts with `#schema=<schema>/1` and a header row. JSON wraps the
/// rows with the schema and the configuration that produced them.
pub fn emit<R: Serialize, C: Serialize>(g: &Global, schema: &str, config: &C, rows: &[R]) -> anyhow::Result<()> {
    let text = match g.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            let body = String::from_utf8(w.into_inner()?)?;
            format!("#schema={schema}/1\n{body}")
        }
        Format::Json => {
            let doc = serde_json::json!({
                "schema": format!("{schema}/1"),
                "global": g,
                "config": config,
                "records": rows,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    write_text(g.out.as_deref(), &text)
}

pub fn write_text(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn read_system(path: &Path) -> anyhow::Result<TripleSystem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_sts(&text).with_context(|| format!("parsing {}", path.display()))
}

/// `"3,7,9"` (1-indexed) to zero-based vertices.
pub fn parse_vertex_list(text: &str, n: usize) -> anyhow::Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            let v: usize = t.trim().parse().with_context(|| format!("bad vertex `{t}`"))?;
            anyhow::ensure!(v >= 1 && v <= n, "vertex {v} outside [1, {n}]");
            Ok(v - 1)
        })
        .collect()
}

pub fn one_indexed(vs: &[usize]) -> String {
    vs.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(" ")
}
