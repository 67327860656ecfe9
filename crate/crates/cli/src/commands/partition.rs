use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;
use sts_core::format::write_sts;
use sts_core::hypergraph::TripleSystem;
use sts_core::partition::{audit_partition, good_partition, AuditOptions, PartitionAudit, PartitionBundle, PartitionOptions};

use crate::output::{emit, read_system, run_trials, timed, write_text};
use crate::Global;

#[derive(Args, Debug, Serialize)]
pub struct PartitionArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Upper limit on ℓ (default: max(1, ⌊n/30⌋)).
    #[arg(long)]
    pub ell_cap: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub kappa: f64,
    /// Relative slack on every bound of the audit.
    #[arg(long, default_value_t = 0.1)]
    pub slack: f64,
    /// Write every part of trial 0 as `<prefix>-G1.sts` … `<prefix>-Q.sts`
    /// plus a `<prefix>.json` manifest.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Serialize)]
struct Row {
    trial: usize,
    seed: u64,
    n: usize,
    ell: usize,
    cap_binds: bool,
    p_f: f64,
    g_edges: usize,
    h_edges: usize,
    f_edges: usize,
    q_edges: usize,
    exact_partition: bool,
    shapes_hold: bool,
    most_edges_covered: bool,
    w_sizes_ok: bool,
    g_almost_regular: bool,
    f_dense: bool,
    many_bridges: bool,
    f_resilient: bool,
    wall_time: Option<f64>,
}

#[derive(Serialize)]
struct ManifestPart {
    index: usize,
    u: Vec<usize>,
    w: Vec<usize>,
    g_edges: usize,
    h_edges: usize,
    f_edges: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a PartitionArgs,
    seed: u64,
    n: usize,
    delta: f64,
    ell: usize,
    ell_uncapped: usize,
    cap_binds: bool,
    p_f: f64,
    p_h: f64,
    p_g: f64,
    kappa: f64,
    parts: Vec<ManifestPart>,
    q_edges: usize,
    audit: &'a PartitionAudit,
}

fn write_parts(prefix: &std::path::Path, a: &PartitionArgs, s: &TripleSystem, b: &PartitionBundle, audit: &PartitionAudit) -> anyhow::Result<()> {
    let name = |tag: String| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(format!("-{tag}"));
        PathBuf::from(p)
    };
    let one = |v: Vec<usize>| v.into_iter().map(|x| x + 1).collect::<Vec<_>>();
    let mut parts = Vec::new();
    for i in 0..b.ell {
        for (tag, ids) in [("G", b.g(i)), ("H", b.h(i)), ("F", b.f(i))] {
            write_text(Some(&name(format!("{tag}{}.sts", i + 1))), &write_sts(&s.subsystem(ids)))?;
        }
        parts.push(ManifestPart {
            index: i + 1,
            u: one(b.u(i)),
            w: one(b.w(i)),
            g_edges: b.g(i).len(),
            h_edges: b.h(i).len(),
            f_edges: b.f(i).len(),
        });
    }
    write_text(Some(&name("Q.sts".into())), &write_sts(&s.subsystem(b.q())))?;
    let manifest = Manifest {
        config: a,
        seed: b.seed,
        n: b.n,
        delta: b.delta,
        ell: b.ell,
        ell_uncapped: b.ell_uncapped,
        cap_binds: b.cap_binds,
        p_f: b.p_f,
        p_h: b.p_h,
        p_g: b.p_g,
        kappa: b.kappa,
        parts,
        q_edges: b.q().len(),
        audit,
    };
    let mut path = prefix.as_os_str().to_owned();
    path.push(".json");
    write_text(Some(&PathBuf::from(path)), &(serde_json::to_string_pretty(&manifest)? + "\n")).context("writing manifest")
}

pub fn run(g: &Global, a: &PartitionArgs) -> anyhow::Result<()> {
    let s = read_system(&a.input)?;
    let popts = PartitionOptions { ell_cap: a.ell_cap, kappa: a.kappa };
    let rows = run_trials(g, |i, seed| {
        let (r, t) = timed(g, || -> anyhow::Result<_> {
            let b = good_partition(&s, a.delta, seed, &popts)?;
            let audit = audit_partition(&b, &s, &AuditOptions { slack: a.slack, seed, ..AuditOptions::default() })?;
            Ok((b, audit))
        });
        let (b, audit) = r?;
        if i == 0 {
            if let Some(prefix) = &a.out_prefix {
                write_parts(prefix, a, &s, &b, &audit)?;
            }
        }
        let count = |f: &dyn Fn(usize) -> Vec<usize>| (0..b.ell).map(|j| f(j).len()).sum::<usize>();
        Ok(Row {
            trial: i,
            seed,
            n: s.n(),
            ell: b.ell,
            cap_binds: b.cap_binds,
            p_f: b.p_f,
            g_edges: count(&|j| b.g(j)),
            h_edges: count(&|j| b.h(j)),
            f_edges: count(&|j| b.f(j)),
            q_edges: b.q().len(),
            exact_partition: audit.exact_partition,
            shapes_hold: audit.shapes_hold,
            most_edges_covered: audit.most_edges_covered,
            w_sizes_ok: audit.w_sizes_ok,
            g_almost_regular: audit.g_almost_regular,
            f_dense: audit.f_dense,
            many_bridges: audit.many_bridges,
            f_resilient: audit.f_resilient,
            wall_time: t,
        })
    })?;
    emit(g, "partition", a, &rows)
}
