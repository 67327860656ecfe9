use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::seq::index::sample;
use serde::Serialize;
use sts_core::absorbers::{
    assemble_absorbing_structure, build_template, find_absorber, find_sub_absorber, structure_vertex_count,
    StructureOptions, StructureOutcome,
};
use sts_core::exact_cover::{Budget, SearchEnd};
use sts_core::format::write_annotated_sts;
use sts_core::hypergraph::{Triple, TripleSystem};
use sts_core::rng::{derive_seed, rng_from_seed};

use crate::output::{emit, one_indexed, parse_vertex_list, read_system, run_trials, timed, write_text};
use crate::Global;

#[derive(Args, Debug, Serialize)]
pub struct AbsorbArgs {
    /// Host system (not needed for `template`).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Root triple, 1-indexed and comma separated; random per trial if absent.
    #[arg(long)]
    pub roots: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    pub mode: Mode,
    /// Half the flexible set size for `template` and `structure`.
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    /// Half-removals checked when a template is too large to check them all.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Node budget per search.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// 5-edge sub-absorber
    Sub,
    /// 13-edge absorber
    Full,
    /// Resilient template on 10q vertices
    Template,
    /// Template embedded in the host with an absorber on every edge
    Structure,
}

#[derive(Serialize)]
struct Row {
    trial: usize,
    seed: u64,
    roots: String,
    found: bool,
    budget_exceeded: bool,
    edges: usize,
    wall_time: Option<f64>,
}

fn search(host: &TripleSystem, mode: Mode, roots: [usize; 3], budget: u64) -> anyhow::Result<(Option<Vec<(String, Vec<Triple>)>>, SearchEnd)> {
    let forbidden = vec![false; host.n()];
    let b = Budget::new(budget);
    let tag = format!("rooted on {}", one_indexed(&roots));
    Ok(match mode {
        Mode::Sub => {
            let (f, end) = find_sub_absorber(host, roots, &forbidden, &b)?;
            let sections = f.map(|sa| {
                vec![
                    (format!("sub-absorber {tag}: rooted edges"), sa.rooted_edges().to_vec()),
                    ("cross edges".to_string(), sa.cross_edges().to_vec()),
                ]
            });
            (sections, end)
        }
        _ => {
            let (f, end) = find_absorber(host, roots, &forbidden, &b)?;
            let sections = f.map(|a| {
                vec![
                    (format!("absorber {tag}: covering matching"), a.covering().edges().to_vec()),
                    ("non-covering matching".to_string(), a.noncovering().edges().to_vec()),
                ]
            });
            (sections, end)
        }
    })
}

fn host(a: &AbsorbArgs) -> anyhow::Result<TripleSystem> {
    let path = a.input.as_ref().ok_or_else(|| anyhow::anyhow!("--in is required for mode {:?}", a.mode))?;
    read_system(path)
}

pub fn run(g: &Global, a: &AbsorbArgs) -> anyhow::Result<()> {
    match a.mode {
        Mode::Template => {
            let t = build_template(a.q, a.samples, 50, derive_seed(g.seed, 0))?;
            eprintln!(
                "template q={}: {} edges, max degree {}, {} half-removals checked{}",
                t.q,
                t.system.edge_count(),
                t.system.max_degree(),
                t.verified_removals,
                if t.exhaustive { " (all)" } else { "" }
            );
            let sections = vec![(format!("template q={}, flexible set {}", t.q, one_indexed(&t.flexible)), t.system.edges().to_vec())];
            write_text(g.out.as_deref(), &write_annotated_sts(t.system.n(), &sections))
        }
        Mode::Structure => {
            let h = host(a)?;
            let need = structure_vertex_count(a.q);
            anyhow::ensure!(h.n() >= need, "a structure with q={} needs {need} vertices, host has {}", a.q, h.n());
            let seed = derive_seed(g.seed, 0);
            let z = sample(&mut rng_from_seed(seed), h.n(), 2 * a.q).into_vec();
            let opts = StructureOptions { budget_per_absorber: a.budget, removal_samples: a.samples, ..StructureOptions::default() };
            match assemble_absorbing_structure(&h, &z, &opts, seed)? {
                StructureOutcome::Built(s) => {
                    eprintln!("built: {} absorbers, {} vertices, max degree {}", s.absorbers.len(), s.vertices().len(), s.max_degree());
                    let mut sections = vec![(format!("flexible set {}", one_indexed(&s.flexible)), Vec::new())];
                    sections.extend(s.sections());
                    write_text(g.out.as_deref(), &write_annotated_sts(h.n(), &sections))
                }
                StructureOutcome::Failed { edge, budget_exceeded, absorbers_placed } => {
                    eprintln!(
                        "failed at template edge {edge} after {absorbers_placed} absorbers{}",
                        if budget_exceeded { " (budget exceeded)" } else { "" }
                    );
                    Ok(())
                }
            }
        }
        Mode::Sub | Mode::Full => {
            let h = host(a)?;
            anyhow::ensure!(h.n() >= 3, "host needs at least 3 vertices");
            if let Some(r) = &a.roots {
                let v = parse_vertex_list(r, h.n())?;
                anyhow::ensure!(v.len() == 3 && v[0] != v[1] && v[1] != v[2] && v[0] != v[2], "--roots needs 3 distinct vertices");
                let (found, end) = search(&h, a.mode, [v[0], v[1], v[2]], a.budget)?;
                return match found {
                    Some(sections) => write_text(g.out.as_deref(), &write_annotated_sts(h.n(), &sections)),
                    None => {
                        let why = if end == SearchEnd::BudgetExceeded { "budget exceeded" } else { "none exists" };
                        eprintln!("no absorber found ({why})");
                        Ok(())
                    }
                };
            }
            let rows = run_trials(g, |i, seed| {
                let v = sample(&mut rng_from_seed(seed), h.n(), 3).into_vec();
                let roots = [v[0], v[1], v[2]];
                let (r, t) = timed(g, || search(&h, a.mode, roots, a.budget));
                let (found, end) = r?;
                Ok(Row {
                    trial: i,
                    seed,
                    roots: one_indexed(&roots),
                    found: found.is_some(),
                    budget_exceeded: end == SearchEnd::BudgetExceeded,
                    edges: found.map_or(0, |s| s.iter().map(|x| x.1.len()).sum()),
                    wall_time: t,
                })
            })?;
            emit(g, "absorb", a, &rows)
        }
    }
}
