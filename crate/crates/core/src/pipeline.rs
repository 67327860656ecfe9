//! Almost-resolution of a Steiner triple system.
//!
//! The edges are split by [`good_partition`]. For every part `i` the system
//! `G_i` is decomposed into matchings inside `U_i`, and each matching is
//! extended to a perfect matching: every uncovered vertex of `U_i` takes a
//! bridge edge of `H_i` (one vertex in `U_i`, two in `W_i`), then the rest of
//! `W_i` is covered by `F_i`, through an absorbing structure when `W_i` is
//! large enough and by exact search otherwise. A class that cannot be
//! finished this way is completed by exact search over all unused edges, or
//! dropped. A final backtracking search starts from the staged matchings and
//! may improve on them. Every fallback is counted.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::absorbers::{
    assemble_absorbing_structure, complete_via_structure_within, structure_vertex_count, StructureOptions,
    StructureOutcome,
};
use crate::error::{domain, Result};
use crate::exact_cover::Budget;
use crate::hypergraph::{choose2, choose3, induced, Hypergraph, Matching, Triple, TripleSystem, VertexSet};
use crate::matching::{pack_disjoint_pms_warm, ps_decompose, trim_decomposition, PmInstance};
use crate::partition::{good_partition, PartitionOptions};
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichSet {
    pub vertices: Vec<usize>,
    /// `ξ·C(n,2)·p`, with `p` the edge density of the host.
    pub threshold: f64,
    /// Vertices with fewer than `threshold` edges into the set.
    pub deficient: Vec<usize>,
    pub subset_size: usize,
    pub subsets_checked: usize,
    /// Every subset of `subset_size` was checked, not a sample.
    pub exhaustive: bool,
}

const RICH_RESTARTS: usize = 8;
const RICH_SUBSETS: usize = 200;

/// A `size`-set `U` such that few vertices have fewer than `ξ·C(n,2)·p`
/// edges `{v, a, b}` with `a, b ∈ U`, and every checked subset of
/// `max(3, size − ⌈ξn⌉)` vertices of `U` spans an edge. Random restarts
/// followed by improving swaps; `None` when no candidate passes the subset
/// check.
pub fn rich_set_search(f: &TripleSystem, size: usize, xi: f64, seed: u64) -> Option<RichSet> {
    let n = f.n();
    if f.edge_count() == 0 || size < 3 || size > n {
        return None;
    }
    let p = f.edge_count() as f64 / choose3(n) as f64;
    let threshold = xi * choose2(n) as f64 * p;
    let subset_size = (size as isize - (xi * n as f64).ceil() as isize).max(3) as usize;
    let mut rng = rng_from_seed(seed);
    let mut best: Option<RichSet> = None;
    for _ in 0..RICH_RESTARTS {
        let mut inside = vec![false; n];
        rand::seq::index::sample(&mut rng, n, size).into_iter().for_each(|v| inside[v] = true);
        let mut deficient = deficient_vertices(f, &inside, threshold);
        for _ in 0..4 * size {
            if deficient.is_empty() {
                break;
            }
            let out: Vec<usize> = (0..n).filter(|&v| inside[v]).collect();
            let cand: Vec<usize> = (0..n).filter(|&v| !inside[v]).collect();
            if cand.is_empty() {
                break;
            }
            let (a, b) = (out[rng.gen_range(0..out.len())], cand[rng.gen_range(0..cand.len())]);
            inside[a] = false;
            inside[b] = true;
            let next = deficient_vertices(f, &inside, threshold);
            if next.len() <= deficient.len() {
                deficient = next;
            } else {
                inside[a] = true;
                inside[b] = false;
            }
        }
        let vertices: Vec<usize> = (0..n).filter(|&v| inside[v]).collect();
        let (ok, checked, exhaustive) = subsets_span_edges(f, &vertices, subset_size, &mut rng);
        if !ok {
            continue;
        }
        let better = best.as_ref().is_none_or(|b| deficient.len() < b.deficient.len());
        if better {
            best = Some(RichSet { vertices, threshold, deficient, subset_size, subsets_checked: checked, exhaustive });
        }
        if best.as_ref().is_some_and(|b| b.deficient.is_empty()) {
            break;
        }
    }
    best
}

fn deficient_vertices(f: &TripleSystem, inside: &[bool], threshold: f64) -> Vec<usize> {
    let mut link = vec![0usize; f.n()];
    for e in f.edges() {
        let [a, b, c] = e.vertices();
        if inside[b] && inside[c] {
            link[a] += 1;
        }
        if inside[a] && inside[c] {
            link[b] += 1;
        }
        if inside[a] && inside[b] {
            link[c] += 1;
        }
    }
    (0..f.n()).filter(|&v| (link[v] as f64) < threshold).collect()
}

/// Whether every (or every sampled) `k`-subset of `set` spans an edge.
fn subsets_span_edges(f: &TripleSystem, set: &[usize], k: usize, rng: &mut Rng) -> (bool, usize, bool) {
    let k = k.min(set.len());
    let mut inside = vec![false; f.n()];
    set.iter().for_each(|&v| inside[v] = true);
    let edges: Vec<[usize; 3]> = f.edges().iter().map(|e| e.vertices()).filter(|vs| vs.iter().all(|&v| inside[v])).collect();
    let spans = |chosen: &[bool]| edges.iter().any(|vs| vs.iter().all(|&v| chosen[v]));
    let total = binomial_capped(set.len(), k, RICH_SUBSETS as u64 + 1);
    let mut chosen = vec![false; f.n()];
    if total <= RICH_SUBSETS as u64 {
        let mut idx: Vec<usize> = (0..k).collect();
        let mut checked = 0;
        loop {
            chosen.iter_mut().for_each(|c| *c = false);
            idx.iter().for_each(|&i| chosen[set[i]] = true);
            checked += 1;
            if !spans(&chosen) {
                return (false, checked, true);
            }
            // next k-combination in lexicographic order
            let Some(pos) = (0..k).rev().find(|&j| idx[j] < set.len() - k + j) else {
                return (true, checked, true);
            };
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    for checked in 1..=RICH_SUBSETS {
        chosen.iter_mut().for_each(|c| *c = false);
        rand::seq::index::sample(rng, set.len(), k).into_iter().for_each(|i| chosen[set[i]] = true);
        if !spans(&chosen) {
            return (false, checked, false);
        }
    }
    (true, RICH_SUBSETS, false)
}

fn binomial_capped(n: usize, k: usize, cap: u64) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..k.min(n - k) {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
        if acc > cap {
            return cap;
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinishOutcome {
    Complete { matching: Matching, absorbers: usize },
    StructureFailed { edge: usize, budget_exceeded: bool },
    /// Greedy covering got stuck before the structure could take over.
    Stuck { stage: FinishStage, uncovered: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishStage {
    /// Some leftover vertex has no edge into two free vertices of `Z`.
    Leftover,
    /// More leftovers than half of `Z` can take.
    TooManyLeftovers,
    /// `Z` could not be filled up to exactly half.
    Flexible,
}

/// Perfect matching of the vertices with `region[v]`: an absorbing structure
/// with flexible set `z` is placed inside the region, the rest is matched
/// greedily, each leftover takes an edge with two vertices of `Z`, edges
/// inside `Z` fill it up to exactly half, and the structure absorbs the rest.
pub fn finish_through_structure<H: Hypergraph>(
    h: &H,
    region: &[bool],
    z: &[usize],
    opts: &StructureOptions,
    seed: u64,
) -> Result<FinishOutcome> {
    let n = h.vertex_count();
    if region.len() != n {
        return domain("region mask has the wrong length");
    }
    if z.iter().any(|&v| v >= n || !region[v]) {
        return domain("flexible set must lie inside the region");
    }
    let mut rng = rng_from_seed(seed);
    let mut sopts = opts.clone();
    sopts.allowed = Some(match &opts.allowed {
        Some(a) => a.iter().zip(region).map(|(&x, &y)| x && y).collect(),
        None => region.to_vec(),
    });
    let a = match assemble_absorbing_structure(h, z, &sopts, rng.gen())? {
        StructureOutcome::Built(a) => a,
        StructureOutcome::Failed { edge, budget_exceeded, .. } => {
            return Ok(FinishOutcome::StructureFailed { edge, budget_exceeded })
        }
    };
    let mut free = region.to_vec();
    a.vertices().iter().for_each(|&v| free[v] = false);
    let mut rest: Vec<usize> = (0..n).filter(|&v| free[v]).collect();
    rest.shuffle(&mut rng);
    let mut edges = Vec::new();
    for &v in &rest {
        if !free[v] {
            continue;
        }
        free[v] = false;
        if let Some(t) = take_edge(h, v, &rest, &mut free) {
            edges.push(t);
        } else {
            free[v] = true;
        }
    }
    let leftovers: Vec<usize> = rest.iter().copied().filter(|&v| free[v]).collect();
    let q = a.template.q;
    if 2 * leftovers.len() > q {
        return Ok(FinishOutcome::Stuck { stage: FinishStage::TooManyLeftovers, uncovered: leftovers.len() });
    }
    let mut zfree = vec![false; n];
    z.iter().for_each(|&v| zfree[v] = true);
    for (k, &l) in leftovers.iter().enumerate() {
        match take_edge(h, l, z, &mut zfree) {
            Some(t) => edges.push(t),
            None => return Ok(FinishOutcome::Stuck { stage: FinishStage::Leftover, uncovered: leftovers.len() - k }),
        }
    }
    let mut taken = 2 * leftovers.len();
    while taken < q {
        let mut found = None;
        for &v in z {
            if !zfree[v] {
                continue;
            }
            zfree[v] = false;
            found = take_edge(h, v, z, &mut zfree);
            if found.is_some() {
                break;
            }
            zfree[v] = true;
        }
        let Some(t) = found else {
            return Ok(FinishOutcome::Stuck { stage: FinishStage::Flexible, uncovered: q - taken });
        };
        edges.push(t);
        taken += 3;
    }
    if taken != q {
        return Ok(FinishOutcome::Stuck { stage: FinishStage::Flexible, uncovered: taken.abs_diff(q) });
    }
    let m = Matching::new(edges)?;
    let matching = complete_via_structure_within(&a, &m, region)?;
    Ok(FinishOutcome::Complete { matching, absorbers: a.absorbers.len() })
}

/// An edge `{v, u, w}` with `u, w` free members of `pool`; marks them used.
fn take_edge<H: Hypergraph>(h: &H, v: usize, pool: &[usize], free: &mut [bool]) -> Option<Triple> {
    for &u in pool {
        if u == v || !free[u] {
            continue;
        }
        if let Some(w) = h.find_third(v, u, |w| w != v && free[w]) {
            free[u] = false;
            free[w] = false;
            return Some(Triple::sorted_unchecked(v, u, w));
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub delta: f64,
    /// Node budget shared by every exact search of the run.
    pub budget: u64,
    /// Classes shorter than `(1 − trim)·|U_i|/3` are discarded.
    pub trim: f64,
    pub ell_cap: Option<usize>,
    pub xi: f64,
    pub structure: StructureOptions,
    /// Run the warm-started backtracking search after the staged classes.
    pub final_search: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            delta: 0.1,
            budget: 200_000,
            trim: 0.5,
            ell_cap: None,
            xi: 0.05,
            structure: StructureOptions::default(),
            final_search: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStats {
    pub classes_found: usize,
    pub classes_trimmed: usize,
    pub classes_attempted: usize,
    pub bridge_successes: usize,
    pub bridge_failures: usize,
    pub bridge_edges: usize,
    pub structure_infeasible: usize,
    pub structure_attempts: usize,
    pub absorber_completions: usize,
    /// Residual of `W_i` covered by exact search within `F_i`.
    pub f_completions: usize,
    /// Classes rescued by exact search over all unused edges.
    pub residual_fallbacks: usize,
    pub dropped: usize,
    pub staged: usize,
    /// Staged matchings still present in the output.
    pub staged_retained: usize,
    pub search_nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub edges: usize,
    pub delta: f64,
    pub ell: usize,
    pub seed: u64,
    pub budget: u64,
    pub stats: StageStats,
    pub matchings: Vec<Matching>,
    /// Fraction of edges used by the output matchings.
    pub coverage: f64,
}

pub fn almost_resolve(s: &TripleSystem, delta: f64, seed: u64, budget: u64) -> Result<PipelineReport> {
    almost_resolve_with(s, &PipelineOptions { delta, budget, ..PipelineOptions::default() }, seed)
}

struct Part<'a> {
    s: &'a TripleSystem,
    in_w: &'a [bool],
    is_f: Vec<bool>,
    /// `H_i` edge ids at each vertex of `U_i`.
    bridges_at: Vec<Vec<usize>>,
}

pub fn almost_resolve_with(s: &TripleSystem, opts: &PipelineOptions, seed: u64) -> Result<PipelineReport> {
    let n = s.n();
    if n % 6 != 3 {
        return domain(format!("almost-resolution needs n ≡ 3 (mod 6), got {n}"));
    }
    let popts = PartitionOptions { ell_cap: opts.ell_cap, ..PartitionOptions::default() };
    let bundle = good_partition(s, opts.delta, seed, &popts)?;
    let total = Budget::new(opts.budget);
    let per_search = (opts.budget / 32).max(500);
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    let mut used = vec![false; s.edge_count()];
    let mut staged: Vec<Matching> = Vec::new();
    let mut stats = StageStats::default();
    for i in 0..bundle.ell {
        let g_ids = bundle.g(i);
        let g = s.subsystem(g_ids.iter().copied());
        let u_size = bundle.u(i).len();
        let d = ps_decompose(&g)?;
        let min_size = ((u_size / 3) as f64 * (1.0 - opts.trim)).ceil().max(1.0) as usize;
        let kept = trim_decomposition(&d, min_size);
        let mut classes: Vec<Matching> = kept.matchings.clone();
        stats.classes_found += d.matchings.iter().filter(|m| !m.is_empty()).count();
        stats.classes_trimmed += d.matchings.iter().filter(|m| !m.is_empty()).count() - classes.len();
        classes.sort_by_key(|m| std::cmp::Reverse(m.len()));
        let mut is_f = vec![false; s.edge_count()];
        bundle.f(i).into_iter().for_each(|id| is_f[id] = true);
        let mut bridges_at = vec![Vec::new(); n];
        for id in bundle.h(i) {
            for v in s.edge(id).vertices() {
                if !bundle.in_w[i][v] {
                    bridges_at[v].push(id);
                }
            }
        }
        let part = Part { s, in_w: &bundle.in_w[i], is_f, bridges_at };
        for class in &classes {
            stats.classes_attempted += 1;
            let ids: Vec<usize> = class.edges().iter().map(|&e| s.edge_id(e).expect("class edges come from S")).collect();
            if ids.iter().any(|&id| used[id]) {
                stats.dropped += 1;
                continue;
            }
            let found = complete_class(&part, &ids, &used, &total, per_search, opts, &mut rng, &mut stats)?;
            match found {
                Some(pm) => {
                    pm.iter().for_each(|&id| used[id] = true);
                    staged.push(Matching::new(pm.iter().map(|&id| s.edge(id)).collect())?);
                }
                None => stats.dropped += 1,
            }
        }
    }
    stats.staged = staged.len();
    let matchings = if opts.final_search && !total.is_exhausted() {
        let out = pack_disjoint_pms_warm(s, &vec![true; s.edge_count()], &staged, total.remaining(), seed);
        stats.search_nodes = out.nodes_used;
        if out.matchings.len() >= staged.len() { out.matchings } else { staged.clone() }
    } else {
        staged.clone()
    };
    stats.staged_retained = staged.iter().filter(|m| matchings.contains(m)).count();
    let edges = s.edge_count();
    let coverage = if edges == 0 { 0.0 } else { (matchings.len() * n / 3) as f64 / edges as f64 };
    let report = PipelineReport {
        n,
        edges,
        delta: opts.delta,
        ell: bundle.ell,
        seed,
        budget: opts.budget,
        stats,
        matchings,
        coverage,
    };
    if let Err(msg) = verify_packing(s, &report.matchings) {
        return domain(format!("pipeline produced an invalid packing: {msg}"));
    }
    Ok(report)
}

/// Extends one class to a perfect matching; edge ids of the result or
/// `None` when even the fallback fails.
#[allow(clippy::too_many_arguments)]
fn complete_class(
    part: &Part,
    class: &[usize],
    used: &[bool],
    total: &Budget,
    per_search: u64,
    opts: &PipelineOptions,
    rng: &mut Rng,
    stats: &mut StageStats,
) -> Result<Option<Vec<usize>>> {
    let s = part.s;
    let n = s.n();
    let mut covered = vec![false; n];
    for &id in class {
        s.edge(id).vertices().iter().for_each(|&v| covered[v] = true);
    }
    let class_cover = covered.clone();
    let mut pm = class.to_vec();
    let mut bridged = true;
    for u in (0..n).filter(|&v| !part.in_w[v] && !class_cover[v]) {
        let mut cands = part.bridges_at[u].clone();
        cands.shuffle(rng);
        let pick = cands.into_iter().find(|&id| !used[id] && s.edge(id).vertices().iter().all(|&v| v == u || !covered[v]));
        match pick {
            Some(id) => {
                s.edge(id).vertices().iter().for_each(|&v| covered[v] = true);
                pm.push(id);
            }
            None => {
                bridged = false;
                break;
            }
        }
    }
    if bridged {
        stats.bridge_successes += 1;
        stats.bridge_edges += pm.len() - class.len();
        let residual: Vec<bool> = (0..n).map(|v| !covered[v]).collect();
        let r = residual.iter().filter(|&&b| b).count();
        let q = 4.max(r.div_ceil(20));
        if r >= structure_vertex_count(q) {
            stats.structure_attempts += 1;
            if let Some(extra) = finish_in_f(part, &residual, used, q, opts, rng.gen())? {
                stats.absorber_completions += 1;
                pm.extend(extra);
                return Ok(Some(pm));
            }
        } else {
            stats.structure_infeasible += 1;
        }
        let slice = total.slice(per_search);
        let mut inst = PmInstance::new(s, &residual, |id| part.is_f[id] && !used[id], None);
        let (sol, _) = inst.ec.first(&slice);
        total.absorb(&slice);
        if let Some(sol) = sol {
            stats.f_completions += 1;
            pm.extend(inst.edges(&sol));
            return Ok(Some(pm));
        }
    } else {
        stats.bridge_failures += 1;
    }
    let ground: Vec<bool> = class_cover.iter().map(|&c| !c).collect();
    let slice = total.slice(per_search);
    let mut inst = PmInstance::new(s, &ground, |id| !used[id], None);
    let (sol, _) = inst.ec.first(&slice);
    total.absorb(&slice);
    Ok(sol.map(|sol| {
        stats.residual_fallbacks += 1;
        let mut pm = class.to_vec();
        pm.extend(inst.edges(&sol));
        pm
    }))
}

/// Covers `residual` (inside `W_i`) with unused `F_i` edges through a rich
/// set and an absorbing structure.
fn finish_in_f(
    part: &Part,
    residual: &[bool],
    used: &[bool],
    q: usize,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<Option<Vec<usize>>> {
    let s = part.s;
    let host = s.subsystem((0..s.edge_count()).filter(|&id| part.is_f[id] && !used[id]));
    let (local, map) = induced(&host, &VertexSet::from_mask(residual.to_vec()));
    let Some(rich) = rich_set_search(&local, 2 * q, opts.xi, seed) else {
        return Ok(None);
    };
    let region = vec![true; local.n()];
    match finish_through_structure(&local, &region, &rich.vertices, &opts.structure, seed)? {
        FinishOutcome::Complete { matching, .. } => Ok(Some(
            matching
                .edges()
                .iter()
                .map(|e| {
                    let [a, b, c] = e.vertices().map(|v| map[v]);
                    s.edge_id(Triple::sorted_unchecked(a, b, c)).expect("local edges come from S")
                })
                .collect(),
        )),
        _ => Ok(None),
    }
}

/// Every matching is a perfect matching of `S` and no edge is used twice.
pub fn verify_packing(s: &TripleSystem, matchings: &[Matching]) -> std::result::Result<(), String> {
    let mut seen = vec![false; s.edge_count()];
    for (k, m) in matchings.iter().enumerate() {
        if !m.is_perfect(s.n()) {
            return Err(format!("matching {k} is not perfect"));
        }
        for &e in m.edges() {
            let id = s.edge_id(e).ok_or_else(|| format!("matching {k} uses {e}, not an edge"))?;
            if seen[id] {
                return Err(format!("edge {e} used twice"));
            }
            seen[id] = true;
        }
    }
    Ok(())
}
