//! Perfect matchings, resolutions, heuristic matchings and edge decompositions.

use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exact_cover::{Budget, ExactCover, SearchEnd};
use crate::hypergraph::{Matching, Triple, TripleSystem};
use crate::rng::{rng_from_seed, Rng};

/// Exact-cover instance whose items are the vertices of `ground` and whose
/// options are the usable edges lying inside it. Keeps the edge id of every
/// option.
pub(crate) struct PmInstance {
    pub ec: ExactCover,
    pub edge_of: Vec<usize>,
}

impl PmInstance {
    /// `ground[v]` marks the vertices to cover; `usable` filters edge ids.
    /// Options follow `order` when given, edge id order otherwise.
    pub fn new(
        s: &TripleSystem,
        ground: &[bool],
        usable: impl Fn(usize) -> bool,
        order: Option<&[usize]>,
    ) -> Self {
        let mut index = vec![usize::MAX; s.n()];
        let mut k = 0;
        for (v, &g) in ground.iter().enumerate() {
            if g {
                index[v] = k;
                k += 1;
            }
        }
        let ids: Vec<usize> = match order {
            Some(o) => o.to_vec(),
            None => (0..s.edge_count()).collect(),
        };
        let mut options = Vec::new();
        let mut edge_of = Vec::new();
        for id in ids {
            if !usable(id) {
                continue;
            }
            let vs = s.edge(id).vertices();
            if vs.iter().all(|&v| ground[v]) {
                options.push(vs.iter().map(|&v| index[v]).collect());
                edge_of.push(id);
            }
        }
        PmInstance { ec: ExactCover::new(k, options), edge_of }
    }

    pub fn edges(&self, sol: &[usize]) -> Vec<usize> {
        sol.iter().map(|&o| self.edge_of[o]).collect()
    }
}

fn matching_of(s: &TripleSystem, ids: &[usize]) -> Matching {
    Matching::new(ids.iter().map(|&i| s.edge(i)).collect()).expect("exact cover yields disjoint edges")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoMatchingReason {
    /// `3 ∤ n`.
    Divisibility,
    /// The search space was exhausted.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PmOutcome {
    Found(Matching),
    None(NoMatchingReason),
    /// The budget ran out before a decision.
    Indeterminate,
}

impl PmOutcome {
    pub fn matching(&self) -> Option<&Matching> {
        match self {
            PmOutcome::Found(m) => Some(m),
            _ => None,
        }
    }
}

pub fn find_perfect_matching(s: &TripleSystem) -> PmOutcome {
    find_perfect_matching_within(s, &Budget::unlimited())
}

pub fn find_perfect_matching_within(s: &TripleSystem, budget: &Budget) -> PmOutcome {
    if s.n() % 3 != 0 {
        return PmOutcome::None(NoMatchingReason::Divisibility);
    }
    let mut inst = PmInstance::new(s, &vec![true; s.n()], |_| true, None);
    match inst.ec.first(budget) {
        (Some(sol), _) => PmOutcome::Found(matching_of(s, &inst.edges(&sol))),
        (None, SearchEnd::BudgetExceeded) => PmOutcome::Indeterminate,
        (None, _) => PmOutcome::None(NoMatchingReason::Exhausted),
    }
}

/// Up to `limit` perfect matchings in search order.
pub fn enumerate_perfect_matchings(s: &TripleSystem, limit: usize) -> Vec<Matching> {
    let mut out = Vec::new();
    if s.n() % 3 != 0 || limit == 0 {
        return out;
    }
    let mut inst = PmInstance::new(s, &vec![true; s.n()], |_| true, None);
    let edge_of = inst.edge_of.clone();
    inst.ec.search(&Budget::unlimited(), |sol| {
        let ids: Vec<usize> = sol.iter().map(|&o| edge_of[o]).collect();
        out.push(matching_of(s, &ids));
        if out.len() >= limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    out
}

/// A partition of the edges into perfect matchings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub classes: Vec<Matching>,
}

impl Resolution {
    /// Every class perfect, every edge of `s` in exactly one class.
    pub fn is_valid_for(&self, s: &TripleSystem) -> bool {
        let n = s.n();
        let mut seen = vec![false; s.edge_count()];
        for c in &self.classes {
            if !c.is_perfect(n) {
                return false;
            }
            for &t in c.edges() {
                match s.edge_id(t) {
                    Some(id) if !seen[id] => seen[id] = true,
                    _ => return false,
                }
            }
        }
        seen.iter().all(|&b| b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveOutcome {
    Resolved(Resolution),
    /// Certified: no resolution exists.
    NotResolvable,
    /// The budget ran out before a decision.
    Indeterminate,
}

/// Resolves `s` by exact cover over its edges, with all perfect matchings
/// as options.
pub fn resolve(s: &TripleSystem, budget: &Budget) -> Result<ResolveOutcome> {
    let n = s.n();
    if n % 6 != 3 {
        return domain(format!("resolvability needs n ≡ 3 (mod 6), got n = {n}"));
    }
    let mut inst = PmInstance::new(s, &vec![true; n], |_| true, None);
    let mut pms: Vec<Vec<usize>> = Vec::new();
    let edge_of = inst.edge_of.clone();
    let end = inst.ec.search(budget, |sol| {
        let mut ids: Vec<usize> = sol.iter().map(|&o| edge_of[o]).collect();
        ids.sort_unstable();
        pms.push(ids);
        ControlFlow::Continue(())
    });
    if end == SearchEnd::BudgetExceeded {
        return Ok(ResolveOutcome::Indeterminate);
    }
    let mut classes = ExactCover::new(s.edge_count(), pms.clone());
    Ok(match classes.first(budget) {
        (Some(sol), _) => {
            let classes = sol.iter().map(|&o| matching_of(s, &pms[o])).collect();
            ResolveOutcome::Resolved(Resolution { classes })
        }
        (None, SearchEnd::BudgetExceeded) => ResolveOutcome::Indeterminate,
        (None, _) => ResolveOutcome::NotResolvable,
    })
}

/// Adds edges in uniformly random order whenever they are disjoint from
/// those already taken.
pub fn greedy_maximal_matching(s: &TripleSystem, seed: u64) -> Matching {
    greedy_maximal_matching_with(s, &mut rng_from_seed(seed))
}

pub fn greedy_maximal_matching_with(s: &TripleSystem, rng: &mut Rng) -> Matching {
    let mut order: Vec<usize> = (0..s.edge_count()).collect();
    order.shuffle(rng);
    let mut used = vec![false; s.n()];
    greedy_extend(s, &order, &mut used)
}

fn greedy_extend(s: &TripleSystem, order: &[usize], used: &mut [bool]) -> Matching {
    let mut taken = Vec::new();
    for &id in order {
        let vs = s.edge(id).vertices();
        if vs.iter().all(|&v| !used[v]) {
            vs.iter().for_each(|&v| used[v] = true);
            taken.push(s.edge(id));
        }
    }
    Matching::new(taken).expect("greedy picks disjoint edges")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NibbleOutcome {
    pub matching: Matching,
    pub rounds: usize,
    /// Edges contributed by the bites; the rest come from the greedy finish.
    pub nibbled_edges: usize,
}

/// Rounds of: activate every surviving edge with probability `bite / d̄`
/// (`d̄` the current mean degree over uncovered vertices), keep the activated
/// edges that meet no other activated edge, delete their vertices. Stops
/// once `d̄ < 1` and finishes greedily.
pub fn nibble_matching(s: &TripleSystem, bite: f64, seed: u64) -> Result<NibbleOutcome> {
    if !(bite > 0.0 && bite <= 0.2) {
        return domain(format!("bite must lie in (0, 0.2], got {bite}"));
    }
    let n = s.n();
    let mut rng = rng_from_seed(seed);
    let mut used = vec![false; n];
    let mut alive: Vec<usize> = (0..s.edge_count()).collect();
    let mut taken = Vec::new();
    let mut rounds = 0;
    loop {
        alive.retain(|&id| s.edge(id).vertices().iter().all(|&v| !used[v]));
        let free = used.iter().filter(|&&u| !u).count();
        if alive.is_empty() || free == 0 {
            break;
        }
        let mean_degree = 3.0 * alive.len() as f64 / free as f64;
        if mean_degree < 1.0 {
            break;
        }
        rounds += 1;
        let prob = (bite / mean_degree).min(1.0);
        let active: Vec<usize> = alive.iter().copied().filter(|_| rng.gen_bool(prob)).collect();
        let mut hits = vec![0u32; n];
        for &id in &active {
            for v in s.edge(id).vertices() {
                hits[v] += 1;
            }
        }
        for &id in &active {
            let vs = s.edge(id).vertices();
            if vs.iter().all(|&v| hits[v] == 1) {
                vs.iter().for_each(|&v| used[v] = true);
                taken.push(s.edge(id));
            }
        }
    }
    let nibbled_edges = taken.len();
    alive.shuffle(&mut rng);
    let finish = greedy_extend(s, &alive, &mut used);
    taken.extend_from_slice(finish.edges());
    Ok(NibbleOutcome {
        matching: Matching::new(taken).expect("bites and finish are disjoint"),
        rounds,
        nibbled_edges,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub matchings: Vec<Matching>,
    pub uncovered_per_class: Vec<Vec<usize>>,
    pub colors_used: usize,
}

impl DecompositionReport {
    fn from_classes(n: usize, matchings: Vec<Matching>) -> Self {
        let uncovered_per_class = matchings.iter().map(|m| m.uncovered(n)).collect();
        let colors_used = matchings.len();
        DecompositionReport { n, matchings, uncovered_per_class, colors_used }
    }

    /// Largest number of classes missing a single vertex.
    pub fn max_missing(&self) -> usize {
        let mut missing = vec![0usize; self.n];
        for u in &self.uncovered_per_class {
            for &v in u {
                missing[v] += 1;
            }
        }
        missing.into_iter().max().unwrap_or(0)
    }
}

const NO_EDGE: u32 = u32::MAX;

/// Greedy proper colouring of the conflict graph (edges adjacent when they
/// share a vertex) in edge id order. When an edge would open a new colour,
/// one recolouring is tried first: a colour blocked at the edge by a single
/// edge `f` is freed if `f` can move to another existing colour.
pub fn ps_decompose(s: &TripleSystem) -> Result<DecompositionReport> {
    if !s.is_linear() {
        return domain("edge decomposition needs a linear system");
    }
    let n = s.n();
    let m = s.edge_count();
    // at[v][c] = edge of colour c at v
    let mut at: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut color = vec![usize::MAX; m];
    let mut colors = 0usize;
    let set = |at: &mut Vec<Vec<u32>>, v: usize, c: usize, e: u32| {
        if at[v].len() <= c {
            at[v].resize(c + 1, NO_EDGE);
        }
        at[v][c] = e;
    };
    let free_at = |at: &Vec<Vec<u32>>, v: usize, c: usize| at[v].get(c).is_none_or(|&e| e == NO_EDGE);
    for id in 0..m {
        let vs = s.edge(id).vertices();
        let mut c = (0..colors).find(|&c| vs.iter().all(|&v| free_at(&at, v, c)));
        if c.is_none() {
            'colors: for c1 in 0..colors {
                let blockers: Vec<u32> = vs.iter().filter_map(|&v| at[v].get(c1).copied()).filter(|&e| e != NO_EDGE).collect();
                let f = blockers[0];
                if blockers.iter().any(|&g| g != f) {
                    continue;
                }
                let fv = s.edge(f as usize).vertices();
                for c2 in 0..colors {
                    if c2 != c1 && fv.iter().all(|&v| free_at(&at, v, c2)) {
                        for &v in &fv {
                            at[v][c1] = NO_EDGE;
                            set(&mut at, v, c2, f);
                        }
                        color[f as usize] = c2;
                        c = Some(c1);
                        break 'colors;
                    }
                }
            }
        }
        let c = c.unwrap_or_else(|| {
            colors += 1;
            colors - 1
        });
        for &v in &vs {
            set(&mut at, v, c, id as u32);
        }
        color[id] = c;
    }
    let mut classes: Vec<Vec<Triple>> = vec![Vec::new(); colors];
    for (id, &c) in color.iter().enumerate() {
        classes[c].push(s.edge(id));
    }
    let matchings = classes
        .into_iter()
        .map(|c| Matching::new(c).expect("colour classes are matchings"))
        .collect();
    Ok(DecompositionReport::from_classes(n, matchings))
}

/// Drops classes with fewer than `min_size` edges.
pub fn trim_decomposition(d: &DecompositionReport, min_size: usize) -> DecompositionReport {
    let kept = d.matchings.iter().filter(|m| m.len() >= min_size).cloned().collect();
    DecompositionReport::from_classes(d.n, kept)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackOutcome {
    pub matchings: Vec<Matching>,
    /// Minimum degree of the input: no packing can be larger.
    pub upper_bound: usize,
    pub nodes_used: u64,
    pub restarts: usize,
    /// Search exhausted within budget, so the packing is optimal.
    pub optimal: bool,
}

/// Edge-disjoint perfect matchings found level by level. Each level
/// enumerates perfect matchings of the residual system by exact cover, and a
/// depth-first search backtracks across levels. Restarts shuffle the option
/// order; every restart gets an eighth of the total `budget` node
/// expansions (at least 1000) until it is spent. The best packing seen is
/// returned.
pub fn pack_disjoint_pms(s: &TripleSystem, budget: u64, seed: u64) -> PackOutcome {
    pack_disjoint_pms_from(s, &vec![true; s.edge_count()], budget, seed)
}

/// [`pack_disjoint_pms`] restricted to the edges with `usable[id]`.
pub fn pack_disjoint_pms_from(s: &TripleSystem, usable: &[bool], budget: u64, seed: u64) -> PackOutcome {
    pack_disjoint_pms_warm(s, usable, &[], budget, seed)
}

/// [`pack_disjoint_pms_from`] whose search tries the given edge-disjoint
/// perfect matchings first, level by level, and may later backtrack out of
/// them. The first leaf reached extends `warm`, so the result is never
/// smaller than the usable prefix of `warm`.
pub fn pack_disjoint_pms_warm(
    s: &TripleSystem,
    usable: &[bool],
    warm: &[Matching],
    budget: u64,
    seed: u64,
) -> PackOutcome {
    let warm: Vec<Vec<usize>> = warm
        .iter()
        .map_while(|m| m.edges().iter().map(|&e| s.edge_id(e).filter(|&id| usable[id])).collect())
        .collect();
    let n = s.n();
    let mut deg = vec![0usize; n];
    for (id, e) in s.edges().iter().enumerate() {
        if usable[id] {
            e.vertices().iter().for_each(|&v| deg[v] += 1);
        }
    }
    let upper_bound = deg.iter().copied().min().unwrap_or(0);
    let mut out = PackOutcome { matchings: Vec::new(), upper_bound, nodes_used: 0, restarts: 0, optimal: false };
    if n == 0 || n % 3 != 0 || upper_bound == 0 {
        out.optimal = true;
        return out;
    }
    let total = Budget::new(budget);
    let mut rng = rng_from_seed(seed);
    let mut best: Vec<Vec<usize>> = Vec::new();
    let slice_size = (budget / 8).max(1000);
    while !total.is_exhausted() {
        let mut order: Vec<usize> = (0..s.edge_count()).collect();
        if out.restarts > 0 {
            order.shuffle(&mut rng);
        }
        out.restarts += 1;
        let slice = total.slice(slice_size);
        let mut state = PackState {
            s,
            order: &order,
            warm: &warm,
            usable: usable.to_vec(),
            stack: Vec::new(),
            best: &mut best,
            upper_bound,
        };
        let end = state.level(&slice);
        total.absorb(&slice);
        if end == LevelEnd::Complete {
            out.optimal = true;
            break;
        }
        if best.len() >= upper_bound {
            out.optimal = true;
            break;
        }
    }
    out.nodes_used = total.used();
    out.matchings = best.iter().map(|ids| matching_of(s, ids)).collect();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LevelEnd {
    /// Subtree explored.
    Complete,
    /// Optimum reached or budget gone.
    Stop,
}

struct PackState<'a> {
    s: &'a TripleSystem,
    order: &'a [usize],
    warm: &'a [Vec<usize>],
    usable: Vec<bool>,
    stack: Vec<Vec<usize>>,
    best: &'a mut Vec<Vec<usize>>,
    upper_bound: usize,
}

impl PackState<'_> {
    fn residual_min_degree(&self) -> usize {
        let mut deg = vec![0usize; self.s.n()];
        for (id, e) in self.s.edges().iter().enumerate() {
            if self.usable[id] {
                e.vertices().iter().for_each(|&v| deg[v] += 1);
            }
        }
        deg.into_iter().min().unwrap_or(0)
    }

    fn level(&mut self, budget: &Budget) -> LevelEnd {
        if self.stack.len() > self.best.len() {
            *self.best = self.stack.clone();
        }
        if self.best.len() >= self.upper_bound {
            return LevelEnd::Stop;
        }
        if self.stack.len() + self.residual_min_degree() <= self.best.len() {
            return LevelEnd::Complete;
        }
        let usable = self.usable.clone();
        // options of the warm matching go first, so MRV picks it before anything else
        let warm = self.warm.get(self.stack.len()).filter(|w| w.iter().all(|&id| usable[id]));
        let order: Vec<usize> = match warm {
            Some(w) => w.iter().copied().chain(self.order.iter().copied().filter(|id| !w.contains(id))).collect(),
            None => self.order.to_vec(),
        };
        let mut inst = PmInstance::new(self.s, &vec![true; self.s.n()], |id| usable[id], Some(&order));
        let edge_of = inst.edge_of.clone();
        let mut stopped = false;
        let end = inst.ec.search(budget, |sol| {
            let ids: Vec<usize> = sol.iter().map(|&o| edge_of[o]).collect();
            ids.iter().for_each(|&id| self.usable[id] = false);
            self.stack.push(ids);
            let r = self.level(budget);
            let ids = self.stack.pop().expect("pushed above");
            ids.iter().for_each(|&id| self.usable[id] = true);
            if r == LevelEnd::Stop || budget.is_exhausted() {
                stopped = true;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        if stopped || end == SearchEnd::BudgetExceeded {
            LevelEnd::Stop
        } else {
            LevelEnd::Complete
        }
    }
}
