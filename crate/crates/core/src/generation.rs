//! Random (partial) Steiner triple systems.
//!
//! * [`triangle_removal`] / [`triangle_removal_from`]: repeatedly delete a
//!   uniformly random triangle of the leave graph.
//! * [`sample_binomial_3graph`]: every triple independently with probability `p`.
//! * [`couple`]: a binomial 3-graph thinned to its isolated, non-conflicting edges.
//! * [`complete_to_sts`]: hill-climbing to a full system.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::hypergraph::{
    admits_sts, choose2, choose3, leave_graph, pair_id, LeaveGraph, OrderedPartialSts, Triple,
    TripleSystem,
};
use crate::rng::{rng_from_seed, Rng};

/// Fenwick tree over non-negative integer weights.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn from_weights(w: &[u32]) -> Self {
        let n = w.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &x) in w.iter().enumerate() {
            tree[i + 1] += x as u64;
            let j = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if j <= n {
                tree[j] += tree[i + 1];
            }
        }
        Fenwick { tree }
    }

    fn add(&mut self, i: usize, delta: i64) {
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] = (self.tree[k] as i64 + delta) as u64;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> u64 {
        let mut k = self.tree.len() - 1;
        let mut s = 0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// The triangle removal process on an explicit leave graph.
///
/// Every present pair carries its codegree as a weight. Drawing a pair with
/// probability proportional to its codegree and then a uniform common
/// neighbour selects each triangle with probability
/// `3 / (3 · #triangles)`: exactly uniform.
#[derive(Debug, Clone)]
pub struct TriangleRemoval {
    leave: LeaveGraph,
    codegree: Vec<u32>,
    pair_ends: Vec<(u32, u32)>,
    weights: Fenwick,
}

impl TriangleRemoval {
    pub fn new(leave: LeaveGraph) -> Self {
        let n = leave.n();
        let mut pair_ends = Vec::with_capacity(choose2(n));
        let mut codegree = Vec::with_capacity(choose2(n));
        for a in 0..n {
            for b in a + 1..n {
                pair_ends.push((a as u32, b as u32));
                codegree.push(if leave.has(a, b) { leave.common_count(a, b) as u32 } else { 0 });
            }
        }
        let weights = Fenwick::from_weights(&codegree);
        TriangleRemoval { leave, codegree, pair_ends, weights }
    }

    pub fn leave(&self) -> &LeaveGraph {
        &self.leave
    }

    pub fn into_leave(self) -> LeaveGraph {
        self.leave
    }

    /// Number of triangles in the current leave graph.
    pub fn triangle_count(&self) -> u64 {
        self.weights.total() / 3
    }

    fn set_weight(&mut self, p: usize, w: u32) {
        let delta = w as i64 - self.codegree[p] as i64;
        if delta != 0 {
            self.codegree[p] = w;
            self.weights.add(p, delta);
        }
    }

    fn remove_pair(&mut self, x: usize, y: usize) {
        let n = self.leave.n();
        self.leave.remove(x, y);
        self.set_weight(pair_id(n, x, y), 0);
        let common: Vec<usize> = {
            let rx = self.leave.row(x);
            let ry = self.leave.row(y);
            let words: Vec<u64> = rx.iter().zip(ry).map(|(a, b)| a & b).collect();
            crate::hypergraph::bits(&words).collect()
        };
        for w in common {
            let pwx = pair_id(n, w, x);
            let pwy = pair_id(n, w, y);
            self.set_weight(pwx, self.codegree[pwx] - 1);
            self.set_weight(pwy, self.codegree[pwy] - 1);
        }
    }

    /// Removes a uniformly random triangle; `None` if the leave graph is
    /// triangle-free.
    pub fn step(&mut self, rng: &mut Rng) -> Option<Triple> {
        let total = self.weights.total();
        if total == 0 {
            return None;
        }
        let p = self.weights.find(rng.gen_range(0..total));
        let (a, b) = self.pair_ends[p];
        let (a, b) = (a as usize, b as usize);
        let k = rng.gen_range(0..self.codegree[p] as usize);
        let w = self
            .leave
            .nth_common(a, b, k)
            .expect("codegree weight matches common neighbourhood");
        self.remove_pair(a, b);
        self.remove_pair(a, w);
        self.remove_pair(b, w);
        Some(Triple::sorted_unchecked(a, b, w))
    }
}

/// Outcome of running the triangle removal process.
#[derive(Debug, Clone)]
pub struct TrpOutcome {
    /// Every placed triple in order; on abort this is the partial run.
    pub partial: OrderedPartialSts,
    pub aborted: bool,
    /// Steps of this run (not counting any starting system).
    pub steps_completed: usize,
    pub leave: LeaveGraph,
}

impl TrpOutcome {
    /// The ordered partial system, or `None` for the abort outcome.
    pub fn result(&self) -> Option<&OrderedPartialSts> {
        (!self.aborted).then_some(&self.partial)
    }
}

/// `m` steps of the triangle removal process from `K_n`.
pub fn triangle_removal(n: usize, m: usize, seed: u64) -> Result<TrpOutcome> {
    triangle_removal_with(n, m, &mut rng_from_seed(seed))
}

pub fn triangle_removal_with(n: usize, m: usize, rng: &mut Rng) -> Result<TrpOutcome> {
    if m > choose2(n) / 3 {
        return domain(format!("m = {m} exceeds C({n},2)/3 = {}", choose2(n) / 3));
    }
    triangle_removal_from_with(&OrderedPartialSts::empty(n), m, rng)
}

/// `m` further steps starting from the leave graph of `start`.
pub fn triangle_removal_from(start: &OrderedPartialSts, m: usize, seed: u64) -> Result<TrpOutcome> {
    triangle_removal_from_with(start, m, &mut rng_from_seed(seed))
}

pub fn triangle_removal_from_with(
    start: &OrderedPartialSts,
    m: usize,
    rng: &mut Rng,
) -> Result<TrpOutcome> {
    let n = start.n();
    let mut process = TriangleRemoval::new(leave_graph(start.system())?);
    let mut edges = start.system().edges().to_vec();
    let mut steps = 0;
    while steps < m {
        match process.step(rng) {
            Some(t) => {
                edges.push(t);
                steps += 1;
            }
            None => break,
        }
    }
    let partial = OrderedPartialSts::new(n, edges)?;
    Ok(TrpOutcome {
        partial,
        aborted: steps < m,
        steps_completed: steps,
        leave: process.into_leave(),
    })
}

fn colex_unrank(idx: u64, c_hint: &mut usize) -> Triple {
    let c3 = |c: usize| choose3(c) as u64;
    while c3(*c_hint + 1) <= idx {
        *c_hint += 1;
    }
    let c = *c_hint;
    let mut r = idx - c3(c);
    let mut b = ((2.0 * r as f64).sqrt() as usize).max(1);
    while (b * (b + 1) / 2) as u64 <= r {
        b += 1;
    }
    while (b * (b - 1) / 2) as u64 > r {
        b -= 1;
    }
    r -= (b * (b - 1) / 2) as u64;
    Triple::sorted_unchecked(r as usize, b, c)
}

/// `H³(n, p)`: each of the `C(n, 3)` triples independently with
/// probability `p`. Edges are returned in lexicographic order.
pub fn sample_binomial_3graph(n: usize, p: f64, seed: u64) -> Result<TripleSystem> {
    sample_binomial_3graph_with(n, p, &mut rng_from_seed(seed))
}

pub fn sample_binomial_3graph_with(n: usize, p: f64, rng: &mut Rng) -> Result<TripleSystem> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return domain(format!("edge probability {p} outside [0, 1]"));
    }
    if p == 1.0 {
        return Ok(TripleSystem::complete(n));
    }
    let total = choose3(n) as u64;
    let mut edges = Vec::new();
    if p > 0.0 && total > 0 {
        // Geometric skips between successes.
        let log_q = (1.0 - p).ln();
        let mut idx: u64 = 0;
        let mut first = true;
        let mut c_hint = 2;
        loop {
            let u: f64 = 1.0 - rng.gen::<f64>();
            let gap = (u.ln() / log_q).floor();
            if !gap.is_finite() || gap >= total as f64 {
                break;
            }
            let gap = gap as u64;
            idx = if first { gap } else { idx.saturating_add(gap + 1) };
            first = false;
            if idx >= total {
                break;
            }
            edges.push(colex_unrank(idx, &mut c_hint));
        }
    }
    edges.sort_unstable();
    TripleSystem::general(n, edges)
}

/// Result of one draw of the binomial coupling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingReport {
    pub n: usize,
    pub alpha: f64,
    /// `α(1 + 10α) / n`.
    pub q: f64,
    pub g_edge_count: usize,
    /// Edges of `G` that survive thinning.
    pub y: usize,
    /// `α · C(n, 2) / 3`.
    pub target: f64,
    pub success: bool,
    #[serde(skip)]
    pub survivors: Vec<Triple>,
}

/// `α(1 + 10α) / n`.
pub fn coupling_q(n: usize, alpha: f64) -> f64 {
    alpha * (1.0 + 10.0 * alpha) / n as f64
}

/// Predicted probability that a given admissible triple is present and
/// isolated: `q (1 − q)^{3(n − 3) + 1}`.
pub fn coupling_survival_probability(n: usize, q: f64) -> f64 {
    q * (1.0 - q).powi((3 * (n - 3) + 1) as i32)
}

/// Samples `G ~ H³(n, q)` and deletes every edge meeting an edge of `start`
/// or another edge of `G` in two or more vertices.
pub fn couple(start: &OrderedPartialSts, alpha: f64, seed: u64) -> Result<CouplingReport> {
    couple_with(start, alpha, &mut rng_from_seed(seed))
}

pub fn couple_with(start: &OrderedPartialSts, alpha: f64, rng: &mut Rng) -> Result<CouplingReport> {
    let n = start.n();
    if !(alpha >= 0.0) {
        return domain(format!("alpha must be non-negative, got {alpha}"));
    }
    if n < 3 {
        return domain("coupling needs at least 3 vertices");
    }
    let q = coupling_q(n, alpha);
    if q >= 1.0 {
        return domain(format!("q = α(1+10α)/n = {q} must be < 1"));
    }
    let g = sample_binomial_3graph_with(n, q, rng)?;
    let s = start.system();
    let survivors: Vec<Triple> = g
        .edges()
        .iter()
        .copied()
        .filter(|e| {
            e.pairs()
                .iter()
                .all(|&(a, b)| s.pair_multiplicity(a, b) == 0 && g.pair_multiplicity(a, b) == 1)
        })
        .collect();
    let target = alpha * choose2(n) as f64 / 3.0;
    let y = survivors.len();
    Ok(CouplingReport {
        n,
        alpha,
        q,
        g_edge_count: g.edge_count(),
        y,
        target,
        success: y as f64 >= target,
        survivors,
    })
}

const NONE: u32 = u32::MAX;

/// Hill-climbing towards a full system: pick a point `x` that still has an
/// uncovered pair and two uncovered partners `y, z`; insert `{x, y, z}`,
/// evicting the triple through `{y, z}` if there is one. The number of
/// covered pairs never decreases. After `n²` moves without a new best the
/// state is cleared and the climb restarts.
///
/// Returns `Ok(None)` when `max_iters` moves were not enough.
pub fn complete_to_sts(n: usize, seed: u64, max_iters: u64) -> Result<Option<TripleSystem>> {
    complete_to_sts_with(n, &mut rng_from_seed(seed), max_iters)
}

pub fn complete_to_sts_with(n: usize, rng: &mut Rng, max_iters: u64) -> Result<Option<TripleSystem>> {
    if !admits_sts(n) {
        return domain(format!("n must be ≡ 1 or 3 (mod 6), got {n}"));
    }
    let target_pairs = choose2(n);
    let full_degree = (n - 1) / 2;
    let mut third = vec![NONE; n * n];
    let mut deg = vec![0usize; n];
    let mut covered = 0usize;
    let mut best = 0usize;
    let mut since_best = 0u64;
    let stall = (n * n) as u64;
    let mut partners = Vec::with_capacity(n);
    let mut live = Vec::with_capacity(n);

    let link = |third: &mut [u32], a: usize, b: usize, c: usize| {
        third[a * n + b] = c as u32;
        third[b * n + a] = c as u32;
    };

    for _ in 0..max_iters {
        if covered == target_pairs {
            break;
        }
        live.clear();
        live.extend((0..n).filter(|&v| deg[v] < full_degree));
        let x = *live.choose(rng).expect("an uncovered pair exists");
        partners.clear();
        partners.extend((0..n).filter(|&v| v != x && third[x * n + v] == NONE));
        let i = rng.gen_range(0..partners.len());
        let mut j = rng.gen_range(0..partners.len() - 1);
        if j >= i {
            j += 1;
        }
        let (y, z) = (partners[i], partners[j]);
        let w = third[y * n + z];
        if w == NONE {
            covered += 3;
        } else {
            let w = w as usize;
            for (a, b) in [(y, z), (y, w), (z, w)] {
                third[a * n + b] = NONE;
                third[b * n + a] = NONE;
            }
            deg[y] -= 1;
            deg[z] -= 1;
            deg[w] -= 1;
        }
        link(&mut third, x, y, z);
        link(&mut third, x, z, y);
        link(&mut third, y, z, x);
        deg[x] += 1;
        deg[y] += 1;
        deg[z] += 1;

        if covered > best {
            best = covered;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > stall {
                third.iter_mut().for_each(|t| *t = NONE);
                deg.iter_mut().for_each(|d| *d = 0);
                covered = 0;
                best = 0;
                since_best = 0;
            }
        }
    }
    if covered != target_pairs {
        return Ok(None);
    }
    let mut edges = Vec::with_capacity(target_pairs / 3);
    for a in 0..n {
        for b in a + 1..n {
            let c = third[a * n + b] as usize;
            if c > b {
                edges.push(Triple::sorted_unchecked(a, b, c));
            }
        }
    }
    TripleSystem::sts(n, edges).map(Some)
}

/// A hill-climb system, retrying with fresh seeds derived from `seed` until
/// one completes.
pub fn random_sts(n: usize, seed: u64) -> Result<TripleSystem> {
    let mut rng = rng_from_seed(seed);
    let budget = 200 * (n as u64).pow(2) + 10_000;
    loop {
        if let Some(s) = complete_to_sts_with(n, &mut rng, budget)? {
            return Ok(s);
        }
    }
}
