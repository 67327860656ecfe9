//! Triple systems, leave graphs and matchings.
//!
//! Vertices are `0..n` internally. Everything that crosses an I/O boundary
//! (files, `Display`) is shifted to `1..=n`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A 3-set of vertices stored in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple([usize; 3]);

impl Triple {
    /// Builds a triple from three distinct vertices in any order.
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == b || b == c || a == c {
            return domain(format!("triple has repeated vertex: ({a}, {b}, {c})"));
        }
        let mut v = [a, b, c];
        v.sort_unstable();
        Ok(Triple(v))
    }

    pub(crate) fn sorted_unchecked(a: usize, b: usize, c: usize) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        debug_assert!(v[0] < v[1] && v[1] < v[2]);
        Triple(v)
    }

    pub fn vertices(&self) -> [usize; 3] {
        self.0
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    /// The three pairs of the triple, each as `(low, high)`.
    pub fn pairs(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.0;
        [(a, b), (a, c), (b, c)]
    }

    /// Number of shared vertices.
    pub fn intersection(&self, other: &Triple) -> usize {
        self.0.iter().filter(|v| other.contains(**v)).count()
    }

    /// The vertex of `self` other than `u` and `w`, if both belong to it.
    pub fn third(&self, u: usize, w: usize) -> Option<usize> {
        if !self.contains(u) || !self.contains(w) || u == w {
            return None;
        }
        self.0.iter().copied().find(|&x| x != u && x != w)
    }

    pub fn max_vertex(&self) -> usize {
        self.0[2]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.0[0] + 1, self.0[1] + 1, self.0[2] + 1)
    }
}

/// Index of the unordered pair `{a, b}` among the `C(n, 2)` pairs.
#[inline]
pub fn pair_id(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    debug_assert!(b < n);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

pub fn choose2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

pub fn choose3(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// `n ≡ 1, 3 (mod 6)`: the orders for which a Steiner triple system exists.
pub fn admits_sts(n: usize) -> bool {
    n % 6 == 1 || n % 6 == 3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    General,
    Linear,
    Sts,
}

/// Read access shared by materialised systems and implicit hosts such as
/// the complete 3-graph.
pub trait Hypergraph {
    fn vertex_count(&self) -> usize;

    fn contains(&self, a: usize, b: usize, c: usize) -> bool;

    /// First `w` with `{a, b, w}` an edge and `pred(w)`.
    fn find_third<F: FnMut(usize) -> bool>(&self, a: usize, b: usize, pred: F) -> Option<usize>;

    /// First pair `(u, w)` with `{v, u, w}` an edge and `pred(u, w)`.
    fn find_link<F: FnMut(usize, usize) -> bool>(&self, v: usize, pred: F)
        -> Option<(usize, usize)>;

    fn vertex_degree(&self, v: usize) -> usize;
}

/// A 3-uniform hypergraph with a mandatory pair index.
#[derive(Debug, Clone)]
pub struct TripleSystem {
    n: usize,
    edges: Vec<Triple>,
    kind: SystemKind,
    // CSR over pairs: edges containing pair p are pair_edges[pair_start[p]..pair_start[p + 1]].
    pair_start: Vec<u32>,
    pair_edges: Vec<u32>,
    // CSR over vertices.
    vertex_start: Vec<u32>,
    vertex_edges: Vec<u32>,
}

impl PartialEq for TripleSystem {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Eq for TripleSystem {}

impl TripleSystem {
    /// Validates `edges` against `kind` and builds the indices. Edge order is
    /// preserved.
    pub fn new(n: usize, edges: Vec<Triple>, kind: SystemKind) -> Result<Self> {
        for e in &edges {
            if e.max_vertex() >= n {
                return Err(Error::InvalidSystem(format!(
                    "triple {e} has a vertex outside [1, {n}]"
                )));
            }
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if !seen.insert(*e) {
                return Err(Error::InvalidSystem(format!("duplicate triple {e}")));
            }
        }
        if kind == SystemKind::Sts && !admits_sts(n) {
            return Err(Error::InvalidSystem(format!(
                "n must be ≡ 1 or 3 (mod 6) for a Steiner triple system, got {n}"
            )));
        }
        let sys = Self::build(n, edges, kind);
        match kind {
            SystemKind::General => {}
            SystemKind::Linear => {
                if let Some((a, b)) = sys.first_repeated_pair() {
                    return Err(Error::InvalidSystem(format!(
                        "pair {{{}, {}}} lies in more than one triple",
                        a + 1,
                        b + 1
                    )));
                }
            }
            SystemKind::Sts => {
                if let Some((a, b)) = sys.first_repeated_pair() {
                    return Err(Error::InvalidSystem(format!(
                        "pair {{{}, {}}} lies in more than one triple",
                        a + 1,
                        b + 1
                    )));
                }
                if sys.edges.len() * 3 != choose2(n) {
                    return Err(Error::InvalidSystem(format!(
                        "a Steiner triple system on {n} points has {} triples, got {}",
                        choose2(n) / 3,
                        sys.edges.len()
                    )));
                }
            }
        }
        Ok(sys)
    }

    pub fn general(n: usize, edges: Vec<Triple>) -> Result<Self> {
        Self::new(n, edges, SystemKind::General)
    }

    pub fn linear(n: usize, edges: Vec<Triple>) -> Result<Self> {
        Self::new(n, edges, SystemKind::Linear)
    }

    pub fn sts(n: usize, edges: Vec<Triple>) -> Result<Self> {
        Self::new(n, edges, SystemKind::Sts)
    }

    /// Builds with the most specific kind the edges satisfy.
    pub fn classify(n: usize, edges: Vec<Triple>) -> Result<Self> {
        let mut sys = Self::general(n, edges)?;
        if sys.first_repeated_pair().is_none() {
            sys.kind = if admits_sts(n) && sys.edges.len() * 3 == choose2(n) {
                SystemKind::Sts
            } else {
                SystemKind::Linear
            };
        }
        Ok(sys)
    }

    pub fn empty(n: usize) -> Self {
        Self::build(n, Vec::new(), SystemKind::Linear)
    }

    /// All `C(n, 3)` triples.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(choose3(n));
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    edges.push(Triple([a, b, c]));
                }
            }
        }
        let kind = if n <= 3 { SystemKind::Linear } else { SystemKind::General };
        Self::build(n, edges, kind)
    }

    /// The Fano plane `{123, 145, 167, 246, 257, 347, 356}`.
    pub fn fano() -> Self {
        let edges = [[1, 2, 3], [1, 4, 5], [1, 6, 7], [2, 4, 6], [2, 5, 7], [3, 4, 7], [3, 5, 6]]
            .iter()
            .map(|t| Triple::sorted_unchecked(t[0] - 1, t[1] - 1, t[2] - 1))
            .collect();
        Self::sts(7, edges).expect("Fano plane is a valid STS(7)")
    }

    pub(crate) fn build(n: usize, edges: Vec<Triple>, kind: SystemKind) -> Self {
        let pairs = choose2(n);
        let mut pair_count = vec![0u32; pairs + 1];
        let mut vert_count = vec![0u32; n + 1];
        for e in &edges {
            for (a, b) in e.pairs() {
                pair_count[pair_id(n, a, b) + 1] += 1;
            }
            for v in e.vertices() {
                vert_count[v + 1] += 1;
            }
        }
        for i in 0..pairs {
            pair_count[i + 1] += pair_count[i];
        }
        for i in 0..n {
            vert_count[i + 1] += vert_count[i];
        }
        let mut pair_edges = vec![0u32; edges.len() * 3];
        let mut vertex_edges = vec![0u32; edges.len() * 3];
        let mut pfill = pair_count.clone();
        let mut vfill = vert_count.clone();
        for (id, e) in edges.iter().enumerate() {
            for (a, b) in e.pairs() {
                let p = pair_id(n, a, b);
                pair_edges[pfill[p] as usize] = id as u32;
                pfill[p] += 1;
            }
            for v in e.vertices() {
                vertex_edges[vfill[v] as usize] = id as u32;
                vfill[v] += 1;
            }
        }
        TripleSystem {
            n,
            edges,
            kind,
            pair_start: pair_count,
            pair_edges,
            vertex_start: vert_count,
            vertex_edges,
        }
    }

    fn first_repeated_pair(&self) -> Option<(usize, usize)> {
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.pair_multiplicity(a, b) > 1 {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn edges(&self) -> &[Triple] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> Triple {
        self.edges[id]
    }

    /// Ids of the edges containing the pair `{a, b}`.
    pub fn pair_edges(&self, a: usize, b: usize) -> &[u32] {
        if a == b {
            return &[];
        }
        let p = pair_id(self.n, a, b);
        &self.pair_edges[self.pair_start[p] as usize..self.pair_start[p + 1] as usize]
    }

    pub fn pair_multiplicity(&self, a: usize, b: usize) -> usize {
        self.pair_edges(a, b).len()
    }

    /// Ids of the edges containing `v`.
    pub fn incident(&self, v: usize) -> &[u32] {
        &self.vertex_edges[self.vertex_start[v] as usize..self.vertex_start[v + 1] as usize]
    }

    /// Id of the edge `{a, b, c}`, if present.
    pub fn edge_id(&self, t: Triple) -> Option<usize> {
        let [a, b, c] = t.vertices();
        self.pair_edges(a, b)
            .iter()
            .map(|&id| id as usize)
            .find(|&id| self.edges[id].contains(c))
    }

    pub fn has_edge(&self, t: Triple) -> bool {
        self.edge_id(t).is_some()
    }

    /// The unique third vertex of `{a, b}` in a linear system.
    pub fn third_vertex(&self, a: usize, b: usize) -> Option<usize> {
        self.pair_edges(a, b)
            .first()
            .and_then(|&id| self.edges[id as usize].third(a, b))
    }

    pub fn is_linear(&self) -> bool {
        self.kind != SystemKind::General || self.first_repeated_pair().is_none()
    }

    /// Every pair covered exactly once.
    pub fn is_sts(&self) -> bool {
        if self.n < 3 && self.edges.is_empty() {
            return false;
        }
        (0..self.n).all(|a| (a + 1..self.n).all(|b| self.pair_multiplicity(a, b) == 1))
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.incident(v).len()).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.incident(v).len()).min().unwrap_or(0)
    }

    /// Edges sorted lexicographically, for order-independent comparisons.
    pub fn sorted_edges(&self) -> Vec<Triple> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    /// The sub-system formed by the edges with the given ids, on the same
    /// vertex set.
    pub fn subsystem(&self, ids: impl IntoIterator<Item = usize>) -> TripleSystem {
        let edges: Vec<Triple> = ids.into_iter().map(|id| self.edges[id]).collect();
        let kind = match self.kind {
            SystemKind::General => SystemKind::General,
            _ => SystemKind::Linear,
        };
        Self::build(self.n, edges, kind)
    }

    /// Same vertex set with some edges removed.
    pub fn without_edges(&self, remove: &[bool]) -> TripleSystem {
        self.subsystem((0..self.edges.len()).filter(|&id| !remove[id]))
    }
}

impl Hypergraph for TripleSystem {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn contains(&self, a: usize, b: usize, c: usize) -> bool {
        if a == b || b == c || a == c || a >= self.n || b >= self.n || c >= self.n {
            return false;
        }
        self.pair_edges(a, b).iter().any(|&id| self.edges[id as usize].contains(c))
    }

    fn find_third<F: FnMut(usize) -> bool>(&self, a: usize, b: usize, mut pred: F) -> Option<usize> {
        self.pair_edges(a, b)
            .iter()
            .filter_map(|&id| self.edges[id as usize].third(a, b))
            .find(|&w| pred(w))
    }

    fn find_link<F: FnMut(usize, usize) -> bool>(
        &self,
        v: usize,
        mut pred: F,
    ) -> Option<(usize, usize)> {
        for &id in self.incident(v) {
            let t = self.edges[id as usize].vertices();
            let mut others = t.iter().copied().filter(|&x| x != v);
            let (u, w) = (others.next().unwrap(), others.next().unwrap());
            if pred(u, w) {
                return Some((u, w));
            }
        }
        None
    }

    fn vertex_degree(&self, v: usize) -> usize {
        self.incident(v).len()
    }
}

/// The complete 3-graph on `n` vertices, without materialising its
/// `C(n, 3)` edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompleteHypergraph {
    pub n: usize,
}

impl Hypergraph for CompleteHypergraph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn contains(&self, a: usize, b: usize, c: usize) -> bool {
        a != b && b != c && a != c && a < self.n && b < self.n && c < self.n
    }

    fn find_third<F: FnMut(usize) -> bool>(&self, a: usize, b: usize, mut pred: F) -> Option<usize> {
        (0..self.n).filter(|&w| w != a && w != b).find(|&w| pred(w))
    }

    fn find_link<F: FnMut(usize, usize) -> bool>(
        &self,
        v: usize,
        mut pred: F,
    ) -> Option<(usize, usize)> {
        for u in 0..self.n {
            if u == v {
                continue;
            }
            for w in u + 1..self.n {
                if w != v && pred(u, w) {
                    return Some((u, w));
                }
            }
        }
        None
    }

    fn vertex_degree(&self, v: usize) -> usize {
        if v < self.n {
            choose2(self.n - 1)
        } else {
            0
        }
    }
}

/// A subset of `[n]` stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    mask: Vec<bool>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet { mask: vec![false; n] }
    }

    pub fn full(n: usize) -> Self {
        VertexSet { mask: vec![true; n] }
    }

    pub fn from_vertices(n: usize, vs: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(n);
        for v in vs {
            if v >= n {
                return domain(format!("vertex {} outside [1, {n}]", v + 1));
            }
            s.mask[v] = true;
        }
        Ok(s)
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        VertexSet { mask }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.mask.get(v).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, v: usize) {
        self.mask[v] = true;
    }

    pub fn remove(&mut self, v: usize) {
        self.mask[v] = false;
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

fn check_vertex(s: &TripleSystem, v: usize) -> Result<()> {
    if v >= s.n() {
        return domain(format!("vertex {} outside [1, {}]", v + 1, s.n()));
    }
    Ok(())
}

/// Number of edges containing `v`.
pub fn degree(s: &TripleSystem, v: usize) -> Result<usize> {
    check_vertex(s, v)?;
    Ok(s.incident(v).len())
}

/// Number of edges `{v, a, b}` with `a, b ∈ U`.
pub fn degree_into(s: &TripleSystem, v: usize, u: &VertexSet) -> Result<usize> {
    check_vertex(s, v)?;
    Ok(s.incident(v)
        .iter()
        .filter(|&&id| {
            s.edge(id as usize)
                .vertices()
                .iter()
                .all(|&x| x == v || u.contains(x))
        })
        .count())
}

/// Number of ordered tuples `(x, y, z) ∈ X × Y × Z` whose underlying set is
/// an edge.
pub fn e_triple(s: &TripleSystem, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> u64 {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut total = 0u64;
    for e in s.edges() {
        let v = e.vertices();
        for p in PERMS {
            if x.contains(v[p[0]]) && y.contains(v[p[1]]) && z.contains(v[p[2]]) {
                total += 1;
            }
        }
    }
    total
}

/// The subsystem induced on `W`, relabelled to `0..|W|`. The second
/// component maps new labels back to original vertices.
pub fn induced(s: &TripleSystem, w: &VertexSet) -> (TripleSystem, Vec<usize>) {
    let old: Vec<usize> = w.iter().filter(|&v| v < s.n()).collect();
    let mut new_of = vec![usize::MAX; s.n()];
    for (i, &v) in old.iter().enumerate() {
        new_of[v] = i;
    }
    let edges: Vec<Triple> = s
        .edges()
        .iter()
        .filter(|e| e.vertices().iter().all(|&v| new_of[v] != usize::MAX))
        .map(|e| {
            let [a, b, c] = e.vertices();
            Triple::sorted_unchecked(new_of[a], new_of[b], new_of[c])
        })
        .collect();
    let m = old.len();
    let kind = match s.kind() {
        SystemKind::General => SystemKind::General,
        SystemKind::Sts if m == s.n() => SystemKind::Sts,
        _ => SystemKind::Linear,
    };
    (TripleSystem::build(m, edges, kind), old)
}

/// Pairs of vertices, stored as one adjacency bitset per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeaveGraph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
    pairs: usize,
}

impl LeaveGraph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        LeaveGraph { n, words, adj: vec![0; n * words], pairs: 0 }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for a in 0..n {
            for b in a + 1..n {
                g.insert(a, b);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pair_count(&self) -> usize {
        self.pairs
    }

    /// `d(G) = |E| / C(n, 2)`.
    pub fn density(&self) -> f64 {
        let total = choose2(self.n);
        if total == 0 {
            0.0
        } else {
            self.pairs as f64 / total as f64
        }
    }

    pub fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    pub fn has(&self, a: usize, b: usize) -> bool {
        a != b && self.adj[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        if a == b || self.has(a, b) {
            return;
        }
        self.adj[a * self.words + b / 64] |= 1 << (b % 64);
        self.adj[b * self.words + a / 64] |= 1 << (a % 64);
        self.pairs += 1;
    }

    pub fn remove(&mut self, a: usize, b: usize) -> bool {
        if !self.has(a, b) {
            return false;
        }
        self.adj[a * self.words + b / 64] &= !(1 << (b % 64));
        self.adj[b * self.words + a / 64] &= !(1 << (a % 64));
        self.pairs -= 1;
        true
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        bits(self.row(v))
    }

    pub fn common_count(&self, a: usize, b: usize) -> usize {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x & y).count_ones() as usize)
            .sum()
    }

    /// Size of the common neighbourhood of every vertex in `set`; for an
    /// empty set this is `n`.
    pub fn common_neighborhood_size(&self, set: &[usize]) -> usize {
        let Some((&first, rest)) = set.split_first() else {
            return self.n;
        };
        let mut acc = self.row(first).to_vec();
        for &v in rest {
            for (a, r) in acc.iter_mut().zip(self.row(v)) {
                *a &= r;
            }
        }
        acc.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// The `k`-th common neighbour of `a` and `b` in increasing order.
    pub fn nth_common(&self, a: usize, b: usize, mut k: usize) -> Option<usize> {
        for (i, (x, y)) in self.row(a).iter().zip(self.row(b)).enumerate() {
            let w = x & y;
            let c = w.count_ones() as usize;
            if k < c {
                let mut w = w;
                for _ in 0..k {
                    w &= w - 1;
                }
                return Some(i * 64 + w.trailing_zeros() as usize);
            }
            k -= c;
        }
        None
    }

    /// Every present pair as `(low, high)`.
    pub fn pair_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.pairs);
        for a in 0..self.n {
            for b in self.neighbors(a) {
                if b > a {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

pub(crate) fn bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(i, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + t)
            }
        })
    })
}

/// The graph of pairs not covered by any triple of `s`.
pub fn leave_graph(s: &TripleSystem) -> Result<LeaveGraph> {
    if !s.is_linear() {
        return domain("leave graph requires a linear system");
    }
    let mut g = LeaveGraph::complete(s.n());
    for e in s.edges() {
        for (a, b) in e.pairs() {
            g.remove(a, b);
        }
    }
    Ok(g)
}

/// A linear system together with the order in which its edges arrived.
/// The edge list of `system` is the order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedPartialSts {
    system: TripleSystem,
}

impl OrderedPartialSts {
    pub fn new(n: usize, ordered_edges: Vec<Triple>) -> Result<Self> {
        Ok(OrderedPartialSts { system: TripleSystem::linear(n, ordered_edges)? })
    }

    pub fn empty(n: usize) -> Self {
        OrderedPartialSts { system: TripleSystem::empty(n) }
    }

    pub fn from_system(system: TripleSystem) -> Result<Self> {
        if !system.is_linear() {
            return domain("ordered partial STS must be linear");
        }
        let n = system.n();
        let edges = system.edges().to_vec();
        Self::new(n, edges)
    }

    pub fn system(&self) -> &TripleSystem {
        &self.system
    }

    pub fn into_system(self) -> TripleSystem {
        self.system
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn m(&self) -> usize {
        self.system.edge_count()
    }

    /// The first `i` edges.
    pub fn prefix(&self, i: usize) -> OrderedPartialSts {
        let edges = self.system.edges()[..i.min(self.m())].to_vec();
        OrderedPartialSts { system: TripleSystem::build(self.n(), edges, SystemKind::Linear) }
    }
}

/// A set of pairwise vertex-disjoint triples.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    edges: Vec<Triple>,
}

impl Matching {
    pub fn new(mut edges: Vec<Triple>) -> Result<Self> {
        edges.sort_unstable();
        let mut seen = HashSet::new();
        for e in &edges {
            for v in e.vertices() {
                if !seen.insert(v) {
                    return domain(format!("vertex {} covered twice in matching", v + 1));
                }
            }
        }
        Ok(Matching { edges })
    }

    pub fn empty() -> Self {
        Matching { edges: Vec::new() }
    }

    pub fn edges(&self) -> &[Triple] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn covered(&self, n: usize) -> VertexSet {
        let mut s = VertexSet::empty(n);
        for e in &self.edges {
            for v in e.vertices() {
                if v < n {
                    s.insert(v);
                }
            }
        }
        s
    }

    pub fn covers(&self, v: usize) -> bool {
        self.edges.iter().any(|e| e.contains(v))
    }

    /// Covers all of `[n]` (hence has exactly `n / 3` triples).
    pub fn is_perfect(&self, n: usize) -> bool {
        self.edges.len() * 3 == n && self.covered(n).len() == n
    }

    pub fn uncovered(&self, n: usize) -> Vec<usize> {
        let c = self.covered(n);
        (0..n).filter(|&v| !c.contains(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: usize, b: usize, c: usize) -> Triple {
        Triple::new(a - 1, b - 1, c - 1).unwrap()
    }

    #[test]
    fn fano_degrees() {
        let s = TripleSystem::fano();
        assert_eq!(s.kind(), SystemKind::Sts);
        assert!(s.is_sts());
        assert_eq!(degree(&s, 0).unwrap(), 3);
        for v in 0..7 {
            assert_eq!(degree(&s, v).unwrap(), 3);
        }
        assert!(degree(&s, 7).is_err());
        assert_eq!(degree(&TripleSystem::empty(5), 2).unwrap(), 0);
    }

    #[test]
    fn fano_degree_into() {
        let s = TripleSystem::fano();
        let u = VertexSet::from_vertices(7, [1, 2]).unwrap();
        assert_eq!(degree_into(&s, 0, &u).unwrap(), 1);
        let u = VertexSet::from_vertices(7, [1, 3]).unwrap();
        assert_eq!(degree_into(&s, 0, &u).unwrap(), 0);
        assert_eq!(degree_into(&s, 0, &VertexSet::empty(7)).unwrap(), 0);
    }

    #[test]
    fn fano_e_triple() {
        let s = TripleSystem::fano();
        let one = |v: usize| VertexSet::from_vertices(7, [v - 1]).unwrap();
        assert_eq!(e_triple(&s, &one(1), &one(2), &one(3)), 1);
        let all = VertexSet::full(7);
        assert_eq!(e_triple(&s, &all, &all, &all), 42);
        assert_eq!(e_triple(&s, &VertexSet::empty(7), &all, &all), 0);
    }

    #[test]
    fn e_triple_brute_force_agrees() {
        // Independent oracle: loop over all ordered triples of vertices.
        let s = TripleSystem::fano();
        let x = VertexSet::from_vertices(7, [0, 1, 3, 5]).unwrap();
        let y = VertexSet::from_vertices(7, [1, 2, 4, 6]).unwrap();
        let z = VertexSet::from_vertices(7, [0, 2, 5, 6]).unwrap();
        let mut brute = 0;
        for a in x.iter() {
            for b in y.iter() {
                for c in z.iter() {
                    if s.contains(a, b, c) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(e_triple(&s, &x, &y, &z), brute);
    }

    #[test]
    fn induced_subsystems() {
        let s = TripleSystem::fano();
        let (sub, map) = induced(&s, &VertexSet::from_vertices(7, [0, 1, 2]).unwrap());
        assert_eq!(sub.edge_count(), 1);
        assert_eq!(map, vec![0, 1, 2]);
        let (sub, _) = induced(&s, &VertexSet::from_vertices(7, [0, 1, 3]).unwrap());
        assert_eq!(sub.edge_count(), 0);
        let (sub, _) = induced(&s, &VertexSet::full(7));
        assert_eq!(sub, s);
    }

    #[test]
    fn leave_graph_counts() {
        assert_eq!(leave_graph(&TripleSystem::fano()).unwrap().pair_count(), 0);
        let one = TripleSystem::linear(7, vec![t(1, 2, 3)]).unwrap();
        assert_eq!(leave_graph(&one).unwrap().pair_count(), 18);
        assert_eq!(leave_graph(&TripleSystem::empty(7)).unwrap().pair_count(), 21);
        let nonlinear = TripleSystem::general(5, vec![t(1, 2, 3), t(1, 2, 4)]).unwrap();
        assert!(leave_graph(&nonlinear).is_err());
    }

    #[test]
    fn validation_errors() {
        assert!(Triple::new(1, 1, 2).is_err());
        assert!(TripleSystem::linear(7, vec![t(1, 2, 3), t(1, 2, 3)]).is_err());
        assert!(TripleSystem::linear(7, vec![t(1, 2, 3), t(1, 2, 4)]).is_err());
        assert!(TripleSystem::general(3, vec![t(1, 2, 4)]).is_err());
        assert!(TripleSystem::sts(8, vec![]).is_err());
        assert!(TripleSystem::sts(7, vec![t(1, 2, 3)]).is_err());
        // Degenerate orders are fine with no edges.
        assert_eq!(TripleSystem::linear(2, vec![]).unwrap().edge_count(), 0);
    }

    #[test]
    fn classify_detects_kind() {
        let f = TripleSystem::fano();
        assert_eq!(TripleSystem::classify(7, f.edges().to_vec()).unwrap().kind(), SystemKind::Sts);
        assert_eq!(
            TripleSystem::classify(7, vec![t(1, 2, 3)]).unwrap().kind(),
            SystemKind::Linear
        );
        assert_eq!(
            TripleSystem::classify(7, vec![t(1, 2, 3), t(1, 2, 4)]).unwrap().kind(),
            SystemKind::General
        );
    }

    #[test]
    fn complete_hypergraph_views_agree() {
        let mat = TripleSystem::complete(6);
        let imp = CompleteHypergraph { n: 6 };
        assert_eq!(mat.edge_count(), 20);
        for v in 0..6 {
            assert_eq!(mat.vertex_degree(v), imp.vertex_degree(v));
        }
        assert_eq!(mat.contains(0, 1, 2), imp.contains(0, 1, 2));
        assert_eq!(imp.find_third(0, 1, |w| w > 3), Some(4));
    }

    #[test]
    fn matching_checks() {
        assert!(Matching::new(vec![t(1, 2, 3), t(3, 4, 5)]).is_err());
        let m = Matching::new(vec![t(4, 5, 6), t(1, 2, 3)]).unwrap();
        assert!(m.is_perfect(6));
        assert!(!m.is_perfect(9));
        assert_eq!(m.uncovered(9), vec![6, 7, 8]);
    }

    #[test]
    fn leave_graph_common_neighbours() {
        let g = LeaveGraph::complete(70);
        assert_eq!(g.common_count(0, 69), 68);
        assert_eq!(g.nth_common(0, 69, 0), Some(1));
        assert_eq!(g.nth_common(0, 69, 67), Some(68));
        assert_eq!(g.nth_common(0, 69, 68), None);
        assert_eq!(g.common_neighborhood_size(&[0, 1, 2]), 67);
    }
}
