//! Sub-absorbers, absorbers, resilient templates and absorbing structures.
//!
//! A sub-absorber rooted on `(x, y, z)` is
//!
//! ```text
//! {x,x1,x2} {y,y1,y2} {z,z1,z2} {x1,y1,z1} {x2,y2,z2}
//! ```
//!
//! on nine distinct vertices. An absorber rooted on `(x, y, z)` is three
//! disjoint rooted edges `{x,x1,x2}`, `{y,y1,y2}`, `{z,z1,z2}` plus
//! sub-absorbers rooted on `(x1,y1,z1)` and `(x2,y2,z2)`: 13 edges on 21
//! vertices. Its covering matching (the rooted edges and the four cross
//! edges) covers all 21 vertices; its non-covering matching (the six rooted
//! edges of the sub-absorbers) covers the 18 non-roots.

use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact_cover::{Budget, SearchEnd};
use crate::hypergraph::{Hypergraph, Matching, Triple, TripleSystem};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubAbsorber {
    pub roots: [usize; 3],
    /// `(x1, y1, z1)`: the first cross edge.
    pub first: [usize; 3],
    /// `(x2, y2, z2)`: the second cross edge.
    pub second: [usize; 3],
}

fn tri(a: usize, b: usize, c: usize) -> Triple {
    Triple::new(a, b, c).expect("absorber vertices are distinct")
}

impl SubAbsorber {
    pub fn rooted_edges(&self) -> [Triple; 3] {
        let r = self.roots;
        [0, 1, 2].map(|i| tri(r[i], self.first[i], self.second[i]))
    }

    pub fn cross_edges(&self) -> [Triple; 2] {
        [tri(self.first[0], self.first[1], self.first[2]), tri(self.second[0], self.second[1], self.second[2])]
    }

    pub fn edges(&self) -> Vec<Triple> {
        let mut e = self.rooted_edges().to_vec();
        e.extend(self.cross_edges());
        e
    }

    pub fn externals(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.first.iter().chain(&self.second).copied().collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Absorber {
    pub roots: [usize; 3],
    /// `(x1, y1, z1)`, rooting the first sub-absorber.
    pub first: [usize; 3],
    /// `(x2, y2, z2)`, rooting the second sub-absorber.
    pub second: [usize; 3],
    pub subs: [SubAbsorber; 2],
}

impl Absorber {
    pub fn rooted_edges(&self) -> [Triple; 3] {
        let r = self.roots;
        [0, 1, 2].map(|i| tri(r[i], self.first[i], self.second[i]))
    }

    /// All 13 edges: rooted edges, then each sub-absorber.
    pub fn edges(&self) -> Vec<Triple> {
        let mut e = self.rooted_edges().to_vec();
        for s in &self.subs {
            e.extend(s.edges());
        }
        e
    }

    /// The 7-edge perfect matching of all 21 vertices.
    pub fn covering(&self) -> Matching {
        let mut e = self.rooted_edges().to_vec();
        for s in &self.subs {
            e.extend(s.cross_edges());
        }
        Matching::new(e).expect("covering edges are disjoint")
    }

    /// The 6-edge matching of the 18 non-root vertices.
    pub fn noncovering(&self) -> Matching {
        let mut e = Vec::new();
        for s in &self.subs {
            e.extend(s.rooted_edges());
        }
        Matching::new(e).expect("non-covering edges are disjoint")
    }

    pub fn externals(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.first.iter().chain(&self.second).copied().collect();
        for s in &self.subs {
            v.extend(s.externals());
        }
        v.sort_unstable();
        v
    }

    pub fn vertices(&self) -> Vec<usize> {
        let mut v = self.externals();
        v.extend(self.roots);
        v.sort_unstable();
        v
    }

    /// Checks every structural property; the error names the first failure.
    pub fn check_shape(&self) -> std::result::Result<(), String> {
        let mut v = self.vertices();
        v.dedup();
        if v.len() != 21 {
            return Err(format!("{} distinct vertices, expected 21", v.len()));
        }
        for (i, s) in self.subs.iter().enumerate() {
            let want = if i == 0 { self.first } else { self.second };
            if s.roots != want {
                return Err(format!("sub-absorber {i} is not rooted on the rooted-edge vertices"));
            }
        }
        let edges = self.edges();
        if edges.len() != 13 {
            return Err(format!("{} edges, expected 13", edges.len()));
        }
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                if edges[i].intersection(&edges[j]) > 1 {
                    return Err(format!("edges {} and {} share two vertices", edges[i], edges[j]));
                }
            }
        }
        let cov = self.covering();
        let non = self.noncovering();
        if cov.len() != 7 || non.len() != 6 {
            return Err(format!("matchings have {} and {} edges", cov.len(), non.len()));
        }
        let mut union: Vec<Triple> = cov.edges().iter().chain(non.edges()).copied().collect();
        union.sort_unstable();
        let mut all = edges;
        all.sort_unstable();
        if union != all {
            return Err("covering and non-covering matchings do not partition the edges".into());
        }
        let mut cv: Vec<usize> = cov.edges().iter().flat_map(|e| e.vertices()).collect();
        cv.sort_unstable();
        if cv != self.vertices() {
            return Err("covering matching misses a vertex".into());
        }
        let mut nv: Vec<usize> = non.edges().iter().flat_map(|e| e.vertices()).collect();
        nv.sort_unstable();
        if nv != self.externals() {
            return Err("non-covering matching does not cover exactly the externals".into());
        }
        Ok(())
    }

    /// Contracts each rooted edge to one vertex: two sub-absorbers glued on
    /// their roots. Vertices are relabelled `0, 1, 2` for the contracted
    /// edges and `3..15` for the sub-absorber externals.
    pub fn contracted(&self) -> TripleSystem {
        let mut label = std::collections::BTreeMap::new();
        for i in 0..3 {
            for v in [self.roots[i], self.first[i], self.second[i]] {
                label.insert(v, i);
            }
        }
        let mut next = 3;
        for v in self.subs.iter().flat_map(|s| s.externals()) {
            label.insert(v, next);
            next += 1;
        }
        let edges = self
            .subs
            .iter()
            .flat_map(|s| s.edges())
            .map(|e| {
                let [a, b, c] = e.vertices();
                tri(label[&a], label[&b], label[&c])
            })
            .collect();
        TripleSystem::general(15, edges).expect("contracted absorber edges are distinct")
    }
}

/// Exhaustive sparseness scan of a small 3-graph over all edge subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsenessReport {
    pub max_degree: usize,
    /// Fewest vertices spanned by two edges.
    pub min_pair_span: usize,
    /// Fewest vertices spanned by three edges.
    pub min_triple_span: usize,
    /// `max (e(H') − 1) / (v(H') − 3)` over edge subsets spanning more than 3 vertices.
    pub m3: f64,
}

impl SparsenessReport {
    pub fn pass(&self) -> bool {
        self.m3 < 1.0 && self.min_pair_span >= 5 && self.min_triple_span >= 7
    }
}

pub fn sparseness_scan(h: &TripleSystem) -> Result<SparsenessReport> {
    let m = h.edge_count();
    if m > 24 {
        return domain(format!("exhaustive scan over 2^{m} edge subsets is too large"));
    }
    let masks: Vec<u64> = h.edges().iter().map(|e| e.vertices().iter().fold(0u64, |a, &v| a | 1 << v)).collect();
    let mut report = SparsenessReport { max_degree: h.max_degree(), min_pair_span: usize::MAX, min_triple_span: usize::MAX, m3: 0.0 };
    let mut m3: f64 = 0.0;
    for sub in 1u64..1 << m {
        let mut span = 0u64;
        let mut rest = sub;
        while rest != 0 {
            span |= masks[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        let e = sub.count_ones() as usize;
        let v = span.count_ones() as usize;
        if e == 2 {
            report.min_pair_span = report.min_pair_span.min(v);
        }
        if e == 3 {
            report.min_triple_span = report.min_triple_span.min(v);
        }
        if v > 3 {
            m3 = m3.max((e as f64 - 1.0) / (v as f64 - 3.0));
        }
    }
    report.m3 = m3;
    Ok(report)
}

/// Visits sub-absorbers rooted on `roots` whose externals avoid `blocked`.
/// The roots themselves must already be blocked. `blocked` is restored
/// before returning; the visitor may use it for nested searches.
fn each_sub_absorber<H: Hypergraph>(
    h: &H,
    roots: [usize; 3],
    blocked: &mut [bool],
    budget: &Budget,
    visit: &mut dyn FnMut(&SubAbsorber, &mut [bool]) -> ControlFlow<()>,
) -> SearchEnd {
    let [x, y, z] = roots;
    let mut stop = false;
    let mut out_of_budget = false;
    h.find_link(x, |x1, x2| {
        if blocked[x1] || blocked[x2] {
            return false;
        }
        blocked[x1] = true;
        blocked[x2] = true;
        h.find_link(y, |ya, yb| {
            if blocked[ya] || blocked[yb] {
                return false;
            }
            blocked[ya] = true;
            blocked[yb] = true;
            for (y1, y2) in [(ya, yb), (yb, ya)] {
                if !budget.spend() {
                    out_of_budget = true;
                    break;
                }
                h.find_third(x1, y1, |z1| {
                    if blocked[z1] {
                        return false;
                    }
                    blocked[z1] = true;
                    h.find_third(x2, y2, |z2| {
                        if blocked[z2] || !h.contains(z, z1, z2) {
                            return false;
                        }
                        blocked[z2] = true;
                        let sa = SubAbsorber { roots, first: [x1, y1, z1], second: [x2, y2, z2] };
                        stop = visit(&sa, blocked).is_break();
                        blocked[z2] = false;
                        stop || budget.is_exhausted()
                    });
                    blocked[z1] = false;
                    stop || budget.is_exhausted()
                });
                if stop || budget.is_exhausted() {
                    out_of_budget |= !stop;
                    break;
                }
            }
            blocked[ya] = false;
            blocked[yb] = false;
            stop || out_of_budget
        });
        blocked[x1] = false;
        blocked[x2] = false;
        stop || out_of_budget
    });
    if stop {
        SearchEnd::Stopped
    } else if out_of_budget {
        SearchEnd::BudgetExceeded
    } else {
        SearchEnd::Exhausted
    }
}

fn blocked_mask(n: usize, roots: [usize; 3], forbidden: &[bool]) -> Result<Vec<bool>> {
    let [x, y, z] = roots;
    if x == y || y == z || x == z || roots.iter().any(|&v| v >= n) {
        return domain(format!("roots {roots:?} must be distinct vertices below {n}"));
    }
    if forbidden.len() != n {
        return domain("forbidden mask has the wrong length");
    }
    if roots.iter().any(|&v| forbidden[v]) {
        return domain("a root is forbidden");
    }
    let mut b = forbidden.to_vec();
    roots.iter().for_each(|&v| b[v] = true);
    Ok(b)
}

/// First sub-absorber rooted on `(x, y, z)` with no external vertex in
/// `forbidden`.
pub fn find_sub_absorber<H: Hypergraph>(
    h: &H,
    roots: [usize; 3],
    forbidden: &[bool],
    budget: &Budget,
) -> Result<(Option<SubAbsorber>, SearchEnd)> {
    let mut blocked = blocked_mask(h.vertex_count(), roots, forbidden)?;
    if blocked.iter().filter(|&&b| !b).count() < 6 {
        return Ok((None, SearchEnd::Exhausted));
    }
    let mut found = None;
    let end = each_sub_absorber(h, roots, &mut blocked, budget, &mut |sa, _| {
        found = Some(*sa);
        ControlFlow::Break(())
    });
    Ok((found, end))
}

/// First absorber rooted on `(x, y, z)` with no external vertex in
/// `forbidden`. Backtracks over rooted edges and first sub-absorbers.
pub fn find_absorber<H: Hypergraph>(
    h: &H,
    roots: [usize; 3],
    forbidden: &[bool],
    budget: &Budget,
) -> Result<(Option<Absorber>, SearchEnd)> {
    let mut blocked = blocked_mask(h.vertex_count(), roots, forbidden)?;
    if blocked.iter().filter(|&&b| !b).count() < 18 {
        return Ok((None, SearchEnd::Exhausted));
    }
    let blocked = &mut blocked[..];
    let [x, y, z] = roots;
    let mut found = None;
    let mut out_of_budget = false;
    let done = |found: &Option<Absorber>, oob: bool| found.is_some() || oob;
    h.find_link(x, |x1, x2| {
        if blocked[x1] || blocked[x2] {
            return false;
        }
        blocked[x1] = true;
        blocked[x2] = true;
        h.find_link(y, |ya, yb| {
            if blocked[ya] || blocked[yb] {
                return false;
            }
            blocked[ya] = true;
            blocked[yb] = true;
            h.find_link(z, |za, zb| {
                if blocked[za] || blocked[zb] {
                    return false;
                }
                blocked[za] = true;
                blocked[zb] = true;
                'orient: for (y1, y2) in [(ya, yb), (yb, ya)] {
                    for (z1, z2) in [(za, zb), (zb, za)] {
                        let first = [x1, y1, z1];
                        let second = [x2, y2, z2];
                        let end = each_sub_absorber(h, first, blocked, budget, &mut |s1, blocked| {
                            // the enumerator keeps s1's externals blocked while visiting
                            let s1 = *s1;
                            let mut s2 = None;
                            each_sub_absorber(h, second, blocked, budget, &mut |s, _| {
                                s2 = Some(*s);
                                ControlFlow::Break(())
                            });
                            match s2 {
                                Some(s2) => {
                                    found = Some(Absorber { roots, first, second, subs: [s1, s2] });
                                    ControlFlow::Break(())
                                }
                                None if budget.is_exhausted() => ControlFlow::Break(()),
                                None => ControlFlow::Continue(()),
                            }
                        });
                        if end == SearchEnd::BudgetExceeded || (found.is_none() && budget.is_exhausted()) {
                            out_of_budget = true;
                        }
                        if done(&found, out_of_budget) {
                            break 'orient;
                        }
                    }
                }
                blocked[za] = false;
                blocked[zb] = false;
                done(&found, out_of_budget)
            });
            blocked[ya] = false;
            blocked[yb] = false;
            done(&found, out_of_budget)
        });
        blocked[x1] = false;
        blocked[x2] = false;
        done(&found, out_of_budget)
    });
    let end = if found.is_some() {
        SearchEnd::Stopped
    } else if out_of_budget {
        SearchEnd::BudgetExceeded
    } else {
        SearchEnd::Exhausted
    };
    Ok((found, end))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceReport {
    pub degree_bound: f64,
    /// No spanning subgraph has minimum degree `≥ D`, so nothing was sampled.
    pub vacuous: bool,
    pub subgraphs: usize,
    pub samples: usize,
    pub failures: usize,
    /// Searches cut off by the per-search budget (counted as failures too).
    pub undecided: usize,
}

/// Samples spanning subgraphs of minimum degree `≥ D` and random root
/// triples, counting pairs without an absorber. Subgraphs keep each edge
/// with probability `1.05·D / mean degree`, then vertices below `D` get
/// deleted edges back in random order.
pub fn resilience_spotcheck(
    s: &TripleSystem,
    d: f64,
    triple_samples: usize,
    subgraph_samples: usize,
    search_budget: u64,
    seed: u64,
) -> Result<ResilienceReport> {
    if d < 1.0 {
        return domain(format!("degree bound must be at least 1, got {d}"));
    }
    let n = s.n();
    let mut report = ResilienceReport {
        degree_bound: d,
        vacuous: false,
        subgraphs: 0,
        samples: 0,
        failures: 0,
        undecided: 0,
    };
    if n < 3 || (s.min_degree() as f64) < d {
        report.vacuous = true;
        return Ok(report);
    }
    let need = d.ceil() as usize;
    let mut rng = rng_from_seed(seed);
    let mean = 3.0 * s.edge_count() as f64 / n as f64;
    let keep = (1.05 * d / mean).min(1.0);
    for _ in 0..subgraph_samples {
        let mut kept: Vec<bool> = (0..s.edge_count()).map(|_| rng.gen_bool(keep)).collect();
        let mut deg = vec![0usize; n];
        for (id, e) in s.edges().iter().enumerate() {
            if kept[id] {
                e.vertices().iter().for_each(|&v| deg[v] += 1);
            }
        }
        for v in 0..n {
            if deg[v] >= need {
                continue;
            }
            let mut dropped: Vec<u32> = s.incident(v).iter().copied().filter(|&id| !kept[id as usize]).collect();
            dropped.shuffle(&mut rng);
            for id in dropped {
                if deg[v] >= need {
                    break;
                }
                kept[id as usize] = true;
                s.edge(id as usize).vertices().iter().for_each(|&u| deg[u] += 1);
            }
        }
        let sub = s.subsystem((0..s.edge_count()).filter(|&id| kept[id]));
        report.subgraphs += 1;
        for _ in 0..triple_samples {
            let roots = random_triple(&mut rng, n);
            let (found, end) = find_absorber(&sub, roots, &vec![false; n], &Budget::new(search_budget))?;
            report.samples += 1;
            if found.is_none() {
                report.failures += 1;
                if end == SearchEnd::BudgetExceeded {
                    report.undecided += 1;
                }
            }
        }
    }
    Ok(report)
}

fn random_triple(rng: &mut Rng, n: usize) -> [usize; 3] {
    let v = rand::seq::index::sample(rng, n, 3).into_vec();
    [v[0], v[1], v[2]]
}

/// A 3-graph on `10q` vertices with flexible set `Z` (`|Z| = 2q`): removing
/// any `q` vertices of `Z` leaves a perfect matching.
///
/// Layout: vertex pairs `(2i, 2i+1)` for `i < 3q` form the doubled side
/// `X`; `Y = 6q..8q`, `Z = 8q..10q`. Every edge is `{2i, 2i+1, v}` with
/// `v ∈ Y ∪ Z`, so perfect matchings of the template minus `R` are perfect
/// matchings of the bipartite graph `X` vs `Y ∪ (Z \ R)`. Each pair gets
/// `min(4, 2q)` neighbours in `Y` and as many in `Z`, always among the
/// least loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct ResilientTemplate {
    pub q: usize,
    pub system: TripleSystem,
    pub flexible: Vec<usize>,
    /// Number of half-removals checked.
    pub verified_removals: usize,
    /// All `C(2q, q)` half-removals were checked.
    pub exhaustive: bool,
    /// Candidates generated before one passed.
    pub attempts: usize,
}

impl ResilientTemplate {
    pub fn vertex_count(&self) -> usize {
        10 * self.q
    }

    /// A perfect matching of the template minus `removed ⊆ Z`.
    pub fn matching_without(&self, removed: &[usize]) -> Result<Option<Vec<Triple>>> {
        let n = self.system.n();
        let mut ground = vec![true; n];
        for &v in removed {
            if !self.flexible.contains(&v) {
                return domain(format!("vertex {} is not flexible", v + 1));
            }
            ground[v] = false;
        }
        Ok(template_pm(&self.system, &ground))
    }
}

fn template_pm(t: &TripleSystem, ground: &[bool]) -> Option<Vec<Triple>> {
    let mut inst = crate::matching::PmInstance::new(t, ground, |_| true, None);
    let (sol, _) = inst.ec.first(&Budget::new(50_000_000));
    sol.map(|s| inst.edges(&s).into_iter().map(|id| t.edge(id)).collect())
}

fn template_candidate(q: usize, rng: &mut Rng) -> TripleSystem {
    let k = 4.min(2 * q);
    let y: Vec<usize> = (6 * q..8 * q).collect();
    let z: Vec<usize> = (8 * q..10 * q).collect();
    let mut load = vec![0usize; 10 * q];
    let mut edges = Vec::new();
    let mut pairs: Vec<usize> = (0..3 * q).collect();
    pairs.shuffle(rng);
    for i in pairs {
        for side in [&y, &z] {
            let mut cand = side.clone();
            cand.shuffle(rng);
            cand.sort_by_key(|&v| load[v]);
            for &v in &cand[..k] {
                load[v] += 1;
                edges.push(tri(2 * i, 2 * i + 1, v));
            }
        }
    }
    TripleSystem::general(10 * q, edges).expect("template edges are distinct")
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            if n - v < k - cur.len() {
                break;
            }
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Builds and verifies a template. Half-removals are checked exhaustively
/// when `C(2q, q) ≤ removal_samples` or `q ≤ 3`, otherwise on
/// `removal_samples` random ones. Up to `max_attempts` candidates are tried.
pub fn build_template(q: usize, removal_samples: usize, max_attempts: usize, seed: u64) -> Result<ResilientTemplate> {
    if q < 2 {
        return domain(format!("template needs q ≥ 2, got {q}"));
    }
    let mut rng = rng_from_seed(seed);
    let exhaustive_count = binomial(2 * q, q);
    let exhaustive = q <= 3 || exhaustive_count.is_some_and(|c| c <= removal_samples as u128);
    let z: Vec<usize> = (8 * q..10 * q).collect();
    for attempt in 1..=max_attempts {
        let t = template_candidate(q, &mut rng);
        if t.max_degree() > 40 {
            continue;
        }
        let removals: Vec<Vec<usize>> = if exhaustive {
            combinations(2 * q, q)
        } else {
            (0..removal_samples)
                .map(|_| rand::seq::index::sample(&mut rng, 2 * q, q).into_vec())
                .collect()
        };
        let ok = removals.iter().all(|r| {
            let mut ground = vec![true; 10 * q];
            r.iter().for_each(|&i| ground[z[i]] = false);
            template_pm(&t, &ground).is_some()
        });
        if ok {
            return Ok(ResilientTemplate {
                q,
                system: t,
                flexible: z,
                verified_removals: removals.len(),
                exhaustive,
                attempts: attempt,
            });
        }
    }
    Err(Error::Domain(format!("no verified template for q = {q} within {max_attempts} attempts")))
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Absorbers placed on every edge of a template embedded in a host.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingStructure {
    pub host_n: usize,
    pub template: ResilientTemplate,
    /// Host vertex of each template vertex.
    pub embedding: Vec<usize>,
    /// Host vertices of the flexible set.
    pub flexible: Vec<usize>,
    /// `absorbers[i]` is rooted on template edge `i`.
    pub absorbers: Vec<Absorber>,
}

impl AbsorbingStructure {
    pub fn vertices(&self) -> Vec<usize> {
        let mut v = self.embedding.clone();
        for a in &self.absorbers {
            v.extend(a.externals());
        }
        v.sort_unstable();
        v
    }

    /// The absorber edges; template edges are not part of the structure.
    pub fn edges(&self) -> Vec<Triple> {
        self.absorbers.iter().flat_map(|a| a.edges()).collect()
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.host_n];
        for e in self.edges() {
            e.vertices().iter().for_each(|&v| deg[v] += 1);
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// Role-tagged sections for annotated output.
    pub fn sections(&self) -> Vec<(String, Vec<Triple>)> {
        self.absorbers
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let [x, y, z] = a.roots;
                (format!("absorber {i} rooted on {} {} {}", x + 1, y + 1, z + 1), a.edges())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StructureOutcome {
    Built(AbsorbingStructure),
    /// No absorber was found for template edge `edge`.
    Failed { edge: usize, budget_exceeded: bool, absorbers_placed: usize },
}

#[derive(Debug, Clone)]
pub struct StructureOptions {
    /// Node budget for each absorber search.
    pub budget_per_absorber: u64,
    pub removal_samples: usize,
    pub template_attempts: usize,
    /// Vertices the structure may use; `None` allows all.
    pub allowed: Option<Vec<bool>>,
}

impl Default for StructureOptions {
    fn default() -> Self {
        StructureOptions { budget_per_absorber: 1_000_000, removal_samples: 200, template_attempts: 50, allowed: None }
    }
}

/// Vertices an absorbing structure with flexible set of size `2q` uses.
pub fn structure_vertex_count(q: usize) -> usize {
    let k = 4.min(2 * q);
    10 * q + 18 * (3 * q * 2 * k)
}

/// Embeds a template with flexible set `z`, its other vertices chosen at
/// random among the allowed ones, then greedily places an absorber on each
/// template edge avoiding every vertex used so far.
pub fn assemble_absorbing_structure<H: Hypergraph>(
    h: &H,
    z: &[usize],
    opts: &StructureOptions,
    seed: u64,
) -> Result<StructureOutcome> {
    let n = h.vertex_count();
    if z.len() % 2 != 0 {
        return domain(format!("flexible set must have even size, got {}", z.len()));
    }
    let q = z.len() / 2;
    let allowed = opts.allowed.clone().unwrap_or_else(|| vec![true; n]);
    if allowed.len() != n {
        return domain("allowed mask has the wrong length");
    }
    let mut in_z = vec![false; n];
    for &v in z {
        if v >= n || in_z[v] {
            return domain("flexible set must be distinct host vertices");
        }
        in_z[v] = true;
    }
    let mut rng = rng_from_seed(seed);
    let template = build_template(q, opts.removal_samples, opts.template_attempts, rng.gen())?;
    let mut pool: Vec<usize> = (0..n).filter(|&v| allowed[v] && !in_z[v]).collect();
    if pool.len() < 8 * q {
        return domain(format!("only {} free vertices for a template needing {}", pool.len(), 8 * q));
    }
    pool.shuffle(&mut rng);
    let mut embedding: Vec<usize> = pool[..8 * q].to_vec();
    embedding.extend_from_slice(z);
    let mut used: Vec<bool> = (0..n).map(|v| !allowed[v]).collect();
    embedding.iter().for_each(|&v| used[v] = true);
    let mut absorbers = Vec::with_capacity(template.system.edge_count());
    for (i, e) in template.system.edges().iter().enumerate() {
        let roots = e.vertices().map(|v| embedding[v]);
        // roots are template vertices: forbidden for externals but allowed as roots
        roots.iter().for_each(|&v| used[v] = false);
        let (found, end) = find_absorber(h, roots, &used, &Budget::new(opts.budget_per_absorber))?;
        roots.iter().for_each(|&v| used[v] = true);
        match found {
            Some(a) => {
                a.externals().iter().for_each(|&v| used[v] = true);
                absorbers.push(a);
            }
            None => {
                return Ok(StructureOutcome::Failed {
                    edge: i,
                    budget_exceeded: end == SearchEnd::BudgetExceeded,
                    absorbers_placed: absorbers.len(),
                })
            }
        }
    }
    let flexible = z.to_vec();
    Ok(StructureOutcome::Built(AbsorbingStructure { host_n: n, template, embedding, flexible, absorbers }))
}

fn vertex_list(vs: &[usize]) -> String {
    let shown: Vec<String> = vs.iter().take(12).map(|v| (v + 1).to_string()).collect();
    let more = if vs.len() > 12 { format!(" … ({} total)", vs.len()) } else { String::new() };
    format!("{}{more}", shown.join(" "))
}

/// Extends `m` to a perfect matching of the host: a perfect matching of the
/// template minus the covered half of `Z`, then the covering matching of the
/// absorber on each of its edges and the non-covering matching elsewhere.
pub fn complete_via_structure(a: &AbsorbingStructure, m: &Matching) -> Result<Matching> {
    complete_via_structure_within(a, m, &vec![true; a.host_n])
}

/// [`complete_via_structure`] where only the vertices with `region[v]` need
/// covering; the structure must lie inside the region.
pub fn complete_via_structure_within(a: &AbsorbingStructure, m: &Matching, region: &[bool]) -> Result<Matching> {
    let n = a.host_n;
    if region.len() != n {
        return domain("region mask has the wrong length");
    }
    if let Some(v) = a.vertices().into_iter().find(|&v| !region[v]) {
        return domain(format!("structure vertex {} lies outside the region", v + 1));
    }
    let mut in_structure = vec![false; n];
    a.vertices().iter().for_each(|&v| in_structure[v] = true);
    let mut flexible = vec![false; n];
    a.flexible.iter().for_each(|&v| flexible[v] = true);
    let structure_edges: std::collections::HashSet<Triple> = a.edges().into_iter().collect();
    let clash: Vec<String> = m.edges().iter().filter(|e| structure_edges.contains(e)).map(|e| e.to_string()).collect();
    if !clash.is_empty() {
        return domain(format!("matching uses structure edges: {}", clash.join(", ")));
    }
    let covered = m.covered(n);
    if let Some(&v) = m.edges().iter().flat_map(|e| e.vertices().to_vec()).collect::<Vec<_>>().iter().find(|&&v| v >= n) {
        return domain(format!("matching vertex {} outside the host", v + 1));
    }
    let uncovered: Vec<usize> = (0..n).filter(|&v| region[v] && !in_structure[v] && !covered.contains(v)).collect();
    if !uncovered.is_empty() {
        return domain(format!("vertices outside the structure left uncovered: {}", vertex_list(&uncovered)));
    }
    let inner: Vec<usize> = (0..n).filter(|&v| in_structure[v] && !flexible[v] && covered.contains(v)).collect();
    if !inner.is_empty() {
        return domain(format!("matching covers non-flexible structure vertices: {}", vertex_list(&inner)));
    }
    let taken: Vec<usize> = a.flexible.iter().copied().filter(|&v| covered.contains(v)).collect();
    let q = a.template.q;
    if taken.len() != q {
        return domain(format!("matching covers {} flexible vertices, needs exactly {q}", taken.len()));
    }
    // back to template labels
    let removed: Vec<usize> = a
        .flexible
        .iter()
        .enumerate()
        .filter(|(_, v)| covered.contains(**v))
        .map(|(i, _)| a.template.flexible[i])
        .collect();
    let tpm = a
        .template
        .matching_without(&removed)?
        .ok_or_else(|| Error::Domain("template has no perfect matching for this removal".into()))?;
    let in_pm: std::collections::HashSet<Triple> = tpm.into_iter().collect();
    let mut edges = m.edges().to_vec();
    for (i, e) in a.template.system.edges().iter().enumerate() {
        let part = if in_pm.contains(e) { a.absorbers[i].covering() } else { a.absorbers[i].noncovering() };
        edges.extend_from_slice(part.edges());
    }
    let out = Matching::new(edges)?;
    let cover = out.covered(n);
    if (0..n).any(|v| cover.contains(v) != region[v]) {
        return domain("completion does not cover exactly the region");
    }
    Ok(out)
}

/// Degree bound of the resilience property at `w = ηn`: `0.999·η²·α·(n/2)`.
pub fn resilience_degree_bound(eta: f64, alpha: f64, n: usize) -> f64 {
    0.999 * eta * eta * alpha * (n as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::random_sts;
    use crate::hypergraph::{choose2, CompleteHypergraph};

    fn none(n: usize) -> Vec<bool> {
        vec![false; n]
    }

    /// Whether some 5 edges form a sub-absorber rooted on `roots`.
    fn brute_sub_absorber(s: &TripleSystem, roots: [usize; 3]) -> bool {
        let e = s.edges();
        let m = e.len();
        let idx: Vec<usize> = (0..m).collect();
        let is_root = |v: usize| roots.contains(&v);
        for a in 0..m {
            for b in a + 1..m {
                let (c1, c2) = (e[a], e[b]);
                if c1.intersection(&c2) != 0 || c1.vertices().iter().chain(&c2.vertices()).any(|&v| is_root(v)) {
                    continue;
                }
                // each root needs an edge {r, u, w} with u ∈ c1, w ∈ c2, using each cross vertex once
                let per_root: Vec<Vec<(usize, usize)>> = roots
                    .iter()
                    .map(|&r| {
                        idx.iter()
                            .filter_map(|&i| {
                                let t = e[i];
                                if !t.contains(r) {
                                    return None;
                                }
                                let u = c1.vertices().into_iter().find(|&u| t.contains(u))?;
                                let w = c2.vertices().into_iter().find(|&w| t.contains(w))?;
                                Some((u, w))
                            })
                            .collect()
                    })
                    .collect();
                for p in &per_root[0] {
                    for q in &per_root[1] {
                        for r in &per_root[2] {
                            let us = [p.0, q.0, r.0];
                            let ws = [p.1, q.1, r.1];
                            if us[0] != us[1] && us[1] != us[2] && us[0] != us[2] && ws[0] != ws[1] && ws[1] != ws[2] && ws[0] != ws[2] {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }

    #[test]
    fn complete_host_has_sub_absorbers_and_absorbers() {
        let k12 = TripleSystem::complete(12);
        let (sa, _) = find_sub_absorber(&k12, [0, 1, 2], &none(12), &Budget::unlimited()).unwrap();
        let sa = sa.unwrap();
        assert!(sa.edges().iter().all(|e| k12.has_edge(*e)));
        let (a, _) = find_absorber(&CompleteHypergraph { n: 21 }, [3, 7, 11], &none(21), &Budget::unlimited()).unwrap();
        let a = a.unwrap();
        a.check_shape().unwrap();
        assert_eq!(a.covering().len(), 7);
        assert_eq!(a.noncovering().len(), 6);
        let (a, end) = find_absorber(&CompleteHypergraph { n: 20 }, [0, 1, 2], &none(20), &Budget::unlimited()).unwrap();
        assert!(a.is_none());
        assert_eq!(end, SearchEnd::Exhausted);
    }

    #[test]
    fn isolated_root_has_nothing() {
        let s = TripleSystem::linear(12, vec![tri(1, 2, 3), tri(4, 5, 6)]).unwrap();
        let (sa, _) = find_sub_absorber(&s, [0, 1, 4], &none(12), &Budget::unlimited()).unwrap();
        assert!(sa.is_none());
        let (a, _) = find_absorber(&s, [0, 1, 4], &none(12), &Budget::unlimited()).unwrap();
        assert!(a.is_none());
    }

    #[test]
    fn search_agrees_with_brute_force() {
        let fano = TripleSystem::fano();
        let (sa, _) = find_sub_absorber(&fano, [0, 1, 3], &none(7), &Budget::unlimited()).unwrap();
        assert_eq!(sa.is_some(), brute_sub_absorber(&fano, [0, 1, 3]));
        assert!(sa.is_none());
        for seed in 0..4 {
            let s = random_sts(13, seed).unwrap();
            let mut rng = rng_from_seed(seed);
            for _ in 0..10 {
                let roots = random_triple(&mut rng, 13);
                let (sa, _) = find_sub_absorber(&s, roots, &none(13), &Budget::unlimited()).unwrap();
                assert_eq!(sa.is_some(), brute_sub_absorber(&s, roots), "seed {seed} roots {roots:?}");
                if let Some(sa) = sa {
                    assert!(sa.edges().iter().all(|e| s.has_edge(*e)));
                }
            }
        }
    }

    #[test]
    fn forbidden_vertices_are_avoided() {
        let s = random_sts(27, 3).unwrap();
        let mut forb = none(27);
        for v in [5, 6, 7, 8] {
            forb[v] = true;
        }
        let (a, _) = find_absorber(&s, [0, 1, 2], &forb, &Budget::new(2_000_000)).unwrap();
        if let Some(a) = a {
            a.check_shape().unwrap();
            assert!(a.externals().iter().all(|&v| !forb[v]));
            assert!(a.edges().iter().all(|e| s.has_edge(*e)));
        }
        assert!(find_absorber(&s, [0, 0, 2], &forb, &Budget::unlimited()).is_err());
        assert!(find_absorber(&s, [5, 1, 2], &forb, &Budget::unlimited()).is_err());
    }

    #[test]
    fn contracted_absorber_is_sparse() {
        let (a, _) = find_absorber(&CompleteHypergraph { n: 30 }, [0, 1, 2], &none(30), &Budget::unlimited()).unwrap();
        let h = a.unwrap().contracted();
        assert_eq!(h.edge_count(), 10);
        let r = sparseness_scan(&h).unwrap();
        assert_eq!(r.max_degree, 2);
        assert!(r.pass(), "{r:?}");
        assert!((r.m3 - 0.75).abs() < 1e-12 || r.m3 < 1.0);
        // a dense graph fails
        assert!(!sparseness_scan(&TripleSystem::complete(6)).unwrap().pass());
    }

    #[test]
    fn templates_small_q_are_exhaustively_robust() {
        for q in [2, 3] {
            let t = build_template(q, 100, 20, 1).unwrap();
            assert!(t.exhaustive);
            assert_eq!(t.verified_removals as u128, binomial(2 * q, q).unwrap());
            assert_eq!(t.system.n(), 10 * q);
            assert!(t.system.max_degree() <= 40);
        }
        assert!(build_template(1, 10, 5, 0).is_err());
    }

    #[test]
    fn structure_in_complete_host_completes_matchings() {
        let q = 2;
        let n = structure_vertex_count(q) + 31;
        let host = CompleteHypergraph { n };
        let z: Vec<usize> = (0..2 * q).collect();
        let StructureOutcome::Built(a) = assemble_absorbing_structure(&host, &z, &StructureOptions::default(), 4).unwrap() else {
            panic!("complete host always admits the structure");
        };
        assert_eq!(a.absorbers.len(), a.template.system.edge_count());
        assert!(a.max_degree() <= 40);
        assert!(a.edges().len() <= 13 * a.template.system.edge_count());
        let mut v = a.vertices();
        let len = v.len();
        v.dedup();
        assert_eq!(v.len(), len, "absorbers externally disjoint");
        for (i, ab) in a.absorbers.iter().enumerate() {
            ab.check_shape().unwrap();
            let e = a.template.system.edge(i).vertices().map(|t| a.embedding[t]);
            assert_eq!(ab.roots, e);
        }
        // cover outside vertices and the first half of Z by disjoint triples
        let mut in_s = vec![false; n];
        a.vertices().iter().for_each(|&v| in_s[v] = true);
        let mut rest: Vec<usize> = (0..n).filter(|&v| !in_s[v]).collect();
        rest.extend(&z[..q]);
        assert_eq!(rest.len() % 3, 0);
        let m = Matching::new(rest.chunks(3).map(|c| tri(c[0], c[1], c[2])).collect()).unwrap();
        let pm = complete_via_structure(&a, &m).unwrap();
        assert!(pm.is_perfect(n));
        // too few flexible vertices
        let short: Vec<usize> = (0..n).filter(|&v| !in_s[v]).collect();
        let m2 = Matching::new(short.chunks(3).filter(|c| c.len() == 3).map(|c| tri(c[0], c[1], c[2])).collect()).unwrap();
        assert!(complete_via_structure(&a, &m2).is_err());
        // uses a structure edge
        let bad = Matching::new(vec![a.absorbers[0].edges()[0]]).unwrap();
        assert!(complete_via_structure(&a, &bad).is_err());
        assert!(assemble_absorbing_structure(&host, &[0, 1, 2], &StructureOptions::default(), 0).is_err());
    }

    #[test]
    fn spotcheck_edge_cases() {
        let k = TripleSystem::complete(30);
        let r = resilience_spotcheck(&k, choose2(29) as f64, 2, 1, 10_000_000, 1).unwrap();
        assert!(!r.vacuous);
        assert_eq!(r.failures, 0);
        assert_eq!(r.samples, 2);
        let s = random_sts(21, 1).unwrap();
        let r = resilience_spotcheck(&s, 11.0, 2, 2, 1000, 1).unwrap();
        assert!(r.vacuous);
        assert!(resilience_spotcheck(&s, 0.5, 1, 1, 10, 1).is_err());
    }
}
