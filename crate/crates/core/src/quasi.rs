//! Quasirandomness audits for leave graphs and triple systems.
//!
//! For 3-graphs every statistic is built from
//! `e(X,Y,Z) = #{(x,y,z) : x∈X, y∈Y, z∈Z, {x,y,z} an edge}`. For fixed `Y`
//! and `Z` write `a_x` for the number of ordered `(y,z)` completing `x` to an
//! edge. Then `e(X,Y,Z) − t|X| = Σ_{x∈X} (a_x − t)`, so the best `X` is read
//! off directly and only `(Y,Z)` has to be searched.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::hypergraph::{LeaveGraph, TripleSystem};
use crate::rng::{rng_from_seed, Rng};

/// Largest vertex count for which subset-triple scans are exhaustive.
pub const EXHAUSTIVE_MAX_N: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    Exact,
    /// `k` uniform sets of each size.
    Sampled(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiReport {
    pub epsilon: f64,
    pub h: usize,
    pub density: f64,
    pub worst_set: Vec<usize>,
    pub max_deviation: f64,
    pub pass: bool,
    pub mode: CheckMode,
    pub seed: u64,
    pub sets_checked: u64,
}

fn relative_deviation(common: usize, d: f64, k: usize, n: usize) -> f64 {
    let target = d.powi(k as i32) * n as f64;
    if target == 0.0 {
        return 0.0;
    }
    (common as f64 - target).abs() / target
}

/// Relative deviation of `|⋂_{w∈A} N(w)|` from `d^{|A|}·n`, maximised over
/// the inspected sets `A` with `1 ≤ |A| ≤ h`. Ties keep the earliest set.
pub fn check_quasirandom(
    g: &LeaveGraph,
    eps: f64,
    h: usize,
    mode: CheckMode,
    seed: u64,
) -> Result<QuasiReport> {
    let n = g.n();
    if h == 0 {
        return domain("h must be at least 1");
    }
    if mode == CheckMode::Exact && h > 2 && n > 60 {
        return domain(format!("exact quasirandomness check needs h ≤ 2 or n ≤ 60 (h = {h}, n = {n})"));
    }
    let d = g.density();
    let words = n.div_ceil(64);
    let mut best = (0.0f64, Vec::new());
    let mut checked = 0u64;
    match mode {
        CheckMode::Exact => {
            for k in 1..=h.min(n) {
                let per_first: Vec<(f64, Vec<usize>, u64)> = (0..n)
                    .into_par_iter()
                    .map(|v| {
                        let mut acc = (0.0f64, Vec::new(), 0u64);
                        let mut stack = vec![v];
                        let row = g.row(v).to_vec();
                        exact_rec(g, d, k, &mut stack, &row, &mut acc);
                        acc
                    })
                    .collect();
                for (dev, set, c) in per_first {
                    checked += c;
                    if dev > best.0 || best.1.is_empty() {
                        best = (dev, set);
                    }
                }
            }
        }
        CheckMode::Sampled(samples) => {
            let mut rng = rng_from_seed(seed);
            for k in 1..=h.min(n) {
                for _ in 0..samples {
                    let set = sample(&mut rng, n, k).into_vec();
                    let mut acc = vec![u64::MAX; words];
                    for &v in &set {
                        for (a, r) in acc.iter_mut().zip(g.row(v)) {
                            *a &= r;
                        }
                    }
                    let common = acc.iter().map(|w| w.count_ones() as usize).sum::<usize>();
                    let dev = relative_deviation(common, d, k, n);
                    checked += 1;
                    if dev > best.0 || best.1.is_empty() {
                        let mut set = set;
                        set.sort_unstable();
                        best = (dev, set);
                    }
                }
            }
        }
    }
    Ok(QuasiReport {
        epsilon: eps,
        h,
        density: d,
        worst_set: best.1,
        max_deviation: best.0,
        pass: best.0 <= eps,
        mode,
        seed,
        sets_checked: checked,
    })
}

fn exact_rec(
    g: &LeaveGraph,
    d: f64,
    k: usize,
    stack: &mut Vec<usize>,
    common: &[u64],
    acc: &mut (f64, Vec<usize>, u64),
) {
    let n = g.n();
    if stack.len() == k {
        let c = common.iter().map(|w| w.count_ones() as usize).sum();
        let dev = relative_deviation(c, d, k, n);
        acc.2 += 1;
        if dev > acc.0 || acc.1.is_empty() {
            acc.0 = dev;
            acc.1 = stack.clone();
        }
        return;
    }
    let last = *stack.last().expect("stack starts non-empty");
    for v in last + 1..n {
        let next: Vec<u64> = common.iter().zip(g.row(v)).map(|(a, b)| a & b).collect();
        stack.push(v);
        exact_rec(g, d, k, stack, &next, acc);
        stack.pop();
    }
}

/// Exact number of triangles.
pub fn count_triangles(g: &LeaveGraph) -> u64 {
    let n = g.n();
    (0..n)
        .into_par_iter()
        .map(|a| {
            g.neighbors(a)
                .filter(|&b| b > a)
                .map(|b| {
                    g.row(a)
                        .iter()
                        .zip(g.row(b))
                        .enumerate()
                        .map(|(i, (x, y))| {
                            let mut w = x & y;
                            // only third vertices above b
                            let lo = i * 64;
                            if lo + 64 <= b + 1 {
                                w = 0;
                            } else if lo <= b {
                                w &= !((1u64 << (b - lo + 1)) - 1);
                            }
                            w.count_ones() as u64
                        })
                        .sum::<u64>()
                })
                .sum::<u64>()
        })
        .sum()
}

/// A triple of vertex sets, each sorted.
pub type SetTriple = (Vec<usize>, Vec<usize>, Vec<usize>);

/// `a_x` for every `x`, given `Y` and `Z` as bit masks.
fn completions(s: &TripleSystem, y: &[bool], z: &[bool]) -> Vec<i64> {
    let mut a = vec![0i64; s.n()];
    for e in s.edges() {
        let [p, q, r] = e.vertices();
        for (x, u, v) in [(p, q, r), (q, p, r), (r, p, q)] {
            a[x] += (y[u] && z[v]) as i64 + (y[v] && z[u]) as i64;
        }
    }
    a
}

/// Result of maximising `±(e(X,Y,Z) − t(|Y|,|Z|)·|X|)` over subset triples.
#[derive(Debug, Clone, PartialEq)]
struct Extremes<T> {
    above: T,
    above_at: (u64, u64),
    below: T,
    below_at: (u64, u64),
}

/// Lane arithmetic for the scan kernel. Integer lanes wrap so the inner
/// loop stays branch-free; magnitudes are far below `i32::MAX` for `n ≤ 15`.
trait Lane: Copy + Default + PartialOrd + Send + Sync {
    fn from_i64(x: i64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn pos_part(self) -> Self;
}

impl Lane for i32 {
    fn from_i64(x: i64) -> Self {
        x as i32
    }
    fn add(self, o: Self) -> Self {
        self.wrapping_add(o)
    }
    fn sub(self, o: Self) -> Self {
        self.wrapping_sub(o)
    }
    fn mul(self, o: Self) -> Self {
        self.wrapping_mul(o)
    }
    fn pos_part(self) -> Self {
        self.max(0)
    }
}

impl Lane for f64 {
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn pos_part(self) -> Self {
        self.max(0.0)
    }
}

const LANES: usize = 16;

/// Exhaustive scan over all `(Y, Z)`. Lane values are `scale·a_x − t(|Y|,|Z|)`,
/// so the optimum over `X` is the sum of positive (or negative) lanes.
fn exhaustive_scan<T: Lane>(
    s: &TripleSystem,
    scale: T,
    threshold: impl Fn(usize, usize) -> T + Sync,
) -> Extremes<T> {
    let n = s.n();
    assert!(n <= EXHAUSTIVE_MAX_N);
    let mul = |k: i64| T::from_i64(k).mul(scale);
    // third[y][z] = x with {x,y,z} an edge (first one), as a lane delta list
    let mut hits: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; n];
    for e in s.edges() {
        let [p, q, r] = e.vertices();
        for (x, u, v) in [(p, q, r), (p, r, q), (q, p, r), (q, r, p), (r, p, q), (r, q, p)] {
            hits[u][v].push(x);
        }
    }
    let full = 1u64 << n;
    let results: Vec<Extremes<T>> = (0..full as usize)
        .into_par_iter()
        .with_min_len(64)
        .map(|ymask| {
            let ymask = ymask as u64;
            let ysize = ymask.count_ones() as usize;
            // delta[z][x] = scale · #{y ∈ Y : {x,y,z} ∈ E}
            let mut delta = vec![[T::default(); LANES]; n];
            for (z, dz) in delta.iter_mut().enumerate() {
                let mut counts = [0i64; LANES];
                for (y, row) in hits.iter().enumerate() {
                    if ymask >> y & 1 == 1 {
                        for &x in &row[z] {
                            counts[x] += 1;
                        }
                    }
                }
                for x in 0..LANES {
                    dz[x] = mul(counts[x]);
                }
            }
            let mut lanes = [T::default(); LANES];
            let mut zmask = 0u64;
            let mut best = Extremes { above: T::default(), above_at: (ymask, 0), below: T::default(), below_at: (ymask, 0) };
            let zero = T::default();
            let valid: [T; LANES] = std::array::from_fn(|x| T::from_i64((x < n) as i64));
            for step in 1..full {
                let z = step.trailing_zeros() as usize;
                zmask ^= 1 << z;
                if zmask >> z & 1 == 1 {
                    for x in 0..LANES {
                        lanes[x] = lanes[x].add(delta[z][x]);
                    }
                } else {
                    for x in 0..LANES {
                        lanes[x] = lanes[x].sub(delta[z][x]);
                    }
                }
                let t = threshold(ysize, zmask.count_ones() as usize);
                let mut pos = [zero; LANES];
                let mut neg = [zero; LANES];
                for x in 0..LANES {
                    // unused lanes stay at 0 - 0
                    let v = lanes[x].sub(t.mul(valid[x]));
                    pos[x] = v.pos_part();
                    neg[x] = zero.sub(v).pos_part();
                }
                let pos = pos.iter().fold(zero, |a, &b| a.add(b));
                let neg = neg.iter().fold(zero, |a, &b| a.add(b));
                if pos > best.above {
                    best.above = pos;
                    best.above_at = (ymask, zmask);
                }
                if neg > best.below {
                    best.below = neg;
                    best.below_at = (ymask, zmask);
                }
            }
            best
        })
        .collect();
    let mut out = Extremes { above: T::default(), above_at: (0, 0), below: T::default(), below_at: (0, 0) };
    for r in results {
        if r.above > out.above {
            out.above = r.above;
            out.above_at = r.above_at;
        }
        if r.below > out.below {
            out.below = r.below;
            out.below_at = r.below_at;
        }
    }
    out
}

/// Sizes drawn from `{⌈n/4⌉, ⌈n/2⌉, ⌈3n/4⌉}` on even draws, fully uniform
/// random subsets on odd draws.
fn sample_subset(rng: &mut Rng, n: usize, draw: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    if draw % 2 == 0 {
        let sizes = [n.div_ceil(4), n.div_ceil(2), (3 * n).div_ceil(4)];
        let k = sizes[rng.gen_range(0..3)].min(n);
        for v in sample(rng, n, k) {
            mask[v] = true;
        }
    } else {
        for m in mask.iter_mut() {
            *m = rng.gen_bool(0.5);
        }
    }
    mask
}

fn sampled_pairs(n: usize, samples: usize, seed: u64) -> Vec<(Vec<bool>, Vec<bool>)> {
    let mut rng = rng_from_seed(seed);
    (0..samples)
        .map(|i| {
            let y = sample_subset(&mut rng, n, i);
            let z = sample_subset(&mut rng, n, i);
            (y, z)
        })
        .collect()
}

fn set_of(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v).collect()
}

/// How the subset triples of an audit were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanPolicy {
    /// Every `(Y, Z)`, with the optimal `X` for each.
    Exhaustive,
    /// `samples` random `(Y, Z)` pairs, with the optimal `X` for each.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperQuasiReport {
    pub p: f64,
    pub beta_hat: f64,
    pub worst: SetTriple,
    pub policy: ScanPolicy,
    pub samples: usize,
    pub seed: u64,
}

/// Smallest `β̂ ≥ 0` with `e(X,Y,Z) ≤ p|X||Y||Z| + β̂·n³·p` for every inspected
/// triple. Exhaustive for `n ≤ 15`, sampled otherwise; samples form a prefix
/// of the same stream, so more samples never lower `β̂`.
pub fn upper_quasi_defect(s: &TripleSystem, p: f64, samples: usize, seed: u64) -> Result<UpperQuasiReport> {
    if p <= 0.0 || p.is_nan() {
        return domain(format!("p must be positive, got {p}"));
    }
    let n = s.n();
    let norm = (n as f64).powi(3) * p;
    let (excess, worst, policy) = if n <= EXHAUSTIVE_MAX_N {
        let ext = exhaustive_scan::<f64>(s, 1.0, |y, z| p * (y * z) as f64);
        let (ym, zm) = ext.above_at;
        let (ys, zs) = (masks(ym, n), masks(zm, n));
        (ext.above, best_x_above(s, &ys, &zs, p), ScanPolicy::Exhaustive)
    } else {
        let pairs = sampled_pairs(n, samples, seed);
        let scored: Vec<f64> = pairs
            .par_iter()
            .map(|(y, z)| {
                let t = p * (set_of(y).len() * set_of(z).len()) as f64;
                completions(s, y, z).iter().map(|&a| (a as f64 - t).max(0.0)).sum()
            })
            .collect();
        let mut best = (0.0, None);
        for (i, &v) in scored.iter().enumerate() {
            if v > best.0 {
                best = (v, Some(i));
            }
        }
        let worst = match best.1 {
            Some(i) => best_x_above(s, &pairs[i].0, &pairs[i].1, p),
            None => (Vec::new(), Vec::new(), Vec::new()),
        };
        (best.0, worst, ScanPolicy::Sampled)
    };
    let beta_hat = if norm > 0.0 { (excess / norm).max(0.0) } else { 0.0 };
    Ok(UpperQuasiReport { p, beta_hat, worst, policy, samples, seed })
}

fn masks(m: u64, n: usize) -> Vec<bool> {
    (0..n).map(|v| m >> v & 1 == 1).collect()
}

fn best_x_above(s: &TripleSystem, y: &[bool], z: &[bool], p: f64) -> SetTriple {
    let t = p * (set_of(y).len() * set_of(z).len()) as f64;
    let a = completions(s, y, z);
    let x = (0..s.n()).filter(|&v| a[v] as f64 > t).collect();
    (x, set_of(y), set_of(z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    /// `max |e(X,Y,Z) − |X||Y||Z|/n|` over inspected triples.
    pub max_deviation: f64,
    /// `n · max_deviation`, an exact integer.
    pub scaled_deviation: u64,
    pub worst: SetTriple,
    pub policy: ScanPolicy,
    pub samples: usize,
    pub seed: u64,
}

/// `|e(X,Y,Z) − |X||Y||Z|/n|` for explicit sets.
pub fn discrepancy_at(s: &TripleSystem, x: &[usize], y: &[usize], z: &[usize]) -> f64 {
    let n = s.n();
    let mut ym = vec![false; n];
    let mut zm = vec![false; n];
    y.iter().for_each(|&v| ym[v] = true);
    z.iter().for_each(|&v| zm[v] = true);
    let a = completions(s, &ym, &zm);
    let e: i64 = x.iter().map(|&v| a[v]).sum();
    let scaled = (n as i64 * e - (x.len() * y.len() * z.len()) as i64).unsigned_abs();
    scaled as f64 / n as f64
}

/// Maximum of `|e(X,Y,Z) − |X||Y||Z|/n|`; exhaustive for `n ≤ 15`.
pub fn discrepancy(s: &TripleSystem, samples: usize, seed: u64) -> Result<DiscrepancyReport> {
    if !s.is_sts() {
        return domain("discrepancy needs a full Steiner triple system");
    }
    let n = s.n();
    let ni = n as i64;
    // lanes hold n·a_x − |Y||Z|, exact integers
    let (scaled, worst, policy) = if n <= EXHAUSTIVE_MAX_N {
        let ext = exhaustive_scan::<i32>(s, n as i32, |y, z| (y * z) as i32);
        let (value, (ym, zm), above) = if ext.above >= ext.below {
            (ext.above, ext.above_at, true)
        } else {
            (ext.below, ext.below_at, false)
        };
        (value as u64, best_x_scaled(s, &masks(ym, n), &masks(zm, n), above), ScanPolicy::Exhaustive)
    } else {
        let pairs = sampled_pairs(n, samples, seed);
        let scored: Vec<(i64, bool)> = pairs
            .par_iter()
            .map(|(y, z)| {
                let t = (set_of(y).len() * set_of(z).len()) as i64;
                let a = completions(s, y, z);
                let pos: i64 = a.iter().map(|&v| (ni * v - t).max(0)).sum();
                let neg: i64 = a.iter().map(|&v| (t - ni * v).max(0)).sum();
                if pos >= neg { (pos, true) } else { (neg, false) }
            })
            .collect();
        let mut best: (i64, Option<usize>) = (0, None);
        for (i, &(v, _)) in scored.iter().enumerate() {
            if v > best.0 || best.1.is_none() {
                best = (v, Some(i));
            }
        }
        let worst = match best.1 {
            Some(i) => best_x_scaled(s, &pairs[i].0, &pairs[i].1, scored[i].1),
            None => (Vec::new(), Vec::new(), Vec::new()),
        };
        (best.0 as u64, worst, ScanPolicy::Sampled)
    };
    Ok(DiscrepancyReport {
        max_deviation: scaled as f64 / n as f64,
        scaled_deviation: scaled,
        worst,
        policy,
        samples,
        seed,
    })
}

fn best_x_scaled(s: &TripleSystem, y: &[bool], z: &[bool], above: bool) -> SetTriple {
    let n = s.n() as i64;
    let t = (set_of(y).len() * set_of(z).len()) as i64;
    let a = completions(s, y, z);
    let x = (0..s.n())
        .filter(|&v| if above { n * a[v] > t } else { n * a[v] < t })
        .collect();
    (x, set_of(y), set_of(z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceSample {
    pub w: usize,
    pub degree_bound: f64,
    pub sets: usize,
    /// Sets whose spot-check found a root triple without an absorber.
    pub failing: usize,
    pub vacuous: usize,
    /// Failures tolerated: the allowed exceptional fraction times `sets`.
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub alpha: f64,
    pub beta: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    pub regularity_pass: bool,
    pub upper_quasi: Option<UpperQuasiReport>,
    pub upper_quasi_pass: bool,
    pub resilience: Vec<ResilienceSample>,
    pub resilience_pass: bool,
}

/// Checks the three goodness properties: degrees `αn/2 ± βn` (exactly),
/// `(α/n, β)`-upper-quasirandomness, and absorber resilience of random
/// induced `w`-vertex subgraphs for `w = ⌈βn⌉` and `w = ⌈n/2⌉`.
pub fn audit_goodness(
    s: &TripleSystem,
    alpha: f64,
    beta: f64,
    resilience_samples: usize,
    seed: u64,
) -> Result<GoodnessReport> {
    let n = s.n();
    let nf = n as f64;
    let (min_degree, max_degree) = (s.min_degree(), s.max_degree());
    let centre = alpha * nf / 2.0;
    let regularity_pass =
        (min_degree as f64) >= centre - beta * nf && (max_degree as f64) <= centre + beta * nf;
    let (upper_quasi, upper_quasi_pass) = if alpha > 0.0 && n > 0 {
        let r = upper_quasi_defect(s, alpha / nf, 2000, seed)?;
        let pass = r.beta_hat <= beta;
        (Some(r), pass)
    } else {
        // p = 0 leaves no room for any edge
        (None, s.edge_count() == 0)
    };
    let mut rng = rng_from_seed(crate::rng::derive_seed(seed, 1));
    let mut widths = vec![(beta * nf).ceil() as usize, n.div_ceil(2)];
    widths.dedup();
    let mut resilience = Vec::new();
    for w in widths.into_iter().filter(|&w| w <= n) {
        let eta = w as f64 / nf;
        let d = crate::absorbers::resilience_degree_bound(eta, alpha, n);
        let allowed_fraction = (-1e-8 * eta.powi(4) * alpha * alpha * nf).exp();
        let mut row = ResilienceSample {
            w,
            degree_bound: d,
            sets: 0,
            failing: 0,
            vacuous: 0,
            allowed: allowed_fraction * resilience_samples as f64,
        };
        for _ in 0..resilience_samples {
            let chosen = sample(&mut rng, n, w).into_vec();
            let set = crate::hypergraph::VertexSet::from_vertices(n, chosen)?;
            let (sub, _) = crate::hypergraph::induced(s, &set);
            row.sets += 1;
            if d < 1.0 || w < 3 {
                row.vacuous += 1;
                continue;
            }
            let r = crate::absorbers::resilience_spotcheck(&sub, d, 2, 1, 100_000, rng.gen())?;
            row.vacuous += r.vacuous as usize;
            row.failing += (r.failures > 0) as usize;
        }
        resilience.push(row);
    }
    let resilience_pass = resilience.iter().all(|r| r.failing as f64 <= r.allowed);
    Ok(GoodnessReport {
        alpha,
        beta,
        min_degree,
        max_degree,
        regularity_pass,
        upper_quasi,
        upper_quasi_pass,
        resilience,
        resilience_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::{random_sts, triangle_removal};
    use crate::hypergraph::{e_triple, leave_graph, VertexSet};

    #[test]
    fn complete_leave_deviation_is_size_over_n() {
        let g = LeaveGraph::complete(12);
        let r = check_quasirandom(&g, 0.5, 2, CheckMode::Exact, 0).unwrap();
        assert!((r.max_deviation - 2.0 / 12.0).abs() < 1e-12);
        assert_eq!(r.worst_set.len(), 2);
        assert!(r.pass);
        assert_eq!(r.sets_checked, 12 + 66);
    }

    #[test]
    fn empty_leave_has_zero_deviation() {
        let r = check_quasirandom(&LeaveGraph::empty(9), 0.0, 3, CheckMode::Exact, 0).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn exact_mode_limits() {
        let g = LeaveGraph::complete(61);
        assert!(check_quasirandom(&g, 0.1, 3, CheckMode::Exact, 0).is_err());
        assert!(check_quasirandom(&g, 0.1, 0, CheckMode::Exact, 0).is_err());
        assert!(check_quasirandom(&g, 0.1, 3, CheckMode::Sampled(5), 0).is_ok());
    }

    #[test]
    fn exact_matches_brute_force_pairs() {
        let out = triangle_removal(30, 40, 3).unwrap();
        let g = &out.leave;
        let d = g.density();
        let n = g.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            worst = worst.max(((g.degree(a) as f64) - d * n as f64).abs() / (d * n as f64));
            for b in a + 1..n {
                let c = (0..n).filter(|&w| g.has(a, w) && g.has(b, w)).count();
                worst = worst.max((c as f64 - d * d * n as f64).abs() / (d * d * n as f64));
            }
        }
        let r = check_quasirandom(g, 0.05, 2, CheckMode::Exact, 0).unwrap();
        assert!((r.max_deviation - worst).abs() < 1e-12);
    }

    #[test]
    fn triangle_counts() {
        assert_eq!(count_triangles(&LeaveGraph::complete(7)), 35);
        assert_eq!(count_triangles(&LeaveGraph::empty(7)), 0);
        for n in [3, 64, 65, 130] {
            assert_eq!(count_triangles(&LeaveGraph::complete(n)), crate::hypergraph::choose3(n) as u64);
        }
        let out = triangle_removal(40, 60, 9).unwrap();
        let g = &out.leave;
        let mut brute = 0;
        for a in 0..40 {
            for b in a + 1..40 {
                for c in b + 1..40 {
                    brute += (g.has(a, b) && g.has(a, c) && g.has(b, c)) as u64;
                }
            }
        }
        assert_eq!(count_triangles(g), brute);
    }

    #[test]
    fn fano_discrepancy_matches_brute_force() {
        let s = TripleSystem::fano();
        let n = 7;
        let mut best = 0u64;
        let sets: Vec<VertexSet> = (0u32..128)
            .map(|m| VertexSet::from_vertices(n, (0..n).filter(|&v| m >> v & 1 == 1)).unwrap())
            .collect();
        for x in &sets {
            for y in &sets {
                for z in &sets {
                    let e = e_triple(&s, x, y, z) as i64;
                    let dev = (7 * e - (x.len() * y.len() * z.len()) as i64).unsigned_abs();
                    best = best.max(dev);
                }
            }
        }
        let r = discrepancy(&s, 0, 0).unwrap();
        assert_eq!(r.scaled_deviation, best);
        let (x, y, z) = &r.worst;
        assert!((discrepancy_at(&s, x, y, z) - r.max_deviation).abs() < 1e-12);
    }

    #[test]
    fn identity_deviation_is_n() {
        for n in [7, 9, 13, 19] {
            let s = random_sts(n, 1).unwrap();
            let all: Vec<usize> = (0..n).collect();
            assert_eq!(discrepancy_at(&s, &all, &all, &all), n as f64);
        }
    }

    #[test]
    fn discrepancy_rejects_non_sts() {
        assert!(discrepancy(&TripleSystem::empty(9), 10, 0).is_err());
    }

    #[test]
    fn sampled_discrepancy_is_monotone_in_samples() {
        let s = random_sts(19, 2).unwrap();
        let a = discrepancy(&s, 20, 5).unwrap();
        let b = discrepancy(&s, 80, 5).unwrap();
        assert!(b.scaled_deviation >= a.scaled_deviation);
        let (x, y, z) = &b.worst;
        assert!((discrepancy_at(&s, x, y, z) - b.max_deviation).abs() < 1e-9);
    }

    #[test]
    fn upper_quasi_empty_is_zero() {
        let r = upper_quasi_defect(&TripleSystem::empty(20), 0.1, 50, 1).unwrap();
        assert_eq!(r.beta_hat, 0.0);
        assert!(upper_quasi_defect(&TripleSystem::empty(5), 0.0, 1, 1).is_err());
    }

    #[test]
    fn upper_quasi_fano_matches_brute_force() {
        let s = TripleSystem::fano();
        let p = 1.0 / 7.0;
        let mut best: f64 = 0.0;
        for ym in 0u32..128 {
            for zm in 0u32..128 {
                let y = VertexSet::from_vertices(7, (0..7).filter(|&v| ym >> v & 1 == 1)).unwrap();
                let z = VertexSet::from_vertices(7, (0..7).filter(|&v| zm >> v & 1 == 1)).unwrap();
                for xm in 0u32..128 {
                    let x = VertexSet::from_vertices(7, (0..7).filter(|&v| xm >> v & 1 == 1)).unwrap();
                    let e = e_triple(&s, &x, &y, &z) as f64;
                    best = best.max(e - p * (x.len() * y.len() * z.len()) as f64);
                }
            }
        }
        let r = upper_quasi_defect(&s, p, 0, 0).unwrap();
        assert!((r.beta_hat - best / (343.0 * p)).abs() < 1e-12);
        assert_eq!(r.policy, ScanPolicy::Exhaustive);
        // the identity with p = 1/n: discrepancy bounds the upper defect
        let d = discrepancy(&s, 0, 0).unwrap();
        assert!(r.beta_hat * 343.0 * p <= d.max_deviation + 1e-12);
    }

    #[test]
    fn sampled_upper_quasi_certifies_worst() {
        let s = leave_to_system_fixture();
        let p = 0.05;
        let r = upper_quasi_defect(&s, p, 40, 3).unwrap();
        let n = s.n();
        let (x, y, z) = &r.worst;
        let xs = VertexSet::from_vertices(n, x.iter().copied()).unwrap();
        let ys = VertexSet::from_vertices(n, y.iter().copied()).unwrap();
        let zs = VertexSet::from_vertices(n, z.iter().copied()).unwrap();
        let e = e_triple(&s, &xs, &ys, &zs) as f64;
        let implied = (e - p * (x.len() * y.len() * z.len()) as f64) / ((n as f64).powi(3) * p);
        assert!((implied.max(0.0) - r.beta_hat).abs() < 1e-12);
    }

    fn leave_to_system_fixture() -> TripleSystem {
        let out = triangle_removal(25, 60, 4).unwrap();
        let _ = leave_graph(out.partial.system()).unwrap();
        out.partial.system().clone()
    }

    #[test]
    fn goodness_of_full_sts() {
        let s = crate::generation::random_sts(21, 1).unwrap();
        let r = audit_goodness(&s, 1.0, 1.0 / 21.0, 3, 1).unwrap();
        assert_eq!((r.min_degree, r.max_degree), (10, 10));
        assert!(r.regularity_pass);
        assert_eq!(r.resilience.len(), 2);
        assert!(r.resilience.iter().all(|x| x.sets == 3));
    }

    #[test]
    fn goodness_of_empty_system() {
        let s = TripleSystem::empty(12);
        let r = audit_goodness(&s, 0.0, 0.0, 2, 1).unwrap();
        assert!(r.regularity_pass && r.upper_quasi_pass);
        assert!(r.upper_quasi.is_none());
    }

    #[test]
    fn goodness_of_half_an_sts() {
        // degrees verified by direct count against the edge list
        let full = crate::generation::random_sts(21, 1).unwrap();
        let half = full.subsystem(0..full.edge_count() / 2);
        let mut deg = [0usize; 21];
        for e in half.edges() {
            for v in e.vertices() {
                deg[v] += 1;
            }
        }
        let r = audit_goodness(&half, 0.5, 0.1, 2, 1).unwrap();
        assert_eq!(r.min_degree, *deg.iter().min().unwrap());
        assert_eq!(r.max_degree, *deg.iter().max().unwrap());
        let ok = deg.iter().all(|&d| (d as f64 - 5.25).abs() <= 2.1);
        assert_eq!(r.regularity_pass, ok);
    }
}
