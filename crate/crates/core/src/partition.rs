//! Random partition of a linear system into `3ℓ + 1` parts.
//!
//! Every vertex joins each `W_i` independently with probability `δ`, and
//! `U_i = V \ W_i`. Then every edge independently:
//!
//! 1. if it lies inside some `W_i`: to `F_i` when `i` is unique, else `Q`;
//! 2. otherwise, with probability `p_H / (1 − p_F)` and a uniform `i`: to
//!    `H_i` if it has one vertex in `U_i` and two in `W_i`, else `Q`;
//! 3. otherwise, with a uniform `i`: to `G_i` if it lies inside `U_i`,
//!    else `Q`;
//!
//! where `p_F = 1 − (1 − δ³)^ℓ`, `p_F + p_H = 2√δ` and `p_G = 1 − 2√δ`.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::absorbers::resilience_spotcheck;
use crate::error::{domain, Result};
use crate::hypergraph::{induced, TripleSystem, VertexSet};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "part", content = "index", rename_all = "lowercase")]
pub enum Part {
    G(usize),
    H(usize),
    F(usize),
    Q,
}

#[derive(Debug, Clone)]
pub struct PartitionOptions {
    /// Upper limit on `ℓ`; `None` uses `max(1, ⌊n/30⌋)`.
    pub ell_cap: Option<usize>,
    pub kappa: f64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions { ell_cap: None, kappa: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionBundle {
    pub n: usize,
    pub delta: f64,
    pub ell: usize,
    /// `⌈δ^{-5/2}⌉` before capping.
    pub ell_uncapped: usize,
    pub cap_binds: bool,
    pub p_f: f64,
    pub p_h: f64,
    pub p_g: f64,
    pub kappa: f64,
    pub seed: u64,
    /// `in_w[i][v]`: whether `v ∈ W_i`.
    pub in_w: Vec<Vec<bool>>,
    /// Part of every edge, by edge id.
    pub assignment: Vec<Part>,
}

impl PartitionBundle {
    pub fn w(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&v| self.in_w[i][v]).collect()
    }

    pub fn u(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&v| !self.in_w[i][v]).collect()
    }

    fn ids(&self, want: Part) -> Vec<usize> {
        self.assignment.iter().enumerate().filter(|(_, &p)| p == want).map(|(id, _)| id).collect()
    }

    pub fn g(&self, i: usize) -> Vec<usize> {
        self.ids(Part::G(i))
    }

    pub fn h(&self, i: usize) -> Vec<usize> {
        self.ids(Part::H(i))
    }

    pub fn f(&self, i: usize) -> Vec<usize> {
        self.ids(Part::F(i))
    }

    pub fn q(&self) -> Vec<usize> {
        self.ids(Part::Q)
    }

    /// Edges lying inside at least one `W_i` (exactly those sent by step 1).
    pub fn inside_some_w(&self, s: &TripleSystem) -> usize {
        s.edges()
            .iter()
            .filter(|e| (0..self.ell).any(|i| e.vertices().iter().all(|&v| self.in_w[i][v])))
            .count()
    }
}

/// `(p_F, p_H, p_G)` for `δ` and `ℓ`.
pub fn part_probabilities(delta: f64, ell: usize) -> (f64, f64, f64) {
    let p_f = 1.0 - (1.0 - delta.powi(3)).powi(ell as i32);
    let root = 2.0 * delta.sqrt();
    (p_f, root - p_f, 1.0 - root)
}

pub fn good_partition(s: &TripleSystem, delta: f64, seed: u64, opts: &PartitionOptions) -> Result<PartitionBundle> {
    if !(delta > 0.0 && 2.0 * delta.sqrt() < 1.0) {
        return domain(format!("δ must satisfy 0 < δ and 2√δ < 1, got {delta}"));
    }
    if !s.is_linear() {
        return domain("partition needs a linear system");
    }
    let n = s.n();
    let ell_uncapped = delta.powf(-2.5).ceil() as usize;
    let cap = opts.ell_cap.unwrap_or((n / 30).max(1)).max(1);
    let ell = ell_uncapped.min(cap);
    let (p_f, p_h, p_g) = part_probabilities(delta, ell);
    if p_h < 0.0 {
        return domain(format!("p_H = 2√δ − p_F = {p_h} is negative for δ = {delta}, ℓ = {ell}"));
    }
    let mut rng = rng_from_seed(seed);
    let in_w: Vec<Vec<bool>> = (0..ell).map(|_| (0..n).map(|_| rng.gen_bool(delta)).collect()).collect();
    let bridge_rate = p_h / (1.0 - p_f);
    let assignment = s
        .edges()
        .iter()
        .map(|e| {
            let vs = e.vertices();
            let inside: Vec<usize> = (0..ell).filter(|&i| vs.iter().all(|&v| in_w[i][v])).collect();
            if !inside.is_empty() {
                return if inside.len() == 1 { Part::F(inside[0]) } else { Part::Q };
            }
            let bridge = rng.gen_bool(bridge_rate.clamp(0.0, 1.0));
            let i = rng.gen_range(0..ell);
            let in_wi = vs.iter().filter(|&&v| in_w[i][v]).count();
            if bridge {
                if in_wi == 2 { Part::H(i) } else { Part::Q }
            } else if in_wi == 0 {
                Part::G(i)
            } else {
                Part::Q
            }
        })
        .collect();
    Ok(PartitionBundle {
        n,
        delta,
        ell,
        ell_uncapped,
        cap_binds: ell < ell_uncapped,
        p_f,
        p_h,
        p_g,
        kappa: opts.kappa,
        seed,
        in_w,
        assignment,
    })
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    /// Relative slack on every leading term.
    pub slack: f64,
    pub resilience_triples: usize,
    pub resilience_subgraphs: usize,
    pub resilience_budget: u64,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { slack: 0.1, resilience_triples: 2, resilience_subgraphs: 1, resilience_budget: 200_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionAudit {
    /// The parts are pairwise disjoint and cover every edge.
    pub exact_partition: bool,
    /// Every part has its required shape relative to `U_i` / `W_i`.
    pub shapes_hold: bool,
    pub alpha: f64,
    pub g_fraction: f64,
    pub most_edges_covered: bool,
    pub w_sizes: Vec<usize>,
    pub w_sizes_ok: bool,
    pub g_degree_target: f64,
    pub g_degree_range: (usize, usize),
    pub g_almost_regular: bool,
    pub f_degree_bound: f64,
    pub f_min_degree: usize,
    pub f_dense: bool,
    pub bridge_bound: f64,
    pub bridge_min: usize,
    pub many_bridges: bool,
    pub resilience_degree: f64,
    pub resilience_vacuous: usize,
    pub resilience_failures: usize,
    pub resilience_samples: usize,
    pub f_resilient: bool,
}

/// Re-checks the partition and the six properties; `o(n)` terms become
/// `slack` times the leading term.
pub fn audit_partition(b: &PartitionBundle, s: &TripleSystem, opts: &AuditOptions) -> Result<PartitionAudit> {
    let n = s.n();
    if b.assignment.len() != s.edge_count() || b.n != n {
        return domain("bundle was not built from this system");
    }
    let ell = b.ell;
    let total: usize = (0..ell).map(|i| b.g(i).len() + b.h(i).len() + b.f(i).len()).sum::<usize>() + b.q().len();
    let exact_partition = total == s.edge_count()
        && b.assignment.iter().all(|p| match p {
            Part::G(i) | Part::H(i) | Part::F(i) => *i < ell,
            Part::Q => true,
        });
    let shapes_hold = s.edges().iter().zip(&b.assignment).all(|(e, p)| {
        let in_w = |i: usize| e.vertices().iter().filter(|&&v| b.in_w[i][v]).count();
        match *p {
            Part::G(i) => in_w(i) == 0,
            Part::H(i) => in_w(i) == 2,
            Part::F(i) => in_w(i) == 3,
            Part::Q => true,
        }
    });
    let alpha = if n == 0 { 0.0 } else { 2.0 * (3.0 * s.edge_count() as f64 / n as f64) / n as f64 };
    let delta = b.delta;
    let slack = opts.slack;
    let g_total: usize = (0..ell).map(|i| b.g(i).len()).sum();
    let g_fraction = if s.edge_count() == 0 { 1.0 } else { g_total as f64 / s.edge_count() as f64 };
    let most_edges_covered = g_fraction >= 1.0 - 3.0 * delta.sqrt();

    let w_sizes: Vec<usize> = (0..ell).map(|i| b.w(i).len()).collect();
    let dn = delta * n as f64;
    let w_sizes_ok = w_sizes.iter().all(|&w| w > 0 && (w as f64 - dn).abs() <= slack * dn);

    let g_degree_target = alpha * (1.0 - delta).powi(2) * (1.0 - 2.0 * delta.sqrt()) / ell as f64 * n as f64 / 2.0;
    let f_degree_bound = 0.9999 * alpha * delta * delta * n as f64 / 2.0;
    let bridge_bound = alpha * n as f64 / 2.0 * delta * delta * b.p_h / ell as f64;
    let per_part: Vec<(usize, usize, usize, usize)> = (0..ell)
        .into_par_iter()
        .map(|i| {
            let mut gdeg = vec![0usize; n];
            let mut fdeg = vec![0usize; n];
            let mut hdeg = vec![0usize; n];
            for (id, e) in s.edges().iter().enumerate() {
                let target = match b.assignment[id] {
                    Part::G(j) if j == i => &mut gdeg,
                    Part::F(j) if j == i => &mut fdeg,
                    Part::H(j) if j == i => &mut hdeg,
                    _ => continue,
                };
                e.vertices().iter().for_each(|&v| target[v] += 1);
            }
            let u: Vec<usize> = (0..n).filter(|&v| !b.in_w[i][v]).collect();
            let w: Vec<usize> = (0..n).filter(|&v| b.in_w[i][v]).collect();
            let gmin = u.iter().map(|&v| gdeg[v]).min().unwrap_or(0);
            let gmax = u.iter().map(|&v| gdeg[v]).max().unwrap_or(0);
            let fmin = w.iter().map(|&v| fdeg[v]).min().unwrap_or(0);
            let hmin = u.iter().map(|&v| hdeg[v]).min().unwrap_or(0);
            (gmin, gmax, fmin, hmin)
        })
        .collect();
    let g_degree_range = (
        per_part.iter().map(|p| p.0).min().unwrap_or(0),
        per_part.iter().map(|p| p.1).max().unwrap_or(0),
    );
    let g_almost_regular = (g_degree_range.0 as f64) >= g_degree_target * (1.0 - slack)
        && (g_degree_range.1 as f64) <= g_degree_target * (1.0 + slack);
    let f_min_degree = per_part.iter().map(|p| p.2).min().unwrap_or(0);
    let f_dense = f_min_degree as f64 >= f_degree_bound * (1.0 - slack);
    let bridge_min = per_part.iter().map(|p| p.3).min().unwrap_or(0);
    let many_bridges = bridge_min as f64 >= bridge_bound * (1.0 - slack);

    let resilience_degree = 0.9995 * alpha * delta * delta * n as f64 / 2.0;
    let drop = (b.kappa * n as f64).floor() as usize;
    let mut rng = rng_from_seed(opts.seed);
    let mut vacuous = 0;
    let mut failures = 0;
    let mut samples = 0;
    for i in 0..ell {
        let mut keep = b.in_w[i].clone();
        let mut w = b.w(i);
        // delete ⌊κn⌋ random vertices of W_i
        for _ in 0..drop.min(w.len()) {
            let k = rng.gen_range(0..w.len());
            keep[w.swap_remove(k)] = false;
        }
        let f = s.subsystem(b.f(i));
        let (fw, _) = induced(&f, &VertexSet::from_mask(keep));
        if fw.n() < 3 || resilience_degree < 1.0 {
            vacuous += 1;
            continue;
        }
        let r = resilience_spotcheck(
            &fw,
            resilience_degree,
            opts.resilience_triples,
            opts.resilience_subgraphs,
            opts.resilience_budget,
            rng.gen(),
        )?;
        vacuous += r.vacuous as usize;
        failures += r.failures;
        samples += r.samples;
    }
    Ok(PartitionAudit {
        exact_partition,
        shapes_hold,
        alpha,
        g_fraction,
        most_edges_covered,
        w_sizes,
        w_sizes_ok,
        g_degree_target,
        g_degree_range,
        g_almost_regular,
        f_degree_bound,
        f_min_degree,
        f_dense,
        bridge_bound,
        bridge_min,
        many_bridges,
        resilience_degree,
        resilience_vacuous: vacuous,
        resilience_failures: failures,
        resilience_samples: samples,
        f_resilient: failures == 0,
    })
}
