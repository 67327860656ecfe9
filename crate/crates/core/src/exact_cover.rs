//! Exact cover by backtracking with the minimum-remaining-values rule.
//!
//! Items are `0..items`; each option is a list of items. A solution is a set
//! of options covering every required item exactly once. The item branched
//! on is the uncovered item with the fewest live options, ties broken by the
//! smallest item id, and options are tried in the order given. That makes
//! every search deterministic for a fixed input.

use std::cell::Cell;
use std::ops::ControlFlow;

/// A cap on node expansions (one per option tried). Shared by reference so
/// that nested searches charge the same counter.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    used: Cell<u64>,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: Cell::new(0) }
    }

    pub fn unlimited() -> Self {
        Self::new(u64::MAX)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used())
    }

    pub fn is_exhausted(&self) -> bool {
        self.used() >= self.limit
    }

    /// Charges one expansion; false once the limit is reached.
    pub fn spend(&self) -> bool {
        let u = self.used.get();
        if u >= self.limit {
            return false;
        }
        self.used.set(u + 1);
        true
    }

    /// A fresh budget for at most `limit` of what remains here. Charge it
    /// back with [`Budget::absorb`].
    pub fn slice(&self, limit: u64) -> Budget {
        Budget::new(limit.min(self.remaining()))
    }

    pub fn absorb(&self, child: &Budget) {
        self.used.set(self.used().saturating_add(child.used()));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchEnd {
    /// The whole tree was explored.
    Exhausted,
    /// The visitor asked to stop.
    Stopped,
    /// The budget ran out first.
    BudgetExceeded,
}

#[derive(Debug, Clone)]
pub struct ExactCover {
    options: Vec<Vec<usize>>,
    item_options: Vec<Vec<usize>>,
    covered: Vec<bool>,
    blocked: Vec<u32>,
    live: Vec<u32>,
    remaining: usize,
}

enum Flow {
    Continue,
    Stop,
    Budget,
}

impl ExactCover {
    pub fn new(items: usize, options: Vec<Vec<usize>>) -> Self {
        let mut item_options = vec![Vec::new(); items];
        for (o, opt) in options.iter().enumerate() {
            for &i in opt {
                item_options[i].push(o);
            }
        }
        let live = item_options.iter().map(|v| v.len() as u32).collect();
        ExactCover {
            blocked: vec![0; options.len()],
            options,
            item_options,
            covered: vec![false; items],
            live,
            remaining: items,
        }
    }

    pub fn option(&self, o: usize) -> &[usize] {
        &self.options[o]
    }

    pub fn option_count(&self) -> usize {
        self.options.len()
    }

    /// Removes `item` from the set to be covered and kills every option
    /// touching it.
    pub fn exclude_item(&mut self, item: usize) {
        if !self.covered[item] {
            self.cover_item(item);
        }
    }

    fn cover_item(&mut self, j: usize) {
        self.covered[j] = true;
        self.remaining -= 1;
        for k in 0..self.item_options[j].len() {
            let p = self.item_options[j][k];
            self.blocked[p] += 1;
            if self.blocked[p] == 1 {
                for &i in &self.options[p] {
                    self.live[i] -= 1;
                }
            }
        }
    }

    fn uncover_item(&mut self, j: usize) {
        for k in (0..self.item_options[j].len()).rev() {
            let p = self.item_options[j][k];
            if self.blocked[p] == 1 {
                for &i in &self.options[p] {
                    self.live[i] += 1;
                }
            }
            self.blocked[p] -= 1;
        }
        self.covered[j] = false;
        self.remaining += 1;
    }

    fn select(&mut self, o: usize) {
        for k in 0..self.options[o].len() {
            let j = self.options[o][k];
            self.cover_item(j);
        }
    }

    fn unselect(&mut self, o: usize) {
        for k in (0..self.options[o].len()).rev() {
            let j = self.options[o][k];
            self.uncover_item(j);
        }
    }

    fn choose_item(&self) -> Option<usize> {
        let mut best: Option<(u32, usize)> = None;
        for (i, &c) in self.covered.iter().enumerate() {
            if c {
                continue;
            }
            let l = self.live[i];
            if best.is_none_or(|(b, _)| l < b) {
                best = Some((l, i));
                if l == 0 {
                    break;
                }
            }
        }
        best.map(|(_, i)| i)
    }

    /// Visits solutions in search order until the visitor breaks, the tree
    /// is exhausted or the budget runs out. The visitor sees option ids.
    pub fn search<F>(&mut self, budget: &Budget, mut visit: F) -> SearchEnd
    where
        F: FnMut(&[usize]) -> ControlFlow<()>,
    {
        let mut sol = Vec::new();
        match self.rec(&mut sol, budget, &mut visit) {
            Flow::Continue => SearchEnd::Exhausted,
            Flow::Stop => SearchEnd::Stopped,
            Flow::Budget => SearchEnd::BudgetExceeded,
        }
    }

    fn rec<F>(&mut self, sol: &mut Vec<usize>, budget: &Budget, visit: &mut F) -> Flow
    where
        F: FnMut(&[usize]) -> ControlFlow<()>,
    {
        if self.remaining == 0 {
            return match visit(sol) {
                ControlFlow::Continue(()) => Flow::Continue,
                ControlFlow::Break(()) => Flow::Stop,
            };
        }
        let Some(item) = self.choose_item() else {
            return Flow::Continue;
        };
        if self.live[item] == 0 {
            return Flow::Continue;
        }
        for k in 0..self.item_options[item].len() {
            let o = self.item_options[item][k];
            if self.blocked[o] != 0 {
                continue;
            }
            if !budget.spend() {
                return Flow::Budget;
            }
            self.select(o);
            sol.push(o);
            let r = self.rec(sol, budget, visit);
            sol.pop();
            self.unselect(o);
            if !matches!(r, Flow::Continue) {
                return r;
            }
        }
        Flow::Continue
    }

    /// First solution, if any, with how the search ended.
    pub fn first(&mut self, budget: &Budget) -> (Option<Vec<usize>>, SearchEnd) {
        let mut found = None;
        let end = self.search(budget, |sol| {
            found = Some(sol.to_vec());
            ControlFlow::Break(())
        });
        (found, end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knuth_example_has_unique_solution() {
        // Knuth's 7-item dancing-links example.
        let options = vec![
            vec![2, 4, 5],
            vec![0, 3, 6],
            vec![1, 2, 5],
            vec![0, 3],
            vec![1, 6],
            vec![3, 4, 6],
        ];
        let mut ec = ExactCover::new(7, options);
        let mut sols = Vec::new();
        let end = ec.search(&Budget::unlimited(), |s| {
            let mut s = s.to_vec();
            s.sort_unstable();
            sols.push(s);
            ControlFlow::Continue(())
        });
        assert_eq!(end, SearchEnd::Exhausted);
        assert_eq!(sols, vec![vec![0, 3, 4]]);
    }

    #[test]
    fn excluded_items_need_no_cover() {
        let mut ec = ExactCover::new(3, vec![vec![0, 1], vec![2], vec![1, 2]]);
        ec.exclude_item(0);
        let (sol, _) = ec.first(&Budget::unlimited());
        assert_eq!(sol, Some(vec![2]));
    }

    #[test]
    fn budget_stops_search() {
        let options: Vec<Vec<usize>> = (0..10).map(|i| vec![i]).collect();
        let mut ec = ExactCover::new(10, options);
        let b = Budget::new(3);
        let (sol, end) = ec.first(&b);
        assert!(sol.is_none());
        assert_eq!(end, SearchEnd::BudgetExceeded);
        assert_eq!(b.used(), 3);
    }

    #[test]
    fn state_restored_after_search() {
        let mut ec = ExactCover::new(4, vec![vec![0, 1], vec![2, 3], vec![0, 2], vec![1, 3]]);
        let before = ec.clone();
        let mut count = 0;
        ec.search(&Budget::unlimited(), |_| {
            count += 1;
            ControlFlow::Continue(())
        });
        assert_eq!(count, 2);
        assert_eq!(ec.live, before.live);
        assert_eq!(ec.blocked, before.blocked);
        assert_eq!(ec.remaining, before.remaining);
    }
}
