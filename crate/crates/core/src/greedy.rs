//! Greedy maximization of monotone set functions under a cardinality
//! constraint, in plain and lazy (CELF) form.
//!
//! Both variants break equal gains toward the smallest node id, so on a
//! submodular objective they select identical sets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Incremental marginal-gain oracle over nodes `0..n`.
pub trait MarginalGain {
    fn node_count(&self) -> usize;
    /// Gain of adding `u` to the committed set.
    fn gain(&mut self, u: usize) -> f64;
    fn commit(&mut self, u: usize);
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRun {
    /// In selection order.
    pub seeds: Vec<usize>,
    pub evaluations: usize,
}

/// Evaluates every node each round (`k·n` evaluations); already-selected
/// nodes are evaluated but never chosen.
pub fn plain_greedy<O: MarginalGain>(oracle: &mut O, k: usize) -> GreedyRun {
    let n = oracle.node_count();
    let k = k.min(n);
    let mut chosen = vec![false; n];
    let mut seeds = Vec::with_capacity(k);
    let mut evaluations = 0;
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for u in 0..n {
            let g = oracle.gain(u);
            evaluations += 1;
            if chosen[u] {
                continue;
            }
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((u, g));
            }
        }
        let (u, _) = best.expect("k <= n leaves a candidate");
        chosen[u] = true;
        oracle.commit(u);
        seeds.push(u);
    }
    GreedyRun { seeds, evaluations }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    gain: f64,
    node: usize,
    round: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Max-heap on gain, then smallest node id.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// CELF lazy greedy: stale gains are upper bounds under submodularity, so
/// the top of the heap only needs re-evaluation when it is stale.
pub fn lazy_greedy<O: MarginalGain>(oracle: &mut O, k: usize) -> GreedyRun {
    let n = oracle.node_count();
    let k = k.min(n);
    let mut heap = BinaryHeap::with_capacity(n);
    let mut evaluations = 0;
    for u in 0..n {
        let gain = oracle.gain(u);
        evaluations += 1;
        heap.push(Entry {
            gain,
            node: u,
            round: 0,
        });
    }
    let mut seeds = Vec::with_capacity(k);
    while seeds.len() < k {
        let top = heap.pop().expect("heap holds every unselected node");
        let round = seeds.len();
        if top.round == round {
            oracle.commit(top.node);
            seeds.push(top.node);
        } else {
            let gain = oracle.gain(top.node);
            evaluations += 1;
            heap.push(Entry {
                gain,
                node: top.node,
                round,
            });
        }
    }
    GreedyRun { seeds, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Weighted coverage: node u covers `sets[u]`.
    struct Coverage {
        sets: Vec<Vec<usize>>,
        covered: Vec<bool>,
    }

    impl MarginalGain for Coverage {
        fn node_count(&self) -> usize {
            self.sets.len()
        }
        fn gain(&mut self, u: usize) -> f64 {
            self.sets[u].iter().filter(|&&e| !self.covered[e]).count() as f64
        }
        fn commit(&mut self, u: usize) {
            for &e in &self.sets[u] {
                self.covered[e] = true;
            }
        }
    }

    fn cov(sets: Vec<Vec<usize>>) -> Coverage {
        Coverage {
            sets,
            covered: vec![false; 16],
        }
    }

    #[test]
    fn lazy_matches_plain_on_coverage() {
        let sets = vec![
            vec![0, 1, 2],
            vec![2, 3],
            vec![0, 1, 2, 3],
            vec![4, 5],
            vec![5, 6, 7],
            vec![4],
        ];
        let a = plain_greedy(&mut cov(sets.clone()), 3);
        let b = lazy_greedy(&mut cov(sets), 3);
        assert_eq!(a.seeds, vec![2, 4, 3]);
        assert_eq!(a.seeds, b.seeds);
        assert_eq!(a.evaluations, 18);
        assert!(b.evaluations <= a.evaluations);
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let sets = vec![vec![0], vec![1], vec![2]];
        assert_eq!(lazy_greedy(&mut cov(sets.clone()), 2).seeds, vec![0, 1]);
        assert_eq!(plain_greedy(&mut cov(sets), 2).seeds, vec![0, 1]);
    }

    #[test]
    fn k_larger_than_n_is_clamped() {
        let sets = vec![vec![0], vec![]];
        assert_eq!(lazy_greedy(&mut cov(sets.clone()), 5).seeds, vec![0, 1]);
        assert_eq!(plain_greedy(&mut cov(sets), 5).seeds, vec![0, 1]);
    }
}
