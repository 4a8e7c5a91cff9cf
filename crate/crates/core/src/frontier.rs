//! The open set: a capacity-bounded priority structure over unexpanded
//! node ids.
//!
//! Decay makes priorities a function of the current round, so the whole
//! frontier is re-keyed on every pop and prune instead of maintaining a
//! keyed heap. The capacity bound (default 500) keeps the rescan cheap.

use std::collections::HashSet;

use crate::error::CoreError;
use crate::scoring::{adjusted_score, depth_bonus, DecayParams};
use crate::types::{NodeId, Round};

pub const DEFAULT_CAPACITY: usize = 500;

/// Everything needed to re-key an entry at a given round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityParams {
    pub decay: DecayParams,
    /// Experimental depth-proportional bonus; 0 outside ablations.
    pub depth_bonus: f64,
}

impl PriorityParams {
    pub fn new(decay: DecayParams) -> Self {
        PriorityParams { decay, depth_bonus: 0.0 }
    }
}

/// A candidate for expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierEntry {
    pub node_id: NodeId,
    /// h(.) value; the root carries `f64::INFINITY` as a sentinel that
    /// outranks every finite score without entering decay arithmetic.
    pub model_score: f64,
    pub discovery_time: Round,
    pub depth: u32,
}

impl FrontierEntry {
    fn priority(&self, now: Round, params: &PriorityParams) -> f64 {
        if self.model_score == f64::INFINITY {
            return f64::INFINITY;
        }
        adjusted_score(self.model_score, self.discovery_time, now, &params.decay)
            + depth_bonus(self.depth, params.depth_bonus)
    }
}

/// Capacity-bounded max-priority set over unexpanded nodes.
///
/// Capacity may be exceeded transiently between pushes; [`Frontier::prune`]
/// restores the bound at round end. Pruned nodes lose candidacy only —
/// their history stays in the arena.
#[derive(Debug, Clone)]
pub struct Frontier {
    entries: Vec<FrontierEntry>,
    members: HashSet<NodeId>,
    capacity: usize,
}

impl Frontier {
    pub fn new(capacity: usize) -> Self {
        Frontier {
            entries: Vec::new(),
            members: HashSet::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contains(&self, node_id: NodeId) -> bool {
        self.members.contains(&node_id)
    }

    pub fn push(&mut self, entry: FrontierEntry) -> Result<(), CoreError> {
        if !self.members.insert(entry.node_id) {
            return Err(CoreError::DuplicateEntry(entry.node_id));
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Removes and returns the `min(g, len)` entries with the highest
    /// adjusted scores at round `now`, best first.
    ///
    /// Ties break toward the newer discovery time, then the lower node id.
    /// An empty frontier yields an empty list (search exhaustion).
    pub fn pop_top_g(
        &mut self,
        now: Round,
        g: usize,
        params: &PriorityParams,
    ) -> Vec<NodeId> {
        debug_assert!(g >= 1, "pop_top_g called with g = 0");
        let take = g.min(self.entries.len());
        if take == 0 {
            return Vec::new();
        }
        let order = self.ranked_indices(now, params);
        let chosen: HashSet<usize> = order[..take].iter().copied().collect();
        let ids: Vec<NodeId> = order[..take]
            .iter()
            .map(|&i| self.entries[i].node_id)
            .collect();
        self.discard_indices(&chosen);
        ids
    }

    /// Drops the lowest-priority entries until the capacity bound holds
    /// again; returns how many were removed.
    pub fn prune(&mut self, now: Round, params: &PriorityParams) -> usize {
        if self.entries.len() <= self.capacity {
            return 0;
        }
        let order = self.ranked_indices(now, params);
        let evicted: HashSet<usize> = order[self.capacity..].iter().copied().collect();
        let removed = evicted.len();
        self.discard_indices(&evicted);
        removed
    }

    /// Entry indices sorted best-first by (adjusted score, newer time,
    /// lower node id).
    fn ranked_indices(&self, now: Round, params: &PriorityParams) -> Vec<usize> {
        let mut keyed: Vec<(f64, Round, NodeId, usize)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.priority(now, params), e.discovery_time, e.node_id, i))
            .collect();
        keyed.sort_unstable_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| b.1.cmp(&a.1))
                .then_with(|| a.2.cmp(&b.2))
        });
        keyed.into_iter().map(|(_, _, _, i)| i).collect()
    }

    fn discard_indices(&mut self, indices: &HashSet<usize>) {
        let mut i = 0;
        self.entries.retain(|entry| {
            let keep = !indices.contains(&i);
            if !keep {
                self.members.remove(&entry.node_id);
            }
            i += 1;
            keep
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(node_id: NodeId, score: f64, time: Round) -> FrontierEntry {
        FrontierEntry {
            node_id,
            model_score: score,
            discovery_time: time,
            depth: 1,
        }
    }

    fn no_decay() -> PriorityParams {
        PriorityParams::new(DecayParams::disabled())
    }

    #[test]
    fn push_grows_the_frontier() {
        let mut frontier = Frontier::new(DEFAULT_CAPACITY);
        frontier.push(entry(1, -1.0, 0)).unwrap();
        assert_eq!(frontier.len(), 1);
        frontier.push(entry(2, -2.0, 0)).unwrap();
        frontier.push(entry(3, -3.0, 0)).unwrap();
        assert_eq!(frontier.len(), 3);
        for id in [1, 2, 3] {
            assert!(frontier.contains(id));
        }
    }

    #[test]
    fn push_rejects_duplicate_ids() {
        let mut frontier = Frontier::new(DEFAULT_CAPACITY);
        frontier.push(entry(1, -1.0, 0)).unwrap();
        assert!(matches!(
            frontier.push(entry(1, -5.0, 2)),
            Err(CoreError::DuplicateEntry(1))
        ));
    }

    #[test]
    fn pop_top_g_returns_best_scores_in_order() {
        let mut frontier = Frontier::new(DEFAULT_CAPACITY);
        frontier.push(entry(10, -1.0, 0)).unwrap(); // A
        frontier.push(entry(11, -2.0, 0)).unwrap(); // B
        frontier.push(entry(12, -3.0, 0)).unwrap(); // C
        let popped = frontier.pop_top_g(1, 2, &no_decay());
        assert_eq!(popped, vec![10, 11]);
        assert_eq!(frontier.len(), 1);
        assert!(!frontier.contains(10));
    }

    #[test]
    fn pop_top_g_caps_at_the_frontier_size() {
        let mut frontier = Frontier::new(DEFAULT_CAPACITY);
        frontier.push(entry(1, -1.0, 0)).unwrap();
        frontier.push(entry(2, -2.0, 0)).unwrap();
        let popped = frontier.pop_top_g(0, 5, &no_decay());
        assert_eq!(popped.len(), 2);
        assert!(frontier.is_empty());
        assert!(frontier.pop_top_g(1, 3, &no_decay()).is_empty());
    }

    #[test]
    fn decay_reorders_equal_scores_toward_newer_nodes() {
        // A: -2 at t=0, B: -2 at t=3; at now=4 with kappa=beta=1 the
        // adjusted scores are -6 and -3, so B pops first.
        let mut frontier = Frontier::new(DEFAULT_CAPACITY);
        frontier.push(entry(1, -2.0, 0)).unwrap();
        frontier.push(entry(2, -2.0, 3)).unwrap();
        let params = PriorityParams::new(DecayParams { kappa: 1.0, beta: 1.0 });
        let popped = frontier.pop_top_g(4, 2, &params);
        assert_eq!(popped, vec![2, 1]);
    }

    #[test]
    fn sentinel_outranks_every_finite_score() {
        let mut frontier = Frontier::new(DEFAULT_CAPACITY);
        frontier.push(entry(5, -0.001, 9)).unwrap();
        frontier
            .push(FrontierEntry {
                node_id: 0,
                model_score: f64::INFINITY,
                discovery_time: -1,
                depth: 0,
            })
            .unwrap();
        let params = PriorityParams::new(DecayParams::new(0.2));
        assert_eq!(frontier.pop_top_g(50, 1, &params), vec![0]);
    }

    #[test]
    fn prune_is_a_no_op_under_capacity() {
        let mut frontier = Frontier::new(DEFAULT_CAPACITY);
        for i in 0..3 {
            frontier.push(entry(i, -(i as f64), 0)).unwrap();
        }
        assert_eq!(frontier.prune(1, &no_decay()), 0);
        assert_eq!(frontier.len(), 3);
    }

    #[test]
    fn prune_keeps_the_best_entries() {
        let mut frontier = Frontier::new(2);
        frontier.push(entry(1, -1.0, 0)).unwrap();
        frontier.push(entry(2, -2.0, 0)).unwrap();
        frontier.push(entry(3, -3.0, 0)).unwrap();
        assert_eq!(frontier.prune(1, &no_decay()), 1);
        assert_eq!(frontier.len(), 2);
        assert!(frontier.contains(1));
        assert!(frontier.contains(2));
        assert!(!frontier.contains(3));
    }

    #[test]
    fn pruned_ids_may_be_pushed_again() {
        let mut frontier = Frontier::new(1);
        frontier.push(entry(1, -1.0, 0)).unwrap();
        frontier.push(entry(2, -5.0, 0)).unwrap();
        frontier.prune(1, &no_decay());
        assert!(!frontier.contains(2));
        frontier.push(entry(2, -5.0, 2)).unwrap();
        assert!(frontier.contains(2));
    }

    #[test]
    fn tie_break_prefers_newer_then_lower_id() {
        let mut frontier = Frontier::new(DEFAULT_CAPACITY);
        frontier.push(entry(4, -1.0, 2)).unwrap();
        frontier.push(entry(3, -1.0, 2)).unwrap();
        frontier.push(entry(9, -1.0, 5)).unwrap();
        let popped = frontier.pop_top_g(6, 3, &no_decay());
        assert_eq!(popped, vec![9, 3, 4]);
    }
}
