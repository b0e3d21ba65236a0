//! Directed follower graphs and switching schedules.
//!
//! Agents are indexed from 0 in code; agent 0 is the leader. An entry
//! `a[(i, j)] > 0` means agent `i` listens to agent `j` (edge `j → i`).

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const LEADER: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph<T: Real> {
    adjacency: Matrix<T>,
}

impl<T: Real> DirectedGraph<T> {
    /// Validates and wraps an adjacency matrix.
    pub fn new(adjacency: Matrix<T>) -> Result<Self> {
        let n = adjacency.rows();
        if !adjacency.is_square() {
            return invalid(format!(
                "adjacency must be square, got {}x{}",
                adjacency.rows(),
                adjacency.cols()
            ));
        }
        if n < 2 {
            return invalid(format!("a network needs at least 2 agents, got {n}"));
        }
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[(i, j)];
                if !a.is_finite() || a < T::zero() {
                    return invalid(format!("weight a[{i}][{j}] = {a} must be finite and nonnegative"));
                }
            }
            if adjacency[(i, i)] != T::zero() {
                return invalid(format!("self-loop on agent {i}"));
            }
        }
        if adjacency.row(LEADER).iter().any(|&a| a != T::zero()) {
            return invalid("the leader (agent 0) must not receive from anyone");
        }
        Ok(Self { adjacency })
    }

    pub fn from_f64_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_f64_rows(rows)?)
    }

    /// `1 → 2 → … → N`: every follower listens to its predecessor.
    pub fn chain(num_agents: usize) -> Result<Self> {
        if num_agents < 2 {
            return invalid(format!("chain needs at least 2 agents, got {num_agents}"));
        }
        let mut a = Matrix::zeros(num_agents, num_agents);
        for i in 1..num_agents {
            a[(i, i - 1)] = T::one();
        }
        Self::new(a)
    }

    /// Every follower listens to the leader only.
    pub fn star(num_agents: usize) -> Result<Self> {
        if num_agents < 2 {
            return invalid(format!("star needs at least 2 agents, got {num_agents}"));
        }
        let mut a = Matrix::zeros(num_agents, num_agents);
        for i in 1..num_agents {
            a[(i, LEADER)] = T::one();
        }
        Self::new(a)
    }

    /// Five agents: chain `1 → 2 → 3` feeding the cycle `3 → 4 → 5 → 3`
    /// (1-based labels).
    pub fn rossler_loop() -> Self {
        let mut a = Matrix::zeros(5, 5);
        a[(1, 0)] = T::one();
        a[(2, 1)] = T::one();
        a[(3, 2)] = T::one();
        a[(4, 3)] = T::one();
        a[(2, 4)] = T::one();
        Self::new(a).expect("valid by construction")
    }

    pub fn num_agents(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn adjacency(&self) -> &Matrix<T> {
        &self.adjacency
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.adjacency[(i, j)]
    }

    /// In-degree `d_i = Σ_j a_ij`.
    pub fn in_degree(&self, i: usize) -> T {
        self.adjacency.row(i).iter().copied().sum()
    }

    /// Agents `j` with `a_ij > 0`.
    pub fn neighbors(&self, i: usize) -> Result<BTreeSet<usize>> {
        if i >= self.num_agents() {
            return invalid(format!("agent {i} out of range 0..{}", self.num_agents()));
        }
        Ok(self.neighbor_iter(i).map(|(j, _)| j).collect())
    }

    pub(crate) fn neighbor_iter(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.adjacency
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > T::zero())
            .map(|(j, &a)| (j, a))
    }

    /// True iff every follower is reachable from the leader along edges.
    pub fn has_spanning_tree_rooted_at_leader(&self) -> bool {
        let n = self.num_agents();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([LEADER]);
        seen[LEADER] = true;
        while let Some(j) = queue.pop_front() {
            for i in 0..n {
                if !seen[i] && self.adjacency[(i, j)] > T::zero() {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Piecewise-constant sequence of topologies over `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct SwitchingSchedule<T: Real> {
    graphs: Vec<DirectedGraph<T>>,
    /// `(start time, graph index)`, strictly increasing starts, first at 0.
    segments: Vec<(T, usize)>,
    average_dwell: T,
    horizon: T,
}

impl<T: Real> SwitchingSchedule<T> {
    /// Draws segment lengths from `Exp(mean = average_dwell)` and graph
    /// indices uniformly. Deterministic for a given seed.
    pub fn sample(graphs: Vec<DirectedGraph<T>>, average_dwell: T, horizon: T, seed: u64) -> Result<Self> {
        if graphs.is_empty() {
            return invalid("switching schedule needs at least one graph");
        }
        if !(average_dwell > T::zero()) || !average_dwell.is_finite() {
            return invalid(format!("average dwell must be positive, got {average_dwell}"));
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        let n = graphs[0].num_agents();
        for (k, g) in graphs.iter().enumerate() {
            if g.num_agents() != n {
                return invalid(format!("graph {k} has {} agents, graph 0 has {n}", g.num_agents()));
            }
            if !g.has_spanning_tree_rooted_at_leader() {
                return invalid(format!("graph {k} has no spanning tree rooted at the leader"));
            }
        }

        if graphs.len() == 1 {
            return Ok(Self {
                graphs,
                segments: vec![(T::zero(), 0)],
                average_dwell,
                horizon,
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exp = Exp::new(1.0 / average_dwell.as_f64())
            .map_err(|e| crate::Error::InvalidArgument(format!("dwell distribution: {e}")))?;
        let mut segments = Vec::new();
        let mut t = 0.0f64;
        let h = horizon.as_f64();
        while t < h {
            let idx = rng.random_range(0..graphs.len());
            segments.push((T::lit(t), idx));
            t += exp.sample(&mut rng);
        }
        Ok(Self {
            graphs,
            segments,
            average_dwell,
            horizon,
        })
    }

    pub fn graphs(&self) -> &[DirectedGraph<T>] {
        &self.graphs
    }

    pub fn segments(&self) -> &[(T, usize)] {
        &self.segments
    }

    pub fn average_dwell(&self) -> T {
        self.average_dwell
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn num_agents(&self) -> usize {
        self.graphs[0].num_agents()
    }

    /// Segment `k` as `[start, end)`; the last one ends at the horizon.
    pub fn segment_bounds(&self, k: usize) -> (T, T) {
        let start = self.segments[k].0;
        let end = self.segments.get(k + 1).map_or(self.horizon, |&(s, _)| s);
        (start, end)
    }

    /// Index of the graph active at time `t` (clamped to the schedule).
    pub fn graph_index_at(&self, t: T) -> usize {
        let k = self.segments.partition_point(|&(s, _)| s <= t);
        self.segments[k.saturating_sub(1)].1
    }

    pub fn graph_at(&self, t: T) -> &DirectedGraph<T> {
        &self.graphs[self.graph_index_at(t)]
    }

    /// Mean realised segment length over the horizon.
    pub fn mean_dwell(&self) -> T {
        self.horizon / T::from_usize_lossy(self.segments.len())
    }
}
