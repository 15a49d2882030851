//! Hyper-path-based random walks.
//!
//! The path order of a candidate `v` given a path `P` is the largest `k` such
//! that `v` and the last `k` (pairwise distinct) nodes of `P` lie together in
//! one hyperedge. Each step moves to a neighbor of the current node with
//! unnormalized weight `exp(alpha * xi[type(v)] * (order(v) - 1))`, so a large
//! `alpha` drives the walk toward hyper-paths and `alpha = 0` gives a plain
//! uniform neighbor walk.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeId};
use crate::indecomposability::FactorEstimate;
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    /// Number of nodes per walk.
    pub walk_length: usize,
    pub alpha: f64,
    /// Upper bound on the candidate set considered at each step.
    pub presample_cap: Option<usize>,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 80,
            alpha: 100.0,
            presample_cap: None,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node < 1 {
            return Err(Error::Config("walks_per_node must be >= 1".into()));
        }
        if self.walk_length < 2 {
            return Err(Error::Config("walk_length must be >= 2".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config("alpha must be finite and >= 0".into()));
        }
        if matches!(self.presample_cap, Some(c) if c < 2) {
            return Err(Error::Config("presample_cap must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    pub nodes: Vec<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Walk>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    /// Total number of node positions across all walks.
    pub fn total_positions(&self) -> usize {
        self.walks.iter().map(|w| w.nodes.len()).sum()
    }

    /// One walk per line, node labels separated by single spaces.
    pub fn write<W: Write>(&self, g: &Hypergraph, mut w: W) -> std::io::Result<()> {
        for walk in &self.walks {
            let labels: Vec<&str> = walk.nodes.iter().map(|&v| g.label(v)).collect();
            writeln!(w, "{}", labels.join(" "))?;
        }
        Ok(())
    }
}

/// Trailing run of pairwise distinct nodes of `path`, most recent first,
/// truncated to `limit` nodes.
fn distinct_suffix(path: &[NodeId], limit: usize, out: &mut Vec<NodeId>) {
    out.clear();
    for &v in path.iter().rev() {
        if out.len() == limit || out.contains(&v) {
            break;
        }
        out.push(v);
    }
}

/// Path order of `v` given `path`, computed by subset queries from the
/// longest admissible suffix downward. Returns 0 when `v` shares no edge
/// with the last node of `path` or equals it.
pub fn path_order(g: &Hypergraph, path: &[NodeId], v: NodeId) -> Result<usize> {
    g.check_node(v)?;
    let Some(&last) = path.last() else {
        return Err(Error::Config("path_order needs a non-empty path".into()));
    };
    for &u in path {
        g.check_node(u)?;
    }
    if v == last {
        return Ok(0);
    }
    let mut suffix = Vec::new();
    distinct_suffix(path, g.max_edge_size().saturating_sub(1), &mut suffix);
    // v must differ from every suffix node used
    let m = suffix.iter().position(|&u| u == v).unwrap_or(suffix.len());
    let mut query = Vec::with_capacity(m + 1);
    for k in (1..=m).rev() {
        query.clear();
        query.extend_from_slice(&suffix[..k]);
        query.push(v);
        if !g.edges_containing_all(&query)?.is_empty() {
            return Ok(k);
        }
    }
    Ok(0)
}

/// Reusable buffers for walk stepping.
pub(crate) struct StepScratch {
    order: Vec<u32>,
    touched: Vec<NodeId>,
    suffix: Vec<NodeId>,
    candidates: Vec<NodeId>,
    weights: Vec<f64>,
}

impl StepScratch {
    pub(crate) fn new(g: &Hypergraph) -> Self {
        StepScratch {
            order: vec![0; g.node_count()],
            touched: Vec::new(),
            suffix: Vec::new(),
            candidates: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Path orders of every neighbor of the last node, written into the
    /// dense `order` table. Each edge through the last node is scanned once:
    /// its order contribution is the number of leading suffix nodes it
    /// contains, capped for nodes that themselves occur in the suffix.
    fn compute_orders(&mut self, g: &Hypergraph, path: &[NodeId]) {
        for v in self.touched.drain(..) {
            self.order[v.index()] = 0;
        }
        distinct_suffix(path, g.max_edge_size().saturating_sub(1), &mut self.suffix);
        let last = self.suffix[0];
        for &ei in g.incidence(last) {
            let e = g.edge(ei as usize);
            let k_e = self.suffix.iter().take_while(|&&s| e.contains(s)).count();
            for &u in e.nodes() {
                if u == last {
                    continue;
                }
                let cap = self
                    .suffix
                    .iter()
                    .position(|&s| s == u)
                    .unwrap_or(self.suffix.len());
                let k = k_e.min(cap) as u32;
                let slot = &mut self.order[u.index()];
                if *slot == 0 {
                    self.touched.push(u);
                }
                if k > *slot {
                    *slot = k;
                }
            }
        }
    }

    /// Fills `candidates` and unnormalized, max-shifted `weights`.
    fn weigh<R: Rng>(
        &mut self,
        g: &Hypergraph,
        factors: &FactorEstimate,
        path: &[NodeId],
        config: &WalkConfig,
        rng: &mut R,
    ) -> Result<()> {
        let last = *path.last().expect("non-empty path");
        let neighbors = g.neighbors_of(last);
        if neighbors.is_empty() {
            return Err(Error::DeadEnd(last.index()));
        }
        self.candidates.clear();
        match config.presample_cap {
            Some(cap) if neighbors.len() > cap => {
                let mut idx = rand::seq::index::sample(rng, neighbors.len(), cap).into_vec();
                idx.sort_unstable();
                self.candidates.extend(idx.into_iter().map(|i| neighbors[i]));
            }
            _ => self.candidates.extend_from_slice(neighbors),
        }
        self.weights.clear();
        if config.alpha == 0.0 {
            self.weights.resize(self.candidates.len(), 1.0);
            return Ok(());
        }
        self.compute_orders(g, path);
        let mut max = f64::NEG_INFINITY;
        for &v in &self.candidates {
            let po = self.order[v.index()] as f64;
            debug_assert!(po >= 1.0);
            let x = config.alpha * factors.xi(g.node_type(v)) * (po - 1.0);
            max = max.max(x);
            self.weights.push(x);
        }
        for w in &mut self.weights {
            *w = (*w - max).exp();
        }
        Ok(())
    }

    fn sample_next<R: Rng>(
        &mut self,
        g: &Hypergraph,
        factors: &FactorEstimate,
        path: &[NodeId],
        config: &WalkConfig,
        rng: &mut R,
    ) -> Result<NodeId> {
        self.weigh(g, factors, path, config, rng)?;
        if config.alpha == 0.0 {
            return Ok(*self.candidates.choose(rng).expect("non-empty"));
        }
        let total: f64 = self.weights.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        for (i, &w) in self.weights.iter().enumerate() {
            if r < w {
                return Ok(self.candidates[i]);
            }
            r -= w;
        }
        // rounding fallthrough: last candidate with positive weight
        let i = self.weights.iter().rposition(|&w| w > 0.0).expect("max weight is 1");
        Ok(self.candidates[i])
    }
}

/// Normalized next-node distribution given `path`, as `(node, probability)`
/// pairs in ascending node order. With a presample cap smaller than the
/// neighborhood, `rng` picks the candidate subset.
pub fn transition_distribution<R: Rng>(
    g: &Hypergraph,
    factors: &FactorEstimate,
    path: &[NodeId],
    config: &WalkConfig,
    rng: &mut R,
) -> Result<Vec<(NodeId, f64)>> {
    if path.is_empty() {
        return Err(Error::Config("transition needs a non-empty path".into()));
    }
    for &v in path {
        g.check_node(v)?;
    }
    let mut scratch = StepScratch::new(g);
    scratch.weigh(g, factors, path, config, rng)?;
    let total: f64 = scratch.weights.iter().sum();
    Ok(scratch
        .candidates
        .iter()
        .zip(&scratch.weights)
        .map(|(&v, &w)| (v, w / total))
        .collect())
}

pub(crate) fn walk_from<R: Rng>(
    g: &Hypergraph,
    factors: &FactorEstimate,
    start: NodeId,
    config: &WalkConfig,
    rng: &mut R,
    scratch: &mut StepScratch,
) -> Result<Walk> {
    g.check_node(start)?;
    if g.neighbors_of(start).is_empty() {
        return Err(Error::IsolatedStart(start.index()));
    }
    let mut nodes = Vec::with_capacity(config.walk_length);
    nodes.push(start);
    while nodes.len() < config.walk_length {
        match scratch.sample_next(g, factors, &nodes, config, rng) {
            Ok(v) => nodes.push(v),
            Err(Error::DeadEnd(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(Walk { nodes })
}

/// One walk of up to `walk_length` nodes from `start`.
pub fn generate_walk<R: Rng>(
    g: &Hypergraph,
    factors: &FactorEstimate,
    start: NodeId,
    config: &WalkConfig,
    rng: &mut R,
) -> Result<Walk> {
    config.validate()?;
    walk_from(g, factors, start, config, rng, &mut StepScratch::new(g))
}

/// `walks_per_node` rounds over every non-isolated node, node order shuffled
/// per round. Each walk has its own RNG stream derived from
/// `(seed, round, start)`, so the corpus does not depend on thread count.
pub fn generate_corpus(g: &Hypergraph, factors: &FactorEstimate, config: &WalkConfig) -> Result<WalkCorpus> {
    config.validate()?;
    let starts: Vec<NodeId> = (0..g.node_count())
        .map(NodeId::from)
        .filter(|&v| !g.neighbors_of(v).is_empty())
        .collect();
    let mut walks = Vec::with_capacity(starts.len() * config.walks_per_node);
    for round in 0..config.walks_per_node as u64 {
        let mut order = starts.clone();
        order.shuffle(&mut seed::rng(seed::derive(config.seed, &[round])));
        let batch: Vec<Walk> = order
            .par_iter()
            .map_init(
                || StepScratch::new(g),
                |scratch, &start| {
                    let mut rng = seed::rng(seed::derive(config.seed, &[round, start.0 as u64]));
                    walk_from(g, factors, start, config, &mut rng, scratch)
                },
            )
            .collect::<Result<_>>()?;
        walks.extend(batch.into_iter().filter(|w| w.nodes.len() >= 2));
    }
    Ok(WalkCorpus { walks })
}
