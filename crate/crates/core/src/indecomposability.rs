//! Per-type indecomposable factors.
//!
//! For a node type `t`, the factor compares how often a `(k-1)`-subset of an
//! edge (obtained by dropping one node of type `t`) also occurs inside some
//! other edge, for random edges versus real ones. Values near 1 mean real
//! edges behave like random ones; small values mean subsets of real edges
//! recur far more than chance, i.e. the hyper-network is decomposable.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, NodeId, NodeTypeId};
use crate::seed;

pub const DEFAULT_MULTIPLIER: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct FactorEstimate {
    /// Indexed by [`NodeTypeId`].
    pub xi: Vec<f64>,
    /// `|random edges| / |E|`.
    pub random_multiplier: usize,
    /// Rate of the subset event over random edges.
    pub numerator_rate: Vec<f64>,
    /// Rate of the subset event over real edges.
    pub denominator_rate: Vec<f64>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl FactorEstimate {
    /// All factors equal to 1, the random-graph baseline.
    pub fn neutral(type_count: usize) -> Self {
        FactorEstimate {
            xi: vec![1.0; type_count],
            random_multiplier: 0,
            numerator_rate: vec![0.0; type_count],
            denominator_rate: vec![0.0; type_count],
            seed: 0,
            warnings: Vec::new(),
        }
    }

    #[inline]
    pub fn xi(&self, t: NodeTypeId) -> f64 {
        self.xi[t.index()]
    }
}

/// The subset event for edge `e` and type `t`: some node `v` of type `t` in
/// `e` exists such that `e - {v}` is contained in an edge of `g` other than
/// `e`. `e` need not be an edge of `g`.
pub fn event_b(g: &Hypergraph, e: &[NodeId], t: NodeTypeId) -> Result<bool> {
    for &v in e {
        g.check_node(v)?;
    }
    let mut canon = e.to_vec();
    canon.sort_unstable();
    canon.dedup();
    for (i, &v) in canon.iter().enumerate() {
        if g.node_type(v) != t {
            continue;
        }
        if subset_elsewhere(g, &canon, i) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether `canon` minus its `skip`-th node lies in an edge different from
/// `canon`.
fn subset_elsewhere(g: &Hypergraph, canon: &[NodeId], skip: usize) -> bool {
    let rest: Vec<NodeId> = canon
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, &u)| u)
        .collect();
    if rest.is_empty() {
        return false;
    }
    let hits = g
        .edges_containing_all(&rest)
        .expect("nodes validated by caller");
    hits.into_iter().any(|ei| g.edge(ei).nodes() != canon)
}

/// Event outcome for every type at once; `out[t]` is the event for type `t`.
fn event_b_all_types(g: &Hypergraph, canon: &[NodeId], out: &mut [bool]) {
    out.iter_mut().for_each(|b| *b = false);
    for i in 0..canon.len() {
        let t = g.node_type(canon[i]).index();
        if !out[t] && subset_elsewhere(g, canon, i) {
            out[t] = true;
        }
    }
}

/// Draws `multiplier * |E|` random edges. Each edge takes a type signature
/// drawn from the empirical signature distribution of `g` and fills every
/// slot uniformly from the nodes of that type; draws with a repeated node
/// are rejected and redrawn.
pub fn sample_random_edges(g: &Hypergraph, multiplier: usize, seed: u64) -> Result<Vec<Hyperedge>> {
    if multiplier < 1 {
        return Err(Error::InvalidMultiplier(multiplier));
    }
    let sigs = g.type_signatures();
    for (sig, _) in sigs {
        let mut i = 0;
        while i < sig.len() {
            let t = sig[i];
            let mult = sig[i..].iter().take_while(|&&u| u == t).count();
            let available = g.nodes_of_type(t).len();
            if available < mult {
                return Err(Error::TypeTooSmall {
                    type_name: g.type_name(t).to_string(),
                    available,
                    required: mult,
                });
            }
            i += mult;
        }
    }

    let total = g.edge_count();
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(multiplier * total);
    let mut slots = Vec::with_capacity(g.max_edge_size());
    for _ in 0..multiplier * total {
        // pick a signature with probability proportional to its edge count
        let mut r = rng.gen_range(0..total);
        let sig = &sigs
            .iter()
            .find(|(_, c)| {
                if r < *c {
                    true
                } else {
                    r -= c;
                    false
                }
            })
            .expect("counts sum to |E|")
            .0;
        let edge = loop {
            slots.clear();
            for &t in sig {
                let pool = g.nodes_of_type(t);
                slots.push(pool[rng.gen_range(0..pool.len())]);
            }
            if let Some(e) = Hyperedge::new(slots.iter().copied()) {
                if e.len() == sig.len() {
                    break e;
                }
            }
        };
        out.push(edge);
    }
    Ok(out)
}

fn event_rates(g: &Hypergraph, edges: &[Hyperedge]) -> Vec<f64> {
    let types = g.type_count();
    let counts = edges
        .par_iter()
        .fold(
            || (vec![0usize; types], vec![false; types]),
            |(mut acc, mut scratch), e| {
                event_b_all_types(g, e.nodes(), &mut scratch);
                for (a, &b) in acc.iter_mut().zip(&scratch) {
                    *a += b as usize;
                }
                (acc, scratch)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![0usize; types],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    counts
        .into_iter()
        .map(|c| c as f64 / edges.len() as f64)
        .collect()
}

/// Estimates the indecomposable factor of every node type.
///
/// When the event never fires on real edges for some type the ratio is
/// undefined; that type gets factor 1 and a warning.
pub fn indecomposable_factor(g: &Hypergraph, multiplier: usize, seed: u64) -> Result<FactorEstimate> {
    if multiplier < 1 {
        return Err(Error::InvalidMultiplier(multiplier));
    }
    let random = sample_random_edges(g, multiplier, seed)?;
    let numerator_rate = event_rates(g, &random);
    let denominator_rate = event_rates(g, g.edges());
    let mut warnings = Vec::new();
    let xi = (0..g.type_count())
        .map(|t| {
            if denominator_rate[t] > 0.0 {
                numerator_rate[t] / denominator_rate[t]
            } else {
                warnings.push(format!(
                    "type `{}`: subset event never occurs on real edges; factor set to 1",
                    g.type_names()[t]
                ));
                1.0
            }
        })
        .collect();
    Ok(FactorEstimate {
        xi,
        random_multiplier: multiplier,
        numerator_rate,
        denominator_rate,
        seed,
        warnings,
    })
}
