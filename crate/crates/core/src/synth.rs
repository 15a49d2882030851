//! Synthetic hypergraph generators for baselines and benchmarks.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, NodeId, NodeTypeId};
use crate::seed;

/// Node universe with `sizes[t]` nodes of type `t`, labelled `{name}{i}`.
/// Returns labels, type names, per-node types, and the first id of each type.
fn universe(types: &[(&str, usize)]) -> (Vec<String>, Vec<String>, Vec<NodeTypeId>, Vec<usize>) {
    let mut labels = Vec::new();
    let mut node_types = Vec::new();
    let mut first = Vec::new();
    for (t, &(name, n)) in types.iter().enumerate() {
        first.push(labels.len());
        for i in 0..n {
            labels.push(format!("{name}{i}"));
            node_types.push(NodeTypeId(t as u16));
        }
    }
    let names = types.iter().map(|(n, _)| n.to_string()).collect();
    (labels, names, node_types, first)
}

/// Uniform random `k`-uniform hypergraph: each edge takes one uniformly
/// drawn node of every type, duplicates redrawn.
pub fn random_uniform(types: &[(&str, usize)], edges: usize, seed: u64) -> Result<Hypergraph> {
    let space: u128 = types.iter().map(|&(_, n)| n as u128).product();
    if types.len() < 2 || types.iter().any(|&(_, n)| n == 0) || (edges as u128) > space {
        return Err(Error::Config("random graph: infeasible type sizes for edge count".into()));
    }
    let (labels, names, node_types, first) = universe(types);
    let mut rng = seed::rng(seed);
    let mut seen = HashSet::with_capacity(edges);
    let mut out = Vec::with_capacity(edges);
    while out.len() < edges {
        let nodes: Vec<NodeId> = types
            .iter()
            .zip(&first)
            .map(|(&(_, n), &f)| NodeId::from(f + rng.gen_range(0..n)))
            .collect();
        let e = Hyperedge::new(nodes).expect("one node per type is distinct");
        if seen.insert(e.clone()) {
            out.push(e);
        }
    }
    Hypergraph::from_parts(labels, names, node_types, out)
}

/// The 1000/1000/10 random hypergraph with 5000 edges used as an
/// indecomposability baseline.
pub fn random_baseline(seed: u64) -> Hypergraph {
    random_uniform(&[("a", 1000), ("b", 1000), ("c", 10)], 5000, seed).expect("feasible sizes")
}

/// Planted (user, location, activity) hypergraph.
///
/// Users and locations are split round-robin into `blocks` groups and every
/// location carries one fixed activity. A fraction `1 - noise` of the edges
/// is drawn without replacement from the in-block triples
/// `(u, l, activity(l))`; the rest are uniform triples outside that set.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub users: usize,
    pub locations: usize,
    pub activities: usize,
    pub edges: usize,
    pub blocks: usize,
    pub noise: f64,
}

impl Default for PlantedConfig {
    /// Same shape as the GPS network: 146/70/5 nodes, 1436 edges.
    fn default() -> Self {
        PlantedConfig {
            users: 146,
            locations: 70,
            activities: 5,
            edges: 1436,
            blocks: 7,
            noise: 0.05,
        }
    }
}

pub fn planted(config: &PlantedConfig, seed: u64) -> Result<Hypergraph> {
    let PlantedConfig {
        users,
        locations,
        activities,
        edges,
        blocks,
        noise,
    } = *config;
    if users == 0 || locations == 0 || activities == 0 || blocks == 0 || !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config("planted graph: sizes must be positive, noise in [0, 1]".into()));
    }
    let (labels, names, node_types, first) =
        universe(&[("user", users), ("location", locations), ("activity", activities)]);
    let user = |i: usize| NodeId::from(first[0] + i);
    let loc = |i: usize| NodeId::from(first[1] + i);
    let act = |i: usize| NodeId::from(first[2] + i);

    let mut planted = Vec::new();
    for u in 0..users {
        for l in (0..locations).filter(|l| l % blocks == u % blocks) {
            planted.push([u, l, l % activities]);
        }
    }
    let n_noise = (edges as f64 * noise).round() as usize;
    let n_block = edges - n_noise;
    if n_block > planted.len() || (edges as u128) > (users * locations * activities) as u128 {
        return Err(Error::Config(format!(
            "planted graph: {n_block} block edges requested, {} available",
            planted.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut chosen: HashSet<[usize; 3]> = sample(&mut rng, planted.len(), n_block)
        .into_iter()
        .map(|i| planted[i])
        .collect();
    let planted_set: HashSet<[usize; 3]> = planted.into_iter().collect();
    let mut triples: Vec<[usize; 3]> = chosen.iter().copied().collect();
    while triples.len() < edges {
        let t = [
            rng.gen_range(0..users),
            rng.gen_range(0..locations),
            rng.gen_range(0..activities),
        ];
        if !planted_set.contains(&t) && chosen.insert(t) {
            triples.push(t);
        }
    }
    triples.sort_unstable();
    let out = triples
        .into_iter()
        .map(|[u, l, a]| Hyperedge::new([user(u), loc(l), act(a)]).expect("distinct types"))
        .collect();
    Hypergraph::from_parts(labels, names, node_types, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Uniformity;

    #[test]
    fn random_baseline_shape() {
        let g = random_baseline(1);
        assert_eq!(g.node_count(), 2010);
        assert_eq!(g.edge_count(), 5000);
        assert_eq!(g.uniformity(), Uniformity::Uniform(3));
        assert_eq!(g.type_signatures().len(), 1);
    }

    #[test]
    fn planted_shape() {
        let g = planted(&PlantedConfig::default(), 3).unwrap();
        assert_eq!(g.edge_count(), 1436);
        assert_eq!(g.duplicate_edges(), 0);
        let sizes: Vec<usize> = (0..3).map(|t| g.nodes_of_type(NodeTypeId(t)).len()).collect();
        assert_eq!(sizes, vec![146, 70, 5]);
        assert_eq!(g.edges(), planted(&PlantedConfig::default(), 3).unwrap().edges());
    }

    #[test]
    fn infeasible_requests_fail() {
        assert!(random_uniform(&[("a", 2), ("b", 2)], 5, 0).is_err());
        let cfg = PlantedConfig {
            edges: 5000,
            ..PlantedConfig::default()
        };
        assert!(planted(&cfg, 0).is_err());
    }
}
