//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls the walk or gradient code under test except
//! to obtain the values being checked.
#![allow(dead_code)]

use hypergram::indecomposability::FactorEstimate;
use hypergram::model::{
    objective, objective_and_gradient, tuple_score, Label, PairGroup, PairSample, TupleGroup, TupleSample,
};
use hypergram::synth::random_uniform;
use hypergram::walk::{generate_walk, transition_distribution, WalkConfig};
use hypergram::{Hyperedge, Hypergraph, HypergramModel, NodeId, NodeTypeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const THREE_EDGES_EDGES: &str = "a1 b1 c1\na2 b1 c1\na3 b2 c1\n";
pub const THREE_EDGES_TYPES: &str = "a1 a\na2 a\na3 a\nb1 b\nb2 b\nc1 c\n";

pub fn three_edges() -> Hypergraph {
    Hypergraph::parse(THREE_EDGES_EDGES, THREE_EDGES_TYPES).unwrap()
}

pub fn node(g: &Hypergraph, label: &str) -> NodeId {
    g.node_by_label(label).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random typed hypergraph with at most 30 nodes and 40 edges of sizes 2 to 4.
pub fn small_random_graph(rng: &mut impl Rng) -> Hypergraph {
    let n = rng.gen_range(4..=30usize);
    let types = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    let node_types: Vec<NodeTypeId> = (0..n).map(|_| NodeTypeId(rng.gen_range(0..3))).collect();
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let m = rng.gen_range(1..=40usize);
    let all: Vec<u32> = (0..n as u32).collect();
    let edges = (0..m)
        .map(|_| {
            let size = rng.gen_range(2..=4usize.min(n));
            Hyperedge::new(all.choose_multiple(rng, size).map(|&i| NodeId(i))).unwrap()
        })
        .collect();
    Hypergraph::from_parts(labels, types, node_types, edges).unwrap()
}

/// Neighbors of `v` by scanning every edge.
pub fn brute_neighbors(g: &Hypergraph, v: NodeId) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = g
        .edges()
        .iter()
        .filter(|e| e.nodes().contains(&v))
        .flat_map(|e| e.nodes().iter().copied())
        .filter(|&u| u != v)
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Longest run of pairwise distinct nodes at the end of `path`, last first.
fn distinct_tail(path: &[NodeId]) -> Vec<NodeId> {
    let mut tail = Vec::new();
    for &v in path.iter().rev() {
        if tail.contains(&v) {
            break;
        }
        tail.push(v);
    }
    tail
}

/// Path order straight from the definition: the largest `k` such that `v`
/// and the last `k` distinct path nodes (none equal to `v`) share an edge.
pub fn brute_path_order(g: &Hypergraph, path: &[NodeId], v: NodeId) -> usize {
    let tail = distinct_tail(path);
    (1..=tail.len())
        .rev()
        .find(|&k| {
            let s = &tail[..k];
            !s.contains(&v)
                && g
                    .edges()
                    .iter()
                    .any(|e| e.nodes().contains(&v) && s.iter().all(|u| e.nodes().contains(u)))
        })
        .unwrap_or(0)
}

/// Next-node distribution evaluated directly: weights
/// `exp(alpha * xi * (PO - 1))` over all neighbors, normalized.
pub fn brute_transition(g: &Hypergraph, xi: &[f64], alpha: f64, path: &[NodeId]) -> Vec<(NodeId, f64)> {
    let last = *path.last().unwrap();
    let nbrs = brute_neighbors(g, last);
    let w: Vec<f64> = nbrs
        .iter()
        .map(|&v| {
            let po = brute_path_order(g, path, v) as f64;
            (alpha * xi[g.node_type(v).index()] * (po - 1.0)).exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    nbrs.into_iter().zip(w).map(|(v, w)| (v, w / z)).collect()
}

/// A random path of 1 to 6 nodes following edges, revisits allowed.
pub fn random_path(g: &Hypergraph, rng: &mut impl Rng) -> Option<Vec<NodeId>> {
    let starts: Vec<NodeId> = (0..g.node_count() as u32)
        .map(NodeId)
        .filter(|&v| !brute_neighbors(g, v).is_empty())
        .collect();
    let mut path = vec![*starts.choose(rng)?];
    let len = rng.gen_range(1..=6);
    while path.len() < len {
        let nbrs = brute_neighbors(g, *path.last().unwrap());
        path.push(*nbrs.choose(rng).unwrap());
    }
    Some(path)
}

pub fn factors_with(xi: Vec<f64>) -> FactorEstimate {
    FactorEstimate {
        xi,
        ..FactorEstimate::neutral(0)
    }
}

/// Largest absolute probability gap between the library and the direct
/// evaluation over `graphs` random graphs, plus the number of paths checked.
pub fn walk_oracle_max_error(graphs: usize, seed: u64) -> (f64, usize) {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..graphs {
        let g = small_random_graph(&mut r);
        let xi: Vec<f64> = (0..g.type_count()).map(|_| r.gen_range(0.1..3.0)).collect();
        let f = factors_with(xi.clone());
        for _ in 0..5 {
            let Some(path) = random_path(&g, &mut r) else { continue };
            let alpha = if r.gen_bool(0.2) { 0.0 } else { r.gen_range(0.0..20.0) };
            let cfg = WalkConfig {
                alpha,
                ..WalkConfig::default()
            };
            let got = transition_distribution(&g, &f, &path, &cfg, &mut r).unwrap();
            let want = brute_transition(&g, &xi, alpha, &path);
            assert_eq!(
                got.iter().map(|p| p.0).collect::<Vec<_>>(),
                want.iter().map(|p| p.0).collect::<Vec<_>>(),
                "candidate sets differ"
            );
            for ((_, a), (_, b)) in got.iter().zip(&want) {
                worst = worst.max((a - b).abs());
            }
            checked += 1;
        }
    }
    (worst, checked)
}

/// Draws `draws` first steps with `alpha = 0` from the node with the most
/// neighbors and returns the largest per-neighbor deviation from uniform in
/// standard errors, plus the neighbor count.
pub fn alpha_zero_max_z(draws: usize, seed: u64) -> (f64, usize) {
    let g = random_uniform(&[("a", 4), ("b", 4), ("c", 4)], 24, seed).unwrap();
    let start = (0..g.node_count() as u32)
        .map(NodeId)
        .max_by_key(|&v| brute_neighbors(&g, v).len())
        .unwrap();
    let nbrs = brute_neighbors(&g, start);
    let cfg = WalkConfig {
        alpha: 0.0,
        walk_length: 2,
        ..WalkConfig::default()
    };
    let f = FactorEstimate::neutral(g.type_count());
    let mut r = rng(seed ^ 0x5eed);
    let mut counts = vec![0usize; g.node_count()];
    for _ in 0..draws {
        let w = generate_walk(&g, &f, start, &cfg, &mut r).unwrap();
        counts[w.nodes[1].index()] += 1;
    }
    let p = 1.0 / nbrs.len() as f64;
    let se = (draws as f64 * p * (1.0 - p)).sqrt();
    let z = nbrs
        .iter()
        .map(|v| (counts[v.index()] as f64 - draws as f64 * p).abs() / se)
        .fold(0.0, f64::max);
    (z, nbrs.len())
}

/// Steps taken by `alpha = 1000`, `xi = 1` walks on random graphs, and how
/// many of them went to a node of maximal path order.
pub fn large_alpha_max_po(steps: usize, seed: u64) -> (usize, usize) {
    let mut r = rng(seed);
    let cfg = WalkConfig {
        alpha: 1e3,
        walk_length: 12,
        ..WalkConfig::default()
    };
    let (mut total, mut hits) = (0, 0);
    while total < steps {
        let g = small_random_graph(&mut r);
        let f = FactorEstimate::neutral(g.type_count());
        for _ in 0..20 {
            let Some(start) = random_path(&g, &mut r).map(|p| p[0]) else { break };
            let walk = generate_walk(&g, &f, start, &cfg, &mut r).unwrap();
            for i in 1..walk.nodes.len() {
                let path = &walk.nodes[..i];
                let best = brute_neighbors(&g, path[i - 1])
                    .into_iter()
                    .map(|v| brute_path_order(&g, path, v))
                    .max()
                    .unwrap();
                hits += (brute_path_order(&g, path, walk.nodes[i]) == best) as usize;
                total += 1;
            }
        }
    }
    (hits, total)
}

/// Model with every parameter uniform in `[-1, 1]`.
pub fn random_model(g: &Hypergraph, dim: usize, filters: usize, rng: &mut impl Rng) -> HypergramModel {
    let k = g.edges()[0].len();
    let mut m = HypergramModel::new(g.node_count(), dim, filters, k, 0);
    for i in 0..m.parameter_count() {
        *m.parameter_mut(i) = rng.gen_range(-1.0..1.0);
    }
    m
}

fn random_typed_tuple(g: &Hypergraph, template: &[NodeId], rng: &mut impl Rng) -> Vec<NodeId> {
    template
        .iter()
        .map(|&v| *g.nodes_of_type(g.node_type(v)).choose(rng).unwrap())
        .collect()
}

/// Random pair and tuple groups over `g`. Positive tuples are real edges in
/// shuffled order; negatives keep their type signature.
pub fn random_groups(g: &Hypergraph, rng: &mut impl Rng) -> (Vec<PairGroup>, Vec<TupleGroup>) {
    let n = g.node_count() as u32;
    let pair = |rng: &mut dyn rand::RngCore, label| PairSample {
        center: NodeId(rng.gen_range(0..n)),
        context: NodeId(rng.gen_range(0..n)),
        label,
    };
    let pairs = (0..4)
        .map(|_| PairGroup {
            positive: pair(rng, Label::Positive),
            negatives: (0..3).map(|_| pair(rng, Label::Negative)).collect(),
        })
        .collect();
    let tuples = (0..3)
        .map(|_| {
            let mut nodes = g.edges().choose(rng).unwrap().nodes().to_vec();
            nodes.shuffle(rng);
            let negatives = (0..2)
                .map(|_| TupleSample {
                    nodes: random_typed_tuple(g, &nodes, rng),
                    label: Label::Negative,
                })
                .collect();
            TupleGroup {
                positive: TupleSample {
                    nodes,
                    label: Label::Positive,
                },
                negatives,
            }
        })
        .collect();
    (pairs, tuples)
}

#[derive(Debug, Default)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose step crosses a relu or max-pool switch.
    pub skipped_kinks: usize,
}

pub const GRAD_STEP: f64 = 1e-5;
/// Gradients below this magnitude are compared on an absolute scale; the
/// finite-difference quotient cannot resolve them more finely.
pub const GRAD_FLOOR: f64 = 1e-6;

/// Analytic gradient of the joint objective against central differences at
/// `points` random parameter points of a small 3-uniform graph.
pub fn gradient_check(points: usize, seed: u64) -> GradCheck {
    let mut r = rng(seed);
    let g = random_uniform(&[("a", 4), ("b", 4), ("c", 4)], 12, seed).unwrap();
    let mut out = GradCheck::default();
    let h = GRAD_STEP;
    for _ in 0..points {
        let mut m = random_model(&g, 4, 3, &mut r);
        let (pairs, tuples) = random_groups(&g, &mut r);
        let lambda = r.gen_range(0.5..2.0);
        let (f0, grads) = objective_and_gradient(&m, &pairs, &tuples, lambda);
        let analytic = grads.flat();
        assert_eq!(analytic.len(), m.parameter_count());
        for (i, &a) in analytic.iter().enumerate() {
            let x = *m.parameter_mut(i);
            *m.parameter_mut(i) = x + h;
            let fp = objective(&m, &pairs, &tuples, lambda).total;
            *m.parameter_mut(i) = x - h;
            let fm = objective(&m, &pairs, &tuples, lambda).total;
            *m.parameter_mut(i) = x;
            let central = (fp - fm) / (2.0 * h);
            let (fwd, bwd) = ((fp - f0.total) / h, (f0.total - fm) / h);
            // one-sided slopes agree to O(h) on smooth stretches
            if (fwd - bwd).abs() > 1e-3 * central.abs().max(1.0) {
                out.skipped_kinks += 1;
                continue;
            }
            let rel = (a - central).abs() / a.abs().max(central.abs()).max(GRAD_FLOOR);
            out.max_rel_error = out.max_rel_error.max(rel);
            out.checked += 1;
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct TupleStructure {
    pub inputs: usize,
    pub invalid_inputs: usize,
    pub nonzero_invalid: usize,
    pub out_of_range: usize,
    pub permutation_mismatches: usize,
}

fn permutations3(t: &[NodeId]) -> [[NodeId; 3]; 6] {
    let (a, b, c) = (t[0], t[1], t[2]);
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// Scores `inputs` random triples (any nodes, repeats allowed) under fresh
/// random models and tallies structural violations.
pub fn tuple_structure(inputs: usize, seed: u64) -> TupleStructure {
    let mut r = rng(seed);
    let g = random_uniform(&[("a", 10), ("b", 10), ("c", 10)], 80, seed).unwrap();
    let mut out = TupleStructure::default();
    let mut m = random_model(&g, 8, 6, &mut r);
    for i in 0..inputs {
        if i % 100 == 0 {
            m = random_model(&g, 8, 6, &mut r);
        }
        let t: Vec<NodeId> = (0..3).map(|_| NodeId(r.gen_range(0..g.node_count() as u32))).collect();
        let s = tuple_score(&m, &g, &t);
        out.inputs += 1;
        if !(0.0..=1.0).contains(&s) {
            out.out_of_range += 1;
        }
        if hypergram::model::delta2(&g, &t) == 0 {
            out.invalid_inputs += 1;
            out.nonzero_invalid += (s != 0.0) as usize;
        }
        if permutations3(&t).iter().any(|p| tuple_score(&m, &g, p) != s) {
            out.permutation_mismatches += 1;
        }
    }
    out
}
