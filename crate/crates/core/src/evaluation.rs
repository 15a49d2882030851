//! Link prediction and hyper-network reconstruction.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, NodeId, Uniformity};
use crate::model::{delta2, tuple_logit, HypergramModel};
use crate::seed;

pub const DEFAULT_HIDE_FRACTION: f64 = 0.2;
pub const DEFAULT_CANDIDATE_CAP: u128 = 100_000_000;
const NEGATIVE_ATTEMPTS: usize = 10_000;
/// Chance that a negative shares exactly one node with its positive; it
/// shares two otherwise.
const SHARE_ONE: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairwiseMetric {
    WeightedL1,
    WeightedL2,
    Cosine,
}

impl PairwiseMetric {
    pub const ALL: [PairwiseMetric; 3] = [PairwiseMetric::WeightedL1, PairwiseMetric::WeightedL2, PairwiseMetric::Cosine];

    pub fn name(self) -> &'static str {
        match self {
            PairwiseMetric::WeightedL1 => "L1",
            PairwiseMetric::WeightedL2 => "L2",
            PairwiseMetric::Cosine => "COS",
        }
    }

    /// Distances rank in reverse.
    pub fn is_distance(self) -> bool {
        !matches!(self, PairwiseMetric::Cosine)
    }
}

impl fmt::Display for PairwiseMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairwiseMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "weighted_l1" => Ok(PairwiseMetric::WeightedL1),
            "l2" | "weighted_l2" => Ok(PairwiseMetric::WeightedL2),
            "cos" | "cosine" => Ok(PairwiseMetric::Cosine),
            _ => Err(Error::Config(format!("unknown metric `{s}`"))),
        }
    }
}

pub fn pairwise_metric(kind: PairwiseMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    let diffs = x.iter().zip(y).map(|(a, b)| a - b);
    Ok(match kind {
        PairwiseMetric::WeightedL1 => diffs.map(f64::abs).sum(),
        PairwiseMetric::WeightedL2 => diffs.map(|t| t * t).sum::<f64>().sqrt(),
        PairwiseMetric::Cosine => {
            let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nx == 0.0 || ny == 0.0 {
                return Err(Error::UndefinedCosine);
            }
            x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / (nx * ny)
        }
    })
}

/// Row-major `|V| x d` embedding matrix.
#[derive(Clone, Copy, Debug)]
pub struct Embeddings<'a> {
    pub dim: usize,
    pub rows: &'a [f64],
}

impl<'a> Embeddings<'a> {
    pub fn new(dim: usize, rows: &'a [f64]) -> Self {
        Embeddings { dim, rows }
    }

    pub fn of(model: &'a HypergramModel) -> Self {
        Embeddings::new(model.dim, &model.center)
    }

    pub fn row(&self, v: NodeId) -> Result<&'a [f64]> {
        let (lo, hi) = (v.index() * self.dim, (v.index() + 1) * self.dim);
        self.rows.get(lo..hi).ok_or(Error::InvalidNode(v.index()))
    }
}

/// Mean metric over all node pairs of `e`, negated for distances so that
/// higher is always more plausible.
pub fn edge_score_pairwise(emb: Embeddings<'_>, metric: PairwiseMetric, e: &[NodeId]) -> Result<f64> {
    if e.len() < 2 {
        return Err(Error::Config("edge score needs at least 2 nodes".into()));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            sum += pairwise_metric(metric, emb.row(e[i])?, emb.row(e[j])?)?;
            pairs += 1;
        }
    }
    let mean = sum / pairs as f64;
    Ok(if metric.is_distance() { -mean } else { mean })
}

/// Anything that scores candidate hyperedges, higher meaning more
/// plausible.
pub trait EdgeScorer: Sync {
    fn score(&self, nodes: &[NodeId]) -> Result<f64>;
}

pub struct PairwiseScorer<'a> {
    pub embeddings: Embeddings<'a>,
    pub metric: PairwiseMetric,
}

impl EdgeScorer for PairwiseScorer<'_> {
    fn score(&self, nodes: &[NodeId]) -> Result<f64> {
        edge_score_pairwise(self.embeddings, self.metric, nodes)
    }
}

/// Tuplewise scorer. Ranks by the logit, a strictly increasing function of
/// the score, so saturated sigmoids do not collapse into ties; tuples the
/// validity filter rejects score negative infinity.
pub struct TupleScorer<'a> {
    pub model: &'a HypergramModel,
    pub graph: &'a Hypergraph,
}

impl EdgeScorer for TupleScorer<'_> {
    fn score(&self, nodes: &[NodeId]) -> Result<f64> {
        if !self.model.has_tuple_channel() {
            return Err(Error::Config("model has no tuple channel".into()));
        }
        if nodes.len() != self.model.tuple_size {
            return Err(Error::DimensionMismatch(self.model.tuple_size, nodes.len()));
        }
        if delta2(self.graph, nodes) == 0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(tuple_logit(self.model, nodes))
    }
}

/// Scores 1 for edges of the reference graph and 0 otherwise.
pub struct OracleScorer<'a>(pub &'a Hypergraph);

impl EdgeScorer for OracleScorer<'_> {
    fn score(&self, nodes: &[NodeId]) -> Result<f64> {
        Ok(match Hyperedge::new(nodes.iter().copied()) {
            Some(e) if self.0.contains_edge(&e) => 1.0,
            _ => 0.0,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSplit {
    pub train_edges: Vec<Hyperedge>,
    pub test_positives: Vec<Hyperedge>,
    pub test_negatives: Vec<Hyperedge>,
    pub hide_fraction: f64,
    pub seed: u64,
}

impl EvalSplit {
    /// The training hypergraph: every node of `g`, only the training edges.
    pub fn train_graph(&self, g: &Hypergraph) -> Result<Hypergraph> {
        g.with_edges(self.train_edges.clone())
    }
}

/// Hides `floor(hide_fraction * |E|)` edges uniformly and pairs each with a
/// negative of the same type signature sharing exactly one node (or two,
/// with probability 0.1) with it.
pub fn make_split(g: &Hypergraph, hide_fraction: f64, seed: u64) -> Result<EvalSplit> {
    if !(hide_fraction > 0.0 && hide_fraction < 1.0) {
        return Err(Error::Config("hide_fraction must be in (0, 1)".into()));
    }
    let m = g.edge_count();
    let hidden_count = (hide_fraction * m as f64).floor() as usize;
    let mut rng = seed::stage_rng(seed, seed::stage::SPLIT);
    let mut hidden: Vec<usize> = sample(&mut rng, m, hidden_count).into_vec();
    hidden.sort_unstable();
    let mut is_hidden = vec![false; m];
    for &i in &hidden {
        is_hidden[i] = true;
    }
    let mut seen = HashSet::new();
    let mut negatives = Vec::with_capacity(hidden_count);
    for &i in &hidden {
        negatives.push(negative_for(g, i, &mut seen, &mut rng)?);
    }
    Ok(EvalSplit {
        train_edges: (0..m).filter(|&i| !is_hidden[i]).map(|i| g.edge(i).clone()).collect(),
        test_positives: hidden.iter().map(|&i| g.edge(i).clone()).collect(),
        test_negatives: negatives,
        hide_fraction,
        seed,
    })
}

fn negative_for<R: Rng>(g: &Hypergraph, index: usize, seen: &mut HashSet<Hyperedge>, rng: &mut R) -> Result<Hyperedge> {
    let e = g.edge(index).nodes();
    let k = e.len();
    let mut cand = Vec::with_capacity(k);
    for _ in 0..NEGATIVE_ATTEMPTS {
        let shared = if rng.gen_bool(SHARE_ONE) || k <= 2 { 1 } else { 2 };
        let keep = sample(rng, k, shared);
        cand.clear();
        cand.extend_from_slice(e);
        let mut ok = true;
        for i in (0..k).filter(|i| !keep.iter().any(|j| j == *i)) {
            let pool = g.nodes_of_type(g.node_type(e[i]));
            let v = pool[rng.gen_range(0..pool.len())];
            // redrawn nodes avoid `e`, so kept nodes cannot collide with them
            if e.contains(&v) || cand[..i].contains(&v) {
                ok = false;
                break;
            }
            cand[i] = v;
        }
        if !ok {
            continue;
        }
        let neg = Hyperedge::new(cand.iter().copied()).expect("distinct nodes");
        if !g.contains_edge(&neg) && seen.insert(neg.clone()) {
            return Ok(neg);
        }
    }
    Err(Error::CannotGenerateNegative(index, NEGATIVE_ATTEMPTS))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::EmptyScoreSet);
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // sum of midranks of the positives, ranks starting at 1
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0.total_cmp(&all[i].0).is_eq() {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|x| x.1).count() as f64;
        i = j;
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Scores every edge in `edges`.
pub fn score_edges<S: EdgeScorer + ?Sized>(scorer: &S, edges: &[Hyperedge]) -> Result<Vec<f64>> {
    edges.par_iter().map(|e| scorer.score(e.nodes())).collect()
}

/// AUC of `scorer` on a split's test positives against its negatives.
pub fn link_prediction_auc<S: EdgeScorer + ?Sized>(scorer: &S, split: &EvalSplit) -> Result<f64> {
    auc(&score_edges(scorer, &split.test_positives)?, &score_edges(scorer, &split.test_negatives)?)
}

pub fn default_eta_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of type-signature-valid candidate edges of `g`.
pub fn candidate_count(g: &Hypergraph) -> u128 {
    g.type_signatures()
        .iter()
        .map(|(sig, _)| {
            let mut total = 1u128;
            let mut i = 0;
            while i < sig.len() {
                let m = sig[i..].iter().take_while(|&&t| t == sig[i]).count();
                total = total.saturating_mul(binomial(g.nodes_of_type(sig[i]).len(), m));
                i += m;
            }
            total
        })
        .fold(0u128, u128::saturating_add)
}

/// Calls `f` with every candidate edge, in canonical order per signature.
/// Nodes of a repeated type are chosen in increasing id order so every
/// node set appears once.
fn for_each_candidate(g: &Hypergraph, mut f: impl FnMut(&[NodeId])) {
    for (sig, _) in g.type_signatures() {
        let pools: Vec<&[NodeId]> = sig.iter().map(|&t| g.nodes_of_type(t)).collect();
        let k = sig.len();
        let mut idx = vec![0usize; k];
        let mut cur = vec![NodeId(0); k];
        fn rec(
            pos: usize,
            sig: &[crate::hypergraph::NodeTypeId],
            pools: &[&[NodeId]],
            idx: &mut [usize],
            cur: &mut [NodeId],
            f: &mut dyn FnMut(&[NodeId]),
        ) {
            if pos == sig.len() {
                f(cur);
                return;
            }
            let start = if pos > 0 && sig[pos] == sig[pos - 1] { idx[pos - 1] + 1 } else { 0 };
            for i in start..pools[pos].len() {
                idx[pos] = i;
                cur[pos] = pools[pos][i];
                rec(pos + 1, sig, pools, idx, cur, f);
            }
        }
        rec(0, sig, &pools, &mut idx, &mut cur, &mut f);
    }
}

/// Ranks every candidate edge by `scorer` and returns `(eta, ACC(eta))` on
/// `eta_grid`. ACC(eta) is the fraction of real edges among the top
/// `floor(eta * |E|)` candidates; ties are broken by canonical edge order.
pub fn reconstruct<S: EdgeScorer + ?Sized>(
    g: &Hypergraph,
    scorer: &S,
    eta_grid: &[f64],
    cap: u128,
) -> Result<Vec<(f64, f64)>> {
    if !matches!(g.uniformity(), Uniformity::Uniform(_)) {
        return Err(Error::Config("reconstruction requires a uniform hypergraph".into()));
    }
    if eta_grid.iter().any(|&eta| !(eta > 0.0 && eta <= 1.0)) {
        return Err(Error::Config("eta values must be in (0, 1]".into()));
    }
    let count = candidate_count(g);
    if count > cap {
        return Err(Error::ReconstructionIntractable { candidates: count, cap });
    }
    let mut candidates = Vec::with_capacity(count as usize);
    for_each_candidate(g, |c| candidates.push(Hyperedge::new(c.iter().copied()).expect("distinct")));
    let scores = score_edges(scorer, &candidates)?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| candidates[a].cmp(&candidates[b]))
    });
    let m = g.edge_count();
    let mut hits_prefix = Vec::with_capacity(m + 1);
    hits_prefix.push(0usize);
    for &i in order.iter().take(m) {
        let last = *hits_prefix.last().unwrap();
        hits_prefix.push(last + g.contains_edge(&candidates[i]) as usize);
    }
    Ok(eta_grid
        .iter()
        .map(|&eta| {
            let top = ((eta * m as f64).floor() as usize).clamp(1, hits_prefix.len() - 1);
            (eta, hits_prefix[top] as f64 / top as f64)
        })
        .collect())
}

/// Results of one evaluation run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub auc_by_metric: Vec<(String, f64)>,
    pub acc_curve: Vec<(f64, f64)>,
    pub runtimes: Vec<(String, Duration)>,
}

impl EvalReport {
    pub fn write_auc_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "metric,auc")?;
        for (m, a) in &self.auc_by_metric {
            writeln!(w, "{m},{a}")?;
        }
        Ok(())
    }

    pub fn write_acc_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "eta,acc")?;
        for (eta, acc) in &self.acc_curve {
            writeln!(w, "{eta},{acc}")?;
        }
        Ok(())
    }
}
