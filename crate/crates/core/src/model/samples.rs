use rand::Rng;

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeId, NodeTypeId};
use crate::walk::Walk;

const MAX_REJECTIONS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    #[inline]
    pub fn target(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSample {
    pub center: NodeId,
    pub context: NodeId,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleSample {
    pub nodes: Vec<NodeId>,
    pub label: Label,
}

/// A positive pair with its negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct PairGroup {
    pub positive: PairSample,
    pub negatives: Vec<PairSample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TupleGroup {
    pub positive: TupleSample,
    pub negatives: Vec<TupleSample>,
}

/// How negative tuples are derived from a positive one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TupleNegativeRule {
    /// Keep one randomly chosen anchor node, redraw all other positions from
    /// nodes of the same type.
    #[default]
    RedrawOthers,
    /// Replace only the randomly chosen node with another node of its type.
    ReplaceAnchor,
}

/// 1 when the tuple's nodes are pairwise distinct and its type multiset is
/// the signature of at least one edge of `g`, else 0.
pub fn delta2(g: &Hypergraph, tuple: &[NodeId]) -> u8 {
    if tuple.iter().any(|&v| g.check_node(v).is_err()) {
        return 0;
    }
    for i in 1..tuple.len() {
        if tuple[..i].contains(&tuple[i]) {
            return 0;
        }
    }
    g.has_signature(&g.signature_of(tuple)) as u8
}

/// Positive skip-gram pairs: every context position within `window` of the
/// center whose node differs from the center node.
pub fn extract_pairs(walk: &Walk, window: usize) -> Vec<PairSample> {
    let nodes = &walk.nodes;
    let mut out = Vec::new();
    for i in 0..nodes.len() {
        for_each_context(nodes, i, window, |j| {
            out.push(PairSample {
                center: nodes[i],
                context: nodes[j],
                label: Label::Positive,
            })
        });
    }
    out
}

#[inline]
pub(crate) fn for_each_context(nodes: &[NodeId], i: usize, window: usize, mut f: impl FnMut(usize)) {
    let lo = i.saturating_sub(window);
    let hi = (i + window).min(nodes.len().saturating_sub(1));
    for j in lo..=hi {
        if j != i && nodes[j] != nodes[i] {
            f(j);
        }
    }
}

/// The tuple ending at position `i` and the tuple starting at `i`, when in
/// range.
#[inline]
pub(crate) fn tuple_windows(len: usize, i: usize, k: usize) -> [Option<std::ops::Range<usize>>; 2] {
    let left = (i + 1 >= k).then(|| i + 1 - k..i + 1);
    let right = (i + k <= len).then(|| i..i + k);
    [left, right]
}

/// Positive tuples: for each center position, the `k`-window ending there
/// and the one starting there, kept when they pass [`delta2`]. Repeats
/// across centers are kept.
pub fn extract_tuples(g: &Hypergraph, walk: &Walk, k: usize) -> Vec<TupleSample> {
    let nodes = &walk.nodes;
    let mut out = Vec::new();
    if k < 2 {
        return out;
    }
    for i in 0..nodes.len() {
        for r in tuple_windows(nodes.len(), i, k).into_iter().flatten() {
            let t = &nodes[r];
            if delta2(g, t) == 1 {
                out.push(TupleSample {
                    nodes: t.to_vec(),
                    label: Label::Positive,
                });
            }
        }
    }
    out
}

/// Uniform draw from `V - {center}`.
#[inline]
pub(crate) fn draw_other<R: Rng>(node_count: usize, center: NodeId, rng: &mut R) -> NodeId {
    let u = rng.gen_range(0..node_count - 1);
    NodeId::from(if u >= center.index() { u + 1 } else { u })
}

/// `n` negatives for a positive pair: same center, context drawn uniformly
/// from every other node.
pub fn negative_pairs<R: Rng>(g: &Hypergraph, positive: &PairSample, n: usize, rng: &mut R) -> Result<Vec<PairSample>> {
    g.check_node(positive.center)?;
    if g.node_count() < 2 {
        return Err(Error::Config("negative pairs need at least 2 nodes".into()));
    }
    Ok((0..n)
        .map(|_| PairSample {
            center: positive.center,
            context: draw_other(g.node_count(), positive.center, rng),
            label: Label::Negative,
        })
        .collect())
}

/// Checks a negative distinct from `positive` is reachable under `rule`
/// with anchor `anchor`.
fn check_feasible(g: &Hypergraph, positive: &[NodeId], anchor: usize, rule: TupleNegativeRule) -> Result<()> {
    let ty = |i: usize| g.node_type(positive[i]);
    let too_small = |t: NodeTypeId, avail: usize, slots: usize| {
        Error::TypeTooSmallForNegatives(format!(
            "type `{}` has {avail} free nodes for {slots} slots",
            g.type_name(t)
        ))
    };
    match rule {
        TupleNegativeRule::ReplaceAnchor => {
            let t = ty(anchor);
            let used = (0..positive.len()).filter(|&i| ty(i) == t).count();
            let avail = g.nodes_of_type(t).len() - (used - 1);
            if avail <= 1 {
                return Err(too_small(t, avail, 1));
            }
        }
        TupleNegativeRule::RedrawOthers => {
            let mut can_vary = false;
            for i in (0..positive.len()).filter(|&i| i != anchor) {
                let t = ty(i);
                // visit each type once, at its first redrawn slot
                if (0..i).any(|j| j != anchor && ty(j) == t) {
                    continue;
                }
                let slots = (i..positive.len()).filter(|&j| j != anchor && ty(j) == t).count();
                let avail = g.nodes_of_type(t).len() - (ty(anchor) == t) as usize;
                if avail < slots {
                    return Err(too_small(t, avail, slots));
                }
                can_vary |= avail > slots;
            }
            if !can_vary {
                return Err(Error::TypeTooSmallForNegatives(
                    "every redrawn type has a single possible filling".into(),
                ));
            }
        }
    }
    Ok(())
}

fn same_set(a: &[NodeId], b: &[NodeId]) -> bool {
    a.len() == b.len() && a.iter().all(|v| b.contains(v))
}

/// Appends `n` negatives for `positive` to `out`, flattened, `k` nodes
/// each. All negatives carry the positive's type signature and have
/// distinct nodes.
pub(crate) fn negative_tuples_into<R: Rng>(
    g: &Hypergraph,
    positive: &[NodeId],
    n: usize,
    rule: TupleNegativeRule,
    rng: &mut R,
    out: &mut Vec<NodeId>,
) -> Result<()> {
    let k = positive.len();
    let anchor = rng.gen_range(0..k);
    check_feasible(g, positive, anchor, rule)?;
    for _ in 0..n {
        let base = out.len();
        out.extend_from_slice(positive);
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > MAX_REJECTIONS {
                return Err(Error::TypeTooSmallForNegatives(format!(
                    "no valid negative after {MAX_REJECTIONS} draws"
                )));
            }
            let cand = &mut out[base..];
            for i in 0..k {
                let redraw = match rule {
                    TupleNegativeRule::RedrawOthers => i != anchor,
                    TupleNegativeRule::ReplaceAnchor => i == anchor,
                };
                if redraw {
                    let pool = g.nodes_of_type(g.node_type(positive[i]));
                    cand[i] = pool[rng.gen_range(0..pool.len())];
                }
            }
            let distinct = (1..k).all(|i| !cand[..i].contains(&cand[i]));
            if distinct && !same_set(cand, positive) {
                break;
            }
        }
    }
    Ok(())
}

/// `n` negatives for a positive tuple under `rule`.
pub fn negative_tuples<R: Rng>(
    g: &Hypergraph,
    positive: &TupleSample,
    n: usize,
    rule: TupleNegativeRule,
    rng: &mut R,
) -> Result<Vec<TupleSample>> {
    for &v in &positive.nodes {
        g.check_node(v)?;
    }
    let mut flat = Vec::with_capacity(n * positive.nodes.len());
    negative_tuples_into(g, &positive.nodes, n, rule, rng, &mut flat)?;
    Ok(flat
        .chunks(positive.nodes.len().max(1))
        .map(|c| TupleSample {
            nodes: c.to_vec(),
            label: Label::Negative,
        })
        .collect())
}
