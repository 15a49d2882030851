use super::samples::{delta2, Label, PairGroup, PairSample, TupleGroup, TupleSample};
use super::HypergramModel;
use crate::hypergraph::{Hypergraph, NodeId};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Bounded log loss of a logit: `-log sigma(z)` for positives and
/// `-log sigma(-z)` for negatives.
#[inline]
pub(crate) fn logit_loss(z: f64, label: Label) -> f64 {
    match label {
        Label::Positive => softplus(-z),
        Label::Negative => softplus(z),
    }
}

/// d loss / d z.
#[inline]
pub(crate) fn logit_grad(z: f64, label: Label) -> f64 {
    sigmoid(z) - label.target()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the loop vectorize
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b[..a.len()].split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

/// Loss and gradient of one pair sample. Only `center` and `context` rows
/// are touched.
#[derive(Clone, Debug, PartialEq)]
pub struct PairGrad {
    pub loss: f64,
    pub center: NodeId,
    pub context: NodeId,
    pub d_center: Vec<f64>,
    pub d_context: Vec<f64>,
}

pub fn pair_loss_and_grads(model: &HypergramModel, pair: &PairSample) -> PairGrad {
    let fv = model.center_row(pair.center);
    let fu = model.context_row(pair.context);
    let z = dot(fv, fu);
    let g = logit_grad(z, pair.label);
    PairGrad {
        loss: logit_loss(z, pair.label),
        center: pair.center,
        context: pair.context,
        d_center: fu.iter().map(|x| g * x).collect(),
        d_context: fv.iter().map(|x| g * x).collect(),
    }
}

/// Per-tuple activations kept for the backward pass.
#[derive(Clone, Debug, Default)]
pub(crate) struct TupleForward {
    /// Pooled relu responses, one per filter.
    pub pooled: Vec<f64>,
    /// Position that won the pool, lowest index on ties.
    pub argmax: Vec<usize>,
}

/// Read-only view of the tuple head.
#[derive(Clone, Copy)]
pub(crate) struct Head<'a> {
    pub dim: usize,
    pub kernels: &'a [f64],
    pub kernel_bias: &'a [f64],
    pub dense_w: &'a [f64],
    pub dense_b: f64,
}

impl<'a> Head<'a> {
    pub fn of(model: &'a HypergramModel) -> Self {
        Head {
            dim: model.dim,
            kernels: &model.kernels,
            kernel_bias: &model.kernel_bias,
            dense_w: &model.dense_w,
            dense_b: model.dense_b,
        }
    }

    fn filters(&self) -> usize {
        self.kernel_bias.len()
    }

    /// Logit of a tuple whose center rows are stacked in `rows`.
    pub fn forward(&self, rows: &[f64], fw: &mut TupleForward) -> f64 {
        let (d, nf) = (self.dim, self.filters());
        fw.pooled.clear();
        fw.argmax.clear();
        for f in 0..nf {
            let kf = &self.kernels[f * d..(f + 1) * d];
            let mut best = 0.0;
            let mut arg = 0;
            for (j, row) in rows.chunks_exact(d).enumerate() {
                let a = (dot(kf, row) + self.kernel_bias[f]).max(0.0);
                if j == 0 || a > best {
                    best = a;
                    arg = j;
                }
            }
            fw.pooled.push(best);
            fw.argmax.push(arg);
        }
        self.dense_b + dot(self.dense_w, &fw.pooled)
    }

    /// Adds `gz * dz/dparam` into the head gradients and `d_rows`.
    pub fn backward(&self, gz: f64, rows: &[f64], fw: &TupleForward, acc: &mut HeadGrad, d_rows: &mut [f64]) {
        let d = self.dim;
        acc.dense_b += gz;
        for f in 0..self.filters() {
            let c = fw.pooled[f];
            acc.dense_w[f] += gz * c;
            if c <= 0.0 {
                continue;
            }
            let dh = gz * self.dense_w[f];
            let j = fw.argmax[f];
            acc.kernel_bias[f] += dh;
            axpy(dh, &rows[j * d..(j + 1) * d], &mut acc.kernels[f * d..(f + 1) * d]);
            axpy(dh, &self.kernels[f * d..(f + 1) * d], &mut d_rows[j * d..(j + 1) * d]);
        }
    }
}

/// Gradient accumulator for the tuple head.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct HeadGrad {
    pub kernels: Vec<f64>,
    pub kernel_bias: Vec<f64>,
    pub dense_w: Vec<f64>,
    pub dense_b: f64,
}

impl HeadGrad {
    pub fn zeros(dim: usize, filters: usize) -> Self {
        HeadGrad {
            kernels: vec![0.0; dim * filters],
            kernel_bias: vec![0.0; filters],
            dense_w: vec![0.0; filters],
            dense_b: 0.0,
        }
    }

    pub fn clear(&mut self) {
        self.kernels.fill(0.0);
        self.kernel_bias.fill(0.0);
        self.dense_w.fill(0.0);
        self.dense_b = 0.0;
    }
}

pub(crate) fn stack_rows(model: &HypergramModel, nodes: &[NodeId], out: &mut Vec<f64>) {
    out.clear();
    for &v in nodes {
        out.extend_from_slice(model.center_row(v));
    }
}

/// `W c + b`, the score before the sigmoid. Does not apply the validity
/// indicator, so ranking by it avoids ties from sigmoid saturation.
pub fn tuple_logit(model: &HypergramModel, nodes: &[NodeId]) -> f64 {
    let mut rows = Vec::with_capacity(nodes.len() * model.dim);
    stack_rows(model, nodes, &mut rows);
    Head::of(model).forward(&rows, &mut TupleForward::default())
}

/// Tuplewise plausibility in `[0, 1]`; exactly 0 when [`delta2`] rejects
/// the tuple.
pub fn tuple_score(model: &HypergramModel, g: &Hypergraph, nodes: &[NodeId]) -> f64 {
    if delta2(g, nodes) == 0 {
        return 0.0;
    }
    sigmoid(tuple_logit(model, nodes))
}

/// Loss and gradient of one tuple sample, which must pass the validity
/// filter. `d_rows` holds one center-row gradient per tuple position.
#[derive(Clone, Debug, PartialEq)]
pub struct TupleGrad {
    pub loss: f64,
    pub nodes: Vec<NodeId>,
    pub d_rows: Vec<Vec<f64>>,
    pub d_kernels: Vec<f64>,
    pub d_kernel_bias: Vec<f64>,
    pub d_dense_w: Vec<f64>,
    pub d_dense_b: f64,
}

pub fn tuple_loss_and_grads(model: &HypergramModel, sample: &TupleSample) -> TupleGrad {
    let head = Head::of(model);
    let mut rows = Vec::new();
    stack_rows(model, &sample.nodes, &mut rows);
    let mut fw = TupleForward::default();
    let z = head.forward(&rows, &mut fw);
    let mut acc = HeadGrad::zeros(model.dim, model.filter_count);
    let mut d_rows = vec![0.0; rows.len()];
    head.backward(logit_grad(z, sample.label), &rows, &fw, &mut acc, &mut d_rows);
    TupleGrad {
        loss: logit_loss(z, sample.label),
        nodes: sample.nodes.clone(),
        d_rows: d_rows.chunks(model.dim).map(<[f64]>::to_vec).collect(),
        d_kernels: acc.kernels,
        d_kernel_bias: acc.kernel_bias,
        d_dense_w: acc.dense_w,
        d_dense_b: acc.dense_b,
    }
}

/// Dense gradient with the same layout as [`HypergramModel::parameters`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub kernels: Vec<f64>,
    pub kernel_bias: Vec<f64>,
    pub dense_w: Vec<f64>,
    pub dense_b: f64,
}

impl Gradients {
    pub fn zeros(model: &HypergramModel) -> Self {
        Gradients {
            center: vec![0.0; model.center.len()],
            context: vec![0.0; model.context.len()],
            kernels: vec![0.0; model.kernels.len()],
            kernel_bias: vec![0.0; model.kernel_bias.len()],
            dense_w: vec![0.0; model.dense_w.len()],
            dense_b: 0.0,
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut p = Vec::new();
        p.extend_from_slice(&self.center);
        p.extend_from_slice(&self.context);
        p.extend_from_slice(&self.kernels);
        p.extend_from_slice(&self.kernel_bias);
        p.extend_from_slice(&self.dense_w);
        p.push(self.dense_b);
        p
    }

    fn add_pair(&mut self, dim: usize, pg: &PairGrad, scale: f64) {
        let (v, u) = (pg.center.index() * dim, pg.context.index() * dim);
        axpy(scale, &pg.d_center, &mut self.center[v..v + dim]);
        axpy(scale, &pg.d_context, &mut self.context[u..u + dim]);
    }

    fn add_tuple(&mut self, dim: usize, tg: &TupleGrad, scale: f64) {
        for (v, row) in tg.nodes.iter().zip(&tg.d_rows) {
            let o = v.index() * dim;
            axpy(scale, row, &mut self.center[o..o + dim]);
        }
        axpy(scale, &tg.d_kernels, &mut self.kernels);
        axpy(scale, &tg.d_kernel_bias, &mut self.kernel_bias);
        axpy(scale, &tg.d_dense_w, &mut self.dense_w);
        self.dense_b += scale * tg.d_dense_b;
    }
}

/// Joint objective split by channel. Each channel is the mean over positive
/// groups of the positive loss plus the summed losses of its negatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub pair: f64,
    pub tuple: f64,
    pub total: f64,
}

pub fn objective(model: &HypergramModel, pairs: &[PairGroup], tuples: &[TupleGroup], lambda: f64) -> Objective {
    objective_and_gradient(model, pairs, tuples, lambda).0
}

/// The joint objective and its gradient with respect to every parameter.
pub fn objective_and_gradient(
    model: &HypergramModel,
    pairs: &[PairGroup],
    tuples: &[TupleGroup],
    lambda: f64,
) -> (Objective, Gradients) {
    let mut grads = Gradients::zeros(model);
    let d = model.dim;
    let mut pair = 0.0;
    let pscale = 1.0 / pairs.len().max(1) as f64;
    for grp in pairs {
        for s in std::iter::once(&grp.positive).chain(&grp.negatives) {
            let pg = pair_loss_and_grads(model, s);
            pair += pg.loss;
            grads.add_pair(d, &pg, pscale);
        }
    }
    let mut tuple = 0.0;
    let tscale = 1.0 / tuples.len().max(1) as f64;
    if model.has_tuple_channel() {
        for grp in tuples {
            for s in std::iter::once(&grp.positive).chain(&grp.negatives) {
                let tg = tuple_loss_and_grads(model, s);
                tuple += tg.loss;
                grads.add_tuple(d, &tg, lambda * tscale);
            }
        }
    }
    let pair = pair * pscale;
    let tuple = tuple * tscale;
    (
        Objective {
            pair,
            tuple,
            total: pair + lambda * tuple,
        },
        grads,
    )
}
