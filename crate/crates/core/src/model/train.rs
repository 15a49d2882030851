use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;

use super::grad::{axpy, dot, logit_grad, logit_loss, Head, HeadGrad, TupleForward};
use super::samples::{delta2, draw_other, for_each_context, negative_tuples_into, tuple_windows, Label};
use super::{HypergramModel, TrainConfig};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeId};
use crate::seed;
use crate::walk::{Walk, WalkCorpus};

/// Floor of the decayed learning rate, relative to `lr_start`.
const LR_FLOOR: f64 = 1e-4;

/// Mean group losses seen during one epoch, measured just before each
/// group's update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub pair: f64,
    pub tuple: f64,
    /// `pair + lambda * tuple`.
    pub total: f64,
    pub pair_groups: u64,
    pub tuple_groups: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochLoss>,
}

impl TrainReport {
    pub fn first(&self) -> Option<&EpochLoss> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }
}

pub fn train(g: &Hypergraph, corpus: &WalkCorpus, config: &TrainConfig) -> Result<HypergramModel> {
    train_with_report(g, corpus, config).map(|(m, _)| m)
}

pub fn train_with_report(
    g: &Hypergraph,
    corpus: &WalkCorpus,
    config: &TrainConfig,
) -> Result<(HypergramModel, TrainReport)> {
    let mut model = HypergramModel::for_graph(g, config)?;
    if corpus.is_empty() {
        return Err(Error::Config("empty walk corpus".into()));
    }
    for w in &corpus.walks {
        for &v in &w.nodes {
            g.check_node(v)?;
        }
    }
    let mut offsets = Vec::with_capacity(corpus.len());
    let mut per_epoch = 0usize;
    for w in &corpus.walks {
        offsets.push(per_epoch);
        per_epoch += w.nodes.len();
    }
    let plan = Plan {
        g,
        config,
        tuple_on: model.has_tuple_channel() && config.lambda > 0.0,
        k: model.tuple_size,
        total: (per_epoch * config.epochs).max(1) as f64,
    };
    let atomic = config.parallel.then(|| AtomicStore::from_model(&model));
    let mut report = TrainReport::default();
    for epoch in 0..config.epochs {
        let base = epoch * per_epoch;
        let sums = match &atomic {
            None => {
                let mut store = ModelStore(&mut model);
                let mut scratch = Scratch::new(&plan, store.0);
                let mut sums = LossSums::default();
                for (wi, walk) in corpus.walks.iter().enumerate() {
                    let mut rng = seed::rng(seed::derive(config.seed, &[seed::stage::TRAIN, 1, epoch as u64, wi as u64]));
                    plan.run_walk(&mut store, walk, base + offsets[wi], &mut rng, &mut scratch, &mut sums)?;
                }
                sums
            }
            Some(shared) => corpus
                .walks
                .par_iter()
                .enumerate()
                .try_fold(
                    || (Scratch::new(&plan, &model), LossSums::default()),
                    |(mut scratch, mut sums), (wi, walk)| {
                        let mut rng =
                            seed::rng(seed::derive(config.seed, &[seed::stage::TRAIN, 1, epoch as u64, wi as u64]));
                        let mut store = shared;
                        plan.run_walk(&mut store, walk, base + offsets[wi], &mut rng, &mut scratch, &mut sums)?;
                        Ok::<_, Error>((scratch, sums))
                    },
                )
                .map(|r| r.map(|(_, s)| s))
                .try_reduce(LossSums::default, |a, b| Ok(a.merge(b)))?,
        };
        let loss = sums.finish(epoch, config.lambda);
        log::info!(
            "epoch {}: pair loss {:.6}, tuple loss {:.6}, total {:.6}",
            epoch + 1,
            loss.pair,
            loss.tuple,
            loss.total
        );
        report.epochs.push(loss);
    }
    if let Some(shared) = atomic {
        shared.write_to(&mut model);
    }
    if !model.is_finite() {
        return Err(Error::Diverged);
    }
    Ok((model, report))
}

#[derive(Clone, Copy, Debug, Default)]
struct LossSums {
    pair: f64,
    tuple: f64,
    pair_groups: u64,
    tuple_groups: u64,
}

impl LossSums {
    fn merge(self, o: LossSums) -> LossSums {
        LossSums {
            pair: self.pair + o.pair,
            tuple: self.tuple + o.tuple,
            pair_groups: self.pair_groups + o.pair_groups,
            tuple_groups: self.tuple_groups + o.tuple_groups,
        }
    }

    fn finish(self, epoch: usize, lambda: f64) -> EpochLoss {
        let pair = self.pair / self.pair_groups.max(1) as f64;
        let tuple = self.tuple / self.tuple_groups.max(1) as f64;
        EpochLoss {
            epoch,
            pair,
            tuple,
            total: pair + lambda * tuple,
            pair_groups: self.pair_groups,
            tuple_groups: self.tuple_groups,
        }
    }
}

/// Parameter storage the update loop reads from and writes to.
trait Store {
    fn center(&self, v: NodeId, out: &mut [f64]);
    fn context(&self, v: NodeId, out: &mut [f64]);
    fn add_center(&mut self, v: NodeId, scale: f64, delta: &[f64]);
    fn add_context(&mut self, v: NodeId, scale: f64, delta: &[f64]);
    fn head(&self, out: &mut OwnedHead);
    fn add_head(&mut self, scale: f64, grad: &HeadGrad);
}

#[derive(Clone, Debug, Default)]
struct OwnedHead {
    kernels: Vec<f64>,
    kernel_bias: Vec<f64>,
    dense_w: Vec<f64>,
    dense_b: f64,
}

impl OwnedHead {
    fn view(&self, dim: usize) -> Head<'_> {
        Head {
            dim,
            kernels: &self.kernels,
            kernel_bias: &self.kernel_bias,
            dense_w: &self.dense_w,
            dense_b: self.dense_b,
        }
    }
}

struct ModelStore<'a>(&'a mut HypergramModel);

impl Store for ModelStore<'_> {
    #[inline]
    fn center(&self, v: NodeId, out: &mut [f64]) {
        out.copy_from_slice(self.0.center_row(v));
    }
    #[inline]
    fn context(&self, v: NodeId, out: &mut [f64]) {
        out.copy_from_slice(self.0.context_row(v));
    }
    #[inline]
    fn add_center(&mut self, v: NodeId, scale: f64, delta: &[f64]) {
        let d = self.0.dim;
        axpy(scale, delta, &mut self.0.center[v.index() * d..(v.index() + 1) * d]);
    }
    #[inline]
    fn add_context(&mut self, v: NodeId, scale: f64, delta: &[f64]) {
        let d = self.0.dim;
        axpy(scale, delta, &mut self.0.context[v.index() * d..(v.index() + 1) * d]);
    }
    fn head(&self, out: &mut OwnedHead) {
        out.kernels.clone_from(&self.0.kernels);
        out.kernel_bias.clone_from(&self.0.kernel_bias);
        out.dense_w.clone_from(&self.0.dense_w);
        out.dense_b = self.0.dense_b;
    }
    fn add_head(&mut self, scale: f64, grad: &HeadGrad) {
        axpy(scale, &grad.kernels, &mut self.0.kernels);
        axpy(scale, &grad.kernel_bias, &mut self.0.kernel_bias);
        axpy(scale, &grad.dense_w, &mut self.0.dense_w);
        self.0.dense_b += scale * grad.dense_b;
    }
}

/// Shared parameters for lock-free updates. Reads and writes are relaxed;
/// concurrent adds to the same slot may lose one of the updates.
struct AtomicStore {
    dim: usize,
    center: Vec<AtomicU64>,
    context: Vec<AtomicU64>,
    kernels: Vec<AtomicU64>,
    kernel_bias: Vec<AtomicU64>,
    dense_w: Vec<AtomicU64>,
    dense_b: AtomicU64,
}

fn atomics(xs: &[f64]) -> Vec<AtomicU64> {
    xs.iter().map(|x| AtomicU64::new(x.to_bits())).collect()
}

#[inline]
fn load(xs: &[AtomicU64], out: &mut [f64]) {
    for (o, x) in out.iter_mut().zip(xs) {
        *o = f64::from_bits(x.load(Ordering::Relaxed));
    }
}

#[inline]
fn add(xs: &[AtomicU64], scale: f64, delta: &[f64]) {
    for (x, d) in xs.iter().zip(delta) {
        let cur = f64::from_bits(x.load(Ordering::Relaxed));
        x.store((cur + scale * d).to_bits(), Ordering::Relaxed);
    }
}

impl AtomicStore {
    fn from_model(m: &HypergramModel) -> Self {
        AtomicStore {
            dim: m.dim,
            center: atomics(&m.center),
            context: atomics(&m.context),
            kernels: atomics(&m.kernels),
            kernel_bias: atomics(&m.kernel_bias),
            dense_w: atomics(&m.dense_w),
            dense_b: AtomicU64::new(m.dense_b.to_bits()),
        }
    }

    fn write_to(&self, m: &mut HypergramModel) {
        load(&self.center, &mut m.center);
        load(&self.context, &mut m.context);
        load(&self.kernels, &mut m.kernels);
        load(&self.kernel_bias, &mut m.kernel_bias);
        load(&self.dense_w, &mut m.dense_w);
        m.dense_b = f64::from_bits(self.dense_b.load(Ordering::Relaxed));
    }

    fn row(&self, v: NodeId) -> std::ops::Range<usize> {
        v.index() * self.dim..(v.index() + 1) * self.dim
    }
}

impl Store for &AtomicStore {
    fn center(&self, v: NodeId, out: &mut [f64]) {
        load(&self.center[self.row(v)], out);
    }
    fn context(&self, v: NodeId, out: &mut [f64]) {
        load(&self.context[self.row(v)], out);
    }
    fn add_center(&mut self, v: NodeId, scale: f64, delta: &[f64]) {
        add(&self.center[self.row(v)], scale, delta);
    }
    fn add_context(&mut self, v: NodeId, scale: f64, delta: &[f64]) {
        add(&self.context[self.row(v)], scale, delta);
    }
    fn head(&self, out: &mut OwnedHead) {
        out.kernels.resize(self.kernels.len(), 0.0);
        out.kernel_bias.resize(self.kernel_bias.len(), 0.0);
        out.dense_w.resize(self.dense_w.len(), 0.0);
        load(&self.kernels, &mut out.kernels);
        load(&self.kernel_bias, &mut out.kernel_bias);
        load(&self.dense_w, &mut out.dense_w);
        out.dense_b = f64::from_bits(self.dense_b.load(Ordering::Relaxed));
    }
    fn add_head(&mut self, scale: f64, grad: &HeadGrad) {
        add(&self.kernels, scale, &grad.kernels);
        add(&self.kernel_bias, scale, &grad.kernel_bias);
        add(&self.dense_w, scale, &grad.dense_w);
        add(std::slice::from_ref(&self.dense_b), scale, &[grad.dense_b]);
    }
}

/// Per-worker buffers, reused across positions.
struct Scratch {
    fv: Vec<f64>,
    fu: Vec<f64>,
    gv: Vec<f64>,
    group: Vec<(NodeId, f64)>,
    tuples: Vec<NodeId>,
    rows: Vec<f64>,
    d_rows: Vec<f64>,
    fw: TupleForward,
    head: OwnedHead,
    head_grad: HeadGrad,
}

impl Scratch {
    fn new(plan: &Plan<'_>, m: &HypergramModel) -> Self {
        let d = m.dim;
        Scratch {
            fv: vec![0.0; d],
            fu: vec![0.0; d],
            gv: vec![0.0; d],
            group: Vec::with_capacity(plan.config.negatives + 1),
            tuples: Vec::new(),
            rows: Vec::new(),
            d_rows: Vec::new(),
            fw: TupleForward::default(),
            head: OwnedHead::default(),
            head_grad: HeadGrad::zeros(d, m.filter_count),
        }
    }
}

struct Plan<'a> {
    g: &'a Hypergraph,
    config: &'a TrainConfig,
    tuple_on: bool,
    k: usize,
    total: f64,
}

impl Plan<'_> {
    fn lr(&self, position: usize) -> f64 {
        self.config.lr_start * (1.0 - position as f64 / self.total).max(LR_FLOOR)
    }

    fn run_walk<S: Store, R: Rng>(
        &self,
        store: &mut S,
        walk: &Walk,
        first: usize,
        rng: &mut R,
        s: &mut Scratch,
        sums: &mut LossSums,
    ) -> Result<()> {
        let nodes = &walk.nodes;
        for i in 0..nodes.len() {
            let lr = self.lr(first + i);
            for_each_context(nodes, i, self.config.window, |j| {
                sums.pair += self.pair_group(store, nodes[i], nodes[j], lr, rng, s);
                sums.pair_groups += 1;
            });
            if self.tuple_on {
                for r in tuple_windows(nodes.len(), i, self.k).into_iter().flatten() {
                    let t = &nodes[r];
                    if delta2(self.g, t) == 1 {
                        sums.tuple += self.tuple_group(store, t, lr, rng, s)?;
                        sums.tuple_groups += 1;
                    }
                }
            }
        }
        Ok(())
    }

    /// One positive pair with its negatives: gradients at the current
    /// parameters, then one step. Returns the group loss.
    fn pair_group<S: Store, R: Rng>(&self, store: &mut S, v: NodeId, u: NodeId, lr: f64, rng: &mut R, s: &mut Scratch) -> f64 {
        let n = self.config.negatives;
        store.center(v, &mut s.fv);
        s.gv.fill(0.0);
        s.group.clear();
        s.group.push((u, 1.0));
        for _ in 0..n {
            s.group.push((draw_other(self.g.node_count(), v, rng), 0.0));
        }
        let mut loss = 0.0;
        for (ctx, y) in s.group.iter_mut() {
            let label = if *y == 1.0 { Label::Positive } else { Label::Negative };
            store.context(*ctx, &mut s.fu);
            let z = dot(&s.fv, &s.fu);
            loss += logit_loss(z, label);
            let g = logit_grad(z, label);
            axpy(g, &s.fu, &mut s.gv);
            *y = g;
        }
        for &(ctx, g) in &s.group {
            store.add_context(ctx, -lr * g, &s.fv);
        }
        store.add_center(v, -lr, &s.gv);
        loss
    }

    /// One positive tuple with its negatives, scaled by lambda.
    fn tuple_group<S: Store, R: Rng>(
        &self,
        store: &mut S,
        positive: &[NodeId],
        lr: f64,
        rng: &mut R,
        s: &mut Scratch,
    ) -> Result<f64> {
        let (k, d) = (self.k, s.fv.len());
        s.tuples.clear();
        s.tuples.extend_from_slice(positive);
        negative_tuples_into(
            self.g,
            positive,
            self.config.negatives,
            self.config.tuple_negative_rule,
            rng,
            &mut s.tuples,
        )?;
        store.head(&mut s.head);
        let head = s.head.view(d);
        s.head_grad.clear();
        let count = s.tuples.len() / k;
        s.d_rows.clear();
        s.d_rows.resize(count * k * d, 0.0);
        let mut loss = 0.0;
        for t in 0..count {
            let label = if t == 0 { Label::Positive } else { Label::Negative };
            s.rows.resize(k * d, 0.0);
            for j in 0..k {
                store.center(s.tuples[t * k + j], &mut s.rows[j * d..(j + 1) * d]);
            }
            let z = head.forward(&s.rows, &mut s.fw);
            loss += logit_loss(z, label);
            head.backward(
                logit_grad(z, label),
                &s.rows,
                &s.fw,
                &mut s.head_grad,
                &mut s.d_rows[t * k * d..(t + 1) * k * d],
            );
        }
        let step = -lr * self.config.lambda;
        for (idx, &v) in s.tuples.iter().enumerate() {
            store.add_center(v, step, &s.d_rows[idx * d..(idx + 1) * d]);
        }
        store.add_head(step, &s.head_grad);
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::fixtures::*;
    use crate::indecomposability::FactorEstimate;
    use crate::walk::{generate_corpus, WalkConfig};

    fn corpus(g: &Hypergraph) -> WalkCorpus {
        let wc = WalkConfig {
            walks_per_node: 4,
            walk_length: 12,
            seed: 3,
            ..WalkConfig::default()
        };
        generate_corpus(g, &FactorEstimate::neutral(g.type_count()), &wc).unwrap()
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            dim: 8,
            window: 3,
            epochs: 3,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn loss_decreases_on_fixture() {
        let g = three_edges();
        let c = corpus(&g);
        let config = TrainConfig { epochs: 200, ..cfg() };
        let (m, report) = train_with_report(&g, &c, &config).unwrap();
        assert!(m.is_finite());
        let (first, last) = (report.first().unwrap(), report.last().unwrap());
        assert!(last.total < first.total, "{first:?} -> {last:?}");
        assert!(first.tuple_groups > 0 && first.pair_groups > 0);
    }

    #[test]
    fn deterministic_mode_is_bitwise_reproducible() {
        let g = three_edges();
        let c = corpus(&g);
        let a = train(&g, &c, &cfg()).unwrap();
        let b = train(&g, &c, &cfg()).unwrap();
        assert_eq!(a.parameters(), b.parameters());
        let other = train(&g, &c, &TrainConfig { seed: 12, ..cfg() }).unwrap();
        assert_ne!(a.center, other.center);
    }

    #[test]
    fn zero_lambda_matches_pair_only_run() {
        let g = three_edges();
        let c = corpus(&g);
        let zero = train(&g, &c, &TrainConfig { lambda: 0.0, ..cfg() }).unwrap();
        let off = train(
            &g,
            &c,
            &TrainConfig {
                tuple_channel: false,
                ..cfg()
            },
        )
        .unwrap();
        assert_eq!(zero.center, off.center);
        assert_eq!(zero.context, off.context);
    }

    #[test]
    fn window_zero_trains_only_tuples() {
        let g = three_edges();
        let c = corpus(&g);
        let (m, report) = train_with_report(&g, &c, &TrainConfig { window: 0, ..cfg() }).unwrap();
        assert_eq!(report.first().unwrap().pair_groups, 0);
        assert!(report.first().unwrap().tuple_groups > 0);
        assert!(m.context.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn parallel_mode_trains() {
        let g = three_edges();
        let c = corpus(&g);
        let (m, report) = train_with_report(&g, &c, &TrainConfig { parallel: true, epochs: 50, ..cfg() }).unwrap();
        assert!(m.is_finite());
        assert!(report.last().unwrap().total < report.first().unwrap().total);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let g = three_edges();
        assert!(train(&g, &WalkCorpus { walks: vec![] }, &cfg()).is_err());
    }
}
