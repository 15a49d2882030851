//! Joint pairwise/tuplewise embedding model.
//!
//! The pairwise channel is skip-gram with negative sampling over center and
//! context embeddings. The tuplewise channel scores a whole candidate tuple:
//! each node's center embedding goes through `F` width-one convolution
//! filters with relu, the filter responses are max-pooled over tuple
//! positions, and a dense layer with a sigmoid yields a score in `[0, 1]`.
//! Both channels share the center embeddings.

mod grad;
mod io;
mod samples;
mod train;

pub use grad::{
    objective, objective_and_gradient, pair_loss_and_grads, sigmoid, softplus, tuple_logit,
    tuple_loss_and_grads, tuple_score, Gradients, Objective, PairGrad, TupleGrad,
};
pub use io::{read_checkpoint, read_embeddings, write_checkpoint, write_embeddings, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use samples::{
    delta2, extract_pairs, extract_tuples, negative_pairs, negative_tuples, Label, PairGroup,
    PairSample, TupleGroup, TupleNegativeRule, TupleSample,
};
pub use train::{train, train_with_report, EpochLoss, TrainReport};

use rand::Rng;

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeId, Uniformity};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lambda: f64,
    pub tuple_channel: bool,
    /// Number of convolution filters; `None` means `dim`.
    pub filters: Option<usize>,
    pub tuple_negative_rule: TupleNegativeRule,
    /// Lock-free multi-threaded updates; not bitwise reproducible.
    pub parallel: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 32,
            window: 6,
            negatives: 5,
            epochs: 5,
            lr_start: 0.025,
            lambda: 1.0,
            tuple_channel: true,
            filters: None,
            tuple_negative_rule: TupleNegativeRule::RedrawOthers,
            parallel: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Small graphs need more passes.
    pub fn default_epochs(edge_count: usize) -> usize {
        if edge_count <= 10_000 {
            15
        } else {
            5
        }
    }

    pub fn filter_count(&self) -> usize {
        self.filters.unwrap_or(self.dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Config("dim must be >= 1".into()));
        }
        if self.negatives < 1 {
            return Err(Error::Config("negatives must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be finite and >= 0".into()));
        }
        if !(self.lr_start > 0.0 && self.lr_start.is_finite()) {
            return Err(Error::Config("lr_start must be positive".into()));
        }
        if self.tuple_channel && self.filter_count() < 1 {
            return Err(Error::Config("filters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypergramModel {
    pub dim: usize,
    pub node_count: usize,
    /// Tuple length scored by the tuple channel; 0 when the channel is off.
    pub tuple_size: usize,
    pub filter_count: usize,
    /// Center embeddings, `node_count x dim`, row-major.
    pub center: Vec<f64>,
    /// Context embeddings, `node_count x dim`.
    pub context: Vec<f64>,
    /// Convolution kernels, `filter_count x dim`.
    pub kernels: Vec<f64>,
    pub kernel_bias: Vec<f64>,
    pub dense_w: Vec<f64>,
    pub dense_b: f64,
}

impl HypergramModel {
    /// Center rows uniform in `[-0.5/d, 0.5/d]`, context rows zero, kernels
    /// and dense weights uniform in `+-sqrt(6 / (d + F))`, biases zero.
    /// Center rows are drawn first so they do not depend on `filter_count`.
    pub fn new(node_count: usize, dim: usize, filter_count: usize, tuple_size: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let half = 0.5 / dim as f64;
        let center = (0..node_count * dim).map(|_| rng.gen_range(-half..=half)).collect();
        let limit = if filter_count > 0 {
            (6.0 / (dim + filter_count) as f64).sqrt()
        } else {
            0.0
        };
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-limit..=limit)).collect() };
        let kernels = draw(filter_count * dim);
        let dense_w = draw(filter_count);
        HypergramModel {
            dim,
            node_count,
            tuple_size,
            filter_count,
            center,
            context: vec![0.0; node_count * dim],
            kernels,
            kernel_bias: vec![0.0; filter_count],
            dense_w,
            dense_b: 0.0,
        }
    }

    /// Builds the untrained model `config` describes for `g`.
    pub fn for_graph(g: &Hypergraph, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let (k, filters) = if config.tuple_channel {
            match g.uniformity() {
                Uniformity::Uniform(k) => (k, config.filter_count()),
                Uniformity::NonUniform => return Err(Error::NonUniformTupleChannel),
            }
        } else {
            (0, 0)
        };
        Ok(HypergramModel::new(
            g.node_count(),
            config.dim,
            filters,
            k,
            seed::derive(config.seed, &[seed::stage::TRAIN, 0]),
        ))
    }

    pub fn has_tuple_channel(&self) -> bool {
        self.tuple_size > 0 && self.filter_count > 0
    }

    #[inline]
    pub fn center_row(&self, v: NodeId) -> &[f64] {
        &self.center[v.index() * self.dim..(v.index() + 1) * self.dim]
    }

    #[inline]
    pub fn context_row(&self, v: NodeId) -> &[f64] {
        &self.context[v.index() * self.dim..(v.index() + 1) * self.dim]
    }

    #[inline]
    pub fn kernel_row(&self, f: usize) -> &[f64] {
        &self.kernels[f * self.dim..(f + 1) * self.dim]
    }

    pub fn parameter_count(&self) -> usize {
        self.center.len()
            + self.context.len()
            + self.kernels.len()
            + self.kernel_bias.len()
            + self.dense_w.len()
            + 1
    }

    pub fn is_finite(&self) -> bool {
        self.center
            .iter()
            .chain(&self.context)
            .chain(&self.kernels)
            .chain(&self.kernel_bias)
            .chain(&self.dense_w)
            .all(|x| x.is_finite())
            && self.dense_b.is_finite()
    }

    /// Flat view of every parameter in checkpoint order.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        p.extend_from_slice(&self.center);
        p.extend_from_slice(&self.context);
        p.extend_from_slice(&self.kernels);
        p.extend_from_slice(&self.kernel_bias);
        p.extend_from_slice(&self.dense_w);
        p.push(self.dense_b);
        p
    }

    /// Mutable access to the `i`-th parameter in checkpoint order.
    pub fn parameter_mut(&mut self, mut i: usize) -> &mut f64 {
        for block in [
            &mut self.center,
            &mut self.context,
            &mut self.kernels,
            &mut self.kernel_bias,
            &mut self.dense_w,
        ] {
            if i < block.len() {
                return &mut block[i];
            }
            i -= block.len();
        }
        assert_eq!(i, 0, "parameter index out of range");
        &mut self.dense_b
    }
}
