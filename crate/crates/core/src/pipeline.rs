//! End-to-end orchestration shared by the command line and the C ABI.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluation::{
    link_prediction_auc, make_split, reconstruct, EdgeScorer, Embeddings, EvalReport, EvalSplit, OracleScorer,
    PairwiseMetric, PairwiseScorer, TupleScorer,
};
use crate::hypergraph::Hypergraph;
use crate::indecomposability::{indecomposable_factor, FactorEstimate};
use crate::model::{train_with_report, HypergramModel, TrainReport};
use crate::seed::{self, stage};
use crate::walk::{generate_corpus, WalkCorpus};

/// How candidate edges are scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorerKind {
    Tuple,
    Pairwise(PairwiseMetric),
}

impl ScorerKind {
    /// Tuplewise when the model has a tuple channel, cosine otherwise.
    pub fn default_for(model: &HypergramModel) -> Self {
        if model.has_tuple_channel() {
            ScorerKind::Tuple
        } else {
            ScorerKind::Pairwise(PairwiseMetric::Cosine)
        }
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("tuple") {
            Ok(ScorerKind::Tuple)
        } else {
            s.parse().map(ScorerKind::Pairwise)
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerKind::Tuple => f.write_str("TUPLE"),
            ScorerKind::Pairwise(m) => m.fmt(f),
        }
    }
}

/// Boxed scorer of `kind` over `model`.
pub fn scorer<'a>(kind: ScorerKind, model: &'a HypergramModel, g: &'a Hypergraph) -> Result<Box<dyn EdgeScorer + 'a>> {
    if model.node_count != g.node_count() {
        return Err(Error::DimensionMismatch(g.node_count(), model.node_count));
    }
    Ok(match kind {
        ScorerKind::Tuple => {
            if !model.has_tuple_channel() {
                return Err(Error::Config("tuple scorer needs a model trained in hphg mode".into()));
            }
            Box::new(TupleScorer { model, graph: g })
        }
        ScorerKind::Pairwise(metric) => Box::new(PairwiseScorer {
            embeddings: Embeddings::of(model),
            metric,
        }),
    })
}

pub fn estimate_factors(g: &Hypergraph, cfg: &RunConfig) -> Result<FactorEstimate> {
    indecomposable_factor(g, cfg.multiplier, seed::derive(cfg.seed, &[stage::FACTOR]))
}

/// Degree above which unsampled walk steps get slow.
const PRESAMPLE_HINT_DEGREE: usize = 10_000;

/// Everything produced by one training run.
#[derive(Clone, Debug)]
pub struct Fit {
    pub factors: FactorEstimate,
    pub corpus: WalkCorpus,
    pub model: HypergramModel,
    pub report: TrainReport,
    pub runtimes: Vec<(String, Duration)>,
}

/// Factor estimation, walk generation and training on `g`.
pub fn fit(g: &Hypergraph, cfg: &RunConfig) -> Result<Fit> {
    cfg.validate()?;
    let mut runtimes = Vec::new();
    let t = Instant::now();
    let factors = estimate_factors(g, cfg)?;
    for w in &factors.warnings {
        log::warn!("{w}");
    }
    runtimes.push(("factor".to_string(), t.elapsed()));
    let max_degree = (0..g.node_count()).map(|v| g.degree(v.into())).max().unwrap_or(0);
    if cfg.presample.is_none() && max_degree > PRESAMPLE_HINT_DEGREE {
        log::warn!("max degree {max_degree} without presample; consider --presample 1000 --alpha 20");
    }
    let t = Instant::now();
    let corpus = generate_corpus(g, &factors, &cfg.walk_config(seed::derive(cfg.seed, &[stage::WALKS])))?;
    log::info!("generated {} walks, {} positions", corpus.len(), corpus.total_positions());
    runtimes.push(("walks".to_string(), t.elapsed()));
    let t = Instant::now();
    let (model, report) = train_with_report(
        g,
        &corpus,
        &cfg.train_config(g.edge_count(), seed::derive(cfg.seed, &[stage::TRAIN])),
    )?;
    runtimes.push(("train".to_string(), t.elapsed()));
    Ok(Fit {
        factors,
        corpus,
        model,
        report,
        runtimes,
    })
}

/// The held-out split `cfg` describes.
pub fn split(g: &Hypergraph, cfg: &RunConfig) -> Result<EvalSplit> {
    make_split(g, cfg.hide_fraction, cfg.seed)
}

/// Link prediction on the split of `g`. With `model` absent a model is fit
/// on the training part first. Tuplewise models report one `TUPLE` row
/// unless `all_metrics` is set; pairwise models report L1, L2 and COS.
pub fn link_prediction(
    g: &Hypergraph,
    cfg: &RunConfig,
    model: Option<&HypergramModel>,
    all_metrics: bool,
) -> Result<EvalReport> {
    let t = Instant::now();
    let sp = split(g, cfg)?;
    let train_graph = sp.train_graph(g)?;
    let mut report = EvalReport::default();
    report.runtimes.push(("split".into(), t.elapsed()));
    let fitted;
    let model = match model {
        Some(m) => m,
        None => {
            fitted = fit(&train_graph, cfg)?;
            report.runtimes.extend(fitted.runtimes.iter().cloned());
            &fitted.model
        }
    };
    let t = Instant::now();
    let mut kinds = Vec::new();
    if model.has_tuple_channel() {
        kinds.push(ScorerKind::Tuple);
    }
    if all_metrics || !model.has_tuple_channel() {
        kinds.extend(PairwiseMetric::ALL.map(ScorerKind::Pairwise));
    }
    for kind in kinds {
        let s = scorer(kind, model, &train_graph)?;
        report.auc_by_metric.push((kind.to_string(), link_prediction_auc(s.as_ref(), &sp)?));
    }
    report.runtimes.push(("score".into(), t.elapsed()));
    Ok(report)
}

/// Link prediction with a scorer that knows the true edges. Always 1.
pub fn oracle_link_prediction(g: &Hypergraph, cfg: &RunConfig) -> Result<EvalReport> {
    let sp = split(g, cfg)?;
    Ok(EvalReport {
        auc_by_metric: vec![("ORACLE".into(), link_prediction_auc(&OracleScorer(g), &sp)?)],
        ..EvalReport::default()
    })
}

/// ACC curve of `model` on `g`.
pub fn reconstruction(g: &Hypergraph, cfg: &RunConfig, model: &HypergramModel, kind: ScorerKind) -> Result<EvalReport> {
    let t = Instant::now();
    let s = scorer(kind, model, g)?;
    let acc_curve = reconstruct(g, s.as_ref(), &cfg.eta_grid, cfg.candidate_cap)?;
    Ok(EvalReport {
        acc_curve,
        runtimes: vec![("reconstruct".into(), t.elapsed())],
        ..EvalReport::default()
    })
}
