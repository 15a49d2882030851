use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hypergram::config::RunConfig;
use hypergram::evaluation::EvalReport;
use hypergram::model::{read_checkpoint, write_checkpoint, write_embeddings, HypergramModel};
use hypergram::pipeline::{self, ScorerKind};
use hypergram::{synth, Hypergraph, Result};

const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Hyper-path random walks and joint pairwise/tuplewise embeddings for
/// hyper-networks.
#[derive(Parser, Debug)]
#[command(name = "hypergram", version, about)]
struct Cli {
    /// Worker threads for walks, factor estimation, parallel training and
    /// scoring. Defaults to one per core.
    #[arg(long, global = true, env = "HYPERGRAM_THREADS")]
    threads: Option<usize>,

    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the indecomposable factor of every node type.
    Factor {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Generate walks and train a model; writes a checkpoint.
    Train {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the binary checkpoint.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also write the center embeddings as text.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Train on the link-prediction training edges only, so the
        /// checkpoint can be evaluated with `link-pred`.
        #[arg(long)]
        holdout: bool,
        /// Also dump the walk corpus, one walk per line.
        #[arg(long)]
        walks_out: Option<PathBuf>,
    },
    /// Hide edges, generate negatives and report AUC as `metric,auc` CSV.
    LinkPred {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Model trained with `train --holdout` under the same seed and
        /// hide fraction. Trained on the fly when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Report pairwise metrics for tuplewise models too.
        #[arg(long)]
        all_metrics: bool,
        /// Score with the true edge set instead of a model.
        #[arg(long)]
        oracle_self_test: bool,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank every candidate edge and report the ACC curve as `eta,acc` CSV.
    Reconstruct {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Model trained on the full graph. Trained on the fly when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// tuple, l1, l2 or cos. Defaults to tuple for hphg models, cos
        /// otherwise.
        #[arg(long)]
        scorer: Option<String>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a checkpoint's center embeddings as text.
    Export {
        #[command(flatten)]
        graph: GraphArgs,
        /// Checkpoint to read.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic hypergraph.
    Generate {
        #[arg(long, value_enum)]
        kind: SynthKind,
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge list destination.
        #[arg(long)]
        edges_out: PathBuf,
        /// Node type destination.
        #[arg(long)]
        types_out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKind {
    /// 1000/1000/10 nodes, 5000 uniformly random edges.
    Random,
    /// Planted blocks with 146/70/5 nodes and 1436 edges.
    Planted,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// One hyperedge per line, node labels separated by whitespace.
    #[arg(long)]
    edges: PathBuf,
    /// One `label type` pair per line.
    #[arg(long)]
    types: PathBuf,
}

impl GraphArgs {
    fn load(&self) -> Result<Hypergraph> {
        let g = Hypergraph::load(&self.edges, &self.types)?;
        log::info!(
            "loaded {} nodes, {} types, {} edges ({} duplicates dropped)",
            g.node_count(),
            g.type_count(),
            g.edge_count(),
            g.duplicate_edges()
        );
        Ok(g)
    }
}

/// Flags mirroring the config keys; each overrides the config file.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// `key = value` file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// hphg (tuple channel on) or hpsg (pairwise only).
    #[arg(long)]
    mode: Option<String>,
    /// Root seed; every stage derives its own stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Random edges per real edge in the factor estimate.
    #[arg(long)]
    multiplier: Option<usize>,
    /// Walks started from every node.
    #[arg(long)]
    walks: Option<usize>,
    /// Nodes per walk.
    #[arg(long)]
    walk_length: Option<usize>,
    /// Hyper-path bias; 0 gives unbiased walks.
    #[arg(long)]
    alpha: Option<f64>,
    /// Weigh at most this many random neighbors per step.
    #[arg(long)]
    presample: Option<usize>,
    /// Embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Skip-gram window; 0 disables the pairwise channel.
    #[arg(long)]
    window: Option<usize>,
    /// Negatives per positive pair or tuple.
    #[arg(long = "neg", alias = "negatives")]
    negatives: Option<usize>,
    /// Passes over the corpus; defaults from the edge count.
    #[arg(long)]
    epochs: Option<usize>,
    /// Initial learning rate, decayed linearly.
    #[arg(long)]
    lr: Option<f64>,
    /// Weight of the tuplewise loss.
    #[arg(long)]
    lambda: Option<f64>,
    /// Convolution filters; defaults to `dim`.
    #[arg(long)]
    filters: Option<usize>,
    /// redraw_others or replace_anchor.
    #[arg(long)]
    tuple_negatives: Option<String>,
    /// Lock-free multi-threaded training (not bitwise reproducible).
    #[arg(long)]
    parallel: bool,
    /// Share of edges hidden for link prediction.
    #[arg(long)]
    hide_fraction: Option<f64>,
    /// Comma-separated fractions for the ACC curve.
    #[arg(long)]
    eta_grid: Option<String>,
    /// Largest candidate space `reconstruct` will enumerate.
    #[arg(long)]
    candidate_cap: Option<f64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags: [(&str, Option<String>); 18] = [
            ("mode", self.mode.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("multiplier", self.multiplier.map(|v| v.to_string())),
            ("walks", self.walks.map(|v| v.to_string())),
            ("walk_length", self.walk_length.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("presample", self.presample.map(|v| v.to_string())),
            ("dim", self.dim.map(|v| v.to_string())),
            ("window", self.window.map(|v| v.to_string())),
            ("negatives", self.negatives.map(|v| v.to_string())),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("lr", self.lr.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("filters", self.filters.map(|v| v.to_string())),
            ("tuple_negatives", self.tuple_negatives.clone()),
            ("hide_fraction", self.hide_fraction.map(|v| v.to_string())),
            ("eta_grid", self.eta_grid.clone()),
            ("candidate_cap", self.candidate_cap.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.parallel {
            cfg.parallel = true;
        }
        cfg.validate()?;
        cfg.log();
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs `f` against `path`, or stdout when absent.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<HypergramModel> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

fn log_runtimes(report: &EvalReport) {
    for (stage, d) in &report.runtimes {
        log::info!("{stage} took {:.3}s", d.as_secs_f64());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Factor { graph, run, csv } => {
            let cfg = run.resolve()?;
            let g = graph.load()?;
            let f = pipeline::estimate_factors(&g, &cfg)?;
            for w in &f.warnings {
                log::warn!("{w}");
            }
            let rows: Vec<(String, f64, f64, f64)> = (0..g.type_count())
                .map(|t| {
                    (
                        g.type_names()[t].clone(),
                        f.xi[t],
                        f.numerator_rate[t],
                        f.denominator_rate[t],
                    )
                })
                .collect();
            let mut out = io::stdout().lock();
            writeln!(out, "type\txi\trandom_rate\tobserved_rate")?;
            for (name, xi, num, den) in &rows {
                writeln!(out, "{name}\t{xi:.6}\t{num:.6}\t{den:.6}")?;
            }
            if let Some(path) = csv {
                let mut w = create(&path)?;
                writeln!(w, "type,xi,random_rate,observed_rate")?;
                for (name, xi, num, den) in &rows {
                    writeln!(w, "{name},{xi},{num},{den}")?;
                }
                w.flush()?;
            }
        }
        Command::Train {
            graph,
            run,
            checkpoint,
            embeddings,
            holdout,
            walks_out,
        } => {
            let cfg = run.resolve()?;
            let full = graph.load()?;
            let g = if holdout {
                pipeline::split(&full, &cfg)?.train_graph(&full)?
            } else {
                full
            };
            let fit = pipeline::fit(&g, &cfg)?;
            for (stage, d) in &fit.runtimes {
                log::info!("{stage} took {:.3}s", d.as_secs_f64());
            }
            write_checkpoint(&fit.model, create(&checkpoint)?)?;
            log::info!("wrote checkpoint {}", checkpoint.display());
            if let Some(path) = embeddings {
                write_embeddings(&fit.model, &g, create(&path)?)?;
            }
            if let Some(path) = walks_out {
                let mut w = create(&path)?;
                fit.corpus.write(&g, &mut w)?;
                w.flush()?;
            }
        }
        Command::LinkPred {
            graph,
            run,
            checkpoint,
            all_metrics,
            oracle_self_test,
            out,
        } => {
            let cfg = run.resolve()?;
            let g = graph.load()?;
            let report = if oracle_self_test {
                pipeline::oracle_link_prediction(&g, &cfg)?
            } else {
                let model = checkpoint.as_deref().map(load_checkpoint).transpose()?;
                pipeline::link_prediction(&g, &cfg, model.as_ref(), all_metrics)?
            };
            log_runtimes(&report);
            with_output(out.as_deref(), |w| report.write_auc_csv(w))?;
        }
        Command::Reconstruct {
            graph,
            run,
            checkpoint,
            scorer,
            out,
        } => {
            let cfg = run.resolve()?;
            let g = graph.load()?;
            let model = match checkpoint {
                Some(p) => load_checkpoint(&p)?,
                None => pipeline::fit(&g, &cfg)?.model,
            };
            let kind = match scorer {
                Some(s) => s.parse()?,
                None => ScorerKind::default_for(&model),
            };
            let report = pipeline::reconstruction(&g, &cfg, &model, kind)?;
            log_runtimes(&report);
            with_output(out.as_deref(), |w| report.write_acc_csv(w))?;
        }
        Command::Export { graph, checkpoint, out } => {
            let g = graph.load()?;
            let model = load_checkpoint(&checkpoint)?;
            match out {
                Some(p) => write_embeddings(&model, &g, create(&p)?)?,
                None => write_embeddings(&model, &g, io::stdout().lock())?,
            }
        }
        Command::Generate {
            kind,
            seed,
            edges_out,
            types_out,
        } => {
            let g = match kind {
                SynthKind::Random => synth::random_baseline(seed),
                SynthKind::Planted => synth::planted(&synth::PlantedConfig::default(), seed)?,
            };
            let mut e = create(&edges_out)?;
            g.write_edges(&mut e)?;
            e.flush()?;
            let mut t = create(&types_out)?;
            g.write_types(&mut t)?;
            t.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_RUNTIME })
        }
    }
}

