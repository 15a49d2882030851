//! Run configuration: built-in defaults, overridden by a `key = value`
//! file, overridden by command-line flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::{default_eta_grid, DEFAULT_CANDIDATE_CAP, DEFAULT_HIDE_FRACTION};
use crate::indecomposability::DEFAULT_MULTIPLIER;
use crate::model::{TrainConfig, TupleNegativeRule};
use crate::walk::WalkConfig;

/// Model variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Hyper-path walks, joint pairwise and tuplewise training.
    #[default]
    Hphg,
    /// Hyper-path walks, pairwise channel only.
    Hpsg,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hphg" => Ok(Mode::Hphg),
            "hpsg" => Ok(Mode::Hpsg),
            _ => Err(Error::Config(format!("unknown mode `{s}` (expected hphg or hpsg)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Hphg => "hphg",
            Mode::Hpsg => "hpsg",
        })
    }
}

impl FromStr for TupleNegativeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "redraw_others" => Ok(TupleNegativeRule::RedrawOthers),
            "replace_anchor" => Ok(TupleNegativeRule::ReplaceAnchor),
            _ => Err(Error::Config(format!(
                "unknown tuple negative rule `{s}` (expected redraw_others or replace_anchor)"
            ))),
        }
    }
}

impl fmt::Display for TupleNegativeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TupleNegativeRule::RedrawOthers => "redraw_others",
            TupleNegativeRule::ReplaceAnchor => "replace_anchor",
        })
    }
}

/// Every tunable of a pipeline run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Root seed; each stage derives its own stream from it.
    pub seed: u64,
    pub multiplier: usize,
    pub walks: usize,
    pub walk_length: usize,
    pub alpha: f64,
    pub presample: Option<usize>,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    /// `None` picks 15 for graphs up to 10k edges and 5 above.
    pub epochs: Option<usize>,
    pub lr: f64,
    pub lambda: f64,
    pub filters: Option<usize>,
    pub tuple_negatives: TupleNegativeRule,
    pub parallel: bool,
    pub hide_fraction: f64,
    pub eta_grid: Vec<f64>,
    pub candidate_cap: u128,
}

impl Default for RunConfig {
    fn default() -> Self {
        let w = WalkConfig::default();
        let t = TrainConfig::default();
        RunConfig {
            mode: Mode::Hphg,
            seed: 0,
            multiplier: DEFAULT_MULTIPLIER,
            walks: w.walks_per_node,
            walk_length: w.walk_length,
            alpha: w.alpha,
            presample: w.presample_cap,
            dim: t.dim,
            window: t.window,
            negatives: t.negatives,
            epochs: None,
            lr: t.lr_start,
            lambda: t.lambda,
            filters: t.filters,
            tuple_negatives: t.tuple_negative_rule,
            parallel: t.parallel,
            hide_fraction: DEFAULT_HIDE_FRACTION,
            eta_grid: default_eta_grid(),
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value `{value}` for `{key}`: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    match value {
        "" | "none" | "auto" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn show_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "mode",
        "seed",
        "multiplier",
        "walks",
        "walk_length",
        "alpha",
        "presample",
        "dim",
        "window",
        "negatives",
        "epochs",
        "lr",
        "lambda",
        "filters",
        "tuple_negatives",
        "parallel",
        "hide_fraction",
        "eta_grid",
        "candidate_cap",
    ];

    /// Sets one field from its textual form. Dashes in `key` are read as
    /// underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "mode" => self.mode = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "multiplier" => self.multiplier = parse(k, value)?,
            "walks" => self.walks = parse(k, value)?,
            "walk_length" => self.walk_length = parse(k, value)?,
            "alpha" => self.alpha = parse(k, value)?,
            "presample" => self.presample = parse_opt(k, value)?,
            "dim" => self.dim = parse(k, value)?,
            "window" => self.window = parse(k, value)?,
            "negatives" => self.negatives = parse(k, value)?,
            "epochs" => self.epochs = parse_opt(k, value)?,
            "lr" => self.lr = parse(k, value)?,
            "lambda" => self.lambda = parse(k, value)?,
            "filters" => self.filters = parse_opt(k, value)?,
            "tuple_negatives" => self.tuple_negatives = parse(k, value)?,
            "parallel" => self.parallel = parse(k, value)?,
            "hide_fraction" => self.hide_fraction = parse(k, value)?,
            "eta_grid" => {
                self.eta_grid = value
                    .split(',')
                    .map(|v| parse(k, v.trim()))
                    .collect::<Result<_>>()?
            }
            "candidate_cap" => self.candidate_cap = parse::<f64>(k, value).and_then(|x| {
                if x >= 1.0 && x.is_finite() {
                    Ok(x as u128)
                } else {
                    Err(Error::Config(format!("bad value `{value}` for `candidate_cap`")))
                }
            })?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file: one entry per line, `#` starts a
    /// comment, blank lines are ignored.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(m) => Error::Parse { line: i + 1, message: m },
                e => e,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_str(&std::fs::read_to_string(path)?)
    }

    /// Every resolved value, in [`RunConfig::KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let grid: Vec<String> = self.eta_grid.iter().map(f64::to_string).collect();
        let values = [
            self.mode.to_string(),
            self.seed.to_string(),
            self.multiplier.to_string(),
            self.walks.to_string(),
            self.walk_length.to_string(),
            self.alpha.to_string(),
            show_opt(&self.presample),
            self.dim.to_string(),
            self.window.to_string(),
            self.negatives.to_string(),
            show_opt(&self.epochs),
            self.lr.to_string(),
            self.lambda.to_string(),
            show_opt(&self.filters),
            self.tuple_negatives.to_string(),
            self.parallel.to_string(),
            self.hide_fraction.to_string(),
            grid.join(","),
            self.candidate_cap.to_string(),
        ];
        Self::KEYS.iter().copied().zip(values).collect()
    }

    pub fn log(&self) {
        for (k, v) in self.entries() {
            log::info!("config {k} = {v}");
        }
    }

    pub fn walk_config(&self, seed: u64) -> WalkConfig {
        WalkConfig {
            walks_per_node: self.walks,
            walk_length: self.walk_length,
            alpha: self.alpha,
            presample_cap: self.presample,
            seed,
        }
    }

    pub fn train_config(&self, edge_count: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs.unwrap_or_else(|| TrainConfig::default_epochs(edge_count)),
            lr_start: self.lr,
            lambda: self.lambda,
            tuple_channel: self.mode == Mode::Hphg,
            filters: self.filters,
            tuple_negative_rule: self.tuple_negatives,
            parallel: self.parallel,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.multiplier < 1 {
            return Err(Error::InvalidMultiplier(self.multiplier));
        }
        if !(self.hide_fraction > 0.0 && self.hide_fraction < 1.0) {
            return Err(Error::Config("hide_fraction must be in (0, 1)".into()));
        }
        if self.eta_grid.is_empty() || self.eta_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Config("eta_grid values must be in (0, 1]".into()));
        }
        self.walk_config(0).validate()?;
        self.train_config(0, 0).validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_recipe() {
        let c = RunConfig::default();
        assert_eq!((c.dim, c.window, c.walk_length, c.walks, c.negatives), (32, 6, 80, 10, 5));
        assert_eq!((c.alpha, c.lambda, c.lr), (100.0, 1.0, 0.025));
        assert_eq!(c.train_config(1436, 0).epochs, 15);
        assert_eq!(c.train_config(20_000, 0).epochs, 5);
        c.validate().unwrap();
    }

    #[test]
    fn file_overrides_defaults() {
        let mut c = RunConfig::default();
        c.apply_str("# recipe\nmode = hpsg\nwalk-length=40 # short\n\nepochs = 3\neta_grid = 0.5, 1\n")
            .unwrap();
        assert_eq!(c.mode, Mode::Hpsg);
        assert_eq!(c.walk_length, 40);
        assert_eq!(c.epochs, Some(3));
        assert_eq!(c.eta_grid, vec![0.5, 1.0]);
        assert!(!c.train_config(10, 0).tuple_channel);
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        let mut c = RunConfig::default();
        let e = c.apply_str("dim = 8\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert!(c.apply_str("dim 8\n").is_err());
        assert!(c.set("dim", "eight").is_err());
        assert!(c.set("mode", "deepwalk").is_err());
    }

    #[test]
    fn entries_round_trip() {
        let mut c = RunConfig::default();
        c.set("presample", "50").unwrap();
        c.set("tuple_negatives", "replace-anchor").unwrap();
        c.set("candidate_cap", "1e6").unwrap();
        let mut back = RunConfig::default();
        for (k, v) in c.entries() {
            back.set(k, &v).unwrap();
        }
        assert_eq!(back, c);
    }
}
