//! Run configuration in a small `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! seed = 7
//! budget.indecisive = 1000
//! bounds.weight = -1, 1
//! models = min-delta, max-delta, logit
//! ```
//!
//! Keys may appear at most once. Intervals are written `lo, hi`. Unset keys
//! keep their defaults (see [`RunConfig::default`]).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::Mode;
use crate::error::{Error, Result};
use crate::evaluate::{POPULATION_VOTERS, REPRESENTATIVE_VOTERS};
use crate::fitting::{Bounds, Interval, SearchOptions};
use crate::item::{FeatureRange, Normalizer};
use crate::model::{MaxUForm, ModelKind, StrictVariant};
use crate::stats::DEFAULT_ALPHA;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Model kinds fitted by `evaluate`; `max-u` uses `maxu_variant`.
    pub models: Vec<ModelKind>,
    pub budget_indecisive: usize,
    pub budget_strict: usize,
    pub budget_mixture: usize,
    pub mixture_k: usize,
    pub bounds: Bounds,
    pub strict_variant: StrictVariant,
    pub maxu_variant: MaxUForm,
    pub normalizer: Normalizer,
    pub representatives_voters: usize,
    pub population_voters: usize,
    pub alpha: f64,
    pub correction: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            models: ModelKind::all(MaxUForm::default()).to_vec(),
            budget_indecisive: 1000,
            budget_strict: 5000,
            budget_mixture: 100_000,
            mixture_k: 2,
            bounds: Bounds::default(),
            strict_variant: StrictVariant::default(),
            maxu_variant: MaxUForm::default(),
            normalizer: Normalizer::default(),
            representatives_voters: REPRESENTATIVE_VOTERS,
            population_voters: POPULATION_VOTERS,
            alpha: DEFAULT_ALPHA,
            correction: false,
            out: None,
        }
    }
}

fn bad(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| bad(line, format!("invalid value {value:?} for {key}")))
}

fn parse_pair(line: usize, key: &str, value: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi] => Ok((parse_value(line, key, lo)?, parse_value(line, key, hi)?)),
        _ => Err(bad(line, format!("{key} expects two numbers `lo, hi`"))),
    }
}

fn parse_interval(line: usize, key: &str, value: &str) -> Result<Interval> {
    let (lo, hi) = parse_pair(line, key, value)?;
    Interval::new(lo, hi).map_err(|e| bad(line, e.to_string()))
}

fn parse_range(line: usize, key: &str, value: &str) -> Result<FeatureRange> {
    let (lo, hi) = parse_pair(line, key, value)?;
    FeatureRange::new(lo, hi).map_err(|e| bad(line, e.to_string()))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        let mut models: Option<(usize, String)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected `key = value`, found {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(line, format!("duplicate key {key}")));
            }
            match key {
                "seed" => cfg.seed = parse_value(line, key, value)?,
                "models" => models = Some((line, value.to_string())),
                "budget.indecisive" => cfg.budget_indecisive = parse_value(line, key, value)?,
                "budget.strict" => cfg.budget_strict = parse_value(line, key, value)?,
                "budget.mixture" => cfg.budget_mixture = parse_value(line, key, value)?,
                "mixture.k" => cfg.mixture_k = parse_value(line, key, value)?,
                "bounds.weight" => cfg.bounds.weight = parse_interval(line, key, value)?,
                "bounds.difference_threshold" => {
                    cfg.bounds.difference_threshold = parse_interval(line, key, value)?
                }
                "bounds.level_threshold" => {
                    cfg.bounds.level_threshold = parse_interval(line, key, value)?
                }
                "bounds.q" => cfg.bounds.q = parse_interval(line, key, value)?,
                "bounds.mixture_weight" => {
                    cfg.bounds.mixture_weight = parse_interval(line, key, value)?
                }
                "strict_variant" => {
                    cfg.strict_variant = StrictVariant::from_slug(value)
                        .ok_or_else(|| bad(line, format!("unknown strict variant {value:?}")))?
                }
                "maxu_variant" => {
                    cfg.maxu_variant = MaxUForm::from_slug(value)
                        .ok_or_else(|| bad(line, format!("unknown Max-U variant {value:?}")))?
                }
                "normalize.age" => cfg.normalizer.age = parse_range(line, key, value)?,
                "normalize.drinks" => cfg.normalizer.drinks = parse_range(line, key, value)?,
                "normalize.dependents" => {
                    cfg.normalizer.dependents = parse_range(line, key, value)?
                }
                "train_voters.representatives" => {
                    cfg.representatives_voters = parse_value(line, key, value)?
                }
                "train_voters.population" => {
                    cfg.population_voters = parse_value(line, key, value)?
                }
                "alpha" => cfg.alpha = parse_value(line, key, value)?,
                "correction" => cfg.correction = parse_value(line, key, value)?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                _ => return Err(bad(line, format!("unknown key {key}"))),
            }
        }
        // Model slugs are resolved last so `max-u` picks up `maxu_variant`
        // wherever it appears in the file.
        if let Some((line, list)) = models {
            cfg.models = list
                .split(',')
                .map(str::trim)
                .map(|s| {
                    ModelKind::from_slug(s, cfg.maxu_variant)
                        .ok_or_else(|| bad(line, format!("unknown model kind {s:?}")))
                })
                .collect::<Result<_>>()?;
        } else {
            cfg.models = ModelKind::all(cfg.maxu_variant).to_vec();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let budgets = [
            ("budget.indecisive", self.budget_indecisive),
            ("budget.strict", self.budget_strict),
            ("budget.mixture", self.budget_mixture),
            ("mixture.k", self.mixture_k),
        ];
        if let Some((name, _)) = budgets.iter().find(|(_, b)| *b == 0) {
            return Err(Error::InvalidParameter(format!("{name} must be at least 1")));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidParameter("no model kinds configured".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        self.bounds.validate()
    }

    /// Switches the Max-U form, including any `max-u` entry in `models`.
    pub fn set_maxu_variant(&mut self, form: MaxUForm) {
        self.maxu_variant = form;
        for kind in &mut self.models {
            if let ModelKind::MaxU(_) = kind {
                *kind = ModelKind::MaxU(form);
            }
        }
    }

    /// Single-model search budget for data of the given mode.
    pub fn budget(&self, mode: Mode) -> usize {
        match mode {
            Mode::Indecisive => self.budget_indecisive,
            Mode::Strict => self.budget_strict,
        }
    }

    pub fn search_options(&self, budget: usize) -> SearchOptions {
        SearchOptions::new(budget, self.seed)
            .with_bounds(self.bounds)
            .with_strict_variant(self.strict_variant)
    }
}
