//! Randomized check that the noiseless score argmax of each indecision model
//! selects exactly the responses allowed by its threshold response function.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::item::{ComparisonQuery, Item};
use crate::model::{IndecisionModel, MaxUForm, ModelKind};
use crate::response::ResponseSet;
use crate::response_function::response_function_feasible;
use crate::rng::{derive_seed, seeded, SimRng};

/// Comparison tolerance used on both sides of the check.
pub const TOLERANCE: f64 = 1e-9;

/// Kinds whose score argmax should coincide with the response function.
pub fn checked_kinds() -> [ModelKind; 5] {
    ModelKind::indecision_kinds(MaxUForm::Sum)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub trial: usize,
    pub weights: Vec<f64>,
    pub threshold: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub score_set: String,
    pub response_function_set: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindCheck {
    pub kind: String,
    pub trials: usize,
    pub mismatches: usize,
    /// Trials whose feasible set had more than one response.
    pub ties: usize,
    pub first_mismatch: Option<Mismatch>,
}

/// The Max-U point where the two score forms disagree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub u_first: f64,
    pub u_second: f64,
    pub threshold: f64,
    pub main_text: String,
    pub sum_form: String,
    pub response_function: String,
    /// The main-text form differs from the response function here.
    pub diverges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub seed: u64,
    pub trials: usize,
    pub kinds: Vec<KindCheck>,
    pub counterexample: Counterexample,
}

impl EquivalenceReport {
    pub fn mismatches(&self) -> usize {
        self.kinds.iter().map(|k| k.mismatches).sum()
    }

    /// No mismatches, and the known Max-U divergence reproduced.
    pub fn passed(&self) -> bool {
        self.mismatches() == 0 && self.counterexample.diverges
    }
}

const DIM: usize = 3;

fn uniform_vec(rng: &mut SimRng, lo: f64, hi: f64, grid: bool) -> Vec<f64> {
    (0..DIM)
        .map(|_| {
            if grid {
                // Dyadic grid values make exact ties common.
                lo + (hi - lo) * f64::from(rng.random_range(0..=8u8)) / 8.0
            } else {
                rng.random_range(lo..=hi)
            }
        })
        .collect()
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// A threshold on the boundary between two responses.
fn boundary_threshold(kind: ModelKind, w: &[f64], a: &[f64], b: &[f64], pick: bool) -> f64 {
    let (ui, uj) = (dot(w, a), dot(w, b));
    match kind {
        ModelKind::MinDelta | ModelKind::MaxDelta => (ui - uj).abs(),
        ModelKind::MinU | ModelKind::MaxU(_) => {
            if pick {
                ui
            } else {
                uj
            }
        }
        _ => {
            let per = |x: &[f64], y: &[f64]| {
                (0..DIM)
                    .map(|n| w[n] * x[n] - w[n] * y[n])
                    .fold(f64::INFINITY, f64::min)
            };
            if pick {
                per(a, b)
            } else {
                per(b, a)
            }
        }
    }
}

fn draw(kind: ModelKind, rng: &mut SimRng) -> Result<(IndecisionModel, ComparisonQuery)> {
    let grid = rng.random_bool(0.3);
    let weights = uniform_vec(rng, -1.0, 1.0, grid);
    let first = uniform_vec(rng, 0.0, 1.0, grid);
    let second = if rng.random_bool(0.1) {
        first.clone()
    } else {
        uniform_vec(rng, 0.0, 1.0, grid)
    };
    let threshold = if rng.random_bool(0.15) {
        boundary_threshold(kind, &weights, &first, &second, rng.random_bool(0.5))
    } else if kind.is_difference_based() {
        rng.random_range(0.0..=2.0)
    } else {
        rng.random_range(-2.0..=2.0)
    };
    let model = IndecisionModel::new(kind, weights, threshold)?;
    let query = ComparisonQuery::new(Item::new(first)?, Item::new(second)?)?;
    Ok((model, query))
}

fn check_kind(kind: ModelKind, trials: usize, seed: u64) -> Result<KindCheck> {
    let mut rng = seeded(derive_seed(seed, kind.order() as u64));
    let mut check = KindCheck {
        kind: match kind {
            ModelKind::MaxU(form) => format!("{kind}({})", form.slug()),
            _ => kind.to_string(),
        },
        trials,
        mismatches: 0,
        ties: 0,
        first_mismatch: None,
    };
    for trial in 0..trials {
        let (model, query) = draw(kind, &mut rng)?;
        let by_score = model.feasible_responses(&query, TOLERANCE)?;
        let by_rule = response_function_feasible(&model, &query, TOLERANCE)?;
        if by_score.len() > 1 {
            check.ties += 1;
        }
        if by_score != by_rule {
            check.mismatches += 1;
            if check.first_mismatch.is_none() {
                check.first_mismatch = Some(Mismatch {
                    trial,
                    weights: model.weights().to_vec(),
                    threshold: model.threshold(),
                    first: query.first.features.clone(),
                    second: query.second.features.clone(),
                    score_set: by_score.to_string(),
                    response_function_set: by_rule.to_string(),
                });
            }
        }
    }
    Ok(check)
}

fn set_at(kind: ModelKind, query: &ComparisonQuery, threshold: f64) -> Result<ResponseSet> {
    IndecisionModel::new(kind, vec![1.0], threshold)?.feasible_responses(query, 0.0)
}

/// Evaluates both Max-U forms at `u(i) = 1`, `u(j) = 0.9`, `λ = 0.85`.
pub fn max_u_counterexample() -> Result<Counterexample> {
    let (ui, uj, lambda) = (1.0, 0.9, 0.85);
    let query = ComparisonQuery::from_features(vec![ui], vec![uj])?;
    let main_text = set_at(ModelKind::MaxU(MaxUForm::TwiceMin), &query, lambda)?;
    let sum_form = set_at(ModelKind::MaxU(MaxUForm::Sum), &query, lambda)?;
    let model = IndecisionModel::new(ModelKind::MaxU(MaxUForm::TwiceMin), vec![1.0], lambda)?;
    let rule = response_function_feasible(&model, &query, 0.0)?;
    Ok(Counterexample {
        u_first: ui,
        u_second: uj,
        threshold: lambda,
        main_text: main_text.to_string(),
        sum_form: sum_form.to_string(),
        response_function: rule.to_string(),
        diverges: main_text != rule,
    })
}

/// Runs `trials` random draws for each checked kind.
pub fn run(trials: usize, seed: u64) -> Result<EquivalenceReport> {
    let kinds = checked_kinds()
        .into_iter()
        .map(|k| check_kind(k, trials, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceReport {
        seed,
        trials,
        kinds,
        counterexample: max_u_counterexample()?,
    })
}
