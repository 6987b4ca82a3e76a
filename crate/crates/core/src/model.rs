//! Indecision models, their score functions and response distributions.
//!
//! Every scored model assigns `S0` (indecision), `S1` (prefer the first item)
//! and `S2` (prefer the second item) to a comparison `(i, j)`, with
//! `S2(i, j) = S1(j, i)`. Under iid Gumbel(1) noise the response distribution
//! is the softmax of the three scores.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::item::{ComparisonQuery, Item};
use crate::response::{Response, ResponseSet};

/// Scale of the Gumbel noise added to each score. Fixed at one.
pub const NOISE_SCALE: f64 = 1.0;

/// The two readings of the Max-U indecision score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MaxUForm {
    /// `S0 = 2 min{u(i), u(j)} - λ`.
    #[default]
    TwiceMin,
    /// `S0 = u(i) + u(j) - λ`; the form whose noiseless argmax matches the
    /// threshold response function.
    Sum,
}

impl MaxUForm {
    pub fn slug(self) -> &'static str {
        match self {
            MaxUForm::TwiceMin => "main-text",
            MaxUForm::Sum => "sum-form",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        match s {
            "main-text" => Some(MaxUForm::TwiceMin),
            "sum-form" => Some(MaxUForm::Sum),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    MinDelta,
    MaxDelta,
    MinU,
    MaxU(MaxUForm),
    Dom,
    /// Standard logit with a fixed zero indecision score.
    Logit,
    /// Indecision with probability `q`, otherwise a fair coin between items.
    NaiveRand,
    /// Every response with probability 1/3.
    UniformRand,
}

impl ModelKind {
    /// The five indecision models, in canonical order.
    pub fn indecision_kinds(form: MaxUForm) -> [ModelKind; 5] {
        [
            ModelKind::MinDelta,
            ModelKind::MaxDelta,
            ModelKind::MinU,
            ModelKind::MaxU(form),
            ModelKind::Dom,
        ]
    }

    /// Indecision models followed by the three baselines.
    pub fn all(form: MaxUForm) -> [ModelKind; 8] {
        [
            ModelKind::MinDelta,
            ModelKind::MaxDelta,
            ModelKind::MinU,
            ModelKind::MaxU(form),
            ModelKind::Dom,
            ModelKind::Logit,
            ModelKind::NaiveRand,
            ModelKind::UniformRand,
        ]
    }

    /// Position in the canonical order; used to break ties deterministically.
    pub fn order(self) -> usize {
        match self {
            ModelKind::MinDelta => 0,
            ModelKind::MaxDelta => 1,
            ModelKind::MinU => 2,
            ModelKind::MaxU(_) => 3,
            ModelKind::Dom => 4,
            ModelKind::Logit => 5,
            ModelKind::NaiveRand => 6,
            ModelKind::UniformRand => 7,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::MinDelta => "min-delta",
            ModelKind::MaxDelta => "max-delta",
            ModelKind::MinU => "min-u",
            ModelKind::MaxU(_) => "max-u",
            ModelKind::Dom => "dom",
            ModelKind::Logit => "logit",
            ModelKind::NaiveRand => "naive-rand",
            ModelKind::UniformRand => "uniform-rand",
        }
    }

    /// Parses a slug; `max_u` selects the form used for `max-u`.
    pub fn from_slug(s: &str, max_u: MaxUForm) -> Option<Self> {
        ModelKind::all(max_u).into_iter().find(|k| k.slug() == s)
    }

    pub fn has_scores(self) -> bool {
        !matches!(self, ModelKind::NaiveRand | ModelKind::UniformRand)
    }

    /// True for the five indecision models, which carry a threshold λ.
    pub fn has_threshold(self) -> bool {
        self.has_scores() && self != ModelKind::Logit
    }

    /// Min-δ and Max-δ, whose threshold must be non-negative.
    pub fn is_difference_based(self) -> bool {
        matches!(self, ModelKind::MinDelta | ModelKind::MaxDelta)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Deterministic scores `(S0, S1, S2)` for one comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub indecision: f64,
    pub first: f64,
    pub second: f64,
}

impl Scores {
    pub fn new(indecision: f64, first: f64, second: f64) -> Self {
        Scores {
            indecision,
            first,
            second,
        }
    }

    pub fn get(&self, r: Response) -> f64 {
        match r {
            Response::Indecision => self.indecision,
            Response::PreferFirst => self.first,
            Response::PreferSecond => self.second,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.indecision, self.first, self.second]
    }

    pub fn max(&self) -> f64 {
        self.indecision.max(self.first).max(self.second)
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|s| s.is_finite())
    }

    /// `exp(S_r - max S)` for each response.
    fn shifted_exp(&self) -> [f64; 3] {
        let m = self.max();
        [
            (self.indecision - m).exp(),
            (self.first - m).exp(),
            (self.second - m).exp(),
        ]
    }

    /// Softmax over the three scores. The strict scores are summed first so
    /// that swapping them leaves every probability bit-identical.
    pub fn softmax(&self) -> ResponseDistribution {
        let [e0, e1, e2] = self.shifted_exp();
        let total = e0 + (e1 + e2);
        ResponseDistribution {
            p: [e0 / total, e1 / total, e2 / total],
        }
    }

    /// `ln p(r)` under the softmax, without forming the probability.
    pub fn log_softmax(&self, r: Response) -> f64 {
        let m = self.max();
        let [e0, e1, e2] = self.shifted_exp();
        self.get(r) - m - (e0 + (e1 + e2)).ln()
    }

    /// Two-class softmax over the strict scores.
    pub fn strict_softmax(&self) -> StrictDistribution {
        let m = self.first.max(self.second);
        let e1 = (self.first - m).exp();
        let e2 = (self.second - m).exp();
        let d = e1 + e2;
        StrictDistribution {
            p1: e1 / d,
            p2: e2 / d,
        }
    }

    /// Responses whose score is within `tol` of the maximum.
    pub fn argmax_set(&self, tol: f64) -> ResponseSet {
        let cutoff = self.max() - tol;
        Response::ALL
            .into_iter()
            .filter(|&r| self.get(r) >= cutoff)
            .fold(ResponseSet::EMPTY, |s, r| s.with(r))
    }

    pub fn shifted(&self, c: f64) -> Self {
        Scores::new(self.indecision + c, self.first + c, self.second + c)
    }
}

/// Probabilities of responses 0, 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseDistribution {
    pub p: [f64; 3],
}

impl ResponseDistribution {
    pub fn get(&self, r: Response) -> f64 {
        self.p[r.index()]
    }

    pub fn sum(&self) -> f64 {
        self.p[0] + self.p[1] + self.p[2]
    }

    /// Inverse-CDF draw from a uniform variate in `[0, 1)`.
    pub fn invert(&self, u: f64) -> Response {
        if u < self.p[0] {
            Response::Indecision
        } else if u < self.p[0] + self.p[1] {
            Response::PreferFirst
        } else {
            Response::PreferSecond
        }
    }
}

/// Probabilities of the strict responses when indecision is not allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrictDistribution {
    pub p1: f64,
    pub p2: f64,
}

impl StrictDistribution {
    pub fn get(&self, r: Response) -> f64 {
        match r {
            Response::Indecision => 0.0,
            Response::PreferFirst => self.p1,
            Response::PreferSecond => self.p2,
        }
    }

    pub fn sum(&self) -> f64 {
        self.p1 + self.p2
    }
}

/// How the strict-mode response probabilities are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum StrictVariant {
    /// `p1 = q (e^S1 + e^S0 / 2) / C + (1 - q) e^S1 / D`.
    #[default]
    ClosedForm,
    /// Draw a response; on indecision flip a `q`-coin: heads draws from the
    /// two-class softmax, tails picks a side uniformly.
    /// `p1 = p(1) + p(0) [q e^S1 / D + (1 - q) / 2]`.
    Process,
}

impl StrictVariant {
    pub fn slug(self) -> &'static str {
        match self {
            StrictVariant::ClosedForm => "closed-form",
            StrictVariant::Process => "process",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        match s {
            "closed-form" => Some(StrictVariant::ClosedForm),
            "process" => Some(StrictVariant::Process),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrictPolicy {
    q: f64,
    pub variant: StrictVariant,
}

impl StrictPolicy {
    pub fn new(q: f64, variant: StrictVariant) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "strict policy q = {q} outside [0, 1]"
            )));
        }
        Ok(StrictPolicy { q, variant })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn apply(&self, scores: &Scores) -> StrictDistribution {
        let [e0, e1, e2] = scores.shifted_exp();
        let c = e0 + (e1 + e2);
        let d = e1 + e2;
        let q = self.q;
        match self.variant {
            StrictVariant::ClosedForm => StrictDistribution {
                p1: q * (e1 + 0.5 * e0) / c + (1.0 - q) * e1 / d,
                p2: q * (e2 + 0.5 * e0) / c + (1.0 - q) * e2 / d,
            },
            StrictVariant::Process => {
                let p0 = e0 / c;
                StrictDistribution {
                    p1: e1 / c + p0 * (q * e1 / d + (1.0 - q) * 0.5),
                    p2: e2 / c + p0 * (q * e2 / d + (1.0 - q) * 0.5),
                }
            }
        }
    }
}

/// A single agent model: kind, linear utility weights `u` and threshold λ.
///
/// Utilities are linear in the normalized features, `u(i) = u · x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndecisionModel {
    kind: ModelKind,
    weights: Vec<f64>,
    threshold: f64,
    rand_q: f64,
}

impl IndecisionModel {
    /// A scored model. Logit ignores the threshold, which is stored as zero.
    pub fn new(kind: ModelKind, weights: Vec<f64>, threshold: f64) -> Result<Self> {
        if !kind.has_scores() {
            return Err(Error::InvalidParameter(format!(
                "{kind} takes no utility weights; use its dedicated constructor"
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("non-finite utility weight".into()));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidParameter("non-finite threshold".into()));
        }
        if kind.is_difference_based() && threshold < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{kind} requires a non-negative threshold, got {threshold}"
            )));
        }
        let threshold = if kind == ModelKind::Logit { 0.0 } else { threshold };
        Ok(IndecisionModel {
            kind,
            weights,
            threshold,
            rand_q: 0.0,
        })
    }

    pub fn logit(weights: Vec<f64>) -> Result<Self> {
        IndecisionModel::new(ModelKind::Logit, weights, 0.0)
    }

    pub fn naive_rand(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "naive-rand q = {q} outside [0, 1]"
            )));
        }
        Ok(IndecisionModel {
            kind: ModelKind::NaiveRand,
            weights: Vec::new(),
            threshold: 0.0,
            rand_q: q,
        })
    }

    pub fn uniform_rand() -> Self {
        IndecisionModel {
            kind: ModelKind::UniformRand,
            weights: Vec::new(),
            threshold: 0.0,
            rand_q: 0.0,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Indecision probability of the naive-rand baseline.
    pub fn rand_q(&self) -> f64 {
        self.rand_q
    }

    pub fn noise_scale(&self) -> f64 {
        NOISE_SCALE
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.kind.has_scores() && dim != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: dim,
            });
        }
        Ok(())
    }

    pub fn utility(&self, item: &Item) -> Result<f64> {
        if !self.kind.has_scores() {
            return Err(Error::Scoreless(self.kind));
        }
        self.check_dim(item.dim())?;
        Ok(dot(&self.weights, &item.features))
    }

    /// Utility contributed by feature `n`: `u_n(i) = weights[n] * x_i[n]`.
    pub fn feature_utility(&self, item: &Item, n: usize) -> Result<f64> {
        if !self.kind.has_scores() {
            return Err(Error::Scoreless(self.kind));
        }
        self.check_dim(item.dim())?;
        if n >= item.dim() {
            return Err(Error::FeatureIndex {
                index: n,
                dim: item.dim(),
            });
        }
        Ok(self.weights[n] * item.features[n])
    }

    /// Scores for raw feature vectors. Dimensions are not checked.
    pub(crate) fn scores_unchecked(&self, a: &[f64], b: &[f64]) -> Scores {
        let lambda = self.threshold;
        match self.kind {
            ModelKind::Dom => {
                let mut m_ab = f64::INFINITY;
                let mut m_ba = f64::INFINITY;
                for ((w, x), y) in self.weights.iter().zip(a).zip(b) {
                    let ua = w * x;
                    let ub = w * y;
                    m_ab = m_ab.min(ua - ub);
                    m_ba = m_ba.min(ub - ua);
                }
                Scores::new(lambda, m_ab, m_ba)
            }
            kind => {
                let ua = dot(&self.weights, a);
                let ub = dot(&self.weights, b);
                let s0 = match kind {
                    ModelKind::MinDelta | ModelKind::MinU => lambda,
                    ModelKind::MaxDelta => 2.0 * (ua - ub).abs() - lambda,
                    ModelKind::MaxU(MaxUForm::TwiceMin) => 2.0 * ua.min(ub) - lambda,
                    ModelKind::MaxU(MaxUForm::Sum) => ua + ub - lambda,
                    ModelKind::Logit => 0.0,
                    _ => unreachable!("scoreless kinds are handled by the caller"),
                };
                match kind {
                    ModelKind::MinU | ModelKind::MaxU(_) => Scores::new(s0, ua, ub),
                    _ => Scores::new(s0, ua - ub, ub - ua),
                }
            }
        }
    }

    pub fn scores(&self, query: &ComparisonQuery) -> Result<Scores> {
        if !self.kind.has_scores() {
            return Err(Error::Scoreless(self.kind));
        }
        self.check_dim(query.dim())?;
        let s = self.scores_unchecked(&query.first.features, &query.second.features);
        if !s.is_finite() {
            return Err(Error::NonFiniteScore(self.kind));
        }
        Ok(s)
    }

    pub fn score(&self, query: &ComparisonQuery, r: Response) -> Result<f64> {
        Ok(self.scores(query)?.get(r))
    }

    /// The noisy-score response distribution.
    pub fn response_distribution(&self, query: &ComparisonQuery) -> Result<ResponseDistribution> {
        match self.kind {
            ModelKind::NaiveRand => {
                let side = (1.0 - self.rand_q) / 2.0;
                Ok(ResponseDistribution {
                    p: [self.rand_q, side, side],
                })
            }
            ModelKind::UniformRand => Ok(ResponseDistribution {
                p: [1.0 / 3.0; 3],
            }),
            _ => Ok(self.scores(query)?.softmax()),
        }
    }

    /// Response distribution when the agent must answer strictly.
    ///
    /// Logit has no indecision mechanism and uses the two-class softmax
    /// regardless of `policy`.
    pub fn strict_distribution(
        &self,
        policy: &StrictPolicy,
        query: &ComparisonQuery,
    ) -> Result<StrictDistribution> {
        let scores = self.scores(query)?;
        if self.kind == ModelKind::Logit {
            return Ok(scores.strict_softmax());
        }
        Ok(policy.apply(&scores))
    }

    /// Responses that are optimal when the agent observes no noise: the
    /// score argmax with tolerance `tol`. For the random baselines the
    /// argmax is taken over probabilities instead.
    pub fn feasible_responses(&self, query: &ComparisonQuery, tol: f64) -> Result<ResponseSet> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be non-negative, got {tol}"
            )));
        }
        let scores = match self.kind {
            ModelKind::NaiveRand | ModelKind::UniformRand => {
                let [p0, p1, p2] = self.response_distribution(query)?.p;
                Scores::new(p0, p1, p2)
            }
            _ => self.scores(query)?,
        };
        Ok(scores.argmax_set(tol))
    }

    /// Noiseless response: a uniform pick among the exact argmax responses.
    pub fn deterministic_response<R: Rng + ?Sized>(
        &self,
        query: &ComparisonQuery,
        rng: &mut R,
    ) -> Result<Response> {
        let feasible = self.feasible_responses(query, 0.0)?;
        let pick = rng.random_range(0..feasible.len());
        Ok(feasible
            .iter()
            .nth(pick)
            .expect("feasible set is never empty"))
    }

    pub fn sample_response<R: Rng + ?Sized>(
        &self,
        query: &ComparisonQuery,
        rng: &mut R,
    ) -> Result<Response> {
        let dist = self.response_distribution(query)?;
        Ok(dist.invert(rng.random::<f64>()))
    }

    /// Draws a strict response. The process variant is simulated step by
    /// step; the closed form is sampled from its probabilities.
    pub fn sample_strict<R: Rng + ?Sized>(
        &self,
        policy: &StrictPolicy,
        query: &ComparisonQuery,
        rng: &mut R,
    ) -> Result<Response> {
        if !self.kind.has_scores() {
            // Random baselines answer strictly by a fair coin.
            return Ok(if rng.random::<f64>() < 0.5 {
                Response::PreferFirst
            } else {
                Response::PreferSecond
            });
        }
        let scores = self.scores(query)?;
        if self.kind != ModelKind::Logit && policy.variant == StrictVariant::Process {
            let first = scores.softmax().invert(rng.random::<f64>());
            if first.is_strict() {
                return Ok(first);
            }
            let heads = rng.random::<f64>() < policy.q();
            let p1 = if heads {
                scores.strict_softmax().p1
            } else {
                0.5
            };
            return Ok(if rng.random::<f64>() < p1 {
                Response::PreferFirst
            } else {
                Response::PreferSecond
            });
        }
        let dist = self.strict_distribution(policy, query)?;
        Ok(if rng.random::<f64>() < dist.p1 {
            Response::PreferFirst
        } else {
            Response::PreferSecond
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
