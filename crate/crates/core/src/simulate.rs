//! Synthetic patients, query sequences, agents and voter populations.

use rand::Rng;

use crate::dataset::{Mode, Record, ResponseDataset};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fitting::{Bounds, Interval};
use crate::item::{ComparisonQuery, Item, Normalizer, Patient};
use crate::model::{IndecisionModel, ModelKind, StrictPolicy, StrictVariant};
use crate::rng::{derive_seed, seeded};

/// Length of one survey: forty pairwise comparisons.
pub const DEFAULT_QUERIES: usize = 40;

/// Inclusive integer range of one raw patient attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntRange {
    pub min: i64,
    pub max: i64,
}

impl IntRange {
    pub fn new(min: i64, max: i64) -> Result<Self> {
        if min > max {
            return Err(Error::InvalidParameter(format!("empty integer range {min}..={max}")));
        }
        Ok(IntRange { min, max })
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.min..=self.max) as f64
    }
}

/// Attribute ranges patients are drawn from, uniformly per attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSpec {
    pub age: IntRange,
    pub drinks: IntRange,
    pub dependents: IntRange,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            age: IntRange { min: 25, max: 70 },
            drinks: IntRange { min: 1, max: 5 },
            dependents: IntRange { min: 0, max: 2 },
        }
    }
}

impl FeatureSpec {
    pub fn sample_patient<R: Rng + ?Sized>(&self, rng: &mut R) -> Patient {
        let age = self.age.sample(rng);
        let drinks = self.drinks.sample(rng);
        let dependents = self.dependents.sample(rng);
        Patient::new(age, drinks, dependents)
    }
}

pub fn generate_patients<R: Rng + ?Sized>(
    spec: &FeatureSpec,
    normalizer: &Normalizer,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Item>> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one patient must be generated".into()));
    }
    Ok((0..n)
        .map(|_| normalizer.normalize(spec.sample_patient(rng)))
        .collect())
}

/// `n` independent patient pairs with ids `0..n`.
pub fn generate_queries<R: Rng + ?Sized>(
    spec: &FeatureSpec,
    normalizer: &Normalizer,
    n: usize,
    rng: &mut R,
) -> Result<Vec<ComparisonQuery>> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one query must be generated".into()));
    }
    (0..n)
        .map(|id| {
            let first = normalizer.normalize(spec.sample_patient(rng));
            let second = normalizer.normalize(spec.sample_patient(rng));
            Ok(ComparisonQuery::new(first, second)?.with_id(id))
        })
        .collect()
}

/// One response per query from `agent`. Strict mode samples the strict
/// distribution under `policy` and never produces indecision.
pub fn simulate_agent<R: Rng + ?Sized>(
    agent: &IndecisionModel,
    policy: Option<&StrictPolicy>,
    queries: &[ComparisonQuery],
    mode: Mode,
    voter_id: &str,
    rng: &mut R,
) -> Result<ResponseDataset> {
    let mut records = Vec::with_capacity(queries.len());
    for query in queries {
        let response = match mode {
            Mode::Indecisive => agent.sample_response(query, rng)?,
            Mode::Strict => {
                let policy = policy.ok_or(Error::MissingPolicy)?;
                agent.sample_strict(policy, query, rng)?
            }
        };
        records.push(Record {
            voter_id: voter_id.to_string(),
            query: query.clone(),
            response,
        });
    }
    ResponseDataset::new(mode, records)
}

/// A simulated voter.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub voter_id: String,
    pub model: IndecisionModel,
    pub policy: StrictPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub count: usize,
    /// Probability of each model kind; must sum to one.
    pub kind_distribution: Vec<(ModelKind, f64)>,
    /// Parameter ranges; weights and thresholds are drawn uniformly inside.
    pub bounds: Bounds,
    pub n_features: usize,
    /// Range of the strict-mode coin probability.
    pub q: Interval,
    pub strict_variant: StrictVariant,
}

impl PopulationSpec {
    pub fn new(count: usize, kind_distribution: Vec<(ModelKind, f64)>) -> Self {
        PopulationSpec {
            count,
            kind_distribution,
            bounds: Bounds::default(),
            n_features: Normalizer::DIM,
            q: Interval { lo: 0.0, hi: 1.0 },
            strict_variant: StrictVariant::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind_distribution.is_empty() {
            return Err(Error::InvalidParameter("kind distribution is empty".into()));
        }
        let mut total = 0.0;
        for &(kind, p) in &self.kind_distribution {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidParameter(format!("probability of {kind} is {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "kind probabilities sum to {total}, not 1"
            )));
        }
        if self.n_features == 0 {
            return Err(Error::InvalidParameter("at least one feature is required".into()));
        }
        self.bounds.validate()?;
        if !(self.q.lo.is_finite() && self.q.hi.is_finite())
            || self.q.lo < 0.0
            || self.q.hi > 1.0
            || self.q.lo > self.q.hi
        {
            return Err(Error::InvalidParameter("q range must lie within [0, 1]".into()));
        }
        Ok(())
    }

    fn draw_kind(&self, u: f64) -> ModelKind {
        let mut acc = 0.0;
        for &(kind, p) in &self.kind_distribution {
            acc += p;
            if u < acc {
                return kind;
            }
        }
        // Rounding left `u` above the cumulative total; take the last kind
        // with positive mass.
        self.kind_distribution
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(k, _)| *k)
            .expect("validated distribution has positive mass")
    }

    fn draw_agent(&self, index: usize, seed: u64) -> Result<Agent> {
        let mut rng = seeded(derive_seed(seed, index as u64));
        let kind = self.draw_kind(rng.random::<f64>());
        let weights: Vec<f64> = (0..self.n_features)
            .map(|_| self.bounds.weight.map(rng.random::<f64>()))
            .collect();
        let threshold = self.bounds.threshold_for(kind).map(rng.random::<f64>());
        let q = self.q.map(rng.random::<f64>());
        let model = match kind {
            ModelKind::NaiveRand => IndecisionModel::naive_rand(q)?,
            ModelKind::UniformRand => IndecisionModel::uniform_rand(),
            ModelKind::Logit => IndecisionModel::logit(weights)?,
            _ => IndecisionModel::new(kind, weights, threshold)?,
        };
        Ok(Agent {
            voter_id: voter_label(index),
            model,
            policy: StrictPolicy::new(q, self.strict_variant)?,
        })
    }
}

/// Voter id used for simulated voter `index`.
pub fn voter_label(index: usize) -> String {
    format!("v{index:03}")
}

/// Draws `spec.count` agents. Agent `i` depends only on `(seed, i)`.
pub fn generate_population(spec: &PopulationSpec, seed: u64) -> Result<Vec<Agent>> {
    spec.validate()?;
    (0..spec.count).map(|i| spec.draw_agent(i, seed)).collect()
}

/// How a population is asked its questions.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryPlan {
    /// Every voter answers the same list.
    Shared(Vec<ComparisonQuery>),
    /// Each voter gets `n` fresh queries.
    PerVoter(usize),
}

/// Simulates every agent and concatenates the records in agent order.
/// Voter `i` uses its own derived seed, so the output does not depend on
/// the execution mode.
pub fn simulate_population(
    agents: &[Agent],
    plan: &QueryPlan,
    features: &FeatureSpec,
    normalizer: &Normalizer,
    mode: Mode,
    seed: u64,
    execution: Execution,
) -> Result<ResponseDataset> {
    let indexed: Vec<(usize, &Agent)> = agents.iter().enumerate().collect();
    let parts = execution.map(&indexed, |&(i, agent)| {
        let mut rng = seeded(derive_seed(seed, i as u64));
        let queries = match plan {
            QueryPlan::Shared(q) => q.clone(),
            QueryPlan::PerVoter(n) => generate_queries(features, normalizer, *n, &mut rng)?,
        };
        simulate_agent(
            &agent.model,
            Some(&agent.policy),
            &queries,
            mode,
            &agent.voter_id,
            &mut rng,
        )
    });
    let mut out = ResponseDataset::empty(mode);
    for part in parts {
        out.extend(&part?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::Response;

    #[test]
    fn default_ranges() {
        let spec = FeatureSpec::default();
        assert_eq!(spec.age.len(), 46);
        assert_eq!(spec.drinks.len(), 5);
        assert_eq!(spec.dependents.len(), 3);
        assert!(IntRange::new(3, 2).is_err());
    }

    #[test]
    fn patients_carry_raw_and_normalized_features() {
        let mut rng = seeded(1);
        let items = generate_patients(&FeatureSpec::default(), &Normalizer::default(), 500, &mut rng)
            .unwrap();
        for item in &items {
            let raw = item.raw.unwrap();
            assert!((25.0..=70.0).contains(&raw.age));
            assert_eq!(raw.age.fract(), 0.0);
            assert!(item.features.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn queries_have_sequential_ids() {
        let mut rng = seeded(2);
        let qs = generate_queries(
            &FeatureSpec::default(),
            &Normalizer::default(),
            DEFAULT_QUERIES,
            &mut rng,
        )
        .unwrap();
        assert_eq!(qs.len(), 40);
        assert!(qs.iter().enumerate().all(|(i, q)| q.id == Some(i)));
    }

    #[test]
    fn strict_simulation_requires_policy() {
        let mut rng = seeded(3);
        let qs = generate_queries(&FeatureSpec::default(), &Normalizer::default(), 3, &mut rng)
            .unwrap();
        let agent = IndecisionModel::uniform_rand();
        assert!(matches!(
            simulate_agent(&agent, None, &qs, Mode::Strict, "a", &mut rng),
            Err(Error::MissingPolicy)
        ));
    }

    #[test]
    fn certain_indecision() {
        let mut rng = seeded(4);
        let qs = generate_queries(&FeatureSpec::default(), &Normalizer::default(), 20, &mut rng)
            .unwrap();
        let agent = IndecisionModel::naive_rand(1.0).unwrap();
        let data = simulate_agent(&agent, None, &qs, Mode::Indecisive, "a", &mut rng).unwrap();
        assert!(data.records().iter().all(|r| r.response == Response::Indecision));
    }

    #[test]
    fn population_validation() {
        let bad = PopulationSpec::new(3, vec![(ModelKind::MinDelta, 0.4)]);
        assert!(generate_population(&bad, 0).is_err());
        let empty = PopulationSpec::new(0, vec![(ModelKind::MinDelta, 1.0)]);
        assert!(generate_population(&empty, 0).unwrap().is_empty());
    }

    #[test]
    fn population_is_prefix_stable() {
        let spec = PopulationSpec::new(10, vec![(ModelKind::MinU, 0.5), (ModelKind::Dom, 0.5)]);
        let small = PopulationSpec { count: 4, ..spec.clone() };
        let a = generate_population(&spec, 9).unwrap();
        let b = generate_population(&small, 9).unwrap();
        assert_eq!(&a[..4], &b[..]);
        assert_eq!(a[3].voter_id, "v003");
    }
}
