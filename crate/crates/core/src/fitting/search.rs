use crate::dataset::{Mode, ResponseDataset};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::likelihood::{log_likelihood, mixture_log_likelihood, Component, MixtureModel};
use crate::model::{IndecisionModel, MaxUForm, ModelKind, StrictPolicy, StrictVariant};

use super::sobol::Sobol;
use super::space::{Bounds, MixtureSpace, ParamSpace};

/// Smallest indecision probability the naive-rand baseline is fitted with,
/// so unseen indecision in a test set keeps a finite likelihood.
pub const RAND_Q_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Single(IndecisionModel),
    Mixture(MixtureModel),
}

impl FittedModel {
    pub fn log_likelihood(
        &self,
        data: &ResponseDataset,
        policy: Option<&StrictPolicy>,
    ) -> Result<f64> {
        match self {
            FittedModel::Single(m) => log_likelihood(m, data, policy),
            FittedModel::Mixture(m) => mixture_log_likelihood(m, data, policy),
        }
    }

    pub fn record_log_probs(
        &self,
        data: &ResponseDataset,
        policy: Option<&StrictPolicy>,
    ) -> Result<Vec<f64>> {
        match self {
            FittedModel::Single(m) => crate::likelihood::record_log_probs(m, data, policy),
            FittedModel::Mixture(m) => m.record_log_probs(data, policy),
        }
    }

    pub fn as_single(&self) -> Option<&IndecisionModel> {
        match self {
            FittedModel::Single(m) => Some(m),
            FittedModel::Mixture(_) => None,
        }
    }
}

/// Best parameters found by a search, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FittedModel,
    pub policy: Option<StrictPolicy>,
    pub train_ll: f64,
    pub test_ll: Option<f64>,
    pub budget: usize,
    pub seed: u64,
    /// Position of the winning point among the evaluated candidates.
    pub candidate_index: usize,
}

impl FitResult {
    /// Computes and stores the test-set log-likelihood.
    pub fn evaluate_test(&mut self, test: &ResponseDataset) -> Result<f64> {
        let ll = self.model.log_likelihood(test, self.policy.as_ref())?;
        self.test_ll = Some(ll);
        Ok(ll)
    }

    pub fn kind(&self) -> Option<ModelKind> {
        self.model.as_single().map(|m| m.kind())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub budget: usize,
    pub seed: u64,
    pub bounds: Bounds,
    pub strict_variant: StrictVariant,
    pub execution: Execution,
}

impl SearchOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        SearchOptions {
            budget,
            seed,
            bounds: Bounds::default(),
            strict_variant: StrictVariant::default(),
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_strict_variant(mut self, variant: StrictVariant) -> Self {
        self.strict_variant = variant;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidParameter("search budget must be at least 1".into()));
        }
        if self.budget > Sobol::capacity() {
            return Err(Error::InvalidParameter(format!(
                "search budget exceeds {}",
                Sobol::capacity()
            )));
        }
        self.bounds.validate()
    }

    fn strict(&self, mode: Mode) -> Option<StrictVariant> {
        (mode == Mode::Strict).then_some(self.strict_variant)
    }
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    index: usize,
    ll: f64,
}

fn better(a: &Scored, b: &Scored) -> bool {
    a.ll > b.ll || (a.ll == b.ll && a.index < b.index)
}

/// Evaluates `budget` Sobol candidates and returns the best one.
fn search<F>(dim: usize, opts: &SearchOptions, eval: F) -> Result<Scored>
where
    F: Fn(&[f64]) -> Option<f64> + Sync + Send,
{
    let sobol = Sobol::new(dim, opts.seed)?;
    opts.execution
        .best_of(
            opts.budget,
            |index| {
                let point = sobol.candidate(index);
                eval(&point)
                    .filter(|ll| !ll.is_nan())
                    .map(|ll| Scored { index, ll })
            },
            better,
        )
        .ok_or(Error::NoViableCandidate)
}

fn train_dim(train: &ResponseDataset) -> Result<usize> {
    train.dim().ok_or(Error::EmptyDataset)
}

/// Maximum-likelihood fit of one model kind by Sobol search.
///
/// The random baselines need no search: uniform-rand has no parameters and
/// naive-rand takes the closed-form estimate of `q` (indecisive data) or
/// answers by a fair coin (strict data).
pub fn fit_model(train: &ResponseDataset, kind: ModelKind, opts: &SearchOptions) -> Result<FitResult> {
    opts.validate()?;
    let dim = train_dim(train)?;
    let single = |model: IndecisionModel| -> Result<FitResult> {
        let train_ll = log_likelihood(&model, train, None)?;
        Ok(FitResult {
            model: FittedModel::Single(model),
            policy: None,
            train_ll,
            test_ll: None,
            budget: opts.budget,
            seed: opts.seed,
            candidate_index: 0,
        })
    };
    match kind {
        ModelKind::UniformRand => return single(IndecisionModel::uniform_rand()),
        ModelKind::NaiveRand => {
            let q = match train.mode() {
                Mode::Strict => 0.0,
                Mode::Indecisive => {
                    let indecisive = train.response_counts()[0] as f64;
                    (indecisive / train.len() as f64).clamp(RAND_Q_FLOOR, 1.0 - RAND_Q_FLOOR)
                }
            };
            return single(IndecisionModel::naive_rand(q)?);
        }
        _ => {}
    }

    let space = ParamSpace::new(kind, dim, opts.bounds, opts.strict(train.mode()))?;
    let best = search(space.dimension(), opts, |point| {
        let (model, policy) = space.decode(point).ok()?;
        log_likelihood(&model, train, policy.as_ref()).ok()
    })?;
    let point = Sobol::new(space.dimension(), opts.seed)?.candidate(best.index);
    let (model, policy) = space.decode(&point)?;
    Ok(FitResult {
        model: FittedModel::Single(model),
        policy,
        train_ll: best.ll,
        test_ll: None,
        budget: opts.budget,
        seed: opts.seed,
        candidate_index: best.index,
    })
}

/// Fits a k-mixture. Each component's kind is searched as a categorical
/// coordinate unless `fixed_kind` pins it (e.g. Min-δ for a k-Min-δ mixture).
pub fn fit_k_mixture(
    train: &ResponseDataset,
    k: usize,
    fixed_kind: Option<ModelKind>,
    max_u: MaxUForm,
    opts: &SearchOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let dim = train_dim(train)?;
    let space = MixtureSpace::new(k, dim, fixed_kind, max_u, opts.bounds, opts.strict(train.mode()))?;
    let best = search(space.dimension(), opts, |point| {
        let (mix, policy) = space.decode(point).ok()?;
        mixture_log_likelihood(&mix, train, policy.as_ref()).ok()
    })?;
    let point = Sobol::new(space.dimension(), opts.seed)?.candidate(best.index);
    let (mix, policy) = space.decode(&point)?;
    Ok(FitResult {
        model: FittedModel::Mixture(mix),
        policy,
        train_ll: best.ll,
        test_ll: None,
        budget: opts.budget,
        seed: opts.seed,
        candidate_index: best.index,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoterFit {
    pub voter_id: String,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VMixtureFit {
    pub mixture: MixtureModel,
    /// Winning single-model fit per voter, in input order.
    pub voters: Vec<VoterFit>,
}

/// Best single indecision model for one voter, choosing the kind with the
/// highest training likelihood (ties go to the earlier kind).
pub fn fit_best_kind(
    train: &ResponseDataset,
    max_u: MaxUForm,
    opts: &SearchOptions,
) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    for kind in ModelKind::indecision_kinds(max_u) {
        let fit = match fit_model(train, kind, opts) {
            Ok(fit) => fit,
            Err(Error::NoViableCandidate) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| fit.train_ll > b.train_ll) {
            best = Some(fit);
        }
    }
    best.ok_or(Error::NoViableCandidate)
}

/// Voter mixture: one best-fit submodel per training voter, each selected
/// with probability `1/V`. Every voter is searched with the same seed.
pub fn fit_vmixture(
    per_voter_train: &[(String, ResponseDataset)],
    max_u: MaxUForm,
    opts: &SearchOptions,
) -> Result<VMixtureFit> {
    if per_voter_train.is_empty() {
        return Err(Error::Insufficient("a voter mixture needs at least one voter".into()));
    }
    let fits = opts.execution.map(per_voter_train, |(voter, data)| {
        fit_best_kind(data, max_u, opts).map(|fit| VoterFit {
            voter_id: voter.clone(),
            fit,
        })
    });
    let voters = fits.into_iter().collect::<Result<Vec<_>>>()?;
    let components = voters
        .iter()
        .map(|v| {
            let model = v.fit.model.as_single().expect("single-model fit").clone();
            Component::with_policy(model, v.fit.policy)
        })
        .collect();
    Ok(VMixtureFit {
        mixture: MixtureModel::uniform(components)?,
        voters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Record;
    use crate::item::ComparisonQuery;
    use crate::response::Response;

    fn toy(mode: Mode) -> ResponseDataset {
        let rows: [(&[f64], &[f64], Response); 4] = [
            (&[0.9, 0.1, 0.5], &[0.2, 0.3, 0.5], Response::PreferFirst),
            (&[0.2, 0.8, 0.0], &[0.6, 0.1, 1.0], Response::PreferSecond),
            (&[0.5, 0.5, 0.5], &[0.4, 0.5, 0.5], Response::Indecision),
            (&[0.1, 0.3, 1.0], &[0.7, 0.2, 0.0], Response::PreferFirst),
        ];
        let records = rows
            .iter()
            .filter(|r| mode == Mode::Indecisive || r.2 != Response::Indecision)
            .map(|(a, b, r)| Record {
                voter_id: "v".into(),
                query: ComparisonQuery::from_features(a.to_vec(), b.to_vec()).unwrap(),
                response: *r,
            })
            .collect();
        ResponseDataset::new(mode, records).unwrap()
    }

    #[test]
    fn budget_one_returns_first_candidate() {
        let data = toy(Mode::Indecisive);
        let fit = fit_model(&data, ModelKind::MinDelta, &SearchOptions::new(1, 0)).unwrap();
        assert_eq!(fit.candidate_index, 0);
        // First unscrambled candidate is the cube midpoint.
        let m = fit.model.as_single().unwrap();
        assert_eq!(m.weights(), &[0.0, 0.0, 0.0]);
        assert_eq!(m.threshold(), 1.0);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let data = toy(Mode::Indecisive);
        assert!(fit_model(&data, ModelKind::MinU, &SearchOptions::new(0, 0)).is_err());
        let empty = ResponseDataset::empty(Mode::Indecisive);
        assert!(matches!(
            fit_model(&empty, ModelKind::MinU, &SearchOptions::new(5, 0)),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        for mode in [Mode::Indecisive, Mode::Strict] {
            let data = toy(mode);
            for kind in ModelKind::all(MaxUForm::TwiceMin) {
                let opts = SearchOptions::new(300, 17);
                let a = fit_model(&data, kind, &opts.with_execution(Execution::Sequential)).unwrap();
                let b = fit_model(&data, kind, &opts.with_execution(Execution::Parallel)).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn strict_fit_carries_policy() {
        let data = toy(Mode::Strict);
        let fit = fit_model(&data, ModelKind::MaxDelta, &SearchOptions::new(50, 3)).unwrap();
        let policy = fit.policy.unwrap();
        assert!(policy.q() > 0.0 && policy.q() < 1.0);
        let logit = fit_model(&data, ModelKind::Logit, &SearchOptions::new(50, 3)).unwrap();
        assert!(logit.policy.is_none());
    }

    #[test]
    fn naive_rand_uses_indecision_share() {
        let data = toy(Mode::Indecisive);
        let fit = fit_model(&data, ModelKind::NaiveRand, &SearchOptions::new(1, 0)).unwrap();
        assert_eq!(fit.model.as_single().unwrap().rand_q(), 0.25);
        let strict = fit_model(&toy(Mode::Strict), ModelKind::NaiveRand, &SearchOptions::new(1, 0))
            .unwrap();
        assert!((strict.train_ll - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mixture_fit_is_deterministic() {
        let data = toy(Mode::Indecisive);
        let opts = SearchOptions::new(200, 5);
        let a = fit_k_mixture(&data, 2, None, MaxUForm::TwiceMin, &opts).unwrap();
        let b = fit_k_mixture(&data, 2, None, MaxUForm::TwiceMin, &opts).unwrap();
        assert_eq!(a, b);
        let ll = a.model.log_likelihood(&data, a.policy.as_ref()).unwrap();
        assert_eq!(ll, a.train_ll);
    }

    #[test]
    fn vmixture_requires_voters() {
        assert!(fit_vmixture(&[], MaxUForm::TwiceMin, &SearchOptions::new(10, 0)).is_err());
    }
}
