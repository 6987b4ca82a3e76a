//! Log-likelihood of response data under single models and mixtures.
//!
//! Likelihoods are reported as the mean log-probability per record.

use crate::dataset::{Mode, ResponseDataset};
use crate::error::{Error, Result};
use crate::model::{IndecisionModel, ModelKind, StrictPolicy};
use crate::response::Response;

const LN_HALF: f64 = -std::f64::consts::LN_2;

fn check(model: &IndecisionModel, dataset: &ResponseDataset, policy: Option<&StrictPolicy>) -> Result<()> {
    let dim = dataset.dim().ok_or(Error::EmptyDataset)?;
    let kind = model.kind();
    if kind.has_scores() && model.weights().len() != dim {
        return Err(Error::DimensionMismatch {
            expected: model.weights().len(),
            found: dim,
        });
    }
    if dataset.mode() == Mode::Strict && kind.has_threshold() && policy.is_none() {
        return Err(Error::MissingPolicy);
    }
    Ok(())
}

/// `ln p(response)`; may be `-inf`. Dimensions and the policy requirement
/// must already have been checked.
pub(crate) fn record_log_prob_unchecked(
    model: &IndecisionModel,
    mode: Mode,
    policy: Option<&StrictPolicy>,
    a: &[f64],
    b: &[f64],
    response: Response,
) -> f64 {
    match (mode, model.kind()) {
        (Mode::Indecisive, ModelKind::UniformRand) => -(3.0f64).ln(),
        (Mode::Indecisive, ModelKind::NaiveRand) => {
            let q = model.rand_q();
            if response == Response::Indecision {
                q.ln()
            } else {
                ((1.0 - q) / 2.0).ln()
            }
        }
        (Mode::Indecisive, _) => model.scores_unchecked(a, b).log_softmax(response),
        (Mode::Strict, _) if response == Response::Indecision => f64::NEG_INFINITY,
        (Mode::Strict, ModelKind::UniformRand | ModelKind::NaiveRand) => LN_HALF,
        (Mode::Strict, ModelKind::Logit) => {
            let s = model.scores_unchecked(a, b);
            let (own, other) = match response {
                Response::PreferFirst => (s.first, s.second),
                _ => (s.second, s.first),
            };
            // ln of the two-class softmax.
            let m = own.max(other);
            own - m - ((own - m).exp() + (other - m).exp()).ln()
        }
        (Mode::Strict, _) => {
            let s = model.scores_unchecked(a, b);
            let policy = policy.expect("strict policy checked by caller");
            policy.apply(&s).get(response).ln()
        }
    }
}

/// Per-record log-probabilities of `dataset` under `model`.
pub fn record_log_probs(
    model: &IndecisionModel,
    dataset: &ResponseDataset,
    policy: Option<&StrictPolicy>,
) -> Result<Vec<f64>> {
    check(model, dataset, policy)?;
    Ok(dataset
        .records()
        .iter()
        .map(|r| {
            record_log_prob_unchecked(
                model,
                dataset.mode(),
                policy,
                &r.query.first.features,
                &r.query.second.features,
                r.response,
            )
        })
        .collect())
}

/// Mean per-record log-likelihood. A record with probability zero is
/// reported as [`Error::ZeroProbability`] rather than returning `-inf`.
pub fn log_likelihood(
    model: &IndecisionModel,
    dataset: &ResponseDataset,
    policy: Option<&StrictPolicy>,
) -> Result<f64> {
    check(model, dataset, policy)?;
    let mut total = 0.0;
    for (index, r) in dataset.records().iter().enumerate() {
        let lp = record_log_prob_unchecked(
            model,
            dataset.mode(),
            policy,
            &r.query.first.features,
            &r.query.second.features,
            r.response,
        );
        if lp == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability { index });
        }
        if !lp.is_finite() {
            return Err(Error::NonFiniteScore(model.kind()));
        }
        total += lp;
    }
    Ok(total / dataset.len() as f64)
}

/// One submodel of a mixture. A component's own policy takes precedence over
/// the policy passed at evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub model: IndecisionModel,
    pub policy: Option<StrictPolicy>,
}

impl Component {
    pub fn new(model: IndecisionModel) -> Self {
        Component {
            model,
            policy: None,
        }
    }

    pub fn with_policy(model: IndecisionModel, policy: Option<StrictPolicy>) -> Self {
        Component { model, policy }
    }
}

/// Responds by picking a submodel, either uniformly (voter mixture) or from
/// the softmax of `weights` (k-mixture), and answering with it.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    components: Vec<Component>,
    weights: Vec<f64>,
    uniform: bool,
}

impl MixtureModel {
    pub fn weighted(components: Vec<Component>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("a mixture needs at least one component".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::InvalidParameter(format!(
                "{} mixture weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("non-finite mixture weight".into()));
        }
        Ok(MixtureModel {
            components,
            weights,
            uniform: false,
        })
    }

    /// Equal probability `1/V` for each of the `V` components.
    pub fn uniform(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("a mixture needs at least one component".into()));
        }
        let k = components.len();
        Ok(MixtureModel {
            components,
            weights: vec![0.0; k],
            uniform: true,
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Selection probability of each component.
    pub fn probabilities(&self) -> Vec<f64> {
        let k = self.components.len();
        if self.uniform {
            return vec![1.0 / k as f64; k];
        }
        let m = self.weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = self.weights.iter().map(|w| (w - m).exp()).collect();
        let total: f64 = e.iter().sum();
        e.iter().map(|x| x / total).collect()
    }

    fn log_probabilities(&self) -> Vec<f64> {
        let k = self.components.len();
        if self.uniform {
            return vec![-(k as f64).ln(); k];
        }
        let m = self.weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + self.weights.iter().map(|w| (w - m).exp()).sum::<f64>().ln();
        self.weights.iter().map(|w| w - lse).collect()
    }

    fn check(&self, dataset: &ResponseDataset, policy: Option<&StrictPolicy>) -> Result<()> {
        for c in &self.components {
            check(&c.model, dataset, c.policy.as_ref().or(policy))?;
        }
        Ok(())
    }

    pub(crate) fn record_log_prob_unchecked(
        &self,
        log_pi: &[f64],
        mode: Mode,
        policy: Option<&StrictPolicy>,
        a: &[f64],
        b: &[f64],
        response: Response,
    ) -> f64 {
        let mut terms = [0.0f64; 16];
        let mut heap;
        let buf: &mut [f64] = if self.components.len() <= terms.len() {
            &mut terms[..self.components.len()]
        } else {
            heap = vec![0.0; self.components.len()];
            &mut heap
        };
        for ((c, lp), slot) in self.components.iter().zip(log_pi).zip(buf.iter_mut()) {
            let pol = c.policy.as_ref().or(policy);
            *slot = lp + record_log_prob_unchecked(&c.model, mode, pol, a, b, response);
        }
        log_sum_exp(buf)
    }

    pub fn record_log_probs(
        &self,
        dataset: &ResponseDataset,
        policy: Option<&StrictPolicy>,
    ) -> Result<Vec<f64>> {
        self.check(dataset, policy)?;
        let log_pi = self.log_probabilities();
        Ok(dataset
            .records()
            .iter()
            .map(|r| {
                self.record_log_prob_unchecked(
                    &log_pi,
                    dataset.mode(),
                    policy,
                    &r.query.first.features,
                    &r.query.second.features,
                    r.response,
                )
            })
            .collect())
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Mean per-record log-likelihood of a mixture,
/// `(1/L) Σ_l ln Σ_k π_k p_k(record_l)`.
pub fn mixture_log_likelihood(
    mix: &MixtureModel,
    dataset: &ResponseDataset,
    policy: Option<&StrictPolicy>,
) -> Result<f64> {
    mix.check(dataset, policy)?;
    let log_pi = mix.log_probabilities();
    let mut total = 0.0;
    for (index, r) in dataset.records().iter().enumerate() {
        let lp = mix.record_log_prob_unchecked(
            &log_pi,
            dataset.mode(),
            policy,
            &r.query.first.features,
            &r.query.second.features,
            r.response,
        );
        if lp == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability { index });
        }
        total += lp;
    }
    Ok(total / dataset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Record;
    use crate::item::ComparisonQuery;
    use crate::model::StrictVariant;

    fn rec(a: &[f64], b: &[f64], r: Response) -> Record {
        Record {
            voter_id: "v".into(),
            query: ComparisonQuery::from_features(a.to_vec(), b.to_vec()).unwrap(),
            response: r,
        }
    }

    fn hand_dataset() -> ResponseDataset {
        ResponseDataset::new(
            Mode::Indecisive,
            vec![
                rec(&[0.5, 0.2, 1.0], &[0.1, 0.4, 0.5], Response::PreferFirst),
                rec(&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.5], Response::PreferSecond),
                rec(&[0.3, 0.3, 0.3], &[0.35, 0.3, 0.3], Response::Indecision),
            ],
        )
        .unwrap()
    }

    #[test]
    fn uniform_rand_is_minus_ln_three() {
        let ll = log_likelihood(&IndecisionModel::uniform_rand(), &hand_dataset(), None).unwrap();
        assert!((ll + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn naive_rand_certain_indecision() {
        let ds = ResponseDataset::new(
            Mode::Indecisive,
            vec![
                rec(&[0.1], &[0.2], Response::Indecision),
                rec(&[0.4], &[0.2], Response::Indecision),
            ],
        )
        .unwrap();
        let m = IndecisionModel::naive_rand(1.0).unwrap();
        assert_eq!(log_likelihood(&m, &ds, None).unwrap(), 0.0);
    }

    #[test]
    fn zero_probability_is_flagged() {
        let ds = ResponseDataset::new(
            Mode::Indecisive,
            vec![
                rec(&[0.1], &[0.2], Response::Indecision),
                rec(&[0.4], &[0.2], Response::PreferFirst),
            ],
        )
        .unwrap();
        let m = IndecisionModel::naive_rand(1.0).unwrap();
        assert!(matches!(
            log_likelihood(&m, &ds, None),
            Err(Error::ZeroProbability { index: 1 })
        ));
    }

    #[test]
    fn min_delta_hand_computed_records() {
        // mpmath: per-record ln p = -0.565105..., -0.142699..., -0.909664...
        let m = IndecisionModel::new(ModelKind::MinDelta, vec![1.0, -1.0, 0.5], 0.3).unwrap();
        let ds = hand_dataset();
        let lps = record_log_probs(&m, &ds, None).unwrap();
        let expected = [
            -0.565_105_454_637_390_231,
            -0.142_699_422_123_290_827,
            -0.909_664_375_100_275_493,
        ];
        for (lp, e) in lps.iter().zip(expected) {
            assert!((lp - e).abs() < 1e-14, "{lp} vs {e}");
        }
        let ll = log_likelihood(&m, &ds, None).unwrap();
        assert!((ll + 0.539_156_417_286_985_517).abs() < 1e-14);
    }

    #[test]
    fn empty_and_policy_errors() {
        let m = IndecisionModel::new(ModelKind::MinDelta, vec![1.0], 0.3).unwrap();
        assert!(matches!(
            log_likelihood(&m, &ResponseDataset::empty(Mode::Indecisive), None),
            Err(Error::EmptyDataset)
        ));
        let strict =
            ResponseDataset::new(Mode::Strict, vec![rec(&[0.3], &[0.1], Response::PreferFirst)])
                .unwrap();
        assert!(matches!(
            log_likelihood(&m, &strict, None),
            Err(Error::MissingPolicy)
        ));
        let p = StrictPolicy::new(0.5, StrictVariant::ClosedForm).unwrap();
        let ll = log_likelihood(&m, &strict, Some(&p)).unwrap();
        let s = m.scores(&strict.records()[0].query).unwrap();
        assert!((ll - p.apply(&s).p1.ln()).abs() < 1e-15);
        // Baselines need no policy in strict mode.
        let ll = log_likelihood(&IndecisionModel::uniform_rand(), &strict, None).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_component_mixture_matches_model() {
        let m = IndecisionModel::new(ModelKind::MaxDelta, vec![0.4, -1.0, 0.2], 0.5).unwrap();
        let ds = hand_dataset();
        let base = log_likelihood(&m, &ds, None).unwrap();
        for w in [-2.0, 0.0, 3.0] {
            let mix = MixtureModel::weighted(vec![Component::new(m.clone())], vec![w]).unwrap();
            let ll = mixture_log_likelihood(&mix, &ds, None).unwrap();
            assert!((ll - base).abs() < 1e-14);
        }
        let two = MixtureModel::weighted(
            vec![Component::new(m.clone()), Component::new(m.clone())],
            vec![1.3, -0.4],
        )
        .unwrap();
        assert!((mixture_log_likelihood(&two, &ds, None).unwrap() - base).abs() < 1e-14);
    }

    #[test]
    fn dominant_weight_selects_first_component() {
        let a = IndecisionModel::new(ModelKind::MinDelta, vec![1.0, -1.0, 0.5], 0.3).unwrap();
        let b = IndecisionModel::new(ModelKind::MinU, vec![-0.5, 0.8, 0.1], -0.4).unwrap();
        let ds = hand_dataset();
        let mix = MixtureModel::weighted(
            vec![Component::new(a.clone()), Component::new(b.clone())],
            vec![10.0, -10.0],
        )
        .unwrap();
        // Direct weighted sum of record probabilities.
        let pa = record_log_probs(&a, &ds, None).unwrap();
        let pb = record_log_probs(&b, &ds, None).unwrap();
        let wa = 1.0 / (1.0 + (-20f64).exp());
        let oracle: f64 = pa
            .iter()
            .zip(&pb)
            .map(|(x, y)| (wa * x.exp() + (1.0 - wa) * y.exp()).ln())
            .sum::<f64>()
            / 3.0;
        let ll = mixture_log_likelihood(&mix, &ds, None).unwrap();
        assert!((ll - oracle).abs() < 1e-12);
        assert!((ll - log_likelihood(&a, &ds, None).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn uniform_mixture_averages_record_probabilities() {
        let a = IndecisionModel::new(ModelKind::MinDelta, vec![1.0, -1.0, 0.5], 0.3).unwrap();
        let b = IndecisionModel::new(ModelKind::Dom, vec![-0.5, 0.8, 0.1], 0.2).unwrap();
        let ds = hand_dataset().select(&[0, 2]);
        let mix = MixtureModel::uniform(vec![Component::new(a.clone()), Component::new(b.clone())])
            .unwrap();
        let got = mix.record_log_probs(&ds, None).unwrap();
        for (i, r) in ds.records().iter().enumerate() {
            let pa = a.response_distribution(&r.query).unwrap().get(r.response);
            let pb = b.response_distribution(&r.query).unwrap().get(r.response);
            assert!((got[i].exp() - (pa + pb) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mixture_requires_components() {
        assert!(MixtureModel::uniform(vec![]).is_err());
        assert!(MixtureModel::weighted(
            vec![Component::new(IndecisionModel::uniform_rand())],
            vec![0.0, 1.0]
        )
        .is_err());
    }
}
