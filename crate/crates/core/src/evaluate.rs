//! Train/test splits, per-voter model ranking and group-level reports.

use std::cmp::Ordering;

use rand::seq::SliceRandom;

use crate::dataset::ResponseDataset;
use crate::error::{Error, Result};
use crate::fitting::{fit_model, FitResult, FittedModel, SearchOptions};
use crate::model::{ModelKind, StrictPolicy};
use crate::rng::{derive_seed, seeded};

/// Default number of training voters for the representatives paradigm.
pub const REPRESENTATIVE_VOTERS: usize = 20;
/// Default number of training voters for the population paradigm.
pub const POPULATION_VOTERS: usize = 100;

/// Random halves of one voter's records: train gets `⌈n/2⌉`, test the rest.
/// Both halves keep the original record order.
pub fn split_individual(data: &ResponseDataset, seed: u64) -> Result<(ResponseDataset, ResponseDataset)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Insufficient(format!(
            "splitting needs at least 2 records, found {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let cut = n.div_ceil(2);
    let mut train = order[..cut].to_vec();
    let mut test = order[cut..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select(&train), data.select(&test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Paradigm {
    /// Each voter is fitted and tested on its own halves.
    Individual,
    /// Predict held-out answers of the training voters only.
    Representatives,
    /// Predict the whole population from a subset of voters.
    Population,
}

impl Paradigm {
    pub fn slug(self) -> &'static str {
        match self {
            Paradigm::Individual => "individual",
            Paradigm::Representatives => "representatives",
            Paradigm::Population => "population",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        match s {
            "individual" => Some(Paradigm::Individual),
            "representatives" => Some(Paradigm::Representatives),
            "population" => Some(Paradigm::Population),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub paradigm: Paradigm,
    /// Ignored by the individual paradigm, which trains on every voter.
    pub train_voters: usize,
    pub seed: u64,
}

/// Whether a test record belongs to a voter whose other answers were trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VoterRole {
    TrainVoter,
    TestVoter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSplit {
    pub train: ResponseDataset,
    pub test: ResponseDataset,
    /// One label per test record.
    pub test_roles: Vec<VoterRole>,
    /// Training voters in input order.
    pub train_voters: Vec<String>,
    /// Training half of each training voter, in the same order.
    pub per_voter_train: Vec<(String, ResponseDataset)>,
}

pub fn split_group(data: &ResponseDataset, spec: &SplitSpec) -> Result<GroupSplit> {
    let voters = data.by_voter();
    let k = match spec.paradigm {
        Paradigm::Individual => voters.len(),
        _ => spec.train_voters,
    };
    if k == 0 {
        return Err(Error::InvalidParameter("at least one training voter is required".into()));
    }
    if k > voters.len() {
        return Err(Error::Insufficient(format!(
            "{k} training voters requested but only {} present",
            voters.len()
        )));
    }
    let mut picks: Vec<usize> = (0..voters.len()).collect();
    picks.shuffle(&mut seeded(spec.seed));
    let mut chosen = vec![false; voters.len()];
    for &i in &picks[..k] {
        chosen[i] = true;
    }

    let mut train = ResponseDataset::empty(data.mode());
    let mut test = ResponseDataset::empty(data.mode());
    let mut test_roles = Vec::new();
    let mut train_voters = Vec::with_capacity(k);
    let mut per_voter_train = Vec::with_capacity(k);
    for (i, (voter, records)) in voters.iter().enumerate() {
        if chosen[i] {
            let (tr, te) = split_individual(records, derive_seed(spec.seed, i as u64))?;
            train.extend(&tr)?;
            test.extend(&te)?;
            test_roles.extend(std::iter::repeat_n(VoterRole::TrainVoter, te.len()));
            train_voters.push(voter.clone());
            per_voter_train.push((voter.clone(), tr));
        } else if spec.paradigm == Paradigm::Population {
            test.extend(records)?;
            test_roles.extend(std::iter::repeat_n(VoterRole::TestVoter, records.len()));
        }
    }
    Ok(GroupSplit {
        train,
        test,
        test_roles,
        train_voters,
        per_voter_train,
    })
}

/// Train and test likelihood of one model kind for one voter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindScore {
    pub kind: ModelKind,
    pub train_ll: f64,
    pub test_ll: f64,
}

impl KindScore {
    pub fn from_fit(fit: &FitResult) -> Result<Self> {
        let kind = fit
            .kind()
            .ok_or_else(|| Error::InvalidParameter("ranking needs single-model fits".into()))?;
        let test_ll = fit
            .test_ll
            .ok_or_else(|| Error::Insufficient(format!("{kind} fit has no test likelihood")))?;
        Ok(KindScore {
            kind,
            train_ll: fit.train_ll,
            test_ll,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankBy {
    #[default]
    Test,
    Train,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub kind: ModelKind,
    pub n_1st: usize,
    pub n_2nd: usize,
    pub n_3rd: usize,
    pub median_train_ll: f64,
    pub median_test_ll: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub voters: usize,
    pub rank_by: RankBy,
    /// In fixed kind order.
    pub rows: Vec<RankRow>,
}

impl RankTable {
    pub fn row(&self, kind: ModelKind) -> Option<&RankRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }
}

fn descending(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Kinds of one voter from best to worst.
pub fn order_kinds(scores: &[KindScore], by: RankBy) -> Vec<ModelKind> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| {
        let (primary, secondary) = match by {
            RankBy::Test => (descending(a.test_ll, b.test_ll), descending(a.train_ll, b.train_ll)),
            RankBy::Train => (descending(a.train_ll, b.train_ll), descending(a.test_ll, b.test_ll)),
        };
        primary
            .then(secondary)
            .then(a.kind.order().cmp(&b.kind.order()))
    });
    sorted.into_iter().map(|s| s.kind).collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Counts how often each kind is 1st, 2nd and 3rd across voters.
/// Every voter must have a score for the same set of kinds.
pub fn rank_models(per_voter: &[Vec<KindScore>], by: RankBy) -> Result<RankTable> {
    let first = per_voter
        .first()
        .ok_or_else(|| Error::Insufficient("ranking needs at least one voter".into()))?;
    let mut kinds: Vec<ModelKind> = first.iter().map(|s| s.kind).collect();
    kinds.sort_by_key(|k| k.order());
    kinds.dedup();
    if kinds.len() != first.len() {
        return Err(Error::InvalidParameter("duplicate model kind for one voter".into()));
    }
    for (v, scores) in per_voter.iter().enumerate() {
        let mut own: Vec<ModelKind> = scores.iter().map(|s| s.kind).collect();
        own.sort_by_key(|k| k.order());
        if own != kinds {
            return Err(Error::Insufficient(format!(
                "voter {v} does not have a result for every model kind"
            )));
        }
    }

    let mut rows: Vec<RankRow> = kinds
        .iter()
        .map(|&kind| {
            let mut train: Vec<f64> = Vec::with_capacity(per_voter.len());
            let mut test: Vec<f64> = Vec::with_capacity(per_voter.len());
            for scores in per_voter {
                let s = scores.iter().find(|s| s.kind == kind).expect("checked above");
                train.push(s.train_ll);
                test.push(s.test_ll);
            }
            RankRow {
                kind,
                n_1st: 0,
                n_2nd: 0,
                n_3rd: 0,
                median_train_ll: median(&mut train),
                median_test_ll: median(&mut test),
            }
        })
        .collect();
    for scores in per_voter {
        for (place, kind) in order_kinds(scores, by).into_iter().take(3).enumerate() {
            let row = rows.iter_mut().find(|r| r.kind == kind).expect("known kind");
            match place {
                0 => row.n_1st += 1,
                1 => row.n_2nd += 1,
                _ => row.n_3rd += 1,
            }
        }
    }
    Ok(RankTable {
        voters: per_voter.len(),
        rank_by: by,
        rows,
    })
}

/// All single-model fits of one voter.
#[derive(Debug, Clone, PartialEq)]
pub struct VoterEvaluation {
    pub voter_id: String,
    /// One fit per requested kind, each with its test likelihood.
    pub fits: Vec<FitResult>,
}

impl VoterEvaluation {
    pub fn scores(&self) -> Result<Vec<KindScore>> {
        self.fits.iter().map(KindScore::from_fit).collect()
    }
}

/// Individual paradigm: halve each voter's records, fit every kind on the
/// training half and score it on the test half.
pub fn evaluate_individuals(
    data: &ResponseDataset,
    kinds: &[ModelKind],
    opts: &SearchOptions,
    split_seed: u64,
) -> Result<Vec<VoterEvaluation>> {
    if kinds.is_empty() {
        return Err(Error::InvalidParameter("no model kinds to evaluate".into()));
    }
    let voters: Vec<(usize, (String, ResponseDataset))> =
        data.by_voter().into_iter().enumerate().collect();
    if voters.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let results = opts.execution.map(&voters, |(i, (voter, records))| {
        let (train, test) = split_individual(records, derive_seed(split_seed, *i as u64))?;
        let fits = kinds
            .iter()
            .map(|&kind| {
                let mut fit = fit_model(&train, kind, opts)?;
                fit.evaluate_test(&test)?;
                Ok(fit)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VoterEvaluation {
            voter_id: voter.clone(),
            fits,
        })
    });
    results.into_iter().collect()
}

/// Mean train and test likelihood of one model on a group split.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupReportRow {
    pub label: String,
    pub train_ll: f64,
    pub test_ll: f64,
    /// `None` when no test record has this role.
    pub test_ll_train_voters: Option<f64>,
    pub test_ll_test_voters: Option<f64>,
}

/// Mean of `values`, summed in sorted order so the result does not depend on
/// record order.
fn order_free_mean(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn group_report_row(
    label: &str,
    model: &FittedModel,
    policy: Option<&StrictPolicy>,
    split: &GroupSplit,
) -> Result<GroupReportRow> {
    let train = model.record_log_probs(&split.train, policy)?;
    let test = model.record_log_probs(&split.test, policy)?;
    let by_role = |role: VoterRole| {
        order_free_mean(
            test.iter()
                .zip(&split.test_roles)
                .filter(|(_, r)| **r == role)
                .map(|(lp, _)| *lp)
                .collect(),
        )
    };
    Ok(GroupReportRow {
        label: label.to_string(),
        train_ll: order_free_mean(train).ok_or(Error::EmptyDataset)?,
        test_ll: order_free_mean(test.clone()).ok_or(Error::EmptyDataset)?,
        test_ll_train_voters: by_role(VoterRole::TrainVoter),
        test_ll_test_voters: by_role(VoterRole::TestVoter),
    })
}

/// One report row per labelled model.
pub fn group_report(
    models: &[(String, FittedModel, Option<StrictPolicy>)],
    split: &GroupSplit,
) -> Result<Vec<GroupReportRow>> {
    models
        .iter()
        .map(|(label, model, policy)| group_report_row(label, model, policy.as_ref(), split))
        .collect()
}
