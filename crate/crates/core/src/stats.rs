//! Vote tallies over a fixed question list and Pearson chi-squared tests
//! comparing an indecisive group with a strict group.
//!
//! H0-1 asks whether discarding indecisive votes leaves the same
//! majority/minority split as the strict group. H0-2 credits every
//! indecisive vote half to each patient ("effective" votes) and asks the
//! same question.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::dataset::{Mode, Record, ResponseDataset};
use crate::error::{Error, Result};
use crate::item::{ComparisonQuery, Normalizer};
use crate::response::Response;
use crate::rng::seeded;
use crate::simulate::{generate_queries, voter_label, FeatureSpec};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTally {
    pub question: usize,
    /// `PreferFirst` or `PreferSecond`.
    pub majority: Response,
    pub majority_count: f64,
    pub minority_count: f64,
    pub flip_count: f64,
    /// Both patients received the same number of strict votes; the first
    /// patient is then reported as the majority.
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateCounts {
    pub majority: f64,
    pub minority: f64,
    pub flips: f64,
}

impl AggregateCounts {
    pub fn new(majority: f64, minority: f64, flips: f64) -> Result<Self> {
        for x in [majority, minority, flips] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::InvalidParameter(format!("vote count {x} is not a non-negative number")));
            }
        }
        Ok(AggregateCounts {
            majority,
            minority,
            flips,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteTally {
    /// Ordered by question id.
    pub questions: Vec<QuestionTally>,
}

impl VoteTally {
    pub fn totals(&self) -> AggregateCounts {
        let mut t = AggregateCounts {
            majority: 0.0,
            minority: 0.0,
            flips: 0.0,
        };
        for q in &self.questions {
            t.majority += q.majority_count;
            t.minority += q.minority_count;
            t.flips += q.flip_count;
        }
        t
    }

    pub fn question_ids(&self) -> BTreeSet<usize> {
        self.questions.iter().map(|q| q.question).collect()
    }
}

fn question_id(index: usize, record: &Record) -> Result<usize> {
    record.query.id.ok_or_else(|| {
        Error::InvalidParameter(format!("record {index} has no question index"))
    })
}

/// Tallies strict votes and flips per question. Every voter must have
/// answered the same questions, and a question id must always denote the
/// same pair of patients.
pub fn tally_votes(data: &ResponseDataset) -> Result<VoteTally> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut pairs: BTreeMap<usize, &ComparisonQuery> = BTreeMap::new();
    let mut counts: BTreeMap<usize, [f64; 3]> = BTreeMap::new();
    let mut answered: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (i, record) in data.records().iter().enumerate() {
        let id = question_id(i, record)?;
        let known = pairs.entry(id).or_insert(&record.query);
        if known.first.features != record.query.first.features
            || known.second.features != record.query.second.features
        {
            return Err(Error::InvalidParameter(format!(
                "question {id} shows different patients in record {i}"
            )));
        }
        counts.entry(id).or_insert([0.0; 3])[record.response.index()] += 1.0;
        answered.entry(&record.voter_id).or_default().insert(id);
    }
    let all: BTreeSet<usize> = counts.keys().copied().collect();
    if let Some((voter, _)) = answered.iter().find(|(_, ids)| **ids != all) {
        return Err(Error::InvalidParameter(format!(
            "voter {voter} did not answer the shared question list"
        )));
    }
    let questions = counts
        .into_iter()
        .map(|(question, [flips, first, second])| {
            let (majority, majority_count, minority_count) = if first >= second {
                (Response::PreferFirst, first, second)
            } else {
                (Response::PreferSecond, second, first)
            };
            QuestionTally {
                question,
                majority,
                majority_count,
                minority_count,
                flip_count: flips,
                tie: first == second,
            }
        })
        .collect();
    Ok(VoteTally { questions })
}

/// Credits half of each flip to both patients.
pub fn effective_counts(counts: AggregateCounts) -> (f64, f64) {
    let half = counts.flips / 2.0;
    (counts.majority + half, counts.minority + half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquared {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the chi-squared distribution with one degree of
/// freedom.
pub fn chi_squared_sf_1(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        erfc((x / 2.0).sqrt())
    }
}

/// Pearson chi-squared test of independence on a 2×2 table with rows
/// `row_a` and `row_b`. Cells may be fractional. With `correction`, each
/// cell is moved towards its expectation by at most one half (Yates).
pub fn chi_squared_2x2(row_a: [f64; 2], row_b: [f64; 2], correction: bool) -> Result<ChiSquared> {
    let observed = [row_a, row_b];
    if observed.iter().flatten().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidParameter("table cells must be non-negative numbers".into()));
    }
    let rows = [row_a[0] + row_a[1], row_b[0] + row_b[1]];
    let cols = [row_a[0] + row_b[0], row_a[1] + row_b[1]];
    if rows.iter().chain(&cols).any(|t| *t <= 0.0) {
        return Err(Error::InvalidParameter("every row and column total must be positive".into()));
    }
    let total = rows[0] + rows[1];
    let mut statistic = 0.0;
    for (i, row) in observed.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] * cols[j] / total;
            let mut diff = e - o;
            if correction {
                diff = diff.signum() * diff.abs().min(0.5);
                diff = e - (o + diff);
            }
            statistic += diff * diff / e;
        }
    }
    Ok(ChiSquared {
        statistic,
        p_value: chi_squared_sf_1(statistic),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub alpha: f64,
    pub correction: bool,
    pub indecisive: AggregateCounts,
    pub strict: AggregateCounts,
    /// Indecisive group's effective (majority, minority) votes.
    pub effective: (f64, f64),
    /// Strict votes only.
    pub h0_1: HypothesisOutcome,
    /// Effective votes.
    pub h0_2: HypothesisOutcome,
    /// Per-question tallies when computed from datasets.
    pub indecisive_tally: Option<VoteTally>,
    pub strict_tally: Option<VoteTally>,
}

fn outcome(row_a: [f64; 2], row_b: [f64; 2], correction: bool, alpha: f64) -> Result<HypothesisOutcome> {
    let c = chi_squared_2x2(row_a, row_b, correction)?;
    Ok(HypothesisOutcome {
        statistic: c.statistic,
        p_value: c.p_value,
        rejected: c.p_value < alpha,
    })
}

pub fn hypothesis_tests_from_counts(
    indecisive: AggregateCounts,
    strict: AggregateCounts,
    correction: bool,
    alpha: f64,
) -> Result<HypothesisReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("significance level {alpha} outside (0, 1)")));
    }
    let strict_row = [strict.majority, strict.minority];
    let effective = effective_counts(indecisive);
    Ok(HypothesisReport {
        alpha,
        correction,
        indecisive,
        strict,
        effective,
        h0_1: outcome([indecisive.majority, indecisive.minority], strict_row, correction, alpha)?,
        h0_2: outcome([effective.0, effective.1], strict_row, correction, alpha)?,
        indecisive_tally: None,
        strict_tally: None,
    })
}

/// Tallies both groups and runs both tests. The groups must share the same
/// question ids.
pub fn run_hypothesis_tests(
    indecisive: &ResponseDataset,
    strict: &ResponseDataset,
    correction: bool,
    alpha: f64,
) -> Result<HypothesisReport> {
    if indecisive.mode() != Mode::Indecisive || strict.mode() != Mode::Strict {
        return Err(Error::InvalidParameter(
            "expected one indecisive-group and one strict-group dataset".into(),
        ));
    }
    let ind = tally_votes(indecisive)?;
    let st = tally_votes(strict)?;
    if ind.question_ids() != st.question_ids() {
        return Err(Error::InvalidParameter("the two groups answered different questions".into()));
    }
    let mut report = hypothesis_tests_from_counts(ind.totals(), st.totals(), correction, alpha)?;
    report.indecisive_tally = Some(ind);
    report.strict_tally = Some(st);
    Ok(report)
}

/// Electorate in which indecision carries no information: a voter is
/// indecisive with probability `indecision_rate` regardless of the question,
/// and otherwise prefers the first patient of question `q` with probability
/// `prefer_first[q]`. In the strict group an indecisive voter flips a fair
/// coin.
#[derive(Debug, Clone, PartialEq)]
pub struct NullElectorate {
    pub prefer_first: Vec<f64>,
    pub voters_per_group: usize,
    pub indecision_rate: f64,
}

impl NullElectorate {
    /// Both groups' datasets over one shared, seed-generated question list.
    pub fn simulate(&self, seed: u64) -> Result<(ResponseDataset, ResponseDataset)> {
        if self.prefer_first.is_empty() || self.voters_per_group == 0 {
            return Err(Error::InvalidParameter("the electorate needs questions and voters".into()));
        }
        if std::iter::once(&self.indecision_rate)
            .chain(&self.prefer_first)
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::InvalidParameter("probabilities must lie in [0, 1]".into()));
        }
        let mut rng = seeded(seed);
        let queries = generate_queries(
            &FeatureSpec::default(),
            &Normalizer::default(),
            self.prefer_first.len(),
            &mut rng,
        )?;
        let mut groups = [
            ResponseDataset::empty(Mode::Indecisive),
            ResponseDataset::empty(Mode::Strict),
        ];
        for (g, data) in groups.iter_mut().enumerate() {
            for v in 0..self.voters_per_group {
                let voter_id = voter_label(g * self.voters_per_group + v);
                for (query, &p) in queries.iter().zip(&self.prefer_first) {
                    let undecided = rng.random::<f64>() < self.indecision_rate;
                    let p_first = if undecided { 0.5 } else { p };
                    let response = if undecided && data.mode() == Mode::Indecisive {
                        Response::Indecision
                    } else if rng.random::<f64>() < p_first {
                        Response::PreferFirst
                    } else {
                        Response::PreferSecond
                    };
                    data.push(Record {
                        voter_id: voter_id.clone(),
                        query: query.clone(),
                        response,
                    })?;
                }
            }
        }
        let [indecisive, strict] = groups;
        Ok((indecisive, strict))
    }
}
