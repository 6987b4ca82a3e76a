//! File formats: the response CSV, fit results as JSON, and report tables
//! as CSV.
//!
//! All writers emit UTF-8 with LF line endings and format numbers with the
//! shortest representation that parses back to the same `f64`, so output
//! bytes depend only on the values written.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Mode, Record, ResponseDataset};
use crate::error::{Error, Result};
use crate::evaluate::{GroupReportRow, RankTable, VoterEvaluation};
use crate::fitting::{FitResult, FittedModel};
use crate::item::{ComparisonQuery, Item, Normalizer, Patient};
use crate::likelihood::{Component, MixtureModel};
use crate::model::{IndecisionModel, MaxUForm, ModelKind, StrictPolicy, StrictVariant};
use crate::response::Response;
use crate::stats::HypothesisReport;

pub const DATASET_HEADER: &str =
    "voter_id,question_idx,a_age,a_drinks,a_dependents,b_age,b_drinks,b_dependents,response,group";

/// A dataset together with non-fatal findings from parsing it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: ResponseDataset,
    pub warnings: Vec<String>,
}

fn raw_patient(item: &Item, normalizer: &Normalizer) -> Result<Patient> {
    if let Some(raw) = item.raw {
        return Ok(raw);
    }
    if item.dim() != Normalizer::DIM {
        return Err(Error::DimensionMismatch {
            expected: Normalizer::DIM,
            found: item.dim(),
        });
    }
    let [a, d, k] = normalizer
        .ranges()
        .map(|r| (r.min, r.max - r.min));
    let f = &item.features;
    Ok(Patient::new(a.0 + f[0] * a.1, d.0 + f[1] * d.1, k.0 + f[2] * k.1))
}

fn check_field(text: &str, line: usize, column: &str) -> Result<()> {
    if text.contains([',', '\n', '\r', '"']) {
        return Err(Error::Parse {
            line,
            message: format!("{column} {text:?} contains a reserved character"),
        });
    }
    Ok(())
}

/// Renders a dataset in the response CSV format. Items without raw
/// attributes are mapped back through `normalizer`.
pub fn dataset_to_csv(data: &ResponseDataset, normalizer: &Normalizer) -> Result<String> {
    let mut out = String::with_capacity(64 * (data.len() + 1));
    out.push_str(DATASET_HEADER);
    out.push('\n');
    for (i, r) in data.records().iter().enumerate() {
        check_field(&r.voter_id, i + 2, "voter_id")?;
        let a = raw_patient(&r.query.first, normalizer)?;
        let b = raw_patient(&r.query.second, normalizer)?;
        let id = r.query.id.map(|id| id.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.voter_id,
            id,
            a.age,
            a.drinks,
            a.dependents,
            b.age,
            b.drinks,
            b.dependents,
            r.response.code(),
            data.mode().slug()
        )
        .expect("writing to a String cannot fail");
    }
    Ok(out)
}

pub fn save_dataset(data: &ResponseDataset, normalizer: &Normalizer, path: &Path) -> Result<()> {
    fs::write(path, dataset_to_csv(data, normalizer)?)?;
    Ok(())
}

fn parse_number(text: &str, line: usize, column: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("{column} {text:?} is not a finite number"),
        })
}

/// Parses the response CSV. The elicitation mode comes from the `group`
/// column, which must be the same on every row. Raw attributes that are
/// not integers or fall outside the normalizer's ranges produce warnings.
pub fn read_dataset<R: Read>(reader: R, normalizer: &Normalizer) -> Result<LoadedDataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let header = csv.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != DATASET_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {DATASET_HEADER:?}, found {header:?}"),
        });
    }
    let names = [
        ("a_age", 0),
        ("a_drinks", 1),
        ("a_dependents", 2),
        ("b_age", 0),
        ("b_drinks", 1),
        ("b_dependents", 2),
    ];
    let ranges = normalizer.ranges();
    let mut mode: Option<Mode> = None;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for row in csv.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let voter_id = row[0].to_string();
        let id = match row[1].trim() {
            "" => None,
            s => Some(s.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("question_idx {s:?} is not a non-negative integer"),
            })?),
        };
        let mut raw = [0.0; 6];
        for (k, (name, feature)) in names.iter().enumerate() {
            let x = parse_number(&row[2 + k], line, name)?;
            if x.fract() != 0.0 {
                warnings.push(format!("line {line}: {name} = {x} is not an integer"));
            }
            if !ranges[*feature].contains(x) {
                let r = ranges[*feature];
                warnings.push(format!(
                    "line {line}: {name} = {x} outside the range [{}, {}]",
                    r.min, r.max
                ));
            }
            raw[k] = x;
        }
        let response = row[8]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Response::from_code)
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("response {:?} is not one of 0, 1, 2", &row[8]),
            })?;
        let group = Mode::from_slug(row[9].trim()).ok_or_else(|| Error::Parse {
            line,
            message: format!("group {:?} is neither indecisive nor strict", &row[9]),
        })?;
        match mode {
            None => mode = Some(group),
            Some(m) if m != group => {
                return Err(Error::Parse {
                    line,
                    message: format!("group {} in a {} file", group.slug(), m.slug()),
                })
            }
            Some(_) => {}
        }
        if group == Mode::Strict && response == Response::Indecision {
            return Err(Error::Parse {
                line,
                message: "indecision response in a strict-group file".into(),
            });
        }
        let first = normalizer.normalize(Patient::new(raw[0], raw[1], raw[2]));
        let second = normalizer.normalize(Patient::new(raw[3], raw[4], raw[5]));
        let mut query = ComparisonQuery::new(first, second)?;
        query.id = id;
        records.push(Record {
            voter_id,
            query,
            response,
        });
    }
    let mode = mode.ok_or(Error::EmptyDataset)?;
    Ok(LoadedDataset {
        dataset: ResponseDataset::new(mode, records)?,
        warnings,
    })
}

pub fn load_dataset(path: &Path, normalizer: &Normalizer) -> Result<LoadedDataset> {
    read_dataset(fs::File::open(path)?, normalizer)
}

/// Serialized form of a single model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model_kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxu_variant: Option<String>,
    pub weights: Vec<f64>,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rand_q: Option<f64>,
}

impl ModelRecord {
    pub fn new(model: &IndecisionModel, policy: Option<&StrictPolicy>) -> Self {
        let kind = model.kind();
        ModelRecord {
            model_kind: kind.slug().to_string(),
            maxu_variant: match kind {
                ModelKind::MaxU(form) => Some(form.slug().to_string()),
                _ => None,
            },
            weights: model.weights().to_vec(),
            lambda: kind.has_threshold().then(|| model.threshold()),
            q: policy.map(|p| p.q()),
            strict_variant: policy.map(|p| p.variant.slug().to_string()),
            rand_q: (kind == ModelKind::NaiveRand).then(|| model.rand_q()),
        }
    }

    pub fn model(&self) -> Result<(IndecisionModel, Option<StrictPolicy>)> {
        let form = match &self.maxu_variant {
            Some(s) => MaxUForm::from_slug(s)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown Max-U variant {s:?}")))?,
            None => MaxUForm::default(),
        };
        let kind = ModelKind::from_slug(&self.model_kind, form).ok_or_else(|| {
            Error::InvalidParameter(format!("unknown model kind {:?}", self.model_kind))
        })?;
        let model = match kind {
            ModelKind::NaiveRand => IndecisionModel::naive_rand(self.rand_q.ok_or_else(|| {
                Error::InvalidParameter("naive-rand result without rand_q".into())
            })?)?,
            ModelKind::UniformRand => IndecisionModel::uniform_rand(),
            ModelKind::Logit => IndecisionModel::logit(self.weights.clone())?,
            _ => IndecisionModel::new(
                kind,
                self.weights.clone(),
                self.lambda.ok_or_else(|| {
                    Error::InvalidParameter(format!("{kind} result without lambda"))
                })?,
            )?,
        };
        let policy = match self.q {
            None => None,
            Some(q) => {
                let variant = match &self.strict_variant {
                    Some(s) => StrictVariant::from_slug(s).ok_or_else(|| {
                        Error::InvalidParameter(format!("unknown strict variant {s:?}"))
                    })?,
                    None => StrictVariant::default(),
                };
                Some(StrictPolicy::new(q, variant)?)
            }
        };
        Ok((model, policy))
    }
}

/// Serialized [`FitResult`]. Single models fill the model fields directly;
/// mixtures use `model_kind = "mixture"` and list their components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    #[serde(flatten)]
    pub model: ModelRecord,
    pub train_ll: f64,
    pub test_ll: Option<f64>,
    pub seed: u64,
    pub budget: usize,
    pub candidate_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub uniform: bool,
    pub mixture_weights: Vec<f64>,
    pub components: Vec<ModelRecord>,
}

pub const MIXTURE_KIND: &str = "mixture";

impl FitRecord {
    pub fn from_fit(fit: &FitResult) -> Self {
        let (model, mixture) = match &fit.model {
            FittedModel::Single(m) => (ModelRecord::new(m, fit.policy.as_ref()), None),
            FittedModel::Mixture(mix) => (
                ModelRecord {
                    model_kind: MIXTURE_KIND.to_string(),
                    maxu_variant: None,
                    weights: Vec::new(),
                    lambda: None,
                    q: fit.policy.map(|p| p.q()),
                    strict_variant: fit.policy.map(|p| p.variant.slug().to_string()),
                    rand_q: None,
                },
                Some(MixtureRecord {
                    uniform: mix.is_uniform(),
                    mixture_weights: mix.weights().to_vec(),
                    components: mix
                        .components()
                        .iter()
                        .map(|c| ModelRecord::new(&c.model, c.policy.as_ref()))
                        .collect(),
                }),
            ),
        };
        FitRecord {
            model,
            train_ll: fit.train_ll,
            test_ll: fit.test_ll,
            seed: fit.seed,
            budget: fit.budget,
            candidate_index: fit.candidate_index,
            mixture,
        }
    }

    pub fn to_fit(&self) -> Result<FitResult> {
        let (model, policy) = match &self.mixture {
            None => {
                let (m, p) = self.model.model()?;
                (FittedModel::Single(m), p)
            }
            Some(mix) => {
                let components = mix
                    .components
                    .iter()
                    .map(|c| c.model().map(|(m, p)| Component::with_policy(m, p)))
                    .collect::<Result<Vec<_>>>()?;
                let mixture = if mix.uniform {
                    MixtureModel::uniform(components)?
                } else {
                    MixtureModel::weighted(components, mix.mixture_weights.clone())?
                };
                let policy = match self.model.q {
                    None => None,
                    Some(q) => {
                        let variant = self
                            .model
                            .strict_variant
                            .as_deref()
                            .and_then(StrictVariant::from_slug)
                            .unwrap_or_default();
                        Some(StrictPolicy::new(q, variant)?)
                    }
                };
                (FittedModel::Mixture(mixture), policy)
            }
        };
        Ok(FitResult {
            model,
            policy,
            train_ll: self.train_ll,
            test_ll: self.test_ll,
            budget: self.budget,
            seed: self.seed,
            candidate_index: self.candidate_index,
        })
    }

    /// Short name for tables: the model kind, or `mixture`.
    pub fn label(&self) -> &str {
        &self.model.model_kind
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn fit_to_json(fit: &FitResult) -> Result<String> {
    to_json(&FitRecord::from_fit(fit))
}

pub fn fit_from_json(text: &str) -> Result<FitResult> {
    serde_json::from_str::<FitRecord>(text)?.to_fit()
}

/// Per-voter results of the individual paradigm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterRecord {
    pub voter_id: String,
    pub fits: Vec<FitRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub paradigm: String,
    pub voters: Vec<VoterRecord>,
}

impl EvaluationRecord {
    pub fn new(paradigm: &str, voters: &[VoterEvaluation]) -> Self {
        EvaluationRecord {
            paradigm: paradigm.to_string(),
            voters: voters
                .iter()
                .map(|v| VoterRecord {
                    voter_id: v.voter_id.clone(),
                    fits: v.fits.iter().map(FitRecord::from_fit).collect(),
                })
                .collect(),
        }
    }

    pub fn voter_evaluations(&self) -> Result<Vec<VoterEvaluation>> {
        self.voters
            .iter()
            .map(|v| {
                Ok(VoterEvaluation {
                    voter_id: v.voter_id.clone(),
                    fits: v.fits.iter().map(FitRecord::to_fit).collect::<Result<_>>()?,
                })
            })
            .collect()
    }
}

/// A fit under a free-form label, e.g. one row of a group report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledFit {
    pub label: String,
    pub fit: FitRecord,
}

/// A simulated voter's true parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub voter_id: String,
    #[serde(flatten)]
    pub model: ModelRecord,
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    to_json(value)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const RANK_TABLE_HEADER: &str = "model,n_1st,n_2nd,n_3rd,median_train_ll,median_test_ll";

pub fn rank_table_csv(table: &RankTable) -> String {
    let mut out = format!("{RANK_TABLE_HEADER}\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.kind, r.n_1st, r.n_2nd, r.n_3rd, r.median_train_ll, r.median_test_ll
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub const VOTER_FITS_HEADER: &str = "voter_id,model,train_ll,test_ll";

pub fn voter_fits_csv(voters: &[VoterEvaluation]) -> String {
    let mut out = format!("{VOTER_FITS_HEADER}\n");
    for v in voters {
        for f in &v.fits {
            let label = f.kind().map_or(MIXTURE_KIND, |k| k.slug());
            writeln!(out, "{},{},{},{}", v.voter_id, label, f.train_ll, opt(f.test_ll))
                .expect("writing to a String cannot fail");
        }
    }
    out
}

pub const GROUP_REPORT_HEADER: &str =
    "model,train_ll,test_ll_all,test_ll_train_voters,test_ll_test_voters";

pub fn group_report_csv(rows: &[GroupReportRow]) -> String {
    let mut out = format!("{GROUP_REPORT_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.label,
            r.train_ll,
            r.test_ll,
            opt(r.test_ll_train_voters),
            opt(r.test_ll_test_voters)
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub const HYPOTHESIS_HEADER: &str =
    "hypothesis,indecisive_majority,indecisive_minority,strict_majority,strict_minority,statistic,p_value,rejected";

pub fn hypothesis_csv(report: &HypothesisReport) -> String {
    let mut out = format!("{HYPOTHESIS_HEADER}\n");
    let rows = [
        ("H0-1", report.indecisive.majority, report.indecisive.minority, &report.h0_1),
        ("H0-2", report.effective.0, report.effective.1, &report.h0_2),
    ];
    for (name, maj, min, o) in rows {
        writeln!(
            out,
            "{name},{maj},{min},{},{},{},{},{}",
            report.strict.majority, report.strict.minority, o.statistic, o.p_value, o.rejected
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub const TALLY_HEADER: &str = "group,question_idx,majority,majority_count,minority_count,flip_count,tie";

pub fn tally_csv(report: &HypothesisReport) -> String {
    let mut out = format!("{TALLY_HEADER}\n");
    let groups = [
        (Mode::Indecisive, &report.indecisive_tally),
        (Mode::Strict, &report.strict_tally),
    ];
    for (mode, tally) in groups {
        for q in tally.iter().flat_map(|t| &t.questions) {
            let side = if q.majority == Response::PreferFirst { "a" } else { "b" };
            writeln!(
                out,
                "{},{},{side},{},{},{},{}",
                mode.slug(),
                q.question,
                q.majority_count,
                q.minority_count,
                q.flip_count,
                q.tie
            )
            .expect("writing to a String cannot fail");
        }
    }
    out
}

pub const FIT_SUMMARY_HEADER: &str = "source,model,train_ll,test_ll,seed,budget,candidate_index";

pub fn fit_summary_csv(fits: &[(String, FitRecord)]) -> String {
    let mut out = format!("{FIT_SUMMARY_HEADER}\n");
    for (source, f) in fits {
        writeln!(
            out,
            "{source},{},{},{},{},{},{}",
            f.label(),
            f.train_ll,
            opt(f.test_ll),
            f.seed,
            f.budget,
            f.candidate_index
        )
        .expect("writing to a String cannot fail");
    }
    out
}
