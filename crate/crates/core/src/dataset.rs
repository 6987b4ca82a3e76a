use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::item::ComparisonQuery;
use crate::response::Response;

/// Whether respondents were allowed to be indecisive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Indecisive,
    Strict,
}

impl Mode {
    pub fn slug(self) -> &'static str {
        match self {
            Mode::Indecisive => "indecisive",
            Mode::Strict => "strict",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        match s {
            "indecisive" => Some(Mode::Indecisive),
            "strict" => Some(Mode::Strict),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub voter_id: String,
    pub query: ComparisonQuery,
    pub response: Response,
}

/// Voter-tagged (query, response) records from one elicitation mode.
///
/// In strict mode no record carries an indecision response, and all queries
/// share one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseDataset {
    mode: Mode,
    records: Vec<Record>,
}

impl ResponseDataset {
    pub fn new(mode: Mode, records: Vec<Record>) -> Result<Self> {
        let mut ds = ResponseDataset {
            mode,
            records: Vec::with_capacity(records.len()),
        };
        for r in records {
            ds.push(r)?;
        }
        Ok(ds)
    }

    pub fn empty(mode: Mode) -> Self {
        ResponseDataset {
            mode,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: Record) -> Result<()> {
        if self.mode == Mode::Strict && record.response == Response::Indecision {
            return Err(Error::IndecisionInStrict {
                index: self.records.len(),
            });
        }
        if let Some(dim) = self.dim() {
            if record.query.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: record.query.dim(),
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Feature dimension, or `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.query.dim())
    }

    /// Distinct voter ids in order of first appearance.
    pub fn voters(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.voter_id.as_str()))
            .map(|r| r.voter_id.clone())
            .collect()
    }

    /// Records grouped per voter, preserving record order within each voter.
    pub fn by_voter(&self) -> Vec<(String, ResponseDataset)> {
        let order = self.voters();
        let mut groups: BTreeMap<&str, Vec<Record>> = BTreeMap::new();
        for r in &self.records {
            groups.entry(r.voter_id.as_str()).or_default().push(r.clone());
        }
        order
            .into_iter()
            .map(|v| {
                let records = groups.remove(v.as_str()).unwrap_or_default();
                (
                    v,
                    ResponseDataset {
                        mode: self.mode,
                        records,
                    },
                )
            })
            .collect()
    }

    pub fn filter_voter(&self, voter: &str) -> ResponseDataset {
        ResponseDataset {
            mode: self.mode,
            records: self
                .records
                .iter()
                .filter(|r| r.voter_id == voter)
                .cloned()
                .collect(),
        }
    }

    /// Subset by record positions, in the given order.
    pub fn select(&self, indices: &[usize]) -> ResponseDataset {
        ResponseDataset {
            mode: self.mode,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn extend(&mut self, other: &ResponseDataset) -> Result<()> {
        if other.mode != self.mode {
            return Err(Error::InvalidParameter(
                "cannot merge datasets from different modes".into(),
            ));
        }
        for r in &other.records {
            self.push(r.clone())?;
        }
        Ok(())
    }

    pub fn response_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for r in &self.records {
            c[r.response.index()] += 1;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(voter: &str, r: Response) -> Record {
        Record {
            voter_id: voter.into(),
            query: ComparisonQuery::from_features(vec![0.1], vec![0.2]).unwrap(),
            response: r,
        }
    }

    #[test]
    fn strict_mode_rejects_indecision() {
        let err = ResponseDataset::new(
            Mode::Strict,
            vec![rec("a", Response::PreferFirst), rec("a", Response::Indecision)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::IndecisionInStrict { index: 1 }));
    }

    #[test]
    fn grouping_preserves_first_appearance() {
        let ds = ResponseDataset::new(
            Mode::Indecisive,
            vec![
                rec("b", Response::PreferFirst),
                rec("a", Response::Indecision),
                rec("b", Response::PreferSecond),
            ],
        )
        .unwrap();
        assert_eq!(ds.voters(), vec!["b", "a"]);
        let groups = ds.by_voter();
        assert_eq!(groups[0].1.len(), 2);
        assert_eq!(groups[1].1.len(), 1);
        assert_eq!(ds.response_counts(), [1, 1, 1]);
    }

    #[test]
    fn dimension_is_enforced() {
        let mut ds = ResponseDataset::empty(Mode::Indecisive);
        ds.push(rec("a", Response::PreferFirst)).unwrap();
        let wide = Record {
            voter_id: "a".into(),
            query: ComparisonQuery::from_features(vec![0.1, 0.2], vec![0.2, 0.3]).unwrap(),
            response: Response::PreferFirst,
        };
        assert!(ds.push(wide).is_err());
    }
}
