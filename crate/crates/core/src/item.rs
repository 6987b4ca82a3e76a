use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw patient attributes as shown to survey participants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patient {
    /// Years.
    pub age: f64,
    /// Alcoholic drinks per week.
    pub drinks: f64,
    pub dependents: f64,
}

impl Patient {
    pub fn new(age: f64, drinks: f64, dependents: f64) -> Self {
        Patient {
            age,
            drinks,
            dependents,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.age, self.drinks, self.dependents]
    }
}

/// A choice alternative. `features` is the normalized, dimensionless vector
/// the models operate on.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub features: Vec<f64>,
    pub raw: Option<Patient>,
}

impl Item {
    pub fn new(features: Vec<f64>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidParameter(
                "an item needs at least one feature".into(),
            ));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite feature value".into()));
        }
        Ok(Item {
            features,
            raw: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// Closed interval `[min, max]` used for min-max normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::InvalidParameter(format!(
                "feature range [{min}, {max}] must be finite with max > min"
            )));
        }
        Ok(FeatureRange { min, max })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    fn scale(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }
}

/// Min-max normalizer mapping raw patient attributes onto `[0, 1]`.
///
/// Feature order is (age, drinks, dependents).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub age: FeatureRange,
    pub drinks: FeatureRange,
    pub dependents: FeatureRange,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            age: FeatureRange {
                min: 25.0,
                max: 70.0,
            },
            drinks: FeatureRange { min: 1.0, max: 5.0 },
            dependents: FeatureRange { min: 0.0, max: 2.0 },
        }
    }
}

impl Normalizer {
    pub const DIM: usize = 3;

    pub fn ranges(&self) -> [FeatureRange; 3] {
        [self.age, self.drinks, self.dependents]
    }

    pub fn normalize(&self, patient: Patient) -> Item {
        let features = patient
            .as_array()
            .iter()
            .zip(self.ranges())
            .map(|(&x, r)| r.scale(x))
            .collect();
        Item {
            features,
            raw: Some(patient),
        }
    }
}

/// An ordered pair of items presented to an agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonQuery {
    pub first: Item,
    pub second: Item,
    pub id: Option<usize>,
}

impl ComparisonQuery {
    pub fn new(first: Item, second: Item) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: second.dim(),
            });
        }
        Ok(ComparisonQuery {
            first,
            second,
            id: None,
        })
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = Some(id);
        self
    }

    /// Builds a query straight from normalized feature vectors.
    pub fn from_features(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        ComparisonQuery::new(Item::new(first)?, Item::new(second)?)
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    /// The same comparison with the items presented in the opposite order.
    pub fn swapped(&self) -> Self {
        ComparisonQuery {
            first: self.second.clone(),
            second: self.first.clone(),
            id: self.id,
        }
    }
}
