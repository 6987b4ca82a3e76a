//! Search domains and the mapping from unit-cube points to parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{Component, MixtureModel};
use crate::model::{IndecisionModel, MaxUForm, ModelKind, StrictPolicy, StrictVariant};

/// Half the spacing of 32-bit Sobol coordinates; shifts a coordinate to the
/// centre of its cell so open intervals never see an endpoint.
const HALF_CELL: f64 = 1.0 / 8_589_934_592.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let i = Interval { lo, hi };
        i.validate("interval")?;
        Ok(i)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::InvalidParameter(format!(
                "{name} bounds [{}, {}] must be finite and ordered",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Affine image of `t ∈ [0, 1)`.
    pub fn map(&self, t: f64) -> f64 {
        self.lo + t * (self.hi - self.lo)
    }

    /// Image of `t` in the open interval `(lo, hi)`.
    pub fn map_open(&self, t: f64) -> f64 {
        self.lo + (t + HALF_CELL) * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Search bounds for every parameter type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Applied to each utility weight.
    pub weight: Interval,
    /// λ for Min-δ and Max-δ.
    pub difference_threshold: Interval,
    /// λ for Min-U, Max-U and Dom.
    pub level_threshold: Interval,
    /// Strict-mode coin probability; searched on the open interval.
    pub q: Interval,
    pub mixture_weight: Interval,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            weight: Interval { lo: -1.0, hi: 1.0 },
            difference_threshold: Interval { lo: 0.0, hi: 2.0 },
            level_threshold: Interval { lo: -2.0, hi: 2.0 },
            q: Interval { lo: 0.0, hi: 1.0 },
            mixture_weight: Interval { lo: -3.0, hi: 3.0 },
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        self.weight.validate("weight")?;
        self.difference_threshold.validate("difference threshold")?;
        self.level_threshold.validate("level threshold")?;
        self.q.validate("q")?;
        self.mixture_weight.validate("mixture weight")?;
        if self.difference_threshold.lo < 0.0 {
            return Err(Error::InvalidParameter(
                "difference-model thresholds must be non-negative".into(),
            ));
        }
        if self.q.lo < 0.0 || self.q.hi > 1.0 {
            return Err(Error::InvalidParameter("q bounds must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn threshold_for(&self, kind: ModelKind) -> Interval {
        if kind.is_difference_based() {
            self.difference_threshold
        } else {
            self.level_threshold
        }
    }
}

/// Parameter space of one scored model kind:
/// `[w_0 .. w_{N-1}, λ?, q?]`, with λ only for the indecision models and `q`
/// only for them in strict mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    kind: ModelKind,
    n_features: usize,
    bounds: Bounds,
    strict: Option<StrictVariant>,
}

impl ParamSpace {
    pub fn new(
        kind: ModelKind,
        n_features: usize,
        bounds: Bounds,
        strict: Option<StrictVariant>,
    ) -> Result<Self> {
        if !kind.has_scores() {
            return Err(Error::InvalidParameter(format!("{kind} has no searchable parameters")));
        }
        if n_features == 0 {
            return Err(Error::InvalidParameter("at least one feature is required".into()));
        }
        bounds.validate()?;
        Ok(ParamSpace {
            kind,
            n_features,
            bounds,
            strict,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    fn has_q(&self) -> bool {
        self.strict.is_some() && self.kind.has_threshold()
    }

    pub fn dimension(&self) -> usize {
        self.n_features + usize::from(self.kind.has_threshold()) + usize::from(self.has_q())
    }

    pub fn decode(&self, point: &[f64]) -> Result<(IndecisionModel, Option<StrictPolicy>)> {
        if point.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: point.len(),
            });
        }
        let n = self.n_features;
        let weights = point[..n].iter().map(|&t| self.bounds.weight.map(t)).collect();
        let threshold = if self.kind.has_threshold() {
            self.bounds.threshold_for(self.kind).map(point[n])
        } else {
            0.0
        };
        let model = IndecisionModel::new(self.kind, weights, threshold)?;
        let policy = match self.strict {
            Some(variant) if self.has_q() => {
                Some(StrictPolicy::new(self.bounds.q.map_open(point[n + 1]), variant)?)
            }
            _ => None,
        };
        Ok((model, policy))
    }
}

/// The indecision kind selected by categorical coordinate `t`, using five
/// equal-width bins over `[0, 1)`.
pub fn kind_from_unit(t: f64, max_u: MaxUForm) -> ModelKind {
    let kinds = ModelKind::indecision_kinds(max_u);
    let bin = ((t * kinds.len() as f64) as usize).min(kinds.len() - 1);
    kinds[bin]
}

/// Parameter space of a k-mixture:
/// per component `[kind?, w_0 .. w_{N-1}, λ]`, then `k` mixture weights,
/// then one shared `q` in strict mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpace {
    k: usize,
    n_features: usize,
    fixed_kind: Option<ModelKind>,
    max_u: MaxUForm,
    bounds: Bounds,
    strict: Option<StrictVariant>,
}

impl MixtureSpace {
    pub fn new(
        k: usize,
        n_features: usize,
        fixed_kind: Option<ModelKind>,
        max_u: MaxUForm,
        bounds: Bounds,
        strict: Option<StrictVariant>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("a mixture needs k >= 1".into()));
        }
        if n_features == 0 {
            return Err(Error::InvalidParameter("at least one feature is required".into()));
        }
        if let Some(kind) = fixed_kind {
            if !kind.has_threshold() {
                return Err(Error::InvalidParameter(format!(
                    "mixture components must be indecision models, got {kind}"
                )));
            }
        }
        bounds.validate()?;
        Ok(MixtureSpace {
            k,
            n_features,
            fixed_kind,
            max_u,
            bounds,
            strict,
        })
    }

    fn component_dim(&self) -> usize {
        self.n_features + 1 + usize::from(self.fixed_kind.is_none())
    }

    pub fn dimension(&self) -> usize {
        self.k * self.component_dim() + self.k + usize::from(self.strict.is_some())
    }

    pub fn decode(&self, point: &[f64]) -> Result<(MixtureModel, Option<StrictPolicy>)> {
        if point.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: point.len(),
            });
        }
        let policy = match self.strict {
            Some(variant) => Some(StrictPolicy::new(
                self.bounds.q.map_open(point[self.dimension() - 1]),
                variant,
            )?),
            None => None,
        };
        let cd = self.component_dim();
        let mut components = Vec::with_capacity(self.k);
        for c in 0..self.k {
            let mut coords = &point[c * cd..(c + 1) * cd];
            let kind = match self.fixed_kind {
                Some(kind) => kind,
                None => {
                    let kind = kind_from_unit(coords[0], self.max_u);
                    coords = &coords[1..];
                    kind
                }
            };
            let weights = coords[..self.n_features]
                .iter()
                .map(|&t| self.bounds.weight.map(t))
                .collect();
            let lambda = self.bounds.threshold_for(kind).map(coords[self.n_features]);
            let model = IndecisionModel::new(kind, weights, lambda)?;
            components.push(Component::with_policy(model, policy));
        }
        let mix_weights = point[self.k * cd..self.k * cd + self.k]
            .iter()
            .map(|&t| self.bounds.mixture_weight.map(t))
            .collect();
        Ok((MixtureModel::weighted(components, mix_weights)?, policy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_and_origin_decode() {
        let space = ParamSpace::new(ModelKind::MinDelta, 3, Bounds::default(), None).unwrap();
        assert_eq!(space.dimension(), 4);
        let (m, q) = space.decode(&[0.5; 4]).unwrap();
        assert_eq!(m.weights(), &[0.0, 0.0, 0.0]);
        assert_eq!(m.threshold(), 1.0);
        assert!(q.is_none());
        let (m, _) = space.decode(&[0.0; 4]).unwrap();
        assert_eq!(m.weights(), &[-1.0, -1.0, -1.0]);
        assert_eq!(m.threshold(), 0.0);
    }

    #[test]
    fn strict_space_adds_open_q() {
        let space = ParamSpace::new(
            ModelKind::MinU,
            3,
            Bounds::default(),
            Some(StrictVariant::ClosedForm),
        )
        .unwrap();
        assert_eq!(space.dimension(), 5);
        let (m, q) = space.decode(&[0.0; 5]).unwrap();
        assert_eq!(m.threshold(), -2.0);
        let q = q.unwrap().q();
        assert!(q > 0.0 && q < 1e-9);
        let (_, q) = space.decode(&[0.999_999_999_767_169_4; 5]).unwrap();
        assert!(q.unwrap().q() < 1.0);
    }

    #[test]
    fn logit_has_no_threshold_or_q() {
        let space = ParamSpace::new(
            ModelKind::Logit,
            3,
            Bounds::default(),
            Some(StrictVariant::ClosedForm),
        )
        .unwrap();
        assert_eq!(space.dimension(), 3);
        assert!(ParamSpace::new(ModelKind::UniformRand, 3, Bounds::default(), None).is_err());
    }

    #[test]
    fn categorical_bins() {
        let f = MaxUForm::TwiceMin;
        assert_eq!(kind_from_unit(0.0, f), ModelKind::MinDelta);
        assert_eq!(kind_from_unit(0.2, f), ModelKind::MaxDelta);
        assert_eq!(kind_from_unit(0.59, f), ModelKind::MinU);
        assert_eq!(kind_from_unit(0.6, f), ModelKind::MaxU(f));
        assert_eq!(kind_from_unit(0.95, f), ModelKind::Dom);
        assert_eq!(kind_from_unit(0.999_999_999, f), ModelKind::Dom);
    }

    #[test]
    fn mixture_dimension_and_decode() {
        let free = MixtureSpace::new(2, 3, None, MaxUForm::Sum, Bounds::default(), None).unwrap();
        assert_eq!(free.dimension(), 2 * 5 + 2);
        let fixed = MixtureSpace::new(
            2,
            3,
            Some(ModelKind::MinDelta),
            MaxUForm::Sum,
            Bounds::default(),
            Some(StrictVariant::Process),
        )
        .unwrap();
        assert_eq!(fixed.dimension(), 2 * 4 + 2 + 1);

        let mut p = vec![0.5; 12];
        p[0] = 0.95; // first component: Dom
        p[5] = 0.7; // second component: Max-U
        let (mix, policy) = free.decode(&p).unwrap();
        assert!(policy.is_none());
        assert_eq!(mix.components()[0].model.kind(), ModelKind::Dom);
        assert_eq!(mix.components()[1].model.kind(), ModelKind::MaxU(MaxUForm::Sum));
        assert_eq!(mix.weights(), &[0.0, 0.0]);
        assert!(free.decode(&p[..11]).is_err());
    }

    #[test]
    fn bounds_validation() {
        let mut b = Bounds::default();
        b.difference_threshold.lo = -0.5;
        assert!(b.validate().is_err());
        let mut b = Bounds::default();
        b.q.hi = 1.5;
        assert!(b.validate().is_err());
        assert!(Interval::new(1.0, 0.0).is_err());
    }
}
