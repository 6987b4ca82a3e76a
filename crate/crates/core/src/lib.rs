//! Score-based indecision models for pairwise comparisons.
//!
//! An agent answering "which of these two items do you prefer?" may respond
//! with a strict preference for either item or with indecision. Each model in
//! this crate assigns a deterministic score to the three possible responses;
//! with iid Gumbel noise on those scores the response distribution is a
//! softmax. On top of the models the crate provides:
//!
//! * maximum-likelihood fitting by quasi-random (Sobol) search ([`fitting`]),
//! * mixtures over several models ([`likelihood::MixtureModel`]),
//! * synthetic patients, agents and populations ([`simulate`]),
//! * train/test splitting, ranking and group reports ([`evaluate`]),
//! * vote tallies and Pearson chi-squared tests ([`stats`]),
//! * the CSV/JSON file formats and run configuration ([`io`], [`config`]).
//!
//! Candidate evaluation runs on rayon when the `parallel` feature is enabled
//! (the default). Every result is independent of the worker count.

pub mod config;
pub mod dataset;
pub mod equivalence;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod fitting;
pub mod io;
pub mod item;
pub mod likelihood;
pub mod model;
pub mod response;
pub mod response_function;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use dataset::{Mode, Record, ResponseDataset};
pub use error::{Error, Result};
pub use exec::Execution;
pub use item::{ComparisonQuery, FeatureRange, Item, Normalizer, Patient};
pub use likelihood::{log_likelihood, mixture_log_likelihood, Component, MixtureModel};
pub use model::{
    IndecisionModel, MaxUForm, ModelKind, ResponseDistribution, Scores, StrictDistribution,
    StrictPolicy, StrictVariant,
};
pub use response::{Response, ResponseSet};
