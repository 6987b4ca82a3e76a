//! Maximum-likelihood fitting by quasi-random search.
//!
//! The likelihood surfaces are not convex, so parameters are chosen by
//! evaluating a fixed budget of Sobol points mapped onto the search bounds
//! and keeping the best one. Candidates are scored independently; ties go to
//! the lowest candidate index, which makes the winner independent of how the
//! work is spread over threads.

mod search;
mod sobol;
mod sobol_table;
mod space;

pub use search::{
    fit_best_kind, fit_k_mixture, fit_model, fit_vmixture, FitResult, FittedModel, SearchOptions,
    VMixtureFit, VoterFit, RAND_Q_FLOOR,
};
pub use sobol::{sobol_points, Sobol};
pub use space::{kind_from_unit, Bounds, Interval, MixtureSpace, ParamSpace};
