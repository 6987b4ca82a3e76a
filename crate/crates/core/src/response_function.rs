//! Threshold response functions.
//!
//! These describe each indecision model directly in terms of utilities and
//! the threshold λ, without scores: every response whose condition holds is
//! feasible. They are written independently of [`crate::model`] so they can
//! serve as the reference the noiseless score argmax is checked against.
//!
//! Every comparison `a >= b` is evaluated as `a >= b - tol`.

use crate::error::{Error, Result};
use crate::item::ComparisonQuery;
use crate::model::{IndecisionModel, ModelKind};
use crate::response::{Response, ResponseSet};

fn ge(a: f64, b: f64, tol: f64) -> bool {
    a >= b - tol
}

/// Feasible responses under the threshold response function of `model`.
///
/// Only the five indecision models have a response function. For Max-U both
/// score forms share the same response function.
pub fn response_function_feasible(
    model: &IndecisionModel,
    query: &ComparisonQuery,
    tol: f64,
) -> Result<ResponseSet> {
    let kind = model.kind();
    if !kind.has_threshold() {
        return Err(Error::InvalidParameter(format!(
            "{kind} has no threshold response function"
        )));
    }
    let w = model.weights();
    if w.len() != query.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: query.dim(),
        });
    }
    let a = &query.first.features;
    let b = &query.second.features;
    let lambda = model.threshold();
    let ui: f64 = w.iter().zip(a).map(|(w, x)| w * x).sum();
    let uj: f64 = w.iter().zip(b).map(|(w, x)| w * x).sum();

    let (r1, r2, r0) = match kind {
        ModelKind::MinDelta => {
            let d = ui - uj;
            (
                ge(d, lambda, tol),
                ge(-d, lambda, tol),
                ge(lambda, d.abs(), tol),
            )
        }
        ModelKind::MaxDelta => {
            let d = ui - uj;
            (
                ge(d, 0.0, tol) && ge(lambda, d, tol),
                ge(0.0, d, tol) && ge(d, -lambda, tol),
                ge(d.abs(), lambda, tol),
            )
        }
        ModelKind::MinU => (
            ge(ui, uj.max(lambda), tol),
            ge(uj, ui.max(lambda), tol),
            ge(lambda, ui.max(uj), tol),
        ),
        ModelKind::MaxU(_) => (
            ge(ui.min(lambda), uj, tol),
            ge(uj.min(lambda), ui, tol),
            ge(ui.min(uj), lambda, tol),
        ),
        ModelKind::Dom => {
            // Smallest per-feature advantage of one item over the other.
            let mut m_ij = f64::INFINITY;
            let mut m_ji = f64::INFINITY;
            for n in 0..w.len() {
                let fi = w[n] * a[n];
                let fj = w[n] * b[n];
                m_ij = m_ij.min(fi - fj);
                m_ji = m_ji.min(fj - fi);
            }
            (
                ge(m_ij, m_ji.max(lambda), tol),
                ge(m_ji, m_ij.max(lambda), tol),
                ge(lambda, m_ij.max(m_ji), tol),
            )
        }
        _ => unreachable!(),
    };

    let mut set = ResponseSet::EMPTY;
    if r0 {
        set.insert(Response::Indecision);
    }
    if r1 {
        set.insert(Response::PreferFirst);
    }
    if r2 {
        set.insert(Response::PreferSecond);
    }
    Ok(set)
}
