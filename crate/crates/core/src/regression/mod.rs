//! Least-squares models with interaction terms.

mod formula;
pub mod linalg;
mod ols;
mod table;

pub use formula::{expand_formula, saturated_formula, saturated_terms, Term, INTERCEPT_LABEL};
pub use linalg::Matrix;
pub use ols::{
    design_matrix, fit_ols, predict, significant_terms, FittedModel, Prediction, DEFAULT_ALPHA,
    RANK_TOLERANCE,
};
pub use table::{ExperimentRow, ExperimentTable, RESPONSE_COLUMN};
