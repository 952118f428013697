//! Error-prediction models for randomized-response polls built from
//! two-level factorial experiments.
//!
//! The crate covers the whole loop: generate a full-factorial design over
//! coded factor values, measure each setting on a deterministic
//! randomized-response simulator, fit a least-squares model with interaction
//! terms, and check the model with residual diagnostics.
//!
//! ```
//! use rrdoe::doe::full_factorial;
//! use rrdoe::regression::{expand_formula, fit_ols, ExperimentTable};
//!
//! let design = full_factorial(2, 1.0).unwrap();
//! let names = vec!["a".to_string(), "b".to_string()];
//! let responses = [1.0, 3.0, 2.0, 6.0];
//! let table = ExperimentTable::from_design(names.clone(), &design, &responses).unwrap();
//! let terms = expand_formula("a*b", &names).unwrap();
//! let model = fit_ols(&table, &terms).unwrap();
//! assert!((model.coefficients[0] - 3.0).abs() < 1e-12);
//! ```

pub mod campaign;
pub mod diagnostics;
pub mod doe;
mod error;
pub mod poll;
pub mod regression;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
