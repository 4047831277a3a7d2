//! Cross-project defect prediction for projects whose metric sets differ.
//!
//! Instances from any project are mapped onto a fixed set of 16
//! distribution indicators of their normalized metric values, which makes
//! a logistic-regression model trained on one project applicable to
//! another regardless of which metrics either one collected.

pub mod corpus;
pub mod error;
pub mod learner;
pub mod predictors;
pub mod preprocess;
pub mod profile;
pub mod stats;

pub use error::{Error, Result};
pub mod harness;
