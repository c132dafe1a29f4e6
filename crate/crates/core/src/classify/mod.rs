//! From-scratch classifiers, household label taxonomy and cross-validation.

mod cv;
mod forest;
mod knn;
mod labels;
mod vote;

pub mod experiment;

pub use cv::{accuracy_pct, majority_baseline, stratified_folds};
pub use forest::{rf_classify, ForestConfig};
pub use knn::{knn_classify, Standardizer};
pub use labels::{label_characteristics, Characteristic, HouseholdRecord};
