//! Energy disaggregation pipelines for occupancy and household-characteristic
//! inference from smart-meter data.

pub mod classify;
pub mod config;
pub mod disagg;
pub mod error;
pub mod events;
pub mod features;
pub mod io;
pub mod manifest;
pub mod occupancy;
pub mod report;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
