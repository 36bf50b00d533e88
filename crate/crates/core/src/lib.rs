//! Uncertainty-driven active-learning subset selection for grouped,
//! class-imbalanced labelled datasets.
//!
//! The crate trains a classifier on a small balanced seed, scores a pool of
//! held-back instances with one of four uncertainty measures, and moves the
//! most uncertain instances (or whole subjects) into the training set, round
//! after round. Conventional imbalance remedies are provided as baselines so
//! the two can be compared under identical splits and seeds.

pub mod calibration;
pub mod classifier;
pub mod config;
pub mod data;
pub mod datagen;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod par;
pub mod report;
pub mod sampling;
pub mod uncertainty;

pub use error::{Error, Result};
