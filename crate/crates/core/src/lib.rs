//! Imbalance-aware spatio-temporal hotspot prediction.
//!
//! This crate contains the algorithmic machinery for ranking grid cells by
//! daily event risk when the positive class is extremely rare: the grid and
//! observation-frame data model, theory-informed feature assembly, the four
//! classic resampling strategies, from-scratch base learners (CART forests,
//! AdaBoost, L1/L2 logistic regression), the hyper-ensemble of repeated
//! random under-sampling, ranking metrics (hit rate, PAI, surveillance
//! curves), and a synthetic near-repeat event generator for end-to-end
//! testing at desk scale.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature for embedded use. The `parallel` feature enables rayon-based
//! tree- and member-level parallelism and implies `std`. All randomized
//! routines take explicit seeds and are deterministic for a fixed seed.
//!
//! File formats, CSV ingestion, and the command-line pipeline live in the
//! companion `hotgrid-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ensemble;
pub mod error;
pub mod features;
pub mod frame;
pub mod grid;
pub mod learners;
pub mod matrix;
pub mod metrics;
pub mod resample;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
