//! File formats, configuration, and the experiment pipeline behind the
//! `hotgrid` command-line tool.
//!
//! The algorithmic machinery lives in `hotgrid-core`; this crate adds
//! CSV/TOML/JSON IO, calendar handling, the staged pipeline (ingest,
//! train, evaluate, rank, compare), and the synthetic dataset writer.

pub mod compare;
pub mod config;
pub mod csvio;
pub mod dates;
pub mod error;
pub mod geojson;
pub mod model_io;
pub mod runner;
pub mod svg;
pub mod synthio;
