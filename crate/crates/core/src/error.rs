//! Crate-wide error type.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::CellId;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors produced by the hotgrid core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input that must be nonempty was empty.
    EmptyInput(&'static str),
    /// An operation requires both classes but only one is present.
    SingleClass(&'static str),
    /// Feature arity differs between fit and predict (or rows and names).
    ArityMismatch { expected: usize, got: usize },
    /// A referenced cell is outside the grid or not eligible.
    UnknownCell(CellId),
    /// A required table does not cover these eligible cells.
    MissingCells(Vec<CellId>),
    /// A value or argument failed validation.
    Invalid { what: &'static str, detail: String },
    /// Non-finite value where finite data is required.
    NonFinite(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::SingleClass(what) => {
                write!(f, "both classes required, got a single class: {what}")
            }
            Error::ArityMismatch { expected, got } => {
                write!(f, "feature arity mismatch: expected {expected}, got {got}")
            }
            Error::UnknownCell(cell) => write!(f, "unknown or ineligible cell {}", cell.0),
            Error::MissingCells(cells) => {
                write!(f, "table missing {} eligible cell(s):", cells.len())?;
                for c in cells.iter().take(16) {
                    write!(f, " {}", c.0)?;
                }
                if cells.len() > 16 {
                    write!(f, " ...")?;
                }
                Ok(())
            }
            Error::Invalid { what, detail } => write!(f, "invalid {what}: {detail}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
        }
    }
}

impl core::error::Error for Error {}
