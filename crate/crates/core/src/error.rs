use alloc::string::String;
use core::fmt;

/// Row/column extent of an array, used in error reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    /// Number of rows (1 for vectors).
    pub rows: usize,
    /// Number of columns (the length, for vectors).
    pub cols: usize,
}

impl Shape {
    /// Shape of a `rows × cols` matrix.
    pub const fn matrix(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    /// Shape of a vector of length `len`.
    pub const fn vector(len: usize) -> Self {
        Self { rows: 1, cols: len }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}x{})", self.rows, self.cols)
    }
}

/// Errors raised by the numeric, model and training code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Operand shapes do not line up.
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        /// Operation that rejected its inputs.
        op: &'static str,
        /// Shape of the first operand.
        left: Shape,
        /// Shape of the second operand.
        right: Shape,
    },
    /// An argument is outside its valid domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// NaN or infinity where finite values are required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// A loss was requested over zero samples.
    #[error("empty batch")]
    EmptyBatch,
    /// A label does not index into the class set.
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange {
        /// Offending label.
        index: usize,
        /// Number of classes available.
        classes: usize,
    },
    /// Dataset classes cannot be partitioned as requested.
    #[error("dataset has {found} classes but the stream needs {expected}")]
    ClassCountMismatch {
        /// `stages × classes_per_stage`.
        expected: usize,
        /// Classes present in the dataset.
        found: usize,
    },
    /// A dataset without samples.
    #[error("dataset is empty")]
    EmptyDataset,
}

/// Result alias for this crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
