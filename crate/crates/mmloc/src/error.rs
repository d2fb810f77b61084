use thiserror::Error;

/// Failures raised by the analytical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("{op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A numerical routine failed to produce a usable value.
    #[error("numeric failure in {op}: {detail}")]
    Numeric { op: &'static str, detail: String },

    /// The angle of arrival cannot be estimated with the given array.
    #[error("angle of arrival unidentifiable with a {elements}-element array")]
    Unidentifiable { elements: usize },

    /// An estimate landed outside the cell it should index.
    #[error("estimate {value} m outside cell [0, {cell}] m")]
    OutOfCell { value: f64, cell: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}

pub(crate) fn numeric(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Numeric {
        op,
        detail: detail.into(),
    }
}
