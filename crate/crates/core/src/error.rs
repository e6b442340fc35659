use thiserror::Error;

/// Errors raised by parameter validation and bound evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Both detector click rates are zero; no bit error rate is defined.
    #[error("degenerate channel: both click rates are zero")]
    DegenerateChannel,

    /// A bound inversion has no finite solution at these inputs. Happens
    /// when the inverted coefficient is so large that the quotient
    /// denominator 1 -/+ 2a/sqrt(n) becomes nonpositive.
    #[error("{form} has no finite solution here: denominator {denominator} <= 0")]
    UnboundedInversion {
        form: &'static str,
        denominator: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
