use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coarse grouping of failures; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    /// Bad parameters or malformed input.
    Input,
    /// A structural hypothesis (nonnegativity of the cubic symbol) fails.
    Condition,
    /// Integration or time stepping broke down.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("trigonometric polynomial is negative at theta = {theta} (value {value:e})")]
    NegativityDetected { theta: f64, value: f64 },

    #[error("no derivative above threshold up to order {max_order} at theta = {theta}")]
    OrderOverflow { theta: f64, max_order: usize },

    #[error("operation requires a classification with finitely many zeros")]
    WrongRegime,

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("blow-up guard tripped at t = {t} (|value| = {value:e})")]
    BlowUp { t: f64, value: f64 },

    #[error("linear energy grew by a factor {growth} in one step at t = {t}")]
    Instability { t: f64, growth: f64 },

    #[error("ray point at t = {t} lies outside the grid interior or the exterior region")]
    RayOutsideDomain { t: f64 },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) | Error::WrongRegime => ErrorClass::Input,
            Error::NegativityDetected { .. } => ErrorClass::Condition,
            Error::OrderOverflow { .. }
            | Error::StepUnderflow { .. }
            | Error::BlowUp { .. }
            | Error::Instability { .. }
            | Error::RayOutsideDomain { .. } => ErrorClass::Numerical,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
