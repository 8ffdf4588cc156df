use thiserror::Error;

use crate::noise::NoiseKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample {value} at node (i = {i}, j = {j})")]
    NonFiniteSample { i: usize, j: usize, value: f64 },

    #[error("non-finite argument: {0}")]
    NonFinite(&'static str),

    #[error("invalid norm exponent p = {0}; expected p >= 1")]
    InvalidExponent(f64),

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("unknown noise catalog entry `{0}`")]
    UnknownNoise(String),

    #[error("noise `{name}` depends on v and cannot drive transport noise")]
    NotSpatial { name: String },

    #[error("scheme expects {expected} noise, got {found}")]
    NoiseKindMismatch {
        expected: NoiseKind,
        found: NoiseKind,
    },

    #[error("scheme `{0}` needs a noise specification")]
    MissingNoise(&'static str),

    #[error("expected {expected} increments, got {found}")]
    IncrementCount { expected: usize, found: usize },

    #[error("coarsening factor {0} is not a power of two")]
    NotPowerOfTwo(u64),

    #[error("step size {tau} is not a dyadic multiple of {tau_ref}")]
    NonDyadic { tau: f64, tau_ref: f64 },

    #[error("final time {t_final} is not an integer multiple of {tau}")]
    NonIntegerSteps { t_final: f64, tau: f64 },

    #[error("probe ({x}, {v}) lies outside the phase domain")]
    ProbeOutside { x: f64, v: f64 },

    #[error("{0}")]
    Invalid(String),
}
