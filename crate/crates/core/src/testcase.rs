//! The two-stream test problem used throughout the experiments.

use std::f64::consts::{PI, TAU};

use crate::grid::{Field, PhaseGrid};
use crate::operators::FieldOnX;

/// `f₀(x, v) = e^{−v²/2}/√(2π) · (1 + 0.05 cos 2πx) · v²`.
pub fn two_stream_density(x: f64, v: f64) -> f64 {
    (-v * v / 2.0).exp() / (2.0 * PI).sqrt() * (1.0 + 0.05 * (TAU * x).cos()) * v * v
}

/// `E(x) = cos 2πx`.
pub fn cosine_force(x: f64) -> f64 {
    (TAU * x).cos()
}

pub fn two_stream(grid: &PhaseGrid) -> Field {
    Field::sample(*grid, two_stream_density).expect("finite everywhere")
}

pub fn cosine_field(grid: &PhaseGrid) -> FieldOnX {
    FieldOnX::sample(grid, cosine_force).expect("finite everywhere")
}
