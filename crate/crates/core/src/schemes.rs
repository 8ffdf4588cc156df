//! Lie–Trotter time steppers.
//!
//! Every stochastic step first applies the deterministic flow `S²(τ)S¹(τ)` and
//! then the action of the noise over `[tₙ, tₙ₊₁]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::noise::{Coefficients, IncrementStream, NoiseKind, NoiseSpec};
use crate::operators::{self, FieldOnX};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Deterministic,
    Additive,
    MultIto,
    MultStrato,
    Transport,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Deterministic,
        SchemeKind::Additive,
        SchemeKind::MultIto,
        SchemeKind::MultStrato,
        SchemeKind::Transport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Deterministic => "deterministic",
            SchemeKind::Additive => "additive",
            SchemeKind::MultIto => "mult_ito",
            SchemeKind::MultStrato => "mult_strato",
            SchemeKind::Transport => "transport",
        }
    }

    /// The noise this scheme consumes, `None` for the deterministic scheme.
    pub fn noise_kind(self) -> Option<NoiseKind> {
        match self {
            SchemeKind::Deterministic => None,
            SchemeKind::Additive => Some(NoiseKind::Additive),
            SchemeKind::MultIto => Some(NoiseKind::MultIto),
            SchemeKind::MultStrato => Some(NoiseKind::MultStrato),
            SchemeKind::Transport => Some(NoiseKind::Transport),
        }
    }

    /// Single step with a throwaway workspace.
    pub fn step(
        self,
        state: SchemeState,
        e: &FieldOnX,
        noise: Option<&NoiseSpec>,
        increments: &[f64],
    ) -> Result<SchemeState> {
        Stepper::new(self).step(state, e, noise, increments)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Invalid(format!("unknown scheme `{}`", s.trim())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeState {
    pub field: Field,
    pub step: u64,
    pub tau: f64,
}

impl SchemeState {
    pub fn new(field: Field, tau: f64) -> Self {
        Self {
            field,
            step: 0,
            tau,
        }
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * self.tau
    }
}

/// A scheme together with reusable scratch buffers.
#[derive(Debug)]
pub struct Stepper {
    kind: SchemeKind,
    scratch: Vec<f64>,
    out: Vec<f64>,
}

impl Stepper {
    pub fn new(kind: SchemeKind) -> Self {
        Self {
            kind,
            scratch: Vec::new(),
            out: Vec::new(),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn step(
        &mut self,
        mut state: SchemeState,
        e: &FieldOnX,
        noise: Option<&NoiseSpec>,
        increments: &[f64],
    ) -> Result<SchemeState> {
        let noise = self.check_noise(noise, increments)?;
        let grid = *state.field.grid();
        self.scratch.resize(grid.len(), 0.0);
        self.out.resize(grid.len(), 0.0);
        operators::det_step_into(&state.field, state.tau, e, &mut self.scratch, &mut self.out)?;

        match (self.kind, noise.map(NoiseSpec::coefficients)) {
            (SchemeKind::Deterministic, _) => {}
            (SchemeKind::Additive, Some(Coefficients::Phase { sigma, .. })) => {
                for (s, &db) in sigma.iter().zip(increments) {
                    for (o, &c) in self.out.iter_mut().zip(s.values()) {
                        *o += db * c;
                    }
                }
            }
            (SchemeKind::MultIto, Some(Coefficients::Phase { sigma, sum_sq })) => {
                let drift = -0.5 * state.tau;
                multiply_exp(&mut self.out, sigma, increments, Some((drift, sum_sq)));
            }
            (SchemeKind::MultStrato, Some(Coefficients::Phase { sigma, .. })) => {
                multiply_exp(&mut self.out, sigma, increments, None);
            }
            (SchemeKind::Transport, Some(_)) => {
                let shift = noise
                    .and_then(|n| n.transport_shift(increments))
                    .expect("transport noise has spatial coefficients");
                let moved = Field::from_raw(grid, std::mem::take(&mut self.out));
                operators::vshift_into(&moved, &shift, &mut self.scratch)?;
                self.out = moved.into_values();
                std::mem::swap(&mut self.out, &mut self.scratch);
            }
            (kind, _) => unreachable!("noise checked for {kind}"),
        }

        std::mem::swap(state.field.values_mut_vec(), &mut self.out);
        state.step += 1;
        Ok(state)
    }

    fn check_noise<'a>(
        &self,
        noise: Option<&'a NoiseSpec>,
        increments: &[f64],
    ) -> Result<Option<&'a NoiseSpec>> {
        let Some(expected) = self.kind.noise_kind() else {
            return Ok(None);
        };
        let noise = noise.ok_or(Error::MissingNoise(self.kind.name()))?;
        if noise.kind() != expected {
            return Err(Error::NoiseKindMismatch {
                expected,
                found: noise.kind(),
            });
        }
        if increments.len() != noise.components() {
            return Err(Error::IncrementCount {
                expected: noise.components(),
                found: increments.len(),
            });
        }
        Ok(Some(noise))
    }
}

/// `out ← exp(Σₖ σₖ δβₖ + drift·Σₖ σₖ²) · out`, nodewise.
fn multiply_exp(out: &mut [f64], sigma: &[Field], increments: &[f64], correction: Option<(f64, &Field)>) {
    match (sigma, increments) {
        ([s], [db]) => {
            let s = s.values();
            match correction {
                Some((drift, sq)) => {
                    for ((o, &c), &q) in out.iter_mut().zip(s).zip(sq.values()) {
                        *o *= (c * db + drift * q).exp();
                    }
                }
                None => {
                    for (o, &c) in out.iter_mut().zip(s) {
                        *o *= (c * db).exp();
                    }
                }
            }
        }
        _ => {
            for (idx, o) in out.iter_mut().enumerate() {
                let mut arg = 0.0;
                for (s, &db) in sigma.iter().zip(increments) {
                    arg += s.values()[idx] * db;
                }
                if let Some((drift, sq)) = correction {
                    arg += drift * sq.values()[idx];
                }
                *o *= arg.exp();
            }
        }
    }
}

pub fn step_deterministic(state: SchemeState, e: &FieldOnX) -> Result<SchemeState> {
    SchemeKind::Deterministic.step(state, e, None, &[])
}

pub fn step_additive(state: SchemeState, e: &FieldOnX, spec: &NoiseSpec, increments: &[f64]) -> Result<SchemeState> {
    SchemeKind::Additive.step(state, e, Some(spec), increments)
}

pub fn step_mult_ito(state: SchemeState, e: &FieldOnX, spec: &NoiseSpec, increments: &[f64]) -> Result<SchemeState> {
    SchemeKind::MultIto.step(state, e, Some(spec), increments)
}

pub fn step_mult_strato(state: SchemeState, e: &FieldOnX, spec: &NoiseSpec, increments: &[f64]) -> Result<SchemeState> {
    SchemeKind::MultStrato.step(state, e, Some(spec), increments)
}

pub fn step_transport(state: SchemeState, e: &FieldOnX, spec: &NoiseSpec, increments: &[f64]) -> Result<SchemeState> {
    SchemeKind::Transport.step(state, e, Some(spec), increments)
}

/// Everything a single trajectory needs besides its increment stream.
#[derive(Clone, Debug)]
pub struct Trajectory<'a> {
    pub kind: SchemeKind,
    pub initial: &'a Field,
    pub e: &'a FieldOnX,
    pub noise: Option<&'a NoiseSpec>,
}

/// Advances `n_steps` steps, drawing increments from `stream` (ignored by the
/// deterministic scheme). `observe` sees the initial state and every step.
pub fn run<F>(
    traj: &Trajectory<'_>,
    stream: &IncrementStream,
    n_steps: u64,
    mut observe: F,
) -> Result<SchemeState>
where
    F: FnMut(&SchemeState) -> Result<()>,
{
    let mut stepper = Stepper::new(traj.kind);
    let mut state = SchemeState::new(traj.initial.clone(), stream.tau());
    let stochastic = traj.kind.noise_kind().is_some();
    let mut increments = vec![0.0; if stochastic { stream.components() } else { 0 }];
    observe(&state)?;
    for n in 0..n_steps {
        if stochastic {
            stream.fill_increments(n, &mut increments);
        }
        state = stepper.step(state, traj.e, traj.noise, &increments)?;
        observe(&state)?;
    }
    Ok(state)
}
