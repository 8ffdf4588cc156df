//! Fast structural checks of the schemes on the configured grid.

use std::f64::consts::PI;
use std::fmt;

use svlasov_core::noise::Coefficients;
use svlasov_core::schemes::{self, SchemeState, Stepper, Trajectory};
use svlasov_core::{Catalog, Field, FieldOnX, IncrementStream, NoiseKind, NoiseSpec, PhaseGrid, SchemeKind};

use crate::{CliError, Experiment};

/// Steps taken by the positivity and coupling checks.
const SHORT_RUN: u64 = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<32} residual = {:.3e} (tolerance {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance
        )
    }
}

/// Largest `|a − b|` relative to the largest `|b|`.
fn rel_diff(a: &Field, b: &Field) -> f64 {
    let scale = b.max_abs().max(f64::MIN_POSITIVE);
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Configured noise when it suits `kind`, else a standard choice.
fn noise_for(exp: &Experiment, kind: NoiseKind) -> Result<NoiseSpec, CliError> {
    let grid = exp.f0.grid();
    if let Some(c) = exp.config.noise {
        if let Ok(spec) = NoiseSpec::builtin(c, kind, grid) {
            return Ok(spec);
        }
    }
    let fallback = match kind {
        NoiseKind::Additive => Catalog::HalfSinV3,
        NoiseKind::MultIto | NoiseKind::MultStrato => Catalog::SinV3,
        NoiseKind::Transport => Catalog::TransportConst(0.5),
    };
    Ok(NoiseSpec::builtin(fallback, kind, grid)?)
}

fn run_path(exp: &Experiment, kind: SchemeKind, noise: &NoiseSpec, steps: u64) -> Result<SchemeState, CliError> {
    let traj = Trajectory {
        kind,
        initial: &exp.f0,
        e: &exp.e,
        noise: Some(noise),
    };
    let stream = IncrementStream::new(exp.config.seed, 0, noise.components(), exp.config.tau);
    Ok(schemes::run(&traj, &stream, steps, |_| Ok(()))?)
}

fn positivity(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    [SchemeKind::MultIto, SchemeKind::MultStrato, SchemeKind::Transport]
        .into_iter()
        .map(|kind| {
            let noise = noise_for(exp, kind.noise_kind().expect("stochastic"))?;
            let last = run_path(exp, kind, &noise, SHORT_RUN)?;
            Ok(Check::new(format!("positivity/{kind}"), (-last.field.min_value()).max(0.0), 0.0))
        })
        .collect()
}

fn zero_noise(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let tau = exp.config.tau;
    let det = schemes::step_deterministic(SchemeState::new(exp.f0.clone(), tau), &exp.e)?;
    let mut checks = Vec::new();
    for kind in [SchemeKind::Additive, SchemeKind::MultIto, SchemeKind::MultStrato, SchemeKind::Transport] {
        let noise = noise_for(exp, kind.noise_kind().expect("stochastic"))?;
        let zeros = vec![0.0; noise.components()];
        let got = kind.step(SchemeState::new(exp.f0.clone(), tau), &exp.e, Some(&noise), &zeros)?;
        let want = match (kind, noise.coefficients()) {
            (SchemeKind::MultIto, Coefficients::Phase { sum_sq, .. }) => {
                let values = det
                    .field
                    .values()
                    .iter()
                    .zip(sum_sq.values())
                    .map(|(d, q)| d * (-0.5 * tau * q).exp())
                    .collect();
                Field::from_values(*det.field.grid(), values)?
            }
            _ => det.field.clone(),
        };
        checks.push(Check::new(format!("zero_noise/{kind}"), rel_diff(&got.field, &want), 0.0));
    }
    Ok(checks)
}

/// With `σ ≡ 1` the multiplicative schemes are scalar multiples of the
/// deterministic one: `e^{β(t)−t/2}` (Itô) and `e^{β(t)}` (Stratonovich).
fn temporal_factorization(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    const STEPS: u64 = 20;
    let tau = exp.config.tau;
    let mut checks = Vec::new();
    for kind in [SchemeKind::MultIto, SchemeKind::MultStrato] {
        let noise = NoiseSpec::builtin(Catalog::Const(1.0), kind.noise_kind().expect("stochastic"), exp.f0.grid())?;
        let stream = IncrementStream::new(exp.config.seed, 0, 1, tau);
        let mut stepper = Stepper::new(kind);
        let mut det = Stepper::new(SchemeKind::Deterministic);
        let mut s = SchemeState::new(exp.f0.clone(), tau);
        let mut d = SchemeState::new(exp.f0.clone(), tau);
        let mut beta = 0.0;
        let mut worst = 0.0f64;
        for n in 0..STEPS {
            let db = stream.draw_increments(n);
            beta += db[0];
            s = stepper.step(s, &exp.e, Some(&noise), &db)?;
            d = det.step(d, &exp.e, None, &[])?;
            let t = d.t();
            let factor = match kind {
                SchemeKind::MultIto => (beta - t / 2.0).exp(),
                _ => beta.exp(),
            };
            worst = worst.max(rel_diff(&s.field, &d.field.scaled(factor)));
        }
        checks.push(Check::new(format!("temporal_factorization/{kind}"), worst, 1e-12));
    }
    Ok(checks)
}

/// Transport on a grid where free streaming moves whole cells and every noise
/// shift is a whole number of velocity cells: norms must not change at all.
fn integer_shift_exactness() -> Result<Check, CliError> {
    let grid = PhaseGrid::new(16, 17, 8.0)?;
    let f0 = Field::sample(grid, |x, v| {
        let bump = (1.0 - v * v / 9.0).max(0.0);
        bump * bump * (1.0 + 0.5 * (2.0 * PI * x).cos())
    })?;
    let noise = NoiseSpec::builtin(Catalog::TransportConst(1.0), NoiseKind::Transport, &grid)?;
    let e = FieldOnX::zeros(grid.nx());
    let path = [1.0, -1.0, 2.0, 0.0, -2.0, 1.0, -1.0, 0.0, 1.0, -1.0];
    let initial: Vec<f64> = [1.0, 3.0, 55.0]
        .iter()
        .map(|&p| f0.lp_norm(p))
        .collect::<Result<_, _>>()?;
    let mut stepper = Stepper::new(SchemeKind::Transport);
    let mut state = SchemeState::new(f0, 1.0 / 16.0);
    let mut worst = 0.0f64;
    for db in path {
        state = stepper.step(state, &e, Some(&noise), &[db])?;
        for (p, &n0) in [1.0, 3.0, 55.0].iter().zip(&initial) {
            worst = worst.max((state.field.lp_norm(*p)? - n0).abs());
        }
    }
    Ok(Check::new("integer_shift_exactness/transport", worst, 0.0))
}

/// A coarse run built from a fine stream with factor 1 replays it bitwise,
/// and coarse increments are exact sums of fine ones.
fn coupling(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let kind = match exp.config.scheme {
        SchemeKind::Deterministic => SchemeKind::Additive,
        k => k,
    };
    let noise = noise_for(exp, kind.noise_kind().expect("stochastic"))?;
    let traj = Trajectory {
        kind,
        initial: &exp.f0,
        e: &exp.e,
        noise: Some(&noise),
    };
    let fine = IncrementStream::new(exp.config.seed, 0, noise.components(), exp.config.tau / 4.0);
    let reference = schemes::run(&traj, &fine, SHORT_RUN, |_| Ok(()))?;
    let replay = schemes::run(&traj, &fine.coarsen(1)?, SHORT_RUN, |_| Ok(()))?;
    let replay_diff = rel_diff(&replay.field, &reference.field);

    let coarse = fine.coarsen(4)?;
    let mut sum_diff = 0.0f64;
    for n in 0..SHORT_RUN {
        let c = coarse.draw_increments(n);
        let mut s = vec![0.0; c.len()];
        for m in 4 * n..4 * n + 4 {
            for (a, b) in s.iter_mut().zip(fine.draw_increments(m)) {
                *a += b;
            }
        }
        for (a, b) in c.iter().zip(&s) {
            sum_diff = sum_diff.max((a - b).abs());
        }
    }
    Ok(vec![
        Check::new(format!("coupling_replay/{kind}"), replay_diff, 0.0),
        Check::new("coupling_increment_sums", sum_diff, 0.0),
    ])
}

/// Runs every check; the caller decides how to report.
pub fn run_checks(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let mut checks = positivity(exp)?;
    checks.extend(zero_noise(exp)?);
    checks.extend(temporal_factorization(exp)?);
    checks.push(integer_shift_exactness()?);
    checks.extend(coupling(exp)?);
    Ok(checks)
}

/// Prints one line per check; fails if any check fails.
pub fn cmd_validate(exp: &Experiment) -> Result<Vec<Check>, CliError> {
    let checks = run_checks(exp)?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::Validation(failed));
    }
    Ok(checks)
}
