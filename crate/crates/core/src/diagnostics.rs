//! Observables of a field, closed-form expectation laws, and the
//! characteristic-curve check for the transport scheme.

use crate::error::{Error, Result};
use crate::grid::{Field, Norm};
use crate::interp;
use crate::noise::{Coefficients, IncrementStream, NoiseKind, NoiseSpec};
use crate::operators::FieldOnX;
use crate::schemes::{self, SchemeKind, Trajectory};

/// Scalar observables of one field at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRow {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// `(p, ‖f‖ₚ)` for each requested extra exponent, in request order.
    pub lp_extra: Vec<(f64, f64)>,
    pub mass: f64,
    pub min: f64,
    pub l2sq: f64,
}

impl ObservableRow {
    /// The extra norm for exponent `p`, if it was requested.
    pub fn extra(&self, p: f64) -> Option<f64> {
        self.lp_extra.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

pub fn observe(f: &Field, t: f64, extra_p: &[f64]) -> Result<ObservableRow> {
    let lp_extra = extra_p
        .iter()
        .map(|&p| Ok((p, f.lp_norm(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let l2sq = f.l2_squared();
    Ok(ObservableRow {
        t,
        l1: f.lp_norm(1.0)?,
        l2: l2sq.sqrt(),
        linf: f.lp_norm(Norm::Sup)?,
        lp_extra,
        mass: f.mass(),
        min: f.min_value(),
        l2sq,
    })
}

/// Closed-form time evolution of an expected observable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TheoryCurve {
    /// `‖f₀‖₂² + t Σₖ‖σₖ‖₂²`.
    TraceLinear { f0_l2sq: f64, sigma_l2sq: f64 },
    MassConstant { mass: f64 },
    /// `e^{σ²t} ‖f₀‖₂²`.
    L2ExpIto { f0_l2sq: f64, sigma_sq: f64 },
    /// `e^{2σ²t} ‖f₀‖₂²`.
    L2ExpStrato { f0_l2sq: f64, sigma_sq: f64 },
    NormConstant { p: Norm, value: f64 },
}

impl TheoryCurve {
    pub fn name(&self) -> &'static str {
        match self {
            TheoryCurve::TraceLinear { .. } => "trace_linear",
            TheoryCurve::MassConstant { .. } => "mass_constant",
            TheoryCurve::L2ExpIto { .. } => "l2_exp_ito",
            TheoryCurve::L2ExpStrato { .. } => "l2_exp_strato",
            TheoryCurve::NormConstant { .. } => "norm_constant",
        }
    }

    pub fn validate(self) -> Result<Self> {
        let ok = match self {
            TheoryCurve::TraceLinear { f0_l2sq, sigma_l2sq } => nonneg(f0_l2sq) && nonneg(sigma_l2sq),
            TheoryCurve::MassConstant { mass } => mass.is_finite(),
            TheoryCurve::L2ExpIto { f0_l2sq, sigma_sq } | TheoryCurve::L2ExpStrato { f0_l2sq, sigma_sq } => {
                nonneg(f0_l2sq) && nonneg(sigma_sq)
            }
            TheoryCurve::NormConstant { p, value } => p.validate().is_ok() && nonneg(value),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::Invalid(format!("bad parameters for {}: {self:?}", self.name())))
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        theory_value(self, t)
    }
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

pub fn theory_value(curve: &TheoryCurve, t: f64) -> f64 {
    match *curve {
        TheoryCurve::TraceLinear { f0_l2sq, sigma_l2sq } => f0_l2sq + t * sigma_l2sq,
        TheoryCurve::MassConstant { mass } => mass,
        TheoryCurve::L2ExpIto { f0_l2sq, sigma_sq } => (sigma_sq * t).exp() * f0_l2sq,
        TheoryCurve::L2ExpStrato { f0_l2sq, sigma_sq } => (2.0 * sigma_sq * t).exp() * f0_l2sq,
        TheoryCurve::NormConstant { value, .. } => value,
    }
}

/// Relative spread tolerated when deciding that `Σₖσₖ²` is constant.
const SIGMA_CONSTANT_TOL: f64 = 1e-9;

/// The law for `E‖fₙ‖₂²` of a scheme, using grid quadrature for every norm.
/// `None` when the scheme has no closed form for this noise (multiplicative
/// noise with a non-constant `Σₖσₖ²`).
pub fn l2_theory(kind: SchemeKind, f0: &Field, noise: Option<&NoiseSpec>) -> Option<TheoryCurve> {
    let f0_l2sq = f0.l2_squared();
    let sigma_sq = || noise.and_then(|n| n.check_sigma_constant(SIGMA_CONSTANT_TOL));
    match kind {
        SchemeKind::Deterministic | SchemeKind::Transport => Some(TheoryCurve::NormConstant {
            p: Norm::Lp(2.0),
            value: f0_l2sq,
        }),
        SchemeKind::Additive => Some(TheoryCurve::TraceLinear {
            f0_l2sq,
            sigma_l2sq: noise?.sum_l2_squared(),
        }),
        SchemeKind::MultIto => Some(TheoryCurve::L2ExpIto {
            f0_l2sq,
            sigma_sq: sigma_sq()?,
        }),
        SchemeKind::MultStrato => Some(TheoryCurve::L2ExpStrato {
            f0_l2sq,
            sigma_sq: sigma_sq()?,
        }),
    }
}

/// The law for `E[mass(fₙ)]`; none is known for Stratonovich noise.
pub fn mass_theory(kind: SchemeKind, f0: &Field) -> Option<TheoryCurve> {
    match kind {
        SchemeKind::MultStrato => None,
        _ => Some(TheoryCurve::MassConstant { mass: f0.mass() }),
    }
}

/// One probe of the characteristic check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OraclePair {
    /// Starting point `(x₀, v₀)`.
    pub start: (f64, f64),
    /// Point reached by the discrete characteristic after `n_steps`.
    pub end: (f64, f64),
    /// `f₀(x₀, v₀)`.
    pub predicted: f64,
    /// Numerical field at `end`.
    pub observed: f64,
}

impl OraclePair {
    pub fn residual(&self) -> f64 {
        (self.predicted - self.observed).abs()
    }
}

/// Runs the transport scheme and follows each probe along the discrete
/// characteristic `x ← x + τv; v ← v + τE(x); v ← v + Σₖδβₖσₖ(x)`, driven by the
/// same increments. The scheme is constant along these curves up to
/// interpolation error.
pub fn characteristic_oracle_transport(
    f0: &Field,
    e: &FieldOnX,
    spec: &NoiseSpec,
    stream: &IncrementStream,
    n_steps: u64,
    probes: &[(f64, f64)],
) -> Result<Vec<OraclePair>> {
    if spec.kind() != NoiseKind::Transport {
        return Err(Error::NoiseKindMismatch {
            expected: NoiseKind::Transport,
            found: spec.kind(),
        });
    }
    let Coefficients::Spatial(rows) = spec.coefficients() else {
        return Err(Error::Invalid("transport noise without spatial coefficients".into()));
    };
    let vmax = f0.grid().vmax();
    let inside = |x: f64, v: f64| x.is_finite() && v.is_finite() && v.abs() <= vmax;
    if let Some(&(x, v)) = probes.iter().find(|&&(x, v)| !inside(x, v)) {
        return Err(Error::ProbeOutside { x, v });
    }

    let tau = stream.tau();
    let mut points: Vec<(f64, f64)> = probes.iter().map(|&(x, v)| (x.rem_euclid(1.0), v)).collect();
    let mut increments = vec![0.0; stream.components()];
    for n in 0..n_steps {
        stream.fill_increments(n, &mut increments);
        for p in &mut points {
            let x = (p.0 + tau * p.1).rem_euclid(1.0);
            let mut v = p.1 + tau * interp::sample_periodic(e.values(), x)?;
            for (row, &db) in rows.iter().zip(&increments) {
                v += db * interp::sample_periodic(row.values(), x)?;
            }
            *p = (x, v);
        }
    }
    if let Some(&(x, v)) = points.iter().find(|&&(x, v)| !inside(x, v)) {
        return Err(Error::ProbeOutside { x, v });
    }

    let traj = Trajectory {
        kind: SchemeKind::Transport,
        initial: f0,
        e,
        noise: Some(spec),
    };
    let last = schemes::run(&traj, stream, n_steps, |_| Ok(()))?;
    probes
        .iter()
        .zip(&points)
        .map(|(&start, &end)| {
            Ok(OraclePair {
                start,
                end,
                predicted: interp::sample_bilinear(f0, start.0, start.1)?,
                observed: interp::sample_bilinear(&last.field, end.0, end.1)?,
            })
        })
        .collect()
}

/// Largest residual over a set of probes.
pub fn max_residual(pairs: &[OraclePair]) -> f64 {
    pairs.iter().map(OraclePair::residual).fold(0.0, f64::max)
}
