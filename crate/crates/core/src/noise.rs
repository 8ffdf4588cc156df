//! Diffusion coefficients and Wiener increments.
//!
//! Increments come from a counter-based generator: the fine increment of
//! component `k` at fine step `m` is a pure function of
//! `(master_seed, sample_index, m, k)`. A coarser level sums `2^level`
//! consecutive fine increments, so every step size in a convergence study sees
//! the same Brownian path without storing it.
//!
//! Fine increments are rounded to a multiple of [`INCREMENT_QUANTUM`]. Sums of
//! such values are exact in `f64` for any realistic path length, which makes
//! coarse increments and reconstructed endpoints `β(T)` independent of how the
//! fine increments are grouped.

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, PhaseGrid};
use crate::operators::FieldOnX;

/// Resolution of a single fine increment, `2⁻⁴⁰`.
pub const INCREMENT_QUANTUM: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Additive,
    MultIto,
    MultStrato,
    Transport,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Additive => "additive",
            NoiseKind::MultIto => "mult_ito",
            NoiseKind::MultStrato => "mult_strato",
            NoiseKind::Transport => "transport",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Built-in diffusion coefficients, addressed by their config names.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Catalog {
    /// `cos(v)·1{|v| ≤ 3}`
    CosV3,
    /// `sin(v)·1{|v| ≤ 3}`
    SinV3,
    /// `0.5·sin(v)·1{|v| ≤ 3}`
    HalfSinV3,
    /// `0.5·e^{−v²/2}·cos(2πx)`, `0.5·e^{−v²/2}·sin(2πx)`
    GaussPair,
    /// `cos(2πx)`, `sin(2πx)`
    CosSinPair,
    Const(f64),
    /// A constant velocity-shift amplitude for transport noise.
    TransportConst(f64),
}

fn indicator3(v: f64) -> f64 {
    if v.abs() <= 3.0 {
        1.0
    } else {
        0.0
    }
}

impl Catalog {
    pub fn components(&self) -> usize {
        match self {
            Catalog::GaussPair | Catalog::CosSinPair => 2,
            _ => 1,
        }
    }

    /// True when every component depends on `x` only.
    pub fn is_spatial(&self) -> bool {
        matches!(
            self,
            Catalog::CosSinPair | Catalog::Const(_) | Catalog::TransportConst(_)
        )
    }

    pub fn eval(&self, k: usize, x: f64, v: f64) -> f64 {
        use std::f64::consts::TAU;
        match (self, k) {
            (Catalog::CosV3, 0) => v.cos() * indicator3(v),
            (Catalog::SinV3, 0) => v.sin() * indicator3(v),
            (Catalog::HalfSinV3, 0) => 0.5 * v.sin() * indicator3(v),
            (Catalog::GaussPair, 0) => 0.5 * (-v * v / 2.0).exp() * (TAU * x).cos(),
            (Catalog::GaussPair, 1) => 0.5 * (-v * v / 2.0).exp() * (TAU * x).sin(),
            (Catalog::CosSinPair, 0) => (TAU * x).cos(),
            (Catalog::CosSinPair, 1) => (TAU * x).sin(),
            (Catalog::Const(c), 0) | (Catalog::TransportConst(c), 0) => *c,
            _ => panic!("component {k} out of range for {self}"),
        }
    }
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Catalog::CosV3 => f.write_str("cos_v3"),
            Catalog::SinV3 => f.write_str("sin_v3"),
            Catalog::HalfSinV3 => f.write_str("half_sin_v3"),
            Catalog::GaussPair => f.write_str("gauss_pair"),
            Catalog::CosSinPair => f.write_str("cos_sin_pair"),
            Catalog::Const(c) => write!(f, "const({c})"),
            Catalog::TransportConst(c) => write!(f, "transport_const({c})"),
        }
    }
}

impl FromStr for Catalog {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::UnknownNoise(s.to_string());
        let arg = |prefix: &str| -> Option<Result<f64>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(
                inner
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|c| c.is_finite())
                    .ok_or_else(unknown),
            )
        };
        match s {
            "cos_v3" => Ok(Catalog::CosV3),
            "sin_v3" => Ok(Catalog::SinV3),
            "half_sin_v3" => Ok(Catalog::HalfSinV3),
            "gauss_pair" => Ok(Catalog::GaussPair),
            "cos_sin_pair" => Ok(Catalog::CosSinPair),
            _ => {
                if let Some(c) = arg("transport_const") {
                    c.map(Catalog::TransportConst)
                } else if let Some(c) = arg("const") {
                    c.map(Catalog::Const)
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients {
    /// `σₖ(x, v)` on the full grid, with `Σₖ σₖ²` cached for the Itô correction.
    Phase { sigma: Vec<Field>, sum_sq: Field },
    /// `σ₁,ₖ(x)` for transport noise.
    Spatial(Vec<FieldOnX>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    kind: NoiseKind,
    label: String,
    coefficients: Coefficients,
}

impl NoiseSpec {
    pub fn builtin(catalog: Catalog, kind: NoiseKind, grid: &PhaseGrid) -> Result<Self> {
        let k = catalog.components();
        if kind == NoiseKind::Transport {
            if !catalog.is_spatial() {
                return Err(Error::NotSpatial {
                    name: catalog.to_string(),
                });
            }
            let rows = (0..k)
                .map(|c| FieldOnX::sample(grid, |x| catalog.eval(c, x, 0.0)))
                .collect::<Result<Vec<_>>>()?;
            let mut spec = Self::spatial(rows)?;
            spec.label = catalog.to_string();
            return Ok(spec);
        }
        let sigma = (0..k)
            .map(|c| Field::sample(*grid, |x, v| catalog.eval(c, x, v)))
            .collect::<Result<Vec<_>>>()?;
        let mut spec = Self::phase(kind, sigma)?;
        spec.label = catalog.to_string();
        Ok(spec)
    }

    /// Noise with grid-sampled coefficients `σₖ(x, v)`.
    pub fn phase(kind: NoiseKind, sigma: Vec<Field>) -> Result<Self> {
        if kind == NoiseKind::Transport {
            return Err(Error::Invalid(
                "transport noise takes coefficients depending on x only".into(),
            ));
        }
        let first = sigma
            .first()
            .ok_or_else(|| Error::Invalid("noise needs at least one component".into()))?;
        for s in &sigma[1..] {
            first.check_shape(s)?;
        }
        let grid = *first.grid();
        let mut sum_sq = vec![0.0; grid.len()];
        for s in &sigma {
            for (acc, v) in sum_sq.iter_mut().zip(s.values()) {
                *acc += v * v;
            }
        }
        Ok(Self {
            kind,
            label: "custom".into(),
            coefficients: Coefficients::Phase {
                sigma,
                sum_sq: Field::from_raw(grid, sum_sq),
            },
        })
    }

    /// Transport noise with coefficients `σ₁,ₖ(x)`.
    pub fn spatial(rows: Vec<FieldOnX>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Invalid("noise needs at least one component".into()))?;
        if rows.iter().any(|r| r.len() != first.len()) {
            return Err(Error::Invalid("transport coefficients differ in length".into()));
        }
        Ok(Self {
            kind: NoiseKind::Transport,
            label: "custom".into(),
            coefficients: Coefficients::Spatial(rows),
        })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn components(&self) -> usize {
        match &self.coefficients {
            Coefficients::Phase { sigma, .. } => sigma.len(),
            Coefficients::Spatial(rows) => rows.len(),
        }
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    /// `Σₖ ‖σₖ‖²` over the phase grid. For transport rows the `v` extent is
    /// not meaningful and the sum is taken over `x` only.
    pub fn sum_l2_squared(&self) -> f64 {
        match &self.coefficients {
            Coefficients::Phase { sigma, .. } => sigma.iter().map(Field::l2_squared).sum(),
            Coefficients::Spatial(rows) => rows
                .iter()
                .map(|r| r.values().iter().map(|v| v * v).sum::<f64>() / r.len() as f64)
                .sum(),
        }
    }

    /// `Σₖ σₖ(xᵢ) δβₖ` for transport noise.
    pub fn transport_shift(&self, increments: &[f64]) -> Option<FieldOnX> {
        let Coefficients::Spatial(rows) = &self.coefficients else {
            return None;
        };
        let mut shift = vec![0.0; rows[0].len()];
        for (row, &db) in rows.iter().zip(increments) {
            for (s, &c) in shift.iter_mut().zip(row.values()) {
                *s += db * c;
            }
        }
        Some(FieldOnX::from_values(shift).expect("finite coefficients and increments"))
    }

    /// The constant value of `Σₖ σₖ²` if it varies by at most `tol` over the
    /// nodes (measured from the median).
    pub fn check_sigma_constant(&self, tol: f64) -> Option<f64> {
        let mut sums: Vec<f64> = match &self.coefficients {
            Coefficients::Phase { sum_sq, .. } => sum_sq.values().to_vec(),
            Coefficients::Spatial(rows) => (0..rows[0].len())
                .map(|i| rows.iter().map(|r| r.values()[i].powi(2)).sum())
                .collect(),
        };
        let mut sorted = sums.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        sums.retain(|s| (s - median).abs() > tol);
        sums.is_empty().then_some(median)
    }
}

/// Convenience wrapper resolving a catalog name.
pub fn builtin_sigma(name: &str, kind: NoiseKind, grid: &PhaseGrid) -> Result<NoiseSpec> {
    NoiseSpec::builtin(name.parse()?, kind, grid)
}

/// Descriptor of one Brownian path (per sample) at a given dyadic level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IncrementStream {
    master_seed: u64,
    sample_index: u64,
    components: usize,
    fine_tau_bits: u64,
    level: u32,
}

impl IncrementStream {
    pub fn new(master_seed: u64, sample_index: u64, components: usize, tau: f64) -> Self {
        assert!(tau > 0.0 && tau.is_finite(), "step size must be positive");
        Self {
            master_seed,
            sample_index,
            components,
            fine_tau_bits: tau.to_bits(),
            level: 0,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn fine_tau(&self) -> f64 {
        f64::from_bits(self.fine_tau_bits)
    }

    /// Step size at this level, `τ_fine · 2^level`.
    pub fn tau(&self) -> f64 {
        self.fine_tau() * (1u64 << self.level) as f64
    }

    pub fn coarsen(&self, factor: u64) -> Result<Self> {
        if !factor.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(factor));
        }
        Ok(Self {
            level: self.level + factor.trailing_zeros(),
            ..*self
        })
    }

    /// Increments `δβ_{n,k}` for `k = 0..K` at step `n` of this level.
    pub fn draw_increments(&self, n: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.components];
        self.fill_increments(n, &mut out);
        out
    }

    pub fn fill_increments(&self, n: u64, out: &mut [f64]) {
        assert_eq!(out.len(), self.components);
        out.fill(0.0);
        let per = 1u64 << self.level;
        let k = self.components as u64;
        let scale = self.fine_tau().sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.sample_index);
        // Each fine draw consumes two u64 = four 32-bit words, laid out (m, k).
        rng.set_word_pos(u128::from(n * per * k) * 4);
        for _ in 0..per {
            for o in out.iter_mut() {
                let z = box_muller(rng.next_u64(), rng.next_u64());
                *o += quantize(scale * z);
            }
        }
    }
}

#[inline]
fn box_muller(a: u64, b: u64) -> f64 {
    const EPS: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((a >> 11) + 1) as f64 * EPS;
    let u2 = (b >> 11) as f64 * EPS;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[inline]
fn quantize(x: f64) -> f64 {
    (x / INCREMENT_QUANTUM).round() * INCREMENT_QUANTUM
}
