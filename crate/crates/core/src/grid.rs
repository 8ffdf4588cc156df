//! Phase-space grid, field storage and quadrature.
//!
//! `x` lives on the unit torus with `nx` nodes and no duplicated endpoint;
//! `v` is truncated to `[-vmax, vmax]` with `nv` nodes including both ends.
//! Fields are stored row-major in `i` (the `x` index), so the `v`-column at a
//! fixed `xᵢ` is contiguous.

use std::fmt;
use std::io::{self, Write};

use crate::accumulator::ExactSum;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    nx: usize,
    nv: usize,
    vmax: f64,
    dx: f64,
    dv: f64,
}

impl PhaseGrid {
    pub fn new(nx: usize, nv: usize, vmax: f64) -> Result<Self> {
        if nx < 2 {
            return Err(Error::InvalidGrid(format!("nx = {nx}, need at least 2")));
        }
        if nv < 2 {
            return Err(Error::InvalidGrid(format!("nv = {nv}, need at least 2")));
        }
        if !vmax.is_finite() || vmax <= 0.0 {
            return Err(Error::InvalidGrid(format!("vmax = {vmax}, need a finite positive value")));
        }
        Ok(Self {
            nx,
            nv,
            vmax,
            dx: 1.0 / nx as f64,
            dv: 2.0 * vmax / (nv - 1) as f64,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn len(&self) -> usize {
        self.nx * self.nv
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    #[inline]
    pub fn v(&self, j: usize) -> f64 {
        // Symmetric about 0, with both endpoints exact.
        let half = (self.nv - 1) as i64;
        let m = 2 * j as i64 - half;
        if m.abs() == half {
            m.signum() as f64 * self.vmax
        } else {
            m as f64 * self.vmax / half as f64
        }
    }

    pub fn x_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nx).map(|i| self.x(i))
    }

    pub fn v_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nv).map(|j| self.v(j))
    }

    /// Quadrature weight of a single node.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dv
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.nv)
    }
}

impl fmt::Display for PhaseGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} grid, vmax = {}", self.nx, self.nv, self.vmax)
    }
}

/// Exponent selector for [`Field::lp_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Norm {
    Lp(f64),
    Sup,
}

impl Norm {
    pub fn validate(self) -> Result<Self> {
        match self {
            Norm::Lp(p) if !(p >= 1.0) || p.is_infinite() => Err(Error::InvalidExponent(p)),
            n => Ok(n),
        }
    }
}

impl From<f64> for Norm {
    fn from(p: f64) -> Self {
        if p == f64::INFINITY {
            Norm::Sup
        } else {
            Norm::Lp(p)
        }
    }
}

/// Grid samples `f(xᵢ, vⱼ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: PhaseGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: PhaseGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `g` at every node; fails on the first non-finite value.
    pub fn sample<G>(grid: PhaseGrid, g: G) -> Result<Self>
    where
        G: Fn(f64, f64) -> f64,
    {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.nv {
                let value = g(x, grid.v(j));
                if !value.is_finite() {
                    return Err(Error::NonFiniteSample { i, j, value });
                }
                values.push(value);
            }
        }
        Ok(Self { grid, values })
    }

    pub fn from_values(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.shape(),
                found: (values.len(), 1),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                i: k / grid.nv,
                j: k % grid.nv,
                value: values[k],
            });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: PhaseGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn values_mut_vec(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// The `v`-column at fixed `xᵢ`.
    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        let nv = self.grid.nv;
        &self.values[i * nv..(i + 1) * nv]
    }

    pub fn check_shape(&self, other: &Field) -> Result<()> {
        if self.grid.shape() != other.grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.shape(),
                found: other.grid.shape(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// Riemann-sum `Lᵖ` norm, or the maximum modulus for [`Norm::Sup`].
    pub fn lp_norm(&self, p: impl Into<Norm>) -> Result<f64> {
        let norm = p.into().validate()?;
        let sup = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let p = match norm {
            Norm::Sup => return Ok(sup),
            Norm::Lp(p) => p,
        };
        if sup == 0.0 {
            return Ok(0.0);
        }
        let area = self.grid.cell_area();
        let mut acc = ExactSum::new();
        if p == 1.0 {
            self.values.iter().for_each(|v| acc.add(v.abs()));
            Ok(acc.value() * area)
        } else if p == 2.0 {
            self.values.iter().for_each(|v| acc.add(v * v));
            Ok((acc.value() * area).sqrt())
        } else {
            // Normalising by the maximum keeps large exponents in range.
            let integral_power = p.fract() == 0.0 && p <= 64.0;
            for v in &self.values {
                let r = v.abs() / sup;
                acc.add(if integral_power { r.powi(p as i32) } else { r.powf(p) });
            }
            Ok(sup * (acc.value() * area).powf(1.0 / p))
        }
    }

    /// `‖f‖₂²` without the round trip through a square root.
    pub fn l2_squared(&self) -> f64 {
        let mut acc = ExactSum::new();
        self.values.iter().for_each(|v| acc.add(v * v));
        acc.value() * self.grid.cell_area()
    }

    /// Signed integral of the field.
    pub fn mass(&self) -> f64 {
        let mut acc = ExactSum::new();
        self.values.iter().for_each(|&v| acc.add(v));
        acc.value() * self.grid.cell_area()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Long-form dump with header `x,v,f`, 17 significant digits, `i` major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,v,f")?;
        for i in 0..self.grid.nx {
            let x = self.grid.x(i);
            for j in 0..self.grid.nv {
                writeln!(
                    out,
                    "{},{},{}",
                    fmt_real(x),
                    fmt_real(self.grid.v(j)),
                    fmt_real(self.get(i, j))
                )?;
            }
        }
        Ok(())
    }
}

/// Real formatting shared by every CSV output: 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}
