//! Exact sub-flows of the split Vlasov dynamics, realised on the grid.
//!
//! * `S¹(t) f(x, v) = f(x − t v, v)`, free streaming;
//! * `S²(t) f(x, v) = f(x, v − t E(x))`, acceleration by the force field;
//! * `T(w) f(x, v) = f(x, v − w(x))`, the velocity shift of transport noise.
//!
//! Each is a single pass of 1-D linear interpolation.

use crate::error::{Error, Result};
use crate::grid::{Field, PhaseGrid};
use crate::interp;

/// A function of `x` alone, sampled at the `x` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldOnX {
    values: Vec<f64>,
}

impl FieldOnX {
    pub fn zeros(nx: usize) -> Self {
        Self { values: vec![0.0; nx] }
    }

    pub fn constant(nx: usize, c: f64) -> Self {
        Self { values: vec![c; nx] }
    }

    pub fn sample<G: Fn(f64) -> f64>(grid: &PhaseGrid, g: G) -> Result<Self> {
        Self::from_values(grid.x_nodes().map(g).collect())
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                i,
                j: 0,
                value: values[i],
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> FieldOnX {
        FieldOnX {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    fn check_len(&self, grid: &PhaseGrid) -> Result<()> {
        if self.values.len() != grid.nx() {
            return Err(Error::ShapeMismatch {
                expected: (grid.nx(), 1),
                found: (self.values.len(), 1),
            });
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("t"))
    }
}

pub fn apply_s1(f: &Field, t: f64) -> Result<Field> {
    let mut out = vec![0.0; f.grid().len()];
    s1_into(f, t, &mut out)?;
    Ok(Field::from_raw(*f.grid(), out))
}

pub fn apply_s2(f: &Field, t: f64, e: &FieldOnX) -> Result<Field> {
    let mut out = vec![0.0; f.grid().len()];
    s2_into(f, t, e, &mut out)?;
    Ok(Field::from_raw(*f.grid(), out))
}

/// One deterministic Lie–Trotter step `S²(τ) S¹(τ) f`, as two 1-D passes.
pub fn apply_det_step(f: &Field, tau: f64, e: &FieldOnX) -> Result<Field> {
    if !(tau > 0.0 && tau < 1.0) {
        log::warn!("step size {tau} outside (0, 1)");
    }
    let mut scratch = vec![0.0; f.grid().len()];
    let mut out = vec![0.0; f.grid().len()];
    det_step_into(f, tau, e, &mut scratch, &mut out)?;
    Ok(Field::from_raw(*f.grid(), out))
}

/// Velocity shift `out(xᵢ, vⱼ) = f(xᵢ, vⱼ − shift(xᵢ))`.
pub fn apply_vshift(f: &Field, shift: &FieldOnX) -> Result<Field> {
    let mut out = vec![0.0; f.grid().len()];
    vshift_into(f, shift, &mut out)?;
    Ok(Field::from_raw(*f.grid(), out))
}

pub fn apply_pointwise_factor(f: &Field, g: &Field) -> Result<Field> {
    f.check_shape(g)?;
    let values = f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    Ok(Field::from_raw(*f.grid(), values))
}

pub(crate) fn s1_into(f: &Field, t: f64, out: &mut [f64]) -> Result<()> {
    check_time(t)?;
    let g = f.grid();
    let nx = g.nx() as f64;
    let cells: Vec<f64> = g.v_nodes().map(|v| t * v * nx).collect();
    interp::shift_rows_periodic(f, &cells, out);
    Ok(())
}

pub(crate) fn s2_into(f: &Field, t: f64, e: &FieldOnX, out: &mut [f64]) -> Result<()> {
    check_time(t)?;
    e.check_len(f.grid())?;
    let dv = f.grid().dv();
    let cells: Vec<f64> = e.values.iter().map(|&ex| t * ex / dv).collect();
    interp::shift_columns_zero(f, &cells, out);
    Ok(())
}

pub(crate) fn vshift_into(f: &Field, shift: &FieldOnX, out: &mut [f64]) -> Result<()> {
    shift.check_len(f.grid())?;
    let dv = f.grid().dv();
    let cells: Vec<f64> = shift.values.iter().map(|&s| s / dv).collect();
    interp::shift_columns_zero(f, &cells, out);
    Ok(())
}

/// `out ← S²(τ) S¹(τ) f`, with `scratch` holding the intermediate field.
pub(crate) fn det_step_into(
    f: &Field,
    tau: f64,
    e: &FieldOnX,
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) -> Result<()> {
    let grid = *f.grid();
    s1_into(f, tau, scratch)?;
    let half = Field::from_raw(grid, std::mem::take(scratch));
    let res = s2_into(&half, tau, e, out);
    *scratch = half.into_values();
    res
}
