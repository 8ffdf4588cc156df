//! Linear interpolation along one grid direction.
//!
//! In `x` the data are periodic; in `v` they are extended by zero outside
//! `[-vmax, vmax]`. Every interpolated value is a convex combination of at most
//! two node values (or exactly zero), so nonnegative data stay nonnegative.
//!
//! Foot points within [`SNAP`] cells of a node are resolved to that node, which
//! makes integer shifts exact permutations.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Field;

/// Distance (in cells) under which a foot point is treated as a node hit.
pub const SNAP: f64 = 1e-9;

/// Fields with at least this many nodes are processed in parallel.
const PAR_MIN_NODES: usize = 1 << 18;

/// A displacement measured in cells, split into an integer part and a
/// fractional weight in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct CellShift {
    pub whole: i64,
    pub frac: f64,
}

impl CellShift {
    #[inline]
    pub fn new(cells: f64) -> Self {
        let mut whole = cells.floor();
        let mut frac = cells - whole;
        if frac < SNAP {
            frac = 0.0;
        } else if frac > 1.0 - SNAP {
            frac = 0.0;
            whole += 1.0;
        }
        Self {
            whole: whole as i64,
            frac,
        }
    }
}

/// Value of the `x`-row at `vⱼ`, evaluated at an arbitrary `x` (periodic).
pub fn sample_x(f: &Field, x: f64, j: usize) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("x"));
    }
    let g = f.grid();
    assert!(j < g.nv(), "v index {j} out of range");
    let nx = g.nx() as i64;
    let pos = x.rem_euclid(1.0) * nx as f64;
    // `pos = lo + w`; the shift convention is foot = node − shift.
    let s = CellShift::new(pos);
    let lo = s.whole.rem_euclid(nx) as usize;
    if s.frac == 0.0 {
        return Ok(f.get(lo, j));
    }
    let hi = (lo + 1) % g.nx();
    Ok((1.0 - s.frac) * f.get(lo, j) + s.frac * f.get(hi, j))
}

/// Value of the `v`-column at `xᵢ`, evaluated at an arbitrary `v`; zero
/// outside the truncated velocity domain.
pub fn sample_v(f: &Field, i: usize, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite("v"));
    }
    let g = f.grid();
    assert!(i < g.nx(), "x index {i} out of range");
    let s = CellShift::new((v + g.vmax()) / g.dv());
    let last = g.nv() as i64 - 1;
    if s.whole < 0 || s.whole > last || (s.whole == last && s.frac > 0.0) {
        return Ok(0.0);
    }
    let lo = s.whole as usize;
    if s.frac == 0.0 {
        return Ok(f.get(i, lo));
    }
    Ok((1.0 - s.frac) * f.get(i, lo) + s.frac * f.get(i, lo + 1))
}

/// Periodic linear interpolation of samples at `x = i/len`.
pub fn sample_periodic(values: &[f64], x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("x"));
    }
    let n = values.len() as i64;
    let s = CellShift::new(x.rem_euclid(1.0) * n as f64);
    let lo = s.whole.rem_euclid(n) as usize;
    if s.frac == 0.0 {
        return Ok(values[lo]);
    }
    let hi = (lo + 1) % values.len();
    Ok((1.0 - s.frac) * values[lo] + s.frac * values[hi])
}

/// Bilinear interpolation at an arbitrary phase point (periodic in `x`, zero
/// outside the velocity domain).
pub fn sample_bilinear(f: &Field, x: f64, v: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("x"));
    }
    let g = f.grid();
    let nx = g.nx() as i64;
    let s = CellShift::new(x.rem_euclid(1.0) * nx as f64);
    let lo = s.whole.rem_euclid(nx) as usize;
    let a = sample_v(f, lo, v)?;
    if s.frac == 0.0 {
        return Ok(a);
    }
    let b = sample_v(f, (lo + 1) % g.nx(), v)?;
    Ok((1.0 - s.frac) * a + s.frac * b)
}

/// Periodic shift of every `x`-row: `out[i][j] = f(xᵢ − cells[j]·dx, vⱼ)`.
pub(crate) fn shift_rows_periodic(f: &Field, cells: &[f64], out: &mut [f64]) {
    let g = *f.grid();
    let (nx, nv) = (g.nx(), g.nv());
    debug_assert_eq!(cells.len(), nv);
    debug_assert_eq!(out.len(), g.len());
    // Source rows for node i are i − whole (weight 1 − frac) and i − whole − 1.
    let plan: Vec<(usize, f64)> = cells
        .iter()
        .map(|&c| {
            let s = CellShift::new(c);
            (s.whole.rem_euclid(nx as i64) as usize, s.frac)
        })
        .collect();
    let src = f.values();
    let kernel = |i: usize, row: &mut [f64]| {
        for (j, (&(back, w), o)) in plan.iter().zip(row.iter_mut()).enumerate() {
            let hi = if i >= back { i - back } else { i + nx - back };
            let upper = src[hi * nv + j];
            *o = if w == 0.0 {
                upper
            } else {
                let lo = if hi == 0 { nx - 1 } else { hi - 1 };
                (1.0 - w) * upper + w * src[lo * nv + j]
            };
        }
    };
    if g.len() >= PAR_MIN_NODES {
        out.par_chunks_mut(nv)
            .enumerate()
            .for_each(|(i, row)| kernel(i, row));
    } else {
        out.chunks_mut(nv).enumerate().for_each(|(i, row)| kernel(i, row));
    }
}

/// Zero-extended shift of every `v`-column: `out[i][j] = f(xᵢ, vⱼ − cells[i]·dv)`.
pub(crate) fn shift_columns_zero(f: &Field, cells: &[f64], out: &mut [f64]) {
    let g = *f.grid();
    let nv = g.nv();
    debug_assert_eq!(cells.len(), g.nx());
    debug_assert_eq!(out.len(), g.len());
    let kernel = |(col, (src, &c)): (&mut [f64], (&[f64], &f64))| shift_column(src, CellShift::new(c), col);
    if g.len() >= PAR_MIN_NODES {
        out.par_chunks_mut(nv)
            .zip(f.values().par_chunks(nv).zip(cells.par_iter()))
            .for_each(kernel);
    } else {
        out.chunks_mut(nv)
            .zip(f.values().chunks(nv).zip(cells.iter()))
            .for_each(kernel);
    }
}

#[inline]
fn shift_column(src: &[f64], s: CellShift, out: &mut [f64]) {
    let nv = src.len() as i64;
    // Node j reads src[j − whole] (weight 1 − frac) and src[j − whole − 1].
    let (first, end) = if s.frac == 0.0 {
        (s.whole.max(0), (nv + s.whole).min(nv))
    } else {
        ((s.whole + 1).max(0), (nv + s.whole).min(nv))
    };
    if first >= end {
        out.fill(0.0);
        return;
    }
    let (first, end) = (first as usize, end as usize);
    out[..first].fill(0.0);
    out[end..].fill(0.0);
    let off = (first as i64 - s.whole) as usize;
    let len = end - first;
    let upper = &src[off..off + len];
    if s.frac == 0.0 {
        out[first..end].copy_from_slice(upper);
    } else {
        let lower = &src[off - 1..off - 1 + len];
        let (a, b) = (1.0 - s.frac, s.frac);
        for ((o, &u), &l) in out[first..end].iter_mut().zip(upper).zip(lower) {
            *o = a * u + b * l;
        }
    }
}
