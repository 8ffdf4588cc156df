//! Ensembles of independent trajectories and the coupled-path mean-square
//! convergence study.
//!
//! Samples are simulated in parallel but always reduced in sample order, so
//! every statistic is bitwise independent of the number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, Norm};
use crate::noise::IncrementStream;
use crate::schemes::{self, Trajectory};

/// Samples simulated between two reductions; bounds memory, not results.
const BATCH: usize = 256;

/// A scalar quantity recorded at every time step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    L2Sq,
    Mass,
    Min,
    Norm(Norm),
}

impl Observable {
    pub fn eval(self, f: &Field) -> Result<f64> {
        Ok(match self {
            Observable::L2Sq => f.l2_squared(),
            Observable::Mass => f.mass(),
            Observable::Min => f.min_value(),
            Observable::Norm(p) => f.lp_norm(p)?,
        })
    }
}

/// Everything shared by the samples of an ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleConfig<'a> {
    pub trajectory: Trajectory<'a>,
    pub master_seed: u64,
    pub tau: f64,
    pub n_steps: u64,
}

/// Per-time statistics of one observable.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    /// Unbiased sample variance; NaN when fewer than two samples.
    pub variance: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub samples: u64,
    pub observables: Vec<Observable>,
    pub series: Vec<SeriesStats>,
}

impl EnsembleStats {
    pub fn get(&self, obs: Observable) -> Option<&SeriesStats> {
        self.observables.iter().position(|&o| o == obs).map(|k| &self.series[k])
    }

    pub fn variance_defined(&self) -> bool {
        self.samples >= 2
    }
}

/// Welford accumulator over a flat array of series.
struct Moments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, xs: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }
}

fn sample_observables(cfg: &EnsembleConfig<'_>, obs: &[Observable], sample: u64) -> Result<Vec<f64>> {
    let k = cfg.trajectory.noise.map_or(0, |n| n.components());
    let stream = IncrementStream::new(cfg.master_seed, sample, k.max(1), cfg.tau);
    let mut out = Vec::with_capacity((cfg.n_steps as usize + 1) * obs.len());
    schemes::run(&cfg.trajectory, &stream, cfg.n_steps, |s| {
        for &o in obs {
            out.push(o.eval(&s.field)?);
        }
        Ok(())
    })?;
    Ok(out)
}

/// Runs samples `0..m` from the master seed and reduces their observables.
pub fn run_ensemble(cfg: &EnsembleConfig<'_>, m: u64, observables: &[Observable]) -> Result<EnsembleStats> {
    if m == 0 {
        return Err(Error::Invalid("an ensemble needs at least one sample".into()));
    }
    if !(cfg.tau > 0.0 && cfg.tau.is_finite()) {
        return Err(Error::Invalid(format!("step size {} must be positive", cfg.tau)));
    }
    let n_times = cfg.n_steps as usize + 1;
    let mut acc = Moments::new(n_times * observables.len());
    let mut start = 0;
    while start < m {
        let end = (start + BATCH as u64).min(m);
        let batch: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|s| sample_observables(cfg, observables, s))
            .collect::<Result<_>>()?;
        for xs in &batch {
            acc.push(xs);
        }
        start = end;
    }
    log::debug!("ensemble of {m} samples reduced");

    let mf = m as f64;
    let series = (0..observables.len())
        .map(|k| {
            let pick = |v: &[f64]| -> Vec<f64> { (0..n_times).map(|n| v[n * observables.len() + k]).collect() };
            let mean = pick(&acc.mean);
            let variance: Vec<f64> = if m >= 2 {
                pick(&acc.m2).into_iter().map(|s| s / (mf - 1.0)).collect()
            } else {
                vec![f64::NAN; n_times]
            };
            let stderr = variance.iter().map(|v| (v / mf).sqrt()).collect();
            SeriesStats { mean, variance, stderr }
        })
        .collect();
    Ok(EnsembleStats {
        times: (0..n_times).map(|n| n as f64 * cfg.tau).collect(),
        samples: m,
        observables: observables.to_vec(),
        series,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MsConvergenceTable {
    /// `(τ, rms_error)` with τ strictly decreasing.
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of `log(rms_error)` against `log(τ)`.
    pub slope: f64,
}

/// Ordinary least-squares slope through `(ln x, ln y)`. NaN with fewer than
/// two points or any nonpositive value.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Number of steps of size `tau` in `t_final`, if it is an integer.
pub fn step_count(t_final: f64, tau: f64) -> Result<u64> {
    let n = (t_final / tau).round();
    if !(tau > 0.0) || !t_final.is_finite() || n < 0.0 || (n * tau - t_final).abs() > 1e-9 {
        return Err(Error::NonIntegerSteps { t_final, tau });
    }
    Ok(n as u64)
}

fn dyadic_factor(tau: f64, tau_ref: f64) -> Result<u64> {
    let r = (tau / tau_ref).round();
    let exact = r >= 1.0 && (r * tau_ref - tau).abs() <= 1e-12 * tau;
    if !exact || !(r as u64).is_power_of_two() {
        return Err(Error::NonDyadic { tau, tau_ref });
    }
    Ok(r as u64)
}

/// Mean-square errors at `t_final` against a reference run at `tau_ref`.
///
/// Each sample draws one fine Brownian path; the reference run and every
/// coarse run use that same path, the coarse increments being exact sums of
/// the fine ones. The error at each step size is the square root of the
/// largest (over all grid nodes) sample mean of the squared difference.
pub fn ms_convergence(
    trajectory: &Trajectory<'_>,
    master_seed: u64,
    t_final: f64,
    tau_set: &[f64],
    tau_ref: f64,
    m: u64,
) -> Result<MsConvergenceTable> {
    if m == 0 {
        return Err(Error::Invalid("convergence study needs at least one sample".into()));
    }
    let mut taus = tau_set.to_vec();
    taus.sort_by(|a, b| b.total_cmp(a));
    if taus.is_empty() || taus.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Invalid("step sizes must be distinct and nonempty".into()));
    }
    let plan = taus
        .iter()
        .map(|&tau| Ok((dyadic_factor(tau, tau_ref)?, step_count(t_final, tau)?)))
        .collect::<Result<Vec<_>>>()?;
    let n_ref = step_count(t_final, tau_ref)?;
    let k = trajectory.noise.map_or(1, |n| n.components());
    let len = trajectory.initial.grid().len();

    let per_sample = |s: u64| -> Result<Vec<Vec<f64>>> {
        let fine = IncrementStream::new(master_seed, s, k, tau_ref);
        let reference = schemes::run(trajectory, &fine, n_ref, |_| Ok(()))?;
        plan.iter()
            .map(|&(factor, n)| {
                let coarse = schemes::run(trajectory, &fine.coarsen(factor)?, n, |_| Ok(()))?;
                Ok(coarse
                    .field
                    .values()
                    .iter()
                    .zip(reference.field.values())
                    .map(|(a, b)| (a - b) * (a - b))
                    .collect())
            })
            .collect()
    };

    let mut sums = vec![vec![0.0; len]; taus.len()];
    let mut start = 0;
    while start < m {
        let end = (start + BATCH as u64).min(m);
        let batch: Vec<Vec<Vec<f64>>> = (start..end).into_par_iter().map(per_sample).collect::<Result<_>>()?;
        for sample in &batch {
            for (acc, sq) in sums.iter_mut().zip(sample) {
                for (a, d) in acc.iter_mut().zip(sq) {
                    *a += d;
                }
            }
        }
        start = end;
    }

    let rows: Vec<(f64, f64)> = taus
        .iter()
        .zip(&sums)
        .map(|(&tau, acc)| {
            let worst = acc.iter().fold(0.0f64, |w, &s| w.max(s / m as f64));
            (tau, worst.sqrt())
        })
        .collect();
    let slope = fit_loglog_slope(&rows);
    Ok(MsConvergenceTable { rows, slope })
}
