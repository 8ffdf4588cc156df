//! Flat `key = value` experiment files.
//!
//! ```text
//! # two-stream, additive noise
//! scheme = additive
//! noise = half_sin_v3
//! nx = 200
//! nv = 401
//! tau = 0.1
//! T = 1
//! samples = 10000
//! snapshot_times = 0, 0.5, 1
//! tau_ref = 2^-12
//! tau_set = 2^-6, 2^-7, 2^-8
//! ```
//!
//! Reals accept plain decimals, `pi` multiples such as `2pi`, and powers
//! written `2^-12`. Lists are comma separated.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::PathBuf;

use svlasov_core::montecarlo::step_count;
use svlasov_core::{Catalog, NoiseSpec, PhaseGrid, SchemeKind};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: SchemeKind,
    pub noise: Option<Catalog>,
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
    pub tau: f64,
    pub t_final: f64,
    pub samples: u64,
    pub seed: u64,
    pub snapshot_times: Vec<f64>,
    pub extra_p: Vec<f64>,
    pub out: PathBuf,
    /// Independent paths written by `norms`.
    pub realizations: u64,
    pub tau_ref: f64,
    pub tau_set: Vec<f64>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Deterministic,
            noise: None,
            nx: 200,
            nv: 401,
            vmax: 2.0 * PI,
            tau: 0.1,
            t_final: 1.0,
            samples: 1,
            seed: 0,
            snapshot_times: Vec::new(),
            extra_p: Vec::new(),
            out: PathBuf::from("out"),
            realizations: 3,
            tau_ref: 2f64.powi(-12),
            tau_set: (6..=10).map(|k| 2f64.powi(-k)).collect(),
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn n_steps(&self) -> u64 {
        step_count(self.t_final, self.tau).expect("validated at parse time")
    }

    /// Snapshot times, defaulting to the final time.
    pub fn snapshots(&self) -> Vec<f64> {
        if self.snapshot_times.is_empty() {
            vec![self.t_final]
        } else {
            self.snapshot_times.clone()
        }
    }

    pub fn grid(&self) -> PhaseGrid {
        PhaseGrid::new(self.nx, self.nv, self.vmax).expect("validated at parse time")
    }

    /// The noise of the configured scheme on the configured grid.
    pub fn noise_spec(&self) -> Result<Option<NoiseSpec>, CliError> {
        let Some(kind) = self.scheme.noise_kind() else {
            return Ok(None);
        };
        let catalog = self
            .noise
            .ok_or_else(|| CliError::Config(format!("scheme {} needs a noise", self.scheme)))?;
        NoiseSpec::builtin(catalog, kind, &self.grid())
            .map(Some)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Cross-field checks, run after parsing and again after flag overrides.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Err(e) = PhaseGrid::new(self.nx, self.nv, self.vmax) {
            return bad(e.to_string());
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau = {} must be positive", self.tau));
        }
        if step_count(self.t_final, self.tau).is_err() {
            return bad(format!("T = {} is not a whole number of steps of {}", self.t_final, self.tau));
        }
        for &t in &self.snapshot_times {
            if step_count(t, self.tau).is_err() || t > self.t_final + 1e-9 {
                return bad(format!("snapshot time {t} is not a step time in [0, {}]", self.t_final));
            }
        }
        if let Some(&p) = self.extra_p.iter().find(|&&p| !(p >= 1.0)) {
            return bad(format!("extra_p entry {p} must be at least 1"));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if !(self.tau_ref > 0.0 && self.tau_ref.is_finite()) || self.tau_set.is_empty() {
            return bad("tau_ref must be positive and tau_set nonempty".into());
        }
        self.noise_spec()?;
        Ok(())
    }
}

fn line_err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

/// A real number: decimal, `<a>^<b>`, or `<a>pi`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = if let Some((base, exp)) = s.split_once('^') {
        let base: f64 = base.trim().parse().map_err(|_| format!("bad base in {s:?}"))?;
        let exp: f64 = exp.trim().parse().map_err(|_| format!("bad exponent in {s:?}"))?;
        base.powf(exp)
    } else if let Some(k) = s.strip_suffix("pi") {
        let k = k.trim();
        let k: f64 = if k.is_empty() { 1.0 } else { k.parse().map_err(|_| format!("bad real {s:?}"))? };
        k * PI
    } else {
        s.parse().map_err(|_| format!("bad real {s:?}"))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_real).collect()
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("bad integer {s:?}"))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| line_err(line, format!("expected `key = value`, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(line_err(line, format!("duplicate key `{key}`")));
        }
        let res: Result<(), String> = (|| {
            match key {
                "scheme" => cfg.scheme = value.parse().map_err(|e: svlasov_core::Error| e.to_string())?,
                "noise" => cfg.noise = Some(value.parse().map_err(|e: svlasov_core::Error| e.to_string())?),
                "nx" => cfg.nx = parse_int(value)?,
                "nv" => cfg.nv = parse_int(value)?,
                "vmax" => cfg.vmax = parse_real(value)?,
                "tau" => cfg.tau = parse_real(value)?,
                "T" => cfg.t_final = parse_real(value)?,
                "samples" => cfg.samples = parse_int(value)?,
                "seed" => cfg.seed = parse_int(value)?,
                "snapshot_times" => cfg.snapshot_times = parse_list(value)?,
                "extra_p" => cfg.extra_p = parse_list(value)?,
                "out" => cfg.out = PathBuf::from(value),
                "realizations" => cfg.realizations = parse_int(value)?,
                "tau_ref" => cfg.tau_ref = parse_real(value)?,
                "tau_set" => cfg.tau_set = parse_list(value)?,
                "threads" => cfg.threads = Some(parse_int(value)?),
                _ => return Err(format!("unknown key `{key}`")),
            }
            Ok(())
        })();
        res.map_err(|msg| line_err(line, msg))?;

        // Step-count problems are reported on the line that completes them.
        if matches!(key, "tau" | "T") && seen.contains("tau") && seen.contains("T") && step_count(cfg.t_final, cfg.tau).is_err() {
            return Err(line_err(
                line,
                format!("T = {} is not a whole number of steps of tau = {}", cfg.t_final, cfg.tau),
            ));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
