//! Experiment driver: reads a config, runs one of the studies, writes CSV.

pub mod config;
pub mod validate;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use svlasov_core::diagnostics::{self, observe};
use svlasov_core::grid::fmt_real;
use svlasov_core::montecarlo::{self, EnsembleConfig, Observable};
use svlasov_core::schemes::{self, Trajectory};
use svlasov_core::{testcase, Field, FieldOnX, IncrementStream, NoiseSpec};

pub use config::{parse_config, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] svlasov_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0} validation check(s) failed")]
    Validation(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Initial data, force field and noise built from a config.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub f0: Field,
    pub e: FieldOnX,
    pub noise: Option<NoiseSpec>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, CliError> {
        config.validate()?;
        let grid = config.grid();
        let noise = config.noise_spec()?;
        Ok(Self {
            f0: testcase::two_stream(&grid),
            e: testcase::cosine_field(&grid),
            noise,
            config,
        })
    }

    pub fn trajectory(&self) -> Trajectory<'_> {
        Trajectory {
            kind: self.config.scheme,
            initial: &self.f0,
            e: &self.e,
            noise: self.noise.as_ref(),
        }
    }

    fn components(&self) -> usize {
        self.noise.as_ref().map_or(1, NoiseSpec::components)
    }

    fn stream(&self, sample: u64) -> IncrementStream {
        IncrementStream::new(self.config.seed, sample, self.components(), self.config.tau)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    Ok((path, BufWriter::new(file)))
}

fn write_rows(path: &Path, mut out: BufWriter<File>, header: &str, rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut body = || -> io::Result<()> {
        writeln!(out, "{header}")?;
        for row in rows {
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()
    };
    body().map_err(io_err(path))
}

/// One `snapshot_t<t>.csv` per configured snapshot time (sample 0).
pub fn cmd_snapshot(exp: &Experiment) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &exp.config;
    let wanted: Vec<(u64, f64)> = cfg
        .snapshots()
        .into_iter()
        .map(|t| (montecarlo::step_count(t, cfg.tau).expect("validated"), t))
        .collect();
    let last = wanted.iter().map(|w| w.0).max().unwrap_or(0);
    let mut written = Vec::new();
    let mut result = Ok(());
    schemes::run(&exp.trajectory(), &exp.stream(0), last, |state| {
        for &(_, t) in wanted.iter().filter(|w| w.0 == state.step) {
            let write = || -> Result<PathBuf, CliError> {
                let (path, mut out) = create(&cfg.out, &format!("snapshot_t{t}.csv"))?;
                state
                    .field
                    .write_csv(&mut out)
                    .and_then(|_| out.flush())
                    .map_err(io_err(&path))?;
                Ok(path)
            };
            match write() {
                Ok(p) => written.push(p),
                Err(e) => result = Err(e),
            }
        }
        Ok(())
    })?;
    result?;
    Ok(written)
}

pub const LAWS_HEADER: &str = "t,mean_l2sq,stderr_l2sq,theory_l2sq,mean_mass,stderr_mass,theory_mass";

/// Ensemble means and standard errors of `‖f‖₂²` and the mass, with theory.
pub fn cmd_laws(exp: &Experiment) -> Result<PathBuf, CliError> {
    let cfg = &exp.config;
    let ens = EnsembleConfig {
        trajectory: exp.trajectory(),
        master_seed: cfg.seed,
        tau: cfg.tau,
        n_steps: cfg.n_steps(),
    };
    let stats = montecarlo::run_ensemble(&ens, cfg.samples, &[Observable::L2Sq, Observable::Mass])?;
    let l2_law = diagnostics::l2_theory(cfg.scheme, &exp.f0, exp.noise.as_ref());
    let mass_law = diagnostics::mass_theory(cfg.scheme, &exp.f0);
    if l2_law.is_none() {
        log::warn!("no closed-form L2 law for {} with {:?}; theory column is nan", cfg.scheme, cfg.noise);
    }
    let l2 = stats.get(Observable::L2Sq).expect("requested");
    let mass = stats.get(Observable::Mass).expect("requested");
    let law = |c: &Option<diagnostics::TheoryCurve>, t| c.map_or(f64::NAN, |c| c.value(t));
    let rows: Vec<Vec<String>> = stats
        .times
        .iter()
        .enumerate()
        .map(|(n, &t)| {
            [
                t,
                l2.mean[n],
                l2.stderr[n],
                law(&l2_law, t),
                mass.mean[n],
                mass.stderr[n],
                law(&mass_law, t),
            ]
            .iter()
            .map(|&x| fmt_real(x))
            .collect()
        })
        .collect();
    let (path, out) = create(&cfg.out, "laws.csv")?;
    write_rows(&path, out, LAWS_HEADER, &rows)?;
    Ok(path)
}

/// Exponents always reported by `norms`, followed by any further `extra_p`.
const NORMS_P: [f64; 3] = [1.0, 3.0, 55.0];

fn norms_exponents(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut ps = NORMS_P.to_vec();
    for &p in &cfg.extra_p {
        if !ps.contains(&p) {
            ps.push(p);
        }
    }
    ps
}

pub fn norms_header(cfg: &ExperimentConfig) -> String {
    let mut cols = vec!["path".to_string(), "t".to_string()];
    cols.extend(norms_exponents(cfg).iter().map(|p| format!("l{p}")));
    cols.push("min".into());
    cols.join(",")
}

/// Per-path `Lᵖ` norms and minimum at every step, for `realizations` paths.
pub fn cmd_norms(exp: &Experiment) -> Result<PathBuf, CliError> {
    let cfg = &exp.config;
    let ps = norms_exponents(cfg);
    let traj = exp.trajectory();
    let paths: Vec<Vec<Vec<String>>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|path| {
            let mut rows = Vec::new();
            schemes::run(&traj, &exp.stream(path), cfg.n_steps(), |state| {
                let obs = observe(&state.field, state.t(), &ps)?;
                let mut row = vec![path.to_string(), fmt_real(obs.t)];
                row.extend(obs.lp_extra.iter().map(|&(_, v)| fmt_real(v)));
                row.push(fmt_real(obs.min));
                rows.push(row);
                Ok(())
            })?;
            Ok(rows)
        })
        .collect::<Result<_, svlasov_core::Error>>()?;
    let (path, out) = create(&cfg.out, "norms.csv")?;
    write_rows(&path, out, &norms_header(cfg), &paths.concat())?;
    Ok(path)
}

/// Coupled-path mean-square errors against a `tau_ref` reference.
pub fn cmd_msconv(exp: &Experiment) -> Result<(PathBuf, f64), CliError> {
    let cfg = &exp.config;
    let table = montecarlo::ms_convergence(
        &exp.trajectory(),
        cfg.seed,
        cfg.t_final,
        &cfg.tau_set,
        cfg.tau_ref,
        cfg.samples,
    )?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|&(tau, err)| vec![fmt_real(tau), fmt_real(err)])
        .collect();
    let (path, mut out) = create(&cfg.out, "msconv.csv")?;
    let mut body = || -> io::Result<()> {
        writeln!(out, "tau,rms_error")?;
        for row in &rows {
            writeln!(out, "{}", row.join(","))?;
        }
        writeln!(out, "# slope = {}", fmt_real(table.slope))?;
        out.flush()
    };
    body().map_err(io_err(&path))?;
    Ok((path, table.slope))
}
