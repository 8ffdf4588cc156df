use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use svlasov_cli::validate::cmd_validate;
use svlasov_cli::{cmd_laws, cmd_msconv, cmd_norms, cmd_snapshot, parse_config, CliError, Experiment};

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
#[command(name = "svlasov", version, about = "Stochastic linear Vlasov experiments")]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Cmd {
    /// Write the field at each snapshot time.
    Snapshot,
    /// Ensemble means of the L2 norm and mass against theory.
    Laws,
    /// Per-path Lp norms.
    Norms,
    /// Mean-square convergence against a fine reference.
    Msconv,
    /// Fast structural checks; exits 1 on failure.
    Validate,
}

fn run(args: Args) -> Result<(), CliError> {
    let path = &args.common.config;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut config = parse_config(&text)?;
    let c = &args.common;
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    if let Some(m) = c.samples {
        config.samples = m;
    }
    if let Some(n) = c.threads {
        config.threads = Some(n);
    }
    if let Some(out) = &c.out {
        config.out = out.clone();
    }
    config.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;

    let exp = Experiment::new(config)?;
    log::info!("{:?} on {} with {} threads", args.command, exp.f0.grid(), pool.current_num_threads());
    pool.install(|| match args.command {
        Cmd::Snapshot => {
            for p in cmd_snapshot(&exp)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Cmd::Laws => cmd_laws(&exp).map(|p| println!("wrote {}", p.display())),
        Cmd::Norms => cmd_norms(&exp).map(|p| println!("wrote {}", p.display())),
        Cmd::Msconv => cmd_msconv(&exp).map(|(p, slope)| println!("wrote {} (slope {slope:.4})", p.display())),
        Cmd::Validate => cmd_validate(&exp).map(|_| ()),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svlasov: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
