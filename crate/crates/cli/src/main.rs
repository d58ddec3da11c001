use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vlasov_ap::cli_bench::{
    convergence_csv, convergence_reversal, linspace, run, sweep, sweep_csv, vn_check, vn_csv, ReversalOptions,
    RunConfig, SweepAxis,
};
use vlasov_ap::scenarios::Scenario;
use vlasov_ap::splitting::{MomentsSource, Scheme};
use vlasov_ap::{Error, Parallelism};

/// Asymptotic-preserving semi-Lagrangian DG solver for 1D1V Vlasov–Poisson.
///
/// Set VPAP_THREADS to size the worker pool.
#[derive(Parser)]
#[command(name = "vpap", version)]
struct Cli {
    /// Run the hot loops on the calling thread only.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration file.
    Run {
        config: PathBuf,
        /// Use the large reference mesh and long final time.
        #[arg(long)]
        full_scale: bool,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-reversal convergence table.
    Converge {
        scenario: String,
        degree: usize,
        /// Comma-separated mesh sizes, e.g. 16,32,64,128.
        meshes: String,
        /// Reversal time.
        #[arg(name = "T")]
        final_time: f64,
        #[arg(long, default_value = "ap_csldg_1")]
        scheme: Scheme,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value = "he_input")]
        moments_source: MomentsSource,
        /// `Δt = factor · min(Δx,Δv)^{k+1}`.
        #[arg(long, default_value_t = 0.1)]
        dt_factor: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a configuration over one parameter axis.
    Sweep {
        config: PathBuf,
        /// `cfl=1,3,5`, `lambda=1e-3,1e-6,0` or `mesh=32,64`.
        axis: SweepAxis,
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Von Neumann spectrum over a (λ, Δt) grid.
    VnCheck {
        /// `lo:hi` or `lo:hi:n`.
        lambda_range: String,
        /// `lo:hi` or `lo:hi:n`.
        dt_range: String,
        /// Points per range when not given inline.
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Comma-separated wavenumbers.
        #[arg(long, default_value = "0.1,1,10")]
        kappa: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(raw: &str, points: usize) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = raw.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("bad number '{s}' in range '{raw}'")))
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [lo, hi] => Ok(linspace(num(lo)?, num(hi)?, points)),
        [lo, hi, n] => {
            let n = n
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad point count in range '{raw}'")))?;
            Ok(linspace(num(lo)?, num(hi)?, n))
        }
        _ => Err(Error::Config(format!("range '{raw}' must be lo:hi or lo:hi:n"))),
    }
}

fn parse_usize_list(raw: &str) -> Result<Vec<usize>, Error> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("'{s}' is not a mesh size")))
        })
        .collect()
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn load(config: &PathBuf, full_scale: bool, out: Option<PathBuf>, serial: bool) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::from_file(config)?;
    if full_scale {
        cfg = cfg.full_scale()?;
    }
    if out.is_some() {
        cfg.output.dir = out;
    }
    if serial {
        cfg.scheme.parallelism = Parallelism::Serial;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Error> {
    let mode = if cli.serial { Parallelism::Serial } else { Parallelism::Parallel };
    match cli.cmd {
        Command::Run { config, full_scale, out } => {
            let cfg = load(&config, full_scale, out, cli.serial)?;
            let summary = run(&cfg)?;
            if let Some(why) = &summary.blow_up {
                log::warn!("run flagged as blown up: {why}");
            }
            print!("{}", summary.to_text());
        }
        Command::Converge {
            scenario,
            degree,
            meshes,
            final_time,
            scheme,
            lambda,
            moments_source,
            dt_factor,
            out,
        } => {
            let sc = Scenario::from_name(&scenario, &BTreeMap::new())?;
            let mut opts = ReversalOptions { dt_factor, ..ReversalOptions::default() };
            opts.scheme.scheme = scheme;
            opts.scheme.debye = lambda;
            opts.scheme.moments_source = moments_source;
            opts.scheme.parallelism = mode;
            opts.scheme.validate()?;
            let rows = convergence_reversal(&sc, degree, &parse_usize_list(&meshes)?, final_time, &opts)?;
            emit(&convergence_csv(&rows), out.as_ref())?;
        }
        Command::Sweep { config, axis, full_scale, out } => {
            let cfg = load(&config, full_scale, out, cli.serial)?;
            let runs = sweep(&cfg, &axis)?;
            if cfg.output.dir.is_none() {
                print!("{}", sweep_csv(&runs));
            }
            for (label, s) in &runs {
                log::info!("{label}: blow_up={} peak_eps_p={:e}", s.blow_up.is_some(), s.peak_eps_p());
            }
        }
        Command::VnCheck { lambda_range, dt_range, points, kappa, out } => {
            let lambdas = parse_range(&lambda_range, points)?;
            let dts = parse_range(&dt_range, points)?;
            let kappas = kappa
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("'{s}' is not a wavenumber")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rows = vn_check(&lambdas, &dts, &kappas, mode)?;
            let worst = rows.iter().map(|r| r.max_modulus).fold(0.0, f64::max);
            log::info!("{} cases, max |mu| = {worst:.17e}", rows.len());
            emit(&vn_csv(&rows), out.as_ref())?;
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<(), Error> {
    if let Ok(raw) = std::env::var("VPAP_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("VPAP_THREADS = '{raw}' is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<(), Error> {
    if std::env::var_os("VPAP_THREADS").is_some() {
        log::warn!("VPAP_THREADS ignored: built without the parallel feature");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|_| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
