//! Thin command-line front end: run experiment configs or figure presets,
//! verify the numerical identities, answer sizing queries, and export
//! eigenvalue pools.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use field_recon::design::{design_query, DesignQuery, SolvedParameter};
use field_recon::experiment::{
    csv_string, parse_config, preset, preset_names, run_experiment, verify, ResultRow,
    VerifyLevel,
};
use field_recon::filters::FilterKind;
use field_recon::mse::sample_eigenvalues;

/// Reconstruction of bandlimited fields from irregular, noisy,
/// position-jittered sensor samples.
#[derive(Parser)]
#[command(name = "field-recon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config file or a preset name
    /// (fig1..fig10), writing CSV.
    Run {
        /// Path to a TOML config, or a preset name.
        config: String,
        /// Override the CSV output path (default: config's `output`, or
        /// standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical identity checks; nonzero exit on failure.
    Verify {
        /// Include the large eigenvalue-pool moment checks.
        #[arg(long)]
        full: bool,
    },
    /// Solve a sizing question: exactly one of --m/--r/--beta/--snr-m-db
    /// is left out and solved for.
    Design {
        /// Target normalized MSE.
        #[arg(long)]
        target: f64,
        /// Filter kind: mf, zf, lmmse, or lmmse_jitter.
        #[arg(long)]
        filter: FilterKind,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        snr_m_db: Option<f64>,
        #[arg(long)]
        snr_x_db: Option<f64>,
        #[arg(long, default_value_t = 200)]
        eigen_m: usize,
        #[arg(long, default_value_t = 50)]
        eigen_realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample eigenvalues of the scaled Gram matrix over random layouts and
    /// write them as CSV.
    Eigensample {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 200)]
        m: usize,
        #[arg(long, default_value_t = 50)]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads() {
    if let Ok(n) = std::env::var("FIELD_RECON_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn summarize(rows: &[ResultRow]) {
    for row in rows {
        eprintln!(
            "model {} {:<12} beta {:<6} snr_m {:>6.1} dB snr_x {:>6.1} dB  mse {:.4e} (+-{:.1e})",
            row.model.label(),
            row.kind.label(),
            row.params.beta,
            row.params.snr_m_db(),
            row.params.snr_x_db(),
            row.mse_emp,
            row.stderr,
        );
    }
}

fn run(cli: Cli) -> field_recon::Result<bool> {
    match cli.command {
        Command::Run { config, out } => {
            let (configs, default_out) = if preset_names().contains(&config) {
                (preset(&config)?, Some(PathBuf::from(format!("{config}.csv"))))
            } else {
                let text = std::fs::read_to_string(&config)?;
                let cfg = parse_config(&text)?;
                let out_path = cfg.output.clone().map(PathBuf::from);
                (vec![cfg], out_path)
            };
            let mut rows = Vec::new();
            for cfg in &configs {
                rows.extend(run_experiment(cfg)?);
            }
            summarize(&rows);
            let csv = csv_string(&rows);
            match out.or(default_out) {
                Some(path) => {
                    std::fs::write(&path, csv)?;
                    eprintln!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Command::Verify { full } => {
            let level = if full {
                VerifyLevel::Full
            } else {
                VerifyLevel::Quick
            };
            let outcomes = verify(level)?;
            let mut all_ok = true;
            for o in &outcomes {
                println!(
                    "[{}] {}: {}",
                    if o.passed { "pass" } else { "FAIL" },
                    o.name,
                    o.detail
                );
                all_ok &= o.passed;
            }
            Ok(all_ok)
        }
        Command::Design {
            target,
            filter,
            m,
            r,
            beta,
            snr_m_db,
            snr_x_db,
            eigen_m,
            eigen_realizations,
            seed,
        } => {
            let mut q = DesignQuery::new(target, filter);
            q.m = m;
            q.r = r;
            q.beta = beta;
            q.snr_m_db = snr_m_db;
            q.snr_x_db = snr_x_db;
            q.eigen_m = eigen_m;
            q.eigen_realizations = eigen_realizations;
            q.seed = seed;
            let a = design_query(&q)?;
            match a.solved {
                SolvedParameter::SensorCount { beta, r } => {
                    println!("r ~= {r} (beta ~= {beta:.4})");
                }
                SolvedParameter::Harmonics { beta, m } => {
                    println!("M ~= {m} (beta ~= {beta:.4})");
                }
                SolvedParameter::SnrMDb { snr_m_db, mse_floor } => {
                    println!(
                        "SNR_m = {:.1} dB suffices; MSE floor ~= {:.2e}",
                        snr_m_db, mse_floor
                    );
                }
            }
            println!("achieved MSE {:.4e} (target {target:.4e})", a.achieved_mse);
            Ok(true)
        }
        Command::Eigensample {
            beta,
            m,
            realizations,
            seed,
            out,
        } => {
            let pool = sample_eigenvalues(beta, m, realizations, seed)?;
            let per = 2 * m + 1;
            let mut csv = String::from("realization,lambda\n");
            for (i, l) in pool.values.iter().enumerate() {
                csv.push_str(&format!("{},{}\n", i / per, l));
            }
            std::fs::write(&out, csv)?;
            eprintln!(
                "wrote {} eigenvalues (beta = {beta}, M = {m}) to {}",
                pool.values.len(),
                out.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
