use brinklab_cli::report::{compute_fits, parse_tsv, FitVariable};
use brinklab_cli::{run_experiment_with_threads, run_oracles, ExperimentConfig};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "brinklab", version, about = "Random perforated-domain estimates at desk scale")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run the experiment and write `<output>.tsv` and `<output>.json`.
    Run {
        config: PathBuf,
        /// Exit with status 3 if any bound check fails.
        #[arg(long)]
        strict: bool,
        /// Overrides the config's output path (without extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the config and exit.
    Validate { config: PathBuf },
    /// Run only the brute-force and closed-form oracles.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Recompute fits from the rows of a stored TSV report.
    Report { path: PathBuf },
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_BOUND: u8 = 3;

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_VALIDATION)
    })?;
    ExperimentConfig::from_toml(&text).map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(EXIT_VALIDATION)
    })
}

fn threads(n: usize) -> usize {
    if n == 0 {
        std::thread::available_parallelism().map_or(1, |v| v.get())
    } else {
        n
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.verb {
        Verb::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("ok {} {}", c.kind, c.hash());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Verb::Run { config, strict, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let report = match run_experiment_with_threads(&cfg, threads(cli.threads)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::FAILURE;
                }
            };
            let base = out
                .or_else(|| cfg.output.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| config.with_extension(""));
            let write = |ext: &str, body: String| -> std::io::Result<()> {
                let p = base.with_extension(ext);
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(p, body)
            };
            if let Err(e) = write("tsv", report.to_tsv()).and_then(|_| write("json", report.to_json())) {
                eprintln!("cannot write report: {e}");
                return ExitCode::FAILURE;
            }
            for f in &report.fits {
                println!(
                    "fit {} vs {:?}: slope {:.4} [{:.4}, {:.4}]",
                    f.quantity, f.variable, f.slope, f.slope_ci.0, f.slope_ci.1
                );
            }
            for c in &report.checks {
                println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if strict && !report.all_passed() {
                ExitCode::from(EXIT_BOUND)
            } else {
                ExitCode::SUCCESS
            }
        }
        Verb::Oracle { config, strict } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads(cli.threads))
                .build()
                .expect("thread pool");
            match pool.install(|| run_oracles(&cfg)) {
                Ok(checks) => {
                    for c in &checks {
                        println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                    if strict && checks.iter().any(|c| !c.passed) {
                        ExitCode::from(EXIT_BOUND)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::FAILURE
                }
            }
        }
        Verb::Report { path } => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", path.display());
                    return ExitCode::from(EXIT_VALIDATION);
                }
            };
            let rows = match parse_tsv(&text) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_VALIDATION);
                }
            };
            let mut hashes: Vec<&str> = rows.iter().map(|(h, _)| h.as_str()).collect();
            hashes.dedup();
            let rows: Vec<_> = rows.iter().map(|(_, r)| r.clone()).collect();
            println!("{} rows, config hashes: {}", rows.len(), hashes.join(", "));
            for f in compute_fits(&rows) {
                let var = if f.variable == FitVariable::N { "N" } else { "eps" };
                println!("{}\t{var}\t{}\t{}\t{}\t{}", f.quantity, f.slope, f.intercept, f.slope_ci.0, f.slope_ci.1);
            }
            ExitCode::SUCCESS
        }
    }
}
