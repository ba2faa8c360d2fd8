use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fork_overlap::classical::{poincare_section, PhaseSpacePoint, StretchedGaussianParams};
use fork_overlap::harness::{
    classical_series, export_csv, load_config, load_csv, quantum_record, quantum_series, run_cat_study,
    run_classical_sweep, run_fringe_study, run_quantum_sweep, stretched_oracle, write_atomically, write_fringe_csv,
    write_series_csv, CatStudy, CatStudyParams, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "fork-overlap",
    version,
    about = "Overlap decay of forked quantum and classical chaotic evolution"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML experiment config; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for stochastic pilot sampling and cat placement.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Stroboscopic surface of section.
    Poincare {
        /// Seed point `x,p`; may be repeated.
        #[arg(long = "point", value_parser = parse_point, allow_hyphen_values = true)]
        points: Vec<PhaseSpacePoint>,
        #[arg(long, default_value_t = 1000)]
        periods: usize,
    },
    /// Quantum and classical overlap series for one preparation time.
    Evolve {
        #[arg(long = "prep")]
        preparation_time: f64,
        #[arg(long)]
        quantum_only: bool,
    },
    /// Decoherence times over the configured preparation times.
    Sweep {
        #[arg(long)]
        quantum_only: bool,
    },
    /// Decoherence time against fringe scale with the small-δp fit.
    Fringe {
        /// Reuse an existing sweep CSV instead of running the quantum sweep.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Closed-form stretched-Gaussian and sparse-cat checks.
    Oracle,
    /// Sparse-cat overlap decomposition and displacement scaling.
    Cat,
}

fn parse_point(s: &str) -> std::result::Result<PhaseSpacePoint, String> {
    let (x, p) = s.split_once(',').ok_or_else(|| format!("expected `x,p`, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok(PhaseSpacePoint::new(parse(x)?, parse(p)?))
}

/// Island centres, the default packet centre and a few sea points.
fn default_poincare_seeds() -> Vec<PhaseSpacePoint> {
    [
        (2.9628, 0.12545),
        (-2.9628, 0.12545),
        (8.8504, 0.10875),
        (-8.8504, 0.10875),
        (6.0, 0.0),
        (0.0, 0.0),
        (-6.0, 1.0),
        (20.0, 2.0),
    ]
    .into_iter()
    .map(|(x, p)| PhaseSpacePoint::new(x, p))
    .collect()
}

fn load(global: &Global) -> Result<ExperimentConfig> {
    let mut config = match &global.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &global.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&config.output_dir).with_context(|| format!("creating {}", config.output_dir.display()))?;
    Ok(config)
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn write_cat_csv(study: &CatStudy, path: &Path) -> Result<()> {
    write_atomically(path, |w| {
        writeln!(
            w,
            "n,total,direct,interference,interference_share,mean_displaced_overlap,route_mismatch"
        )?;
        for r in &study.rows {
            let d = r.decomposition;
            let field = |f: fn(&fork_overlap::wigner::OverlapDecomposition) -> f64| {
                d.as_ref().map(|d| format!("{:.12e}", f(d))).unwrap_or_default()
            };
            writeln!(
                w,
                "{},{},{},{},{},{:.12e},{:.3e}",
                r.n,
                field(|d| d.total),
                field(|d| d.direct),
                field(|d| d.interference),
                field(|d| d.interference_share()),
                r.mean_displaced_overlap,
                r.route_mismatch
            )?;
        }
        Ok(())
    })?;
    Ok(())
}

fn cat_params(global: &Global) -> CatStudyParams {
    let mut params = CatStudyParams::default();
    if let Some(seed) = global.seed {
        params.seed = seed;
    }
    params
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let global = &cli.global;
    match cli.command {
        Command::Poincare { points, periods } => {
            let config = load(global)?;
            let seeds = if points.is_empty() {
                default_poincare_seeds()
            } else {
                points
            };
            let cloud = poincare_section(&seeds, periods, &config.hamiltonian(), config.dt)?;
            let path = config.output_dir.join("poincare.csv");
            cloud.write_csv(&path)?;
            announce(&path);
        }
        Command::Evolve {
            preparation_time,
            quantum_only,
        } => {
            let config = load(global)?;
            config.schedule(preparation_time)?;
            let series = quantum_series(&config, preparation_time)?;
            let record = quantum_record(&config, &series)?;
            let classical: Vec<(f64, f64)> = if quantum_only {
                Vec::new()
            } else {
                let c = classical_series(&config, preparation_time)?;
                if !c.converged() {
                    eprintln!("warning: classical overlap not converged at the threshold crossing");
                }
                c.times.into_iter().zip(c.overlap).collect()
            };
            let path = config.output_dir.join(format!("series_T{preparation_time}.csv"));
            write_series_csv(&series, &classical, &path)?;
            println!(
                "T = {preparation_time}: tau_d_q = {:?}, tau_lb = {:?}, norm drift {:.1e}",
                record.tau_d_quantum, record.tau_lower_bound, series.max_norm_drift
            );
            announce(&path);
        }
        Command::Sweep { quantum_only } => {
            let config = load(global)?;
            let mut sweep = run_quantum_sweep(&config)?;
            if !quantum_only {
                sweep.merge_classical(&run_classical_sweep(&config)?);
            }
            for f in &sweep.failures {
                eprintln!("warning: T = {}: {}", f.preparation_time, f.message);
            }
            let path = config.output_dir.join("sweep.csv");
            export_csv(&sweep.records, &path)?;
            announce(&path);
        }
        Command::Fringe { from } => {
            let config = load(global)?;
            let records = match from {
                Some(path) => load_csv(&path)?,
                None => run_quantum_sweep(&config)?.records,
            };
            let study = run_fringe_study(&records)?;
            let path = config.output_dir.join("fringe.csv");
            write_fringe_csv(&study, &path)?;
            println!(
                "slope {:.4}, intercept {:.4}, r = {:.4}",
                study.fit.slope, study.fit.intercept, study.fit.r
            );
            announce(&path);
        }
        Command::Oracle => {
            let seed = global.seed.unwrap_or(0);
            let params = StretchedGaussianParams::new(1.0, 1.0, (0.01, 0.0))?;
            let times: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
            let rows = stretched_oracle(&params, &times, 256, seed)?;
            let mut failed = 0;
            for r in &rows {
                let ok = r.error() < 1e-6;
                failed += usize::from(!ok);
                println!(
                    "{} stretched t = {:.1}: closed {:.9e} computed {:.9e}",
                    if ok { "PASS" } else { "FAIL" },
                    r.t,
                    r.closed_form,
                    r.computed
                );
            }
            let study = run_cat_study(&cat_params(global))?;
            for r in &study.rows {
                let ok = r.mean_displaced_overlap <= 2.0 / r.n as f64;
                failed += usize::from(!ok);
                println!(
                    "{} cat N = {}: displaced overlap {:.4} (limit {:.4})",
                    if ok { "PASS" } else { "FAIL" },
                    r.n,
                    r.mean_displaced_overlap,
                    2.0 / r.n as f64
                );
            }
            let ok = (study.scaling_exponent + 1.0).abs() <= 0.2;
            failed += usize::from(!ok);
            println!(
                "{} cat scaling exponent {:.3}",
                if ok { "PASS" } else { "FAIL" },
                study.scaling_exponent
            );
            if failed > 0 {
                bail!("{failed} oracle check(s) failed");
            }
        }
        Command::Cat => {
            let config = load(global)?;
            let study = run_cat_study(&cat_params(global))?;
            let path = config.output_dir.join("cat.csv");
            write_cat_csv(&study, &path)?;
            println!("scaling exponent {:.3}", study.scaling_exponent);
            announce(&path);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": ").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
