//! Command-line experiment runner for the movable-antenna secure
//! full-duplex toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mafd::config::{ConfigDocument, SystemConfig};
use mafd::error::Error;
use mafd::experiments::{
    run_experiment, run_single, spec_from_manifest, ExperimentKind, ExperimentSpec, FriFamily,
    SweepParam,
};
use mafd::schemes::SchemeId;

#[derive(Parser)]
#[command(
    name = "mafd",
    version,
    about = "Movable-antenna secure full-duplex system: simulation and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON configuration file (desk-scale defaults when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for trial-level parallelism (0 = all cores).
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Reuse the fully resolved spec from a previous run's manifest;
    /// other experiment flags are ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme on one scenario and print the per-user rates.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Scheme to run.
        #[arg(long, default_value = "proposed")]
        scheme: String,
        /// Optional CSV output for the rate breakdown.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep one parameter and compare schemes, emitting per-point stats.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Swept parameter: region_size, num_antennas, k_u, k_d, k_e,
        /// si_loss_db or fri_error.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated, strictly increasing sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated schemes.
        #[arg(long, value_delimiter = ',', default_value = "proposed")]
        schemes: Vec<String>,
        /// Error family for fri_error sweeps: prm_prv, aod or aoa.
        #[arg(long)]
        fri_family: Option<String>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace the swarm and the alternating loop per iteration.
    Convergence {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Raster the channel power gains over a single-antenna moving region.
    Gainmap {
        #[command(flatten)]
        common: CommonOpts,
        /// Raster pitch in wavelengths.
        #[arg(long, default_value_t = 0.02)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in property checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn load_config(common: &CommonOpts) -> mafd::Result<SystemConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let doc: ConfigDocument = serde_json::from_str(&text)?;
            doc.resolve()?
        }
        None => SystemConfig::desk(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Solver(_) | Error::PenaltyScale { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn build_spec(
    kind: ExperimentKind,
    common: &CommonOpts,
    trials: usize,
) -> mafd::Result<ExperimentSpec> {
    let config = load_config(common)?;
    Ok(ExperimentSpec {
        kind,
        param: None,
        values: vec![],
        fri_family: None,
        schemes: vec![SchemeId::Proposed],
        trials,
        seed: common.seed.unwrap_or(config.seed),
        parallelism: common.parallelism,
        gainmap_step: 0.02,
        config,
    })
}

fn dispatch(cli: Cli) -> mafd::Result<()> {
    match cli.command {
        Command::Run {
            common,
            scheme,
            output,
        } => {
            let cfg = load_config(&common)?;
            let scheme = SchemeId::parse(&scheme)?;
            let (trial, breakdown) = run_single(&cfg, scheme, cfg.seed)?;
            println!(
                "scheme {} seed {}: secrecy sum {:.6} bits/s/Hz \
                 (uplink {:.6}, downlink {:.6}) in {} iterations, {:.2} s",
                trial.scheme,
                trial.seed,
                trial.ssr,
                trial.ul_secrecy,
                trial.dl_secrecy,
                trial.iterations,
                trial.wall_secs
            );
            print!("{}", breakdown.to_csv());
            if let Some(path) = output {
                std::fs::write(&path, breakdown.to_csv())?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Sweep {
            common,
            param,
            values,
            schemes,
            fri_family,
            trials,
            out,
        } => {
            let spec = if let Some(manifest) = &common.manifest {
                spec_from_manifest(manifest)?
            } else {
                let mut spec = build_spec(ExperimentKind::Sweep, &common, trials)?;
                spec.param = Some(SweepParam::parse(param.as_deref().ok_or_else(|| {
                    Error::Config("sweep needs --param".into())
                })?)?);
                spec.values = values;
                spec.schemes = schemes
                    .iter()
                    .map(|s| SchemeId::parse(s))
                    .collect::<mafd::Result<Vec<_>>>()?;
                spec.fri_family = fri_family.as_deref().map(FriFamily::parse).transpose()?;
                spec
            };
            let summary = run_experiment(&spec, &out)?;
            report(&summary);
            Ok(())
        }
        Command::Convergence {
            common,
            trials,
            out,
        } => {
            let spec = if let Some(manifest) = &common.manifest {
                spec_from_manifest(manifest)?
            } else {
                build_spec(ExperimentKind::Convergence, &common, trials)?
            };
            let summary = run_experiment(&spec, &out)?;
            report(&summary);
            Ok(())
        }
        Command::Gainmap { common, step, out } => {
            let spec = if let Some(manifest) = &common.manifest {
                spec_from_manifest(manifest)?
            } else {
                let mut spec = build_spec(ExperimentKind::Gainmap, &common, 1)?;
                spec.gainmap_step = step;
                spec
            };
            let summary = run_experiment(&spec, &out)?;
            report(&summary);
            Ok(())
        }
        Command::Selftest { seed } => {
            let outcomes = mafd::verify::selftest(seed);
            let mut all_ok = true;
            for o in &outcomes {
                println!(
                    "[{}] {}: {}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail
                );
                all_ok &= o.passed;
            }
            if all_ok {
                Ok(())
            } else {
                Err(Error::Solver("self-test failed".into()))
            }
        }
    }
}

fn report(summary: &mafd::experiments::RunSummary) {
    for f in &summary.files {
        eprintln!("wrote {}", f.display());
    }
    if summary.failures > 0 {
        eprintln!("{} trial(s) failed; see the aggregates", summary.failures);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
