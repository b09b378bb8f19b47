//! Experiment runner behind the command-line interface.
//!
//! Three experiment families are supported: convergence traces of the
//! swarm and the alternating loop, channel power-gain rasters over a
//! single-antenna moving region, and parameter sweeps comparing schemes.
//! Every run writes its CSV outputs next to a JSON manifest that pins the
//! fully resolved specification; rerunning from the manifest reproduces the
//! CSV files byte for byte at any degree of parallelism.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ao::{self, AoOptions};
use crate::channel::{materialize, perturb_fri, AntennaLayout, FriError};
use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Error, Result};
use crate::objective::SsrBreakdown;
use crate::scenario::{self, derive_seed, monte_carlo};
use crate::schemes::{run_scheme_detailed, SchemeId, TrialResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    Gainmap,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    RegionSize,
    NumAntennas,
    KU,
    KD,
    KE,
    SiLossDb,
    FriError,
}

impl SweepParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "region_size" => Ok(Self::RegionSize),
            "num_antennas" => Ok(Self::NumAntennas),
            "k_u" => Ok(Self::KU),
            "k_d" => Ok(Self::KD),
            "k_e" => Ok(Self::KE),
            "si_loss_db" => Ok(Self::SiLossDb),
            "fri_error" => Ok(Self::FriError),
            other => Err(Error::Config(format!(
                "unknown sweep parameter '{other}' (expected region_size, num_antennas, \
                 k_u, k_d, k_e, si_loss_db or fri_error)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::RegionSize => "region_size",
            Self::NumAntennas => "num_antennas",
            Self::KU => "k_u",
            Self::KD => "k_d",
            Self::KE => "k_e",
            Self::SiLossDb => "si_loss_db",
            Self::FriError => "fri_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FriFamily {
    PrmPrv,
    Aod,
    Aoa,
}

impl FriFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "prm_prv" => Ok(Self::PrmPrv),
            "aod" => Ok(Self::Aod),
            "aoa" => Ok(Self::Aoa),
            other => Err(Error::Config(format!(
                "unknown error family '{other}' (expected prm_prv, aod or aoa)"
            ))),
        }
    }

    pub fn error(&self, value: f64) -> FriError {
        match self {
            Self::PrmPrv => FriError::PathResponse {
                normalized_variance: value,
            },
            Self::Aod => FriError::Aod { max_error: value },
            Self::Aoa => FriError::Aoa { max_error: value },
        }
    }
}

/// Fully resolved description of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub param: Option<SweepParam>,
    #[serde(default)]
    pub values: Vec<f64>,
    pub fri_family: Option<FriFamily>,
    #[serde(default)]
    pub schemes: Vec<SchemeId>,
    pub trials: usize,
    pub seed: u64,
    pub parallelism: usize,
    /// Raster pitch of the gain-map experiment, in wavelengths.
    pub gainmap_step: f64,
    pub config: SystemConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.trials == 0 && self.kind != ExperimentKind::Gainmap {
            return Err(Error::Config("need at least one trial".into()));
        }
        match self.kind {
            ExperimentKind::Sweep => {
                let param = self
                    .param
                    .ok_or_else(|| Error::Config("sweep needs a parameter".into()))?;
                if self.values.is_empty() {
                    return Err(Error::Config("sweep needs at least one value".into()));
                }
                if !self.values.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Config(
                        "sweep values must be strictly increasing".into(),
                    ));
                }
                if self.schemes.is_empty() {
                    return Err(Error::Config("sweep needs at least one scheme".into()));
                }
                match param {
                    SweepParam::FriError => {
                        if self.fri_family.is_none() {
                            return Err(Error::Config(
                                "a field-response-error sweep needs --fri-family".into(),
                            ));
                        }
                        if self.values.iter().any(|&v| v < 0.0) {
                            return Err(Error::Config("error magnitudes must be >= 0".into()));
                        }
                    }
                    SweepParam::NumAntennas | SweepParam::KU | SweepParam::KD | SweepParam::KE => {
                        if self
                            .values
                            .iter()
                            .any(|&v| v < 0.0 || v.fract() != 0.0)
                        {
                            return Err(Error::Config(format!(
                                "{} values must be nonnegative integers",
                                param.name()
                            )));
                        }
                    }
                    _ => {}
                }
            }
            ExperimentKind::Gainmap => {
                if !(self.gainmap_step > 0.0) {
                    return Err(Error::Config("gain-map step must be positive".into()));
                }
            }
            ExperimentKind::Convergence => {}
        }
        Ok(())
    }

    fn config_at(&self, param: SweepParam, value: f64) -> Result<SystemConfig> {
        let mut cfg = self.config.clone();
        match param {
            SweepParam::RegionSize => cfg.region_size = value,
            SweepParam::NumAntennas => {
                cfg.num_tx = value as usize;
                cfg.num_rx = value as usize;
            }
            SweepParam::KU => cfg.k_u = value as usize,
            SweepParam::KD => cfg.k_d = value as usize,
            SweepParam::KE => cfg.k_e = value as usize,
            SweepParam::SiLossDb => cfg.si_loss = db_to_linear(value),
            SweepParam::FriError => {}
        }
        cfg.seed = self.seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub spec: ExperimentSpec,
}

/// Files written by one experiment run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub failures: usize,
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

fn fmt_row(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// Mean sum of secrecy rates of the proposed scheme when the position step
/// sees gains perturbed by one error family while the transmit and receive
/// steps see the truth.
fn fri_point(
    cfg: &SystemConfig,
    family: FriFamily,
    value: f64,
    trials: usize,
    parallelism: usize,
) -> Result<(f64, f64, usize, usize)> {
    let run_all = || -> Vec<std::result::Result<f64, String>> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let scenario_seed = derive_seed(cfg.seed, &[t as u64, 0]);
                let scenario = scenario::build(cfg, scenario_seed).map_err(|e| e.to_string())?;
                let mut fri_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    cfg.seed,
                    &[t as u64, 0xF1],
                ));
                let perturbed = perturb_fri(&scenario.gains, &family.error(value), &mut fri_rng)
                    .map_err(|e| e.to_string())?;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[t as u64, 1]));
                let opts = AoOptions {
                    position_gains: Some(perturbed),
                    ..Default::default()
                };
                let out = ao::run(&scenario.gains, cfg, &opts, &mut rng).map_err(|e| e.to_string())?;
                let channels = materialize(&out.layout, &scenario.gains, cfg.wavelength)
                    .map_err(|e| e.to_string())?;
                let ctx = crate::objective::build_context(&channels, &out.solution, cfg)
                    .map_err(|e| e.to_string())?;
                Ok(crate::objective::ssr(&ctx).total)
            })
            .collect()
    };
    let results = if parallelism == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::Solver(e.to_string()))?
            .install(run_all)
    };
    let values: Vec<f64> = results.iter().filter_map(|r| r.as_ref().ok()).copied().collect();
    let failures = results.len() - values.len();
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let var = if n > 1 {
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok((mean, var.sqrt(), n, failures))
}

fn run_sweep(spec: &ExperimentSpec, dir: &Path) -> Result<RunSummary> {
    let param = spec.param.expect("validated");
    let mut rows = String::from(
        "param,value,scheme,mean_ssr,std_ssr,q10,q50,q90,mean_ul,mean_dl,n,failures\n",
    );
    let mut failures = 0usize;
    if param == SweepParam::FriError {
        let family = spec.fri_family.expect("validated");
        let mut cfg = spec.config.clone();
        cfg.seed = spec.seed;
        for &value in &spec.values {
            let (mean, std, n, fail) =
                fri_point(&cfg, family, value, spec.trials, spec.parallelism)?;
            failures += fail;
            rows.push_str(&fmt_row(&[
                param.name().into(),
                value.to_string(),
                SchemeId::Proposed.name().into(),
                mean.to_string(),
                std.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                n.to_string(),
                fail.to_string(),
            ]));
        }
    } else {
        let mut trial_rows = format!("param,value,{}\n", TrialResult::csv_header());
        for &value in &spec.values {
            let cfg = spec.config_at(param, value)?;
            let stats = monte_carlo(&cfg, &spec.schemes, spec.trials, spec.parallelism)?;
            failures += stats.failures.len();
            for s in &stats.per_scheme {
                rows.push_str(&fmt_row(&[
                    param.name().into(),
                    value.to_string(),
                    s.scheme.name().into(),
                    s.mean_ssr.to_string(),
                    s.std_ssr.to_string(),
                    s.q10.to_string(),
                    s.q50.to_string(),
                    s.q90.to_string(),
                    s.mean_ul.to_string(),
                    s.mean_dl.to_string(),
                    s.n.to_string(),
                    s.failures.to_string(),
                ]));
            }
            for t in &stats.trials {
                trial_rows.push_str(&format!(
                    "{},{},{}\n",
                    param.name(),
                    value,
                    t.to_csv_row()
                ));
            }
        }
        let trials_file = write_file(dir, "trials.csv", &trial_rows)?;
        let file = write_file(dir, "sweep.csv", &rows)?;
        return Ok(RunSummary {
            files: vec![file, trials_file],
            failures,
        });
    }
    let file = write_file(dir, "sweep.csv", &rows)?;
    Ok(RunSummary {
        files: vec![file],
        failures,
    })
}

fn run_convergence(spec: &ExperimentSpec, dir: &Path) -> Result<RunSummary> {
    let mut cfg = spec.config.clone();
    cfg.seed = spec.seed;
    let run_all = || -> Vec<std::result::Result<crate::ao::AoOutcome, String>> {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let scenario_seed = derive_seed(cfg.seed, &[t as u64, 0]);
                let scenario = scenario::build(&cfg, scenario_seed).map_err(|e| e.to_string())?;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[t as u64, 1]));
                ao::run(&scenario.gains, &cfg, &AoOptions::default(), &mut rng)
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    let outcomes = if spec.parallelism == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.parallelism)
            .build()
            .map_err(|e| Error::Solver(e.to_string()))?
            .install(run_all)
    };
    let mut ao_rows = String::from(
        "trial,iteration,ssr_after_positions,ssr_after_tx,ssr_after_rx,penalty,max_rank_residual\n",
    );
    let mut swarm_rows = String::from("trial,iteration,gbest_fitness,gbest_penalty\n");
    let mut failures = 0usize;
    for (t, outcome) in outcomes.iter().enumerate() {
        match outcome {
            Ok(out) => {
                for r in &out.trace.records {
                    ao_rows.push_str(&fmt_row(&[
                        t.to_string(),
                        r.iteration.to_string(),
                        r.ssr_after_positions.to_string(),
                        r.ssr_after_tx.to_string(),
                        r.ssr_after_rx.to_string(),
                        r.penalty.to_string(),
                        r.max_rank_residual.to_string(),
                    ]));
                }
                if let Some(trace) = &out.first_swarm_trace {
                    for (q, (f, p)) in trace
                        .gbest_fitness
                        .iter()
                        .zip(&trace.gbest_penalty)
                        .enumerate()
                    {
                        swarm_rows.push_str(&fmt_row(&[
                            t.to_string(),
                            q.to_string(),
                            f.to_string(),
                            p.to_string(),
                        ]));
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    let f1 = write_file(dir, "ao_trace.csv", &ao_rows)?;
    let f2 = write_file(dir, "mvpso_trace.csv", &swarm_rows)?;
    Ok(RunSummary {
        files: vec![f1, f2],
        failures,
    })
}

fn run_gainmap(spec: &ExperimentSpec, dir: &Path) -> Result<RunSummary> {
    // Single-antenna, single-terminal system: the raster shows how one
    // moving antenna reshapes each link.
    let mut cfg = spec.config.clone();
    cfg.num_tx = 1;
    cfg.num_rx = 1;
    cfg.k_u = 1;
    cfg.k_d = 1;
    cfg.k_e = 1;
    cfg.seed = spec.seed;
    cfg.validate()?;
    let scenario = scenario::build(&cfg, derive_seed(cfg.seed, &[0, 0]))?;
    let half = cfg.region_size / 2.0;
    let steps = (cfg.region_size / spec.gainmap_step).round() as usize;
    let axis: Vec<f64> = (0..=steps)
        .map(|i| -half + i as f64 * spec.gainmap_step)
        .collect();
    let mut rows = String::from("link,x,y,gain_db\n");
    let db = |power: f64| 10.0 * power.max(1e-300).log10();
    for link in ["bd", "be", "ub", "si_tx", "si_rx"] {
        for &x in &axis {
            for &y in &axis {
                let (tx, rx) = match link {
                    "bd" | "be" | "si_tx" => (vec![[x, y]], vec![[0.0, 0.0]]),
                    _ => (vec![[0.0, 0.0]], vec![[x, y]]),
                };
                let set = materialize(&AntennaLayout::new(tx, rx), &scenario.gains, cfg.wavelength)?;
                let power = match link {
                    "bd" => set.h_bd[0][0].norm_sqr(),
                    "be" => set.h_be[0][0].norm_sqr(),
                    "ub" => set.h_ub[0][0].norm_sqr(),
                    _ => set.h_si[(0, 0)].norm_sqr(),
                };
                rows.push_str(&fmt_row(&[
                    link.into(),
                    x.to_string(),
                    y.to_string(),
                    db(power).to_string(),
                ]));
            }
        }
    }
    let file = write_file(dir, "gainmap.csv", &rows)?;
    Ok(RunSummary {
        files: vec![file],
        failures: 0,
    })
}

/// Runs an experiment into `dir`, writing its CSV outputs and a manifest.
pub fn run_experiment(spec: &ExperimentSpec, dir: &Path) -> Result<RunSummary> {
    spec.validate()?;
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        tool: "mafd".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        spec: spec.clone(),
    };
    let mut summary = match spec.kind {
        ExperimentKind::Sweep => run_sweep(spec, dir)?,
        ExperimentKind::Convergence => run_convergence(spec, dir)?,
        ExperimentKind::Gainmap => run_gainmap(spec, dir)?,
    };
    let manifest_path = write_file(dir, "manifest.json", &serde_json::to_string_pretty(&manifest)?)?;
    summary.files.push(manifest_path);
    Ok(summary)
}

/// Loads the spec embedded in a manifest.
pub fn spec_from_manifest(path: &Path) -> Result<ExperimentSpec> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(manifest.spec)
}

/// One trial of one scheme, printed by the `run` subcommand.
pub fn run_single(
    cfg: &SystemConfig,
    scheme: SchemeId,
    seed: u64,
) -> Result<(TrialResult, SsrBreakdown)> {
    let scenario = scenario::build(cfg, derive_seed(seed, &[0, 0]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0, 1]));
    run_scheme_detailed(scheme, &scenario, cfg, &mut rng)
}
