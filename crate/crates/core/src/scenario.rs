//! Randomized system instances and the Monte-Carlo driver.
//!
//! Terminals are dropped area-uniformly in a disk around the base station;
//! channel realizations follow the geometry model. Every trial derives its
//! own random stream from the master seed and the trial index, so results
//! are independent of the degree of parallelism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_geometry_channels, ChannelGains, TerminalDistances};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::schemes::{run_scheme, SchemeId, TrialResult};

/// One concrete system instance: terminal drops and a channel realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    /// Terminal positions in meters, base station at the origin.
    pub ul_positions: Vec<[f64; 2]>,
    pub dl_positions: Vec<[f64; 2]>,
    pub eve_positions: Vec<[f64; 2]>,
    pub distances: TerminalDistances,
    pub gains: ChannelGains,
}

/// SplitMix64-style combination of a master seed with stream identifiers.
pub fn derive_seed(master: u64, ids: &[u64]) -> u64 {
    let mut z = master;
    for &id in ids {
        z = z.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(id);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
    }
    z
}

fn disk_point<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> [f64; 2] {
    let r = radius * rng.random_range(0.0..=1.0f64).sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    [r * theta.cos(), r * theta.sin()]
}

fn norm(p: [f64; 2]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    norm([a[0] - b[0], a[1] - b[1]])
}

/// Builds a scenario deterministically from `(config, seed)`.
pub fn build(cfg: &SystemConfig, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ul_positions: Vec<_> = (0..cfg.k_u)
        .map(|_| disk_point(cfg.cell_radius, &mut rng))
        .collect();
    let dl_positions: Vec<_> = (0..cfg.k_d)
        .map(|_| disk_point(cfg.cell_radius, &mut rng))
        .collect();
    let eve_positions: Vec<_> = (0..cfg.k_e)
        .map(|_| disk_point(cfg.cell_radius, &mut rng))
        .collect();
    let distances = TerminalDistances {
        ul: ul_positions.iter().map(|&p| norm(p)).collect(),
        dl: dl_positions.iter().map(|&p| norm(p)).collect(),
        eve: eve_positions.iter().map(|&p| norm(p)).collect(),
        ud: ul_positions
            .iter()
            .map(|&u| dl_positions.iter().map(|&d| dist(u, d)).collect())
            .collect(),
        ue: ul_positions
            .iter()
            .map(|&u| eve_positions.iter().map(|&e| dist(u, e)).collect())
            .collect(),
    };
    let gains = sample_geometry_channels(cfg, &distances, &mut rng)?;
    Ok(Scenario {
        seed,
        ul_positions,
        dl_positions,
        eve_positions,
        distances,
        gains,
    })
}

/// Aggregates for one scheme across trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeStats {
    pub scheme: SchemeId,
    pub mean_ssr: f64,
    pub std_ssr: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub mean_ul: f64,
    pub mean_dl: f64,
    pub n: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MonteCarloStats {
    pub per_scheme: Vec<SchemeStats>,
    pub trials: Vec<TrialResult>,
    pub failures: Vec<(SchemeId, u64, String)>,
}

impl MonteCarloStats {
    pub fn stats_for(&self, scheme: SchemeId) -> Option<&SchemeStats> {
        self.per_scheme.iter().find(|s| s.scheme == scheme)
    }
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[idx - 1]
}

/// Runs every scheme on every seeded scenario and aggregates. Scenarios are
/// shared across schemes within a trial (paired comparison). The result is
/// independent of `parallelism`; trial failures are recorded and excluded
/// from the aggregates.
pub fn monte_carlo(
    cfg: &SystemConfig,
    schemes: &[SchemeId],
    n_trials: usize,
    parallelism: usize,
) -> Result<MonteCarloStats> {
    cfg.validate()?;
    let run_all = || -> Vec<(usize, Vec<std::result::Result<TrialResult, String>>)> {
        (0..n_trials)
            .into_par_iter()
            .map(|t| {
                let scenario_seed = derive_seed(cfg.seed, &[t as u64, 0]);
                let scenario = match build(cfg, scenario_seed) {
                    Ok(s) => s,
                    Err(e) => {
                        return (
                            t,
                            schemes.iter().map(|_| Err(e.to_string())).collect(),
                        )
                    }
                };
                let results = schemes
                    .iter()
                    .enumerate()
                    .map(|(si, &scheme)| {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                            cfg.seed,
                            &[t as u64, 1 + si as u64],
                        ));
                        run_scheme(scheme, &scenario, cfg, &mut rng).map_err(|e| e.to_string())
                    })
                    .collect();
                (t, results)
            })
            .collect()
    };
    let mut by_trial = if parallelism == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| crate::error::Error::Solver(e.to_string()))?
            .install(run_all)
    };
    by_trial.sort_by_key(|(t, _)| *t);

    let mut stats = MonteCarloStats::default();
    for (si, &scheme) in schemes.iter().enumerate() {
        let mut values = Vec::new();
        let mut ul = Vec::new();
        let mut dl = Vec::new();
        let mut failures = 0usize;
        for (t, results) in &by_trial {
            match &results[si] {
                Ok(r) => {
                    values.push(r.ssr);
                    ul.push(r.ul_secrecy);
                    dl.push(r.dl_secrecy);
                    stats.trials.push(r.clone());
                }
                Err(e) => {
                    failures += 1;
                    stats
                        .failures
                        .push((scheme, derive_seed(cfg.seed, &[*t as u64, 0]), e.clone()));
                }
            }
        }
        let n = values.len();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
        let m = mean(&values);
        let var = if n > 1 {
            values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        stats.per_scheme.push(SchemeStats {
            scheme,
            mean_ssr: m,
            std_ssr: var.sqrt(),
            q10: nearest_rank(&sorted, 0.1),
            q50: nearest_rank(&sorted, 0.5),
            q90: nearest_rank(&sorted, 0.9),
            mean_ul: mean(&ul),
            mean_dl: mean(&dl),
            n,
            failures,
        });
    }
    Ok(stats)
}
