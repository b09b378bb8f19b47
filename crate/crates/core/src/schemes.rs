//! The comparison schemes of the benchmark harness.
//!
//! Every scheme is a documented configuration of the alternating pipeline:
//! fixed uniform arrays, antenna selection over a doubled array, random
//! placement, per-antenna grid search, the standard swarm, zero-forcing
//! reception, no jamming, and a time-division half-duplex split.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ao::{self, AoOptions, PositionStrategy, ReceiverStrategy};
use crate::channel::{materialize, AntennaLayout, ChannelGains};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::objective::{self, SsrBreakdown, TxSolution};
use crate::receiver;
use crate::sca::{self, ScaPoint, TxOptions};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeId {
    /// Full pipeline with the multi-velocity swarm.
    Proposed,
    /// Fixed uniform planar arrays spanning the same aperture.
    Fpa,
    /// Antenna selection from doubled uniform arrays.
    As,
    /// Best of 100 random feasible layout pairs.
    Rp,
    /// Per-antenna exhaustive grid search.
    Apo,
    /// Standard single-velocity swarm.
    Pso,
    /// Zero-forcing receive beamformer.
    Zf,
    /// No jamming signal; the full budget goes to the users.
    NoAn,
    /// Time-division half-duplex operation.
    Hd,
}

impl SchemeId {
    pub const ALL: [SchemeId; 9] = [
        SchemeId::Proposed,
        SchemeId::Fpa,
        SchemeId::As,
        SchemeId::Rp,
        SchemeId::Apo,
        SchemeId::Pso,
        SchemeId::Zf,
        SchemeId::NoAn,
        SchemeId::Hd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::Fpa => "fpa",
            SchemeId::As => "as",
            SchemeId::Rp => "rp",
            SchemeId::Apo => "apo",
            SchemeId::Pso => "pso",
            SchemeId::Zf => "zf",
            SchemeId::NoAn => "noan",
            SchemeId::Hd => "hd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s.to_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme '{s}' (expected one of {})",
                    Self::ALL.map(|i| i.name()).join(", ")
                ))
            })
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one scheme on one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub scheme: SchemeId,
    pub seed: u64,
    pub ssr: f64,
    pub ul_secrecy: f64,
    pub dl_secrecy: f64,
    pub iterations: usize,
    pub wall_secs: f64,
}

impl TrialResult {
    /// Header for per-trial CSV rows. Wall time is excluded so files stay
    /// byte-identical across reruns.
    pub fn csv_header() -> &'static str {
        "scheme,seed,ssr,ul_secrecy,dl_secrecy,iterations"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.scheme.name(),
            self.seed,
            self.ssr,
            self.ul_secrecy,
            self.dl_secrecy,
            self.iterations
        )
    }
}

/// Uniform planar array spanning the full aperture `[-A/2, A/2]^2`,
/// near-square, row-major, truncated to `n` elements.
pub fn aperture_grid(n: usize, region_size: f64, min_distance: f64) -> Result<Vec<[f64; 2]>> {
    if n == 1 {
        return Ok(vec![[0.0, 0.0]]);
    }
    let nx = (n as f64).sqrt().ceil() as usize;
    let ny = n.div_ceil(nx);
    let pitch = |count: usize| -> f64 {
        if count > 1 {
            region_size / (count - 1) as f64
        } else {
            f64::INFINITY
        }
    };
    if pitch(nx) < min_distance || pitch(ny) < min_distance {
        return Err(Error::Infeasible(format!(
            "a {n}-element array cannot span a {region_size}-wide aperture at spacing \
             {min_distance}"
        )));
    }
    let coord = |i: usize, count: usize| -> f64 {
        if count > 1 {
            -region_size / 2.0 + i as f64 * region_size / (count - 1) as f64
        } else {
            0.0
        }
    };
    let mut points = Vec::with_capacity(n);
    'outer: for row in 0..ny {
        for col in 0..nx {
            if points.len() == n {
                break 'outer;
            }
            points.push([coord(col, nx), coord(row, ny)]);
        }
    }
    Ok(points)
}

fn breakdown_at(
    gains: &ChannelGains,
    layout: &AntennaLayout,
    solution: &TxSolution,
    cfg: &SystemConfig,
) -> Result<SsrBreakdown> {
    let channels = materialize(layout, gains, cfg.wavelength)?;
    Ok(objective::ssr(&objective::build_context(
        &channels, solution, cfg,
    )?))
}

fn ao_trial<R: Rng + ?Sized>(
    scheme: SchemeId,
    scenario: &Scenario,
    cfg: &SystemConfig,
    opts: &AoOptions,
    rng: &mut R,
) -> Result<(TrialResult, SsrBreakdown)> {
    let t0 = Instant::now();
    let out = ao::run(&scenario.gains, cfg, opts, rng)?;
    let breakdown = breakdown_at(&scenario.gains, &out.layout, &out.solution, cfg)?;
    let trial = TrialResult {
        scheme,
        seed: scenario.seed,
        ssr: breakdown.total,
        ul_secrecy: breakdown.ul_sum(),
        dl_secrecy: breakdown.dl_sum(),
        iterations: out.iterations,
        wall_secs: t0.elapsed().as_secs_f64(),
    };
    Ok((trial, breakdown))
}

/// Rejection-samples a layout satisfying the box and spacing constraints.
pub fn random_feasible_layout<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<AntennaLayout> {
    let half = cfg.region_size / 2.0;
    for _ in 0..10_000 {
        let draw = |rng: &mut R, n: usize| -> Vec<[f64; 2]> {
            (0..n)
                .map(|_| {
                    [
                        rng.random_range(-half..=half),
                        rng.random_range(-half..=half),
                    ]
                })
                .collect()
        };
        let layout = AntennaLayout::new(draw(rng, cfg.num_tx), draw(rng, cfg.num_rx));
        if layout.is_feasible(cfg) {
            return Ok(layout);
        }
    }
    Err(Error::Infeasible(
        "could not sample a feasible layout; the region is too crowded".into(),
    ))
}

/// One transmit-side solve plus one receive update at a fixed layout.
fn solve_tx_rx_once(
    gains: &ChannelGains,
    layout: &AntennaLayout,
    cfg: &SystemConfig,
) -> Result<(TxSolution, f64)> {
    let channels = materialize(layout, gains, cfg.wavelength)?;
    let mut solution = ao::initial_solution(&channels, cfg, true)?;
    let warm = ScaPoint::from_solution(&solution.w, &solution.v, &solution.p);
    let out = sca::optimize_tx(&channels, &solution.b, warm, cfg, TxOptions::default())?;
    solution.w = out.w;
    solution.v = out.v;
    solution.p = out.p;
    for k in 0..channels.k_u() {
        solution.b[k] =
            receiver::optimal_receiver(&channels, &solution.w, &solution.v, &solution.p, k, cfg)?;
    }
    let ssr = objective::ssr(&objective::build_context(&channels, &solution, cfg)?).total;
    Ok((solution, ssr))
}

fn rp_trial<R: Rng + ?Sized>(
    scenario: &Scenario,
    cfg: &SystemConfig,
    pairs: usize,
    rng: &mut R,
) -> Result<(TrialResult, SsrBreakdown)> {
    let t0 = Instant::now();
    let mut best: Option<(f64, AntennaLayout, TxSolution)> = None;
    for _ in 0..pairs {
        let layout = random_feasible_layout(cfg, rng)?;
        let (solution, ssr) = solve_tx_rx_once(&scenario.gains, &layout, cfg)?;
        if best.as_ref().map_or(true, |(s, _, _)| ssr > *s) {
            best = Some((ssr, layout, solution));
        }
    }
    let (_, layout, solution) = best.expect("at least one pair");
    let breakdown = breakdown_at(&scenario.gains, &layout, &solution, cfg)?;
    let trial = TrialResult {
        scheme: SchemeId::Rp,
        seed: scenario.seed,
        ssr: breakdown.total,
        ul_secrecy: breakdown.ul_sum(),
        dl_secrecy: breakdown.dl_sum(),
        iterations: pairs,
        wall_secs: t0.elapsed().as_secs_f64(),
    };
    Ok((trial, breakdown))
}

/// Uplink-only phase: no downlink users, a silent transmitter (no jamming
/// possible while receiving), and no residual self-interference.
fn uplink_phase(scenario: &Scenario, cfg: &SystemConfig) -> (ChannelGains, SystemConfig) {
    let mut phase_cfg = cfg.clone();
    phase_cfg.k_d = 0;
    phase_cfg.si_loss = 0.0;
    let mut gains = scenario.gains.clone();
    gains.bd.clear();
    gains.h_ud = vec![vec![]; cfg.k_u];
    (gains, phase_cfg)
}

/// Downlink-only phase: no uplink users, hence no co-channel interference
/// and nothing for the eavesdroppers to intercept on the uplink.
fn downlink_phase(scenario: &Scenario, cfg: &SystemConfig) -> (ChannelGains, SystemConfig) {
    let mut phase_cfg = cfg.clone();
    phase_cfg.k_u = 0;
    let mut gains = scenario.gains.clone();
    gains.ub.clear();
    gains.h_ud = vec![];
    gains.h_ue = vec![];
    (gains, phase_cfg)
}

fn hd_trial<R: Rng + ?Sized>(
    scenario: &Scenario,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<(TrialResult, SsrBreakdown)> {
    let t0 = Instant::now();
    let mut iterations = 0;
    let halve = |list: &[crate::objective::UserSecrecy]| -> Vec<crate::objective::UserSecrecy> {
        list.iter()
            .map(|u| crate::objective::UserSecrecy {
                rate: 0.5 * u.rate,
                eve_rate: 0.5 * u.eve_rate,
                secrecy: 0.5 * u.secrecy,
            })
            .collect()
    };
    let mut ul = Vec::new();
    let mut dl = Vec::new();
    if cfg.k_u > 0 {
        let (gains, phase_cfg) = uplink_phase(scenario, cfg);
        let opts = AoOptions {
            enable_an: false,
            ..Default::default()
        };
        let out = ao::run(&gains, &phase_cfg, &opts, rng)?;
        let breakdown = breakdown_at(&gains, &out.layout, &out.solution, &phase_cfg)?;
        ul = halve(&breakdown.ul);
        iterations += out.iterations;
    }
    if cfg.k_d > 0 {
        let (gains, phase_cfg) = downlink_phase(scenario, cfg);
        let out = ao::run(&gains, &phase_cfg, &AoOptions::default(), rng)?;
        let breakdown = breakdown_at(&gains, &out.layout, &out.solution, &phase_cfg)?;
        dl = halve(&breakdown.dl);
        iterations += out.iterations;
    }
    let total = ul.iter().chain(dl.iter()).map(|u| u.secrecy).sum();
    let breakdown = SsrBreakdown { ul, dl, total };
    let trial = TrialResult {
        scheme: SchemeId::Hd,
        seed: scenario.seed,
        ssr: breakdown.total,
        ul_secrecy: breakdown.ul_sum(),
        dl_secrecy: breakdown.dl_sum(),
        iterations,
        wall_secs: t0.elapsed().as_secs_f64(),
    };
    Ok((trial, breakdown))
}

/// Number of random layout pairs explored by the random-placement scheme.
pub const RP_PAIRS: usize = 100;

/// Runs one scheme on a scenario with its own random stream.
pub fn run_scheme<R: Rng + ?Sized>(
    scheme: SchemeId,
    scenario: &Scenario,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<TrialResult> {
    run_scheme_detailed(scheme, scenario, cfg, rng).map(|(trial, _)| trial)
}

/// Like [`run_scheme`] but also returns the final per-user rate breakdown.
pub fn run_scheme_detailed<R: Rng + ?Sized>(
    scheme: SchemeId,
    scenario: &Scenario,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<(TrialResult, SsrBreakdown)> {
    match scheme {
        SchemeId::Proposed => ao_trial(scheme, scenario, cfg, &AoOptions::default(), rng),
        SchemeId::Pso => ao_trial(
            scheme,
            scenario,
            cfg,
            &AoOptions {
                position: PositionStrategy::StandardPso,
                ..Default::default()
            },
            rng,
        ),
        SchemeId::Fpa => {
            let layout = AntennaLayout::new(
                aperture_grid(cfg.num_tx, cfg.region_size, cfg.min_distance)?,
                aperture_grid(cfg.num_rx, cfg.region_size, cfg.min_distance)?,
            );
            ao_trial(
                scheme,
                scenario,
                cfg,
                &AoOptions {
                    position: PositionStrategy::Fixed(layout),
                    ..Default::default()
                },
                rng,
            )
        }
        SchemeId::As => {
            let pool_tx = aperture_grid(2 * cfg.num_tx, cfg.region_size, cfg.min_distance)?;
            let pool_rx = aperture_grid(2 * cfg.num_rx, cfg.region_size, cfg.min_distance)?;
            ao_trial(
                scheme,
                scenario,
                cfg,
                &AoOptions {
                    position: PositionStrategy::Selection { pool_tx, pool_rx },
                    ..Default::default()
                },
                rng,
            )
        }
        SchemeId::Apo => ao_trial(
            scheme,
            scenario,
            cfg,
            &AoOptions {
                position: PositionStrategy::Apo {
                    grid_step: cfg.wavelength / 10.0,
                },
                ..Default::default()
            },
            rng,
        ),
        SchemeId::Zf => ao_trial(
            scheme,
            scenario,
            cfg,
            &AoOptions {
                receiver: ReceiverStrategy::Zf,
                ..Default::default()
            },
            rng,
        ),
        SchemeId::NoAn => ao_trial(
            scheme,
            scenario,
            cfg,
            &AoOptions {
                enable_an: false,
                ..Default::default()
            },
            rng,
        ),
        SchemeId::Rp => rp_trial(scenario, cfg, RP_PAIRS, rng),
        SchemeId::Hd => hd_trial(scenario, cfg, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quick_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::desk();
        cfg.num_tx = 2;
        cfg.num_rx = 2;
        cfg.k_u = 1;
        cfg.k_d = 1;
        cfg.k_e = 1;
        cfg.num_paths = 3;
        cfg.swarm = crate::config::SwarmParams::mvpso_defaults(8, 6);
        cfg.sca = crate::config::ScaParams::defaults(8);
        cfg.ao.max_iters = 4;
        cfg
    }

    #[test]
    fn aperture_grid_examples() {
        let g = aperture_grid(4, 4.0, 0.5).unwrap();
        assert_eq!(g.len(), 4);
        // Corners of the aperture.
        assert!(g.contains(&[-2.0, -2.0]) && g.contains(&[2.0, 2.0]));
        assert_eq!(aperture_grid(1, 4.0, 0.5).unwrap(), vec![[0.0, 0.0]]);
        let g8 = aperture_grid(8, 4.0, 0.5).unwrap();
        assert_eq!(g8.len(), 8);
        assert!(AntennaLayout::min_spacing(&g8) >= 0.5);
        // A boundary-spanning array denser than the spacing allows.
        assert!(aperture_grid(100, 4.0, 0.5).is_err());
    }

    #[test]
    fn scheme_names_roundtrip() {
        for id in SchemeId::ALL {
            assert_eq!(SchemeId::parse(id.name()).unwrap(), id);
        }
        assert!(SchemeId::parse("bogus").is_err());
    }

    #[test]
    fn single_random_pair_is_a_plain_evaluation() {
        let cfg = quick_cfg();
        let scenario = scenario::build(&cfg, 77).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (trial, _) = rp_trial(&scenario, &cfg, 1, &mut rng).unwrap();
        // Reproduce the single draw with an identical stream.
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let layout = random_feasible_layout(&cfg, &mut rng2).unwrap();
        let (_, ssr) = solve_tx_rx_once(&scenario.gains, &layout, &cfg).unwrap();
        approx::assert_relative_eq!(trial.ssr, ssr, max_relative = 1e-12);
    }

    #[test]
    fn standard_swarm_scheme_equals_proposed_with_mirrored_config() {
        let cfg = quick_cfg();
        let scenario = scenario::build(&cfg, 11).unwrap();
        let mut rng_a = ChaCha8Rng::seed_from_u64(21);
        let pso = run_scheme(SchemeId::Pso, &scenario, &cfg, &mut rng_a).unwrap();
        // The proposed scheme with the swarm restricted to one candidate and
        // the scheduled inertia is the same algorithm.
        let mut mirrored = cfg.clone();
        mirrored.swarm = cfg.swarm.to_standard_pso();
        let mut rng_b = ChaCha8Rng::seed_from_u64(21);
        let reduced = run_scheme(SchemeId::Proposed, &scenario, &mirrored, &mut rng_b).unwrap();
        assert_eq!(pso.ssr, reduced.ssr);
        assert_eq!(pso.iterations, reduced.iterations);
    }

    #[test]
    fn no_jamming_scheme_transmits_no_jamming() {
        let cfg = quick_cfg();
        let scenario = scenario::build(&cfg, 13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let opts = AoOptions {
            enable_an: false,
            ..Default::default()
        };
        let out = ao::run(&scenario.gains, &cfg, &opts, &mut rng).unwrap();
        assert_eq!(out.solution.v.norm(), 0.0);
        out.solution.validate(&cfg, 1e-6).unwrap();
    }

    #[test]
    fn half_duplex_phases_have_no_cross_interference() {
        let cfg = quick_cfg();
        let scenario = scenario::build(&cfg, 17).unwrap();
        let (ul_gains, ul_cfg) = uplink_phase(&scenario, &cfg);
        assert!(ul_gains.bd.is_empty());
        assert_eq!(ul_cfg.si_loss, 0.0);
        assert!(ul_gains.h_ud.iter().all(|row| row.is_empty()));
        // The eavesdroppers still hear the uplink users.
        assert!(!ul_gains.h_ue.is_empty());
        let (dl_gains, dl_cfg) = downlink_phase(&scenario, &cfg);
        assert!(dl_gains.ub.is_empty());
        assert!(dl_gains.h_ud.is_empty());
        assert!(dl_gains.h_ue.is_empty());
        assert_eq!(dl_cfg.k_u, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (trial, _) = hd_trial(&scenario, &cfg, &mut rng).unwrap();
        assert!(trial.ssr >= 0.0);
    }

    #[test]
    fn every_scheme_produces_a_feasible_result() {
        let cfg = quick_cfg();
        let scenario = scenario::build(&cfg, 23).unwrap();
        for (i, scheme) in SchemeId::ALL.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let trial = run_scheme(*scheme, &scenario, &cfg, &mut rng).unwrap();
            assert!(trial.ssr >= 0.0, "{scheme}: negative secrecy sum");
            assert!(trial.ssr.is_finite());
        }
    }
}
