//! Alternating optimization: antenna positions, transmit-side covariances
//! and powers, then receive beamformers, cycled until the clamped sum of
//! secrecy rates stops improving.
//!
//! The position step can be driven by the multi-velocity swarm, the standard
//! single-velocity swarm, an exhaustive subset selection over a fixed array,
//! a per-antenna grid sweep, or skipped entirely for fixed arrays. One swarm
//! particle is always seeded with the incumbent layout so the position step
//! never loses ground against it.

use std::time::Instant;

use rand::Rng;

use crate::channel::{materialize, AntennaLayout, ChannelGains, ChannelSet};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::mvpso::{self, SsrEvaluator, SwarmTrace};
use crate::objective::{self, TxSolution};
use crate::receiver;
use crate::sca::{self, ScaPoint, TxOptions};
use crate::{C64, CVec};

/// How the position sub-problem is solved.
#[derive(Debug, Clone)]
pub enum PositionStrategy {
    /// Multi-velocity particle swarm.
    Mvpso,
    /// Standard single-velocity swarm with the decreasing inertia schedule.
    StandardPso,
    /// Layout frozen at the given array.
    Fixed(AntennaLayout),
    /// Exhaustive joint subset selection from fixed element pools.
    Selection {
        pool_tx: Vec<[f64; 2]>,
        pool_rx: Vec<[f64; 2]>,
    },
    /// Per-antenna exhaustive grid sweep with the other antennas held fixed,
    /// cycled until a full sweep yields no improvement.
    Apo { grid_step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverStrategy {
    /// Closed-form interference-whitening receiver.
    Mmse,
    /// Zero-forcing benchmark receiver.
    Zf,
}

#[derive(Debug, Clone)]
pub struct AoOptions {
    pub position: PositionStrategy,
    pub receiver: ReceiverStrategy,
    /// When false the jamming vector is pinned to zero and its budget share
    /// goes to the information beamformers.
    pub enable_an: bool,
    /// Gains used by the position step only; the transmit and receive steps
    /// always see the true gains. Models estimation error in the
    /// field-response information.
    pub position_gains: Option<ChannelGains>,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            position: PositionStrategy::Mvpso,
            receiver: ReceiverStrategy::Mmse,
            enable_an: true,
            position_gains: None,
        }
    }
}

/// Per-iteration record: the clamped secrecy-rate sum after each of the
/// three sub-steps, the spacing penalty of the adopted layout, the worst
/// covariance eigenvalue ratio, and the wall time of the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoRecord {
    pub iteration: usize,
    pub ssr_after_positions: f64,
    pub ssr_after_tx: f64,
    pub ssr_after_rx: f64,
    pub penalty: f64,
    pub max_rank_residual: f64,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct AoTrace {
    pub records: Vec<AoRecord>,
    pub converged: bool,
}

impl AoTrace {
    /// CSV rows without the wall-time column, which is not reproducible.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iteration,ssr_after_positions,ssr_after_tx,ssr_after_rx,penalty,max_rank_residual\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration,
                r.ssr_after_positions,
                r.ssr_after_tx,
                r.ssr_after_rx,
                r.penalty,
                r.max_rank_residual
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct AoOutcome {
    pub layout: AntennaLayout,
    pub solution: TxSolution,
    pub trace: AoTrace,
    /// Swarm trace of the first iteration's position step, when a swarm ran.
    pub first_swarm_trace: Option<SwarmTrace>,
    pub iterations: usize,
}

/// Cell-centered uniform grid of `n` points inside the square region,
/// row-major, as near-square as possible. Errors when the cell pitch would
/// fall below the minimum spacing.
pub fn uniform_grid(n: usize, region_size: f64, min_distance: f64) -> Result<Vec<[f64; 2]>> {
    let nx = (n as f64).sqrt().ceil() as usize;
    let ny = n.div_ceil(nx);
    let sx = region_size / nx as f64;
    let sy = region_size / ny as f64;
    if sx < min_distance || sy < min_distance {
        return Err(Error::Infeasible(format!(
            "{n} antennas cannot be placed on a grid in a {region_size} x {region_size} \
             region at spacing {min_distance}"
        )));
    }
    let mut points = Vec::with_capacity(n);
    'outer: for row in 0..ny {
        for col in 0..nx {
            if points.len() == n {
                break 'outer;
            }
            points.push([
                -region_size / 2.0 + (col as f64 + 0.5) * sx,
                -region_size / 2.0 + (row as f64 + 0.5) * sy,
            ]);
        }
    }
    Ok(points)
}

/// Matched transmit beamformers with the budget split evenly over the user
/// slots plus one jamming slot, full uplink power, and matched receive
/// combining. Satisfies every constraint by construction.
pub fn initial_solution(
    channels: &ChannelSet,
    cfg: &SystemConfig,
    enable_an: bool,
) -> Result<TxSolution> {
    let n_t = channels.num_tx();
    let k_d = channels.k_d();
    let slots = if enable_an { k_d + 1 } else { k_d.max(1) };
    let share = cfg.p_max_dl / slots as f64;
    let w = channels
        .h_bd
        .iter()
        .map(|h| {
            let norm = h.norm();
            if norm > 0.0 {
                h.scale(share.sqrt() / norm)
            } else {
                CVec::from_element(n_t, C64::new((share / n_t as f64).sqrt(), 0.0))
            }
        })
        .collect();
    let v = if enable_an {
        CVec::from_element(n_t, C64::new((share / n_t as f64).sqrt(), 0.0))
    } else {
        CVec::zeros(n_t)
    };
    let b = channels
        .h_ub
        .iter()
        .map(|h| {
            let norm = h.norm();
            if norm > 0.0 {
                Ok(h.unscale(norm))
            } else {
                Err(Error::Solver(
                    "uplink channel is zero at the initial layout".into(),
                ))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TxSolution {
        w,
        v,
        p: vec![cfg.p_max_ul; channels.k_u()],
        b,
    })
}

/// Grid layout plus the matched initial solution.
pub fn initialize(
    gains: &ChannelGains,
    cfg: &SystemConfig,
    enable_an: bool,
) -> Result<(AntennaLayout, TxSolution)> {
    let layout = AntennaLayout::new(
        uniform_grid(cfg.num_tx, cfg.region_size, cfg.min_distance)?,
        uniform_grid(cfg.num_rx, cfg.region_size, cfg.min_distance)?,
    );
    let channels = materialize(&layout, gains, cfg.wavelength)?;
    let solution = initial_solution(&channels, cfg, enable_an)?;
    Ok((layout, solution))
}

struct SolutionEvaluator<'a> {
    gains: &'a ChannelGains,
    solution: &'a TxSolution,
    cfg: &'a SystemConfig,
}

impl SsrEvaluator for SolutionEvaluator<'_> {
    fn ssr(&self, layout: &AntennaLayout) -> Result<f64> {
        let channels = materialize(layout, self.gains, self.cfg.wavelength)?;
        let ctx = objective::build_context(&channels, self.solution, self.cfg)?;
        Ok(objective::ssr(&ctx).total)
    }
}

fn ssr_of(channels: &ChannelSet, solution: &TxSolution, cfg: &SystemConfig) -> Result<f64> {
    Ok(objective::ssr(&objective::build_context(channels, solution, cfg)?).total)
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n || k == 0 {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // Find the rightmost index that can still advance.
        let mut i = k;
        let mut found = false;
        while i > 0 {
            i -= 1;
            if idx[i] != i + n - k {
                found = true;
                break;
            }
        }
        if !found {
            return out;
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Joint exhaustive selection of transmit and receive elements from fixed
/// pools, maximizing the evaluator.
fn selection_step(
    pool_tx: &[[f64; 2]],
    pool_rx: &[[f64; 2]],
    evaluator: &SolutionEvaluator<'_>,
    cfg: &SystemConfig,
) -> Result<AntennaLayout> {
    let combos = binomial(pool_tx.len(), cfg.num_tx)
        .saturating_mul(binomial(pool_rx.len(), cfg.num_rx));
    if combos > 100_000 {
        return Err(Error::Combinatorial(format!(
            "antenna selection would enumerate {combos} subset pairs; \
             reduce the per-side antenna count"
        )));
    }
    let tx_subsets = subsets(pool_tx.len(), cfg.num_tx);
    let rx_subsets = subsets(pool_rx.len(), cfg.num_rx);
    let mut best: Option<(f64, AntennaLayout)> = None;
    for ts in &tx_subsets {
        let tx: Vec<[f64; 2]> = ts.iter().map(|&i| pool_tx[i]).collect();
        for rs in &rx_subsets {
            let rx: Vec<[f64; 2]> = rs.iter().map(|&i| pool_rx[i]).collect();
            let layout = AntennaLayout::new(tx.clone(), rx);
            let score = evaluator.ssr(&layout)?;
            if best.as_ref().map_or(true, |(s, _)| score > *s) {
                best = Some((score, layout));
            }
        }
    }
    best.map(|(_, l)| l)
        .ok_or_else(|| Error::Combinatorial("no subset available".into()))
}

/// Per-antenna exhaustive sweep over a square grid, other antennas fixed,
/// transmit side first, cycled until no single move improves the score.
fn apo_step(
    start: &AntennaLayout,
    grid_step: f64,
    evaluator: &SolutionEvaluator<'_>,
    cfg: &SystemConfig,
) -> Result<AntennaLayout> {
    let half = cfg.region_size / 2.0;
    let steps = (cfg.region_size / grid_step).round() as usize;
    let axis: Vec<f64> = (0..=steps).map(|i| -half + i as f64 * grid_step).collect();
    let mut layout = start.clone();
    let mut current_score = evaluator.ssr(&layout)?;
    let far_enough = |points: &[[f64; 2]], skip: usize, cand: [f64; 2]| -> bool {
        points.iter().enumerate().all(|(j, p)| {
            j == skip || {
                let dx = p[0] - cand[0];
                let dy = p[1] - cand[1];
                (dx * dx + dy * dy).sqrt() >= cfg.min_distance
            }
        })
    };
    for _cycle in 0..20 {
        let mut improved = false;
        for side in 0..2 {
            let count = if side == 0 { layout.tx.len() } else { layout.rx.len() };
            for i in 0..count {
                let mut best_pos = if side == 0 { layout.tx[i] } else { layout.rx[i] };
                let mut best_score = current_score;
                for &x in &axis {
                    for &y in &axis {
                        let cand = [x, y];
                        let ok = if side == 0 {
                            far_enough(&layout.tx, i, cand)
                        } else {
                            far_enough(&layout.rx, i, cand)
                        };
                        if !ok {
                            continue;
                        }
                        let mut trial = layout.clone();
                        if side == 0 {
                            trial.tx[i] = cand;
                        } else {
                            trial.rx[i] = cand;
                        }
                        let score = evaluator.ssr(&trial)?;
                        if score > best_score {
                            best_score = score;
                            best_pos = cand;
                        }
                    }
                }
                if best_score > current_score {
                    if side == 0 {
                        layout.tx[i] = best_pos;
                    } else {
                        layout.rx[i] = best_pos;
                    }
                    current_score = best_score;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(layout)
}

/// Runs the full alternating loop on one channel realization.
pub fn run<R: Rng + ?Sized>(
    gains: &ChannelGains,
    cfg: &SystemConfig,
    opts: &AoOptions,
    rng: &mut R,
) -> Result<AoOutcome> {
    let (mut layout, mut solution) = match &opts.position {
        PositionStrategy::Fixed(fixed) => {
            let channels = materialize(fixed, gains, cfg.wavelength)?;
            (
                fixed.clone(),
                initial_solution(&channels, cfg, opts.enable_an)?,
            )
        }
        _ => initialize(gains, cfg, opts.enable_an)?,
    };
    let position_gains = opts.position_gains.as_ref().unwrap_or(gains);
    let standard_cfg = {
        let mut c = cfg.clone();
        c.swarm = cfg.swarm.to_standard_pso();
        c
    };
    let mut channels = materialize(&layout, gains, cfg.wavelength)?;
    let mut prev_ssr = ssr_of(&channels, &solution, cfg)?;
    let mut trace = AoTrace::default();
    let mut first_swarm_trace = None;
    let mut iterations = 0;

    for c in 1..=cfg.ao.max_iters {
        let t0 = Instant::now();
        iterations = c;
        // Positions with the transmit/receive state frozen.
        match &opts.position {
            PositionStrategy::Mvpso | PositionStrategy::StandardPso => {
                let run_cfg = if matches!(opts.position, PositionStrategy::StandardPso) {
                    &standard_cfg
                } else {
                    cfg
                };
                let evaluator = SolutionEvaluator {
                    gains: position_gains,
                    solution: &solution,
                    cfg: run_cfg,
                };
                let out = mvpso::optimize(&evaluator, run_cfg, &[layout.clone()], rng)?;
                layout = out.layout;
                if c == 1 {
                    first_swarm_trace = Some(out.trace);
                }
            }
            PositionStrategy::Fixed(_) => {}
            PositionStrategy::Selection { pool_tx, pool_rx } => {
                let evaluator = SolutionEvaluator {
                    gains: position_gains,
                    solution: &solution,
                    cfg,
                };
                layout = selection_step(pool_tx, pool_rx, &evaluator, cfg)?;
            }
            PositionStrategy::Apo { grid_step } => {
                let evaluator = SolutionEvaluator {
                    gains: position_gains,
                    solution: &solution,
                    cfg,
                };
                layout = apo_step(&layout, *grid_step, &evaluator, cfg)?;
            }
        }
        channels = materialize(&layout, gains, cfg.wavelength)?;
        let ssr_after_positions = ssr_of(&channels, &solution, cfg)?;

        // Transmit covariances, jamming and uplink powers.
        let warm = ScaPoint::from_solution(&solution.w, &solution.v, &solution.p);
        let tx_out = sca::optimize_tx(
            &channels,
            &solution.b,
            warm,
            cfg,
            TxOptions {
                enable_an: opts.enable_an,
            },
        )?;
        let max_rank_residual = tx_out.rank_residuals.iter().copied().fold(0.0, f64::max);
        solution.w = tx_out.w;
        solution.v = tx_out.v;
        solution.p = tx_out.p;
        let ssr_after_tx = ssr_of(&channels, &solution, cfg)?;

        // Receive beamformers.
        for k in 0..channels.k_u() {
            solution.b[k] = match opts.receiver {
                ReceiverStrategy::Mmse => receiver::optimal_receiver(
                    &channels,
                    &solution.w,
                    &solution.v,
                    &solution.p,
                    k,
                    cfg,
                )?,
                ReceiverStrategy::Zf => receiver::zf_receiver(&channels, k, cfg)?,
            };
        }
        let ssr_after_rx = ssr_of(&channels, &solution, cfg)?;

        trace.records.push(AoRecord {
            iteration: c,
            ssr_after_positions,
            ssr_after_tx,
            ssr_after_rx,
            penalty: mvpso::penalty(&layout.to_flat(), cfg),
            max_rank_residual,
            wall_secs: t0.elapsed().as_secs_f64(),
        });
        let improvement = ssr_after_rx - prev_ssr;
        prev_ssr = ssr_after_rx;
        if improvement < cfg.ao.epsilon {
            trace.converged = true;
            break;
        }
    }
    Ok(AoOutcome {
        layout,
        solution,
        trace,
        first_swarm_trace,
        iterations,
    })
}
