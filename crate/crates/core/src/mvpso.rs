//! Particle swarm over the flattened antenna-position vector.
//!
//! Each particle carries one candidate layout for all transmit and receive
//! antennas at once. Spacing violations are handled by a counting penalty
//! large enough that any violating layout scores below any feasible one. The
//! multi-velocity variant builds several velocity components with different
//! inertia weights per step, combines them into candidate velocities, and
//! adopts the candidate with the best fitness; the standard single-velocity
//! swarm is the one-candidate special case with a decreasing inertia
//! schedule.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::AntennaLayout;
use crate::config::{InertiaMode, SystemConfig};
use crate::error::{Error, Result};

/// Clamped secrecy-rate evaluator for a candidate layout. Implementations
/// rematerialize the position-dependent channels at the layout under the
/// currently fixed transmit-side solution.
pub trait SsrEvaluator: Sync {
    fn ssr(&self, layout: &AntennaLayout) -> Result<f64>;
}

impl<F> SsrEvaluator for F
where
    F: Fn(&AntennaLayout) -> Result<f64> + Sync,
{
    fn ssr(&self, layout: &AntennaLayout) -> Result<f64> {
        self(layout)
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
    pub pbest_position: DVector<f64>,
    pub pbest_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_position: DVector<f64>,
    pub gbest_fitness: f64,
    pub iteration: usize,
}

/// Per-iteration global-best traces, including the initial state at index 0.
#[derive(Debug, Clone, Default)]
pub struct SwarmTrace {
    pub gbest_fitness: Vec<f64>,
    pub gbest_penalty: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MvpsoOutcome {
    pub layout: AntennaLayout,
    pub fitness: f64,
    pub state: SwarmState,
    pub trace: SwarmTrace,
}

/// Spacing penalty: the number of transmit pairs closer than the minimum
/// distance times `tau_t`, plus the receive-side count times `tau_r`.
pub fn penalty(u: &DVector<f64>, cfg: &SystemConfig) -> f64 {
    let count = |offset: usize, n: usize| -> f64 {
        let mut violations = 0u32;
        for a in 0..n {
            for b in (a + 1)..n {
                let dx = u[offset + 2 * a] - u[offset + 2 * b];
                let dy = u[offset + 2 * a + 1] - u[offset + 2 * b + 1];
                if (dx * dx + dy * dy).sqrt() < cfg.min_distance {
                    violations += 1;
                }
            }
        }
        violations as f64
    };
    cfg.swarm.tau_t * count(0, cfg.num_tx) + cfg.swarm.tau_r * count(2 * cfg.num_tx, cfg.num_rx)
}

/// Entrywise clamp to the moving-region box.
pub fn project(mut u: DVector<f64>, cfg: &SystemConfig) -> DVector<f64> {
    let half = cfg.region_size / 2.0;
    for x in u.iter_mut() {
        *x = x.clamp(-half, half);
    }
    u
}

/// Linearly decreasing inertia weight used by the single-velocity swarm.
pub fn inertia_schedule(q: usize, q_max: usize, w_max: f64, w_min: f64) -> Result<f64> {
    if q_max == 0 {
        return Err(Error::Config("inertia schedule needs Q >= 1".into()));
    }
    Ok(w_max - (w_max - w_min) * q as f64 / q_max as f64)
}

/// Fitness: clamped secrecy rate minus the spacing penalty.
pub fn fitness(
    u: &DVector<f64>,
    evaluator: &dyn SsrEvaluator,
    cfg: &SystemConfig,
) -> Result<f64> {
    fitness_parts(u, evaluator, cfg).map(|(fit, _, _)| fit)
}

fn fitness_parts(
    u: &DVector<f64>,
    evaluator: &dyn SsrEvaluator,
    cfg: &SystemConfig,
) -> Result<(f64, f64, f64)> {
    let layout = AntennaLayout::from_flat(u.as_slice(), cfg.num_tx, cfg.num_rx)?;
    let ssr = evaluator.ssr(&layout)?;
    let pen = penalty(u, cfg);
    Ok((ssr - pen, ssr, pen))
}

/// The velocity components for one particle: one column per inertia weight,
/// sharing a single pair of random attraction vectors.
pub fn velocity_components(
    particle: &Particle,
    gbest: &DVector<f64>,
    cfg: &SystemConfig,
    iteration: usize,
    e1: &DVector<f64>,
    e2: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    let pull = e1.component_mul(&(&particle.pbest_position - &particle.position))
        * cfg.swarm.c1
        + e2.component_mul(&(gbest - &particle.position)) * cfg.swarm.c2;
    (0..cfg.swarm.num_components)
        .map(|j| {
            let w = match cfg.swarm.inertia_mode {
                InertiaMode::PerComponent => cfg.swarm.component_inertias[j],
                InertiaMode::Scheduled => inertia_schedule(
                    iteration,
                    cfg.swarm.max_iters,
                    cfg.swarm.inertia_max,
                    cfg.swarm.inertia_min,
                )?,
            };
            Ok(&particle.velocity * w + &pull)
        })
        .collect()
}

/// Candidate velocities as weighted combinations of the components.
pub fn candidate_velocities(
    components: &[DVector<f64>],
    weights: &[Vec<f64>],
) -> Result<Vec<DVector<f64>>> {
    let dim = components
        .first()
        .map(|c| c.len())
        .ok_or_else(|| Error::Config("no velocity components".into()))?;
    weights
        .iter()
        .map(|c| {
            if c.len() != components.len() {
                return Err(Error::Dimension {
                    what: "combination weights",
                    expected: components.len(),
                    got: c.len(),
                });
            }
            let mut z = DVector::zeros(dim);
            for (wj, comp) in c.iter().zip(components) {
                z += comp * *wj;
            }
            Ok(z)
        })
        .collect()
}

struct ParticleUpdate {
    position: DVector<f64>,
    velocity: DVector<f64>,
    fitness: f64,
    max_ssr: f64,
}

fn best_candidate(
    particle: &Particle,
    gbest: &DVector<f64>,
    cfg: &SystemConfig,
    iteration: usize,
    e1: &DVector<f64>,
    e2: &DVector<f64>,
    evaluator: &dyn SsrEvaluator,
) -> Result<ParticleUpdate> {
    let components = velocity_components(particle, gbest, cfg, iteration, e1, e2)?;
    let candidates = candidate_velocities(&components, &cfg.swarm.combination_weights)?;
    let mut best: Option<ParticleUpdate> = None;
    let mut max_ssr = f64::NEG_INFINITY;
    for z in candidates {
        let pos = project(&particle.position + &z, cfg);
        let (fit, ssr, _) = fitness_parts(&pos, evaluator, cfg)?;
        max_ssr = max_ssr.max(ssr);
        // Ties keep the earliest candidate.
        if best.as_ref().map_or(true, |b| fit > b.fitness) {
            best = Some(ParticleUpdate {
                position: pos,
                velocity: z,
                fitness: fit,
                max_ssr: 0.0,
            });
        }
    }
    let mut best = best.expect("at least one candidate");
    best.max_ssr = max_ssr;
    Ok(best)
}

fn draw_pair<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> (DVector<f64>, DVector<f64>) {
    let e1 = DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(0.0..=1.0)));
    let e2 = DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(0.0..=1.0)));
    (e1, e2)
}

/// One swarm iteration. Returns the largest raw secrecy rate observed among
/// the evaluated candidates so the caller can verify the penalty scale.
pub fn swarm_step<R: Rng + ?Sized>(
    state: &mut SwarmState,
    evaluator: &dyn SsrEvaluator,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<f64> {
    let q = state.iteration + 1;
    let dim = cfg.position_dim();
    let mut max_ssr = f64::NEG_INFINITY;
    if cfg.swarm.parallel_eval {
        // Candidates are scored against a global best frozen at the start of
        // the iteration; the best-position reduction happens afterwards.
        let pairs: Vec<_> = (0..state.particles.len())
            .map(|_| draw_pair(dim, rng))
            .collect();
        let gbest = state.gbest_position.clone();
        let updates = state
            .particles
            .par_iter()
            .zip(pairs.par_iter())
            .map(|(particle, (e1, e2))| {
                best_candidate(particle, &gbest, cfg, q, e1, e2, evaluator)
            })
            .collect::<Result<Vec<_>>>()?;
        for (particle, update) in state.particles.iter_mut().zip(updates) {
            max_ssr = max_ssr.max(update.max_ssr);
            particle.position = update.position;
            particle.velocity = update.velocity;
            if update.fitness > particle.pbest_fitness {
                particle.pbest_fitness = update.fitness;
                particle.pbest_position = particle.position.clone();
            }
            if update.fitness > state.gbest_fitness {
                state.gbest_fitness = update.fitness;
                state.gbest_position = particle.position.clone();
            }
        }
    } else {
        // In-loop updates: later particles see earlier improvements.
        for idx in 0..state.particles.len() {
            let (e1, e2) = draw_pair(dim, rng);
            let update = best_candidate(
                &state.particles[idx],
                &state.gbest_position,
                cfg,
                q,
                &e1,
                &e2,
                evaluator,
            )?;
            max_ssr = max_ssr.max(update.max_ssr);
            let particle = &mut state.particles[idx];
            particle.position = update.position;
            particle.velocity = update.velocity;
            if update.fitness > particle.pbest_fitness {
                particle.pbest_fitness = update.fitness;
                particle.pbest_position = particle.position.clone();
            }
            if update.fitness > state.gbest_fitness {
                state.gbest_fitness = update.fitness;
                state.gbest_position = particle.position.clone();
            }
        }
    }
    state.iteration = q;
    Ok(max_ssr)
}

fn check_penalty_scale(max_ssr: f64, cfg: &SystemConfig) -> Result<()> {
    if max_ssr >= cfg.tau_sum() {
        return Err(Error::PenaltyScale {
            max_ssr,
            tau_sum: cfg.tau_sum(),
        });
    }
    Ok(())
}

/// Runs the swarm for the configured number of iterations.
///
/// Initial positions are uniform over the moving-region box; the first
/// `seed_layouts.len()` particles are then overwritten with the given
/// layouts (the stream of random draws is unaffected). Initial velocities
/// are zero unless `random_init_velocity` is set.
pub fn optimize<R: Rng + ?Sized>(
    evaluator: &dyn SsrEvaluator,
    cfg: &SystemConfig,
    seed_layouts: &[AntennaLayout],
    rng: &mut R,
) -> Result<MvpsoOutcome> {
    cfg.swarm.validate()?;
    let n = cfg.swarm.num_particles;
    if seed_layouts.len() > n {
        return Err(Error::Config(format!(
            "{} seed layouts exceed the swarm size {n}",
            seed_layouts.len()
        )));
    }
    let dim = cfg.position_dim();
    let half = cfg.region_size / 2.0;
    let mut positions: Vec<DVector<f64>> = (0..n)
        .map(|_| DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(-half..=half))))
        .collect();
    let velocities: Vec<DVector<f64>> = if cfg.swarm.random_init_velocity {
        (0..n)
            .map(|_| DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(-half..=half))))
            .collect()
    } else {
        (0..n).map(|_| DVector::zeros(dim)).collect()
    };
    for (pos, seed) in positions.iter_mut().zip(seed_layouts) {
        *pos = seed.to_flat();
    }

    let mut max_ssr = f64::NEG_INFINITY;
    let mut particles = Vec::with_capacity(n);
    for (pos, vel) in positions.into_iter().zip(velocities) {
        let (fit, ssr, _) = fitness_parts(&pos, evaluator, cfg)?;
        max_ssr = max_ssr.max(ssr);
        particles.push(Particle {
            pbest_position: pos.clone(),
            pbest_fitness: fit,
            position: pos,
            velocity: vel,
        });
    }
    check_penalty_scale(max_ssr, cfg)?;
    let mut gbest_idx = 0;
    for (i, p) in particles.iter().enumerate() {
        if p.pbest_fitness > particles[gbest_idx].pbest_fitness {
            gbest_idx = i;
        }
    }
    let mut state = SwarmState {
        gbest_position: particles[gbest_idx].pbest_position.clone(),
        gbest_fitness: particles[gbest_idx].pbest_fitness,
        particles,
        iteration: 0,
    };
    let mut trace = SwarmTrace::default();
    trace.gbest_fitness.push(state.gbest_fitness);
    trace.gbest_penalty.push(penalty(&state.gbest_position, cfg));
    for _ in 0..cfg.swarm.max_iters {
        let step_ssr = swarm_step(&mut state, evaluator, cfg, rng)?;
        check_penalty_scale(step_ssr, cfg)?;
        trace.gbest_fitness.push(state.gbest_fitness);
        trace.gbest_penalty.push(penalty(&state.gbest_position, cfg));
    }
    let layout = AntennaLayout::from_flat(state.gbest_position.as_slice(), cfg.num_tx, cfg.num_rx)?;
    Ok(MvpsoOutcome {
        layout,
        fitness: state.gbest_fitness,
        state,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn swarm_cfg(n_t: usize, n_r: usize, particles: usize, iters: usize) -> SystemConfig {
        let mut cfg = SystemConfig::desk();
        cfg.num_tx = n_t;
        cfg.num_rx = n_r;
        cfg.swarm = crate::config::SwarmParams::mvpso_defaults(particles, iters);
        cfg
    }

    /// Smooth synthetic objective: prefers layouts near a target corner.
    fn synthetic(cfg: &SystemConfig) -> impl Fn(&AntennaLayout) -> Result<f64> + Sync {
        let half = cfg.region_size / 2.0;
        move |layout: &AntennaLayout| {
            let mut score = 5.0;
            for p in layout.tx.iter().chain(layout.rx.iter()) {
                score -= 0.05 * ((p[0] - half).powi(2) + (p[1] + half).powi(2));
            }
            Ok(score.max(0.0))
        }
    }

    #[test]
    fn penalty_counts_pairs() {
        let cfg = swarm_cfg(2, 2, 4, 4);
        // Feasible layout: no penalty.
        let u = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(penalty(&u, &cfg), 0.0);
        // One transmit pair at 0.3 wavelengths.
        let u = DVector::from_vec(vec![0.0, 0.0, 0.3, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(penalty(&u, &cfg), 10.0);
        // Three mutually colliding transmit antennas: three pairs.
        let mut cfg3 = swarm_cfg(3, 1, 4, 4);
        cfg3.swarm.tau_t = 10.0;
        let u = DVector::from_vec(vec![0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 1.0, 1.0]);
        assert_eq!(penalty(&u, &cfg3), 30.0);
    }

    #[test]
    fn projection_clamps_to_box() {
        let mut cfg = swarm_cfg(1, 1, 4, 4);
        cfg.region_size = 4.0;
        let u = DVector::from_vec(vec![2.5, 0.3, -3.0, 2.0]);
        let p = project(u, &cfg);
        assert_eq!(p.as_slice(), &[2.0, 0.3, -2.0, 2.0]);
    }

    #[test]
    fn inertia_schedule_endpoints() {
        assert_relative_eq!(inertia_schedule(0, 10, 0.9, 0.4).unwrap(), 0.9);
        assert_relative_eq!(inertia_schedule(10, 10, 0.9, 0.4).unwrap(), 0.4);
        assert_relative_eq!(inertia_schedule(5, 10, 0.9, 0.4).unwrap(), 0.65);
        assert!(inertia_schedule(1, 0, 0.9, 0.4).is_err());
    }

    #[test]
    fn velocity_component_reductions() {
        let cfg = swarm_cfg(1, 1, 4, 4);
        let dim = cfg.position_dim();
        let particle = Particle {
            position: DVector::from_element(dim, 0.5),
            velocity: DVector::from_element(dim, 1.0),
            pbest_position: DVector::from_element(dim, 0.5),
            pbest_fitness: 0.0,
        };
        let gbest = DVector::from_element(dim, 0.5);
        let e = DVector::from_element(dim, 0.7);
        // Coinciding personal/global bests leave only the inertia part.
        let comps = velocity_components(&particle, &gbest, &cfg, 1, &e, &e).unwrap();
        for (j, comp) in comps.iter().enumerate() {
            let w = cfg.swarm.component_inertias[j];
            for x in comp.iter() {
                assert_relative_eq!(*x, w, max_relative = 1e-14);
            }
        }
        // Zero learning factors: pure inertia regardless of bests.
        let mut cfg0 = cfg.clone();
        cfg0.swarm.c1 = 0.0;
        cfg0.swarm.c2 = 0.0;
        let far = DVector::from_element(dim, -1.9);
        let comps = velocity_components(&particle, &far, &cfg0, 1, &e, &e).unwrap();
        for (j, comp) in comps.iter().enumerate() {
            let w = cfg0.swarm.component_inertias[j];
            for x in comp.iter() {
                assert_relative_eq!(*x, w, max_relative = 1e-14);
            }
        }
        // Zero previous velocity with all-ones draws: every component equals
        // the pure attraction term.
        let mut resting = particle.clone();
        resting.velocity = DVector::zeros(dim);
        resting.pbest_position = DVector::from_element(dim, 1.0);
        let ones = DVector::from_element(dim, 1.0);
        let gb = DVector::from_element(dim, -1.0);
        let comps = velocity_components(&resting, &gb, &cfg, 1, &ones, &ones).unwrap();
        let expected = cfg.swarm.c1 * (1.0 - 0.5) + cfg.swarm.c2 * (-1.0 - 0.5);
        for comp in &comps {
            for x in comp.iter() {
                assert_relative_eq!(*x, expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn candidate_combinations() {
        let c1 = DVector::from_vec(vec![1.0, 0.0]);
        let c2 = DVector::from_vec(vec![0.0, 2.0]);
        let cands =
            candidate_velocities(&[c1.clone(), c2.clone()], &[vec![1.0, 0.0], vec![0.5, 0.5]])
                .unwrap();
        assert_eq!(cands[0], c1);
        assert_eq!(cands[1], DVector::from_vec(vec![0.5, 1.0]));
        // Single-candidate single-component reduction.
        let cands = candidate_velocities(&[c1.clone()], &[vec![1.0]]).unwrap();
        assert_eq!(cands[0], c1);
        assert!(candidate_velocities(&[c1], &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn heavily_penalized_candidate_is_never_adopted() {
        let mut cfg = swarm_cfg(2, 1, 1, 1);
        cfg.swarm.c1 = 0.0;
        cfg.swarm.c2 = 0.0;
        cfg.swarm.num_candidates = 2;
        cfg.swarm.num_components = 1;
        cfg.swarm.component_inertias = vec![1.0];
        cfg.swarm.combination_weights = vec![vec![1.0], vec![0.0]];
        let dim = cfg.position_dim();
        // Velocity drives the two transmit antennas onto each other; the
        // zero-weight candidate keeps the feasible current layout.
        let position = DVector::from_vec(vec![-1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let velocity = DVector::from_vec(vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        let particle = Particle {
            pbest_position: position.clone(),
            pbest_fitness: 0.0,
            position: position.clone(),
            velocity,
        };
        let evaluator = |_: &AntennaLayout| Ok(5.0);
        let e = DVector::zeros(dim);
        let update = best_candidate(&particle, &position, &cfg, 1, &e, &e, &evaluator).unwrap();
        assert_eq!(update.position, position);
        assert_eq!(update.fitness, 5.0);
    }

    #[test]
    fn optimize_respects_box_and_is_monotone() {
        let cfg = swarm_cfg(2, 2, 12, 15);
        let evaluator = synthetic(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let out = optimize(&evaluator, &cfg, &[], &mut rng).unwrap();
        let half = cfg.region_size / 2.0;
        for p in out.layout.tx.iter().chain(out.layout.rx.iter()) {
            assert!(p[0].abs() <= half && p[1].abs() <= half);
        }
        for pair in out.trace.gbest_fitness.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        assert_eq!(out.trace.gbest_fitness.len(), cfg.swarm.max_iters + 1);
    }

    #[test]
    fn penalty_trace_reaches_zero_and_stays_there() {
        let cfg = swarm_cfg(3, 3, 30, 30);
        let evaluator = synthetic(&cfg);
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = optimize(&evaluator, &cfg, &[], &mut rng).unwrap();
            let first_zero = out
                .trace
                .gbest_penalty
                .iter()
                .position(|&p| p == 0.0)
                .expect("penalty should reach zero");
            assert!(first_zero <= cfg.swarm.max_iters / 2);
            assert!(out.trace.gbest_penalty[first_zero..].iter().all(|&p| p == 0.0));
            // A zero-penalty global best satisfies the spacing constraints.
            assert!(out.layout.is_feasible(&cfg));
        }
    }

    #[test]
    fn seed_layout_injection_never_loses_to_the_incumbent() {
        let cfg = swarm_cfg(2, 2, 8, 10);
        let evaluator = synthetic(&cfg);
        let seed_layout = AntennaLayout::new(
            vec![[1.0, -1.0], [0.0, 0.0]],
            vec![[0.5, -0.5], [-1.0, 1.0]],
        );
        let seed_fitness = fitness(&seed_layout.to_flat(), &evaluator, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = optimize(&evaluator, &cfg, &[seed_layout], &mut rng).unwrap();
        assert!(out.fitness >= seed_fitness);
    }

    #[test]
    fn parallel_mode_is_monotone_too() {
        let mut cfg = swarm_cfg(2, 2, 10, 10);
        cfg.swarm.parallel_eval = true;
        let evaluator = synthetic(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let out = optimize(&evaluator, &cfg, &[], &mut rng).unwrap();
        for pair in out.trace.gbest_fitness.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn oversized_secrecy_rate_fails_loudly() {
        let cfg = swarm_cfg(1, 1, 4, 3);
        let evaluator = |_: &AntennaLayout| Ok(25.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let err = optimize(&evaluator, &cfg, &[], &mut rng).unwrap_err();
        assert!(matches!(err, Error::PenaltyScale { .. }));
        assert!(err.to_string().contains("raise tau"));
    }

    #[test]
    fn single_candidate_swarm_matches_independent_standard_pso() {
        for seed in [1u64, 42, 777] {
            assert!(crate::verify::reduction_matches_standard_pso(seed));
        }
    }
}
