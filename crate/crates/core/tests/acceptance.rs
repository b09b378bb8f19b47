//! Acceptance suite: one test per criterion, each printing a PASS or FAIL
//! line with the measured numbers. Desk scale throughout: 4 antennas per
//! side, 2 users of each kind, 50 particles, 50 swarm iterations, 30
//! transmit-solver iterations, 20 seeds unless stated otherwise.

use mafd::ao::{self, AoOptions};
use mafd::channel::{materialize, sample_geometry_channels, AntennaLayout, TerminalDistances};
use mafd::config::{SwarmParams, SystemConfig};
use mafd::experiments::{run_experiment, spec_from_manifest, ExperimentKind, ExperimentSpec, SweepParam};
use mafd::objective::{self, LinkCaches};
use mafd::receiver;
use mafd::sca::{self, ScaPoint, TxOptions};
use mafd::scenario::{self, derive_seed, monte_carlo};
use mafd::schemes::SchemeId;
use mafd::verify;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: usize = 20;

fn line(criterion: &str, passed: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
}

fn desk() -> SystemConfig {
    SystemConfig::desk()
}

/// C1: assembled channels match per-path brute-force summation on 100 random
/// small instances, relative error <= 1e-12.
#[test]
fn c1_channel_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let l = rng.random_range(1..=3);
        let mut cfg = desk();
        cfg.num_tx = n;
        cfg.num_rx = n;
        cfg.num_paths = l;
        cfg.k_u = 1;
        cfg.k_d = 1;
        cfg.k_e = 1;
        let distances = TerminalDistances {
            ul: vec![rng.random_range(50.0..400.0)],
            dl: vec![rng.random_range(50.0..400.0)],
            eve: vec![rng.random_range(50.0..400.0)],
            ud: vec![vec![rng.random_range(20.0..300.0)]],
            ue: vec![vec![rng.random_range(20.0..300.0)]],
        };
        let gains = sample_geometry_channels(&cfg, &distances, &mut rng).unwrap();
        let half = cfg.region_size / 2.0;
        let points = |rng: &mut ChaCha8Rng, n: usize| -> Vec<[f64; 2]> {
            (0..n)
                .map(|_| [rng.random_range(-half..=half), rng.random_range(-half..=half)])
                .collect()
        };
        let layout = AntennaLayout::new(points(&mut rng, n), points(&mut rng, n));
        let set = materialize(&layout, &gains, cfg.wavelength).unwrap();
        worst = worst.max(verify::rel_mat_err(
            &set.h_si,
            &verify::si_channel_bruteforce(&layout, &gains, cfg.wavelength),
        ));
        for (h, link, side) in [
            (&set.h_ub[0], &gains.ub[0], &layout.rx),
            (&set.h_bd[0], &gains.bd[0], &layout.tx),
            (&set.h_be[0], &gains.be[0], &layout.tx),
        ] {
            worst = worst.max(verify::rel_vec_err(
                h,
                &verify::link_channel_bruteforce(side, &link.angles, &link.prv, cfg.wavelength),
            ));
        }
    }
    let passed = worst <= 1e-12;
    line("C1 channel-oracle-equivalence", passed, &format!("max rel err {worst:.2e}, limit 1e-12"));
    assert!(passed);
}

/// C2: trace-form SINRs equal quotient forms and f - g equals the unclamped
/// secrecy sum on 100 random instances, relative error <= 1e-10.
#[test]
fn c2_objective_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
    for i in 0..100 {
        let k_u = 1 + i % 3;
        let k_d = 1 + (i / 2) % 3;
        let k_e = i % 4;
        let inst = verify::random_instance(k_u, k_d, k_e, 3, 3, 2, &mut rng);
        let ctx = objective::build_context(&inst.channels, &inst.solution, &inst.cfg).unwrap();
        for k in 0..k_u {
            worst = worst.max(rel(
                objective::sinr_ul(&ctx, k),
                verify::sinr_ul_quotient(&inst.channels, &inst.solution, &inst.cfg, k),
            ));
            worst = worst.max(rel(
                objective::sinr_eve_ul(&ctx, k),
                verify::sinr_eve_ul_quotient(&inst.channels, &inst.solution, &inst.cfg, k),
            ));
        }
        for k in 0..k_d {
            worst = worst.max(rel(
                objective::sinr_dl(&ctx, k),
                verify::sinr_dl_quotient(&inst.channels, &inst.solution, &inst.cfg, k),
            ));
            worst = worst.max(rel(
                objective::sinr_eve_dl(&ctx, k),
                verify::sinr_eve_dl_quotient(&inst.channels, &inst.solution, &inst.cfg, k),
            ));
        }
        worst = worst.max(rel(
            objective::unclamped_ssr(&ctx),
            verify::unclamped_ssr_quotient(&inst.channels, &inst.solution, &inst.cfg),
        ));
    }
    let passed = worst <= 1e-10;
    line("C2 objective-identities", passed, &format!("max rel err {worst:.2e}, limit 1e-10"));
    assert!(passed);
}

/// C3: analytic gradients of g match central finite differences in 20 random
/// directions on 10 instances, relative error <= 1e-5.
#[test]
fn c3_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let inst = verify::random_instance(2, 2, 1 + i % 3, 3, 3, 2, &mut rng);
        let caches = LinkCaches::build(&inst.channels, &inst.solution.b, &inst.cfg).unwrap();
        let point = verify::random_sca_point(&inst, 0.8, &mut rng);
        for _ in 0..20 {
            worst = worst.max(verify::gradient_direction_error(&caches, &point, &mut rng));
        }
    }
    let passed = worst <= 1e-5;
    line("C3 gradient-correctness", passed, &format!("max rel err {worst:.2e}, limit 1e-5"));
    assert!(passed);
}

/// C4: surrogate trace non-decreasing (1e-8 slack) and eigenvalue ratios
/// lambda2/lambda1 <= 1e-6 for every covariance on 20 desk instances.
#[test]
fn c4_sca_monotonicity_and_rank_tightness() {
    let cfg = desk();
    let mut worst_drop = 0.0f64;
    let mut worst_residual = 0.0f64;
    for t in 0..SEEDS as u64 {
        let scenario = scenario::build(&cfg, derive_seed(0xC4, &[t, 0])).unwrap();
        let (layout, solution) = ao::initialize(&scenario.gains, &cfg, true).unwrap();
        let channels = materialize(&layout, &scenario.gains, cfg.wavelength).unwrap();
        let warm = ScaPoint::from_solution(&solution.w, &solution.v, &solution.p);
        let out =
            sca::optimize_tx(&channels, &solution.b, warm, &cfg, TxOptions::default()).unwrap();
        for pair in out.trace.windows(2) {
            worst_drop = worst_drop.max(pair[0].f_tilde - pair[1].f_tilde);
        }
        for &r in &out.rank_residuals {
            worst_residual = worst_residual.max(r);
        }
    }
    let mono_ok = worst_drop <= 1e-8;
    let rank_ok = worst_residual <= 1e-6;
    line(
        "C4 sca-monotonicity-and-rank-tightness",
        mono_ok && rank_ok,
        &format!(
            "worst surrogate drop {worst_drop:.2e} (limit 1e-8), worst rank residual \
             {worst_residual:.2e} (limit 1e-6)"
        ),
    );
    assert!(mono_ok && rank_ok);
}

/// C5: the closed-form receiver matches the power-iteration oracle
/// (rel err <= 1e-8) and dominates 1000 random unit probes and the
/// zero-forcing receiver in uplink SINR on all 50 instances.
#[test]
fn c5_receiver_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut worst_eig = 0.0f64;
    let mut dominated_probes = true;
    let mut dominated_zf = true;
    for _ in 0..50 {
        let inst = verify::random_instance(2, 2, 1, 3, 4, 2, &mut rng);
        let sol = &inst.solution;
        for k in 0..2 {
            let b = receiver::optimal_receiver(&inst.channels, &sol.w, &sol.v, &sol.p, k, &inst.cfg)
                .unwrap();
            let a = receiver::interference_matrix(&inst.channels, &sol.w, &sol.v, &sol.p, k, &inst.cfg);
            let h = &inst.channels.h_ub[k];
            let achieved = verify::rayleigh_quotient(&b, h, &a);
            let oracle = verify::dominant_generalized_eigenvalue(&a, h, 60);
            worst_eig = worst_eig.max((achieved - oracle).abs() / oracle.abs().max(1e-30));
            for _ in 0..1000 {
                let probe = verify::random_unit(4, &mut rng);
                if verify::rayleigh_quotient(&probe, h, &a) > achieved * (1.0 + 1e-9) {
                    dominated_probes = false;
                }
            }
            let mut with_b = inst.solution.clone();
            with_b.b[k] = b;
            let mut with_zf = inst.solution.clone();
            with_zf.b[k] = receiver::zf_receiver(&inst.channels, k, &inst.cfg).unwrap();
            let s_opt = objective::sinr_ul(
                &objective::build_context(&inst.channels, &with_b, &inst.cfg).unwrap(),
                k,
            );
            let s_zf = objective::sinr_ul(
                &objective::build_context(&inst.channels, &with_zf, &inst.cfg).unwrap(),
                k,
            );
            if s_opt < s_zf * (1.0 - 1e-12) {
                dominated_zf = false;
            }
        }
    }
    let passed = worst_eig <= 1e-8 && dominated_probes && dominated_zf;
    line(
        "C5 receiver-optimality",
        passed,
        &format!(
            "eigen rel err {worst_eig:.2e} (limit 1e-8), probes dominated {dominated_probes}, \
             zero-forcing dominated {dominated_zf}"
        ),
    );
    assert!(passed);
}

/// C6: the swarm's global-best fitness is non-decreasing in every run; its
/// penalty trace reaches zero before half the iterations and stays there on
/// full-scale defaults; the one-candidate reduction is trajectory-identical
/// to an independent standard implementation under a shared stream.
#[test]
fn c6_swarm_contract() {
    // Full-scale style: 6 antennas per side, 4 users of each kind, 100
    // particles, 100 iterations, penalty factors of 10.
    let cfg = SystemConfig::table_defaults();
    let mut monotone = true;
    let mut penalty_ok = true;
    let mut worst_first_zero = 0usize;
    for t in 0..SEEDS as u64 {
        let scenario = scenario::build(&cfg, derive_seed(0xC6, &[t, 0])).unwrap();
        let (_, solution) = ao::initialize(&scenario.gains, &cfg, true).unwrap();
        let gains = scenario.gains.clone();
        let cfg2 = cfg.clone();
        let sol = solution.clone();
        let evaluator = move |layout: &AntennaLayout| -> mafd::Result<f64> {
            let ch = materialize(layout, &gains, cfg2.wavelength)?;
            let ctx = objective::build_context(&ch, &sol, &cfg2)?;
            Ok(objective::ssr(&ctx).total)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xC6, &[t, 1]));
        let out = mafd::mvpso::optimize(&evaluator, &cfg, &[], &mut rng).unwrap();
        for pair in out.trace.gbest_fitness.windows(2) {
            if pair[1] < pair[0] {
                monotone = false;
            }
        }
        match out.trace.gbest_penalty.iter().position(|&p| p == 0.0) {
            Some(first_zero) => {
                worst_first_zero = worst_first_zero.max(first_zero);
                if first_zero >= cfg.swarm.max_iters / 2
                    || out.trace.gbest_penalty[first_zero..].iter().any(|&p| p != 0.0)
                {
                    penalty_ok = false;
                }
            }
            None => penalty_ok = false,
        }
    }
    let mut reduction_ok = true;
    for seed in [0xC6u64, 99, 1234] {
        reduction_ok &= verify::reduction_matches_standard_pso(seed);
    }
    let passed = monotone && penalty_ok && reduction_ok;
    line(
        "C6 swarm-contract",
        passed,
        &format!(
            "gbest monotone {monotone}, penalty zero by iteration {worst_first_zero} of \
             {} and stays (ok {penalty_ok}), one-candidate reduction identical {reduction_ok}",
            cfg.swarm.max_iters / 2
        ),
    );
    assert!(passed);
}

/// C7: the secrecy-rate trace is non-decreasing (1e-6 slack) and the
/// alternating loop converges (delta < 1e-3) within 40 iterations on 20 desk
/// seeds.
///
/// The convergence half of this criterion does not hold for this algorithm
/// at desk scale: the alternating scheme converges linearly with a measured
/// per-round improvement decay of about 3.5%, independent of how exactly the
/// transmit subproblem is solved, so the absolute improvement crosses 1e-3
/// around iteration 60-110 rather than 40. The monotonicity half holds. See
/// the analysis at the bottom of this file.
#[test]
fn c7_ao_convergence() {
    let mut cfg = desk();
    cfg.ao.max_iters = 40;
    let results: Vec<(bool, usize, f64)> = (0..SEEDS as u64)
        .map(|t| {
            let scenario = scenario::build(&cfg, derive_seed(0xC7, &[t, 0])).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xC7, &[t, 1]));
            let out = ao::run(&scenario.gains, &cfg, &AoOptions::default(), &mut rng).unwrap();
            let mut monotone = true;
            let mut last_delta = f64::NAN;
            let mut prev = f64::NEG_INFINITY;
            for r in &out.trace.records {
                if r.ssr_after_rx < prev - 1e-6 {
                    monotone = false;
                }
                last_delta = r.ssr_after_rx - prev;
                prev = r.ssr_after_rx;
            }
            (monotone, if out.trace.converged { out.iterations } else { usize::MAX }, last_delta)
        })
        .collect();
    let monotone = results.iter().all(|r| r.0);
    let converged = results.iter().filter(|r| r.1 <= 40).count();
    let worst_delta = results
        .iter()
        .map(|r| r.2)
        .fold(f64::NEG_INFINITY, f64::max);
    line(
        "C7 ao-convergence",
        monotone && converged == SEEDS,
        &format!(
            "trace monotone {monotone}; {converged}/{SEEDS} seeds converged within 40 \
             iterations; worst final per-iteration delta {worst_delta:.2e} against the \
             1e-3 threshold"
        ),
    );
    assert!(monotone, "secrecy-rate trace decreased");
    assert!(
        converged == SEEDS,
        "{}/{} seeds converged within 40 iterations; the alternating scheme's linear \
         rate (~0.965/round) makes the absolute 1e-3 threshold unreachable by iteration \
         40 at desk scale",
        converged,
        SEEDS
    );
}

fn mean_of(stats: &mafd::scenario::MonteCarloStats, scheme: SchemeId) -> f64 {
    stats.stats_for(scheme).unwrap().mean_ssr
}

/// C8: trend reproduction at desk scale on means over 20 paired seeds.
#[test]
fn c8_trend_reproduction() {
    // (a) proposed scheme versus the moving-region size, with saturation.
    let mut region_means = Vec::new();
    for a in [1.0, 2.0, 3.0, 4.0] {
        let mut cfg = desk();
        cfg.region_size = a;
        cfg.seed = 0xC8;
        let stats = monte_carlo(&cfg, &[SchemeId::Proposed], SEEDS, 0).unwrap();
        region_means.push(mean_of(&stats, SchemeId::Proposed));
    }
    let grows = region_means.windows(2).all(|w| w[1] >= w[0]);
    let saturates = (region_means[3] - region_means[2]) < (region_means[1] - region_means[0]);
    let part_a = grows && saturates;
    line(
        "C8a region-size-trend",
        part_a,
        &format!("means over region sizes 1..4: {region_means:?}"),
    );

    // (b) and (c): orderings at the default region size.
    let mut cfg = desk();
    cfg.seed = 0xC8;
    let stats = monte_carlo(
        &cfg,
        &[
            SchemeId::Proposed,
            SchemeId::Pso,
            SchemeId::Rp,
            SchemeId::Fpa,
            SchemeId::NoAn,
            SchemeId::Hd,
        ],
        SEEDS,
        0,
    )
    .unwrap();
    let proposed = mean_of(&stats, SchemeId::Proposed);
    let pso = mean_of(&stats, SchemeId::Pso);
    let rp = mean_of(&stats, SchemeId::Rp);
    let fpa = mean_of(&stats, SchemeId::Fpa);
    let noan = mean_of(&stats, SchemeId::NoAn);
    let hd = mean_of(&stats, SchemeId::Hd);
    let part_b = proposed >= pso && pso >= rp && proposed > rp && proposed >= fpa;
    line(
        "C8b scheme-ordering",
        part_b,
        &format!("proposed {proposed:.4} >= pso {pso:.4} >= rp {rp:.4}, proposed >= fpa {fpa:.4}"),
    );
    let part_c = proposed >= noan && noan >= hd && proposed > hd;
    line(
        "C8c jamming-and-duplex-ordering",
        part_c,
        &format!("proposed {proposed:.4} >= noan {noan:.4} >= hd {hd:.4}"),
    );

    // (d) every scheme degrades as eavesdroppers are added.
    let mut per_scheme: Vec<(SchemeId, Vec<f64>)> =
        SchemeId::ALL.iter().map(|&s| (s, Vec::new())).collect();
    for k_e in [1usize, 2, 4] {
        let mut cfg = desk();
        cfg.k_e = k_e;
        cfg.seed = 0xC8;
        let stats = monte_carlo(&cfg, &SchemeId::ALL, SEEDS, 0).unwrap();
        for (scheme, means) in per_scheme.iter_mut() {
            means.push(mean_of(&stats, *scheme));
        }
    }
    let mut part_d = true;
    let mut detail = String::new();
    for (scheme, means) in &per_scheme {
        let ok = means.windows(2).all(|w| w[1] <= w[0]);
        if !ok {
            part_d = false;
        }
        detail.push_str(&format!("{}: {:.3}/{:.3}/{:.3} ", scheme.name(), means[0], means[1], means[2]));
    }
    line("C8d eavesdropper-count-trend", part_d, detail.trim());

    assert!(part_a, "region-size trend failed: {region_means:?}");
    assert!(part_b, "scheme ordering failed");
    assert!(part_c, "jamming/duplex ordering failed");
    assert!(part_d, "eavesdropper-count trend failed");
}

/// C9: estimation errors in the field-response information degrade the
/// proposed scheme: path-response error (eta = 0.5) and departure-angle
/// error (0.3 rad) strictly reduce the mean secrecy sum, and arrival-angle
/// error (0.3 rad) hurts less than departure-angle error.
#[test]
fn c9_fri_degradation() {
    use mafd::channel::FriError;
    let cfg = desk();
    let mut clean = Vec::new();
    let mut prm = Vec::new();
    let mut aod = Vec::new();
    let mut aoa = Vec::new();
    for t in 0..SEEDS as u64 {
        let scenario = scenario::build(&cfg, derive_seed(0xC9, &[t, 0])).unwrap();
        let run_with = |error: Option<FriError>, bucket: &mut Vec<f64>| {
            let mut fri_rng = ChaCha8Rng::seed_from_u64(derive_seed(0xC9, &[t, 0xF1]));
            let position_gains = error.map(|e| {
                mafd::channel::perturb_fri(&scenario.gains, &e, &mut fri_rng).unwrap()
            });
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xC9, &[t, 1]));
            let opts = AoOptions {
                position_gains,
                ..Default::default()
            };
            let out = ao::run(&scenario.gains, &cfg, &opts, &mut rng).unwrap();
            let ch = materialize(&out.layout, &scenario.gains, cfg.wavelength).unwrap();
            let ctx = objective::build_context(&ch, &out.solution, &cfg).unwrap();
            bucket.push(objective::ssr(&ctx).total);
        };
        run_with(None, &mut clean);
        run_with(
            Some(FriError::PathResponse {
                normalized_variance: 0.5,
            }),
            &mut prm,
        );
        run_with(Some(FriError::Aod { max_error: 0.3 }), &mut aod);
        run_with(Some(FriError::Aoa { max_error: 0.3 }), &mut aoa);
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (m_clean, m_prm, m_aod, m_aoa) = (mean(&clean), mean(&prm), mean(&aod), mean(&aoa));
    let prm_down = m_prm < m_clean;
    let aod_down = m_aod < m_clean;
    let aoa_gentler = (m_clean - m_aoa) < (m_clean - m_aod);
    let passed = prm_down && aod_down && aoa_gentler;
    line(
        "C9 fri-degradation",
        passed,
        &format!(
            "clean {m_clean:.4}, path-response {m_prm:.4}, departure-angle {m_aod:.4}, \
             arrival-angle {m_aoa:.4}"
        ),
    );
    assert!(passed);
}

/// C10: rerunning any experiment from its manifest reproduces byte-identical
/// CSV outputs at parallelism 1 and 8.
#[test]
fn c10_determinism() {
    let base = std::env::temp_dir().join(format!("mafd-acceptance-c10-{}", std::process::id()));
    let mut quick = desk();
    quick.num_tx = 2;
    quick.num_rx = 2;
    quick.k_u = 1;
    quick.k_d = 1;
    quick.k_e = 1;
    quick.num_paths = 3;
    quick.swarm = SwarmParams::mvpso_defaults(8, 6);
    quick.swarm.tau_t = 25.0;
    quick.swarm.tau_r = 25.0;
    quick.sca = mafd::config::ScaParams::defaults(8);
    quick.ao.max_iters = 4;
    let mut all_ok = true;
    let mut details = Vec::new();
    for (kind, name) in [
        (ExperimentKind::Sweep, "sweep.csv"),
        (ExperimentKind::Convergence, "ao_trace.csv"),
        (ExperimentKind::Gainmap, "gainmap.csv"),
    ] {
        let mut spec = ExperimentSpec {
            kind,
            param: None,
            values: vec![],
            fri_family: None,
            schemes: vec![SchemeId::Proposed, SchemeId::Fpa],
            trials: 4,
            seed: 0xC10,
            parallelism: 1,
            gainmap_step: 0.5,
            config: quick.clone(),
        };
        if kind == ExperimentKind::Sweep {
            spec.param = Some(SweepParam::KE);
            spec.values = vec![1.0, 2.0];
        }
        let dir1 = base.join(format!("{name}-p1"));
        let dir2 = base.join(format!("{name}-p8"));
        run_experiment(&spec, &dir1).unwrap();
        let mut reloaded = spec_from_manifest(&dir1.join("manifest.json")).unwrap();
        reloaded.parallelism = 8;
        run_experiment(&reloaded, &dir2).unwrap();
        let a = std::fs::read(dir1.join(name)).unwrap();
        let b = std::fs::read(dir2.join(name)).unwrap();
        let same = a == b;
        all_ok &= same;
        details.push(format!("{name} identical: {same}"));
    }
    line("C10 determinism", all_ok, &details.join(", "));
    std::fs::remove_dir_all(&base).ok();
    assert!(all_ok);
}

// C7 analysis. The alternating loop's per-iteration improvement decays
// geometrically at a measured rate of roughly 0.965 per round on desk
// instances: the position step moves the transmit antennas by a few
// thousandths of a wavelength, the transmit solver re-matches the
// beamformers for about the same gain, and the pair repeats. Running the
// transmit solver to its exact fixed point every round (2000 linearizations,
// threshold 1e-7) reproduces the same per-round deltas, so the rate is a
// property of the position/beamformer coupling, not of solver accuracy.
// Extrapolating the measured decay, the absolute per-round improvement
// crosses the 1e-3 threshold around iteration 60-110 depending on the seed,
// which satisfies the general expectation of convergence within 100
// iterations but not the 40-iteration bound asserted here.
