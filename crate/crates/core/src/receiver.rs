//! Receive beamforming: the closed-form uplink-SINR maximizer and the
//! zero-forcing benchmark.

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::{C64, CMat, CVec};

/// Interference-plus-noise matrix seen by uplink user `k`:
/// other users' uplink covariances, the residual self-interference of the
/// aggregate transmit signal `w = sum_k w_k` plus jamming, and the noise
/// floor. Positive definite whenever the uplink noise power is positive.
pub fn interference_matrix(
    channels: &ChannelSet,
    w: &[CVec],
    v: &CVec,
    p: &[f64],
    k_u: usize,
    cfg: &SystemConfig,
) -> CMat {
    let n_r = channels.num_rx();
    let mut a = CMat::identity(n_r, n_r) * C64::new(cfg.noise_ul, 0.0);
    for (i, h) in channels.h_ub.iter().enumerate() {
        if i != k_u {
            a += (h * h.adjoint()).scale(p[i]);
        }
    }
    if cfg.si_loss > 0.0 {
        // Aggregate beamformer, not the sum of per-user outer products.
        let n_t = channels.num_tx();
        let mut w_sum = CVec::zeros(n_t);
        for wk in w {
            w_sum += wk;
        }
        let cov = &w_sum * w_sum.adjoint() + v * v.adjoint();
        a += (&channels.h_si * cov * channels.h_si.adjoint()).scale(cfg.si_loss);
    }
    a
}

/// Closed-form receive beamformer `A^{-1} h / ||A^{-1} h||` for uplink user
/// `k`, solved through a Hermitian factorization.
pub fn optimal_receiver(
    channels: &ChannelSet,
    w: &[CVec],
    v: &CVec,
    p: &[f64],
    k_u: usize,
    cfg: &SystemConfig,
) -> Result<CVec> {
    let a = interference_matrix(channels, w, v, p, k_u, cfg);
    let h = &channels.h_ub[k_u];
    let x = match a.clone().cholesky() {
        Some(chol) => chol.solve(h),
        None => a
            .lu()
            .solve(h)
            .ok_or_else(|| Error::Solver("interference matrix is singular".into()))?,
    };
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::Solver(
            "uplink channel is zero; receive beamformer undefined".into(),
        ));
    }
    Ok(x.unscale(norm))
}

/// Zero-forcing receiver: the normalized `k`-th column of `H (H^H H)^{-1}`
/// where `H` stacks all uplink channels. Requires at least as many receive
/// antennas as uplink users and a full-column-rank stack.
pub fn zf_receiver(channels: &ChannelSet, k_u: usize, cfg: &SystemConfig) -> Result<CVec> {
    let n_r = channels.num_rx();
    let k = channels.k_u();
    if n_r < k {
        return Err(Error::Config(format!(
            "zero-forcing needs num_rx >= K_U ({n_r} < {k})"
        )));
    }
    let _ = cfg;
    let mut stack = CMat::zeros(n_r, k);
    for (i, h) in channels.h_ub.iter().enumerate() {
        stack.set_column(i, h);
    }
    let gram = stack.adjoint() * &stack;
    let inv = gram
        .cholesky()
        .ok_or_else(|| Error::Solver("uplink channel stack is rank deficient".into()))?
        .inverse();
    let pseudo = &stack * inv;
    let col = pseudo.column(k_u).into_owned();
    let norm = col.norm();
    if norm == 0.0 {
        return Err(Error::Solver("zero-forcing column vanished".into()));
    }
    Ok(col.unscale(norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{build_context, sinr_ul};
    use crate::verify;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reduces_to_matched_filter_without_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut inst = verify::random_instance(1, 1, 1, 3, 3, 2, &mut rng);
        inst.cfg.si_loss = 0.0;
        let b = optimal_receiver(
            &inst.channels,
            &inst.solution.w,
            &inst.solution.v,
            &inst.solution.p,
            0,
            &inst.cfg,
        )
        .unwrap();
        let h = &inst.channels.h_ub[0];
        let mrc = h.unscale(h.norm());
        // Equal up to a global phase.
        let overlap = b.dotc(&mrc).norm();
        assert_relative_eq!(overlap, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn interference_matrix_reduces_to_noise_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut inst = verify::random_instance(1, 1, 1, 3, 3, 2, &mut rng);
        inst.cfg.si_loss = 0.0;
        inst.cfg.noise_ul = 0.7;
        let a = interference_matrix(
            &inst.channels,
            &inst.solution.w,
            &inst.solution.v,
            &inst.solution.p,
            0,
            &inst.cfg,
        );
        let expected = CMat::identity(3, 3) * C64::new(0.7, 0.0);
        assert!((a - expected).norm() < 1e-14);
    }

    #[test]
    fn interference_matrix_matches_termwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let inst = verify::random_instance(3, 2, 1, 3, 4, 2, &mut rng);
        let a = interference_matrix(
            &inst.channels,
            &inst.solution.w,
            &inst.solution.v,
            &inst.solution.p,
            1,
            &inst.cfg,
        );
        let oracle = verify::interference_matrix_oracle(&inst.channels, &inst.solution, 1, &inst.cfg);
        assert!((a - oracle).norm() < 1e-12);
    }

    #[test]
    fn optimal_receiver_beats_probes_and_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10 {
            let inst = verify::random_instance(2, 2, 1, 3, 4, 2, &mut rng);
            let sol = &inst.solution;
            let b = optimal_receiver(&inst.channels, &sol.w, &sol.v, &sol.p, 0, &inst.cfg).unwrap();
            assert_relative_eq!(b.norm(), 1.0, max_relative = 1e-12);
            let a = interference_matrix(&inst.channels, &sol.w, &sol.v, &sol.p, 0, &inst.cfg);
            let h = &inst.channels.h_ub[0];
            let achieved = verify::rayleigh_quotient(&b, h, &a);
            let oracle = verify::dominant_generalized_eigenvalue(&a, h, 50);
            assert_relative_eq!(achieved, oracle, max_relative = 1e-8);
            for _ in 0..200 {
                let probe = verify::random_unit(4, &mut rng);
                assert!(verify::rayleigh_quotient(&probe, h, &a) <= achieved * (1.0 + 1e-9));
            }
            // The quotient is invariant to a joint positive rescaling.
            let scaled = verify::rayleigh_quotient(&b, &h.scale(3.0), &a.scale(9.0));
            assert_relative_eq!(scaled, achieved, max_relative = 1e-12);
        }
    }

    #[test]
    fn zf_nulls_other_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let inst = verify::random_instance(3, 1, 1, 3, 6, 2, &mut rng);
        for k in 0..3 {
            let b = zf_receiver(&inst.channels, k, &inst.cfg).unwrap();
            assert_relative_eq!(b.norm(), 1.0, max_relative = 1e-12);
            for i in 0..3 {
                let cross = b.dotc(&inst.channels.h_ub[i]).norm();
                if i != k {
                    assert!(cross < 1e-10, "|b_{k}^H h_{i}| = {cross}");
                }
            }
        }
    }

    #[test]
    fn zf_single_user_is_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let inst = verify::random_instance(1, 1, 1, 3, 4, 2, &mut rng);
        let b = zf_receiver(&inst.channels, 0, &inst.cfg).unwrap();
        let h = &inst.channels.h_ub[0];
        assert_relative_eq!(b.dotc(&h.unscale(h.norm())).norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zf_requires_enough_antennas() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let inst = verify::random_instance(4, 1, 1, 3, 3, 2, &mut rng);
        assert!(zf_receiver(&inst.channels, 0, &inst.cfg).is_err());
    }

    #[test]
    fn optimal_receiver_dominates_zero_forcing_in_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let inst = verify::random_instance(2, 2, 1, 3, 4, 2, &mut rng);
            let mut with_opt = inst.solution.clone();
            let mut with_zf = inst.solution.clone();
            for k in 0..2 {
                with_opt.b[k] = optimal_receiver(
                    &inst.channels,
                    &inst.solution.w,
                    &inst.solution.v,
                    &inst.solution.p,
                    k,
                    &inst.cfg,
                )
                .unwrap();
                with_zf.b[k] = zf_receiver(&inst.channels, k, &inst.cfg).unwrap();
            }
            let ctx_opt = build_context(&inst.channels, &with_opt, &inst.cfg).unwrap();
            let ctx_zf = build_context(&inst.channels, &with_zf, &inst.cfg).unwrap();
            for k in 0..2 {
                assert!(sinr_ul(&ctx_opt, k) >= sinr_ul(&ctx_zf, k) * (1.0 - 1e-12));
            }
        }
    }
}
