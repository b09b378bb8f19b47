//! Secrecy-rate objective.
//!
//! Evaluates the four receive SINRs in their trace forms, the achievable and
//! eavesdropping rates, the clamped sum of secrecy rates, and the split of
//! the unclamped objective into the two pieces `f` and `g` consumed by the
//! transmit-side solver. All functions are pure; a context is an immutable
//! snapshot safe for concurrent evaluation.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::{C64, CMat, CVec};

/// Transmit-side solution: downlink beamformers, jamming vector, uplink
/// powers, and unit-norm receive beamformers.
#[derive(Debug, Clone, PartialEq)]
pub struct TxSolution {
    pub w: Vec<CVec>,
    pub v: CVec,
    pub p: Vec<f64>,
    pub b: Vec<CVec>,
}

impl TxSolution {
    /// Total base-station transmit power `sum ||w_k||^2 + ||v||^2`.
    pub fn tx_power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_squared()).sum::<f64>() + self.v.norm_squared()
    }

    /// Checks the beamformer-norm, power-budget and power-box constraints.
    pub fn validate(&self, cfg: &SystemConfig, tol: f64) -> Result<()> {
        if self.w.len() != cfg.k_d || self.p.len() != cfg.k_u || self.b.len() != cfg.k_u {
            return Err(Error::Config(
                "solution dimensions do not match the user counts".into(),
            ));
        }
        for b in &self.b {
            if (b.norm() - 1.0).abs() > tol {
                return Err(Error::Infeasible(format!(
                    "receive beamformer norm {} is not 1",
                    b.norm()
                )));
            }
        }
        if self.tx_power() > cfg.p_max_dl * (1.0 + tol) {
            return Err(Error::Infeasible(format!(
                "transmit power {} exceeds budget {}",
                self.tx_power(),
                cfg.p_max_dl
            )));
        }
        for &p in &self.p {
            if !((-tol..=cfg.p_max_ul * (1.0 + tol)).contains(&p)) {
                return Err(Error::Infeasible(format!("uplink power {p} outside box")));
            }
        }
        Ok(())
    }
}

/// Real part of `Tr{A B}`. Exact real for Hermitian `A`, `B`.
pub(crate) fn trace_prod_re(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..a.ncols() {
            let z = a[(i, j)] * b[(j, i)];
            acc += z.re;
        }
    }
    acc
}

pub(crate) fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Channel- and receiver-dependent caches shared by every transmit-side
/// evaluation: effective uplink scalars, the scaled self-interference
/// vectors/outer products, and the downlink/eavesdropper outer products.
#[derive(Debug, Clone)]
pub struct LinkCaches {
    /// `[k][i] = b_k^H h_ub_i`.
    pub h_tilde_ub: Vec<Vec<C64>>,
    /// `sqrt(rho) H_si^H b_k`.
    pub h_tilde_si: Vec<CVec>,
    /// Outer products of `h_tilde_si`.
    pub ht_si: Vec<CMat>,
    pub h_bd_outer: Vec<CMat>,
    pub h_be_outer: Vec<CMat>,
    pub b_norm_sq: Vec<f64>,
    pub h_ud_sq: Vec<Vec<f64>>,
    pub h_ue_sq: Vec<Vec<f64>>,
    pub noise_ul: f64,
    pub noise_dl: f64,
    pub noise_eve: f64,
    pub num_tx: usize,
}

impl LinkCaches {
    pub fn build(channels: &ChannelSet, b: &[CVec], cfg: &SystemConfig) -> Result<Self> {
        if b.len() != channels.k_u() {
            return Err(Error::Dimension {
                what: "receive beamformers",
                expected: channels.k_u(),
                got: b.len(),
            });
        }
        for bk in b.iter() {
            if bk.len() != channels.num_rx() {
                return Err(Error::Dimension {
                    what: "receive beamformer length",
                    expected: channels.num_rx(),
                    got: bk.len(),
                });
            }
        }
        let sqrt_rho = cfg.si_loss.sqrt();
        let si_adj = channels.h_si.adjoint();
        let h_tilde_ub = b
            .iter()
            .map(|bk| channels.h_ub.iter().map(|h| bk.dotc(h)).collect())
            .collect();
        let h_tilde_si: Vec<CVec> = b.iter().map(|bk| (&si_adj * bk).scale(sqrt_rho)).collect();
        let ht_si = h_tilde_si.iter().map(outer).collect();
        let h_bd_outer = channels.h_bd.iter().map(outer).collect();
        let h_be_outer = channels.h_be.iter().map(outer).collect();
        Ok(Self {
            h_tilde_ub,
            h_tilde_si,
            ht_si,
            h_bd_outer,
            h_be_outer,
            b_norm_sq: b.iter().map(|bk| bk.norm_squared()).collect(),
            h_ud_sq: channels
                .h_ud
                .iter()
                .map(|row| row.iter().map(|z| z.norm_sqr()).collect())
                .collect(),
            h_ue_sq: channels
                .h_ue
                .iter()
                .map(|row| row.iter().map(|z| z.norm_sqr()).collect())
                .collect(),
            noise_ul: cfg.noise_ul,
            noise_dl: cfg.noise_dl,
            noise_eve: cfg.noise_eve,
            num_tx: channels.num_tx(),
        })
    }

    pub fn k_u(&self) -> usize {
        self.h_tilde_ub.len()
    }

    pub fn k_d(&self) -> usize {
        self.h_bd_outer.len()
    }

    pub fn k_e(&self) -> usize {
        self.h_be_outer.len()
    }

    /// Per-eavesdropper jamming-plus-noise terms `Tr{V H_be_i} + sigma_e^2`,
    /// their full product, and the leave-one-out products.
    pub(crate) fn eve_terms(&self, v_mat: &CMat) -> EveTerms {
        let a: Vec<f64> = self
            .h_be_outer
            .iter()
            .map(|h| trace_prod_re(v_mat, h) + self.noise_eve)
            .collect();
        let (product, leave_one_out) = leave_one_out_products(&a);
        EveTerms {
            a,
            product,
            leave_one_out,
        }
    }
}

pub(crate) struct EveTerms {
    pub a: Vec<f64>,
    pub product: f64,
    pub leave_one_out: Vec<f64>,
}

/// `(prod a_i, [prod_{j != i} a_j])` via prefix/suffix products.
pub(crate) fn leave_one_out_products(a: &[f64]) -> (f64, Vec<f64>) {
    let n = a.len();
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * a[i];
    }
    let mut suffix = vec![1.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * a[i];
    }
    let loo = (0..n).map(|i| prefix[i] * suffix[i + 1]).collect();
    (prefix[n], loo)
}

/// Snapshot combining the link caches with one transmit-side state. The
/// covariance matrices need not be rank one; the swarm and the relaxed
/// solver evaluate the same formulas through this type.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    pub caches: LinkCaches,
    pub w_mat: Vec<CMat>,
    pub v_mat: CMat,
    pub p: Vec<f64>,
}

/// Context from a beamforming solution: `W_k = w_k w_k^H`, `V = v v^H`.
pub fn build_context(
    channels: &ChannelSet,
    solution: &TxSolution,
    cfg: &SystemConfig,
) -> Result<ObjectiveContext> {
    let caches = LinkCaches::build(channels, &solution.b, cfg)?;
    if solution.w.len() != channels.k_d() {
        return Err(Error::Dimension {
            what: "downlink beamformers",
            expected: channels.k_d(),
            got: solution.w.len(),
        });
    }
    for w in &solution.w {
        if w.len() != channels.num_tx() {
            return Err(Error::Dimension {
                what: "downlink beamformer length",
                expected: channels.num_tx(),
                got: w.len(),
            });
        }
    }
    if solution.v.len() != channels.num_tx() {
        return Err(Error::Dimension {
            what: "jamming vector length",
            expected: channels.num_tx(),
            got: solution.v.len(),
        });
    }
    if solution.p.len() != channels.k_u() {
        return Err(Error::Dimension {
            what: "uplink powers",
            expected: channels.k_u(),
            got: solution.p.len(),
        });
    }
    Ok(ObjectiveContext {
        caches,
        w_mat: solution.w.iter().map(outer).collect(),
        v_mat: outer(&solution.v),
        p: solution.p.clone(),
    })
}

/// Context from covariance matrices directly (the relaxed-solver route).
pub fn build_context_from_parts(
    caches: LinkCaches,
    w_mat: Vec<CMat>,
    v_mat: CMat,
    p: Vec<f64>,
) -> ObjectiveContext {
    ObjectiveContext {
        caches,
        w_mat,
        v_mat,
        p,
    }
}

/// Uplink SINR of user `k` in the trace form.
pub fn sinr_ul(ctx: &ObjectiveContext, k: usize) -> f64 {
    let c = &ctx.caches;
    let num = c.h_tilde_ub[k][k].norm_sqr() * ctx.p[k];
    num / ul_interference_arg(c, &ctx.w_mat, &ctx.v_mat, &ctx.p, k)
}

/// Downlink SINR of user `k` in the trace form.
pub fn sinr_dl(ctx: &ObjectiveContext, k: usize) -> f64 {
    let c = &ctx.caches;
    let num = trace_prod_re(&ctx.w_mat[k], &c.h_bd_outer[k]);
    num / dl_interference_arg(c, &ctx.w_mat, &ctx.v_mat, &ctx.p, k)
}

/// Cooperative eavesdropping SINR against uplink user `k`, in the common-
/// denominator product form. Zero when there is no eavesdropper.
pub fn sinr_eve_ul(ctx: &ObjectiveContext, k: usize) -> f64 {
    let c = &ctx.caches;
    if c.k_e() == 0 {
        return 0.0;
    }
    let terms = c.eve_terms(&ctx.v_mat);
    let num: f64 = (0..c.k_e())
        .map(|i| c.h_ue_sq[k][i] * ctx.p[k] * terms.leave_one_out[i])
        .sum();
    num / terms.product
}

/// Cooperative eavesdropping SINR against downlink user `k`.
pub fn sinr_eve_dl(ctx: &ObjectiveContext, k: usize) -> f64 {
    let c = &ctx.caches;
    if c.k_e() == 0 {
        return 0.0;
    }
    let terms = c.eve_terms(&ctx.v_mat);
    let num: f64 = (0..c.k_e())
        .map(|i| trace_prod_re(&ctx.w_mat[k], &c.h_be_outer[i]) * terms.leave_one_out[i])
        .sum();
    num / terms.product
}

/// Per-user rate pairing: achievable rate, cooperative eavesdropping rate,
/// and the clamped secrecy term, all in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserSecrecy {
    pub rate: f64,
    pub eve_rate: f64,
    pub secrecy: f64,
}

/// Per-user rates and the total clamped sum of secrecy rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsrBreakdown {
    pub ul: Vec<UserSecrecy>,
    pub dl: Vec<UserSecrecy>,
    pub total: f64,
}

impl SsrBreakdown {
    pub fn ul_sum(&self) -> f64 {
        self.ul.iter().map(|u| u.secrecy).sum()
    }

    pub fn dl_sum(&self) -> f64 {
        self.dl.iter().map(|u| u.secrecy).sum()
    }

    /// CSV rows, one per user pairing: `side,user,rate,eve_rate,secrecy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("side,user,rate,eve_rate,secrecy\n");
        for (side, list) in [("ul", &self.ul), ("dl", &self.dl)] {
            for (k, u) in list.iter().enumerate() {
                out.push_str(&format!(
                    "{side},{k},{},{},{}\n",
                    u.rate, u.eve_rate, u.secrecy
                ));
            }
        }
        out
    }
}

fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Clamped sum of secrecy rates with its per-user breakdown.
pub fn ssr(ctx: &ObjectiveContext) -> SsrBreakdown {
    let ul: Vec<UserSecrecy> = (0..ctx.caches.k_u())
        .map(|k| {
            let r = rate(sinr_ul(ctx, k));
            let re = rate(sinr_eve_ul(ctx, k));
            UserSecrecy {
                rate: r,
                eve_rate: re,
                secrecy: (r - re).max(0.0),
            }
        })
        .collect();
    let dl: Vec<UserSecrecy> = (0..ctx.caches.k_d())
        .map(|k| {
            let r = rate(sinr_dl(ctx, k));
            let re = rate(sinr_eve_dl(ctx, k));
            UserSecrecy {
                rate: r,
                eve_rate: re,
                secrecy: (r - re).max(0.0),
            }
        })
        .collect();
    let total = ul.iter().chain(dl.iter()).map(|u| u.secrecy).sum();
    SsrBreakdown { ul, dl, total }
}

/// Signal-plus-interference argument of the downlink `f` group for user `k`.
fn dl_full_arg(c: &LinkCaches, w_mat: &[CMat], v_mat: &CMat, p: &[f64], k: usize) -> f64 {
    let h = &c.h_bd_outer[k];
    let mut arg = c.noise_dl + trace_prod_re(v_mat, h);
    for w in w_mat {
        arg += trace_prod_re(w, h);
    }
    for (ku, &pk) in p.iter().enumerate() {
        arg += c.h_ud_sq[ku][k] * pk;
    }
    arg
}

/// Interference-only argument of the downlink `g` group for user `k`,
/// accumulated directly rather than by subtracting the desired-signal term
/// from the full argument.
fn dl_interference_arg(c: &LinkCaches, w_mat: &[CMat], v_mat: &CMat, p: &[f64], k: usize) -> f64 {
    let h = &c.h_bd_outer[k];
    let mut arg = c.noise_dl + trace_prod_re(v_mat, h);
    for (i, w) in w_mat.iter().enumerate() {
        if i != k {
            arg += trace_prod_re(w, h);
        }
    }
    for (ku, &pk) in p.iter().enumerate() {
        arg += c.h_ud_sq[ku][k] * pk;
    }
    arg
}

fn ul_full_arg(c: &LinkCaches, w_mat: &[CMat], v_mat: &CMat, p: &[f64], k: usize) -> f64 {
    let mut arg = c.b_norm_sq[k] * c.noise_ul;
    for (i, &pi) in p.iter().enumerate() {
        arg += c.h_tilde_ub[k][i].norm_sqr() * pi;
    }
    for w in w_mat {
        arg += trace_prod_re(w, &c.ht_si[k]);
    }
    arg += trace_prod_re(v_mat, &c.ht_si[k]);
    arg
}

fn ul_interference_arg(c: &LinkCaches, w_mat: &[CMat], v_mat: &CMat, p: &[f64], k: usize) -> f64 {
    let mut arg = c.b_norm_sq[k] * c.noise_ul;
    for (i, &pi) in p.iter().enumerate() {
        if i != k {
            arg += c.h_tilde_ub[k][i].norm_sqr() * pi;
        }
    }
    for w in w_mat {
        arg += trace_prod_re(w, &c.ht_si[k]);
    }
    arg += trace_prod_re(v_mat, &c.ht_si[k]);
    arg
}

/// The `f` part: signal-plus-interference logs for every user plus the
/// jamming-plus-noise product term counted once per user.
pub(crate) fn f_of_parts(c: &LinkCaches, w_mat: &[CMat], v_mat: &CMat, p: &[f64]) -> f64 {
    let mut f = 0.0;
    for k in 0..c.k_d() {
        f += dl_full_arg(c, w_mat, v_mat, p, k).log2();
    }
    for k in 0..c.k_u() {
        f += ul_full_arg(c, w_mat, v_mat, p, k).log2();
    }
    if c.k_e() > 0 {
        let terms = c.eve_terms(v_mat);
        f += (c.k_d() + c.k_u()) as f64 * terms.product.log2();
    }
    f
}

/// The `g` part: interference-only logs plus the eavesdropper numerator
/// logs, so that `f - g` equals the unclamped sum of secrecy rates.
pub(crate) fn g_of_parts(c: &LinkCaches, w_mat: &[CMat], v_mat: &CMat, p: &[f64]) -> f64 {
    let mut g = 0.0;
    for k in 0..c.k_d() {
        g += dl_interference_arg(c, w_mat, v_mat, p, k).log2();
    }
    for k in 0..c.k_u() {
        g += ul_interference_arg(c, w_mat, v_mat, p, k).log2();
    }
    if c.k_e() > 0 {
        let terms = c.eve_terms(v_mat);
        for k in 0..c.k_d() {
            let num: f64 = (0..c.k_e())
                .map(|i| trace_prod_re(&w_mat[k], &c.h_be_outer[i]) * terms.leave_one_out[i])
                .sum();
            g += (terms.product + num).log2();
        }
        for k in 0..c.k_u() {
            let num: f64 = (0..c.k_e())
                .map(|i| c.h_ue_sq[k][i] * p[k] * terms.leave_one_out[i])
                .sum();
            g += (terms.product + num).log2();
        }
    }
    g
}

pub fn f_value(ctx: &ObjectiveContext) -> f64 {
    f_of_parts(&ctx.caches, &ctx.w_mat, &ctx.v_mat, &ctx.p)
}

pub fn g_value(ctx: &ObjectiveContext) -> f64 {
    g_of_parts(&ctx.caches, &ctx.w_mat, &ctx.v_mat, &ctx.p)
}

/// Unclamped objective `f - g`; equals the sum of per-user rate differences
/// without the positive-part clamp.
pub fn unclamped_ssr(ctx: &ObjectiveContext) -> f64 {
    f_value(ctx) - g_value(ctx)
}
