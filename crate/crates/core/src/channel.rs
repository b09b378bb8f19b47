//! Field-response channel construction.
//!
//! Channel responses are deterministic functions of the movable-antenna
//! positions: per-antenna field-response vectors (unit-modulus phase factors,
//! one per propagation path) are combined with path-response gains measured
//! between the region origins. Random realizations for Monte-Carlo runs are
//! drawn by [`sample_geometry_channels`].
//!
//! Coordinates are in multiples of the carrier wavelength throughout.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::{C64, CMat, CVec};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Transmit and receive antenna coordinates (the position decision variable).
///
/// The type itself permits infeasible layouts -- the swarm explores them --
/// and exposes [`AntennaLayout::is_feasible`] for the constraint check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaLayout {
    pub tx: Vec<[f64; 2]>,
    pub rx: Vec<[f64; 2]>,
}

impl AntennaLayout {
    pub fn new(tx: Vec<[f64; 2]>, rx: Vec<[f64; 2]>) -> Self {
        Self { tx, rx }
    }

    /// Flatten to `[t_1x, t_1y, ..., r_1x, r_1y, ...]`.
    pub fn to_flat(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(2 * (self.tx.len() + self.rx.len()));
        for p in self.tx.iter().chain(self.rx.iter()) {
            v.push(p[0]);
            v.push(p[1]);
        }
        DVector::from_vec(v)
    }

    pub fn from_flat(u: &[f64], num_tx: usize, num_rx: usize) -> Result<Self> {
        let expected = 2 * (num_tx + num_rx);
        if u.len() != expected {
            return Err(Error::Dimension {
                what: "flattened antenna positions",
                expected,
                got: u.len(),
            });
        }
        let tx = (0..num_tx).map(|i| [u[2 * i], u[2 * i + 1]]).collect();
        let rx = (0..num_rx)
            .map(|i| [u[2 * (num_tx + i)], u[2 * (num_tx + i) + 1]])
            .collect();
        Ok(Self { tx, rx })
    }

    /// Smallest pairwise distance on one side; infinity for fewer than two
    /// antennas.
    pub fn min_spacing(points: &[[f64; 2]]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let dx = points[i][0] - points[j][0];
                let dy = points[i][1] - points[j][1];
                best = best.min((dx * dx + dy * dy).sqrt());
            }
        }
        best
    }

    /// All coordinates inside the box and all same-side pairs at least the
    /// minimum distance apart.
    pub fn is_feasible(&self, cfg: &SystemConfig) -> bool {
        let half = cfg.region_size / 2.0;
        let in_box = self
            .tx
            .iter()
            .chain(self.rx.iter())
            .all(|p| p[0].abs() <= half && p[1].abs() <= half);
        in_box
            && Self::min_spacing(&self.tx) >= cfg.min_distance
            && Self::min_spacing(&self.rx) >= cfg.min_distance
    }
}

/// Per-path elevation and azimuth angles for one link endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAngles {
    pub elevation: Vec<f64>,
    pub azimuth: Vec<f64>,
}

impl LinkAngles {
    pub fn new(elevation: Vec<f64>, azimuth: Vec<f64>) -> Self {
        assert_eq!(elevation.len(), azimuth.len());
        Self { elevation, azimuth }
    }

    pub fn len(&self) -> usize {
        self.elevation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elevation.is_empty()
    }
}

/// Angles, path-response vector and per-entry variance for one user link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGain {
    pub angles: LinkAngles,
    pub prv: CVec,
    /// Variance each path-response entry was drawn with; consumed by the
    /// field-response-error perturbation.
    pub prv_entry_var: f64,
}

/// Position-independent channel state: path angles, the self-interference
/// path-response matrix, per-terminal path-response vectors, and the scalar
/// user-to-user / user-to-eavesdropper channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGains {
    pub si_tx_angles: LinkAngles,
    pub si_rx_angles: LinkAngles,
    /// Path-response matrix of the self-interference link (rx paths x tx
    /// paths). Diagonal under the geometry model, but assembly supports a
    /// dense matrix.
    pub si_prm: CMat,
    pub si_prm_entry_var: f64,
    pub ub: Vec<LinkGain>,
    pub bd: Vec<LinkGain>,
    pub be: Vec<LinkGain>,
    /// Scalar channel from uplink user to downlink user, `[k_u][k_d]`.
    pub h_ud: Vec<Vec<C64>>,
    /// Scalar channel from uplink user to eavesdropper, `[k_u][k_e]`.
    pub h_ue: Vec<Vec<C64>>,
}

/// Channels materialized at a concrete antenna layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Self-interference matrix, rx antennas x tx antennas.
    pub h_si: CMat,
    pub h_ub: Vec<CVec>,
    pub h_bd: Vec<CVec>,
    pub h_be: Vec<CVec>,
    pub h_ud: Vec<Vec<C64>>,
    pub h_ue: Vec<Vec<C64>>,
}

impl ChannelSet {
    pub fn num_tx(&self) -> usize {
        self.h_si.ncols()
    }

    pub fn num_rx(&self) -> usize {
        self.h_si.nrows()
    }

    pub fn k_u(&self) -> usize {
        self.h_ub.len()
    }

    pub fn k_d(&self) -> usize {
        self.h_bd.len()
    }

    pub fn k_e(&self) -> usize {
        self.h_be.len()
    }
}

/// Which end of a link the movable antennas sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Transmit,
    Receive,
}

/// Propagation-distance difference of one path between `pos` and the region
/// origin: `x sin(theta) cos(phi) + y cos(theta)`.
pub fn phase_offset(pos: [f64; 2], elevation: f64, azimuth: f64) -> f64 {
    pos[0] * elevation.sin() * azimuth.cos() + pos[1] * elevation.cos()
}

/// Field-response vector at `pos`: entry `l` is `exp(j 2 pi / lambda *
/// phase_offset(pos, theta_l, phi_l))`. Every entry has unit modulus.
pub fn field_response_vector(pos: [f64; 2], angles: &LinkAngles, wavelength: f64) -> CVec {
    let k = TWO_PI / wavelength;
    CVec::from_iterator(
        angles.len(),
        angles
            .elevation
            .iter()
            .zip(&angles.azimuth)
            .map(|(&th, &ph)| C64::from_polar(1.0, k * phase_offset(pos, th, ph))),
    )
}

fn field_response_matrix(positions: &[[f64; 2]], angles: &LinkAngles, wavelength: f64) -> CMat {
    let l = angles.len();
    let mut m = CMat::zeros(l, positions.len());
    for (n, &pos) in positions.iter().enumerate() {
        m.set_column(n, &field_response_vector(pos, angles, wavelength));
    }
    m
}

/// Self-interference channel `F^H Sigma G` where `F`/`G` stack the receive
/// and transmit field-response vectors column-wise.
pub fn assemble_si_channel(
    layout: &AntennaLayout,
    gains: &ChannelGains,
    wavelength: f64,
) -> Result<CMat> {
    if gains.si_prm.nrows() != gains.si_rx_angles.len() {
        return Err(Error::Dimension {
            what: "self-interference path-response rows",
            expected: gains.si_rx_angles.len(),
            got: gains.si_prm.nrows(),
        });
    }
    if gains.si_prm.ncols() != gains.si_tx_angles.len() {
        return Err(Error::Dimension {
            what: "self-interference path-response columns",
            expected: gains.si_tx_angles.len(),
            got: gains.si_prm.ncols(),
        });
    }
    let f = field_response_matrix(&layout.rx, &gains.si_rx_angles, wavelength);
    let g = field_response_matrix(&layout.tx, &gains.si_tx_angles, wavelength);
    Ok(f.adjoint() * &gains.si_prm * g)
}

/// Channel of a single-antenna terminal against the movable side: stacks the
/// per-antenna field-response vectors into `M` and returns `M^H p`.
pub fn assemble_link_channel(
    positions: &[[f64; 2]],
    angles: &LinkAngles,
    prv: &CVec,
    _side: Side,
    wavelength: f64,
) -> Result<CVec> {
    if prv.len() != angles.len() {
        return Err(Error::Dimension {
            what: "path-response vector",
            expected: angles.len(),
            got: prv.len(),
        });
    }
    let m = field_response_matrix(positions, angles, wavelength);
    Ok(m.adjoint() * prv)
}

/// Materialize all channel families at a layout. Pure: identical inputs give
/// bit-identical outputs. Layout feasibility is not required.
pub fn materialize(
    layout: &AntennaLayout,
    gains: &ChannelGains,
    wavelength: f64,
) -> Result<ChannelSet> {
    let h_si = assemble_si_channel(layout, gains, wavelength)?;
    let h_ub = gains
        .ub
        .iter()
        .map(|g| assemble_link_channel(&layout.rx, &g.angles, &g.prv, Side::Receive, wavelength))
        .collect::<Result<Vec<_>>>()?;
    let h_bd = gains
        .bd
        .iter()
        .map(|g| assemble_link_channel(&layout.tx, &g.angles, &g.prv, Side::Transmit, wavelength))
        .collect::<Result<Vec<_>>>()?;
    let h_be = gains
        .be
        .iter()
        .map(|g| assemble_link_channel(&layout.tx, &g.angles, &g.prv, Side::Transmit, wavelength))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelSet {
        h_si,
        h_ub,
        h_bd,
        h_be,
        h_ud: gains.h_ud.clone(),
        h_ue: gains.h_ue.clone(),
    })
}

/// Distances (meters) between the base station and each terminal, and between
/// uplink users and downlink users / eavesdroppers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalDistances {
    pub ul: Vec<f64>,
    pub dl: Vec<f64>,
    pub eve: Vec<f64>,
    /// `[k_u][k_d]`
    pub ud: Vec<Vec<f64>>,
    /// `[k_u][k_e]`
    pub ue: Vec<Vec<f64>>,
}

impl TerminalDistances {
    fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        let all_positive = self
            .ul
            .iter()
            .chain(&self.dl)
            .chain(&self.eve)
            .chain(self.ud.iter().flatten())
            .chain(self.ue.iter().flatten())
            .all(|&d| d > 0.0);
        if !all_positive {
            return Err(Error::Infeasible("all distances must be positive".into()));
        }
        for (what, got, expected) in [
            ("uplink distances", self.ul.len(), cfg.k_u),
            ("downlink distances", self.dl.len(), cfg.k_d),
            ("eavesdropper distances", self.eve.len(), cfg.k_e),
        ] {
            if got != expected {
                return Err(Error::Config(format!(
                    "{what}: expected {expected}, got {got}"
                )));
            }
        }
        Ok(())
    }
}

/// Complex Gaussian sample with total variance `var`.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

fn sample_angles<R: Rng + ?Sized>(rng: &mut R, l: usize) -> LinkAngles {
    let elevation = (0..l)
        .map(|_| rng.random_range(0.0..=std::f64::consts::PI))
        .collect();
    let azimuth = (0..l)
        .map(|_| rng.random_range(0.0..=std::f64::consts::PI))
        .collect();
    LinkAngles { elevation, azimuth }
}

fn sample_link<R: Rng + ?Sized>(rng: &mut R, cfg: &SystemConfig, dist: f64) -> LinkGain {
    let l = cfg.num_paths;
    let angles = sample_angles(rng, l);
    let var = cfg.ref_path_loss * dist.powf(-cfg.path_loss_exp) / l as f64;
    let prv = CVec::from_iterator(l, (0..l).map(|_| complex_gaussian(rng, var)));
    LinkGain {
        angles,
        prv,
        prv_entry_var: var,
    }
}

/// Draw a random channel realization under the geometry model: a diagonal
/// self-interference path-response matrix with per-entry variance `rho / L`,
/// path-response entries with variance `rho_0 d^-alpha / L`, angles i.i.d.
/// uniform on `[0, pi]`, and single-tap scalar channels between terminals.
pub fn sample_geometry_channels<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    distances: &TerminalDistances,
    rng: &mut R,
) -> Result<ChannelGains> {
    distances.validate(cfg)?;
    let l = cfg.num_paths;
    let si_tx_angles = sample_angles(rng, l);
    let si_rx_angles = sample_angles(rng, l);
    let si_var = cfg.si_loss / l as f64;
    let mut si_prm = CMat::zeros(l, l);
    for i in 0..l {
        si_prm[(i, i)] = complex_gaussian(rng, si_var);
    }
    let ub = distances
        .ul
        .iter()
        .map(|&d| sample_link(rng, cfg, d))
        .collect();
    let bd = distances
        .dl
        .iter()
        .map(|&d| sample_link(rng, cfg, d))
        .collect();
    let be = distances
        .eve
        .iter()
        .map(|&d| sample_link(rng, cfg, d))
        .collect();
    let scalar = |rng: &mut R, d: f64| {
        complex_gaussian(rng, cfg.ref_path_loss * d.powf(-cfg.path_loss_exp))
    };
    let h_ud = distances
        .ud
        .iter()
        .map(|row| row.iter().map(|&d| scalar(rng, d)).collect())
        .collect();
    let h_ue = distances
        .ue
        .iter()
        .map(|row| row.iter().map(|&d| scalar(rng, d)).collect())
        .collect();
    Ok(ChannelGains {
        si_tx_angles,
        si_rx_angles,
        si_prm,
        si_prm_entry_var: si_var,
        ub,
        bd,
        be,
        h_ud,
        h_ue,
    })
}

/// One family of field-response estimation errors. Exactly one family is
/// perturbed per call; the other two stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FriError {
    /// Additive complex Gaussian noise on every path-response entry, with
    /// variance `eta` times the entry's own variance.
    PathResponse { normalized_variance: f64 },
    /// Additive uniform noise on the departure-side angles, clipped to
    /// `[0, pi]`.
    Aod { max_error: f64 },
    /// Additive uniform noise on the arrival-side angles, clipped to
    /// `[0, pi]`.
    Aoa { max_error: f64 },
}

fn perturb_angles<R: Rng + ?Sized>(angles: &mut LinkAngles, delta: f64, rng: &mut R) {
    if delta == 0.0 {
        return;
    }
    for a in angles.elevation.iter_mut().chain(angles.azimuth.iter_mut()) {
        *a = (*a + rng.random_range(-delta..=delta)).clamp(0.0, std::f64::consts::PI);
    }
}

/// Perturbed copy of the gains under one estimation-error family.
pub fn perturb_fri<R: Rng + ?Sized>(
    gains: &ChannelGains,
    error: &FriError,
    rng: &mut R,
) -> Result<ChannelGains> {
    let mut out = gains.clone();
    match *error {
        FriError::PathResponse { normalized_variance: eta } => {
            if eta < 0.0 {
                return Err(Error::Config("normalized variance must be >= 0".into()));
            }
            if eta > 0.0 {
                // Off-diagonal path-response entries were drawn with zero
                // variance and therefore receive zero noise.
                let l = out.si_prm.nrows().min(out.si_prm.ncols());
                for i in 0..l {
                    out.si_prm[(i, i)] += complex_gaussian(rng, eta * out.si_prm_entry_var);
                }
                for link in out
                    .ub
                    .iter_mut()
                    .chain(out.bd.iter_mut())
                    .chain(out.be.iter_mut())
                {
                    let var = eta * link.prv_entry_var;
                    for e in link.prv.iter_mut() {
                        *e += complex_gaussian(rng, var);
                    }
                }
            }
        }
        FriError::Aod { max_error } => {
            if max_error < 0.0 {
                return Err(Error::Config("angle error bound must be >= 0".into()));
            }
            perturb_angles(&mut out.si_tx_angles, max_error, rng);
            for link in out.bd.iter_mut().chain(out.be.iter_mut()) {
                perturb_angles(&mut link.angles, max_error, rng);
            }
        }
        FriError::Aoa { max_error } => {
            if max_error < 0.0 {
                return Err(Error::Config("angle error bound must be >= 0".into()));
            }
            perturb_angles(&mut out.si_rx_angles, max_error, rng);
            for link in out.ub.iter_mut() {
                perturb_angles(&mut link.angles, max_error, rng);
            }
        }
    }
    Ok(out)
}

// --- serialization (complex numbers as [re, im] pairs) ---

#[derive(Serialize, Deserialize)]
struct LinkGainDoc {
    elevation: Vec<f64>,
    azimuth: Vec<f64>,
    prv: Vec<[f64; 2]>,
    prv_entry_var: f64,
}

#[derive(Serialize, Deserialize)]
struct GainsDoc {
    si_tx_elevation: Vec<f64>,
    si_tx_azimuth: Vec<f64>,
    si_rx_elevation: Vec<f64>,
    si_rx_azimuth: Vec<f64>,
    /// Row-major rows of the path-response matrix.
    si_prm: Vec<Vec<[f64; 2]>>,
    si_prm_entry_var: f64,
    ub: Vec<LinkGainDoc>,
    bd: Vec<LinkGainDoc>,
    be: Vec<LinkGainDoc>,
    h_ud: Vec<Vec<[f64; 2]>>,
    h_ue: Vec<Vec<[f64; 2]>>,
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl From<&LinkGain> for LinkGainDoc {
    fn from(g: &LinkGain) -> Self {
        Self {
            elevation: g.angles.elevation.clone(),
            azimuth: g.angles.azimuth.clone(),
            prv: g.prv.iter().map(pair).collect(),
            prv_entry_var: g.prv_entry_var,
        }
    }
}

impl From<LinkGainDoc> for LinkGain {
    fn from(d: LinkGainDoc) -> Self {
        Self {
            angles: LinkAngles {
                elevation: d.elevation,
                azimuth: d.azimuth,
            },
            prv: CVec::from_iterator(d.prv.len(), d.prv.into_iter().map(unpair)),
            prv_entry_var: d.prv_entry_var,
        }
    }
}

impl From<&ChannelGains> for GainsDoc {
    fn from(g: &ChannelGains) -> Self {
        Self {
            si_tx_elevation: g.si_tx_angles.elevation.clone(),
            si_tx_azimuth: g.si_tx_angles.azimuth.clone(),
            si_rx_elevation: g.si_rx_angles.elevation.clone(),
            si_rx_azimuth: g.si_rx_angles.azimuth.clone(),
            si_prm: (0..g.si_prm.nrows())
                .map(|i| (0..g.si_prm.ncols()).map(|j| pair(&g.si_prm[(i, j)])).collect())
                .collect(),
            si_prm_entry_var: g.si_prm_entry_var,
            ub: g.ub.iter().map(Into::into).collect(),
            bd: g.bd.iter().map(Into::into).collect(),
            be: g.be.iter().map(Into::into).collect(),
            h_ud: g
                .h_ud
                .iter()
                .map(|row| row.iter().map(pair).collect())
                .collect(),
            h_ue: g
                .h_ue
                .iter()
                .map(|row| row.iter().map(pair).collect())
                .collect(),
        }
    }
}

impl From<GainsDoc> for ChannelGains {
    fn from(d: GainsDoc) -> Self {
        let rows = d.si_prm.len();
        let cols = d.si_prm.first().map_or(0, |r| r.len());
        let si_prm = DMatrix::from_fn(rows, cols, |i, j| unpair(d.si_prm[i][j]));
        Self {
            si_tx_angles: LinkAngles {
                elevation: d.si_tx_elevation,
                azimuth: d.si_tx_azimuth,
            },
            si_rx_angles: LinkAngles {
                elevation: d.si_rx_elevation,
                azimuth: d.si_rx_azimuth,
            },
            si_prm,
            si_prm_entry_var: d.si_prm_entry_var,
            ub: d.ub.into_iter().map(Into::into).collect(),
            bd: d.bd.into_iter().map(Into::into).collect(),
            be: d.be.into_iter().map(Into::into).collect(),
            h_ud: d
                .h_ud
                .into_iter()
                .map(|row| row.into_iter().map(unpair).collect())
                .collect(),
            h_ue: d
                .h_ue
                .into_iter()
                .map(|row| row.into_iter().map(unpair).collect())
                .collect(),
        }
    }
}

impl Serialize for ChannelGains {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GainsDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChannelGains {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        GainsDoc::deserialize(deserializer).map(Into::into)
    }
}
