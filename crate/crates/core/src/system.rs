//! Scenario constants, topology generation, link-budget computation and
//! fading/SINR primitives shared by all other modules.
//!
//! All SNR-like quantities are stored linear; dB conversions happen only at
//! I/O boundaries. Noise power is held in milliwatt.

use rand::Rng;
use thiserror::Error;

/// Cell-wide physical and protocol constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Path-loss exponent (> 2).
    pub alpha: f64,
    /// CUE target SNR at the base station, linear.
    pub rho: f64,
    /// Decoding threshold, linear.
    pub theta: f64,
    /// Warning threshold triggering a blockage, linear (defaults to `theta`).
    pub vartheta: f64,
    /// Noise power N_0 in milliwatt.
    pub noise_power: f64,
    /// Blockage duration W in slots (>= 1).
    pub blockage_w: u32,
    /// Epoch length T_e in slots.
    pub epoch_len: u32,
    /// Cell radius d_R in meters.
    pub cell_radius: f64,
    /// Maximum D2D link length d_L in meters.
    pub d2d_max_len: f64,
}

impl Default for SystemParams {
    /// Reference single-cell scenario: α=4, ρ=θ=ϑ=0 dB, N_0=−90 dBm,
    /// W=1, T_e=100, d_R=200 m, d_L=100 m.
    fn default() -> Self {
        SystemParams {
            alpha: 4.0,
            rho: 1.0,
            theta: 1.0,
            vartheta: 1.0,
            noise_power: 1e-9,
            blockage_w: 1,
            epoch_len: 100,
            cell_radius: 200.0,
            d2d_max_len: 100.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("topology sampling failed to converge after {0} rejections")]
    SamplingFailed(u64),
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), SystemError> {
        let bad = |m: &str| Err(SystemError::InvalidParam(m.into()));
        if !(self.alpha > 2.0) {
            return bad("alpha must exceed 2");
        }
        if !(self.rho > 0.0 && self.theta > 0.0 && self.vartheta > 0.0) {
            return bad("rho, theta, vartheta must be positive");
        }
        if !(self.noise_power > 0.0) {
            return bad("noise_power must be positive");
        }
        if self.blockage_w < 1 {
            return bad("blockage_w must be at least 1");
        }
        if !(self.d2d_max_len <= self.cell_radius) {
            return bad("d2d_max_len must not exceed cell_radius");
        }
        if !(self.cell_radius > 0.0 && self.d2d_max_len > 0.0) {
            return bad("radii must be positive");
        }
        Ok(())
    }
}

pub type Point = [f64; 2];

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Node positions for one cell. The base station sits at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub bs_pos: Point,
    pub cues: Vec<Point>,
    /// (source S, destination D) per D2D pair.
    pub due_pairs: Vec<(Point, Point)>,
}

const MAX_REJECTIONS: u64 = 1_000_000;

fn sample_disk<R: Rng + ?Sized>(
    rng: &mut R,
    center: Point,
    radius: f64,
    rejections: &mut u64,
) -> Result<Point, SystemError> {
    loop {
        let x = rng.gen_range(-radius..=radius);
        let y = rng.gen_range(-radius..=radius);
        if x * x + y * y <= radius * radius {
            return Ok([center[0] + x, center[1] + y]);
        }
        *rejections += 1;
        if *rejections > MAX_REJECTIONS {
            return Err(SystemError::SamplingFailed(*rejections));
        }
    }
}

/// Draws CUE and DUE-source positions uniformly over the cell disk; each DUE
/// destination is uniform over the d_L-disk around its source, re-drawn until
/// it falls inside the cell. Deterministic given the random stream.
pub fn generate_topology<R: Rng + ?Sized>(
    rng: &mut R,
    n_cues: usize,
    n_dues: usize,
    params: &SystemParams,
) -> Result<Topology, SystemError> {
    let bs = [0.0, 0.0];
    let mut rejections = 0u64;
    let mut cues = Vec::with_capacity(n_cues);
    for _ in 0..n_cues {
        cues.push(sample_disk(rng, bs, params.cell_radius, &mut rejections)?);
    }
    let mut due_pairs = Vec::with_capacity(n_dues);
    for _ in 0..n_dues {
        let s = sample_disk(rng, bs, params.cell_radius, &mut rejections)?;
        let d = loop {
            let d = sample_disk(rng, s, params.d2d_max_len, &mut rejections)?;
            if dist(d, bs) <= params.cell_radius {
                break d;
            }
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(SystemError::SamplingFailed(rejections));
            }
        };
        due_pairs.push((s, d));
    }
    Ok(Topology { bs_pos: bs, cues, due_pairs })
}

/// Channel-inversion transmit power (milliwatt) for a CUE at distance `d_ub`
/// from the base station: P_U = ρ d^α N_0.
pub fn cue_tx_power(d_ub: f64, params: &SystemParams) -> f64 {
    params.rho * d_ub.powf(params.alpha) * params.noise_power
}

/// Channel-inversion transmit power hitting target SNR `target` at distance `d`.
pub fn inversion_power(target: f64, d: f64, params: &SystemParams) -> f64 {
    target * d.powf(params.alpha) * params.noise_power
}

/// Normalized mean SNR of a link: γ = P d^{−α} / N_0.
pub fn link_gamma(tx_power: f64, d: f64, params: &SystemParams) -> f64 {
    tx_power * d.powf(-params.alpha) / params.noise_power
}

/// Instantaneous SINR: γ·fade / (1 + I/N_0).
pub fn sinr(gamma: f64, fade: f64, interference_over_noise: f64) -> f64 {
    gamma * fade / (1.0 + interference_over_noise)
}

/// Squared Rayleigh fade magnitude: Exp(1), unit mean.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], keeping the logarithm finite.
    -(1.0 - rng.gen::<f64>()).ln()
}
