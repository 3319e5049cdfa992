//! Slot-level Monte Carlo engine and campaign aggregation.
//!
//! Each topology lives for one epoch: the centralized allocation is computed
//! once, then every channel is simulated for T_e slots. DUE power decisions
//! use quantized fade feedback; SINR outcomes use the exact fades. Campaigns
//! average per-channel throughputs over many independent topologies, each
//! driven by its own counter-derived RNG stream so results are bit-identical
//! regardless of how many workers run them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::allocation::{
    build_matrix, geo_allocation, pair_context, select_allocation, GeoParams, PowerSpec,
};
use crate::policy::{PolicyContext, SystemState};
use crate::system::{dist, generate_topology, SystemError, SystemParams, Topology};

/// Fade quantization applied to the DUE's observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    pub step: f64,
    pub cap: f64,
}

impl Default for Quantizer {
    fn default() -> Self {
        Quantizer { step: 0.01, cap: 5.0 }
    }
}

impl Quantizer {
    pub fn quantize(&self, h: f64) -> f64 {
        ((h / self.step).round() * self.step).min(self.cap)
    }
}

/// What runs on one uplink channel during an epoch.
#[derive(Debug, Clone)]
pub enum ChannelKind {
    /// Non-orthogonal share under the MR policy (λ already tuned).
    MrShare { ctx: PolicyContext },
    /// GEO-style non-orthogonal share: CUE every slot, DUE direct to its
    /// peer in alternate slots, both inverted to ρ, no blockage protocol.
    GeoShare { gamma_sb: f64, gamma_ud: f64 },
    /// Orthogonal TDMA relay: CUE in even slots, DUE uplink in odd slots.
    Tdma,
    /// No DUE on this channel.
    CueOnly,
}

/// Per-channel delivered-packet rates over one epoch.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChannelRates {
    pub cue: f64,
    pub due: f64,
}

/// Runs `epoch_len` slots of one channel. The four fades are drawn in a
/// fixed order (h_UD, h_UB, h_SD, h_SB) whenever a DUE shares the channel,
/// keeping the stream layout independent of protocol state.
pub fn simulate_channel<R: Rng + ?Sized>(
    kind: &ChannelKind,
    params: &SystemParams,
    quant: &Quantizer,
    rng: &mut R,
) -> ChannelRates {
    let te = params.epoch_len;
    let mut cue_ok = 0u32;
    let mut due_ok = 0u32;
    match kind {
        ChannelKind::MrShare { ctx } => {
            let mut blocked = 0u32;
            for _ in 0..te {
                let h_ud = crate::system::sample_fading(rng);
                let h_ub = crate::system::sample_fading(rng);
                let h_sd = crate::system::sample_fading(rng);
                let h_sb = crate::system::sample_fading(rng);
                if blocked > 0 {
                    blocked -= 1;
                    if ctx.gamma_ub * h_ub >= params.theta {
                        cue_ok += 1;
                    }
                    continue;
                }
                let state =
                    SystemState::new(quant.quantize(h_ud), quant.quantize(h_ub));
                let level = ctx.policy_argmax(state);
                if level > 0 {
                    let scale = 2f64.powi(level as i32 - 1);
                    let sinr_b = ctx.gamma_ub * h_ub / (1.0 + ctx.gamma_sb * scale * h_sb);
                    let sinr_d = ctx.gamma_sd * scale * h_sd / (1.0 + ctx.gamma_ud * h_ud);
                    if sinr_b >= params.theta {
                        cue_ok += 1;
                    }
                    if sinr_d >= params.theta {
                        due_ok += 1;
                    }
                    if sinr_b < params.vartheta {
                        blocked = params.blockage_w;
                    }
                } else if ctx.gamma_ub * h_ub >= params.theta {
                    cue_ok += 1;
                }
            }
        }
        ChannelKind::GeoShare { gamma_sb, gamma_ud } => {
            for t in 0..te {
                let h_ud = crate::system::sample_fading(rng);
                let h_ub = crate::system::sample_fading(rng);
                let h_sd = crate::system::sample_fading(rng);
                let h_sb = crate::system::sample_fading(rng);
                if t % 2 == 0 {
                    // DUE slot: both transmit, mutual interference.
                    if params.rho * h_ub / (1.0 + gamma_sb * h_sb) >= params.theta {
                        cue_ok += 1;
                    }
                    if params.rho * h_sd / (1.0 + gamma_ud * h_ud) >= params.theta {
                        due_ok += 1;
                    }
                } else if params.rho * h_ub >= params.theta {
                    cue_ok += 1;
                }
            }
        }
        ChannelKind::Tdma => {
            for t in 0..te {
                let h = crate::system::sample_fading(rng);
                if params.rho * h >= params.theta {
                    if t % 2 == 0 {
                        cue_ok += 1;
                    } else {
                        due_ok += 1;
                    }
                }
            }
        }
        ChannelKind::CueOnly => {
            for _ in 0..te {
                let h = crate::system::sample_fading(rng);
                if params.rho * h >= params.theta {
                    cue_ok += 1;
                }
            }
        }
    }
    ChannelRates { cue: cue_ok as f64 / te as f64, due: due_ok as f64 / te as f64 }
}

/// Allocation scheme driving a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Adaptive channel/mode/power selection on the MR policy.
    Cmp,
    /// Geographic mode selection baseline.
    Geo,
    /// No D2D: every DUE is relayed orthogonally.
    None,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Cmp => "CMP",
            Scheme::Geo => "GEO",
            Scheme::None => "NONE",
        }
    }
}

/// One campaign parameter point.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub scheme: Scheme,
    pub n_topologies: usize,
    pub seed: u64,
    pub n_cues: usize,
    pub n_dues: usize,
    pub power: PowerSpec,
    pub geo: GeoParams,
    pub quant: Quantizer,
    /// Quadrature resolution used while tuning λ per pair.
    pub search_h_max: f64,
    pub search_step: f64,
}

/// Campaign-level averages (per channel, packets/slot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub omega_c: f64,
    pub omega_d: f64,
    pub omega_total: f64,
    pub stderr_c: f64,
    pub stderr_d: f64,
    pub n_topologies: usize,
    pub n_slots: u64,
}

/// Builds the per-channel plan for one topology under the given scheme.
pub fn plan_channels(
    topology: &Topology,
    params: &SystemParams,
    cfg: &CampaignConfig,
) -> Vec<ChannelKind> {
    let k = topology.cues.len();
    match cfg.scheme {
        Scheme::None => (0..k)
            .map(|i| if i < topology.due_pairs.len() { ChannelKind::Tdma } else { ChannelKind::CueOnly })
            .collect(),
        Scheme::Geo => {
            let assignment = geo_allocation(topology, params, cfg.geo);
            (0..k)
                .map(|i| match assignment.pairing[i] {
                    Some(j) if assignment.mode[i] => {
                        let (s, d) = topology.due_pairs[j];
                        let bs = [0.0, 0.0];
                        ChannelKind::GeoShare {
                            gamma_sb: params.rho
                                * (dist(s, d) / dist(s, bs)).powf(params.alpha),
                            gamma_ud: params.rho
                                * (dist(topology.cues[i], bs) / dist(topology.cues[i], d))
                                    .powf(params.alpha),
                        }
                    }
                    Some(_) => ChannelKind::Tdma,
                    None => ChannelKind::CueOnly,
                })
                .collect()
        }
        Scheme::Cmp => {
            let matrix =
                build_matrix(topology, params, cfg.power, cfg.search_h_max, cfg.search_step);
            let assignment = select_allocation(&matrix, params);
            (0..k)
                .map(|i| match assignment.pairing[i] {
                    Some(j) if assignment.mode[i] => {
                        let mut ctx =
                            pair_context(topology.cues[i], topology.due_pairs[j], params, cfg.power);
                        ctx.lambda = matrix.lambda_stars[i * matrix.m + j];
                        ChannelKind::MrShare { ctx }
                    }
                    Some(_) => ChannelKind::Tdma,
                    None => ChannelKind::CueOnly,
                })
                .collect()
        }
    }
}

/// Per-topology throughput pair (Ω_C, Ω_D contributions).
fn run_topology(
    index: u64,
    params: &SystemParams,
    cfg: &CampaignConfig,
) -> Result<(f64, f64), SystemError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index + 1);
    let topology = generate_topology(&mut rng, cfg.n_cues, cfg.n_dues, params)?;
    let channels = plan_channels(&topology, params, cfg);
    let mut cue_sum = 0.0;
    let mut due_sum = 0.0;
    for kind in &channels {
        let rates = simulate_channel(kind, params, &cfg.quant, &mut rng);
        cue_sum += rates.cue;
        due_sum += rates.due;
    }
    let k = cfg.n_cues.max(1) as f64;
    let m = cfg.n_dues.max(1) as f64;
    Ok((cue_sum / k, due_sum / m))
}

/// Runs a full campaign: independent topologies in parallel, fixed-order
/// reduction, deterministic for a given seed.
pub fn run_campaign(cfg: &CampaignConfig, params: &SystemParams) -> Result<Metrics, SystemError> {
    params.validate()?;
    let per_topology: Result<Vec<(f64, f64)>, SystemError> = (0..cfg.n_topologies as u64)
        .into_par_iter()
        .map(|t| run_topology(t, params, cfg))
        .collect();
    let per_topology = per_topology?;
    let n = per_topology.len().max(1) as f64;
    let mean = |f: fn(&(f64, f64)) -> f64| per_topology.iter().map(f).sum::<f64>() / n;
    let oc = mean(|p| p.0);
    let od = mean(|p| p.1);
    let var = |m: f64, f: fn(&(f64, f64)) -> f64| {
        per_topology.iter().map(|p| (f(p) - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
    };
    Ok(Metrics {
        omega_c: oc,
        omega_d: od,
        omega_total: oc + od,
        stderr_c: (var(oc, |p| p.0) / n).sqrt(),
        stderr_d: (var(od, |p| p.1) / n).sqrt(),
        n_topologies: per_topology.len(),
        n_slots: per_topology.len() as u64 * params.epoch_len as u64,
    })
}

/// Convenience: long-horizon Monte Carlo estimate of (τ, σ) for a single
/// MR-policy channel, with standard errors computed from per-block rates.
/// Used to cross-validate the analytic expressions.
pub fn estimate_rates_mc(
    ctx: &PolicyContext,
    params: &SystemParams,
    quant: Option<&Quantizer>,
    n_slots: u64,
    seed: u64,
) -> (f64, f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocked = 0u32;
    let mut cue_ok = 0u64;
    let mut due_ok = 0u64;
    // Block bookkeeping for standard errors (blocks of 1000 slots).
    const BLOCK: u64 = 1000;
    let mut block_cue = Vec::new();
    let mut block_due = Vec::new();
    let mut bc = 0u64;
    let mut bd = 0u64;
    for t in 0..n_slots {
        let h_ud = crate::system::sample_fading(&mut rng);
        let h_ub = crate::system::sample_fading(&mut rng);
        let h_sd = crate::system::sample_fading(&mut rng);
        let h_sb = crate::system::sample_fading(&mut rng);
        if blocked > 0 {
            blocked -= 1;
            if ctx.gamma_ub * h_ub >= params.theta {
                cue_ok += 1;
                bc += 1;
            }
        } else {
            let (hd, hb) = match quant {
                Some(q) => (q.quantize(h_ud), q.quantize(h_ub)),
                None => (h_ud, h_ub),
            };
            let level = ctx.policy_argmax(SystemState::new(hd, hb));
            if level > 0 {
                let scale = 2f64.powi(level as i32 - 1);
                let sinr_b = ctx.gamma_ub * h_ub / (1.0 + ctx.gamma_sb * scale * h_sb);
                let sinr_d = ctx.gamma_sd * scale * h_sd / (1.0 + ctx.gamma_ud * h_ud);
                if sinr_b >= params.theta {
                    cue_ok += 1;
                    bc += 1;
                }
                if sinr_d >= params.theta {
                    due_ok += 1;
                    bd += 1;
                }
                if sinr_b < params.vartheta {
                    blocked = params.blockage_w;
                }
            } else if ctx.gamma_ub * h_ub >= params.theta {
                cue_ok += 1;
                bc += 1;
            }
        }
        if (t + 1) % BLOCK == 0 {
            block_cue.push(bc as f64 / BLOCK as f64);
            block_due.push(bd as f64 / BLOCK as f64);
            bc = 0;
            bd = 0;
        }
    }
    let nb = block_cue.len().max(1) as f64;
    let sigma_hat = cue_ok as f64 / n_slots as f64;
    let tau_hat = due_ok as f64 / n_slots as f64;
    let se = |blocks: &[f64], m: f64| {
        if blocks.len() < 2 {
            return f64::INFINITY;
        }
        let v = blocks.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (nb - 1.0);
        (v / nb).sqrt()
    };
    (tau_hat, sigma_hat, se(&block_due, tau_hat), se(&block_cue, sigma_hat))
}

/// Default campaign configuration matching the reference scenario.
pub fn default_config(scheme: Scheme) -> CampaignConfig {
    CampaignConfig {
        scheme,
        n_topologies: 1000,
        seed: 1,
        n_cues: 5,
        n_dues: 5,
        power: PowerSpec::TargetSnr { xi: 10f64.powf(0.4) },
        geo: GeoParams::default(),
        quant: Quantizer::default(),
        search_h_max: 14.0,
        search_step: 0.02,
    }
}
