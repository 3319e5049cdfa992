//! Centralized epoch-level mode and channel selection.
//!
//! The base station fills a K×M matrix of expected per-channel throughputs —
//! one row per CUE (channel), one column per DUE — and solves a maximum
//! weight bipartite matching over it. Each matched pair's preferred mode
//! (direct D2D share vs. orthogonal relaying through the base station) is
//! decided while the matrix is built.
//!
//! Also hosts the GEO baseline: mode selection from pure geometry, with the
//! base station pairing channels without any knowledge of cross-tier
//! interference (its defining weakness relative to the adaptive scheme).

use crate::policy::PolicyContext;
use crate::system::{dist, Point, SystemParams, Topology};
use crate::throughput::{lambda_star_general, lambda_star_n1, ClosedFormN1, LambdaStar};

/// How the DUE power level set is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerSpec {
    /// Single level (N=1) set by channel inversion to hit SNR `xi` at the
    /// D2D destination.
    TargetSnr { xi: f64 },
    /// N fixed levels `p_max`·2^{−i}, i = 0..N−1 (milliwatt), identical for
    /// all DUEs regardless of position.
    FixedLevels { p_max: f64, n_levels: u32 },
}

impl PowerSpec {
    pub fn n_levels(&self) -> u32 {
        match *self {
            PowerSpec::TargetSnr { .. } => 1,
            PowerSpec::FixedLevels { n_levels, .. } => n_levels,
        }
    }
}

/// Policy context for one (CUE, DUE) pair sharing a channel. The γ factors
/// for the DUE use its minimum power level.
pub fn pair_context(
    cue: Point,
    due: (Point, Point),
    params: &SystemParams,
    power: PowerSpec,
) -> PolicyContext {
    let (s, d) = due;
    let bs = [0.0, 0.0];
    let d_ub = dist(cue, bs);
    let d_ud = dist(cue, d);
    let d_sd = dist(s, d);
    let d_sb = dist(s, bs);
    let p_u = params.rho * d_ub.powf(params.alpha) * params.noise_power;
    let (p_s_min, n_levels) = match power {
        PowerSpec::TargetSnr { xi } => {
            (xi * d_sd.powf(params.alpha) * params.noise_power, 1)
        }
        PowerSpec::FixedLevels { p_max, n_levels } => {
            (p_max * 2f64.powi(1 - n_levels as i32), n_levels)
        }
    };
    PolicyContext {
        gamma_sd: p_s_min * d_sd.powf(-params.alpha) / params.noise_power,
        gamma_sb: p_s_min * d_sb.powf(-params.alpha) / params.noise_power,
        gamma_ud: p_u * d_ud.powf(-params.alpha) / params.noise_power,
        gamma_ub: params.rho,
        theta: params.theta,
        lambda: 1.0,
        n_levels,
    }
}

/// Throughput each terminal gets on an orthogonally shared (TDMA) channel.
pub fn d2b_throughput(params: &SystemParams) -> f64 {
    0.5 * (-params.theta / params.rho).exp()
}

/// Expected throughput matrix with per-entry mode preference and tuned λ.
#[derive(Debug, Clone)]
pub struct ThroughputMatrix {
    pub k: usize,
    pub m: usize,
    /// Row-major K×M matching weights (total channel throughput).
    pub entries: Vec<f64>,
    /// True where the pair would share non-orthogonally (D2D mode).
    pub mode_flags: Vec<bool>,
    pub lambda_stars: Vec<f64>,
    /// DUE / CUE expected rates backing each D2D-mode entry.
    pub taus: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl ThroughputMatrix {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }
}

/// Builds the matching matrix: for each (CUE, DUE) pair, tune λ to maximize
/// the DUE's throughput, then prefer the non-orthogonal share when it beats
/// the DUE's orthogonal fallback; otherwise the entry is the plain
/// CUE-alone channel rate.
pub fn build_matrix(
    topology: &Topology,
    params: &SystemParams,
    power: PowerSpec,
    search_h_max: f64,
    search_step: f64,
) -> ThroughputMatrix {
    let k = topology.cues.len();
    let m = topology.due_pairs.len();
    let tbar = d2b_throughput(params);
    let floor = 2.0 * tbar;
    let mut out = ThroughputMatrix {
        k,
        m,
        entries: vec![floor; k * m],
        mode_flags: vec![false; k * m],
        lambda_stars: vec![0.0; k * m],
        taus: vec![0.0; k * m],
        sigmas: vec![0.0; k * m],
    };
    for i in 0..k {
        for j in 0..m {
            let ctx = pair_context(topology.cues[i], topology.due_pairs[j], params, power);
            let ls = optimize_lambda(&ctx, params, power, search_h_max, search_step);
            let idx = i * m + j;
            out.lambda_stars[idx] = ls.lambda;
            out.taus[idx] = ls.tau;
            out.sigmas[idx] = ls.sigma;
            if ls.tau > tbar {
                out.entries[idx] = ls.tau + ls.sigma;
                out.mode_flags[idx] = true;
            }
        }
    }
    out
}

/// λ* for one pair: closed form for the single-inverted-level case, grid +
/// golden-section search otherwise. σ is filled in on the same quadrature
/// resolution either way.
pub fn optimize_lambda(
    ctx: &PolicyContext,
    params: &SystemParams,
    power: PowerSpec,
    search_h_max: f64,
    search_step: f64,
) -> LambdaStar {
    match power {
        PowerSpec::TargetSnr { xi } => {
            let cf = ClosedFormN1::new(
                params.theta,
                params.rho,
                xi,
                ctx.gamma_ud,
                ctx.gamma_sb,
                params.blockage_w,
            );
            let mut ls = lambda_star_n1(&cf);
            let mut c = *ctx;
            c.lambda = ls.lambda;
            let r = crate::throughput::evaluate(&c, params.blockage_w, search_h_max, search_step);
            ls.sigma = r.sigma;
            ls
        }
        PowerSpec::FixedLevels { .. } => {
            lambda_star_general(ctx, params.blockage_w, search_h_max, search_step)
        }
    }
}

/// One epoch's channel plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Per channel (CUE index): the DUE sharing it, if any.
    pub pairing: Vec<Option<usize>>,
    /// Per channel: true = non-orthogonal D2D share, false = TDMA relay.
    pub mode: Vec<bool>,
    pub total_weight: f64,
}

/// Maximum-weight one-to-one assignment between K rows and M columns.
///
/// Rectangular inputs are padded to a square: dummy columns carry `row_pad`
/// (a channel kept by its CUE alone), dummy rows carry 0 (a DUE left
/// unserved). Classic O(n³) Hungarian algorithm with row/column potentials
/// on the negated weights.
pub fn hungarian_match(k: usize, m: usize, weights: &[f64], row_pad: f64) -> (Vec<Option<usize>>, f64) {
    assert_eq!(weights.len(), k * m);
    // Pad with k dummy columns and m dummy rows so every row can opt out to
    // `row_pad` and every column can stay unmatched, whatever the shape.
    let n = k + m;
    // cost[i][j], minimization form.
    let cost = |i: usize, j: usize| -> f64 {
        if i < k && j < m {
            -weights[i * m + j]
        } else if i < k {
            -row_pad // real channel, dummy DUE: CUE keeps the channel
        } else {
            0.0 // dummy channel row
        }
    };
    // Potentials + augmenting path search, rows 1..=n, columns 1..=n.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut match_col = vec![0usize; n + 1]; // column -> row (1-based, 0 = free)
    for i in 1..=n {
        match_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path.
        while j0 != 0 {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        }
    }
    let mut pairing = vec![None; k];
    let mut total = 0.0;
    for j in 1..=n {
        let i = match_col[j];
        if i >= 1 && i <= k && j <= m {
            pairing[i - 1] = Some(j - 1);
            total += weights[(i - 1) * m + (j - 1)];
        } else if i >= 1 && i <= k {
            total += row_pad;
        }
    }
    (pairing, total)
}

/// Hungarian matching on a throughput matrix, translated into the per-channel
/// pairing and mode vectors.
pub fn select_allocation(matrix: &ThroughputMatrix, params: &SystemParams) -> Assignment {
    let pad = 2.0 * d2b_throughput(params);
    let (pairing, total_weight) = hungarian_match(matrix.k, matrix.m, &matrix.entries, pad);
    let mode = pairing
        .iter()
        .enumerate()
        .map(|(i, &p)| p.map(|j| matrix.mode_flags[i * matrix.m + j]).unwrap_or(false))
        .collect();
    Assignment { pairing, mode, total_weight }
}

/// Geographic mode-selection parameter.
#[derive(Debug, Clone, Copy)]
pub struct GeoParams {
    pub kappa: f64,
}

impl Default for GeoParams {
    fn default() -> Self {
        GeoParams { kappa: 0.8 }
    }
}

/// GEO mode test: a DUE goes direct when its own link is short relative to
/// its uplink distance, d_SD ≤ κ^{1/α}·d_SB.
pub fn geo_mode_select(topology: &Topology, params: &SystemParams, geo: GeoParams) -> Vec<bool> {
    let bs = [0.0, 0.0];
    let thresh = geo.kappa.powf(1.0 / params.alpha);
    topology
        .due_pairs
        .iter()
        .map(|&(s, d)| dist(s, d) <= thresh * dist(s, bs))
        .collect()
}

/// Expected per-slot rates of a GEO D2D channel: the CUE transmits every
/// slot; the DUE transmits directly to its peer in alternate slots at
/// inversion power targeting ρ, with mutual interference in those slots and
/// no blockage mechanism.
pub fn geo_expected_pair_throughput(
    cue: Point,
    due: (Point, Point),
    params: &SystemParams,
) -> (f64, f64) {
    let (s, d) = due;
    let bs = [0.0, 0.0];
    let e0 = (-params.theta / params.rho).exp();
    // Leak SNRs with both transmitters inverting to ρ at their receivers.
    let g_sb = params.rho * (dist(s, d) / dist(s, bs)).powf(params.alpha);
    let g_ud = params.rho * (dist(cue, bs) / dist(cue, d)).powf(params.alpha);
    let cue_rate = 0.5 * e0 * (1.0 + 1.0 / (1.0 + params.theta * g_sb / params.rho));
    let due_rate = 0.5 * e0 / (1.0 + params.theta * g_ud / params.rho);
    (cue_rate, due_rate)
}

/// GEO channel plan: the base station pairs channels by the same matching
/// machinery, but its entries ignore cross-tier interference (it never
/// learns the D2D link gains), so every D2D column weighs the same and the
/// pairing is effectively geometry-blind.
pub fn geo_allocation(topology: &Topology, params: &SystemParams, geo: GeoParams) -> Assignment {
    let k = topology.cues.len();
    let m = topology.due_pairs.len();
    let d2d = geo_mode_select(topology, params, geo);
    let tbar = d2b_throughput(params);
    let mut weights = vec![0.0; k * m];
    for i in 0..k {
        for (j, &flag) in d2d.iter().enumerate() {
            // Interference-blind expectations: full-rate CUE plus a
            // half-duplex DUE on D2D channels, plain TDMA otherwise.
            weights[i * m + j] = if flag { 3.0 * tbar } else { 2.0 * tbar };
        }
    }
    let (pairing, total_weight) = hungarian_match(k, m, &weights, 2.0 * tbar);
    let mode = pairing
        .iter()
        .map(|&p| p.map(|j| d2d[j]).unwrap_or(false))
        .collect();
    Assignment { pairing, mode, total_weight }
}
