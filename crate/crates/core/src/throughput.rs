//! Expected throughput of a CUE–DUE channel share under the MR policy.
//!
//! For a given blockage weight λ the DUE behaves as a renewal process:
//! transmission attempts interleaved with W-slot blockage penalties. Its
//! long-run throughput is τ(λ) = p_del / (1 + W·p_blo) where p_del and p_blo
//! integrate the per-level decoding and blockage probabilities over the
//! policy regions against the Exp(1)×Exp(1) fade density. The CUE's
//! throughput σ(λ) follows from an alternating blockage/transmission phase
//! argument.
//!
//! Three evaluation paths are provided:
//! - a reference 2D midpoint quadrature ([`integrate_del_blo`]),
//! - a fast semi-analytic path integrating one axis exactly
//!   ([`integrate_semianalytic`]),
//! - closed forms for the single-level (on/off) case ([`ClosedFormN1`]).

use crate::policy::{PolicyContext, SystemState};

/// Grid spec for the reference 2D midpoint quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Truncation bound on each fade axis; neglected tail mass < 2e^{−h_max}.
    pub h_max: f64,
    pub step: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { h_max: 12.0, step: 0.005 }
    }
}

/// Everything known about one (pair, λ) operating point.
#[derive(Debug, Clone, Copy)]
pub struct ThroughputResult {
    pub lambda: f64,
    pub tau: f64,
    pub sigma: f64,
    pub p_del: f64,
    pub p_blo: f64,
    pub p_tx: f64,
    /// Mean per-slot reward of the policy (decode minus λ-weighted blockage).
    pub reward: f64,
}

/// Reference quadrature of (p_del, p_blo, p_tx): midpoint rule over
/// [0, h_max]², cell level chosen by the policy argmax at the cell center.
///
/// Per-level probabilities are separable in the two axes, so they are
/// precomputed per row/column; the inner loop only forms utilities.
pub fn integrate_del_blo(ctx: &PolicyContext, quad: &QuadratureSpec) -> (f64, f64, f64) {
    if ctx.lambda == 0.0 {
        // Nothing penalizes blockages: the top level is always chosen.
        let pd = int_p_exp(ctx, ctx.n_levels, 0.0, f64::INFINITY);
        let pb = int_q_exp(ctx, ctx.n_levels, 0.0, f64::INFINITY);
        return (pd, pb, 1.0);
    }
    let n = ctx.n_levels as usize;
    let cells = (quad.h_max / quad.step).round() as usize;
    let mids: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * quad.step).collect();
    let ex: Vec<f64> = mids.iter().map(|x| (-x).exp()).collect();
    // p[i][col] over h_d, q[i][row] over h_b, level index i+1.
    let p: Vec<Vec<f64>> =
        (1..=n).map(|i| mids.iter().map(|&x| ctx.decode_prob(i as u32, x)).collect()).collect();
    let q: Vec<Vec<f64>> =
        (1..=n).map(|i| mids.iter().map(|&y| ctx.blockage_prob(i as u32, y)).collect()).collect();
    let w2 = quad.step * quad.step;
    let (mut pd, mut pb, mut ptx) = (0.0, 0.0, 0.0);
    for iy in 0..cells {
        let ey = ex[iy];
        for ixx in 0..cells {
            let mut best = 0.0;
            let mut lvl = 0usize;
            for i in 0..n {
                let u = p[i][ixx] - ctx.lambda * q[i][iy];
                if u > best {
                    best = u;
                    lvl = i + 1;
                }
            }
            if lvl > 0 {
                let w = ex[ixx] * ey * w2;
                ptx += w;
                pd += w * p[lvl - 1][ixx];
                pb += w * q[lvl - 1][iy];
            }
        }
    }
    (pd, pb, ptx)
}

/// Exact integral of q_i(y)·e^{−y} over [a, b] (b may be +inf).
///
/// q_i clamps to 1 below t0 = θ/γ_UB and decays exponentially above; the tail
/// is evaluated with its exponent assembled in log space, which stays bounded
/// (≤ −t0) even when γ_SB is tiny and the naive prefactor would overflow.
fn int_q_exp(ctx: &PolicyContext, level: u32, a: f64, b: f64) -> f64 {
    let scale = 2f64.powi(level as i32 - 1);
    let t0 = ctx.theta / ctx.gamma_ub;
    let di = ctx.gamma_ub / (ctx.theta * scale * ctx.gamma_sb);
    let amp = 1.0 / (scale * ctx.gamma_sb); // ln of the naive prefactor
    let lo = a.max(0.0);
    if lo >= b {
        return 0.0;
    }
    let mut out = 0.0;
    if lo < t0 {
        let u = b.min(t0);
        out += (-lo).exp() - (-u).exp();
    }
    let lo2 = lo.max(t0);
    if lo2 < b {
        let k = 1.0 + di;
        let upper = if b.is_infinite() { 0.0 } else { (amp - k * b).exp() };
        out += ((amp - k * lo2).exp() - upper) / k;
    }
    out
}

/// Exact integral of p_i(x)·e^{−x} over [a, b] (b may be +inf).
fn int_p_exp(ctx: &PolicyContext, level: u32, a: f64, b: f64) -> f64 {
    let scale = 2f64.powi(level as i32 - 1);
    let ci = ctx.theta * ctx.gamma_ud / (scale * ctx.gamma_sd);
    let ai = (-ctx.theta / (scale * ctx.gamma_sd)).exp();
    let k = 1.0 + ci;
    let lo = a.max(0.0);
    if lo >= b {
        return 0.0;
    }
    let upper = if b.is_infinite() { 0.0 } else { (-k * b).exp() };
    ai / k * ((-k * lo).exp() - upper)
}

/// Fast path for (p_del, p_blo, p_tx): 1D midpoint rule along one fade axis,
/// exact integration along the other within each policy region. Regions are
/// sliced per column (λ ≥ 1, boundaries are functions of h_d) or per row
/// (λ < 1, functions of h_b).
pub fn integrate_semianalytic(ctx: &PolicyContext, h_max: f64, step: f64) -> (f64, f64, f64) {
    if ctx.lambda == 0.0 {
        let pd = int_p_exp(ctx, ctx.n_levels, 0.0, f64::INFINITY);
        let pb = int_q_exp(ctx, ctx.n_levels, 0.0, f64::INFINITY);
        return (pd, pb, 1.0);
    }
    let n = ctx.n_levels;
    let cells = (h_max / step).round() as usize;
    let (mut pd, mut pb, mut ptx) = (0.0, 0.0, 0.0);
    if ctx.lambda >= 1.0 {
        for ixx in 0..cells {
            let x = (ixx as f64 + 0.5) * step;
            let ex = (-x).exp();
            let mut b_prev = ctx.g0(x).max(0.0);
            ptx += ex * (-b_prev).exp() * step;
            for i in 1..=n {
                let b_next =
                    if i < n { ctx.boundary_g(i, x).max(b_prev) } else { f64::INFINITY };
                let upper = if b_next.is_infinite() { 0.0 } else { (-b_next).exp() };
                pd += ex * ctx.decode_prob(i, x) * ((-b_prev).exp() - upper) * step;
                pb += ex * int_q_exp(ctx, i, b_prev, b_next) * step;
                b_prev = b_next;
            }
        }
    } else {
        let hs = ctx.h_star();
        for iy in 0..cells {
            let y = (iy as f64 + 0.5) * step;
            let ey = (-y).exp();
            let f0 = ctx.f0_trunc(y);
            if f0 <= 0.0 {
                continue;
            }
            ptx += ey * (1.0 - (-f0).exp()) * step;
            let mut b_prev = 0.0;
            for i in 1..=n {
                let b_next =
                    if i < n { ctx.boundary_f(i, y).max(b_prev).min(f0) } else { f0 };
                pd += ey * int_p_exp(ctx, i, b_prev, b_next) * step;
                pb += ey * ctx.blockage_prob(i, y) * ((-b_prev).exp() - (-b_next).exp()) * step;
                b_prev = b_next;
            }
        }
        let _ = hs;
    }
    (pd, pb, ptx)
}

/// DUE throughput from the renewal cycle: one decision slot plus W penalty
/// slots per blockage.
pub fn tau_from(p_del: f64, p_blo: f64, w: u32) -> f64 {
    p_del / (1.0 + w as f64 * p_blo)
}

/// Switch point between the two σ branches (and the sign change of h*).
pub fn lambda_switch(ctx: &PolicyContext) -> f64 {
    (-ctx.theta / (2f64.powi(ctx.n_levels as i32 - 1) * ctx.gamma_sd)).exp()
}

/// CUE throughput σ(λ) given the DUE's blockage probability.
///
/// Below the switch point the DUE transmits even in states where the CUE link
/// is already failing (h_d < h*), which shows up as the exp(−h*) correction;
/// above it the CUE only loses the λ-independent blockage-trigger slots.
pub fn sigma_from(ctx: &PolicyContext, p_blo: f64, w: u32) -> f64 {
    let wf = w as f64;
    let e_ub = (-ctx.theta / ctx.gamma_ub).exp();
    if ctx.lambda < lambda_switch(ctx) {
        let t1 = ctx.exp_neg_h_star() * (e_ub - 1.0);
        (t1 + 1.0 - p_blo + p_blo * wf * e_ub) / (1.0 + p_blo * wf)
    } else {
        e_ub - p_blo / (1.0 + p_blo * wf)
    }
}

/// Probability that the CUE alone decodes, conditioned on the DUE being
/// silent. `None` when the DUE always transmits (p_tx = 1).
pub fn p_succ(ctx: &PolicyContext, p_tx: f64) -> Option<f64> {
    if p_tx >= 1.0 {
        return None;
    }
    let e_ub = (-ctx.theta / ctx.gamma_ub).exp();
    if ctx.lambda > lambda_switch(ctx) {
        Some((e_ub - p_tx) / (1.0 - p_tx))
    } else {
        Some((1.0 - p_tx - ctx.exp_neg_h_star() * (1.0 - e_ub)) / (1.0 - p_tx))
    }
}

/// Mean reward of an arbitrary stationary policy under the fade distribution.
pub fn reward_c<F: Fn(SystemState) -> u32>(
    ctx: &PolicyContext,
    quad: &QuadratureSpec,
    policy: F,
) -> f64 {
    let cells = (quad.h_max / quad.step).round() as usize;
    let w2 = quad.step * quad.step;
    let mut total = 0.0;
    for iy in 0..cells {
        let y = (iy as f64 + 0.5) * quad.step;
        let ey = (-y).exp();
        for ixx in 0..cells {
            let x = (ixx as f64 + 0.5) * quad.step;
            let state = SystemState::new(x, y);
            let lvl = policy(state);
            if lvl > 0 {
                total += ctx.utility(lvl, state) * (-x).exp() * ey * w2;
            }
        }
    }
    total
}

/// Full analytic evaluation at the context's λ via the fast path.
pub fn evaluate(ctx: &PolicyContext, w: u32, h_max: f64, step: f64) -> ThroughputResult {
    let (p_del, p_blo, p_tx) = integrate_semianalytic(ctx, h_max, step);
    ThroughputResult {
        lambda: ctx.lambda,
        tau: tau_from(p_del, p_blo, w),
        sigma: sigma_from(ctx, p_blo, w),
        p_del,
        p_blo,
        p_tx,
        reward: p_del - ctx.lambda * p_blo,
    }
}

/// Closed-form constants for the single-level (on/off) case with
/// channel-inversion powers: DUE targets SNR ξ at its destination, CUE
/// targets ρ at the base station. The blockage duration W is baked in.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormN1 {
    pub z1: f64,
    pub z2: f64,
    pub n1: f64,
    pub n3: f64,
    pub xi: f64,
    pub theta: f64,
    pub rho: f64,
    pub w: u32,
    /// Shared factor of n2 and n4 with the overflow-prone e^{1/γ_UD} split off.
    pub fac: f64,
    pub inv_gamma_ud: f64,
}

impl ClosedFormN1 {
    /// `gamma_ud` is the CUE→destination interference SNR, `gamma_sb` the
    /// DUE→base-station leak SNR (already including the inversion power).
    pub fn new(theta: f64, rho: f64, xi: f64, gamma_ud: f64, gamma_sb: f64, w: u32) -> Self {
        let z1 = theta * gamma_sb / rho;
        let z2 = theta * gamma_ud / xi;
        let n1 = (-theta / xi).exp() / (1.0 + z2);
        let n3 = 1.0 + w as f64 * (1.0 - (-theta / rho).exp() / (1.0 + z1));
        let fac = 1.0 - (1.0 + z2) / (1.0 + z2 + z1 * z2) * (-theta / rho).exp();
        ClosedFormN1 { z1, z2, n1, n3, xi, theta, rho, w, fac, inv_gamma_ud: 1.0 / gamma_ud }
    }

    /// n2 = e^{1/γ_UD}·fac/(1+z2); may overflow to +inf for weak interference.
    pub fn n2(&self) -> f64 {
        self.inv_gamma_ud.exp() * self.fac / (1.0 + self.z2)
    }

    /// n4 = W·e^{1/γ_UD}·fac; may overflow to +inf.
    pub fn n4(&self) -> f64 {
        self.w as f64 * self.inv_gamma_ud.exp() * self.fac
    }

    /// Branch boundary e^{−θ/ξ} between the low- and high-λ forms.
    pub fn lambda_switch(&self) -> f64 {
        (-self.theta / self.xi).exp()
    }

    /// Low-λ branch (λ < e^{−θ/ξ}). The λ-powers and e^{1/γ_UD} are
    /// recombined in log space; the exponents are ≤ 0 on this branch.
    pub fn tau_low(&self, lambda: f64) -> f64 {
        let e2 = self.inv_gamma_ud + lambda.ln() / self.z2;
        let e1 = e2 + lambda.ln();
        (self.n1 - self.fac / (1.0 + self.z2) * e1.exp())
            / (self.n3 - self.w as f64 * self.fac * e2.exp())
    }

    /// High-λ branch (λ ≥ e^{−θ/ξ}); denominator exponent assembled in log
    /// space so extreme leak SNRs degrade to τ→0 instead of NaN.
    pub fn tau_high(&self, lambda: f64) -> f64 {
        let ln_a = (1.0 + self.z2 + self.z1 * self.z2).ln()
            + self.theta / self.rho
            + self.theta / self.xi * (self.z1 + 1.0);
        let denom =
            (ln_a + (self.z1 + 1.0) * lambda.ln()).exp() + self.z1 * self.w as f64 / (1.0 + self.z1);
        lambda / denom
    }

    pub fn tau(&self, lambda: f64) -> f64 {
        if lambda < self.lambda_switch() {
            self.tau_low(lambda)
        } else {
            self.tau_high(lambda)
        }
    }

    /// Stationary point of the high-λ branch, where τ_h(λ_M) = λ_M/W.
    pub fn lambda_m(&self) -> f64 {
        let base = self.w as f64 * (-self.theta / self.rho).exp()
            / ((1.0 + self.z1) * (1.0 + self.z2 + self.z1 * self.z2));
        self.lambda_switch() * (base.ln() / (self.z1 + 1.0)).exp()
    }

    /// True when the optimum sits on the high-λ branch (λ* = λ_M).
    pub fn high_branch_optimal(&self) -> bool {
        self.w as f64
            > (self.theta / self.rho).exp() * (1.0 + self.z1) * (1.0 + self.z2 + self.z1 * self.z2)
    }

    /// Stationarity residual of the low branch, in the rearrangement
    /// λ^{1/z2+1} − (n3/n4)·((1+z2)/z2)·λ + n1/(z2·n2), with the n2/n4
    /// ratios expanded so no intermediate overflows.
    pub fn low_branch_residual(&self, lambda: f64) -> f64 {
        let term1 = ((1.0 / self.z2 + 1.0) * lambda.ln()).exp();
        let damp = (-self.inv_gamma_ud).exp();
        let term2 =
            self.n3 * damp / (self.w as f64 * self.fac) * ((1.0 + self.z2) / self.z2) * lambda;
        let term3 = self.n1 * (1.0 + self.z2) * damp / (self.fac * self.z2);
        term1 - term2 + term3
    }
}

/// Result of the optimal-λ search.
#[derive(Debug, Clone, Copy)]
pub struct LambdaStar {
    pub lambda: f64,
    pub tau: f64,
    pub sigma: f64,
    /// False when no interior stationary point was bracketed and the better
    /// endpoint (or grid maximum) was returned instead.
    pub interior: bool,
}

/// Optimal blockage weight for the single-level closed form: λ_M when the
/// high branch wins outright, otherwise the unique stationary point of the
/// low branch found by bisection (relative tolerance 1e−10).
pub fn lambda_star_n1(cf: &ClosedFormN1) -> LambdaStar {
    let lsw = cf.lambda_switch();
    let tau_at = |l: f64| cf.tau(l);
    if cf.high_branch_optimal() {
        let lm = cf.lambda_m();
        return LambdaStar { lambda: lm, tau: tau_at(lm), sigma: f64::NAN, interior: true };
    }
    let mut a = 1e-12;
    let mut b = lsw * (1.0 - 1e-12);
    let ra = cf.low_branch_residual(a);
    let rb = cf.low_branch_residual(b);
    if !(ra * rb < 0.0) {
        // No sign change (flat or degenerate residual): fall back to a grid
        // maximum of the low branch.
        let mut best = (a, tau_at(a));
        for k in 0..=48 {
            let l = a * (b / a).powf(k as f64 / 48.0);
            let t = tau_at(l);
            if t > best.1 {
                best = (l, t);
            }
        }
        return LambdaStar { lambda: best.0, tau: best.1, sigma: f64::NAN, interior: false };
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if cf.low_branch_residual(m) * ra <= 0.0 {
            b = m;
        } else {
            a = m;
        }
        if (b - a) / m < 1e-10 {
            break;
        }
    }
    let l = 0.5 * (a + b);
    LambdaStar { lambda: l, tau: tau_at(l), sigma: f64::NAN, interior: true }
}

/// General-N optimal λ: coarse log grid over [1e−4, 10] followed by
/// golden-section refinement of τ(λ) to tolerance 1e−6 in λ. Returns τ and σ
/// re-evaluated at λ* on the supplied quadrature resolution.
pub fn lambda_star_general(
    ctx: &PolicyContext,
    w: u32,
    search_h_max: f64,
    search_step: f64,
) -> LambdaStar {
    let tau_at = |l: f64| {
        let mut c = *ctx;
        c.lambda = l;
        let (pd, pb, _) = integrate_semianalytic(&c, search_h_max, search_step);
        tau_from(pd, pb, w)
    };
    const GRID: usize = 64;
    let (lo, hi) = (1e-4f64, 10.0f64);
    let mut best_k = 0;
    let mut best_tau = f64::NEG_INFINITY;
    let lam_k = |k: usize| lo * (hi / lo).powf(k as f64 / (GRID - 1) as f64);
    for k in 0..GRID {
        let t = tau_at(lam_k(k));
        if t > best_tau {
            best_tau = t;
            best_k = k;
        }
    }
    let mut a = lam_k(best_k.saturating_sub(1)).ln();
    let mut b = lam_k((best_k + 1).min(GRID - 1)).ln();
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut c1 = b - gr * (b - a);
    let mut c2 = a + gr * (b - a);
    let mut f1 = tau_at(c1.exp());
    let mut f2 = tau_at(c2.exp());
    while (b - a) > 1e-6 {
        if f1 < f2 {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + gr * (b - a);
            f2 = tau_at(c2.exp());
        } else {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - gr * (b - a);
            f1 = tau_at(c1.exp());
        }
    }
    let lambda = (0.5 * (a + b)).exp();
    let mut c = *ctx;
    c.lambda = lambda;
    let r = evaluate(&c, w, search_h_max, search_step);
    LambdaStar { lambda, tau: r.tau, sigma: r.sigma, interior: best_k > 0 && best_k < GRID - 1 }
}
