//! The maximum-reward (MR) power policy and its region structure.
//!
//! A DUE source observes the fades of the two links that involve the CUE it
//! shares the channel with: `h_d` (CUE → D2D destination, the interference it
//! will suffer) and `h_b` (CUE → base station, the link it may disturb). It
//! then picks one of N geometrically spaced power levels, or stays silent
//! (level 0), maximizing the utility
//!
//! `r_i = p_i(h_d) − λ·q_i(h_b)`
//!
//! where `p_i` is its own decoding probability, `q_i` the probability of
//! knocking the CUE below the warning threshold (triggering a W-slot
//! blockage), and λ weights that risk.
//!
//! The plane of states (h_d, h_b) splits into at most N+1 contiguous regions,
//! one per chosen level, separated by closed-form boundary curves; both the
//! brute-force argmax and the region lookup are implemented and serve as
//! correctness oracles for each other.

/// Immutable per-(CUE, DUE, λ) context for policy evaluation.
///
/// `gamma_sd` / `gamma_sb` are computed at the minimum DUE power level; level
/// i scales them by 2^{i−1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyContext {
    pub gamma_sd: f64,
    pub gamma_sb: f64,
    pub gamma_ud: f64,
    pub gamma_ub: f64,
    /// Decoding/warning threshold, linear.
    pub theta: f64,
    /// Blockage weight (>= 0).
    pub lambda: f64,
    /// Number of non-zero power levels N (>= 1).
    pub n_levels: u32,
}

/// Observed fades (h_d, h_b) for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    pub h_d: f64,
    pub h_b: f64,
}

impl SystemState {
    pub fn new(h_d: f64, h_b: f64) -> Self {
        SystemState { h_d, h_b }
    }
}

/// Floor for the argument of logarithms on boundary curves; keeps extreme
/// states finite instead of producing -inf.
const LOG_FLOOR: f64 = 1e-300;

impl PolicyContext {
    fn level_scale(&self, level: u32) -> f64 {
        2f64.powi(level as i32 - 1)
    }

    /// Decoding probability at the D2D destination when transmitting at
    /// `level` (1..=N) under interference fade `h_d`. Level 0 returns 0.
    pub fn decode_prob(&self, level: u32, h_d: f64) -> f64 {
        if level == 0 {
            return 0.0;
        }
        (-self.theta * (self.gamma_ud * h_d + 1.0) / (self.level_scale(level) * self.gamma_sd))
            .exp()
    }

    /// Probability of pushing the CUE below the warning threshold when
    /// transmitting at `level` under CUE uplink fade `h_b`. Clamped to 1 when
    /// the CUE would fail on its own (h_b < θ/γ_UB). Level 0 returns 0.
    pub fn blockage_prob(&self, level: u32, h_b: f64) -> f64 {
        if level == 0 {
            return 0.0;
        }
        let e = -(self.gamma_ub * h_b - self.theta)
            / (self.theta * self.level_scale(level) * self.gamma_sb);
        e.exp().min(1.0)
    }

    /// Utility of transmitting at `level` in `state`; exactly 0 for level 0.
    pub fn utility(&self, level: u32, state: SystemState) -> f64 {
        if level == 0 {
            return 0.0;
        }
        self.decode_prob(level, state.h_d) - self.lambda * self.blockage_prob(level, state.h_b)
    }

    /// Reference policy: argmax of the utility over levels 0..=N, ties broken
    /// toward the lowest index (least interference at equal reward).
    pub fn policy_argmax(&self, state: SystemState) -> u32 {
        let mut best = 0.0;
        let mut best_level = 0;
        for i in 1..=self.n_levels {
            let u = self.utility(i, state);
            if u > best {
                best = u;
                best_level = i;
            }
        }
        best_level
    }

    /// Threshold fade h* below which the highest level wins when the CUE link
    /// is already doomed (h_b < θ/γ_UB). Negative when λ is large.
    pub fn h_star(&self) -> f64 {
        let top = self.level_scale(self.n_levels);
        -(top * self.gamma_sd / (self.theta * self.gamma_ud)) * self.lambda.ln()
            - 1.0 / self.gamma_ud
    }

    /// `exp(-h_star)` evaluated in log space; safe where `h_star` itself
    /// would overflow the exponential.
    pub fn exp_neg_h_star(&self) -> f64 {
        let top = self.level_scale(self.n_levels);
        let log = 1.0 / self.gamma_ud
            + (top * self.gamma_sd / (self.theta * self.gamma_ud)) * self.lambda.ln();
        log.exp()
    }

    /// Slope M of the linear silence boundary.
    pub fn boundary_slope(&self) -> f64 {
        self.theta * self.theta * self.gamma_sb * self.gamma_ud / (self.gamma_sd * self.gamma_ub)
    }

    /// Intercept ν_i of the line where level i's utility vanishes.
    pub fn nu(&self, level: u32) -> f64 {
        self.theta * self.gamma_sb / self.gamma_ub
            * (1.0 / self.gamma_sb
                + self.theta / self.gamma_sd
                + self.level_scale(level) * self.lambda.ln())
    }

    /// Intercept of the silence boundary: the level adjacent to silence is 1
    /// for λ ≥ 1 and N for λ < 1.
    pub fn boundary_intercept(&self) -> f64 {
        if self.lambda >= 1.0 {
            self.nu(1)
        } else {
            self.nu(self.n_levels)
        }
    }

    /// Silence boundary before the h* truncation: g_0(h_d) = M·h_d + Q.
    pub fn g0(&self, h_d: f64) -> f64 {
        self.boundary_slope() * h_d + self.boundary_intercept()
    }

    /// Truncated silence boundary g̃_0(h_d) = g_0(h_d)·step(h_d − h*).
    pub fn g0_trunc(&self, h_d: f64) -> f64 {
        if h_d >= self.h_star() {
            self.g0(h_d)
        } else {
            0.0
        }
    }

    /// Inverse silence boundary f̃_0(h_b) = max((h_b − Q)/M, h*).
    pub fn f0_trunc(&self, h_b: f64) -> f64 {
        ((h_b - self.boundary_intercept()) / self.boundary_slope()).max(self.h_star())
    }

    /// Boundary between the regions of levels i and i+1 for λ ≥ 1, as a
    /// function h_b = g_i^+(h_d). Defined for 1 <= i < N.
    pub fn boundary_g(&self, i: u32, h_d: f64) -> f64 {
        let p = self.decode_prob(i + 1, h_d);
        let arg = 1.0 - 4.0 / self.lambda * p * (1.0 - p);
        let s = arg.max(0.0).sqrt();
        let inner = (0.5 - 0.5 * s).max(LOG_FLOOR);
        self.theta / self.gamma_ub
            - self.theta * self.gamma_sb / self.gamma_ub * 2f64.powi(i as i32) * inner.ln()
    }

    /// Boundary between the regions of levels i and i+1 for λ < 1, as a
    /// function h_d = f_i^+(h_b). Defined for 1 <= i < N.
    pub fn boundary_f(&self, i: u32, h_b: f64) -> f64 {
        let q = self.blockage_prob(i + 1, h_b);
        let arg = 1.0 - 4.0 * self.lambda * q * (1.0 - q);
        let s = arg.max(0.0).sqrt();
        let inner = (0.5 + 0.5 * s).max(LOG_FLOOR);
        -1.0 / self.gamma_ud
            - self.gamma_sd / (self.theta * self.gamma_ud) * 2f64.powi(i as i32) * inner.ln()
    }

    /// Region lookup equivalent to [`Self::policy_argmax`]: resolves the level
    /// from the ordered boundary curves instead of scanning utilities.
    ///
    /// For λ ≥ 1 levels grow with h_b (more margin at the base station allows
    /// more power); for λ < 1 they shrink with h_d.
    pub fn policy_closed_form(&self, state: SystemState) -> u32 {
        let n = self.n_levels;
        if self.lambda >= 1.0 {
            // h* <= 0 here, so the step truncation is saturated.
            if state.h_b < self.g0(state.h_d) {
                return 0;
            }
            for i in 1..n {
                if state.h_b < self.boundary_g(i, state.h_d) {
                    return i;
                }
            }
            n
        } else {
            if state.h_d > self.f0_trunc(state.h_b) {
                return 0;
            }
            for i in 1..n {
                if state.h_d < self.boundary_f(i, state.h_b) {
                    return i;
                }
            }
            n
        }
    }

    /// Number of distinct levels selected on a `grid_n`×`grid_n` grid over
    /// [0, h_max]². Always between 2 and N+1 when both silence and
    /// transmission states fall inside the grid.
    pub fn region_census(&self, h_max: f64, grid_n: usize) -> usize {
        let mut seen = vec![false; self.n_levels as usize + 1];
        let step = h_max / grid_n as f64;
        for ix in 0..grid_n {
            let h_d = (ix as f64 + 0.5) * step;
            for iy in 0..grid_n {
                let h_b = (iy as f64 + 0.5) * step;
                seen[self.policy_argmax(SystemState::new(h_d, h_b)) as usize] = true;
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Location of the single stationary point of the continuous relaxation
    /// v(x) = p_x(h_d) − λ q_x(h_b) in level coordinate x, or `None` when v is
    /// monotonic. The stationary point is a maximum when p_1 > q_1 and a
    /// minimum otherwise.
    pub fn gain_curve_peak(&self, state: SystemState) -> Option<f64> {
        let p1 = self.decode_prob(1, state.h_d);
        let q1 = self.blockage_prob(1, state.h_b);
        if !(p1 > 0.0 && p1 < 1.0 && q1 > 0.0 && q1 < 1.0) {
            return None;
        }
        let a = p1.ln();
        let b = q1.ln();
        // Stationary u = 2^{x-1} solves a·e^{a/u} = λ·b·e^{b/u}.
        let denom = self.lambda.ln() + (-b).ln() - (-a).ln();
        if denom == 0.0 {
            return None;
        }
        let u = (a - b) / denom;
        if u <= 0.0 {
            return None;
        }
        Some(1.0 + u.log2())
    }

    /// Text matrix of level indices over [0, h_max]²: rows are h_b descending,
    /// columns h_d ascending, space-separated. Suitable for heat-map plotting
    /// of the policy regions.
    pub fn region_map(&self, h_max: f64, grid_n: usize) -> String {
        let step = h_max / grid_n as f64;
        let mut out = String::with_capacity(grid_n * grid_n * 2);
        for iy in (0..grid_n).rev() {
            let h_b = (iy as f64 + 0.5) * step;
            for ix in 0..grid_n {
                let h_d = (ix as f64 + 0.5) * step;
                if ix > 0 {
                    out.push(' ');
                }
                let level = self.policy_argmax(SystemState::new(h_d, h_b));
                out.push_str(&level.to_string());
            }
            out.push('\n');
        }
        out
    }
}
