//! Layered run configuration: defaults < config file < environment < flags.
//!
//! The config file is a flat `key = value` list (one per line, `#` comments).
//! Unknown keys are rejected with the offending line number so typos fail
//! loudly instead of silently running the default. Environment variables use
//! the `D2DSIM_` prefix with the key upper-cased (`D2DSIM_XI_DB=16`).

use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use d2dsim_core::allocation::{GeoParams, PowerSpec};
use d2dsim_core::sim::{CampaignConfig, Quantizer, Scheme};
use d2dsim_core::system::SystemParams;

pub const ENV_PREFIX: &str = "D2DSIM_";

/// One optional value per tunable; `None` means "not set at this layer".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scheme: Option<Scheme>,
    pub w: Option<u32>,
    pub xi_db: Option<f64>,
    pub n_levels: Option<u32>,
    pub p_max_mw: Option<f64>,
    pub topologies: Option<usize>,
    pub slots: Option<u32>,
    pub seed: Option<u64>,
    pub k_cues: Option<usize>,
    pub m_dues: Option<usize>,
    pub kappa: Option<f64>,
    pub quant_step: Option<f64>,
    pub quant_cap: Option<f64>,
    pub search_step: Option<f64>,
}

pub const KEYS: &[&str] = &[
    "scheme", "w", "xi_db", "n_levels", "p_max_mw", "topologies", "slots", "seed", "k_cues",
    "m_dues", "kappa", "quant_step", "quant_cap", "search_step",
];

pub fn parse_scheme(s: &str) -> Result<Scheme> {
    match s.to_ascii_uppercase().as_str() {
        "CMP" => Ok(Scheme::Cmp),
        "GEO" => Ok(Scheme::Geo),
        "NONE" => Ok(Scheme::None),
        other => Err(anyhow!("unknown scheme '{other}' (expected CMP, GEO or NONE)")),
    }
}

impl Overrides {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            v.parse().map_err(|e| anyhow!("invalid value '{v}' for '{key}': {e}"))
        }
        match key {
            "scheme" => self.scheme = Some(parse_scheme(value)?),
            "w" => self.w = Some(num(value, key)?),
            "xi_db" => self.xi_db = Some(num(value, key)?),
            "n_levels" => self.n_levels = Some(num(value, key)?),
            "p_max_mw" => self.p_max_mw = Some(num(value, key)?),
            "topologies" => self.topologies = Some(num(value, key)?),
            "slots" => self.slots = Some(num(value, key)?),
            "seed" => self.seed = Some(num(value, key)?),
            "k_cues" => self.k_cues = Some(num(value, key)?),
            "m_dues" => self.m_dues = Some(num(value, key)?),
            "kappa" => self.kappa = Some(num(value, key)?),
            "quant_step" => self.quant_step = Some(num(value, key)?),
            "quant_cap" => self.quant_cap = Some(num(value, key)?),
            "search_step" => self.search_step = Some(num(value, key)?),
            other => bail!("unknown key '{other}' (known keys: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    /// Parses a flat key=value file; errors carry the 1-based line number.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut out = Overrides::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected 'key = value'", path.display(), idx + 1))?;
            out.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), idx + 1))?;
        }
        Ok(out)
    }

    /// Reads `D2DSIM_*` variables for every known key.
    pub fn from_env() -> Result<Self> {
        let mut out = Overrides::default();
        for key in KEYS {
            let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
            if let Ok(value) = std::env::var(&var) {
                out.set(key, &value).with_context(|| format!("environment variable {var}"))?;
            }
        }
        Ok(out)
    }

    /// Overlays `self` (higher priority) on `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            scheme, w, xi_db, n_levels, p_max_mw, topologies, slots, seed, k_cues, m_dues, kappa,
            quant_step, quant_cap, search_step
        )
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: SystemParams,
    pub campaign: CampaignConfig,
    pub xi_db: f64,
}

pub fn resolve(o: &Overrides) -> Result<Resolved> {
    let xi_db = o.xi_db.unwrap_or(4.0);
    let n_levels = o.n_levels.unwrap_or(1);
    if n_levels < 1 {
        bail!("n_levels must be at least 1");
    }
    let power = if n_levels == 1 {
        PowerSpec::TargetSnr { xi: 10f64.powf(xi_db / 10.0) }
    } else {
        PowerSpec::FixedLevels { p_max: o.p_max_mw.unwrap_or(200.0), n_levels }
    };
    let mut params = SystemParams::default();
    params.blockage_w = o.w.unwrap_or(1);
    params.epoch_len = o.slots.unwrap_or(100);
    params.validate()?;
    // Coarser λ-search quadrature for many-level runs keeps campaigns fast;
    // the achieved τ is still evaluated exactly by the simulator.
    let default_search = if n_levels > 4 { 0.04 } else { 0.02 };
    let campaign = CampaignConfig {
        scheme: o.scheme.unwrap_or(Scheme::Cmp),
        n_topologies: o.topologies.unwrap_or(1000),
        seed: o.seed.unwrap_or(1),
        n_cues: o.k_cues.unwrap_or(5),
        n_dues: o.m_dues.unwrap_or(5),
        power,
        geo: GeoParams { kappa: o.kappa.unwrap_or(0.8) },
        quant: Quantizer {
            step: o.quant_step.unwrap_or(0.01),
            cap: o.quant_cap.unwrap_or(5.0),
        },
        search_h_max: 14.0,
        search_step: o.search_step.unwrap_or(default_search),
    };
    if campaign.n_topologies == 0 {
        bail!("topologies must be positive");
    }
    Ok(Resolved { params, campaign, xi_db })
}
