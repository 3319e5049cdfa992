//! `d2dsim` — analytical engine and Monte Carlo simulator for hybrid D2D
//! resource allocation in a single cellular uplink cell.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use d2dsim_core::policy::PolicyContext;
use d2dsim_core::sim::{run_campaign, Scheme};
use d2dsim_core::system::SystemParams;
use d2dsim_core::throughput::{evaluate, lambda_star_general, lambda_star_n1, ClosedFormN1};

use d2dsim_cli::config::{parse_scheme, resolve, Overrides};
use d2dsim_cli::report::{csv_row, sig6, write_csv};

#[derive(Parser)]
#[command(name = "d2dsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report tau/sigma and the optimal blockage weight for one channel pair.
    Analyze(AnalyzeArgs),
    /// Print the power-policy region map for a fixed four-node geometry.
    Regions(RegionsArgs),
    /// Run one campaign point and emit a CSV row.
    Campaign(CampaignArgs),
    /// Run a parameter sweep (fig3 = throughput vs xi, fig6 = vs W).
    Figure(FigureArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// DUE -> destination SNR at the minimum power level, linear.
    #[arg(long, default_value_t = 9.7656)]
    gamma_sd: f64,
    /// DUE -> base-station leak SNR at the minimum power level, linear.
    #[arg(long, default_value_t = 4.0)]
    gamma_sb: f64,
    /// CUE -> destination interference SNR, linear.
    #[arg(long, default_value_t = 14.863)]
    gamma_ud: f64,
    /// CUE -> base-station SNR, linear.
    #[arg(long, default_value_t = 1.0)]
    gamma_ub: f64,
    #[arg(long, default_value_t = 1)]
    levels: u32,
    #[arg(long = "W", default_value_t = 1)]
    w: u32,
    /// Evaluate at this lambda instead of optimizing.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct RegionsArgs {
    /// Preset: 'a' (lambda=0.8212, W=3) or 'b' (lambda=1.1918, W=6).
    #[arg(long, default_value = "a")]
    variant: String,
    #[arg(long, default_value_t = 40)]
    grid: usize,
    #[arg(long, default_value_t = 2.0)]
    h_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CampaignArgs {
    /// Flat key=value config file (lowest-priority overrides).
    #[arg(long)]
    config: Option<PathBuf>,
    /// CMP, GEO or NONE.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long = "W")]
    w: Option<u32>,
    #[arg(long)]
    xi_db: Option<f64>,
    /// Number of DUE power levels (1 = inversion to xi, >1 = fixed ladder).
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    topologies: Option<usize>,
    /// Slots per epoch (one epoch per topology).
    #[arg(long)]
    slots: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    /// fig3 (vs xi, W=1..6, CMP single level + baselines) or fig6 (vs W).
    name: String,
    #[arg(long, default_value_t = 300)]
    topologies: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Analyze(a) => analyze(a),
        Command::Regions(a) => regions(a),
        Command::Campaign(a) => campaign(a),
        Command::Figure(a) => figure(a),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let params = SystemParams { blockage_w: a.w, ..SystemParams::default() };
    let mut ctx = PolicyContext {
        gamma_sd: a.gamma_sd,
        gamma_sb: a.gamma_sb,
        gamma_ud: a.gamma_ud,
        gamma_ub: a.gamma_ub,
        theta: params.theta,
        lambda: 1.0,
        n_levels: a.levels,
    };
    let (h_max, step) = (14.0, 0.01);
    let (lambda, label) = match a.lambda {
        Some(l) => (l, "given"),
        None if a.levels == 1 => {
            // Single inverted level: xi is just the destination SNR itself.
            let cf = ClosedFormN1::new(
                params.theta,
                params.rho,
                a.gamma_sd,
                a.gamma_ud,
                a.gamma_sb,
                a.w,
            );
            (lambda_star_n1(&cf).lambda, "optimal")
        }
        None => (lambda_star_general(&ctx, a.w, h_max, step).lambda, "optimal"),
    };
    ctx.lambda = lambda;
    let r = evaluate(&ctx, a.w, h_max, step);
    println!("lambda ({label}) = {}", sig6(lambda));
    println!("tau    = {}", sig6(r.tau));
    println!("sigma  = {}", sig6(r.sigma));
    println!("p_del  = {}", sig6(r.p_del));
    println!("p_blo  = {}", sig6(r.p_blo));
    println!("p_tx   = {}", sig6(r.p_tx));
    println!("switch = {}", sig6(d2dsim_core::throughput::lambda_switch(&ctx)));
    Ok(())
}

fn regions(a: RegionsArgs) -> Result<()> {
    // Fixed geometry: base station at the origin, DUE source at (100, 0) m,
    // destination at (100, 80) m, CUE at (0, 120) m; four levels 0.4..3.2 mW,
    // CUE at 2 mW.
    let params = SystemParams::default();
    let n0 = params.noise_power;
    let p_min = 0.4;
    let p_u = 2.0;
    let lambda = match a.variant.as_str() {
        "a" => 0.8212,
        "b" => 1.1918,
        other => bail!("unknown variant '{other}' (expected 'a' or 'b')"),
    };
    let ctx = PolicyContext {
        gamma_sd: p_min * 80f64.powf(-params.alpha) / n0,
        gamma_sb: p_min * 100f64.powf(-params.alpha) / n0,
        gamma_ud: p_u * (100f64.powi(2) + 40f64.powi(2)).sqrt().powf(-params.alpha) / n0,
        gamma_ub: p_u * 120f64.powf(-params.alpha) / n0,
        theta: params.theta,
        lambda,
        n_levels: 4,
    };
    let map = ctx.region_map(a.h_max, a.grid);
    let text = format!(
        "# level indices, rows h_b {:.3}->0, cols h_d 0->{:.3}, lambda={}\n{}",
        a.h_max, a.h_max, lambda, map
    );
    match a.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn gather_overrides(a: &CampaignArgs) -> Result<Overrides> {
    let flags = Overrides {
        scheme: a.scheme.as_deref().map(parse_scheme).transpose()?,
        w: a.w,
        xi_db: a.xi_db,
        n_levels: a.levels,
        topologies: a.topologies,
        slots: a.slots,
        seed: a.seed,
        ..Overrides::default()
    };
    let env = Overrides::from_env()?;
    let file = match &a.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    Ok(flags.over(env.over(file)))
}

fn campaign(a: CampaignArgs) -> Result<()> {
    let resolved = resolve(&gather_overrides(&a)?)?;
    let m = run_campaign(&resolved.campaign, &resolved.params)?;
    let row = csv_row(
        resolved.campaign.scheme,
        resolved.params.blockage_w,
        resolved.xi_db,
        resolved.campaign.power.n_levels(),
        &m,
        resolved.campaign.seed,
    );
    write_csv(a.out.as_deref(), &[row])?;
    Ok(())
}

fn figure(a: FigureArgs) -> Result<()> {
    let base = Overrides {
        topologies: Some(a.topologies),
        seed: Some(a.seed),
        ..Overrides::default()
    };
    let mut rows = Vec::new();
    let mut run = |o: Overrides| -> Result<()> {
        let resolved = resolve(&o.over(base.clone()))?;
        let m = run_campaign(&resolved.campaign, &resolved.params)?;
        rows.push(csv_row(
            resolved.campaign.scheme,
            resolved.params.blockage_w,
            resolved.xi_db,
            resolved.campaign.power.n_levels(),
            &m,
            resolved.campaign.seed,
        ));
        Ok(())
    };
    match a.name.as_str() {
        // Throughput vs DUE target SNR, one curve per W, plus the
        // xi-independent baselines.
        "fig3" | "fig4" | "fig5" => {
            run(Overrides { scheme: Some(Scheme::None), ..Overrides::default() })?;
            run(Overrides { scheme: Some(Scheme::Geo), ..Overrides::default() })?;
            for &xi_db in &[0.0, 4.0, 8.0, 12.0, 16.0, 20.0] {
                for w in 1..=6u32 {
                    run(Overrides {
                        scheme: Some(Scheme::Cmp),
                        w: Some(w),
                        xi_db: Some(xi_db),
                        ..Overrides::default()
                    })?;
                }
            }
        }
        // Throughput vs W: GEO, single-level CMP at high xi, 20-level CMP.
        "fig6" => {
            run(Overrides { scheme: Some(Scheme::Geo), ..Overrides::default() })?;
            for w in 1..=6u32 {
                run(Overrides {
                    scheme: Some(Scheme::Cmp),
                    w: Some(w),
                    xi_db: Some(20.0),
                    ..Overrides::default()
                })?;
            }
            for w in 1..=6u32 {
                run(Overrides {
                    scheme: Some(Scheme::Cmp),
                    w: Some(w),
                    n_levels: Some(20),
                    ..Overrides::default()
                })?;
            }
        }
        other => bail!("unknown figure '{other}' (expected fig3..fig6)"),
    }
    write_csv(a.out.as_deref(), &rows)?;
    Ok(())
}
