//! `bmc fit`: run the sampler on a panel CSV and write draws, effect
//! summaries, spectrum means, and convergence diagnostics.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use bmc_core::effects::{atet_draws, atet_posterior, eigenvalue_summary, EffectSummary};
use bmc_core::panel::{load_panel_csv, CsvSchema, PanelData};
use bmc_core::sampler::{geweke_diagnostic, run_mcmc, PosteriorDraws, SamplerConfig};

use crate::output::{resolve_out_dir, split_list, write_json, write_text};

#[derive(Args)]
pub struct FitArgs {
    /// Long-format panel CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "unit")]
    pub unit_col: String,
    #[arg(long, default_value = "period")]
    pub period_col: String,
    #[arg(long, default_value = "outcome")]
    pub outcome_col: String,
    #[arg(long, default_value = "treated")]
    pub treatment_col: String,
    /// Comma-separated covariate column names.
    #[arg(long, default_value = "")]
    pub covariate_cols: String,

    #[arg(long, default_value_t = 3000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Factorization rank; defaults to min(J,T).
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 5.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub kappa1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub kappa2: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta_inf: f64,
    #[arg(long, default_value_t = 0.001)]
    pub nu1: f64,
    #[arg(long, default_value_t = 0.001)]
    pub nu2: f64,
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0.6)]
    pub target_accept: f64,
    /// Initial step multiplier of the geodesic update.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long, default_value_t = 5)]
    pub leapfrog: usize,
    #[arg(long, default_value_t = 0.6)]
    pub varsigma: f64,

    /// Use the loading-row update without noise-precision scaling.
    #[arg(long)]
    pub unscaled_phi_precision: bool,
    /// Keep per-draw loading matrices (needed for loading summaries).
    #[arg(long)]
    pub retain_loadings: bool,
    /// Comma-separated credible levels for the per-period bands.
    #[arg(long, default_value = "0.7,0.9")]
    pub levels: String,

    /// Output directory (falls back to $BMC_OUT_DIR).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Diagnostics {
    n_draws: usize,
    accept_rate: f64,
    eps_final: f64,
    reorthonormalizations: usize,
    geweke_tau: f64,
    geweke_atet: f64,
    geweke_log_post: f64,
    geweke_threshold: f64,
}

pub fn build_config(args: &FitArgs, data: &PanelData) -> SamplerConfig {
    let rank = args
        .rank
        .unwrap_or_else(|| data.n_units().min(data.n_periods()));
    let mut cfg = SamplerConfig::new(rank, args.iters, args.burn, args.seed);
    cfg.chain.thin = args.thin;
    cfg.hyper.eta = args.eta;
    cfg.hyper.kappa1 = args.kappa1;
    cfg.hyper.kappa2 = args.kappa2;
    cfg.hyper.delta_inf = args.delta_inf;
    cfg.hyper.nu1 = args.nu1;
    cfg.hyper.nu2 = args.nu2;
    cfg.hyper.alpha = args.alpha;
    cfg.gmc.step = args.step;
    cfg.gmc.n_step = args.leapfrog;
    cfg.gmc.target_accept = args.target_accept;
    cfg.gmc.varsigma = args.varsigma;
    cfg.retain_loadings = args.retain_loadings;
    cfg.unscaled_phi_precision = args.unscaled_phi_precision;
    cfg
}

pub fn run(args: &FitArgs) -> Result<()> {
    let covariates = split_list(&args.covariate_cols);
    let mut schema = CsvSchema::new(
        &args.unit_col,
        &args.period_col,
        &args.outcome_col,
        &args.treatment_col,
    );
    schema.covariates = covariates;
    let data = load_panel_csv(&args.data, &schema)
        .with_context(|| format!("loading {}", args.data.display()))?;

    let levels: Vec<f64> = split_list(&args.levels)
        .iter()
        .map(|s| s.parse::<f64>().context("parsing --levels"))
        .collect::<Result<_>>()?;

    let cfg = build_config(args, &data);
    let draws = run_mcmc(&data, &cfg)?;
    let effects = atet_posterior(&draws, &data, &levels)?;
    let dir = resolve_out_dir(&args.out)?;

    write_draws_csv(&dir, &draws)?;
    if let Some(loadings) = &draws.phi_row_draws {
        write_loadings_csv(&dir, loadings)?;
    }
    write_json(&dir.join("effects.json"), &effects)?;
    write_per_period_csv(&dir, &effects, &levels)?;
    write_eigenvalues_csv(&dir, &draws)?;

    let atet_chain = atet_draws(&draws, &data)?;
    let diagnostics = Diagnostics {
        n_draws: draws.n_draws(),
        accept_rate: draws.accept_rate,
        eps_final: draws.eps_final,
        reorthonormalizations: draws.reorthonormalizations,
        geweke_tau: geweke_diagnostic(&draws.tau_draws, 0.1, 0.5)?,
        geweke_atet: geweke_diagnostic(&atet_chain, 0.1, 0.5)?,
        geweke_log_post: geweke_diagnostic(&draws.log_post_draws, 0.1, 0.5)?,
        geweke_threshold: 1.96,
    };
    write_json(&dir.join("diagnostics.json"), &diagnostics)?;
    Ok(())
}

/// One row per retained draw: tau, log density, coefficients, imputed
/// cells, singular values. A sidecar JSON file documents the columns.
fn write_draws_csv(dir: &std::path::Path, draws: &PosteriorDraws) -> Result<()> {
    let mut header = vec!["draw".to_string(), "tau".to_string(), "log_post".to_string()];
    for l in 0..draws.beta_draws.ncols() {
        header.push(format!("beta_{l}"));
    }
    for &(j, t) in &draws.treated_cells {
        header.push(format!("y_miss_{j}_{t}"));
    }
    for k in 0..draws.gamma_eig_draws.ncols() {
        header.push(format!("eig_{k}"));
    }
    let mut text = header.join(",") + "\n";
    for i in 0..draws.n_draws() {
        let mut row = vec![
            i.to_string(),
            draws.tau_draws[i].to_string(),
            draws.log_post_draws[i].to_string(),
        ];
        for l in 0..draws.beta_draws.ncols() {
            row.push(draws.beta_draws[(i, l)].to_string());
        }
        for c in 0..draws.treated_cells.len() {
            row.push(draws.y_miss_draws[(i, c)].to_string());
        }
        for k in 0..draws.gamma_eig_draws.ncols() {
            row.push(draws.gamma_eig_draws[(i, k)].to_string());
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(&dir.join("draws.csv"), &text)?;

    let schema = serde_json::json!({
        "file": "draws.csv",
        "row": "one retained posterior draw",
        "columns": {
            "draw": "retained draw index, 0-based",
            "tau": "noise precision",
            "log_post": "unnormalized log joint density (monitoring scalar)",
            "beta_<l>": "coefficient of covariate l",
            "y_miss_<j>_<t>": "imputed untreated outcome at unit j, period t (0-based indices)",
            "eig_<k>": "k-th singular value of the low-rank component, descending",
        },
        "treated_cells": draws.treated_cells,
    });
    write_json(&dir.join("draws_schema.json"), &schema)
}

/// Long-format loading draws: draw, unit, column, value.
fn write_loadings_csv(dir: &std::path::Path, loadings: &[nalgebra::DMatrix<f64>]) -> Result<()> {
    let mut text = String::from("draw,unit,column,value\n");
    for (i, phi) in loadings.iter().enumerate() {
        for j in 0..phi.nrows() {
            for k in 0..phi.ncols() {
                text.push_str(&format!("{i},{j},{k},{}\n", phi[(j, k)]));
            }
        }
    }
    write_text(&dir.join("loadings.csv"), &text)
}

pub fn write_per_period_csv(
    dir: &std::path::Path,
    effects: &EffectSummary,
    levels: &[f64],
) -> Result<()> {
    let mut writer = csv::Writer::from_path(dir.join("per_period.csv"))
        .context("creating per_period.csv")?;
    let mut header = vec![
        "period_index".to_string(),
        "period".to_string(),
        "realized".to_string(),
        "counterfactual_mean".to_string(),
    ];
    for level in levels {
        let pct = (level * 100.0).round() as u32;
        header.push(format!("low{pct}"));
        header.push(format!("high{pct}"));
    }
    writer.write_record(&header)?;
    for p in &effects.per_period {
        let mut row = vec![
            p.period_index.to_string(),
            p.period.clone(),
            p.realized.to_string(),
            p.counterfactual_mean.to_string(),
        ];
        for level in levels {
            let band = p
                .bands
                .iter()
                .find(|b| b.level == *level)
                .context("missing band level in effect summary")?;
            row.push(band.low.to_string());
            row.push(band.high.to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn write_eigenvalues_csv(dir: &std::path::Path, draws: &PosteriorDraws) -> Result<()> {
    let means = eigenvalue_summary(draws);
    let mut text = String::from("index,posterior_mean\n");
    for (k, m) in means.iter().enumerate() {
        text.push_str(&format!("{k},{m}\n"));
    }
    write_text(&dir.join("eigenvalues.csv"), &text)
}
