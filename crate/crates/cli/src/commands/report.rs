//! `bmc report`: turn a fit's effect summary into a plot-ready CSV and a
//! static SVG chart of realized and counterfactual series with shaded
//! credible bands.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use bmc_core::effects::EffectSummary;

use crate::output::{resolve_out_dir, write_text};
use crate::svg;

#[derive(Args)]
pub struct ReportArgs {
    /// Directory holding the fit outputs (effects.json).
    #[arg(long)]
    pub fit: PathBuf,
    /// Output directory; defaults to the fit directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &ReportArgs) -> Result<()> {
    let effects_path = args.fit.join("effects.json");
    let text = std::fs::read_to_string(&effects_path)
        .with_context(|| format!("missing fit artifact {}", effects_path.display()))?;
    let effects: EffectSummary =
        serde_json::from_str(&text).context("parsing effects.json")?;

    let dir = match &args.out {
        Some(_) => resolve_out_dir(&args.out)?,
        None => args.fit.clone(),
    };

    // Band levels in the order stored; the chart shades the widest first.
    let levels: Vec<f64> = effects
        .per_period
        .first()
        .map(|p| p.bands.iter().map(|b| b.level).collect())
        .unwrap_or_default();

    let mut header = vec![
        "period".to_string(),
        "realized".to_string(),
        "counterfactual".to_string(),
    ];
    for level in &levels {
        let pct = (level * 100.0).round() as u32;
        header.push(format!("low{pct}"));
        header.push(format!("high{pct}"));
    }
    let mut writer = csv::Writer::from_path(dir.join("report.csv"))
        .context("creating report.csv")?;
    writer.write_record(&header)?;
    for p in &effects.per_period {
        let mut row = vec![
            p.period.clone(),
            p.realized.to_string(),
            p.counterfactual_mean.to_string(),
        ];
        for b in &p.bands {
            row.push(b.low.to_string());
            row.push(b.high.to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;

    write_text(&dir.join("report.svg"), &svg::render_effect_chart(&effects))?;
    Ok(())
}
