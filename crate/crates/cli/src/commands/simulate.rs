//! `bmc simulate`: write a synthetic panel, its counterfactual truth, and
//! run metadata.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use bmc_core::dgp::{generate, DgpKind, DgpSpec};
use bmc_core::panel::{write_panel_csv, CsvSchema};

use crate::output::{resolve_out_dir, write_json, write_text};

#[derive(Args)]
pub struct SimulateArgs {
    /// Generator: independent, dependent, or weighted.
    #[arg(long)]
    pub kind: String,
    /// Number of units J (weighted requires 10 or 40).
    #[arg(long)]
    pub units: usize,
    /// Untreated periods before treatment starts.
    #[arg(long)]
    pub pre: usize,
    /// Treated periods at the end of the sample.
    #[arg(long, default_value_t = 20)]
    pub post: usize,
    /// Additive treatment effect on the treated unit.
    #[arg(long)]
    pub atet: f64,
    #[arg(long)]
    pub seed: u64,
    /// Noise standard deviation of the weighted generator's treated unit.
    #[arg(long, default_value_t = 1.0)]
    pub weighted_noise_sd: f64,
    /// Output directory (falls back to $BMC_OUT_DIR).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let spec = DgpSpec {
        kind: DgpKind::parse(&args.kind)?,
        n_units: args.units,
        pre_periods: args.pre,
        post_periods: args.post,
        atet: args.atet,
        seed: args.seed,
        weighted_noise_sd: args.weighted_noise_sd,
    };
    let synth = generate(&spec)?;
    let dir = resolve_out_dir(&args.out)?;

    let schema = CsvSchema::new("unit", "period", "outcome", "treated");
    write_panel_csv(dir.join("panel.csv"), &synth.panel, &schema)
        .context("writing panel.csv")?;

    let mut truth = String::from("unit,period,truth\n");
    for j in 0..synth.panel.n_units() {
        for t in 0..synth.panel.n_periods() {
            truth.push_str(&format!(
                "{},{},{}\n",
                synth.panel.unit_labels[j],
                synth.panel.period_labels[t],
                synth.truth[(j, t)]
            ));
        }
    }
    write_text(&dir.join("truth.csv"), &truth)?;
    write_json(&dir.join("meta.json"), &spec)?;
    Ok(())
}
