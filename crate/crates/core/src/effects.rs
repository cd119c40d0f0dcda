//! Posterior treatment-effect summaries: the effect distribution over
//! draws, equal-tailed credible intervals, per-period counterfactual
//! series, and spectrum/loading summaries.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelData;
use crate::sampler::PosteriorDraws;

/// Quantile levels reported for the effect distribution.
const QUANTILE_LEVELS: [f64; 9] = [0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.975];

/// An equal-tailed interval at a coverage level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub level: f64,
    pub low: f64,
    pub high: f64,
}

/// Counterfactual summary for one period, averaged over the cells treated
/// in that period. In periods where the treated units are still untreated
/// the counterfactual is the realized value and the bands collapse onto it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub period_index: usize,
    pub period: String,
    pub realized: f64,
    pub counterfactual_mean: f64,
    pub bands: Vec<Band>,
}

/// Posterior summary of the average effect on the treated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub atet_mean: f64,
    pub atet_sd: f64,
    /// (quantile level, value) pairs, ascending in the level.
    pub atet_quantiles: Vec<(f64, f64)>,
    pub per_period: Vec<PeriodSummary>,
}

/// Hazen empirical quantile: position p·n + ½ on the sorted sample with
/// linear interpolation, clamped to the extremes.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = p * n as f64 + 0.5;
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let k = h.floor() as usize; // 1-based lower order statistic
    let frac = h - k as f64;
    sorted[k - 1] + frac * (sorted[k] - sorted[k - 1])
}

/// Equal-tailed credible interval from empirical quantiles at
/// (1−level)/2 and 1−(1−level)/2.
pub fn credible_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.len() < 2 {
        return Err(Error::Estimation(
            "credible interval needs at least 2 samples".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let tail = 0.5 * (1.0 - level);
    Ok((
        quantile_sorted(&sorted, tail),
        quantile_sorted(&sorted, 1.0 - tail),
    ))
}

/// Per-draw average effect over the treated cells:
/// mean of realized minus imputed.
pub fn atet_draws(draws: &PosteriorDraws, data: &PanelData) -> Result<Vec<f64>> {
    let cells = &draws.treated_cells;
    if cells.is_empty() {
        return Err(Error::NoTreatedCells);
    }
    let realized: Vec<f64> = cells.iter().map(|&(j, t)| data.outcomes[(j, t)]).collect();
    let n_cells = cells.len() as f64;
    Ok((0..draws.n_draws())
        .map(|i| {
            let mut sum = 0.0;
            for (c, &r) in realized.iter().enumerate() {
                sum += r - draws.y_miss_draws[(i, c)];
            }
            sum / n_cells
        })
        .collect())
}

/// Full effect summary with per-period counterfactual series and bands at
/// the requested coverage levels.
pub fn atet_posterior(
    draws: &PosteriorDraws,
    data: &PanelData,
    levels: &[f64],
) -> Result<EffectSummary> {
    let per_draw = atet_draws(draws, data)?;
    let n = per_draw.len();
    if n < 2 {
        return Err(Error::Estimation(
            "effect summary needs at least 2 retained draws".into(),
        ));
    }
    for &level in levels {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidLevel(level));
        }
    }
    let mean = per_draw.iter().sum::<f64>() / n as f64;
    let var = per_draw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let mut sorted = per_draw.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let quantiles: Vec<(f64, f64)> = QUANTILE_LEVELS
        .iter()
        .map(|&p| (p, quantile_sorted(&sorted, p)))
        .collect();

    // Units with any treated cell drive the per-period series.
    let treated_units: Vec<usize> = (0..data.n_units())
        .filter(|&j| (0..data.n_periods()).any(|t| data.is_treated(j, t)))
        .collect();
    let cell_column: std::collections::HashMap<(usize, usize), usize> = draws
        .treated_cells
        .iter()
        .enumerate()
        .map(|(c, &cell)| (cell, c))
        .collect();

    let mut per_period = Vec::with_capacity(data.n_periods());
    for t in 0..data.n_periods() {
        let realized = treated_units
            .iter()
            .map(|&j| data.outcomes[(j, t)])
            .sum::<f64>()
            / treated_units.len() as f64;
        let treated_here: Vec<usize> = treated_units
            .iter()
            .filter(|&&j| data.is_treated(j, t))
            .map(|&j| cell_column[&(j, t)])
            .collect();

        let (cf_mean, bands) = if treated_here.is_empty() {
            let bands = levels
                .iter()
                .map(|&level| Band {
                    level,
                    low: realized,
                    high: realized,
                })
                .collect();
            (realized, bands)
        } else {
            // Draw-wise average over the period's treated cells.
            let series: Vec<f64> = (0..n)
                .map(|i| {
                    treated_here
                        .iter()
                        .map(|&c| draws.y_miss_draws[(i, c)])
                        .sum::<f64>()
                        / treated_here.len() as f64
                })
                .collect();
            let cf_mean = series.iter().sum::<f64>() / n as f64;
            let bands = levels
                .iter()
                .map(|&level| {
                    let (low, high) = credible_interval(&series, level)?;
                    Ok(Band { level, low, high })
                })
                .collect::<Result<Vec<_>>>()?;
            (cf_mean, bands)
        };
        per_period.push(PeriodSummary {
            period_index: t,
            period: data.period_labels[t].clone(),
            realized,
            counterfactual_mean: cf_mean,
            bands,
        });
    }

    Ok(EffectSummary {
        atet_mean: mean,
        atet_sd: var.sqrt(),
        atet_quantiles: quantiles,
        per_period,
    })
}

/// Posterior mean of each singular value of the low-rank component,
/// descending.
pub fn eigenvalue_summary(draws: &PosteriorDraws) -> Vec<f64> {
    let n = draws.n_draws();
    if n == 0 {
        return Vec::new();
    }
    let mut means: Vec<f64> = (0..draws.gamma_eig_draws.ncols())
        .map(|k| draws.gamma_eig_draws.column(k).sum() / n as f64)
        .collect();
    means.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    means
}

/// Posterior mean and band per loading coordinate of one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingSummary {
    pub unit: usize,
    pub level: f64,
    /// (mean, low, high) per factor column.
    pub coordinates: Vec<(f64, f64, f64)>,
}

/// Summarizes the posterior of one unit's loading row; requires the
/// sampler to have retained loading draws.
pub fn loading_summary(draws: &PosteriorDraws, unit: usize, level: f64) -> Result<LoadingSummary> {
    let stored = draws
        .phi_row_draws
        .as_ref()
        .ok_or_else(|| Error::DrawsNotRetained("loading draws".into()))?;
    if stored.is_empty() {
        return Err(Error::EmptySamples);
    }
    let (j_n, h) = stored[0].shape();
    if unit >= j_n {
        return Err(Error::Estimation(format!(
            "unit {unit} outside panel with {j_n} units"
        )));
    }
    let mut coordinates = Vec::with_capacity(h);
    for k in 0..h {
        let series: Vec<f64> = stored.iter().map(|phi| phi[(unit, k)]).collect();
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let (low, high) = credible_interval(&series, level)?;
        coordinates.push((mean, low, high));
    }
    Ok(LoadingSummary {
        unit,
        level,
        coordinates,
    })
}

/// Convenience: posterior mean of the imputed counterfactual at each
/// treated cell, aligned with `draws.treated_cells`.
pub fn posterior_mean_imputations(draws: &PosteriorDraws) -> DVector<f64> {
    let n = draws.n_draws() as f64;
    DVector::from_fn(draws.treated_cells.len(), |c, _| {
        draws.y_miss_draws.column(c).sum() / n
    })
}
