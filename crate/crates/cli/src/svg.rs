//! Minimal hand-rolled SVG line chart: realized series, counterfactual
//! posterior mean, and shaded credible bands.

use bmc_core::effects::EffectSummary;

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;

struct Scale {
    t_min: f64,
    t_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn x(&self, t: f64) -> f64 {
        let span = (self.t_max - self.t_min).max(1e-12);
        MARGIN_LEFT + (t - self.t_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn fmt(v: f64) -> String {
    format!("{:.2}", v)
}

fn polyline(points: &[(f64, f64)], style: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y)))
        .collect();
    format!("<polyline points=\"{}\" {style}/>\n", coords.join(" "))
}

/// Renders the per-period summary as a deterministic standalone SVG.
pub fn render_effect_chart(effects: &EffectSummary) -> String {
    let periods = &effects.per_period;
    let n = periods.len();
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for p in periods {
        y_min = y_min.min(p.realized).min(p.counterfactual_mean);
        y_max = y_max.max(p.realized).max(p.counterfactual_mean);
        for b in &p.bands {
            y_min = y_min.min(b.low);
            y_max = y_max.max(b.high);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    let pad = 0.05 * (y_max - y_min).max(1e-12);
    let scale = Scale {
        t_min: 0.0,
        t_max: (n.max(2) - 1) as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         fill=\"white\"/>\n"
    ));

    // Shaded bands, widest level first so narrower bands stay visible.
    let mut levels: Vec<f64> = periods
        .first()
        .map(|p| p.bands.iter().map(|b| b.level).collect())
        .unwrap_or_default();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for (rank, level) in levels.iter().enumerate() {
        let shade = if rank == 0 { "#d6d6d6" } else { "#ababab" };
        let mut outline: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
        for (t, p) in periods.iter().enumerate() {
            let b = p.bands.iter().find(|b| b.level == *level).expect("level");
            outline.push((scale.x(t as f64), scale.y(b.high)));
        }
        for (t, p) in periods.iter().enumerate().rev() {
            let b = p.bands.iter().find(|b| b.level == *level).expect("level");
            outline.push((scale.x(t as f64), scale.y(b.low)));
        }
        let coords: Vec<String> = outline
            .iter()
            .map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y)))
            .collect();
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{shade}\" stroke=\"none\"/>\n",
            coords.join(" ")
        ));
    }

    // Treatment start marker: the first period whose bands do not collapse.
    if let Some(first_treated) = periods.iter().position(|p| {
        p.bands
            .iter()
            .any(|b| b.low != p.counterfactual_mean || b.high != p.counterfactual_mean)
    }) {
        let x = fmt(scale.x(first_treated as f64));
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#666666\" \
             stroke-dasharray=\"6,4\" stroke-width=\"1\"/>\n",
            fmt(MARGIN_TOP),
            fmt(HEIGHT - MARGIN_BOTTOM)
        ));
    }

    let realized: Vec<(f64, f64)> = periods
        .iter()
        .enumerate()
        .map(|(t, p)| (scale.x(t as f64), scale.y(p.realized)))
        .collect();
    let counterfactual: Vec<(f64, f64)> = periods
        .iter()
        .enumerate()
        .map(|(t, p)| (scale.x(t as f64), scale.y(p.counterfactual_mean)))
        .collect();
    svg.push_str(&polyline(
        &realized,
        "fill=\"none\" stroke=\"black\" stroke-width=\"2\"",
    ));
    svg.push_str(&polyline(
        &counterfactual,
        "fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"",
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = fmt(MARGIN_LEFT),
        r = fmt(WIDTH - MARGIN_RIGHT),
        t = fmt(MARGIN_TOP),
        b = fmt(HEIGHT - MARGIN_BOTTOM),
    ));
    // Sparse x tick labels.
    let tick_count = 6.min(n.max(1));
    for k in 0..tick_count {
        let t = if tick_count == 1 {
            0
        } else {
            k * (n - 1) / (tick_count - 1)
        };
        let x = scale.x(t as f64);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{b}\" x2=\"{x}\" y2=\"{b2}\" stroke=\"black\"/>\n\
             <text x=\"{x}\" y=\"{ty}\" font-size=\"12\" text-anchor=\"middle\">{label}</text>\n",
            x = fmt(x),
            b = fmt(HEIGHT - MARGIN_BOTTOM),
            b2 = fmt(HEIGHT - MARGIN_BOTTOM + 6.0),
            ty = fmt(HEIGHT - MARGIN_BOTTOM + 22.0),
            label = periods[t].period,
        ));
    }
    // Y tick labels.
    for k in 0..5 {
        let v = scale.y_min + (scale.y_max - scale.y_min) * k as f64 / 4.0;
        let y = scale.y(v);
        svg.push_str(&format!(
            "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\" font-size=\"12\" text-anchor=\"end\">{label}</text>\n",
            x1 = fmt(MARGIN_LEFT - 6.0),
            x2 = fmt(MARGIN_LEFT),
            y = fmt(y),
            tx = fmt(MARGIN_LEFT - 10.0),
            ty = fmt(y + 4.0),
            label = fmt(v),
        ));
    }
    // Legend.
    svg.push_str(&format!(
        "<line x1=\"{x}\" y1=\"20\" x2=\"{x2}\" y2=\"20\" stroke=\"black\" stroke-width=\"2\"/>\n\
         <text x=\"{tx}\" y=\"24\" font-size=\"12\">realized</text>\n\
         <line x1=\"{x3}\" y1=\"20\" x2=\"{x4}\" y2=\"20\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n\
         <text x=\"{tx2}\" y=\"24\" font-size=\"12\">counterfactual mean</text>\n",
        x = fmt(MARGIN_LEFT),
        x2 = fmt(MARGIN_LEFT + 30.0),
        tx = fmt(MARGIN_LEFT + 36.0),
        x3 = fmt(MARGIN_LEFT + 120.0),
        x4 = fmt(MARGIN_LEFT + 150.0),
        tx2 = fmt(MARGIN_LEFT + 156.0),
    ));
    svg.push_str("</svg>\n");
    svg
}
