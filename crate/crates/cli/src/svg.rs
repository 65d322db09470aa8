//! Deterministic SVG calibration plots: the band as two step polylines
//! against the ranking, mean estimates as points, out-of-band points in a
//! flagged style. Identical inputs produce byte-identical files.

use crate::io::BandRecord;
use anyhow::bail;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotScale {
    Linear,
    Log,
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 620.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;

pub fn render_plot(records: &[BandRecord], scale: PlotScale) -> anyhow::Result<String> {
    if records.is_empty() {
        bail!("nothing to plot");
    }
    let t = |x: f64| -> anyhow::Result<f64> {
        match scale {
            PlotScale::Linear => Ok(x),
            PlotScale::Log => {
                if x <= 0.0 && x.is_finite() {
                    bail!("log scale requires positive values, got {x}");
                }
                Ok(x.log10())
            }
        }
    };

    // Ranks and estimates must transform cleanly; band edges at zero or
    // infinity are clipped to the padded frame instead.
    let mut xs = Vec::with_capacity(records.len());
    let mut ys = Vec::new();
    for r in records {
        xs.push(t(r.rank)?);
        ys.push(t(r.mu_hat)?);
        for edge in [r.lower, r.upper] {
            if edge.is_finite() && (scale == PlotScale::Linear || edge > 0.0) {
                ys.push(t(edge)?);
            }
        }
    }
    let (x_lo, x_hi) = padded_range(&xs);
    let (y_lo, y_hi) = padded_range(&ys);

    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let xf = (x - x_lo) / (x_hi - x_lo);
        let yf = (y - y_lo) / (y_hi - y_lo);
        (
            MARGIN_L + xf * (WIDTH - MARGIN_L - MARGIN_R),
            HEIGHT - MARGIN_B - yf * (HEIGHT - MARGIN_T - MARGIN_B),
        )
    };
    let clampv = |v: f64| v.clamp(y_lo, y_hi);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Axes frame and ticks.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    ));
    for i in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let (px, _) = to_px(fx, y_lo);
        let (_, py) = to_px(x_lo, fy);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_B + 18.0,
            tick_label(fx, scale)
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{MARGIN_L}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 8.0,
            py + 4.0,
            tick_label(fy, scale)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">ranking</text>\n",
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">mean</text>\n",
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0
    ));

    // Band edges in transformed space, clipped to the frame.
    let edge_y = |v: f64| -> f64 {
        if !v.is_finite() {
            return if v > 0.0 { y_hi } else { y_lo };
        }
        let tv = match scale {
            PlotScale::Linear => v,
            PlotScale::Log => {
                if v <= 0.0 {
                    return y_lo;
                }
                v.log10()
            }
        };
        clampv(tv)
    };

    // Lower band: each value holds from its rank rightwards.
    let mut lower_pts = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let lv = edge_y(r.lower);
        if i > 0 {
            let prev = lower_pts.last().map(|&(_, y)| y).unwrap();
            lower_pts.push((xs[i], prev));
        }
        lower_pts.push((xs[i], lv));
    }
    // Upper band: each value holds up to its rank from the left.
    let mut upper_pts: Vec<(f64, f64)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let uv = edge_y(r.upper);
        if i > 0 {
            upper_pts.push((xs[i - 1], uv));
        }
        upper_pts.push((xs[i], uv));
    }
    for (pts, name) in [(lower_pts, "band-lower"), (upper_pts, "band-upper")] {
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        svg.push_str(&format!(
            "<polyline class=\"{name}\" fill=\"none\" stroke=\"#cc2222\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
    }

    // Mean estimates, flagged when outside the band.
    for (i, r) in records.iter().enumerate() {
        let (px, py) = to_px(xs[i], clampv(t(r.mu_hat)?));
        if r.inside {
            svg.push_str(&format!(
                "<circle class=\"pt-in\" cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.5\" fill=\"black\"/>\n"
            ));
        } else {
            svg.push_str(&format!(
                "<circle class=\"pt-out\" cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3.5\" fill=\"#1a9c3a\" stroke=\"black\" stroke-width=\"0.8\"/>\n"
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn padded_range(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn tick_label(v: f64, scale: PlotScale) -> String {
    match scale {
        PlotScale::Linear => trim_float(v),
        PlotScale::Log => format!("1e{}", trim_float(v)),
    }
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}
