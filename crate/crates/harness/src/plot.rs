//! Standalone SVG line charts of virality against network polarization.

use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::csv::{parse_csv, CsvRow};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const PLOT_LEFT: f64 = 70.0;
const PLOT_RIGHT: f64 = 630.0;
const PLOT_TOP: f64 = 30.0;
const PLOT_BOTTOM: f64 = 460.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Group parsed rows into one series per theta, in file order.
fn collect_series(rows: &[CsvRow]) -> Vec<Series> {
    let mut series: Vec<(f64, Option<u32>, Vec<(f64, f64)>)> = Vec::new();
    for row in rows {
        let slot = series
            .iter_mut()
            .find(|(theta, delay, _)| *theta == row.theta && *delay == row.sa_delay);
        let points = match slot {
            Some((_, _, points)) => points,
            None => {
                series.push((row.theta, row.sa_delay, Vec::new()));
                &mut series.last_mut().unwrap().2
            }
        };
        points.push((row.p_n, row.virality));
    }
    series
        .into_iter()
        .map(|(theta, delay, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let label = match delay {
                Some(d) => format!("theta {theta:.3}, sa-delay {d}"),
                None => format!("theta {theta:.3}, baseline"),
            };
            Series { label, points }
        })
        .collect()
}

fn x_scale(p_n: f64, min: f64, max: f64) -> f64 {
    let span = if max > min { max - min } else { 1.0 };
    PLOT_LEFT + (p_n - min) / span * (PLOT_RIGHT - PLOT_LEFT)
}

fn y_scale(v: f64) -> f64 {
    PLOT_BOTTOM - v.clamp(0.0, 1.0) * (PLOT_BOTTOM - PLOT_TOP)
}

/// Render the chart: one polyline per series, a dashed reference at the 0.5
/// critical level, axes with ticks and a legend.
pub fn render_svg(series: &[Series]) -> String {
    let xs: Vec<f64> = series
        .first()
        .map(|s| s.points.iter().map(|p| p.0).collect())
        .unwrap_or_default();
    let (xmin, xmax) = (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Gridlines and y ticks.
    for i in 0..=5 {
        let v = f64::from(i) / 5.0;
        let y = y_scale(v);
        svg.push_str(&format!(
            "<line x1=\"{PLOT_LEFT}\" y1=\"{y:.1}\" x2=\"{PLOT_RIGHT}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.1}</text>\n",
            PLOT_LEFT - 8.0,
            y + 4.0
        ));
    }
    // x ticks on the shared grid.
    for &x in &xs {
        let px = x_scale(x, xmin, xmax);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{PLOT_BOTTOM}\" x2=\"{px:.1}\" y2=\"{:.1}\" \
             stroke=\"black\" stroke-width=\"1\"/>\n",
            PLOT_BOTTOM + 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x:.1}</text>\n",
            PLOT_BOTTOM + 22.0
        ));
    }
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{PLOT_LEFT}\" y1=\"{PLOT_TOP}\" x2=\"{PLOT_LEFT}\" y2=\"{PLOT_BOTTOM}\" \
         stroke=\"black\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{PLOT_LEFT}\" y1=\"{PLOT_BOTTOM}\" x2=\"{PLOT_RIGHT}\" y2=\"{PLOT_BOTTOM}\" \
         stroke=\"black\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">p_n</text>\n",
        (PLOT_LEFT + PLOT_RIGHT) / 2.0,
        PLOT_BOTTOM + 45.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.1})\">virality</text>\n",
        (PLOT_TOP + PLOT_BOTTOM) / 2.0,
        (PLOT_TOP + PLOT_BOTTOM) / 2.0
    ));

    // Critical-threshold reference.
    let y_half = y_scale(0.5);
    svg.push_str(&format!(
        "<line x1=\"{PLOT_LEFT}\" y1=\"{y_half:.1}\" x2=\"{PLOT_RIGHT}\" y2=\"{y_half:.1}\" \
         stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n"
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(x, v)| format!("{:.1},{:.1}", x_scale(x, xmin, xmax), y_scale(v)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        // Legend entry.
        let ly = PLOT_TOP + 20.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n",
            PLOT_RIGHT + 18.0,
            PLOT_RIGHT + 46.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            PLOT_RIGHT + 52.0,
            ly + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Read one or more aggregate CSVs and chart every (theta, sa-delay) series
/// against the shared p_n grid. Nothing is written when the input is empty
/// or the grids disagree.
pub fn plot_virality(csv_paths: &[std::path::PathBuf], out_path: &Path) -> Result<()> {
    let mut series = Vec::new();
    for path in csv_paths {
        let rows = parse_csv(path)?;
        if rows.is_empty() {
            bail!("{}: no data rows to plot", path.display());
        }
        series.extend(collect_series(&rows));
    }
    if series.is_empty() {
        bail!("nothing to plot");
    }
    let reference: Vec<f64> = series[0].points.iter().map(|p| p.0).collect();
    for s in &series[1..] {
        let grid: Vec<f64> = s.points.iter().map(|p| p.0).collect();
        if grid != reference {
            bail!(
                "series {:?} has p_n grid {:?}, expected {:?}",
                s.label,
                grid,
                reference
            );
        }
    }
    let svg = render_svg(&series);
    std::fs::write(out_path, svg)
        .with_context(|| format!("writing SVG to {}", out_path.display()))
}
