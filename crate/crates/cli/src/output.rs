//! Artifact emission: report.json, tables/*.csv and optional plots/*.svg.

use std::fs;
use std::path::Path;

use levymax::experiments::Table;
use plotters::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

#[derive(Serialize)]
pub struct Report<'a> {
    pub experiment: &'a str,
    pub passed: bool,
    pub seed: Option<u64>,
    pub config: &'a ExperimentConfig,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub tables: Vec<String>,
    pub files: Vec<String>,
}

pub fn write_report(dir: &Path, report: &Report) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    fs::write(dir.join(name), text + "\n")
}

pub fn write_table(dir: &Path, t: &Table) -> std::io::Result<()> {
    let dir = dir.join("tables");
    fs::create_dir_all(&dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", t.name)))?;
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()
}

/// Columns drawn against h when a table has one.
const PLOTTED: [&str; 8] =
    ["error", "sup_error", "gcp_violation", "norm", "grad_err", "hess_err", "max_abs_error", "residual"];

type Series = (String, Vec<(f64, f64)>);

fn series_of(t: &Table) -> Vec<Series> {
    let Some(hc) = t.header.iter().position(|c| c == "h") else {
        return Vec::new();
    };
    let group = t.header.iter().position(|c| c == "beta");
    let mut groups: Vec<f64> = group.map(|g| t.rows.iter().map(|r| r[g]).collect()).unwrap_or_else(|| vec![f64::NAN]);
    groups.sort_by(f64::total_cmp);
    groups.dedup_by(|a, b| a.to_bits() == b.to_bits());
    let mut out = Vec::new();
    for (c, name) in t.header.iter().enumerate().filter(|(_, n)| PLOTTED.contains(&n.as_str())) {
        for &gv in &groups {
            let pts: Vec<(f64, f64)> = t
                .rows
                .iter()
                .filter(|r| group.map_or(true, |g| r[g].to_bits() == gv.to_bits()))
                .map(|r| (r[hc], r[c]))
                .filter(|(h, v)| *h > 0.0 && *v > 0.0 && v.is_finite())
                .collect();
            if pts.len() >= 2 {
                let label = if group.is_some() { format!("{name} (beta {gv})") } else { name.clone() };
                out.push((label, pts));
            }
        }
    }
    out
}

/// Log-log plot of the table's error columns against h; returns false when the
/// table has nothing to plot.
pub fn plot_table(dir: &Path, t: &Table) -> Result<bool, Box<dyn std::error::Error>> {
    let series = series_of(t);
    if series.is_empty() {
        return Ok(false);
    }
    let dir = dir.join("plots");
    fs::create_dir_all(&dir)?;
    let all = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let path = dir.join(format!("{}.svg", t.name));
    let root = SVGBackend::new(&path, (720, 480)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(&t.name, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d((x0 / 1.5..x1 * 1.5).log_scale(), (y0 / 2.0..y1 * 2.0).log_scale())?;
    chart.configure_mesh().x_desc("h").y_desc("value").draw()?;
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        chart.draw_series(pts.iter().map(|p| Circle::new(*p, 3, color.filled())))?;
    }
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE.mix(0.8)).draw()?;
    root.present()?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_grouped_by_beta() {
        let mut t = Table::new("rates", &["beta", "level", "h", "error"]);
        t.rows = vec![
            vec![0.5, 2.0, 0.1, 1.0],
            vec![0.5, 3.0, 0.05, 0.5],
            vec![1.5, 2.0, 0.1, 2.0],
            vec![1.5, 3.0, 0.05, 0.0],
        ];
        let s = series_of(&t);
        // the β = 1.5 group keeps one positive point only
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].0, "error (beta 0.5)");
        let none = Table::new("x", &["level", "value"]);
        assert!(series_of(&none).is_empty());
    }
}
