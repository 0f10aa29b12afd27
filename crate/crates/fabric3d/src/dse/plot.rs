//! Deterministic SVG plots for sweep reports: bars per benchmark, lines
//! against the vertical delay ratio, and per-config box plots of the seed
//! distribution.

use std::collections::BTreeMap;

use super::ReportRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// WL bars per benchmark, one series per config.
    BarWirelength,
    /// CPD against the `rho=` value parsed from config ids.
    LineCpdVsRatio,
    /// CPD distribution over seeds, one box per config.
    BoxCpdBySeed,
}

impl PlotKind {
    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "bar" => PlotKind::BarWirelength,
            "line" => PlotKind::LineCpdVsRatio,
            "box" => PlotKind::BoxCpdBySeed,
            _ => return None,
        })
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const ML: f64 = 70.0;
const MB: f64 = 90.0;
const MT: f64 = 20.0;
const MR: f64 = 20.0;

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<!-- {title} -->\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    )
}

fn axes(y_label: &str, x_label: &str, y_max: f64) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    s.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-size=\"12\" transform=\"rotate(-90 14 {:.2})\">{y_label}</text>\n",
        H / 2.0,
        H / 2.0
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 8.0
    ));
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let y = H - MB - (H - MB - MT) * i as f64 / 4.0;
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{:.1}</text>\n",
            ML - 4.0,
            y + 3.0,
            v
        ));
    }
    s
}

const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn y_pos(v: f64, y_max: f64) -> f64 {
    H - MB - (H - MB - MT) * (v / y_max)
}

/// Type-7 quantile (linear interpolation), the default in most statistics
/// environments.
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() as f64 - 1.0) * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Renders the requested plot; errors on an empty report. Output bytes are
/// deterministic for fixed input.
pub fn emit_plot(rows: &[ReportRow], kind: PlotKind) -> Result<String> {
    let ok: Vec<&ReportRow> = rows.iter().filter(|r| r.status_ok).collect();
    if ok.is_empty() {
        return Err(Error::Report("empty report: nothing to plot".into()));
    }
    match kind {
        PlotKind::BarWirelength => bar_wl(&ok),
        PlotKind::LineCpdVsRatio => line_cpd(&ok),
        PlotKind::BoxCpdBySeed => box_cpd(&ok),
    }
}

fn bar_wl(rows: &[&ReportRow]) -> Result<String> {
    // Mean WL per (benchmark, config) over seeds.
    let mut acc: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = acc.entry((&r.benchmark, &r.config_id)).or_insert((0.0, 0));
        e.0 += r.wl as f64;
        e.1 += 1;
    }
    let benchmarks: Vec<&str> = {
        let mut b: Vec<&str> = acc.keys().map(|&(b, _)| b).collect();
        b.sort_unstable();
        b.dedup();
        b
    };
    let configs: Vec<&str> = {
        let mut c: Vec<&str> = acc.keys().map(|&(_, c)| c).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let y_max = acc.values().map(|&(s, n)| s / n as f64).fold(1.0f64, f64::max) * 1.1;
    let mut s = svg_open("wirelength per benchmark");
    s.push_str(&axes("wirelength [tiles]", "benchmark", y_max));
    let group_w = (W - ML - MR) / benchmarks.len() as f64;
    let bar_w = (group_w * 0.8) / configs.len() as f64;
    for (bi, bench) in benchmarks.iter().enumerate() {
        let gx = ML + group_w * bi as f64 + group_w * 0.1;
        for (ci, cfg) in configs.iter().enumerate() {
            if let Some(&(sum, n)) = acc.get(&(*bench, *cfg)) {
                let v = sum / n as f64;
                let y = y_pos(v, y_max);
                s.push_str(&format!(
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                    gx + bar_w * ci as f64,
                    y,
                    bar_w,
                    H - MB - y,
                    COLORS[ci % COLORS.len()]
                ));
            }
        }
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{bench}</text>\n",
            gx + group_w * 0.4,
            H - MB + 14.0
        ));
    }
    for (ci, cfg) in configs.iter().enumerate() {
        s.push_str(&format!(
            "<text x=\"{ML}\" y=\"{:.2}\" font-size=\"10\" fill=\"{}\">{cfg}</text>\n",
            H - MB + 30.0 + 12.0 * ci as f64,
            COLORS[ci % COLORS.len()]
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn parse_rho(config_id: &str) -> Option<f64> {
    config_id.split_whitespace().find_map(|t| t.strip_prefix("rho=")?.parse().ok())
}

fn line_cpd(rows: &[&ReportRow]) -> Result<String> {
    let mut acc: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for r in rows {
        let Some(rho) = parse_rho(&r.config_id) else { continue };
        let e = acc.entry(rho.to_bits()).or_insert((0.0, 0));
        e.0 += r.cpd_ps;
        e.1 += 1;
    }
    if acc.is_empty() {
        return Err(Error::Report("no rho= axis in config ids".into()));
    }
    let mut points: Vec<(f64, f64)> =
        acc.into_iter().map(|(rho, (s, n))| (f64::from_bits(rho), s / n as f64)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x_max = points.last().unwrap().0;
    let y_max = points.iter().map(|&(_, y)| y).fold(1.0f64, f64::max) * 1.1;
    let mut s = svg_open("cpd vs vertical delay ratio");
    s.push_str(&axes("CPD [ps]", "vertical delay ratio", y_max));
    let mut path = String::new();
    for (i, &(x, y)) in points.iter().enumerate() {
        let px = ML + (W - ML - MR) * (x / x_max);
        let py = y_pos(y, y_max);
        path.push_str(&format!("{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, px, py));
        s.push_str(&format!("<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"#1f77b4\"/>\n"));
        s.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{x}</text>\n",
            H - MB + 14.0
        ));
    }
    s.push_str(&format!("<path d=\"{path}\" stroke=\"#1f77b4\" fill=\"none\"/>\n"));
    s.push_str("</svg>\n");
    Ok(s)
}

fn box_cpd(rows: &[&ReportRow]) -> Result<String> {
    let mut by_config: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_config.entry(&r.config_id).or_default().push(r.cpd_ps);
    }
    let y_max = rows.iter().map(|r| r.cpd_ps).fold(1.0f64, f64::max) * 1.1;
    let mut s = svg_open("cpd distribution per config");
    s.push_str(&axes("CPD [ps]", "config", y_max));
    let n = by_config.len();
    let slot = (W - ML - MR) / n as f64;
    for (i, (cfg, values)) in by_config.iter_mut().enumerate() {
        values.sort_by(f64::total_cmp);
        let q1 = quantile_type7(values, 0.25);
        let q2 = quantile_type7(values, 0.5);
        let q3 = quantile_type7(values, 0.75);
        let lo = values[0];
        let hi = values[values.len() - 1];
        let cx = ML + slot * (i as f64 + 0.5);
        let bw = slot * 0.4;
        for (a, b) in [(lo, q1), (q3, hi)] {
            s.push_str(&format!(
                "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
                y_pos(a, y_max),
                y_pos(b, y_max)
            ));
        }
        s.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{bw:.2}\" height=\"{:.2}\" fill=\"#aec7e8\" stroke=\"black\"/>\n",
            cx - bw / 2.0,
            y_pos(q3, y_max),
            (y_pos(q1, y_max) - y_pos(q3, y_max)).max(0.5)
        ));
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            cx - bw / 2.0,
            y_pos(q2, y_max),
            cx + bw / 2.0,
            y_pos(q2, y_max)
        ));
        s.push_str(&format!(
            "<text x=\"{cx:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"middle\">{cfg}</text>\n",
            H - MB + 14.0
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}
