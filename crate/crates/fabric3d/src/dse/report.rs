//! CSV reports and geomean summaries.

use std::collections::BTreeMap;

use super::ReportRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "benchmark,config_id,seed,wl,cpd_ps,route_iters,route_ms,vert_total,vert_per_grid,crossings,status,error";

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.3},{},{},{},{:.4},{:.4},{},{}\n",
            r.benchmark,
            r.config_id,
            r.seed,
            r.wl,
            r.cpd_ps,
            r.route_iters,
            r.route_ms,
            r.vert_total,
            r.vert_per_grid,
            r.crossings,
            if r.status_ok { "ok" } else { "failed" },
            r.error
        ));
    }
    s
}

pub fn from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Report(format!("unexpected CSV header {:?}", other.unwrap_or(""))))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(12, ',').collect();
        if f.len() != 12 {
            return Err(Error::Report(format!("row {} has {} fields", i + 2, f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Report(format!("row {}: bad {what} {s:?}", i + 2)))
        };
        rows.push(ReportRow {
            benchmark: f[0].to_string(),
            config_id: f[1].to_string(),
            seed: num(f[2], "seed")? as u64,
            wl: num(f[3], "wl")? as u64,
            cpd_ps: num(f[4], "cpd")?,
            route_iters: num(f[5], "iters")? as u32,
            route_ms: num(f[6], "ms")? as u64,
            vert_total: num(f[7], "vert_total")? as u64,
            vert_per_grid: num(f[8], "vert_per_grid")?,
            crossings: num(f[9], "crossings")?,
            status_ok: f[10] == "ok",
            error: f[11].to_string(),
            route_effort: 0,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub config_id: String,
    /// Geomean WL divided by the baseline geomean.
    pub wl_ratio: f64,
    pub cpd_ratio: f64,
    /// Percent reductions, `100 x (1 - ratio)`.
    pub wl_reduction_pct: f64,
    pub cpd_reduction_pct: f64,
    /// Paired samples behind the geomeans.
    pub samples: usize,
}

fn geomean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// Per-config geometric means of WL and CPD over (benchmark, seed) pairs
/// successful in both the config and the named baseline, normalized to the
/// baseline's geomeans.
pub fn summarize(rows: &[ReportRow], baseline: &str) -> Result<Vec<SummaryRow>> {
    let mut by_config: BTreeMap<&str, BTreeMap<(&str, u64), (f64, f64)>> = BTreeMap::new();
    for r in rows {
        if r.status_ok && r.wl > 0 {
            by_config
                .entry(&r.config_id)
                .or_default()
                .insert((&r.benchmark, r.seed), (r.wl as f64, r.cpd_ps));
        }
    }
    let base = by_config
        .get(baseline)
        .ok_or_else(|| Error::Report(format!("baseline config {baseline:?} not in report")))?
        .clone();

    let mut out = Vec::new();
    for (config, samples) in &by_config {
        let mut wl = Vec::new();
        let mut cpd = Vec::new();
        let mut wl_base = Vec::new();
        let mut cpd_base = Vec::new();
        for (key, &(w, c)) in samples {
            if let Some(&(wb, cb)) = base.get(key) {
                wl.push(w);
                cpd.push(c);
                wl_base.push(wb);
                cpd_base.push(cb);
            }
        }
        if wl.is_empty() {
            continue;
        }
        let wl_ratio = geomean(&wl) / geomean(&wl_base);
        let cpd_ratio = geomean(&cpd) / geomean(&cpd_base);
        out.push(SummaryRow {
            config_id: config.to_string(),
            wl_ratio,
            cpd_ratio,
            wl_reduction_pct: 100.0 * (1.0 - wl_ratio),
            cpd_reduction_pct: 100.0 * (1.0 - cpd_ratio),
            samples: wl.len(),
        });
    }
    Ok(out)
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = String::from("config_id,wl_geomean_ratio,wl_reduction_pct,cpd_geomean_ratio,cpd_reduction_pct,samples\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:.4},{:.2},{:.4},{:.2},{}\n",
            r.config_id, r.wl_ratio, r.wl_reduction_pct, r.cpd_ratio, r.cpd_reduction_pct, r.samples
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(benchmark: &str, config: &str, seed: u64, wl: u64, cpd: f64) -> ReportRow {
        ReportRow {
            benchmark: benchmark.into(),
            config_id: config.into(),
            seed,
            wl,
            cpd_ps: cpd,
            route_iters: 1,
            route_ms: 0,
            vert_total: 0,
            vert_per_grid: 0.0,
            crossings: 0.0,
            status_ok: true,
            error: String::new(),
            route_effort: 0,
        }
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![row("a", "c1", 1, 10, 500.0), row("b", "c1", 2, 20, 750.5)];
        let text = to_csv(&rows);
        assert!(text.starts_with(CSV_HEADER));
        let back = from_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].wl, 10);
        assert!(to_csv(&[]).lines().count() == 1);
    }

    #[test]
    fn identical_configs_summarize_to_unity() {
        let rows = vec![
            row("a", "base", 1, 10, 100.0),
            row("b", "base", 1, 30, 300.0),
            row("a", "same", 1, 10, 100.0),
            row("b", "same", 1, 30, 300.0),
        ];
        let summary = summarize(&rows, "base").unwrap();
        for s in &summary {
            assert!((s.wl_ratio - 1.0).abs() < 1e-12);
            assert!((s.cpd_ratio - 1.0).abs() < 1e-12);
            assert!(s.wl_reduction_pct.abs() < 1e-9);
        }
    }

    #[test]
    fn reciprocal_ratios_cancel_in_geomean() {
        // WL ratios 0.5 and 2.0 -> geomean ratio exactly 1.0.
        let rows = vec![
            row("a", "base", 1, 10, 100.0),
            row("b", "base", 1, 10, 100.0),
            row("a", "cfg", 1, 5, 100.0),
            row("b", "cfg", 1, 20, 100.0),
        ];
        let summary = summarize(&rows, "base").unwrap();
        let cfg = summary.iter().find(|s| s.config_id == "cfg").unwrap();
        assert!((cfg.wl_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_geomeans() {
        // Config WLs 8 and 50 against baseline 10 and 40:
        // geomean(8,50)/geomean(10,40) = 20/20 = 1.
        let rows = vec![
            row("a", "base", 1, 10, 200.0),
            row("b", "base", 1, 40, 200.0),
            row("a", "cfg", 1, 8, 100.0),
            row("b", "cfg", 1, 50, 400.0),
        ];
        let summary = summarize(&rows, "base").unwrap();
        let cfg = summary.iter().find(|s| s.config_id == "cfg").unwrap();
        assert!((cfg.wl_ratio - 1.0).abs() < 1e-12, "{}", cfg.wl_ratio);
        assert!((cfg.cpd_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance_of_normalized_ratios() {
        let rows = vec![
            row("a", "base", 1, 10, 100.0),
            row("a", "cfg", 1, 7, 70.0),
        ];
        let scaled: Vec<ReportRow> = rows
            .iter()
            .map(|r| ReportRow { wl: r.wl * 13, ..r.clone() })
            .collect();
        let a = summarize(&rows, "base").unwrap();
        let b = summarize(&scaled, "base").unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.wl_ratio - y.wl_ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_baseline_is_an_error() {
        assert!(summarize(&[row("a", "c", 1, 1, 1.0)], "nope").is_err());
    }
}
