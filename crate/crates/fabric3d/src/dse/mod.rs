//! Design-space exploration: single flows, parameter sweeps, reports, and
//! plots.

pub mod plot;
pub mod report;

pub use report::{summarize, SummaryRow};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::arch::{ArchSpec, ConnectionType, SbPattern, SbPlacement};
use crate::bitstream::{build_rrg_for, generate_bitstream};
use crate::error::Result;
use crate::fabric::annotate;
use crate::pnr::{pack, place, route, sta, DelayModel, PackedNetlist, PlaceParams, RouteParams, RoutingResult};
use crate::rrg::RoutingResourceGraph;
use crate::vertical::{count_layer_crossings, count_vertical};

/// One sweep result row. `route_ms` is wall-clock unless the sweep runs
/// with deterministic timing, where it reports 0 so CSV bytes are
/// reproducible across parallelism degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub benchmark: String,
    pub config_id: String,
    pub seed: u64,
    pub wl: u64,
    pub cpd_ps: f64,
    pub route_iters: u32,
    pub route_ms: u64,
    pub vert_total: u64,
    pub vert_per_grid: f64,
    pub crossings: f64,
    pub status_ok: bool,
    pub error: String,
    /// Deterministic router effort (heap pops); not part of the CSV.
    pub route_effort: u64,
}

impl ReportRow {
    fn failed(benchmark: &str, config_id: &str, seed: u64, error: String) -> Self {
        ReportRow {
            benchmark: benchmark.to_string(),
            config_id: config_id.to_string(),
            seed,
            wl: 0,
            cpd_ps: 0.0,
            route_iters: 0,
            route_ms: 0,
            vert_total: 0,
            vert_per_grid: 0.0,
            crossings: 0.0,
            status_ok: false,
            error: error.replace(',', ";"),
            route_effort: 0,
        }
    }
}

/// Flow byproducts for archiving.
#[derive(Debug, Clone)]
pub struct FlowArtifacts {
    pub routing_dump: String,
    pub bitstream_text: String,
    pub bitstream_binary: Vec<u8>,
}

/// The routed-design dump consumed by the bitstream and metrics tooling:
/// one `NET <name>: <node id list>` line per net plus a summary block.
pub fn routing_dump(
    packed: &PackedNetlist,
    routing: &RoutingResult,
    wl: u64,
    cpd_ps: f64,
    crossings: f64,
) -> String {
    let mut s = String::new();
    for tree in &routing.trees {
        let ids: Vec<String> = tree.nodes.iter().map(|&(n, _)| n.to_string()).collect();
        s.push_str(&format!("NET {}: {}\n", packed.nets[tree.net].name, ids.join(" ")));
    }
    s.push_str("SUMMARY\n");
    s.push_str(&format!("wirelength {wl}\n"));
    s.push_str(&format!("cpd_ps {cpd_ps:.3}\n"));
    s.push_str(&format!("crossings {crossings:.4}\n"));
    s.push_str(&format!("iterations {}\n", routing.iterations));
    s
}

/// Executes parse -> build -> extend -> pack -> place -> route -> sta and
/// the metric counters for one (arch, benchmark, seed) triple. Errors land
/// in the row's status, never abort a sweep.
pub fn run_flow(
    spec: &ArchSpec,
    config_id: &str,
    benchmark_name: &str,
    blif_text: &str,
    seed: u64,
    deterministic_timing: bool,
) -> (ReportRow, Option<FlowArtifacts>) {
    let attempt = || -> Result<(ReportRow, FlowArtifacts)> {
        let netlist = crate::blif::parse_blif(blif_text)?;
        let packed = pack(&netlist, spec)?;
        let rrg: RoutingResourceGraph = build_rrg_for(spec, seed)?;
        let vert = count_vertical(&rrg);
        let placement = place(&packed, &rrg, seed, PlaceParams::default())?;
        let model = DelayModel::from_spec(spec);
        let started = std::time::Instant::now();
        let routing = route(&packed, &placement, &rrg, &model, RouteParams::default())?;
        let route_ms = if deterministic_timing { 0 } else { started.elapsed().as_millis() as u64 };
        let timing = sta(&packed, &routing, &rrg, &model)?;
        let crossings = count_layer_crossings(&rrg, &routing);

        let fabric = annotate(&rrg, spec)?;
        let bitstream = generate_bitstream(&packed, &placement, &routing, &fabric, &rrg)?;

        let row = ReportRow {
            benchmark: benchmark_name.to_string(),
            config_id: config_id.to_string(),
            seed,
            wl: routing.wirelength,
            cpd_ps: timing.cpd * 1e12,
            route_iters: routing.iterations,
            route_ms,
            vert_total: vert.total,
            vert_per_grid: vert.per_grid,
            crossings,
            status_ok: true,
            error: String::new(),
            route_effort: routing.effort,
        };
        let artifacts = FlowArtifacts {
            routing_dump: routing_dump(&packed, &routing, routing.wirelength, row.cpd_ps, crossings),
            bitstream_text: bitstream.to_text(),
            bitstream_binary: bitstream.to_binary(),
        };
        Ok((row, artifacts))
    };
    match attempt() {
        Ok((row, artifacts)) => (row, Some(artifacts)),
        Err(e) => (ReportRow::failed(benchmark_name, config_id, seed, e.to_string()), None),
    }
}

/// Sweep axes over a base architecture. Empty axes keep the base value.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub base: ArchSpec,
    pub types: Vec<ConnectionType>,
    pub percentages: Vec<u32>,
    pub placements: Vec<SbPlacement>,
    pub patterns: Vec<(String, SbPattern)>,
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    /// (name, BLIF text).
    pub benchmarks: Vec<(String, String)>,
    pub parallelism: usize,
    pub deterministic_timing: bool,
}

impl ExperimentConfig {
    pub fn new(base: ArchSpec) -> Self {
        ExperimentConfig {
            base,
            types: Vec::new(),
            percentages: Vec::new(),
            placements: Vec::new(),
            patterns: Vec::new(),
            ratios: Vec::new(),
            seeds: vec![1],
            benchmarks: Vec::new(),
            parallelism: 1,
            deterministic_timing: false,
        }
    }

    /// The Cartesian product of the axes as (config id, concrete spec).
    pub fn configs(&self) -> Vec<(String, ArchSpec)> {
        let types = if self.types.is_empty() {
            vec![self.base.vertical.connection_type]
        } else {
            self.types.clone()
        };
        let pcts = if self.percentages.is_empty() {
            vec![self.base.vertical.sb_percentage]
        } else {
            self.percentages.clone()
        };
        let placements = if self.placements.is_empty() {
            vec![self.base.vertical.sb_placement]
        } else {
            self.placements.clone()
        };
        let patterns = if self.patterns.is_empty() {
            vec![(pattern_label(&self.base.vertical.sb_pattern), self.base.vertical.sb_pattern)]
        } else {
            self.patterns.clone()
        };
        let ratios = if self.ratios.is_empty() {
            vec![self.base.vertical_delay_ratio]
        } else {
            self.ratios.clone()
        };
        let mut out = Vec::new();
        for &ty in &types {
            for &pct in &pcts {
                for &pl in &placements {
                    for (pat_name, pat) in &patterns {
                        for &rho in &ratios {
                            let mut spec = self.base.clone();
                            spec.vertical.connection_type = ty;
                            spec.vertical.sb_percentage = pct;
                            spec.vertical.sb_placement = pl;
                            spec.vertical.sb_pattern = *pat;
                            spec.vertical_delay_ratio = rho;
                            if ty == ConnectionType::None2D {
                                spec.layer_count = 1;
                                spec.layers.truncate(1);
                            }
                            let id = format!(
                                "t={} pct={} pl={} pat={} rho={}",
                                ty.token(),
                                pct,
                                pl.token(),
                                pat_name,
                                rho
                            );
                            out.push((id, spec));
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn pattern_label(p: &SbPattern) -> String {
    for (name, named) in SbPattern::NAMED {
        if named == *p {
            return name.to_string();
        }
    }
    let fmt = |a: [i32; 4]| a.map(|v| v.to_string()).join(".");
    format!("i[{}]o[{}]", fmt(p.input), fmt(p.output))
}

/// Runs the full sweep: configs x benchmarks x seeds, executed by
/// `parallelism` workers, rows returned in canonical order (config id,
/// benchmark, seed) regardless of completion order.
pub fn run_sweep(config: &ExperimentConfig) -> Vec<ReportRow> {
    let mut jobs: Vec<(String, ArchSpec, String, String, u64)> = Vec::new();
    for (id, spec) in config.configs() {
        for (name, blif) in &config.benchmarks {
            for &seed in &config.seeds {
                jobs.push((id.clone(), spec.clone(), name.clone(), blif.clone(), seed));
            }
        }
    }
    let results: Mutex<Vec<Option<ReportRow>>> = Mutex::new(vec![None; jobs.len()]);
    let cursor = AtomicUsize::new(0);
    let workers = config.parallelism.max(1).min(jobs.len().max(1));
    let det = config.deterministic_timing;

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let (id, spec, name, blif, seed) = &jobs[i];
                let (row, _) = run_flow(spec, id, name, blif, *seed, det);
                results.lock().unwrap()[i] = Some(row);
            });
        }
    });

    let mut rows: Vec<ReportRow> =
        results.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect();
    rows.sort_by(|a, b| {
        (&a.config_id, &a.benchmark, a.seed).cmp(&(&b.config_id, &b.benchmark, b.seed))
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{LayerSpec, Segment};

    fn base_spec() -> ArchSpec {
        let mut spec = ArchSpec {
            grid_width: 4,
            grid_height: 4,
            layer_count: 2,
            layers: vec![LayerSpec::homogeneous(); 2],
            channel_width: 6,
            segments: vec![Segment { length: 1, tracks: 6 }],
            lut_size: 4,
            cluster_size: 2,
            ..ArchSpec::default()
        };
        spec.vertical.connection_type = ConnectionType::Sb;
        spec
    }

    const AND2: &str = ".model and2\n.inputs a b\n.outputs y\n.names a b y\n11 1\n.end\n";
    const COUNTER: &str =
        ".model counter1\n.inputs tick\n.outputs q\n.names q nq\n0 1\n.latch nq q re clk 0\n.end\n";

    #[test]
    fn and_flow_on_2d_has_no_crossings() {
        let mut spec = base_spec();
        spec.vertical.connection_type = ConnectionType::None2D;
        spec.layer_count = 1;
        spec.layers.truncate(1);
        let (row, artifacts) = run_flow(&spec, "t=none", "and2", AND2, 1, true);
        assert!(row.status_ok, "{}", row.error);
        assert!(row.wl >= 1);
        assert_eq!(row.crossings, 0.0);
        assert_eq!(row.vert_total, 0);
        let dump = artifacts.unwrap().routing_dump;
        assert!(dump.contains("NET a:"));
        assert!(dump.contains("SUMMARY"));
    }

    #[test]
    fn counter_flow_on_3d_sb_counts_vertical() {
        let (row, _) = run_flow(&base_spec(), "t=sb", "counter1", COUNTER, 2, true);
        assert!(row.status_ok, "{}", row.error);
        assert!(row.vert_total > 0);
        assert!(row.crossings >= 0.0);
    }

    #[test]
    fn same_inputs_same_row() {
        let a = run_flow(&base_spec(), "c", "and2", AND2, 7, true).0;
        let b = run_flow(&base_spec(), "c", "and2", AND2, 7, true).0;
        assert_eq!(a, b);
    }

    #[test]
    fn failed_rows_are_flagged_not_fatal() {
        // Unpackable benchmark: fanin over K.
        let bad = ".model bad\n.inputs a b c d e\n.outputs y\n.names a b c d e y\n11111 1\n.end\n";
        let (row, artifacts) = run_flow(&base_spec(), "c", "bad", bad, 1, true);
        assert!(!row.status_ok);
        assert!(row.error.contains("LUT size"));
        assert!(artifacts.is_none());
    }

    #[test]
    fn sweep_rows_conserve_the_product_and_order() {
        let mut config = ExperimentConfig::new(base_spec());
        config.types = vec![ConnectionType::None2D, ConnectionType::Sb];
        config.seeds = vec![1, 2];
        config.benchmarks = vec![("and2".into(), AND2.into()), ("counter1".into(), COUNTER.into())];
        config.deterministic_timing = true;
        let rows = run_sweep(&config);
        assert_eq!(rows.len(), 2 * 2 * 2);
        let mut sorted = rows.clone();
        sorted.sort_by(|a, b| {
            (&a.config_id, &a.benchmark, a.seed).cmp(&(&b.config_id, &b.benchmark, b.seed))
        });
        assert_eq!(rows, sorted);
    }

    #[test]
    fn sweep_is_parallelism_invariant() {
        let mut config = ExperimentConfig::new(base_spec());
        config.types = vec![ConnectionType::Sb, ConnectionType::Cbo];
        config.seeds = vec![1, 2];
        config.benchmarks = vec![("and2".into(), AND2.into())];
        config.deterministic_timing = true;
        config.parallelism = 1;
        let one = report::to_csv(&run_sweep(&config));
        config.parallelism = 4;
        let four = report::to_csv(&run_sweep(&config));
        config.parallelism = 8;
        let eight = report::to_csv(&run_sweep(&config));
        assert_eq!(one, four);
        assert_eq!(one, eight);
    }
}
