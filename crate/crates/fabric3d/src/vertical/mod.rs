//! The third dimension: 3D SB site planning, CHANZ extension, and vertical
//! connection accounting.
//!
//! A 3D switch block bridges two adjacent layers with `W` vertical tracks
//! per direction. Vertical track `k` is fed on its source layer by a mux
//! over the planar tracks the *input* pattern selects, one per side:
//! `(i_j + k) mod W` for side `j` in counter-clockwise order (left, bottom,
//! right, top). On the sink layer the signal fans out onto the planar
//! tracks the *output* pattern selects, same formula. Negative pattern
//! entries wrap with a mathematical modulo.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arch::{ArchSpec, ConnectionType, CustomPins, SbPattern, SbPlacement};
use crate::error::{Error, Result};
use crate::rrg::build::{ipin_wire_sources, opin_wire_targets, site_wires, SIDES};
use crate::rrg::{Direction, NodeId, NodeKind, RoutingResourceGraph, RrEdge, RrNode, WireIndex};

/// The chosen 3D SB coordinates (shared by every adjacent layer pair) and
/// the percentage they realize.
#[derive(Debug, Clone, PartialEq)]
pub struct SitePlan {
    /// Row-major (y, then x) sorted corner-lattice coordinates.
    pub sites: Vec<(u32, u32)>,
    pub realized_percentage: f64,
}

fn lattice_dims(spec: &ArchSpec) -> (u32, u32) {
    (spec.grid_width + 1, spec.grid_height + 1)
}

/// Round-half-up of `pct% x total`.
fn site_target(pct: u32, total: u32) -> u32 {
    (2 * pct * total + 100) / 200
}

fn row_major(w1: u32, h1: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..h1).flat_map(move |y| (0..w1).map(move |x| (x, y)))
}

/// Chebyshev distance to the lattice center, doubled to stay integral.
fn center_distance(x: u32, y: u32, w1: u32, h1: u32) -> u32 {
    let dx = (2 * x as i64 - (w1 as i64 - 1)).unsigned_abs() as u32;
    let dy = (2 * y as i64 - (h1 as i64 - 1)).unsigned_abs() as u32;
    dx.max(dy)
}

/// Picks which SB sites are 3D. Deterministic for every strategy given the
/// seed (only Random consumes it). Built-in strategies hit the round-half-up
/// target exactly; CustomList passes the CSV list through after checks.
pub fn plan_sites(spec: &ArchSpec, seed: u64) -> Result<SitePlan> {
    let (w1, h1) = lattice_dims(spec);
    let total = w1 * h1;
    let target = site_target(spec.vertical.sb_percentage, total);

    let sites: Vec<(u32, u32)> = match spec.vertical.sb_placement {
        SbPlacement::CustomList => {
            let sites = spec.vertical.custom_sites.as_ref().ok_or_else(|| {
                Error::InvalidArch("placement custom_list requires a loaded site list".into())
            })?;
            let mut seen = BTreeSet::new();
            for (i, &(x, y)) in sites.iter().enumerate() {
                if x >= w1 || y >= h1 {
                    return Err(Error::SiteCsv {
                        line: i + 2,
                        msg: format!("site ({x},{y}) outside the {w1}x{h1} lattice"),
                    });
                }
                if !seen.insert((y, x)) {
                    return Err(Error::SiteCsv { line: i + 2, msg: format!("duplicate site ({x},{y})") });
                }
            }
            seen.into_iter().map(|(y, x)| (x, y)).collect()
        }
        SbPlacement::RepeatedInterval => {
            // Largest stride whose diagonal lattice still reaches the target,
            // truncated row-major to the exact count.
            let count_at = |s: u32| row_major(w1, h1).filter(|&(x, y)| (x + y) % s == 0).count() as u32;
            let mut stride = 1;
            for s in (1..=(w1 + h1).max(1)).rev() {
                if count_at(s) >= target {
                    stride = s;
                    break;
                }
            }
            row_major(w1, h1)
                .filter(|&(x, y)| (x + y) % stride == 0)
                .take(target as usize)
                .collect()
        }
        SbPlacement::Rows | SbPlacement::Columns => {
            let by_rows = spec.vertical.sb_placement == SbPlacement::Rows;
            let extent = if by_rows { h1 } else { w1 };
            let mut order: Vec<u32> = (0..extent).collect();
            // Whole rows/columns from the grid center outward.
            order.sort_by_key(|&c| (center_distance(0, c, 1, extent), c));
            let mut out = Vec::new();
            'outer: for c in order {
                for i in 0..(if by_rows { w1 } else { h1 }) {
                    if out.len() == target as usize {
                        break 'outer;
                    }
                    out.push(if by_rows { (i, c) } else { (c, i) });
                }
            }
            out.sort_by_key(|&(x, y)| (y, x));
            out
        }
        SbPlacement::Core | SbPlacement::Perimeter => {
            let core = spec.vertical.sb_placement == SbPlacement::Core;
            let mut all: Vec<(u32, u32)> = row_major(w1, h1).collect();
            all.sort_by_key(|&(x, y)| {
                let d = center_distance(x, y, w1, h1);
                (if core { d } else { u32::MAX - d }, y, x)
            });
            let mut out: Vec<(u32, u32)> = all.into_iter().take(target as usize).collect();
            out.sort_by_key(|&(x, y)| (y, x));
            out
        }
        SbPlacement::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut all: Vec<(u32, u32)> = row_major(w1, h1).collect();
            all.shuffle(&mut rng);
            let mut out: Vec<(u32, u32)> = all.into_iter().take(target as usize).collect();
            out.sort_by_key(|&(x, y)| (y, x));
            out
        }
    };

    let realized = sites.len() as f64 * 100.0 / total as f64;
    Ok(SitePlan { sites, realized_percentage: realized })
}

/// Per-side planar track indices for one vertical track.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackMap {
    /// Left, bottom, right, top indices under the input pattern.
    pub input: [u32; 4],
    /// Same under the output pattern.
    pub output: [u32; 4],
}

fn wrap(entry: i32, k: u32, w: u32) -> u32 {
    (entry as i64 + k as i64).rem_euclid(w as i64) as u32
}

/// `(i_j + k) mod W` on each side, for both pattern roles. Total over all
/// `0 <= k < W`; results always land in `[0, W)`.
pub fn vertical_track_map(pattern: &SbPattern, w: u32, k: u32) -> TrackMap {
    let mut map = TrackMap { input: [0; 4], output: [0; 4] };
    for j in 0..4 {
        map.input[j] = wrap(pattern.input[j], k, w);
        map.output[j] = wrap(pattern.output[j], k, w);
    }
    map
}

fn pins_cross_in(ty: ConnectionType, custom: CustomPins) -> bool {
    match ty {
        ConnectionType::Cb | ConnectionType::Hybrid => true,
        ConnectionType::Custom => matches!(custom, CustomPins::In | CustomPins::Both),
        _ => false,
    }
}

fn pins_cross_out(ty: ConnectionType, custom: CustomPins) -> bool {
    match ty {
        ConnectionType::Cb | ConnectionType::Cbo | ConnectionType::Hybrid | ConnectionType::HybridO => true,
        ConnectionType::Custom => matches!(custom, CustomPins::Out | CustomPins::Both),
        _ => false,
    }
}

fn has_sb_crossings(ty: ConnectionType) -> bool {
    matches!(
        ty,
        ConnectionType::Sb | ConnectionType::Hybrid | ConnectionType::HybridO | ConnectionType::Custom
    )
}

/// Extends a base RRG into a 3D-RRG for the spec's vertical connection
/// type. Pure extension: base nodes and edges are untouched, CHANZ nodes
/// and new edges are appended.
///
/// Per planned site and adjacent layer pair, the SB flavor adds `W` CHANZ
/// pairs per direction: the source-layer node muxes planar tracks per the
/// input pattern, the via edge costs `vertical_delay_ratio x
/// base_switch_delay`, and the sink-layer node fans out per the output
/// pattern. CB-flavored types add pin-crossing edges instead: every grid
/// IPIN becomes reachable from the adjacent layer's channels, and/or every
/// OPIN drives them.
pub fn extend_to_3d(
    base: &RoutingResourceGraph,
    spec: &ArchSpec,
    plan: &SitePlan,
) -> Result<RoutingResourceGraph> {
    let ty = spec.vertical.connection_type;
    if ty == ConnectionType::None2D {
        return Ok(base.clone());
    }
    if spec.layer_count < 2 {
        return Err(Error::InvalidArch("vertical extension needs at least 2 layers".into()));
    }
    if let Some(tracks) = &spec.vertical.custom_tracks {
        if let Some(&bad) = tracks.iter().find(|&&t| t >= spec.channel_width) {
            return Err(Error::InvalidArch(format!(
                "custom vertical track {bad} outside channel width {}",
                spec.channel_width
            )));
        }
    }

    let mut rrg = base.clone();
    let wires = WireIndex::build(base);
    let cw = spec.channel_width;
    let (w, h) = (spec.grid_width, spec.grid_height);
    let switch = spec.base_switch_delay;
    let via = spec.vertical_delay_ratio * spec.base_switch_delay;
    let wire_d = spec.wire_delay_per_tile;

    let mut new_edges: Vec<RrEdge> = Vec::new();

    if pins_cross_in(ty, spec.vertical.custom_pins) || pins_cross_out(ty, spec.vertical.custom_pins) {
        let cross_in = pins_cross_in(ty, spec.vertical.custom_pins);
        let cross_out = pins_cross_out(ty, spec.vertical.custom_pins);
        for layer in 0..spec.layer_count {
            for other in [layer.wrapping_sub(1), layer + 1] {
                if other >= spec.layer_count || layer.abs_diff(other) != 1 {
                    continue;
                }
                for y in 0..h {
                    for x in 0..w {
                        let tn = base.tile_nodes(layer, x, y).clone();
                        if cross_out {
                            for (p, &opin) in tn.opins.iter().enumerate() {
                                for wid in
                                    opin_wire_targets(&wires, spec, other as u16, x, y, p as u32)
                                {
                                    let span = base.node(wid).span_tiles() as f64;
                                    new_edges.push(RrEdge {
                                        src: opin,
                                        dst: wid,
                                        delay: via + switch + span * wire_d,
                                    });
                                }
                            }
                        }
                        if cross_in {
                            for (p, &ipin) in tn.ipins.iter().enumerate() {
                                for wid in
                                    ipin_wire_sources(&wires, spec, other as u16, x, y, p as u32)
                                {
                                    new_edges.push(RrEdge { src: wid, dst: ipin, delay: via + switch });
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    if has_sb_crossings(ty) {
        let tracks: Vec<u32> = match &spec.vertical.custom_tracks {
            Some(t) if ty == ConnectionType::Custom => {
                let mut t = t.clone();
                t.sort_unstable();
                t.dedup();
                t
            }
            _ => (0..cw).collect(),
        };
        let pattern = spec.vertical.sb_pattern;
        for lower in 0..spec.layer_count - 1 {
            let upper = lower + 1;
            for &(sx, sy) in &plan.sites {
                let lower_site = site_wires(&wires, cw, w, h, lower as u16, sx, sy);
                let upper_site = site_wires(&wires, cw, w, h, upper as u16, sx, sy);
                for &k in &tracks {
                    let map = vertical_track_map(&pattern, cw, k);
                    // Upward pair, then downward: (src layer, dst layer,
                    // src dir, dst dir, src stubs, dst stubs).
                    let pairs = [
                        (lower, upper, Direction::AboveInc, Direction::UnderInc, &lower_site, &upper_site),
                        (upper, lower, Direction::UnderDec, Direction::AboveDec, &upper_site, &lower_site),
                    ];
                    for (src_layer, dst_layer, src_dir, dst_dir, src_site, dst_site) in pairs {
                        let mk = |layer: u32, dir: Direction| RrNode {
                            kind: NodeKind::Chanz,
                            layer: layer as u16,
                            xlo: sx as u16,
                            ylo: sy as u16,
                            xhi: sx as u16,
                            yhi: sy as u16,
                            track: k as u16,
                            dir,
                            capacity: 1,
                        };
                        let src_cz = rrg.nodes.len() as NodeId;
                        rrg.nodes.push(mk(src_layer, src_dir));
                        let dst_cz = rrg.nodes.len() as NodeId;
                        rrg.nodes.push(mk(dst_layer, dst_dir));

                        for (j, side) in SIDES.iter().enumerate() {
                            if let Some(wid) = src_site.incoming_on(*side, map.input[j]) {
                                new_edges.push(RrEdge { src: wid, dst: src_cz, delay: switch });
                            }
                        }
                        new_edges.push(RrEdge { src: src_cz, dst: dst_cz, delay: via });
                        for (j, side) in SIDES.iter().enumerate() {
                            if let Some(wid) = dst_site.outgoing_on(*side, map.output[j]) {
                                let span = base.node(wid).span_tiles() as f64;
                                new_edges.push(RrEdge {
                                    src: dst_cz,
                                    dst: wid,
                                    delay: switch + span * wire_d,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    rrg.edges.extend(new_edges);
    rrg.rebuild_tile_index();
    Ok(rrg)
}

/// Vertical connection totals: one counted connection per inter-layer pin
/// edge and per CHANZ pair (a pair's via edge stands for one physical wire).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerticalCounts {
    pub pin_in: u64,
    pub pin_out: u64,
    pub sb_pairs: u64,
    pub total: u64,
    pub per_grid: f64,
}

pub fn count_vertical(rrg: &RoutingResourceGraph) -> VerticalCounts {
    let mut c = VerticalCounts::default();
    for e in &rrg.edges {
        let (s, d) = (rrg.node(e.src), rrg.node(e.dst));
        if s.layer == d.layer {
            continue;
        }
        if s.kind == NodeKind::Chanz && d.kind == NodeKind::Chanz {
            c.sb_pairs += 1;
        } else if d.kind == NodeKind::Ipin {
            c.pin_in += 1;
        } else if s.kind == NodeKind::Opin {
            c.pin_out += 1;
        }
    }
    c.total = c.pin_in + c.pin_out + c.sb_pairs;
    let grid = (rrg.grid.width * rrg.grid.height).max(1) as f64;
    c.per_grid = c.total as f64 / grid;
    c
}

/// Average number of layer crossings per routed net: a crossing is any
/// routed edge whose endpoints differ in layer, averaged over nets with at
/// least one sink.
pub fn count_layer_crossings(rrg: &RoutingResourceGraph, routing: &crate::pnr::RoutingResult) -> f64 {
    let mut nets = 0u64;
    let mut crossings = 0u64;
    for tree in &routing.trees {
        if tree.sink_count == 0 {
            continue;
        }
        nets += 1;
        for &(node, in_edge) in &tree.nodes {
            if let Some(eid) = in_edge {
                let e = &rrg.edges[eid as usize];
                debug_assert_eq!(e.dst, node);
                if rrg.node(e.src).layer != rrg.node(e.dst).layer {
                    crossings += 1;
                }
            }
        }
    }
    if nets == 0 {
        0.0
    } else {
        crossings as f64 / nets as f64
    }
}
