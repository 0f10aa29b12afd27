//! Base (planar) routing resource graph construction.

use super::*;
use crate::arch::{ArchSpec, PlanarSb};
use crate::error::Result;

/// Four planar switch-block sides in the counter-clockwise pattern order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Left = 0,
    Bottom = 1,
    Right = 2,
    Top = 3,
}

pub(crate) const SIDES: [Side; 4] = [Side::Left, Side::Bottom, Side::Right, Side::Top];

/// Planar switch mapping: incoming track `t` on `from` drives which track on
/// `to`. Subset keeps the track; the Wilton flavor mixes a reflection on the
/// left-top and right-bottom turns with a one-step rotation on the others,
/// so turns spread across tracks while straight-through wires stay aligned.
pub(crate) fn planar_switch_track(pattern: PlanarSb, from: Side, to: Side, t: u32, w: u32) -> u32 {
    match pattern {
        PlanarSb::Subset => t,
        PlanarSb::Wilton => match (from, to) {
            (Side::Left, Side::Right)
            | (Side::Right, Side::Left)
            | (Side::Bottom, Side::Top)
            | (Side::Top, Side::Bottom) => t,
            (Side::Left, Side::Top)
            | (Side::Top, Side::Left)
            | (Side::Right, Side::Bottom)
            | (Side::Bottom, Side::Right) => (w - t) % w,
            (Side::Left, Side::Bottom) | (Side::Top, Side::Right) => (t + 1) % w,
            (Side::Bottom, Side::Left) | (Side::Right, Side::Top) => (t + w - 1) % w,
            _ => t,
        },
    }
}

/// Per-track segment length, by position in the segment list.
pub(crate) fn track_lengths(spec: &ArchSpec) -> Vec<u32> {
    let mut lengths = Vec::with_capacity(spec.channel_width as usize);
    for seg in &spec.segments {
        for _ in 0..seg.tracks {
            lengths.push(seg.length.max(1));
        }
    }
    lengths
}

/// Wire spans for one track of one channel: consecutive boundary pairs under
/// the staggered offset, clipped to the channel extent. Spans are inclusive
/// tile ranges `[lo, hi]`.
pub(crate) fn track_spans(extent: u32, length: u32, track: u32) -> Vec<(u32, u32)> {
    let offset = track % length;
    let mut bounds = vec![0u32];
    let mut p = if offset == 0 { length } else { offset };
    while p < extent {
        bounds.push(p);
        p += length;
    }
    bounds.push(extent);
    bounds.windows(2).map(|w| (w[0], w[1] - 1)).collect()
}

/// Deterministic spread of `count` track positions starting at `start`.
pub(crate) fn pick_positions(count: u32, start: u32, w: u32) -> Vec<u32> {
    let count = count.min(w);
    let stride = (w / count.max(1)).max(1);
    let mut out: Vec<u32> = Vec::with_capacity(count as usize);
    let mut pos = start % w;
    for _ in 0..count {
        while out.contains(&pos) {
            pos = (pos + 1) % w;
        }
        out.push(pos);
        pos = (pos + stride) % w;
    }
    out
}

/// Connection-block pin counts from the fc fractions: round up, at least 1.
pub(crate) fn fc_count(frac: f64, w: u32) -> u32 {
    ((frac * w as f64).ceil() as u32).clamp(1, w)
}

/// Channels adjacent to a tile, in pin-assignment order east, north, west,
/// south. North/east channels vanish on the far border rows/columns.
pub(crate) fn tile_sides(w: u32, h: u32, x: u32, y: u32) -> Vec<(Axis, u32, Side)> {
    let mut sides = Vec::with_capacity(4);
    if x + 1 < w {
        sides.push((Axis::Y, x + 1, Side::Right));
    }
    if y + 1 < h {
        sides.push((Axis::X, y + 1, Side::Top));
    }
    sides.push((Axis::Y, x, Side::Left));
    sides.push((Axis::X, y, Side::Bottom));
    sides
}

struct EdgeSink {
    edges: Vec<RrEdge>,
}

impl EdgeSink {
    fn push(&mut self, src: NodeId, dst: NodeId, delay: f64) {
        self.edges.push(RrEdge { src, dst, delay });
    }
}

/// Wires meeting a switch-block site, `(track, node)` per side: wires
/// terminating at the site (drivable into a switch here) and wires driven
/// from it.
#[derive(Debug, Default, Clone)]
pub(crate) struct SiteWires {
    pub incoming: [Vec<(u32, NodeId)>; 4],
    pub outgoing: [Vec<(u32, NodeId)>; 4],
}

impl SiteWires {
    pub fn incoming_on(&self, side: Side, track: u32) -> Option<NodeId> {
        self.incoming[side as usize].iter().find(|&&(t, _)| t == track).map(|&(_, id)| id)
    }

    pub fn outgoing_on(&self, side: Side, track: u32) -> Option<NodeId> {
        self.outgoing[side as usize].iter().find(|&&(t, _)| t == track).map(|&(_, id)| id)
    }
}

/// Collects the wires incident to corner-lattice site `(sx, sy)`.
pub(crate) fn site_wires(
    wires: &WireIndex,
    cw: u32,
    w: u32,
    h: u32,
    layer: u16,
    sx: u32,
    sy: u32,
) -> SiteWires {
    let mut sw = SiteWires::default();
    for t in 0..cw {
        if sy < h {
            let chan = sy as u16;
            if let Some(id) = wires.terminating_at(layer, Axis::X, chan, t as u16, false, sx as u16) {
                sw.incoming[Side::Left as usize].push((t, id));
            }
            if let Some(id) = wires.terminating_at(layer, Axis::X, chan, t as u16, true, sx as u16) {
                sw.incoming[Side::Right as usize].push((t, id));
            }
            if let Some(id) = wires.driven_at(layer, Axis::X, chan, t as u16, false, sx as u16) {
                sw.outgoing[Side::Right as usize].push((t, id));
            }
            if let Some(id) = wires.driven_at(layer, Axis::X, chan, t as u16, true, sx as u16) {
                sw.outgoing[Side::Left as usize].push((t, id));
            }
        }
        if sx < w {
            let chan = sx as u16;
            if let Some(id) = wires.terminating_at(layer, Axis::Y, chan, t as u16, false, sy as u16) {
                sw.incoming[Side::Bottom as usize].push((t, id));
            }
            if let Some(id) = wires.terminating_at(layer, Axis::Y, chan, t as u16, true, sy as u16) {
                sw.incoming[Side::Top as usize].push((t, id));
            }
            if let Some(id) = wires.driven_at(layer, Axis::Y, chan, t as u16, false, sy as u16) {
                sw.outgoing[Side::Top as usize].push((t, id));
            }
            if let Some(id) = wires.driven_at(layer, Axis::Y, chan, t as u16, true, sy as u16) {
                sw.outgoing[Side::Bottom as usize].push((t, id));
            }
        }
    }
    sw
}

/// Wire nodes an output pin at `(x, y)` drives, in deterministic order.
pub(crate) fn opin_wire_targets(
    wires: &WireIndex,
    spec: &ArchSpec,
    layer: u16,
    x: u32,
    y: u32,
    pin: u32,
) -> Vec<NodeId> {
    let (w, h, cw) = (spec.grid_width, spec.grid_height, spec.channel_width);
    let sides = tile_sides(w, h, x, y);
    let (axis, chan, _) = sides[pin as usize % sides.len()];
    let (c0, c1) = match axis {
        Axis::X => (x, x + 1),
        Axis::Y => (y, y + 1),
    };
    let mut targets = Vec::new();
    for t in pick_positions(fc_count(spec.fc_out, cw), pin, cw) {
        for pos in [c0, c1] {
            for dec in [false, true] {
                if let Some(wid) = wires.driven_at(layer, axis, chan as u16, t as u16, dec, pos as u16) {
                    targets.push(wid);
                }
            }
        }
    }
    targets.sort_unstable();
    targets.dedup();
    targets
}

/// Wire nodes that can drive an input pin at `(x, y)`, in deterministic order.
pub(crate) fn ipin_wire_sources(
    wires: &WireIndex,
    spec: &ArchSpec,
    layer: u16,
    x: u32,
    y: u32,
    pin: u32,
) -> Vec<NodeId> {
    let (w, h, cw) = (spec.grid_width, spec.grid_height, spec.channel_width);
    let sides = tile_sides(w, h, x, y);
    let (axis, chan, _) = sides[pin as usize % sides.len()];
    let pos = match axis {
        Axis::X => x,
        Axis::Y => y,
    };
    let mut sources = Vec::new();
    for t in pick_positions(fc_count(spec.fc_in, cw), pin, cw) {
        for dec in [false, true] {
            if let Some(wid) = wires.covering(layer, axis, chan as u16, t as u16, dec, pos as u16) {
                sources.push(wid);
            }
        }
    }
    sources.sort_unstable();
    sources.dedup();
    sources
}

/// Builds the per-layer planar routing resource graph for a validated spec.
///
/// Node numbering is deterministic: layer-major, then y, x, kind, track.
/// Every IPIN has exactly one outgoing edge (to its SINK) and every OPIN
/// exactly one incoming edge (from its SOURCE).
pub fn build_base_rrg(spec: &ArchSpec) -> Result<RoutingResourceGraph> {
    crate::arch::validate_ok(spec)?;

    let grid = Grid::from_spec(spec);
    let (w, h) = (spec.grid_width, spec.grid_height);
    let cw = spec.channel_width;
    let lengths = track_lengths(spec);

    let mut rrg = RoutingResourceGraph::new(grid, spec.spec_hash(), cw);

    // Node descriptors, then a canonical sort fixes the numbering.
    let mut nodes: Vec<RrNode> = Vec::new();
    for layer in 0..spec.layer_count {
        for y in 0..h {
            for x in 0..w {
                let kind = rrg.grid.block(layer, x, y);
                let n_in = rrg.grid.pins_in(kind);
                let n_out = rrg.grid.pins_out(kind);
                if n_in == 0 && n_out == 0 {
                    continue;
                }
                let base = RrNode {
                    kind: NodeKind::Source,
                    layer: layer as u16,
                    xlo: x as u16,
                    ylo: y as u16,
                    xhi: x as u16,
                    yhi: y as u16,
                    track: 0,
                    dir: Direction::None,
                    capacity: 1,
                };
                nodes.push(RrNode { kind: NodeKind::Source, capacity: n_out as u16, ..base });
                nodes.push(RrNode { kind: NodeKind::Sink, capacity: n_in as u16, ..base });
                for p in 0..n_out {
                    nodes.push(RrNode { kind: NodeKind::Opin, track: p as u16, ..base });
                }
                for p in 0..n_in {
                    nodes.push(RrNode { kind: NodeKind::Ipin, track: p as u16, ..base });
                }
            }
        }
        // CHANX channels: one per tile row; CHANY: one per tile column.
        for chan in 0..h {
            for t in 0..cw {
                for (lo, hi) in track_spans(w, lengths[t as usize], t) {
                    for dir in [Direction::Inc, Direction::Dec] {
                        nodes.push(RrNode {
                            kind: NodeKind::Chanx,
                            layer: layer as u16,
                            xlo: lo as u16,
                            ylo: chan as u16,
                            xhi: hi as u16,
                            yhi: chan as u16,
                            track: t as u16,
                            dir,
                            capacity: 1,
                        });
                    }
                }
            }
        }
        for chan in 0..w {
            for t in 0..cw {
                for (lo, hi) in track_spans(h, lengths[t as usize], t) {
                    for dir in [Direction::Inc, Direction::Dec] {
                        nodes.push(RrNode {
                            kind: NodeKind::Chany,
                            layer: layer as u16,
                            xlo: chan as u16,
                            ylo: lo as u16,
                            xhi: chan as u16,
                            yhi: hi as u16,
                            track: t as u16,
                            dir,
                            capacity: 1,
                        });
                    }
                }
            }
        }
    }
    nodes.sort_by_key(|n| n.sort_key());
    rrg.nodes = nodes;
    rrg.rebuild_tile_index();

    let wires = WireIndex::build(&rrg);
    let mut sink = EdgeSink { edges: Vec::new() };
    let switch = spec.base_switch_delay;
    let wire_d = spec.wire_delay_per_tile;
    let wire_delay = |rrg: &RoutingResourceGraph, id: NodeId| rrg.node(id).span_tiles() as f64 * wire_d;

    for layer in 0..spec.layer_count {
        let l = layer as u16;
        for y in 0..h {
            for x in 0..w {
                let tn = rrg.tile_nodes(layer, x, y).clone();
                let (Some(source), Some(snk)) = (tn.source, tn.sink) else { continue };

                for (p, &opin) in tn.opins.iter().enumerate() {
                    sink.push(source, opin, 0.0);
                    for wid in opin_wire_targets(&wires, spec, l, x, y, p as u32) {
                        sink.push(opin, wid, switch + wire_delay(&rrg, wid));
                    }
                }

                for (p, &ipin) in tn.ipins.iter().enumerate() {
                    sink.push(ipin, snk, 0.0);
                    for wid in ipin_wire_sources(&wires, spec, l, x, y, p as u32) {
                        sink.push(wid, ipin, switch);
                    }
                }
            }
        }

        // Switch-block switching on the corner lattice.
        for sy in 0..=h {
            for sx in 0..=w {
                let sw = site_wires(&wires, cw, w, h, l, sx, sy);
                for from in SIDES {
                    for &(t, src) in &sw.incoming[from as usize] {
                        for to in SIDES {
                            if from == to {
                                continue;
                            }
                            let want = planar_switch_track(spec.planar_sb, from, to, t, cw);
                            if let Some(dst) = sw.outgoing_on(to, want) {
                                sink.push(src, dst, switch + wire_delay(&rrg, dst));
                            }
                        }
                    }
                }
            }
        }
    }

    let mut edges = sink.edges;
    edges.sort_by_key(|e| (e.src, e.dst));
    edges.dedup_by_key(|e| (e.src, e.dst));
    rrg.edges = edges;
    Ok(rrg)
}
