//! Fabric annotation: mapping every RRG node and edge onto physical blocks
//! (CLBs, connection blocks, switch blocks) and their configurable muxes.
//!
//! Every RRG edge lands in exactly one mux candidate slot or one direct
//! wire. On top of the routing muxes, each CLB carries its internal
//! crossbar (one mux per LUT input selecting among the cluster's input
//! pins and BLE outputs) and one output-select mux per BLE choosing the
//! combinational LUT output or the flip-flop.

pub mod netlist;

use std::collections::HashMap;

use crate::arch::{ArchSpec, BlockKind};
use crate::error::{Error, Result};
use crate::rrg::{NodeId, NodeKind, RoutingResourceGraph};

/// A value source inside the fabric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signal {
    /// An RRG node's value (wire, pin, or CHANZ).
    Node(NodeId),
    /// Combinational LUT output of a BLE.
    LutOut { tile: u32, ble: u16 },
    /// Flip-flop output of a BLE.
    FlipFlop { tile: u32, ble: u16 },
}

/// Which physical block owns a mux.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuxOwner {
    /// Switch block at a corner-lattice site (wire drive-point muxes and 3D
    /// SB vertical-track input muxes).
    SwitchBlock { layer: u16, x: u16, y: u16 },
    /// Connection block of a tile (IPIN muxes).
    ConnBlock { layer: u16, x: u16, y: u16 },
    /// CLB internals (crossbar and output select).
    Clb { layer: u16, x: u16, y: u16 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuxRole {
    /// Drives a planar wire.
    Wire,
    /// Drives an input pin.
    Ipin,
    /// Drives a source-layer CHANZ (3D SB vertical-track input mux).
    ChanzIn,
    /// CLB crossbar: LUT input `input` of BLE `ble`.
    Crossbar { ble: u16, input: u16 },
    /// CLB output select of BLE `ble`: candidate 0 = LUT, 1 = flip-flop.
    OutputSelect { ble: u16 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FabricMux {
    pub owner: MuxOwner,
    pub role: MuxRole,
    /// The signal this mux drives.
    pub target: Signal,
    /// Candidate sources; the all-zero (default) select picks index 0.
    pub candidates: Vec<Signal>,
    /// Select width, `ceil(log2(candidates))`; 0 never occurs (fanin-1
    /// targets degrade to direct wires).
    pub width: u32,
    /// Config-bit offset in the bitstream.
    pub offset: u32,
}

/// Per-CLB-tile LUT storage accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutBlock {
    pub tile: u32,
    /// Offset of this tile's `N x 2^K` table bits.
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FabricModel {
    pub spec_hash: String,
    pub grid_width: u32,
    pub grid_height: u32,
    pub layer_count: u32,
    pub lut_size: u32,
    pub cluster_size: u32,
    pub io_capacity: u32,
    pub muxes: Vec<FabricMux>,
    /// RRG node -> index into `muxes`, for nodes driven by a mux.
    pub mux_of_node: HashMap<NodeId, usize>,
    /// Crossbar lookup: (tile, ble, input) -> mux index.
    pub crossbar: HashMap<(u32, u16, u16), usize>,
    /// Output-select lookup: (tile, ble) -> mux index.
    pub outsel: HashMap<(u32, u16), usize>,
    /// Edges realized as plain wires (fanin-1 targets and SOURCE/SINK
    /// bookkeeping edges).
    pub direct_wires: Vec<(NodeId, NodeId)>,
    /// CLB tiles in offset order.
    pub lut_blocks: Vec<LutBlock>,
    pub mux_bits: u32,
    pub lut_bits: u32,
}

impl FabricModel {
    /// Total configuration bits: mux selects plus LUT tables.
    pub fn config_bits(&self) -> u32 {
        self.mux_bits + self.lut_bits
    }

    pub fn tile_index(&self, layer: u32, x: u32, y: u32) -> u32 {
        (layer * self.grid_height + y) * self.grid_width + x
    }

    pub fn lut_table_bits(&self) -> u32 {
        self.cluster_size * (1 << self.lut_size)
    }

    pub fn lut_offset(&self, tile: u32) -> Option<u32> {
        self.lut_blocks.iter().find(|b| b.tile == tile).map(|b| b.offset)
    }
}

fn ceil_log2(n: usize) -> u32 {
    debug_assert!(n >= 1);
    usize::BITS - (n - 1).leading_zeros()
}

/// Select width for a given candidate count.
pub(crate) fn annotate_width(candidates: usize) -> u32 {
    ceil_log2(candidates)
}

/// Candidate ordering class: planar non-feedback sources first so the
/// default (select 0) configuration stays well-behaved.
fn candidate_class(rrg: &RoutingResourceGraph, target: NodeId, src: NodeId) -> u32 {
    let t = rrg.node(target);
    let s = rrg.node(src);
    if s.layer != t.layer {
        return 3;
    }
    match s.kind {
        NodeKind::Chanx | NodeKind::Chany => {
            if t.is_wire() && s.kind == t.kind && s.dir == t.dir && s.track == t.track {
                0
            } else {
                1
            }
        }
        NodeKind::Opin | NodeKind::Source => 2,
        _ => 3,
    }
}

/// Builds the fabric model for a (possibly 3D-extended) RRG.
///
/// Ownership mirrors the RRG roles: connection blocks own the IPIN muxes
/// (including inter-layer inputs as extra candidates on the same per-pin
/// mux), switch blocks own the channel-track muxes (including inter-layer
/// grid-output taps), and 3D switch blocks own one input-side mux per
/// vertical track.
pub fn annotate(rrg: &RoutingResourceGraph, spec: &ArchSpec) -> Result<FabricModel> {
    if rrg.spec_hash != spec.spec_hash() {
        return Err(Error::Fabric(format!(
            "graph was built from spec {} but annotation got {}",
            rrg.spec_hash,
            spec.spec_hash()
        )));
    }
    let grid = &rrg.grid;
    let mut model = FabricModel {
        spec_hash: rrg.spec_hash.clone(),
        grid_width: grid.width,
        grid_height: grid.height,
        layer_count: grid.layers,
        lut_size: spec.lut_size,
        cluster_size: spec.cluster_size,
        io_capacity: spec.io_capacity,
        muxes: Vec::new(),
        mux_of_node: HashMap::new(),
        crossbar: HashMap::new(),
        outsel: HashMap::new(),
        direct_wires: Vec::new(),
        lut_blocks: Vec::new(),
        mux_bits: 0,
        lut_bits: 0,
    };

    let ins = rrg.in_edges();
    let mut offset = 0u32;

    // Routing muxes, in node-id order (deterministic by construction).
    for (id, node) in rrg.nodes.iter().enumerate() {
        let id = id as NodeId;
        let in_edges = &ins[id as usize];
        if in_edges.is_empty() {
            continue;
        }
        // SOURCE/SINK edges are bookkeeping, never configurable.
        if matches!(node.kind, NodeKind::Sink | NodeKind::Source | NodeKind::Opin) {
            for &eid in in_edges {
                let e = &rrg.edges[eid as usize];
                model.direct_wires.push((e.src, e.dst));
            }
            continue;
        }
        // Sink-layer CHANZ nodes are driven only by their pair's via.
        let (role, owner) = match node.kind {
            NodeKind::Chanx | NodeKind::Chany => {
                let (sx, sy) = drive_site(rrg, id);
                (MuxRole::Wire, MuxOwner::SwitchBlock { layer: node.layer, x: sx, y: sy })
            }
            NodeKind::Ipin => (
                MuxRole::Ipin,
                MuxOwner::ConnBlock { layer: node.layer, x: node.xlo, y: node.ylo },
            ),
            NodeKind::Chanz => {
                if matches!(node.dir, crate::rrg::Direction::UnderInc | crate::rrg::Direction::AboveDec) {
                    // Sink-side CHANZ: one incoming via edge, a plain wire.
                    for &eid in in_edges {
                        let e = &rrg.edges[eid as usize];
                        model.direct_wires.push((e.src, e.dst));
                    }
                    continue;
                }
                (MuxRole::ChanzIn, MuxOwner::SwitchBlock { layer: node.layer, x: node.xlo, y: node.ylo })
            }
            _ => unreachable!(),
        };
        if in_edges.len() == 1 {
            let e = &rrg.edges[in_edges[0] as usize];
            model.direct_wires.push((e.src, e.dst));
            continue;
        }
        let mut candidates: Vec<NodeId> = in_edges.iter().map(|&eid| rrg.edges[eid as usize].src).collect();
        candidates.sort_by_key(|&src| (candidate_class(rrg, id, src), src));
        candidates.dedup();
        let width = ceil_log2(candidates.len());
        model.mux_of_node.insert(id, model.muxes.len());
        model.muxes.push(FabricMux {
            owner,
            role,
            target: Signal::Node(id),
            candidates: candidates.into_iter().map(Signal::Node).collect(),
            width,
            offset,
        });
        offset += width;
    }

    // CLB internals, tile-major.
    let k = spec.lut_size as u16;
    let n = spec.cluster_size as u16;
    for layer in 0..grid.layers {
        for y in 0..grid.height {
            for x in 0..grid.width {
                if grid.block(layer, x, y) != BlockKind::Clb {
                    continue;
                }
                let tile = model.tile_index(layer, x, y);
                let tn = rrg.tile_nodes(layer, x, y);
                let owner = MuxOwner::Clb { layer: layer as u16, x: x as u16, y: y as u16 };
                let mut xbar_candidates: Vec<Signal> =
                    tn.ipins.iter().map(|&i| Signal::Node(i)).collect();
                // Feedback taps: BLE outputs as seen on the tile's OPINs.
                xbar_candidates.extend(tn.opins.iter().map(|&o| Signal::Node(o)));
                let width = ceil_log2(xbar_candidates.len());
                for ble in 0..n {
                    for input in 0..k {
                        model.crossbar.insert((tile, ble, input), model.muxes.len());
                        model.muxes.push(FabricMux {
                            owner,
                            role: MuxRole::Crossbar { ble, input },
                            target: Signal::LutOut { tile, ble },
                            candidates: xbar_candidates.clone(),
                            width,
                            offset,
                        });
                        offset += width;
                    }
                }
                for ble in 0..n {
                    model.outsel.insert((tile, ble), model.muxes.len());
                    model.muxes.push(FabricMux {
                        owner,
                        role: MuxRole::OutputSelect { ble },
                        target: Signal::Node(tn.opins[ble as usize]),
                        candidates: vec![Signal::LutOut { tile, ble }, Signal::FlipFlop { tile, ble }],
                        width: 1,
                        offset,
                    });
                    offset += 1;
                }
            }
        }
    }
    model.mux_bits = offset;

    // LUT tables, tile-major after all muxes.
    let per_tile = model.lut_table_bits();
    for layer in 0..grid.layers {
        for y in 0..grid.height {
            for x in 0..grid.width {
                if grid.block(layer, x, y) != BlockKind::Clb {
                    continue;
                }
                let tile = model.tile_index(layer, x, y);
                model.lut_blocks.push(LutBlock { tile, offset: model.mux_bits + model.lut_bits });
                model.lut_bits += per_tile;
            }
        }
    }

    Ok(model)
}

/// Drive-point lattice site of a wire node.
pub(crate) fn drive_site(rrg: &RoutingResourceGraph, id: NodeId) -> (u16, u16) {
    let n = rrg.node(id);
    match (n.kind, n.dir) {
        (NodeKind::Chanx, crate::rrg::Direction::Inc) => (n.xlo, n.ylo),
        (NodeKind::Chanx, _) => (n.xhi + 1, n.ylo),
        (NodeKind::Chany, crate::rrg::Direction::Inc) => (n.xlo, n.ylo),
        (NodeKind::Chany, _) => (n.xlo, n.yhi + 1),
        _ => (n.xlo, n.ylo),
    }
}

/// Coverage audit report: the unaccounted edges must be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub unaccounted: Vec<(NodeId, NodeId)>,
    pub candidate_slots: usize,
    pub direct_wires: usize,
    pub edge_count: usize,
}

impl CoverageReport {
    pub fn is_clean(&self) -> bool {
        self.unaccounted.is_empty() && self.candidate_slots + self.direct_wires == self.edge_count
    }
}

/// Verifies that every RRG edge is realized by exactly one mux candidate
/// slot or one direct wire.
pub fn audit_coverage(model: &FabricModel, rrg: &RoutingResourceGraph) -> CoverageReport {
    let mut slots: std::collections::HashSet<(NodeId, NodeId)> = std::collections::HashSet::new();
    let mut candidate_slots = 0usize;
    for mux in &model.muxes {
        let Signal::Node(dst) = mux.target else { continue };
        for c in &mux.candidates {
            if let Signal::Node(src) = c {
                // CLB-internal candidates (crossbar taps on pins) are not
                // RRG edges; only routing muxes count toward coverage.
                if matches!(mux.role, MuxRole::Wire | MuxRole::Ipin | MuxRole::ChanzIn) {
                    slots.insert((*src, dst));
                    candidate_slots += 1;
                }
            }
        }
    }
    let direct: std::collections::HashSet<(NodeId, NodeId)> = model.direct_wires.iter().copied().collect();
    let mut unaccounted = Vec::new();
    for e in &rrg.edges {
        if !slots.contains(&(e.src, e.dst)) && !direct.contains(&(e.src, e.dst)) {
            unaccounted.push((e.src, e.dst));
        }
    }
    CoverageReport {
        unaccounted,
        candidate_slots,
        direct_wires: model.direct_wires.len(),
        edge_count: rrg.edges.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ConnectionType, LayerSpec, SbPlacement, Segment};
    use crate::rrg::build_base_rrg;

    fn unit_spec() -> ArchSpec {
        ArchSpec {
            grid_width: 1,
            grid_height: 1,
            channel_width: 2,
            segments: vec![Segment { length: 1, tracks: 2 }],
            lut_size: 2,
            cluster_size: 1,
            ..ArchSpec::default()
        }
    }

    #[test]
    fn unit_grid_inventory_matches_hand_enumeration() {
        // 1x1, W=2: two IPIN muxes (two covering wires each), no wire ever
        // gets two drivers, one 2-wide crossbar pair and one output select.
        let spec = unit_spec();
        let rrg = build_base_rrg(&spec).unwrap();
        let model = annotate(&rrg, &spec).unwrap();
        let ipin_muxes: Vec<&FabricMux> =
            model.muxes.iter().filter(|m| m.role == MuxRole::Ipin).collect();
        assert_eq!(ipin_muxes.len(), 2);
        for m in &ipin_muxes {
            assert_eq!(m.candidates.len(), 2);
            assert_eq!(m.width, 1);
        }
        // Exactly one channel wire collects two drivers on the unit grid:
        // the corner turn plus the output pin tap on track 0.
        let wire_muxes: Vec<&FabricMux> =
            model.muxes.iter().filter(|m| m.role == MuxRole::Wire).collect();
        assert_eq!(wire_muxes.len(), 1);
        assert_eq!(wire_muxes[0].candidates.len(), 2);
        assert_eq!(model.crossbar.len(), 2);
        assert_eq!(model.outsel.len(), 1);
        let report = audit_coverage(&model, &rrg);
        assert!(report.is_clean(), "{report:?}");
        // Accounting: 2 IPIN selects + 1 wire select + 2 crossbar muxes
        // (3 candidates each, width 2) + 1 outsel + 1 LUT of 4 bits.
        assert_eq!(model.mux_bits, 2 * 1 + 1 + 2 * 2 + 1);
        assert_eq!(model.lut_bits, 4);
    }

    #[test]
    fn none2d_has_no_cross_layer_muxes() {
        let mut spec = unit_spec();
        spec.grid_width = 3;
        spec.grid_height = 3;
        spec.layer_count = 2;
        spec.layers = vec![LayerSpec::homogeneous(); 2];
        let rrg = build_base_rrg(&spec).unwrap();
        let model = annotate(&rrg, &spec).unwrap();
        for mux in &model.muxes {
            let Signal::Node(dst) = mux.target else { continue };
            for c in &mux.candidates {
                if let Signal::Node(src) = c {
                    assert_eq!(rrg.node(*src).layer, rrg.node(dst).layer);
                }
            }
        }
        assert!(audit_coverage(&model, &rrg).is_clean());
    }

    #[test]
    fn single_3d_sb_site_has_four_vertical_input_muxes() {
        let mut spec = unit_spec();
        spec.grid_width = 4;
        spec.grid_height = 4;
        spec.layer_count = 2;
        spec.layers = vec![LayerSpec::homogeneous(); 2];
        spec.vertical.connection_type = ConnectionType::Sb;
        spec.vertical.sb_placement = SbPlacement::CustomList;
        spec.vertical.custom_sites = Some(vec![(2, 2)]);
        let base = build_base_rrg(&spec).unwrap();
        let plan = crate::vertical::plan_sites(&spec, 0).unwrap();
        let rrg = crate::vertical::extend_to_3d(&base, &spec, &plan).unwrap();
        let model = annotate(&rrg, &spec).unwrap();
        // 2 tracks x 2 directions: 4 vertical-track input muxes at (2,2),
        // found by brute-force inventory scan.
        let zin: Vec<&FabricMux> =
            model.muxes.iter().filter(|m| m.role == MuxRole::ChanzIn).collect();
        assert_eq!(zin.len(), 4);
        for m in &zin {
            match m.owner {
                MuxOwner::SwitchBlock { x, y, .. } => assert_eq!((x, y), (2, 2)),
                other => panic!("wrong owner {other:?}"),
            }
        }
        assert!(audit_coverage(&model, &rrg).is_clean());
    }

    #[test]
    fn fault_injection_names_the_missing_edge() {
        let spec = unit_spec();
        let rrg = build_base_rrg(&spec).unwrap();
        let mut model = annotate(&rrg, &spec).unwrap();
        // Remove one candidate from the first IPIN mux.
        let idx = model.muxes.iter().position(|m| m.role == MuxRole::Ipin).unwrap();
        let removed = model.muxes[idx].candidates.pop().unwrap();
        let report = audit_coverage(&model, &rrg);
        assert_eq!(report.unaccounted.len(), 1);
        let Signal::Node(src) = removed else { panic!() };
        assert_eq!(report.unaccounted[0].0, src);
    }

    #[test]
    fn hybrid_8x8_coverage_is_clean() {
        let mut spec = unit_spec();
        spec.grid_width = 8;
        spec.grid_height = 8;
        spec.layer_count = 2;
        spec.layers = vec![LayerSpec::homogeneous(); 2];
        spec.channel_width = 8;
        spec.segments = vec![Segment { length: 1, tracks: 8 }];
        spec.vertical.connection_type = ConnectionType::Hybrid;
        let start = std::time::Instant::now();
        let base = build_base_rrg(&spec).unwrap();
        let plan = crate::vertical::plan_sites(&spec, 0).unwrap();
        let rrg = crate::vertical::extend_to_3d(&base, &spec, &plan).unwrap();
        let model = annotate(&rrg, &spec).unwrap();
        let report = audit_coverage(&model, &rrg);
        assert!(report.is_clean(), "{} unaccounted", report.unaccounted.len());
        assert!(start.elapsed().as_secs() < 10, "audit too slow: {:?}", start.elapsed());
    }

    #[test]
    fn default_candidates_prefer_planar_straight_through() {
        let mut spec = unit_spec();
        spec.grid_width = 4;
        spec.grid_height = 4;
        spec.channel_width = 4;
        spec.segments = vec![Segment { length: 1, tracks: 4 }];
        let rrg = build_base_rrg(&spec).unwrap();
        let model = annotate(&rrg, &spec).unwrap();
        for mux in &model.muxes {
            if mux.role != MuxRole::Wire {
                continue;
            }
            let Signal::Node(dst) = mux.target else { continue };
            let Signal::Node(first) = mux.candidates[0] else { panic!() };
            let classes: Vec<u32> =
                mux.candidates
                    .iter()
                    .map(|c| match c {
                        Signal::Node(s) => candidate_class(&rrg, dst, *s),
                        _ => 9,
                    })
                    .collect();
            let mut sorted = classes.clone();
            sorted.sort_unstable();
            assert_eq!(classes, sorted, "candidates out of class order");
            // Whenever a planar wire candidate exists it sits first.
            if classes.iter().any(|&c| c <= 1) {
                assert!(candidate_class(&rrg, dst, first) <= 1);
            }
        }
    }
}
