//! Negotiated-congestion (PathFinder-style) routing over the 3D-RRG.
//!
//! Iterated maze routing: every net is ripped up and rerouted each pass
//! under a present-congestion factor that grows geometrically and a history
//! cost that accumulates on overused nodes. Success means occupancy is
//! within capacity everywhere.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::{Block, DelayModel, PackedNetlist, Placement};
use crate::error::{Error, Result};
use crate::rrg::{NodeId, NodeKind, RoutingResourceGraph};

#[derive(Debug, Clone, Copy)]
pub struct RouteParams {
    pub max_iters: u32,
    pub pres_fac_init: f64,
    pub pres_fac_mult: f64,
    pub criticality_exp: f64,
    /// Wirelength weight of one used CHANZ pair, in tile-equivalents.
    pub vertical_wl_weight: u64,
}

impl Default for RouteParams {
    fn default() -> Self {
        RouteParams {
            max_iters: 50,
            pres_fac_init: 0.5,
            pres_fac_mult: 1.5,
            criticality_exp: 1.0,
            vertical_wl_weight: 1,
        }
    }
}

/// One reached sink: the SINK node, the IPIN the path entered through, the
/// block served, and the pure path delay from the net SOURCE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkEntry {
    pub sink: NodeId,
    pub ipin: NodeId,
    pub block: Block,
    pub delay: f64,
}

/// A routed net: nodes with the tree edge that reached them (None for the
/// SOURCE seed), in parent-before-child order.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteTree {
    pub net: usize,
    pub nodes: Vec<(NodeId, Option<u32>)>,
    pub sink_count: usize,
    pub sinks: Vec<SinkEntry>,
}

#[derive(Debug, Clone)]
pub struct RoutingResult {
    pub trees: Vec<RouteTree>,
    pub iterations: u32,
    /// Sum of used planar wire spans plus the vertical weight per used pair.
    pub wirelength: u64,
    /// Deterministic router effort: total heap pops across all passes.
    pub effort: u64,
    /// Final per-node occupancy.
    pub occupancy: Vec<u16>,
}

impl RoutingResult {
    /// Independent legality re-scan: recounts occupancy from the route
    /// trees and returns any node over capacity.
    pub fn overused_nodes(&self, rrg: &RoutingResourceGraph) -> Vec<NodeId> {
        let mut occ = vec![0u32; rrg.nodes.len()];
        for tree in &self.trees {
            for &(node, _) in &tree.nodes {
                occ[node as usize] += 1;
            }
        }
        occ.iter()
            .enumerate()
            .filter(|&(i, &o)| o > rrg.node(i as NodeId).capacity as u32)
            .map(|(i, _)| i as NodeId)
            .collect()
    }

    /// Route-tree validity: connected (parent precedes child), acyclic, and
    /// containing the source and every sink.
    pub fn trees_valid(&self, rrg: &RoutingResourceGraph) -> bool {
        for tree in &self.trees {
            let mut seen = std::collections::HashSet::new();
            for (i, &(node, edge)) in tree.nodes.iter().enumerate() {
                if !seen.insert(node) {
                    return false;
                }
                match edge {
                    None => {
                        if i != 0 {
                            return false;
                        }
                        if rrg.node(node).kind != NodeKind::Source {
                            return false;
                        }
                    }
                    Some(eid) => {
                        let e = &rrg.edges[eid as usize];
                        if e.dst != node || !seen.contains(&e.src) {
                            return false;
                        }
                    }
                }
            }
            for s in &tree.sinks {
                if !seen.contains(&s.sink) || !seen.contains(&s.ipin) {
                    return false;
                }
            }
        }
        true
    }
}

/// The net endpoints in RRG terms.
struct NetSpec {
    net: usize,
    source: NodeId,
    root_opin: NodeId,
    /// (SINK node, blocks served at that tile) — each block needs its own
    /// IPIN entry.
    targets: Vec<(NodeId, Vec<Block>)>,
}

fn block_tile(packed: &PackedNetlist, placement: &Placement, block: Block) -> (u32, u32, u32) {
    let s = placement.site_of(packed, block);
    (s.layer as u32, s.x as u32, s.y as u32)
}

fn net_specs(
    packed: &PackedNetlist,
    placement: &Placement,
    rrg: &RoutingResourceGraph,
) -> Result<Vec<NetSpec>> {
    let mut specs = Vec::with_capacity(packed.nets.len());
    for (ni, net) in packed.nets.iter().enumerate() {
        let (layer, x, y) = block_tile(packed, placement, net.driver);
        let tn = rrg.tile_nodes(layer, x, y);
        let opin_index = match net.driver {
            Block::Cluster(ci) => {
                let (pc, ble) = packed
                    .producer(net.signal)
                    .ok_or_else(|| Error::Place(format!("net `{}` has no producer", net.name)))?;
                debug_assert_eq!(pc, ci);
                ble
            }
            Block::InPad(_) => placement.site_of(packed, net.driver).sub as usize,
            Block::OutPad(_) => return Err(Error::Place("output pad cannot drive a net".into())),
        };
        let source = tn.source.ok_or_else(|| Error::Place("driver tile has no source".into()))?;
        let root_opin = *tn
            .opins
            .get(opin_index)
            .ok_or_else(|| Error::Place(format!("driver tile lacks opin {opin_index}")))?;
        let mut targets: Vec<(NodeId, Vec<Block>)> = Vec::new();
        for &sink_block in &net.sinks {
            let (l2, x2, y2) = block_tile(packed, placement, sink_block);
            let sink = rrg
                .tile_nodes(l2, x2, y2)
                .sink
                .ok_or_else(|| Error::Place("sink tile has no sink node".into()))?;
            match targets.iter_mut().find(|(s, _)| *s == sink) {
                Some((_, blocks)) => blocks.push(sink_block),
                None => targets.push((sink, vec![sink_block])),
            }
        }
        specs.push(NetSpec { net: ni, source, root_opin, targets });
    }
    Ok(specs)
}

#[derive(PartialEq)]
struct HeapItem {
    cost: f64,
    node: NodeId,
    via_edge: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap with a deterministic node-id tie break.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
            .then_with(|| other.via_edge.cmp(&self.via_edge))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Routes every net of the placed design. On success, occupancy respects
/// capacity at every node and per-sink delays are recorded along the trees.
pub fn route(
    packed: &PackedNetlist,
    placement: &Placement,
    rrg: &RoutingResourceGraph,
    model: &DelayModel,
    params: RouteParams,
) -> Result<RoutingResult> {
    let specs = net_specs(packed, placement, rrg)?;
    let (offsets, edge_ids) = rrg.out_adjacency();
    let n_nodes = rrg.nodes.len();

    let mut occupancy = vec![0u16; n_nodes];
    let mut history = vec![0.0f64; n_nodes];
    let mut trees: Vec<Option<RouteTree>> = (0..specs.len()).map(|_| None).collect();
    // Criticality per (net, target index), from the previous pass.
    let mut crit: Vec<Vec<f64>> = specs.iter().map(|s| vec![1.0; s.targets.len()]).collect();
    let mut effort = 0u64;

    let base = model.base_switch_delay;
    let mut pres_fac = params.pres_fac_init;

    for iter in 0..params.max_iters {
        for spec in &specs {
            // Rip up.
            if let Some(tree) = trees[spec.net].take() {
                for &(node, _) in &tree.nodes {
                    occupancy[node as usize] -= 1;
                }
            }
            let tree = route_net(
                rrg,
                (&offsets, &edge_ids),
                spec,
                &occupancy,
                &history,
                pres_fac,
                &crit[spec.net],
                params.criticality_exp,
                base,
                &mut effort,
            )?;
            for &(node, _) in &tree.nodes {
                occupancy[node as usize] += 1;
            }
            trees[spec.net] = Some(tree);
        }

        let overused: Vec<NodeId> = (0..n_nodes)
            .filter(|&i| occupancy[i] > rrg.nodes[i].capacity)
            .map(|i| i as NodeId)
            .collect();
        if overused.is_empty() {
            let mut trees: Vec<RouteTree> = trees.into_iter().map(|t| t.unwrap()).collect();
            finalize_delays(rrg, &mut trees);
            let wirelength = wirelength_of(rrg, &trees, params.vertical_wl_weight);
            return Ok(RoutingResult { trees, iterations: iter + 1, wirelength, effort, occupancy });
        }

        for &n in &overused {
            let over = occupancy[n as usize] as f64 - rrg.node(n).capacity as f64;
            history[n as usize] += over;
        }
        pres_fac *= params.pres_fac_mult;

        // Refresh criticalities from the delays of the (illegal) pass.
        let mut max_delay = 0.0f64;
        let mut delays: Vec<Vec<f64>> = Vec::with_capacity(specs.len());
        for spec in &specs {
            let tree = trees[spec.net].as_mut().unwrap();
            finalize_delays_one(rrg, tree);
            let per_target: Vec<f64> = spec
                .targets
                .iter()
                .map(|(sink, _)| {
                    tree.sinks
                        .iter()
                        .filter(|s| s.sink == *sink)
                        .map(|s| s.delay)
                        .fold(0.0, f64::max)
                })
                .collect();
            for &d in &per_target {
                max_delay = max_delay.max(d);
            }
            delays.push(per_target);
        }
        if max_delay > 0.0 {
            for (ni, per_target) in delays.into_iter().enumerate() {
                for (ti, d) in per_target.into_iter().enumerate() {
                    crit[ni][ti] = (d / max_delay).powf(params.criticality_exp).clamp(0.0, 1.0);
                }
            }
        }
    }

    let overused: Vec<NodeId> = (0..n_nodes)
        .filter(|&i| occupancy[i] > rrg.nodes[i].capacity)
        .map(|i| i as NodeId)
        .collect();
    Err(Error::Unroutable { iterations: params.max_iters, overused })
}

#[allow(clippy::too_many_arguments)]
fn route_net(
    rrg: &RoutingResourceGraph,
    (offsets, edge_ids): (&[u32], &[u32]),
    spec: &NetSpec,
    occupancy: &[u16],
    history: &[f64],
    pres_fac: f64,
    crit: &[f64],
    _crit_exp: f64,
    base: f64,
    effort: &mut u64,
) -> Result<RouteTree> {
    let n = rrg.nodes.len();
    let mut in_tree = vec![false; n];
    let mut nodes: Vec<(NodeId, Option<u32>)> = Vec::new();

    nodes.push((spec.source, None));
    in_tree[spec.source as usize] = true;
    let root_edge = (offsets[spec.source as usize]..offsets[spec.source as usize + 1])
        .map(|i| edge_ids[i as usize])
        .find(|&eid| rrg.edges[eid as usize].dst == spec.root_opin)
        .ok_or_else(|| Error::Place("source does not feed the assigned opin".into()))?;
    nodes.push((spec.root_opin, Some(root_edge)));
    in_tree[spec.root_opin as usize] = true;

    let mut sinks: Vec<SinkEntry> = Vec::new();

    for (ti, (target, blocks)) in spec.targets.iter().enumerate() {
        let target = *target;
        for &block in blocks {
            let criticality = crit.get(ti).copied().unwrap_or(1.0);
            let mut best_cost: HashMap<NodeId, f64> = HashMap::new();
            let mut prev_edge: HashMap<NodeId, u32> = HashMap::new();
            let mut heap = BinaryHeap::new();
            for &(node, _) in &nodes {
                // The SOURCE never re-expands: the net leaves through its
                // assigned OPIN only.
                if rrg.node(node).kind == NodeKind::Source {
                    continue;
                }
                heap.push(HeapItem { cost: 0.0, node, via_edge: u32::MAX });
                best_cost.insert(node, 0.0);
            }
            let mut found = false;
            while let Some(HeapItem { cost, node, via_edge }) = heap.pop() {
                *effort += 1;
                if best_cost.get(&node).is_some_and(|&c| cost > c) {
                    continue;
                }
                if via_edge != u32::MAX {
                    prev_edge.insert(node, via_edge);
                }
                if node == target {
                    found = true;
                    break;
                }
                for i in offsets[node as usize]..offsets[node as usize + 1] {
                    let eid = edge_ids[i as usize];
                    let e = &rrg.edges[eid as usize];
                    let dst = e.dst;
                    if in_tree[dst as usize] {
                        continue;
                    }
                    let dk = rrg.node(dst).kind;
                    if dk == NodeKind::Sink && dst != target {
                        continue;
                    }
                    if dk == NodeKind::Sink && in_tree[node as usize] {
                        // A repeat entry must come through a fresh IPIN.
                        continue;
                    }
                    let cap = rrg.node(dst).capacity;
                    let over = (occupancy[dst as usize] as f64 + 1.0 - cap as f64).max(0.0);
                    let pres = 1.0 + pres_fac * over;
                    let delay_norm = e.delay / base;
                    let add = (criticality * delay_norm + (1.0 - criticality)) * pres
                        + history[dst as usize];
                    let next = cost + add;
                    if best_cost.get(&dst).is_none_or(|&c| next < c) {
                        best_cost.insert(dst, next);
                        heap.push(HeapItem { cost: next, node: dst, via_edge: eid });
                    }
                }
            }
            if !found {
                return Err(Error::Unroutable {
                    iterations: 0,
                    overused: vec![target],
                });
            }
            // Backtrace into the tree, parent-first.
            let mut path: Vec<(NodeId, u32)> = Vec::new();
            let mut cursor = target;
            while !in_tree[cursor as usize] {
                let eid = prev_edge[&cursor];
                path.push((cursor, eid));
                cursor = rrg.edges[eid as usize].src;
            }
            path.reverse();
            let ipin = path
                .iter()
                .rev()
                .map(|&(n, _)| n)
                .chain([cursor])
                .find(|&n| rrg.node(n).kind == NodeKind::Ipin);
            for &(node, eid) in &path {
                nodes.push((node, Some(eid)));
                in_tree[node as usize] = true;
            }
            sinks.push(SinkEntry {
                sink: target,
                ipin: ipin.unwrap_or(cursor),
                block,
                delay: 0.0,
            });
        }
    }

    Ok(RouteTree { net: spec.net, nodes, sink_count: sinks.len(), sinks })
}

/// Pure path delays along the stored edges, parent-before-child.
fn finalize_delays_one(rrg: &RoutingResourceGraph, tree: &mut RouteTree) {
    let mut delay: HashMap<NodeId, f64> = HashMap::new();
    for &(node, edge) in &tree.nodes {
        let d = match edge {
            None => 0.0,
            Some(eid) => {
                let e = &rrg.edges[eid as usize];
                delay.get(&e.src).copied().unwrap_or(0.0) + e.delay
            }
        };
        delay.insert(node, d);
    }
    for s in &mut tree.sinks {
        s.delay = delay.get(&s.sink).copied().unwrap_or(0.0);
    }
}

fn finalize_delays(rrg: &RoutingResourceGraph, trees: &mut [RouteTree]) {
    for tree in trees {
        finalize_delays_one(rrg, tree);
    }
}

/// Wirelength: the spans of used planar wires plus `w_z` per used CHANZ
/// pair (a pair is used when its via edge is in a tree).
pub fn wirelength_of(rrg: &RoutingResourceGraph, trees: &[RouteTree], w_z: u64) -> u64 {
    let mut wl = 0u64;
    for tree in trees {
        for &(node, edge) in &tree.nodes {
            let n = rrg.node(node);
            if n.is_wire() {
                wl += n.span_tiles() as u64;
            }
            if let Some(eid) = edge {
                let e = &rrg.edges[eid as usize];
                if rrg.node(e.src).kind == NodeKind::Chanz && n.kind == NodeKind::Chanz {
                    wl += w_z;
                }
            }
        }
    }
    wl
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ArchSpec, ConnectionType, Segment};
    use crate::blif::parse_blif;
    use crate::pnr::{pack, place, PlaceParams};
    use crate::rrg::build_base_rrg;

    fn flow(spec: &ArchSpec, blif: &str, seed: u64) -> (PackedNetlist, Placement, RoutingResult, RoutingResourceGraph) {
        let netlist = parse_blif(blif).unwrap();
        let packed = pack(&netlist, spec).unwrap();
        let rrg = if spec.vertical.connection_type == ConnectionType::None2D {
            build_base_rrg(spec).unwrap()
        } else {
            let base = build_base_rrg(spec).unwrap();
            let plan = crate::vertical::plan_sites(spec, seed).unwrap();
            crate::vertical::extend_to_3d(&base, spec, &plan).unwrap()
        };
        let placement = place(&packed, &rrg, seed, PlaceParams::default()).unwrap();
        let model = DelayModel::from_spec(spec);
        let routing = route(&packed, &placement, &rrg, &model, RouteParams::default()).unwrap();
        (packed, placement, routing, rrg)
    }

    fn small_spec() -> ArchSpec {
        ArchSpec {
            grid_width: 4,
            grid_height: 4,
            channel_width: 6,
            segments: vec![Segment { length: 1, tracks: 6 }],
            lut_size: 4,
            cluster_size: 2,
            ..ArchSpec::default()
        }
    }

    const BUF: &str = ".model b\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n";

    #[test]
    fn buffer_routes_with_short_wirelength() {
        let (_, _, routing, rrg) = flow(&small_spec(), BUF, 1);
        assert!(routing.overused_nodes(&rrg).is_empty());
        assert!(routing.trees_valid(&rrg));
        assert!(routing.wirelength >= 1);
    }

    #[test]
    fn same_tile_net_uses_at_most_two_wires() {
        // Two LUTs packed into one cluster feed each other: no inter-block
        // net at all. Force two clusters on adjacent tiles instead and
        // check the path is opin -> channel -> ipin.
        let spec = ArchSpec { cluster_size: 1, ..small_spec() };
        let doc = ".model m\n.inputs a\n.outputs y\n.names a x\n1 1\n.names x y\n1 1\n.end\n";
        let (packed, _, routing, rrg) = flow(&spec, doc, 3);
        let x_net = packed.nets.iter().position(|n| n.name == "x").unwrap();
        let tree = routing.trees.iter().find(|t| t.net == x_net).unwrap();
        let wires = tree.nodes.iter().filter(|&&(n, _)| rrg.node(n).is_wire()).count();
        assert!(wires >= 1);
        let wl = wirelength_of(&rrg, std::slice::from_ref(tree), 1);
        // SOURCE -> OPIN -> wire(s) -> IPIN -> SINK with adjacent tiles.
        assert!(wl <= 4, "wl {wl}");
    }

    #[test]
    fn capacity_pigeonhole_is_unroutable() {
        // W=1 and K=9 put three input pins on the same tile side; only two
        // wires cover that side, so three distinct nets cannot all enter.
        let mut spec = ArchSpec {
            grid_width: 3,
            grid_height: 3,
            channel_width: 1,
            segments: vec![Segment { length: 1, tracks: 1 }],
            lut_size: 9,
            cluster_size: 1,
            ..ArchSpec::default()
        };
        spec.fc_in = 1.0;
        spec.fc_out = 1.0;
        let doc = "\
.model pig
.inputs a b c d e f g h i
.outputs y
.names a b c d e f g h i y
111111111 1
.end
";
        let netlist = parse_blif(doc).unwrap();
        let packed = pack(&netlist, &spec).unwrap();
        let rrg = build_base_rrg(&spec).unwrap();
        let placement = place(&packed, &rrg, 0, PlaceParams::default()).unwrap();
        let model = DelayModel::from_spec(&spec);
        let err = route(&packed, &placement, &rrg, &model, RouteParams::default()).unwrap_err();
        match err {
            Error::Unroutable { overused, .. } => assert!(!overused.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn legality_verified_by_independent_rescan() {
        for seed in 0..5 {
            let (_, _, routing, rrg) = flow(&small_spec(), BUF, seed);
            assert!(routing.overused_nodes(&rrg).is_empty());
            for (i, &occ) in routing.occupancy.iter().enumerate() {
                assert!(occ <= rrg.nodes[i].capacity);
            }
        }
    }

    #[test]
    fn routing_is_seed_deterministic() {
        let (_, _, a, _) = flow(&small_spec(), BUF, 7);
        let (_, _, b, _) = flow(&small_spec(), BUF, 7);
        assert_eq!(a.trees, b.trees);
        assert_eq!(a.wirelength, b.wirelength);
        assert_eq!(a.effort, b.effort);
    }

    #[test]
    fn multi_sink_nets_reach_every_sink() {
        let spec = ArchSpec { cluster_size: 1, ..small_spec() };
        let doc = "\
.model fan
.inputs a
.outputs y z w
.names a y
1 1
.names a z
1 1
.names a w
1 1
.end
";
        let (packed, _, routing, rrg) = flow(&spec, doc, 2);
        assert!(routing.trees_valid(&rrg));
        let a_net = packed.nets.iter().position(|n| n.name == "a").unwrap();
        let tree = routing.trees.iter().find(|t| t.net == a_net).unwrap();
        assert_eq!(tree.sink_count, 3);
        // Every sink got a distinct IPIN.
        let mut ipins: Vec<NodeId> = tree.sinks.iter().map(|s| s.ipin).collect();
        ipins.sort_unstable();
        ipins.dedup();
        assert_eq!(ipins.len(), 3);
    }
}
