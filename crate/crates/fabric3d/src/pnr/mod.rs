//! Benchmark place and route: packing, annealing placement, negotiated
//! congestion routing, and static timing.

pub mod pack;
pub mod place;
pub mod route;
pub mod sta;

pub use pack::pack;
pub use place::{place, PlaceParams, Placement};
pub use route::{route, RouteParams, RouteTree, RoutingResult, SinkEntry};
pub use sta::{sta, TimingReport};

use crate::arch::ArchSpec;
use crate::blif::SigId;
use crate::rrg::{NodeKind, RoutingResourceGraph};

/// Delay constants used by routing and timing. Vertical edges cost
/// `vertical_delay_ratio x base_switch_delay` when ratio-specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    pub base_switch_delay: f64,
    pub wire_delay_per_tile: f64,
    pub vertical_delay_ratio: f64,
    pub lut_delay: f64,
    pub setup_time: f64,
}

impl DelayModel {
    pub fn from_spec(spec: &ArchSpec) -> Self {
        DelayModel {
            base_switch_delay: spec.base_switch_delay,
            wire_delay_per_tile: spec.wire_delay_per_tile,
            vertical_delay_ratio: spec.vertical_delay_ratio,
            lut_delay: spec.lut_delay,
            setup_time: 0.0,
        }
    }

    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.vertical_delay_ratio = ratio;
        self
    }

    /// Canonical delay of an RRG edge under this model, recomputed from the
    /// endpoint descriptors. For the model the graph was built with this
    /// reproduces the stored edge delay; timing analysis re-evaluates fixed
    /// routings under other ratios through this single definition.
    pub fn edge_delay(&self, rrg: &RoutingResourceGraph, src: u32, dst: u32) -> f64 {
        let s = rrg.node(src);
        let d = rrg.node(dst);
        let via = self.vertical_delay_ratio * self.base_switch_delay;
        let wire = |n: &crate::rrg::RrNode| n.span_tiles() as f64 * self.wire_delay_per_tile;
        if s.kind == NodeKind::Chanz && d.kind == NodeKind::Chanz {
            return via;
        }
        let crosses = s.layer != d.layer;
        let base = if crosses { via + self.base_switch_delay } else { self.base_switch_delay };
        match d.kind {
            NodeKind::Chanx | NodeKind::Chany => base + wire(d),
            NodeKind::Chanz | NodeKind::Ipin => base,
            NodeKind::Opin | NodeKind::Sink | NodeKind::Source => 0.0,
        }
    }
}

/// One basic logic element: a LUT slot and a flip-flop slot sharing one
/// output. A registered BLE exposes Q; the LUT may be an identity
/// pass-through when only the flip-flop is used.
#[derive(Debug, Clone, PartialEq)]
pub struct Ble {
    /// Input signals, at most K; row index treats the first as MSB.
    pub inputs: Vec<SigId>,
    pub table: Vec<bool>,
    pub registered: bool,
    /// The signal this BLE produces (Q when registered).
    pub output: SigId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub bles: Vec<Ble>,
    /// External input signals in cluster pin order.
    pub inputs: Vec<SigId>,
}

/// A placeable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Cluster(usize),
    /// Primary input pad, indexing `PackedNetlist::pis`.
    InPad(usize),
    /// Primary output pad, indexing `PackedNetlist::pos`.
    OutPad(usize),
}

/// An inter-block net: one driver, deduplicated sinks.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub signal: SigId,
    pub name: String,
    pub driver: Block,
    pub sinks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackedNetlist {
    pub name: String,
    pub signals: Vec<String>,
    pub clusters: Vec<Cluster>,
    pub pis: Vec<(String, SigId)>,
    pub pos: Vec<(String, SigId)>,
    pub nets: Vec<Net>,
    pub lut_size: u32,
    pub cluster_size: u32,
}

impl PackedNetlist {
    /// All placeable blocks, clusters first, then pads.
    pub fn blocks(&self) -> Vec<Block> {
        let mut blocks: Vec<Block> = (0..self.clusters.len()).map(Block::Cluster).collect();
        blocks.extend((0..self.pis.len()).map(Block::InPad));
        blocks.extend((0..self.pos.len()).map(Block::OutPad));
        blocks
    }

    /// The cluster (if any) producing a signal, with its BLE index.
    pub fn producer(&self, signal: SigId) -> Option<(usize, usize)> {
        for (ci, cluster) in self.clusters.iter().enumerate() {
            for (bi, ble) in cluster.bles.iter().enumerate() {
                if ble.output == signal {
                    return Some((ci, bi));
                }
            }
        }
        None
    }

    /// Derives the inter-block nets. A net exists for every signal whose
    /// driver is seen outside its own block; sinks are deduplicated
    /// (a cluster absorbs a signal once, its crossbar fans it out).
    pub fn derive_nets(&mut self) {
        let mut nets = Vec::new();
        let mut driver_of: std::collections::HashMap<SigId, Block> = std::collections::HashMap::new();
        let mut ble_of: std::collections::HashMap<SigId, (usize, usize)> = std::collections::HashMap::new();
        for (i, &(_, sig)) in self.pis.iter().enumerate() {
            driver_of.insert(sig, Block::InPad(i));
        }
        for (ci, cluster) in self.clusters.iter().enumerate() {
            for (bi, ble) in cluster.bles.iter().enumerate() {
                driver_of.insert(ble.output, Block::Cluster(ci));
                ble_of.insert(ble.output, (ci, bi));
            }
        }
        let mut sinks_of: std::collections::BTreeMap<SigId, Vec<Block>> = std::collections::BTreeMap::new();
        for (ci, cluster) in self.clusters.iter().enumerate() {
            for &sig in &cluster.inputs {
                sinks_of.entry(sig).or_default().push(Block::Cluster(ci));
            }
        }
        for (pi, &(_, sig)) in self.pos.iter().enumerate() {
            sinks_of.entry(sig).or_default().push(Block::OutPad(pi));
        }
        for (sig, sinks) in sinks_of {
            let Some(&driver) = driver_of.get(&sig) else { continue };
            let sinks: Vec<Block> = sinks.into_iter().filter(|&b| b != driver).collect();
            if sinks.is_empty() {
                continue;
            }
            nets.push(Net { signal: sig, name: self.signals[sig].clone(), driver, sinks });
        }
        self.nets = nets;
    }
}
