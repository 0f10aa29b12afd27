//! Routing resource graphs.
//!
//! The RRG is a directed graph over seven node kinds: SOURCE/SINK interface
//! the routing network to block internals, IPIN/OPIN are physical block
//! pins, CHANX/CHANY are planar routing wires, and CHANZ (added by the
//! vertical module) models inter-layer hops. Edges carry the switch delay
//! taken when entering the target node.
//!
//! Geometry. Tiles live at `(x, y)` with `x < grid_width`, `y < grid_height`
//! per layer. CHANX channel `c` runs along the south edge of tile row `c`,
//! CHANY channel `c` along the west edge of tile column `c`; the far-border
//! ring carries no channel, so a `w x h` grid has exactly `h` horizontal and
//! `w` vertical channels per layer. Each channel holds `W` track positions
//! with one wire per direction. Switch-block sites sit on the full corner
//! lattice `(0..=w, 0..=h)`.

pub(crate) mod build;
mod io;

pub use build::build_base_rrg;
pub use io::{deserialize_rrg, serialize_rrg};

use std::collections::HashMap;

use crate::arch::{ArchSpec, BlockKind};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Source,
    Sink,
    Ipin,
    Opin,
    Chanx,
    Chany,
    Chanz,
}

impl NodeKind {
    pub fn token(self) -> &'static str {
        match self {
            NodeKind::Source => "SOURCE",
            NodeKind::Sink => "SINK",
            NodeKind::Ipin => "IPIN",
            NodeKind::Opin => "OPIN",
            NodeKind::Chanx => "CHANX",
            NodeKind::Chany => "CHANY",
            NodeKind::Chanz => "CHANZ",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "SOURCE" => NodeKind::Source,
            "SINK" => NodeKind::Sink,
            "IPIN" => NodeKind::Ipin,
            "OPIN" => NodeKind::Opin,
            "CHANX" => NodeKind::Chanx,
            "CHANY" => NodeKind::Chany,
            "CHANZ" => NodeKind::Chanz,
            _ => return None,
        })
    }
}

/// Wire direction. Planar wires increment or decrement along their axis;
/// CHANZ wires carry one of the four vertical direction labels: Above/Under
/// names the side of the layer the connection sits on, Inc/Dec whether the
/// signal climbs to a higher layer or descends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Inc,
    Dec,
    AboveInc,
    AboveDec,
    UnderInc,
    UnderDec,
    None,
}

impl Direction {
    pub fn token(self) -> &'static str {
        match self {
            Direction::Inc => "INC",
            Direction::Dec => "DEC",
            Direction::AboveInc => "AINC",
            Direction::AboveDec => "ADEC",
            Direction::UnderInc => "UINC",
            Direction::UnderDec => "UDEC",
            Direction::None => "NONE",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "INC" => Direction::Inc,
            "DEC" => Direction::Dec,
            "AINC" => Direction::AboveInc,
            "ADEC" => Direction::AboveDec,
            "UINC" => Direction::UnderInc,
            "UDEC" => Direction::UnderDec,
            "NONE" => Direction::None,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrNode {
    pub kind: NodeKind,
    pub layer: u16,
    pub xlo: u16,
    pub ylo: u16,
    pub xhi: u16,
    pub yhi: u16,
    /// Channel track position, vertical track index, or pin index.
    pub track: u16,
    pub dir: Direction,
    pub capacity: u16,
}

impl RrNode {
    /// Tiles covered, for wirelength accounting. 1 for non-channel nodes.
    pub fn span_tiles(&self) -> u32 {
        (self.xhi - self.xlo + 1) as u32 * (self.yhi - self.ylo + 1) as u32
    }

    pub fn is_wire(&self) -> bool {
        matches!(self.kind, NodeKind::Chanx | NodeKind::Chany)
    }

    /// Ordering key realizing the documented node numbering: layer-major,
    /// then y, x, kind, track.
    pub fn sort_key(&self) -> (u16, u16, u16, NodeKind, u16, Direction, u16, u16) {
        (self.layer, self.ylo, self.xlo, self.kind, self.track, self.dir, self.xhi, self.yhi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrEdge {
    pub src: NodeId,
    pub dst: NodeId,
    /// Seconds.
    pub delay: f64,
}

/// Per-tile block map plus the pin counts implied by the spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: u32,
    pub height: u32,
    pub layers: u32,
    /// Layer-major, then y-major: `blocks[(layer*h + y)*w + x]`.
    pub blocks: Vec<BlockKind>,
    pub clb_inputs: u32,
    pub clb_outputs: u32,
    pub io_capacity: u32,
}

/// Hard-IP pin counts at desk scale; the paper's tiles are not published.
pub const DSP_INPUTS: u32 = 8;
pub const DSP_OUTPUTS: u32 = 4;
pub const BRAM_INPUTS: u32 = 8;
pub const BRAM_OUTPUTS: u32 = 4;

impl Grid {
    pub fn empty() -> Self {
        Grid { width: 0, height: 0, layers: 0, blocks: Vec::new(), clb_inputs: 0, clb_outputs: 0, io_capacity: 0 }
    }

    /// Lays out blocks for every layer of the spec. Grids at least 3x3 get
    /// an IO ring on the perimeter; smaller grids are all interior (the
    /// column map, or CLBs). Routing-only layers host no blocks at all.
    pub fn from_spec(spec: &ArchSpec) -> Self {
        let (w, h, l) = (spec.grid_width, spec.grid_height, spec.layer_count);
        let mut blocks = Vec::with_capacity((w * h * l) as usize);
        for layer in 0..l {
            let lspec = &spec.layers[layer as usize];
            let routing_only = lspec.is_routing_only();
            for y in 0..h {
                for x in 0..w {
                    let kind = if routing_only {
                        BlockKind::RoutingOnly
                    } else {
                        let ring = w >= 3 && h >= 3 && (x == 0 || y == 0 || x + 1 == w || y + 1 == h);
                        if ring {
                            BlockKind::Io
                        } else if lspec.columns.is_empty() {
                            BlockKind::Clb
                        } else {
                            lspec.columns[x as usize]
                        }
                    };
                    blocks.push(kind);
                }
            }
        }
        Grid {
            width: w,
            height: h,
            layers: l,
            blocks,
            clb_inputs: spec.lut_size * spec.cluster_size,
            clb_outputs: spec.cluster_size,
            io_capacity: spec.io_capacity,
        }
    }

    pub fn block(&self, layer: u32, x: u32, y: u32) -> BlockKind {
        self.blocks[((layer * self.height + y) * self.width + x) as usize]
    }

    pub fn pins_in(&self, kind: BlockKind) -> u32 {
        match kind {
            BlockKind::Clb => self.clb_inputs,
            BlockKind::Io => self.io_capacity,
            BlockKind::Dsp => DSP_INPUTS,
            BlockKind::Bram => BRAM_INPUTS,
            BlockKind::RoutingOnly => 0,
        }
    }

    pub fn pins_out(&self, kind: BlockKind) -> u32 {
        match kind {
            BlockKind::Clb => self.clb_outputs,
            BlockKind::Io => self.io_capacity,
            BlockKind::Dsp => DSP_OUTPUTS,
            BlockKind::Bram => BRAM_OUTPUTS,
            BlockKind::RoutingOnly => 0,
        }
    }
}

/// RRG node handles for one tile.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TileNodes {
    pub source: Option<NodeId>,
    pub sink: Option<NodeId>,
    pub opins: Vec<NodeId>,
    pub ipins: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingResourceGraph {
    pub nodes: Vec<RrNode>,
    pub edges: Vec<RrEdge>,
    pub grid: Grid,
    pub spec_hash: String,
    /// Channel width the graph was built with.
    pub channel_width: u32,
    tile_nodes: Vec<TileNodes>,
}

impl RoutingResourceGraph {
    pub(crate) fn new(grid: Grid, spec_hash: String, channel_width: u32) -> Self {
        RoutingResourceGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            grid,
            spec_hash,
            channel_width,
            tile_nodes: Vec::new(),
        }
    }

    pub fn node(&self, id: NodeId) -> &RrNode {
        &self.nodes[id as usize]
    }

    pub fn tile_nodes(&self, layer: u32, x: u32, y: u32) -> &TileNodes {
        &self.tile_nodes[((layer * self.grid.height + y) * self.grid.width + x) as usize]
    }

    /// Rebuilds the per-tile pin index from the node list. Called by the
    /// builder and after deserialization.
    pub(crate) fn rebuild_tile_index(&mut self) {
        let n = (self.grid.width * self.grid.height * self.grid.layers) as usize;
        let mut tiles = vec![TileNodes::default(); n.max(1)];
        if n == 0 {
            self.tile_nodes = Vec::new();
            return;
        }
        let (w, h) = (self.grid.width as usize, self.grid.height as usize);
        for (id, node) in self.nodes.iter().enumerate() {
            let idx = match node.kind {
                NodeKind::Source | NodeKind::Sink | NodeKind::Ipin | NodeKind::Opin => {
                    (node.layer as usize * h + node.ylo as usize) * w + node.xlo as usize
                }
                _ => continue,
            };
            let t = &mut tiles[idx];
            match node.kind {
                NodeKind::Source => t.source = Some(id as NodeId),
                NodeKind::Sink => t.sink = Some(id as NodeId),
                NodeKind::Opin => t.opins.push(id as NodeId),
                NodeKind::Ipin => t.ipins.push(id as NodeId),
                _ => {}
            }
        }
        for t in &mut tiles {
            t.opins.sort_by_key(|&id| self.nodes[id as usize].track);
            t.ipins.sort_by_key(|&id| self.nodes[id as usize].track);
        }
        self.tile_nodes = tiles;
    }

    /// Out-edge adjacency in CSR form: `(offsets, edge ids)`.
    pub fn out_adjacency(&self) -> (Vec<u32>, Vec<u32>) {
        let n = self.nodes.len();
        let mut counts = vec![0u32; n + 1];
        for e in &self.edges {
            counts[e.src as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut ids = vec![0u32; self.edges.len()];
        let mut cursor = counts.clone();
        for (i, e) in self.edges.iter().enumerate() {
            ids[cursor[e.src as usize] as usize] = i as u32;
            cursor[e.src as usize] += 1;
        }
        (counts, ids)
    }

    /// In-edge ids per node, each list ordered by source id.
    pub fn in_edges(&self) -> Vec<Vec<u32>> {
        let mut ins = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            ins[e.dst as usize].push(i as u32);
        }
        for list in &mut ins {
            list.sort_by_key(|&i| self.edges[i as usize].src);
        }
        ins
    }

    /// Renumbers nodes into the documented canonical ordering and sorts
    /// edges by `(src, dst)`. Two graphs are isomorphic under the documented
    /// ordering iff their canonical forms serialize identically.
    pub fn canonicalize(&self) -> RoutingResourceGraph {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&i| self.nodes[i].sort_key());
        let mut remap = vec![0u32; self.nodes.len()];
        for (new_id, &old_id) in order.iter().enumerate() {
            remap[old_id] = new_id as u32;
        }
        let nodes: Vec<RrNode> = order.iter().map(|&i| self.nodes[i]).collect();
        let mut edges: Vec<RrEdge> = self
            .edges
            .iter()
            .map(|e| RrEdge { src: remap[e.src as usize], dst: remap[e.dst as usize], delay: e.delay })
            .collect();
        edges.sort_by_key(|e| (e.src, e.dst));
        let mut g = RoutingResourceGraph::new(self.grid.clone(), self.spec_hash.clone(), self.channel_width);
        g.nodes = nodes;
        g.edges = edges;
        g.rebuild_tile_index();
        g
    }
}

/// Per-kind node totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCensus {
    pub source: usize,
    pub sink: usize,
    pub ipin: usize,
    pub opin: usize,
    pub chanx: usize,
    pub chany: usize,
    pub chanz: usize,
}

impl NodeCensus {
    pub fn total(&self) -> usize {
        self.source + self.sink + self.ipin + self.opin + self.chanx + self.chany + self.chanz
    }
}

pub fn node_census(rrg: &RoutingResourceGraph) -> NodeCensus {
    let mut c = NodeCensus::default();
    for n in &rrg.nodes {
        match n.kind {
            NodeKind::Source => c.source += 1,
            NodeKind::Sink => c.sink += 1,
            NodeKind::Ipin => c.ipin += 1,
            NodeKind::Opin => c.opin += 1,
            NodeKind::Chanx => c.chanx += 1,
            NodeKind::Chany => c.chany += 1,
            NodeKind::Chanz => c.chanz += 1,
        }
    }
    c
}

/// Axis of a planar channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Axis {
    X,
    Y,
}

/// Lookup table from channel coordinates to wire nodes, rebuilt on demand
/// from the node list.
pub(crate) struct WireIndex {
    /// (layer, axis, chan, track, dir Inc=0/Dec=1) -> spans sorted by lo.
    map: HashMap<(u16, u8, u16, u16, u8), Vec<(u16, u16, NodeId)>>,
}

impl WireIndex {
    pub fn build(rrg: &RoutingResourceGraph) -> Self {
        let mut map: HashMap<(u16, u8, u16, u16, u8), Vec<(u16, u16, NodeId)>> = HashMap::new();
        for (id, n) in rrg.nodes.iter().enumerate() {
            let (axis, chan, lo, hi) = match n.kind {
                NodeKind::Chanx => (0u8, n.ylo, n.xlo, n.xhi),
                NodeKind::Chany => (1u8, n.xlo, n.ylo, n.yhi),
                _ => continue,
            };
            let d = match n.dir {
                Direction::Inc => 0u8,
                Direction::Dec => 1u8,
                _ => continue,
            };
            map.entry((n.layer, axis, chan, n.track, d)).or_default().push((lo, hi, id as NodeId));
        }
        for spans in map.values_mut() {
            spans.sort_unstable();
        }
        WireIndex { map }
    }

    fn spans(&self, layer: u16, axis: Axis, chan: u16, track: u16, dec: bool) -> Option<&Vec<(u16, u16, NodeId)>> {
        let a = match axis {
            Axis::X => 0u8,
            Axis::Y => 1u8,
        };
        self.map.get(&(layer, a, chan, track, dec as u8))
    }

    /// The wire covering tile coordinate `pos` along the channel.
    pub fn covering(&self, layer: u16, axis: Axis, chan: u16, track: u16, dec: bool, pos: u16) -> Option<NodeId> {
        let spans = self.spans(layer, axis, chan, track, dec)?;
        spans.iter().find(|&&(lo, hi, _)| lo <= pos && pos <= hi).map(|&(_, _, id)| id)
    }

    /// The wire whose drive point is lattice position `pos`. Inc wires are
    /// driven at their low end, Dec wires at `hi + 1`.
    pub fn driven_at(&self, layer: u16, axis: Axis, chan: u16, track: u16, dec: bool, pos: u16) -> Option<NodeId> {
        let spans = self.spans(layer, axis, chan, track, dec)?;
        if dec {
            spans.iter().find(|&&(_, hi, _)| hi + 1 == pos).map(|&(_, _, id)| id)
        } else {
            spans.iter().find(|&&(lo, _, _)| lo == pos).map(|&(_, _, id)| id)
        }
    }

    /// The wire terminating (drivable end) at lattice position `pos`. Inc
    /// wires terminate at `hi + 1`, Dec wires at their low end.
    pub fn terminating_at(&self, layer: u16, axis: Axis, chan: u16, track: u16, dec: bool, pos: u16) -> Option<NodeId> {
        let spans = self.spans(layer, axis, chan, track, dec)?;
        if dec {
            spans.iter().find(|&&(lo, _, _)| lo == pos).map(|&(_, _, id)| id)
        } else {
            spans.iter().find(|&&(_, hi, _)| hi + 1 == pos).map(|&(_, _, id)| id)
        }
    }
}
