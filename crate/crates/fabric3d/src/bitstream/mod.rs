//! Bitstream generation from routed designs and verification by simulating
//! the programmed fabric against golden netlist simulation.
//!
//! Generation walks only the routed nodes and edges: each routed edge sets
//! its target mux's select field to that edge's candidate index, LUT tables
//! and crossbars are written from the packing, and everything else keeps
//! the documented default (select 0, tables all zero, flip-flops off).

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arch::{ArchSpec, BlockKind, ConnectionType};
use crate::blif::{parse_blif, simulate_golden};
use crate::error::{Error, Result};
use crate::fabric::{annotate, FabricModel, Signal};
use crate::pnr::{pack, place, route, Block, DelayModel, PackedNetlist, Placement, PlaceParams, RouteParams, RoutingResult};
use crate::rrg::{build_base_rrg, NodeId, NodeKind, RoutingResourceGraph};

/// Pad bindings chosen by placement and routing: primary inputs enter at
/// OPIN nodes, primary outputs are read from IPIN nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoBinding {
    pub inputs: Vec<(String, NodeId)>,
    pub outputs: Vec<(String, NodeId)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub spec_hash: String,
    pub design: String,
    pub bits: Vec<bool>,
    pub mux_bits: u32,
    pub lut_bits: u32,
    pub io: IoBinding,
}

impl Bitstream {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Payload bytes, bits packed LSB-first per byte.
    pub fn payload(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        bytes
    }

    /// Text form: header plus hex payload.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("bitstream v1\n");
        s.push_str(&format!("spec {}\n", self.spec_hash));
        s.push_str(&format!("design {}\n", self.design));
        s.push_str(&format!("muxbits {}\n", self.mux_bits));
        s.push_str(&format!("lutbits {}\n", self.lut_bits));
        s.push_str(&format!("bits {}\n", self.bits.len()));
        s.push_str("payload\n");
        let hex: String = self.payload().iter().map(|b| format!("{b:02x}")).collect();
        for chunk in hex.as_bytes().chunks(64) {
            s.push_str(std::str::from_utf8(chunk).unwrap());
            s.push('\n');
        }
        s.push_str("end\n");
        s
    }

    /// Packed binary twin: magic, bit count, then the same payload bytes as
    /// the hex form.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = b"F3DB".to_vec();
        out.extend((self.bits.len() as u32).to_le_bytes());
        out.extend(self.payload());
        out
    }
}

struct BitWriter<'a> {
    bits: &'a mut [bool],
}

impl BitWriter<'_> {
    /// Writes `value` LSB-first into `[offset, offset + width)`.
    fn put(&mut self, offset: u32, width: u32, value: u32) {
        for b in 0..width {
            self.bits[(offset + b) as usize] = (value >> b) & 1 == 1;
        }
    }
}

fn read_field(bits: &[bool], offset: u32, width: u32) -> u32 {
    let mut v = 0u32;
    for b in 0..width {
        if bits[(offset + b) as usize] {
            v |= 1 << b;
        }
    }
    v
}

/// Expands a cell truth table (first input = MSB) onto the physical K-input
/// LUT rows (input `i` = bit `i` of the row index). Unused high inputs are
/// don't-cares.
fn physical_lut_table(cell_table: &[bool], fanin: usize, k: usize) -> Vec<bool> {
    let rows = 1usize << k;
    let mut out = vec![false; rows];
    for (r, slot) in out.iter_mut().enumerate() {
        let mut cell_idx = 0usize;
        for i in 0..fanin {
            cell_idx |= ((r >> i) & 1) << (fanin - 1 - i);
        }
        *slot = cell_table[cell_idx];
    }
    out
}

/// Generates the configuration bits for a routed design on a fabric model
/// built from the same spec.
pub fn generate_bitstream(
    packed: &PackedNetlist,
    placement: &Placement,
    routing: &RoutingResult,
    model: &FabricModel,
    rrg: &RoutingResourceGraph,
) -> Result<Bitstream> {
    if model.spec_hash != rrg.spec_hash {
        return Err(Error::Bitstream("fabric model and graph disagree on the spec".into()));
    }
    let mut bits = vec![false; model.config_bits() as usize];
    let mut writer = BitWriter { bits: &mut bits };

    let direct: std::collections::HashSet<(NodeId, NodeId)> =
        model.direct_wires.iter().copied().collect();

    // Routed edges -> mux selects.
    for tree in &routing.trees {
        for &(node, edge) in &tree.nodes {
            let Some(eid) = edge else { continue };
            let e = rrg
                .edges
                .get(eid as usize)
                .ok_or(Error::EdgeNotInModel { src: 0, dst: node })?;
            if let Some(&mi) = model.mux_of_node.get(&e.dst) {
                let mux = &model.muxes[mi];
                let idx = mux
                    .candidates
                    .iter()
                    .position(|c| *c == Signal::Node(e.src))
                    .ok_or(Error::EdgeNotInModel { src: e.src, dst: e.dst })?;
                writer.put(mux.offset, mux.width, idx as u32);
            } else if !direct.contains(&(e.src, e.dst)) {
                return Err(Error::EdgeNotInModel { src: e.src, dst: e.dst });
            }
        }
    }

    // Which IPIN carries each signal into each cluster.
    let mut entry_pin: HashMap<(usize, usize), NodeId> = HashMap::new();
    for tree in &routing.trees {
        let signal = packed.nets[tree.net].signal;
        for s in &tree.sinks {
            if let Block::Cluster(ci) = s.block {
                entry_pin.insert((ci, signal), s.ipin);
            }
        }
    }

    let k = packed.lut_size as usize;
    let n = packed.cluster_size as usize;
    for (ci, cluster) in packed.clusters.iter().enumerate() {
        let site = placement.site_of(packed, Block::Cluster(ci));
        let (layer, x, y) = (site.layer as u32, site.x as u32, site.y as u32);
        let tile = model.tile_index(layer, x, y);
        let tn = rrg.tile_nodes(layer, x, y);
        let lut_base = model
            .lut_offset(tile)
            .ok_or_else(|| Error::Bitstream(format!("cluster {ci} placed on a non-CLB tile")))?;
        for (b, ble) in cluster.bles.iter().enumerate() {
            for (i, &input_sig) in ble.inputs.iter().enumerate() {
                let mi = model.crossbar[&(tile, b as u16, i as u16)];
                let mux = &model.muxes[mi];
                // Internal feedback or external pin?
                let candidate = if let Some((pc, pb)) = packed.producer(input_sig) {
                    if pc == ci {
                        Signal::Node(tn.opins[pb])
                    } else {
                        let ipin = entry_pin.get(&(ci, input_sig)).ok_or_else(|| {
                            Error::Bitstream(format!(
                                "no routed entry for `{}` into cluster {ci}",
                                packed.signals[input_sig]
                            ))
                        })?;
                        Signal::Node(*ipin)
                    }
                } else {
                    let ipin = entry_pin.get(&(ci, input_sig)).ok_or_else(|| {
                        Error::Bitstream(format!(
                            "no routed entry for `{}` into cluster {ci}",
                            packed.signals[input_sig]
                        ))
                    })?;
                    Signal::Node(*ipin)
                };
                let idx = mux
                    .candidates
                    .iter()
                    .position(|c| *c == candidate)
                    .ok_or_else(|| Error::Bitstream("crossbar candidate missing".into()))?;
                writer.put(mux.offset, mux.width, idx as u32);
            }
            if ble.registered {
                let mi = model.outsel[&(tile, b as u16)];
                let mux = &model.muxes[mi];
                writer.put(mux.offset, mux.width, 1);
            }
            let table = physical_lut_table(&ble.table, ble.inputs.len(), k);
            let base = lut_base + (b * (1 << k)) as u32;
            for (r, &bit) in table.iter().enumerate() {
                if bit {
                    writer.bits[(base as usize) + r] = true;
                }
            }
        }
        let _ = n;
    }

    // Pad bindings.
    let mut inputs = Vec::new();
    for (pi, (name, _)) in packed.pis.iter().enumerate() {
        let site = placement.site_of(packed, Block::InPad(pi));
        let tn = rrg.tile_nodes(site.layer as u32, site.x as u32, site.y as u32);
        let opin = *tn
            .opins
            .get(site.sub as usize)
            .ok_or_else(|| Error::Bitstream(format!("pad `{name}` lacks an opin")))?;
        inputs.push((name.clone(), opin));
    }
    let mut outputs = Vec::new();
    for (po, (name, sig)) in packed.pos.iter().enumerate() {
        let net = packed
            .nets
            .iter()
            .position(|nn| nn.signal == *sig && nn.sinks.contains(&Block::OutPad(po)))
            .ok_or_else(|| Error::Bitstream(format!("output `{name}` has no net")))?;
        let tree = routing.trees.iter().find(|t| t.net == net).unwrap();
        let entry = tree
            .sinks
            .iter()
            .find(|s| s.block == Block::OutPad(po))
            .ok_or_else(|| Error::Bitstream(format!("output `{name}` was not routed")))?;
        outputs.push((name.clone(), entry.ipin));
    }

    Ok(Bitstream {
        spec_hash: model.spec_hash.clone(),
        design: packed.name.clone(),
        bits,
        mux_bits: model.mux_bits,
        lut_bits: model.lut_bits,
        io: IoBinding { inputs, outputs },
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Visit {
    InProgress,
    Done(bool),
}

struct FabricSim<'a> {
    model: &'a FabricModel,
    rrg: &'a RoutingResourceGraph,
    bits: &'a [bool],
    pi_of_opin: HashMap<NodeId, usize>,
    driver_of: HashMap<NodeId, NodeId>,
    /// Flip-flop state per (tile, ble).
    state: HashMap<(u32, u16), bool>,
    memo: HashMap<Signal, Visit>,
    inputs: Vec<bool>,
}

impl FabricSim<'_> {
    fn mux_select(&self, mi: usize) -> usize {
        let mux = &self.model.muxes[mi];
        let raw = read_field(self.bits, mux.offset, mux.width) as usize;
        raw % mux.candidates.len()
    }

    fn lut_table(&self, tile: u32, ble: u16) -> &[bool] {
        let k = self.model.lut_size;
        let base = self.model.lut_offset(tile).expect("clb tile") + (ble as u32) * (1 << k);
        &self.bits[base as usize..(base + (1 << k)) as usize]
    }

    fn eval(&mut self, sig: Signal) -> Result<bool> {
        match self.memo.get(&sig) {
            Some(Visit::Done(v)) => return Ok(*v),
            Some(Visit::InProgress) => {
                let names: Vec<String> = self
                    .memo
                    .iter()
                    .filter(|(_, v)| **v == Visit::InProgress)
                    .map(|(s, _)| format!("{s:?}"))
                    .collect();
                return Err(Error::FabricLoop(names));
            }
            None => {}
        }
        self.memo.insert(sig, Visit::InProgress);
        let value = self.eval_inner(sig)?;
        self.memo.insert(sig, Visit::Done(value));
        Ok(value)
    }

    fn eval_inner(&mut self, sig: Signal) -> Result<bool> {
        Ok(match sig {
            Signal::FlipFlop { tile, ble } => {
                self.state.get(&(tile, ble)).copied().unwrap_or(false)
            }
            Signal::LutOut { tile, ble } => {
                let k = self.model.lut_size as usize;
                let table: Vec<bool> = self.lut_table(tile, ble).to_vec();
                // Inputs the table actually depends on; the rest stay
                // unevaluated so unconfigured fabric is never pulled in.
                let mut row = 0usize;
                for i in 0..k {
                    let used = (0..table.len()).any(|r| table[r] != table[r ^ (1 << i)]);
                    if !used {
                        continue;
                    }
                    let mi = self.model.crossbar[&(tile, ble, i as u16)];
                    let sel = self.mux_select(mi);
                    let cand = self.model.muxes[mi].candidates[sel];
                    if self.eval(cand)? {
                        row |= 1 << i;
                    }
                }
                table[row]
            }
            Signal::Node(id) => {
                let node = self.rrg.node(id);
                match node.kind {
                    NodeKind::Opin => {
                        if let Some(&pi) = self.pi_of_opin.get(&id) {
                            self.inputs[pi]
                        } else {
                            let block = self.rrg.grid.block(
                                node.layer as u32,
                                node.xlo as u32,
                                node.ylo as u32,
                            );
                            if block == BlockKind::Clb {
                                let tile = self.model.tile_index(
                                    node.layer as u32,
                                    node.xlo as u32,
                                    node.ylo as u32,
                                );
                                let ble = node.track;
                                let mi = self.model.outsel[&(tile, ble)];
                                let sel = self.mux_select(mi);
                                let cand = self.model.muxes[mi].candidates[sel];
                                self.eval(cand)?
                            } else {
                                // Unbound IO pads and hard-IP stubs read 0.
                                false
                            }
                        }
                    }
                    NodeKind::Ipin | NodeKind::Chanx | NodeKind::Chany | NodeKind::Chanz => {
                        if let Some(&mi) = self.model.mux_of_node.get(&id) {
                            let sel = self.mux_select(mi);
                            let cand = self.model.muxes[mi].candidates[sel];
                            self.eval(cand)?
                        } else if let Some(&src) = self.driver_of.get(&id) {
                            self.eval(Signal::Node(src))?
                        } else {
                            false
                        }
                    }
                    NodeKind::Source | NodeKind::Sink => false,
                }
            }
        })
    }
}

/// Event-free cycle simulation of the programmed fabric: muxes forward
/// their selected inputs, LUTs index their tables, flip-flops update per
/// cycle. Semantics match the emitted netlist.
pub fn simulate_fabric(
    model: &FabricModel,
    rrg: &RoutingResourceGraph,
    bitstream: &Bitstream,
    vectors: &[Vec<bool>],
) -> Result<Vec<Vec<bool>>> {
    if bitstream.bits.len() != model.config_bits() as usize {
        return Err(Error::Bitstream(format!(
            "bitstream length {} does not match fabric accounting {}",
            bitstream.bits.len(),
            model.config_bits()
        )));
    }
    let pi_of_opin: HashMap<NodeId, usize> =
        bitstream.io.inputs.iter().enumerate().map(|(i, &(_, n))| (n, i)).collect();
    let driver_of: HashMap<NodeId, NodeId> =
        model.direct_wires.iter().map(|&(s, d)| (d, s)).collect();

    let mut sim = FabricSim {
        model,
        rrg,
        bits: &bitstream.bits,
        pi_of_opin,
        driver_of,
        state: HashMap::new(),
        memo: HashMap::new(),
        inputs: Vec::new(),
    };

    // Registered BLEs, from the output-select bits.
    let mut registered: Vec<(u32, u16)> = Vec::new();
    for (&(tile, ble), &mi) in &model.outsel {
        if read_field(&bitstream.bits, model.muxes[mi].offset, 1) == 1 {
            registered.push((tile, ble));
        }
    }
    registered.sort_unstable();

    let mut out = Vec::with_capacity(vectors.len());
    for (t, vector) in vectors.iter().enumerate() {
        if vector.len() != bitstream.io.inputs.len() {
            return Err(Error::Bitstream(format!(
                "vector {t} has {} bits for {} inputs",
                vector.len(),
                bitstream.io.inputs.len()
            )));
        }
        sim.inputs = vector.clone();
        sim.memo.clear();
        let mut row = Vec::with_capacity(bitstream.io.outputs.len());
        for &(_, ipin) in &bitstream.io.outputs {
            row.push(sim.eval(Signal::Node(ipin))?);
        }
        out.push(row);
        let mut next = Vec::with_capacity(registered.len());
        for &(tile, ble) in &registered {
            next.push(((tile, ble), sim.eval(Signal::LutOut { tile, ble })?));
        }
        for (key, v) in next {
            sim.state.insert(key, v);
        }
    }
    Ok(out)
}

/// End-to-end verification report; displays as a single-line verdict.
#[derive(Debug, Clone)]
pub struct RoundtripReport {
    pub benchmark: String,
    pub vectors: usize,
    pub mismatches: Vec<(usize, Vec<bool>, Vec<bool>)>,
    pub wirelength: u64,
    pub bitstream_bits: usize,
}

impl RoundtripReport {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for RoundtripReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pass() {
            write!(f, "PASS benchmark={} vectors={}", self.benchmark, self.vectors)
        } else {
            let (cycle, golden, fabric) = &self.mismatches[0];
            write!(
                f,
                "FAIL benchmark={} vectors={} first_mismatch_cycle={} golden={:?} fabric={:?}",
                self.benchmark, self.vectors, cycle, golden, fabric
            )
        }
    }
}

/// Builds the spec's RRG (extended when the spec is 3D).
pub fn build_rrg_for(spec: &ArchSpec, seed: u64) -> Result<RoutingResourceGraph> {
    let base = build_base_rrg(spec)?;
    if spec.vertical.connection_type == ConnectionType::None2D {
        return Ok(base);
    }
    let plan = crate::vertical::plan_sites(spec, seed)?;
    crate::vertical::extend_to_3d(&base, spec, &plan)
}

/// Runs pack, place, route, bitstream generation, and fabric simulation
/// against golden simulation on `vector_count` random vectors.
pub fn verify_roundtrip(
    spec: &ArchSpec,
    blif_text: &str,
    seed: u64,
    vector_count: usize,
) -> Result<RoundtripReport> {
    let netlist = parse_blif(blif_text)?;
    let packed = pack(&netlist, spec)?;
    let rrg = build_rrg_for(spec, seed)?;
    let placement = place(&packed, &rrg, seed, PlaceParams::default())?;
    let model_delay = DelayModel::from_spec(spec);
    let routing = route(&packed, &placement, &rrg, &model_delay, RouteParams::default())?;
    let fabric = annotate(&rrg, spec)?;
    let bitstream = generate_bitstream(&packed, &placement, &routing, &fabric, &rrg)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let vectors: Vec<Vec<bool>> = (0..vector_count)
        .map(|_| (0..netlist.pis.len()).map(|_| rng.gen()).collect())
        .collect();
    // Golden vectors follow the netlist PI order; the fabric harness drives
    // pads in `bitstream.io.inputs` order, which matches `packed.pis`.
    let golden = simulate_golden(&netlist, &vectors)?;
    let fabric_out = simulate_fabric(&fabric, &rrg, &bitstream, &vectors)?;

    // Align fabric outputs (packed.pos order) with golden (netlist.pos).
    debug_assert_eq!(packed.pos.len(), netlist.pos.len());
    let mut mismatches = Vec::new();
    for (cycle, (g, fo)) in golden.iter().zip(&fabric_out).enumerate() {
        if g != fo && mismatches.len() < 8 {
            mismatches.push((cycle, g.clone(), fo.clone()));
        }
    }
    Ok(RoundtripReport {
        benchmark: netlist.name.clone(),
        vectors: vector_count,
        mismatches,
        wirelength: routing.wirelength,
        bitstream_bits: bitstream.bits.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{LayerSpec, SbPlacement, Segment};

    fn spec_2d() -> ArchSpec {
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

    fn spec_3d_sb() -> ArchSpec {
        let mut spec = spec_2d();
        spec.layer_count = 2;
        spec.layers = vec![LayerSpec::homogeneous(); 2];
        spec.vertical.connection_type = ConnectionType::Sb;
        spec.vertical.sb_percentage = 100;
        spec.vertical.sb_placement = SbPlacement::RepeatedInterval;
        spec
    }

    fn spec_hetero() -> ArchSpec {
        let mut spec = spec_2d();
        spec.layer_count = 2;
        spec.layers = vec![
            LayerSpec { class: crate::arch::HeteroClass::NonLogicHetero, columns: vec![] },
            LayerSpec {
                class: crate::arch::HeteroClass::NonLogicHetero,
                columns: vec![BlockKind::RoutingOnly; 4],
            },
        ];
        spec.vertical.connection_type = ConnectionType::Sb;
        spec.vertical.sb_percentage = 100;
        spec
    }

    const AND2: &str = ".model and2\n.inputs a b\n.outputs y\n.names a b y\n11 1\n.end\n";
    const COUNTER: &str = "\
.model counter1
.inputs tick
.outputs q
.names q nq
0 1
.latch nq q re clk 0
.end
";

    #[test]
    fn empty_design_gets_all_default_bitstream_of_exact_length() {
        let spec = spec_2d();
        let doc = ".model empty\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n";
        let netlist = parse_blif(doc).unwrap();
        let packed = pack(&netlist, &spec).unwrap();
        let rrg = build_rrg_for(&spec, 0).unwrap();
        let fabric = annotate(&rrg, &spec).unwrap();
        let placement = place(&packed, &rrg, 0, PlaceParams::default()).unwrap();
        let routing = route(&packed, &placement, &rrg, &DelayModel::from_spec(&spec), RouteParams::default()).unwrap();
        let bs = generate_bitstream(&packed, &placement, &routing, &fabric, &rrg).unwrap();
        assert_eq!(bs.bits.len(), fabric.config_bits() as usize);
    }

    #[test]
    fn and_gate_lut_field_lands_at_the_placed_offset() {
        let spec = spec_2d();
        let netlist = parse_blif(AND2).unwrap();
        let packed = pack(&netlist, &spec).unwrap();
        let rrg = build_rrg_for(&spec, 1).unwrap();
        let fabric = annotate(&rrg, &spec).unwrap();
        let placement = place(&packed, &rrg, 1, PlaceParams::default()).unwrap();
        let routing = route(&packed, &placement, &rrg, &DelayModel::from_spec(&spec), RouteParams::default()).unwrap();
        let bs = generate_bitstream(&packed, &placement, &routing, &fabric, &rrg).unwrap();

        // Oracle: offsets from the fabric inventory.
        let site = placement.site_of(&packed, Block::Cluster(0));
        let tile = fabric.tile_index(site.layer as u32, site.x as u32, site.y as u32);
        let base = fabric.lut_offset(tile).unwrap() as usize;
        let k = spec.lut_size as usize;
        // AND of physical inputs 0 and 1: rows with both low bits set.
        let table: Vec<bool> = (0..(1 << k)).map(|r| bs.bits[base + r]).collect();
        for (r, &bit) in table.iter().enumerate() {
            assert_eq!(bit, (r & 3) == 3, "row {r}");
        }
    }

    #[test]
    fn and_roundtrip_on_planar_fabric() {
        let report = verify_roundtrip(&spec_2d(), AND2, 3, 50).unwrap();
        assert!(report.pass(), "{report}");
    }

    #[test]
    fn counter_roundtrip_on_3d_sb_fabric() {
        let report = verify_roundtrip(&spec_3d_sb(), COUNTER, 5, 32).unwrap();
        assert!(report.pass(), "{report}");
    }

    #[test]
    fn counter_roundtrip_on_routing_layer_fabric() {
        let report = verify_roundtrip(&spec_hetero(), COUNTER, 7, 32).unwrap();
        assert!(report.pass(), "{report}");
    }

    #[test]
    fn fault_injected_routing_is_a_spec_mismatch() {
        let spec = spec_2d();
        let netlist = parse_blif(AND2).unwrap();
        let packed = pack(&netlist, &spec).unwrap();
        let rrg = build_rrg_for(&spec, 1).unwrap();
        let fabric = annotate(&rrg, &spec).unwrap();
        let placement = place(&packed, &rrg, 1, PlaceParams::default()).unwrap();
        let mut routing =
            route(&packed, &placement, &rrg, &DelayModel::from_spec(&spec), RouteParams::default()).unwrap();
        // Point a tree edge at an edge id that does not exist.
        let tree = &mut routing.trees[0];
        let last = tree.nodes.len() - 1;
        tree.nodes[last].1 = Some(u32::MAX - 1);
        let err = generate_bitstream(&packed, &placement, &routing, &fabric, &rrg).unwrap_err();
        assert!(matches!(err, Error::EdgeNotInModel { .. }));
    }

    #[test]
    fn text_format_has_exact_accounting() {
        let report_spec = spec_2d();
        let netlist = parse_blif(AND2).unwrap();
        let packed = pack(&netlist, &report_spec).unwrap();
        let rrg = build_rrg_for(&report_spec, 2).unwrap();
        let fabric = annotate(&rrg, &report_spec).unwrap();
        let placement = place(&packed, &rrg, 2, PlaceParams::default()).unwrap();
        let routing =
            route(&packed, &placement, &rrg, &DelayModel::from_spec(&report_spec), RouteParams::default())
                .unwrap();
        let bs = generate_bitstream(&packed, &placement, &routing, &fabric, &rrg).unwrap();
        let text = bs.to_text();
        assert!(text.contains(&format!("bits {}", fabric.config_bits())));
        let bin = bs.to_binary();
        assert_eq!(&bin[..4], b"F3DB");
        // Payload bytes identical between the two forms.
        let hex: String = text
            .lines()
            .skip_while(|l| *l != "payload")
            .skip(1)
            .take_while(|l| *l != "end")
            .collect();
        let decoded: Vec<u8> = (0..hex.len() / 2)
            .map(|i| u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).unwrap())
            .collect();
        assert_eq!(decoded, bs.payload());
        assert_eq!(&bin[8..], &decoded[..]);
    }

    #[test]
    fn default_region_bit_flips_are_inert() {
        let spec = spec_2d();
        let netlist = parse_blif(AND2).unwrap();
        let packed = pack(&netlist, &spec).unwrap();
        let rrg = build_rrg_for(&spec, 4).unwrap();
        let fabric = annotate(&rrg, &spec).unwrap();
        let placement = place(&packed, &rrg, 4, PlaceParams::default()).unwrap();
        let routing =
            route(&packed, &placement, &rrg, &DelayModel::from_spec(&spec), RouteParams::default()).unwrap();
        let bs = generate_bitstream(&packed, &placement, &routing, &fabric, &rrg).unwrap();

        // Regions touched by the routed design: every set select field of a
        // routed mux, the placed cluster's crossbar/outsel/LUT block.
        let mut touched = vec![false; bs.bits.len()];
        for tree in &routing.trees {
            for &(_, edge) in &tree.nodes {
                let Some(eid) = edge else { continue };
                let e = &rrg.edges[eid as usize];
                if let Some(&mi) = fabric.mux_of_node.get(&e.dst) {
                    let m = &fabric.muxes[mi];
                    for b in 0..m.width {
                        touched[(m.offset + b) as usize] = true;
                    }
                }
            }
        }
        let site = placement.site_of(&packed, Block::Cluster(0));
        let tile = fabric.tile_index(site.layer as u32, site.x as u32, site.y as u32);
        for (&(t, _, _), &mi) in &fabric.crossbar {
            if t == tile {
                let m = &fabric.muxes[mi];
                for b in 0..m.width {
                    touched[(m.offset + b) as usize] = true;
                }
            }
        }
        for (&(t, _), &mi) in &fabric.outsel {
            if t == tile {
                let m = &fabric.muxes[mi];
                for b in 0..m.width {
                    touched[(m.offset + b) as usize] = true;
                }
            }
        }
        let lut_base = fabric.lut_offset(tile).unwrap();
        for b in 0..fabric.lut_table_bits() {
            touched[(lut_base + b) as usize] = true;
        }

        let vectors: Vec<Vec<bool>> =
            vec![vec![false, false], vec![false, true], vec![true, false], vec![true, true]];
        let baseline = simulate_fabric(&fabric, &rrg, &bs, &vectors).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let free: Vec<usize> = (0..bs.bits.len()).filter(|&i| !touched[i]).collect();
        for _ in 0..100 {
            let flip = free[rng.gen_range(0..free.len())];
            let mut corrupted = bs.clone();
            corrupted.bits[flip] = !corrupted.bits[flip];
            let out = simulate_fabric(&fabric, &rrg, &corrupted, &vectors).unwrap();
            assert_eq!(out, baseline, "flip at {flip} changed outputs");
        }
    }

    #[test]
    fn crafted_mux_cycle_is_reported_as_a_loop() {
        let spec = spec_2d();
        let netlist = parse_blif(AND2).unwrap();
        let packed = pack(&netlist, &spec).unwrap();
        let rrg = build_rrg_for(&spec, 6).unwrap();
        let fabric = annotate(&rrg, &spec).unwrap();
        let placement = place(&packed, &rrg, 6, PlaceParams::default()).unwrap();
        let routing =
            route(&packed, &placement, &rrg, &DelayModel::from_spec(&spec), RouteParams::default()).unwrap();
        let bs = generate_bitstream(&packed, &placement, &routing, &fabric, &rrg).unwrap();

        // Corrupt the placed cluster: feed BLE 0's own output back into its
        // LUT input 0 through the crossbar and make the LUT a pass-through
        // of that input. Evaluating y then loops opin -> crossbar -> lut.
        let mut corrupted = bs.clone();
        let site = placement.site_of(&packed, Block::Cluster(0));
        let tile = fabric.tile_index(site.layer as u32, site.x as u32, site.y as u32);
        let tn = rrg.tile_nodes(site.layer as u32, site.x as u32, site.y as u32);
        let mi = fabric.crossbar[&(tile, 0, 0)];
        let mux = &fabric.muxes[mi];
        let feedback = mux
            .candidates
            .iter()
            .position(|c| *c == Signal::Node(tn.opins[0]))
            .expect("feedback candidate");
        {
            let mut w = BitWriter { bits: &mut corrupted.bits };
            w.put(mux.offset, mux.width, feedback as u32);
        }
        let lut_base = fabric.lut_offset(tile).unwrap() as usize;
        for r in 0..(1usize << spec.lut_size) {
            corrupted.bits[lut_base + r] = r & 1 == 1;
        }
        let vectors = vec![vec![true, true]];
        match simulate_fabric(&fabric, &rrg, &corrupted, &vectors) {
            Err(Error::FabricLoop(nodes)) => assert!(!nodes.is_empty()),
            Ok(out) => panic!("loop not detected, got {out:?}"),
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }
}
