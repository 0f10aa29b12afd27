//! Hierarchical structural netlist emission.
//!
//! The dialect is four statements: `module <name> (<dir> <port>, ...)`,
//! `net <name>`, `inst <module> <name> (<port>=<net>, ...)`, `endmodule`.
//! The document set is one library of primitives, one file per layer, and a
//! top file instantiating the layers and wiring every cross-layer signal.
//!
//! All names inside a layer file are layer-local (wires by geometry, pins
//! by tile), and module names carry an `_L<n>` suffix; a two-layer
//! homogeneous fabric therefore emits layer files that are byte-identical
//! up to that suffix. Vertical interfaces use `zmate_*` port names in
//! two-layer stacks and face-qualified `za_*`/`zu_*` names in taller ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{FabricModel, MuxOwner, Signal};
use crate::arch::{ArchSpec, BlockKind};
use crate::rrg::{Direction, NodeId, NodeKind, RoutingResourceGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetlistDoc {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocSet {
    /// Library, one file per layer, then top: exactly `L + 2` documents.
    pub docs: Vec<NetlistDoc>,
    /// `<filename> <sha256>` per line.
    pub manifest: String,
}

impl DocSet {
    pub fn doc(&self, name: &str) -> Option<&NetlistDoc> {
        self.docs.iter().find(|d| d.name == name)
    }
}

/// Local (within-layer) name of an RRG node.
fn local_name(rrg: &RoutingResourceGraph, id: NodeId) -> String {
    let n = rrg.node(id);
    match n.kind {
        NodeKind::Chanx => format!(
            "wx_c{}_t{}_{}_s{}e{}",
            n.ylo,
            n.track,
            if n.dir == Direction::Inc { "i" } else { "d" },
            n.xlo,
            n.xhi
        ),
        NodeKind::Chany => format!(
            "wy_c{}_t{}_{}_s{}e{}",
            n.xlo,
            n.track,
            if n.dir == Direction::Inc { "i" } else { "d" },
            n.ylo,
            n.yhi
        ),
        NodeKind::Ipin => format!("ip_x{}_y{}_p{}", n.xlo, n.ylo, n.track),
        NodeKind::Opin => format!("op_x{}_y{}_p{}", n.xlo, n.ylo, n.track),
        NodeKind::Chanz => format!("cz_x{}_y{}_k{}_{}", n.xlo, n.ylo, n.track, n.dir.token()),
        _ => format!("n{id}"),
    }
}

/// Vertical port naming: `zmate_*` when a layer has exactly one neighbor
/// partner (two-layer stacks), face-qualified otherwise.
struct ZNames {
    two_layer: bool,
}

impl ZNames {
    fn face(&self, upward_face: bool) -> String {
        if self.two_layer {
            "zmate".to_string()
        } else if upward_face {
            "za".to_string()
        } else {
            "zu".to_string()
        }
    }

    /// Port carrying a source CHANZ off-layer.
    fn chanz_tx(&self, rrg: &RoutingResourceGraph, id: NodeId) -> String {
        let n = rrg.node(id);
        let up = n.dir == Direction::AboveInc;
        format!("{}_tx_x{}_y{}_k{}", self.face(up), n.xlo, n.ylo, n.track)
    }

    /// Port receiving a sink CHANZ from off-layer.
    fn chanz_rx(&self, rrg: &RoutingResourceGraph, id: NodeId) -> String {
        let n = rrg.node(id);
        // UnderInc arrives on the under face; AboveDec on the above face.
        let above_face = n.dir == Direction::AboveDec;
        format!("{}_rx_x{}_y{}_k{}", self.face(above_face), n.xlo, n.ylo, n.track)
    }

    /// Port exporting an OPIN toward a neighbor layer.
    fn opin_tx(&self, rrg: &RoutingResourceGraph, id: NodeId, up: bool) -> String {
        let n = rrg.node(id);
        format!("{}_otx_x{}_y{}_p{}", self.face(up), n.xlo, n.ylo, n.track)
    }

    /// Port importing a neighbor layer's OPIN.
    fn opin_rx(&self, rrg: &RoutingResourceGraph, id: NodeId, from_above: bool) -> String {
        let n = rrg.node(id);
        format!("{}_orx_x{}_y{}_p{}", self.face(from_above), n.xlo, n.ylo, n.track)
    }

    /// Port exporting a wire toward a neighbor layer.
    fn wire_tx(&self, rrg: &RoutingResourceGraph, id: NodeId, up: bool) -> String {
        format!("{}_wtx_{}", self.face(up), local_name(rrg, id))
    }

    /// Port importing a neighbor layer's wire.
    fn wire_rx(&self, rrg: &RoutingResourceGraph, id: NodeId, from_above: bool) -> String {
        format!("{}_wrx_{}", self.face(from_above), local_name(rrg, id))
    }
}

/// Cross-layer traffic discovered from the extension edges: what each layer
/// must export (tx) and import (rx).
#[derive(Default)]
struct CrossTraffic {
    /// Source CHANZ id -> sink CHANZ id (the via).
    vias: BTreeMap<NodeId, NodeId>,
    /// OPINs exported per layer, with the neighbor direction (true = up).
    opin_tx: BTreeSet<(u16, NodeId, bool)>,
    /// Wires exported per layer.
    wire_tx: BTreeSet<(u16, NodeId, bool)>,
}

fn cross_traffic(rrg: &RoutingResourceGraph) -> CrossTraffic {
    let mut t = CrossTraffic::default();
    for e in &rrg.edges {
        let (s, d) = (rrg.node(e.src), rrg.node(e.dst));
        if s.layer == d.layer {
            continue;
        }
        let up = d.layer > s.layer;
        if s.kind == NodeKind::Chanz && d.kind == NodeKind::Chanz {
            t.vias.insert(e.src, e.dst);
        } else if s.kind == NodeKind::Opin {
            t.opin_tx.insert((s.layer, e.src, up));
        } else if s.is_wire() {
            t.wire_tx.insert((s.layer, e.src, up));
        }
    }
    t
}

/// Name a mux candidate as seen from `layer`: local for same-layer nodes,
/// an rx port otherwise.
fn candidate_net(
    rrg: &RoutingResourceGraph,
    z: &ZNames,
    layer: u16,
    grid_is_io: &dyn Fn(u16, u16, u16) -> bool,
    id: NodeId,
) -> String {
    let n = rrg.node(id);
    if n.layer != layer {
        let from_above = n.layer > layer;
        return match n.kind {
            NodeKind::Opin => z.opin_rx(rrg, id, from_above),
            _ => z.wire_rx(rrg, id, from_above),
        };
    }
    if n.kind == NodeKind::Chanz
        && matches!(n.dir, Direction::UnderInc | Direction::AboveDec)
    {
        return z.chanz_rx(rrg, id);
    }
    if n.kind == NodeKind::Opin && grid_is_io(n.layer, n.xlo, n.ylo) {
        return format!("pad_in_x{}_y{}_s{}", n.xlo, n.ylo, n.track);
    }
    local_name(rrg, id)
}

struct ModuleBuilder {
    name: String,
    ports: Vec<(bool, String)>, // (is_input, name)
    nets: Vec<String>,
    insts: Vec<String>,
}

impl ModuleBuilder {
    fn new(name: String) -> Self {
        ModuleBuilder { name, ports: Vec::new(), nets: Vec::new(), insts: Vec::new() }
    }

    fn input(&mut self, name: String) {
        if !self.ports.iter().any(|(_, p)| *p == name) {
            self.ports.push((true, name));
        }
    }

    fn output(&mut self, name: String) {
        if !self.ports.iter().any(|(_, p)| *p == name) {
            self.ports.push((false, name));
        }
    }

    fn net(&mut self, name: String) {
        self.nets.push(name);
    }

    fn inst(&mut self, module: &str, name: &str, conns: &[(String, String)]) {
        let c: Vec<String> = conns.iter().map(|(p, n)| format!("{p}={n}")).collect();
        self.insts.push(format!("inst {module} {name} ({})", c.join(", ")));
    }

    fn render(&self) -> String {
        let ports: Vec<String> = self
            .ports
            .iter()
            .map(|(i, p)| format!("{} {p}", if *i { "input" } else { "output" }))
            .collect();
        let mut s = format!("module {} ({})\n", self.name, ports.join(", "));
        for n in &self.nets {
            let _ = writeln!(s, "  net {n}");
        }
        for i in &self.insts {
            let _ = writeln!(s, "  {i}");
        }
        s.push_str("endmodule\n");
        s
    }
}

/// Emits a mux with its config bits into a module. Returns nothing; the
/// candidate nets must already be ports or nets of the module.
fn emit_mux(mb: &mut ModuleBuilder, label: &str, width: u32, inputs: &[String], out: &str) {
    let mut conns: Vec<(String, String)> = Vec::new();
    for (j, net) in inputs.iter().enumerate() {
        conns.push((format!("in{j}"), net.clone()));
    }
    for b in 0..width {
        let q = format!("{label}_s{b}");
        mb.net(q.clone());
        mb.inst("cfgbit", &format!("{label}_c{b}"), &[("q".into(), q.clone())]);
        conns.push((format!("s{b}"), q));
    }
    conns.push(("out".into(), out.to_string()));
    mb.inst(&format!("mux{}", inputs.len()), label, &conns);
}

/// Emits the hierarchical fabric netlist: library, one document per layer,
/// and the top module wiring all cross-layer signals. Deterministic, and
/// independent of any benchmark placement or routing.
pub fn emit_netlist(model: &FabricModel, rrg: &RoutingResourceGraph, spec: &ArchSpec) -> DocSet {
    let grid = &rrg.grid;
    let layer_count = grid.layers;
    let z = ZNames { two_layer: layer_count == 2 };
    let traffic = cross_traffic(rrg);
    let k = spec.lut_size;
    let n = spec.cluster_size;
    let is_io =
        |layer: u16, x: u16, y: u16| grid.block(layer as u32, x as u32, y as u32) == BlockKind::Io;

    let mut used_mux_widths: BTreeSet<usize> = BTreeSet::new();
    for m in &model.muxes {
        used_mux_widths.insert(m.candidates.len());
    }

    let mut docs = Vec::new();

    // Library.
    let mut lib = String::new();
    lib.push_str("module cfgbit (output q)\nendmodule\n");
    lib.push_str("module buf (input a, output y)\nendmodule\n");
    lib.push_str("module dff (input d, input clk, output q)\nendmodule\n");
    {
        let ins: Vec<String> = (0..k).map(|i| format!("input i{i}")).collect();
        let cfg: Vec<String> = (0..(1u32 << k)).map(|r| format!("input p{r}")).collect();
        lib.push_str(&format!("module lut{k} ({}, {}, output out)\nendmodule\n", ins.join(", "), cfg.join(", ")));
    }
    for &c in &used_mux_widths {
        let width = super::annotate_width(c);
        let ins: Vec<String> = (0..c).map(|j| format!("input in{j}")).collect();
        let sels: Vec<String> = (0..width).map(|b| format!("input s{b}")).collect();
        lib.push_str(&format!("module mux{c} ({}, {}, output out)\nendmodule\n", ins.join(", "), sels.join(", ")));
    }
    docs.push(NetlistDoc { name: "primitives.fnl".into(), text: lib });

    // Per-layer documents.
    for layer in 0..layer_count as u16 {
        let suffix = format!("_L{}", layer + 1);
        let mut text = String::new();

        // CLB module (shared within the layer).
        let has_clb = (0..grid.height)
            .any(|y| (0..grid.width).any(|x| grid.block(layer as u32, x, y) == BlockKind::Clb));
        if has_clb {
            let mut mb = ModuleBuilder::new(format!("clb{suffix}"));
            mb.input("clk".into());
            for p in 0..(k * n) {
                mb.input(format!("i{p}"));
            }
            for b in 0..n {
                mb.output(format!("o{b}"));
            }
            let xbar_inputs: Vec<String> = (0..(k * n))
                .map(|p| format!("i{p}"))
                .chain((0..n).map(|b| format!("o{b}")))
                .collect();
            for b in 0..n {
                let mut lut_conns: Vec<(String, String)> = Vec::new();
                for i in 0..k {
                    let net = format!("xin_b{b}_i{i}");
                    mb.net(net.clone());
                    emit_mux(&mut mb, &format!("xb_b{b}_i{i}"), super::annotate_width(xbar_inputs.len()), &xbar_inputs, &net);
                    lut_conns.push((format!("i{i}"), net));
                }
                for r in 0..(1u32 << k) {
                    let pq = format!("lut_b{b}_p{r}");
                    mb.net(pq.clone());
                    mb.inst("cfgbit", &format!("lut_b{b}_c{r}"), &[("q".into(), pq.clone())]);
                    lut_conns.push((format!("p{r}"), pq));
                }
                let lo = format!("lo_b{b}");
                mb.net(lo.clone());
                lut_conns.push(("out".into(), lo.clone()));
                mb.inst(&format!("lut{k}"), &format!("lut_b{b}"), &lut_conns);
                let q = format!("q_b{b}");
                mb.net(q.clone());
                mb.inst(
                    "dff",
                    &format!("ff_b{b}"),
                    &[("d".into(), lo.clone()), ("clk".into(), "clk".into()), ("q".into(), q.clone())],
                );
                emit_mux(&mut mb, &format!("os_b{b}"), 1, &[lo, q], &format!("o{b}"));
            }
            text.push_str(&mb.render());
        }

        // Gather this layer's muxes and direct wires by owner.
        let mut cb_content: BTreeMap<(u16, u16), Vec<usize>> = BTreeMap::new();
        let mut sb_content: BTreeMap<(u16, u16), Vec<usize>> = BTreeMap::new();
        for (mi, m) in model.muxes.iter().enumerate() {
            match m.owner {
                MuxOwner::ConnBlock { layer: l, x, y } if l == layer => {
                    cb_content.entry((x, y)).or_default().push(mi);
                }
                MuxOwner::SwitchBlock { layer: l, x, y } if l == layer => {
                    sb_content.entry((x, y)).or_default().push(mi);
                }
                _ => {}
            }
        }
        let mut sb_bufs: BTreeMap<(u16, u16), Vec<(NodeId, NodeId)>> = BTreeMap::new();
        let mut cb_bufs: BTreeMap<(u16, u16), Vec<(NodeId, NodeId)>> = BTreeMap::new();
        for &(src, dst) in &model.direct_wires {
            let d = rrg.node(dst);
            if d.layer != layer {
                continue;
            }
            match d.kind {
                NodeKind::Chanx | NodeKind::Chany => {
                    sb_bufs.entry(super::drive_site(rrg, dst)).or_default().push((src, dst));
                }
                NodeKind::Ipin => {
                    cb_bufs.entry((d.xlo, d.ylo)).or_default().push((src, dst));
                }
                // SOURCE/SINK bookkeeping and via edges have no cell.
                _ => {}
            }
        }

        let cand = |id: NodeId| candidate_net(rrg, &z, layer, &is_io, id);

        // Connection block modules.
        for (&(x, y), muxes) in &cb_content {
            let mut mb = ModuleBuilder::new(format!("cb_x{x}_y{y}{suffix}"));
            for &mi in muxes {
                let m = &model.muxes[mi];
                let Signal::Node(dst) = m.target else { continue };
                let inputs: Vec<String> = m
                    .candidates
                    .iter()
                    .map(|c| {
                        let Signal::Node(s) = c else { unreachable!() };
                        cand(*s)
                    })
                    .collect();
                for i in &inputs {
                    mb.input(i.clone());
                }
                let out = if is_io(layer, x, y) {
                    format!("pad_out_x{x}_y{y}_s{}", rrg.node(dst).track)
                } else {
                    local_name(rrg, dst)
                };
                mb.output(out.clone());
                emit_mux(&mut mb, &format!("m_{}", local_name(rrg, dst)), m.width, &inputs, &out);
            }
            for (src, dst) in cb_bufs.remove(&(x, y)).unwrap_or_default() {
                let a = cand(src);
                let d = rrg.node(dst);
                let out = if is_io(layer, x, y) {
                    format!("pad_out_x{x}_y{y}_s{}", d.track)
                } else {
                    local_name(rrg, dst)
                };
                mb.input(a.clone());
                mb.output(out.clone());
                mb.inst("buf", &format!("b_{}", local_name(rrg, dst)), &[("a".into(), a), ("y".into(), out)]);
            }
            text.push_str(&mb.render());
        }
        // Remaining IPIN direct wires on tiles without any mux.
        for (&(x, y), bufs) in &cb_bufs {
            let mut mb = ModuleBuilder::new(format!("cb_x{x}_y{y}{suffix}"));
            for &(src, dst) in bufs {
                let a = cand(src);
                let d = rrg.node(dst);
                let out = if is_io(layer, x, y) {
                    format!("pad_out_x{x}_y{y}_s{}", d.track)
                } else {
                    local_name(rrg, dst)
                };
                mb.input(a.clone());
                mb.output(out.clone());
                mb.inst("buf", &format!("b_{}", local_name(rrg, dst)), &[("a".into(), a), ("y".into(), out)]);
            }
            text.push_str(&mb.render());
        }

        // Switch block modules.
        for (&(x, y), muxes) in &sb_content {
            let mut mb = ModuleBuilder::new(format!("sb_x{x}_y{y}{suffix}"));
            for &mi in muxes {
                let m = &model.muxes[mi];
                let Signal::Node(dst) = m.target else { continue };
                let inputs: Vec<String> = m
                    .candidates
                    .iter()
                    .map(|c| {
                        let Signal::Node(s) = c else { unreachable!() };
                        cand(*s)
                    })
                    .collect();
                for i in &inputs {
                    mb.input(i.clone());
                }
                let dnode = rrg.node(dst);
                let out = if dnode.kind == NodeKind::Chanz {
                    z.chanz_tx(rrg, dst)
                } else {
                    local_name(rrg, dst)
                };
                mb.output(out.clone());
                emit_mux(&mut mb, &format!("m_{out}"), m.width, &inputs, &out);
            }
            for (src, dst) in sb_bufs.remove(&(x, y)).unwrap_or_default() {
                let a = cand(src);
                let dnode = rrg.node(dst);
                let out = if dnode.kind == NodeKind::Chanz {
                    z.chanz_tx(rrg, dst)
                } else {
                    local_name(rrg, dst)
                };
                mb.input(a.clone());
                mb.output(out.clone());
                mb.inst("buf", &format!("b_{out}"), &[("a".into(), a), ("y".into(), out)]);
            }
            text.push_str(&mb.render());
        }
        for (&(x, y), bufs) in &sb_bufs {
            let mut mb = ModuleBuilder::new(format!("sb_x{x}_y{y}{suffix}"));
            for &(src, dst) in bufs {
                let a = cand(src);
                let dnode = rrg.node(dst);
                let out = if dnode.kind == NodeKind::Chanz {
                    z.chanz_tx(rrg, dst)
                } else {
                    local_name(rrg, dst)
                };
                mb.input(a.clone());
                mb.output(out.clone());
                mb.inst("buf", &format!("b_{out}"), &[("a".into(), a), ("y".into(), out)]);
            }
            text.push_str(&mb.render());
        }

        // Layer module.
        let mut lm = ModuleBuilder::new(format!("layer{suffix}"));
        lm.input("clk".into());
        for y in 0..grid.height as u16 {
            for x in 0..grid.width as u16 {
                if is_io(layer, x, y) {
                    for s in 0..grid.io_capacity as u16 {
                        lm.input(format!("pad_in_x{x}_y{y}_s{s}"));
                        lm.output(format!("pad_out_x{x}_y{y}_s{s}"));
                    }
                }
            }
        }
        // Vertical ports, sorted by name so homogeneous layers render the
        // same port list regardless of which global node ids back them.
        let mut zports: Vec<(bool, String)> = Vec::new();
        for (&src, &dst) in &traffic.vias {
            if rrg.node(src).layer == layer {
                zports.push((false, z.chanz_tx(rrg, src)));
            }
            if rrg.node(dst).layer == layer {
                zports.push((true, z.chanz_rx(rrg, dst)));
            }
        }
        for &(l, id, up) in &traffic.opin_tx {
            if l == layer {
                zports.push((false, z.opin_tx(rrg, id, up)));
            }
            let neighbor = if up { l + 1 } else { l.wrapping_sub(1) };
            if neighbor == layer && l != layer {
                zports.push((true, z.opin_rx(rrg, id, l > layer)));
            }
        }
        for &(l, id, up) in &traffic.wire_tx {
            if l == layer {
                zports.push((false, z.wire_tx(rrg, id, up)));
            }
            let neighbor = if up { l + 1 } else { l.wrapping_sub(1) };
            if neighbor == layer && l != layer {
                zports.push((true, z.wire_rx(rrg, id, l > layer)));
            }
        }
        zports.sort_by(|a, b| a.1.cmp(&b.1));
        for (is_input, name) in zports {
            if is_input {
                lm.input(name);
            } else {
                lm.output(name);
            }
        }

        // Nets: wires, pins of non-IO tiles.
        let mut declared: BTreeSet<String> = BTreeSet::new();
        for (id, node) in rrg.nodes.iter().enumerate() {
            if node.layer != layer {
                continue;
            }
            match node.kind {
                NodeKind::Chanx | NodeKind::Chany => {
                    declared.insert(local_name(rrg, id as NodeId));
                }
                NodeKind::Ipin | NodeKind::Opin if !is_io(layer, node.xlo, node.ylo) => {
                    declared.insert(local_name(rrg, id as NodeId));
                }
                _ => {}
            }
        }
        for d in &declared {
            lm.net(d.clone());
        }

        // CLB instances.
        for y in 0..grid.height {
            for x in 0..grid.width {
                if grid.block(layer as u32, x, y) != BlockKind::Clb {
                    continue;
                }
                let tn = rrg.tile_nodes(layer as u32, x, y);
                let mut conns: Vec<(String, String)> = vec![("clk".into(), "clk".into())];
                for (p, &ip) in tn.ipins.iter().enumerate() {
                    conns.push((format!("i{p}"), local_name(rrg, ip)));
                }
                for (b, &op) in tn.opins.iter().enumerate() {
                    conns.push((format!("o{b}"), local_name(rrg, op)));
                }
                lm.inst(&format!("clb{suffix}"), &format!("clb_x{x}_y{y}"), &conns);
            }
        }
        // CB and SB instances: ports connect to the like-named layer nets.
        let rendered_cbs: BTreeSet<(u16, u16)> =
            cb_content.keys().copied().chain(cb_bufs.keys().copied()).collect();
        for (x, y) in rendered_cbs {
            let module = format!("cb_x{x}_y{y}{suffix}");
            // Re-derive the port list the module was rendered with.
            let conns = module_self_conns(&text, &module);
            lm.inst(&module, &format!("cbi_x{x}_y{y}"), &conns);
        }
        let rendered_sbs: BTreeSet<(u16, u16)> =
            sb_content.keys().copied().chain(sb_bufs.keys().copied()).collect();
        for (x, y) in rendered_sbs {
            let module = format!("sb_x{x}_y{y}{suffix}");
            let conns = module_self_conns(&text, &module);
            lm.inst(&module, &format!("sbi_x{x}_y{y}"), &conns);
        }
        text.push_str(&lm.render());

        docs.push(NetlistDoc { name: format!("layer{}.fnl", layer + 1), text });
    }

    // Top.
    let mut top = ModuleBuilder::new("top".into());
    top.input("clk".into());
    for layer in 0..layer_count as u16 {
        for y in 0..grid.height as u16 {
            for x in 0..grid.width as u16 {
                if is_io(layer, x, y) {
                    for s in 0..grid.io_capacity as u16 {
                        top.input(format!("l{}_pad_in_x{x}_y{y}_s{s}", layer + 1));
                        top.output(format!("l{}_pad_out_x{x}_y{y}_s{s}", layer + 1));
                    }
                }
            }
        }
    }
    let mut layer_conns: Vec<Vec<(String, String)>> = (0..layer_count as usize)
        .map(|_| vec![("clk".to_string(), "clk".to_string())])
        .collect();
    for layer in 0..layer_count as u16 {
        for y in 0..grid.height as u16 {
            for x in 0..grid.width as u16 {
                if is_io(layer, x, y) {
                    for s in 0..grid.io_capacity as u16 {
                        layer_conns[layer as usize].push((
                            format!("pad_in_x{x}_y{y}_s{s}"),
                            format!("l{}_pad_in_x{x}_y{y}_s{s}", layer + 1),
                        ));
                        layer_conns[layer as usize].push((
                            format!("pad_out_x{x}_y{y}_s{s}"),
                            format!("l{}_pad_out_x{x}_y{y}_s{s}", layer + 1),
                        ));
                    }
                }
            }
        }
    }
    // All cross-layer signals are explicit nets of the top module.
    for (&src, &dst) in &traffic.vias {
        let (sl, dl) = (rrg.node(src).layer, rrg.node(dst).layer);
        let s = rrg.node(src);
        let net = format!("z_l{}_l{}_x{}_y{}_k{}", sl + 1, dl + 1, s.xlo, s.ylo, s.track);
        top.net(net.clone());
        layer_conns[sl as usize].push((z.chanz_tx(rrg, src), net.clone()));
        layer_conns[dl as usize].push((z.chanz_rx(rrg, dst), net));
    }
    for &(l, id, up) in &traffic.opin_tx {
        let neighbor = if up { l + 1 } else { l - 1 };
        let o = rrg.node(id);
        let net = format!("zo_l{}_l{}_x{}_y{}_p{}", l + 1, neighbor + 1, o.xlo, o.ylo, o.track);
        top.net(net.clone());
        layer_conns[l as usize].push((z.opin_tx(rrg, id, up), net.clone()));
        layer_conns[neighbor as usize].push((z.opin_rx(rrg, id, l > neighbor), net));
    }
    for &(l, id, up) in &traffic.wire_tx {
        let neighbor = if up { l + 1 } else { l - 1 };
        let net = format!("zw_l{}_l{}_{}", l + 1, neighbor + 1, local_name(rrg, id));
        top.net(net.clone());
        layer_conns[l as usize].push((z.wire_tx(rrg, id, up), net.clone()));
        layer_conns[neighbor as usize].push((z.wire_rx(rrg, id, l > neighbor), net));
    }
    for layer in 0..layer_count as usize {
        top.inst(&format!("layer_L{}", layer + 1), &format!("l{}", layer + 1), &layer_conns[layer]);
    }
    docs.push(NetlistDoc { name: "top.fnl".into(), text: top.render() });

    let mut manifest = String::new();
    for d in &docs {
        let mut hasher = Sha256::new();
        hasher.update(d.text.as_bytes());
        let hash: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(manifest, "{} {}", d.name, hash);
    }

    DocSet { docs, manifest }
}

/// Extracts a rendered module's port list and returns identity connections
/// (port = like-named net in the enclosing layer module).
fn module_self_conns(rendered: &str, module: &str) -> Vec<(String, String)> {
    let header = format!("module {module} (");
    for line in rendered.lines() {
        if let Some(rest) = line.strip_prefix(&header) {
            let rest = rest.trim_end_matches(')');
            return rest
                .split(", ")
                .filter(|p| !p.is_empty())
                .map(|p| {
                    let name = p.split_whitespace().last().unwrap_or("").to_string();
                    (name.clone(), name)
                })
                .collect();
        }
    }
    Vec::new()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ConnectionType, LayerSpec, SbPlacement, Segment};
    use crate::fabric::annotate;
    use crate::rrg::build_base_rrg;

    fn spec_2layer(ty: ConnectionType) -> ArchSpec {
        let mut spec = ArchSpec {
            grid_width: 3,
            grid_height: 3,
            layer_count: 2,
            layers: vec![LayerSpec::homogeneous(); 2],
            channel_width: 2,
            segments: vec![Segment { length: 1, tracks: 2 }],
            lut_size: 2,
            cluster_size: 1,
            ..ArchSpec::default()
        };
        spec.vertical.connection_type = ty;
        spec
    }

    fn emit(spec: &ArchSpec) -> (DocSet, RoutingResourceGraph) {
        let base = build_base_rrg(spec).unwrap();
        let rrg = if spec.vertical.connection_type == ConnectionType::None2D {
            base
        } else {
            let plan = crate::vertical::plan_sites(spec, 0).unwrap();
            crate::vertical::extend_to_3d(&base, spec, &plan).unwrap()
        };
        let model = annotate(&rrg, spec).unwrap();
        (emit_netlist(&model, &rrg, spec), rrg)
    }

    #[test]
    fn doc_count_is_layers_plus_two() {
        let (set, _) = emit(&spec_2layer(ConnectionType::Sb));
        assert_eq!(set.docs.len(), 4);
        assert!(set.doc("top.fnl").is_some());
        assert!(set.doc("primitives.fnl").is_some());
        assert!(set.doc("layer1.fnl").is_some());
        assert!(set.doc("layer2.fnl").is_some());
        assert_eq!(set.manifest.lines().count(), 4);
    }

    #[test]
    fn homogeneous_layers_identical_up_to_suffix() {
        for ty in [ConnectionType::None2D, ConnectionType::Sb, ConnectionType::Cb, ConnectionType::Hybrid] {
            let (set, _) = emit(&spec_2layer(ty));
            let l1 = set.doc("layer1.fnl").unwrap().text.replace("_L1", "_LX");
            let l2 = set.doc("layer2.fnl").unwrap().text.replace("_L2", "_LX");
            assert_eq!(l1, l2, "type {ty:?}");
        }
    }

    #[test]
    fn none2d_top_has_no_inter_layer_nets() {
        let (set, _) = emit(&spec_2layer(ConnectionType::None2D));
        let top = &set.doc("top.fnl").unwrap().text;
        assert!(!top.contains("net z"), "unexpected z nets in {top}");
    }

    #[test]
    fn single_site_top_declares_one_net_per_chanz_pair() {
        let mut spec = spec_2layer(ConnectionType::Sb);
        spec.grid_width = 4;
        spec.grid_height = 4;
        spec.vertical.sb_placement = SbPlacement::CustomList;
        spec.vertical.custom_sites = Some(vec![(2, 2)]);
        let (set, rrg) = emit(&spec);
        let top = &set.doc("top.fnl").unwrap().text;
        let z_nets = top.lines().filter(|l| l.trim().starts_with("net z_")).count();
        let pairs = crate::vertical::count_vertical(&rrg).sb_pairs as usize;
        assert_eq!(pairs, 4);
        assert_eq!(z_nets, pairs);
    }

    #[test]
    fn layer_files_reference_only_their_own_layer() {
        let (set, _) = emit(&spec_2layer(ConnectionType::Hybrid));
        for doc in ["layer1.fnl", "layer2.fnl"] {
            let text = &set.doc(doc).unwrap().text;
            // Cross-layer values only ever arrive through z ports; no
            // layer-qualified names appear inside a layer document.
            assert!(!text.contains("l1_"), "{doc} leaks layer names");
            assert!(!text.contains("l2_"), "{doc} leaks layer names");
            assert!(!text.contains("z_l"), "{doc} contains top-level z nets");
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let (a, _) = emit(&spec_2layer(ConnectionType::Hybrid));
        let (b, _) = emit(&spec_2layer(ConnectionType::Hybrid));
        assert_eq!(a, b);
        assert_eq!(a.manifest, b.manifest);
    }

    #[test]
    fn emission_works_without_pnr_support() {
        // Logic-heterogeneous and 3+ layer fabrics emit fine.
        let mut spec = ArchSpec {
            grid_width: 4,
            grid_height: 4,
            layer_count: 3,
            layers: vec![
                LayerSpec { class: crate::arch::HeteroClass::LogicHetero, columns: vec![] },
                LayerSpec {
                    class: crate::arch::HeteroClass::LogicHetero,
                    columns: vec![
                        BlockKind::Io,
                        BlockKind::Dsp,
                        BlockKind::Bram,
                        BlockKind::Io,
                    ],
                },
                LayerSpec { class: crate::arch::HeteroClass::LogicHetero, columns: vec![] },
            ],
            channel_width: 2,
            segments: vec![Segment { length: 1, tracks: 2 }],
            lut_size: 2,
            cluster_size: 1,
            ..ArchSpec::default()
        };
        spec.vertical.connection_type = ConnectionType::Sb;
        let (set, _) = emit(&spec);
        assert_eq!(set.docs.len(), 5);
        // Taller stacks use face-qualified vertical port names.
        let l2 = &set.doc("layer2.fnl").unwrap().text;
        assert!(l2.contains("za_tx_") || l2.contains("zu_tx_"));
    }
}
