//! Static timing over routed designs: longest register-to-register or
//! PI-to-PO path, with per-net slacks and the critical path node list.

use std::collections::HashMap;

use super::{Block, DelayModel, PackedNetlist, RoutingResult};
use crate::blif::SigId;
use crate::error::{Error, Result};
use crate::rrg::RoutingResourceGraph;

#[derive(Debug, Clone)]
pub struct TimingReport {
    /// Critical path delay, seconds.
    pub cpd: f64,
    /// Signal names along the critical path, source to endpoint.
    pub critical_path: Vec<String>,
    /// Slack per inter-block net, seconds (CPD-referenced).
    pub net_slacks: Vec<(String, f64)>,
}

/// Net arrival delays per sink block, recomputed from the route trees under
/// the given delay model (so a fixed routing can be re-evaluated at other
/// vertical delay ratios).
fn net_delays_by_block(
    routing: &RoutingResult,
    rrg: &RoutingResourceGraph,
    model: &DelayModel,
) -> HashMap<(usize, Block), f64> {
    let mut out = HashMap::new();
    for tree in &routing.trees {
        let mut delay: HashMap<u32, f64> = HashMap::new();
        for &(node, edge) in &tree.nodes {
            let d = match edge {
                None => 0.0,
                Some(eid) => {
                    let e = &rrg.edges[eid as usize];
                    delay.get(&e.src).copied().unwrap_or(0.0) + model.edge_delay(rrg, e.src, e.dst)
                }
            };
            delay.insert(node, d);
        }
        for entry in &tree.sinks {
            out.insert((tree.net, entry.block), delay.get(&entry.ipin).copied().unwrap_or(0.0));
        }
    }
    out
}

/// Longest-path analysis. Intra-cluster hops cost nothing; every BLE adds
/// the LUT delay; registered BLEs launch at time zero and their D pins are
/// endpoints alongside the primary outputs.
pub fn sta(
    packed: &PackedNetlist,
    routing: &RoutingResult,
    rrg: &RoutingResourceGraph,
    model: &DelayModel,
) -> Result<TimingReport> {
    let delays = net_delays_by_block(routing, rrg, model);

    // Producer map: signal -> (cluster, ble).
    let mut producer: HashMap<SigId, (usize, usize)> = HashMap::new();
    for (ci, cluster) in packed.clusters.iter().enumerate() {
        for (bi, ble) in cluster.bles.iter().enumerate() {
            producer.insert(ble.output, (ci, bi));
        }
    }
    let pi_set: HashMap<SigId, usize> =
        packed.pis.iter().enumerate().map(|(i, &(_, s))| (s, i)).collect();
    let net_of: HashMap<SigId, usize> =
        packed.nets.iter().enumerate().map(|(i, n)| (n.signal, i)).collect();

    // Arrival time of a signal as seen inside a cluster.
    let arrival_at = |arr: &HashMap<SigId, f64>, sig: SigId, cluster: usize| -> f64 {
        let base = arr.get(&sig).copied().unwrap_or(0.0);
        if let Some((pc, _)) = producer.get(&sig) {
            if *pc == cluster {
                return base;
            }
        }
        match net_of.get(&sig) {
            Some(&ni) => base + delays.get(&(ni, Block::Cluster(cluster))).copied().unwrap_or(0.0),
            None => base,
        }
    };

    // Topological order over combinational BLE dependencies.
    let mut indeg: HashMap<(usize, usize), usize> = HashMap::new();
    let mut fanout: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (ci, cluster) in packed.clusters.iter().enumerate() {
        for (bi, ble) in cluster.bles.iter().enumerate() {
            indeg.entry((ci, bi)).or_insert(0);
            for &input in &ble.inputs {
                if let Some(&(pc, pb)) = producer.get(&input) {
                    if !packed.clusters[pc].bles[pb].registered {
                        *indeg.entry((ci, bi)).or_insert(0) += 1;
                        fanout.entry((pc, pb)).or_default().push((ci, bi));
                    }
                }
            }
        }
    }
    let mut queue: std::collections::VecDeque<(usize, usize)> = indeg
        .iter()
        .filter(|&(_, &d)| d == 0)
        .map(|(&k, _)| k)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut topo: Vec<(usize, usize)> = Vec::new();
    while let Some(k) = queue.pop_front() {
        topo.push(k);
        if let Some(f) = fanout.get(&k) {
            for &next in f {
                let d = indeg.get_mut(&next).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(next);
                }
            }
        }
    }
    if topo.len() != indeg.len() {
        return Err(Error::Timing("combinational loop in packed netlist".into()));
    }

    // Forward pass.
    let mut arr: HashMap<SigId, f64> = HashMap::new();
    let mut ready: HashMap<(usize, usize), f64> = HashMap::new();
    let mut best_input: HashMap<(usize, usize), Option<SigId>> = HashMap::new();
    for &(_, s) in &packed.pis {
        arr.insert(s, 0.0);
    }
    for (ci, cluster) in packed.clusters.iter().enumerate() {
        for (bi, ble) in cluster.bles.iter().enumerate() {
            if ble.registered {
                arr.insert(ble.output, 0.0);
                let _ = (ci, bi);
            }
        }
    }
    for &(ci, bi) in &topo {
        let ble = &packed.clusters[ci].bles[bi];
        let mut t = 0.0f64;
        let mut who = None;
        for &input in &ble.inputs {
            let a = arrival_at(&arr, input, ci);
            if a >= t {
                t = a;
                who = Some(input);
            }
        }
        ready.insert((ci, bi), t);
        best_input.insert((ci, bi), who);
        if !ble.registered {
            arr.insert(ble.output, t + model.lut_delay);
        }
    }

    // Endpoints: registered D pins and primary outputs.
    let mut cpd = 0.0f64;
    let mut crit_end: Option<(String, SigId, Option<(usize, usize)>)> = None;
    for (ci, cluster) in packed.clusters.iter().enumerate() {
        for (bi, ble) in cluster.bles.iter().enumerate() {
            if ble.registered {
                let t = ready.get(&(ci, bi)).copied().unwrap_or(0.0) + model.lut_delay
                    + model.setup_time;
                if t >= cpd {
                    cpd = t;
                    crit_end = Some((
                        format!("{} (register D)", packed.signals[ble.output]),
                        ble.output,
                        Some((ci, bi)),
                    ));
                }
            }
        }
    }
    for (pi, &(ref name, sig)) in packed.pos.iter().enumerate() {
        let base = arr.get(&sig).copied().unwrap_or(0.0);
        let extra = net_of
            .get(&sig)
            .and_then(|&ni| delays.get(&(ni, Block::OutPad(pi))))
            .copied()
            .unwrap_or(0.0);
        let t = base + extra;
        if t >= cpd {
            cpd = t;
            crit_end = Some((format!("{name} (primary output)"), sig, producer.get(&sig).copied().map(Some).unwrap_or(None)));
        }
    }

    // Critical path walk-back through best inputs.
    let mut critical_path = Vec::new();
    if let Some((endpoint, _, mut at)) = crit_end {
        critical_path.push(endpoint);
        while let Some((ci, bi)) = at {
            let ble = &packed.clusters[ci].bles[bi];
            critical_path.push(format!("cluster{ci}.ble{bi} -> {}", packed.signals[ble.output]));
            at = match best_input.get(&(ci, bi)).copied().flatten() {
                Some(sig) if pi_set.contains_key(&sig) => {
                    critical_path.push(format!("{} (primary input)", packed.signals[sig]));
                    None
                }
                Some(sig) => match producer.get(&sig) {
                    Some(&(pc, pb)) if !packed.clusters[pc].bles[pb].registered => Some((pc, pb)),
                    Some(&(pc, pb)) => {
                        critical_path
                            .push(format!("{} (register Q)", packed.signals[packed.clusters[pc].bles[pb].output]));
                        None
                    }
                    None => None,
                },
                None => None,
            };
        }
        critical_path.reverse();
    }

    // Backward pass for per-net slack.
    let mut req_out: HashMap<SigId, f64> = HashMap::new();
    for &(ci, bi) in topo.iter().rev() {
        let ble = &packed.clusters[ci].bles[bi];
        let rq = if ble.registered {
            cpd - model.setup_time
        } else {
            req_out.get(&ble.output).copied().unwrap_or(cpd)
        };
        let ready_req = rq - model.lut_delay;
        for &input in &ble.inputs {
            let net_d = match producer.get(&input) {
                Some(&(pc, _)) if pc == ci => 0.0,
                _ => net_of
                    .get(&input)
                    .and_then(|&ni| delays.get(&(ni, Block::Cluster(ci))))
                    .copied()
                    .unwrap_or(0.0),
            };
            let r = ready_req - net_d;
            req_out
                .entry(input)
                .and_modify(|v| *v = v.min(r))
                .or_insert(r);
        }
    }
    // Registered BLEs outside the combinational topo also impose on inputs.
    for (ci, cluster) in packed.clusters.iter().enumerate() {
        for ble in &cluster.bles {
            if !ble.registered {
                continue;
            }
            let ready_req = cpd - model.setup_time - model.lut_delay;
            for &input in &ble.inputs {
                let net_d = match producer.get(&input) {
                    Some(&(pc, _)) if pc == ci => 0.0,
                    _ => net_of
                        .get(&input)
                        .and_then(|&ni| delays.get(&(ni, Block::Cluster(ci))))
                        .copied()
                        .unwrap_or(0.0),
                };
                let r = ready_req - net_d;
                req_out.entry(input).and_modify(|v| *v = v.min(r)).or_insert(r);
            }
        }
    }
    for (pi, &(_, sig)) in packed.pos.iter().enumerate() {
        let net_d = net_of
            .get(&sig)
            .and_then(|&ni| delays.get(&(ni, Block::OutPad(pi))))
            .copied()
            .unwrap_or(0.0);
        let r = cpd - net_d;
        req_out.entry(sig).and_modify(|v| *v = v.min(r)).or_insert(r);
    }

    let net_slacks: Vec<(String, f64)> = packed
        .nets
        .iter()
        .map(|n| {
            let a = arr.get(&n.signal).copied().unwrap_or(0.0);
            let r = req_out.get(&n.signal).copied().unwrap_or(cpd);
            (n.name.clone(), r - a)
        })
        .collect();

    Ok(TimingReport { cpd, critical_path, net_slacks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ArchSpec, Segment};
    use crate::blif::parse_blif;
    use crate::pnr::{pack, place, route, PlaceParams, RouteParams};
    use crate::rrg::build_base_rrg;

    fn spec() -> ArchSpec {
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

    fn routed(doc: &str, spec: &ArchSpec, seed: u64) -> (PackedNetlist, RoutingResult, crate::rrg::RoutingResourceGraph) {
        let netlist = parse_blif(doc).unwrap();
        let packed = pack(&netlist, spec).unwrap();
        let rrg = build_base_rrg(spec).unwrap();
        let placement = place(&packed, &rrg, seed, PlaceParams::default()).unwrap();
        let model = DelayModel::from_spec(spec);
        let routing = route(&packed, &placement, &rrg, &model, RouteParams::default()).unwrap();
        (packed, routing, rrg)
    }

    #[test]
    fn lone_lut_cpd_is_exactly_the_lut_delay() {
        let (packed, routing, rrg) =
            routed(".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n", &spec(), 1);
        let model = DelayModel {
            base_switch_delay: 1e-12, // edge_delay denominators stay sane
            wire_delay_per_tile: 0.0,
            vertical_delay_ratio: 1.0,
            lut_delay: 1e-9,
            setup_time: 0.0,
        };
        // Zero out routing contributions entirely.
        let model = DelayModel { base_switch_delay: 0.0, ..model };
        let report = sta(&packed, &routing, &rrg, &model).unwrap();
        assert!((report.cpd - 1e-9).abs() < 1e-15, "cpd {}", report.cpd);
        assert!(report.critical_path.len() >= 2);
    }

    #[test]
    fn cpd_monotone_in_vertical_ratio_at_fixed_routing() {
        let (packed, routing, rrg) = routed(
            ".model m\n.inputs a b\n.outputs y\n.names a b y\n11 1\n.end\n",
            &spec(),
            2,
        );
        let base = DelayModel::from_spec(&spec());
        let mut last = 0.0;
        for rho in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let cpd = sta(&packed, &routing, &rrg, &base.with_ratio(rho)).unwrap().cpd;
            assert!(cpd >= last, "rho {rho}: {cpd} < {last}");
            last = cpd;
        }
    }

    #[test]
    fn hand_arithmetic_reference_path() {
        // DelayModel defaults: a 10-tile wire (100 ps) + one switch
        // (185.4 ps) + one vertical hop (137 ps) = 422.4 ps.
        let model = DelayModel::from_spec(&ArchSpec::default());
        let wire = 10.0 * model.wire_delay_per_tile;
        let path = wire + model.base_switch_delay + model.vertical_delay_ratio * model.base_switch_delay;
        assert!((path - 422.4e-12).abs() < 0.05e-12, "path {path}");
    }

    #[test]
    fn slacks_are_nonnegative_and_zero_on_critical_net() {
        let (packed, routing, rrg) = routed(
            ".model m\n.inputs a\n.outputs y\n.names a x\n1 1\n.names x y\n1 1\n.end\n",
            &ArchSpec { cluster_size: 1, ..spec() },
            3,
        );
        let model = DelayModel::from_spec(&spec());
        let report = sta(&packed, &routing, &rrg, &model).unwrap();
        assert!(report.cpd > 0.0);
        let min_slack = report
            .net_slacks
            .iter()
            .map(|&(_, s)| s)
            .fold(f64::INFINITY, f64::min);
        assert!(min_slack.abs() < 1e-15, "critical slack {min_slack}");
        for (name, s) in &report.net_slacks {
            assert!(*s > -1e-15, "net {name} slack {s}");
        }
    }

    #[test]
    fn registered_paths_break_timing_chains() {
        let doc = "\
.model r
.inputs d
.outputs q2
.names d nd
0 1
.latch nd q re clk 0
.names q q2
1 1
.end
";
        let (packed, routing, rrg) = routed(doc, &spec(), 4);
        let model = DelayModel::from_spec(&spec());
        let report = sta(&packed, &routing, &rrg, &model).unwrap();
        // Two separate stages: PI -> D and Q -> PO; CPD is the worse stage,
        // not their sum. Both stages carry exactly one LUT delay.
        assert!(report.cpd < 2.0 * model.lut_delay + 10e-9);
        assert!(report.cpd >= model.lut_delay);
    }
}
