//! Greedy affinity packing of LUTs and latches into clusters.

use std::collections::BTreeSet;

use super::{Ble, Cluster, PackedNetlist};
use crate::arch::{ArchSpec, BlockKind};
use crate::blif::{LogicNetlist, SigId};
use crate::error::{Error, Result};
use crate::rrg::Grid;

/// A BLE seed before clustering: a LUT, a latch, or a LUT with the latch it
/// feeds. A latch rides with its driver only when the driver's combinational
/// output has no other consumer (the BLE exposes a single output).
#[derive(Debug)]
struct Seed {
    inputs: Vec<SigId>,
    table: Vec<bool>,
    registered: bool,
    output: SigId,
}

fn identity_table(k: usize) -> Vec<bool> {
    // Pass-through of input 0 (the MSB of the row index).
    let rows = 1usize << k;
    (0..rows).map(|r| (r >> (k - 1)) & 1 == 1).collect()
}

/// Packs a logic netlist into clusters of at most N BLEs with at most K*N
/// distinct external inputs, seeding each cluster with the first unpacked
/// BLE and absorbing the highest-shared-signal neighbor until full.
pub fn pack(netlist: &LogicNetlist, spec: &ArchSpec) -> Result<PackedNetlist> {
    let k = spec.lut_size as usize;
    let n = spec.cluster_size as usize;
    if netlist.max_fanin() > k {
        return Err(Error::Pack(format!(
            "cell fanin {} exceeds the architecture LUT size {k}",
            netlist.max_fanin()
        )));
    }
    for latch in &netlist.latches {
        if latch.init {
            return Err(Error::Pack(format!(
                "latch on `{}` initializes to 1; fabric flip-flops power up to 0",
                netlist.signal_name(latch.q)
            )));
        }
    }

    // Consumer counts decide whether a latch can ride with its driver.
    let mut consumers: std::collections::HashMap<SigId, usize> = std::collections::HashMap::new();
    for cell in &netlist.cells {
        for &i in &cell.inputs {
            *consumers.entry(i).or_default() += 1;
        }
    }
    for &po in &netlist.pos {
        *consumers.entry(po).or_default() += 1;
    }
    for latch in &netlist.latches {
        *consumers.entry(latch.d).or_default() += 1;
    }

    let mut seeds: Vec<Seed> = Vec::new();
    let mut absorbed_latch: BTreeSet<usize> = BTreeSet::new();
    for cell in &netlist.cells {
        let mut registered = false;
        let mut output = cell.output;
        if let Some((li, latch)) =
            netlist.latches.iter().enumerate().find(|(_, l)| l.d == cell.output)
        {
            if consumers.get(&cell.output).copied().unwrap_or(0) == 1 {
                registered = true;
                output = latch.q;
                absorbed_latch.insert(li);
            }
        }
        seeds.push(Seed { inputs: cell.inputs.clone(), table: cell.table.clone(), registered, output });
    }
    for (li, latch) in netlist.latches.iter().enumerate() {
        if absorbed_latch.contains(&li) {
            continue;
        }
        // Standalone latch: identity LUT in front of the flip-flop.
        seeds.push(Seed {
            inputs: vec![latch.d],
            table: identity_table(1),
            registered: true,
            output: latch.q,
        });
    }

    // External inputs a cluster needs if it holds the given seed set.
    let externals = |members: &[usize]| -> BTreeSet<SigId> {
        let outs: BTreeSet<SigId> = members.iter().map(|&m| seeds[m].output).collect();
        let mut ext = BTreeSet::new();
        for &m in members {
            for &i in &seeds[m].inputs {
                if !outs.contains(&i) {
                    ext.insert(i);
                }
            }
        }
        ext
    };

    let mut packed_flag = vec![false; seeds.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    loop {
        let Some(seed_idx) = packed_flag.iter().position(|&p| !p) else { break };
        packed_flag[seed_idx] = true;
        let mut members = vec![seed_idx];
        while members.len() < n {
            // Highest shared-signal candidate; ties fall to the lowest index.
            let cluster_sigs: BTreeSet<SigId> = members
                .iter()
                .flat_map(|&m| seeds[m].inputs.iter().copied().chain([seeds[m].output]))
                .collect();
            let mut best: Option<(usize, usize)> = None;
            for (i, seed) in seeds.iter().enumerate() {
                if packed_flag[i] {
                    continue;
                }
                let shared = seed
                    .inputs
                    .iter()
                    .copied()
                    .chain([seed.output])
                    .filter(|s| cluster_sigs.contains(s))
                    .count();
                let mut trial = members.clone();
                trial.push(i);
                if externals(&trial).len() > k * n {
                    continue;
                }
                match best {
                    Some((bs, _)) if bs >= shared => {}
                    _ => best = Some((shared, i)),
                }
            }
            let Some((_, pick)) = best else { break };
            packed_flag[pick] = true;
            members.push(pick);
        }
        clusters.push(members);
    }

    // Capacity check against the grid.
    let grid = Grid::from_spec(spec);
    let clb_tiles = grid.blocks.iter().filter(|&&b| b == BlockKind::Clb).count();
    if clusters.len() > clb_tiles {
        return Err(Error::Pack(format!(
            "{} clusters need more than the {} CLB tiles available",
            clusters.len(),
            clb_tiles
        )));
    }
    let io_sites = grid.blocks.iter().filter(|&&b| b == BlockKind::Io).count() * grid.io_capacity as usize;
    if netlist.pis.len() + netlist.pos.len() > io_sites && io_sites > 0 {
        return Err(Error::Pack(format!(
            "{} pads need more than the {} IO sites available",
            netlist.pis.len() + netlist.pos.len(),
            io_sites
        )));
    }

    let clusters: Vec<Cluster> = clusters
        .into_iter()
        .map(|members| {
            let ext = externals(&members);
            let bles = members
                .into_iter()
                .map(|m| Ble {
                    inputs: seeds[m].inputs.clone(),
                    table: seeds[m].table.clone(),
                    registered: seeds[m].registered,
                    output: seeds[m].output,
                })
                .collect();
            Cluster { bles, inputs: ext.into_iter().collect() }
        })
        .collect();

    let mut packed = PackedNetlist {
        name: netlist.name.clone(),
        signals: netlist.signals.clone(),
        clusters,
        pis: netlist.pis.iter().map(|&s| (netlist.signal_name(s).to_string(), s)).collect(),
        pos: netlist.pos.iter().map(|&s| (netlist.signal_name(s).to_string(), s)).collect(),
        nets: Vec::new(),
        lut_size: spec.lut_size,
        cluster_size: spec.cluster_size,
    };
    packed.derive_nets();
    Ok(packed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchSpec;
    use crate::blif::parse_blif;

    fn spec(k: u32, n: u32) -> ArchSpec {
        ArchSpec { grid_width: 8, grid_height: 8, lut_size: k, cluster_size: n, ..ArchSpec::default() }
    }

    #[test]
    fn one_lut_makes_one_cluster() {
        let netlist = parse_blif(".model m\n.inputs a b\n.outputs y\n.names a b y\n11 1\n.end\n").unwrap();
        let packed = pack(&netlist, &spec(4, 10)).unwrap();
        assert_eq!(packed.clusters.len(), 1);
        assert_eq!(packed.clusters[0].bles.len(), 1);
    }

    #[test]
    fn eleven_independent_luts_make_two_clusters() {
        let mut doc = String::from(".model m\n.inputs");
        for i in 0..11 {
            doc.push_str(&format!(" a{i}"));
        }
        doc.push_str("\n.outputs");
        for i in 0..11 {
            doc.push_str(&format!(" y{i}"));
        }
        doc.push('\n');
        for i in 0..11 {
            doc.push_str(&format!(".names a{i} y{i}\n1 1\n"));
        }
        doc.push_str(".end\n");
        let netlist = parse_blif(&doc).unwrap();
        let packed = pack(&netlist, &spec(4, 10)).unwrap();
        assert_eq!(packed.clusters.len(), 2);
        assert_eq!(packed.clusters[0].bles.len(), 10);
        assert_eq!(packed.clusters[1].bles.len(), 1);
    }

    #[test]
    fn chain_of_four_packs_adjacent_pairs() {
        let doc = "\
.model chain
.inputs a
.outputs y4
.names a y1
1 1
.names y1 y2
1 1
.names y2 y3
1 1
.names y3 y4
1 1
.end
";
        let netlist = parse_blif(doc).unwrap();
        let packed = pack(&netlist, &spec(4, 2)).unwrap();
        assert_eq!(packed.clusters.len(), 2);
        // Exhaustive expectation: greedy affinity pairs adjacent chain
        // stages (y1 with y2, y3 with y4).
        let outs: Vec<Vec<&str>> = packed
            .clusters
            .iter()
            .map(|c| c.bles.iter().map(|b| packed.signals[b.output].as_str()).collect())
            .collect();
        assert_eq!(outs, vec![vec!["y1", "y2"], vec!["y3", "y4"]]);
    }

    #[test]
    fn latch_rides_with_its_driver() {
        let doc = "\
.model r
.inputs d
.outputs q
.names d nd
0 1
.latch nd q re clk 0
.end
";
        let netlist = parse_blif(doc).unwrap();
        let packed = pack(&netlist, &spec(4, 4)).unwrap();
        assert_eq!(packed.clusters.len(), 1);
        let ble = &packed.clusters[0].bles[0];
        assert!(ble.registered);
        assert_eq!(packed.signals[ble.output], "q");
    }

    #[test]
    fn shared_comb_output_forces_standalone_latch() {
        // nd feeds both the latch and a PO: the latch cannot ride along.
        let doc = "\
.model r
.inputs d
.outputs q nd
.names d nd
0 1
.latch nd q re clk 0
.end
";
        let netlist = parse_blif(doc).unwrap();
        let packed = pack(&netlist, &spec(4, 4)).unwrap();
        let bles = &packed.clusters[0].bles;
        assert_eq!(bles.len(), 2);
        assert!(!bles[0].registered);
        assert!(bles[1].registered);
        // The standalone latch got an identity LUT in front.
        assert_eq!(bles[1].table, vec![false, true]);
    }

    #[test]
    fn overflow_is_an_error() {
        let netlist = parse_blif(".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n").unwrap();
        let tiny = ArchSpec { grid_width: 3, grid_height: 3, cluster_size: 1, ..ArchSpec::default() };
        // 3x3 grid with an IO ring leaves a single CLB tile; one cluster fits.
        assert!(pack(&netlist, &tiny).is_ok());
        let mut routing_only = tiny.clone();
        routing_only.layers[0].columns = vec![BlockKind::RoutingOnly; 3];
        assert!(pack(&netlist, &routing_only).is_err());
    }

    #[test]
    fn init_one_latch_is_rejected() {
        let doc = ".model m\n.inputs d\n.outputs q\n.names d nd\n0 1\n.latch nd q re clk 1\n.end\n";
        let netlist = parse_blif(doc).unwrap();
        let err = pack(&netlist, &spec(4, 4)).unwrap_err();
        assert!(err.to_string().contains("power up to 0"));
    }

    #[test]
    fn fanin_over_k_is_rejected() {
        let doc = ".model m\n.inputs a b c\n.outputs y\n.names a b c y\n111 1\n.end\n";
        let netlist = parse_blif(doc).unwrap();
        assert!(pack(&netlist, &spec(2, 4)).is_err());
    }

    #[test]
    fn nets_are_derived_with_deduplicated_sinks() {
        let doc = "\
.model m
.inputs a
.outputs y z
.names a x
1 1
.names x y
1 1
.names x z
1 1
.end
";
        let netlist = parse_blif(doc).unwrap();
        // Force separate clusters with N=1.
        let packed = pack(&netlist, &spec(4, 1)).unwrap();
        assert_eq!(packed.clusters.len(), 3);
        let x_net = packed.nets.iter().find(|n| n.name == "x").unwrap();
        assert_eq!(x_net.sinks.len(), 2);
    }
}
