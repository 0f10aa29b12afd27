//! BLIF subset ingestion and golden functional simulation.
//!
//! Supported directives: `.model`, `.inputs`, `.outputs`, `.names`,
//! `.latch`, `.end` — single model, on-set covers only, rising-edge
//! single-clock latches.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type SigId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct LutCell {
    pub inputs: Vec<SigId>,
    pub output: SigId,
    /// Expanded truth table, `2^inputs.len()` entries. Row index treats the
    /// first input as the most significant bit.
    pub table: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latch {
    pub d: SigId,
    pub q: SigId,
    pub init: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicNetlist {
    pub name: String,
    /// Signal names; `SigId` indexes into this.
    pub signals: Vec<String>,
    pub pis: Vec<SigId>,
    pub pos: Vec<SigId>,
    pub cells: Vec<LutCell>,
    pub latches: Vec<Latch>,
    /// Cell evaluation order (combinationally topological).
    topo: Vec<usize>,
}

impl LogicNetlist {
    pub fn signal_name(&self, id: SigId) -> &str {
        &self.signals[id]
    }

    pub fn max_fanin(&self) -> usize {
        self.cells.iter().map(|c| c.inputs.len()).max().unwrap_or(0)
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }
}

struct Parser<'a> {
    interner: HashMap<&'a str, SigId>,
    signals: Vec<String>,
}

impl<'a> Parser<'a> {
    fn sig(&mut self, name: &'a str) -> SigId {
        if let Some(&id) = self.interner.get(name) {
            return id;
        }
        let id = self.signals.len();
        self.signals.push(name.to_string());
        self.interner.insert(name, id);
        id
    }
}

/// Expands an on-set cube cover into a full truth table. Independent of any
/// evaluation shortcut: every row is matched against every cube.
fn expand_cover(fanin: usize, cubes: &[(Vec<u8>, bool)]) -> Vec<bool> {
    let rows = 1usize << fanin;
    let mut table = vec![false; rows];
    for row in 0..rows {
        let mut on = false;
        for (mask, val) in cubes {
            debug_assert!(*val);
            let mut hit = true;
            for (i, &m) in mask.iter().enumerate() {
                // First input is the most significant bit of the row index.
                let bit = (row >> (fanin - 1 - i)) & 1;
                match m {
                    b'0' if bit != 0 => hit = false,
                    b'1' if bit != 1 => hit = false,
                    _ => {}
                }
                if !hit {
                    break;
                }
            }
            if hit {
                on = true;
                break;
            }
        }
        table[row] = on;
    }
    table
}

/// Parses the BLIF subset into a [`LogicNetlist`]. Rejects multiple
/// drivers, undriven signals, combinational cycles, and anything outside
/// the subset, with 1-based line positions.
pub fn parse_blif(text: &str) -> Result<LogicNetlist> {
    let mut p = Parser { interner: HashMap::new(), signals: Vec::new() };
    let mut name = String::new();
    let mut seen_model = false;
    let mut ended = false;
    let mut pis: Vec<SigId> = Vec::new();
    let mut pos: Vec<SigId> = Vec::new();
    let mut cells: Vec<LutCell> = Vec::new();
    let mut latches: Vec<Latch> = Vec::new();
    // Pending .names block: (line, inputs, output, cubes).
    let mut pending: Option<(usize, Vec<SigId>, SigId, Vec<(Vec<u8>, bool)>)> = None;

    let err = |line: usize, msg: String| Error::Blif { line, msg };

    let flush =
        |pending: &mut Option<(usize, Vec<SigId>, SigId, Vec<(Vec<u8>, bool)>)>, cells: &mut Vec<LutCell>| {
            if let Some((_, inputs, output, cubes)) = pending.take() {
                let table = expand_cover(inputs.len(), &cubes);
                cells.push(LutCell { inputs, output, table });
            }
        };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if ended {
            return Err(err(line_no, "content after .end".into()));
        }
        if raw.trim_end().ends_with('\\') {
            return Err(err(line_no, "line continuations are outside the supported subset".into()));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if let Some(directive) = toks[0].strip_prefix('.') {
            match directive {
                "model" => {
                    flush(&mut pending, &mut cells);
                    if seen_model {
                        return Err(err(line_no, "only a single .model is supported".into()));
                    }
                    seen_model = true;
                    name = toks.get(1).unwrap_or(&"top").to_string();
                }
                "inputs" => {
                    flush(&mut pending, &mut cells);
                    for t in &toks[1..] {
                        pis.push(p.sig(t));
                    }
                }
                "outputs" => {
                    flush(&mut pending, &mut cells);
                    for t in &toks[1..] {
                        pos.push(p.sig(t));
                    }
                }
                "names" => {
                    flush(&mut pending, &mut cells);
                    if toks.len() < 2 {
                        return Err(err(line_no, ".names needs at least an output".into()));
                    }
                    let sigs: Vec<SigId> = toks[1..].iter().map(|t| p.sig(t)).collect();
                    let (inputs, output) = sigs.split_at(sigs.len() - 1);
                    pending = Some((line_no, inputs.to_vec(), output[0], Vec::new()));
                }
                "latch" => {
                    flush(&mut pending, &mut cells);
                    // `.latch d q [re clk] init`
                    let (d, q, init_tok) = match toks.len() {
                        4 => (toks[1], toks[2], toks[3]),
                        6 => {
                            if toks[3] != "re" {
                                return Err(err(
                                    line_no,
                                    format!("only rising-edge (`re`) latches supported, got {:?}", toks[3]),
                                ));
                            }
                            (toks[1], toks[2], toks[5])
                        }
                        _ => return Err(err(line_no, "malformed .latch".into())),
                    };
                    let init = match init_tok {
                        "0" => false,
                        "1" => true,
                        other => {
                            return Err(err(line_no, format!("latch init must be 0 or 1, got {other:?}")))
                        }
                    };
                    latches.push(Latch { d: p.sig(d), q: p.sig(q), init });
                }
                "end" => {
                    flush(&mut pending, &mut cells);
                    ended = true;
                }
                other => return Err(err(line_no, format!("unsupported directive .{other}"))),
            }
        } else {
            // Cube line of the pending .names block.
            let Some((_, inputs, _, cubes)) = pending.as_mut() else {
                return Err(err(line_no, format!("stray line {line:?}")));
            };
            let (mask, val) = match (toks.len(), inputs.len()) {
                (1, 0) => (Vec::new(), toks[0]),
                (2, n) if n > 0 => (toks[0].as_bytes().to_vec(), toks[1]),
                _ => return Err(err(line_no, format!("malformed cube {line:?}"))),
            };
            if mask.len() != inputs.len() {
                return Err(err(
                    line_no,
                    format!("cube width {} does not match {} inputs", mask.len(), inputs.len()),
                ));
            }
            if mask.iter().any(|c| !matches!(c, b'0' | b'1' | b'-')) {
                return Err(err(line_no, format!("bad cube characters in {line:?}")));
            }
            match val {
                "1" => cubes.push((mask, true)),
                "0" => return Err(err(line_no, "off-set covers are outside the supported subset".into())),
                other => return Err(err(line_no, format!("cube value must be 0 or 1, got {other:?}"))),
            }
        }
    }
    flush(&mut pending, &mut cells);

    // Driver bookkeeping: exactly one driver per signal.
    let n = p.signals.len();
    let mut driver = vec![0u8; n];
    for &pi in &pis {
        driver[pi] += 1;
    }
    for c in &cells {
        driver[c.output] += 1;
    }
    for l in &latches {
        driver[l.q] += 1;
    }
    for (id, &count) in driver.iter().enumerate() {
        if count > 1 {
            return Err(Error::Blif { line: 0, msg: format!("signal `{}` has multiple drivers", p.signals[id]) });
        }
    }
    let mut used = vec![false; n];
    for c in &cells {
        for &i in &c.inputs {
            used[i] = true;
        }
    }
    for l in &latches {
        used[l.d] = true;
    }
    for &po in &pos {
        used[po] = true;
    }
    for (id, &u) in used.iter().enumerate() {
        if u && driver[id] == 0 {
            return Err(Error::Blif { line: 0, msg: format!("signal `{}` has no driver", p.signals[id]) });
        }
    }

    // Combinational topological order; any cycle must pass through a latch.
    let mut producer: HashMap<SigId, usize> = HashMap::new();
    for (i, c) in cells.iter().enumerate() {
        producer.insert(c.output, i);
    }
    let mut indeg = vec![0usize; cells.len()];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); cells.len()];
    for (i, c) in cells.iter().enumerate() {
        for &input in &c.inputs {
            if let Some(&pc) = producer.get(&input) {
                indeg[i] += 1;
                fanout[pc].push(i);
            }
        }
    }
    let mut queue: std::collections::VecDeque<usize> =
        (0..cells.len()).filter(|&i| indeg[i] == 0).collect();
    let mut topo = Vec::with_capacity(cells.len());
    while let Some(i) = queue.pop_front() {
        topo.push(i);
        for &f in &fanout[i] {
            indeg[f] -= 1;
            if indeg[f] == 0 {
                queue.push_back(f);
            }
        }
    }
    if topo.len() != cells.len() {
        let stuck: Vec<String> = (0..cells.len())
            .filter(|&i| indeg[i] > 0)
            .map(|i| p.signals[cells[i].output].clone())
            .collect();
        return Err(Error::Blif { line: 0, msg: format!("combinational cycle through {stuck:?}") });
    }

    Ok(LogicNetlist { name, signals: p.signals, pis, pos, cells, latches, topo })
}

/// Cycle-accurate golden simulation: outputs for vector `t` are computed
/// with the latch state from vectors `< t`, then latches load synchronously.
pub fn simulate_golden(netlist: &LogicNetlist, vectors: &[Vec<bool>]) -> Result<Vec<Vec<bool>>> {
    let mut values = vec![false; netlist.signals.len()];
    let mut set = vec![false; netlist.signals.len()];
    let mut state: Vec<bool> = netlist.latches.iter().map(|l| l.init).collect();
    let mut out = Vec::with_capacity(vectors.len());

    for (t, vector) in vectors.iter().enumerate() {
        if vector.len() != netlist.pis.len() {
            return Err(Error::Blif {
                line: 0,
                msg: format!(
                    "vector {t} has {} bits for {} primary inputs",
                    vector.len(),
                    netlist.pis.len()
                ),
            });
        }
        set.iter_mut().for_each(|s| *s = false);
        for (&pi, &v) in netlist.pis.iter().zip(vector) {
            values[pi] = v;
            set[pi] = true;
        }
        for (l, &q) in netlist.latches.iter().zip(&state) {
            values[l.q] = q;
            set[l.q] = true;
        }
        for &ci in &netlist.topo {
            let cell = &netlist.cells[ci];
            let mut row = 0usize;
            for &input in &cell.inputs {
                // Topological evaluation never reads an unset signal.
                debug_assert!(set[input], "read of unset signal {}", netlist.signals[input]);
                row = (row << 1) | values[input] as usize;
            }
            values[cell.output] = cell.table[row];
            set[cell.output] = true;
        }
        out.push(netlist.pos.iter().map(|&po| values[po]).collect());
        let next: Vec<bool> = netlist.latches.iter().map(|l| values[l.d]).collect();
        state = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    const AND2: &str = "\
.model and2
.inputs a b
.outputs y
.names a b y
11 1
.end
";

    const COUNTER1: &str = "\
.model counter1
.inputs tick
.outputs q
.names q nq
0 1
.latch nq q re clk 0
.end
";

    #[test]
    fn and_gate_table() {
        let n = parse_blif(AND2).unwrap();
        assert_eq!(n.cells.len(), 1);
        assert_eq!(n.cells[0].table, vec![false, false, false, true]);
    }

    #[test]
    fn latch_parses_with_and_without_clock() {
        let n = parse_blif(COUNTER1).unwrap();
        assert_eq!(n.latches.len(), 1);
        assert!(!n.latches[0].init);
        let short = ".model m\n.inputs d\n.outputs q\n.names d dd\n1 1\n.latch dd q 1\n.end\n";
        let n = parse_blif(short).unwrap();
        assert!(n.latches[0].init);
    }

    #[test]
    fn wildcard_cube_expansion_matches_brute_force() {
        // Cube "1- 1" on (a, b): rows where a = 1, i.e. [0,0,1,1] with the
        // first input as MSB.
        let doc = ".model m\n.inputs a b\n.outputs y\n.names a b y\n1- 1\n.end\n";
        let n = parse_blif(doc).unwrap();
        assert_eq!(n.cells[0].table, vec![false, false, true, true]);

        // Brute-force oracle over every 2-cube cover on 3 inputs.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let cube = |rng: &mut rand_chacha::ChaCha8Rng| {
                (0..3).map(|_| [b'0', b'1', b'-'][rng.gen_range(0..3)]).collect::<Vec<u8>>()
            };
            let c1 = cube(&mut rng);
            let c2 = cube(&mut rng);
            let table = expand_cover(3, &[(c1.clone(), true), (c2.clone(), true)]);
            for row in 0..8usize {
                let matches = |c: &[u8]| {
                    (0..3).all(|i| match c[i] {
                        b'0' => (row >> (2 - i)) & 1 == 0,
                        b'1' => (row >> (2 - i)) & 1 == 1,
                        _ => true,
                    })
                };
                assert_eq!(table[row], matches(&c1) || matches(&c2));
            }
        }
    }

    #[test]
    fn and_simulates() {
        let n = parse_blif(AND2).unwrap();
        let out = simulate_golden(&n, &[vec![true, true], vec![true, false]]).unwrap();
        assert_eq!(out, vec![vec![true], vec![false]]);
    }

    #[test]
    fn counter_toggles_from_init_zero() {
        let n = parse_blif(COUNTER1).unwrap();
        let out = simulate_golden(&n, &vec![vec![false]; 3]).unwrap();
        assert_eq!(out, vec![vec![false], vec![true], vec![false]]);
    }

    #[test]
    fn vector_width_mismatch_is_an_error() {
        let n = parse_blif(AND2).unwrap();
        assert!(simulate_golden(&n, &[vec![true]]).is_err());
    }

    #[test]
    fn multiple_drivers_rejected() {
        let doc = ".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n.names a y\n0 1\n.end\n";
        let err = parse_blif(doc).unwrap_err();
        assert!(err.to_string().contains("multiple drivers"));
    }

    #[test]
    fn undriven_signal_rejected() {
        let doc = ".model m\n.inputs a\n.outputs y\n.names a ghost y\n11 1\n.end\n";
        let err = parse_blif(doc).unwrap_err();
        assert!(err.to_string().contains("no driver"));
    }

    #[test]
    fn combinational_cycle_rejected() {
        let doc = ".model m\n.inputs a\n.outputs y\n.names a y x\n11 1\n.names x y\n1 1\n.end\n";
        let err = parse_blif(doc).unwrap_err();
        assert!(err.to_string().contains("cycle"));
    }

    #[test]
    fn cycle_through_latch_is_fine() {
        assert!(parse_blif(COUNTER1).is_ok());
    }

    /// Second, structurally different evaluator: memoized recursion per
    /// cycle instead of a topological sweep.
    fn reference_eval(netlist: &LogicNetlist, vectors: &[Vec<bool>]) -> Vec<Vec<bool>> {
        fn eval(
            netlist: &LogicNetlist,
            sig: SigId,
            pi_vals: &HashMap<SigId, bool>,
            q_vals: &HashMap<SigId, bool>,
            memo: &mut HashMap<SigId, bool>,
        ) -> bool {
            if let Some(&v) = pi_vals.get(&sig) {
                return v;
            }
            if let Some(&v) = q_vals.get(&sig) {
                return v;
            }
            if let Some(&v) = memo.get(&sig) {
                return v;
            }
            let cell = netlist.cells.iter().find(|c| c.output == sig).expect("driver");
            let mut row = 0usize;
            for &i in &cell.inputs {
                row = (row << 1) | eval(netlist, i, pi_vals, q_vals, memo) as usize;
            }
            let v = cell.table[row];
            memo.insert(sig, v);
            v
        }

        let mut state: HashMap<SigId, bool> = netlist.latches.iter().map(|l| (l.q, l.init)).collect();
        let mut out = Vec::new();
        for vector in vectors {
            let pi_vals: HashMap<SigId, bool> =
                netlist.pis.iter().copied().zip(vector.iter().copied()).collect();
            let mut memo = HashMap::new();
            out.push(
                netlist
                    .pos
                    .iter()
                    .map(|&po| eval(netlist, po, &pi_vals, &state, &mut memo))
                    .collect::<Vec<bool>>(),
            );
            let next: Vec<(SigId, bool)> = netlist
                .latches
                .iter()
                .map(|l| (l.q, eval(netlist, l.d, &pi_vals, &state, &mut memo)))
                .collect();
            state = next.into_iter().collect();
        }
        out
    }

    #[test]
    fn random_netlists_match_reference_evaluator() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..5 {
            let netlist = crate::benchgen::random_blif(&mut rng, 20, 4, 3, &format!("r{trial}"));
            let parsed = parse_blif(&netlist).unwrap();
            let vectors: Vec<Vec<bool>> =
                (0..100).map(|_| (0..parsed.pis.len()).map(|_| rng.gen()).collect()).collect();
            let golden = simulate_golden(&parsed, &vectors).unwrap();
            let reference = reference_eval(&parsed, &vectors);
            assert_eq!(golden, reference);
        }
    }
}
