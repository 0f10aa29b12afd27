//! Random LUT-network benchmark generation for sweeps and tests.

use rand::Rng;

/// Emits a random acyclic LUT network as BLIF text: `luts` cells with fanin
/// up to `max_fanin`, around one latch per five cells (init 0), `pos`
/// primary outputs. Deterministic for a given RNG state.
pub fn random_blif<R: Rng>(rng: &mut R, luts: usize, max_fanin: usize, pos: usize, name: &str) -> String {
    let n_pi = max_fanin.max(2);
    let mut text = String::new();
    text.push_str(&format!(".model {name}\n.inputs"));
    let mut pool: Vec<String> = (0..n_pi).map(|i| format!("pi{i}")).collect();
    for pi in &pool {
        text.push_str(&format!(" {pi}"));
    }
    text.push('\n');

    let mut body = String::new();
    let mut cell_outputs: Vec<String> = Vec::new();
    for j in 0..luts {
        let fanin = rng.gen_range(1..=max_fanin.min(pool.len()));
        let mut inputs = Vec::with_capacity(fanin);
        while inputs.len() < fanin {
            // Bias toward recent signals so depth actually builds up.
            let idx = if rng.gen_bool(0.5) && pool.len() > 4 {
                rng.gen_range(pool.len() - 4..pool.len())
            } else {
                rng.gen_range(0..pool.len())
            };
            if !inputs.contains(&pool[idx]) {
                inputs.push(pool[idx].clone());
            }
        }
        let out = format!("n{j}");
        body.push_str(&format!(".names {} {out}\n", inputs.join(" ")));
        let rows = 1usize << inputs.len();
        let mut any = false;
        for row in 0..rows {
            if rng.gen_bool(0.5) {
                any = true;
                let bits: String = (0..inputs.len())
                    .map(|i| if (row >> (inputs.len() - 1 - i)) & 1 == 1 { '1' } else { '0' })
                    .collect();
                body.push_str(&format!("{bits} 1\n"));
            }
        }
        if !any {
            // Avoid constant-0 cells; keep at least one on-row.
            let bits: String = std::iter::repeat('1').take(inputs.len()).collect();
            body.push_str(&format!("{bits} 1\n"));
        }
        if rng.gen_bool(0.2) {
            let q = format!("q{j}");
            body.push_str(&format!(".latch {out} {q} re clk 0\n"));
            pool.push(q);
        } else {
            pool.push(out.clone());
        }
        cell_outputs.push(out);
    }

    let n_pos = pos.clamp(1, cell_outputs.len());
    let outs: Vec<String> = cell_outputs[cell_outputs.len() - n_pos..].to_vec();
    text.push_str(&format!(".outputs {}\n", outs.join(" ")));
    text.push_str(&body);
    text.push_str(".end\n");
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generated_benchmarks_parse_and_simulate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for luts in [5, 20, 40] {
            let text = random_blif(&mut rng, luts, 4, 3, "gen");
            let netlist = crate::blif::parse_blif(&text).unwrap();
            assert_eq!(netlist.cells.len(), luts);
            let vectors: Vec<Vec<bool>> =
                (0..8).map(|_| (0..netlist.pis.len()).map(|_| rng.gen()).collect()).collect();
            crate::blif::simulate_golden(&netlist, &vectors).unwrap();
        }
    }

    #[test]
    fn generation_is_rng_deterministic() {
        let a = random_blif(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7), 10, 4, 2, "g");
        let b = random_blif(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7), 10, 4, 2, "g");
        assert_eq!(a, b);
    }
}
