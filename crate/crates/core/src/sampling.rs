//! Data generation from a ground-truth network.
//!
//! All draws come from ChaCha8 seeded with `seed`, split into independent
//! streams:
//!
//! * [`forward_sample`] gives variable `i` (declaration index) stream `i`.
//!   Row `r` consumes the `r`-th uniform of each stream, so with a fixed
//!   seed a smaller sample is always a prefix of a larger one.
//! * [`per_row_sample`] gives CPT row `r` of variable `i` stream
//!   `offset(i) + r`, where `offset(i)` is the number of CPT rows of the
//!   variables declared before `i`.
//!
//! A categorical draw takes one uniform `u` in `[0, 1)` and returns the first
//! state whose cumulative probability (canonical state order) exceeds `u`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bn::{Distribution, Network};
use crate::dataset::{columns_of, CountTable, Dataset};
use crate::scalar::Prob;

/// Inverse-CDF draw. Never returns a zero-probability state.
pub fn categorical<T: Prob>(row: &Distribution<T>, u: f64) -> usize {
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, p) in row.probs().iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            cum += p;
            last_positive = i;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `n` complete rows drawn ancestrally in topological order.
pub fn forward_sample<T: Prob>(net: &Network<T>, n: usize, seed: u64) -> Dataset {
    let s = net.structure();
    let mut streams: Vec<ChaCha8Rng> = (0..s.len()).map(|i| stream(seed, i as u64)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut assignment = vec![0usize; s.len()];
    for _ in 0..n {
        for &id in s.topological_order() {
            let r = s.row_index(id, &assignment);
            let u: f64 = streams[id].random();
            assignment[id] = categorical(net.row(id, r), u);
        }
        rows.push(assignment.clone());
    }
    Dataset::from_parts_unchecked(columns_of(s), rows)
}

/// Draws directly from every CPT row: `k` samples per row, or `k * m` when
/// `scaled` (m = the child's state count).
pub fn per_row_sample<T: Prob>(net: &Network<T>, k: u64, scaled: bool, seed: u64) -> CountTable {
    let s = net.structure();
    let mut table = CountTable::zeros(s);
    let mut offset = 0u64;
    for id in 0..s.len() {
        let m = s.cardinality(id) as u64;
        let draws = if scaled { k * m } else { k };
        for r in 0..s.row_count(id) {
            let mut rng = stream(seed, offset + r as u64);
            let row = net.row(id, r);
            for _ in 0..draws {
                let state = categorical(row, rng.random());
                table.add(id, r, state, 1);
            }
        }
        offset += s.row_count(id) as u64;
    }
    table
}

/// Deterministic seed derivation (SplitMix64 over `base` and `tags`).
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}
