use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::labeling::with_optimal_outputs;
use crate::robp::{Alphabet, Outputs, Robp};

/// Fraction of layers forced to width one, so that labels merge often.
const NARROW_LAYER_PROB: f64 = 0.3;

/// A random valid program of width at most `w`, determined by `seed`.
/// Unreachable vertices are pruned and outputs are label midpoints.
pub fn random_robp(n: usize, alphabet: Alphabet, w: usize, seed: u64) -> Robp {
    assert!(w >= 1, "width must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = alphabet.size();
    let mut sizes = vec![1usize];
    for _ in 0..n {
        let size = if rng.gen_bool(NARROW_LAYER_PROB) {
            1
        } else {
            rng.gen_range(1..=w)
        };
        sizes.push(size);
    }
    let edges = (0..n)
        .map(|t| {
            (0..sizes[t] * sigma)
                .map(|_| rng.gen_range(0..sizes[t + 1]) as u32)
                .collect()
        })
        .collect();
    let raw = Robp::from_parts(n, alphabet, sizes, edges, Outputs::new(alphabet.arity()));
    let pruned = raw.prune_unreachable().expect("edges stay inside their layers");
    with_optimal_outputs(&pruned).expect("pruned programs are valid").0
}
