//! Benchmark inputs: random connected generator networks.

use ecmgrid_core::{DMatrix, GeneratorNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ring plus random chords, couplings in `[0.5, 2]`, machine constants in
/// `[0.01, 0.2]`.
pub fn random_network(n: usize, seed: u64) -> GeneratorNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = DMatrix::zeros(n, n);
    let couple = |l: &mut DMatrix<f64>, a: usize, b: usize, g: f64| {
        l[(a, b)] -= g;
        l[(b, a)] -= g;
        l[(a, a)] += g;
        l[(b, b)] += g;
    };
    for a in 0..n {
        let g = rng.random_range(0.5..2.0);
        couple(&mut l, a, (a + 1) % n, g);
    }
    for a in 0..n {
        for b in a + 2..n {
            if (a, b) != (0, n - 1) && rng.random_bool(0.2) {
                let g = rng.random_range(0.5..2.0);
                couple(&mut l, a, b, g);
            }
        }
    }
    let m = (0..n).map(|_| rng.random_range(0.01..0.2)).collect();
    let d = (0..n).map(|_| rng.random_range(0.01..0.2)).collect();
    GeneratorNetwork::new(m, d, l).expect("random network is valid")
}
