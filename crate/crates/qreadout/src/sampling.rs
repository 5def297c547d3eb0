//! Seeded random streams and multinomial shot sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

/// Random stream type used throughout the crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a task path.
///
/// Independent tasks (repeats, abscissa points, coefficients) each get their
/// own stream so results do not depend on scheduling order.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Creates the random stream for `seed` and task `path`.
pub fn rng_for(seed: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, path))
}

/// Draws a multinomial sample of `shots` over the given bin probabilities.
///
/// The probabilities may sum to less than one; the remaining mass is an
/// implicit unrecorded bin (outcomes that are discarded by post-selection).
/// Bins are filled by sequential conditional binomials, which is exact and
/// linear in the number of bins.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, shots: u64, probs: &[f64]) -> Vec<u64> {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let mut remaining_mass = total + (1.0 - total).max(0.0);
    let mut remaining = shots;
    let mut out = vec![0u64; probs.len()];
    for (slot, &p) in out.iter_mut().zip(probs) {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if p == 0.0 {
            continue;
        }
        let q = if remaining_mass <= p {
            1.0
        } else {
            (p / remaining_mass).clamp(0.0, 1.0)
        };
        let k = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("binomial parameters are in range")
                .sample(rng)
        };
        *slot = k;
        remaining -= k;
        remaining_mass -= p;
    }
    out
}

/// Draws a single binomial count.
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if n == 0 || p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("binomial parameters are in range").sample(rng)
}
