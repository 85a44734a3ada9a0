//! Exact random points in a box, for the sampling diagnostic.

use num_bigint::BigInt;
use rand::Rng;

use crate::formula::InputBox;
use crate::rational::Rational;

const GRID: u64 = 1 << 32;

/// A point with every coordinate on the `2^32`-step grid of its interval,
/// endpoints included.
pub fn random_point<R: Rng>(b: &InputBox, rng: &mut R) -> Vec<Rational> {
    b.bounds()
        .iter()
        .map(|(lo, hi)| {
            let k = rng.gen_range(0..=GRID);
            lo + (hi - lo) * Rational::new(BigInt::from(k), BigInt::from(GRID))
        })
        .collect()
}
