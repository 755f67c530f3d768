//! Deterministic sample points: a Halton sequence with a seeded
//! Cranley–Patterson shift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_POINTS: usize = 20;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % b) as f64 * scale;
        index /= b;
        scale *= inv;
    }
    out
}

/// `count` points in the box `ranges`; the same seed always gives the same points.
pub fn halton_points(ranges: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(
        ranges.len() <= PRIMES.len(),
        "too many coordinates for the sampler"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<f64> = ranges.iter().map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            ranges
                .iter()
                .zip(&shifts)
                .zip(PRIMES)
                .map(|(((lo, hi), shift), base)| {
                    let u = (radical_inverse(i, base) + shift).fract();
                    lo + u * (hi - lo)
                })
                .collect()
        })
        .collect()
}

/// Sampling box for a model's coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    pub ranges: Vec<(f64, f64)>,
}

impl SampleSpec {
    /// Homogeneous models are evaluated at a single (empty) point.
    pub fn points(&self) -> Vec<Vec<f64>> {
        if self.ranges.is_empty() {
            return vec![Vec::new()];
        }
        halton_points(&self.ranges, self.count, self.seed)
    }
}

/// Cone radii: `r = −1` first, then low-discrepancy values in `[lo, hi]`.
pub fn cone_radii(count: usize, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![-1.0];
    if count > 1 {
        out.extend(
            halton_points(&[(lo, hi)], count - 1, seed ^ 0x5eed)
                .into_iter()
                .map(|p| p[0]),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0);
    }

    #[test]
    fn points_are_reproducible_and_in_range() {
        let ranges = [(-1.0, 1.0), (0.0, 0.5), (-2.0, -1.0)];
        let a = halton_points(&ranges, 20, 7);
        let b = halton_points(&ranges, 20, 7);
        assert_eq!(a, b);
        assert_ne!(a, halton_points(&ranges, 20, 8));
        for p in &a {
            for (x, (lo, hi)) in p.iter().zip(ranges) {
                assert!(*x >= lo && *x <= hi);
            }
        }
    }

    #[test]
    fn cone_radii_include_minus_one() {
        let r = cone_radii(4, 42, -2.0, -0.5);
        assert_eq!(r[0], -1.0);
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|&x| (-2.0..=-0.5).contains(&x)));
    }
}
