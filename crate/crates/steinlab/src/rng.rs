//! Reproducible random number streams.
//!
//! Every randomized operation in the crate takes a [`SeedSpec`]: a master
//! seed plus a stream id. The pair is mixed into a ChaCha key, so distinct
//! pairs give independent generators and the same pair always gives a
//! bit-identical one. The ChaCha stream (nonce) field is left free for
//! per-chunk substreams, which is what makes the Monte Carlo reductions
//! independent of worker count.
//!
//! Gaussian variates come from the Box–Muller transform with both values of
//! each pair consumed immediately: a vector of length `p` always costs
//! exactly `ceil(p/2)` uniform pairs, and no sampler state survives between
//! calls.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

/// The generator type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_id,
        }
    }

    /// The spec `offset` streams further along; used to hand out disjoint
    /// streams to the rows of a sweep or the parts of a report.
    pub fn offset(&self, offset: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self.master_seed,
            stream_id: self.stream_id.wrapping_add(offset),
        }
    }
}

/// SplitMix64 finalizer; bijective on u64.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Expands `(master_seed, stream_id)` into a 256-bit ChaCha key.
///
/// Words 0 and 2 are bijective images of the master seed and stream id, so
/// the map from pairs to keys is injective by construction.
fn key_for(master_seed: u64, stream_id: u64) -> [u8; 32] {
    let words = [
        mix(master_seed),
        mix(master_seed ^ 0x510E_527F_ADE6_82D1),
        mix(stream_id),
        mix(stream_id ^ 0x9B05_688C_2B3E_6C1F),
    ];
    let mut key = [0u8; 32];
    for (chunk, w) in key.iter_mut().zip(words.iter().flat_map(|w| w.to_le_bytes())) {
        *chunk = w;
    }
    key
}

/// Deterministically derives the generator for `(master_seed, stream_id)`.
///
/// The returned generator sits at ChaCha stream 0; callers that need many
/// parallel substreams under one `SeedSpec` use [`chunk_stream`].
pub fn derive_stream(master_seed: u64, stream_id: u64) -> Stream {
    ChaCha8Rng::from_seed(key_for(master_seed, stream_id))
}

/// The generator for chunk `chunk` of the work keyed by `seed`.
///
/// Chunks are ChaCha streams under the same key: guaranteed disjoint output
/// sequences, independent of how chunks are scheduled onto workers. Chunk 0
/// coincides with [`derive_stream`], so a `SeedSpec` handed to a chunked
/// operation should not also be used for ad-hoc draws.
pub fn chunk_stream(seed: SeedSpec, chunk: u64) -> Stream {
    let mut rng = ChaCha8Rng::from_seed(key_for(seed.master_seed, seed.stream_id));
    rng.set_stream(chunk);
    rng
}

/// One Box–Muller pair of independent standard normals.
#[inline]
fn normal_pair(rng: &mut Stream) -> (f64, f64) {
    // 1 - U maps [0,1) to (0,1]; ln is then finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Fills `out` with independent standard normals.
///
/// Consumes exactly `ceil(out.len()/2)` uniform pairs; for odd lengths the
/// second normal of the final pair is discarded, never cached.
pub fn fill_standard_normal(rng: &mut Stream, out: &mut [f64]) {
    let mut iter = out.chunks_exact_mut(2);
    for pair in &mut iter {
        let (z0, z1) = normal_pair(rng);
        pair[0] = z0;
        pair[1] = z1;
    }
    if let [last] = iter.into_remainder() {
        let (z0, _) = normal_pair(rng);
        *last = z0;
    }
}

/// Fills `out` with a draw from `N(mean, sigma^2 I)`.
#[inline]
pub(crate) fn fill_gaussian(rng: &mut Stream, mean: &[f64], sigma: f64, out: &mut [f64]) {
    debug_assert_eq!(mean.len(), out.len());
    fill_standard_normal(rng, out);
    for (o, m) in out.iter_mut().zip(mean) {
        *o = m + sigma * *o;
    }
}

/// One draw from the multivariate normal `N(mean, sigma^2 I)`.
pub fn sample_gaussian(rng: &mut Stream, mean: &Point, sigma: f64) -> Result<Point> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "gaussian scale sigma must be positive and finite, got {sigma}"
        )));
    }
    let mut out = vec![0.0; mean.dim()];
    fill_gaussian(rng, mean.as_slice(), sigma, &mut out);
    Ok(Point::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream_is_bit_identical() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        let xs: Vec<u64> = (0..100).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..100).map(|_| b.random()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn distinct_stream_ids_differ() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn distinct_master_seeds_differ() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(43, 0);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn chunk_streams_are_disjoint_from_each_other() {
        let seed = SeedSpec::new(7, 3);
        let mut a = chunk_stream(seed, 0);
        let mut b = chunk_stream(seed, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.random()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn uniform_moment_smoke_test() {
        // Mean of n uniforms has sd 1/sqrt(12 n); allow 4 sd.
        let mut rng = derive_stream(42, 7);
        let n = 10_000;
        let mean: f64 = (0..n).map(|_| rng.random::<f64>()).sum::<f64>() / n as f64;
        let bound = 4.0 / (12.0 * n as f64).sqrt();
        assert!((mean - 0.5).abs() < bound, "mean {mean} off by > {bound}");
    }

    #[test]
    fn gaussian_rejects_bad_sigma() {
        let mut rng = derive_stream(0, 0);
        let mean = Point::zeros(3);
        assert!(sample_gaussian(&mut rng, &mean, 0.0).is_err());
        assert!(sample_gaussian(&mut rng, &mean, -1.0).is_err());
        assert!(sample_gaussian(&mut rng, &mean, f64::NAN).is_err());
    }

    #[test]
    fn gaussian_tiny_sigma_approaches_mean() {
        let mut rng = derive_stream(0, 1);
        let mean = Point::new(vec![3.0, -2.0, 7.0]).unwrap();
        let x = sample_gaussian(&mut rng, &mean, 1e-300).unwrap();
        for (xi, mi) in x.as_slice().iter().zip(mean.as_slice()) {
            assert!((xi - mi).abs() < 1e-290);
        }
    }

    #[test]
    fn gaussian_squared_norm_concentrates() {
        // ||Z||^2 ~ chi^2_p: mean p, sd sqrt(2p); allow 5 sd.
        let p = 10_000;
        let mut rng = derive_stream(1, 2);
        let mean = Point::zeros(p);
        let x = sample_gaussian(&mut rng, &mean, 1.0).unwrap();
        let n2: f64 = crate::point::norm2_slice(x.as_slice());
        let slack = 5.0 * (2.0 * p as f64).sqrt();
        assert!(n2 > p as f64 - slack && n2 < p as f64 + slack);
    }

    #[test]
    fn gaussian_sample_mean_obeys_clt() {
        let n = 100_000;
        let mean = Point::new(vec![5.0, 5.0, 5.0]).unwrap();
        let mut rng = derive_stream(9, 0);
        let mut acc = [0.0f64; 3];
        for _ in 0..n {
            let x = sample_gaussian(&mut rng, &mean, 2.0).unwrap();
            for (a, xi) in acc.iter_mut().zip(x.as_slice()) {
                *a += xi;
            }
        }
        // Per coordinate: SE = sigma / sqrt(n).
        let per_coord = 4.0 * 2.0 / (n as f64).sqrt();
        for a in acc {
            assert!((a / n as f64 - 5.0).abs() < per_coord);
        }
        // Grand mean over all 3n coordinates: SE = sigma / sqrt(3n).
        let grand = acc.iter().sum::<f64>() / (3.0 * n as f64);
        assert!((grand - 5.0).abs() < 4.0 * 2.0 / (3.0 * n as f64).sqrt());
    }
}
