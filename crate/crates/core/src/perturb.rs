//! Suboptimal encoders by row shuffling: a seeded subset of meanings swap
//! their q(w|m) rows among themselves, so the output rows are always a
//! permutation of the input rows.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::info::Encoder;
use crate::scalar::Scalar;

/// How to shuffle: the fraction of meanings to select and the generator
/// seed. The generator is ChaCha8 seeded with `seed`; selection uses
/// Floyd-style index sampling and the permutation is a Fisher-Yates pass,
/// so identical specs reproduce identical outputs on any platform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShuffleSpec {
    /// Percentage of meanings to shuffle, in (0, 100].
    pub percentage: f64,
    pub seed: u64,
}

impl ShuffleSpec {
    pub fn new(percentage: f64, seed: u64) -> Result<Self> {
        if !(percentage > 0.0 && percentage <= 100.0) {
            return Err(Error::Parameter(format!(
                "shuffle percentage must be in (0, 100], got {percentage}"
            )));
        }
        Ok(Self { percentage, seed })
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Per-item seed stream: fold the part indices into the master seed with
/// the SplitMix64 finalizer,
/// `state_0 = mix64(master ^ GOLDEN)`, `state_i = mix64(state_{i-1} + GOLDEN + part_i)`,
/// where GOLDEN = 0x9e3779b97f4a7c15. Documented so suites are portable
/// across implementations of the same generator.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = mix64(master ^ GOLDEN);
    for &p in parts {
        state = mix64(state.wrapping_add(GOLDEN).wrapping_add(p));
    }
    state
}

/// Shuffles the selected meanings' rows. Selects ceil(percentage/100 * |M|)
/// distinct meanings uniformly at random and applies a uniform random
/// permutation to their rows; unselected rows stay fixed. When the selection
/// would be fewer than two rows the input is returned unchanged. At a full
/// 100% shuffle the identity permutation is resampled, so the output is
/// guaranteed to differ.
pub fn shuffle_encoder<S: Scalar>(enc: &Encoder<S>, spec: &ShuffleSpec) -> Result<Encoder<S>> {
    ShuffleSpec::new(spec.percentage, spec.seed)?;
    let n_m = enc.n_meanings();
    let k = ((spec.percentage / 100.0) * n_m as f64).ceil() as usize;
    let k = k.min(n_m);
    if k < 2 {
        return Ok(enc.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let selected = rand::seq::index::sample(&mut rng, n_m, k).into_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(&mut rng);
    if spec.percentage == 100.0 && n_m >= 2 {
        while perm.iter().enumerate().all(|(i, &p)| i == p) {
            perm.shuffle(&mut rng);
        }
    }

    let mut weights = enc.weights().clone();
    for (i, &target) in selected.iter().enumerate() {
        let source = selected[perm[i]];
        for w in 0..enc.n_words() {
            weights[(target, w)] = enc.weights()[(source, w)];
        }
    }
    Encoder::new(weights)
}

/// One shuffled encoder of a generated suite.
#[derive(Debug, Clone)]
pub struct SuiteItem<S: Scalar> {
    /// Index of the source encoder in the input list.
    pub source_index: usize,
    pub percentage: f64,
    /// Repetition index within (source, percentage), 0-based.
    pub rep: usize,
    pub seed: u64,
    pub encoder: Encoder<S>,
}

/// Generates `per_setting` shuffles of every source encoder at every
/// percentage. Item seeds derive deterministically from the master seed via
/// [`derive_seed`] with parts (source index, percentage index, repetition).
pub fn generate_suite<S: Scalar>(
    encoders: &[Encoder<S>],
    percentages: &[f64],
    per_setting: usize,
    master_seed: u64,
) -> Result<Vec<SuiteItem<S>>> {
    if encoders.is_empty() {
        return Err(Error::Parameter("suite needs at least one source encoder".into()));
    }
    let mut out = Vec::with_capacity(encoders.len() * percentages.len() * per_setting);
    for (ei, enc) in encoders.iter().enumerate() {
        for (pi, &pct) in percentages.iter().enumerate() {
            for rep in 0..per_setting {
                let seed = derive_seed(master_seed, &[ei as u64, pi as u64, rep as u64]);
                let spec = ShuffleSpec::new(pct, seed)?;
                out.push(SuiteItem {
                    source_index: ei,
                    percentage: pct,
                    rep,
                    seed,
                    encoder: shuffle_encoder(enc, &spec)?,
                });
            }
        }
    }
    Ok(out)
}

/// The ten shuffle percentages used by the experiments: 10% to 100% in 10%
/// increments.
pub fn default_percentages() -> Vec<f64> {
    (1..=10).map(|i| (i * 10) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_base, BaseEnvironment};
    use crate::info::complexity;
    use ndarray::Array2;
    use rand::Rng;

    fn random_encoder(n_m: usize, n_w: usize, seed: u64) -> Encoder<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Array2::zeros((n_m, n_w));
        for m in 0..n_m {
            let mut sum = 0.0;
            for j in 0..n_w {
                let v: f64 = rng.gen::<f64>() + 1e-3;
                w[(m, j)] = v;
                sum += v;
            }
            for j in 0..n_w {
                w[(m, j)] /= sum;
            }
        }
        Encoder::new(w).unwrap()
    }

    fn sorted_rows(enc: &Encoder<f64>) -> Vec<Vec<u64>> {
        let mut rows: Vec<Vec<u64>> = enc
            .weights()
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        rows.sort();
        rows
    }

    #[test]
    fn shuffling_preserves_the_row_multiset_exactly() {
        let enc = random_encoder(11, 4, 7);
        for pct in [20.0, 50.0, 100.0] {
            let out = shuffle_encoder(&enc, &ShuffleSpec::new(pct, 99).unwrap()).unwrap();
            assert_eq!(sorted_rows(&enc), sorted_rows(&out), "pct {pct}");
        }
    }

    #[test]
    fn tiny_selection_returns_the_input_unchanged() {
        let enc = random_encoder(11, 4, 3);
        // 5% of 11 meanings selects ceil(0.55) = 1 row: nothing to permute.
        let out = shuffle_encoder(&enc, &ShuffleSpec::new(5.0, 1).unwrap()).unwrap();
        assert_eq!(enc.weights(), out.weights());
    }

    #[test]
    fn full_shuffle_never_returns_the_identity_permutation() {
        let enc = random_encoder(6, 3, 11);
        for seed in 0..50 {
            let out = shuffle_encoder(&enc, &ShuffleSpec::new(100.0, seed).unwrap()).unwrap();
            assert_ne!(enc.weights(), out.weights(), "seed {seed}");
        }
    }

    #[test]
    fn shuffle_is_deterministic_in_the_spec() {
        let enc = random_encoder(11, 5, 21);
        let spec = ShuffleSpec::new(40.0, 1234).unwrap();
        let a = shuffle_encoder(&enc, &spec).unwrap();
        let b = shuffle_encoder(&enc, &spec).unwrap();
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn uniform_prior_complexity_is_invariant_under_shuffling() {
        let env = build_base::<f64>(BaseEnvironment::Cpum);
        let enc = random_encoder(11, 4, 5);
        let base = complexity(&env, &enc).unwrap();
        for seed in 0..10 {
            let out = shuffle_encoder(&enc, &ShuffleSpec::new(70.0, seed).unwrap()).unwrap();
            let c = complexity(&env, &out).unwrap();
            assert!((c - base).abs() < 1e-12, "seed {seed}: {base} vs {c}");
        }
    }

    #[test]
    fn suite_counts_and_determinism() {
        let encoders = vec![random_encoder(11, 4, 1), random_encoder(11, 4, 2)];
        let pcts = default_percentages();
        let a = generate_suite(&encoders, &pcts, 1, 42).unwrap();
        assert_eq!(a.len(), 2 * 10);
        for item in &a {
            assert_eq!(
                sorted_rows(&encoders[item.source_index]),
                sorted_rows(&item.encoder)
            );
        }
        let b = generate_suite(&encoders, &pcts, 1, 42).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.encoder.weights(), y.encoder.weights());
        }
        // A different master seed produces a different suite.
        let c = generate_suite(&encoders, &pcts, 1, 43).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.encoder.weights() != y.encoder.weights()));
        assert!(generate_suite::<f64>(&[], &pcts, 1, 42).is_err());
    }

    #[test]
    fn invalid_percentages_are_rejected() {
        assert!(ShuffleSpec::new(0.0, 1).is_err());
        assert!(ShuffleSpec::new(-5.0, 1).is_err());
        assert!(ShuffleSpec::new(100.1, 1).is_err());
        assert!(ShuffleSpec::new(100.0, 1).is_ok());
    }

    #[test]
    fn derive_seed_is_order_sensitive() {
        let a = derive_seed(42, &[1, 2, 3]);
        let b = derive_seed(42, &[3, 2, 1]);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, &[1, 2, 3]));
    }
}
