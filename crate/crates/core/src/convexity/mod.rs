//! Degree of convexity for hard index sets and quasi-convexity for
//! probability distributions over embedded domains.
//!
//! The hard measure of a member set X is |X| divided by the number of
//! embedded domain points inside the convex hull of X. The quasi-convexity
//! of a distribution averages the hard measure over its level sets with a
//! finite-sum mesh; an encoder is scored by the q(w)-weighted average of its
//! conditional distributions.

mod hull;

use ndarray::ArrayView1;

use crate::env::{Embedding, Environment, NORMALIZATION_TOL};
use crate::error::{Error, Result};
use crate::info::{marginals, Encoder, Marginals};
use crate::scalar::Scalar;

/// Words whose marginal mass falls below this are skipped when scoring.
pub const UNUSED_WORD_TOL: f64 = 1e-12;

/// One level set of a distribution: the indices whose mass reaches the
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet<S: Scalar> {
    pub threshold: S,
    pub members: Vec<usize>,
}

/// Computes { x : p(x) >= threshold }.
pub fn level_set<S: Scalar>(p: ArrayView1<S>, threshold: S) -> LevelSet<S> {
    LevelSet {
        threshold,
        members: p
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= threshold)
            .map(|(i, _)| i)
            .collect(),
    }
}

/// Which conditional family of an encoder to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// q(m|w) over the meaning embedding.
    Meaning,
    /// q(u|w) over the referent embedding.
    Referent,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Meaning => "meaning",
            Side::Referent => "referent",
        }
    }
}

/// Per-word contribution to an encoder's convexity score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordConvexity<S: Scalar> {
    pub word: usize,
    /// Marginal q(w) weighting this word.
    pub weight: S,
    pub dcon: S,
}

/// Quasi-convexity of an encoder with its per-word breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityScore<S: Scalar> {
    pub value: S,
    pub steps: usize,
    pub per_word: Vec<WordConvexity<S>>,
}

/// Degree of convexity of a hard member set: |X| over the number of domain
/// points inside ConvexHull(X).
pub fn hard_convexity<S: Scalar>(members: &[usize], embedding: &Embedding<S>) -> Result<S> {
    if members.is_empty() {
        return Err(Error::EmptySet);
    }
    if members.iter().any(|&i| i >= embedding.len()) {
        return Err(Error::Parameter(format!(
            "member index out of range for embedding of {} points",
            embedding.len()
        )));
    }
    let count = hull::count_in_hull(&embedding.coords_f64(), members);
    Ok(S::of_usize(members.len()) / S::of_usize(count))
}

/// Finite-sum quasi-convexity of a distribution over an embedded domain.
///
/// Thresholds are i * max(p) / steps for i = 1..steps; each contributes
/// hard_convexity of its level set weighted by 1/steps. An empty level set
/// (reachable only through floating-point threshold overshoot on finite
/// domains) contributes the full mesh weight, as the finite-sum rule states.
pub fn dcon<S: Scalar>(p: ArrayView1<S>, embedding: &Embedding<S>, steps: usize) -> Result<S> {
    if steps < 1 {
        return Err(Error::Parameter("dcon needs steps >= 1".into()));
    }
    if p.len() != embedding.len() {
        return Err(Error::DimensionMismatch {
            what: "distribution length vs embedding",
            expected: embedding.len(),
            got: p.len(),
        });
    }
    if p.iter().any(|v| *v < S::zero() || !v.is_finite()) {
        return Err(Error::Parameter("distribution has negative or non-finite entries".into()));
    }
    let total: S = p.iter().copied().sum();
    if (total - S::one()).abs() > S::of_f64(NORMALIZATION_TOL) {
        return Err(Error::NotNormalized {
            what: "dcon input distribution".into(),
            sum: total.as_f64(),
        });
    }
    let max = p.iter().copied().fold(S::zero(), S::max);
    if max <= S::zero() {
        return Err(Error::Parameter("dcon input is the zero vector".into()));
    }

    // Level sets are nested: sorting the mass descending turns each
    // threshold into a prefix, so the hull count is computed once per
    // distinct prefix length.
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).expect("finite mass"));
    let sorted: Vec<S> = order.iter().map(|&i| p[i]).collect();
    let coords = embedding.coords_f64();

    let mesh = S::one() / S::of_usize(steps);
    let level = max / S::of_usize(steps);
    let mut ratio_by_len: Vec<Option<S>> = vec![None; p.len() + 1];
    let mut qc = S::zero();
    for i in 1..=steps {
        let t = level * S::of_usize(i);
        let k = sorted.partition_point(|&v| v >= t);
        if k == 0 {
            qc += mesh;
            continue;
        }
        let ratio = match ratio_by_len[k] {
            Some(r) => r,
            None => {
                let r = if k == p.len() {
                    S::one() // the hull of the whole domain is the domain
                } else {
                    let count = hull::count_in_hull(&coords, &order[..k]);
                    S::of_usize(k) / S::of_usize(count)
                };
                ratio_by_len[k] = Some(r);
                r
            }
        };
        qc += mesh * ratio;
    }
    Ok(qc)
}

/// Quasi-convexity of an encoder: the q(w)-weighted average of dcon over the
/// chosen conditional family. Words with marginal mass below 1e-12 are
/// skipped and contribute no weight.
pub fn encoder_convexity<S: Scalar>(
    env: &Environment<S>,
    enc: &Encoder<S>,
    side: Side,
    steps: usize,
) -> Result<ConvexityScore<S>> {
    let marg = marginals(env, enc)?;
    convexity_from_marginals(env, &marg, side, steps)
}

/// Same as [`encoder_convexity`] but reusing precomputed marginals.
pub fn convexity_from_marginals<S: Scalar>(
    env: &Environment<S>,
    marg: &Marginals<S>,
    side: Side,
    steps: usize,
) -> Result<ConvexityScore<S>> {
    let (table, embedding) = match side {
        Side::Meaning => (&marg.meaning_given_word, env.meaning_embedding()),
        Side::Referent => (&marg.referent_given_word, env.referent_embedding()),
    };
    let unused = S::of_f64(UNUSED_WORD_TOL);
    let mut per_word = Vec::new();
    let mut value = S::zero();
    for (w, row) in table.rows().into_iter().enumerate() {
        let weight = marg.word[w];
        if weight < unused {
            continue;
        }
        let d = dcon(row, embedding, steps)?;
        value += weight * d;
        per_word.push(WordConvexity {
            word: w,
            weight,
            dcon: d,
        });
    }
    Ok(ConvexityScore {
        value,
        steps,
        per_word,
    })
}
