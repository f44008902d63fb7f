//! Information-theoretic quantities: complexity I(M;W), accuracy I(W;U),
//! the trade-off objective, and distance-to-frontier optimality.
//!
//! All logarithms are base 2 and 0·log 0 = 0 throughout.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::env::{Environment, NORMALIZATION_TOL};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A speaker: one row-stochastic distribution q(w|m) per meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder<S: Scalar> {
    weights: Array2<S>, // n_meanings x n_words
}

impl<S: Scalar> Encoder<S> {
    /// Validates row-stochasticity (each row sums to 1 within 1e-9, entries
    /// in [0, 1]) and wraps the table.
    pub fn new(weights: Array2<S>) -> Result<Self> {
        let tol = S::of_f64(NORMALIZATION_TOL);
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Parameter("encoder table must be non-empty".into()));
        }
        for (m, row) in weights.rows().into_iter().enumerate() {
            if row.iter().any(|q| *q < S::zero() || *q > S::one() + tol || !q.is_finite()) {
                return Err(Error::Parameter(format!("encoder row {m} has entries outside [0, 1]")));
            }
            let s: S = row.iter().copied().sum();
            if (s - S::one()).abs() > tol {
                return Err(Error::NotNormalized {
                    what: format!("encoder row {m}"),
                    sum: s.as_f64(),
                });
            }
        }
        Ok(Self { weights })
    }

    /// One unique word per meaning.
    pub fn identity(n_meanings: usize) -> Self {
        let mut w = Array2::zeros((n_meanings, n_meanings));
        for m in 0..n_meanings {
            w[(m, m)] = S::one();
        }
        Self { weights: w }
    }

    /// Every meaning maps to the same single word.
    pub fn single_word(n_meanings: usize) -> Self {
        Self {
            weights: Array2::from_elem((n_meanings, 1), S::one()),
        }
    }

    pub fn n_meanings(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_words(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<S> {
        &self.weights
    }

    /// Drops the given word columns and renormalizes each row. Used by the
    /// solver to remove words whose marginal probability has vanished.
    pub(crate) fn drop_words(&self, keep: &[usize]) -> Result<Self> {
        let mut w = Array2::zeros((self.n_meanings(), keep.len()));
        for (new_w, &old_w) in keep.iter().enumerate() {
            for m in 0..self.n_meanings() {
                w[(m, new_w)] = self.weights[(m, old_w)];
            }
        }
        for m in 0..self.n_meanings() {
            let s: S = w.row(m).iter().copied().sum();
            if s <= S::zero() {
                return Err(Error::DegenerateRow { meaning: m });
            }
            for v in w.row_mut(m) {
                *v /= s;
            }
        }
        Ok(Self { weights: w })
    }
}

/// Marginal and conditional distributions induced by an encoder.
///
/// Words with q(w) = 0 are unused: their conditional rows are all zeros.
#[derive(Debug, Clone)]
pub struct Marginals<S: Scalar> {
    /// q(w) = sum_m p(m) q(w|m)
    pub word: Array1<S>,
    /// q(m|w) by Bayes' rule; one row per word.
    pub meaning_given_word: Array2<S>,
    /// q(u|w) by marginalization over meanings; one row per word.
    pub referent_given_word: Array2<S>,
    /// p(u) = sum_m p(m) p(u|m)
    pub referent: Array1<S>,
}

impl<S: Scalar> Marginals<S> {
    pub fn is_used(&self, w: usize) -> bool {
        self.word[w] > S::zero()
    }
}

/// Computes all marginals for an encoder over an environment.
pub fn marginals<S: Scalar>(env: &Environment<S>, enc: &Encoder<S>) -> Result<Marginals<S>> {
    if enc.n_meanings() != env.n_meanings() {
        return Err(Error::DimensionMismatch {
            what: "encoder rows vs environment meanings",
            expected: env.n_meanings(),
            got: enc.n_meanings(),
        });
    }
    let prior = env.prior();
    let word = enc.weights().t().dot(prior);

    let n_w = enc.n_words();
    let n_m = env.n_meanings();
    let mut meaning_given_word = Array2::zeros((n_w, n_m));
    for w in 0..n_w {
        let qw = word[w];
        if qw > S::zero() {
            for m in 0..n_m {
                meaning_given_word[(w, m)] = prior[m] * enc.weights()[(m, w)] / qw;
            }
        }
    }
    let referent_given_word = meaning_given_word.dot(env.kernels());
    let referent = env.kernels().t().dot(prior);
    Ok(Marginals {
        word,
        meaning_given_word,
        referent_given_word,
        referent,
    })
}

/// Mutual information (bits) of a joint probability table.
pub fn mutual_information<S: Scalar>(joint: &Array2<S>) -> Result<S> {
    let tol = S::of_f64(NORMALIZATION_TOL);
    if joint.iter().any(|p| *p < S::zero() || !p.is_finite()) {
        return Err(Error::Parameter("joint table has negative or non-finite entries".into()));
    }
    let total: S = joint.iter().copied().sum();
    if (total - S::one()).abs() > tol {
        return Err(Error::NotNormalized {
            what: "joint table".into(),
            sum: total.as_f64(),
        });
    }
    let row_sums: Vec<S> = joint.rows().into_iter().map(|r| r.iter().copied().sum()).collect();
    let col_sums: Vec<S> = joint
        .columns()
        .into_iter()
        .map(|c| c.iter().copied().sum())
        .collect();
    let mut mi = S::zero();
    for (i, row) in joint.rows().into_iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > S::zero() {
                mi += p * (p / (row_sums[i] * col_sums[j])).log2();
            }
        }
    }
    // Rounding can leave a tiny negative residue; clamp to the valid range.
    Ok(mi.max(S::zero()))
}

/// Complexity I(M;W): mutual information of the joint p(m) q(w|m).
pub fn complexity<S: Scalar>(env: &Environment<S>, enc: &Encoder<S>) -> Result<S> {
    let marg = marginals(env, enc)?;
    complexity_from(env, enc, &marg)
}

/// Accuracy I(W;U): mutual information of the joint q(w) q(u|w).
pub fn accuracy<S: Scalar>(env: &Environment<S>, enc: &Encoder<S>) -> Result<S> {
    let marg = marginals(env, enc)?;
    accuracy_from(&marg)
}

pub(crate) fn complexity_from<S: Scalar>(
    env: &Environment<S>,
    enc: &Encoder<S>,
    _marg: &Marginals<S>,
) -> Result<S> {
    let prior = env.prior();
    let mut joint = enc.weights().clone();
    for (m, mut row) in joint.rows_mut().into_iter().enumerate() {
        let pm = prior[m];
        for v in row.iter_mut() {
            *v *= pm;
        }
    }
    mutual_information(&joint)
}

pub(crate) fn accuracy_from<S: Scalar>(marg: &Marginals<S>) -> Result<S> {
    let mut joint = marg.referent_given_word.clone();
    for (w, mut row) in joint.rows_mut().into_iter().enumerate() {
        let qw = marg.word[w];
        for v in row.iter_mut() {
            *v *= qw;
        }
    }
    mutual_information(&joint)
}

/// Complexity, accuracy, and optional annotations for one encoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsPoint<S: Scalar> {
    pub complexity: S,
    pub accuracy: S,
    pub beta: Option<S>,
    pub optimality: Option<S>,
}

/// Computes complexity and accuracy together from one marginalization pass.
pub fn metrics<S: Scalar>(env: &Environment<S>, enc: &Encoder<S>) -> Result<MetricsPoint<S>> {
    let marg = marginals(env, enc)?;
    Ok(MetricsPoint {
        complexity: complexity_from(env, enc, &marg)?,
        accuracy: accuracy_from(&marg)?,
        beta: None,
        optimality: None,
    })
}

/// The trade-off objective F_beta = I(M;W) - beta * I(W;U).
pub fn ib_objective<S: Scalar>(env: &Environment<S>, enc: &Encoder<S>, beta: S) -> Result<S> {
    if beta < S::zero() {
        return Err(Error::Parameter(format!("beta must be nonnegative, got {beta}")));
    }
    let m = metrics(env, enc)?;
    Ok(m.complexity - beta * m.accuracy)
}

/// Negative Euclidean distance (bits, unweighted axes) from a point to the
/// nearest point on the estimated frontier. Frontier members score 0.
pub fn optimality<S: Scalar>(point: &MetricsPoint<S>, frontier: &[MetricsPoint<S>]) -> Result<S> {
    if frontier.is_empty() {
        return Err(Error::EmptyFrontier);
    }
    let mut best = S::infinity();
    for f in frontier {
        let dc = point.complexity - f.complexity;
        let da = point.accuracy - f.accuracy;
        let d = (dc * dc + da * da).sqrt();
        if d < best {
            best = d;
        }
    }
    Ok(if best == S::zero() { S::zero() } else { -best })
}

// ---------------------------------------------------------------------------
// JSON interchange for encoders
// ---------------------------------------------------------------------------

/// Double-precision JSON form of an encoder table.
#[derive(Debug, Serialize, Deserialize)]
pub struct EncoderJson {
    pub n_meanings: usize,
    pub n_words: usize,
    /// Words used by the encoder, when it came from natural-language data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl<S: Scalar> Encoder<S> {
    pub fn to_json(&self) -> EncoderJson {
        EncoderJson {
            n_meanings: self.n_meanings(),
            n_words: self.n_words(),
            terms: None,
            rows: self
                .weights
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|q| q.as_f64()).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &EncoderJson) -> Result<Self> {
        if j.rows.len() != j.n_meanings {
            return Err(Error::DimensionMismatch {
                what: "encoder rows vs n_meanings",
                expected: j.n_meanings,
                got: j.rows.len(),
            });
        }
        let mut flat = Vec::with_capacity(j.n_meanings * j.n_words);
        for row in &j.rows {
            if row.len() != j.n_words {
                return Err(Error::DimensionMismatch {
                    what: "encoder row length vs n_words",
                    expected: j.n_words,
                    got: row.len(),
                });
            }
            flat.extend(row.iter().map(|&q| S::of_f64(q)));
        }
        Encoder::new(Array2::from_shape_vec((j.n_meanings, j.n_words), flat).expect("rectangular"))
    }

    pub fn write_json(&self, w: impl std::io::Write) -> Result<()> {
        serde_json::to_writer(w, &self.to_json())?;
        Ok(())
    }

    pub fn read_json(r: impl std::io::Read) -> Result<Self> {
        let j: EncoderJson = serde_json::from_reader(r)?;
        Self::from_json(&j)
    }
}
