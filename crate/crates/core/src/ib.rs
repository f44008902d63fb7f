//! Reverse deterministic annealing of the bottleneck self-consistent
//! iterations.
//!
//! The solver walks a descending list of trade-off values. At the top the
//! encoder is initialized to the identity (one word per meaning); each
//! converged solution warm-starts the next, lower value. Words whose
//! marginal probability vanishes are removed from the encoder.

use ndarray::{Array1, Array2};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::info::{accuracy_from, complexity_from, marginals, Encoder, Marginals, MetricsPoint};
use crate::scalar::Scalar;

/// Default convergence tolerance on the objective change per iteration.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Default iteration cap per trade-off value.
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
/// A word is pruned when its marginal probability falls below this.
pub const WORD_PRUNE_TOL: f64 = 1e-12;
/// Number of values in the standard schedule.
pub const STANDARD_SCHEDULE_LEN: usize = 1501;
/// Exponent bounds of the standard log-spaced schedule: 2^13 down to
/// 2^LOW, then a final exact zero.
pub const SCHEDULE_HIGH_EXP: f64 = 13.0;
pub const SCHEDULE_LOW_EXP: f64 = -3.0;

/// One solved point of the estimated optimal curve.
#[derive(Debug, Clone)]
pub struct FrontierPoint<S: Scalar> {
    pub beta: S,
    pub encoder: Encoder<S>,
    pub metrics: MetricsPoint<S>,
    pub iterations: usize,
    pub converged: bool,
}

/// Descending trade-off values plus convergence controls.
#[derive(Debug, Clone)]
pub struct AnnealSchedule<S: Scalar> {
    betas: Vec<S>,
    pub tolerance: S,
    pub max_iterations: usize,
}

impl<S: Scalar> AnnealSchedule<S> {
    pub fn new(betas: Vec<S>, tolerance: S, max_iterations: usize) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Parameter("schedule has no beta values".into()));
        }
        for pair in betas.windows(2) {
            if pair[1] >= pair[0] {
                return Err(Error::Parameter("schedule betas must be strictly descending".into()));
            }
        }
        if betas.iter().any(|b| *b < S::zero() || !b.is_finite()) {
            return Err(Error::Parameter("schedule betas must be finite and nonnegative".into()));
        }
        if tolerance <= S::zero() || max_iterations == 0 {
            return Err(Error::Parameter("schedule needs positive tolerance and iterations".into()));
        }
        Ok(Self {
            betas,
            tolerance,
            max_iterations,
        })
    }

    fn log_spaced(len: usize) -> Vec<S> {
        let n = len - 1; // last slot is the exact zero
        let mut betas: Vec<S> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                let exp = SCHEDULE_HIGH_EXP + t * (SCHEDULE_LOW_EXP - SCHEDULE_HIGH_EXP);
                S::of_f64(exp.exp2())
            })
            .collect();
        betas.push(S::zero());
        betas
    }

    /// The standard schedule: 1500 values log-spaced from 2^13 down to
    /// 2^-3, then a final zero (1501 values total).
    pub fn standard() -> Self {
        Self::new(
            Self::log_spaced(STANDARD_SCHEDULE_LEN),
            S::of_f64(DEFAULT_TOLERANCE),
            DEFAULT_MAX_ITERATIONS,
        )
        .expect("standard schedule is valid")
    }

    /// Reduced 151-value schedule with the same shape, for desk-scale runs.
    pub fn reduced() -> Self {
        Self::new(
            Self::log_spaced(151),
            S::of_f64(DEFAULT_TOLERANCE),
            DEFAULT_MAX_ITERATIONS,
        )
        .expect("reduced schedule is valid")
    }

    /// Loads whitespace-separated beta values from a reader; values are
    /// sorted descending and exact duplicates dropped.
    pub fn from_reader(r: impl std::io::Read) -> Result<Self> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let mut betas: Vec<S> = Vec::new();
        for (i, tok) in text.split_whitespace().enumerate() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                path: "<betas>".into(),
                line: i + 1,
                msg: format!("'{tok}' is not a number"),
            })?;
            betas.push(S::of_f64(v));
        }
        betas.sort_by(|a, b| b.partial_cmp(a).expect("finite betas"));
        betas.dedup();
        Self::new(betas, S::of_f64(DEFAULT_TOLERANCE), DEFAULT_MAX_ITERATIONS)
    }

    pub fn betas(&self) -> &[S] {
        &self.betas
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }
}

/// Row entropies term: sum_u p(u|m) log2 p(u|m) for each meaning.
fn kernel_neg_entropy<S: Scalar>(env: &Environment<S>) -> Array1<S> {
    Array1::from_iter(env.kernels().rows().into_iter().map(|row| {
        row.iter()
            .map(|&p| if p > S::zero() { p * p.log2() } else { S::zero() })
            .sum()
    }))
}

/// One self-consistent update given the current encoder's marginals:
/// q(w|m) proportional to q(w) * 2^(-beta * KL(p(u|m) || q(u|w))), each row
/// renormalized. The divergence is in bits, matching the objective's units.
fn update_rows<S: Scalar>(
    env: &Environment<S>,
    marg: &Marginals<S>,
    beta: S,
    neg_entropy: &Array1<S>,
) -> Result<Encoder<S>> {
    let n_m = env.n_meanings();
    let n_w = marg.word.len();

    // log2 q(u|w), zeroed for unused words so the matmul stays finite; the
    // -inf log-prior term below removes those words from every row.
    let mut log_ref = marg.referent_given_word.clone();
    for (w, mut row) in log_ref.rows_mut().into_iter().enumerate() {
        if marg.word[w] > S::zero() {
            for v in row.iter_mut() {
                *v = v.log2();
            }
        } else {
            row.fill(S::zero());
        }
    }
    // cross(m, w) = sum_u p(u|m) log2 q(u|w)
    let cross = env.kernels().dot(&log_ref.t());

    let log_word: Vec<S> = marg
        .word
        .iter()
        .map(|&q| if q > S::zero() { q.log2() } else { S::neg_infinity() })
        .collect();

    let mut next = Array2::zeros((n_m, n_w));
    for m in 0..n_m {
        // score = log2 q(w) - beta * KL(m, w), shifted by the row max so the
        // exponential cannot underflow everywhere at large beta.
        let mut best = S::neg_infinity();
        let mut scores: Vec<S> = Vec::with_capacity(n_w);
        for w in 0..n_w {
            let kl = neg_entropy[m] - cross[(m, w)];
            let s = log_word[w] - beta * kl;
            if s > best {
                best = s;
            }
            scores.push(s);
        }
        if !best.is_finite() {
            return Err(Error::DegenerateRow { meaning: m });
        }
        let mut sum = S::zero();
        for (w, s) in scores.iter().enumerate() {
            let v = (*s - best).exp2();
            next[(m, w)] = v;
            sum += v;
        }
        if !(sum > S::zero()) || !sum.is_finite() {
            return Err(Error::DegenerateRow { meaning: m });
        }
        for w in 0..n_w {
            next[(m, w)] /= sum;
        }
    }
    Encoder::new(next)
}

/// One self-consistent update of the encoder at the given trade-off value.
pub fn ib_iterate<S: Scalar>(
    env: &Environment<S>,
    enc: &Encoder<S>,
    beta: S,
) -> Result<Encoder<S>> {
    if beta < S::zero() {
        return Err(Error::Parameter(format!("beta must be nonnegative, got {beta}")));
    }
    let marg = marginals(env, enc)?;
    update_rows(env, &marg, beta, &kernel_neg_entropy(env))
}

fn require_full_support<S: Scalar>(env: &Environment<S>) -> Result<()> {
    if !env.is_full_support() {
        return Err(Error::Parameter(format!(
            "environment '{}' kernels are not full support; the divergence inside the update would diverge",
            env.name()
        )));
    }
    Ok(())
}

/// Iterates the update at a fixed trade-off value until the objective change
/// drops below the tolerance (or the iteration cap is hit, in which case the
/// point is returned with `converged = false`). Words with marginal
/// probability below 1e-12 are removed from the returned encoder.
pub fn solve_beta<S: Scalar>(
    env: &Environment<S>,
    init: Encoder<S>,
    beta: S,
    tolerance: S,
    max_iterations: usize,
) -> Result<FrontierPoint<S>> {
    if beta < S::zero() {
        return Err(Error::Parameter(format!("beta must be nonnegative, got {beta}")));
    }
    require_full_support(env)?;
    let neg_entropy = kernel_neg_entropy(env);

    let mut enc = init;
    let mut marg = marginals(env, &enc)?;
    let mut objective = complexity_from(env, &enc, &marg)? - beta * accuracy_from(&marg)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        enc = update_rows(env, &marg, beta, &neg_entropy)?;
        marg = marginals(env, &enc)?;
        let next = complexity_from(env, &enc, &marg)? - beta * accuracy_from(&marg)?;
        iterations += 1;
        debug_assert!(
            next <= objective + S::of_f64(1e-10),
            "objective increased at beta {beta}: {objective} -> {next}"
        );
        let done = (next - objective).abs() < tolerance;
        objective = next;
        if done {
            converged = true;
            break;
        }
    }

    // Word pruning: q(w) below threshold means no meaning uses w.
    let prune = S::of_f64(WORD_PRUNE_TOL);
    let keep: Vec<usize> = (0..enc.n_words()).filter(|&w| marg.word[w] >= prune).collect();
    if keep.len() < enc.n_words() {
        enc = enc.drop_words(&keep)?;
        marg = marginals(env, &enc)?;
    }
    let metrics = MetricsPoint {
        complexity: complexity_from(env, &enc, &marg)?,
        accuracy: accuracy_from(&marg)?,
        beta: Some(beta),
        optimality: None,
    };
    Ok(FrontierPoint {
        beta,
        encoder: enc,
        metrics,
        iterations,
        converged,
    })
}

/// Estimates the optimal curve by solving every schedule value in descending
/// order, warm-starting each from the previous solution. The initial encoder
/// at the top is the identity.
pub fn reverse_anneal<S: Scalar>(
    env: &Environment<S>,
    schedule: &AnnealSchedule<S>,
) -> Result<Vec<FrontierPoint<S>>> {
    let mut out = Vec::with_capacity(schedule.len());
    reverse_anneal_each(env, schedule, |p| {
        out.push(p);
        Ok(())
    })?;
    Ok(out)
}

/// Streaming form of [`reverse_anneal`]: the callback consumes each solved
/// point in schedule order. Only the warm-start encoder is retained between
/// steps, which keeps large environments within memory.
pub fn reverse_anneal_each<S: Scalar>(
    env: &Environment<S>,
    schedule: &AnnealSchedule<S>,
    mut sink: impl FnMut(FrontierPoint<S>) -> Result<()>,
) -> Result<()> {
    require_full_support(env)?;
    let mut warm = Encoder::identity(env.n_meanings());
    for &beta in schedule.betas() {
        let point = solve_beta(env, warm, beta, schedule.tolerance, schedule.max_iterations)?;
        warm = point.encoder.clone();
        sink(point)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_base, BaseEnvironment, Environment};
    use crate::info::{accuracy, complexity, ib_objective};
    use approx::assert_abs_diff_eq;

    const LOG2_11: f64 = 3.4594316186372973;
    const I_MU_CPUM: f64 = 1.0996047002247214;

    fn cpum() -> Environment<f64> {
        build_base(BaseEnvironment::Cpum)
    }

    #[test]
    fn zero_beta_update_makes_rows_identical() {
        let env = cpum();
        let enc = Encoder::identity(11);
        let next = ib_iterate(&env, &enc, 0.0).unwrap();
        // Every row equals the current word marginal q(w) = 1/11.
        for m in 0..11 {
            for w in 0..11 {
                assert_abs_diff_eq!(next.weights()[(m, w)], 1.0 / 11.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn identity_is_stationary_at_the_top_of_the_schedule() {
        let env = cpum();
        let enc = Encoder::identity(11);
        let beta = (2.0f64).powi(13);
        let next = ib_iterate(&env, &enc, beta).unwrap();
        for m in 0..11 {
            for w in 0..11 {
                assert_abs_diff_eq!(
                    next.weights()[(m, w)],
                    enc.weights()[(m, w)],
                    epsilon = 1e-12
                );
            }
        }
        // One update changes the objective by less than the tolerance.
        let f0 = ib_objective(&env, &enc, beta).unwrap();
        let f1 = ib_objective(&env, &next, beta).unwrap();
        assert!((f1 - f0).abs() < DEFAULT_TOLERANCE);
    }

    #[test]
    fn converged_point_is_a_fixed_point_of_the_update() {
        let env = cpum();
        let point = solve_beta(&env, Encoder::identity(11), 4.0, 1e-12, 10_000).unwrap();
        assert!(point.converged);
        let again = ib_iterate(&env, &point.encoder, 4.0).unwrap();
        for (a, b) in point.encoder.weights().iter().zip(again.weights().iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_beta_solution_is_trivial() {
        let env = cpum();
        let point = solve_beta(&env, Encoder::identity(11), 0.0, 1e-8, 10_000).unwrap();
        assert!(point.converged);
        assert!(point.metrics.complexity <= 1e-9);
        assert!(point.metrics.accuracy <= 1e-9);
    }

    #[test]
    fn large_beta_solution_recovers_full_complexity() {
        let env = cpum();
        let point = solve_beta(&env, Encoder::identity(11), 8192.0, 1e-8, 10_000).unwrap();
        assert!(point.converged);
        assert_abs_diff_eq!(point.metrics.complexity, LOG2_11, epsilon = 1e-6);
        assert_eq!(point.encoder.n_words(), 11);
    }

    #[test]
    fn objective_never_increases_across_iterations() {
        let env = cpum();
        let mut enc = Encoder::identity(11);
        for &beta in &[8.0, 2.0, 1.0] {
            let mut f = ib_objective(&env, &enc, beta).unwrap();
            for _ in 0..50 {
                enc = ib_iterate(&env, &enc, beta).unwrap();
                let next = ib_objective(&env, &enc, beta).unwrap();
                assert!(next <= f + 1e-10, "beta {beta}: {f} -> {next}");
                f = next;
            }
        }
    }

    #[test]
    fn annealing_traces_a_monotone_frontier() {
        let env = cpum();
        // Same shape as the standard schedule at desk scale.
        let schedule = AnnealSchedule::<f64>::reduced();
        let points = reverse_anneal(&env, &schedule).unwrap();
        assert_eq!(points.len(), 151);
        assert!(points.iter().all(|p| p.converged));

        let first = &points[0];
        assert_abs_diff_eq!(first.metrics.accuracy, I_MU_CPUM, epsilon = 1e-6);
        assert_abs_diff_eq!(first.metrics.complexity, LOG2_11, epsilon = 1e-6);
        let last = points.last().unwrap();
        assert!(last.metrics.accuracy <= 1e-6);
        assert!(last.metrics.complexity <= 1e-6);
        for pair in points.windows(2) {
            assert!(
                pair[1].metrics.complexity <= pair[0].metrics.complexity + 1e-6,
                "complexity must not increase as beta falls"
            );
        }
        // Frontier encoders satisfy the information-plane invariants.
        for p in &points {
            let c = complexity(&env, &p.encoder).unwrap();
            let a = accuracy(&env, &p.encoder).unwrap();
            assert!(a <= c + 1e-9);
            assert!(c >= 0.0 && a >= 0.0);
        }
    }

    #[test]
    fn annealing_is_deterministic() {
        let env = cpum();
        let schedule = AnnealSchedule::<f64>::new(vec![64.0, 8.0, 1.0, 0.0], 1e-8, 10_000).unwrap();
        let a = reverse_anneal(&env, &schedule).unwrap();
        let b = reverse_anneal(&env, &schedule).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.metrics.complexity, y.metrics.complexity);
            assert_eq!(x.metrics.accuracy, y.metrics.accuracy);
            assert_eq!(x.encoder.weights(), y.encoder.weights());
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(AnnealSchedule::<f64>::new(vec![], 1e-8, 100).is_err());
        assert!(AnnealSchedule::<f64>::new(vec![1.0, 2.0], 1e-8, 100).is_err());
        assert!(AnnealSchedule::<f64>::new(vec![2.0, 1.0, -0.5], 1e-8, 100).is_err());
        let s = AnnealSchedule::<f64>::standard();
        assert_eq!(s.len(), STANDARD_SCHEDULE_LEN);
        assert_eq!(s.betas()[0], 8192.0);
        assert_eq!(*s.betas().last().unwrap(), 0.0);
    }

    #[test]
    fn schedule_from_reader_sorts_and_dedupes() {
        let text = "1.0 8.0\n8.0 0.5";
        let s = AnnealSchedule::<f64>::from_reader(text.as_bytes()).unwrap();
        assert_eq!(s.betas(), &[8.0, 1.0, 0.5]);
        assert!(AnnealSchedule::<f64>::from_reader("1.0 bogus".as_bytes()).is_err());
    }

    #[test]
    fn rejects_environments_without_full_support() {
        use crate::env::{Embedding, Variant};
        // CPDM-Split has full support (0.01 floors); fabricate one without.
        let _ = Variant::CpdmSplit;
        let prior = ndarray::Array1::from_elem(2, 0.5);
        let kernels = ndarray::array![[1.0, 0.0], [0.0, 1.0]];
        let e = Embedding::line([0.0, 1.0]);
        let env = Environment::new("degenerate", prior, kernels, e.clone(), e).unwrap();
        assert!(solve_beta(&env, Encoder::identity(2), 1.0, 1e-8, 10).is_err());
    }
}
