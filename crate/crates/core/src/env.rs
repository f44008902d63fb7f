//! Environment data model and constructors for the synthetic environments.
//!
//! An [`Environment`] bundles a meaning prior p(m), the meaning kernels
//! p(u|m) (one row-stochastic row per meaning), and spatial embeddings of
//! both index sets. Meanings and referents are integer indices; the
//! embeddings give them coordinates in 1-, 2-, or 3-dimensional space for
//! the convexity geometry.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerance for probability-vector normalization checks.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Coordinates for every index of a meaning or referent set.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<S: Scalar> {
    coords: Array2<S>, // one row per index, `dim` columns
}

impl<S: Scalar> Embedding<S> {
    pub fn new(coords: Array2<S>) -> Result<Self> {
        let dim = coords.ncols();
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!(
                "embedding dimension must be 1, 2, or 3, got {dim}"
            )));
        }
        if coords.nrows() == 0 {
            return Err(Error::Parameter("embedding covers no indices".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("embedding has non-finite coordinates".into()));
        }
        Ok(Self { coords })
    }

    /// 1-D embedding placing index k at the k-th supplied coordinate.
    pub fn line(values: impl IntoIterator<Item = S>) -> Self {
        let v: Vec<S> = values.into_iter().collect();
        let n = v.len();
        Self::new(Array2::from_shape_vec((n, 1), v).expect("shape")).expect("valid line embedding")
    }

    /// 2-D embedding from (x, y) pairs.
    pub fn plane(points: impl IntoIterator<Item = (S, S)>) -> Self {
        let mut flat = Vec::new();
        for (x, y) in points {
            flat.push(x);
            flat.push(y);
        }
        let n = flat.len() / 2;
        Self::new(Array2::from_shape_vec((n, 2), flat).expect("shape")).expect("valid plane embedding")
    }

    /// 3-D embedding from (x, y, z) triples.
    pub fn space(points: impl IntoIterator<Item = (S, S, S)>) -> Self {
        let mut flat = Vec::new();
        for (x, y, z) in points {
            flat.push(x);
            flat.push(y);
            flat.push(z);
        }
        let n = flat.len() / 3;
        Self::new(Array2::from_shape_vec((n, 3), flat).expect("shape")).expect("valid space embedding")
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    pub fn coords(&self) -> &Array2<S> {
        &self.coords
    }

    /// Coordinates converted to f64 for the hull predicates.
    pub fn coords_f64(&self) -> Array2<f64> {
        self.coords.mapv(|c| c.as_f64())
    }
}

/// A communication environment: referents U, meanings M, prior p(m),
/// meaning kernels p(u|m), and embeddings of both sides.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Environment<S: Scalar> {
    name: String,
    prior: Array1<S>,
    kernels: Array2<S>, // n_meanings x n_referents
    meaning_embedding: Embedding<S>,
    referent_embedding: Embedding<S>,
}

impl<S: Scalar> Environment<S> {
    /// Validates the invariants and builds the environment. The prior is
    /// renormalized by its sum (stated prior weights in some environments
    /// do not sum to one; relative weighting is preserved).
    pub fn new(
        name: impl Into<String>,
        prior: Array1<S>,
        kernels: Array2<S>,
        meaning_embedding: Embedding<S>,
        referent_embedding: Embedding<S>,
    ) -> Result<Self> {
        let name = name.into();
        let n_m = prior.len();
        let n_u = kernels.ncols();
        if kernels.nrows() != n_m {
            return Err(Error::DimensionMismatch {
                what: "kernel rows vs meanings",
                expected: n_m,
                got: kernels.nrows(),
            });
        }
        if meaning_embedding.len() != n_m {
            return Err(Error::DimensionMismatch {
                what: "meaning embedding",
                expected: n_m,
                got: meaning_embedding.len(),
            });
        }
        if referent_embedding.len() != n_u {
            return Err(Error::DimensionMismatch {
                what: "referent embedding",
                expected: n_u,
                got: referent_embedding.len(),
            });
        }
        if prior.iter().any(|p| *p < S::zero() || !p.is_finite()) {
            return Err(Error::Parameter(format!("prior of '{name}' has invalid entries")));
        }
        let sum: S = prior.iter().copied().sum();
        if sum <= S::zero() {
            return Err(Error::ZeroSumPrior);
        }
        let prior = prior.mapv(|p| p / sum);

        let tol = S::of_f64(NORMALIZATION_TOL);
        for (m, row) in kernels.rows().into_iter().enumerate() {
            if row.iter().any(|p| *p < S::zero() || !p.is_finite()) {
                return Err(Error::Parameter(format!(
                    "kernel row {m} of '{name}' has invalid entries"
                )));
            }
            let s: S = row.iter().copied().sum();
            if (s - S::one()).abs() > tol {
                return Err(Error::NotNormalized {
                    what: format!("kernel row {m} of '{name}'"),
                    sum: s.as_f64(),
                });
            }
        }

        Ok(Self {
            name,
            prior,
            kernels,
            meaning_embedding,
            referent_embedding,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_meanings(&self) -> usize {
        self.prior.len()
    }

    pub fn n_referents(&self) -> usize {
        self.kernels.ncols()
    }

    pub fn prior(&self) -> &Array1<S> {
        &self.prior
    }

    pub fn kernels(&self) -> &Array2<S> {
        &self.kernels
    }

    pub fn meaning_embedding(&self) -> &Embedding<S> {
        &self.meaning_embedding
    }

    pub fn referent_embedding(&self) -> &Embedding<S> {
        &self.referent_embedding
    }

    /// True when every kernel entry is strictly positive. The annealing
    /// solver requires this (the KL divergence inside the update must stay
    /// finite).
    pub fn is_full_support(&self) -> bool {
        self.kernels.iter().all(|p| *p > S::zero())
    }
}

/// The four base environments. Shared referents U = {0..10} and kernels
/// p(u|m) proportional to the normal density at u with mean |m| and
/// variance 9/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseEnvironment {
    /// Convex (uniform) prior, unique meanings: M = {0..10}.
    Cpum,
    /// Non-convex prior, unique meanings: M = {0..10}.
    Npum,
    /// Convex prior, duplicate meanings: M = {-10..10}.
    Cpdm,
    /// Non-convex prior, duplicate meanings: M = {-10..10}.
    Npdm,
}

impl BaseEnvironment {
    pub fn name(self) -> &'static str {
        match self {
            BaseEnvironment::Cpum => "CPUM",
            BaseEnvironment::Npum => "NPUM",
            BaseEnvironment::Cpdm => "CPDM",
            BaseEnvironment::Npdm => "NPDM",
        }
    }

    fn meaning_values(self) -> Vec<i32> {
        match self {
            BaseEnvironment::Cpum | BaseEnvironment::Npum => (0..=10).collect(),
            BaseEnvironment::Cpdm | BaseEnvironment::Npdm => (-10..=10).collect(),
        }
    }

    fn prior_weights(self) -> Vec<f64> {
        match self {
            BaseEnvironment::Cpum => vec![1.0 / 11.0; 11],
            BaseEnvironment::Npum => {
                let mut w = vec![0.01; 11];
                w[0] = 0.455;
                w[10] = 0.455;
                w
            }
            BaseEnvironment::Cpdm => vec![1.0 / 21.0; 21],
            // Stated weights sum to 1.10; Environment::new renormalizes.
            BaseEnvironment::Npdm => {
                let mut w = vec![0.01; 21];
                w[0] = 0.455;
                w[20] = 0.455;
                w
            }
        }
    }
}

/// The named variant environments beyond the four bases and their duals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    CpdmConvex,
    CpdmAdj,
    NpdmAdj,
    NpdmShift,
    CpumSplit,
    CpdmSplit,
    Manhattan55,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::CpdmConvex => "CPDM-Convex",
            Variant::CpdmAdj => "CPDM-Adj",
            Variant::NpdmAdj => "NPDM-Adj",
            Variant::NpdmShift => "NPDM-Shift",
            Variant::CpumSplit => "CPUM-Split",
            Variant::CpdmSplit => "CPDM-Split",
            Variant::Manhattan55 => "Manhattan-5-5",
        }
    }
}

fn normal_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// Normalized Gaussian kernel row: the normal density with the given center
/// and variance evaluated at each referent coordinate, scaled to sum 1.
pub fn gaussian_kernel<S: Scalar>(
    center: f64,
    variance: f64,
    referent_coords: &[f64],
) -> Result<Vec<S>> {
    if variance <= 0.0 {
        return Err(Error::Parameter(format!(
            "gaussian kernel variance must be positive, got {variance}"
        )));
    }
    if referent_coords.is_empty() {
        return Err(Error::Parameter("gaussian kernel needs at least one referent".into()));
    }
    let raw: Vec<f64> = referent_coords
        .iter()
        .map(|&u| normal_density(u, center, variance))
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| S::of_f64(v / sum)).collect())
}

fn rows_to_array<S: Scalar>(rows: Vec<Vec<S>>) -> Array2<S> {
    let n = rows.len();
    let m = rows[0].len();
    let flat: Vec<S> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, m), flat).expect("rectangular kernel rows")
}

fn line_embedding<S: Scalar>(values: &[i32]) -> Embedding<S> {
    Embedding::line(values.iter().map(|&v| S::of_f64(v as f64)))
}

/// Builds one of the four base environments of Table 2.
pub fn build_base<S: Scalar>(which: BaseEnvironment) -> Environment<S> {
    let referents: Vec<i32> = (0..=10).collect();
    let ref_coords: Vec<f64> = referents.iter().map(|&u| u as f64).collect();
    let meanings = which.meaning_values();
    let rows: Vec<Vec<S>> = meanings
        .iter()
        .map(|&m| {
            gaussian_kernel::<S>((m.abs()) as f64, 9.0 / 4.0, &ref_coords)
                .expect("base kernel parameters are valid")
        })
        .collect();
    let prior = Array1::from_iter(which.prior_weights().into_iter().map(S::of_f64));
    Environment::new(
        which.name(),
        prior,
        rows_to_array(rows),
        line_embedding(&meanings),
        line_embedding(&referents),
    )
    .expect("base environment invariants hold by construction")
}

/// Builds the -Dual variant of a base environment: referents extend to
/// {-10..10} and each kernel is the symmetric two-Gaussian mixture
/// (phi(u, m, 3/2) + phi(u, -m, 3/2)) / 2 row-normalized, so that
/// p(u|m) = p(-u|m).
pub fn build_dual<S: Scalar>(base: BaseEnvironment) -> Environment<S> {
    let referents: Vec<i32> = (-10..=10).collect();
    let meanings = base.meaning_values();
    let rows: Vec<Vec<S>> = meanings
        .iter()
        .map(|&m| {
            let raw: Vec<f64> = referents
                .iter()
                .map(|&u| {
                    (normal_density(u as f64, m as f64, 1.5)
                        + normal_density(u as f64, -m as f64, 1.5))
                        / 2.0
                })
                .collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| S::of_f64(v / sum)).collect()
        })
        .collect();
    let prior = Array1::from_iter(base.prior_weights().into_iter().map(S::of_f64));
    Environment::new(
        format!("{}-Dual", base.name()),
        prior,
        rows_to_array(rows),
        line_embedding(&meanings),
        line_embedding(&referents),
    )
    .expect("dual environment invariants hold by construction")
}

/// Builds one of the named variant environments.
pub fn build_variant<S: Scalar>(which: Variant) -> Environment<S> {
    match which {
        Variant::CpdmConvex => {
            let base = build_base::<S>(BaseEnvironment::Cpdm);
            // Prior heavily weighted to negative meanings, still convex:
            // 0.099 for m < 0, 0.01/11 otherwise.
            let meanings: Vec<i32> = (-10..=10).collect();
            let prior = Array1::from_iter(meanings.iter().map(|&m| {
                S::of_f64(if m < 0 { 0.099 } else { 0.01 / 11.0 })
            }));
            Environment::new(
                which.name(),
                prior,
                base.kernels().clone(),
                base.meaning_embedding().clone(),
                base.referent_embedding().clone(),
            )
            .expect("variant invariants hold")
        }
        Variant::CpdmAdj => {
            // Duplicate meanings adjacent in the space: M = {0..19},
            // kernel center floor(m/2), variance 3/2, uniform prior.
            let referents: Vec<i32> = (0..=10).collect();
            let ref_coords: Vec<f64> = referents.iter().map(|&u| u as f64).collect();
            let meanings: Vec<i32> = (0..=19).collect();
            let rows: Vec<Vec<S>> = meanings
                .iter()
                .map(|&m| gaussian_kernel::<S>((m / 2) as f64, 1.5, &ref_coords).expect("valid"))
                .collect();
            let prior = Array1::from_elem(20, S::of_f64(1.0 / 20.0));
            Environment::new(
                which.name(),
                prior,
                rows_to_array(rows),
                line_embedding(&meanings),
                line_embedding(&referents),
            )
            .expect("variant invariants hold")
        }
        Variant::NpdmAdj => {
            // Duplicates in contiguous blocks of three with the middle one
            // downweighted: M = {0..17}, center floor(m/3), variance 3/2.
            let referents: Vec<i32> = (0..=10).collect();
            let ref_coords: Vec<f64> = referents.iter().map(|&u| u as f64).collect();
            let meanings: Vec<i32> = (0..=17).collect();
            let rows: Vec<Vec<S>> = meanings
                .iter()
                .map(|&m| gaussian_kernel::<S>((m / 3) as f64, 1.5, &ref_coords).expect("valid"))
                .collect();
            let prior = Array1::from_iter(meanings.iter().map(|&m| {
                S::of_f64(if (m - 1).rem_euclid(3) == 0 { 0.01 / 6.0 } else { 0.495 / 6.0 })
            }));
            Environment::new(
                which.name(),
                prior,
                rows_to_array(rows),
                line_embedding(&meanings),
                line_embedding(&referents),
            )
            .expect("variant invariants hold")
        }
        Variant::NpdmShift => {
            // NPDM kernels with the prior shifted onto the ends and middle.
            // Stated weights sum to 1.01; renormalized on construction.
            let base = build_base::<S>(BaseEnvironment::Npdm);
            let meanings: Vec<i32> = (-10..=10).collect();
            let prior = Array1::from_iter(meanings.iter().map(|&m| {
                S::of_f64(match m {
                    0 => 0.415,
                    -10 | 10 => 0.2075,
                    _ => 0.01,
                })
            }));
            Environment::new(
                which.name(),
                prior,
                base.kernels().clone(),
                base.meaning_embedding().clone(),
                base.referent_embedding().clone(),
            )
            .expect("variant invariants hold")
        }
        Variant::CpumSplit => {
            // Uniform prior; each meaning splits over u = m and u = m + 10,
            // individually non-convex: U = {0..19}, M = {0..9}.
            let referents: Vec<i32> = (0..=19).collect();
            let meanings: Vec<i32> = (0..=9).collect();
            let rows: Vec<Vec<S>> = meanings
                .iter()
                .map(|&m| {
                    (0..20)
                        .map(|u| {
                            S::of_f64(if u == m || u == m + 10 { 0.41 } else { 0.01 })
                        })
                        .collect()
                })
                .collect();
            let prior = Array1::from_elem(10, S::of_f64(0.1));
            Environment::new(
                which.name(),
                prior,
                rows_to_array(rows),
                line_embedding(&meanings),
                line_embedding(&referents),
            )
            .expect("variant invariants hold")
        }
        Variant::CpdmSplit => {
            // Uniform prior over M = {0..9}; the two end meanings put 0.91
            // on their matching endpoint referent, all other rows uniform.
            let referents: Vec<i32> = (0..=9).collect();
            let meanings: Vec<i32> = (0..=9).collect();
            let rows: Vec<Vec<S>> = meanings
                .iter()
                .map(|&m| {
                    (0..10)
                        .map(|u| {
                            let p = if m == 0 {
                                if u == 0 { 0.91 } else { 0.01 }
                            } else if m == 9 {
                                if u == 9 { 0.91 } else { 0.01 }
                            } else {
                                0.1
                            };
                            S::of_f64(p)
                        })
                        .collect()
                })
                .collect();
            let prior = Array1::from_elem(10, S::of_f64(0.1));
            Environment::new(
                which.name(),
                prior,
                rows_to_array(rows),
                line_embedding(&meanings),
                line_embedding(&referents),
            )
            .expect("variant invariants hold")
        }
        Variant::Manhattan55 => {
            // 5x5 grid, uniform prior, kernel proportional to Manhattan
            // distance plus one. As stated, distant referents are *more*
            // probable than near ones; implemented exactly as written.
            let points: Vec<(i32, i32)> = (0..5)
                .flat_map(|i| (0..5).map(move |j| (i, j)))
                .collect();
            let rows: Vec<Vec<S>> = points
                .iter()
                .map(|&(mi, mj)| {
                    let raw: Vec<f64> = points
                        .iter()
                        .map(|&(ui, uj)| ((mi - ui).abs() + (mj - uj).abs()) as f64 + 1.0)
                        .collect();
                    let sum: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| S::of_f64(v / sum)).collect()
                })
                .collect();
            let prior = Array1::from_elem(25, S::of_f64(1.0 / 25.0));
            let embedding = Embedding::plane(
                points
                    .iter()
                    .map(|&(i, j)| (S::of_f64(i as f64), S::of_f64(j as f64))),
            );
            Environment::new(
                which.name(),
                prior,
                rows_to_array(rows),
                embedding.clone(),
                embedding,
            )
            .expect("variant invariants hold")
        }
    }
}

/// Resolves an environment by its canonical name.
pub fn by_name<S: Scalar>(name: &str) -> Result<Environment<S>> {
    let env = match name {
        "CPUM" => build_base(BaseEnvironment::Cpum),
        "NPUM" => build_base(BaseEnvironment::Npum),
        "CPDM" => build_base(BaseEnvironment::Cpdm),
        "NPDM" => build_base(BaseEnvironment::Npdm),
        "CPUM-Dual" => build_dual(BaseEnvironment::Cpum),
        "NPUM-Dual" => build_dual(BaseEnvironment::Npum),
        "CPDM-Dual" => build_dual(BaseEnvironment::Cpdm),
        "NPDM-Dual" => build_dual(BaseEnvironment::Npdm),
        "CPDM-Convex" => build_variant(Variant::CpdmConvex),
        "CPDM-Adj" => build_variant(Variant::CpdmAdj),
        "NPDM-Adj" => build_variant(Variant::NpdmAdj),
        "NPDM-Shift" => build_variant(Variant::NpdmShift),
        "CPUM-Split" => build_variant(Variant::CpumSplit),
        "CPDM-Split" => build_variant(Variant::CpdmSplit),
        "Manhattan-5-5" => build_variant(Variant::Manhattan55),
        _ => return Err(Error::UnknownEnvironment(name.into())),
    };
    Ok(env)
}

/// Environment names participating in the second experiment (Table 3 rows).
pub const EXP2_NAMES: [&str; 12] = [
    "CPUM",
    "NPUM",
    "CPDM",
    "NPDM",
    "CPUM-Dual",
    "NPUM-Dual",
    "CPDM-Dual",
    "NPDM-Dual",
    "CPDM-Convex",
    "CPDM-Adj",
    "NPDM-Adj",
    "Manhattan-5-5",
];

/// Environment names participating in the third experiment.
pub const EXP3_NAMES: [&str; 12] = [
    "CPUM",
    "NPUM",
    "CPDM",
    "NPDM",
    "CPUM-Dual",
    "NPUM-Dual",
    "CPDM-Dual",
    "NPDM-Dual",
    "NPDM-Shift",
    "CPUM-Split",
    "CPDM-Split",
    "Manhattan-5-5",
];

/// All canonical environment names.
pub fn all_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = EXP2_NAMES.to_vec();
    for n in EXP3_NAMES {
        if !names.contains(&n) {
            names.push(n);
        }
    }
    names
}

// ---------------------------------------------------------------------------
// JSON interchange
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingJson {
    dim: usize,
    coords: Vec<Vec<f64>>,
}

/// Double-precision JSON form of an environment. Field layout: name, set
/// sizes, prior array, kernel matrix (row-major, one row per meaning),
/// embedding arrays.
#[derive(Debug, Serialize, Deserialize)]
pub struct EnvironmentJson {
    name: String,
    n_referents: usize,
    n_meanings: usize,
    prior: Vec<f64>,
    kernels: Vec<Vec<f64>>,
    meaning_embedding: EmbeddingJson,
    referent_embedding: EmbeddingJson,
}

fn embedding_to_json<S: Scalar>(e: &Embedding<S>) -> EmbeddingJson {
    EmbeddingJson {
        dim: e.dim(),
        coords: e
            .coords()
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|c| c.as_f64()).collect())
            .collect(),
    }
}

fn embedding_from_json<S: Scalar>(j: &EmbeddingJson) -> Result<Embedding<S>> {
    let n = j.coords.len();
    let mut flat = Vec::with_capacity(n * j.dim);
    for row in &j.coords {
        if row.len() != j.dim {
            return Err(Error::Parameter(format!(
                "embedding row has {} coordinates, declared dim {}",
                row.len(),
                j.dim
            )));
        }
        flat.extend(row.iter().map(|&c| S::of_f64(c)));
    }
    Embedding::new(Array2::from_shape_vec((n, j.dim), flat).expect("rectangular"))
}

impl<S: Scalar> Environment<S> {
    pub fn to_json(&self) -> EnvironmentJson {
        EnvironmentJson {
            name: self.name.clone(),
            n_referents: self.n_referents(),
            n_meanings: self.n_meanings(),
            prior: self.prior.iter().map(|p| p.as_f64()).collect(),
            kernels: self
                .kernels
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|p| p.as_f64()).collect())
                .collect(),
            meaning_embedding: embedding_to_json(&self.meaning_embedding),
            referent_embedding: embedding_to_json(&self.referent_embedding),
        }
    }

    pub fn from_json(j: &EnvironmentJson) -> Result<Self> {
        let n_m = j.n_meanings;
        let n_u = j.n_referents;
        if j.prior.len() != n_m {
            return Err(Error::DimensionMismatch {
                what: "prior length vs n_meanings",
                expected: n_m,
                got: j.prior.len(),
            });
        }
        if j.kernels.len() != n_m {
            return Err(Error::DimensionMismatch {
                what: "kernel rows vs n_meanings",
                expected: n_m,
                got: j.kernels.len(),
            });
        }
        let mut flat = Vec::with_capacity(n_m * n_u);
        for row in &j.kernels {
            if row.len() != n_u {
                return Err(Error::DimensionMismatch {
                    what: "kernel row length vs n_referents",
                    expected: n_u,
                    got: row.len(),
                });
            }
            flat.extend(row.iter().map(|&p| S::of_f64(p)));
        }
        Environment::new(
            j.name.clone(),
            Array1::from_iter(j.prior.iter().map(|&p| S::of_f64(p))),
            Array2::from_shape_vec((n_m, n_u), flat).expect("rectangular"),
            embedding_from_json(&j.meaning_embedding)?,
            embedding_from_json(&j.referent_embedding)?,
        )
    }

    pub fn write_json(&self, w: impl std::io::Write) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_json())?;
        Ok(())
    }

    pub fn read_json(r: impl std::io::Read) -> Result<Self> {
        let j: EnvironmentJson = serde_json::from_reader(r)?;
        Self::from_json(&j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Normal density at integers 0..10 with mean 0, variance 9/4,
    // normalized. Computed independently at high precision.
    const GAUSS_ROW_0: [f64; 11] = [
        0.42017315062093543,
        0.33644835740358065,
        0.17273834636139423,
        0.056864252347704223,
        0.012002456463709333,
        0.0016243558450512153,
        0.00014095238928137692,
        7.842308792095079e-6,
        2.7976647167629883e-7,
        6.399228573228935e-9,
        9.385119578754485e-11,
    ];

    fn coords_0_to_10() -> Vec<f64> {
        (0..=10).map(|u| u as f64).collect()
    }

    #[test]
    fn gaussian_kernel_matches_high_precision_row() {
        let row: Vec<f64> = gaussian_kernel(0.0, 2.25, &coords_0_to_10()).unwrap();
        for (got, want) in row.iter().zip(GAUSS_ROW_0) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn gaussian_kernel_peaks_at_center_and_is_symmetric() {
        let row: Vec<f64> = gaussian_kernel(0.0, 2.25, &coords_0_to_10()).unwrap();
        assert!(row.iter().skip(1).all(|&v| v < row[0]));
        assert!(row.iter().all(|&v| v > 0.0));

        let mid: Vec<f64> = gaussian_kernel(5.0, 2.25, &coords_0_to_10()).unwrap();
        for k in 0..=5 {
            assert_abs_diff_eq!(mid[5 - k], mid[5 + k], epsilon = 1e-15);
        }
    }

    #[test]
    fn gaussian_kernel_rejects_bad_parameters() {
        assert!(gaussian_kernel::<f64>(0.0, 0.0, &coords_0_to_10()).is_err());
        assert!(gaussian_kernel::<f64>(0.0, -1.0, &coords_0_to_10()).is_err());
        assert!(gaussian_kernel::<f64>(0.0, 1.0, &[]).is_err());
    }

    #[test]
    fn cpum_prior_is_uniform_over_eleven() {
        let env: Environment<f64> = build_base(BaseEnvironment::Cpum);
        assert_eq!(env.n_meanings(), 11);
        for &p in env.prior() {
            assert_abs_diff_eq!(p, 1.0 / 11.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn npum_prior_matches_stated_weights_exactly() {
        let env: Environment<f64> = build_base(BaseEnvironment::Npum);
        let p = env.prior();
        // Stated weights already total 1.0, so renormalization is a no-op.
        assert_abs_diff_eq!(p[0], 0.455, epsilon = 1e-12);
        assert_abs_diff_eq!(p[10], 0.455, epsilon = 1e-12);
        for m in 1..=9 {
            assert_abs_diff_eq!(p[m], 0.01, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn npdm_prior_is_renormalized_by_its_sum() {
        let env: Environment<f64> = build_base(BaseEnvironment::Npdm);
        let p = env.prior();
        assert_abs_diff_eq!(p[0], 0.455 / 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.01 / 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicate_meaning_rows_are_identical() {
        for which in [BaseEnvironment::Cpdm, BaseEnvironment::Npdm] {
            let env: Environment<f64> = build_base(which);
            let k = env.kernels();
            for m in 1..=10 {
                let pos = 10 + m; // meaning value +m
                let neg = 10 - m; // meaning value -m
                for u in 0..env.n_referents() {
                    assert_eq!(k[(pos, u)], k[(neg, u)], "{} m={}", which.name(), m);
                }
            }
        }
    }

    #[test]
    fn dual_rows_are_symmetric_in_u() {
        for base in [
            BaseEnvironment::Cpum,
            BaseEnvironment::Npum,
            BaseEnvironment::Cpdm,
            BaseEnvironment::Npdm,
        ] {
            let env: Environment<f64> = build_dual(base);
            assert_eq!(env.n_referents(), 21);
            let k = env.kernels();
            for m in 0..env.n_meanings() {
                for d in 0..=10 {
                    assert_abs_diff_eq!(k[(m, 10 + d)], k[(m, 10 - d)], epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn dual_center_meaning_equals_single_normal() {
        // For m = 0 the two mixture components coincide.
        let env: Environment<f64> = build_dual(BaseEnvironment::Cpum);
        let coords: Vec<f64> = (-10..=10).map(|u| u as f64).collect();
        let single: Vec<f64> = gaussian_kernel(0.0, 1.5, &coords).unwrap();
        for (u, want) in single.iter().enumerate() {
            assert_abs_diff_eq!(env.kernels()[(0, u)], *want, epsilon = 1e-15);
        }
    }

    #[test]
    fn dual_extreme_meaning_is_bimodal_with_equal_peaks() {
        // Mixture density evaluated by brute force with an independent
        // normal pdf (statrs).
        use statrs::distribution::{Continuous, Normal};
        let env: Environment<f64> = build_dual(BaseEnvironment::Cpum);
        let m10 = 10; // meaning value 10 at index 10 in M = {0..10}
        let n_pos = Normal::new(10.0, 1.5f64.sqrt()).unwrap();
        let n_neg = Normal::new(-10.0, 1.5f64.sqrt()).unwrap();
        let raw: Vec<f64> = (-10..=10)
            .map(|u| (n_pos.pdf(u as f64) + n_neg.pdf(u as f64)) / 2.0)
            .collect();
        let sum: f64 = raw.iter().sum();
        for (u, r) in raw.iter().enumerate() {
            assert_abs_diff_eq!(env.kernels()[(m10, u)], r / sum, epsilon = 1e-12);
        }
        // Equal peaks at u = -10 and u = 10, larger than everything between.
        let row: Vec<f64> = (0..21).map(|u| env.kernels()[(m10, u)]).collect();
        assert_abs_diff_eq!(row[0], row[20], epsilon = 1e-15);
        assert!(row[1..20].iter().all(|&v| v < row[0]));
    }

    #[test]
    fn cpdm_convex_prior_blocks() {
        let env: Environment<f64> = build_variant(Variant::CpdmConvex);
        let p = env.prior();
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-12);
        for m in 0..10 {
            assert_abs_diff_eq!(p[m], 0.099, epsilon = 1e-12);
        }
        for m in 10..21 {
            assert_abs_diff_eq!(p[m], 0.01 / 11.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn adjacency_variants_duplicate_rows_in_blocks() {
        let adj2: Environment<f64> = build_variant(Variant::CpdmAdj);
        assert_eq!(adj2.n_meanings(), 20);
        for k in 0..10 {
            for u in 0..adj2.n_referents() {
                assert_eq!(adj2.kernels()[(2 * k, u)], adj2.kernels()[(2 * k + 1, u)]);
            }
        }
        let adj3: Environment<f64> = build_variant(Variant::NpdmAdj);
        assert_eq!(adj3.n_meanings(), 18);
        for k in 0..6 {
            for u in 0..adj3.n_referents() {
                assert_eq!(adj3.kernels()[(3 * k, u)], adj3.kernels()[(3 * k + 1, u)]);
                assert_eq!(adj3.kernels()[(3 * k, u)], adj3.kernels()[(3 * k + 2, u)]);
            }
        }
    }

    #[test]
    fn npdm_adj_prior_pattern() {
        let env: Environment<f64> = build_variant(Variant::NpdmAdj);
        let p = env.prior();
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-12);
        for m in 0..18 {
            let want = if (m as i32 - 1).rem_euclid(3) == 0 {
                0.01 / 6.0
            } else {
                0.495 / 6.0
            };
            assert_abs_diff_eq!(p[m], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn npdm_shift_prior_is_renormalized() {
        let env: Environment<f64> = build_variant(Variant::NpdmShift);
        let p = env.prior();
        // Stated weights sum to 1.01.
        assert_abs_diff_eq!(p[10], 0.415 / 1.01, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 0.2075 / 1.01, epsilon = 1e-12);
        assert_abs_diff_eq!(p[20], 0.2075 / 1.01, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.01 / 1.01, epsilon = 1e-12);
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cpum_split_rows_have_two_heavy_entries() {
        let env: Environment<f64> = build_variant(Variant::CpumSplit);
        assert_eq!((env.n_meanings(), env.n_referents()), (10, 20));
        for m in 0..10 {
            let row: Vec<f64> = (0..20).map(|u| env.kernels()[(m, u)]).collect();
            let heavy = row.iter().filter(|&&v| (v - 0.41).abs() < 1e-12).count();
            let light = row.iter().filter(|&&v| (v - 0.01).abs() < 1e-12).count();
            assert_eq!((heavy, light), (2, 18));
            assert_eq!(env.kernels()[(m, m)], 0.41);
            assert_eq!(env.kernels()[(m, m + 10)], 0.41);
        }
    }

    #[test]
    fn cpdm_split_end_rows_peak_on_matching_endpoint() {
        let env: Environment<f64> = build_variant(Variant::CpdmSplit);
        assert_eq!((env.n_meanings(), env.n_referents()), (10, 10));
        assert_eq!(env.kernels()[(0, 0)], 0.91);
        assert_eq!(env.kernels()[(9, 9)], 0.91);
        for m in 1..9 {
            for u in 0..10 {
                assert_eq!(env.kernels()[(m, u)], 0.1);
            }
        }
    }

    #[test]
    fn manhattan_kernel_is_distance_plus_one_before_normalization() {
        let env: Environment<f64> = build_variant(Variant::Manhattan55);
        assert_eq!((env.n_meanings(), env.n_referents()), (25, 25));
        assert_eq!(env.meaning_embedding().dim(), 2);
        // m = (0,0) is index 0, u = (4,4) is index 24, distance 8.
        let row_sum: f64 = (0..25)
            .map(|j| {
                let (ui, uj) = (j / 5, j % 5);
                (ui + uj) as f64 + 1.0
            })
            .sum();
        assert_abs_diff_eq!(env.kernels()[(0, 24)], 9.0 / row_sum, epsilon = 1e-15);
    }

    #[test]
    fn every_named_environment_is_normalized_and_full_support_where_expected() {
        for name in all_names() {
            let env: Environment<f64> = by_name(name).unwrap();
            assert_abs_diff_eq!(env.prior().sum(), 1.0, epsilon = NORMALIZATION_TOL);
            for row in env.kernels().rows() {
                assert_abs_diff_eq!(row.sum(), 1.0, epsilon = NORMALIZATION_TOL);
            }
            assert!(env.is_full_support(), "{name} should be full support");
            assert_eq!(env.meaning_embedding().len(), env.n_meanings());
            assert_eq!(env.referent_embedding().len(), env.n_referents());
        }
        assert!(by_name::<f64>("nosuch").is_err());
    }

    #[test]
    fn builders_are_deterministic() {
        for name in all_names() {
            let a: Environment<f64> = by_name(name).unwrap();
            let b: Environment<f64> = by_name(name).unwrap();
            assert_eq!(a.prior(), b.prior(), "{name}");
            assert_eq!(a.kernels(), b.kernels(), "{name}");
            assert_eq!(a.meaning_embedding(), b.meaning_embedding(), "{name}");
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        for name in ["CPUM", "NPDM", "Manhattan-5-5", "CPUM-Split"] {
            let env: Environment<f64> = by_name(name).unwrap();
            let text = serde_json::to_string(&env.to_json()).unwrap();
            let back = Environment::<f64>::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(env.prior(), back.prior(), "{name}");
            assert_eq!(env.kernels(), back.kernels(), "{name}");
            assert_eq!(env.meaning_embedding(), back.meaning_embedding(), "{name}");
            assert_eq!(env.referent_embedding(), back.referent_embedding(), "{name}");
        }
    }
}
