//! Color-survey ingestion: chip coordinate tables, per-speaker term
//! responses, and the Gaussian color environment built from them.
//!
//! File formats (tab-separated, `#`-prefixed or header lines skipped):
//! - chip table: chip id, Munsell descriptor columns, then L*, a*, b* as the
//!   last three fields;
//! - term file: language id, speaker id, chip id, term label;
//! - prior file: whitespace-separated nonnegative reals, one per chip.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::env::{Embedding, Environment};
use crate::error::{Error, Result};
use crate::info::Encoder;
use crate::scalar::Scalar;

/// Number of chips in the published survey.
pub const WCS_CHIP_COUNT: usize = 330;
/// Default kernel width: sigma = 64 in color space (variance 4096).
pub const DEFAULT_SIGMA: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChipEntry {
    pub id: u32,
    /// Munsell lightness row descriptor (e.g. "A".."J").
    pub value_row: String,
    /// Munsell hue column descriptor (e.g. "0".."40").
    pub hue_col: String,
    /// L*, a*, b* coordinates.
    pub lab: [f64; 3],
}

/// Parsed chip coordinate table, ordered by ascending chip id.
#[derive(Debug, Clone)]
pub struct ChipTable {
    entries: Vec<ChipEntry>,
}

impl ChipTable {
    /// Builds a table from entries, sorting by id and rejecting duplicates.
    pub fn from_entries(mut entries: Vec<ChipEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Parameter("chip table is empty".into()));
        }
        entries.sort_by_key(|e| e.id);
        for pair in entries.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateChip(pair[0].id));
            }
        }
        if entries.iter().any(|e| e.lab.iter().any(|c| !c.is_finite())) {
            return Err(Error::Parameter("chip table has non-finite coordinates".into()));
        }
        Ok(Self { entries })
    }

    /// Parses a delimited chip table of any size (sub-tables are used in
    /// tests); [`load_chips`] enforces the published row count.
    pub fn parse(reader: impl Read, path: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() < 4 {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("expected at least 4 tab-separated fields, got {}", fields.len()),
                });
            }
            let id: u32 = match fields[0].parse() {
                Ok(v) => v,
                // A single leading header line is tolerated.
                Err(_) if entries.is_empty() => continue,
                Err(_) => {
                    return Err(Error::Parse {
                        path: path.into(),
                        line: lineno + 1,
                        msg: format!("chip id '{}' is not an integer", fields[0]),
                    })
                }
            };
            let n = fields.len();
            let mut lab = [0.0; 3];
            for (k, f) in fields[n - 3..].iter().enumerate() {
                lab[k] = f.parse().map_err(|_| Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("coordinate '{f}' is not a number"),
                })?;
            }
            let desc = &fields[1..n - 3];
            entries.push(ChipEntry {
                id,
                value_row: desc.first().copied().unwrap_or("").to_string(),
                hue_col: desc.get(1).copied().unwrap_or("").to_string(),
                lab,
            });
        }
        Self::from_entries(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ChipEntry] {
        &self.entries
    }

    /// Row index of a chip id, when present.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.entries.binary_search_by_key(&id, |e| e.id).ok()
    }
}

/// Loads the published 330-chip coordinate table.
pub fn load_chips(path: impl AsRef<Path>) -> Result<ChipTable> {
    let path = path.as_ref();
    let table = ChipTable::parse(std::fs::File::open(path)?, &path.display().to_string())?;
    if table.len() != WCS_CHIP_COUNT {
        return Err(Error::RowCount {
            expected: WCS_CHIP_COUNT,
            got: table.len(),
        });
    }
    Ok(table)
}

/// One speaker's response for one chip.
#[derive(Debug, Clone, PartialEq)]
pub struct TermRow {
    pub language: u32,
    pub speaker: u32,
    pub chip: u32,
    pub term: String,
}

/// The term-response table of a survey.
#[derive(Debug, Clone)]
pub struct TermResponses {
    rows: Vec<TermRow>,
}

impl TermResponses {
    pub fn from_rows(rows: Vec<TermRow>) -> Self {
        Self { rows }
    }

    /// Parses the tab-separated term file: language, speaker, chip, term.
    /// Term labels are trimmed but otherwise taken verbatim; every distinct
    /// label string is one term.
    pub fn parse(reader: impl Read, path: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() < 4 {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("expected 4 tab-separated fields, got {}", fields.len()),
                });
            }
            let parse_int = |f: &str, what: &str| -> Result<u32> {
                f.parse().map_err(|_| Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("{what} '{f}' is not an integer"),
                })
            };
            let term = fields[3].to_string();
            if term.is_empty() {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: "empty term label".into(),
                });
            }
            rows.push(TermRow {
                language: parse_int(fields[0], "language id")?,
                speaker: parse_int(fields[1], "speaker id")?,
                chip: parse_int(fields[2], "chip id")?,
                term,
            });
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TermRow] {
        &self.rows
    }
}

/// Loads the term file and validates chip ids against the published range.
pub fn load_terms(path: impl AsRef<Path>) -> Result<TermResponses> {
    let path = path.as_ref();
    let t = TermResponses::parse(std::fs::File::open(path)?, &path.display().to_string())?;
    for r in t.rows() {
        if r.chip == 0 || r.chip as usize > WCS_CHIP_COUNT {
            return Err(Error::Parameter(format!(
                "chip id {} outside 1..={WCS_CHIP_COUNT}",
                r.chip
            )));
        }
    }
    Ok(t)
}

/// Loads a whitespace-separated prior weight file.
pub fn load_prior(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, tok) in text.split_whitespace().enumerate() {
        let v: f64 = tok.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: format!("'{tok}' is not a number"),
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Builds the color environment: meanings and referents both index the
/// chips, kernels are Gaussians in color-space distance,
/// p(u|m) proportional to exp(-|x_u - x_m|^2 / (2 sigma^2)), and both sides
/// carry the 3-D coordinate embedding.
pub fn build_color_environment<S: Scalar>(
    chips: &ChipTable,
    prior_weights: &[f64],
    sigma: f64,
) -> Result<Environment<S>> {
    if sigma <= 0.0 {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    let n = chips.len();
    if prior_weights.len() != n {
        return Err(Error::DimensionMismatch {
            what: "prior weights vs chips",
            expected: n,
            got: prior_weights.len(),
        });
    }
    if prior_weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::Parameter("prior weights must be nonnegative".into()));
    }
    if prior_weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroSumPrior);
    }

    let two_sigma_sq = 2.0 * sigma * sigma;
    let mut kernels = Array2::zeros((n, n));
    for m in 0..n {
        let xm = chips.entries()[m].lab;
        let mut sum = 0.0;
        let mut raw = vec![0.0; n];
        for u in 0..n {
            let xu = chips.entries()[u].lab;
            let d2 = (xu[0] - xm[0]).powi(2) + (xu[1] - xm[1]).powi(2) + (xu[2] - xm[2]).powi(2);
            let w = (-d2 / two_sigma_sq).exp();
            raw[u] = w;
            sum += w;
        }
        for u in 0..n {
            kernels[(m, u)] = S::of_f64(raw[u] / sum);
        }
    }

    let embedding = Embedding::space(
        chips
            .entries()
            .iter()
            .map(|e| (S::of_f64(e.lab[0]), S::of_f64(e.lab[1]), S::of_f64(e.lab[2]))),
    );
    let prior = Array1::from_iter(prior_weights.iter().map(|&w| S::of_f64(w)));
    Environment::new("color", prior, kernels, embedding.clone(), embedding)
}

/// One language's frequency encoder derived from term responses.
#[derive(Debug, Clone)]
pub struct NaturalEncoder<S: Scalar> {
    pub language: u32,
    /// Word index set: the language's distinct term labels, sorted.
    pub terms: Vec<String>,
    pub encoder: Encoder<S>,
    /// Chips (ids) with no responses in this language; their rows were set
    /// uniform over the language's terms.
    pub uncovered_chips: Vec<u32>,
}

/// Languages turned into encoders, plus any skipped for lack of data.
#[derive(Debug, Clone)]
pub struct NaturalEncoders<S: Scalar> {
    pub encoders: Vec<NaturalEncoder<S>>,
    pub skipped_languages: Vec<u32>,
}

/// Derives one encoder per language: q(w|m) is the number of w responses
/// for chip m over the language's speaker count, renormalized by the row
/// sum so skipped chips or multiple responses per speaker still yield a
/// distribution. Chips no speaker answered get a uniform row and are
/// reported in `uncovered_chips`.
pub fn natural_encoders<S: Scalar>(
    responses: &TermResponses,
    n_chips: usize,
) -> Result<NaturalEncoders<S>> {
    let mut by_language: BTreeMap<u32, Vec<&TermRow>> = BTreeMap::new();
    for row in responses.rows() {
        if row.chip == 0 || row.chip as usize > n_chips {
            return Err(Error::Parameter(format!(
                "chip id {} outside 1..={n_chips}",
                row.chip
            )));
        }
        by_language.entry(row.language).or_default().push(row);
    }

    let mut encoders = Vec::new();
    let mut skipped = Vec::new();
    for (language, rows) in by_language {
        let speakers: BTreeSet<u32> = rows.iter().map(|r| r.speaker).collect();
        let terms: BTreeSet<&str> = rows.iter().map(|r| r.term.as_str()).collect();
        if speakers.is_empty() || terms.is_empty() {
            skipped.push(language);
            continue;
        }
        let terms: Vec<String> = terms.into_iter().map(String::from).collect();
        let term_index: BTreeMap<&str, usize> =
            terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

        let mut counts = Array2::<f64>::zeros((n_chips, terms.len()));
        for r in &rows {
            counts[(r.chip as usize - 1, term_index[r.term.as_str()])] += 1.0;
        }
        let n_speakers = speakers.len() as f64;
        let mut weights = Array2::zeros((n_chips, terms.len()));
        let mut uncovered = Vec::new();
        for m in 0..n_chips {
            let row_sum: f64 = counts.row(m).sum();
            if row_sum == 0.0 {
                uncovered.push(m as u32 + 1);
                let uniform = S::of_f64(1.0 / terms.len() as f64);
                for w in 0..terms.len() {
                    weights[(m, w)] = uniform;
                }
                continue;
            }
            // count / speakers, then renormalize by the row's own mass.
            let norm = row_sum / n_speakers;
            for w in 0..terms.len() {
                weights[(m, w)] = S::of_f64((counts[(m, w)] / n_speakers) / norm);
            }
        }
        encoders.push(NaturalEncoder {
            language,
            terms,
            encoder: Encoder::new(weights)?,
            uncovered_chips: uncovered,
        });
    }
    Ok(NaturalEncoders {
        encoders,
        skipped_languages: skipped,
    })
}
