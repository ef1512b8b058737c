//! Scored datasets, score-file I/O, supersamples and the top-label reduction.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One model confidence paired with its binary outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    score: f64,
    label: u8,
}

impl ScoredSample {
    pub fn new(score: f64, label: u8) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid(format!("score {score} outside [0, 1]")));
        }
        if label > 1 {
            return Err(Error::invalid(format!("label {label} outside {{0, 1}}")));
        }
        Ok(Self { score, label })
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn label(&self) -> u8 {
        self.label
    }
}

/// Ordered, non-empty collection of scored samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    samples: Vec<ScoredSample>,
    provenance: String,
}

impl ScoredDataset {
    pub fn new(samples: Vec<ScoredSample>, provenance: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            samples,
            provenance: provenance.into(),
        })
    }

    /// Builds a dataset from `(score, label)` pairs, validating each one.
    pub fn from_pairs(pairs: &[(f64, u8)], provenance: impl Into<String>) -> Result<Self> {
        let samples = pairs
            .iter()
            .map(|&(s, y)| ScoredSample::new(s, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, provenance)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[ScoredSample] {
        &self.samples
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn scores(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.score).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn mean_label(&self) -> f64 {
        self.samples.iter().map(|s| s.label as f64).sum::<f64>() / self.len() as f64
    }

    /// Sub-dataset at the given positions, in the given order.
    pub fn subset(&self, indices: &[usize], provenance: impl Into<String>) -> Result<Self> {
        let samples = indices
            .iter()
            .map(|&i| {
                self.samples
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("index {i} out of bounds")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, provenance)
    }

    pub fn save(&self, path: impl AsRef<Path>, format: ScoreFormat) -> Result<()> {
        save_scores(self, path, format)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScoreFormat {
    Csv,
    Json,
}

impl ScoreFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ScoreFormat::Json,
            _ => ScoreFormat::Csv,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    score: f64,
    label: serde_json::Number,
}

/// Reads a score file. Row order is preserved.
///
/// CSV rows are `score,label` with an optional header line. JSON files hold
/// an array of `{"score": x, "label": y}` objects; their "line" in error
/// messages is the 1-based record index.
pub fn load_scores(path: impl AsRef<Path>, format: ScoreFormat) -> Result<ScoredDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let samples = match format {
        ScoreFormat::Csv => read_csv(BufReader::new(file))?,
        ScoreFormat::Json => read_json(BufReader::new(file))?,
    };
    ScoredDataset::new(samples, path.display().to_string())
}

fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<ScoredSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0
            && record
                .get(0)
                .is_some_and(|f| f.eq_ignore_ascii_case("score"))
        {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let score: f64 = record[0].parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("unparseable score {:?}", &record[0]),
        })?;
        let label: i64 = record[1].parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("unparseable label {:?}", &record[1]),
        })?;
        samples.push(checked_sample(score, label, line)?);
    }
    Ok(samples)
}

fn read_json<R: std::io::Read>(reader: R) -> Result<Vec<ScoredSample>> {
    let records: Vec<JsonRecord> = serde_json::from_reader(reader)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let line = i as u64 + 1;
            let label = r.label.as_i64().ok_or_else(|| Error::MalformedRow {
                line,
                reason: format!("non-integer label {}", r.label),
            })?;
            checked_sample(r.score, label, line)
        })
        .collect()
}

fn checked_sample(score: f64, label: i64, line: u64) -> Result<ScoredSample> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::ScoreOutOfRange { line });
    }
    if !(0..=1).contains(&label) {
        return Err(Error::LabelOutOfRange { line });
    }
    Ok(ScoredSample {
        score,
        label: label as u8,
    })
}

/// Writes a dataset. Scores use the shortest round-trip representation, so a
/// later [`load_scores`] reproduces them bit for bit.
pub fn save_scores(d: &ScoredDataset, path: impl AsRef<Path>, format: ScoreFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        ScoreFormat::Csv => {
            writeln!(out, "score,label").map_err(|e| Error::io(path, e))?;
            for s in &d.samples {
                writeln!(out, "{},{}", s.score, s.label).map_err(|e| Error::io(path, e))?;
            }
        }
        ScoreFormat::Json => {
            let records: Vec<JsonRecord> = d
                .samples
                .iter()
                .map(|s| JsonRecord {
                    score: s.score,
                    label: s.label.into(),
                })
                .collect();
            serde_json::to_writer(&mut out, &records)?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reduces multiclass probability vectors to top-label confidences.
///
/// Score is the largest class probability; the label is 1 when that class
/// (lowest index on ties) is the true class.
pub fn top_label_reduce(
    probabilities: &[Vec<f64>],
    true_labels: &[usize],
) -> Result<ScoredDataset> {
    if probabilities.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if probabilities.len() != true_labels.len() {
        return Err(Error::invalid(format!(
            "{} probability rows but {} labels",
            probabilities.len(),
            true_labels.len()
        )));
    }
    let mut samples = Vec::with_capacity(probabilities.len());
    for (row, (p, &truth)) in probabilities.iter().zip(true_labels).enumerate() {
        let sum: f64 = p.iter().sum();
        if p.is_empty() || (sum - 1.0).abs() > 1e-6 || p.iter().any(|&v| !(0.0..=1.0).contains(&v))
        {
            return Err(Error::invalid(format!("row {row} is not on the simplex")));
        }
        if truth >= p.len() {
            return Err(Error::invalid(format!(
                "row {row}: class {truth} out of range for {} classes",
                p.len()
            )));
        }
        let mut best = 0;
        for (k, &v) in p.iter().enumerate().skip(1) {
            if v > p[best] {
                best = k;
            }
        }
        samples.push(ScoredSample {
            score: p[best],
            label: u8::from(best == truth),
        });
    }
    ScoredDataset::new(samples, "top-label reduction")
}

/// An `n x 2` matrix of draws with a selector bit per row.
///
/// `select(false)` picks entry `mask[m]` of each row (the training half) and
/// `select(true)` the other entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Supersample<T> {
    rows: Vec<[T; 2]>,
    mask: Vec<bool>,
    seed: u64,
}

impl<T: Clone> Supersample<T> {
    pub fn from_parts(rows: Vec<[T; 2]>, mask: Vec<bool>, seed: u64) -> Result<Self> {
        if rows.len() != mask.len() {
            return Err(Error::invalid(format!(
                "mask length {} does not match {} rows",
                mask.len(),
                rows.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { rows, mask, seed })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[T; 2]] {
        &self.rows
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row `m`'s entry at `U_m`, or at `1 - U_m` when `flipped`.
    pub fn select(&self, flipped: bool) -> Vec<T> {
        self.rows
            .iter()
            .zip(&self.mask)
            .map(|(row, &u)| row[usize::from(u ^ flipped)].clone())
            .collect()
    }

    /// Same rows under a different mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        Self::from_parts(self.rows.clone(), mask, self.seed)
    }

    /// Same rows with a fresh uniform mask drawn from `seed`.
    pub fn remask(&self, seed: u64) -> Self {
        Self {
            rows: self.rows.clone(),
            mask: random_mask(self.rows.len(), seed),
            seed,
        }
    }
}

impl Supersample<ScoredSample> {
    /// [`Supersample::select`] as a dataset.
    pub fn select_by_mask(&self, flipped: bool) -> Result<ScoredDataset> {
        let half = if flipped { "complement" } else { "selected" };
        ScoredDataset::new(
            self.select(flipped),
            format!("supersample seed {} {half}", self.seed),
        )
    }
}

/// Uniform draw from `{0,1}^n`.
pub fn random_mask(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = rng::stream(seed, 1);
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Fills `n` rows with `2n` distinct draws from `source` and samples a mask.
///
/// The source is shuffled with the seed first, so the rows are a random
/// partition of `2n` of its elements.
pub fn make_supersample<T: Clone>(source: &[T], n: usize, seed: u64) -> Result<Supersample<T>> {
    if n == 0 {
        return Err(Error::invalid("supersample needs n >= 1"));
    }
    if source.len() < 2 * n {
        return Err(Error::InsufficientSource {
            needed: 2 * n,
            available: source.len(),
        });
    }
    let mut order: Vec<usize> = (0..source.len()).collect();
    order.shuffle(&mut rng::stream(seed, 0));
    let rows = order[..2 * n]
        .chunks_exact(2)
        .map(|pair| [source[pair[0]].clone(), source[pair[1]].clone()])
        .collect();
    Supersample::from_parts(rows, random_mask(n, seed), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_two_rows_in_order() {
        let f = write_tmp("0.7,1\n0.2,0\n", ".csv");
        let d = load_scores(f.path(), ScoreFormat::Csv).unwrap();
        assert_eq!(d.scores(), vec![0.7, 0.2]);
        assert_eq!(d.labels(), vec![1, 0]);
    }

    #[test]
    fn header_is_optional() {
        let f = write_tmp("score,label\n0.7,1\n", ".csv");
        let d = load_scores(f.path(), ScoreFormat::Csv).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn score_out_of_range_reports_line() {
        let f = write_tmp("1.3,0\n", ".csv");
        let err = load_scores(f.path(), ScoreFormat::Csv).unwrap_err();
        assert_eq!(err.to_string(), "score out of range at line 1");
    }

    #[test]
    fn bad_label_and_malformed_rows() {
        let f = write_tmp("0.5,1\n0.5,2\n", ".csv");
        let err = load_scores(f.path(), ScoreFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::LabelOutOfRange { line: 2 }));

        let f = write_tmp("0.5,1\nabc,0\n", ".csv");
        let err = load_scores(f.path(), ScoreFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn empty_file_is_rejected() {
        let f = write_tmp("", ".csv");
        let err = load_scores(f.path(), ScoreFormat::Csv).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn json_records_load() {
        let f = write_tmp(
            r#"[{"score": 0.25, "label": 0}, {"score": 1.0, "label": 1}]"#,
            ".json",
        );
        let d = load_scores(f.path(), ScoreFormat::Json).unwrap();
        assert_eq!(d.scores(), vec![0.25, 1.0]);
        let f = write_tmp(r#"[{"score": 0.25, "label": 3}]"#, ".json");
        assert!(matches!(
            load_scores(f.path(), ScoreFormat::Json),
            Err(Error::LabelOutOfRange { line: 1 })
        ));
    }

    #[test]
    fn top_label_examples() {
        let d = top_label_reduce(
            &[vec![0.1, 0.9], vec![0.6, 0.4], vec![0.5, 0.5]],
            &[1, 1, 0],
        )
        .unwrap();
        assert_eq!(d.scores(), vec![0.9, 0.6, 0.5]);
        assert_eq!(d.labels(), vec![1, 0, 1]);
    }

    #[test]
    fn top_label_rejects_bad_input() {
        assert!(top_label_reduce(&[vec![0.3, 0.3]], &[0]).is_err());
        assert!(top_label_reduce(&[vec![0.3, 0.7]], &[2]).is_err());
        assert!(matches!(
            top_label_reduce(&[], &[]),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn supersample_is_deterministic() {
        let src: Vec<u32> = (0..20).collect();
        assert_eq!(
            make_supersample(&src, 3, 7).unwrap(),
            make_supersample(&src, 3, 7).unwrap()
        );
    }

    #[test]
    fn supersample_partitions_source() {
        let src: Vec<u32> = (0..8).collect();
        let s = make_supersample(&src, 4, 11).unwrap();
        let mut all: Vec<u32> = s.rows().iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, src);
    }

    #[test]
    fn supersample_needs_enough_source() {
        let src: Vec<u32> = (0..6).collect();
        let err = make_supersample(&src, 4, 1).unwrap_err();
        assert!(err.to_string().starts_with("insufficient source size"));
    }

    #[test]
    fn mask_selection_examples() {
        let s =
            Supersample::from_parts(vec![['a', 'b'], ['c', 'd']], vec![false, true], 0).unwrap();
        assert_eq!(s.select(false), vec!['a', 'd']);
        assert_eq!(s.select(true), vec!['b', 'c']);
        assert_eq!(s.select(false).len() + s.select(true).len(), 4);
        assert!(s.with_mask(vec![true]).is_err());
    }
}
