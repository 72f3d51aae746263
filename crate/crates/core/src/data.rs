//! Labeled score datasets and their CSV representation.
//!
//! A dataset holds one row per verification attempt: `K` matcher scores, a
//! genuine/impostor label and an opaque client identifier. Simulated spoof
//! rows stay labeled impostor and carry the attack combination that produced
//! them, so spoof false-acceptance rates can be computed per combination.
//!
//! CSV format: header `client_id,s1,...,sK,label`, label `G` or `I`, UTF-8,
//! comma separators, `.` decimal point.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attack::AttackCombination;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Claim class. Simulated spoof samples remain [`Label::Impostor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "G")]
    Genuine,
    #[serde(rename = "I")]
    Impostor,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Genuine => "G",
            Label::Impostor => "I",
        }
    }
}

/// One verification attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<F> {
    pub client_id: String,
    pub scores: Vec<F>,
    pub label: Label,
    /// Attack combination that rewrote this row, if any. `None` for original
    /// (zero-effort) rows and for rows rewritten under the all-zero
    /// combination, which leaves scores untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<AttackCombination>,
}

impl<F> Sample<F> {
    pub fn new(client_id: impl Into<String>, scores: Vec<F>, label: Label) -> Self {
        Sample {
            client_id: client_id.into(),
            scores,
            label,
            provenance: None,
        }
    }
}

/// Immutable labeled score matrix with `n_matchers` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDataset<F> {
    n_matchers: usize,
    samples: Vec<Sample<F>>,
}

impl<F: Real> ScoreDataset<F> {
    /// Build a dataset without class-presence checks; see [`Self::validate`].
    pub fn new(n_matchers: usize, samples: Vec<Sample<F>>) -> Self {
        ScoreDataset {
            n_matchers,
            samples,
        }
    }

    pub fn n_matchers(&self) -> usize {
        self.n_matchers
    }

    pub fn samples(&self) -> &[Sample<F>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Check every invariant: per-sample arity, finiteness, and presence of
    /// both classes. Reports the index of the first malformed sample.
    pub fn validate(&self) -> Result<&Self> {
        if self.samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (index, sample) in self.samples.iter().enumerate() {
            if sample.scores.len() != self.n_matchers {
                return Err(Error::SampleArity {
                    index,
                    expected: self.n_matchers,
                    found: sample.scores.len(),
                });
            }
            for (matcher, s) in sample.scores.iter().enumerate() {
                if !s.is_finite() {
                    return Err(Error::NonFiniteScore { index, matcher });
                }
            }
        }
        if !self.samples.iter().any(|s| s.label == Label::Genuine) {
            return Err(Error::MissingClass { class: "genuine" });
        }
        if !self.samples.iter().any(|s| s.label == Label::Impostor) {
            return Err(Error::MissingClass { class: "impostor" });
        }
        Ok(self)
    }

    /// Scores of one matcher restricted to a class, in sample order.
    pub fn class_scores(&self, matcher: usize, label: Label) -> Vec<F> {
        self.samples
            .iter()
            .filter(|s| s.label == label)
            .map(|s| s.scores[matcher])
            .collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// Distinct client identifiers in first-appearance order.
    pub fn client_ids(&self) -> Vec<&str> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for s in &self.samples {
            if seen.insert(s.client_id.as_str()) {
                out.push(s.client_id.as_str());
            }
        }
        out
    }

    /// New dataset containing the samples selected by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&Sample<F>) -> bool) -> ScoreDataset<F> {
        ScoreDataset {
            n_matchers: self.n_matchers,
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    /// Apply a per-matcher map to every score, returning a new dataset.
    pub fn map_scores(&self, mut f: impl FnMut(usize, F) -> F) -> ScoreDataset<F> {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let scores = s
                    .scores
                    .iter()
                    .enumerate()
                    .map(|(m, &x)| f(m, x))
                    .collect();
                Sample {
                    client_id: s.client_id.clone(),
                    scores,
                    label: s.label,
                    provenance: s.provenance.clone(),
                }
            })
            .collect();
        ScoreDataset {
            n_matchers: self.n_matchers,
            samples,
        }
    }

    pub(crate) fn samples_mut(&mut self) -> &mut Vec<Sample<F>> {
        &mut self.samples
    }
}

/// Validate a dataset, passing it through unchanged on success.
pub fn validate_dataset<F: Real>(dataset: ScoreDataset<F>) -> Result<ScoreDataset<F>> {
    dataset.validate()?;
    Ok(dataset)
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

fn parse_error(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Read a dataset from `client_id,s1,...,sK,label` CSV.
pub fn read_scores_csv<F: Real>(path: impl AsRef<Path>) -> Result<ScoreDataset<F>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: display.clone(),
        source,
    })?;
    read_scores(file, &display)
}

/// Read a dataset from any reader; `name` is used in error messages.
pub fn read_scores<F: Real>(reader: impl Read, name: &str) -> Result<ScoreDataset<F>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| parse_error(name, 1, e.to_string()))?
        .clone();
    if headers.len() < 3 || headers.get(0) != Some("client_id") {
        return Err(parse_error(
            name,
            1,
            "expected header client_id,s1,...,sK,label",
        ));
    }
    let n_matchers = headers.len() - 2;

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2; // 1-based, after header
        let record = record.map_err(|e| parse_error(name, line, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(parse_error(
                name,
                line,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let client_id = record[0].to_string();
        let mut scores = Vec::with_capacity(n_matchers);
        for m in 0..n_matchers {
            let raw = &record[m + 1];
            let value: f64 = raw
                .parse()
                .map_err(|_| parse_error(name, line, format!("bad score '{raw}'")))?;
            scores.push(F::from_f64(value).ok_or_else(|| {
                parse_error(name, line, format!("score '{raw}' not representable"))
            })?);
        }
        let label = match &record[n_matchers + 1] {
            "G" => Label::Genuine,
            "I" => Label::Impostor,
            other => {
                return Err(parse_error(
                    name,
                    line,
                    format!("unknown label '{other}' (expected G or I)"),
                ))
            }
        };
        samples.push(Sample::new(client_id, scores, label));
    }
    Ok(ScoreDataset::new(n_matchers, samples))
}

/// Write a dataset in the CSV format read by [`read_scores_csv`].
pub fn write_scores_csv<F: Real>(dataset: &ScoreDataset<F>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: display.clone(),
        source,
    })?;
    write_scores(dataset, file, &display)
}

pub fn write_scores<F: Real>(
    dataset: &ScoreDataset<F>,
    writer: impl Write,
    name: &str,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["client_id".to_string()];
    for m in 1..=dataset.n_matchers() {
        header.push(format!("s{m}"));
    }
    header.push("label".to_string());
    let io_err = |e: csv::Error| Error::Io {
        path: name.to_string(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e),
    };
    wtr.write_record(&header).map_err(io_err)?;
    for sample in dataset.samples() {
        let mut record = vec![sample.client_id.clone()];
        for s in &sample.scores {
            record.push(format!("{s}"));
        }
        record.push(sample.label.as_str().to_string());
        wtr.write_record(&record).map_err(io_err)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: name.to_string(),
        source,
    })?;
    Ok(())
}

/// Read a plain score list: one value per line, blank lines ignored.
pub fn read_score_list<F: Real>(path: impl AsRef<Path>) -> Result<Vec<F>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: display.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line
            .parse()
            .map_err(|_| parse_error(&display, i + 1, format!("bad score '{line}'")))?;
        out.push(F::from_f64(value).ok_or_else(|| {
            parse_error(&display, i + 1, format!("score '{line}' not representable"))
        })?);
    }
    Ok(out)
}

/// Write a plain score list, one value per line.
pub fn write_score_list<F: Real>(scores: &[F], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let body: String = scores.iter().map(|s| format!("{s}\n")).collect();
    std::fs::write(path, body).map_err(|source| Error::Io {
        path: display,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_matcher() -> ScoreDataset<f64> {
        ScoreDataset::new(
            2,
            vec![
                Sample::new("a", vec![0.9, 0.8], Label::Genuine),
                Sample::new("b", vec![0.1, 0.2], Label::Impostor),
            ],
        )
    }

    #[test]
    fn minimal_dataset_is_valid() {
        assert!(two_matcher().validate().is_ok());
    }

    #[test]
    fn arity_error_reports_index() {
        let ds = ScoreDataset::new(
            2,
            vec![
                Sample::new("a", vec![0.9, 0.8], Label::Genuine),
                Sample::new("b", vec![0.1, 0.2, 0.3], Label::Impostor),
            ],
        );
        match ds.validate() {
            Err(Error::SampleArity {
                index, expected, found,
            }) => {
                assert_eq!((index, expected, found), (1, 2, 3));
            }
            other => panic!("expected arity error, got {other:?}"),
        }
    }

    #[test]
    fn missing_class_detected() {
        let ds = ScoreDataset::new(1, vec![Sample::new("a", vec![0.9], Label::Genuine)]);
        assert!(matches!(
            ds.validate(),
            Err(Error::MissingClass { class: "impostor" })
        ));
    }

    #[test]
    fn non_finite_score_detected() {
        let ds = ScoreDataset::new(
            1,
            vec![
                Sample::new("a", vec![f64::NAN], Label::Genuine),
                Sample::new("b", vec![0.2], Label::Impostor),
            ],
        );
        assert!(matches!(
            ds.validate(),
            Err(Error::NonFiniteScore { index: 0, matcher: 0 })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let ds = two_matcher();
        let mut buf = Vec::new();
        write_scores(&ds, &mut buf, "mem").unwrap();
        let back: ScoreDataset<f64> = read_scores(buf.as_slice(), "mem").unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn csv_unknown_label_line_number() {
        let text = "client_id,s1,label\na,0.5,G\nb,0.4,X\n";
        let err = read_scores::<f64>(text.as_bytes(), "mem").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("unknown label"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_bad_score_reported() {
        let text = "client_id,s1,label\na,zero,G\n";
        let err = read_scores::<f64>(text.as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
