//! ROC construction, AUC, and privacy-threshold selection from recognition
//! records.
//!
//! A recognition record states whether an evaluator (human or AI) identified
//! a correct source label for an obfuscated sample, together with the
//! sample's metric score. In the privacy reading, a *positive* is an
//! unrecognized sample, and a prediction is positive when the score clears
//! the threshold (`score >= t`), so the printed thresholds act as inclusive
//! privacy floors. Sweeping the threshold over all distinct scores (plus a
//! +inf sentinel) traces the ROC curve; AUC is the trapezoidal area, which
//! equals the Mann-Whitney statistic with ties counted one half.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt_sig9;
use crate::metrics::MetricId;

/// One evaluator outcome for one obfuscated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionRecord {
    pub sample_id: String,
    pub metric: MetricId,
    pub score: f64,
    /// True when the evaluator identified a correct source label.
    pub recognized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve with strictly decreasing thresholds, from the (0,0) sentinel at
/// +inf down to (1,1) at the minimum score.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// The two selected privacy thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Maximizes TPR - FPR (the accuracy-maximizing threshold).
    pub t_acc: OperatingPoint,
    /// Minimizes the distance to the (0,1) corner.
    pub t_cutoff: OperatingPoint,
}

/// Builds the ROC curve over all candidate thresholds.
///
/// Needs at least one recognized and one unrecognized record.
pub fn build_roc(records: &[RecognitionRecord]) -> Result<RocCurve> {
    if records.iter().any(|r| !r.score.is_finite()) {
        return Err(Error::InvalidParameter(
            "records contain non-finite scores".into(),
        ));
    }
    let positives = records.iter().filter(|r| !r.recognized).count();
    let negatives = records.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass(format!(
            "{positives} unrecognized and {negatives} recognized records"
        )));
    }

    let mut scored: Vec<(f64, bool)> = records.iter().map(|r| (r.score, !r.recognized)).collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let threshold = scored[i].0;
        while i < scored.len() && scored[i].0 == threshold {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }

    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();

    Ok(RocCurve { points, auc })
}

/// Selects the accuracy-maximizing and cut-off thresholds. Ties break toward
/// the larger threshold (the more private operating point).
pub fn select_thresholds(roc: &RocCurve) -> Result<Thresholds> {
    if roc.points.is_empty() {
        return Err(Error::InvalidParameter("empty roc curve".into()));
    }
    let mut best_acc: Option<(f64, OperatingPoint)> = None;
    let mut best_cut: Option<(f64, OperatingPoint)> = None;
    for p in &roc.points {
        let op = OperatingPoint {
            threshold: p.threshold,
            fpr: p.fpr,
            tpr: p.tpr,
        };
        let youden = p.tpr - p.fpr;
        if best_acc.is_none_or(|(v, _)| youden > v) {
            best_acc = Some((youden, op));
        }
        let dist = (p.fpr * p.fpr + (1.0 - p.tpr) * (1.0 - p.tpr)).sqrt();
        if best_cut.is_none_or(|(v, _)| dist < v) {
            best_cut = Some((dist, op));
        }
    }
    Ok(Thresholds {
        t_acc: best_acc.expect("non-empty curve").1,
        t_cutoff: best_cut.expect("non-empty curve").1,
    })
}

/// Fraction of recognized records (for the given metric) scoring at or above
/// the threshold — the false-positive rate at `t`.
pub fn fpr_at(records: &[RecognitionRecord], metric: MetricId, t: f64) -> Result<f64> {
    let recognized: Vec<&RecognitionRecord> = records
        .iter()
        .filter(|r| r.metric == metric && r.recognized)
        .collect();
    if recognized.is_empty() {
        return Err(Error::NoRecords(format!(
            "no recognized records for metric {metric}"
        )));
    }
    let above = recognized.iter().filter(|r| r.score >= t).count();
    Ok(above as f64 / recognized.len() as f64)
}

const RECORD_HEADER: [&str; 4] = ["sample_id", "metric", "score", "recognized"];

/// Reads recognition records from CSV with the header
/// `sample_id,metric,score,recognized`. `recognized` accepts 0/1/true/false.
pub fn ingest_records(path: impl AsRef<Path>) -> Result<Vec<RecognitionRecord>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| map_csv_error(path, e))?;

    {
        let headers = reader.headers().map_err(|e| map_csv_error(path, e))?;
        let got: Vec<&str> = headers.iter().collect();
        if got != RECORD_HEADER {
            return Err(Error::RecordParse {
                line: 1,
                reason: format!(
                    "expected header '{}', got '{}'",
                    RECORD_HEADER.join(","),
                    got.join(",")
                ),
            });
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| map_csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let parse_err = |reason: String| Error::RecordParse { line, reason };

        if row.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, got {}", row.len())));
        }
        let sample_id = row[0].to_string();
        if sample_id.is_empty() {
            return Err(parse_err("empty sample_id".into()));
        }
        let metric: MetricId = row[1]
            .parse()
            .map_err(|_| parse_err(format!("unknown metric '{}'", &row[1])))?;
        let score: f64 = row[2]
            .parse()
            .map_err(|_| parse_err(format!("bad score '{}'", &row[2])))?;
        if !score.is_finite() {
            return Err(parse_err(format!("non-finite score '{}'", &row[2])));
        }
        let recognized = match row[3].to_ascii_lowercase().as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(parse_err(format!("bad recognized flag '{other}'"))),
        };
        records.push(RecognitionRecord {
            sample_id,
            metric,
            score,
            recognized,
        });
    }

    if records.is_empty() {
        return Err(Error::NoRecords(format!(
            "{} contains no records",
            path.display()
        )));
    }
    Ok(records)
}

/// Writes records in the ingest format. Scores use the shortest exact float
/// form, so an export/ingest round trip reproduces the records bit-for-bit.
pub fn export_records(records: &[RecognitionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| map_csv_error(path, e))?;
    writer
        .write_record(RECORD_HEADER)
        .map_err(|e| map_csv_error(path, e))?;
    for r in records {
        writer
            .write_record([
                r.sample_id.as_str(),
                r.metric.as_str(),
                &format!("{}", r.score),
                if r.recognized { "1" } else { "0" },
            ])
            .map_err(|e| map_csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes a curve as `threshold,fpr,tpr` rows plus a trailing `auc,<value>`
/// line, all floats with nine significant digits.
pub fn export_roc(roc: &RocCurve, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "threshold,fpr,tpr")?;
    for p in &roc.points {
        writeln!(
            out,
            "{},{},{}",
            fmt_sig9(p.threshold),
            fmt_sig9(p.fpr),
            fmt_sig9(p.tpr)
        )?;
    }
    writeln!(out, "auc,{}", fmt_sig9(roc.auc))?;
    Ok(())
}

fn map_csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::io(path, io)
            } else {
                unreachable!()
            }
        }
        _ => Error::RecordParse {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        },
    }
}
