//! Epoch manifests: the server-visible public half and the client-only
//! private half.
//!
//! `public.csv` carries only `file,label`. Everything that could help an
//! adversary unmix — source paths, mixing weights, rng seeds, scores — lives
//! in `private.csv`, which gets owner-only permissions where the platform
//! supports it.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt_sig9;

/// Public half of one sample: output file and shared label.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicEntry {
    pub file: String,
    pub label: String,
}

/// Private half of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateEntry {
    pub file: String,
    pub sources: Vec<String>,
    pub lambdas: Vec<f64>,
    pub seed_words: [u64; 4],
    pub score: f64,
}

/// A pair whose sample never met the privacy gate.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedPair {
    pub file: String,
    pub sources: Vec<String>,
    pub attempts: usize,
    pub seed_words: [u64; 4],
}

/// Complete record of one generated epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochManifest {
    pub epoch_index: u64,
    pub public: Vec<PublicEntry>,
    pub private: Vec<PrivateEntry>,
    pub rejected: Vec<RejectedPair>,
}

/// Mean, minimum, and median of the recorded per-sample scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSummary {
    pub mean: f64,
    pub min: f64,
    pub median: f64,
}

impl EpochManifest {
    pub fn new(epoch_index: u64) -> Self {
        EpochManifest {
            epoch_index,
            public: Vec::new(),
            private: Vec::new(),
            rejected: Vec::new(),
        }
    }

    /// Writes `public.csv`, `private.csv`, and (only when pairs were
    /// rejected) `rejected.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();

        let public_path = dir.join("public.csv");
        let mut public = String::from("file,label\n");
        for e in &self.public {
            public.push_str(&format!("{},{}\n", e.file, e.label));
        }
        std::fs::write(&public_path, public).map_err(|e| Error::io(&public_path, e))?;

        let private_path = dir.join("private.csv");
        let mut private = String::from("file,sources,lambdas,seed,score\n");
        for e in &self.private {
            let lambdas: Vec<String> = e.lambdas.iter().map(|l| fmt_sig9(*l)).collect();
            private.push_str(&format!(
                "{},{},{},{},{}\n",
                e.file,
                e.sources.join("|"),
                lambdas.join("|"),
                seed_hex(&e.seed_words),
                fmt_sig9(e.score)
            ));
        }
        std::fs::write(&private_path, private).map_err(|e| Error::io(&private_path, e))?;
        restrict_permissions(&private_path)?;

        if !self.rejected.is_empty() {
            let rejected_path = dir.join("rejected.csv");
            let mut out = String::from("file,sources,attempts,seed\n");
            for r in &self.rejected {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.file,
                    r.sources.join("|"),
                    r.attempts,
                    seed_hex(&r.seed_words)
                ));
            }
            std::fs::write(&rejected_path, out).map_err(|e| Error::io(&rejected_path, e))?;
            restrict_permissions(&rejected_path)?;
        }
        Ok(())
    }

    pub fn score_summary(&self) -> Option<ScoreSummary> {
        score_summary(&self.private)
    }
}

pub fn score_summary(private: &[PrivateEntry]) -> Option<ScoreSummary> {
    if private.is_empty() {
        return None;
    }
    let mut scores: Vec<f64> = private.iter().map(|e| e.score).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let median = if scores.len() % 2 == 1 {
        scores[scores.len() / 2]
    } else {
        (scores[scores.len() / 2 - 1] + scores[scores.len() / 2]) / 2.0
    };
    Some(ScoreSummary {
        mean,
        min: scores[0],
        median,
    })
}

fn seed_hex(words: &[u64; 4]) -> String {
    let mut out = String::with_capacity(64);
    for w in words {
        out.push_str(&format!("{w:016x}"));
    }
    out
}

fn parse_seed_hex(s: &str) -> Option<[u64; 4]> {
    if s.len() != 64 {
        return None;
    }
    let mut words = [0u64; 4];
    for (i, w) in words.iter_mut().enumerate() {
        *w = u64::from_str_radix(&s[i * 16..(i + 1) * 16], 16).ok()?;
    }
    Some(words)
}

#[cfg(unix)]
fn restrict_permissions(path: &Path) -> Result<()> {
    use std::os::unix::fs::PermissionsExt;
    std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o600))
        .map_err(|e| Error::io(path, e))
}

#[cfg(not(unix))]
fn restrict_permissions(_path: &Path) -> Result<()> {
    Ok(())
}

/// Reads a `public.csv` back. Strict two-field rows only: a public manifest
/// must not carry anything beyond file and label.
pub fn read_public(dir: impl AsRef<Path>) -> Result<Vec<PublicEntry>> {
    let path = dir.as_ref().join("public.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "file,label")) => {}
        Some((_, other)) => {
            return Err(Error::RecordParse {
                line: 1,
                reason: format!("expected header 'file,label', got '{other}'"),
            })
        }
        None => return Err(Error::NoRecords(format!("{} is empty", path.display()))),
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::RecordParse {
                line: idx as u64 + 1,
                reason: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        entries.push(PublicEntry {
            file: fields[0].to_string(),
            label: fields[1].to_string(),
        });
    }
    Ok(entries)
}

/// Reads a `private.csv` back.
pub fn read_private(dir: impl AsRef<Path>) -> Result<Vec<PrivateEntry>> {
    let path = dir.as_ref().join("private.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "file,sources,lambdas,seed,score")) => {}
        Some((_, other)) => {
            return Err(Error::RecordParse {
                line: 1,
                reason: format!("unexpected private manifest header '{other}'"),
            })
        }
        None => return Err(Error::NoRecords(format!("{} is empty", path.display()))),
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx as u64 + 1;
        let parse_err = |reason: String| Error::RecordParse {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(format!(
                "expected 5 fields, got {}",
                fields.len()
            )));
        }
        let lambdas: Vec<f64> = fields[2]
            .split('|')
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|_| parse_err(format!("bad lambda '{l}'")))
            })
            .collect::<Result<_>>()?;
        let seed_words = parse_seed_hex(fields[3])
            .ok_or_else(|| parse_err(format!("bad seed '{}'", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| parse_err(format!("bad score '{}'", fields[4])))?;
        entries.push(PrivateEntry {
            file: fields[0].to_string(),
            sources: fields[1].split('|').map(str::to_string).collect(),
            lambdas,
            seed_words,
            score,
        });
    }
    Ok(entries)
}

/// Writes a human-readable epoch summary line.
pub fn write_summary_line(
    mut out: impl Write,
    manifest: &EpochManifest,
    metric: crate::metrics::MetricId,
) -> std::io::Result<()> {
    match manifest.score_summary() {
        Some(s) => writeln!(
            out,
            "epoch {}: {} samples, {} rejected; {} mean={} min={} median={}",
            manifest.epoch_index,
            manifest.public.len(),
            manifest.rejected.len(),
            metric,
            fmt_sig9(s.mean),
            fmt_sig9(s.min),
            fmt_sig9(s.median)
        ),
        None => writeln!(
            out,
            "epoch {}: 0 samples, {} rejected",
            manifest.epoch_index,
            manifest.rejected.len()
        ),
    }
}
