//! Fréchet distance between Gaussians fitted to feature sets.
//!
//! `d² = ||mu1 - mu2||² + Tr(S1 + S2 - 2 (S1 S2)^(1/2))`. The matrix square
//! root is taken through symmetric eigendecompositions with negative
//! eigenvalues clipped to zero; `Tr((S1 S2)^(1/2))` is computed from the
//! congruent symmetric form `A S2 A` with `A = S1^(1/2)`. Feature vectors are
//! produced externally (deep features); this module only consumes them.
//!
//! A single-vector set has zero covariance, so the distance degenerates to
//! the squared Euclidean distance between the two vectors.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::{MetricId, PrivacyScore};

/// A non-empty collection of equal-length feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl FeatureSet {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match vectors.first() {
            Some(v) => v.len(),
            None => return Err(Error::InvalidParameter("empty feature set".into())),
        };
        if dim == 0 {
            return Err(Error::InvalidParameter("zero-length feature vector".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "feature vector {i} has length {} but the set dimensionality is {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "feature vector {i} contains non-finite values"
                )));
            }
        }
        Ok(FeatureSet { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Reads the feature file format: a `dim=<d>` header line, then one
    /// whitespace-separated float vector per line.
    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines().enumerate();

        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::NoRecords(format!("{} is empty", path.display()))),
        };
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| Error::RecordParse {
                line: 1,
                reason: format!("expected 'dim=<d>' header, got '{header}'"),
            })?;

        let mut vectors = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let vector: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::RecordParse {
                        line: idx as u64 + 1,
                        reason: format!("bad float '{tok}'"),
                    })
                })
                .collect::<Result<_>>()?;
            if vector.len() != dim {
                return Err(Error::RecordParse {
                    line: idx as u64 + 1,
                    reason: format!("expected {dim} values, got {}", vector.len()),
                });
            }
            vectors.push(vector);
        }
        if vectors.is_empty() {
            return Err(Error::NoRecords(format!(
                "{} has no feature vectors",
                path.display()
            )));
        }
        FeatureSet::new(vectors)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "dim={}", self.dim).map_err(|e| Error::io(path, e))?;
        for v in &self.vectors {
            let line: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
            writeln!(file, "{}", line.join(" ")).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

/// Fréchet distance between the Gaussians fitted to the two sets.
///
/// The covariance arguments are reordered into a canonical order before the
/// matrix square root, so both argument orders evaluate the identical float
/// expression and the distance is exactly symmetric.
pub fn frechet_distance(f1: &FeatureSet, f2: &FeatureSet) -> Result<PrivacyScore> {
    if f1.dim() != f2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature dimensionality {} vs {}",
            f1.dim(),
            f2.dim()
        )));
    }
    let d = f1.dim();
    let mu1 = mean(f1);
    let mu2 = mean(f2);
    let mean_dist: f64 = mu1.iter().zip(&mu2).map(|(a, b)| (a - b) * (a - b)).sum();

    let s1 = covariance(f1, &mu1);
    let s2 = covariance(f2, &mu2);
    let (sa, sb) = if canonical_le(&s1, &s2) {
        (&s1, &s2)
    } else {
        (&s2, &s1)
    };

    let tr_sqrt = trace_sqrt_product(sa, sb, d);
    let value = (mean_dist + sa.trace() + sb.trace() - 2.0 * tr_sqrt).max(0.0);
    Ok(PrivacyScore {
        metric: MetricId::Fid,
        value,
    })
}

/// Deterministic total preorder on matrices (trace first, then, if the
/// traces tie exactly, elementwise comparison).
fn canonical_le(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let (ta, tb) = (a.trace(), b.trace());
    if ta != tb {
        return ta < tb;
    }
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x < y;
        }
    }
    true
}

fn mean(f: &FeatureSet) -> Vec<f64> {
    let mut mu = vec![0.0; f.dim()];
    for v in f.vectors() {
        for (m, x) in mu.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mu {
        *m /= f.len() as f64;
    }
    mu
}

/// Sample covariance with the n-1 normalization; a single vector yields the
/// zero matrix.
fn covariance(f: &FeatureSet, mu: &[f64]) -> DMatrix<f64> {
    let d = f.dim();
    let n = f.len();
    let mut cov = DMatrix::zeros(d, d);
    if n < 2 {
        return cov;
    }
    for v in f.vectors() {
        for i in 0..d {
            let di = v[i] - mu[i];
            for j in i..d {
                cov[(i, j)] += di * (v[j] - mu[j]);
            }
        }
    }
    let norm = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= norm;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// `Tr((S1 S2)^(1/2))` via `A = S1^(1/2)` and the symmetric product
/// `A S2 A`, which shares the nonzero spectrum of `S1 S2`.
fn trace_sqrt_product(s1: &DMatrix<f64>, s2: &DMatrix<f64>, d: usize) -> f64 {
    let root = sqrt_sym(s1, d);
    let inner = &root * s2 * &root;
    let sym = symmetrize(inner);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum()
}

fn sqrt_sym(m: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let eig = symmetrize(m.clone()).symmetric_eigen();
    let mut diag = DMatrix::zeros(d, d);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        diag[(i, i)] = l.max(0.0).sqrt();
    }
    &eig.eigenvectors * diag * eig.eigenvectors.transpose()
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    m += t;
    m *= 0.5;
    m
}
