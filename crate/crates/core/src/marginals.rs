//! Per-variable categorical marginal tables.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarginalError {
    #[error("marginal tables differ in shape: {0}")]
    ShapeMismatch(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no marginal row for `{0}`")]
    MissingVariable(String),
}

/// Probability rows per variable plus the number of samples they came from
/// (zero for exact tables).
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalEstimate {
    names: Vec<String>,
    probs: Vec<Vec<f64>>,
    samples: u64,
}

impl MarginalEstimate {
    pub fn new(names: Vec<String>, probs: Vec<Vec<f64>>, samples: u64) -> Self {
        assert_eq!(names.len(), probs.len(), "one row per variable");
        MarginalEstimate {
            names,
            probs,
            samples,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn row(&self, var: usize) -> &[f64] {
        &self.probs[var]
    }

    pub fn row_by_name(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.probs[i].as_slice())
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Selects rows by name, in the given order.
    pub fn restrict_to(&self, names: &[String]) -> Result<Self, MarginalError> {
        let probs = names
            .iter()
            .map(|n| {
                self.row_by_name(n)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| MarginalError::MissingVariable(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MarginalEstimate::new(names.to_vec(), probs, self.samples))
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<(), MarginalError> {
        if self.names != other.names {
            return Err(MarginalError::ShapeMismatch("variable names differ".into()));
        }
        for (name, (a, b)) in self.names.iter().zip(self.probs.iter().zip(&other.probs)) {
            if a.len() != b.len() {
                return Err(MarginalError::ShapeMismatch(format!(
                    "`{name}` has {} vs {} values",
                    a.len(),
                    b.len()
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, MarginalError> {
        self.check_same_shape(other)?;
        Ok(self
            .probs
            .iter()
            .flatten()
            .zip(other.probs.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Marginal file: `<name> p0 p1 ... p_{d-1}` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, row) in self.names.iter().zip(&self.probs) {
            out.push_str(name);
            for p in row {
                let _ = write!(out, " {p}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, MarginalError> {
        let mut names = Vec::new();
        let mut probs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let name = tokens.next().expect("non-empty line");
            let row = tokens
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MarginalError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if row.is_empty() {
                return Err(MarginalError::Parse {
                    line: i + 1,
                    message: format!("no probabilities for `{name}`"),
                });
            }
            names.push(name.to_owned());
            probs.push(row);
        }
        Ok(MarginalEstimate::new(names, probs, 0))
    }
}

/// Running value counts for sampled states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalCounter {
    counts: Vec<Vec<u64>>,
    samples: u64,
}

impl MarginalCounter {
    pub fn new(domain_sizes: &[usize]) -> Self {
        MarginalCounter {
            counts: domain_sizes.iter().map(|&d| vec![0; d]).collect(),
            samples: 0,
        }
    }

    #[inline]
    pub fn observe(&mut self, state: &State) {
        for (row, &value) in self.counts.iter_mut().zip(state.values()) {
            row[value] += 1;
        }
        self.samples += 1;
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.samples += other.samples;
    }

    /// Normalized frequencies; uniform rows before any sample is observed.
    pub fn estimate(&self, names: Vec<String>) -> MarginalEstimate {
        let probs = self
            .counts
            .iter()
            .map(|row| {
                if self.samples == 0 {
                    vec![1.0 / row.len() as f64; row.len()]
                } else {
                    row.iter()
                        .map(|&c| c as f64 / self.samples as f64)
                        .collect()
                }
            })
            .collect();
        MarginalEstimate::new(names, probs, self.samples)
    }
}
