use std::collections::HashSet;

use crate::error::{Result, TeamError};

/// Tolerance on the sum of every probability row read from input.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A finite set of distinguishable labels. Index order is the canonical
/// enumeration order used by every table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteSpace {
    labels: Vec<String>,
}

impl FiniteSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(TeamError::InvalidConfig(
                "a finite space needs at least one label".into(),
            ));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(TeamError::InvalidConfig(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// Labels `prefix0 .. prefix{n-1}`.
    pub fn indexed(prefix: &str, n: usize) -> Self {
        assert!(n > 0, "a finite space needs at least one label");
        Self {
            labels: (0..n).map(|i| format!("{prefix}{i}")).collect(),
        }
    }

    /// Builds a space without checking distinctness; [`crate::model::TeamSpec::validate`]
    /// reports any problem.
    pub fn from_labels_unchecked(labels: Vec<String>) -> Self {
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub(crate) fn has_duplicates(&self) -> bool {
        let mut seen = HashSet::new();
        !self.labels.iter().all(|l| seen.insert(l.as_str()))
    }
}

/// A probability vector over a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(problem) = row_problem(&probs) {
            return Err(TeamError::InvalidConfig(format!("distribution {problem}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn from_probs_unchecked(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Describes what is wrong with a probability row, if anything.
pub(crate) fn row_problem(row: &[f64]) -> Option<String> {
    if row.is_empty() {
        return Some("is empty".into());
    }
    if let Some((i, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Some(format!("has invalid entry {v} at index {i}"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Some(format!("sums to {sum}"));
    }
    None
}

/// A stochastic kernel from a product of finite spaces to one finite space.
///
/// Rows are stored contiguously: row `r` (the lexicographic index of the
/// input tuple, first input slowest) occupies `table[r * out .. (r + 1) * out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    input_dims: Vec<usize>,
    output_dim: usize,
    table: Vec<f64>,
}

impl Kernel {
    pub fn from_table(input_dims: Vec<usize>, output_dim: usize, table: Vec<f64>) -> Self {
        Self {
            input_dims,
            output_dim,
            table,
        }
    }

    /// Builds a kernel by evaluating `row_fn(input_index_tuple)` for every row.
    pub fn from_fn(input_dims: Vec<usize>, output_dim: usize, mut row_fn: impl FnMut(&[usize]) -> Vec<f64>) -> Self {
        let radix = crate::layout::MixedRadix::new(&input_dims);
        let mut table = Vec::with_capacity(radix.size() * output_dim);
        let mut digits = vec![0; input_dims.len()];
        for r in 0..radix.size() {
            radix.digits_into(r, &mut digits);
            let row = row_fn(&digits);
            assert_eq!(row.len(), output_dim, "kernel row has wrong length");
            table.extend_from_slice(&row);
        }
        Self {
            input_dims,
            output_dim,
            table,
        }
    }

    /// A kernel that ignores its inputs and always draws from `dist`.
    pub fn constant(input_dims: Vec<usize>, dist: &Distribution) -> Self {
        let rows: usize = input_dims.iter().product();
        let mut table = Vec::with_capacity(rows * dist.len());
        for _ in 0..rows {
            table.extend_from_slice(dist.probs());
        }
        Self {
            input_dims,
            output_dim: dist.len(),
            table,
        }
    }

    /// A deterministic kernel `output = f(inputs)`.
    pub fn deterministic(input_dims: Vec<usize>, output_dim: usize, mut f: impl FnMut(&[usize]) -> usize) -> Self {
        Self::from_fn(input_dims, output_dim, |d| {
            let mut row = vec![0.0; output_dim];
            row[f(d)] = 1.0;
            row
        })
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn row_count(&self) -> usize {
        self.input_dims.iter().product()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.table[r * self.output_dim..(r + 1) * self.output_dim]
    }

    #[inline]
    pub fn prob(&self, r: usize, y: usize) -> f64 {
        self.table[r * self.output_dim + y]
    }
}

/// Non-negative cost over `Ω0 × U^1 × … × U^N`, lexicographic with `ω0` slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl CostTable {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Self {
        Self { dims, values }
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let radix = crate::layout::MixedRadix::new(&dims);
        let mut digits = vec![0; dims.len()];
        let values = (0..radix.size())
            .map(|i| {
                radix.digits_into(i, &mut digits);
                f(&digits)
            })
            .collect();
        Self { dims, values }
    }

    pub fn constant(dims: Vec<usize>, value: f64) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            values: vec![value; n],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}
