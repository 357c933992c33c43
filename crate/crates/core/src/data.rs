//! Feature matrices, label vectors and time-partitioned datasets.
//!
//! Every type here is immutable once constructed: constructors validate the
//! invariants and the rest of the crate derives new values instead of
//! mutating existing ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the values of a [`FeatureMatrix`] are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageKind {
    Dense,
    SparseBinary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Storage {
    /// Row-major values.
    Dense(Vec<f64>),
    /// CSR layout without values: every stored entry equals 1.
    SparseBinary {
        offsets: Vec<usize>,
        indices: Vec<u32>,
    },
}

/// A borrowed view of one row.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    /// Sorted column indices whose value is 1.
    Sparse(&'a [u32]),
}

impl Row<'_> {
    pub fn get(&self, col: usize) -> f64 {
        match self {
            Row::Dense(v) => v[col],
            Row::Sparse(idx) => {
                if idx.binary_search(&(col as u32)).is_ok() {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        match self {
            Row::Dense(v) => v.iter().zip(weights).map(|(a, b)| a * b).sum(),
            Row::Sparse(idx) => idx.iter().map(|&j| weights[j as usize]).sum(),
        }
    }

    /// `out += scale * row`
    pub fn add_scaled_to(&self, scale: f64, out: &mut [f64]) {
        match self {
            Row::Dense(v) => {
                for (o, x) in out.iter_mut().zip(v.iter()) {
                    *o += scale * x;
                }
            }
            Row::Sparse(idx) => {
                for &j in idx.iter() {
                    out[j as usize] += scale;
                }
            }
        }
    }

    pub fn to_dense(&self, dims: usize) -> Vec<f64> {
        match self {
            Row::Dense(v) => v.to_vec(),
            Row::Sparse(idx) => {
                let mut out = vec![0.0; dims];
                for &j in idx.iter() {
                    out[j as usize] = 1.0;
                }
                out
            }
        }
    }
}

/// A matrix of feature vectors, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    dims: usize,
    storage: Storage,
}

impl FeatureMatrix {
    /// Builds a dense matrix from row-major values.
    pub fn dense(rows: usize, dims: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * dims {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: rows * dims,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dims.max(1),
                col: pos % dims.max(1),
            });
        }
        Ok(Self {
            rows,
            dims,
            storage: Storage::Dense(values),
        })
    }

    pub fn from_rows(dims: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * dims);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dims {
                return Err(Error::DimensionMismatch {
                    index: i,
                    expected: dims,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::dense(rows.len(), dims, values)
    }

    /// Builds a sparse-binary matrix; each row lists the columns set to 1,
    /// strictly increasing.
    pub fn sparse_binary(dims: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for (i, r) in rows.iter().enumerate() {
            for (k, &j) in r.iter().enumerate() {
                if j as usize >= dims {
                    return Err(Error::InvalidSparseRow {
                        row: i,
                        reason: format!("index {j} out of range for {dims} dims"),
                    });
                }
                if k > 0 && r[k - 1] >= j {
                    return Err(Error::InvalidSparseRow {
                        row: i,
                        reason: "indices must be strictly increasing".into(),
                    });
                }
            }
            indices.extend_from_slice(r);
            offsets.push(indices.len());
        }
        Ok(Self {
            rows: rows.len(),
            dims,
            storage: Storage::SparseBinary { offsets, indices },
        })
    }

    pub fn empty(dims: usize, kind: StorageKind) -> Self {
        match kind {
            StorageKind::Dense => Self {
                rows: 0,
                dims,
                storage: Storage::Dense(Vec::new()),
            },
            StorageKind::SparseBinary => Self {
                rows: 0,
                dims,
                storage: Storage::SparseBinary {
                    offsets: vec![0],
                    indices: Vec::new(),
                },
            },
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn storage_kind(&self) -> StorageKind {
        match self.storage {
            Storage::Dense(_) => StorageKind::Dense,
            Storage::SparseBinary { .. } => StorageKind::SparseBinary,
        }
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.storage {
            Storage::Dense(v) => Row::Dense(&v[i * self.dims..(i + 1) * self.dims]),
            Storage::SparseBinary { offsets, indices } => {
                Row::Sparse(&indices[offsets[i]..offsets[i + 1]])
            }
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.row(row).get(col)
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = Row<'_>> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Row-major dense copy of the values.
    pub fn to_dense_values(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(v) => v.clone(),
            Storage::SparseBinary { .. } => {
                let mut out = vec![0.0; self.rows * self.dims];
                for i in 0..self.rows {
                    if let Row::Sparse(idx) = self.row(i) {
                        for &j in idx {
                            out[i * self.dims + j as usize] = 1.0;
                        }
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> FeatureMatrix {
        FeatureMatrix {
            rows: self.rows,
            dims: self.dims,
            storage: Storage::Dense(self.to_dense_values()),
        }
    }

    /// Copies the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        match &self.storage {
            Storage::Dense(v) => {
                let mut out = Vec::with_capacity(rows.len() * self.dims);
                for &i in rows {
                    out.extend_from_slice(&v[i * self.dims..(i + 1) * self.dims]);
                }
                FeatureMatrix {
                    rows: rows.len(),
                    dims: self.dims,
                    storage: Storage::Dense(out),
                }
            }
            Storage::SparseBinary { offsets, indices } => {
                let mut new_offsets = Vec::with_capacity(rows.len() + 1);
                let mut new_indices = Vec::new();
                new_offsets.push(0);
                for &i in rows {
                    new_indices.extend_from_slice(&indices[offsets[i]..offsets[i + 1]]);
                    new_offsets.push(new_indices.len());
                }
                FeatureMatrix {
                    rows: rows.len(),
                    dims: self.dims,
                    storage: Storage::SparseBinary {
                        offsets: new_offsets,
                        indices: new_indices,
                    },
                }
            }
        }
    }

    /// Stacks matrices vertically. Sparse-binary inputs stay sparse only if
    /// every input is sparse-binary; otherwise the result is dense.
    pub fn vstack(parts: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
        let Some(first) = parts.first() else {
            return Err(Error::EmptyDataset);
        };
        let dims = first.dims;
        for (i, p) in parts.iter().enumerate() {
            if p.dims != dims {
                return Err(Error::DimensionMismatch {
                    index: i,
                    expected: dims,
                    found: p.dims,
                });
            }
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let all_sparse = parts
            .iter()
            .all(|p| p.storage_kind() == StorageKind::SparseBinary);
        if all_sparse {
            let mut offsets = vec![0];
            let mut indices = Vec::new();
            for p in parts {
                for r in p.iter_rows() {
                    if let Row::Sparse(idx) = r {
                        indices.extend_from_slice(idx);
                    }
                    offsets.push(indices.len());
                }
            }
            Ok(FeatureMatrix {
                rows,
                dims,
                storage: Storage::SparseBinary { offsets, indices },
            })
        } else {
            let mut values = Vec::with_capacity(rows * dims);
            for p in parts {
                match &p.storage {
                    Storage::Dense(v) => values.extend_from_slice(v),
                    Storage::SparseBinary { .. } => values.extend(p.to_dense_values()),
                }
            }
            Ok(FeatureMatrix {
                rows,
                dims,
                storage: Storage::Dense(values),
            })
        }
    }
}

/// Integer class ids for a set of samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
    benign_class: Option<usize>,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize, benign_class: Option<usize>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if let Some(b) = benign_class {
            if b >= num_classes {
                return Err(Error::LabelOutOfRange {
                    label: b,
                    num_classes,
                });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                num_classes,
            });
        }
        Ok(Self {
            labels,
            num_classes,
            benign_class,
        })
    }

    /// Binary labels with class 0 benign.
    pub fn binary(labels: Vec<usize>) -> Result<Self> {
        Self::new(labels, 2, Some(0))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn benign_class(&self) -> Option<usize> {
        self.benign_class
    }

    pub fn select(&self, rows: &[usize]) -> LabelVector {
        LabelVector {
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            benign_class: self.benign_class,
        }
    }

    /// Same class layout, different labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<LabelVector> {
        LabelVector::new(labels, self.num_classes, self.benign_class)
    }
}

/// Number of samples per class.
pub fn class_counts(labels: &LabelVector) -> Vec<usize> {
    let mut counts = vec![0; labels.num_classes];
    for &l in &labels.labels {
        counts[l] += 1;
    }
    counts
}

/// Features paired with their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: FeatureMatrix,
    labels: LabelVector,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: LabelVector) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.rows(),
                right: labels.len(),
            });
        }
        Ok(Self { features, labels })
    }

    pub fn empty(dims: usize, kind: StorageKind, num_classes: usize, benign: Option<usize>) -> Result<Self> {
        Self::new(
            FeatureMatrix::empty(dims, kind),
            LabelVector::new(Vec::new(), num_classes, benign)?,
        )
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.features.dims()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    pub fn select(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_rows(rows),
            labels: self.labels.select(rows),
        }
    }

    pub fn into_parts(self) -> (FeatureMatrix, LabelVector) {
        (self.features, self.labels)
    }
}

/// Concatenates datasets in input order.
pub fn concat(datasets: &[&LabeledDataset]) -> Result<LabeledDataset> {
    let Some(first) = datasets.first() else {
        return Err(Error::EmptyDataset);
    };
    if datasets.len() == 1 {
        return Ok((*first).clone());
    }
    for (i, d) in datasets.iter().enumerate() {
        if d.num_classes() != first.num_classes() {
            return Err(Error::ClassCountMismatch {
                index: i,
                expected: first.num_classes(),
                found: d.num_classes(),
            });
        }
    }
    let feats: Vec<&FeatureMatrix> = datasets.iter().map(|d| &d.features).collect();
    let features = FeatureMatrix::vstack(&feats)?;
    let labels = datasets
        .iter()
        .flat_map(|d| d.labels.labels.iter().copied())
        .collect();
    LabeledDataset::new(
        features,
        LabelVector::new(labels, first.num_classes(), first.labels.benign_class)?,
    )
}

/// One period of a temporal stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub period_id: i64,
    pub data: LabeledDataset,
}

/// Time-ordered partitions sharing one feature space and class layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalDataset {
    partitions: Vec<Partition>,
}

impl TemporalDataset {
    pub fn new(partitions: Vec<Partition>) -> Result<Self> {
        for (i, w) in partitions.windows(2).enumerate() {
            if w[1].period_id <= w[0].period_id {
                return Err(Error::UnorderedPeriods {
                    previous: w[0].period_id,
                    next: w[1].period_id,
                });
            }
            if w[1].data.dims() != w[0].data.dims() {
                return Err(Error::DimensionMismatch {
                    index: i + 1,
                    expected: w[0].data.dims(),
                    found: w[1].data.dims(),
                });
            }
            if w[1].data.num_classes() != w[0].data.num_classes() {
                return Err(Error::ClassCountMismatch {
                    index: i + 1,
                    expected: w[0].data.num_classes(),
                    found: w[1].data.num_classes(),
                });
            }
        }
        Ok(Self { partitions })
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn period_ids(&self) -> Vec<i64> {
        self.partitions.iter().map(|p| p.period_id).collect()
    }

    /// All partitions concatenated in period order.
    pub fn flatten(&self) -> Result<LabeledDataset> {
        let parts: Vec<&LabeledDataset> = self.partitions.iter().map(|p| &p.data).collect();
        concat(&parts)
    }

    /// Partitions whose index lies in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TemporalDataset {
        TemporalDataset {
            partitions: self.partitions[range].to_vec(),
        }
    }
}

/// Per-sample class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMatrix {
    rows: usize,
    num_classes: usize,
    probs: Vec<f64>,
}

pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

impl ProbabilityMatrix {
    pub fn new(rows: usize, num_classes: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows * num_classes {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: rows * num_classes,
            });
        }
        if num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        for (i, row) in probs.chunks(num_classes).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidProbabilities {
                    row: i,
                    reason: "entry outside [0, 1]".into(),
                });
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidProbabilities {
                    row: i,
                    reason: format!("row sums to {s}"),
                });
            }
        }
        Ok(Self {
            rows,
            num_classes,
            probs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let c = rows.first().map_or(2, |r| r.len());
        let mut probs = Vec::with_capacity(rows.len() * c);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != c {
                return Err(Error::DimensionMismatch {
                    index: i,
                    expected: c,
                    found: r.len(),
                });
            }
            probs.extend_from_slice(r);
        }
        Self::new(rows.len(), c, probs)
    }

    /// Expands single-output scores `p1` into `[1 - p1, p1]` rows.
    pub fn from_positive(p1: &[f64]) -> Result<Self> {
        let probs = p1.iter().flat_map(|&p| [1.0 - p, p]).collect();
        Self::new(p1.len(), 2, probs)
    }

    /// One-hot rows for hard labels.
    pub fn one_hot(labels: &LabelVector) -> Self {
        let c = labels.num_classes();
        let mut probs = vec![0.0; labels.len() * c];
        for (i, &l) in labels.labels().iter().enumerate() {
            probs[i * c + l] = 1.0;
        }
        Self {
            rows: labels.len(),
            num_classes: c,
            probs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn values(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_prob(&self, i: usize) -> f64 {
        self.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Predicted class of row `i`; see [`argmax`] for the tie-break.
    pub fn argmax(&self, i: usize, benign: Option<usize>) -> usize {
        argmax(self.row(i), benign)
    }

    pub fn predictions(&self, benign: Option<usize>) -> Vec<usize> {
        (0..self.rows).map(|i| self.argmax(i, benign)).collect()
    }

    pub fn select(&self, rows: &[usize]) -> ProbabilityMatrix {
        let mut probs = Vec::with_capacity(rows.len() * self.num_classes);
        for &i in rows {
            probs.extend_from_slice(self.row(i));
        }
        ProbabilityMatrix {
            rows: rows.len(),
            num_classes: self.num_classes,
            probs,
        }
    }

    pub fn vstack(parts: &[&ProbabilityMatrix]) -> Result<ProbabilityMatrix> {
        let Some(first) = parts.first() else {
            return Err(Error::EmptyDataset);
        };
        let mut probs = Vec::new();
        for (i, p) in parts.iter().enumerate() {
            if p.num_classes != first.num_classes {
                return Err(Error::ClassCountMismatch {
                    index: i,
                    expected: first.num_classes,
                    found: p.num_classes,
                });
            }
            probs.extend_from_slice(&p.probs);
        }
        Ok(ProbabilityMatrix {
            rows: parts.iter().map(|p| p.rows).sum(),
            num_classes: first.num_classes,
            probs,
        })
    }
}

/// Index of the largest entry. Ties resolve to `benign` when it is among
/// the maxima, otherwise to the lowest index.
pub fn argmax(row: &[f64], benign: Option<usize>) -> usize {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(b) = benign {
        if row[b] == max {
            return b;
        }
    }
    row.iter().position(|&p| p == max).unwrap_or(0)
}
