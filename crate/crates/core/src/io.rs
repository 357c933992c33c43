//! Dataset files and period manifests.
//!
//! Dense files are comma-separated with a header `label,f0,...,f{d-1}`,
//! optionally preceded by a `period` column. Floats are written with the
//! shortest representation that parses back to the same value.
//!
//! Sparse-binary files start with `# dims: N`; every following line is a
//! label and the set features as `index:1`, indices 0-based and strictly
//! increasing:
//!
//! ```text
//! # dims: 20
//! 1 3:1 17:1
//! 0
//! ```
//!
//! A manifest (TOML) lists the period files of one dataset. Relative paths
//! are resolved against the manifest's directory.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{concat, FeatureMatrix, LabelVector, LabeledDataset, Partition, StorageKind, TemporalDataset};
use crate::error::{Error, Result};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Class count and benign class shared by every file of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSpace {
    pub num_classes: usize,
    pub benign_class: Option<usize>,
}

impl LabelSpace {
    pub fn binary() -> Self {
        Self {
            num_classes: 2,
            benign_class: Some(0),
        }
    }
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_label(path: &Path, line: usize, text: &str, space: LabelSpace) -> Result<usize> {
    let label: usize = text
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid label `{text}`")))?;
    if label >= space.num_classes {
        return Err(parse_err(
            path,
            line,
            format!("label {label} out of range for {} classes", space.num_classes),
        ));
    }
    Ok(label)
}

/// Rows of a dense file, with the period column when present.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFile {
    pub data: LabeledDataset,
    pub periods: Option<Vec<i64>>,
}

pub fn read_dense(path: &Path, space: LabelSpace) -> Result<DenseFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let with_period = names.first() == Some(&"period");
    let offset = usize::from(with_period);
    if names.get(offset) != Some(&"label") {
        return Err(parse_err(path, 1, "header must start with `label` or `period,label`"));
    }
    let dims = names.len() - offset - 1;
    for (j, name) in names[offset + 1..].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(parse_err(path, 1, format!("expected column `f{j}`, found `{name}`")));
        }
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut periods = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(row + 2, |p| p.line() as usize);
        if record.len() != names.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", names.len(), record.len()),
            ));
        }
        if with_period {
            periods.push(
                record[0]
                    .parse::<i64>()
                    .map_err(|_| parse_err(path, line, format!("invalid period `{}`", &record[0])))?,
            );
        }
        labels.push(parse_label(path, line, &record[offset], space)?);
        for j in 0..dims {
            let cell = &record[offset + 1 + j];
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, line, format!("invalid number `{cell}` in column f{j}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite value in row {row}, column f{j}")));
            }
            values.push(v);
        }
    }
    let features = FeatureMatrix::dense(labels.len(), dims, values)?;
    let labels = LabelVector::new(labels, space.num_classes, space.benign_class)?;
    Ok(DenseFile {
        data: LabeledDataset::new(features, labels)?,
        periods: with_period.then_some(periods),
    })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

/// Loads a dense file; a period column, if any, is ignored.
pub fn load_dense(path: &Path, space: LabelSpace) -> Result<LabeledDataset> {
    Ok(read_dense(path, space)?.data)
}

/// Loads a dense file with a period column and splits it by period, in
/// ascending period order with file order kept inside each period.
pub fn load_dense_periods(path: &Path, space: LabelSpace) -> Result<TemporalDataset> {
    let file = read_dense(path, space)?;
    let periods = file
        .periods
        .ok_or_else(|| parse_err(path, 1, "file has no `period` column"))?;
    let mut ids = periods.clone();
    ids.sort_unstable();
    ids.dedup();
    let partitions = ids
        .into_iter()
        .map(|id| {
            let rows: Vec<usize> = (0..periods.len()).filter(|&i| periods[i] == id).collect();
            Partition {
                period_id: id,
                data: file.data.select(&rows),
            }
        })
        .collect();
    TemporalDataset::new(partitions)
}

/// Writes `data` as a dense file, with a leading period column when
/// `periods` is given.
pub fn save_dense(path: &Path, data: &LabeledDataset, periods: Option<&[i64]>) -> Result<()> {
    if let Some(p) = periods {
        if p.len() != data.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: data.len(),
            });
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let d = data.dims();
    let mut header: Vec<String> = Vec::with_capacity(d + 2);
    if periods.is_some() {
        header.push("period".into());
    }
    header.push("label".into());
    header.extend((0..d).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    let f = data.features();
    for i in 0..data.len() {
        let mut rec: Vec<String> = Vec::with_capacity(d + 2);
        if let Some(p) = periods {
            rec.push(p[i].to_string());
        }
        rec.push(data.labels().labels()[i].to_string());
        let row = f.row(i);
        rec.extend((0..d).map(|j| row.get(j).to_string()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_sparse(path: &Path, space: LabelSpace) -> Result<LabeledDataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dims = None;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let n = k + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = line.trim();
        if let Some(comment) = text.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("dims:") {
                if dims.is_some() {
                    return Err(parse_err(path, n, "duplicate dims header"));
                }
                dims = Some(
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| parse_err(path, n, format!("invalid dims `{}`", v.trim())))?,
                );
            }
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let d = dims.ok_or_else(|| parse_err(path, n, "missing `# dims: N` header before data"))?;
        let mut tokens = text.split_whitespace();
        labels.push(parse_label(path, n, tokens.next().unwrap_or_default(), space)?);
        let mut idx: Vec<u32> = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, n, format!("expected `index:1`, found `{tok}`")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(path, n, format!("invalid index `{i}`")))?;
            if v != "1" {
                return Err(parse_err(path, n, format!("feature {i} has value `{v}`, expected 1")));
            }
            if i >= d {
                return Err(parse_err(path, n, format!("index {i} out of range for {d} dims")));
            }
            if idx.last().is_some_and(|&last| last as usize >= i) {
                return Err(parse_err(path, n, format!("index {i} not strictly increasing")));
            }
            idx.push(i as u32);
        }
        rows.push(idx);
    }
    let d = dims.ok_or_else(|| parse_err(path, 0, "missing `# dims: N` header"))?;
    let features = FeatureMatrix::sparse_binary(d, rows)?;
    LabeledDataset::new(features, LabelVector::new(labels, space.num_classes, space.benign_class)?)
}

/// Writes a sparse-binary file. Dense input is accepted when every value is
/// 0 or 1.
pub fn save_sparse(path: &Path, data: &LabeledDataset) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "# dims: {}", data.dims()).map_err(io)?;
    let f = data.features();
    for i in 0..data.len() {
        write!(w, "{}", data.labels().labels()[i]).map_err(io)?;
        for j in 0..data.dims() {
            match f.get(i, j) {
                0.0 => {}
                1.0 => write!(w, " {j}:1").map_err(io)?,
                v => {
                    return Err(Error::InvalidSparseRow {
                        row: i,
                        reason: format!("value {v} in column {j} is not binary"),
                    })
                }
            }
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodEntry {
    pub period_id: i64,
    pub path: PathBuf,
    pub rows: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub dims: usize,
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benign_class: Option<usize>,
    pub storage: StorageKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_names: Vec<String>,
    pub periods: Vec<PeriodEntry>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn label_space(&self) -> LabelSpace {
        LabelSpace {
            num_classes: self.num_classes,
            benign_class: self.benign_class,
        }
    }

    pub fn resolve(&self, entry: &PeriodEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn entries(&self, split: Split) -> impl Iterator<Item = &PeriodEntry> {
        self.periods.iter().filter(move |p| p.split == split)
    }

    fn validate_header(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Manifest(format!(
                "schema_version {} unsupported (expected {MANIFEST_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::Manifest("num_classes must be at least 2".into()));
        }
        if let Some(b) = self.benign_class {
            if b >= self.num_classes {
                return Err(Error::Manifest(format!("benign_class {b} out of range")));
            }
        }
        if !self.class_names.is_empty() && self.class_names.len() != self.num_classes {
            return Err(Error::Manifest(format!(
                "{} class names for {} classes",
                self.class_names.len(),
                self.num_classes
            )));
        }
        if self.periods.is_empty() {
            return Err(Error::Manifest("no periods listed".into()));
        }
        for w in self.periods.windows(2) {
            if w[0].period_id == w[1].period_id {
                return Err(Error::Manifest(format!("period {} listed twice", w[0].period_id)));
            }
        }
        Ok(())
    }

    fn load_entry(&self, entry: &PeriodEntry) -> Result<LabeledDataset> {
        let path = self.resolve(entry);
        if !path.is_file() {
            return Err(Error::MissingPeriodFile {
                period: entry.period_id,
                path,
            });
        }
        let data = match self.storage {
            StorageKind::Dense => load_dense(&path, self.label_space())?,
            StorageKind::SparseBinary => load_sparse(&path, self.label_space())?,
        };
        if data.len() != entry.rows {
            return Err(Error::RowCountMismatch {
                period: entry.period_id,
                declared: entry.rows,
                found: data.len(),
            });
        }
        if data.dims() != self.dims {
            return Err(Error::Manifest(format!(
                "period {}: file has {} features, manifest declares {}",
                entry.period_id,
                data.dims(),
                self.dims
            )));
        }
        Ok(data)
    }

    /// Loads every period, in period order.
    pub fn load_all(&self) -> Result<TemporalDataset> {
        let parts = self
            .periods
            .par_iter()
            .map(|e| {
                Ok(Partition {
                    period_id: e.period_id,
                    data: self.load_entry(e)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TemporalDataset::new(parts)
    }

    /// Training data (all train periods concatenated) and the validation
    /// and test streams. Either stream may be empty.
    pub fn load_splits(&self) -> Result<LoadedSplits> {
        let all = self.load_all()?;
        let mut train = Vec::new();
        let mut validation = Vec::new();
        let mut test = Vec::new();
        for (entry, part) in self.periods.iter().zip(all.partitions()) {
            match entry.split {
                Split::Train => train.push(part.data.clone()),
                Split::Validation => validation.push(part.clone()),
                Split::Test => test.push(part.clone()),
            }
        }
        let train = if train.is_empty() {
            LabeledDataset::empty(self.dims, self.storage, self.num_classes, self.benign_class)?
        } else {
            concat(&train.iter().collect::<Vec<_>>())?
        };
        Ok(LoadedSplits {
            train,
            validation: TemporalDataset::new(validation)?,
            test: TemporalDataset::new(test)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSplits {
    pub train: LabeledDataset,
    pub validation: TemporalDataset,
    pub test: TemporalDataset,
}

/// Reads a manifest, sorts its periods and checks every referenced file's
/// presence and row count.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m: DatasetManifest = toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    m.periods.sort_by_key(|p| p.period_id);
    m.validate_header()?;
    for entry in &m.periods {
        let file = m.resolve(entry);
        if !file.is_file() {
            return Err(Error::MissingPeriodFile {
                period: entry.period_id,
                path: file,
            });
        }
        let found = count_rows(&file, m.storage)?;
        if found != entry.rows {
            return Err(Error::RowCountMismatch {
                period: entry.period_id,
                declared: entry.rows,
                found,
            });
        }
    }
    Ok(m)
}

fn count_rows(path: &Path, storage: StorageKind) -> Result<usize> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut n = 0usize;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            n += 1;
        }
    }
    Ok(match storage {
        StorageKind::Dense => n.saturating_sub(1),
        StorageKind::SparseBinary => n,
    })
}

pub fn save_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let text = toml::to_string_pretty(manifest).map_err(|e| Error::Serialization(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes one file per period into `dir` (`period_<id>.csv` or `.svm`) and
/// the manifest describing them as `dir/manifest.toml`.
pub fn write_partitioned(
    dir: &Path,
    periods: &[(Split, &Partition)],
    storage: StorageKind,
    class_names: Vec<String>,
) -> Result<DatasetManifest> {
    let first = &periods.first().ok_or(Error::EmptyDataset)?.1.data;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(periods.len());
    for (split, part) in periods {
        let ext = match storage {
            StorageKind::Dense => "csv",
            StorageKind::SparseBinary => "svm",
        };
        let name = PathBuf::from(format!("period_{}.{ext}", part.period_id));
        let target = dir.join(&name);
        match storage {
            StorageKind::Dense => save_dense(&target, &part.data, None)?,
            StorageKind::SparseBinary => save_sparse(&target, &part.data)?,
        }
        entries.push(PeriodEntry {
            period_id: part.period_id,
            path: name,
            rows: part.data.len(),
            split: *split,
        });
    }
    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        dims: first.dims(),
        num_classes: first.num_classes(),
        benign_class: first.labels().benign_class(),
        storage,
        class_names,
        periods: entries,
        base_dir: dir.to_path_buf(),
    };
    manifest.validate_header()?;
    save_manifest(&dir.join("manifest.toml"), &manifest)?;
    Ok(manifest)
}
