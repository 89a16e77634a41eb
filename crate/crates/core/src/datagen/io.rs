use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{rng, ContaminationSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// How to read a labelled CSV file (with a header row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label_column: String,
    /// Raw label values mapped to `+1`.
    pub positive: Vec<String>,
    /// Raw label values mapped to `-1`.
    pub negative: Vec<String>,
    /// Feature columns in order; `None` takes every other column except the
    /// mask column.
    #[serde(default)]
    pub feature_columns: Option<Vec<String>>,
    /// Optional 0/1 column read into the contamination mask.
    #[serde(default)]
    pub mask_column: Option<String>,
}

impl CsvSchema {
    /// Schema of files written by [`write_csv`]: label column `y` holding
    /// `1`/`-1`, optional `outlier` mask column.
    pub fn numeric(label_column: &str) -> Self {
        Self {
            label_column: label_column.to_string(),
            positive: vec!["1".into(), "+1".into(), "1.0".into()],
            negative: vec!["-1".into(), "-1.0".into()],
            feature_columns: None,
            mask_column: Some(MASK_COLUMN.into()),
        }
    }
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self::numeric(LABEL_COLUMN)
    }
}

const LABEL_COLUMN: &str = "y";
const MASK_COLUMN: &str = "outlier";

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidData(format!("{}: no column `{name}`", path.display())))
    };
    let label_col = column(&schema.label_column)?;
    let mask_col = match &schema.mask_column {
        Some(m) => headers.iter().position(|h| h == m),
        None => None,
    };
    let feature_cols: Vec<usize> = match &schema.feature_columns {
        Some(cols) => cols.iter().map(|c| column(c)).collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|&i| i != label_col && Some(i) != mask_col)
            .collect(),
    };
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut mask = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = row + 2;
        for &c in &feature_cols {
            let raw = &record[c];
            let v: f64 = raw.parse().map_err(|_| {
                Error::InvalidData(format!(
                    "{}:{line}: non-numeric value `{raw}` in column `{}`",
                    path.display(),
                    &headers[c]
                ))
            })?;
            features.push(v);
        }
        let raw = &record[label_col];
        let y = if schema.positive.iter().any(|p| p == raw) {
            1.0
        } else if schema.negative.iter().any(|p| p == raw) {
            -1.0
        } else {
            return Err(Error::InvalidData(format!(
                "{}:{line}: unknown label `{raw}`",
                path.display()
            )));
        };
        labels.push(y);
        if let Some(m) = mask_col {
            mask.push(matches!(&record[m], "1" | "true"));
        }
    }
    let d = Dataset::new(features, labels, feature_cols.len())?;
    if mask_col.is_some() {
        d.with_mask(mask)
    } else {
        Ok(d)
    }
}

/// Writes `x1..xd,y[,outlier]` with 17-significant-digit round-trip floats.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header: Vec<String> = (1..=data.n_features()).map(|j| format!("x{j}")).collect();
    header.push(LABEL_COLUMN.into());
    if data.mask().is_some() {
        header.push(MASK_COLUMN.into());
    }
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(format!("{}", data.labels()[i] as i32));
        if let Some(m) = data.mask() {
            rec.push(if m[i] { "1" } else { "0" }.into());
        }
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Provenance record stored beside every emitted dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub generator: String,
    pub seed: u64,
    pub n: usize,
    pub n_features: usize,
    pub positive_fraction: f64,
    pub contamination: Option<ContaminationSpec>,
}

impl DatasetManifest {
    pub fn describe(generator: &str, seed: u64, data: &Dataset, contamination: Option<ContaminationSpec>) -> Self {
        Self {
            generator: generator.to_string(),
            seed,
            n: data.len(),
            n_features: data.n_features(),
            positive_fraction: data.positive_fraction(),
            contamination,
        }
    }
}

/// `data.csv` → `data.csv.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the CSV and its manifest.
pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset, manifest: &DatasetManifest) -> Result<()> {
    let path = path.as_ref();
    write_csv(path, data)?;
    let mpath = manifest_path(path);
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))
}

pub fn load_manifest(dataset_path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let mpath = manifest_path(dataset_path.as_ref());
    let s = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    Ok(serde_json::from_str(&s)?)
}

/// Seeded permutation split into (train, validation, test). The first two
/// sizes are `round(f·n)`; the test part takes the rest.
pub fn split(data: &Dataset, fractions: [f64; 3], seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    if fractions.iter().any(|f| !(*f >= 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split fractions must be non-negative and sum to 1, got {fractions:?}"
        )));
    }
    let n = data.len();
    let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(seed));
    Ok((
        data.subset(&perm[..n_train]),
        data.subset(&perm[n_train..n_train + n_val]),
        data.subset(&perm[n_train + n_val..]),
    ))
}

/// Per-feature affine map to mean 0, variance 1, fitted on one dataset and
/// applied to others. Constant features are only centred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = data.n_features();
        let n = data.len() as f64;
        let mut means = vec![0.0; d];
        for x in data.rows() {
            for (m, v) in means.iter_mut().zip(x) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for x in data.rows() {
            for ((s, v), m) in vars.iter_mut().zip(x).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let scales = vars
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { means, scales })
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.n_features() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                actual: data.n_features(),
            });
        }
        let mut out = data.clone();
        let d = self.means.len();
        for (j, x) in out.features_mut().iter_mut().enumerate() {
            let k = j % d;
            *x = (*x - self.means[k]) / self.scales[k];
        }
        Ok(out)
    }
}
