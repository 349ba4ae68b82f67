use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::build::{Dataset, DatasetKind, Shared};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
const SHARED: &str = "shared.csv";
const INSTANCES: &str = "instances.csv";
const SOLUTIONS: &str = "solutions.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub kind: DatasetKind,
    pub m: usize,
    pub n: usize,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<f64>,
    pub seed: u64,
    pub split: Split,
    pub certificates: Vec<f64>,
    pub max_certificate: f64,
    /// SHA-256 of each payload file.
    pub checksums: BTreeMap<String, String>,
}

fn csv_bytes<'a>(rows: impl Iterator<Item = &'a [f64]>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn matrix_rows(m: &DenseMatrix) -> impl Iterator<Item = &[f64]> {
    (0..m.rows()).map(move |i| m.row(i))
}

/// Saves the dataset to `dir` as `manifest.json` plus CSV payloads.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<Manifest> {
    dataset.check_shape()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let shared = match &dataset.shared {
        Shared::Lasso { dictionary, .. } => csv_bytes(matrix_rows(dictionary))?,
        Shared::Ot { cost } => csv_bytes(matrix_rows(cost))?,
    };
    let instances = csv_bytes(dataset.instances.iter().map(Vec::as_slice))?;
    let solutions = csv_bytes(dataset.solutions.iter().map(Vec::as_slice))?;
    let mut checksums = BTreeMap::new();
    for (name, bytes) in [(SHARED, &shared), (INSTANCES, &instances), (SOLUTIONS, &solutions)] {
        write_atomic(&dir.join(name), bytes)?;
        checksums.insert(name.to_string(), sha256_hex(bytes));
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        kind: dataset.kind(),
        m: dataset.m,
        n: dataset.n,
        count: dataset.len(),
        mu: dataset.mu(),
        seed: dataset.seed,
        split: Split {
            train: dataset.train.clone(),
            test: dataset.test.clone(),
        },
        certificates: dataset.certificates.clone(),
        max_certificate: dataset.max_certificate(),
        checksums,
    };
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    json.push(b'\n');
    write_atomic(&dir.join(MANIFEST), &json)?;
    Ok(manifest)
}

fn read_verified(dir: &Path, name: &str, manifest: &Manifest) -> Result<Vec<u8>> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    match manifest.checksums.get(name) {
        Some(sum) if *sum == sha256_hex(&bytes) => Ok(bytes),
        _ => Err(Error::Checksum {
            file: name.to_string(),
        }),
    }
}

fn parse_rows(bytes: &[u8], path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let row: Vec<f64> = rec
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
            .collect::<Result<_>>()?;
        if row.len() != width {
            return Err(parse_err(format!("expected {width} values, found {}", row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads and validates `manifest.json` only.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let found = value.get("version").and_then(serde_json::Value::as_u64).unwrap_or(0);
    if found != u64::from(FORMAT_VERSION) {
        return Err(Error::Version {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Parse {
        path,
        line: 0,
        message: e.to_string(),
    })
}

/// Loads a dataset saved by [`save_dataset`], checking the format version,
/// payload checksums and every stored certificate.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    let (m, n) = (manifest.m, manifest.n);
    let path = |name: &str| -> PathBuf { dir.join(name) };
    let shared_rows = parse_rows(&read_verified(dir, SHARED, &manifest)?, &path(SHARED), n)?;
    let matrix = DenseMatrix::from_rows(&shared_rows)?;
    if matrix.rows() != m {
        return Err(Error::Validation(format!("{SHARED} has {} rows, expected {m}", matrix.rows())));
    }
    let (inst_width, sol_width) = match manifest.kind {
        DatasetKind::Lasso => (m, n),
        DatasetKind::Ot => (m + n, m * n),
    };
    let instances = parse_rows(&read_verified(dir, INSTANCES, &manifest)?, &path(INSTANCES), inst_width)?;
    let solutions = parse_rows(&read_verified(dir, SOLUTIONS, &manifest)?, &path(SOLUTIONS), sol_width)?;
    if instances.len() != manifest.count {
        return Err(Error::Validation(format!(
            "manifest lists {} instances, payload has {}",
            manifest.count,
            instances.len()
        )));
    }
    let shared = match manifest.kind {
        DatasetKind::Lasso => Shared::Lasso {
            dictionary: matrix,
            mu: manifest
                .mu
                .ok_or_else(|| Error::Validation("lasso manifest lacks mu".into()))?,
        },
        DatasetKind::Ot => Shared::Ot { cost: matrix },
    };
    let dataset = Dataset {
        m,
        n,
        seed: manifest.seed,
        shared,
        instances,
        solutions,
        certificates: manifest.certificates,
        train: manifest.split.train,
        test: manifest.split.test,
    };
    dataset.verify()?;
    Ok(dataset)
}
