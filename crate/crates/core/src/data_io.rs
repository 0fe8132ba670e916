//! Matrix, label and configuration files.
//!
//! Binary matrix layout (all integers little-endian):
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 4    | magic `SKMX`                |
//! | 4      | 2    | version (`1`)               |
//! | 6      | 8    | rows                        |
//! | 14     | 8    | cols                        |
//! | 22     | 2    | dtype tag (`1` = f64)       |
//! | 24     | 8 rc | row-major f64 payload       |
//!
//! Label files are text: a `#labels <L>` header, then one line per example,
//! `<example_index>: j1,j2,...` with sorted unique label indices in `[0, L)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, KernelSpec};
use crate::linalg::SolveOptions;
use crate::metrics::LabelSet;
use crate::regression::{FittedModel, Variant};
use crate::sketch::{SketchKind, SketchOperator, SketchRecord, SketchSpec};
use crate::synthetic::SyntheticSpec;

pub const MATRIX_MAGIC: &[u8; 4] = b"SKMX";
pub const MATRIX_VERSION: u16 = 1;
pub const DTYPE_F64: u16 = 1;
const HEADER_LEN: usize = 24;

pub fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    out.extend_from_slice(&DTYPE_F64.to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < 4 || &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("truncated header".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u64_at = |o: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[o..o + 8]);
        u64::from_le_bytes(b)
    };
    let version = u16_at(4);
    if version != MATRIX_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = u64_at(6) as usize;
    let cols = u64_at(14) as usize;
    let dtype = u16_at(22);
    if dtype != DTYPE_F64 {
        return Err(Error::Format(format!("unsupported dtype tag {dtype}")));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::Format("matrix size overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| {
            let mut b = [0u8; 8];
            b.copy_from_slice(c);
            f64::from_le_bytes(b)
        })
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix file payload"));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn save_matrix(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_matrix(m))?;
    Ok(())
}

/// Reads a binary matrix file, or headerless CSV when the extension is `csv`.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "csv") {
        return parse_csv_matrix(&fs::read_to_string(path)?);
    }
    decode_matrix(&fs::read(path)?)
}

pub fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: no + 1,
            message,
        };
        let before = values.len();
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| err(format!("bad number `{}`", tok.trim())))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value `{}`", tok.trim())));
            }
            values.push(v);
        }
        let width = values.len() - before;
        if *cols.get_or_insert(width) != width {
            return Err(err(format!("expected {} columns, got {width}", cols.unwrap())));
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

/// Comma-separated rows, shortest round-trip float formatting.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn save_matrix_csv(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

/// Writes `<stem>.skmx` and its CSV mirror `<stem>.csv` into `dir`.
pub fn save_matrix_with_csv(m: &DMatrix<f64>, dir: &Path, stem: &str) -> Result<PathBuf> {
    let bin = dir.join(format!("{stem}.skmx"));
    save_matrix(m, &bin)?;
    save_matrix_csv(m, dir.join(format!("{stem}.csv")))?;
    Ok(bin)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GramSidecar {
    symmetric: bool,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Saves a precomputed Gram with its `<path>.json` symmetry sidecar.
pub fn save_gram(g: &GramMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    save_matrix(g.values(), path)?;
    let side = GramSidecar {
        symmetric: g.is_symmetric(),
    };
    fs::write(sidecar_path(path), serde_json::to_string(&side)?)?;
    Ok(())
}

/// Loads a precomputed Gram; without a sidecar the matrix is taken as non-symmetric.
pub fn load_gram(path: impl AsRef<Path>) -> Result<GramMatrix> {
    let path = path.as_ref();
    let values = load_matrix(path)?;
    let side = sidecar_path(path);
    let symmetric = if side.exists() {
        serde_json::from_str::<GramSidecar>(&fs::read_to_string(side)?)?.symmetric
    } else {
        false
    };
    GramMatrix::from_values(values, symmetric)
}

pub fn labels_to_string(sets: &[LabelSet], n_labels: usize) -> String {
    let mut out = format!("#labels {n_labels}\n");
    for (i, s) in sets.iter().enumerate() {
        let list: Vec<String> = s.indices().iter().map(|j| j.to_string()).collect();
        let _ = writeln!(out, "{i}: {}", list.join(","));
    }
    out
}

/// Parses a label file; returns the per-example sets and the label count.
pub fn parse_labels(text: &str) -> Result<(Vec<LabelSet>, usize)> {
    let mut lines = text.lines().enumerate();
    let n_labels = loop {
        let (no, line) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing #labels header".into(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let count = line
            .strip_prefix("#labels")
            .map(str::trim)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or(Error::Parse {
                line: no + 1,
                message: format!("expected `#labels <L>`, got `{line}`"),
            })?;
        break count;
    };
    let mut by_index: BTreeMap<usize, LabelSet> = BTreeMap::new();
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: no + 1,
            message,
        };
        let (idx, rest) = line
            .split_once(':')
            .ok_or_else(|| err(format!("expected `index: labels`, got `{line}`")))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| err(format!("bad example index `{}`", idx.trim())))?;
        let mut labels = Vec::new();
        for tok in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let j: usize = tok.parse().map_err(|_| err(format!("bad label `{tok}`")))?;
            if j >= n_labels {
                return Err(err(format!("label {j} out of range [0, {n_labels})")));
            }
            labels.push(j);
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err("labels must be sorted and unique".into()));
        }
        let set = LabelSet::new(labels).map_err(|e| err(e.to_string()))?;
        if by_index.insert(idx, set).is_some() {
            return Err(err(format!("example {idx} listed twice")));
        }
    }
    let count = by_index.len();
    if let Some((&last, _)) = by_index.iter().next_back() {
        if last + 1 != count {
            return Err(Error::Parse {
                line: 0,
                message: format!("example indices must cover 0..{count}"),
            });
        }
    }
    Ok((by_index.into_values().collect(), n_labels))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<(Vec<LabelSet>, usize)> {
    parse_labels(&fs::read_to_string(path)?)
}

pub fn save_labels(sets: &[LabelSet], n_labels: usize, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, labels_to_string(sets, n_labels))?;
    Ok(())
}

/// Binary indicator matrix (examples x labels).
pub fn labels_to_matrix(sets: &[LabelSet], n_labels: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(sets.len(), n_labels);
    for (i, s) in sets.iter().enumerate() {
        for &j in s.indices() {
            m[(i, j)] = 1.0;
        }
    }
    m
}

/// Outputs are read as a label file when the extension is `labels` or `txt`,
/// otherwise as a matrix file.
pub fn load_outputs(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("labels") | Some("txt") => {
            let (sets, l) = load_labels(path)?;
            Ok(labels_to_matrix(&sets, l))
        }
        _ => load_matrix(path),
    }
}

/// One candidate index per line.
pub fn load_index_list(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(no, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                line: no + 1,
                message: format!("bad index `{}`", l.trim()),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// run configuration

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    /// Sample-per-row feature files.
    Features {
        x_train: PathBuf,
        y_train: PathBuf,
        #[serde(default)]
        x_val: Option<PathBuf>,
        #[serde(default)]
        y_val: Option<PathBuf>,
        x_test: PathBuf,
        y_test: PathBuf,
    },
    /// Kernel values supplied directly; outputs are only known through
    /// candidate cross-Grams and true candidate ids.
    Precomputed {
        k_train: PathBuf,
        ky_train: PathBuf,
        #[serde(default)]
        k_val_train: Option<PathBuf>,
        k_test_train: PathBuf,
        #[serde(default)]
        val_truth: Option<PathBuf>,
        #[serde(default)]
        test_truth: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CandidateSource {
    /// Training outputs are the candidates.
    #[default]
    TrainOutputs,
    /// No decoding.
    None,
    /// Candidate output features, one per row.
    Features { path: PathBuf },
    /// `K^y_{tr,c}` and the candidate self-kernel values (1 x n_c or n_c x 1).
    Precomputed {
        cross_gram: PathBuf,
        #[serde(default)]
        diag: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Mse,
    F1,
    Top1,
    Top5,
    Top10,
    KernelLossMean,
}

impl MetricName {
    pub fn key(&self) -> &'static str {
        match self {
            MetricName::Mse => "mse",
            MetricName::F1 => "f1",
            MetricName::Top1 => "top1",
            MetricName::Top5 => "top5",
            MetricName::Top10 => "top10",
            MetricName::KernelLossMean => "kernel_loss_mean",
        }
    }

    /// True when larger values are better.
    pub fn maximize(&self) -> bool {
        !matches!(self, MetricName::Mse | MetricName::KernelLossMean)
    }

    pub fn topk(&self) -> Option<usize> {
        match self {
            MetricName::Top1 => Some(1),
            MetricName::Top5 => Some(5),
            MetricName::Top10 => Some(10),
            _ => None,
        }
    }
}

fn default_repeat() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub m_x: Vec<usize>,
    pub m_y: Vec<usize>,
    pub sketch: SketchKind,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    /// Candidate count for the decode timing; defaults to all training outputs.
    #[serde(default)]
    pub n_candidates: Option<usize>,
    /// Adds one exact-estimator row per seed.
    #[serde(default)]
    pub include_iokr: bool,
}

fn default_p() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSide {
    #[default]
    Input,
    Output,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSample {
    #[default]
    Heldout,
    Train,
}

fn default_seeds_per_point() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub specs: Vec<SketchSpec>,
    #[serde(default = "default_seeds_per_point")]
    pub seeds_per_point: usize,
    #[serde(default)]
    pub side: KernelSide,
    #[serde(default)]
    pub eval: EvalSample,
    /// Regularization levels at which to report the effective dimension.
    #[serde(default)]
    pub eff_dim_t: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Variant,
    pub input_kernel: KernelSpec,
    pub output_kernel: KernelSpec,
    #[serde(default)]
    pub input_sketch: Option<SketchSpec>,
    #[serde(default)]
    pub output_sketch: Option<SketchSpec>,
    pub lambda_grid: Vec<f64>,
    /// Input kernel widths to search; empty keeps `input_kernel` as given.
    #[serde(default)]
    pub input_width_grid: Vec<f64>,
    /// Folds for selection when there is no validation split.
    #[serde(default)]
    pub folds: Option<usize>,
    pub data: DataSource,
    #[serde(default)]
    pub candidates: CandidateSource,
    #[serde(default)]
    pub metrics: Vec<MetricName>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub benchmark: Option<BenchmarkConfig>,
    #[serde(default)]
    pub diagnostics: Option<DiagnosticsConfig>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.input_kernel.validate()?;
        self.output_kernel.validate()?;
        self.solve.validate()?;
        if self.lambda_grid.is_empty() {
            return Err(Error::InvalidParameter("lambda_grid must not be empty".into()));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!("lambda {l} must be positive")));
        }
        if let Some(w) = self.input_width_grid.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("kernel width {w} must be positive")));
        }
        if self.variant.sketches_input() && self.input_sketch.is_none() && self.benchmark.is_none()
        {
            return Err(Error::InvalidParameter(format!(
                "variant {} needs input_sketch",
                self.variant
            )));
        }
        if self.variant.sketches_output()
            && self.output_sketch.is_none()
            && self.benchmark.is_none()
        {
            return Err(Error::InvalidParameter(format!(
                "variant {} needs output_sketch",
                self.variant
            )));
        }
        if matches!(self.folds, Some(f) if f < 2) {
            return Err(Error::InvalidParameter("folds must be >= 2".into()));
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        if matches!(self.data, DataSource::Precomputed { .. }) {
            if self.input_kernel != KernelSpec::Precomputed {
                return Err(Error::InvalidParameter(
                    "precomputed data needs input_kernel kind `precomputed`".into(),
                ));
            }
            if matches!(
                self.candidates,
                CandidateSource::TrainOutputs | CandidateSource::Features { .. }
            ) {
                return Err(Error::InvalidParameter(
                    "precomputed data needs precomputed candidates (or none)".into(),
                ));
            }
        }
        if let Some(b) = &self.benchmark {
            if b.m_x.is_empty() || b.m_y.is_empty() || b.repeat == 0 {
                return Err(Error::InvalidParameter(
                    "benchmark needs nonempty m_x, m_y and repeat >= 1".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    RunConfig::from_json(&fs::read_to_string(path)?)
}

/// Serializes with object keys in sorted order.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn write_sorted_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = to_sorted_json(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fitted models

/// JSON manifest stored next to the binary core matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub variant: Variant,
    pub lambda: f64,
    pub n_train: usize,
    pub core_file: String,
    #[serde(default)]
    pub input_sketch: Option<SketchRecord>,
    #[serde(default)]
    pub output_sketch: Option<SketchRecord>,
    #[serde(default)]
    pub input_kernel: Option<KernelSpec>,
    #[serde(default)]
    pub output_kernel: Option<KernelSpec>,
}

pub const MODEL_MANIFEST: &str = "model.json";
pub const MODEL_CORE: &str = "model_core.skmx";

/// Writes `model.json` and `model_core.skmx` into `dir`.
pub fn save_model(
    model: &FittedModel,
    input_kernel: Option<KernelSpec>,
    output_kernel: Option<KernelSpec>,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    save_matrix(model.core(), dir.join(MODEL_CORE))?;
    let manifest = ModelManifest {
        variant: model.variant(),
        lambda: model.lambda(),
        n_train: model.n_train(),
        core_file: MODEL_CORE.into(),
        input_sketch: model.input_sketch().map(SketchOperator::record),
        output_sketch: model.output_sketch().map(SketchOperator::record),
        input_kernel,
        output_kernel,
    };
    write_sorted_json(&manifest, dir.join(MODEL_MANIFEST))
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<(FittedModel, ModelManifest)> {
    let dir = dir.as_ref();
    let manifest: ModelManifest =
        serde_json::from_str(&fs::read_to_string(dir.join(MODEL_MANIFEST))?)?;
    let core = load_matrix(dir.join(&manifest.core_file))?;
    let rx = manifest
        .input_sketch
        .as_ref()
        .map(SketchOperator::from_record)
        .transpose()?;
    let ry = manifest
        .output_sketch
        .as_ref()
        .map(SketchOperator::from_record)
        .transpose()?;
    let model = FittedModel::from_parts(
        manifest.variant,
        core,
        rx,
        ry,
        manifest.n_train,
        manifest.lambda,
    )?;
    Ok((model, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_and_errors() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, -2.5, 0.0, 1e-300, 3.25, 7.0]);
        let bytes = encode_matrix(&m);
        assert_eq!(bytes.len(), 24 + 48);
        assert_eq!(decode_matrix(&bytes).unwrap(), m);
        assert!(matches!(decode_matrix(&[]), Err(Error::BadMagic)));
        assert_eq!(decode_matrix(&[]).unwrap_err().to_string(), "bad magic");
        assert!(decode_matrix(&bytes[..bytes.len() - 1]).is_err());
        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(decode_matrix(&bad_version).is_err());
        let mut bad_dtype = bytes.clone();
        bad_dtype[22] = 2;
        assert!(decode_matrix(&bad_dtype).is_err());
        let nan = encode_matrix(&DMatrix::from_element(1, 1, f64::NAN));
        assert!(matches!(decode_matrix(&nan), Err(Error::NonFinite(_))));
    }

    #[test]
    fn labels_parse() {
        let (sets, l) = parse_labels("#labels 4\n0: 1,3\n1:\n").unwrap();
        assert_eq!(l, 4);
        assert_eq!(sets[0].indices(), &[1, 3]);
        assert!(sets[1].is_empty());
        let dup = parse_labels("#labels 4\n0: 1,1\n").unwrap_err();
        assert!(matches!(dup, Error::Parse { line: 2, .. }));
        assert!(parse_labels("#labels 4\n0: 4\n").is_err());
        assert!(parse_labels("0: 1\n").is_err());
        assert!(parse_labels("#labels 4\n1: 1\n").is_err());
        assert!(parse_labels("#labels 4\n0: x\n").is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let good = r#"{
            "variant": "sisokr",
            "input_kernel": {"kind": "gaussian", "sigma2": 2.0},
            "output_kernel": {"kind": "linear"},
            "input_sketch": {"kind": "p_sr", "m": 50, "p": 0.02, "seed": 1},
            "output_sketch": {"kind": "subsample", "m": 20, "seed": 2},
            "lambda_grid": [1e-4, 1e-3],
            "data": {"synthetic": {"n": 100, "n_val": 20, "n_te": 20, "d": 5}},
            "metrics": ["mse", "top1"]
        }"#;
        let cfg = RunConfig::from_json(good).unwrap();
        assert_eq!(cfg.candidates, CandidateSource::TrainOutputs);
        assert_eq!(cfg.solve, SolveOptions::default());
        let bad = good.replace("\"metrics\"", "\"metricz\"");
        assert!(RunConfig::from_json(&bad).is_err());
        let missing = good.replace(
            r#""input_sketch": {"kind": "p_sr", "m": 50, "p": 0.02, "seed": 1},"#,
            "",
        );
        assert!(RunConfig::from_json(&missing).is_err());
    }

    #[test]
    fn sorted_json_keys() {
        #[derive(Serialize)]
        struct R {
            zeta: u8,
            alpha: u8,
        }
        let s = to_sorted_json(&R { zeta: 1, alpha: 2 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }
}
