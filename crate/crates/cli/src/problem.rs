//! Turns a run configuration into Gram matrices, evaluation splits and a
//! candidate set.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use sketched_okr::data_io::{
    load_gram, load_index_list, load_matrix, load_outputs, CandidateSource, DataSource, RunConfig,
};
use sketched_okr::kernels::{gram, GramMatrix, KernelSpec};
use sketched_okr::synthetic::generate;
use sketched_okr::CandidateSet;

/// Data as loaded from disk, before any kernel is applied.
pub enum RawData {
    Features {
        x_train: DMatrix<f64>,
        y_train: DMatrix<f64>,
        val: Option<(DMatrix<f64>, DMatrix<f64>)>,
        x_test: DMatrix<f64>,
        y_test: DMatrix<f64>,
    },
    Precomputed {
        k_train: GramMatrix,
        ky_train: GramMatrix,
        k_val: Option<DMatrix<f64>>,
        k_test: DMatrix<f64>,
        val_truth: Option<Vec<usize>>,
        test_truth: Option<Vec<usize>>,
    },
}

pub struct Candidates {
    pub set: CandidateSet,
    /// Candidate output features, when the candidates are known explicitly.
    pub features: Option<DMatrix<f64>>,
}

/// Evaluation points seen through the input kernel.
pub struct Split {
    /// `n_eval x n_train` input cross-Gram.
    pub k_cross: DMatrix<f64>,
    pub outputs: Option<DMatrix<f64>>,
    /// True candidate ids, when supplied directly.
    pub truth: Option<Vec<usize>>,
}

pub struct Problem {
    pub input_kernel: KernelSpec,
    pub output_kernel: KernelSpec,
    pub k_x: GramMatrix,
    pub k_y: GramMatrix,
    pub y_train: Option<DMatrix<f64>>,
    pub candidates: Option<Candidates>,
    pub val: Option<Split>,
    pub test: Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for SplitName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split `{other}` (train, val, test)")),
        }
    }
}

fn require_pair(x: &Option<std::path::PathBuf>, y: &Option<std::path::PathBuf>) -> Result<bool> {
    match (x, y) {
        (Some(_), Some(_)) => Ok(true),
        (None, None) => Ok(false),
        _ => bail!("x_val and y_val must be given together"),
    }
}

pub fn load_raw(cfg: &RunConfig) -> Result<RawData> {
    Ok(match &cfg.data {
        DataSource::Synthetic(spec) => {
            let ds = generate(spec)?;
            RawData::Features {
                x_train: ds.x_train,
                y_train: ds.y_train,
                val: Some((ds.x_val, ds.y_val)),
                x_test: ds.x_test,
                y_test: ds.y_test,
            }
        }
        DataSource::Features {
            x_train,
            y_train,
            x_val,
            y_val,
            x_test,
            y_test,
        } => {
            let load = |p: &Path| load_outputs(p).with_context(|| format!("loading {}", p.display()));
            let val = if require_pair(x_val, y_val)? {
                Some((
                    load(x_val.as_deref().unwrap())?,
                    load(y_val.as_deref().unwrap())?,
                ))
            } else {
                None
            };
            RawData::Features {
                x_train: load(x_train)?,
                y_train: load(y_train)?,
                val,
                x_test: load(x_test)?,
                y_test: load(y_test)?,
            }
        }
        DataSource::Precomputed {
            k_train,
            ky_train,
            k_val_train,
            k_test_train,
            val_truth,
            test_truth,
        } => RawData::Precomputed {
            k_train: load_gram(k_train).with_context(|| format!("loading {}", k_train.display()))?,
            ky_train: load_gram(ky_train)
                .with_context(|| format!("loading {}", ky_train.display()))?,
            k_val: k_val_train.as_ref().map(load_matrix).transpose()?,
            k_test: load_matrix(k_test_train)?,
            val_truth: val_truth.as_ref().map(load_index_list).transpose()?,
            test_truth: test_truth.as_ref().map(load_index_list).transpose()?,
        },
    })
}

fn flatten(m: DMatrix<f64>) -> Result<DVector<f64>> {
    if m.nrows() != 1 && m.ncols() != 1 {
        bail!("candidate diagonal must be a 1 x n or n x 1 matrix, got {:?}", m.shape());
    }
    Ok(DVector::from_iterator(m.len(), m.iter().copied()))
}

fn candidates(
    source: &CandidateSource,
    output_kernel: &KernelSpec,
    k_y: &GramMatrix,
    y_train: Option<&DMatrix<f64>>,
) -> Result<Option<Candidates>> {
    Ok(match source {
        CandidateSource::None => None,
        CandidateSource::TrainOutputs => {
            let diag = k_y.diag().cloned().context("output Gram must be square")?;
            Some(Candidates {
                set: CandidateSet::unlabeled(k_y.values().clone(), diag)?,
                features: y_train.cloned(),
            })
        }
        CandidateSource::Features { path } => {
            let y = y_train.context("feature candidates need training output features")?;
            let c = load_outputs(path).with_context(|| format!("loading {}", path.display()))?;
            Some(Candidates {
                set: CandidateSet::from_features(output_kernel, y, &c)?,
                features: Some(c),
            })
        }
        CandidateSource::Precomputed { cross_gram, diag } => {
            let cross = load_matrix(cross_gram)?;
            let diag = match diag {
                Some(p) => flatten(load_matrix(p)?)?,
                None if output_kernel.is_normalized() => DVector::from_element(cross.ncols(), 1.0),
                None => bail!("precomputed candidates need `diag` unless the output kernel is normalized"),
            };
            Some(Candidates {
                set: CandidateSet::unlabeled(cross, diag)?,
                features: None,
            })
        }
    })
}

impl RawData {
    pub fn has_validation(&self) -> bool {
        match self {
            RawData::Features { val, .. } => val.is_some(),
            RawData::Precomputed { k_val, .. } => k_val.is_some(),
        }
    }

    /// Builds Grams and splits with the given input kernel.
    pub fn problem(&self, cfg: &RunConfig, input_kernel: KernelSpec) -> Result<Problem> {
        let output_kernel = cfg.output_kernel;
        match self {
            RawData::Features {
                x_train,
                y_train,
                val,
                x_test,
                y_test,
            } => {
                if input_kernel == KernelSpec::Precomputed || output_kernel == KernelSpec::Precomputed {
                    bail!("feature data needs evaluable kernels, not `precomputed`");
                }
                let k_x = gram(&input_kernel, x_train, x_train)?;
                let k_y = gram(&output_kernel, y_train, y_train)?;
                let split = |x: &DMatrix<f64>, y: &DMatrix<f64>| -> Result<Split> {
                    Ok(Split {
                        k_cross: gram(&input_kernel, x, x_train)?.into_values(),
                        outputs: Some(y.clone()),
                        truth: None,
                    })
                };
                let cands = candidates(&cfg.candidates, &output_kernel, &k_y, Some(y_train))?;
                Ok(Problem {
                    input_kernel,
                    output_kernel,
                    k_x,
                    k_y,
                    y_train: Some(y_train.clone()),
                    candidates: cands,
                    val: val.as_ref().map(|(x, y)| split(x, y)).transpose()?,
                    test: split(x_test, y_test)?,
                })
            }
            RawData::Precomputed {
                k_train,
                ky_train,
                k_val,
                k_test,
                val_truth,
                test_truth,
            } => {
                let cands = candidates(&cfg.candidates, &output_kernel, ky_train, None)?;
                Ok(Problem {
                    input_kernel,
                    output_kernel,
                    k_x: k_train.clone(),
                    k_y: ky_train.clone(),
                    y_train: None,
                    candidates: cands,
                    val: k_val.as_ref().map(|k| Split {
                        k_cross: k.clone(),
                        outputs: None,
                        truth: val_truth.clone(),
                    }),
                    test: Split {
                        k_cross: k_test.clone(),
                        outputs: None,
                        truth: test_truth.clone(),
                    },
                })
            }
        }
    }
}

impl Problem {
    /// The training points themselves as an evaluation split.
    pub fn train_split(&self) -> Split {
        Split {
            k_cross: self.k_x.values().clone(),
            outputs: self.y_train.clone(),
            truth: None,
        }
    }

    pub fn split(&self, name: SplitName) -> Result<Split> {
        match name {
            SplitName::Train => Ok(self.train_split()),
            SplitName::Val => {
                let v = self.val.as_ref().context("configuration has no validation split")?;
                Ok(Split {
                    k_cross: v.k_cross.clone(),
                    outputs: v.outputs.clone(),
                    truth: v.truth.clone(),
                })
            }
            SplitName::Test => Ok(Split {
                k_cross: self.test.k_cross.clone(),
                outputs: self.test.outputs.clone(),
                truth: self.test.truth.clone(),
            }),
        }
    }

    pub fn n_train(&self) -> usize {
        self.k_x.nrows()
    }

    /// Restricts training to `train` and evaluates on `held`, both indices
    /// into the training set. Training-output candidates shrink with the fold.
    pub fn fold(&self, train: &[usize], held: &[usize], source: &CandidateSource) -> Result<(Problem, Split)> {
        let sub = |m: &DMatrix<f64>, r: &[usize], c: &[usize]| m.select_rows(r).select_columns(c);
        let k_x = GramMatrix::from_values(sub(self.k_x.values(), train, train), true)?;
        let k_y = GramMatrix::from_values(sub(self.k_y.values(), train, train), true)?;
        let y_train = self.y_train.as_ref().map(|y| y.select_rows(train));
        let candidates = match (&self.candidates, source) {
            (None, _) => None,
            (Some(_), CandidateSource::TrainOutputs) => {
                candidates(source, &self.output_kernel, &k_y, y_train.as_ref())?
            }
            (Some(c), _) => Some(Candidates {
                set: CandidateSet::unlabeled(c.set.cross_gram.select_rows(train), c.set.diag.clone())?,
                features: c.features.clone(),
            }),
        };
        let held_split = Split {
            k_cross: sub(self.k_x.values(), held, train),
            outputs: self.y_train.as_ref().map(|y| y.select_rows(held)),
            truth: None,
        };
        Ok((
            Problem {
                input_kernel: self.input_kernel,
                output_kernel: self.output_kernel,
                k_x,
                k_y,
                y_train,
                candidates,
                val: None,
                test: Split {
                    k_cross: DMatrix::zeros(0, train.len()),
                    outputs: None,
                    truth: None,
                },
            },
            held_split,
        ))
    }
}

/// Interleaved fold assignment: point `i` is held out in fold `i % folds`.
pub fn fold_indices(n: usize, folds: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..n).partition(|i| i % folds != fold)
}
