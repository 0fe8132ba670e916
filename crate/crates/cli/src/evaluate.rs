//! Metric computation for a fitted model on one evaluation split.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use sketched_okr::data_io::MetricName;
use sketched_okr::kernels::{eval_kernel, KernelSpec};
use sketched_okr::metrics::{f1_dataset, kernel_loss, topk_accuracy, LabelSet};
use sketched_okr::synthetic::mse;
use sketched_okr::{decode, FittedModel, Prediction};

use crate::problem::{Problem, Split};

pub struct Evaluation {
    pub metrics: BTreeMap<String, f64>,
    /// `h(x)` in output feature space (linear output kernel only).
    pub outputs: Option<DMatrix<f64>>,
    pub decoded: Option<Vec<Prediction>>,
    pub inference_seconds: f64,
}

fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

/// Maps every candidate to the first candidate with bit-identical features.
fn canonical_ids(features: &DMatrix<f64>) -> (Vec<usize>, HashMap<Vec<u64>, usize>) {
    let mut first: HashMap<Vec<u64>, usize> = HashMap::new();
    let ids = (0..features.nrows())
        .map(|j| {
            let key: Vec<u64> = features.row(j).iter().map(|v| v.to_bits()).collect();
            *first.entry(key).or_insert(j)
        })
        .collect();
    (ids, first)
}

pub fn needs_decoding(metrics: &[MetricName]) -> bool {
    metrics.iter().any(|m| *m != MetricName::Mse)
}

pub fn evaluate(
    model: &FittedModel,
    problem: &Problem,
    split: &Split,
    metrics: &[MetricName],
) -> Result<Evaluation> {
    let start = Instant::now();
    let decoded = if needs_decoding(metrics) {
        let cands = problem
            .candidates
            .as_ref()
            .context("decoding metrics need a candidate set")?;
        let k = metrics
            .iter()
            .filter_map(MetricName::topk)
            .max()
            .unwrap_or(1)
            .min(cands.set.len());
        Some(decode(model, &split.k_cross, &cands.set, k)?)
    } else {
        None
    };
    let inference_seconds = start.elapsed().as_secs_f64();

    let outputs = match (&problem.y_train, problem.output_kernel) {
        (Some(y), KernelSpec::Linear) => Some(model.predict_outputs(&split.k_cross, y)?),
        _ => None,
    };

    let mut out = BTreeMap::new();
    for metric in metrics {
        let value = match metric {
            MetricName::Mse => {
                let pred = outputs
                    .as_ref()
                    .context("mse needs output features and a linear output kernel")?;
                let truth = split.outputs.as_ref().context("mse needs true outputs")?;
                mse(pred, truth)?
            }
            MetricName::F1 => {
                let preds = decoded.as_ref().unwrap();
                let feats = problem
                    .candidates
                    .as_ref()
                    .and_then(|c| c.features.as_ref())
                    .context("f1 needs candidate label vectors")?;
                let truth = split.outputs.as_ref().context("f1 needs true label vectors")?;
                let p: Vec<LabelSet> = preds
                    .iter()
                    .map(|p| LabelSet::from_indicator(feats.row(p.index).iter().copied()))
                    .collect();
                let t: Vec<LabelSet> = (0..truth.nrows())
                    .map(|i| LabelSet::from_indicator(truth.row(i).iter().copied()))
                    .collect();
                f1_dataset(&p, &t)?
            }
            MetricName::Top1 | MetricName::Top5 | MetricName::Top10 => {
                let k = metric.topk().unwrap();
                let preds = decoded.as_ref().unwrap();
                let (ranked, truth) = ranked_with_truth(problem, split, preds)?;
                topk_accuracy(&ranked, &truth, k)?
            }
            MetricName::KernelLossMean => {
                let preds = decoded.as_ref().unwrap();
                let feats = problem
                    .candidates
                    .as_ref()
                    .and_then(|c| c.features.as_ref())
                    .context("kernel_loss_mean needs candidate features")?;
                let truth = split.outputs.as_ref().context("kernel_loss_mean needs true outputs")?;
                let spec = problem.output_kernel;
                let mut total = 0.0;
                for (i, p) in preds.iter().enumerate() {
                    let (y, c) = (row(truth, i), row(feats, p.index));
                    total += kernel_loss(
                        eval_kernel(&spec, &y, &y)?,
                        eval_kernel(&spec, &c, &c)?,
                        eval_kernel(&spec, &y, &c)?,
                    );
                }
                total / preds.len() as f64
            }
        };
        out.insert(metric.key().to_string(), value);
    }
    Ok(Evaluation {
        metrics: out,
        outputs,
        decoded,
        inference_seconds,
    })
}

/// Ranked candidate ids and one truth id per example. With candidate
/// features, identical candidates share an id and the truth id is that of
/// the first identical candidate (`usize::MAX` when none exists).
fn ranked_with_truth(
    problem: &Problem,
    split: &Split,
    preds: &[Prediction],
) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    if let Some(truth) = &split.truth {
        let ranked = preds.iter().map(|p| p.topk.clone()).collect();
        return Ok((ranked, truth.clone()));
    }
    let feats = problem
        .candidates
        .as_ref()
        .and_then(|c| c.features.as_ref());
    let (Some(feats), Some(outputs)) = (feats, split.outputs.as_ref()) else {
        bail!("top-k accuracy needs true candidate ids or candidate features");
    };
    let (ids, first) = canonical_ids(feats);
    let ranked = preds
        .iter()
        .map(|p| p.topk.iter().map(|&j| ids[j]).collect())
        .collect();
    let truth = (0..outputs.nrows())
        .map(|i| {
            let key: Vec<u64> = outputs.row(i).iter().map(|v| v.to_bits()).collect();
            first.get(&key).copied().unwrap_or(usize::MAX)
        })
        .collect();
    Ok((ranked, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_candidates_share_ids() {
        let f = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let (ids, first) = canonical_ids(&f);
        assert_eq!(ids, vec![0, 1, 0, 3]);
        assert_eq!(first.len(), 3);
    }
}
