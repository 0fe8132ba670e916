//! Evaluation metrics for structured outputs.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Active labels of one example: sorted, unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSet(Vec<usize>);

impl LabelSet {
    /// Sorts and rejects duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate label {}", w[0])));
        }
        Ok(LabelSet(indices))
    }

    /// Labels `j` with `row[j] != 0`.
    pub fn from_indicator(row: impl IntoIterator<Item = f64>) -> Self {
        LabelSet(
            row.into_iter()
                .enumerate()
                .filter(|(_, v)| *v != 0.0)
                .map(|(j, _)| j)
                .collect(),
        )
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intersection_len(&self, other: &LabelSet) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }
}

/// `2 |pred & truth| / (|pred| + |truth|)`; two empty sets score 1.
pub fn f1_example(pred: &LabelSet, truth: &LabelSet) -> f64 {
    let total = pred.len() + truth.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * pred.intersection_len(truth) as f64 / total as f64
}

/// Example-based F1: mean of per-example scores.
pub fn f1_dataset(preds: &[LabelSet], truths: &[LabelSet]) -> Result<f64> {
    check_dim("f1 example count", truths.len(), preds.len())?;
    if preds.is_empty() {
        return Err(Error::EmptyInput("f1 examples"));
    }
    let sum: f64 = preds.iter().zip(truths).map(|(p, t)| f1_example(p, t)).sum();
    Ok(sum / preds.len() as f64)
}

/// Fraction of examples whose true id is among the first `k` ranked ids.
pub fn topk_accuracy(ranked: &[Vec<usize>], truth: &[usize], k: usize) -> Result<f64> {
    check_dim("top-k example count", truth.len(), ranked.len())?;
    if ranked.is_empty() {
        return Err(Error::EmptyInput("top-k examples"));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("top-k needs k >= 1".into()));
    }
    let hits = ranked
        .iter()
        .zip(truth)
        .filter(|(r, t)| r.iter().take(k).any(|c| c == *t))
        .count();
    Ok(hits as f64 / ranked.len() as f64)
}

/// `k(y,y) + k(y',y') - 2 k(y,y')`, with round-off down to `-1e-12` clamped to 0.
pub fn kernel_loss(k_yy: f64, k_pp: f64, k_yp: f64) -> f64 {
    let loss = k_yy + k_pp - 2.0 * k_yp;
    if (-1e-12..0.0).contains(&loss) {
        0.0
    } else {
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> LabelSet {
        LabelSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1_example(&set(&[1, 2]), &set(&[2, 3])), 0.5);
        assert_eq!(f1_example(&set(&[4, 7]), &set(&[7, 4])), 1.0);
        assert_eq!(f1_example(&set(&[]), &set(&[])), 1.0);
        assert_eq!(f1_example(&set(&[1]), &set(&[])), 0.0);
    }

    #[test]
    fn f1_dataset_cases() {
        let t = vec![set(&[1]), set(&[2, 3])];
        assert_eq!(f1_dataset(&t, &t).unwrap(), 1.0);
        let p = vec![set(&[1]), set(&[5])];
        assert_eq!(f1_dataset(&p, &t).unwrap(), 0.5);
        assert!(f1_dataset(&p, &t[..1]).is_err());
    }

    #[test]
    fn label_set_rules() {
        assert!(LabelSet::new(vec![3, 1, 3]).is_err());
        assert_eq!(set(&[3, 0]).indices(), &[0, 3]);
        assert_eq!(LabelSet::from_indicator([0.0, 1.0, 0.0, 1.0]), set(&[1, 3]));
    }

    #[test]
    fn topk_cases() {
        let ranked = vec![vec![0, 1, 2], vec![1, 0, 2]];
        assert_eq!(topk_accuracy(&ranked, &[0, 1], 1).unwrap(), 1.0);
        let ranked = vec![vec![5, 6, 9, 1, 2]; 3];
        let truth = [9, 9, 9];
        assert_eq!(topk_accuracy(&ranked, &truth, 1).unwrap(), 0.0);
        assert_eq!(topk_accuracy(&ranked, &truth, 5).unwrap(), 1.0);
        assert!(topk_accuracy(&ranked, &truth, 0).is_err());
    }

    #[test]
    fn kernel_loss_cases() {
        assert_eq!(kernel_loss(0.7, 0.7, 0.7), 0.0);
        assert_eq!(kernel_loss(1.0, 1.0, 0.0), 2.0);
        assert_eq!(kernel_loss(1.0, 1.0, 1.0 + 1e-13), 0.0);
    }
}
