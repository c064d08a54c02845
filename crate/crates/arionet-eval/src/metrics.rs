//! Confusion-matrix bookkeeping and the derived classification metrics.
//!
//! Multi-class scores macro-average one-vs-rest rates. Degenerate rates
//! with an empty denominator use the "no errors made" convention (the
//! success rate is 1, its error complement 0) so that the identities
//! FPR + specificity = 1, FDR + precision = 1, and FNR + recall = 1 hold
//! exactly for every class.

use crate::EvalError;

/// C x C counts, rows indexed by true class, columns by prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_labels(
        truth: &[usize],
        predicted: &[usize],
        classes: usize,
    ) -> Result<Self, EvalError> {
        if truth.len() != predicted.len() {
            return Err(EvalError::LengthMismatch {
                labels: truth.len(),
                rows: predicted.len(),
            });
        }
        let mut cm = ConfusionMatrix::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.counts[t][p] += 1;
        }
        Ok(cm)
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// One-vs-rest counts and rates for a single class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub npv: f64,
    pub fpr: f64,
    pub fdr: f64,
    pub fnr: f64,
    pub mcc: f64,
}

/// Full metric suite for one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_specificity: f64,
    pub macro_npv: f64,
    pub macro_fpr: f64,
    pub macro_fdr: f64,
    pub macro_fnr: f64,
    /// One-vs-rest MCC, macro-averaged.
    pub mcc: f64,
    /// Cohen's kappa over the full matrix.
    pub kappa: f64,
    /// Mean |true_id - predicted_id| (label-index interpretation).
    pub label_mae: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn error_rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(cm: &ConfusionMatrix, class: usize) -> ClassMetrics {
    let c = cm.classes();
    let total = cm.total();
    let tp = cm.counts[class][class];
    let fp: u64 = (0..c)
        .filter(|&r| r != class)
        .map(|r| cm.counts[r][class])
        .sum();
    let fn_: u64 = (0..c)
        .filter(|&p| p != class)
        .map(|p| cm.counts[class][p])
        .sum();
    let tn = total - tp - fp - fn_;

    let precision = rate(tp, tp + fp);
    let recall = rate(tp, tp + fn_);
    let specificity = rate(tn, tn + fp);
    let npv = rate(tn, tn + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let denom = ((tp + fp) as f64 * (tp + fn_) as f64 * (tn + fp) as f64 * (tn + fn_) as f64)
        .sqrt();
    let mcc = if denom == 0.0 {
        0.0
    } else {
        (tp as f64 * tn as f64 - fp as f64 * fn_ as f64) / denom
    };

    ClassMetrics {
        tp,
        tn,
        fp,
        fn_,
        precision,
        recall,
        f1,
        specificity,
        npv,
        fpr: error_rate(fp, fp + tn),
        fdr: error_rate(fp, fp + tp),
        fnr: error_rate(fn_, fn_ + tp),
        mcc,
    }
}

/// Derive the full report from a confusion matrix.
pub fn metrics(cm: &ConfusionMatrix) -> Result<EvalReport, EvalError> {
    let total = cm.total();
    if cm.classes() == 0 || total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let c = cm.classes();
    let per_class: Vec<ClassMetrics> = (0..c).map(|k| class_metrics(cm, k)).collect();
    let avg = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / c as f64;

    let trace: u64 = (0..c).map(|k| cm.counts[k][k]).sum();
    let accuracy = trace as f64 / total as f64;

    // Cohen's kappa: observed vs chance agreement from the marginals.
    let p_o = accuracy;
    let mut marginal_product = 0u128;
    for k in 0..c {
        let row: u64 = cm.counts[k].iter().sum();
        let col: u64 = (0..c).map(|r| cm.counts[r][k]).sum();
        marginal_product += row as u128 * col as u128;
    }
    let p_e = marginal_product as f64 / (total as f64 * total as f64);
    let kappa = if 1.0 - p_e == 0.0 {
        if p_o == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };

    let mut abs_err = 0u64;
    for (r, row) in cm.counts.iter().enumerate() {
        for (col, &n) in row.iter().enumerate() {
            abs_err += n * (r.abs_diff(col)) as u64;
        }
    }
    let label_mae = abs_err as f64 / total as f64;

    Ok(EvalReport {
        accuracy,
        macro_precision: avg(|m| m.precision),
        macro_recall: avg(|m| m.recall),
        macro_f1: avg(|m| m.f1),
        macro_specificity: avg(|m| m.specificity),
        macro_npv: avg(|m| m.npv),
        macro_fpr: avg(|m| m.fpr),
        macro_fdr: avg(|m| m.fdr),
        macro_fnr: avg(|m| m.fnr),
        mcc: avg(|m| m.mcc),
        kappa,
        label_mae,
        per_class,
    })
}

/// Cosine similarity with the zero-vector-gives-zero convention.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_diagonal_maxes_everything() {
        let cm = ConfusionMatrix {
            counts: vec![vec![5, 0, 0], vec![0, 7, 0], vec![0, 0, 3]],
        };
        let r = metrics(&cm).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.mcc, 1.0);
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.macro_fpr, 0.0);
        assert_eq!(r.label_mae, 0.0);
    }

    #[test]
    fn chance_level_predictions_have_near_zero_kappa() {
        // Predictions independent of truth with identical marginals:
        // counts[r][c] proportional to p_r * p_c.
        let cm = ConfusionMatrix {
            counts: vec![vec![40, 40, 20], vec![40, 40, 20], vec![20, 20, 10]],
        };
        let r = metrics(&cm).unwrap();
        assert!(r.kappa.abs() < 1e-12, "kappa {}", r.kappa);
    }

    #[test]
    fn identities_hold_per_class() {
        let cm = ConfusionMatrix {
            counts: vec![vec![8, 2, 1], vec![0, 5, 4], vec![3, 0, 9]],
        };
        let r = metrics(&cm).unwrap();
        for m in &r.per_class {
            assert!((m.fpr + m.specificity - 1.0).abs() < 1e-15);
            assert!((m.fdr + m.precision - 1.0).abs() < 1e-15);
            assert!((m.fnr + m.recall - 1.0).abs() < 1e-15);
            for v in [m.precision, m.recall, m.f1, m.specificity, m.npv] {
                assert!((0.0..=1.0).contains(&v));
            }
            assert!((-1.0..=1.0).contains(&m.mcc));
        }
    }

    #[test]
    fn binary_mcc_equals_pearson_of_indicators() {
        let cm = ConfusionMatrix {
            counts: vec![vec![12, 5], vec![3, 20]],
        };
        let r = metrics(&cm).unwrap();

        // Reconstruct the label vectors and correlate them directly.
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for (t, row) in cm.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                for _ in 0..n {
                    truth.push(t as f64);
                    pred.push(p as f64);
                }
            }
        }
        let n = truth.len() as f64;
        let mt = truth.iter().sum::<f64>() / n;
        let mp = pred.iter().sum::<f64>() / n;
        let cov: f64 = truth
            .iter()
            .zip(&pred)
            .map(|(t, p)| (t - mt) * (p - mp))
            .sum::<f64>();
        let vt: f64 = truth.iter().map(|t| (t - mt) * (t - mt)).sum::<f64>();
        let vp: f64 = pred.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>();
        let pearson = cov / (vt * vp).sqrt();
        // For the binary one-vs-rest case, both classes give the same MCC.
        assert!((r.per_class[0].mcc - pearson).abs() < 1e-12);
        assert!((r.per_class[1].mcc - pearson).abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_is_error() {
        assert!(matches!(
            metrics(&ConfusionMatrix::new(0)),
            Err(EvalError::EmptyMatrix)
        ));
        assert!(matches!(
            metrics(&ConfusionMatrix::new(3)),
            Err(EvalError::EmptyMatrix)
        ));
    }

    #[test]
    fn label_mae_counts_index_distance() {
        let cm = ConfusionMatrix {
            counts: vec![vec![0, 0, 2], vec![0, 1, 0], vec![0, 0, 1]],
        };
        // Two samples off by 2, two exact: MAE = 4/4 = 1.
        assert_eq!(metrics(&cm).unwrap().label_mae, 1.0);
    }

    #[test]
    fn cosine_similarity_conventions() {
        assert!((cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]), 0.0);
        assert!((cosine_similarity(&[1.0, -1.0], &[-2.0, 2.0]) + 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }
}
