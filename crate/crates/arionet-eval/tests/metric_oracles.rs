#![allow(clippy::needless_range_loop)] // oracle code mirrors the printed formulas

//! Direct-formula oracles for the metric suite over randomized
//! confusion matrices, plus the chance-agreement kappa experiment.

use arionet_eval::{metrics, ConfusionMatrix};
use arionet_rng::Rng;

/// Independent re-derivation of every report field from first
/// principles, sharing only the declared degenerate-rate conventions.
struct Oracle {
    accuracy: f64,
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
    specificity: Vec<f64>,
    npv: Vec<f64>,
    fpr: Vec<f64>,
    fdr: Vec<f64>,
    fnr: Vec<f64>,
    mcc: Vec<f64>,
    kappa: f64,
    label_mae: f64,
}

fn oracle(counts: &[Vec<u64>]) -> Oracle {
    let c = counts.len();
    let total: u64 = counts.iter().flatten().sum();
    let n = total as f64;
    let mut precision = Vec::new();
    let mut recall = Vec::new();
    let mut f1 = Vec::new();
    let mut specificity = Vec::new();
    let mut npv = Vec::new();
    let mut fpr = Vec::new();
    let mut fdr = Vec::new();
    let mut fnr = Vec::new();
    let mut mcc = Vec::new();

    for k in 0..c {
        let tp = counts[k][k] as f64;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for j in 0..c {
            if j != k {
                fp += counts[j][k] as f64;
                fn_ += counts[k][j] as f64;
            }
        }
        let tn = n - tp - fp - fn_;
        let div = |num: f64, den: f64, empty: f64| if den == 0.0 { empty } else { num / den };
        let p = div(tp, tp + fp, 1.0);
        let r = div(tp, tp + fn_, 1.0);
        precision.push(p);
        recall.push(r);
        f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        specificity.push(div(tn, tn + fp, 1.0));
        npv.push(div(tn, tn + fn_, 1.0));
        fpr.push(div(fp, fp + tn, 0.0));
        fdr.push(div(fp, fp + tp, 0.0));
        fnr.push(div(fn_, fn_ + tp, 0.0));
        let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        mcc.push(if denom == 0.0 {
            0.0
        } else {
            (tp * tn - fp * fn_) / denom
        });
    }

    let trace: u64 = (0..c).map(|k| counts[k][k]).sum();
    let accuracy = trace as f64 / n;
    let mut pe_num = 0u128;
    for k in 0..c {
        let row: u64 = counts[k].iter().sum();
        let col: u64 = (0..c).map(|r| counts[r][k]).sum();
        pe_num += row as u128 * col as u128;
    }
    let p_e = pe_num as f64 / (n * n);
    let kappa = if 1.0 - p_e == 0.0 {
        if accuracy == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (accuracy - p_e) / (1.0 - p_e)
    };
    let mut mae = 0.0;
    for (r, row) in counts.iter().enumerate() {
        for (col, &v) in row.iter().enumerate() {
            mae += v as f64 * (r as f64 - col as f64).abs();
        }
    }

    Oracle {
        accuracy,
        precision,
        recall,
        f1,
        specificity,
        npv,
        fpr,
        fdr,
        fnr,
        mcc,
        kappa,
        label_mae: mae / n,
    }
}

fn macro_avg(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn five_hundred_random_matrices_match_the_oracle() {
    let mut rng = Rng::seed_from_u64(606);
    for trial in 0..500 {
        let classes = 2 + rng.below(9); // 2..=10
        let mut counts = vec![vec![0u64; classes]; classes];
        let mut total = 0u64;
        for row in counts.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.below(20) as u64;
                total += *v;
            }
        }
        if total == 0 {
            counts[0][0] = 1;
        }
        let cm = ConfusionMatrix {
            counts: counts.clone(),
        };
        let got = metrics(&cm).unwrap();
        let want = oracle(&counts);

        let close = |a: f64, b: f64, what: &str| {
            assert!(
                (a - b).abs() < 1e-12,
                "trial {trial} ({classes} classes): {what} {a} vs {b}"
            );
        };
        close(got.accuracy, want.accuracy, "accuracy");
        close(got.macro_precision, macro_avg(&want.precision), "precision");
        close(got.macro_recall, macro_avg(&want.recall), "recall");
        close(got.macro_f1, macro_avg(&want.f1), "f1");
        close(got.macro_specificity, macro_avg(&want.specificity), "specificity");
        close(got.macro_npv, macro_avg(&want.npv), "npv");
        close(got.macro_fpr, macro_avg(&want.fpr), "fpr");
        close(got.macro_fdr, macro_avg(&want.fdr), "fdr");
        close(got.macro_fnr, macro_avg(&want.fnr), "fnr");
        close(got.mcc, macro_avg(&want.mcc), "mcc");
        close(got.kappa, want.kappa, "kappa");
        close(got.label_mae, want.label_mae, "label mae");
        for k in 0..classes {
            close(got.per_class[k].precision, want.precision[k], "class precision");
            close(got.per_class[k].mcc, want.mcc[k], "class mcc");
            // Exact rate identities.
            assert!((got.per_class[k].fpr + got.per_class[k].specificity - 1.0).abs() < 1e-15);
            assert!((got.per_class[k].fdr + got.per_class[k].precision - 1.0).abs() < 1e-15);
            assert!((got.per_class[k].fnr + got.per_class[k].recall - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn perfect_diagonals_give_unit_scores() {
    let mut rng = Rng::seed_from_u64(707);
    for _ in 0..20 {
        let classes = 2 + rng.below(9);
        let counts: Vec<Vec<u64>> = (0..classes)
            .map(|k| {
                (0..classes)
                    .map(|j| if j == k { 1 + rng.below(30) as u64 } else { 0 })
                    .collect()
            })
            .collect();
        let got = metrics(&ConfusionMatrix { counts }).unwrap();
        assert_eq!(got.accuracy, 1.0);
        assert_eq!(got.mcc, 1.0);
        assert_eq!(got.kappa, 1.0);
        assert_eq!(got.macro_f1, 1.0);
    }
}

#[test]
fn marginal_matched_random_predictions_have_tiny_mean_kappa() {
    // Draw truth and prediction independently from the same class
    // distribution; kappa should hover around zero in expectation.
    let mut rng = Rng::seed_from_u64(808);
    let mut kappa_sum = 0.0;
    for _ in 0..100 {
        let classes = 2 + rng.below(5);
        let weights: Vec<f64> = (0..classes).map(|_| rng.uniform(0.2, 1.0)).collect();
        let total_w: f64 = weights.iter().sum();
        let sample = |rng: &mut Rng| -> usize {
            let mut u = rng.next_f64() * total_w;
            for (k, w) in weights.iter().enumerate() {
                if u < *w {
                    return k;
                }
                u -= w;
            }
            classes - 1
        };
        let mut counts = vec![vec![0u64; classes]; classes];
        for _ in 0..2000 {
            counts[sample(&mut rng)][sample(&mut rng)] += 1;
        }
        kappa_sum += metrics(&ConfusionMatrix { counts }).unwrap().kappa;
    }
    let mean_kappa = kappa_sum / 100.0;
    assert!(mean_kappa.abs() < 0.05, "mean kappa {mean_kappa}");
}
