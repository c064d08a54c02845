//! Distribution statistics comparing original and predicted frames, and
//! per-example pitch-class correlation.

use crate::EvalError;

/// Mean and max statistics over a set of frames (each frame one vector).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSetStats {
    pub mean_of_means: f64,
    pub std_of_means: f64,
    pub mean_of_maxes: f64,
    pub std_of_maxes: f64,
}

fn stats(frames: &[Vec<f64>]) -> FrameSetStats {
    let n = frames.len() as f64;
    let means: Vec<f64> = frames
        .iter()
        .map(|f| f.iter().sum::<f64>() / f.len().max(1) as f64)
        .collect();
    let maxes: Vec<f64> = frames
        .iter()
        .map(|f| f.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let agg = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (mean_of_means, std_of_means) = agg(&means);
    let (mean_of_maxes, std_of_maxes) = agg(&maxes);
    FrameSetStats {
        mean_of_means,
        std_of_means,
        mean_of_maxes,
        std_of_maxes,
    }
}

/// Side-by-side statistics with absolute percentage differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDistributionReport {
    pub original: FrameSetStats,
    pub predicted: FrameSetStats,
    /// |orig - pred| / orig * 100 over the mean-of-means.
    pub mean_delta_pct: f64,
    /// Same over the std-of-means.
    pub std_delta_pct: f64,
    /// Same over the mean-of-maxes.
    pub max_delta_pct: f64,
}

fn delta_pct(orig: f64, pred: f64) -> f64 {
    if orig == 0.0 {
        0.0
    } else {
        (orig - pred).abs() / orig * 100.0
    }
}

/// Compare original and predicted frame sets (paired, same length).
pub fn frame_distribution_stats(
    originals: &[Vec<f64>],
    predictions: &[Vec<f64>],
) -> Result<FrameDistributionReport, EvalError> {
    if originals.is_empty() || originals.len() != predictions.len() {
        return Err(EvalError::LengthMismatch {
            labels: originals.len(),
            rows: predictions.len(),
        });
    }
    let original = stats(originals);
    let predicted = stats(predictions);
    Ok(FrameDistributionReport {
        original,
        predicted,
        mean_delta_pct: delta_pct(original.mean_of_means, predicted.mean_of_means),
        std_delta_pct: delta_pct(original.std_of_means, predicted.std_of_means),
        max_delta_pct: delta_pct(original.mean_of_maxes, predicted.mean_of_maxes),
    })
}

/// Pearson correlation across the 12 pitch classes of one frame pair.
/// Constant vectors have no defined correlation.
pub fn pitch_class_correlation(orig: &[f64], pred: &[f64]) -> Result<f64, EvalError> {
    if orig.len() != pred.len() || orig.is_empty() {
        return Err(EvalError::LengthMismatch {
            labels: orig.len(),
            rows: pred.len(),
        });
    }
    let n = orig.len() as f64;
    let mo = orig.iter().sum::<f64>() / n;
    let mp = pred.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vo = 0.0;
    let mut vp = 0.0;
    for (o, p) in orig.iter().zip(pred) {
        cov += (o - mo) * (p - mp);
        vo += (o - mo) * (o - mo);
        vp += (p - mp) * (p - mp);
    }
    if vo == 0.0 || vp == 0.0 {
        return Err(EvalError::UndefinedCorrelation);
    }
    Ok(cov / (vo * vp).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_have_zero_deltas() {
        let frames = vec![vec![0.1, 0.5, 0.9], vec![0.2, 0.4, 0.6]];
        let r = frame_distribution_stats(&frames, &frames).unwrap();
        assert_eq!(r.mean_delta_pct, 0.0);
        assert_eq!(r.std_delta_pct, 0.0);
        assert_eq!(r.max_delta_pct, 0.0);
    }

    #[test]
    fn uniform_scaling_gives_exact_percentage() {
        let frames = vec![vec![0.1, 0.5, 0.9], vec![0.2, 0.4, 0.6], vec![0.3, 0.3, 0.3]];
        let scaled: Vec<Vec<f64>> = frames
            .iter()
            .map(|f| f.iter().map(|v| v * 1.01).collect())
            .collect();
        let r = frame_distribution_stats(&frames, &scaled).unwrap();
        assert!((r.mean_delta_pct - 1.0).abs() < 1e-9, "{}", r.mean_delta_pct);
        assert!((r.max_delta_pct - 1.0).abs() < 1e-9);
    }

    #[test]
    fn correlation_reference_cases() {
        let orig = vec![0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.4, 0.6, 0.5, 0.45, 0.55, 0.35];
        assert!((pitch_class_correlation(&orig, &orig).unwrap() - 1.0).abs() < 1e-12);
        let anti: Vec<f64> = orig.iter().map(|v| -v + 2.0).collect();
        assert!((pitch_class_correlation(&orig, &anti).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            pitch_class_correlation(&orig, &[0.5; 12]),
            Err(EvalError::UndefinedCorrelation)
        ));
    }

    #[test]
    fn correlation_matches_direct_covariance_formula() {
        let mut rng = arionet_rng::Rng::seed_from_u64(17);
        let orig: Vec<f64> = (0..12).map(|_| rng.next_f64()).collect();
        let pred: Vec<f64> = orig
            .iter()
            .map(|v| v + 0.05 * (rng.next_f64() - 0.5))
            .collect();
        let got = pitch_class_correlation(&orig, &pred).unwrap();

        let n = 12.0;
        let mo = orig.iter().sum::<f64>() / n;
        let mp = pred.iter().sum::<f64>() / n;
        let cov: f64 = orig.iter().zip(&pred).map(|(o, p)| (o - mo) * (p - mp)).sum();
        let so: f64 = orig.iter().map(|o| (o - mo) * (o - mo)).sum::<f64>().sqrt();
        let sp: f64 = pred.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>().sqrt();
        assert!((got - cov / (so * sp)).abs() < 1e-12);
    }
}
