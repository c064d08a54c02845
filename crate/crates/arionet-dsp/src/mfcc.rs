//! Mel-frequency cepstral coefficients and finite-difference deltas.

/// Log floor applied before the DCT.
pub const LOG_EPS: f64 = 1e-10;

/// Number of cepstral coefficients kept.
pub const N_MFCC: usize = 13;

/// 13 base coefficients plus first and second finite differences,
/// all 13 x T.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    pub coeffs: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
    pub delta2: Vec<Vec<f64>>,
}

/// MFCCs of a mel spectrogram: orthonormal DCT-II over log(mel + eps),
/// first 13 coefficients per frame.
pub fn mfcc(mel: &[Vec<f64>]) -> MfccMatrix {
    let n_bands = mel.len();
    let frames = mel.first().map_or(0, |row| row.len());
    let mut coeffs = vec![vec![0.0; frames]; N_MFCC.min(n_bands.max(1))];

    // DCT-II basis, orthonormal scaling.
    let scale0 = (1.0 / n_bands as f64).sqrt();
    let scale = (2.0 / n_bands as f64).sqrt();
    let mut log_col = vec![0.0; n_bands];
    for t in 0..frames {
        for (n, band) in mel.iter().enumerate() {
            log_col[n] = (band[t] + LOG_EPS).ln();
        }
        for (k, row) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (n, &v) in log_col.iter().enumerate() {
                acc += v
                    * (std::f64::consts::PI * k as f64 * (2.0 * n as f64 + 1.0)
                        / (2.0 * n_bands as f64))
                        .cos();
            }
            row[t] = acc * if k == 0 { scale0 } else { scale };
        }
    }

    let delta = delta(&coeffs);
    let delta2 = crate::mfcc::delta(&delta);
    MfccMatrix {
        coeffs,
        delta,
        delta2,
    }
}

/// First finite difference along time: out(t) = x(t) - x(t-1), out(0) = 0.
pub fn delta(seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
    seq.iter()
        .map(|row| {
            let mut out = vec![0.0; row.len()];
            for t in 1..row.len() {
                out[t] = row[t] - row[t - 1];
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mel_leaves_only_first_coefficient() {
        let mel = vec![vec![3.0; 2]; 40];
        let m = mfcc(&mel);
        assert_eq!(m.coeffs.len(), 13);
        assert!(m.coeffs[0][0].abs() > 1e-6);
        for k in 1..13 {
            for t in 0..2 {
                assert!(m.coeffs[k][t].abs() < 1e-10, "coeff {k} frame {t}");
            }
        }
    }

    #[test]
    fn identical_frames_give_identical_columns() {
        let mel: Vec<Vec<f64>> = (0..30).map(|n| vec![(n as f64).exp() % 7.0; 2]).collect();
        let m = mfcc(&mel);
        for k in 0..13 {
            assert_eq!(m.coeffs[k][0], m.coeffs[k][1]);
        }
    }

    #[test]
    fn matches_direct_dct_sum() {
        let mut rng = arionet_rng::Rng::seed_from_u64(17);
        let n = 32;
        let mel: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.next_f64() * 4.0]).collect();
        let m = mfcc(&mel);
        for k in 0..13 {
            let mut acc = 0.0;
            for (nn, band) in mel.iter().enumerate() {
                acc += (band[0] + LOG_EPS).ln()
                    * (std::f64::consts::PI * k as f64 * (2 * nn + 1) as f64 / (2 * n) as f64)
                        .cos();
            }
            let s = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            assert!((m.coeffs[k][0] - acc * s).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_of_constant_is_exactly_zero() {
        let rows = vec![vec![5.5; 6]; 3];
        for row in delta(&rows) {
            assert!(row.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn delta_of_ramp() {
        let rows = vec![vec![0.0, 1.0, 2.0, 3.0]];
        assert_eq!(delta(&rows)[0], vec![0.0, 1.0, 1.0, 1.0]);
        let dd = delta(&delta(&rows));
        assert_eq!(dd[0], vec![0.0, 1.0, 0.0, 0.0]);
    }
}
