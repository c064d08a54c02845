//! Radix-2 Cooley-Tukey FFT.

use crate::DspError;

/// Complex value used by the FFT routines.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    fn mul(self, other: Complex) -> Complex {
        Complex {
            re: self.re * other.re - self.im * other.im,
            im: self.re * other.im + self.im * other.re,
        }
    }
}

/// Forward DFT of a power-of-two-length sequence.
///
/// Callers that need other lengths zero-pad first.
pub fn fft(x: &[Complex]) -> Result<Vec<Complex>, DspError> {
    if x.is_empty() || !x.len().is_power_of_two() {
        return Err(DspError::NotPowerOfTwo(x.len()));
    }
    let mut buf = x.to_vec();
    fft_in_place(&mut buf, false);
    Ok(buf)
}

/// Inverse DFT such that `ifft(fft(x)) == x` up to rounding.
pub fn ifft(x: &[Complex]) -> Result<Vec<Complex>, DspError> {
    if x.is_empty() || !x.len().is_power_of_two() {
        return Err(DspError::NotPowerOfTwo(x.len()));
    }
    let mut buf = x.to_vec();
    fft_in_place(&mut buf, true);
    let scale = 1.0 / buf.len() as f64;
    for v in &mut buf {
        v.re *= scale;
        v.im *= scale;
    }
    Ok(buf)
}

/// In-place radix-2 transform. Length must be a power of two.
pub(crate) fn fft_in_place(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 0..n - 1 {
        if i < j {
            buf.swap(i, j);
        }
        let mut k = n >> 1;
        while k <= j {
            j -= k;
            k >>= 1;
        }
        j += k;
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut size = 2;
    while size <= n {
        let half = size >> 1;
        let angle = sign * std::f64::consts::TAU / size as f64;
        let w = Complex::new(angle.cos(), angle.sin());
        let mut start = 0;
        while start < n {
            let mut twiddle = Complex::new(1.0, 0.0);
            for k in 0..half {
                let u = buf[start + k];
                let t = twiddle.mul(buf[start + k + half]);
                buf[start + k] = Complex::new(u.re + t.re, u.im + t.im);
                buf[start + k + half] = Complex::new(u.re - t.re, u.im - t.im);
                twiddle = twiddle.mul(w);
            }
            start += size;
        }
        size <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_gives_flat_spectrum() {
        let mut x = vec![Complex::default(); 4];
        x[0] = Complex::new(1.0, 0.0);
        let y = fft(&x).unwrap();
        for v in y {
            assert!((v.re - 1.0).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_gives_dc_spike() {
        let x = vec![Complex::new(1.0, 0.0); 4];
        let y = fft(&x).unwrap();
        assert!((y[0].re - 4.0).abs() < 1e-12);
        for v in &y[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        let x = vec![Complex::default(); 3];
        assert_eq!(fft(&x).unwrap_err(), DspError::NotPowerOfTwo(3));
        assert_eq!(fft(&[]).unwrap_err(), DspError::NotPowerOfTwo(0));
    }

    #[test]
    fn length_one_is_identity() {
        let x = [Complex::new(2.5, -1.0)];
        assert_eq!(fft(&x).unwrap(), x.to_vec());
        assert_eq!(ifft(&x).unwrap(), x.to_vec());
    }
}
