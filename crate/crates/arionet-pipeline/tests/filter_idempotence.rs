//! Property check: energy filtering is idempotent on burst/silence
//! signals — refiltering an already-filtered waveform with the same
//! parameters removes nothing further.

use arionet_dsp::{mel_spectrogram, stft, Waveform};
use arionet_pipeline::{frame_energy_mask, mask_to_waveform};
use arionet_rng::Rng;
use proptest::prelude::*;

fn burst_signal(rng: &mut Rng) -> Waveform {
    let sr = 22050u32;
    let mut samples = Vec::new();
    let bursts = 1 + rng.below(4);
    samples.extend(std::iter::repeat_n(0.0, (rng.uniform(0.05, 0.2) * sr as f64) as usize));
    for _ in 0..bursts {
        let freq = rng.uniform(300.0, 4000.0);
        let amp = rng.uniform(0.2, 0.8);
        let n = (rng.uniform(0.08, 0.3) * sr as f64) as usize;
        for i in 0..n {
            samples.push(amp * (std::f64::consts::TAU * freq * i as f64 / sr as f64).sin());
        }
        samples.extend(std::iter::repeat_n(
            0.0,
            (rng.uniform(0.05, 0.25) * sr as f64) as usize,
        ));
    }
    Waveform::new(samples, sr).unwrap()
}

fn filter(w: &Waveform) -> Waveform {
    let spec = stft(w, 512, 128).unwrap();
    let mel = mel_spectrogram(&spec, 40).unwrap();
    let mask = frame_energy_mask(&mel, 0.05);
    mask_to_waveform(&mask, 128, 512, w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn refiltering_removes_nothing(seed in 0u64..10_000) {
        let w = burst_signal(&mut Rng::seed_from_u64(seed));
        let once = filter(&w);
        prop_assert!(!once.samples.is_empty());
        let twice = filter(&once);
        prop_assert_eq!(&once.samples, &twice.samples, "seed {}", seed);
    }
}
