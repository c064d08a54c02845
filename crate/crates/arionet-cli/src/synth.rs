//! Synthetic birdsong corpus: each species is a generator of short pitch
//! motifs (sine mixtures on a disjoint pair of pitch classes) separated
//! by silence gaps, written as PCM WAV plus a manifest.

use crate::wav::write_wav_mono16;
use crate::CliError;
use arionet_rng::Rng;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub species: usize,
    pub recordings_per: usize,
    pub seed: u64,
    pub sample_rate: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            species: 5,
            recordings_per: 20,
            seed: 7,
            sample_rate: 22050,
        }
    }
}

/// Pitch classes assigned to a species: the pair (2s, 2s+1) mod 12,
/// disjoint across species for up to six of them.
pub fn species_pitch_classes(species: usize) -> [usize; 2] {
    [(2 * species) % 12, (2 * species + 1) % 12]
}

pub fn species_name(species: usize) -> String {
    format!("species{species:02}")
}

fn midi_to_hz(midi: f64) -> f64 {
    440.0 * 2f64.powf((midi - 69.0) / 12.0)
}

fn push_silence(samples: &mut Vec<f64>, rng: &mut Rng, sr: f64, lo: f64, hi: f64) {
    let n = (rng.uniform(lo, hi) * sr) as usize;
    samples.extend(std::iter::repeat_n(0.0, n));
}

fn push_note(samples: &mut Vec<f64>, rng: &mut Rng, sr: f64, classes: &[usize; 2]) {
    let class = classes[rng.below(2)];
    let octave = 5 + rng.below(2) as i64; // octave 5 or 6
    let midi = 12.0 * (octave + 1) as f64 + class as f64;
    // Small detune (under a quarter tone) keeps the pitch class.
    let detune_cents = rng.uniform(-12.0, 12.0);
    let freq = midi_to_hz(midi) * 2f64.powf(detune_cents / 1200.0);
    let amp = rng.uniform(0.25, 0.5);
    let dur = rng.uniform(0.12, 0.17);
    let n = (dur * sr) as usize;
    let ramp = (n / 10).max(1);
    for i in 0..n {
        let t = i as f64 / sr;
        let envelope = (i.min(n - 1 - i) as f64 / ramp as f64).min(1.0);
        let fundamental = (std::f64::consts::TAU * freq * t).sin();
        let octave_partial = 0.3 * (std::f64::consts::TAU * 2.0 * freq * t).sin();
        samples.push(amp * envelope * (fundamental + octave_partial));
    }
}

/// One recording: lead-in silence, repeated note motifs with gaps,
/// tail silence, and a low noise floor throughout.
pub fn synth_recording(rng: &mut Rng, sr: u32, classes: &[usize; 2]) -> Vec<f64> {
    let srf = sr as f64;
    let mut samples = Vec::new();
    push_silence(&mut samples, rng, srf, 0.06, 0.12);
    let reps = 2;
    let notes = 2 + rng.below(2);
    for _ in 0..reps {
        for _ in 0..notes {
            push_note(&mut samples, rng, srf, classes);
            push_silence(&mut samples, rng, srf, 0.04, 0.08);
        }
    }
    push_silence(&mut samples, rng, srf, 0.06, 0.12);
    for s in &mut samples {
        *s += 0.003 * rng.uniform(-1.0, 1.0);
    }
    samples
}

/// Write the corpus and return the manifest path. Deterministic in the
/// seed down to the WAV bytes.
pub fn make_synthetic_dataset(dir: &Path, spec: &SynthSpec) -> Result<PathBuf, CliError> {
    if spec.species == 0 || spec.recordings_per == 0 {
        return Err(CliError::Validation(
            "synth needs at least one species and one recording".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("mkdir {dir:?}: {e}")))?;

    let mut rng = Rng::seed_from_u64(spec.seed);
    let mut manifest = String::from("path,species\n");
    for s in 0..spec.species {
        let classes = species_pitch_classes(s);
        let name = species_name(s);
        for r in 0..spec.recordings_per {
            let samples = synth_recording(&mut rng, spec.sample_rate, &classes);
            let filename = format!("{name}_{r:03}.wav");
            write_wav_mono16(&samples, spec.sample_rate, &dir.join(&filename))
                .map_err(|e| CliError::Runtime(format!("write {filename}: {e}")))?;
            manifest.push_str(&filename);
            manifest.push(',');
            manifest.push_str(&name);
            manifest.push('\n');
        }
    }
    let manifest_path = dir.join("manifest.csv");
    std::fs::write(&manifest_path, manifest)
        .map_err(|e| CliError::Runtime(format!("write manifest: {e}")))?;
    Ok(manifest_path)
}
