//! Multiview chromagram augmentations, the NT-Xent objective, and the
//! contrastive pretraining loop.

use crate::encoder::{Encoder, EncoderConfig};
use crate::layers::Mode;
use crate::ModelError;
use arionet_dsp::Chromagram;
use arionet_rng::Rng;
use arionet_tensor::{adam_step, backward, lr_decay, OptimState, Tensor};

/// Which augmentations run and how strong they are.
#[derive(Debug, Clone, Copy)]
pub struct AugmentationSpec {
    pub pitch_shift: bool,
    /// Semitone rotation drawn from [-range, range].
    pub pitch_shift_range: i64,
    pub time_mask: bool,
    /// Masked width drawn from [0, time_mask_max * T] frames.
    pub time_mask_max: f64,
    pub chroma_mask: bool,
    /// Masked row count drawn from [0, chroma_mask_max_rows].
    pub chroma_mask_max_rows: usize,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        AugmentationSpec {
            pitch_shift: true,
            pitch_shift_range: 2,
            time_mask: true,
            time_mask_max: 0.2,
            chroma_mask: true,
            chroma_mask_max_rows: 2,
        }
    }
}

impl AugmentationSpec {
    pub fn disabled() -> Self {
        AugmentationSpec {
            pitch_shift: false,
            time_mask: false,
            chroma_mask: false,
            ..AugmentationSpec::default()
        }
    }
}

/// Rotate the 12 pitch-class rows by `k` semitones: row p -> row (p+k) mod 12.
pub fn pitch_shift(c: &Chromagram, k: i64) -> Chromagram {
    let mut energies = vec![Vec::new(); 12];
    for (p, row) in c.energies.iter().enumerate() {
        let dest = (p as i64 + k).rem_euclid(12) as usize;
        energies[dest] = row.clone();
    }
    Chromagram::from_rows(energies, c.normalized)
}

/// Zero the frame columns [start, start + width).
pub fn time_mask(c: &Chromagram, start: usize, width: usize) -> Chromagram {
    let frames = c.num_frames();
    let end = (start + width).min(frames);
    let energies = c
        .energies
        .iter()
        .map(|row| {
            let mut row = row.clone();
            for v in &mut row[start.min(frames)..end] {
                *v = 0.0;
            }
            row
        })
        .collect();
    Chromagram::from_rows(energies, c.normalized)
}

/// Zero the selected pitch-class rows.
pub fn chroma_mask(c: &Chromagram, rows: &[usize]) -> Chromagram {
    let energies = c
        .energies
        .iter()
        .enumerate()
        .map(|(p, row)| {
            if rows.contains(&p) {
                vec![0.0; row.len()]
            } else {
                row.clone()
            }
        })
        .collect();
    Chromagram::from_rows(energies, c.normalized)
}

fn augment_once(c: &Chromagram, spec: &AugmentationSpec, rng: &mut Rng) -> Chromagram {
    let mut out = c.clone();
    if spec.pitch_shift {
        let k = rng.between(-spec.pitch_shift_range, spec.pitch_shift_range);
        out = pitch_shift(&out, k);
    }
    if spec.time_mask {
        let t = out.num_frames();
        let max_width = (spec.time_mask_max * t as f64).floor() as usize;
        let width = rng.below(max_width + 1);
        let start = rng.below(t - width + 1);
        out = time_mask(&out, start, width);
    }
    if spec.chroma_mask {
        let count = rng.below(spec.chroma_mask_max_rows + 1);
        let rows = rng.sample_indices(12, count);
        out = chroma_mask(&out, &rows);
    }
    out
}

/// Two independently augmented views of the same chromagram.
pub fn make_views(
    c: &Chromagram,
    spec: &AugmentationSpec,
    rng: &mut Rng,
) -> (Chromagram, Chromagram) {
    (augment_once(c, spec, rng), augment_once(c, spec, rng))
}

/// NT-Xent loss value plus the count of embeddings that had to be
/// renormalized before use.
pub struct NtXent {
    pub loss: Tensor,
    pub renormalized: usize,
}

fn count_non_unit_rows(m: &Tensor) -> usize {
    let n = m.cols();
    m.data()
        .chunks(n)
        .filter(|row| {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm - 1.0).abs() > 1e-6
        })
        .count()
}

/// Per-anchor contrastive terms: for each row i of `anchor`,
/// -log( exp(sim(a_i, p_i)/tau) / (sum_j exp(sim(a_i, p_j)/tau)
///       + sum_{j != i} exp(sim(a_i, a_j)/tau)) ).
fn anchor_losses(anchor: &Tensor, positive: &Tensor, tau: f64) -> Result<Tensor, ModelError> {
    let b = anchor.rows();
    let mut eye = vec![0.0; b * b];
    let mut off = vec![1.0; b * b];
    for i in 0..b {
        eye[i * b + i] = 1.0;
        off[i * b + i] = 0.0;
    }
    let eye = Tensor::constant(&[b, b], eye);
    let off = Tensor::constant(&[b, b], off);

    let cross = anchor.matmul(&positive.transpose()?)?.mul_scalar(1.0 / tau);
    let within = anchor.matmul(&anchor.transpose()?)?.mul_scalar(1.0 / tau);
    let numerator = cross.mul(&eye)?.sum_axis(1)?.exp();
    let denominator = cross
        .exp()
        .sum_axis(1)?
        .add(&within.exp().mul(&off)?.sum_axis(1)?)?;
    Ok(numerator.div(&denominator)?.log().mul_scalar(-1.0))
}

/// Symmetrized NT-Xent over a batch of paired unit embeddings
/// (`views_a`, `views_b` are B x d' row stacks).
pub fn nt_xent(views_a: &Tensor, views_b: &Tensor, tau: f64) -> Result<NtXent, ModelError> {
    if tau <= 0.0 {
        return Err(ModelError::BadTemperature(tau));
    }
    if views_a.shape() != views_b.shape() {
        return Err(ModelError::ViewShapeMismatch {
            a: views_a.shape().to_vec(),
            b: views_b.shape().to_vec(),
        });
    }
    let b = views_a.rows();
    if b == 0 || views_a.numel() == 0 {
        return Err(ModelError::EmptyBatch);
    }

    let renormalized = count_non_unit_rows(views_a) + count_non_unit_rows(views_b);
    let (a, p) = if renormalized > 0 {
        (views_a.l2_normalize(), views_b.l2_normalize())
    } else {
        (views_a.clone(), views_b.clone())
    };

    let forward = anchor_losses(&a, &p, tau)?;
    let reverse = anchor_losses(&p, &a, tau)?;
    let loss = forward
        .sum_all()
        .add(&reverse.sum_all())?
        .mul_scalar(1.0 / (2 * b) as f64);
    Ok(NtXent { loss, renormalized })
}

/// Measure an encoder against a fixed multiview protocol: batches in
/// index order, views drawn from the given spec with a fixed seed, eval
/// mode (no dropout), no updates. Returns the item-weighted mean NT-Xent
/// loss and the mean positive-pair cosine similarity.
///
/// Evaluating differently trained encoders under one shared protocol is
/// what makes augmentation ablations comparable: an encoder trained
/// without augmentations is still scored on its robustness to them.
pub fn contrastive_eval(
    encoder: &Encoder,
    chromas: &[Chromagram],
    spec: &AugmentationSpec,
    tau: f64,
    batch: usize,
    seed: u64,
) -> Result<(f64, f64), ModelError> {
    if chromas.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut rng = Rng::seed_from_u64(seed);
    let batch = batch.min(chromas.len()).max(1);
    let indices: Vec<usize> = (0..chromas.len()).collect();
    let mut loss_weighted = 0.0;
    let mut cosine_sum = 0.0;
    for batch_idx in indices.chunks(batch) {
        let mut rows_a = Vec::with_capacity(batch_idx.len());
        let mut rows_b = Vec::with_capacity(batch_idx.len());
        for &i in batch_idx {
            let (view_a, view_b) = make_views(&chromas[i], spec, &mut rng);
            rows_a.push(encoder.encode(&view_a, &mut Mode::Eval)?.u_hat);
            rows_b.push(encoder.encode(&view_b, &mut Mode::Eval)?.u_hat);
        }
        let stack_a = Tensor::concat(&rows_a, 0)?;
        let stack_b = Tensor::concat(&rows_b, 0)?;
        {
            let da = stack_a.data();
            let db = stack_b.data();
            let d = stack_a.cols();
            for i in 0..batch_idx.len() {
                cosine_sum += da[i * d..(i + 1) * d]
                    .iter()
                    .zip(&db[i * d..(i + 1) * d])
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
            }
        }
        let nt = nt_xent(&stack_a, &stack_b, tau)?;
        loss_weighted += nt.loss.item() * batch_idx.len() as f64;
    }
    let n = chromas.len() as f64;
    Ok((loss_weighted / n, cosine_sum / n))
}

/// Settings for contrastive pretraining.
#[derive(Debug, Clone)]
pub struct PretrainConfig {
    pub encoder: EncoderConfig,
    pub augment: AugmentationSpec,
    pub tau: f64,
    pub lr: f64,
    pub gamma: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            encoder: EncoderConfig::default(),
            augment: AugmentationSpec::default(),
            tau: 0.07,
            lr: 1e-3,
            gamma: 0.95,
            batch: 64,
            epochs: 300,
            seed: 0,
        }
    }
}

/// Pretraining result: the trained encoder plus per-epoch traces.
pub struct PretrainOutcome {
    pub encoder: Encoder,
    /// Item-weighted mean loss per epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean positive-pair cosine similarity per epoch.
    pub epoch_positive_cosine: Vec<f64>,
    /// Set when the requested batch size exceeded the dataset.
    pub clamped_batch: Option<usize>,
    pub renormalized: usize,
}

/// Contrastive pretraining over a chromagram collection: per epoch,
/// shuffle, batch, build two augmented views per item, encode both,
/// apply NT-Xent, backpropagate, Adam-update, then decay the rate.
pub fn pretrain(chromas: &[Chromagram], cfg: &PretrainConfig) -> Result<PretrainOutcome, ModelError> {
    if chromas.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let encoder = Encoder::new(cfg.encoder, &mut rng)?;
    let mut state = OptimState::new(&encoder.params, cfg.lr, cfg.gamma);

    let clamped_batch = (cfg.batch > chromas.len()).then_some(chromas.len());
    let batch = cfg.batch.min(chromas.len()).max(1);

    let mut order: Vec<usize> = (0..chromas.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut epoch_positive_cosine = Vec::with_capacity(cfg.epochs);
    let mut renormalized = 0;

    for _epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut loss_weighted = 0.0;
        let mut cosine_sum = 0.0;
        let mut items = 0usize;

        for batch_idx in order.chunks(batch) {
            let mut rows_a = Vec::with_capacity(batch_idx.len());
            let mut rows_b = Vec::with_capacity(batch_idx.len());
            for &i in batch_idx {
                let (view_a, view_b) = make_views(&chromas[i], &cfg.augment, &mut rng);
                let out_a = encoder.encode(
                    &view_a,
                    &mut Mode::Train {
                        dropout: cfg.encoder.dropout,
                        rng: &mut rng,
                    },
                )?;
                let out_b = encoder.encode(
                    &view_b,
                    &mut Mode::Train {
                        dropout: cfg.encoder.dropout,
                        rng: &mut rng,
                    },
                )?;
                rows_a.push(out_a.u_hat);
                rows_b.push(out_b.u_hat);
            }
            let stack_a = Tensor::concat(&rows_a, 0)?;
            let stack_b = Tensor::concat(&rows_b, 0)?;

            {
                let da = stack_a.data();
                let db = stack_b.data();
                let d = stack_a.cols();
                for i in 0..batch_idx.len() {
                    cosine_sum += da[i * d..(i + 1) * d]
                        .iter()
                        .zip(&db[i * d..(i + 1) * d])
                        .map(|(x, y)| x * y)
                        .sum::<f64>();
                }
            }

            let nt = nt_xent(&stack_a, &stack_b, cfg.tau)?;
            renormalized += nt.renormalized;
            backward(&nt.loss)?;
            adam_step(&encoder.params, &mut state);

            loss_weighted += nt.loss.item() * batch_idx.len() as f64;
            items += batch_idx.len();
        }

        lr_decay(&mut state);
        epoch_losses.push(loss_weighted / items as f64);
        epoch_positive_cosine.push(cosine_sum / items as f64);
    }

    Ok(PretrainOutcome {
        encoder,
        epoch_losses,
        epoch_positive_cosine,
        clamped_batch,
        renormalized,
    })
}
