//! Future-frame prediction: a small transformer reads a context window of
//! chroma frames and regresses the next `horizon` frames under MSE, with
//! early stopping on a held-out validation split.

use crate::layers::{positional_encoding, Linear, Mode, TransformerBlock};
use crate::ModelError;
use arionet_dsp::Chromagram;
use arionet_rng::Rng;
use arionet_tensor::{adam_step, backward, OptimState, ParamSet, Tensor};

/// Architecture and training settings for the temporal model.
#[derive(Debug, Clone, Copy)]
pub struct TemporalConfig {
    pub blocks: usize,
    pub heads: usize,
    pub d_model: usize,
    pub ffn_dim: usize,
    /// Context window length t.
    pub context: usize,
    /// Prediction horizon k.
    pub horizon: usize,
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    /// Epochs without a min_delta improvement before stopping.
    pub patience: usize,
    pub min_delta: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        TemporalConfig {
            blocks: 2,
            heads: 2,
            d_model: 64,
            ffn_dim: 256,
            context: 12,
            horizon: 1,
            lr: 1e-4,
            batch: 32,
            max_epochs: 300,
            patience: 20,
            min_delta: 1e-5,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

/// 12 x n column block of a chromagram.
pub type ChromaFrames = Vec<Vec<f64>>;

type ParamSnapshot = Vec<(String, Vec<f64>)>;

/// Split a chromagram into context columns [0, t) and target columns
/// [t, t+k).
pub fn split_context_target(
    c: &Chromagram,
    context: usize,
    horizon: usize,
) -> Result<(ChromaFrames, ChromaFrames), ModelError> {
    let frames = c.num_frames();
    if frames < context + horizon {
        return Err(ModelError::SequenceTooShort {
            len: frames,
            context,
            horizon,
        });
    }
    let ctx = c
        .energies
        .iter()
        .map(|row| row[..context].to_vec())
        .collect();
    let fut = c
        .energies
        .iter()
        .map(|row| row[context..context + horizon].to_vec())
        .collect();
    Ok((ctx, fut))
}

/// Transformer context encoder plus linear prediction head.
#[derive(Debug, Clone)]
pub struct TemporalPredictor {
    pub cfg: TemporalConfig,
    embed: Linear,
    blocks: Vec<TransformerBlock>,
    head: Linear,
    pub params: ParamSet,
}

impl TemporalPredictor {
    pub fn new(cfg: TemporalConfig, rng: &mut Rng) -> Result<TemporalPredictor, ModelError> {
        if cfg.d_model == 0 || cfg.heads == 0 || !cfg.d_model.is_multiple_of(cfg.heads) {
            return Err(ModelError::BadHeads {
                d_model: cfg.d_model,
                heads: cfg.heads,
            });
        }
        let mut params = ParamSet::new();
        let embed = Linear::new(&mut params, "tmp.embed", 12, cfg.d_model, rng);
        let blocks = (0..cfg.blocks)
            .map(|i| {
                TransformerBlock::new(
                    &mut params,
                    &format!("tmp.block{i}"),
                    cfg.d_model,
                    cfg.heads,
                    cfg.ffn_dim,
                    rng,
                )
            })
            .collect();
        let head = Linear::new(&mut params, "tmp.head", cfg.d_model, 12, rng);
        Ok(TemporalPredictor {
            cfg,
            embed,
            blocks,
            head,
            params,
        })
    }

    /// Forward pass over a 12 x t context, producing a 12 x k tensor:
    /// the final k encoder states mapped through the prediction head.
    pub fn predict(&self, context: &ChromaFrames, mode: &mut Mode) -> Result<Tensor, ModelError> {
        let t_len = context.first().map_or(0, |row| row.len());
        if t_len == 0 {
            return Err(ModelError::EmptyInput);
        }
        let mut data = vec![0.0; t_len * 12];
        for (k, row) in context.iter().enumerate().take(12) {
            for (t, &v) in row.iter().enumerate() {
                data[t * 12 + k] = v;
            }
        }
        let input = Tensor::constant(&[t_len, 12], data);
        let mut x = self
            .embed
            .forward(&input)?
            .add(&positional_encoding(t_len, self.cfg.d_model))?;
        for block in &self.blocks {
            x = block.forward(&x, mode)?;
        }
        let k = self.cfg.horizon.min(t_len);
        let tail = x.slice(0, t_len - k, k)?;
        Ok(self.head.forward(&tail)?.transpose()?)
    }

    /// Eval-mode prediction as plain values clamped into the normalized
    /// chroma range [0, 1].
    pub fn predict_values(&self, context: &ChromaFrames) -> Result<ChromaFrames, ModelError> {
        let out = self.predict(context, &mut Mode::Eval)?;
        let k = out.cols();
        let data = out.to_vec();
        Ok((0..12)
            .map(|row| (0..k).map(|c| data[row * k + c].clamp(0.0, 1.0)).collect())
            .collect())
    }
}

/// Batch-mean squared error per the prediction objective: the sum of
/// squared entries of (pred - target), averaged over the batch.
pub fn mse(preds: &[Tensor], targets: &[&ChromaFrames]) -> Result<Tensor, ModelError> {
    if preds.is_empty() || preds.len() != targets.len() {
        return Err(ModelError::EmptyBatch);
    }
    let mut per_sample = Vec::with_capacity(preds.len());
    for (pred, target) in preds.iter().zip(targets) {
        let k = pred.cols();
        let flat: Vec<f64> = target.iter().flat_map(|row| row.iter().copied()).collect();
        let t = Tensor::constant(&[12, k], flat);
        let diff = pred.sub(&t)?;
        per_sample.push(diff.mul(&diff)?.sum_all());
    }
    let mut total = per_sample[0].clone();
    for s in &per_sample[1..] {
        total = total.add(s)?;
    }
    Ok(total.mul_scalar(1.0 / preds.len() as f64))
}

fn mse_values(pred: &ChromaFrames, target: &ChromaFrames) -> f64 {
    let mut acc = 0.0;
    for (pr, tr) in pred.iter().zip(target) {
        for (p, t) in pr.iter().zip(tr) {
            acc += (p - t) * (p - t);
        }
    }
    acc
}

fn mae_values(pred: &ChromaFrames, target: &ChromaFrames) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for (pr, tr) in pred.iter().zip(target) {
        for (p, t) in pr.iter().zip(tr) {
            acc += (p - t).abs();
            n += 1;
        }
    }
    acc / n as f64
}

fn frame_cosine(pred: &ChromaFrames, target: &ChromaFrames) -> f64 {
    let k = pred.first().map_or(0, |row| row.len());
    let mut acc = 0.0;
    for c in 0..k {
        let p: Vec<f64> = pred.iter().map(|row| row[c]).collect();
        let t: Vec<f64> = target.iter().map(|row| row[c]).collect();
        let dot: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
        let np: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nt: f64 = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        if np > 0.0 && nt > 0.0 {
            acc += dot / (np * nt);
        }
    }
    acc / k.max(1) as f64
}

/// One epoch of logged measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochTrace {
    pub train_mse: f64,
    pub val_mse: f64,
    pub val_cosine: f64,
    pub val_mae: f64,
}

/// Training result with the restored best-validation weights.
pub struct TemporalOutcome {
    pub predictor: TemporalPredictor,
    pub traces: Vec<EpochTrace>,
    pub val_indices: Vec<usize>,
    pub stopped_early: bool,
    pub clamped_batch: Option<usize>,
}

/// Deterministic train/validation index split: shuffle 0..n with the
/// seed, reserve the trailing `fraction` (at least one item when n > 1)
/// for validation.
pub fn validation_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = Rng::seed_from_u64(seed);
    rng.shuffle(&mut idx);
    let mut val_len = (n as f64 * fraction).round() as usize;
    if n > 1 {
        val_len = val_len.clamp(1, n - 1);
    } else {
        val_len = 0;
    }
    let val = idx.split_off(n - val_len);
    (idx, val)
}

/// Train the future-frame predictor with early stopping on validation
/// MSE; the best-validation weights are restored before returning.
pub fn train_temporal(
    chromas: &[Chromagram],
    cfg: &TemporalConfig,
) -> Result<TemporalOutcome, ModelError> {
    if chromas.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut pairs = Vec::with_capacity(chromas.len());
    for c in chromas {
        pairs.push(split_context_target(c, cfg.context, cfg.horizon)?);
    }

    let mut rng = Rng::seed_from_u64(cfg.seed);
    let predictor = TemporalPredictor::new(*cfg, &mut rng)?;
    let mut state = OptimState::new(&predictor.params, cfg.lr, 1.0);

    let (train_idx, val_indices) = validation_split(pairs.len(), cfg.val_fraction, cfg.seed);
    let clamped_batch = (cfg.batch > train_idx.len()).then_some(train_idx.len());
    let batch = cfg.batch.min(train_idx.len()).max(1);

    let mut traces = Vec::new();
    let mut best: Option<(f64, ParamSnapshot)> = None;
    let mut stale = 0usize;
    let mut stopped_early = false;
    let mut order = train_idx.clone();

    for _epoch in 0..cfg.max_epochs {
        rng.shuffle(&mut order);
        let mut train_sse = 0.0;
        for batch_idx in order.chunks(batch) {
            let mut preds = Vec::with_capacity(batch_idx.len());
            let mut targets = Vec::with_capacity(batch_idx.len());
            for &i in batch_idx {
                let (ctx, fut) = &pairs[i];
                preds.push(predictor.predict(ctx, &mut Mode::Eval)?);
                targets.push(fut);
            }
            let loss = mse(&preds, &targets)?;
            backward(&loss)?;
            adam_step(&predictor.params, &mut state);
            train_sse += loss.item() * batch_idx.len() as f64;
        }
        let train_mse = train_sse / order.len() as f64;

        let (val_mse, val_cosine, val_mae) = evaluate_split(&predictor, &pairs, &val_indices)?;
        traces.push(EpochTrace {
            train_mse,
            val_mse,
            val_cosine,
            val_mae,
        });

        let improved = match &best {
            None => true,
            Some((best_mse, _)) => val_mse < best_mse - cfg.min_delta,
        };
        if improved {
            best = Some((val_mse, predictor.params.snapshot()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    if let Some((_, snapshot)) = &best {
        predictor.params.restore(snapshot);
    }

    Ok(TemporalOutcome {
        predictor,
        traces,
        val_indices,
        stopped_early,
        clamped_batch,
    })
}

/// Validation metrics over the given indices (empty split gives zeros).
pub fn evaluate_split(
    predictor: &TemporalPredictor,
    pairs: &[(ChromaFrames, ChromaFrames)],
    indices: &[usize],
) -> Result<(f64, f64, f64), ModelError> {
    if indices.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let mut sse = 0.0;
    let mut cosine = 0.0;
    let mut mae = 0.0;
    for &i in indices {
        let (ctx, fut) = &pairs[i];
        let pred = predictor.predict_values(ctx)?;
        sse += mse_values(&pred, fut);
        cosine += frame_cosine(&pred, fut);
        mae += mae_values(&pred, fut);
    }
    let n = indices.len() as f64;
    Ok((sse / n, cosine / n, mae / n))
}
