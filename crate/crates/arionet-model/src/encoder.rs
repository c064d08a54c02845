//! The shared transformer encoder over chromagram sequences and its
//! projection head.

use crate::layers::{positional_encoding, Linear, Mode, TransformerBlock};
use crate::ModelError;
use arionet_dsp::Chromagram;
use arionet_rng::Rng;
use arionet_tensor::{ParamSet, Tensor};

/// Architecture of the contrastive encoder.
#[derive(Debug, Clone, Copy)]
pub struct EncoderConfig {
    pub blocks: usize,
    pub heads: usize,
    pub d_model: usize,
    pub ffn_dim: usize,
    /// Output width of the projection head.
    pub proj_dim: usize,
    pub dropout: f64,
    /// Chromagram rows.
    pub input_dim: usize,
    /// Ablation toggle; mean pooling makes the encoder order-invariant
    /// when this is off.
    pub positional: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            blocks: 4,
            heads: 4,
            d_model: 128,
            ffn_dim: 512,
            proj_dim: 256,
            dropout: 0.2,
            input_dim: 12,
            positional: true,
        }
    }
}

/// Pooled and projected views of one chromagram.
#[derive(Debug, Clone)]
pub struct EncoderOutput {
    /// Temporal average of the block stack, d_model wide.
    pub h: Tensor,
    /// Projection head output, proj_dim wide.
    pub u: Tensor,
    /// Unit-normalized projection used for similarity.
    pub u_hat: Tensor,
}

/// Transformer encoder f over chromagram sequences plus projection head g.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub cfg: EncoderConfig,
    embed: Linear,
    blocks: Vec<TransformerBlock>,
    proj1: Linear,
    proj2: Linear,
    pub params: ParamSet,
}

impl Encoder {
    pub fn new(cfg: EncoderConfig, rng: &mut Rng) -> Result<Encoder, ModelError> {
        if cfg.d_model == 0 || cfg.heads == 0 || !cfg.d_model.is_multiple_of(cfg.heads) {
            return Err(ModelError::BadHeads {
                d_model: cfg.d_model,
                heads: cfg.heads,
            });
        }
        let mut params = ParamSet::new();
        let embed = Linear::new(&mut params, "enc.embed", cfg.input_dim, cfg.d_model, rng);
        let blocks = (0..cfg.blocks)
            .map(|i| {
                TransformerBlock::new(
                    &mut params,
                    &format!("enc.block{i}"),
                    cfg.d_model,
                    cfg.heads,
                    cfg.ffn_dim,
                    rng,
                )
            })
            .collect();
        let proj1 = Linear::new(&mut params, "proj.fc1", cfg.d_model, cfg.d_model, rng);
        let proj2 = Linear::new(&mut params, "proj.fc2", cfg.d_model, cfg.proj_dim, rng);
        Ok(Encoder {
            cfg,
            embed,
            blocks,
            proj1,
            proj2,
            params,
        })
    }

    /// Chromagram (12 x T) transposed into the T x input_dim constant the
    /// embedding layer consumes.
    fn input_tensor(&self, chroma: &Chromagram) -> Tensor {
        let t_len = chroma.num_frames();
        let d = self.cfg.input_dim;
        let mut data = vec![0.0; t_len * d];
        for (k, row) in chroma.energies.iter().enumerate().take(d) {
            for (t, &v) in row.iter().enumerate() {
                data[t * d + k] = v;
            }
        }
        Tensor::constant(&[t_len, d], data)
    }

    /// Full forward pass: embed, positional encoding, block stack,
    /// temporal average pooling, projection head, unit normalization.
    pub fn encode(&self, chroma: &Chromagram, mode: &mut Mode) -> Result<EncoderOutput, ModelError> {
        if chroma.num_frames() == 0 {
            return Err(ModelError::EmptyInput);
        }
        let mut x = self.embed.forward(&self.input_tensor(chroma))?;
        if self.cfg.positional {
            x = x.add(&positional_encoding(x.rows(), self.cfg.d_model))?;
        }
        for block in &self.blocks {
            x = block.forward(&x, mode)?;
        }
        let h = x.mean_axis(0)?;
        let u = self.proj2.forward(&self.proj1.forward(&h)?.relu())?;
        let u_hat = u.l2_normalize();
        Ok(EncoderOutput { h, u, u_hat })
    }

    /// Deterministic eval-mode embedding: the unit projection as values.
    pub fn embedding(&self, chroma: &Chromagram) -> Result<Vec<f64>, ModelError> {
        Ok(self.encode(chroma, &mut Mode::Eval)?.u_hat.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_chroma(rng: &mut Rng, frames: usize) -> Chromagram {
        let energies = (0..12)
            .map(|_| (0..frames).map(|_| rng.next_f64()).collect())
            .collect();
        Chromagram::from_rows(energies, true)
    }

    fn small_cfg() -> EncoderConfig {
        EncoderConfig {
            blocks: 2,
            heads: 2,
            d_model: 16,
            ffn_dim: 32,
            proj_dim: 8,
            dropout: 0.2,
            input_dim: 12,
            positional: true,
        }
    }

    #[test]
    fn output_dims_match_config() {
        let mut rng = Rng::seed_from_u64(1);
        let enc = Encoder::new(EncoderConfig::default(), &mut rng).unwrap();
        let chroma = random_chroma(&mut rng, 16);
        let out = enc.encode(&chroma, &mut Mode::Eval).unwrap();
        assert_eq!(out.h.numel(), 128);
        assert_eq!(out.u.numel(), 256);
        assert_eq!(out.u_hat.numel(), 256);
    }

    #[test]
    fn unit_norm_projection() {
        let mut rng = Rng::seed_from_u64(2);
        let enc = Encoder::new(small_cfg(), &mut rng).unwrap();
        for _ in 0..5 {
            let chroma = random_chroma(&mut rng, 10);
            let u_hat = enc.embedding(&chroma).unwrap();
            let norm: f64 = u_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6, "norm {norm}");
        }
    }

    #[test]
    fn eval_mode_is_deterministic() {
        let mut rng = Rng::seed_from_u64(3);
        let enc = Encoder::new(small_cfg(), &mut rng).unwrap();
        let chroma = random_chroma(&mut rng, 14);
        let a = enc.embedding(&chroma).unwrap();
        let b = enc.embedding(&chroma).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let mut rng = Rng::seed_from_u64(4);
        let enc = Encoder::new(small_cfg(), &mut rng).unwrap();
        let chroma = random_chroma(&mut rng, 9);
        assert_eq!(
            enc.embedding(&chroma).unwrap(),
            enc.embedding(&chroma.clone()).unwrap()
        );
    }

    #[test]
    fn without_positional_encoding_time_permutation_is_invariant() {
        let mut rng = Rng::seed_from_u64(5);
        let mut cfg = small_cfg();
        cfg.positional = false;
        let enc = Encoder::new(cfg, &mut rng).unwrap();
        let chroma = random_chroma(&mut rng, 12);

        let mut perm: Vec<usize> = (0..12).collect();
        rng.shuffle(&mut perm);
        let permuted = Chromagram::from_rows(
            chroma
                .energies
                .iter()
                .map(|row| perm.iter().map(|&t| row[t]).collect())
                .collect(),
            true,
        );

        let a = enc.embedding(&chroma).unwrap();
        let b = enc.embedding(&permuted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn with_positional_encoding_permutation_changes_output() {
        let mut rng = Rng::seed_from_u64(6);
        let enc = Encoder::new(small_cfg(), &mut rng).unwrap();
        let chroma = random_chroma(&mut rng, 12);
        let reversed = Chromagram::from_rows(
            chroma
                .energies
                .iter()
                .map(|row| row.iter().rev().copied().collect())
                .collect(),
            true,
        );
        let a = enc.embedding(&chroma).unwrap();
        let b = enc.embedding(&reversed).unwrap();
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff > 1e-6, "positional encoding should break symmetry");
    }

    #[test]
    fn zero_frames_is_error() {
        let mut rng = Rng::seed_from_u64(7);
        let enc = Encoder::new(small_cfg(), &mut rng).unwrap();
        let chroma = Chromagram::zeros(0);
        assert!(matches!(
            enc.encode(&chroma, &mut Mode::Eval),
            Err(ModelError::EmptyInput)
        ));
    }

    #[test]
    fn bad_head_split_is_error() {
        let mut rng = Rng::seed_from_u64(8);
        let mut cfg = small_cfg();
        cfg.d_model = 15;
        assert!(matches!(
            Encoder::new(cfg, &mut rng),
            Err(ModelError::BadHeads { .. })
        ));
    }
}
