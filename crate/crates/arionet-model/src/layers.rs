//! Shared building blocks: linear layers, multi-head self-attention,
//! post-norm transformer blocks, and sinusoidal positional encodings.

use crate::ModelError;
use arionet_rng::Rng;
use arionet_tensor::{ParamSet, Tensor};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Forward-pass mode. Training applies dropout with seeds drawn from the
/// run's generator; eval is deterministic.
pub enum Mode<'a> {
    Eval,
    Train { dropout: f64, rng: &'a mut Rng },
}

impl Mode<'_> {
    fn apply_dropout(&mut self, x: Tensor) -> Result<Tensor, ModelError> {
        match self {
            Mode::Eval => Ok(x),
            Mode::Train { dropout, rng } => Ok(x.dropout(*dropout, rng.next_u64())?),
        }
    }
}

/// Dense layer y = xW + b with Xavier-uniform init.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Tensor,
    pub b: Tensor,
}

impl Linear {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut Rng,
    ) -> Linear {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w_data = (0..fan_in * fan_out)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        let w = params.insert(format!("{name}.w"), Tensor::param(&[fan_in, fan_out], w_data));
        let b = params.insert(format!("{name}.b"), Tensor::param(&[fan_out], vec![0.0; fan_out]));
        Linear { w, b }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        Ok(x.matmul(&self.w)?.add_row(&self.b)?)
    }
}

/// Scaled dot-product self-attention over `heads` parallel subspaces.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    pub heads: usize,
}

impl MultiHeadAttention {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        d_model: usize,
        heads: usize,
        rng: &mut Rng,
    ) -> MultiHeadAttention {
        MultiHeadAttention {
            wq: Linear::new(params, &format!("{name}.wq"), d_model, d_model, rng),
            wk: Linear::new(params, &format!("{name}.wk"), d_model, d_model, rng),
            wv: Linear::new(params, &format!("{name}.wv"), d_model, d_model, rng),
            wo: Linear::new(params, &format!("{name}.wo"), d_model, d_model, rng),
            heads,
        }
    }

    /// Per-head attention weight matrices (rows sum to 1) and the
    /// projected output. `x` is T x d_model.
    pub fn attention(&self, x: &Tensor) -> Result<(Vec<Tensor>, Tensor), ModelError> {
        let d_model = x.cols();
        let d_head = d_model / self.heads;
        let q = self.wq.forward(x)?;
        let k = self.wk.forward(x)?;
        let v = self.wv.forward(x)?;
        let scale = 1.0 / (d_head as f64).sqrt();

        let mut weights = Vec::with_capacity(self.heads);
        let mut contexts = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let qh = q.slice(1, h * d_head, d_head)?;
            let kh = k.slice(1, h * d_head, d_head)?;
            let vh = v.slice(1, h * d_head, d_head)?;
            let attn = qh.matmul(&kh.transpose()?)?.mul_scalar(scale).softmax();
            contexts.push(attn.matmul(&vh)?);
            weights.push(attn);
        }
        let merged = Tensor::concat(&contexts, 1)?;
        Ok((weights, self.wo.forward(&merged)?))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        Ok(self.attention(x)?.1)
    }
}

/// Post-norm transformer block: attention and feed-forward sublayers,
/// each followed by a residual add and layer norm. Dropout sits on the
/// attention output and the feed-forward output.
#[derive(Debug, Clone)]
pub struct TransformerBlock {
    pub attn: MultiHeadAttention,
    pub ff1: Linear,
    pub ff2: Linear,
}

impl TransformerBlock {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        d_model: usize,
        heads: usize,
        ffn_dim: usize,
        rng: &mut Rng,
    ) -> TransformerBlock {
        TransformerBlock {
            attn: MultiHeadAttention::new(params, &format!("{name}.attn"), d_model, heads, rng),
            ff1: Linear::new(params, &format!("{name}.ff1"), d_model, ffn_dim, rng),
            ff2: Linear::new(params, &format!("{name}.ff2"), ffn_dim, d_model, rng),
        }
    }

    pub fn forward(&self, x: &Tensor, mode: &mut Mode) -> Result<Tensor, ModelError> {
        let a = self.attn.forward(x)?;
        let a = mode.apply_dropout(a)?;
        let x = x.add(&a)?.layer_norm(LAYER_NORM_EPS);

        let f = self.ff2.forward(&self.ff1.forward(&x)?.relu())?;
        let f = mode.apply_dropout(f)?;
        Ok(x.add(&f)?.layer_norm(LAYER_NORM_EPS))
    }
}

/// Sinusoidal positional encoding: PE(t, 2i) = sin(t / 10000^(2i/d)),
/// PE(t, 2i+1) = cos of the same angle. Returned as a T x d constant.
pub fn positional_encoding(t_len: usize, d_model: usize) -> Tensor {
    let mut data = vec![0.0; t_len * d_model];
    for t in 0..t_len {
        for i in 0..d_model.div_ceil(2) {
            let angle = t as f64 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            data[t * d_model + 2 * i] = angle.sin();
            if 2 * i + 1 < d_model {
                data[t * d_model + 2 * i + 1] = angle.cos();
            }
        }
    }
    Tensor::constant(&[t_len, d_model], data)
}
