//! Differentiable forward pass: embedding, attention, encoder stack, head.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EncoderLayerParams, TransformerConfig, TransformerModel};
use crate::error::{Error, Result};
use crate::tensor::{ComputationRecord, Tensor};

/// Dropout context during training: (rate, rng). Inference passes `None`.
pub(crate) type Dropout<'a> = Option<(f64, &'a mut ChaCha8Rng)>;

/// Token sequence for one sample: row t is feature_t * embedding_t + PE_t.
pub fn embed(rec: &mut ComputationRecord, model: &TransformerModel, features: &[f64]) -> Result<Tensor> {
    let n = model.config.n_features;
    if features.len() != n {
        return Err(Error::Dimension(format!(
            "embed: model expects {n} features, sample has {}",
            features.len()
        )));
    }
    // diag(features) * E scales embedding row t by feature t
    let mut diag = vec![0.0; n * n];
    for (t, &f) in features.iter().enumerate() {
        diag[t * n + t] = f;
    }
    let diag = Tensor::new(vec![n, n], diag)?;
    let scaled = rec.matmul(&diag, &model.embedding)?;
    rec.add(&scaled, &model.pe)
}

/// softmax(Q K^T / sqrt(d_k)) for one head.
pub fn attention_weights(rec: &mut ComputationRecord, q: &Tensor, k: &Tensor) -> Result<Tensor> {
    let (lq, dq) = q.dims();
    let (lk, dk) = k.dims();
    if dq != dk {
        return Err(Error::Dimension(format!(
            "attention_weights: head dims disagree, Q {lq}x{dq} vs K {lk}x{dk}"
        )));
    }
    let kt = rec.transpose(k)?;
    let scores = rec.matmul(q, &kt)?;
    let scaled = rec.scale(&scores, 1.0 / (dq as f64).sqrt())?;
    rec.softmax_rows(&scaled)
}

/// Fused projections, per-head column split, scaled dot-product attention,
/// head concatenation, output projection.
pub fn multi_head_attention(
    rec: &mut ComputationRecord,
    x: &Tensor,
    layer: &EncoderLayerParams,
    cfg: &TransformerConfig,
) -> Result<Tensor> {
    let (_, cols) = x.dims();
    if cols != cfg.d_model {
        return Err(Error::Dimension(format!(
            "multi_head_attention: input has {cols} columns, d_model is {}",
            cfg.d_model
        )));
    }
    let q = rec.matmul(x, &layer.w_q)?;
    let k = rec.matmul(x, &layer.w_k)?;
    let v = rec.matmul(x, &layer.w_v)?;
    let d_k = cfg.d_k();
    let mut heads = Vec::with_capacity(cfg.h);
    for j in 0..cfg.h {
        let q_j = rec.slice_cols(&q, j * d_k, d_k)?;
        let k_j = rec.slice_cols(&k, j * d_k, d_k)?;
        let v_j = rec.slice_cols(&v, j * d_k, d_k)?;
        let weights = attention_weights(rec, &q_j, &k_j)?;
        heads.push(rec.matmul(&weights, &v_j)?);
    }
    let concat = rec.concat_cols(&heads)?;
    rec.matmul(&concat, &layer.w_o)
}

fn feed_forward(rec: &mut ComputationRecord, x: &Tensor, layer: &EncoderLayerParams) -> Result<Tensor> {
    let hidden = rec.matmul(x, &layer.ff_w1)?;
    let hidden = rec.add(&hidden, &layer.ff_b1)?;
    let hidden = rec.relu(&hidden)?;
    let out = rec.matmul(&hidden, &layer.ff_w2)?;
    rec.add(&out, &layer.ff_b2)
}

/// Inverted dropout mask multiply; identity when no context or rate 0.
fn dropout(rec: &mut ComputationRecord, x: &Tensor, ctx: &mut Dropout) -> Result<Tensor> {
    let Some((rate, rng)) = ctx else { return Ok(x.clone()) };
    if *rate == 0.0 {
        return Ok(x.clone());
    }
    let keep = 1.0 - *rate;
    let mask: Vec<f64> = (0..x.numel())
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    let mask = Tensor::new(x.shape(), mask)?;
    rec.mul(x, &mask)
}

pub(crate) fn encoder_forward_impl(
    rec: &mut ComputationRecord,
    seq: &Tensor,
    model: &TransformerModel,
    ctx: &mut Dropout,
) -> Result<Tensor> {
    let mut x = seq.clone();
    for layer in &model.layers {
        let attn = multi_head_attention(rec, &x, layer, &model.config)?;
        let attn = dropout(rec, &attn, ctx)?;
        let sum = rec.add(&x, &attn)?;
        x = rec.layer_norm_rows(&sum, &layer.ln1_gamma, &layer.ln1_beta)?;
        let ff = feed_forward(rec, &x, layer)?;
        let ff = dropout(rec, &ff, ctx)?;
        let sum = rec.add(&x, &ff)?;
        x = rec.layer_norm_rows(&sum, &layer.ln2_gamma, &layer.ln2_beta)?;
    }
    Ok(x)
}

/// Post-norm encoder stack: X <- LN(X + MHA(X)); X <- LN(X + FFN(X)) per
/// layer. Zero layers is the identity.
pub fn encoder_forward(rec: &mut ComputationRecord, seq: &Tensor, model: &TransformerModel) -> Result<Tensor> {
    encoder_forward_impl(rec, seq, model, &mut None)
}

/// Probabilities for a batch as a recorded 1 x B tensor (grad flows to all
/// parameters): embed -> encoder -> mean-pool -> linear -> sigmoid.
pub fn classify_recorded(
    rec: &mut ComputationRecord,
    model: &TransformerModel,
    rows: &[&[f64]],
    mut ctx: Dropout,
) -> Result<Tensor> {
    if rows.is_empty() {
        return Err(Error::Input("classify: empty batch".into()));
    }
    let l = model.config.n_features;
    let pool = Tensor::new(vec![1, l], vec![1.0 / l as f64; l])?;
    let mut probs = Vec::with_capacity(rows.len());
    for row in rows {
        let seq = embed(rec, model, row)?;
        let encoded = encoder_forward_impl(rec, &seq, model, &mut ctx)?;
        let pooled = rec.matmul(&pool, &encoded)?;
        let logit = rec.matmul(&pooled, &model.head_w)?;
        let logit = rec.add(&logit, &model.head_b)?;
        probs.push(rec.sigmoid(&logit)?);
    }
    rec.concat_cols(&probs)
}
