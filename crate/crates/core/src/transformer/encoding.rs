//! Sinusoidal positional encoding.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// PE(pos, 2i) = sin(pos / base^(2i/d_model)),
/// PE(pos, 2i+1) = cos(pos / base^(2i/d_model)), with i = floor(dim/2).
pub fn positional_encoding(pos: usize, dim: usize, d_model: usize, base: f64) -> Result<f64> {
    if dim >= d_model {
        return Err(Error::Index(format!(
            "positional_encoding: dim {dim} out of range for d_model {d_model}"
        )));
    }
    let i = (dim / 2) as f64;
    let angle = pos as f64 / base.powf(2.0 * i / d_model as f64);
    Ok(if dim % 2 == 0 { angle.sin() } else { angle.cos() })
}

/// Positions x dimensions table of encoding values.
pub fn pe_table(n_positions: usize, d_model: usize, base: f64) -> Result<Tensor> {
    let mut data = Vec::with_capacity(n_positions * d_model);
    for pos in 0..n_positions {
        for dim in 0..d_model {
            data.push(positional_encoding(pos, dim, d_model, base)?);
        }
    }
    Tensor::new(vec![n_positions, d_model], data)
}
