//! Define-by-run operation record and the reverse pass.
//!
//! Each primitive appends one step holding its input handles, its output,
//! and the context its backward rule needs. Steps are appended in execution
//! order, so inputs of a step always precede it — the reverse walk visits
//! every step exactly once.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{finite_checks_enabled, Tensor};
use crate::error::{Error, Result};

/// Lower clamp applied by [`ComputationRecord::log`] so GAN losses stay
/// finite when the discriminator saturates.
pub const LOG_CLAMP_EPS: f64 = 1e-7;

const LAYER_NORM_EPS: f64 = 1e-5;

static NEXT_RECORD_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Mean,
    Sum,
}

enum Rule {
    MatMul,
    Elementwise { op: ElementwiseOp, broadcast_rhs: bool },
    Activation { kind: Activation },
    SoftmaxRows,
    Reduce { kind: Reduction, count: usize },
    ConcatCols { widths: Vec<usize> },
    SliceCols { cols_in: usize, start: usize, width: usize },
    Transpose,
    Scale { factor: f64 },
    Log { clamped: Vec<f64> },
    LayerNormRows { normalized: Vec<f64>, inv_std: Vec<f64> },
}

struct Step {
    inputs: Vec<Tensor>,
    output: Tensor,
    rule: Rule,
}

/// Ordered list of executed primitives; rebuilt every training step.
pub struct ComputationRecord {
    id: u64,
    steps: Vec<Step>,
}

impl Default for ComputationRecord {
    fn default() -> Self {
        Self::new()
    }
}

impl ComputationRecord {
    pub fn new() -> Self {
        ComputationRecord {
            id: NEXT_RECORD_ID.fetch_add(1, Ordering::Relaxed),
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn push(&mut self, inputs: Vec<Tensor>, shape: Vec<usize>, data: Vec<f64>, rule: Rule) -> Result<Tensor> {
        if finite_checks_enabled() {
            if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
                return Err(Error::NumericDomain(format!(
                    "primitive produced non-finite value {bad}"
                )));
            }
        }
        let numel: usize = shape.iter().product();
        debug_assert_eq!(numel, data.len());
        let output = Tensor::new(shape, data)?;
        output.inner_mut().node = Some((self.id, self.steps.len()));
        self.steps.push(Step {
            inputs,
            output: output.clone(),
            rule,
        });
        Ok(output)
    }

    /// Matrix product a[m x k] * b[k x n].
    pub fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let (m, ka) = a.dims();
        let (kb, n) = b.dims();
        if a.rank() != 2 || b.rank() != 2 {
            return Err(Error::Dimension(format!(
                "matmul requires rank-2 operands, got shapes {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        if ka != kb {
            return Err(Error::Dimension(format!(
                "matmul: inner dimensions disagree, lhs {m}x{ka} vs rhs {kb}x{n}"
            )));
        }
        let av = a.inner();
        let bv = b.inner();
        let data = mat_mul(&av.data, &bv.data, m, ka, n);
        drop(av);
        drop(bv);
        self.push(vec![a.clone(), b.clone()], vec![m, n], data, Rule::MatMul)
    }

    /// Elementwise add/sub/mul; `b` may be a row vector broadcast over the
    /// rows of `a`.
    pub fn elementwise(&mut self, op: ElementwiseOp, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let (ar, ac) = a.dims();
        let (br, bc) = b.dims();
        let broadcast = !(ar == br && ac == bc) ;
        if broadcast && !(br == 1 && bc == ac) {
            return Err(Error::Dimension(format!(
                "elementwise {op:?}: incompatible shapes {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let av = a.inner();
        let bv = b.inner();
        let mut data = Vec::with_capacity(av.data.len());
        for i in 0..ar {
            for j in 0..ac {
                let x = av.data[i * ac + j];
                let y = if broadcast { bv.data[j] } else { bv.data[i * ac + j] };
                data.push(match op {
                    ElementwiseOp::Add => x + y,
                    ElementwiseOp::Sub => x - y,
                    ElementwiseOp::Mul => x * y,
                });
            }
        }
        let shape = av.shape.clone();
        drop(av);
        drop(bv);
        self.push(
            vec![a.clone(), b.clone()],
            shape,
            data,
            Rule::Elementwise { op, broadcast_rhs: broadcast },
        )
    }

    pub fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.elementwise(ElementwiseOp::Add, a, b)
    }

    pub fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.elementwise(ElementwiseOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.elementwise(ElementwiseOp::Mul, a, b)
    }

    pub fn activation(&mut self, kind: Activation, x: &Tensor) -> Result<Tensor> {
        let xv = x.inner();
        let data: Vec<f64> = xv
            .data
            .iter()
            .map(|&v| match kind {
                Activation::Sigmoid => sigmoid(v),
                Activation::Tanh => v.tanh(),
                Activation::Relu => v.max(0.0),
            })
            .collect();
        let shape = xv.shape.clone();
        drop(xv);
        self.push(vec![x.clone()], shape, data, Rule::Activation { kind })
    }

    pub fn sigmoid(&mut self, x: &Tensor) -> Result<Tensor> {
        self.activation(Activation::Sigmoid, x)
    }

    pub fn tanh(&mut self, x: &Tensor) -> Result<Tensor> {
        self.activation(Activation::Tanh, x)
    }

    pub fn relu(&mut self, x: &Tensor) -> Result<Tensor> {
        self.activation(Activation::Relu, x)
    }

    /// Row-wise softmax with per-row max subtraction.
    pub fn softmax_rows(&mut self, x: &Tensor) -> Result<Tensor> {
        let (rows, cols) = x.dims();
        let xv = x.inner();
        let mut data = vec![0.0; rows * cols];
        for i in 0..rows {
            let row = &xv.data[i * cols..(i + 1) * cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..cols {
                let e = (row[j] - max).exp();
                data[i * cols + j] = e;
                sum += e;
            }
            for j in 0..cols {
                data[i * cols + j] /= sum;
            }
        }
        let shape = xv.shape.clone();
        drop(xv);
        self.push(vec![x.clone()], shape, data, Rule::SoftmaxRows)
    }

    /// Full reduction to a scalar tensor of shape [1].
    pub fn reduce(&mut self, kind: Reduction, x: &Tensor) -> Result<Tensor> {
        let n = x.numel();
        if n == 0 {
            return Err(Error::Precondition("reduce on empty tensor".into()));
        }
        let xv = x.inner();
        let sum: f64 = xv.data.iter().sum();
        drop(xv);
        let value = match kind {
            Reduction::Sum => sum,
            Reduction::Mean => sum / n as f64,
        };
        self.push(
            vec![x.clone()],
            vec![1],
            vec![value],
            Rule::Reduce { kind, count: n },
        )
    }

    pub fn mean(&mut self, x: &Tensor) -> Result<Tensor> {
        self.reduce(Reduction::Mean, x)
    }

    pub fn sum(&mut self, x: &Tensor) -> Result<Tensor> {
        self.reduce(Reduction::Sum, x)
    }

    /// Column-wise concatenation of tensors sharing a row count.
    pub fn concat_cols(&mut self, parts: &[Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::Precondition("concat_cols of zero parts".into()));
        }
        let (rows, _) = parts[0].dims();
        let mut widths = Vec::with_capacity(parts.len());
        let mut total = 0usize;
        for (i, p) in parts.iter().enumerate() {
            let (r, c) = p.dims();
            if r != rows {
                return Err(Error::Dimension(format!(
                    "concat_cols: part 0 has {rows} rows, part {i} has {r}"
                )));
            }
            widths.push(c);
            total += c;
        }
        let mut data = vec![0.0; rows * total];
        let mut offset = 0usize;
        for (p, &w) in parts.iter().zip(&widths) {
            let pv = p.inner();
            for i in 0..rows {
                data[i * total + offset..i * total + offset + w]
                    .copy_from_slice(&pv.data[i * w..(i + 1) * w]);
            }
            offset += w;
        }
        self.push(
            parts.to_vec(),
            vec![rows, total],
            data,
            Rule::ConcatCols { widths },
        )
    }

    /// Columns [start, start+width) of a rank-2 tensor.
    pub fn slice_cols(&mut self, x: &Tensor, start: usize, width: usize) -> Result<Tensor> {
        let (rows, cols) = x.dims();
        if start + width > cols || width == 0 {
            return Err(Error::Index(format!(
                "slice_cols: window [{start}, {}) out of range for {cols} columns",
                start + width
            )));
        }
        let xv = x.inner();
        let mut data = Vec::with_capacity(rows * width);
        for i in 0..rows {
            data.extend_from_slice(&xv.data[i * cols + start..i * cols + start + width]);
        }
        drop(xv);
        self.push(
            vec![x.clone()],
            vec![rows, width],
            data,
            Rule::SliceCols { cols_in: cols, start, width },
        )
    }

    pub fn transpose(&mut self, x: &Tensor) -> Result<Tensor> {
        if x.rank() != 2 {
            return Err(Error::Dimension(format!(
                "transpose requires rank 2, got shape {:?}",
                x.shape()
            )));
        }
        let (rows, cols) = x.dims();
        let xv = x.inner();
        let mut data = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                data[j * rows + i] = xv.data[i * cols + j];
            }
        }
        drop(xv);
        self.push(vec![x.clone()], vec![cols, rows], data, Rule::Transpose)
    }

    /// Multiplication by a compile-time-known constant.
    pub fn scale(&mut self, x: &Tensor, factor: f64) -> Result<Tensor> {
        if !factor.is_finite() {
            return Err(Error::NumericDomain(format!("scale by non-finite {factor}")));
        }
        let xv = x.inner();
        let data: Vec<f64> = xv.data.iter().map(|v| v * factor).collect();
        let shape = xv.shape.clone();
        drop(xv);
        self.push(vec![x.clone()], shape, data, Rule::Scale { factor })
    }

    /// Natural log of max(x, 1e-7); the clamp keeps adversarial losses
    /// finite when a sigmoid output rounds to 0.
    pub fn log(&mut self, x: &Tensor) -> Result<Tensor> {
        self.log_impl(x, true)
    }

    /// Natural log without the clamp; non-positive input is an error.
    pub fn log_unclamped(&mut self, x: &Tensor) -> Result<Tensor> {
        self.log_impl(x, false)
    }

    fn log_impl(&mut self, x: &Tensor, clamp: bool) -> Result<Tensor> {
        let xv = x.inner();
        let mut clamped = Vec::with_capacity(xv.data.len());
        for &v in &xv.data {
            if clamp {
                clamped.push(v.max(LOG_CLAMP_EPS));
            } else {
                if v <= 0.0 {
                    return Err(Error::NumericDomain(format!(
                        "log of non-positive value {v} with clamping disabled"
                    )));
                }
                clamped.push(v);
            }
        }
        let data: Vec<f64> = clamped.iter().map(|v| v.ln()).collect();
        let shape = xv.shape.clone();
        drop(xv);
        self.push(vec![x.clone()], shape, data, Rule::Log { clamped })
    }

    /// Per-row normalization to mean 0 / variance 1, then `gamma`/`beta`
    /// scale and shift (both row vectors of the column count).
    pub fn layer_norm_rows(&mut self, x: &Tensor, gamma: &Tensor, beta: &Tensor) -> Result<Tensor> {
        let (rows, cols) = x.dims();
        let (gr, gc) = gamma.dims();
        let (br, bc) = beta.dims();
        if gr != 1 || gc != cols || br != 1 || bc != cols {
            return Err(Error::Dimension(format!(
                "layer_norm_rows: x has {cols} columns, gamma {:?}, beta {:?}",
                gamma.shape(),
                beta.shape()
            )));
        }
        let xv = x.inner();
        let gv = gamma.inner();
        let bv = beta.inner();
        let mut normalized = vec![0.0; rows * cols];
        let mut inv_std = vec![0.0; rows];
        let mut data = vec![0.0; rows * cols];
        for i in 0..rows {
            let row = &xv.data[i * cols..(i + 1) * cols];
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std[i] = is;
            for j in 0..cols {
                let nh = (row[j] - mean) * is;
                normalized[i * cols + j] = nh;
                data[i * cols + j] = gv.data[j] * nh + bv.data[j];
            }
        }
        let shape = xv.shape.clone();
        drop(xv);
        drop(gv);
        drop(bv);
        self.push(
            vec![x.clone(), gamma.clone(), beta.clone()],
            shape,
            data,
            Rule::LayerNormRows { normalized, inv_std },
        )
    }

    /// Reverse pass from a scalar loss produced through this record.
    /// Contributions accumulate into the `grad` of every `requires_grad`
    /// leaf; intermediate flow is transient per call.
    pub fn backward(&self, loss: &Tensor) -> Result<()> {
        if loss.numel() != 1 {
            return Err(Error::Precondition(format!(
                "backward requires a scalar loss, got shape {:?}",
                loss.shape()
            )));
        }
        let seed_index = match loss.inner().node {
            Some((rec, idx)) if rec == self.id => idx,
            _ => {
                return Err(Error::Precondition(
                    "backward: loss was not produced through this record".into(),
                ))
            }
        };
        let mut flow: Vec<Option<Vec<f64>>> = vec![None; self.steps.len()];
        flow[seed_index] = Some(vec![1.0]);

        for idx in (0..=seed_index).rev() {
            let Some(grad_out) = flow[idx].take() else { continue };
            let step = &self.steps[idx];
            let contributions = backward_step(step, &grad_out);
            for (input, contribution) in step.inputs.iter().zip(contributions) {
                let Some(c) = contribution else { continue };
                let node = input.inner().node;
                match node {
                    Some((rec, i)) if rec == self.id => {
                        match &mut flow[i] {
                            Some(buf) => {
                                for (b, v) in buf.iter_mut().zip(&c) {
                                    *b += v;
                                }
                            }
                            slot => *slot = Some(c),
                        }
                    }
                    _ => {
                        if input.requires_grad() {
                            input.add_to_grad(&c);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Whether a gradient for each input is needed at all: leaves without
/// requires_grad and outside this record receive `None`.
fn backward_step(step: &Step, grad_out: &[f64]) -> Vec<Option<Vec<f64>>> {
    let inputs = &step.inputs;
    let needs: Vec<bool> = inputs
        .iter()
        .map(|t| t.requires_grad() || t.inner().node.is_some())
        .collect();

    match &step.rule {
        Rule::MatMul => {
            let (m, k) = inputs[0].dims();
            let (_, n) = inputs[1].dims();
            let da = needs[0].then(|| {
                let b = inputs[1].inner();
                // dA = dC * B^T
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for p in 0..k {
                        let mut s = 0.0;
                        for j in 0..n {
                            s += grad_out[i * n + j] * b.data[p * n + j];
                        }
                        da[i * k + p] = s;
                    }
                }
                da
            });
            let db = needs[1].then(|| {
                let a = inputs[0].inner();
                // dB = A^T * dC
                let mut db = vec![0.0; k * n];
                for p in 0..k {
                    for j in 0..n {
                        let mut s = 0.0;
                        for i in 0..m {
                            s += a.data[i * k + p] * grad_out[i * n + j];
                        }
                        db[p * n + j] = s;
                    }
                }
                db
            });
            vec![da, db]
        }
        Rule::Elementwise { op, broadcast_rhs } => {
            let (rows, cols) = inputs[0].dims();
            let da = needs[0].then(|| match op {
                ElementwiseOp::Add | ElementwiseOp::Sub => grad_out.to_vec(),
                ElementwiseOp::Mul => {
                    let b = inputs[1].inner();
                    (0..rows * cols)
                        .map(|i| {
                            let bval = if *broadcast_rhs { b.data[i % cols] } else { b.data[i] };
                            grad_out[i] * bval
                        })
                        .collect()
                }
            });
            let db = needs[1].then(|| {
                let sign = if *op == ElementwiseOp::Sub { -1.0 } else { 1.0 };
                if *broadcast_rhs {
                    // column-sum of the upstream gradient
                    let mut db = vec![0.0; cols];
                    let a = inputs[0].inner();
                    for i in 0..rows {
                        for j in 0..cols {
                            let g = grad_out[i * cols + j];
                            db[j] += match op {
                                ElementwiseOp::Mul => g * a.data[i * cols + j],
                                _ => sign * g,
                            };
                        }
                    }
                    db
                } else {
                    match op {
                        ElementwiseOp::Add => grad_out.to_vec(),
                        ElementwiseOp::Sub => grad_out.iter().map(|g| -g).collect(),
                        ElementwiseOp::Mul => {
                            let a = inputs[0].inner();
                            grad_out.iter().zip(&a.data).map(|(g, x)| g * x).collect()
                        }
                    }
                }
            });
            vec![da, db]
        }
        Rule::Activation { kind } => {
            let dx = needs[0].then(|| {
                let y = step.output.inner();
                match kind {
                    Activation::Sigmoid => grad_out
                        .iter()
                        .zip(&y.data)
                        .map(|(g, s)| g * s * (1.0 - s))
                        .collect(),
                    Activation::Tanh => grad_out
                        .iter()
                        .zip(&y.data)
                        .map(|(g, t)| g * (1.0 - t * t))
                        .collect(),
                    Activation::Relu => {
                        let x = inputs[0].inner();
                        grad_out
                            .iter()
                            .zip(&x.data)
                            .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                            .collect()
                    }
                }
            });
            vec![dx]
        }
        Rule::SoftmaxRows => {
            let dx = needs[0].then(|| {
                let (rows, cols) = step.output.dims();
                let y = step.output.inner();
                let mut dx = vec![0.0; rows * cols];
                for i in 0..rows {
                    let dot: f64 = (0..cols)
                        .map(|j| grad_out[i * cols + j] * y.data[i * cols + j])
                        .sum();
                    for j in 0..cols {
                        let yv = y.data[i * cols + j];
                        dx[i * cols + j] = yv * (grad_out[i * cols + j] - dot);
                    }
                }
                dx
            });
            vec![dx]
        }
        Rule::Reduce { kind, count } => {
            let dx = needs[0].then(|| {
                let g = grad_out[0];
                let per = match kind {
                    Reduction::Sum => g,
                    Reduction::Mean => g / *count as f64,
                };
                vec![per; *count]
            });
            vec![dx]
        }
        Rule::ConcatCols { widths } => {
            let (rows, total) = step.output.dims();
            let mut offset = 0usize;
            let mut out = Vec::with_capacity(inputs.len());
            for (part_idx, &w) in widths.iter().enumerate() {
                let slice = needs[part_idx].then(|| {
                    let mut d = Vec::with_capacity(rows * w);
                    for i in 0..rows {
                        d.extend_from_slice(&grad_out[i * total + offset..i * total + offset + w]);
                    }
                    d
                });
                out.push(slice);
                offset += w;
            }
            out
        }
        Rule::SliceCols { cols_in, start, width } => {
            let dx = needs[0].then(|| {
                let (rows, _) = step.output.dims();
                let mut dx = vec![0.0; rows * cols_in];
                for i in 0..rows {
                    for j in 0..*width {
                        dx[i * cols_in + start + j] = grad_out[i * width + j];
                    }
                }
                dx
            });
            vec![dx]
        }
        Rule::Transpose => {
            let dx = needs[0].then(|| {
                let (rows, cols) = inputs[0].dims();
                let mut dx = vec![0.0; rows * cols];
                for i in 0..rows {
                    for j in 0..cols {
                        dx[i * cols + j] = grad_out[j * rows + i];
                    }
                }
                dx
            });
            vec![dx]
        }
        Rule::Scale { factor } => {
            let dx = needs[0].then(|| grad_out.iter().map(|g| g * factor).collect());
            vec![dx]
        }
        Rule::Log { clamped } => {
            let dx = needs[0].then(|| {
                grad_out
                    .iter()
                    .zip(clamped)
                    .map(|(g, c)| g / c)
                    .collect()
            });
            vec![dx]
        }
        Rule::LayerNormRows { normalized, inv_std } => {
            let (rows, cols) = inputs[0].dims();
            let gamma = inputs[1].inner();
            let dx = needs[0].then(|| {
                let mut dx = vec![0.0; rows * cols];
                for i in 0..rows {
                    let mut sum_g = 0.0;
                    let mut sum_gx = 0.0;
                    for j in 0..cols {
                        let g = grad_out[i * cols + j] * gamma.data[j];
                        sum_g += g;
                        sum_gx += g * normalized[i * cols + j];
                    }
                    let mg = sum_g / cols as f64;
                    let mgx = sum_gx / cols as f64;
                    for j in 0..cols {
                        let g = grad_out[i * cols + j] * gamma.data[j];
                        dx[i * cols + j] =
                            inv_std[i] * (g - mg - normalized[i * cols + j] * mgx);
                    }
                }
                dx
            });
            let dgamma = needs[1].then(|| {
                let mut dg = vec![0.0; cols];
                for i in 0..rows {
                    for j in 0..cols {
                        dg[j] += grad_out[i * cols + j] * normalized[i * cols + j];
                    }
                }
                dg
            });
            let dbeta = needs[2].then(|| {
                let mut db = vec![0.0; cols];
                for i in 0..rows {
                    for j in 0..cols {
                        db[j] += grad_out[i * cols + j];
                    }
                }
                db
            });
            vec![dx, dgamma, dbeta]
        }
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn mat_mul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            for j in 0..n {
                c[i * n + j] += av * b[p * n + j];
            }
        }
    }
    c
}
