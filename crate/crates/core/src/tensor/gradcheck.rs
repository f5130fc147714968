//! Finite-difference gradient checking.
//!
//! The oracle re-evaluates a forward closure under central perturbation of
//! each parameter slot; it never touches the reverse pass it is checking.
//! Also provides a seeded random-graph plan so composed-graph checks can be
//! replayed exactly for both the analytic and numerical sides.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ComputationRecord, Tensor};
use crate::error::Result;
use crate::rng::rng_from_seed;

pub const FD_STEP: f64 = 1e-6;

/// Central finite-difference gradient of `forward` w.r.t. every slot of
/// `param`. `forward` must rebuild its computation from scratch each call.
pub fn finite_diff_grad(param: &Tensor, step: f64, mut forward: impl FnMut() -> f64) -> Vec<f64> {
    let n = param.numel();
    let mut grad = Vec::with_capacity(n);
    for slot in 0..n {
        let original = param.inner().data[slot];
        param.inner_mut().data[slot] = original + step;
        let plus = forward();
        param.inner_mut().data[slot] = original - step;
        let minus = forward();
        param.inner_mut().data[slot] = original;
        grad.push((plus - minus) / (2.0 * step));
    }
    grad
}

/// max(abs_tol, rel_tol * max(|a|, |b|)) comparison of analytic vs
/// finite-difference gradients; reports the offending slot on failure.
pub fn gradients_match(
    analytic: &[f64],
    numeric: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> std::result::Result<(), String> {
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let tol = abs_tol.max(rel_tol * a.abs().max(n.abs()));
        if (a - n).abs() > tol {
            return Err(format!(
                "slot {i}: analytic {a} vs finite-difference {n} (tolerance {tol})"
            ));
        }
    }
    Ok(())
}

/// One node of a replayable random graph. Indices refer to earlier nodes.
#[derive(Debug, Clone)]
pub enum PlanNode {
    /// A trainable leaf with the given shape and initial values.
    Leaf { rows: usize, cols: usize, values: Vec<f64> },
    MatMul(usize, usize),
    Add(usize, usize),
    Mul(usize, usize),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    SoftmaxRows(usize),
    LogOfSigmoid(usize),
    Scale(usize, f64),
    Transpose(usize),
    Mean(usize),
}

/// Builds a random plan of `depth` ops over small tensors. The final node
/// is always a full mean, so the loss is scalar. Replaying the plan gives
/// identical structure; leaf values live in the plan itself.
pub fn random_plan(seed: u64, depth: usize) -> Vec<PlanNode> {
    let mut rng = rng_from_seed(seed);
    let mut nodes: Vec<PlanNode> = Vec::new();
    let mut shapes: Vec<(usize, usize)> = Vec::new();

    fn leaf(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> PlanNode {
        // magnitudes kept away from 0 so relu kinks and finite differences
        // never collide
        let values = (0..rows * cols)
            .map(|_| {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * rng.random_range(0.2..1.4)
            })
            .collect();
        PlanNode::Leaf { rows, cols, values }
    }

    let push = |node: PlanNode, shape: (usize, usize), nodes: &mut Vec<PlanNode>, shapes: &mut Vec<(usize, usize)>| {
        nodes.push(node);
        shapes.push(shape);
        shapes.len() - 1
    };

    for _ in 0..2 {
        let shape = (rng.random_range(1..=3usize), rng.random_range(1..=3usize));
        push(leaf(&mut rng, shape.0, shape.1), shape, &mut nodes, &mut shapes);
    }

    for _ in 0..depth {
        let a = rng.random_range(0..nodes.len());
        let (ar, ac) = shapes[a];
        match rng.random_range(0..10u32) {
            0 => {
                let n = rng.random_range(1..=3usize);
                let b = push(leaf(&mut rng, ac, n), (ac, n), &mut nodes, &mut shapes);
                push(PlanNode::MatMul(a, b), (ar, n), &mut nodes, &mut shapes);
            }
            1 => {
                let b = push(leaf(&mut rng, ar, ac), (ar, ac), &mut nodes, &mut shapes);
                push(PlanNode::Add(a, b), (ar, ac), &mut nodes, &mut shapes);
            }
            2 => {
                let b = push(leaf(&mut rng, ar, ac), (ar, ac), &mut nodes, &mut shapes);
                push(PlanNode::Mul(a, b), (ar, ac), &mut nodes, &mut shapes);
            }
            3 => {
                // row-vector broadcast add
                let b = push(leaf(&mut rng, 1, ac), (1, ac), &mut nodes, &mut shapes);
                push(PlanNode::Add(a, b), (ar, ac), &mut nodes, &mut shapes);
            }
            4 => {
                push(PlanNode::Sigmoid(a), (ar, ac), &mut nodes, &mut shapes);
            }
            5 => {
                push(PlanNode::Tanh(a), (ar, ac), &mut nodes, &mut shapes);
            }
            6 => {
                push(PlanNode::Relu(a), (ar, ac), &mut nodes, &mut shapes);
            }
            7 => {
                push(PlanNode::SoftmaxRows(a), (ar, ac), &mut nodes, &mut shapes);
            }
            8 => {
                push(PlanNode::LogOfSigmoid(a), (ar, ac), &mut nodes, &mut shapes);
            }
            _ => {
                let factor = rng.random_range(0.5..2.0);
                push(PlanNode::Scale(a, factor), (ar, ac), &mut nodes, &mut shapes);
            }
        }
    }
    let last = nodes.len() - 1;
    nodes.push(PlanNode::Mean(last));
    nodes
}

/// Executes a plan; `leaves` must hold one tensor per `PlanNode::Leaf`, in
/// plan order. Returns the record and the scalar loss.
pub fn run_plan(plan: &[PlanNode], leaves: &[Tensor]) -> Result<(ComputationRecord, Tensor)> {
    let mut rec = ComputationRecord::new();
    let mut outputs: Vec<Tensor> = Vec::with_capacity(plan.len());
    let mut next_leaf = 0usize;
    for node in plan {
        let out = match node {
            PlanNode::Leaf { .. } => {
                next_leaf += 1;
                leaves[next_leaf - 1].clone()
            }
            PlanNode::MatMul(a, b) => rec.matmul(&outputs[*a], &outputs[*b])?,
            PlanNode::Add(a, b) => rec.add(&outputs[*a], &outputs[*b])?,
            PlanNode::Mul(a, b) => rec.mul(&outputs[*a], &outputs[*b])?,
            PlanNode::Sigmoid(a) => rec.sigmoid(&outputs[*a])?,
            PlanNode::Tanh(a) => rec.tanh(&outputs[*a])?,
            PlanNode::Relu(a) => rec.relu(&outputs[*a])?,
            PlanNode::SoftmaxRows(a) => rec.softmax_rows(&outputs[*a])?,
            PlanNode::LogOfSigmoid(a) => {
                let s = rec.sigmoid(&outputs[*a])?;
                rec.log(&s)?
            }
            PlanNode::Scale(a, f) => rec.scale(&outputs[*a], *f)?,
            PlanNode::Transpose(a) => rec.transpose(&outputs[*a])?,
            PlanNode::Mean(a) => rec.mean(&outputs[*a])?,
        };
        outputs.push(out);
    }
    let loss = outputs.last().expect("plan ends with the final mean").clone();
    Ok((rec, loss))
}

/// Materializes the plan's leaves as trainable tensors.
pub fn plan_leaves(plan: &[PlanNode]) -> Vec<Tensor> {
    plan.iter()
        .filter_map(|node| match node {
            PlanNode::Leaf { rows, cols, values } => {
                Some(Tensor::param(vec![*rows, *cols], values.clone()).expect("finite leaves"))
            }
            _ => None,
        })
        .collect()
}

/// Checks one random composed graph end to end: analytic gradients of
/// every leaf against central finite differences.
pub fn check_random_graph(
    seed: u64,
    depth: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> std::result::Result<(), String> {
    let plan = random_plan(seed, depth);
    let leaves = plan_leaves(&plan);

    let (rec, loss) = run_plan(&plan, &leaves).map_err(|e| e.to_string())?;
    rec.backward(&loss).map_err(|e| e.to_string())?;

    for (li, leaf) in leaves.iter().enumerate() {
        let analytic = leaf.grad().unwrap_or_else(|| vec![0.0; leaf.numel()]);
        let numeric = finite_diff_grad(leaf, FD_STEP, || {
            let (_, loss) = run_plan(&plan, &leaves).expect("plan replays");
            loss.item()
        });
        gradients_match(&analytic, &numeric, rel_tol, abs_tol)
            .map_err(|e| format!("graph seed {seed}, leaf {li}: {e}"))?;
    }
    Ok(())
}
