use serde::{Deserialize, Serialize};

use super::{check_target, EdgeScores, Method, ScoreMeta};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::model::{EdgeWeightedBatch, ModelParams};
use crate::optim::Adam;
use crate::tensor::Tensor;

const LOG_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnnExplainerConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight of the mean mask value.
    pub size_coef: f64,
    /// Weight of the mean element-wise binary entropy of the mask.
    pub entropy_coef: f64,
}

impl Default for GnnExplainerConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.01,
            size_coef: 0.005,
            entropy_coef: 1.0,
        }
    }
}

/// Scores plus the objective before every update and after the last one.
#[derive(Debug, Clone)]
pub struct GnnExplainerRun {
    pub scores: EdgeScores,
    pub objective_trace: Vec<f64>,
}

/// `size * mean(w) + entropy * mean(H_b(w))`.
pub(crate) fn mask_regularizer<'t>(w: Var<'t>, size: f64, entropy: f64) -> Result<Var<'t>> {
    let q = w.affine(-1.0, 1.0);
    let ent = w
        .mul(w.affine(1.0, LOG_EPS).ln())?
        .add(q.mul(q.affine(1.0, LOG_EPS).ln())?)?
        .mean()
        .affine(-entropy, 0.0);
    w.mean().affine(size, 0.0).add(ent)
}

fn objective(
    params: &ModelParams,
    batch: &EdgeWeightedBatch,
    mask: &Tensor,
    target: usize,
    cfg: &GnnExplainerConfig,
) -> Result<(f64, Tensor)> {
    let tape = Tape::new();
    let bound = params.bind(&tape, false);
    let m = tape.param(mask.clone());
    let w = m.sigmoid();
    let ce = bound.forward(batch, Some(w))?.logits.cross_entropy(&[target])?;
    let loss = ce.add(mask_regularizer(w, cfg.size_coef, cfg.entropy_coef)?)?;
    let value = loss.item();
    if !value.is_finite() {
        return Err(Error::Optimization(format!("GNNExplainer objective became {value}")));
    }
    let grad = tape.backward(loss)?.wrt_or_zeros(m);
    Ok((value, grad))
}

/// Learns a soft edge mask `sigmoid(m)` that preserves the model's prediction
/// of `target` while staying small and near-binary. Returns the mask of the
/// best objective seen.
pub fn gnnexplainer_trace(
    params: &ModelParams,
    g: &GraphSample,
    target: usize,
    cfg: &GnnExplainerConfig,
) -> Result<GnnExplainerRun> {
    check_target(params, target)?;
    let e = g.edge_count();
    let batch = EdgeWeightedBatch::single(g);
    let mut mask = vec![Tensor::zeros(e, 1)];
    let mut adam = Adam::new(cfg.learning_rate, &mask);
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut best: Option<(f64, Tensor)> = None;
    for step in 0..=cfg.epochs {
        let (value, grad) = objective(params, &batch, &mask[0], target, cfg)?;
        trace.push(value);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, mask[0].clone()));
        }
        if step < cfg.epochs {
            adam.step(&mut mask, &[grad])?;
        }
    }
    let (best_value, best_mask) = best.expect("at least one evaluation");
    let scores = best_mask.map(crate::autodiff::sigmoid).into_data();
    Ok(GnnExplainerRun {
        scores: EdgeScores::new(
            scores,
            Method::GnnExplainer,
            ScoreMeta {
                iterations: cfg.epochs,
                final_loss: Some(best_value),
                seed: None,
            },
        )?,
        objective_trace: trace,
    })
}

pub fn gnnexplainer_scores(
    params: &ModelParams,
    g: &GraphSample,
    target: usize,
    cfg: &GnnExplainerConfig,
) -> Result<EdgeScores> {
    Ok(gnnexplainer_trace(params, g, target, cfg)?.scores)
}
