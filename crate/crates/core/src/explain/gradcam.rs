use super::{check_target, EdgeScores, Method, ScoreMeta};
use crate::autodiff::Tape;
use crate::error::Result;
use crate::graph::GraphSample;
use crate::model::{EdgeWeightedBatch, ModelParams};
use crate::tensor::Tensor;

/// Per-node GradCAM weights from the last message-passing layer.
///
/// With activations `X` (`[M x C]`) and the gradient `g` of the target logit
/// with respect to them, `O_i = sum_k g[k][i]` and
/// `alpha_k = relu(sum_i X[k][i] * O_i)`.
pub fn gradcam_node_weights(params: &ModelParams, g: &GraphSample, target: usize) -> Result<Vec<f64>> {
    check_target(params, target)?;
    if g.node_count() == 0 {
        return Ok(Vec::new());
    }
    let tape = Tape::new();
    // trainable binding so the activations are on the gradient path
    let bound = params.bind(&tape, true);
    let out = bound.forward(&EdgeWeightedBatch::single(g), None)?;
    let mut pick = Tensor::zeros(1, params.arch.class_count);
    pick.set(0, target, 1.0);
    let logit = out.logits.mul(tape.constant(pick))?.sum();
    let grads = tape.backward(logit)?;
    let act = out.node_embeddings.to_tensor();
    let grad = grads.wrt_or_zeros(out.node_embeddings);
    let (m, c) = act.dims2();
    let mut o = vec![0.0; c];
    for k in 0..m {
        for (oi, gi) in o.iter_mut().zip(grad.row(k)) {
            *oi += gi;
        }
    }
    Ok((0..m)
        .map(|k| act.row(k).iter().zip(&o).map(|(x, oi)| x * oi).sum::<f64>().max(0.0))
        .collect())
}

/// `beta_lm = (alpha_l + alpha_m) / 2` for every edge.
pub fn node_to_edge_scores(alpha: &[f64], edges: &[(usize, usize)]) -> Vec<f64> {
    edges.iter().map(|&(l, m)| (alpha[l] + alpha[m]) / 2.0).collect()
}

pub fn gradcam_scores(params: &ModelParams, g: &GraphSample, target: usize) -> Result<EdgeScores> {
    let alpha = gradcam_node_weights(params, g, target)?;
    EdgeScores::new(
        node_to_edge_scores(&alpha, g.edges()),
        Method::GradCam,
        ScoreMeta::default(),
    )
}
