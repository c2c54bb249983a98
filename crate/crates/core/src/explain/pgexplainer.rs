use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gnnexplainer::mask_regularizer;
use super::{EdgeScores, Method, ScoreMeta};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::model::{node_embeddings, EdgeWeightedBatch, ModelParams};
use crate::optim::Adam;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgExplainerConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    pub batch_size: usize,
    /// Concrete temperature at the first and last epoch (geometric schedule).
    pub temperature: (f64, f64),
    /// Relaxed samples per graph per epoch.
    pub samples: usize,
    pub size_coef: f64,
    pub entropy_coef: f64,
    pub seed: u64,
}

impl Default for PgExplainerConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.003,
            hidden_dim: 64,
            batch_size: 32,
            temperature: (5.0, 1.0),
            samples: 1,
            size_coef: 0.005,
            entropy_coef: 1.0,
            seed: 0,
        }
    }
}

impl PgExplainerConfig {
    pub fn temperature_at(&self, epoch: usize) -> f64 {
        let (t0, t1) = self.temperature;
        if self.epochs <= 1 {
            return t0;
        }
        t0 * (t1 / t0).powf(epoch as f64 / (self.epochs - 1) as f64)
    }
}

/// Fitted edge scorer: a two-layer MLP on concatenated endpoint embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct PgExplainer {
    /// `w1 [2H x hidden]`, `b1 [1 x hidden]`, `w2 [hidden x 1]`, `b2 [1 x 1]`.
    pub weights: Vec<Tensor>,
    pub config: PgExplainerConfig,
    pub loss_trace: Vec<f64>,
}

/// Rows `[emb[u] | emb[v]]` for every canonical edge.
pub(crate) fn edge_inputs(emb: &Tensor, edges: &[(usize, usize)]) -> Tensor {
    let h = emb.cols();
    let mut data = Vec::with_capacity(edges.len() * 2 * h);
    for &(u, v) in edges {
        data.extend_from_slice(emb.row(u));
        data.extend_from_slice(emb.row(v));
    }
    Tensor::matrix(edges.len(), 2 * h, data).expect("edge input shape")
}

fn scorer<'t>(w: &[Var<'t>], x: Var<'t>) -> Result<Var<'t>> {
    x.matmul(w[0])?.add_row(w[1])?.relu().matmul(w[2])?.add_row(w[3])
}

fn glorot(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let bound = (6.0 / (r + c) as f64).sqrt();
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(-bound..bound)).collect()).unwrap()
}

/// Trains the scorer so that concrete-relaxed masked graphs reproduce the
/// frozen model's class distribution on `graphs`.
pub fn pgexplainer_fit(params: &ModelParams, graphs: &[&GraphSample], cfg: &PgExplainerConfig) -> Result<PgExplainer> {
    if cfg.epochs == 0 || cfg.batch_size == 0 || cfg.samples == 0 || cfg.hidden_dim == 0 {
        return Err(Error::Parameter("PGExplainer counts must be positive".into()));
    }
    let h = params.arch.hidden_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights = vec![
        glorot(2 * h, cfg.hidden_dim, &mut rng),
        Tensor::zeros(1, cfg.hidden_dim),
        glorot(cfg.hidden_dim, 1, &mut rng),
        Tensor::zeros(1, 1),
    ];
    let usable: Vec<&GraphSample> = graphs.iter().copied().filter(|g| g.edge_count() > 0).collect();
    let inputs: Vec<Tensor> = usable
        .iter()
        .map(|g| Ok(edge_inputs(&node_embeddings(params, g)?, g.edges())))
        .collect::<Result<_>>()?;
    if inputs.iter().all(|x| x.data().iter().all(|&v| v == 0.0)) {
        return Err(Error::Degenerate("all node embeddings are zero".into()));
    }
    let targets: Vec<Tensor> = usable
        .iter()
        .map(|g| params.predict_proba(&EdgeWeightedBatch::single(g)))
        .collect::<Result<_>>()?;

    let mut adam = Adam::new(cfg.learning_rate, &weights);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let tau = cfg.temperature_at(epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let graphs: Vec<&GraphSample> = chunk.iter().map(|&i| usable[i]).collect();
            let batch = EdgeWeightedBatch::new(&graphs);
            let rows: usize = chunk.iter().map(|&i| inputs[i].rows()).sum();
            let mut x = Vec::with_capacity(rows * 2 * h);
            let mut target = Vec::new();
            for &i in chunk {
                x.extend_from_slice(inputs[i].data());
                target.extend_from_slice(targets[i].data());
            }
            let x = Tensor::matrix(rows, 2 * h, x)?;
            let target = Tensor::matrix(chunk.len(), params.arch.class_count, target)?;

            let tape = Tape::new();
            let bound = params.bind(&tape, false);
            let w: Vec<Var> = weights.iter().map(|t| tape.param(t.clone())).collect();
            let logits = scorer(&w, tape.constant(x))?;
            let mut loss: Option<Var> = None;
            for _ in 0..cfg.samples {
                let noise: Vec<f64> = (0..rows)
                    .map(|_| {
                        let u: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
                        u.ln() - (1.0 - u).ln()
                    })
                    .collect();
                let mask = logits.add(tape.constant(Tensor::column(noise)))?.affine(1.0 / tau, 0.0).sigmoid();
                let out = bound.forward(&batch, Some(mask))?.logits;
                let term = out
                    .soft_cross_entropy(&target)?
                    .add(mask_regularizer(mask, cfg.size_coef, cfg.entropy_coef)?)?
                    .affine(1.0 / cfg.samples as f64, 0.0);
                loss = Some(match loss {
                    None => term,
                    Some(l) => l.add(term)?,
                });
            }
            let loss = loss.expect("samples > 0");
            let value = loss.item();
            if !value.is_finite() {
                return Err(Error::Optimization(format!("PGExplainer loss became {value} at epoch {epoch}")));
            }
            epoch_loss += value * chunk.len() as f64;
            let grads = tape.backward(loss)?;
            let g: Vec<Tensor> = w.iter().map(|&v| grads.wrt_or_zeros(v)).collect();
            adam.step(&mut weights, &g)?;
        }
        trace.push(epoch_loss / usable.len().max(1) as f64);
    }
    Ok(PgExplainer {
        weights,
        config: cfg.clone(),
        loss_trace: trace,
    })
}

/// Deterministic edge probabilities `sigmoid(scorer(emb[u] | emb[v]))`.
pub fn pgexplainer_scores(pg: &PgExplainer, params: &ModelParams, g: &GraphSample) -> Result<EdgeScores> {
    let meta = ScoreMeta {
        iterations: pg.config.epochs,
        final_loss: pg.loss_trace.last().copied(),
        seed: Some(pg.config.seed),
    };
    if g.edge_count() == 0 {
        return EdgeScores::new(Vec::new(), Method::PgExplainer, meta);
    }
    let x = edge_inputs(&node_embeddings(params, g)?, g.edges());
    if x.cols() != pg.weights[0].rows() {
        return Err(Error::Contract(format!(
            "scorer expects {} inputs, embeddings give {}",
            pg.weights[0].rows(),
            x.cols()
        )));
    }
    let tape = Tape::new();
    let w: Vec<Var> = pg.weights.iter().map(|t| tape.constant(t.clone())).collect();
    let probs = scorer(&w, tape.constant(x))?.sigmoid().to_tensor();
    EdgeScores::new(probs.into_data(), Method::PgExplainer, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArchConfig, ArchKind};

    #[test]
    fn temperature_schedule_endpoints() {
        let cfg = PgExplainerConfig {
            epochs: 11,
            ..Default::default()
        };
        assert!((cfg.temperature_at(0) - 5.0).abs() < 1e-12);
        assert!((cfg.temperature_at(10) - 1.0).abs() < 1e-12);
        assert!(cfg.temperature_at(5) < 5.0 && cfg.temperature_at(5) > 1.0);
    }

    #[test]
    fn zero_embeddings_are_degenerate() {
        let mut p = ModelParams::init(&ArchConfig::new(ArchKind::Gcn, 2, 4, 2), 0).unwrap();
        for (name, t) in p.tensors.iter_mut() {
            if name.starts_with("conv2") {
                *t = t.zeros_like();
            }
        }
        let g = GraphSample::new(3, [(0, 1), (1, 2)], Tensor::full(3, 2, 1.0), 0).unwrap();
        assert!(matches!(
            pgexplainer_fit(&p, &[&g], &PgExplainerConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }
}
