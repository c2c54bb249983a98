//! Three-layer GCN and GIN graph classifiers.
//!
//! Both architectures take per-edge weights in `[0, 1]` so that explainers can
//! optimise soft masks through the same forward pass used for training. A
//! weight of exactly 0 is indistinguishable from deleting the edge: GIN sums
//! weighted messages, and GCN normalises with weighted degrees plus a unit
//! self-loop.

mod batch;
pub mod checkpoint;
mod train;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use batch::EdgeWeightedBatch;
pub use train::{evaluate, train, train_on, EpochLog, Evaluation, TrainConfig, TrainLog};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::tensor::Tensor;

pub const LAYER_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArchKind {
    #[serde(rename = "GCN")]
    Gcn,
    #[serde(rename = "GIN")]
    Gin,
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArchKind::Gcn => "GCN",
            ArchKind::Gin => "GIN",
        })
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GCN" => Ok(ArchKind::Gcn),
            "GIN" => Ok(ArchKind::Gin),
            other => Err(Error::Parameter(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub kind: ArchKind,
    pub hidden_dim: usize,
    pub layer_count: usize,
    pub class_count: usize,
    pub input_dim: usize,
}

impl ArchConfig {
    pub fn new(kind: ArchKind, input_dim: usize, hidden_dim: usize, class_count: usize) -> Self {
        Self {
            kind,
            hidden_dim,
            layer_count: LAYER_COUNT,
            class_count,
            input_dim,
        }
    }

    /// Names and shapes of every trainable tensor, in a fixed order.
    pub fn param_shapes(&self) -> Vec<(String, [usize; 2])> {
        let mut out = Vec::new();
        let h = self.hidden_dim;
        for l in 0..self.layer_count {
            let d_in = if l == 0 { self.input_dim } else { h };
            match self.kind {
                ArchKind::Gcn => {
                    out.push((format!("conv{l}.weight"), [d_in, h]));
                    out.push((format!("conv{l}.bias"), [1, h]));
                }
                ArchKind::Gin => {
                    out.push((format!("conv{l}.eps"), [1, 1]));
                    out.push((format!("conv{l}.mlp0.weight"), [d_in, h]));
                    out.push((format!("conv{l}.mlp0.bias"), [1, h]));
                    out.push((format!("conv{l}.mlp1.weight"), [h, h]));
                    out.push((format!("conv{l}.mlp1.bias"), [1, h]));
                }
            }
        }
        out.push(("head.weight".into(), [h, self.class_count]));
        out.push(("head.bias".into(), [1, self.class_count]));
        out
    }

    fn validate(&self) -> Result<()> {
        if self.layer_count != LAYER_COUNT {
            return Err(Error::Parameter(format!(
                "layer_count must be {LAYER_COUNT}, got {}",
                self.layer_count
            )));
        }
        if self.hidden_dim == 0 || self.class_count == 0 || self.input_dim == 0 {
            return Err(Error::Parameter(format!("degenerate architecture {self:?}")));
        }
        Ok(())
    }
}

/// All trainable weights of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: ArchConfig,
    pub tensors: Vec<(String, Tensor)>,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, GIN `eps` = 0.
    pub fn init(arch: &ArchConfig, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = arch
            .param_shapes()
            .into_iter()
            .map(|(name, [r, c])| {
                let t = if name.ends_with(".weight") {
                    let bound = (6.0 / (r + c) as f64).sqrt();
                    let data = (0..r * c).map(|_| rng.gen_range(-bound..bound)).collect();
                    Tensor::matrix(r, c, data).unwrap()
                } else {
                    Tensor::zeros(r, c)
                };
                (name, t)
            })
            .collect();
        Ok(Self {
            arch: arch.clone(),
            tensors,
        })
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn values(&self) -> Vec<Tensor> {
        self.tensors.iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn set_values(&mut self, values: Vec<Tensor>) {
        for ((_, t), v) in self.tensors.iter_mut().zip(values) {
            *t = v;
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        let want = self.arch.param_shapes();
        if want.len() != self.tensors.len() {
            return Err(Error::Contract(format!(
                "expected {} tensors, found {}",
                want.len(),
                self.tensors.len()
            )));
        }
        for ((name, shape), (have_name, t)) in want.iter().zip(&self.tensors) {
            if name != have_name || t.shape() != shape {
                return Err(Error::Contract(format!(
                    "tensor {have_name} {:?} does not match {name} {shape:?}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }

    /// Places every tensor on `tape`, trainable or frozen.
    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> BoundParams<'t> {
        let vars = self
            .tensors
            .iter()
            .map(|(_, t)| {
                if trainable {
                    tape.param(t.clone())
                } else {
                    tape.constant(t.clone())
                }
            })
            .collect::<Vec<_>>();
        self.attach(&vars).expect("one variable per tensor")
    }

    /// Wraps existing tape variables (one per tensor, in order) as this
    /// model's weights.
    pub fn attach<'t>(&self, vars: &[Var<'t>]) -> Result<BoundParams<'t>> {
        if vars.len() != self.tensors.len() {
            return Err(Error::Contract(format!(
                "{} variables for {} tensors",
                vars.len(),
                self.tensors.len()
            )));
        }
        let vars: Vec<(String, Var<'t>)> = self.tensors.iter().map(|(n, _)| n.clone()).zip(vars.iter().copied()).collect();
        let index = vars.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
        Ok(BoundParams {
            arch: self.arch.clone(),
            vars,
            index,
        })
    }

    /// Logits for a batch, evaluated on a throwaway tape.
    pub fn logits(&self, batch: &EdgeWeightedBatch) -> Result<Tensor> {
        let tape = Tape::new();
        let p = self.bind(&tape, false);
        Ok(p.forward(batch, None)?.logits.to_tensor())
    }

    /// Softmax class probabilities, one row per graph.
    pub fn predict_proba(&self, batch: &EdgeWeightedBatch) -> Result<Tensor> {
        Ok(self.logits(batch)?.softmax_rows())
    }

    pub fn predict(&self, g: &GraphSample) -> Result<usize> {
        Ok(self.logits(&EdgeWeightedBatch::single(g))?.argmax_row(0))
    }
}

/// Model weights living on a tape.
pub struct BoundParams<'t> {
    pub arch: ArchConfig,
    pub vars: Vec<(String, Var<'t>)>,
    index: HashMap<String, usize>,
}

/// Outputs of one forward pass.
pub struct Forward<'t> {
    pub logits: Var<'t>,
    /// Node representations after the last message-passing layer.
    pub node_embeddings: Var<'t>,
}

impl<'t> BoundParams<'t> {
    fn p(&self, name: &str) -> Var<'t> {
        self.vars[self.index[name]].1
    }

    pub fn var_list(&self) -> Vec<Var<'t>> {
        self.vars.iter().map(|(_, v)| *v).collect()
    }

    /// Runs the network. `edge_weights` is a `[canon_count x 1]` column of
    /// per-canonical-edge weights; `None` means every edge has weight 1.
    pub fn forward(&self, batch: &EdgeWeightedBatch, edge_weights: Option<Var<'t>>) -> Result<Forward<'t>> {
        let tape = self.vars[0].1.tape();
        if batch.features.cols() != self.arch.input_dim && batch.node_count() > 0 {
            return Err(Error::Contract(format!(
                "batch features have {} columns, model expects {}",
                batch.features.cols(),
                self.arch.input_dim
            )));
        }
        let n = batch.node_count();
        let directed = match edge_weights {
            Some(w) => {
                if w.value().len() != batch.canon_count {
                    return Err(Error::Contract(format!(
                        "{} edge weights for {} edges",
                        w.value().len(),
                        batch.canon_count
                    )));
                }
                w.gather_rows(batch.canon.clone())?
            }
            None => tape.constant(Tensor::full(batch.src.len(), 1, 1.0)),
        };
        let features = if n == 0 {
            Tensor::zeros(0, self.arch.input_dim)
        } else {
            batch.features.clone()
        };
        let mut h = tape.constant(features);
        match self.arch.kind {
            ArchKind::Gcn => {
                let deg = directed.scatter_add_rows(batch.dst.clone(), n)?.affine(1.0, 1.0);
                let dinv = deg.powf(-0.5);
                let norm = dinv
                    .gather_rows(batch.src.clone())?
                    .mul(directed)?
                    .mul(dinv.gather_rows(batch.dst.clone())?)?;
                let self_w = dinv.mul(dinv)?;
                for l in 0..self.arch.layer_count {
                    let hw = h.matmul(self.p(&format!("conv{l}.weight")))?;
                    let agg = hw
                        .propagate(norm, batch.src.clone(), batch.dst.clone())?
                        .add(hw.mul_rows(self_w)?)?;
                    h = agg.add_row(self.p(&format!("conv{l}.bias")))?.relu();
                }
            }
            ArchKind::Gin => {
                for l in 0..self.arch.layer_count {
                    let agg = h.propagate(directed, batch.src.clone(), batch.dst.clone())?;
                    let one_plus_eps = self.p(&format!("conv{l}.eps")).affine(1.0, 1.0);
                    let z = h.mul(one_plus_eps)?.add(agg)?;
                    let z = z
                        .matmul(self.p(&format!("conv{l}.mlp0.weight")))?
                        .add_row(self.p(&format!("conv{l}.mlp0.bias")))?
                        .relu();
                    h = z
                        .matmul(self.p(&format!("conv{l}.mlp1.weight")))?
                        .add_row(self.p(&format!("conv{l}.mlp1.bias")))?
                        .relu();
                }
            }
        }
        let pooled = h.segment_mean(batch.ranges.clone())?;
        let logits = pooled
            .matmul(self.p("head.weight"))?
            .add_row(self.p("head.bias"))?
            .mul_rows(tape.constant(batch.nonempty.clone()))?;
        Ok(Forward {
            logits,
            node_embeddings: h,
        })
    }
}

/// Last-layer node representations of one graph, `[M x hidden]`.
pub fn node_embeddings(params: &ModelParams, g: &GraphSample) -> Result<Tensor> {
    let tape = Tape::new();
    let p = params.bind(&tape, false);
    Ok(p.forward(&EdgeWeightedBatch::single(g), None)?.node_embeddings.to_tensor())
}
