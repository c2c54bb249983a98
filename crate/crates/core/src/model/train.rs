use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ArchConfig, EdgeWeightedBatch, ModelParams};
use crate::autodiff::Tape;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::optim::Adam;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 0.001,
            early_stop_patience: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose weights were returned.
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    pub mean_loss: f64,
}

const EVAL_CHUNK: usize = 256;

/// Accuracy, argmax predictions and mean cross-entropy over `graphs`.
pub fn evaluate(params: &ModelParams, graphs: &[&GraphSample]) -> Result<Evaluation> {
    if graphs.is_empty() {
        return Err(Error::Domain("accuracy of an empty graph list".into()));
    }
    let mut predictions = Vec::with_capacity(graphs.len());
    let mut loss = 0.0;
    let mut correct = 0usize;
    for chunk in graphs.chunks(EVAL_CHUNK) {
        let batch = EdgeWeightedBatch::new(chunk);
        let tape = Tape::new();
        let bound = params.bind(&tape, false);
        let logits = bound.forward(&batch, None)?.logits;
        loss += logits.cross_entropy(&batch.labels)?.item() * chunk.len() as f64;
        let values = logits.value();
        for (i, g) in chunk.iter().enumerate() {
            let p = values.argmax_row(i);
            correct += usize::from(p == g.label());
            predictions.push(p);
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / graphs.len() as f64,
        predictions,
        mean_loss: loss / graphs.len() as f64,
    })
}

/// Trains on the dataset's train split, early-stopping on its validation split.
pub fn train(ds: &Dataset, arch: &ArchConfig, cfg: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    let split = ds.split()?;
    train_on(&ds.subset(&split.train), &ds.subset(&split.validation), arch, cfg)
}

/// Mini-batch Adam on softmax cross-entropy.
///
/// Returns the weights of the epoch with the best validation accuracy (ties to
/// the lower validation loss). Without validation graphs the last epoch wins.
pub fn train_on(
    train: &[&GraphSample],
    val: &[&GraphSample],
    arch: &ArchConfig,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    if train.is_empty() {
        return Err(Error::Contract("empty train split".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Parameter("epochs and batch_size must be positive".into()));
    }
    let mut params = ModelParams::init(arch, cfg.seed)?;
    let mut adam = Adam::new(cfg.learning_rate, &params.values());
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order_rng.set_stream(1);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainLog::default();
    let mut best: Option<(f64, f64, Vec<Tensor>)> = None;
    let mut since_best = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut epoch_loss = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let graphs: Vec<&GraphSample> = idx.iter().map(|&i| train[i]).collect();
            let batch = EdgeWeightedBatch::new(&graphs);
            let tape = Tape::new();
            let bound = params.bind(&tape, true);
            let loss = bound.forward(&batch, None)?.logits.cross_entropy(&batch.labels)?;
            let loss_value = loss.item();
            if !loss_value.is_finite() {
                return Err(Error::Optimization(format!("non-finite loss at epoch {epoch}")));
            }
            epoch_loss += loss_value * graphs.len() as f64;
            let grads = tape.backward(loss)?;
            let g: Vec<Tensor> = bound.var_list().iter().map(|&v| grads.wrt_or_zeros(v)).collect();
            let mut values = params.values();
            adam.step(&mut values, &g)?;
            params.set_values(values);
        }

        let (val_accuracy, val_loss) = if val.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let e = evaluate(&params, val)?;
            (e.accuracy, e.mean_loss)
        };
        log.epochs.push(EpochLog {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            val_accuracy,
            val_loss,
        });

        if val.is_empty() {
            log.best_epoch = epoch;
            continue;
        }
        let improved = match &best {
            None => true,
            Some((acc, loss, _)) => val_accuracy > *acc || (val_accuracy == *acc && val_loss < *loss),
        };
        if improved {
            best = Some((val_accuracy, val_loss, params.values()));
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience {
                break;
            }
        }
    }
    if let Some((_, _, weights)) = best {
        params.set_values(weights);
    }
    Ok((params, log))
}
