//! Remove-and-retrain evaluation of edge attributions for graph classifiers.
//!
//! The pipeline: generate or load a dataset, train a baseline GCN/GIN,
//! attribute every edge with one of several explainers, then retrain from
//! scratch on the most important (RoMie) or least important (RoLie) edges at
//! a range of sparsity levels and measure accuracy on the untouched test set.

pub mod autodiff;
pub mod config;
pub mod dataset;
pub mod explain;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod optim;
pub mod pipeline;
pub mod report;
pub mod retrain;
pub mod synthetic;
pub mod tensor;
pub mod tu;
pub mod visualize;

pub use error::{Error, Result};

/// Writes through a sibling temp file and renames it into place.
pub(crate) fn write_atomic(path: &std::path::Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
