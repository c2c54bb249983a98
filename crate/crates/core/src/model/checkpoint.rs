//! Plain-text model checkpoints.
//!
//! ```text
//! graphroar-checkpoint 1
//! kind=GCN
//! hidden_dim=64
//! layer_count=3
//! class_count=2
//! input_dim=10
//! tensors=14
//! tensor conv0.weight 10 64
//! <row-major values, one line>
//! ...
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so reloading is
//! bit-exact.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{ArchConfig, ModelParams};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &str = "graphroar-checkpoint 1";

pub fn to_text(params: &ModelParams) -> String {
    let a = &params.arch;
    let mut out = format!(
        "{MAGIC}\nkind={}\nhidden_dim={}\nlayer_count={}\nclass_count={}\ninput_dim={}\ntensors={}\n",
        a.kind,
        a.hidden_dim,
        a.layer_count,
        a.class_count,
        a.input_dim,
        params.tensors.len()
    );
    for (name, t) in &params.tensors {
        let (r, c) = t.dims2();
        out.push_str(&format!("tensor {name} {r} {c}\n"));
        let vals: Vec<String> = t.data().iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str, origin: &Path) -> Result<ModelParams> {
    let err = |line: usize, reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(err(1, "missing checkpoint header".into())),
    }
    let mut header = std::collections::HashMap::new();
    for _ in 0..6 {
        let (n, l) = lines.next().ok_or_else(|| err(0, "truncated header".into()))?;
        let (k, v) = l.split_once('=').ok_or_else(|| err(n, format!("expected key=value, got {l:?}")))?;
        header.insert(k.trim().to_string(), (n, v.trim().to_string()));
    }
    let num = |key: &str| -> Result<usize> {
        let (n, v) = header.get(key).ok_or_else(|| err(0, format!("missing {key}")))?;
        v.parse().map_err(|_| err(*n, format!("bad {key}: {v:?}")))
    };
    let (kn, kind) = header.get("kind").ok_or_else(|| err(0, "missing kind".into()))?;
    let kind = kind.parse().map_err(|e: Error| err(*kn, e.to_string()))?;
    let arch = ArchConfig {
        kind,
        hidden_dim: num("hidden_dim")?,
        layer_count: num("layer_count")?,
        class_count: num("class_count")?,
        input_dim: num("input_dim")?,
    };
    let count = num("tensors")?;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = lines.next().ok_or_else(|| err(0, "truncated tensor list".into()))?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "tensor" {
            return Err(err(n, format!("expected 'tensor <name> <rows> <cols>', got {l:?}")));
        }
        let r: usize = parts[2].parse().map_err(|_| err(n, "bad rows".into()))?;
        let c: usize = parts[3].parse().map_err(|_| err(n, "bad cols".into()))?;
        let (n2, body) = lines.next().ok_or_else(|| err(n, "missing tensor values".into()))?;
        let data = body
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(n2, e.to_string()))?;
        let t = Tensor::matrix(r, c, data).map_err(|e| err(n2, e.to_string()))?;
        tensors.push((parts[1].to_string(), t));
    }
    let params = ModelParams { arch, tensors };
    params.check_shapes()?;
    Ok(params)
}

pub fn save(params: &ModelParams, path: &Path) -> Result<()> {
    crate::write_atomic(path, &to_text(params))
}

pub fn load(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    from_text(&text, path)
}

/// Hex SHA-256 of the serialized checkpoint.
pub fn checksum(params: &ModelParams) -> String {
    let digest = Sha256::digest(to_text(params).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArchKind;

    #[test]
    fn reload_is_bit_exact() {
        for kind in [ArchKind::Gcn, ArchKind::Gin] {
            let p = ModelParams::init(&ArchConfig::new(kind, 7, 5, 3), 11).unwrap();
            let text = to_text(&p);
            let back = from_text(&text, Path::new("mem")).unwrap();
            assert_eq!(p, back);
            for ((_, a), (_, b)) in p.tensors.iter().zip(&back.tensors) {
                for (x, y) in a.data().iter().zip(b.data()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_text("nope", Path::new("x")).is_err());
        let p = ModelParams::init(&ArchConfig::new(ArchKind::Gcn, 2, 2, 2), 0).unwrap();
        let text = to_text(&p).replace("hidden_dim=2", "hidden_dim=3");
        assert!(from_text(&text, Path::new("x")).is_err());
    }

    #[test]
    fn checksum_tracks_weights() {
        let arch = ArchConfig::new(ArchKind::Gcn, 2, 2, 2);
        let a = ModelParams::init(&arch, 0).unwrap();
        let b = ModelParams::init(&arch, 1).unwrap();
        assert_eq!(checksum(&a), checksum(&a.clone()));
        assert_ne!(checksum(&a), checksum(&b));
    }
}
