//! TU graph-kernel benchmark format.
//!
//! A dataset `NAME` lives in one directory:
//!
//! * `NAME_A.txt` – one `i, j` directed edge per line, 1-based global node ids
//! * `NAME_graph_indicator.txt` – graph id (1-based) of node `i` on line `i`
//! * `NAME_graph_labels.txt` – class label of graph `g` on line `g`
//! * `NAME_node_labels.txt` – optional, node label of node `i` on line `i`
//!
//! Datasets written by this crate also carry `NAME_meta.txt`, a `key=value`
//! sidecar with the generator seed, class names and motif edge ids.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::synthetic::CONSTANT_FEATURE_DIM;
use crate::tensor::Tensor;

/// Graphs above this many nodes are rejected at load time.
pub const MAX_NODES_PER_GRAPH: usize = 3000;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Finds the dataset name from the `*_A.txt` file in `dir`.
pub fn dataset_name(dir: &Path) -> Result<String> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Load {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().map(str::to_owned))
        .filter_map(|f| f.strip_suffix("_A.txt").map(str::to_owned))
        .collect();
    names.sort();
    names.into_iter().next().ok_or_else(|| Error::Load {
        path: dir.to_path_buf(),
        reason: "no <NAME>_A.txt file".into(),
    })
}

/// Sorts label spellings numerically when they all parse as numbers.
fn sorted_labels(values: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = values.into_iter().collect();
    if v.iter().all(|s| s.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| {
            a.parse::<f64>()
                .unwrap()
                .partial_cmp(&b.parse::<f64>().unwrap())
                .unwrap()
        });
    }
    v
}

#[derive(Debug, Default)]
struct Sidecar {
    seed: Option<u64>,
    classes: Option<Vec<String>>,
    feature_dim: Option<usize>,
    motif_edges: BTreeMap<usize, Vec<usize>>,
}

fn read_sidecar(path: &Path) -> Result<Option<Sidecar>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = read(path)?;
    let mut meta = Sidecar::default();
    for (line, l) in data_lines(&text) {
        if l.starts_with('#') {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| parse_err(path, line, "expected key=value"))?;
        let (k, v) = (k.trim(), v.trim());
        let bad = |what: &str| parse_err(path, line, format!("bad {what}: {v:?}"));
        match k {
            "seed" => meta.seed = Some(v.parse().map_err(|_| bad("seed"))?),
            "classes" => meta.classes = Some(v.split(',').map(|s| s.trim().to_string()).collect()),
            "feature_dim" => meta.feature_dim = Some(v.parse().map_err(|_| bad("feature_dim"))?),
            _ => {
                if let Some(idx) = k.strip_prefix("motif_edges.") {
                    let g: usize = idx.parse().map_err(|_| bad("graph index"))?;
                    let ids = v
                        .split_whitespace()
                        .map(|s| s.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad("edge id"))?;
                    meta.motif_edges.insert(g, ids);
                }
            }
        }
    }
    Ok(Some(meta))
}

/// Loads a TU-format dataset from `dir`.
pub fn load_tu_dataset(dir: &Path) -> Result<Dataset> {
    let name = dataset_name(dir)?;
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let ind_path = file("graph_indicator");
    let ind_text = read(&ind_path)?;
    let mut node_graph = Vec::new();
    for (line, l) in data_lines(&ind_text) {
        let g: usize = l
            .parse()
            .map_err(|_| parse_err(&ind_path, line, format!("bad graph id {l:?}")))?;
        if g == 0 {
            return Err(parse_err(&ind_path, line, "graph ids are 1-based"));
        }
        node_graph.push(g - 1);
    }
    let graph_count = node_graph.iter().max().map_or(0, |&g| g + 1);

    // per-graph local numbering in global order
    let mut local = Vec::with_capacity(node_graph.len());
    let mut sizes = vec![0usize; graph_count];
    for &g in &node_graph {
        local.push(sizes[g]);
        sizes[g] += 1;
    }
    if let Some(g) = sizes.iter().position(|&n| n > MAX_NODES_PER_GRAPH) {
        return Err(Error::Load {
            path: dir.to_path_buf(),
            reason: format!(
                "graph {} has {} nodes, above the {MAX_NODES_PER_GRAPH}-node limit",
                g + 1,
                sizes[g]
            ),
        });
    }

    let lab_path = file("graph_labels");
    let lab_text = read(&lab_path)?;
    let raw_labels: Vec<(usize, String)> = data_lines(&lab_text).map(|(n, l)| (n, l.to_string())).collect();
    if raw_labels.len() != graph_count {
        return Err(parse_err(
            &lab_path,
            raw_labels.len(),
            format!("{} graph labels for {graph_count} graphs", raw_labels.len()),
        ));
    }
    let class_names = sorted_labels(raw_labels.iter().map(|(_, l)| l.clone()).collect());
    let class_of: HashMap<&str, usize> = class_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();

    let a_path = file("A");
    let a_text = read(&a_path)?;
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_count];
    for (line, l) in data_lines(&a_text) {
        let mut parts = l.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
        let mut endpoint = || -> Result<usize> {
            let tok = parts
                .next()
                .ok_or_else(|| parse_err(&a_path, line, "expected two node ids"))?;
            let i: usize = tok
                .parse()
                .map_err(|_| parse_err(&a_path, line, format!("bad node id {tok:?}")))?;
            if i == 0 || i > node_graph.len() {
                return Err(parse_err(
                    &a_path,
                    line,
                    format!("dangling node index {i} (only {} nodes)", node_graph.len()),
                ));
            }
            Ok(i - 1)
        };
        let (a, b) = (endpoint()?, endpoint()?);
        if node_graph[a] != node_graph[b] {
            return Err(parse_err(&a_path, line, format!("edge {}-{} crosses graphs", a + 1, b + 1)));
        }
        if a != b {
            edges[node_graph[a]].push((local[a], local[b]));
        }
    }

    let nl_path = file("node_labels");
    let node_labels: Option<Vec<String>> = if nl_path.exists() {
        let text = read(&nl_path)?;
        let v: Vec<String> = data_lines(&text).map(|(_, l)| l.to_string()).collect();
        if v.len() != node_graph.len() {
            return Err(parse_err(
                &nl_path,
                v.len(),
                format!("{} node labels for {} nodes", v.len(), node_graph.len()),
            ));
        }
        Some(v)
    } else {
        None
    };

    let sidecar = read_sidecar(&file("meta"))?;
    let node_label_names = node_labels
        .as_ref()
        .map(|v| sorted_labels(v.iter().cloned().collect()))
        .unwrap_or_default();
    let column: HashMap<&str, usize> = node_label_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let const_dim = sidecar.as_ref().and_then(|m| m.feature_dim).unwrap_or(CONSTANT_FEATURE_DIM);

    let mut feats: Vec<Vec<f64>> = (0..graph_count)
        .map(|g| {
            let d = if node_labels.is_some() { node_label_names.len() } else { const_dim };
            Vec::with_capacity(sizes[g] * d)
        })
        .collect();
    for (i, &g) in node_graph.iter().enumerate() {
        match &node_labels {
            Some(labels) => {
                let mut row = vec![0.0; node_label_names.len()];
                row[column[labels[i].as_str()]] = 1.0;
                feats[g].extend(row);
            }
            None => feats[g].extend(std::iter::repeat(1.0).take(const_dim)),
        }
    }

    let mut graphs = Vec::with_capacity(graph_count);
    for (g, (edge_list, data)) in edges.into_iter().zip(feats).enumerate() {
        let dim = if node_labels.is_some() { node_label_names.len() } else { const_dim };
        let features = Tensor::matrix(sizes[g], dim, data)?;
        let (line, raw) = &raw_labels[g];
        let label = class_of[raw.as_str()];
        let graph = GraphSample::new(sizes[g], edge_list, features, label)
            .map_err(|e| parse_err(&lab_path, *line, format!("graph {}: {e}", g + 1)))?;
        graphs.push(graph);
    }

    let (provenance, class_names, motif_edges) = match sidecar {
        Some(meta) => {
            let names = match meta.classes {
                Some(n) if n.len() == class_names.len() => n,
                _ => class_names,
            };
            let motifs = if meta.motif_edges.is_empty() {
                None
            } else {
                Some((0..graph_count).map(|g| meta.motif_edges.get(&g).cloned().unwrap_or_default()).collect())
            };
            let prov = match meta.seed {
                Some(seed) => Provenance::Generated { seed },
                None => Provenance::Loaded { path: dir.to_path_buf() },
            };
            (prov, names, motifs)
        }
        None => (Provenance::Loaded { path: dir.to_path_buf() }, class_names, None),
    };

    Ok(Dataset {
        name,
        class_count: class_names.len(),
        class_names,
        graphs,
        split: None,
        provenance,
        motif_edges,
        node_label_names,
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `ds` in TU format plus the `_meta.txt` sidecar. Returns the paths
/// written.
pub fn write_tu_dataset(ds: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = &ds.name;
    let path = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));
    let numeric_classes = ds.class_names.iter().all(|s| s.parse::<f64>().is_ok());

    let mut a = String::new();
    let mut ind = String::new();
    let mut labels = String::new();
    let mut node_labels = String::new();
    let mut offset = 0usize;
    for (gi, g) in ds.graphs.iter().enumerate() {
        for _ in 0..g.node_count() {
            ind.push_str(&format!("{}\n", gi + 1));
        }
        for &(u, v) in g.edges() {
            a.push_str(&format!("{}, {}\n", offset + u + 1, offset + v + 1));
            a.push_str(&format!("{}, {}\n", offset + v + 1, offset + u + 1));
        }
        if !ds.node_label_names.is_empty() {
            for n in 0..g.node_count() {
                let col = g.features().argmax_row(n);
                node_labels.push_str(&ds.node_label_names[col]);
                node_labels.push('\n');
            }
        }
        if numeric_classes {
            labels.push_str(&ds.class_names[g.label()]);
        } else {
            labels.push_str(&g.label().to_string());
        }
        labels.push('\n');
        offset += g.node_count();
    }

    let mut meta = format!("name={name}\n");
    if let Provenance::Generated { seed } = ds.provenance {
        meta.push_str(&format!("seed={seed}\n"));
    }
    meta.push_str(&format!("classes={}\n", ds.class_names.join(",")));
    if ds.node_label_names.is_empty() {
        meta.push_str(&format!("feature_dim={}\n", ds.feature_dim()));
    }
    if let Some(motifs) = &ds.motif_edges {
        for (gi, m) in motifs.iter().enumerate() {
            let ids: Vec<String> = m.iter().map(|e| e.to_string()).collect();
            meta.push_str(&format!("motif_edges.{gi}={}\n", ids.join(" ")));
        }
    }

    let mut written = vec![path("A"), path("graph_indicator"), path("graph_labels"), path("meta")];
    write_file(&written[0], &a)?;
    write_file(&written[1], &ind)?;
    write_file(&written[2], &labels)?;
    write_file(&written[3], &meta)?;
    if !ds.node_label_names.is_empty() {
        let p = path("node_labels");
        write_file(&p, &node_labels)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_toy(dir: &Path, with_node_labels: bool) {
        // graph 1: triangle-ish path 1-2-3, graph 2: 4-5; reversed and
        // duplicated directed entries on purpose
        fs::write(dir.join("TOY_A.txt"), "1, 2\n2, 1\n2,3\n3 2\n4, 5\n5, 4\n4,5\n").unwrap();
        fs::write(dir.join("TOY_graph_indicator.txt"), "1\n1\n1\n2\n2\n").unwrap();
        fs::write(dir.join("TOY_graph_labels.txt"), "1\n-1\n").unwrap();
        if with_node_labels {
            fs::write(dir.join("TOY_node_labels.txt"), "0\n2\n0\n1\n1\n").unwrap();
        }
    }

    #[test]
    fn renumbers_per_graph() {
        let tmp = tempfile::tempdir().unwrap();
        write_toy(tmp.path(), true);
        let ds = load_tu_dataset(tmp.path()).unwrap();
        assert_eq!(ds.name, "TOY");
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.graphs[0].node_count(), 3);
        assert_eq!(ds.graphs[0].edges(), &[(0, 1), (1, 2)]);
        assert_eq!(ds.graphs[1].node_count(), 2);
        assert_eq!(ds.graphs[1].edges(), &[(0, 1)]);
        // "-1" sorts before "1"
        assert_eq!(ds.class_names, vec!["-1", "1"]);
        assert_eq!(ds.graphs[0].label(), 1);
        assert_eq!(ds.graphs[1].label(), 0);
        // one-hot over {0,1,2}
        assert_eq!(ds.graphs[0].features().row(1), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_features_without_node_labels() {
        let tmp = tempfile::tempdir().unwrap();
        write_toy(tmp.path(), false);
        let ds = load_tu_dataset(tmp.path()).unwrap();
        assert_eq!(ds.feature_dim(), CONSTANT_FEATURE_DIM);
        assert!(ds.graphs[1].features().data().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn missing_file_is_load_error() {
        let tmp = tempfile::tempdir().unwrap();
        write_toy(tmp.path(), false);
        fs::remove_file(tmp.path().join("TOY_graph_labels.txt")).unwrap();
        assert!(matches!(load_tu_dataset(tmp.path()), Err(Error::Load { .. })));
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(load_tu_dataset(empty.path()), Err(Error::Load { .. })));
    }

    #[test]
    fn dangling_index_reports_line() {
        let tmp = tempfile::tempdir().unwrap();
        write_toy(tmp.path(), false);
        fs::write(tmp.path().join("TOY_A.txt"), "1, 2\n2, 9\n").unwrap();
        match load_tu_dataset(tmp.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn oversized_graph_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let n = MAX_NODES_PER_GRAPH + 1;
        fs::write(tmp.path().join("BIG_A.txt"), "1, 2\n").unwrap();
        fs::write(tmp.path().join("BIG_graph_indicator.txt"), "1\n".repeat(n)).unwrap();
        fs::write(tmp.path().join("BIG_graph_labels.txt"), "0\n").unwrap();
        assert!(matches!(load_tu_dataset(tmp.path()), Err(Error::Load { .. })));
    }

    #[test]
    fn round_trip_with_node_labels() {
        let tmp = tempfile::tempdir().unwrap();
        write_toy(tmp.path(), true);
        let ds = load_tu_dataset(tmp.path()).unwrap();
        let out = tempfile::tempdir().unwrap();
        write_tu_dataset(&ds, out.path()).unwrap();
        let again = load_tu_dataset(out.path()).unwrap();
        assert_eq!(ds.graphs, again.graphs);
        assert_eq!(ds.class_names, again.class_names);
    }
}
