//! Graphviz DOT export of an attributed graph.

use std::fmt::Write as _;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::AttributionSet;
use crate::retrain::{select_for, Mode};

/// DOT description of graph `id` with every edge flagged as kept or removed
/// at `sparsity` in `mode`. Motif edges, when known, carry `motif=true`.
pub fn graph_dot(ds: &Dataset, attrs: &AttributionSet, id: usize, sparsity: u32, mode: Mode) -> Result<String> {
    let g = ds
        .graphs
        .get(id)
        .ok_or_else(|| Error::Lookup(format!("dataset {} has no graph {id}", ds.name)))?;
    let attr = attrs
        .graphs
        .get(&id)
        .ok_or_else(|| Error::Lookup(format!("no {} attribution for graph {id}", attrs.method)))?;
    let kept = select_for(attr, sparsity, mode)?;
    let motif: &[usize] = ds
        .motif_edges
        .as_ref()
        .and_then(|m| m.get(id))
        .map_or(&[], |m| m.as_slice());

    let mut out = format!("graph g{id} {{\n");
    writeln!(
        out,
        "  label=\"{} graph {id} label {} {} {mode} {sparsity}%\";",
        ds.name,
        g.label(),
        attrs.method
    )
    .unwrap();
    for v in 0..g.node_count() {
        writeln!(out, "  {v};").unwrap();
    }
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let on = kept.contains(e);
        write!(out, "  {u} -- {v} [kept={on}, style={}", if on { "solid" } else { "dotted" }).unwrap();
        if motif.contains(&e) {
            out.push_str(", motif=true, color=red");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{Attribution, EdgeScores, Method, ScoreMeta};
    use crate::synthetic::generate_ba2motifs;

    #[test]
    fn flags_top_edges() {
        let ds = generate_ba2motifs(0).unwrap();
        let g = &ds.graphs[0];
        let m = g.edge_count();
        let scores: Vec<f64> = (0..m).map(|e| e as f64).collect();
        let attrs = AttributionSet {
            method: Method::GradCam,
            seed: None,
            graphs: [(0, Attribution::Scores(EdgeScores::new(scores, Method::GradCam, ScoreMeta::default()).unwrap()))]
                .into_iter()
                .collect(),
        };
        let dot = graph_dot(&ds, &attrs, 0, 10, Mode::RoMie).unwrap();
        let kept = dot.matches("kept=true").count();
        assert_eq!(kept, (10 * m + 50) / 100);
        assert_eq!(dot.matches(" -- ").count(), m);
        assert_eq!(dot.matches("motif=true").count(), 5);
        assert!(matches!(graph_dot(&ds, &attrs, 1, 10, Mode::RoMie), Err(Error::Lookup(_))));
        assert!(matches!(graph_dot(&ds, &attrs, 5000, 10, Mode::RoMie), Err(Error::Lookup(_))));
    }
}
