//! JSON documents for graphs, ground truths and hierarchies.

use std::path::Path;

use mglasso_core::{EdgeRule, Graph, GroundTruth, Hierarchy, Partition};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::io::read_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub source: String,
    pub target: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub num_nodes: usize,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

impl GraphDoc {
    pub fn new(g: &Graph, names: &[String]) -> Self {
        let edges = g
            .edges()
            .into_iter()
            .map(|(i, j)| Edge {
                i,
                j,
                source: names[i].clone(),
                target: names[j].clone(),
                weight: g.weight(i, j),
            })
            .collect();
        GraphDoc {
            num_nodes: g.num_nodes(),
            nodes: names.to_vec(),
            edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedGraph {
    pub manifest: String,
    pub rule: String,
    pub tol: f64,
    #[serde(flatten)]
    pub graph: GraphDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthDoc {
    pub manifest: String,
    pub model: String,
    pub rho: Option<f64>,
    pub diagonal_shift: f64,
    /// Planted cluster of every variable.
    pub labels: Vec<usize>,
    /// Edges of the generated graph, which may include block-model edges
    /// without a precision entry.
    pub num_generated_edges: usize,
    /// Support of the precision matrix.
    #[serde(flatten)]
    pub graph: GraphDoc,
}

impl TruthDoc {
    pub fn new(truth: &GroundTruth, model: &str, names: &[String], manifest: &str) -> Self {
        TruthDoc {
            manifest: manifest.to_string(),
            model: model.to_string(),
            rho: truth.rho,
            diagonal_shift: truth.diagonal_shift,
            labels: truth.labels.labels().to_vec(),
            num_generated_edges: truth.adjacency.edge_count(),
            graph: GraphDoc::new(&truth.support(), names),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDoc {
    pub level: usize,
    pub lambda2: f64,
    pub num_clusters: usize,
    pub labels: Vec<usize>,
    pub clusters: Vec<Vec<String>>,
    pub converged: bool,
    /// `null` when the level's solve failed.
    pub duality_gap: Option<f64>,
    pub graph: GraphDoc,
    pub cluster_graph: GraphDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeDoc {
    pub lambda2: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyDoc {
    pub manifest: String,
    pub lambda1: f64,
    pub rule: String,
    pub tol: f64,
    pub variables: Vec<String>,
    pub levels: Vec<LevelDoc>,
    pub merges: Vec<MergeDoc>,
}

pub fn rule_name(rule: EdgeRule) -> &'static str {
    match rule {
        EdgeRule::And => "and",
        EdgeRule::Or => "or",
    }
}

impl HierarchyDoc {
    pub fn new(h: &Hierarchy, lambda1: f64, names: &[String], rule: EdgeRule, tol: f64, manifest: &str) -> Result<Self> {
        let mut levels = Vec::with_capacity(h.levels.len());
        for (k, level) in h.levels.iter().enumerate() {
            let part = &level.partition;
            let clusters: Vec<Vec<String>> = (0..part.num_clusters())
                .map(|c| part.members(c).into_iter().map(|i| names[i].clone()).collect())
                .collect();
            let cluster_names: Vec<String> = (0..part.num_clusters()).map(|c| format!("C{}", c + 1)).collect();
            let meta = mglasso_core::cluster_level_graph(&level.beta, part, rule, tol)?;
            levels.push(LevelDoc {
                level: k,
                lambda2: level.lambda2,
                num_clusters: part.num_clusters(),
                labels: part.labels().to_vec(),
                clusters,
                converged: level.converged,
                duality_gap: level.duality_gap.is_finite().then_some(level.duality_gap),
                graph: GraphDoc::new(&mglasso_core::graph_from_beta(&level.beta, rule, tol), names),
                cluster_graph: GraphDoc::new(&meta, &cluster_names),
            });
        }
        Ok(HierarchyDoc {
            manifest: manifest.to_string(),
            lambda1,
            rule: rule_name(rule).to_string(),
            tol,
            variables: names.to_vec(),
            levels,
            merges: h
                .merges
                .iter()
                .map(|m| MergeDoc {
                    lambda2: m.lambda2,
                    left: m.left,
                    right: m.right,
                })
                .collect(),
        })
    }
}

fn field<'a>(doc: &'a Value, key: &str, path: &Path) -> Result<&'a Value> {
    doc.get(key)
        .ok_or_else(|| CliError::data(path, format!("missing field \"{key}\"")))
}

/// Reads the graph of any document with `num_nodes` and `edges` fields.
pub fn read_graph(path: &Path) -> Result<Graph> {
    let doc = read_json(path)?;
    let n = field(&doc, "num_nodes", path)?
        .as_u64()
        .ok_or_else(|| CliError::data(path, "\"num_nodes\" must be a nonnegative integer"))? as usize;
    let edges = field(&doc, "edges", path)?
        .as_array()
        .ok_or_else(|| CliError::data(path, "\"edges\" must be an array"))?;
    let mut pairs = Vec::with_capacity(edges.len());
    for (k, e) in edges.iter().enumerate() {
        let idx = |key: &str| e.get(key).and_then(Value::as_u64).map(|v| v as usize);
        match (idx("i"), idx("j")) {
            (Some(i), Some(j)) => pairs.push((i, j)),
            _ => return Err(CliError::data(path, format!("edge {k} lacks integer \"i\" and \"j\""))),
        }
    }
    Graph::from_edges(n, &pairs).map_err(|e| CliError::data(path, e.to_string()))
}

/// Reads the `labels` array of a document.
/// Reads `labels` from a flat document. For a hierarchy, takes the level whose
/// cluster count is nearest `clusters` (the earlier level on ties).
pub fn read_partition(path: &Path, clusters: Option<usize>) -> Result<Partition> {
    let doc = read_json(path)?;
    let holder = match doc.get("levels") {
        Some(levels) => {
            let k = clusters.ok_or_else(|| CliError::Config(format!("{}: a hierarchy needs `clusters` to pick a level", path.display())))?;
            let levels = levels.as_array().ok_or_else(|| CliError::data(path, "\"levels\" is not an array"))?;
            levels
                .iter()
                .filter_map(|l| l.get("num_clusters").and_then(Value::as_u64).map(|c| (c.abs_diff(k as u64), l)))
                .min_by_key(|&(d, _)| d)
                .map(|(_, l)| l)
                .ok_or_else(|| CliError::data(path, "hierarchy has no levels"))?
        }
        None => &doc,
    };
    let labels: Vec<usize> = serde_json::from_value(field(holder, "labels", path)?.clone())
        .map_err(|e| CliError::data(path, format!("\"labels\": {e}")))?;
    if labels.is_empty() {
        return Err(CliError::data(path, "\"labels\" is empty"));
    }
    Ok(Partition::from_labels(&labels))
}
