use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::{EncounterMatrix, Tenths};
use crate::LineId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub to: usize,
    pub weight: f64,
    /// Truncated encounter probability for probability-weighted graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<Tenths>,
}

/// Directed graph over lines; node `i` is `lines[i]` and `edges[i]` is sorted
/// by target. All weights are positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGraph {
    pub lines: Vec<LineId>,
    pub edges: Vec<Vec<GraphEdge>>,
}

impl LineGraph {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn index(&self, line: LineId) -> Option<usize> {
        self.lines.binary_search(&line).ok()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&GraphEdge> {
        self.edges[from]
            .binary_search_by_key(&to, |e| e.to)
            .ok()
            .map(|k| &self.edges[from][k])
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Same edges, every weight 1: the minimum-hop metric.
    pub fn unit_weights(&self) -> LineGraph {
        LineGraph {
            lines: self.lines.clone(),
            edges: self
                .edges
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|e| GraphEdge {
                            to: e.to,
                            weight: 1.0,
                            p_tilde: None,
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Edge `i -> j` for every distinct pair with `p(i, j) > 0`, weighted
/// `ln(1 / p~(i, j))`.
pub fn build_graph(matrix: &EncounterMatrix) -> LineGraph {
    build_graph_with_base(matrix, std::f64::consts::E)
}

/// As [`build_graph`] with `log_base(1 / p~)` weights.
pub fn build_graph_with_base(matrix: &EncounterMatrix, base: f64) -> LineGraph {
    let n = matrix.len();
    let ln_base = base.ln();
    let edges = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .filter_map(|j| {
                    let t = matrix.truncated(i, j);
                    (!t.is_zero()).then(|| GraphEdge {
                        to: j,
                        weight: (10.0 / f64::from(t.get())).ln() / ln_base,
                        p_tilde: Some(t),
                    })
                })
                .collect()
        })
        .collect();
    LineGraph {
        lines: matrix.lines.clone(),
        edges,
    }
}

/// Symmetric graph weighted by the reciprocal of the total contact seconds
/// between two distinct lines. Pairs that never met get no edge.
pub fn contact_time_graph(
    lines: &[LineId],
    seconds: &BTreeMap<(LineId, LineId), u64>,
) -> LineGraph {
    let mut lines = lines.to_vec();
    lines.sort_unstable();
    lines.dedup();
    let mut edges: Vec<Vec<GraphEdge>> = vec![Vec::new(); lines.len()];
    for (&(a, b), &total) in seconds {
        if a == b || total == 0 {
            continue;
        }
        let (Ok(i), Ok(j)) = (lines.binary_search(&a), lines.binary_search(&b)) else {
            continue;
        };
        let weight = 1.0 / total as f64;
        edges[i].push(GraphEdge {
            to: j,
            weight,
            p_tilde: None,
        });
        edges[j].push(GraphEdge {
            to: i,
            weight,
            p_tilde: None,
        });
    }
    for row in &mut edges {
        row.sort_by_key(|e| e.to);
        row.dedup_by_key(|e| e.to);
    }
    LineGraph { lines, edges }
}
