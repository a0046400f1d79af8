use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::graph::LineGraph;
use crate::LineId;

/// Relative float equality used for weight ties.
pub fn approx_eq(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Best route from one line to another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// `None` when source and destination coincide.
    pub next_hop: Option<LineId>,
    /// Sum of edge weights along the route.
    pub weight: f64,
    pub hops: u32,
    /// Product of truncated hop probabilities, for probability-weighted graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

/// All-pairs best routes. `routes[s][d]` is `None` when `d` is unreachable
/// from `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub lines: Vec<LineId>,
    pub routes: Vec<Vec<Option<Route>>>,
}

impl RoutingTable {
    pub fn index(&self, line: LineId) -> Option<usize> {
        self.lines.binary_search(&line).ok()
    }

    pub fn route(&self, from: LineId, to: LineId) -> Option<&Route> {
        self.routes[self.index(from)?][self.index(to)?].as_ref()
    }

    /// Remaining weight from `from` to `to`; `None` if unreachable or unknown.
    pub fn distance(&self, from: LineId, to: LineId) -> Option<f64> {
        self.route(from, to).map(|r| r.weight)
    }

    pub fn next_hop(&self, from: LineId, to: LineId) -> Option<LineId> {
        self.route(from, to).and_then(|r| r.next_hop)
    }

    /// Lines visited from `from` to `to`, both included.
    pub fn path(&self, from: LineId, to: LineId) -> Option<Vec<LineId>> {
        self.route(from, to)?;
        let mut out = vec![from];
        let mut cur = from;
        while cur != to {
            cur = self.next_hop(cur, to)?;
            out.push(cur);
        }
        Some(out)
    }

    pub fn reachable_pairs(&self) -> usize {
        self.routes
            .iter()
            .enumerate()
            .map(|(s, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(d, r)| *d != s && r.is_some())
                    .count()
            })
            .sum()
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest routes for every ordered pair. Ties on weight go to fewer hops,
/// then to the lowest next-hop line id at every step, which yields the
/// lexicographically smallest best path.
pub fn shortest_paths(graph: &LineGraph) -> RoutingTable {
    let n = graph.len();
    let mut reverse: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (u, row) in graph.edges.iter().enumerate() {
        for e in row {
            reverse[e.to].push((u, e.weight));
        }
    }
    let mut routes = vec![vec![None; n]; n];
    for d in 0..n {
        // distances to d, then hop counts and next hops in distance order
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut heap = BinaryHeap::new();
        dist[d] = 0.0;
        heap.push(Item(0.0, d));
        while let Some(Item(du, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            order.push(u);
            for &(v, w) in &reverse[u] {
                let nd = du + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Item(nd, v));
                }
            }
        }
        let mut hops = vec![u32::MAX; n];
        let mut next = vec![usize::MAX; n];
        hops[d] = 0;
        for &v in order.iter().skip(1) {
            for e in &graph.edges[v] {
                if hops[e.to] == u32::MAX || !approx_eq(e.weight + dist[e.to], dist[v]) {
                    continue;
                }
                let h = hops[e.to] + 1;
                // edges are sorted by target, so the first minimum is the lowest id
                if h < hops[v] {
                    hops[v] = h;
                    next[v] = e.to;
                }
            }
        }
        for &s in &order {
            routes[s][d] = Some(reconstruct(graph, s, d, &next));
        }
    }
    RoutingTable {
        lines: graph.lines.clone(),
        routes,
    }
}

fn reconstruct(graph: &LineGraph, s: usize, d: usize, next: &[usize]) -> Route {
    let mut weight = 0.0;
    let mut prob = Some(1.0);
    let mut hops = 0;
    let mut cur = s;
    while cur != d {
        let nx = next[cur];
        let e = graph.edge(cur, nx).expect("next hop is a neighbour");
        weight += e.weight;
        prob = prob.zip(e.p_tilde).map(|(p, t)| p * t.value());
        hops += 1;
        cur = nx;
    }
    Route {
        next_hop: (s != d).then(|| graph.lines[next[s]]),
        weight,
        hops,
        probability: prob,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encounter::{build_graph, EncounterMatrix};

    fn graph(tenths: Vec<Vec<u64>>) -> LineGraph {
        let n = tenths.len();
        build_graph(&EncounterMatrix::from_counts(
            (0..n as u32).map(LineId).collect(),
            vec![10; n],
            tenths,
        ))
    }

    #[test]
    fn triangle_prefers_two_strong_hops() {
        // A-B 0.9, B-C 0.9, A-C 0.1
        let g = graph(vec![vec![0, 9, 1], vec![9, 0, 9], vec![1, 9, 0]]);
        let t = shortest_paths(&g);
        assert_eq!(t.path(LineId(0), LineId(2)).unwrap(), vec![LineId(0), LineId(1), LineId(2)]);
        let r = t.route(LineId(0), LineId(2)).unwrap();
        assert!((r.probability.unwrap() - 0.81).abs() < 1e-12);
        assert!((r.probability.unwrap() - (-r.weight).exp()).abs() < 1e-9);
    }

    #[test]
    fn identity_route() {
        let g = graph(vec![vec![0, 5], vec![0, 0]]);
        let t = shortest_paths(&g);
        let r = t.route(LineId(0), LineId(0)).unwrap();
        assert_eq!((r.next_hop, r.weight, r.hops, r.probability), (None, 0.0, 0, Some(1.0)));
        assert!(t.route(LineId(1), LineId(0)).is_none());
        assert_eq!(t.reachable_pairs(), 1);
    }

    #[test]
    fn weight_ties_prefer_fewer_hops_then_lower_id() {
        // 0->3 direct at 0.1 ties nothing; 0->1->3 and 0->2->3 both 0.5*0.5
        let g = graph(vec![
            vec![0, 5, 5, 0],
            vec![0, 0, 0, 5],
            vec![0, 0, 0, 5],
            vec![0, 0, 0, 0],
        ]);
        let t = shortest_paths(&g);
        assert_eq!(t.next_hop(LineId(0), LineId(3)), Some(LineId(1)));
        // 0.4 direct vs 0.8 * 0.5 = 0.4 in two hops: direct wins on hops
        let g = graph(vec![vec![0, 8, 4], vec![0, 0, 5], vec![0, 0, 0]]);
        let t = shortest_paths(&g);
        assert_eq!(t.next_hop(LineId(0), LineId(2)), Some(LineId(2)));
    }
}
