//! Acyclic multigraph networks with a single source and unit-capacity links.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::FieldSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("network contains a directed cycle")]
    CycleDetected,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge {0} references a node index out of range")]
    InvalidEdge(usize),
    #[error("source node has {0} incoming link(s)")]
    SourceHasIncoming(usize),
    #[error("node `{0}` is the source")]
    SinkIsSource(String),
    #[error("rate must be positive")]
    ZeroRate,
}

/// Edge identifier. Real links are numbered `0..m` by list position; the `r`
/// imaginary links entering the source are `-1..=-r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub i64);

impl EdgeId {
    pub fn real(index: usize) -> Self {
        EdgeId(index as i64)
    }

    /// The `i`-th imaginary link, `i` in `0..r`.
    pub fn imaginary(i: usize) -> Self {
        EdgeId(-(i as i64) - 1)
    }

    pub fn is_imaginary(self) -> bool {
        self.0 < 0
    }

    pub fn real_index(self) -> Option<usize> {
        (self.0 >= 0).then_some(self.0 as usize)
    }

    pub fn imaginary_index(self) -> Option<usize> {
        (self.0 < 0).then_some((-self.0 - 1) as usize)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

#[derive(Debug, Clone)]
pub struct Network {
    field: FieldSpec,
    rate: usize,
    nodes: Vec<String>,
    edges: Vec<Edge>,
    source: usize,
    sinks: Vec<usize>,
    subrate_sinks: Vec<usize>,
    order: Vec<usize>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
}

/// Maximum set of edge-disjoint paths to one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowResult {
    pub value: usize,
    pub paths: Vec<Vec<EdgeId>>,
}

/// Topological order of `0..n` under `edges`; ties go to the lowest index.
pub fn topo_sort(n: usize, edges: &[Edge]) -> Result<Vec<usize>, NetError> {
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        if e.tail >= n || e.head >= n {
            return Err(NetError::InvalidEdge(i));
        }
        indeg[e.head] += 1;
        out[e.tail].push(e.head);
    }
    let mut heap: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(v);
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                heap.push(Reverse(w));
            }
        }
    }
    if order.len() != n {
        return Err(NetError::CycleDetected);
    }
    Ok(order)
}

impl Network {
    pub fn new(
        field: FieldSpec,
        rate: usize,
        nodes: Vec<String>,
        edges: Vec<Edge>,
        source: usize,
        sinks: Vec<usize>,
        subrate_sinks: Vec<usize>,
    ) -> Result<Self, NetError> {
        if rate == 0 {
            return Err(NetError::ZeroRate);
        }
        for (i, name) in nodes.iter().enumerate() {
            if nodes[..i].contains(name) {
                return Err(NetError::DuplicateNode(name.clone()));
            }
        }
        let n = nodes.len();
        if source >= n {
            return Err(NetError::UnknownNode(format!("#{source}")));
        }
        for &t in sinks.iter().chain(&subrate_sinks) {
            if t >= n {
                return Err(NetError::UnknownNode(format!("#{t}")));
            }
            if t == source {
                return Err(NetError::SinkIsSource(nodes[t].clone()));
            }
        }
        let order = topo_sort(n, &edges)?;
        let mut in_edges = vec![Vec::new(); n];
        let mut out_edges = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            in_edges[e.head].push(i);
            out_edges[e.tail].push(i);
        }
        if !in_edges[source].is_empty() {
            return Err(NetError::SourceHasIncoming(in_edges[source].len()));
        }
        Ok(Self {
            field,
            rate,
            nodes,
            edges,
            source,
            sinks,
            subrate_sinks,
            order,
            in_edges,
            out_edges,
        })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rate(&self) -> usize {
        self.rate
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Option<Edge> {
        match id.real_index() {
            Some(i) => self.edges.get(i).copied(),
            None => {
                let i = id.imaginary_index()?;
                (i < self.rate).then_some(Edge {
                    tail: usize::MAX,
                    head: self.source,
                })
            }
        }
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sinks(&self) -> &[usize] {
        &self.sinks
    }

    pub fn subrate_sinks(&self) -> &[usize] {
        &self.subrate_sinks
    }

    pub fn name(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    pub fn node_index(&self, name: &str) -> Result<usize, NetError> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| NetError::UnknownNode(name.to_string()))
    }

    /// Nodes in upstream-to-downstream order.
    pub fn topo_order(&self) -> &[usize] {
        &self.order
    }

    pub fn imaginary_links(&self) -> Vec<EdgeId> {
        (0..self.rate).map(EdgeId::imaginary).collect()
    }

    /// Incoming links of `x`, ascending by id. The source's inputs are the
    /// imaginary links, in link order `-1, -2, ...`.
    pub fn incoming(&self, x: usize) -> Vec<EdgeId> {
        if x == self.source {
            self.imaginary_links()
        } else {
            self.in_edges[x].iter().map(|&i| EdgeId::real(i)).collect()
        }
    }

    pub fn outgoing(&self, x: usize) -> Vec<EdgeId> {
        self.out_edges[x].iter().map(|&i| EdgeId::real(i)).collect()
    }

    /// Max-flow `h_t` from the source to `t`, with the paths realizing it.
    pub fn max_flow(&self, t: usize) -> Result<FlowResult, NetError> {
        if t >= self.nodes.len() {
            return Err(NetError::UnknownNode(format!("#{t}")));
        }
        if t == self.source {
            return Err(NetError::SinkIsSource(self.nodes[t].clone()));
        }
        let arcs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.tail, e.head)).collect();
        let paths = unit_flow_paths(self.nodes.len(), &arcs, self.source, t);
        let paths: Vec<Vec<EdgeId>> = paths
            .into_iter()
            .map(|p| p.into_iter().map(EdgeId::real).collect())
            .collect();
        Ok(FlowResult {
            value: paths.len(),
            paths,
        })
    }

    /// Edge-disjoint paths from the imaginary source to `t`; each starts with
    /// an imaginary link. There are `min(h_t, r)` of them.
    pub fn paths_from_imaginary_source(&self, t: usize) -> Result<Vec<Vec<EdgeId>>, NetError> {
        if t == self.source {
            return Err(NetError::SinkIsSource(self.nodes[t].clone()));
        }
        let n = self.nodes.len();
        let m = self.edges.len();
        let mut arcs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.tail, e.head)).collect();
        arcs.extend((0..self.rate).map(|_| (n, self.source)));
        let paths = unit_flow_paths(n + 1, &arcs, n, t);
        Ok(paths
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .map(|a| {
                        if a < m {
                            EdgeId::real(a)
                        } else {
                            EdgeId::imaginary(a - m)
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

/// Unit-capacity max-flow by shortest augmenting paths, decomposed into
/// edge-disjoint arc paths from `s` to `t`.
fn unit_flow_paths(n: usize, arcs: &[(usize, usize)], s: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut inc: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &(a, b)) in arcs.iter().enumerate() {
        out[a].push(i);
        inc[b].push(i);
    }
    let mut flow = vec![false; arcs.len()];
    loop {
        // BFS over the residual graph; parent records (arc, forward?)
        let mut parent: Vec<Option<(usize, bool)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            if v == t {
                break;
            }
            for &a in &out[v] {
                let w = arcs[a].1;
                if !flow[a] && !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((a, true));
                    queue.push_back(w);
                }
            }
            for &a in &inc[v] {
                let w = arcs[a].0;
                if flow[a] && !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((a, false));
                    queue.push_back(w);
                }
            }
        }
        if !seen[t] || s == t {
            break;
        }
        let mut v = t;
        while v != s {
            let (a, fwd) = parent[v].expect("on the BFS tree");
            flow[a] = fwd;
            v = if fwd { arcs[a].0 } else { arcs[a].1 };
        }
    }
    // decompose; the graph is acyclic so every walk from s reaches t
    let mut used = vec![false; arcs.len()];
    let mut paths = Vec::new();
    loop {
        let mut path = Vec::new();
        let mut v = s;
        while v != t {
            let Some(&a) = out[v].iter().find(|&&a| flow[a] && !used[a]) else {
                break;
            };
            used[a] = true;
            path.push(a);
            v = arcs[a].1;
        }
        if path.is_empty() {
            break;
        }
        debug_assert_eq!(v, t);
        paths.push(path);
    }
    paths
}


#[cfg(test)]
mod tests {
    use super::fixtures::butterfly;
    use super::*;

    fn check_paths(net: &Network, t: usize, fr: &FlowResult) {
        let mut used = std::collections::HashSet::new();
        for p in &fr.paths {
            let mut at = net.source();
            for &e in p {
                assert!(used.insert(e), "edge {e} reused");
                let edge = net.edge(e).unwrap();
                assert_eq!(edge.tail, at);
                at = edge.head;
            }
            assert_eq!(at, t);
        }
    }

    #[test]
    fn butterfly_order() {
        let net = butterfly(2, false);
        let order = net.topo_order();
        assert_eq!(order[0], 0);
        assert_eq!(&order[5..], &[5, 6]);
    }

    #[test]
    fn trivial_and_cyclic() {
        assert_eq!(topo_sort(1, &[]).unwrap(), vec![0]);
        let cyc = [Edge { tail: 0, head: 1 }, Edge { tail: 1, head: 0 }];
        assert_eq!(topo_sort(2, &cyc), Err(NetError::CycleDetected));
        let f = FieldSpec::new(2).unwrap();
        let r = Network::new(
            f,
            1,
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                Edge { tail: 0, head: 1 },
                Edge { tail: 1, head: 2 },
                Edge { tail: 2, head: 1 },
            ],
            0,
            vec![2],
            vec![],
        );
        assert_eq!(r.unwrap_err(), NetError::CycleDetected);
    }

    #[test]
    fn butterfly_flows() {
        let net = butterfly(3, true);
        for (t, h) in [(5, 2), (6, 2), (7, 1), (3, 2), (1, 1)] {
            let fr = net.max_flow(t).unwrap();
            assert_eq!(fr.value, h, "node {}", net.name(t));
            check_paths(&net, t, &fr);
        }
    }

    #[test]
    fn parallel_edges_and_unreachable() {
        let f = FieldSpec::new(5).unwrap();
        let e = |a, b| Edge { tail: a, head: b };
        let net = Network::new(
            f,
            3,
            vec!["s".into(), "t".into(), "x".into()],
            vec![e(0, 1), e(0, 1), e(0, 1)],
            0,
            vec![1, 2],
            vec![],
        )
        .unwrap();
        assert_eq!(net.max_flow(1).unwrap().value, 3);
        assert_eq!(
            net.max_flow(2).unwrap(),
            FlowResult {
                value: 0,
                paths: vec![]
            }
        );
        assert_eq!(
            net.max_flow(0).unwrap_err(),
            NetError::SinkIsSource("s".into())
        );
    }

    #[test]
    fn imaginary_paths_are_capped_by_rate() {
        let net = butterfly(3, true);
        let paths = net.paths_from_imaginary_source(5).unwrap();
        assert_eq!(paths.len(), 2);
        for p in &paths {
            assert!(p[0].is_imaginary());
            assert!(p[1..].iter().all(|e| !e.is_imaginary()));
        }
        assert_eq!(net.paths_from_imaginary_source(7).unwrap().len(), 1);
    }

    #[test]
    fn source_with_inputs_is_rejected() {
        let f = FieldSpec::new(2).unwrap();
        let r = Network::new(
            f,
            1,
            vec!["a".into(), "b".into()],
            vec![Edge { tail: 1, head: 0 }],
            0,
            vec![1],
            vec![],
        );
        assert_eq!(r.unwrap_err(), NetError::SourceHasIncoming(1));
    }
}
