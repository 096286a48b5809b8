//! Host-graph data model: simple undirected graphs over dense vertex ids,
//! vertex sets, partial embeddings and the embedding validator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Ratio;
use crate::tree::Tree;

/// Simple undirected graph. Neighbor lists are sorted and duplicate-free,
/// adjacency is symmetric, and there are no loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(n: usize) -> Graph {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list. Self-loops are rejected; duplicate
    /// edges are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { adj })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    /// Canonical edge list: pairs with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n() {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn vertices(&self) -> std::ops::Range<usize> {
        0..self.n()
    }

    /// Smallest-id vertex of maximum degree.
    pub fn max_degree_vertex(&self) -> usize {
        let mut best = 0;
        for v in 1..self.n() {
            if self.degree(v) > self.degree(best) {
                best = v;
            }
        }
        best
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(|l| l.len()).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|l| l.len()).max().unwrap_or(0)
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3);
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    pub fn path_graph(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    /// Complete bipartite graph with sides `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..a {
            for v in 0..b {
                edges.push((u, a + v));
            }
        }
        Graph::from_edges(a + b, &edges).unwrap()
    }

    /// Odd girth included; `None` for forests.
    pub fn girth(&self) -> Option<usize> {
        let n = self.n();
        let mut best: Option<usize> = None;
        // BFS from every vertex; a non-tree edge at depths d1,d2 closes a
        // cycle of length d1+d2+1 through the root.
        for s in 0..n {
            let mut dist = vec![usize::MAX; n];
            let mut parent = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        parent[v] = u;
                        queue.push_back(v);
                    } else if parent[u] != v {
                        let len = dist[u] + dist[v] + 1;
                        if best.is_none_or(|b| len < b) {
                            best = Some(len);
                        }
                    }
                }
            }
        }
        best
    }

    /// Edge-list text: first line `n e`, then `e` lines `u v` (canonical
    /// `u < v` on output). Lines starting with `#` are comments.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("empty graph file"))?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse("bad graph header, expected 'n e'"))?;
        let e: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse("bad graph header, expected 'n e'"))?;
        let mut edges = Vec::with_capacity(e);
        for line in lines {
            let mut it = line.split_whitespace();
            let u: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(format!("bad edge line '{line}'")))?;
            let v: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(format!("bad edge line '{line}'")))?;
            edges.push((u, v));
        }
        if edges.len() != e {
            return Err(Error::parse(format!(
                "expected {e} edges, found {}",
                edges.len()
            )));
        }
        Graph::from_edges(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let edges = self.edges();
        let mut out = format!("{} {}\n", self.n(), edges.len());
        for (u, v) in edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Exact degree profile `(min, max, average)` with the average as `2|E|/n`.
/// The empty graph profiles as `(0, 0, 0)`.
pub fn degree_profile(g: &Graph) -> (usize, usize, Ratio) {
    if g.n() == 0 {
        return (0, 0, Ratio::from_integer(0));
    }
    let avg = Ratio::new(2 * g.edge_count() as i64, g.n() as i64);
    (g.min_degree(), g.max_degree(), avg)
}

/// Induced subgraph on `s`, plus the mapping from new ids to original ids
/// (new id `i` is `mapping[i]`).
pub fn induced_subgraph(g: &Graph, s: &VertexSet) -> Result<(Graph, Vec<usize>)> {
    s.validate_range(g.n())?;
    let mapping: Vec<usize> = s.iter().collect();
    let mut local = vec![usize::MAX; g.n()];
    for (i, &v) in mapping.iter().enumerate() {
        local[v] = i;
    }
    let mut edges = Vec::new();
    for (i, &v) in mapping.iter().enumerate() {
        for &w in g.neighbors(v) {
            if local[w] != usize::MAX && local[w] > i {
                edges.push((i, local[w]));
            }
        }
    }
    Ok((Graph::from_edges(mapping.len(), &edges)?, mapping))
}

/// Ordered, duplicate-free set of vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet {
    ids: Vec<usize>,
}

impl VertexSet {
    pub fn new() -> VertexSet {
        VertexSet::default()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_iter(iter: impl IntoIterator<Item = usize>) -> VertexSet {
        let mut ids: Vec<usize> = iter.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        VertexSet { ids }
    }

    pub fn full(n: usize) -> VertexSet {
        VertexSet {
            ids: (0..n).collect(),
        }
    }

    pub fn validate_range(&self, n: usize) -> Result<()> {
        if let Some(&max) = self.ids.last() {
            if max >= n {
                return Err(Error::invalid(format!("vertex {max} out of range (n={n})")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, v: usize) -> bool {
        self.ids.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.ids
    }

    pub fn insert(&mut self, v: usize) -> bool {
        match self.ids.binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.ids.insert(pos, v);
                true
            }
        }
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_iter(self.iter().chain(other.iter()))
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_iter(self.iter().filter(|&v| !other.contains(v)))
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_iter(self.iter().filter(|&v| other.contains(v)))
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| !other.contains(v))
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        VertexSet::from_iter(iter)
    }
}

/// Two disjoint sides of a bipartite subgraph of some reference graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartitePair {
    pub a: VertexSet,
    pub b: VertexSet,
}

impl BipartitePair {
    pub fn new(a: VertexSet, b: VertexSet) -> Result<BipartitePair> {
        if !a.is_disjoint(&b) {
            return Err(Error::invalid("bipartite sides intersect"));
        }
        Ok(BipartitePair { a, b })
    }

    /// Number of reference-graph edges crossing the sides.
    pub fn cross_edges(&self, g: &Graph) -> usize {
        self.a
            .iter()
            .map(|u| {
                g.neighbors(u)
                    .iter()
                    .filter(|&&v| self.b.contains(v))
                    .count()
            })
            .sum()
    }

    /// Minimum cross-degree over both sides (0 when a side is empty).
    pub fn min_cross_degree(&self, g: &Graph) -> usize {
        let deg = |u: usize, other: &VertexSet| {
            g.neighbors(u)
                .iter()
                .filter(|&&v| other.contains(v))
                .count()
        };
        let a_min = self.a.iter().map(|u| deg(u, &self.b)).min();
        let b_min = self.b.iter().map(|u| deg(u, &self.a)).min();
        match (a_min, b_min) {
            (Some(x), Some(y)) => x.min(y),
            _ => 0,
        }
    }

    pub fn vertices(&self) -> VertexSet {
        self.a.union(&self.b)
    }

    /// True if the induced cross-subgraph is connected.
    pub fn is_connected_in(&self, g: &Graph) -> bool {
        let verts: Vec<usize> = self.vertices().iter().collect();
        if verts.is_empty() {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![verts[0]];
        seen.insert(verts[0]);
        while let Some(u) = stack.pop() {
            let (own, other) = if self.a.contains(u) {
                (&self.a, &self.b)
            } else {
                (&self.b, &self.a)
            };
            let _ = own;
            for &w in g.neighbors(u) {
                if other.contains(w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == verts.len()
    }
}

/// Partial injective map from tree vertices to host vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    map: Vec<Option<usize>>,
}

impl Embedding {
    pub fn new(tree_n: usize) -> Embedding {
        Embedding {
            map: vec![None; tree_n],
        }
    }

    pub fn tree_n(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, tree_v: usize) -> Option<usize> {
        self.map[tree_v]
    }

    pub fn set(&mut self, tree_v: usize, host_v: usize) {
        self.map[tree_v] = Some(host_v);
    }

    pub fn unset(&mut self, tree_v: usize) {
        self.map[tree_v] = None;
    }

    pub fn is_set(&self, tree_v: usize) -> bool {
        self.map[tree_v].is_some()
    }

    pub fn assigned(&self) -> usize {
        self.map.iter().filter(|m| m.is_some()).count()
    }

    pub fn used_hosts(&self) -> impl Iterator<Item = usize> + '_ {
        self.map.iter().filter_map(|m| *m)
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.map
    }
}

/// Outcome of checking a (possibly partial) embedding.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Pairs of tree vertices sharing a host image.
    pub injectivity_violations: Vec<(usize, usize)>,
    /// Tree edges with both ends set whose images are not host edges.
    pub non_edges: Vec<(usize, usize)>,
    /// Tree vertices without an image.
    pub unset: Vec<usize>,
    /// Tree vertices mapped outside the host vertex range.
    pub out_of_range: Vec<usize>,
    /// True iff the map is a total injective homomorphism.
    pub complete_valid: bool,
}

/// Checks a partial embedding and reports every defect; never errors.
pub fn validate_embedding(t: &Tree, g: &Graph, f: &Embedding) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n_t = t.n().min(f.tree_n());
    if f.tree_n() != t.n() {
        // A wrong-length map can never be complete; record the missing tail.
        for v in f.tree_n()..t.n() {
            report.unset.push(v);
        }
    }
    let mut seen: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for v in 0..n_t {
        match f.get(v) {
            None => report.unset.push(v),
            Some(h) if h >= g.n() => report.out_of_range.push(v),
            Some(h) => {
                if let Some(&prev) = seen.get(&h) {
                    report.injectivity_violations.push((prev, v));
                } else {
                    seen.insert(h, v);
                }
            }
        }
    }
    for &(a, b) in t.edges() {
        if a >= n_t || b >= n_t {
            continue;
        }
        if let (Some(ha), Some(hb)) = (f.get(a), f.get(b)) {
            if ha < g.n() && hb < g.n() && !g.has_edge(ha, hb) {
                report.non_edges.push((a, b));
            }
        }
    }
    report.unset.sort_unstable();
    report.unset.dedup();
    report.complete_valid = report.injectivity_violations.is_empty()
        && report.non_edges.is_empty()
        && report.unset.is_empty()
        && report.out_of_range.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, 5 + i));
        }
        Graph::from_edges(10, &edges).unwrap()
    }

    /// Two disjoint triangles plus a universal vertex (n = 7).
    pub fn twin_triangles_universal() -> Graph {
        let mut edges = vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        for v in 0..6 {
            edges.push((v, 6));
        }
        Graph::from_edges(7, &edges).unwrap()
    }

    #[test]
    fn profile_complete_and_cycle() {
        assert_eq!(
            degree_profile(&Graph::complete(4)),
            (3, 3, Ratio::from_integer(3))
        );
        assert_eq!(
            degree_profile(&Graph::cycle(5)),
            (2, 2, Ratio::from_integer(2))
        );
        assert_eq!(
            degree_profile(&Graph::empty(0)),
            (0, 0, Ratio::from_integer(0))
        );
    }

    #[test]
    fn profile_twin_triangles() {
        // direct count: 6 triangle edges + 6 spokes = 12, average 24/7
        let g = twin_triangles_universal();
        assert_eq!(g.edge_count(), 12);
        assert_eq!(degree_profile(&g), (3, 6, ratio(24, 7)));
    }

    #[test]
    fn induced_examples() {
        let k5 = Graph::complete(5);
        let (h, map) = induced_subgraph(&k5, &VertexSet::from_iter([0, 2, 4])).unwrap();
        assert_eq!(h, Graph::complete(3));
        assert_eq!(map, vec![0, 2, 4]);

        let c6 = Graph::cycle(6);
        let (h, _) = induced_subgraph(&c6, &VertexSet::from_iter([0, 2, 4])).unwrap();
        assert_eq!(h.edge_count(), 0);
        assert_eq!(h.n(), 3);

        let (h, _) = induced_subgraph(&petersen(), &VertexSet::from_iter(0..5)).unwrap();
        assert_eq!(h, Graph::cycle(5));

        assert!(induced_subgraph(&c6, &VertexSet::from_iter([7])).is_err());
    }

    #[test]
    fn induced_preserves_adjacency() {
        let g = petersen();
        let s = VertexSet::from_iter([1, 3, 5, 6, 8]);
        let (h, map) = induced_subgraph(&g, &s).unwrap();
        for i in 0..h.n() {
            for j in 0..h.n() {
                if i != j {
                    assert_eq!(h.has_edge(i, j), g.has_edge(map[i], map[j]));
                }
            }
        }
    }

    #[test]
    fn validator_examples() {
        // path on 3 vertices into a triangle: any distinct assignment works
        let p3 = Tree::path(3);
        let k3 = Graph::complete(3);
        let mut f = Embedding::new(3);
        f.set(0, 0);
        f.set(1, 1);
        f.set(2, 2);
        assert!(validate_embedding(&p3, &k3, &f).complete_valid);

        let mut g = Embedding::new(3);
        g.set(0, 0);
        g.set(1, 1);
        g.set(2, 0);
        let rep = validate_embedding(&p3, &k3, &g);
        assert_eq!(rep.injectivity_violations, vec![(0, 2)]);
        assert!(!rep.complete_valid);

        // non-edge detection on a path host
        let host = Graph::path_graph(3);
        let mut h = Embedding::new(3);
        h.set(0, 0);
        h.set(1, 2);
        h.set(2, 1);
        let rep = validate_embedding(&p3, &host, &h);
        assert_eq!(rep.non_edges, vec![(0, 1)]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = twin_triangles_universal();
        let text = g.to_edge_list();
        let g2 = Graph::parse_edge_list(&text).unwrap();
        assert_eq!(g, g2);

        let with_comment = format!("# a host graph\n{text}");
        assert_eq!(Graph::parse_edge_list(&with_comment).unwrap(), g);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 5)]).is_err());
        // duplicate edges collapse
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn girth_values() {
        assert_eq!(Graph::cycle(9).girth(), Some(9));
        assert_eq!(Graph::complete(4).girth(), Some(3));
        assert_eq!(petersen().girth(), Some(5));
        assert_eq!(Graph::path_graph(5).girth(), None);
    }
}
