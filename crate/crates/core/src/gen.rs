//! Instance generators: the tight extremal host/tree pairs, random hosts
//! under degree constraints, and exhaustive non-isomorphic tree enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::Tree;

/// Spider tree: three stars on `k` vertices joined through a new center.
/// Ids: center 0, star centers 1..=3, then the `k-1` outer leaves of each
/// star in order. `n = 3k + 1`, `m = 3k` edges.
pub fn spider_tree(k: usize) -> Tree {
    assert!(k >= 1);
    let mut edges = vec![(0, 1), (0, 2), (0, 3)];
    let mut next = 4;
    for center in 1..=3 {
        for _ in 0..k - 1 {
            edges.push((center, next));
            next += 1;
        }
    }
    Tree::new(3 * k + 1, edges).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalKind {
    TwinCliques,
    Bipartite,
}

/// A host/tree pair witnessing that the minimum-degree bound in the
/// conjecture cannot be lowered: the host has `min degree = floor(2m/3) - 1`
/// and `max degree >= m`, yet the spider tree does not embed.
#[derive(Clone, Debug, Serialize)]
pub struct ExtremalInstance {
    pub k: usize,
    pub kind: ExtremalKind,
    #[serde(skip)]
    pub tree: Tree,
    #[serde(skip)]
    pub host: Graph,
    pub tree_edges: usize,
    pub host_n: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub expected_embeddable: bool,
}

/// Builds the tight instances exactly:
/// * `TwinCliques`: two copies of `K_{2k-1}` plus a universal vertex,
/// * `Bipartite`: `K_{2k-2,2k-2}` plus a universal vertex,
///
/// each against the spider tree with `3k` edges.
pub fn gen_extremal(k: usize, kind: ExtremalKind) -> Result<ExtremalInstance> {
    let m = 3 * k;
    let host = match kind {
        ExtremalKind::TwinCliques => {
            if k < 2 {
                return Err(Error::invalid(format!(
                    "twin cliques need k >= 2 so that max degree 4k-2 = {} >= m = {m}",
                    4 * k.max(1) - 2
                )));
            }
            let block = 2 * k - 1;
            let n = 2 * block + 1;
            let mut edges = Vec::new();
            for base in [0, block] {
                for u in 0..block {
                    for v in u + 1..block {
                        edges.push((base + u, base + v));
                    }
                }
            }
            let universal = 2 * block;
            for v in 0..universal {
                edges.push((v, universal));
            }
            Graph::from_edges(n, &edges)?
        }
        ExtremalKind::Bipartite => {
            if k < 4 {
                return Err(Error::invalid(format!(
                    "bipartite host needs k >= 4 so that max degree 4k-4 = {} >= m = {m}",
                    4 * k.max(1) - 4
                )));
            }
            let side = 2 * k - 2;
            let n = 2 * side + 1;
            let mut edges = Vec::new();
            for u in 0..side {
                for v in 0..side {
                    edges.push((u, side + v));
                }
            }
            let universal = 2 * side;
            for v in 0..universal {
                edges.push((v, universal));
            }
            Graph::from_edges(n, &edges)?
        }
    };
    let tree = spider_tree(k);
    let min_degree = host.min_degree();
    let max_degree = host.max_degree();
    let expected_min = 2 * m / 3 - 1;
    if min_degree != expected_min || max_degree < m {
        return Err(Error::internal(format!(
            "extremal degrees off: min {min_degree} (want {expected_min}), max {max_degree} (want >= {m})"
        )));
    }
    Ok(ExtremalInstance {
        k,
        kind,
        tree_edges: tree.edge_count(),
        host_n: host.n(),
        min_degree,
        max_degree,
        tree,
        host,
        expected_embeddable: false,
    })
}

/// Rejection-samples a graph with `min degree >= delta_min` and
/// `max degree >= big_delta_min`; deterministic per seed.
pub fn gen_random_host(
    n: usize,
    delta_min: usize,
    big_delta_min: usize,
    seed: u64,
) -> Result<Graph> {
    if n == 0 || delta_min >= n || big_delta_min >= n {
        return Err(Error::invalid(format!(
            "degree constraints ({delta_min}, {big_delta_min}) unsatisfiable on {n} vertices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = ((big_delta_min as f64 + 1.0) / (n as f64 - 1.0)).clamp(0.3, 0.92);
    for _ in 0..10_000 {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, &edges)?;
        if g.min_degree() >= delta_min && g.max_degree() >= big_delta_min {
            return Ok(g);
        }
    }
    Err(Error::invalid(format!(
        "could not sample a graph with delta >= {delta_min}, Delta >= {big_delta_min} on {n} vertices"
    )))
}

/// Uniform-ish random tree from a random parent array; deterministic per rng.
pub fn random_tree(n: usize, rng: &mut impl Rng) -> Tree {
    assert!(n >= 1);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        edges.push((parent, v));
    }
    Tree::new(n, edges).unwrap()
}

/// Random tree whose vertices all have at most one leaf neighbor: grow a
/// spine and sprout occasional length-2 branches.
pub fn low_leaf_tree(n: usize, rng: &mut impl Rng) -> Tree {
    assert!(n >= 2);
    let mut edges = Vec::new();
    let mut spine = vec![0usize];
    let mut next = 1;
    while next < n {
        if rng.gen_bool(0.75) || n - next < 2 {
            edges.push((*spine.last().unwrap(), next));
            spine.push(next);
            next += 1;
        } else {
            let at = spine[rng.gen_range(0..spine.len())];
            edges.push((at, next));
            edges.push((next, next + 1));
            next += 2;
        }
    }
    Tree::new(n, edges).unwrap()
}

/// All non-isomorphic trees on `n` vertices, each in a canonical labeling.
///
/// Rooted shapes are enumerated recursively as multisets of child subtrees
/// (in canonically non-increasing order); free trees are deduplicated by a
/// centroid-rooted canonical form.
pub fn nonisomorphic_trees(n: usize) -> Vec<Tree> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![Tree::new(1, vec![]).unwrap()];
    }
    let shapes = rooted_shapes(n);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for shape in shapes {
        let tree = shape.to_tree();
        let key = free_canonical_form(&tree);
        if seen.insert(key) {
            out.push(tree);
        }
    }
    out
}

/// Rooted tree shape: canonical code plus size.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Shape {
    children: Vec<Shape>,
}

impl Shape {
    fn size(&self) -> usize {
        1 + self.children.iter().map(Shape::size).sum::<usize>()
    }

    fn to_tree(&self) -> Tree {
        let mut edges = Vec::new();
        let mut next = 1;
        let mut stack: Vec<(&Shape, usize)> = vec![(self, 0)];
        while let Some((shape, id)) = stack.pop() {
            for child in &shape.children {
                let cid = next;
                next += 1;
                edges.push((id, cid));
                stack.push((child, cid));
            }
        }
        Tree::new(self.size(), edges).unwrap()
    }
}

/// All canonical rooted shapes on `n` vertices (children in non-increasing
/// canonical order, deduplicated).
fn rooted_shapes(n: usize) -> Vec<Shape> {
    fn go(n: usize, memo: &mut Vec<Option<Vec<Shape>>>) -> Vec<Shape> {
        if let Some(cached) = &memo[n] {
            return cached.clone();
        }
        let out = if n == 1 {
            vec![Shape { children: vec![] }]
        } else {
            child_multisets(n - 1, n - 1, memo)
                .into_iter()
                .map(|children| Shape { children })
                .collect()
        };
        memo[n] = Some(out.clone());
        out
    }

    /// All canonical child multisets totaling `total`, each child of size at
    /// most `cap`, listed with sizes non-increasing and equal-size children
    /// in non-increasing shape order.
    fn child_multisets(
        total: usize,
        cap: usize,
        memo: &mut Vec<Option<Vec<Shape>>>,
    ) -> Vec<Vec<Shape>> {
        if total == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first_size in (1..=cap.min(total)).rev() {
            let firsts = go(first_size, memo);
            for rest in child_multisets(total - first_size, first_size, memo) {
                for first in &firsts {
                    if let Some(next) = rest.first() {
                        if next.size() == first_size && *first < *next {
                            continue;
                        }
                    }
                    let mut children = vec![first.clone()];
                    children.extend(rest.iter().cloned());
                    out.push(children);
                }
            }
        }
        out
    }

    let mut memo: Vec<Option<Vec<Shape>>> = vec![None; n + 1];
    go(n, &mut memo)
}

/// Canonical form of a free tree: canonical rooted code at the centroid
/// (smaller of the two codes for bicentroidal trees).
pub fn free_canonical_form(t: &Tree) -> String {
    fn code(t: &Tree, v: usize, parent: usize) -> String {
        let mut child_codes: Vec<String> = t
            .neighbors(v)
            .iter()
            .filter(|&&u| u != parent)
            .map(|&u| code(t, u, v))
            .collect();
        child_codes.sort();
        format!("({})", child_codes.join(""))
    }
    let sep = crate::tree::separator(t);
    let mut candidates = vec![sep.z];
    // a second centroid, when present, is adjacent to the first
    for &u in t.neighbors(sep.z) {
        let max_other = t
            .components_without(u)
            .first()
            .map(|c| c.len())
            .unwrap_or(0);
        let max_z = sep.components.first().map(|c| c.len()).unwrap_or(0);
        if max_other == max_z {
            candidates.push(u);
        }
    }
    candidates
        .into_iter()
        .map(|c| code(t, c, usize::MAX))
        .min()
        .unwrap()
}
