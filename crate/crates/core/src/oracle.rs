//! Exhaustive backtracking search for tree embeddings. A `None` verdict is a
//! proof of non-embeddability; the search is deterministic and budgeted.
//!
//! Pruning:
//! * a host candidate must have degree at least the tree vertex's degree,
//! * it must keep enough unused neighbors for the children still to come,
//! * among unused mutually-twin hosts (identical neighborhoods up to each
//!   other) only the smallest is tried, since swapping twins is a host
//!   automorphism fixing everything already placed.

use crate::graph::{Embedding, Graph};
use crate::tree::Tree;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Found(Embedding),
    None,
    BudgetExceeded,
}

impl OracleVerdict {
    pub fn is_found(&self) -> bool {
        matches!(self, OracleVerdict::Found(_))
    }
    pub fn is_none(&self) -> bool {
        matches!(self, OracleVerdict::None)
    }
}

/// Static twin classes: `u ~ v` iff `N(u) - {v} == N(v) - {u}`. Swapping two
/// unused twins is an automorphism, so exploring one representative suffices.
fn twin_classes(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut class = (0..n).collect::<Vec<_>>();
    for u in 0..n {
        for v in u + 1..n {
            if class[v] != v {
                continue;
            }
            let nu: Vec<usize> = g.neighbors(u).iter().copied().filter(|&x| x != v).collect();
            let nv: Vec<usize> = g.neighbors(v).iter().copied().filter(|&x| x != u).collect();
            if nu == nv {
                class[v] = class[u];
            }
        }
    }
    class
}

struct Search<'a> {
    t: &'a Tree,
    g: &'a Graph,
    order: Vec<usize>,
    parent_pos: Vec<usize>, // position of parent in `order`, usize::MAX for root
    pending_children: Vec<usize>,
    class: Vec<usize>,
    prune_twins: bool,
    budget: u64,
    nodes: u64,
}

enum SearchResult {
    Found,
    Exhausted,
    OutOfBudget,
}

impl<'a> Search<'a> {
    fn new(t: &'a Tree, g: &'a Graph, budget: u64, prune_twins: bool) -> Search<'a> {
        // root at a max-degree tree vertex; BFS keeps parents before children
        let root = (0..t.n())
            .max_by_key(|&v| (t.degree(v), usize::MAX - v))
            .unwrap_or(0);
        let rooted = t.rooted(root);
        let order = rooted.bfs_order.clone();
        let mut pos = vec![usize::MAX; t.n()];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let parent_pos = order
            .iter()
            .map(|&v| {
                let p = rooted.parent[v];
                if p == usize::MAX {
                    usize::MAX
                } else {
                    pos[p]
                }
            })
            .collect();
        let pending_children = order.iter().map(|&v| rooted.children[v].len()).collect();
        Search {
            t,
            g,
            order,
            parent_pos,
            pending_children,
            class: twin_classes(g),
            prune_twins,
            budget,
            nodes: 0,
        }
    }

    fn unused_neighbors(&self, h: usize, used: &[bool]) -> usize {
        self.g.neighbors(h).iter().filter(|&&x| !used[x]).count()
    }

    fn place(
        &mut self,
        depth: usize,
        f: &mut Vec<usize>,
        used: &mut Vec<bool>,
        emit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> SearchResult {
        if depth == self.order.len() {
            return if emit(f) {
                SearchResult::Found
            } else {
                SearchResult::Exhausted
            };
        }
        let v = self.order[depth];
        let needed_degree = self.t.degree(v);
        let candidates: Vec<usize> = if self.parent_pos[depth] == usize::MAX {
            (0..self.g.n()).collect()
        } else {
            let p_img = f[self.parent_pos[depth]];
            self.g.neighbors(p_img).to_vec()
        };
        let mut tried_classes: Vec<usize> = Vec::new();
        for h in candidates {
            if used[h] || self.g.degree(h) < needed_degree {
                continue;
            }
            if self.unused_neighbors(h, used) < self.pending_children[depth] {
                continue;
            }
            if self.prune_twins {
                let c = self.class[h];
                if tried_classes.contains(&c) {
                    continue;
                }
                tried_classes.push(c);
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return SearchResult::OutOfBudget;
            }
            used[h] = true;
            f.push(h);
            match self.place(depth + 1, f, used, emit) {
                SearchResult::Found => return SearchResult::Found,
                SearchResult::OutOfBudget => return SearchResult::OutOfBudget,
                SearchResult::Exhausted => {}
            }
            f.pop();
            used[h] = false;
        }
        SearchResult::Exhausted
    }

    fn to_embedding(&self, f: &[usize]) -> Embedding {
        let mut out = Embedding::new(self.t.n());
        for (i, &v) in self.order.iter().enumerate() {
            out.set(v, f[i]);
        }
        out
    }
}

/// Complete backtracking search; `None` proves no embedding exists, and the
/// budget (in search nodes) is never exceeded silently.
pub fn brute_force_embed(t: &Tree, g: &Graph, budget: u64) -> OracleVerdict {
    if t.n() > g.n() {
        return OracleVerdict::None;
    }
    let mut search = Search::new(t, g, budget, true);
    let mut found: Option<Vec<usize>> = None;
    let mut f = Vec::with_capacity(t.n());
    let mut used = vec![false; g.n()];
    let result = search.place(0, &mut f, &mut used, &mut |assignment| {
        found = Some(assignment.to_vec());
        true
    });
    match result {
        SearchResult::Found => OracleVerdict::Found(search.to_embedding(&found.unwrap())),
        SearchResult::Exhausted => OracleVerdict::None,
        SearchResult::OutOfBudget => OracleVerdict::BudgetExceeded,
    }
}

/// Search nodes spent by the last full verdict; exposed for reporting.
pub fn brute_force_embed_counted(t: &Tree, g: &Graph, budget: u64) -> (OracleVerdict, u64) {
    if t.n() > g.n() {
        return (OracleVerdict::None, 0);
    }
    let mut search = Search::new(t, g, budget, true);
    let mut found: Option<Vec<usize>> = None;
    let mut f = Vec::with_capacity(t.n());
    let mut used = vec![false; g.n()];
    let result = search.place(0, &mut f, &mut used, &mut |assignment| {
        found = Some(assignment.to_vec());
        true
    });
    let verdict = match result {
        SearchResult::Found => OracleVerdict::Found(search.to_embedding(&found.unwrap())),
        SearchResult::Exhausted => OracleVerdict::None,
        SearchResult::OutOfBudget => OracleVerdict::BudgetExceeded,
    };
    (verdict, search.nodes)
}

/// Enumerates every embedding (twin pruning off, so symmetric copies are
/// kept), up to `limit`. Intended for small cross-check instances.
pub fn enumerate_embeddings(t: &Tree, g: &Graph, limit: usize) -> Vec<Embedding> {
    if t.n() > g.n() || limit == 0 {
        return Vec::new();
    }
    let mut search = Search::new(t, g, u64::MAX, false);
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut f = Vec::with_capacity(t.n());
    let mut used = vec![false; g.n()];
    let _ = search.place(0, &mut f, &mut used, &mut |assignment| {
        out.push(assignment.to_vec());
        out.len() >= limit
    });
    out.iter().map(|f| search.to_embedding(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_extremal, spider_tree, ExtremalKind};
    use crate::graph::validate_embedding;

    #[test]
    fn finds_path_in_clique() {
        let verdict = brute_force_embed(&Tree::path(4), &Graph::complete(4), 1_000_000);
        match verdict {
            OracleVerdict::Found(f) => {
                assert!(validate_embedding(&Tree::path(4), &Graph::complete(4), &f).complete_valid)
            }
            other => panic!("expected embedding, got {other:?}"),
        }
    }

    #[test]
    fn star_into_cycle_is_impossible() {
        assert!(brute_force_embed(&Tree::star(4), &Graph::cycle(5), 1_000_000).is_none());
    }

    #[test]
    fn spider_into_twin_triangles_is_impossible() {
        let inst = gen_extremal(2, ExtremalKind::TwinCliques).unwrap();
        assert!(brute_force_embed(&inst.tree, &inst.host, 10_000_000).is_none());
    }

    #[test]
    fn spider_into_bipartite_extremal_is_impossible() {
        // 13 tree vertices into 13 host vertices; twin classes keep the
        // refutation to a few hundred nodes
        let inst = gen_extremal(4, ExtremalKind::Bipartite).unwrap();
        let (verdict, nodes) = brute_force_embed_counted(&inst.tree, &inst.host, 100_000_000);
        assert!(verdict.is_none());
        assert!(nodes < 100_000_000);
    }

    #[test]
    fn budget_is_reported() {
        let t = spider_tree(3);
        let g = Graph::complete(12);
        assert_eq!(brute_force_embed(&t, &g, 1), OracleVerdict::BudgetExceeded);
    }

    #[test]
    fn enumeration_matches_validator() {
        // every enumerated map validates; every validating map is enumerated
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let t = crate::gen::random_tree(4, &mut rng);
            let g = crate::gen::gen_random_host(5, 1, 2, 99).unwrap();
            let found = enumerate_embeddings(&t, &g, usize::MAX);
            for f in &found {
                assert!(validate_embedding(&t, &g, f).complete_valid);
            }
            let mut count = 0;
            let mut perm = vec![0usize; t.n()];
            let mut used = vec![false; g.n()];
            count_all(&t, &g, 0, &mut perm, &mut used, &mut count);
            assert_eq!(found.len(), count);
        }
    }

    fn count_all(
        t: &Tree,
        g: &Graph,
        v: usize,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        count: &mut usize,
    ) {
        if v == t.n() {
            *count += 1;
            return;
        }
        for h in 0..g.n() {
            if used[h] {
                continue;
            }
            let ok =
                t.neighbors(v)
                    .iter()
                    .all(|&u| if u < v { g.has_edge(perm[u], h) } else { true });
            if ok {
                used[h] = true;
                perm[v] = h;
                count_all(t, g, v + 1, perm, used, count);
                used[h] = false;
            }
        }
    }
}
