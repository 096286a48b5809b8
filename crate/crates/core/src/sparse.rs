//! The locally-sparse branch: certifying that no small subgraph is dense,
//! absorbing low-degree vertices into a blocker set, and the sparse
//! embedding built on both.

use serde::Serialize;

use crate::embed::{
    greedy_embed, AnchorConstraint, EmbedOutcome, Occupancy, Preference, StuckEvidence, Traversal,
};
use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, Embedding, Graph, VertexSet};
use crate::num::{ratio_string, Ratio};
use crate::tree::{separator, Tree};

pub const EXACT_SPARSITY_CAP: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exact,
    Peeling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityVerdict {
    /// Certified: no subgraph on at most `m+1` vertices has average degree
    /// above the ratio.
    Sparse,
    /// A dense witness was found.
    NotSparse,
    /// Peeling found no witness; sparsity is not certified.
    UnknownSparse,
}

#[derive(Clone, Debug, Serialize)]
pub struct SparsityReport {
    pub verdict: SparsityVerdict,
    pub is_sparse: bool,
    pub witness: Option<VertexSet>,
    pub witness_avg_degree: Option<String>,
    pub search_mode: SearchMode,
}

/// Walks all connected induced subgraphs with at most `max_size` vertices.
/// Each subset is visited exactly once; the visitor receives the subset
/// (ascending) and its induced edge count, and returns `true` to stop.
/// `bound_hint` lets the walk prune branches that cannot beat it: a branch
/// is cut when even completing the current subset to a clique of the best
/// remaining size stays at or below the hint.
pub(crate) fn walk_connected_subsets(
    g: &Graph,
    max_size: usize,
    mut prune_below: Option<Ratio>,
    visit: &mut dyn FnMut(&[usize], usize) -> bool,
) -> bool {
    let n = g.n();
    let mut in_set = vec![false; n];
    let mut banned = vec![false; n];

    fn upper_bound(edges: usize, size: usize, max_size: usize) -> Ratio {
        // completing to a clique on j >= size vertices maximizes 2e/j
        let mut best = Ratio::new(2 * edges as i64, size as i64);
        for j in size + 1..=max_size {
            let extra = (j * (j - 1) - size * (size - 1)) / 2;
            let cand = Ratio::new(2 * (edges + extra) as i64, j as i64);
            if cand > best {
                best = cand;
            }
        }
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(
        g: &Graph,
        subset: &mut Vec<usize>,
        edges: usize,
        frontier: &[usize],
        in_set: &mut Vec<bool>,
        banned: &mut Vec<bool>,
        max_size: usize,
        prune_below: &mut Option<Ratio>,
        visit: &mut dyn FnMut(&[usize], usize) -> bool,
    ) -> bool {
        let mut sorted = subset.clone();
        sorted.sort_unstable();
        if visit(&sorted, edges) {
            return true;
        }
        if subset.len() == max_size {
            return false;
        }
        if let Some(bound) = prune_below {
            if upper_bound(edges, subset.len(), max_size) <= *bound {
                return false;
            }
        }
        for (idx, &u) in frontier.iter().enumerate() {
            if in_set[u] || banned[u] {
                continue;
            }
            let added_edges = g.neighbors(u).iter().filter(|&&w| in_set[w]).count();
            in_set[u] = true;
            subset.push(u);
            // new frontier: remaining candidates plus u's outside neighbors
            let mut next: Vec<usize> = frontier[idx + 1..]
                .iter()
                .copied()
                .filter(|&w| !in_set[w] && !banned[w])
                .collect();
            for &w in g.neighbors(u) {
                if !in_set[w] && !banned[w] && !next.contains(&w) {
                    next.push(w);
                }
            }
            next.sort_unstable();
            if extend(
                g,
                subset,
                edges + added_edges,
                &next,
                in_set,
                banned,
                max_size,
                prune_below,
                visit,
            ) {
                return true;
            }
            subset.pop();
            in_set[u] = false;
            banned[u] = true; // exclude u from the rest of this branch
        }
        for &u in frontier {
            if banned[u] && !in_set[u] {
                banned[u] = false;
            }
        }
        false
    }

    for v in 0..n {
        // subsets whose minimum vertex is v use vertices >= v only
        for (w, slot) in banned.iter_mut().enumerate() {
            *slot = w < v;
        }
        in_set[v] = true;
        let frontier: Vec<usize> = g.neighbors(v).iter().copied().filter(|&w| w > v).collect();
        let stop = extend(
            g,
            &mut vec![v],
            0,
            &frontier,
            &mut in_set,
            &mut banned,
            max_size,
            &mut prune_below,
            visit,
        );
        in_set[v] = false;
        if stop {
            return true;
        }
    }
    false
}

/// Decides whether `g` has no subgraph on at most `m+1` vertices with
/// average degree above `m * sparsity_ratio` (ratio defaults to 1/25).
///
/// Exact mode enumerates connected subsets and is capped at
/// [`EXACT_SPARSITY_CAP`] vertices. Peeling mode is one-sided: any witness
/// it returns is sound, but "no witness" is only `UnknownSparse`.
pub fn is_locally_sparse(
    g: &Graph,
    m: usize,
    sparsity_ratio: Ratio,
    mode: SearchMode,
) -> Result<SparsityReport> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let threshold = Ratio::from_integer(m as i64) * sparsity_ratio;
    let bound = (m + 1).min(g.n().max(1));
    let witness = match mode {
        SearchMode::Exact => {
            if g.n() > EXACT_SPARSITY_CAP {
                return Err(Error::size(format!(
                    "exact sparsity search needs n <= {EXACT_SPARSITY_CAP}, got {}",
                    g.n()
                )));
            }
            let mut found: Option<(Vec<usize>, usize)> = None;
            walk_connected_subsets(g, bound, None, &mut |subset, edges| {
                let avg = Ratio::new(2 * edges as i64, subset.len() as i64);
                if avg > threshold {
                    found = Some((subset.to_vec(), edges));
                    true
                } else {
                    false
                }
            });
            found
        }
        SearchMode::Peeling => peel_witness(g, bound, threshold),
    };
    Ok(match witness {
        Some((subset, edges)) => {
            let avg = Ratio::new(2 * edges as i64, subset.len() as i64);
            SparsityReport {
                verdict: SparsityVerdict::NotSparse,
                is_sparse: false,
                witness: Some(VertexSet::from_iter(subset)),
                witness_avg_degree: Some(ratio_string(avg)),
                search_mode: mode,
            }
        }
        None => SparsityReport {
            verdict: if mode == SearchMode::Exact {
                SparsityVerdict::Sparse
            } else {
                SparsityVerdict::UnknownSparse
            },
            is_sparse: mode == SearchMode::Exact,
            witness: None,
            witness_avg_degree: None,
            search_mode: mode,
        },
    })
}

/// Min-degree peeling; checks every suffix of the peel order that fits the
/// size bound and returns the first window above the threshold.
fn peel_witness(g: &Graph, bound: usize, threshold: Ratio) -> Option<(Vec<usize>, usize)> {
    let n = g.n();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut edges = g.edge_count();
    let mut remaining = n;
    loop {
        if remaining == 0 {
            return None;
        }
        if remaining <= bound {
            let avg = Ratio::new(2 * edges as i64, remaining as i64);
            if avg > threshold {
                let subset: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
                return Some((subset, edges));
            }
        }
        // remove the smallest-id vertex of minimum degree
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (degree[v], v))?;
        alive[v] = false;
        remaining -= 1;
        for &w in g.neighbors(v) {
            if alive[w] {
                degree[w] -= 1;
                edges -= 1;
            }
        }
    }
}

/// The absorbed set, or a dense certificate when absorption overruns its
/// budget.
#[derive(Clone, Debug, Serialize)]
pub enum BlockerOutcome {
    Expanded {
        s_prime: VertexSet,
    },
    Failed {
        absorbed: VertexSet,
        /// Edges induced by `S ∪ absorbed`.
        edges_inside: usize,
        /// Edge count the dense certificate demands: `(9m/20) * |absorbed|`.
        threshold: String,
        meets_threshold: bool,
    },
}

/// Iteratively absorbs vertices with remaining degree below `m/2` into `S`.
/// Succeeds when the absorption stops within `|S| + m/20` vertices; returns
/// the dense evidence otherwise.
pub fn expand_blocker_set(g: &Graph, s: &VertexSet, m: usize) -> Result<BlockerOutcome> {
    s.validate_range(g.n())?;
    let budget = s.len() + m / 20;
    let mut in_s: Vec<bool> = (0..g.n()).map(|v| s.contains(v)).collect();
    let mut degree: Vec<usize> = (0..g.n())
        .map(|v| g.neighbors(v).iter().filter(|&&w| !in_s[w]).count())
        .collect();
    let mut absorbed: Vec<usize> = Vec::new();
    let mut size = s.len();
    loop {
        let candidate = (0..g.n()).filter(|&v| !in_s[v] && 2 * degree[v] < m).min();
        let Some(v) = candidate else {
            return Ok(BlockerOutcome::Expanded {
                s_prime: VertexSet::from_iter((0..g.n()).filter(|&v| in_s[v])),
            });
        };
        in_s[v] = true;
        size += 1;
        absorbed.push(v);
        for &w in g.neighbors(v) {
            if !in_s[w] {
                degree[w] -= 1;
            }
        }
        if size > budget {
            // count edges induced by S plus everything absorbed
            let union = VertexSet::from_iter(s.iter().chain(absorbed.iter().copied()));
            let (h, _) = induced_subgraph(g, &union)?;
            let edges_inside = h.edge_count();
            let threshold =
                Ratio::new(9 * m as i64, 20) * Ratio::from_integer(absorbed.len() as i64);
            let meets = Ratio::from_integer(edges_inside as i64) > threshold;
            return Ok(BlockerOutcome::Failed {
                absorbed: VertexSet::from_iter(absorbed),
                edges_inside,
                threshold: ratio_string(threshold),
                meets_threshold: meets,
            });
        }
    }
}

/// Embedding into a locally sparse host pinning the tree separator on `w`:
/// defer a mid-sized forest `F` of components, reserve a neighborhood `N` of
/// `w`, grow a blocker set around it, embed the rest soft-avoiding the
/// blocker set, then finish `F` greedily.
pub fn embed_sparse(t: &Tree, g: &Graph, w: usize, m: usize) -> Result<EmbedOutcome> {
    if w >= g.n() {
        return Err(Error::invalid(format!("host vertex {w} out of range")));
    }
    if t.edge_count() > m {
        return Err(Error::invalid(format!(
            "tree has {} edges, above m = {m}",
            t.edge_count()
        )));
    }
    let mut warnings = Vec::new();
    if 20 * g.min_degree() < 19 * m {
        warnings.push(format!(
            "host min degree {} below 19m/20 = {}",
            g.min_degree(),
            Ratio::new(19 * m as i64, 20)
        ));
    }
    let (_, max_leaf_children, _) = crate::tree::leaf_profile(t).unwrap_or((0, 0, 0));
    if 20 * max_leaf_children > m {
        warnings.push(format!(
            "a vertex has {max_leaf_children} leaf children, above m/20"
        ));
    }

    let sep = separator(t);
    let z = sep.z;

    // forest F: components totalling between floor(m/4) and floor(m/2),
    // packed largest-first, skipping components that would overflow
    let lo = m / 4;
    let hi = m / 2;
    let mut f_comps: Vec<Vec<usize>> = Vec::new();
    let mut f_size = 0;
    for comp in &sep.components {
        if f_size >= lo.max(1) {
            break;
        }
        if f_size + comp.len() <= hi {
            f_size += comp.len();
            f_comps.push(comp.clone());
        }
    }
    if f_size < lo.max(1) {
        // tree too small for the split; plain greedy with the pin
        let mut out = greedy_embed(t, g, &AnchorConstraint::pin(z, w), Traversal::Bfs)?;
        out.warnings.extend(warnings);
        out.warn("no qualifying deferred forest; fell back to greedy");
        return Ok(out);
    }
    let in_forest: Vec<bool> = {
        let mut mark = vec![false; t.n()];
        for comp in &f_comps {
            for &v in comp {
                mark[v] = true;
            }
        }
        mark
    };

    // N: a fixed chunk of w's neighborhood; S: up to ceil(2m/3) of N + w
    let n_size = (19 * (m + 1)).div_ceil(20);
    let n_set: VertexSet = g.neighbors(w).iter().copied().take(n_size).collect();
    if n_set.len() < n_size {
        warnings.push(format!(
            "w has degree {}, below the reserved neighborhood size {n_size}",
            g.degree(w)
        ));
    }
    let s_target = (2 * m).div_ceil(3);
    let s_set: VertexSet = std::iter::once(w)
        .chain(n_set.iter())
        .take(s_target.max(1))
        .collect();
    let s_prime = match expand_blocker_set(g, &s_set, m)? {
        BlockerOutcome::Expanded { s_prime } => s_prime,
        BlockerOutcome::Failed { absorbed, .. } => {
            warnings.push(format!(
                "blocker absorption overran its budget after {} vertices",
                absorbed.len()
            ));
            s_set.union(&absorbed)
        }
    };

    // embed z at w, roots of non-deferred components into N - S' while
    // possible, everything soft-avoiding S'
    let rooted = t.rooted(z);
    let mut f = Embedding::new(t.n());
    let mut occ = Occupancy::new(g.n());
    f.set(z, w);
    occ.take(w);

    let n_minus_sp = n_set.difference(&s_prime);
    let place_component = |comp: &[usize],
                           root_pref: Option<&VertexSet>,
                           f: &mut Embedding,
                           occ: &mut Occupancy|
     -> Option<StuckEvidence> {
        // component vertices in BFS order from the root adjacent to z
        let root = *comp
            .iter()
            .find(|&&v| rooted.parent[v] == z)
            .expect("component hangs off z");
        let mut order = vec![root];
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &c in &rooted.children[u] {
                if comp.contains(&c) {
                    order.push(c);
                    queue.push_back(c);
                }
            }
        }
        for &v in &order {
            let p_img = f.get(rooted.parent[v]).expect("parent placed first");
            let candidates = g.neighbors(p_img);
            let pick = if v == root {
                root_pref
                    .and_then(|pref| {
                        candidates
                            .iter()
                            .copied()
                            .find(|&h| !occ.is_used(h) && pref.contains(h))
                    })
                    .or_else(|| {
                        crate::embed::choose_host(
                            candidates,
                            occ,
                            None,
                            Some(&(s_prime.clone(), Preference::Avoid)),
                        )
                    })
            } else {
                crate::embed::choose_host(
                    candidates,
                    occ,
                    None,
                    Some(&(s_prime.clone(), Preference::Avoid)),
                )
            };
            match pick {
                Some(h) => {
                    occ.take(h);
                    f.set(v, h);
                }
                None => {
                    return Some(StuckEvidence {
                        vertex: v,
                        parent: Some(rooted.parent[v]),
                        parent_image: Some(p_img),
                        saturated: g
                            .neighbors(p_img)
                            .iter()
                            .copied()
                            .filter(|&h| occ.is_used(h))
                            .collect(),
                    })
                }
            }
        }
        None
    };

    // non-deferred components first (roots preferring N - S'), then F
    for comp in sep.components.iter().filter(|c| !in_forest[c[0]]) {
        if let Some(evidence) = place_component(comp, Some(&n_minus_sp), &mut f, &mut occ) {
            let mut out = EmbedOutcome::stuck(f, evidence);
            out.warnings = warnings;
            return Ok(out);
        }
    }
    for comp in &f_comps {
        if let Some(evidence) = place_component(comp, None, &mut f, &mut occ) {
            let mut out = EmbedOutcome::stuck(f, evidence);
            out.warnings = warnings;
            return Ok(out);
        }
    }
    let mut out = EmbedOutcome::success(f);
    out.warnings = warnings;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_embedding;
    use crate::num::ratio;

    #[test]
    fn sparse_examples() {
        // a clique is never sparse
        let rep =
            is_locally_sparse(&Graph::complete(6), 50, ratio(1, 25), SearchMode::Exact).unwrap();
        assert_eq!(rep.verdict, SparsityVerdict::NotSparse);
        let witness = rep.witness.unwrap();
        let (h, _) = induced_subgraph(&Graph::complete(6), &witness).unwrap();
        assert!(Ratio::new(2 * h.edge_count() as i64, h.n() as i64) > Ratio::new(2, 1));
        assert!(witness.len() <= 51);

        // long cycles are locally sparse for large m: every small subgraph
        // is a union of paths with average degree below 2 = m/25
        let rep =
            is_locally_sparse(&Graph::cycle(60), 50, ratio(1, 25), SearchMode::Peeling).unwrap();
        assert_eq!(rep.verdict, SparsityVerdict::UnknownSparse);
        assert!(rep.witness.is_none());

        let rep = is_locally_sparse(&Graph::empty(8), 10, ratio(1, 25), SearchMode::Exact).unwrap();
        assert_eq!(rep.verdict, SparsityVerdict::Sparse);

        assert!(is_locally_sparse(&Graph::cycle(30), 5, ratio(1, 25), SearchMode::Exact).is_err());
    }

    #[test]
    fn exact_agrees_with_subset_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for round in 0..1000 {
            let n = rng.gen_range(3..=12);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.35) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::from_edges(n, &edges).unwrap();
            let m = rng.gen_range(1..=40);
            let report = is_locally_sparse(&g, m, ratio(1, 25), SearchMode::Exact).unwrap();
            // full bitmask enumeration as the oracle
            let threshold = Ratio::new(m as i64, 25);
            let bound = (m + 1).min(n);
            let mut any = false;
            for mask in 1u32..(1 << n) {
                let subset: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                if subset.len() > bound {
                    continue;
                }
                let edges_in = subset
                    .iter()
                    .flat_map(|&u| subset.iter().map(move |&v| (u, v)))
                    .filter(|&(u, v)| u < v && g.has_edge(u, v))
                    .count();
                if Ratio::new(2 * edges_in as i64, subset.len() as i64) > threshold {
                    any = true;
                    break;
                }
            }
            assert_eq!(
                report.verdict == SparsityVerdict::NotSparse,
                any,
                "round {round}"
            );
            if let Some(w) = &report.witness {
                let (h, _) = induced_subgraph(&g, w).unwrap();
                assert!(w.len() <= bound);
                assert!(Ratio::new(2 * h.edge_count() as i64, h.n() as i64) > threshold);
            }
        }
    }

    #[test]
    fn peeling_witnesses_are_sound() {
        let mut g_edges = Vec::new();
        // sparse ring with a planted K6 on vertices 0..6
        for u in 0..6 {
            for v in u + 1..6 {
                g_edges.push((u, v));
            }
        }
        for i in 6..40 {
            g_edges.push((i, if i == 39 { 6 } else { i + 1 }));
        }
        g_edges.push((0, 20));
        let g = Graph::from_edges(40, &g_edges).unwrap();
        let rep = is_locally_sparse(&g, 50, ratio(1, 25), SearchMode::Peeling).unwrap();
        assert_eq!(rep.verdict, SparsityVerdict::NotSparse);
        let w = rep.witness.unwrap();
        let (h, _) = induced_subgraph(&g, &w).unwrap();
        assert!(Ratio::new(2 * h.edge_count() as i64, h.n() as i64) > Ratio::new(2, 1));
    }

    #[test]
    fn blocker_examples() {
        // complete host: nothing to absorb
        let g = Graph::complete(41);
        let s = VertexSet::from_iter(0..10);
        match expand_blocker_set(&g, &s, 40).unwrap() {
            BlockerOutcome::Expanded { s_prime } => assert_eq!(s_prime, s),
            other => panic!("unexpected {other:?}"),
        }

        // long cycle: absorption cascades past the budget immediately
        let g = Graph::cycle(100);
        let s = VertexSet::from_iter(0..30);
        match expand_blocker_set(&g, &s, 40).unwrap() {
            BlockerOutcome::Failed {
                absorbed,
                edges_inside,
                meets_threshold,
                ..
            } => {
                assert_eq!(absorbed.len(), 33 - 30); // budget 30 + 2, fails at 33
                assert!(edges_inside <= 33);
                assert!(!meets_threshold); // the host violates the degree hypothesis
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blocker_bounds_hold_on_dense_hosts() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let n = 60;
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.9) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::from_edges(n, &edges).unwrap();
            let s: VertexSet = (0..20).collect();
            let m = 40;
            match expand_blocker_set(&g, &s, m).unwrap() {
                BlockerOutcome::Expanded { s_prime } => {
                    assert!(s_prime.len() <= s.len() + m / 20);
                    for v in 0..n {
                        if !s_prime.contains(v) {
                            let deg = g
                                .neighbors(v)
                                .iter()
                                .filter(|&&w| !s_prime.contains(w))
                                .count();
                            assert!(2 * deg >= m);
                        }
                    }
                }
                BlockerOutcome::Failed {
                    meets_threshold, ..
                } => assert!(meets_threshold),
            }
        }
    }

    #[test]
    fn embed_sparse_examples() {
        // dense host absorbs the procedure trivially
        let t = crate::gen::random_tree(13, &mut {
            use rand::SeedableRng;
            rand_chacha::ChaCha8Rng::seed_from_u64(3)
        });
        let g = Graph::complete(13);
        let out = embed_sparse(&t, &g, 4, 12).unwrap();
        assert!(out.is_success());
        assert_eq!(out.map.get(separator(&t).z), Some(4));
        assert!(validate_embedding(&t, &g, &out.map).complete_valid);

        // degree-2 host cannot take a 4-star
        let out = embed_sparse(&Tree::star(4), &Graph::cycle(9), 0, 4).unwrap();
        assert!(!out.is_success());
    }

    #[test]
    fn embed_sparse_on_chorded_ring() {
        // sparse-ish host: a long cycle with long-range chords, min degree 4
        let n = 60;
        let mut edges = Vec::new();
        for i in 0..n {
            edges.push((i, (i + 1) % n));
            edges.push((i, (i + 7) % n));
        }
        let g = Graph::from_edges(n, &edges).unwrap();
        let t = Tree::path(9);
        let out = embed_sparse(&t, &g, 5, 8).unwrap();
        if out.is_success() {
            assert_eq!(out.map.get(separator(&t).z), Some(5));
            assert!(validate_embedding(&t, &g, &out.map).complete_valid);
        }
    }
}
