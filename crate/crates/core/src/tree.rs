//! Tree analysis: separators, threshold splits, stable sets of low-degree
//! vertices, matched subtrees, bipartitions, leaf-parent orderings and the
//! balanced component split. All ties are broken by smallest vertex id so
//! outputs are reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexSet;

/// A tree on `n` vertices with an optional root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    n: usize,
    edges: Vec<(usize, usize)>,
    root: Option<usize>,
    adj: Vec<Vec<usize>>,
}

impl Tree {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Tree> {
        if n == 0 {
            return Err(Error::invalid("tree must have at least one vertex"));
        }
        if edges.len() != n - 1 {
            return Err(Error::invalid(format!(
                "tree on {n} vertices needs {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if list.len() != before {
                return Err(Error::invalid("duplicate tree edge"));
            }
        }
        let tree = Tree {
            n,
            edges,
            root: None,
            adj,
        };
        // n-1 edges + connected => acyclic
        if tree.reachable_from(0).len() != n {
            return Err(Error::invalid("tree is not connected"));
        }
        Ok(tree)
    }

    pub fn with_root(mut self, root: usize) -> Result<Tree> {
        if root >= self.n {
            return Err(Error::invalid(format!("root {root} out of range")));
        }
        self.root = Some(root);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.n - 1
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.adj[v].len() == 1
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.is_leaf(v)).collect()
    }

    fn reachable_from(&self, s: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![s];
        seen[s] = true;
        let mut out = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                    out.push(v);
                }
            }
        }
        out
    }

    /// Parent/children/depth arrays for the tree rooted at `root`.
    pub fn rooted(&self, root: usize) -> Rooted {
        let n = self.n;
        let mut parent = vec![usize::MAX; n];
        let mut depth = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        let mut order = Vec::with_capacity(n);
        let mut queue = std::collections::VecDeque::from([root]);
        let mut seen = vec![false; n];
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    depth[v] = depth[u] + 1;
                    children[u].push(v);
                    queue.push_back(v);
                }
            }
        }
        let mut subtree_size = vec![1usize; n];
        for &u in order.iter().rev() {
            for &c in &children[u] {
                subtree_size[u] += subtree_size[c];
            }
        }
        Rooted {
            root,
            parent,
            children,
            depth,
            bfs_order: order,
            subtree_size,
        }
    }

    /// Components of the forest obtained by deleting `z`; each component
    /// ascending, the list sorted by decreasing size (min id breaks ties).
    pub fn components_without(&self, z: usize) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        seen[z] = true;
        let mut comps = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        comps
    }

    /// Tree text format: first line `n`, then `n-1` lines `u v`, and an
    /// optional `root r` line. Lines starting with `#` are comments.
    pub fn parse_text(text: &str) -> Result<Tree> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .and_then(|l| l.parse().ok())
            .ok_or_else(|| Error::parse("bad tree header, expected vertex count"))?;
        let mut edges = Vec::new();
        let mut root = None;
        for line in lines {
            if let Some(rest) = line.strip_prefix("root") {
                root = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| Error::parse(format!("bad root line '{line}'")))?,
                );
                continue;
            }
            let mut it = line.split_whitespace();
            let u: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(format!("bad tree edge '{line}'")))?;
            let v: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(format!("bad tree edge '{line}'")))?;
            edges.push((u, v));
        }
        let tree = Tree::new(n, edges)?;
        match root {
            Some(r) => tree.with_root(r),
            None => Ok(tree),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        edges.sort_unstable();
        for (u, v) in edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        if let Some(r) = self.root {
            out.push_str(&format!("root {r}\n"));
        }
        out
    }

    pub fn path(n: usize) -> Tree {
        Tree::new(n, (1..n).map(|i| (i - 1, i)).collect()).unwrap()
    }

    /// Star with center 0 and `k` leaves.
    pub fn star(k: usize) -> Tree {
        Tree::new(k + 1, (1..=k).map(|i| (0, i)).collect()).unwrap()
    }

    /// Keeps exactly the vertices in `keep` (which must induce a subtree) and
    /// renumbers them in ascending order; returns the new tree and the map
    /// from new ids to original ids.
    pub fn induced_subtree(&self, keep: &VertexSet) -> Result<(Tree, Vec<usize>)> {
        keep.validate_range(self.n)?;
        if keep.is_empty() {
            return Err(Error::invalid("empty subtree"));
        }
        let mapping: Vec<usize> = keep.iter().collect();
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in mapping.iter().enumerate() {
            local[v] = i;
        }
        let mut edges = Vec::new();
        for &(u, v) in &self.edges {
            if local[u] != usize::MAX && local[v] != usize::MAX {
                edges.push((local[u], local[v]));
            }
        }
        let t = Tree::new(mapping.len(), edges)
            .map_err(|_| Error::invalid("vertex set does not induce a subtree"))?;
        Ok((t, mapping))
    }
}

/// Rooted view of a tree with cached parent/children arrays.
#[derive(Clone, Debug)]
pub struct Rooted {
    pub root: usize,
    pub parent: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    pub depth: Vec<usize>,
    pub bfs_order: Vec<usize>,
    pub subtree_size: Vec<usize>,
}

/// A separator vertex together with the components it leaves behind.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatorResult {
    pub z: usize,
    pub components: Vec<Vec<usize>>,
}

/// Smallest-id vertex minimizing the largest component of `T - z`; every
/// component of the result has at most `n/2` vertices.
pub fn separator(t: &Tree) -> SeparatorResult {
    let rooted = t.rooted(0);
    let n = t.n();
    let mut best = 0;
    let mut best_max = usize::MAX;
    for v in 0..n {
        let mut max_comp = n - rooted.subtree_size[v];
        for &c in &rooted.children[v] {
            max_comp = max_comp.max(rooted.subtree_size[c]);
        }
        if max_comp < best_max {
            best = v;
            best_max = max_comp;
        }
    }
    SeparatorResult {
        z: best,
        components: t.components_without(best),
    }
}

/// Splits off a subtree of size at least `t_prime`: returns `None` when every
/// component of `T - z` has fewer than `t_prime` vertices, otherwise a vertex
/// `v` such that the component of `T - v` containing `z` has at most
/// `n - t_prime` vertices and every other component fewer than `t_prime`.
pub fn split_at_threshold(t: &Tree, z: usize, t_prime: usize) -> Result<Option<usize>> {
    if z >= t.n() {
        return Err(Error::invalid(format!("vertex {z} out of range")));
    }
    if 2 * t_prime >= t.n() {
        return Err(Error::invalid(format!(
            "threshold {t_prime} must be below n/2 = {}/2",
            t.n()
        )));
    }
    let rooted = t.rooted(z);
    // descend from z while some child subtree still reaches the threshold
    let mut current = None;
    let mut frontier = z;
    loop {
        let mut next = None;
        for &c in &rooted.children[frontier] {
            if rooted.subtree_size[c] >= t_prime {
                next = Some(c);
                break; // children are in ascending id order
            }
        }
        match next {
            Some(c) => {
                current = Some(c);
                frontier = c;
            }
            None => break,
        }
    }
    Ok(current)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StableTag {
    Leaf,
    DegreeTwoChain,
}

/// A stable set of leaves and chain vertices, with one certificate per member.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StableSetResult {
    pub members: Vec<usize>,
    pub tags: Vec<StableTag>,
}

impl StableSetResult {
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

/// Builds a stable set of size at least `ceil(n/6)` avoiding the root, where
/// every member is a leaf or a degree-2 vertex whose parent is a non-root
/// degree-2 vertex, and no child of a member is the parent of another member.
///
/// Construction: strip the root and all vertices of degree three or more;
/// the rest falls apart into descending chains. Take every third chain
/// vertex starting with the second from the top, then compare against the
/// all-leaves alternative and keep the larger set.
pub fn stable_set_s(t: &Tree, root: usize) -> Result<StableSetResult> {
    if t.n() < 2 {
        return Err(Error::invalid("stable set needs at least two vertices"));
    }
    if root >= t.n() {
        return Err(Error::invalid(format!("root {root} out of range")));
    }
    let rooted = t.rooted(root);
    let in_chain = |v: usize| v != root && t.degree(v) <= 2;

    // chain selection: indices 2, 5, 8, ... from the top of each chain
    let mut chain_pick: Vec<usize> = Vec::new();
    for v in 0..t.n() {
        if !in_chain(v) {
            continue;
        }
        let p = rooted.parent[v];
        if p != usize::MAX && in_chain(p) {
            continue; // not the top of its chain
        }
        let mut chain = vec![v];
        let mut cur = v;
        loop {
            let next = rooted.children[cur].iter().copied().find(|&c| in_chain(c));
            match next {
                Some(c) => {
                    chain.push(c);
                    cur = c;
                }
                None => break,
            }
        }
        let mut idx = 1; // 0-based position 1 == second from the top
        while idx < chain.len() {
            chain_pick.push(chain[idx]);
            idx += 3;
        }
    }

    let leaf_pick: Vec<usize> = (0..t.n()).filter(|&v| v != root && t.is_leaf(v)).collect();

    let members = if leaf_pick.len() >= chain_pick.len() {
        leaf_pick
    } else {
        chain_pick
    };
    let mut members = members;
    members.sort_unstable();
    let tags = members
        .iter()
        .map(|&v| {
            if t.is_leaf(v) {
                StableTag::Leaf
            } else {
                StableTag::DegreeTwoChain
            }
        })
        .collect();
    Ok(StableSetResult { members, tags })
}

/// Either a subtree on `2*ell` vertices containing `v` with a perfect
/// matching, or a certificate that the tree has many leaves.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum MatchedSubtree {
    Matched {
        vertices: Vec<usize>,
        matching: Vec<(usize, usize)>,
    },
    Leafy {
        leaf_count: usize,
    },
}

/// Grows a matched subtree from `v` two vertices at a time. If the greedy
/// growth stalls before reaching `2*ell` vertices, every remaining vertex is
/// a leaf, so the tree has at least `n - 2*ell + 2` leaves.
pub fn matched_subtree(t: &Tree, v: usize, ell: usize) -> Result<MatchedSubtree> {
    if v >= t.n() {
        return Err(Error::invalid(format!("vertex {v} out of range")));
    }
    if ell == 0 || 2 * ell > t.n() {
        return Err(Error::invalid(format!(
            "ell={ell} out of range 1..={}",
            t.n() / 2
        )));
    }
    let mut inside = vec![false; t.n()];
    let mut vertices = Vec::new();
    let mut matching = Vec::new();

    let first = *t.neighbors(v).first().expect("n >= 2");
    inside[v] = true;
    inside[first] = true;
    vertices.extend([v, first]);
    matching.push((v, first));

    while vertices.len() < 2 * ell {
        // smallest boundary vertex that still has a neighbor outside
        let mut grown = false;
        let mut boundary: Vec<usize> = vertices
            .iter()
            .flat_map(|&u| t.neighbors(u).iter().copied())
            .filter(|&w| !inside[w])
            .collect();
        boundary.sort_unstable();
        boundary.dedup();
        for w in boundary {
            if let Some(&x) = t.neighbors(w).iter().find(|&&x| !inside[x]) {
                inside[w] = true;
                inside[x] = true;
                vertices.extend([w, x]);
                matching.push((w, x));
                grown = true;
                break;
            }
        }
        if !grown {
            let leaf_count = t.leaves().len();
            return Ok(MatchedSubtree::Leafy { leaf_count });
        }
    }
    vertices.sort_unstable();
    Ok(MatchedSubtree::Matched { vertices, matching })
}

/// Proper 2-coloring with `|C| <= |D|`; when the sides tie, the side
/// containing vertex 0 is listed second.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bipartition {
    pub c: VertexSet,
    pub d: VertexSet,
}

pub fn bipartition(t: &Tree) -> Bipartition {
    let rooted = t.rooted(0);
    let mut side0 = Vec::new();
    let mut side1 = Vec::new();
    for v in 0..t.n() {
        if rooted.depth[v].is_multiple_of(2) {
            side0.push(v);
        } else {
            side1.push(v);
        }
    }
    // side0 contains vertex 0
    let (c, d) = if side1.len() < side0.len() {
        (side1, side0)
    } else if side0.len() < side1.len() {
        (side0, side1)
    } else {
        (side1, side0) // tie: the side with vertex 0 goes second
    };
    Bipartition {
        c: VertexSet::from_iter(c),
        d: VertexSet::from_iter(d),
    }
}

/// Parents of a designated leaf set, ordered by non-increasing number of
/// leaf children (ties by vertex id), with the leaf children listed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodOrdering {
    pub parents: Vec<usize>,
    pub leaf_children: Vec<Vec<usize>>,
}

impl GoodOrdering {
    pub fn counts(&self) -> Vec<usize> {
        self.leaf_children.iter().map(|l| l.len()).collect()
    }
}

pub fn good_ordering(t: &Tree, leaf_set: &VertexSet) -> Result<GoodOrdering> {
    leaf_set.validate_range(t.n())?;
    for v in leaf_set.iter() {
        if !t.is_leaf(v) {
            return Err(Error::invalid(format!("vertex {v} is not a leaf")));
        }
    }
    let mut by_parent: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for leaf in leaf_set.iter() {
        let parent = t.neighbors(leaf)[0];
        by_parent.entry(parent).or_default().push(leaf);
    }
    let mut entries: Vec<(usize, Vec<usize>)> = by_parent.into_iter().collect();
    entries.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    let (parents, leaf_children) = entries.into_iter().unzip();
    Ok(GoodOrdering {
        parents,
        leaf_children,
    })
}

/// The two unions of a component split, largest first.
pub type ComponentSplit = (Vec<Vec<usize>>, Vec<Vec<usize>>);

/// Groups the components of `T - z` into two unions whose sizes both lie in
/// `[floor((n-1)/3), ceil(2(n-1)/3)]`, largest union first.
pub fn component_split(t: &Tree, z: usize) -> Result<ComponentSplit> {
    if t.n() < 4 {
        return Err(Error::invalid("component split needs at least 4 vertices"));
    }
    if z >= t.n() {
        return Err(Error::invalid(format!("vertex {z} out of range")));
    }
    let comps = t.components_without(z);
    let total = t.n() - 1;
    if let Some(biggest) = comps.first() {
        if 2 * biggest.len() > t.n() {
            return Err(Error::invalid(format!(
                "vertex {z} is not a separator (component of size {})",
                biggest.len()
            )));
        }
    }
    let lo = total / 3;
    let hi = (2 * total).div_ceil(3);

    let mut acc: Vec<Vec<usize>> = Vec::new();
    let mut rest: Vec<Vec<usize>> = Vec::new();
    let mut acc_size = 0;
    for comp in comps {
        if acc_size < lo && acc_size + comp.len() <= hi {
            acc_size += comp.len();
            acc.push(comp);
        } else {
            rest.push(comp);
        }
    }
    let rest_size = total - acc_size;
    assert!(
        acc_size >= lo && acc_size <= hi && rest_size >= lo && rest_size <= hi,
        "component split out of window: {acc_size}/{rest_size} of {total}"
    );
    if acc_size >= rest_size {
        Ok((acc, rest))
    } else {
        Ok((rest, acc))
    }
}

/// `(total leaves, max leaf neighbors at one vertex, smallest such vertex)`.
pub fn leaf_profile(t: &Tree) -> Result<(usize, usize, usize)> {
    if t.n() < 2 {
        return Err(Error::invalid("leaf profile needs at least two vertices"));
    }
    let total = t.leaves().len();
    let mut best_v = 0;
    let mut best = 0;
    for v in 0..t.n() {
        let count = t.neighbors(v).iter().filter(|&&u| t.is_leaf(u)).count();
        if count > best {
            best = count;
            best_v = v;
        }
    }
    Ok((total, best, best_v))
}

/// Counts the leaf neighbors of `v`.
pub fn leaf_children_of(t: &Tree, v: usize) -> Vec<usize> {
    t.neighbors(v)
        .iter()
        .copied()
        .filter(|&u| t.is_leaf(u))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::spider_tree;

    fn max_comp_size(t: &Tree, z: usize) -> usize {
        t.components_without(z)
            .first()
            .map(|c| c.len())
            .unwrap_or(0)
    }

    #[test]
    fn separator_examples() {
        let p5 = Tree::path(5);
        let sep = separator(&p5);
        assert_eq!(sep.z, 2);
        assert_eq!(
            sep.components.iter().map(|c| c.len()).collect::<Vec<_>>(),
            vec![2, 2]
        );

        let star = Tree::star(4);
        let sep = separator(&star);
        assert_eq!(sep.z, 0);
        assert_eq!(sep.components.len(), 4);

        // exhaustive check over all 7 vertices of the k=2 spider
        let spider = spider_tree(2);
        let sep = separator(&spider);
        assert_eq!(sep.z, 0);
        for v in 0..spider.n() {
            assert!(max_comp_size(&spider, v) >= max_comp_size(&spider, sep.z));
        }
    }

    #[test]
    fn split_threshold_examples() {
        let p9 = Tree::path(9);
        let v = split_at_threshold(&p9, 4, 2).unwrap().unwrap();
        // exhaustive verification of the defining property
        let comps = p9.components_without(v);
        for comp in &comps {
            if comp.contains(&4) {
                assert!(comp.len() <= 9 - 2);
            } else {
                assert!(comp.len() < 2);
            }
        }
        assert_eq!(v, 1);

        let star = Tree::star(6);
        assert_eq!(split_at_threshold(&star, 0, 2).unwrap(), None);

        let spider = spider_tree(3);
        let v = split_at_threshold(&spider, 0, 3).unwrap().unwrap();
        let comps = spider.components_without(v);
        for comp in &comps {
            if comp.contains(&0) {
                assert!(comp.len() <= 10 - 3);
            } else {
                assert!(comp.len() < 3);
            }
        }
        assert!([1, 2, 3].contains(&v));

        assert!(split_at_threshold(&p9, 4, 5).is_err());
    }

    /// Checks the definitional properties of a stable set result.
    pub fn check_stable_set(t: &Tree, root: usize, s: &StableSetResult) {
        let rooted = t.rooted(root);
        assert!(s.len() >= t.n().div_ceil(6), "too small: {}", s.len());
        for &v in &s.members {
            assert_ne!(v, root);
            // independence
            for &u in t.neighbors(v) {
                assert!(!s.contains(u), "members {v},{u} adjacent");
            }
            // property (a)
            if !t.is_leaf(v) {
                assert_eq!(t.degree(v), 2);
                let p = rooted.parent[v];
                assert_ne!(p, root);
                assert_eq!(t.degree(p), 2);
            }
            // property (b): no child of a member parents another member
            for &c in &rooted.children[v] {
                for &g in &rooted.children[c] {
                    assert!(!s.contains(g), "child {c} of {v} parents member {g}");
                }
            }
        }
    }

    #[test]
    fn stable_set_examples() {
        let star = Tree::star(5);
        let s = stable_set_s(&star, 0).unwrap();
        assert_eq!(s.members, vec![1, 2, 3, 4, 5]);
        check_stable_set(&star, 0, &s);

        let p6 = Tree::path(6);
        let s = stable_set_s(&p6, 0).unwrap();
        check_stable_set(&p6, 0, &s);

        let p13 = Tree::path(13);
        let s = stable_set_s(&p13, 0).unwrap();
        assert!(s.len() >= 3);
        check_stable_set(&p13, 0, &s);

        assert!(stable_set_s(&Tree::new(1, vec![]).unwrap(), 0).is_err());
    }

    fn check_matched(t: &Tree, v: usize, ell: usize, res: &MatchedSubtree) {
        match res {
            MatchedSubtree::Matched { vertices, matching } => {
                assert_eq!(vertices.len(), 2 * ell);
                assert!(vertices.contains(&v));
                assert_eq!(matching.len(), ell);
                let mut covered: Vec<usize> = matching.iter().flat_map(|&(a, b)| [a, b]).collect();
                covered.sort_unstable();
                assert_eq!(&covered, vertices);
                for &(a, b) in matching {
                    assert!(t.neighbors(a).contains(&b));
                }
                // the vertex set must induce a subtree
                let keep = VertexSet::from_iter(vertices.iter().copied());
                assert!(t.induced_subtree(&keep).is_ok());
            }
            MatchedSubtree::Leafy { leaf_count } => {
                assert_eq!(*leaf_count, t.leaves().len());
                assert!(*leaf_count >= t.n() + 2 - 2 * ell);
            }
        }
    }

    #[test]
    fn matched_subtree_examples() {
        let p6 = Tree::path(6);
        let res = matched_subtree(&p6, 0, 3).unwrap();
        check_matched(&p6, 0, 3, &res);
        assert!(matches!(res, MatchedSubtree::Matched { .. }));

        let star = Tree::star(5);
        let res = matched_subtree(&star, 0, 2).unwrap();
        match &res {
            MatchedSubtree::Leafy { leaf_count } => assert_eq!(*leaf_count, 5),
            _ => panic!("star must take the leafy branch"),
        }

        let spider = spider_tree(2);
        let res = matched_subtree(&spider, 0, 2).unwrap();
        check_matched(&spider, 0, 2, &res);

        assert!(matched_subtree(&p6, 0, 4).is_err());
        assert!(matched_subtree(&p6, 0, 0).is_err());
    }

    #[test]
    fn bipartition_examples() {
        let star = Tree::star(4);
        let b = bipartition(&star);
        assert_eq!(b.c.as_slice(), &[0]);
        assert_eq!(b.d.len(), 4);

        let p4 = Tree::path(4);
        let b = bipartition(&p4);
        assert_eq!(b.c.as_slice(), &[1, 3]);
        assert_eq!(b.d.as_slice(), &[0, 2]);

        let spider = spider_tree(2);
        let b = bipartition(&spider);
        assert_eq!(b.c.len(), 3);
        assert_eq!(b.d.len(), 4);
        for &(u, v) in spider.edges() {
            assert_ne!(b.c.contains(u), b.c.contains(v));
        }
    }

    #[test]
    fn good_ordering_examples() {
        // double star: centers 0 (3 leaves) and 1 (1 leaf)
        let t = Tree::new(6, vec![(0, 1), (0, 2), (0, 3), (0, 4), (1, 5)]).unwrap();
        let ord = good_ordering(&t, &VertexSet::from_iter([2, 3, 4, 5])).unwrap();
        assert_eq!(ord.parents, vec![0, 1]);
        assert_eq!(ord.counts(), vec![3, 1]);

        let star = Tree::star(4);
        let ord = good_ordering(&star, &VertexSet::from_iter(1..=4)).unwrap();
        assert_eq!(ord.parents, vec![0]);

        // caterpillar with leaf counts (2, 2, 1)
        let t = Tree::new(
            8,
            vec![(0, 1), (1, 2), (0, 3), (0, 4), (1, 5), (1, 6), (2, 7)],
        )
        .unwrap();
        let ord = good_ordering(&t, &VertexSet::from_iter([3, 4, 5, 6, 7])).unwrap();
        assert_eq!(ord.parents, vec![0, 1, 2]);
        assert_eq!(ord.counts(), vec![2, 2, 1]);

        assert!(good_ordering(&star, &VertexSet::from_iter([0])).is_err());
    }

    #[test]
    fn component_split_examples() {
        let spider = spider_tree(2);
        let (c1, c2) = component_split(&spider, 0).unwrap();
        let s1: usize = c1.iter().map(|c| c.len()).sum();
        let s2: usize = c2.iter().map(|c| c.len()).sum();
        assert_eq!((s1, s2), (4, 2));

        let p7 = Tree::path(7);
        let (c1, c2) = component_split(&p7, 3).unwrap();
        let s1: usize = c1.iter().map(|c| c.len()).sum();
        let s2: usize = c2.iter().map(|c| c.len()).sum();
        assert_eq!((s1, s2), (3, 3));

        let star = Tree::star(6);
        let (c1, c2) = component_split(&star, 0).unwrap();
        let s1: usize = c1.iter().map(|c| c.len()).sum();
        let s2: usize = c2.iter().map(|c| c.len()).sum();
        assert_eq!(s1 + s2, 6);
        assert!((2..=4).contains(&s1) && (2..=4).contains(&s2));

        // not a separator
        assert!(component_split(&p7, 0).is_err());
    }

    #[test]
    fn leaf_profile_examples() {
        let star = Tree::star(5);
        assert_eq!(leaf_profile(&star).unwrap(), (5, 5, 0));

        let p5 = Tree::path(5);
        assert_eq!(leaf_profile(&p5).unwrap(), (2, 1, 1));

        let spider = spider_tree(3);
        assert_eq!(leaf_profile(&spider).unwrap(), (6, 2, 1));

        let p2 = Tree::path(2);
        assert_eq!(leaf_profile(&p2).unwrap(), (2, 1, 0));
    }

    #[test]
    fn text_round_trip() {
        let spider = spider_tree(3).with_root(0).unwrap();
        let text = spider.to_text();
        let back = Tree::parse_text(&text).unwrap();
        assert_eq!(back.root(), Some(0));
        assert_eq!(back.n(), spider.n());
        let mut e1: Vec<_> = spider
            .edges()
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        let mut e2: Vec<_> = back
            .edges()
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        e1.sort_unstable();
        e2.sort_unstable();
        assert_eq!(e1, e2);
    }

    #[test]
    fn rejects_malformed_trees() {
        assert!(Tree::new(3, vec![(0, 1)]).is_err());
        assert!(Tree::new(4, vec![(0, 1), (2, 3), (0, 1)]).is_err());
        assert!(Tree::new(3, vec![(0, 1), (0, 5)]).is_err());
    }
}
