//! Generic embedding machinery: connected-frontier greedy embedding,
//! Hall-theorem completions (plain and with ordered parents), breadth-first
//! blockwise embedding, and the shortcut for trees dominated by one star.
//!
//! All placement choices prefer the smallest host id, so outcomes are
//! reproducible. A STUCK outcome is a branch signal for the pipelines, not a
//! hard failure: it names the blocked tree vertex and the saturated
//! neighborhood that blocked it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Embedding, Graph, VertexSet};
use crate::tree::{GoodOrdering, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preference {
    Prefer,
    Avoid,
}

/// Pins, hard-forbidden hosts, and a soft side preference for placements.
#[derive(Clone, Debug, Default)]
pub struct AnchorConstraint {
    pub pins: Vec<(usize, usize)>,
    pub forbidden: Option<VertexSet>,
    pub preferred: Option<(VertexSet, Preference)>,
}

impl AnchorConstraint {
    pub fn none() -> AnchorConstraint {
        AnchorConstraint::default()
    }

    pub fn pin(tree_v: usize, host_v: usize) -> AnchorConstraint {
        AnchorConstraint {
            pins: vec![(tree_v, host_v)],
            ..Default::default()
        }
    }

    pub fn with_forbidden(mut self, forbidden: VertexSet) -> AnchorConstraint {
        self.forbidden = Some(forbidden);
        self
    }

    pub fn with_preferred(mut self, set: VertexSet, pref: Preference) -> AnchorConstraint {
        self.preferred = Some((set, pref));
        self
    }

    fn validate(&self, t: &Tree, g: &Graph) -> Result<()> {
        let mut tree_seen = std::collections::HashSet::new();
        let mut host_seen = std::collections::HashSet::new();
        for &(tv, hv) in &self.pins {
            if tv >= t.n() || hv >= g.n() {
                return Err(Error::invalid(format!("pin ({tv},{hv}) out of range")));
            }
            if !tree_seen.insert(tv) || !host_seen.insert(hv) {
                return Err(Error::invalid("pins are not injective"));
            }
            if let Some(f) = &self.forbidden {
                if f.contains(hv) {
                    return Err(Error::invalid(format!("pinned host {hv} is forbidden")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Traversal {
    Bfs,
    Dfs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Stuck,
}

/// Why a vertex could not be placed: its parent's image and the neighbors
/// that were all used or forbidden.
#[derive(Clone, Debug, Serialize)]
pub struct StuckEvidence {
    pub vertex: usize,
    pub parent: Option<usize>,
    pub parent_image: Option<usize>,
    pub saturated: Vec<usize>,
}

/// A Hall violator: slot multiplicities per parent whose joint neighborhood
/// is smaller than the number of slots.
#[derive(Clone, Debug, Serialize)]
pub struct HallViolator {
    pub parents: Vec<(usize, usize)>,
    pub neighborhood: Vec<usize>,
}

impl HallViolator {
    pub fn slot_count(&self) -> usize {
        self.parents.iter().map(|&(_, c)| c).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbedOutcome {
    pub tree_n: usize,
    pub map: Embedding,
    pub status: Status,
    pub stuck_at: Option<usize>,
    #[serde(skip)]
    pub evidence: Option<StuckEvidence>,
    #[serde(skip)]
    pub violator: Option<HallViolator>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl EmbedOutcome {
    pub fn success(map: Embedding) -> EmbedOutcome {
        EmbedOutcome {
            tree_n: map.tree_n(),
            map,
            status: Status::Success,
            stuck_at: None,
            evidence: None,
            violator: None,
            warnings: Vec::new(),
        }
    }

    pub fn stuck(map: Embedding, evidence: StuckEvidence) -> EmbedOutcome {
        EmbedOutcome {
            tree_n: map.tree_n(),
            stuck_at: Some(evidence.vertex),
            map,
            status: Status::Stuck,
            evidence: Some(evidence),
            violator: None,
            warnings: Vec::new(),
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outcome serializes")
    }
}

/// Host occupancy carried separately from the immutable graph.
#[derive(Clone, Debug)]
pub(crate) struct Occupancy {
    used: Vec<bool>,
}

impl Occupancy {
    pub fn new(host_n: usize) -> Occupancy {
        Occupancy {
            used: vec![false; host_n],
        }
    }

    pub fn from_embedding(f: &Embedding, host_n: usize) -> Occupancy {
        let mut occ = Occupancy::new(host_n);
        for h in f.used_hosts() {
            occ.used[h] = true;
        }
        occ
    }

    pub fn take(&mut self, h: usize) {
        debug_assert!(!self.used[h]);
        self.used[h] = true;
    }

    pub fn release(&mut self, h: usize) {
        debug_assert!(self.used[h]);
        self.used[h] = false;
    }

    pub fn is_used(&self, h: usize) -> bool {
        self.used[h]
    }

    pub fn used_count(&self) -> usize {
        self.used.iter().filter(|&&u| u).count()
    }
}

/// Picks the first admissible host among `candidates` (ascending), honoring
/// a hard forbidden set and a soft preference.
pub(crate) fn choose_host(
    candidates: &[usize],
    occ: &Occupancy,
    forbidden: Option<&VertexSet>,
    preferred: Option<&(VertexSet, Preference)>,
) -> Option<usize> {
    let admissible = |h: usize| !occ.is_used(h) && forbidden.is_none_or(|f| !f.contains(h));
    match preferred {
        Some((set, Preference::Prefer)) => candidates
            .iter()
            .copied()
            .find(|&h| admissible(h) && set.contains(h))
            .or_else(|| candidates.iter().copied().find(|&h| admissible(h))),
        Some((set, Preference::Avoid)) => candidates
            .iter()
            .copied()
            .find(|&h| admissible(h) && !set.contains(h))
            .or_else(|| candidates.iter().copied().find(|&h| admissible(h))),
        None => candidates.iter().copied().find(|&h| admissible(h)),
    }
}

fn saturated_evidence(
    g: &Graph,
    occ: &Occupancy,
    forbidden: Option<&VertexSet>,
    vertex: usize,
    parent: usize,
    parent_image: usize,
) -> StuckEvidence {
    let saturated = g
        .neighbors(parent_image)
        .iter()
        .copied()
        .filter(|&h| occ.is_used(h) || forbidden.is_some_and(|f| f.contains(h)))
        .collect();
    StuckEvidence {
        vertex,
        parent: Some(parent),
        parent_image: Some(parent_image),
        saturated,
    }
}

/// Connected-frontier greedy embedding: vertices are placed in traversal
/// order, each into an unused neighbor of its parent's image. The embedded
/// subtree is connected after every step and nothing is ever unembedded.
pub fn greedy_embed(
    t: &Tree,
    g: &Graph,
    anchors: &AnchorConstraint,
    order: Traversal,
) -> Result<EmbedOutcome> {
    anchors.validate(t, g)?;
    let root = t
        .root()
        .or_else(|| anchors.pins.first().map(|&(tv, _)| tv))
        .unwrap_or(0);
    let rooted = t.rooted(root);
    let sequence: Vec<usize> = match order {
        Traversal::Bfs => rooted.bfs_order.clone(),
        Traversal::Dfs => {
            let mut out = Vec::with_capacity(t.n());
            let mut stack = vec![root];
            while let Some(u) = stack.pop() {
                out.push(u);
                for &c in rooted.children[u].iter().rev() {
                    stack.push(c);
                }
            }
            out
        }
    };

    let pin_of = |v: usize| {
        anchors
            .pins
            .iter()
            .find(|&&(tv, _)| tv == v)
            .map(|&(_, hv)| hv)
    };

    let mut f = Embedding::new(t.n());
    let mut occ = Occupancy::new(g.n());
    for &v in &sequence {
        let parent = rooted.parent[v];
        let choice = if let Some(hv) = pin_of(v) {
            let ok = !occ.is_used(hv)
                && (parent == usize::MAX || g.has_edge(f.get(parent).unwrap(), hv));
            ok.then_some(hv)
        } else if parent == usize::MAX {
            let all: Vec<usize> = g.vertices().collect();
            choose_host(
                &all,
                &occ,
                anchors.forbidden.as_ref(),
                anchors.preferred.as_ref(),
            )
        } else {
            let p_img = f.get(parent).expect("parent embedded before child");
            choose_host(
                g.neighbors(p_img),
                &occ,
                anchors.forbidden.as_ref(),
                anchors.preferred.as_ref(),
            )
        };
        match choice {
            Some(h) => {
                occ.take(h);
                f.set(v, h);
            }
            None => {
                let evidence = if parent == usize::MAX {
                    StuckEvidence {
                        vertex: v,
                        parent: None,
                        parent_image: None,
                        saturated: Vec::new(),
                    }
                } else {
                    let p_img = f.get(parent).unwrap();
                    saturated_evidence(g, &occ, anchors.forbidden.as_ref(), v, parent, p_img)
                };
                return Ok(EmbedOutcome::stuck(f, evidence));
            }
        }
    }
    Ok(EmbedOutcome::success(f))
}

/// One parent with the leaves still to hang off its image.
#[derive(Clone, Debug)]
pub struct LeafSlot {
    pub parent: usize,
    pub leaves: Vec<usize>,
}

/// Embeds one component of `T - z` (hanging off the already-embedded `z`)
/// in BFS order. The component root goes to the first unused vertex of
/// `root_hosts`; every other vertex to an admissible neighbor of its
/// parent's image. Returns the blocking evidence on failure.
#[allow(clippy::too_many_arguments)]
pub(crate) fn embed_component(
    g: &Graph,
    rooted: &crate::tree::Rooted,
    comp: &[usize],
    root_hosts: &[usize],
    f: &mut Embedding,
    occ: &mut Occupancy,
    forbidden: Option<&VertexSet>,
    preferred: Option<&(VertexSet, Preference)>,
) -> std::result::Result<(), StuckEvidence> {
    let attach = rooted.root;
    let root = *comp
        .iter()
        .find(|&&v| rooted.parent[v] == attach)
        .expect("component hangs off the attach vertex");
    let in_comp: std::collections::HashSet<usize> = comp.iter().copied().collect();
    let mut order = vec![root];
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &c in &rooted.children[u] {
            if in_comp.contains(&c) {
                order.push(c);
                queue.push_back(c);
            }
        }
    }
    for &v in &order {
        let pick = if v == root {
            root_hosts
                .iter()
                .copied()
                .find(|&h| !occ.is_used(h) && forbidden.is_none_or(|s| !s.contains(h)))
        } else {
            let p_img = f.get(rooted.parent[v]).expect("parent placed first");
            choose_host(g.neighbors(p_img), occ, forbidden, preferred)
        };
        match pick {
            Some(h) => {
                occ.take(h);
                f.set(v, h);
            }
            None => {
                let parent = rooted.parent[v];
                let parent_image = f.get(parent);
                let saturated = if v == root {
                    root_hosts
                        .iter()
                        .copied()
                        .filter(|&h| occ.is_used(h))
                        .collect()
                } else {
                    g.neighbors(parent_image.unwrap())
                        .iter()
                        .copied()
                        .filter(|&h| occ.is_used(h) || forbidden.is_some_and(|s| s.contains(h)))
                        .collect()
                };
                return Err(StuckEvidence {
                    vertex: v,
                    parent: Some(parent),
                    parent_image,
                    saturated,
                });
            }
        }
    }
    Ok(())
}

/// Maximum bipartite matching by augmenting paths (Kuhn's algorithm).
/// `cands[i]` lists the admissible hosts of left vertex `i` in the order
/// they should be tried. Returns per-left assignments.
pub(crate) fn max_matching(cands: &[Vec<usize>], host_n: usize) -> Vec<Option<usize>> {
    let mut left_of: Vec<Option<usize>> = vec![None; host_n];
    let mut match_of: Vec<Option<usize>> = vec![None; cands.len()];

    fn try_augment(
        i: usize,
        cands: &[Vec<usize>],
        visited: &mut [bool],
        left_of: &mut [Option<usize>],
        match_of: &mut [Option<usize>],
    ) -> bool {
        for &h in &cands[i] {
            if visited[h] {
                continue;
            }
            visited[h] = true;
            if left_of[h].is_none()
                || try_augment(left_of[h].unwrap(), cands, visited, left_of, match_of)
            {
                left_of[h] = Some(i);
                match_of[i] = Some(h);
                return true;
            }
        }
        false
    }

    for i in 0..cands.len() {
        let mut visited = vec![false; host_n];
        try_augment(i, cands, &mut visited, &mut left_of, &mut match_of);
    }
    match_of
}

/// Alternating-reachability witness from an unmatched left vertex: a set `W`
/// of left vertices with `|N(W)| < |W|`.
pub(crate) fn hall_violator_from(
    start: usize,
    cands: &[Vec<usize>],
    match_of: &[Option<usize>],
    host_n: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut left_of: Vec<Option<usize>> = vec![None; host_n];
    for (i, m) in match_of.iter().enumerate() {
        if let Some(h) = m {
            left_of[*h] = Some(i);
        }
    }
    let mut w = vec![start];
    let mut seen_left = std::collections::HashSet::from([start]);
    let mut seen_right = std::collections::HashSet::new();
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for &h in &cands[i] {
            if seen_right.insert(h) {
                if let Some(j) = left_of[h] {
                    if seen_left.insert(j) {
                        w.push(j);
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    let mut rights: Vec<usize> = seen_right.into_iter().collect();
    rights.sort_unstable();
    w.sort_unstable();
    (w, rights)
}

fn slots_valid(f: &Embedding, slots: &[LeafSlot], g: &Graph) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for slot in slots {
        if slot.parent >= f.tree_n() {
            return Err(Error::invalid(format!(
                "slot parent {} out of range",
                slot.parent
            )));
        }
        let img = f
            .get(slot.parent)
            .ok_or_else(|| Error::invalid(format!("slot parent {} not embedded", slot.parent)))?;
        if img >= g.n() {
            return Err(Error::invalid("parent image out of host range"));
        }
        for &leaf in &slot.leaves {
            if leaf >= f.tree_n() || f.is_set(leaf) {
                return Err(Error::invalid(format!(
                    "slot leaf {leaf} out of range or already embedded"
                )));
            }
            if !seen.insert(leaf) {
                return Err(Error::invalid(format!("leaf {leaf} listed twice")));
            }
        }
    }
    Ok(())
}

/// Extends `f` by a system of distinct unused hosts, one per leaf slot, each
/// adjacent to its parent's image. SUCCESS iff the matching saturates every
/// slot; otherwise the outcome carries a Hall violator.
pub fn hall_complete(f: &Embedding, slots: &[LeafSlot], g: &Graph) -> Result<EmbedOutcome> {
    slots_valid(f, slots, g)?;
    let occ = Occupancy::from_embedding(f, g.n());
    let mut lefts: Vec<(usize, usize)> = Vec::new(); // (parent, leaf)
    let mut cands: Vec<Vec<usize>> = Vec::new();
    for slot in slots {
        let img = f.get(slot.parent).unwrap();
        let free: Vec<usize> = g
            .neighbors(img)
            .iter()
            .copied()
            .filter(|&h| !occ.is_used(h))
            .collect();
        for &leaf in &slot.leaves {
            lefts.push((slot.parent, leaf));
            cands.push(free.clone());
        }
    }
    let match_of = max_matching(&cands, g.n());
    let mut out = f.clone();
    if let Some(first_unmatched) = match_of.iter().position(Option::is_none) {
        let (w, rights) = hall_violator_from(first_unmatched, &cands, &match_of, g.n());
        let mut per_parent: std::collections::BTreeMap<usize, usize> =
            std::collections::BTreeMap::new();
        for &i in &w {
            *per_parent.entry(lefts[i].0).or_default() += 1;
        }
        let violator = HallViolator {
            parents: per_parent.into_iter().collect(),
            neighborhood: rights.clone(),
        };
        let (parent, leaf) = lefts[first_unmatched];
        let evidence = StuckEvidence {
            vertex: leaf,
            parent: Some(parent),
            parent_image: f.get(parent),
            saturated: rights,
        };
        let mut outcome = EmbedOutcome::stuck(out, evidence);
        outcome.violator = Some(violator);
        return Ok(outcome);
    }
    for (i, m) in match_of.iter().enumerate() {
        out.set(lefts[i].1, m.unwrap());
    }
    Ok(EmbedOutcome::success(out))
}

/// Whether one ordered pair of leaf parents had a large joint neighborhood.
#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub first: usize,
    pub second: usize,
    pub union_size: usize,
    pub held: bool,
}

/// Hall completion for an ordered leaf-parent family: same matching
/// semantics as [`hall_complete`], plus a per-pair report of whether
/// `|N(f(p_{2i-1})) ∪ N(f(p_{2i}))| >= m` held.
pub fn hall_complete_ordered(
    f: &Embedding,
    ordering: &GoodOrdering,
    g: &Graph,
    m: usize,
) -> Result<(EmbedOutcome, Vec<PairReport>)> {
    let slots: Vec<LeafSlot> = ordering
        .parents
        .iter()
        .zip(&ordering.leaf_children)
        .map(|(&parent, leaves)| LeafSlot {
            parent,
            leaves: leaves.clone(),
        })
        .collect();
    for slot in &slots {
        if slot.parent >= f.tree_n() || f.get(slot.parent).is_none() {
            return Err(Error::invalid(format!(
                "ordering parent {} is not embedded",
                slot.parent
            )));
        }
    }
    let mut pairs = Vec::new();
    for i in (0..ordering.parents.len().saturating_sub(1)).step_by(2) {
        let p1 = ordering.parents[i];
        let p2 = ordering.parents[i + 1];
        let union = VertexSet::from_iter(
            g.neighbors(f.get(p1).unwrap())
                .iter()
                .copied()
                .chain(g.neighbors(f.get(p2).unwrap()).iter().copied()),
        );
        let union_size = union.len();
        pairs.push(PairReport {
            first: p1,
            second: p2,
            union_size,
            held: union_size >= m,
        });
    }
    let mut outcome = hall_complete(f, &slots, g)?;
    for pair in pairs.iter().filter(|p| !p.held) {
        outcome.warn(format!(
            "pair ({}, {}) union {} below {}",
            pair.first, pair.second, pair.union_size, m
        ));
    }
    Ok((outcome, pairs))
}

/// Breadth-first embedding placing the children of each vertex as a
/// consecutive block into unused neighbors of the parent's image. Reports
/// (rather than assumes) the girth and degree conditions that guarantee
/// success.
pub fn bfs_blockwise_embed(t: &Tree, g: &Graph) -> Result<EmbedOutcome> {
    let root = match t.root() {
        Some(r) => {
            if t.n() > 1 && !t.is_leaf(r) {
                return Err(Error::invalid(format!("root {r} is not a leaf")));
            }
            r
        }
        None => {
            if t.n() == 1 {
                0
            } else {
                *t.leaves().first().expect("tree with n >= 2 has leaves")
            }
        }
    };
    let rooted = t.rooted(root);
    let mut f = Embedding::new(t.n());
    let mut occ = Occupancy::new(g.n());
    if g.n() == 0 {
        return Err(Error::invalid("empty host"));
    }
    f.set(root, 0);
    occ.take(0);
    let mut outcome_warnings = Vec::new();
    if let Some(girth) = g.girth() {
        if girth < t.n() + 1 {
            outcome_warnings.push(format!(
                "host girth {girth} below {} so one-occupied-neighbor is not guaranteed",
                t.n() + 1
            ));
        }
    }
    let tree_max_degree = (0..t.n()).map(|v| t.degree(v)).max().unwrap_or(0);
    if g.min_degree() + 1 < tree_max_degree {
        outcome_warnings.push(format!(
            "host min degree {} below tree degree demand {tree_max_degree}",
            g.min_degree()
        ));
    }
    for &u in &rooted.bfs_order {
        let img = f.get(u).expect("BFS places parents first");
        for &child in &rooted.children[u] {
            let pick = g.neighbors(img).iter().copied().find(|&h| !occ.is_used(h));
            match pick {
                Some(h) => {
                    occ.take(h);
                    f.set(child, h);
                }
                None => {
                    let evidence = saturated_evidence(g, &occ, None, child, u, img);
                    let mut out = EmbedOutcome::stuck(f, evidence);
                    out.warnings = outcome_warnings;
                    return Ok(out);
                }
            }
        }
    }
    let mut out = EmbedOutcome::success(f);
    out.warnings = outcome_warnings;
    Ok(out)
}

/// Embeds `s` in a maximum-degree host vertex, greedily embeds the tree with
/// the leaves adjacent to `s` removed, then completes those leaves by a Hall
/// matching into the image's neighborhood.
pub fn star_heavy_embed(t: &Tree, g: &Graph, s: usize) -> Result<EmbedOutcome> {
    if s >= t.n() {
        return Err(Error::invalid(format!("vertex {s} out of range")));
    }
    if g.n() == 0 {
        return Err(Error::invalid("empty host"));
    }
    let leaf_children: Vec<usize> = crate::tree::leaf_children_of(t, s);
    let keep = VertexSet::from_iter((0..t.n()).filter(|v| !leaf_children.contains(v)));
    let hub = g.max_degree_vertex();

    let mut f = Embedding::new(t.n());
    if keep.len() == 1 {
        f.set(s, hub);
    } else {
        let (t_prime, mapping) = t.induced_subtree(&keep)?;
        let s_local = mapping.iter().position(|&v| v == s).expect("s is kept");
        let sub = greedy_embed(
            &t_prime,
            g,
            &AnchorConstraint::pin(s_local, hub),
            Traversal::Bfs,
        )?;
        if !sub.is_success() {
            let mut map = Embedding::new(t.n());
            for (local, &orig) in mapping.iter().enumerate() {
                if let Some(h) = sub.map.get(local) {
                    map.set(orig, h);
                }
            }
            let evidence = sub.evidence.map(|e| StuckEvidence {
                vertex: mapping[e.vertex],
                parent: e.parent.map(|p| mapping[p]),
                parent_image: e.parent_image,
                saturated: e.saturated,
            });
            let mut out = EmbedOutcome::stuck(
                map,
                evidence.unwrap_or(StuckEvidence {
                    vertex: s,
                    parent: None,
                    parent_image: None,
                    saturated: Vec::new(),
                }),
            );
            out.warnings = sub.warnings;
            return Ok(out);
        }
        for (local, &orig) in mapping.iter().enumerate() {
            f.set(orig, sub.map.get(local).unwrap());
        }
    }
    if leaf_children.is_empty() {
        return Ok(EmbedOutcome::success(f));
    }
    hall_complete(
        &f,
        &[LeafSlot {
            parent: s,
            leaves: leaf_children,
        }],
        g,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::spider_tree;
    use crate::graph::validate_embedding;

    /// Exhaustive maximum-matching size, independent of the augmenting-path
    /// implementation.
    pub fn brute_max_matching(cands: &[Vec<usize>]) -> usize {
        fn rec(
            i: usize,
            cands: &[Vec<usize>],
            used: &mut std::collections::HashSet<usize>,
        ) -> usize {
            if i == cands.len() {
                return 0;
            }
            let mut best = rec(i + 1, cands, used);
            for &h in &cands[i] {
                if used.insert(h) {
                    best = best.max(1 + rec(i + 1, cands, used));
                    used.remove(&h);
                }
            }
            best
        }
        rec(0, cands, &mut std::collections::HashSet::new())
    }

    fn twin_triangles_universal() -> Graph {
        let mut edges = vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        for v in 0..6 {
            edges.push((v, 6));
        }
        Graph::from_edges(7, &edges).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let out = greedy_embed(
            &Tree::path(4),
            &Graph::complete(5),
            &AnchorConstraint::none(),
            Traversal::Bfs,
        )
        .unwrap();
        assert!(out.is_success());
        assert!(validate_embedding(&Tree::path(4), &Graph::complete(5), &out.map).complete_valid);

        let out = greedy_embed(
            &Tree::star(4),
            &Graph::cycle(5),
            &AnchorConstraint::none(),
            Traversal::Bfs,
        )
        .unwrap();
        assert!(!out.is_success());
        // stuck embedding the second leaf: the cycle has degree 2
        assert_eq!(out.stuck_at, Some(3));

        let spider = spider_tree(2);
        let k7 = Graph::complete(7);
        let out = greedy_embed(&spider, &k7, &AnchorConstraint::pin(0, 0), Traversal::Bfs).unwrap();
        assert!(out.is_success());
        assert_eq!(out.map.get(0), Some(0));
        assert!(validate_embedding(&spider, &k7, &out.map).complete_valid);
    }

    #[test]
    fn greedy_never_unembeds_and_stays_connected() {
        // after every prefix of the BFS order, the embedded set is connected
        let t = spider_tree(3);
        let g = Graph::complete(12);
        let out = greedy_embed(&t, &g, &AnchorConstraint::none(), Traversal::Bfs).unwrap();
        assert!(out.is_success());
        let rooted = t.rooted(0);
        for prefix in 1..=t.n() {
            let set: Vec<usize> = rooted.bfs_order[..prefix].to_vec();
            for &v in &set[1..] {
                assert!(set.contains(&rooted.parent[v]));
            }
        }
    }

    #[test]
    fn greedy_respects_forbidden_and_preference() {
        let t = Tree::path(3);
        let g = Graph::complete(6);
        let anchors = AnchorConstraint::none()
            .with_forbidden(VertexSet::from_iter([0, 1]))
            .with_preferred(VertexSet::from_iter([4, 5]), Preference::Prefer);
        let out = greedy_embed(&t, &g, &anchors, Traversal::Bfs).unwrap();
        assert!(out.is_success());
        assert_eq!(out.map.get(0), Some(4));
        assert_eq!(out.map.get(1), Some(5));
        assert_eq!(out.map.get(2), Some(2));
    }

    #[test]
    fn hall_examples() {
        // one parent, three slots, three unused neighbors
        let star = Tree::star(3);
        let g = Graph::complete(5);
        let mut f = Embedding::new(4);
        f.set(0, 0);
        let out = hall_complete(
            &f,
            &[LeafSlot {
                parent: 0,
                leaves: vec![1, 2, 3],
            }],
            &g,
        )
        .unwrap();
        assert!(out.is_success());
        assert!(validate_embedding(&star, &g, &out.map).complete_valid);

        // two parents share exactly one unused neighbor
        let host = Graph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let t = Tree::new(4, vec![(0, 1), (0, 2), (1, 3)]).unwrap();
        let mut f = Embedding::new(4);
        f.set(0, 0);
        f.set(1, 1);
        let out = hall_complete(
            &f,
            &[
                LeafSlot {
                    parent: 0,
                    leaves: vec![2],
                },
                LeafSlot {
                    parent: 1,
                    leaves: vec![3],
                },
            ],
            &host,
        )
        .unwrap();
        assert!(!out.is_success());
        let violator = out.violator.expect("pigeonhole violator");
        assert_eq!(violator.slot_count(), 2);
        assert!(violator.neighborhood.len() < violator.slot_count());
        let _ = t;
    }

    #[test]
    fn hall_matches_brute_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let host_n = rng.gen_range(2..=12);
            let lefts = rng.gen_range(1..=6);
            let cands: Vec<Vec<usize>> = (0..lefts)
                .map(|_| {
                    let mut c: Vec<usize> = (0..host_n).filter(|_| rng.gen_bool(0.4)).collect();
                    c.sort_unstable();
                    c
                })
                .collect();
            let ours = max_matching(&cands, host_n)
                .iter()
                .filter(|m| m.is_some())
                .count();
            assert_eq!(ours, brute_max_matching(&cands));
        }
    }

    #[test]
    fn ordered_hall_reports_pairs() {
        let t = Tree::new(7, vec![(0, 1), (1, 2), (0, 3), (0, 4), (1, 5), (2, 6)]).unwrap();
        let leaf_set = VertexSet::from_iter([3, 4, 5, 6]);
        let ordering = crate::tree::good_ordering(&t, &leaf_set).unwrap();
        let g = Graph::complete(9);
        let mut f = Embedding::new(7);
        f.set(0, 0);
        f.set(1, 1);
        f.set(2, 2);
        let (out, pairs) = hall_complete_ordered(&f, &ordering, &g, 8).unwrap();
        assert!(out.is_success());
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].held);
    }

    #[test]
    fn blockwise_examples() {
        let out = bfs_blockwise_embed(&Tree::path(4), &Graph::cycle(9)).unwrap();
        assert!(out.is_success());
        assert!(validate_embedding(&Tree::path(4), &Graph::cycle(9), &out.map).complete_valid);

        let out = bfs_blockwise_embed(&Tree::star(4), &Graph::cycle(9)).unwrap();
        assert!(!out.is_success());
    }

    /// 3-regular bipartite graph of girth 8 on 30 vertices: one side the
    /// 15 edges of K6, the other the 15 perfect matchings, joined by
    /// containment.
    fn girth_eight_cage() -> Graph {
        let k6_edges: Vec<(usize, usize)> = (0..6)
            .flat_map(|u| (u + 1..6).map(move |w| (u, w)))
            .collect();
        let mut matchings = Vec::new();
        for a in 1..6 {
            let mut rest: Vec<usize> = (1..6).filter(|&x| x != a).collect();
            // pair 0 with a; split the remaining four into two pairs
            let (r0, r1, r2, r3) = (rest.remove(0), rest.remove(0), rest.remove(0), rest[0]);
            for (b, c, d, e) in [(r0, r1, r2, r3), (r0, r2, r1, r3), (r0, r3, r1, r2)] {
                matchings.push(vec![(0, a), (b.min(c), b.max(c)), (d.min(e), d.max(e))]);
            }
        }
        assert_eq!(matchings.len(), 15);
        let mut edges = Vec::new();
        for (mi, matching) in matchings.iter().enumerate() {
            for pair in matching {
                let ei = k6_edges.iter().position(|e| e == pair).unwrap();
                edges.push((ei, 15 + mi));
            }
        }
        let g = Graph::from_edges(30, &edges).unwrap();
        assert_eq!(g.min_degree(), 3);
        assert_eq!(g.max_degree(), 3);
        assert_eq!(g.girth(), Some(8));
        g
    }

    #[test]
    fn blockwise_into_high_girth_cubic_host() {
        // any tree with max degree 3 on at most 7 vertices embeds blockwise
        let cage = girth_eight_cage();
        let p7 = Tree::path(7);
        let out = bfs_blockwise_embed(&p7, &cage).unwrap();
        assert!(out.is_success());
        assert!(validate_embedding(&p7, &cage, &out.map).complete_valid);

        let spider = spider_tree(2); // 7 vertices, max degree 3
        let out = bfs_blockwise_embed(&spider, &cage).unwrap();
        assert!(out.is_success());
        assert!(validate_embedding(&spider, &cage, &out.map).complete_valid);
    }

    #[test]
    fn successes_always_validate_under_fuzz() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..10_000 {
            let t_n = rng.gen_range(2..=9);
            let h_n = rng.gen_range(2..=10);
            let tree = crate::gen::random_tree(t_n, &mut rng);
            let mut edges = Vec::new();
            for u in 0..h_n {
                for w in u + 1..h_n {
                    if rng.gen_bool(0.5) {
                        edges.push((u, w));
                    }
                }
            }
            let host = Graph::from_edges(h_n, &edges).unwrap();
            let greedy =
                greedy_embed(&tree, &host, &AnchorConstraint::none(), Traversal::Bfs).unwrap();
            if greedy.is_success() {
                assert!(validate_embedding(&tree, &host, &greedy.map).complete_valid);
            }
            let block = bfs_blockwise_embed(&tree, &host).unwrap();
            if block.is_success() {
                assert!(validate_embedding(&tree, &host, &block.map).complete_valid);
            }
            let s = rng.gen_range(0..t_n);
            let star = star_heavy_embed(&tree, &host, s).unwrap();
            if star.is_success() {
                assert!(validate_embedding(&tree, &host, &star.map).complete_valid);
            }
        }
    }

    #[test]
    fn star_heavy_examples() {
        let out = star_heavy_embed(&Tree::star(5), &Graph::complete(6), 0).unwrap();
        assert!(out.is_success());
        assert!(validate_embedding(&Tree::star(5), &Graph::complete(6), &out.map).complete_valid);

        // no embedding of the spider exists in the twin-triangle host at all
        let out = star_heavy_embed(&spider_tree(2), &twin_triangles_universal(), 0).unwrap();
        assert!(!out.is_success());

        // broom: a path with a fan of leaves at one end
        let broom = Tree::new(7, vec![(0, 1), (1, 2), (2, 3), (2, 4), (2, 5), (2, 6)]).unwrap();
        let out = star_heavy_embed(&broom, &Graph::complete(8), 2).unwrap();
        assert!(out.is_success());
        assert!(validate_embedding(&broom, &Graph::complete(8), &out.map).complete_valid);
    }
}
