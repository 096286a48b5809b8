//! Filling almost-complete and almost-complete-bipartite subgraphs with
//! trees larger than the minimum degree would allow.
//!
//! The clique-side procedures share one engine: build a stable set `S` of
//! leaves and chain vertices, embed greedily up to the parents of the far
//! half `S - S'`, unembed the near half `S'`, compute the `Bad` set of hosts
//! good for too few `S'`-vertices, drain `Bad` while placing the far half,
//! and finish `S'` by a Hall matching over "good" hosts. The variants differ
//! in how `Bad` gets drained: best effort, overloading one parent onto a
//! universal vertex, or happy/unhappy halving.

use serde::Serialize;

use crate::embed::{embed_component, EmbedOutcome, Occupancy, StuckEvidence};
use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, BipartitePair, Embedding, Graph, VertexSet};
use crate::num::{ratio, ratio_string, Ratio};
use crate::tree::{bipartition, good_ordering, leaf_profile, separator, stable_set_s, Tree};

#[derive(Clone, Debug)]
pub enum FillTarget {
    Clique(Graph),
    Bipartite { graph: Graph, pair: BipartitePair },
}

/// A filling task: the target subgraph, the tree, the slack parameter, and
/// optionally a universal vertex. Strict mode refuses when the stated
/// hypotheses fail; relaxed mode (the default) records them as warnings and
/// attempts the procedure anyway.
#[derive(Clone, Debug)]
pub struct FillTask {
    pub target: FillTarget,
    pub tree: Tree,
    pub epsilon: Ratio,
    pub universal: Option<usize>,
    pub strict: bool,
}

impl FillTask {
    pub fn clique(h: Graph, tree: Tree, epsilon: Ratio) -> FillTask {
        FillTask {
            target: FillTarget::Clique(h),
            tree,
            epsilon,
            universal: None,
            strict: false,
        }
    }

    pub fn bipartite(graph: Graph, pair: BipartitePair, tree: Tree, epsilon: Ratio) -> FillTask {
        FillTask {
            target: FillTarget::Bipartite { graph, pair },
            tree,
            epsilon,
            universal: None,
            strict: false,
        }
    }

    pub fn with_universal(mut self, v: usize) -> FillTask {
        self.universal = Some(v);
        self
    }

    pub fn strict(mut self, strict: bool) -> FillTask {
        self.strict = strict;
        self
    }

    fn epsilon_in_range(&self) -> Result<()> {
        let zero = Ratio::from_integer(0);
        if self.epsilon <= zero || self.epsilon > ratio(1, 4) {
            return Err(Error::invalid(format!(
                "epsilon = {} outside (0, 1/4]",
                ratio_string(self.epsilon)
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FillDiagnostics {
    pub s_size: usize,
    pub s_prime_size: usize,
    pub bad_size: usize,
    pub unused_bad_at_hall: usize,
    pub happy_parents: usize,
    pub unhappy_parents: usize,
    /// Vertices embedded outside the target subgraph.
    pub spilled: usize,
    pub hypothesis_warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct FillReport {
    pub outcome: EmbedOutcome,
    pub diagnostics: FillDiagnostics,
}

impl FillReport {
    pub fn is_success(&self) -> bool {
        self.outcome.is_success()
    }
}

fn hypothesis(warnings: &mut Vec<String>, strict: bool, ok: bool, msg: String) -> Result<()> {
    if ok {
        return Ok(());
    }
    if strict {
        return Err(Error::invalid(format!("strict mode: {msg}")));
    }
    warnings.push(msg);
    Ok(())
}

// ---------------------------------------------------------------------------
// clique-side engine
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
enum DrainMode {
    /// Best-effort draining.
    Plain,
    /// Avoid `v` throughout; one overloaded parent lands on `v` and empties
    /// the Bad set.
    Universal { v: usize },
    /// Happy/unhappy halving accounting, no reserve vertex.
    Halving,
}

struct CliqueFill<'a> {
    h: &'a Graph,
    tree: &'a Tree,
    z: usize,
    z_image: usize,
    epsilon: Ratio,
    mode: DrainMode,
    strict: bool,
}

impl<'a> CliqueFill<'a> {
    fn run(&self, diag: &mut FillDiagnostics) -> Result<EmbedOutcome> {
        let t = self.tree;
        let h = self.h;
        if self.z_image >= h.n() {
            return Err(Error::invalid(format!(
                "image {} outside the target subgraph",
                self.z_image
            )));
        }
        if let DrainMode::Universal { v } = self.mode {
            if v == self.z_image {
                return Err(Error::invalid("universal vertex chosen as the root image"));
            }
        }
        let mut f = Embedding::new(t.n());
        let mut occ = Occupancy::new(h.n());
        f.set(self.z, self.z_image);
        occ.take(self.z_image);
        if t.n() == 1 {
            return Ok(EmbedOutcome::success(f));
        }

        let rooted = t.rooted(self.z);
        let m_prime = t.edge_count() as i64;
        let stable = stable_set_s(t, self.z)?;
        diag.s_size = stable.len();

        // S': whole sibling groups, nearest to the root first, until half
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &s in &stable.members {
            groups.entry(rooted.parent[s]).or_default().push(s);
        }
        let mut groups: Vec<(usize, Vec<usize>)> = groups.into_iter().collect();
        groups.sort_by_key(|(parent, members)| (rooted.depth[members[0]], *parent));
        let mut s_prime: Vec<usize> = Vec::new();
        for (_, members) in &groups {
            if 2 * s_prime.len() >= stable.len() {
                break;
            }
            s_prime.extend(members.iter().copied());
        }
        s_prime.sort_unstable();
        diag.s_prime_size = s_prime.len();
        let overshoot_ok = Ratio::from_integer(2 * s_prime.len() as i64)
            <= Ratio::from_integer(stable.len() as i64)
                + self.epsilon * Ratio::from_integer(m_prime);
        if !overshoot_ok {
            let msg = format!(
                "near-half selection overshot: |S'| = {} of |S| = {}",
                s_prime.len(),
                stable.len()
            );
            if self.strict {
                return Err(Error::internal(msg));
            }
            diag.hypothesis_warnings.push(msg);
        }
        let mut in_s_prime = vec![false; t.n()];
        for &s in &s_prime {
            in_s_prime[s] = true;
        }
        let s_far: Vec<usize> = stable
            .members
            .iter()
            .copied()
            .filter(|&s| !in_s_prime[s])
            .collect();
        let mut in_s_far = vec![false; t.n()];
        for &s in &s_far {
            in_s_far[s] = true;
        }

        // phase A: embed the component of z after cutting the neighbors of
        // the far half; it contains z, all of S', and the children of S'
        let mut cut = vec![false; t.n()];
        for &s in &s_far {
            for &u in t.neighbors(s) {
                cut[u] = true;
            }
        }
        let mut in_phase_a = vec![false; t.n()];
        in_phase_a[self.z] = true;
        let mut queue = std::collections::VecDeque::from([self.z]);
        while let Some(u) = queue.pop_front() {
            for &w in t.neighbors(u) {
                if !in_phase_a[w] && !cut[w] && !in_s_far[w] {
                    in_phase_a[w] = true;
                    queue.push_back(w);
                }
            }
        }
        for &s in &s_prime {
            if !in_phase_a[s] {
                diag.hypothesis_warnings
                    .push(format!("near-half vertex {s} fell outside the first phase"));
            }
        }
        let mut v_used = false;
        let avoid = |mode: DrainMode, v_used: bool| -> Option<usize> {
            match mode {
                DrainMode::Universal { v } if !v_used => Some(v),
                _ => None,
            }
        };

        for idx in 1..rooted.bfs_order.len() {
            let u = rooted.bfs_order[idx];
            if !in_phase_a[u] {
                continue;
            }
            let p_img = match f.get(rooted.parent[u]) {
                Some(img) => img,
                None => continue,
            };
            let skip = avoid(self.mode, v_used);
            let pick = h
                .neighbors(p_img)
                .iter()
                .copied()
                .find(|&x| !occ.is_used(x) && Some(x) != skip);
            match pick {
                Some(x) => {
                    occ.take(x);
                    f.set(u, x);
                }
                None => return Ok(self.stuck(f, u, rooted.parent[u], Some(p_img), &occ)),
            }
        }

        // unembed the near half
        for &s in &s_prime {
            if let Some(img) = f.get(s) {
                occ.release(img);
                f.unset(s);
            }
        }
        debug_assert_eq!(occ.used_count(), f.assigned());

        // Bad: hosts good for at most half of S'
        let good_for = |u: usize, s: usize, f: &Embedding| -> bool {
            t.neighbors(s)
                .iter()
                .all(|&x| f.get(x).is_none_or(|img| h.has_edge(u, img)))
        };
        let bad: Vec<bool> = (0..h.n())
            .map(|u| {
                let good = s_prime.iter().filter(|&&s| good_for(u, s, &f)).count();
                2 * good <= s_prime.len()
            })
            .collect();
        diag.bad_size = bad.iter().filter(|&&b| b).count();

        // phase B: embed everything outside S' that phase A missed
        for idx in 0..rooted.bfs_order.len() {
            let u = rooted.bfs_order[idx];
            if f.is_set(u) || in_s_prime[u] {
                continue;
            }
            let parent = rooted.parent[u];
            let p_img = f
                .get(parent)
                .ok_or_else(|| Error::internal(format!("parent of {u} unembedded in phase B")))?;
            let s_children: Vec<usize> = rooted.children[u]
                .iter()
                .copied()
                .filter(|&c| in_s_far[c])
                .collect();
            let skip = avoid(self.mode, v_used);
            if s_children.is_empty() {
                match h
                    .neighbors(p_img)
                    .iter()
                    .copied()
                    .find(|&x| !occ.is_used(x) && Some(x) != skip)
                {
                    Some(x) => {
                        occ.take(x);
                        f.set(u, x);
                    }
                    None => return Ok(self.stuck(f, u, parent, Some(p_img), &occ)),
                }
                continue;
            }
            // parent of far-half vertices: aim at the unused part of Bad
            let coverage = |x: usize, occ: &Occupancy| {
                h.neighbors(x)
                    .iter()
                    .filter(|&&w| bad[w] && !occ.is_used(w))
                    .count()
            };
            let best = h
                .neighbors(p_img)
                .iter()
                .copied()
                .filter(|&x| !occ.is_used(x) && Some(x) != skip)
                .max_by_key(|&x| (coverage(x, &occ), std::cmp::Reverse(x)));
            let Some(mut u_img) = best else {
                return Ok(self.stuck(f, u, parent, Some(p_img), &occ));
            };
            let mut on_universal = false;
            if let DrainMode::Universal { v } = self.mode {
                let capacity = coverage(u_img, &occ);
                if !v_used
                    && 2 * capacity < s_children.len()
                    && !occ.is_used(v)
                    && h.has_edge(p_img, v)
                {
                    u_img = v;
                    v_used = true;
                    on_universal = true;
                }
            }
            occ.take(u_img);
            f.set(u, u_img);
            // children of the far half: unused Bad first
            let mut into_bad = 0usize;
            for &c in &s_children {
                let skip = avoid(self.mode, v_used);
                let pick = h
                    .neighbors(u_img)
                    .iter()
                    .copied()
                    .find(|&x| bad[x] && !occ.is_used(x) && Some(x) != skip)
                    .or_else(|| {
                        h.neighbors(u_img)
                            .iter()
                            .copied()
                            .find(|&x| !occ.is_used(x) && Some(x) != skip)
                    });
                match pick {
                    Some(x) => {
                        if bad[x] {
                            into_bad += 1;
                        }
                        occ.take(x);
                        f.set(c, x);
                    }
                    None => return Ok(self.stuck(f, c, u, Some(u_img), &occ)),
                }
            }
            if on_universal || 2 * into_bad >= s_children.len() {
                diag.happy_parents += 1;
            } else {
                diag.unhappy_parents += 1;
            }
        }
        debug_assert_eq!(occ.used_count(), f.assigned());

        // Hall stage for the near half; "good" recomputed on the final images
        diag.unused_bad_at_hall = (0..h.n()).filter(|&u| bad[u] && !occ.is_used(u)).count();
        let cands: Vec<Vec<usize>> = s_prime
            .iter()
            .map(|&s| {
                (0..h.n())
                    .filter(|&u| !occ.is_used(u) && good_for(u, s, &f))
                    .collect()
            })
            .collect();
        let match_of = crate::embed::max_matching(&cands, h.n());
        if let Some(first) = match_of.iter().position(Option::is_none) {
            let (w, rights) = crate::embed::hall_violator_from(first, &cands, &match_of, h.n());
            let mut outcome =
                self.stuck(f, s_prime[first], rooted.parent[s_prime[first]], None, &occ);
            outcome.violator = Some(crate::embed::HallViolator {
                parents: w.iter().map(|&i| (s_prime[i], 1)).collect(),
                neighborhood: rights,
            });
            return Ok(outcome);
        }
        for (i, m) in match_of.iter().enumerate() {
            f.set(s_prime[i], m.unwrap());
        }
        Ok(EmbedOutcome::success(f))
    }

    fn stuck(
        &self,
        f: Embedding,
        vertex: usize,
        parent: usize,
        parent_image: Option<usize>,
        occ: &Occupancy,
    ) -> EmbedOutcome {
        let saturated = parent_image
            .map(|img| {
                self.h
                    .neighbors(img)
                    .iter()
                    .copied()
                    .filter(|&x| occ.is_used(x))
                    .collect()
            })
            .unwrap_or_default();
        EmbedOutcome::stuck(
            f,
            StuckEvidence {
                vertex,
                parent: (parent != usize::MAX).then_some(parent),
                parent_image,
                saturated,
            },
        )
    }
}

// ---------------------------------------------------------------------------
// clique-side operations
// ---------------------------------------------------------------------------

/// Fills an almost-complete subgraph with a tree rooted at `z`, placing `z`
/// on any prescribed image.
pub fn fill_almost_complete(task: &FillTask, z: usize, z_image: usize) -> Result<FillReport> {
    let FillTarget::Clique(h) = &task.target else {
        return Err(Error::invalid("clique fill on a bipartite target"));
    };
    task.epsilon_in_range()?;
    if z >= task.tree.n() {
        return Err(Error::invalid(format!("root {z} out of range")));
    }
    if z_image >= h.n() {
        return Err(Error::invalid(format!("root image {z_image} out of range")));
    }
    let mut warnings = Vec::new();
    let n1 = Ratio::from_integer(h.n() as i64 - 1);
    let m_prime = Ratio::from_integer(task.tree.edge_count() as i64);
    let eps = task.epsilon;
    if task.strict && eps >= ratio(1, 200) {
        return Err(Error::invalid("strict mode needs epsilon below 1/200"));
    }
    hypothesis(
        &mut warnings,
        task.strict,
        Ratio::from_integer(h.min_degree() as i64)
            >= (Ratio::from_integer(1) - ratio(2, 1) * eps) * n1,
        format!("target min degree {} below (1-2eps)(n-1)", h.min_degree()),
    )?;
    hypothesis(
        &mut warnings,
        task.strict,
        ratio(2, 1) * m_prime >= n1 && m_prime <= (Ratio::from_integer(1) - eps) * n1,
        format!(
            "tree size {} outside [(n-1)/2, (1-eps)(n-1)]",
            task.tree.edge_count()
        ),
    )?;
    if task.tree.n() >= 2 {
        let (_, max_leaves, _) = leaf_profile(&task.tree)?;
        hypothesis(
            &mut warnings,
            task.strict,
            Ratio::from_integer(2 * max_leaves as i64) <= eps * m_prime,
            format!("a vertex has {max_leaves} leaf neighbors, above eps*m'/2"),
        )?;
    }

    let engine = CliqueFill {
        h,
        tree: &task.tree,
        z,
        z_image,
        epsilon: eps,
        mode: DrainMode::Plain,
        strict: task.strict,
    };
    let mut diag = FillDiagnostics::default();
    let mut outcome = engine.run(&mut diag)?;
    outcome.warnings.extend(warnings.iter().cloned());
    diag.hypothesis_warnings.extend(warnings);
    Ok(FillReport {
        outcome,
        diagnostics: diag,
    })
}

/// Pads the tree with subdivisions of one leaf edge until it has `extra`
/// more edges; returns the padded tree and, when padding happened, the
/// padded leaf plus the subdivision vertex adjacent to the leaf's parent.
fn pad_by_subdivision(t: &Tree, extra: usize) -> (Tree, Option<(usize, usize)>) {
    if extra == 0 {
        return (t.clone(), None);
    }
    let leaf = *t
        .leaves()
        .first()
        .expect("trees with at least two vertices have leaves");
    let parent = t.neighbors(leaf)[0];
    let n = t.n();
    let mut edges: Vec<(usize, usize)> = t
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| !((u == leaf && v == parent) || (u == parent && v == leaf)))
        .collect();
    // chain parent - n - n+1 - ... - n+extra-1 - leaf
    edges.push((parent, n));
    for i in 0..extra - 1 {
        edges.push((n + i, n + i + 1));
    }
    edges.push((n + extra - 1, leaf));
    let padded = Tree::new(n + extra, edges).expect("padding keeps a tree");
    (padded, Some((leaf, n)))
}

/// Fills a subgraph on `m'+1` vertices that has a universal vertex with any
/// tree of at most `m'` edges, padding the tree by leaf-edge subdivision to
/// exactly `m'` edges first and contracting the padding afterwards.
pub fn fill_with_universal(task: &FillTask) -> Result<FillReport> {
    let FillTarget::Clique(h) = &task.target else {
        return Err(Error::invalid("clique fill on a bipartite target"));
    };
    task.epsilon_in_range()?;
    let v = task
        .universal
        .ok_or_else(|| Error::invalid("no universal vertex given"))?;
    if v >= h.n() {
        return Err(Error::invalid(format!("universal vertex {v} out of range")));
    }
    if h.degree(v) != h.n() - 1 {
        return Err(Error::invalid(format!(
            "vertex {v} sees {} of {} others",
            h.degree(v),
            h.n() - 1
        )));
    }
    let m_prime = h.n() - 1;
    if task.tree.edge_count() > m_prime {
        return Err(Error::invalid(format!(
            "tree has {} edges, target takes at most {m_prime}",
            task.tree.edge_count()
        )));
    }
    if task.tree.n() == 1 {
        let mut f = Embedding::new(1);
        f.set(0, 0);
        return Ok(FillReport {
            outcome: EmbedOutcome::success(f),
            diagnostics: FillDiagnostics::default(),
        });
    }
    let mut warnings = Vec::new();
    let eps = task.epsilon;
    if task.strict && eps >= ratio(1, 200) {
        return Err(Error::invalid("strict mode needs epsilon below 1/200"));
    }
    hypothesis(
        &mut warnings,
        task.strict,
        Ratio::from_integer(h.min_degree() as i64)
            >= (Ratio::from_integer(1) - ratio(2, 1) * eps) * Ratio::from_integer(m_prime as i64),
        format!("target min degree {} below (1-2eps)m'", h.min_degree()),
    )?;
    let (_, max_leaves, _) = leaf_profile(&task.tree)?;
    hypothesis(
        &mut warnings,
        task.strict,
        Ratio::from_integer(2 * max_leaves as i64) <= eps * Ratio::from_integer(m_prime as i64),
        format!("a vertex has {max_leaves} leaf neighbors, above eps*m'/2"),
    )?;

    let (padded, pad_info) = pad_by_subdivision(&task.tree, m_prime - task.tree.edge_count());
    let z = separator(&padded).z;
    let z_image = (0..h.n())
        .find(|&x| x != v)
        .expect("subgraph has 2+ vertices");
    let engine = CliqueFill {
        h,
        tree: &padded,
        z,
        z_image,
        epsilon: eps,
        mode: DrainMode::Universal { v },
        strict: task.strict,
    };
    let mut diag = FillDiagnostics::default();
    diag.hypothesis_warnings.extend(warnings.iter().cloned());
    let padded_outcome = engine.run(&mut diag)?;

    // contract the padding: the original leaf takes the image of the
    // subdivision vertex adjacent to its parent
    let mut outcome = if padded.n() == task.tree.n() {
        padded_outcome
    } else {
        let mut f = Embedding::new(task.tree.n());
        for tv in 0..task.tree.n() {
            if let Some(img) = padded_outcome.map.get(tv) {
                f.set(tv, img);
            }
        }
        if let Some((leaf, first_subdivision)) = pad_info {
            if let Some(img) = padded_outcome.map.get(first_subdivision) {
                f.set(leaf, img);
            }
        }
        if padded_outcome.is_success() {
            EmbedOutcome::success(f)
        } else {
            let evidence = padded_outcome.evidence.unwrap_or(StuckEvidence {
                vertex: 0,
                parent: None,
                parent_image: None,
                saturated: Vec::new(),
            });
            let vertex = evidence.vertex.min(task.tree.n().saturating_sub(1));
            let mut out = EmbedOutcome::stuck(f, StuckEvidence { vertex, ..evidence });
            out.violator = padded_outcome.violator;
            out
        }
    };
    outcome.warnings.extend(warnings);
    Ok(FillReport {
        outcome,
        diagnostics: diag,
    })
}

/// Fills around a vertex `v` of full degree: either `v` sees `m` vertices of
/// the target and the universal fill applies to that neighborhood, or a
/// forest is routed outside the target and the rest fills `N(v)` inside it.
pub fn fill_and_spill(
    t: &Tree,
    g: &Graph,
    h_prime: &VertexSet,
    v: usize,
    gamma: Ratio,
) -> Result<FillReport> {
    h_prime.validate_range(g.n())?;
    if !h_prime.contains(v) {
        return Err(Error::invalid(format!(
            "vertex {v} not in the target subgraph"
        )));
    }
    let m = t.edge_count();
    let m_ratio = Ratio::from_integer(m as i64);
    let mut diag = FillDiagnostics::default();
    let dense_floor = (Ratio::from_integer(1) - ratio(3, 1) * gamma) * m_ratio;
    let (hg, _) = induced_subgraph(g, h_prime)?;
    if Ratio::from_integer(hg.min_degree() as i64) < dense_floor {
        diag.hypothesis_warnings.push(format!(
            "target min degree {} below (1-3gamma)m",
            hg.min_degree()
        ));
    }
    let outside: VertexSet = (0..g.n()).filter(|x| !h_prime.contains(*x)).collect();
    if !outside.is_empty() {
        let (og, _) = induced_subgraph(g, &outside)?;
        if Ratio::from_integer(og.min_degree() as i64) < dense_floor {
            diag.hypothesis_warnings.push(format!(
                "outside min degree {} below (1-3gamma)m",
                og.min_degree()
            ));
        }
    }
    if g.degree(v) < m {
        diag.hypothesis_warnings.push(format!(
            "vertex {v} has degree {} below m = {m}",
            g.degree(v)
        ));
    }
    if Ratio::from_integer(h_prime.len() as i64)
        > Ratio::from_integer(m as i64 + 1) + ratio(3, 1) * gamma * m_ratio
    {
        diag.hypothesis_warnings.push(format!(
            "target has {} vertices, above m+1+3gamma*m",
            h_prime.len()
        ));
    }

    let nv_inside: Vec<usize> = g
        .neighbors(v)
        .iter()
        .copied()
        .filter(|&x| h_prime.contains(x))
        .collect();

    // v seeing m target vertices reduces to the universal fill on N(v)
    if nv_inside.len() >= m {
        let core: VertexSet = std::iter::once(v)
            .chain(nv_inside.iter().copied().take(m))
            .collect();
        let (core_graph, core_map) = induced_subgraph(g, &core)?;
        let v_local = core_map.iter().position(|&x| x == v).unwrap();
        let eps = (ratio(3, 1) * gamma).min(ratio(1, 4));
        let sub = FillTask::clique(core_graph, t.clone(), eps).with_universal(v_local);
        let mut report = fill_with_universal(&sub)?;
        let mut f = Embedding::new(t.n());
        for tv in 0..t.n() {
            if let Some(img) = report.outcome.map.get(tv) {
                f.set(tv, core_map[img]);
            }
        }
        report.outcome.map = f;
        report.outcome.tree_n = t.n();
        report
            .diagnostics
            .hypothesis_warnings
            .extend(diag.hypothesis_warnings);
        return Ok(report);
    }

    let a = (m + 1).saturating_sub(nv_inside.len()).max(1);
    let sep = separator(t);
    let z = sep.z;
    let rooted = t.rooted(z);
    let comps = &sep.components;
    let a_largest_total: usize = comps.iter().take(a).map(|c| c.len()).sum();
    let s_small = Ratio::from_integer(a_largest_total as i64) <= ratio(3, 1) * gamma * m_ratio;

    let mut f = Embedding::new(t.n());
    let mut occ = Occupancy::new(g.n());
    f.set(z, v);
    occ.take(v);
    let nv_outside: Vec<usize> = g
        .neighbors(v)
        .iter()
        .copied()
        .filter(|&x| !h_prime.contains(x))
        .collect();

    let stuck_report = |f: Embedding, e: StuckEvidence, diag: FillDiagnostics| -> FillReport {
        let mut out = EmbedOutcome::stuck(f, e);
        out.warnings.clone_from(&diag.hypothesis_warnings);
        FillReport {
            outcome: out,
            diagnostics: diag,
        }
    };

    if !s_small || comps.len() < a {
        // route a mid-sized batch of components outside, fill the rest inside
        let lo_ratio = ratio(3, 1) * gamma * m_ratio;
        let lo = (lo_ratio.ceil().to_integer().max(1)) as usize;
        let hi = (m / 2).max(lo);
        let mut outside_roots: std::collections::HashSet<usize> = Default::default();
        let mut total = 0;
        for comp in comps {
            if total >= lo {
                break;
            }
            if total + comp.len() <= hi {
                total += comp.len();
                outside_roots.insert(comp[0]);
            }
        }
        if total < lo {
            diag.hypothesis_warnings.push(format!(
                "outside batch reached only {total} of {lo} vertices"
            ));
        }
        diag.spilled = total;
        for comp in comps.iter().filter(|c| outside_roots.contains(&c[0])) {
            if let Err(e) = embed_component(
                g,
                &rooted,
                comp,
                &nv_outside,
                &mut f,
                &mut occ,
                Some(h_prime),
                None,
            ) {
                return Ok(stuck_report(f, e, diag));
            }
        }
        for comp in comps.iter().filter(|c| !outside_roots.contains(&c[0])) {
            if let Err(e) = embed_component(
                g,
                &rooted,
                comp,
                &nv_inside,
                &mut f,
                &mut occ,
                Some(&outside),
                None,
            ) {
                return Ok(stuck_report(f, e, diag));
            }
        }
        let mut out = EmbedOutcome::success(f);
        out.warnings.clone_from(&diag.hypothesis_warnings);
        return Ok(FillReport {
            outcome: out,
            diagnostics: diag,
        });
    }

    // small-s branch: the a largest components go outside, the rest of the
    // tree fills {v} + N(v) inside the target with halving drainage
    let forest: Vec<&Vec<usize>> = comps.iter().take(a).collect();
    let forest_total: usize = forest.iter().map(|c| c.len()).sum();
    for comp in &forest {
        if let Err(e) = embed_component(
            g,
            &rooted,
            comp,
            &nv_outside,
            &mut f,
            &mut occ,
            Some(h_prime),
            None,
        ) {
            return Ok(stuck_report(f, e, diag));
        }
    }
    diag.spilled = forest_total;

    let forest_ids: std::collections::HashSet<usize> =
        forest.iter().flat_map(|c| c.iter().copied()).collect();
    let keep: VertexSet = (0..t.n()).filter(|x| !forest_ids.contains(x)).collect();
    let (t_rest, t_map) = t.induced_subtree(&keep)?;
    let z_local = t_map.iter().position(|&x| x == z).unwrap();

    let core: VertexSet = std::iter::once(v)
        .chain(nv_inside.iter().copied())
        .collect();
    let (core_graph, core_map) = induced_subgraph(g, &core)?;
    let v_local = core_map.iter().position(|&x| x == v).unwrap();
    let engine = CliqueFill {
        h: &core_graph,
        tree: &t_rest,
        z: z_local,
        z_image: v_local,
        epsilon: (ratio(3, 1) * gamma).min(ratio(1, 4)),
        mode: DrainMode::Halving,
        strict: false,
    };
    let inner = engine.run(&mut diag)?;
    for (local, &orig) in t_map.iter().enumerate() {
        if orig == z {
            continue; // already placed on v
        }
        if let Some(img) = inner.map.get(local) {
            f.set(orig, core_map[img]);
        }
    }
    let bad_bound = ratio(24, 1) * gamma * m_ratio;
    if Ratio::from_integer(diag.bad_size as i64) > bad_bound {
        diag.hypothesis_warnings.push(format!(
            "bad set of {} exceeded 24*gamma*m = {}",
            diag.bad_size,
            ratio_string(bad_bound)
        ));
    }
    let mut outcome = if inner.is_success() {
        EmbedOutcome::success(f)
    } else {
        let evidence = inner.evidence.map(|e| StuckEvidence {
            vertex: t_map[e.vertex],
            parent: e.parent.map(|p| t_map[p]),
            parent_image: e.parent_image.map(|img| core_map[img]),
            saturated: e.saturated.iter().map(|&x| core_map[x]).collect(),
        });
        EmbedOutcome::stuck(
            f,
            evidence.unwrap_or(StuckEvidence {
                vertex: z,
                parent: None,
                parent_image: None,
                saturated: Vec::new(),
            }),
        )
    };
    outcome.warnings.clone_from(&diag.hypothesis_warnings);
    Ok(FillReport {
        outcome,
        diagnostics: diag,
    })
}

// ---------------------------------------------------------------------------
// bipartite-side operations
// ---------------------------------------------------------------------------

/// Subgraph of `g` keeping only the edges crossing the pair.
fn cross_graph(g: &Graph, pair: &BipartitePair) -> Graph {
    let edges: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .filter(|&(u, w)| {
            (pair.a.contains(u) && pair.b.contains(w)) || (pair.b.contains(u) && pair.a.contains(w))
        })
        .collect();
    Graph::from_edges(g.n(), &edges).expect("filtered edges are valid")
}

/// Greedy side-respecting embedding of the whole tree, `C` into `a_side`
/// and `D` into `b_side`.
fn bipartite_greedy(
    h: &Graph,
    a_side: &VertexSet,
    b_side: &VertexSet,
    tree: &Tree,
    c_side: &VertexSet,
) -> (Embedding, Option<StuckEvidence>) {
    let root = c_side.iter().next().unwrap_or(0);
    let rooted = tree.rooted(root);
    let mut f = Embedding::new(tree.n());
    let mut occ = Occupancy::new(h.n());
    for &u in &rooted.bfs_order {
        let side = if c_side.contains(u) { a_side } else { b_side };
        let pick = if u == root {
            side.iter().find(|&x| !occ.is_used(x))
        } else {
            let p_img = f.get(rooted.parent[u]).expect("parent first");
            h.neighbors(p_img)
                .iter()
                .copied()
                .find(|&x| side.contains(x) && !occ.is_used(x))
        };
        match pick {
            Some(x) => {
                occ.take(x);
                f.set(u, x);
            }
            None => {
                let parent = rooted.parent[u];
                let parent_image = (parent != usize::MAX).then(|| f.get(parent)).flatten();
                let saturated = parent_image
                    .map(|img| {
                        h.neighbors(img)
                            .iter()
                            .copied()
                            .filter(|&x| occ.is_used(x))
                            .collect()
                    })
                    .unwrap_or_default();
                let evidence = StuckEvidence {
                    vertex: u,
                    parent: (parent != usize::MAX).then_some(parent),
                    parent_image,
                    saturated,
                };
                return (f, Some(evidence));
            }
        }
    }
    (f, None)
}

/// Fills an almost-complete bipartite target that has a vertex `v` in `A`
/// seeing all of `B`: greedy when the small color class is large enough,
/// otherwise pausing at half leaf coverage, draining the weighted Bad set,
/// overloading one parent onto `v`, and Hall-completing the paused leaves.
pub fn fill_bipartite_universal(task: &FillTask) -> Result<FillReport> {
    let FillTarget::Bipartite { graph, pair } = &task.target else {
        return Err(Error::invalid("bipartite fill on a clique target"));
    };
    task.epsilon_in_range()?;
    let v = task
        .universal
        .ok_or_else(|| Error::invalid("no universal vertex given"))?;
    if !pair.a.contains(v) {
        return Err(Error::invalid(format!(
            "universal vertex {v} not in side A"
        )));
    }
    let h = cross_graph(graph, pair);
    if !pair.b.iter().all(|b| h.has_edge(v, b)) {
        return Err(Error::invalid(format!("vertex {v} does not see all of B")));
    }
    let tree = &task.tree;
    let mut diag = FillDiagnostics::default();
    if tree.n() == 1 {
        let mut f = Embedding::new(1);
        let spot = pair
            .b
            .iter()
            .next()
            .ok_or_else(|| Error::invalid("side B is empty"))?;
        f.set(0, spot);
        return Ok(FillReport {
            outcome: EmbedOutcome::success(f),
            diagnostics: diag,
        });
    }
    let m_prime = tree.edge_count() as i64;
    let eps = task.epsilon;
    let coloring = bipartition(tree);
    if pair.b.len() < coloring.d.len() {
        return Err(Error::invalid(format!(
            "side B has {} vertices but the large color class needs {}",
            pair.b.len(),
            coloring.d.len()
        )));
    }
    let mut warnings = Vec::new();
    let side_cap = (Ratio::from_integer(1) + eps) * Ratio::from_integer(m_prime);
    hypothesis(
        &mut warnings,
        task.strict,
        Ratio::from_integer(pair.a.len() as i64) <= side_cap
            && Ratio::from_integer(pair.b.len() as i64) <= side_cap,
        format!("sides ({}, {}) above (1+eps)m'", pair.a.len(), pair.b.len()),
    )?;
    hypothesis(
        &mut warnings,
        task.strict,
        Ratio::from_integer(pair.min_cross_degree(graph) as i64)
            >= (Ratio::from_integer(1) - ratio(3, 1) * eps) * Ratio::from_integer(m_prime),
        format!(
            "cross min degree {} below (1-3eps)m'",
            pair.min_cross_degree(graph)
        ),
    )?;
    let (_, max_leaves, _) = leaf_profile(tree)?;
    hypothesis(
        &mut warnings,
        task.strict,
        Ratio::from_integer(2 * max_leaves as i64) <= eps * Ratio::from_integer(m_prime),
        format!("a vertex has {max_leaves} leaf children, above eps*m'/2"),
    )?;
    diag.hypothesis_warnings.clone_from(&warnings);

    let make_stuck = |f: Embedding,
                      vertex: usize,
                      parent: usize,
                      parent_image: Option<usize>,
                      warnings: &[String],
                      diag: FillDiagnostics| {
        let evidence = StuckEvidence {
            vertex,
            parent: (parent != usize::MAX).then_some(parent),
            parent_image,
            saturated: Vec::new(),
        };
        let mut out = EmbedOutcome::stuck(f, evidence);
        out.warnings.extend(warnings.iter().cloned());
        Ok(FillReport {
            outcome: out,
            diagnostics: diag,
        })
    };

    // large small-class: plain greedy succeeds under the hypotheses
    let c_large = Ratio::from_integer(coloring.c.len() as i64)
        >= ratio(3, 1) * eps * Ratio::from_integer(m_prime) + Ratio::from_integer(1);
    if c_large {
        let (f, stuck) = bipartite_greedy(&h, &pair.a, &pair.b, tree, &coloring.c);
        let mut outcome = match stuck {
            None => EmbedOutcome::success(f),
            Some(e) => EmbedOutcome::stuck(f, e),
        };
        outcome.warnings.extend(warnings);
        return Ok(FillReport {
            outcome,
            diagnostics: diag,
        });
    }

    // leafy branch
    let leaves_in_d: Vec<usize> = tree
        .leaves()
        .into_iter()
        .filter(|&x| coloring.d.contains(x))
        .collect();
    let l0: std::collections::HashSet<usize> = leaves_in_d.iter().copied().collect();
    let root = coloring
        .c
        .iter()
        .next()
        .ok_or_else(|| Error::invalid("tree has an empty color class"))?;
    let rooted = tree.rooted(root);
    let mut f = Embedding::new(tree.n());
    let mut occ = Occupancy::new(h.n());

    // embed the leaf-stripped tree until the embedded parents cover more
    // than half of the stripped leaves
    let mut covered: Vec<usize> = Vec::new();
    let mut paused_after = None;
    let order: Vec<usize> = rooted
        .bfs_order
        .iter()
        .copied()
        .filter(|x| !l0.contains(x))
        .collect();
    for (idx, &u) in order.iter().enumerate() {
        let side = if coloring.c.contains(u) {
            &pair.a
        } else {
            &pair.b
        };
        let pick = if u == root {
            side.iter().find(|&x| !occ.is_used(x) && x != v)
        } else {
            let p_img = f.get(rooted.parent[u]).expect("parent first");
            h.neighbors(p_img)
                .iter()
                .copied()
                .find(|&x| side.contains(x) && !occ.is_used(x) && x != v)
        };
        match pick {
            Some(x) => {
                occ.take(x);
                f.set(u, x);
            }
            None => {
                let parent = rooted.parent[u];
                let p_img = (parent != usize::MAX).then(|| f.get(parent)).flatten();
                return make_stuck(f, u, parent, p_img, &warnings, diag);
            }
        }
        if coloring.c.contains(u) {
            for &c in &rooted.children[u] {
                if l0.contains(&c) {
                    covered.push(c);
                }
            }
            if 2 * covered.len() > l0.len() {
                paused_after = Some(idx);
                break;
            }
        }
    }

    let paused_idx = paused_after.unwrap_or(order.len().saturating_sub(1));
    let deferred: std::collections::HashSet<usize> = covered.iter().copied().collect();

    // weights: embedded A-parents weighted by their deferred leaf count
    let x_parents: Vec<(usize, usize)> = order[..=paused_idx]
        .iter()
        .filter(|&&x| coloring.c.contains(x))
        .map(|&x| {
            let w = rooted.children[x]
                .iter()
                .filter(|&&c| deferred.contains(&c))
                .count();
            (x, w)
        })
        .filter(|&(_, w)| w > 0)
        .collect();
    let w_total: usize = x_parents.iter().map(|&(_, w)| w).sum();
    let bad: Vec<bool> = (0..h.n())
        .map(|b| {
            if !pair.b.contains(b) {
                return false;
            }
            let missed: usize = x_parents
                .iter()
                .filter(|&&(x, _)| !h.has_edge(f.get(x).unwrap(), b))
                .map(|&(_, w)| w)
                .sum();
            2 * missed >= w_total.max(1)
        })
        .collect();
    diag.bad_size = bad.iter().filter(|&&b| b).count();

    // finish embedding everything except the deferred leaves, eagerly
    // placing fresh leaf children (Bad first) and overloading one parent
    // onto v when Bad outgrows its remaining space
    let mut v_used = false;
    for &u in order.iter().skip(paused_idx + 1) {
        if f.is_set(u) {
            continue;
        }
        let p_img = f.get(rooted.parent[u]).expect("parent first");
        if coloring.d.contains(u) {
            match h
                .neighbors(p_img)
                .iter()
                .copied()
                .find(|&x| pair.b.contains(x) && !occ.is_used(x))
            {
                Some(x) => {
                    occ.take(x);
                    f.set(u, x);
                }
                None => return make_stuck(f, u, rooted.parent[u], Some(p_img), &warnings, diag),
            }
            continue;
        }
        // a C-vertex: take the A-candidate covering the most unused Bad
        let fresh_leaves: Vec<usize> = rooted.children[u]
            .iter()
            .copied()
            .filter(|c| l0.contains(c) && !deferred.contains(c))
            .collect();
        let unused_bad = (0..h.n()).filter(|&x| bad[x] && !occ.is_used(x)).count();
        let overload =
            !v_used && fresh_leaves.len() > unused_bad && h.has_edge(p_img, v) && !occ.is_used(v);
        let pick = if overload {
            v_used = true;
            Some(v)
        } else {
            h.neighbors(p_img)
                .iter()
                .copied()
                .filter(|&x| pair.a.contains(x) && !occ.is_used(x) && (v_used || x != v))
                .max_by_key(|&x| {
                    let cov = h
                        .neighbors(x)
                        .iter()
                        .filter(|&&w| bad[w] && !occ.is_used(w))
                        .count();
                    (cov, std::cmp::Reverse(x))
                })
        };
        match pick {
            Some(x) => {
                occ.take(x);
                f.set(u, x);
            }
            None => return make_stuck(f, u, rooted.parent[u], Some(p_img), &warnings, diag),
        }
        let u_img = f.get(u).unwrap();
        for &leaf in &fresh_leaves {
            let pick = h
                .neighbors(u_img)
                .iter()
                .copied()
                .find(|&x| bad[x] && !occ.is_used(x))
                .or_else(|| {
                    h.neighbors(u_img)
                        .iter()
                        .copied()
                        .find(|&x| pair.b.contains(x) && !occ.is_used(x))
                });
            match pick {
                Some(x) => {
                    occ.take(x);
                    f.set(leaf, x);
                }
                None => return make_stuck(f, leaf, u, Some(u_img), &warnings, diag),
            }
        }
        if overload {
            diag.unhappy_parents += 1;
        } else {
            diag.happy_parents += 1;
        }
    }
    diag.unused_bad_at_hall = (0..h.n()).filter(|&x| bad[x] && !occ.is_used(x)).count();

    // Hall-complete the deferred leaves into B
    let deferred_sorted: Vec<usize> = {
        let mut d: Vec<usize> = deferred.iter().copied().collect();
        d.sort_unstable();
        d
    };
    let cands: Vec<Vec<usize>> = deferred_sorted
        .iter()
        .map(|&s| {
            let p_img = f.get(rooted.parent[s]).unwrap();
            h.neighbors(p_img)
                .iter()
                .copied()
                .filter(|&x| pair.b.contains(x) && !occ.is_used(x))
                .collect()
        })
        .collect();
    let match_of = crate::embed::max_matching(&cands, h.n());
    if let Some(first) = match_of.iter().position(Option::is_none) {
        let (w, rights) = crate::embed::hall_violator_from(first, &cands, &match_of, h.n());
        let s = deferred_sorted[first];
        let evidence = StuckEvidence {
            vertex: s,
            parent: Some(rooted.parent[s]),
            parent_image: f.get(rooted.parent[s]),
            saturated: rights.clone(),
        };
        let mut out = EmbedOutcome::stuck(f, evidence);
        out.violator = Some(crate::embed::HallViolator {
            parents: w.iter().map(|&i| (deferred_sorted[i], 1)).collect(),
            neighborhood: rights,
        });
        out.warnings.extend(warnings);
        return Ok(FillReport {
            outcome: out,
            diagnostics: diag,
        });
    }
    for (i, mtc) in match_of.iter().enumerate() {
        f.set(deferred_sorted[i], mtc.unwrap());
    }
    let mut out = EmbedOutcome::success(f);
    out.warnings.extend(warnings);
    Ok(FillReport {
        outcome: out,
        diagnostics: diag,
    })
}

/// Fills an almost-complete bipartite target with no universal vertex:
/// leaf parents are embedded pairwise so that each pair's images jointly
/// dominate `B`, then the leaves complete by the ordered Hall matching.
pub fn fill_bipartite(task: &FillTask) -> Result<FillReport> {
    let FillTarget::Bipartite { graph, pair } = &task.target else {
        return Err(Error::invalid("bipartite fill on a clique target"));
    };
    task.epsilon_in_range()?;
    let h = cross_graph(graph, pair);
    let tree = &task.tree;
    let mut diag = FillDiagnostics::default();
    if tree.n() == 1 {
        let mut f = Embedding::new(1);
        let spot = pair
            .b
            .iter()
            .next()
            .ok_or_else(|| Error::invalid("side B is empty"))?;
        f.set(0, spot);
        return Ok(FillReport {
            outcome: EmbedOutcome::success(f),
            diagnostics: diag,
        });
    }
    let m_prime = tree.edge_count();
    let eps = task.epsilon;
    let mut warnings = Vec::new();
    let side_cap = (Ratio::from_integer(1) + eps) * Ratio::from_integer(m_prime as i64);
    let cap_floor = side_cap.floor().to_integer();
    hypothesis(
        &mut warnings,
        task.strict,
        pair.b.len() as i64 == cap_floor,
        format!(
            "side B has {} vertices, expected floor((1+eps)m') = {cap_floor}",
            pair.b.len()
        ),
    )?;
    hypothesis(
        &mut warnings,
        task.strict,
        Ratio::from_integer(pair.a.len() as i64) <= side_cap,
        format!("side A has {} vertices, above (1+eps)m'", pair.a.len()),
    )?;
    hypothesis(
        &mut warnings,
        task.strict,
        Ratio::from_integer(pair.min_cross_degree(graph) as i64)
            >= (Ratio::from_integer(1) - eps) * Ratio::from_integer(m_prime as i64),
        format!(
            "cross min degree {} below (1-eps)m'",
            pair.min_cross_degree(graph)
        ),
    )?;
    let max_leaf_children = (0..tree.n())
        .map(|x| crate::tree::leaf_children_of(tree, x).len())
        .max()
        .unwrap_or(0);
    hypothesis(
        &mut warnings,
        task.strict,
        6 * max_leaf_children <= m_prime,
        format!("a vertex has {max_leaf_children} leaf children, above m'/6"),
    )?;
    diag.hypothesis_warnings.clone_from(&warnings);

    let coloring = bipartition(tree);
    let c_large = Ratio::from_integer(coloring.c.len() as i64)
        >= eps * Ratio::from_integer(m_prime as i64) + Ratio::from_integer(1);
    if c_large {
        let (f, stuck) = bipartite_greedy(&h, &pair.a, &pair.b, tree, &coloring.c);
        let mut outcome = match stuck {
            None => EmbedOutcome::success(f),
            Some(e) => EmbedOutcome::stuck(f, e),
        };
        outcome.warnings.extend(warnings);
        return Ok(FillReport {
            outcome,
            diagnostics: diag,
        });
    }

    let leaves_in_d: VertexSet = tree
        .leaves()
        .into_iter()
        .filter(|&x| coloring.d.contains(x))
        .collect();
    let ordering = good_ordering(tree, &leaves_in_d)?;
    let pair_partner: std::collections::HashMap<usize, usize> = ordering
        .parents
        .chunks(2)
        .flat_map(|chunk| match chunk {
            [a, b] => vec![(*a, *b), (*b, *a)],
            _ => vec![],
        })
        .collect();

    let l0: std::collections::HashSet<usize> = leaves_in_d.iter().collect();
    let root = coloring
        .c
        .iter()
        .next()
        .ok_or_else(|| Error::invalid("tree has an empty color class"))?;
    let rooted = tree.rooted(root);
    let mut f = Embedding::new(tree.n());
    let mut occ = Occupancy::new(h.n());
    for &u in rooted.bfs_order.iter().filter(|x| !l0.contains(x)) {
        let side = if coloring.c.contains(u) {
            &pair.a
        } else {
            &pair.b
        };
        let base: Vec<usize> = if u == root {
            side.iter().filter(|&x| !occ.is_used(x)).collect()
        } else {
            let p_img = f.get(rooted.parent[u]).expect("parent first");
            h.neighbors(p_img)
                .iter()
                .copied()
                .filter(|&x| side.contains(x) && !occ.is_used(x))
                .collect()
        };
        // second of an ordered pair: dominate what the partner missed
        let partner_img = pair_partner.get(&u).and_then(|&p| f.get(p));
        let pick = match partner_img {
            Some(partner_img) => base.iter().copied().max_by_key(|&x| {
                let gain = h
                    .neighbors(x)
                    .iter()
                    .filter(|&&w| pair.b.contains(w) && !h.has_edge(partner_img, w))
                    .count();
                (gain, std::cmp::Reverse(x))
            }),
            None => base.first().copied(),
        };
        match pick {
            Some(x) => {
                occ.take(x);
                f.set(u, x);
            }
            None => {
                let parent = rooted.parent[u];
                let evidence = StuckEvidence {
                    vertex: u,
                    parent: (parent != usize::MAX).then_some(parent),
                    parent_image: (parent != usize::MAX).then(|| f.get(parent)).flatten(),
                    saturated: Vec::new(),
                };
                let mut out = EmbedOutcome::stuck(f, evidence);
                out.warnings.extend(warnings);
                return Ok(FillReport {
                    outcome: out,
                    diagnostics: diag,
                });
            }
        }
    }
    let (mut outcome, pairs) = crate::embed::hall_complete_ordered(&f, &ordering, &h, m_prime)?;
    for p in &pairs {
        if !p.held {
            diag.hypothesis_warnings.push(format!(
                "pair ({}, {}) covered only {} of {} targets",
                p.first, p.second, p.union_size, m_prime
            ));
        }
    }
    outcome.warnings.extend(warnings);
    Ok(FillReport {
        outcome,
        diagnostics: diag,
    })
}

/// Fills around a full-degree vertex `v` of side `A`: try the universal
/// bipartite fill on `N(v) ∩ B` first; otherwise place the separator on `v`
/// and route component roots to balance the two sides, spilling up to
/// `m'/4` tree vertices outside the target when `v` runs out of side
/// neighbors.
pub fn fill_bipartite_spill(
    t_prime: &Tree,
    g: &Graph,
    pair: &BipartitePair,
    v: usize,
    eps: Ratio,
) -> Result<FillReport> {
    if !pair.a.contains(v) {
        return Err(Error::invalid(format!("vertex {v} not in side A")));
    }
    let m_prime = t_prime.edge_count();
    if g.degree(v) < m_prime {
        return Err(Error::invalid(format!(
            "vertex {v} has degree {}, below m' = {m_prime}",
            g.degree(v)
        )));
    }
    let mut diag = FillDiagnostics::default();
    let h = cross_graph(g, pair);
    let outside: VertexSet = (0..g.n())
        .filter(|&x| !pair.a.contains(x) && !pair.b.contains(x))
        .collect();
    if !outside.is_empty() {
        let (og, _) = induced_subgraph(g, &outside)?;
        let need =
            (Ratio::from_integer(1) - ratio(2, 1) * eps) * Ratio::from_integer(m_prime as i64);
        if Ratio::from_integer(og.min_degree() as i64) < need {
            diag.hypothesis_warnings.push(format!(
                "outside min degree {} below (1-2eps)m'",
                og.min_degree()
            ));
        }
    }

    // branch 1: the universal fill on (A, N(v) ∩ B)
    let b_prime: VertexSet = g
        .neighbors(v)
        .iter()
        .copied()
        .filter(|&x| pair.b.contains(x))
        .collect();
    if !b_prime.is_empty() {
        if let Ok(sub_pair) = BipartitePair::new(pair.a.clone(), b_prime.clone()) {
            let sub =
                FillTask::bipartite(g.clone(), sub_pair, t_prime.clone(), eps).with_universal(v);
            match fill_bipartite_universal(&sub) {
                Ok(report) if report.is_success() => return Ok(report),
                Ok(report) => diag.hypothesis_warnings.push(format!(
                    "restricted universal fill stuck at {:?}",
                    report.outcome.stuck_at
                )),
                Err(e) => diag
                    .hypothesis_warnings
                    .push(format!("restricted universal fill rejected: {e}")),
            }
        }
    }

    // branch 2: separator on v, balanced component routing
    let coloring = bipartition(t_prime);
    let sep = separator(t_prime);
    let z = sep.z;
    let rooted = t_prime.rooted(z);
    let mut f = Embedding::new(t_prime.n());
    let mut occ = Occupancy::new(g.n());
    f.set(z, v);
    occ.take(v);

    let mut load_a = 0usize;
    let mut load_b = 0usize;
    let mut spilled = 0usize;
    let spill_cap = Ratio::new(m_prime as i64, 4);
    let mut spill_open = true;

    let stuck_report = |f: Embedding, e: StuckEvidence, mut diag: FillDiagnostics, spilled| {
        diag.spilled = spilled;
        let mut out = EmbedOutcome::stuck(f, e);
        out.warnings.clone_from(&diag.hypothesis_warnings);
        Ok(FillReport {
            outcome: out,
            diagnostics: diag,
        })
    };

    for comp in sep.components.iter().filter(|c| c.len() > 1) {
        let root = *comp
            .iter()
            .find(|&&x| rooted.parent[x] == z)
            .expect("component root");
        let in_c = comp.iter().filter(|&&x| coloring.c.contains(x)).count();
        let in_d = comp.len() - in_c;
        let root_in_c = coloring.c.contains(root);
        let big_is_root_class = if root_in_c {
            in_c >= in_d
        } else {
            in_d >= in_c
        };
        // the larger class should land on the lighter side
        let lighter_is_a = load_a <= load_b;
        let root_to_a = if big_is_root_class {
            lighter_is_a
        } else {
            !lighter_is_a
        };
        let side_try = |to_a: bool, occ: &Occupancy| -> Option<usize> {
            g.neighbors(v).iter().copied().find(|&x| {
                !occ.is_used(x)
                    && if to_a {
                        pair.a.contains(x)
                    } else {
                        pair.b.contains(x)
                    }
            })
        };
        let mut placed_outside = false;
        let root_host = side_try(root_to_a, &occ)
            .or_else(|| side_try(!root_to_a, &occ))
            .or_else(|| {
                if spill_open {
                    let cand = g
                        .neighbors(v)
                        .iter()
                        .copied()
                        .find(|&x| !occ.is_used(x) && outside.contains(x));
                    placed_outside = cand.is_some();
                    cand
                } else {
                    None
                }
            });
        let Some(root_host) = root_host else {
            let evidence = StuckEvidence {
                vertex: root,
                parent: Some(z),
                parent_image: Some(v),
                saturated: g
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&x| occ.is_used(x))
                    .collect(),
            };
            return stuck_report(f, evidence, diag, spilled);
        };
        occ.take(root_host);
        f.set(root, root_host);

        let comp_set: std::collections::HashSet<usize> = comp.iter().copied().collect();
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &c in &rooted.children[u] {
                if comp_set.contains(&c) {
                    order.push(c);
                    queue.push_back(c);
                }
            }
        }
        if placed_outside {
            spilled += comp.len();
            for &u in &order {
                let p_img = f.get(rooted.parent[u]).unwrap();
                match g
                    .neighbors(p_img)
                    .iter()
                    .copied()
                    .find(|&x| outside.contains(x) && !occ.is_used(x))
                {
                    Some(x) => {
                        occ.take(x);
                        f.set(u, x);
                    }
                    None => {
                        let evidence = StuckEvidence {
                            vertex: u,
                            parent: Some(rooted.parent[u]),
                            parent_image: Some(p_img),
                            saturated: Vec::new(),
                        };
                        return stuck_report(f, evidence, diag, spilled);
                    }
                }
            }
            if Ratio::from_integer(spilled as i64) > spill_cap {
                spill_open = false;
            }
        } else {
            let root_class_c = coloring.c.contains(root);
            let root_in_a = pair.a.contains(root_host);
            if root_in_a {
                load_a += 1;
            } else {
                load_b += 1;
            }
            for &u in &order {
                let same_class_as_root = coloring.c.contains(u) == root_class_c;
                let to_a = if same_class_as_root {
                    root_in_a
                } else {
                    !root_in_a
                };
                let side = if to_a { &pair.a } else { &pair.b };
                let p_img = f.get(rooted.parent[u]).unwrap();
                match h
                    .neighbors(p_img)
                    .iter()
                    .copied()
                    .find(|&x| side.contains(x) && !occ.is_used(x))
                {
                    Some(x) => {
                        occ.take(x);
                        f.set(u, x);
                        if to_a {
                            load_a += 1;
                        } else {
                            load_b += 1;
                        }
                    }
                    None => {
                        let evidence = StuckEvidence {
                            vertex: u,
                            parent: Some(rooted.parent[u]),
                            parent_image: Some(p_img),
                            saturated: Vec::new(),
                        };
                        return stuck_report(f, evidence, diag, spilled);
                    }
                }
            }
        }
    }

    // the separator's leaf children go anywhere in v's neighborhood
    for comp in sep.components.iter().filter(|c| c.len() == 1) {
        let leaf = comp[0];
        match g.neighbors(v).iter().copied().find(|&x| !occ.is_used(x)) {
            Some(x) => {
                occ.take(x);
                f.set(leaf, x);
            }
            None => {
                let evidence = StuckEvidence {
                    vertex: leaf,
                    parent: Some(z),
                    parent_image: Some(v),
                    saturated: g
                        .neighbors(v)
                        .iter()
                        .copied()
                        .filter(|&x| occ.is_used(x))
                        .collect(),
                };
                return stuck_report(f, evidence, diag, spilled);
            }
        }
    }
    diag.spilled = spilled;
    let mut out = EmbedOutcome::success(f);
    out.warnings.clone_from(&diag.hypothesis_warnings);
    Ok(FillReport {
        outcome: out,
        diagnostics: diag,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::validate_embedding;

    pub fn complete_minus_matching(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for w in u + 1..n {
                if !(u % 2 == 0 && w == u + 1) {
                    edges.push((u, w));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    pub use crate::gen::low_leaf_tree;

    #[test]
    fn almost_complete_path_into_clique() {
        let task = FillTask::clique(Graph::complete(21), Tree::path(11), ratio(1, 25));
        for z_image in [0, 7, 20] {
            let report = fill_almost_complete(&task, 5, z_image).unwrap();
            assert!(report.is_success(), "image {z_image}");
            assert_eq!(report.outcome.map.get(5), Some(z_image));
            assert!(
                validate_embedding(&task.tree, &Graph::complete(21), &report.outcome.map)
                    .complete_valid
            );
        }
    }

    #[test]
    fn almost_complete_random_tree_into_near_clique() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let host = complete_minus_matching(25);
        for _ in 0..10 {
            let tree = low_leaf_tree(13, &mut rng);
            let z = separator(&tree).z;
            let task = FillTask::clique(host.clone(), tree.clone(), ratio(1, 25));
            let report = fill_almost_complete(&task, z, 3).unwrap();
            assert!(report.is_success());
            assert!(validate_embedding(&tree, &host, &report.outcome.map).complete_valid);
            assert_eq!(report.outcome.map.get(z), Some(3));
            // bad-set bound: |Bad| <= 8 eps (n-1)
            assert!(
                Ratio::from_integer(report.diagnostics.bad_size as i64)
                    <= ratio(8, 25) * Ratio::from_integer(24)
            );
        }
    }

    #[test]
    fn almost_complete_warns_on_leafy_tree() {
        let host = complete_minus_matching(12);
        let task = FillTask::clique(host.clone(), Tree::star(9), ratio(1, 25));
        let report = fill_almost_complete(&task, 0, 0).unwrap();
        assert!(
            !report.diagnostics.hypothesis_warnings.is_empty()
                || !report.outcome.warnings.is_empty()
        );
        if report.is_success() {
            assert!(validate_embedding(&Tree::star(9), &host, &report.outcome.map).complete_valid);
        }

        // strict mode refuses instead
        let strict = FillTask::clique(host, Tree::star(9), ratio(1, 250)).strict(true);
        assert!(fill_almost_complete(&strict, 0, 0).is_err());
    }

    #[test]
    fn universal_fill_examples() {
        let task =
            FillTask::clique(Graph::complete(13), Tree::path(13), ratio(1, 25)).with_universal(4);
        let report = fill_with_universal(&task).unwrap();
        assert!(report.is_success());
        assert!(
            validate_embedding(&Tree::path(13), &Graph::complete(13), &report.outcome.map)
                .complete_valid
        );

        // padding: 10-edge tree into a 13-vertex target (pad to 12 edges)
        let mut edges = complete_minus_matching(13).edges();
        for x in 0..12 {
            if !complete_minus_matching(13).has_edge(x, 12) {
                edges.push((x, 12));
            }
        }
        let host = Graph::from_edges(13, &edges).unwrap();
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let tree = low_leaf_tree(11, &mut rng);
        let task = FillTask::clique(host.clone(), tree.clone(), ratio(1, 25)).with_universal(12);
        let report = fill_with_universal(&task).unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&tree, &host, &report.outcome.map).complete_valid);

        // single-vertex tree
        let task = FillTask::clique(
            Graph::complete(4),
            Tree::new(1, vec![]).unwrap(),
            ratio(1, 25),
        )
        .with_universal(0);
        assert!(fill_with_universal(&task).unwrap().is_success());

        // non-universal vertex is an input error
        let task = FillTask::clique(complete_minus_matching(6), Tree::path(3), ratio(1, 25))
            .with_universal(0);
        assert!(fill_with_universal(&task).is_err());
    }

    #[test]
    fn fill_and_spill_examples() {
        // universal branch: v sees all m vertices of a complete block
        let m = 12;
        let host = Graph::complete(m + 1);
        let report = fill_and_spill(
            &Tree::path(m + 1),
            &host,
            &VertexSet::full(m + 1),
            0,
            ratio(1, 25),
        )
        .unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&Tree::path(m + 1), &host, &report.outcome.map).complete_valid);

        // two 13-cliques sharing vertex 12
        let mut edges = Vec::new();
        for u in 0..13 {
            for w in u + 1..13 {
                edges.push((u, w));
            }
        }
        for u in 12..25 {
            for w in u + 1..25 {
                edges.push((u, w));
            }
        }
        let host = Graph::from_edges(25, &edges).unwrap();
        let h_prime: VertexSet = (0..13).collect();
        let report = fill_and_spill(&Tree::path(13), &host, &h_prime, 12, ratio(1, 25)).unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&Tree::path(13), &host, &report.outcome.map).complete_valid);

        // v outside the subgraph is an input error
        assert!(fill_and_spill(&Tree::path(5), &host, &h_prime, 20, ratio(1, 25)).is_err());
    }

    #[test]
    fn bipartite_universal_examples() {
        let g = Graph::complete_bipartite(5, 5);
        let pair = BipartitePair::new((0..5).collect(), (5..10).collect()).unwrap();
        let task =
            FillTask::bipartite(g.clone(), pair, Tree::path(8), ratio(1, 25)).with_universal(0);
        let report = fill_bipartite_universal(&task).unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&Tree::path(8), &g, &report.outcome.map).complete_valid);

        // star into a thin-side host: tiny small-class branch
        let g = Graph::complete_bipartite(2, 7);
        let pair = BipartitePair::new((0..2).collect(), (2..9).collect()).unwrap();
        let task =
            FillTask::bipartite(g.clone(), pair, Tree::star(6), ratio(1, 25)).with_universal(0);
        let report = fill_bipartite_universal(&task).unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&Tree::star(6), &g, &report.outcome.map).complete_valid);
    }

    #[test]
    fn bipartite_universal_caterpillar_near_complete() {
        // K_{7,13} minus a sparse set of cross edges; vertex 0 stays universal
        let mut edges = Vec::new();
        for u in 0..7 {
            for w in 0..13 {
                if u == 0 || (u + w) % 9 != 3 {
                    edges.push((u, 7 + w));
                }
            }
        }
        let g = Graph::from_edges(20, &edges).unwrap();
        let pair = BipartitePair::new((0..7).collect(), (7..20).collect()).unwrap();
        // caterpillar with 12 edges and small leaf fans
        let tree = Tree::new(
            13,
            vec![
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (1, 6),
                (2, 7),
                (3, 8),
                (4, 9),
                (5, 10),
                (5, 11),
                (0, 12),
            ],
        )
        .unwrap();
        let task =
            FillTask::bipartite(g.clone(), pair, tree.clone(), ratio(1, 12)).with_universal(0);
        let report = fill_bipartite_universal(&task).unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&tree, &g, &report.outcome.map).complete_valid);
        // weighted bad set stays below 8 eps m'
        assert!(
            Ratio::from_integer(report.diagnostics.bad_size as i64)
                <= ratio(8, 12) * Ratio::from_integer(12)
        );
    }

    #[test]
    fn bipartite_plain_examples() {
        let g = Graph::complete_bipartite(8, 8);
        let pair = BipartitePair::new((0..8).collect(), (8..16).collect()).unwrap();
        let task = FillTask::bipartite(g.clone(), pair, Tree::path(9), ratio(1, 25));
        let report = fill_bipartite(&task).unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&Tree::path(9), &g, &report.outcome.map).complete_valid);

        // K_{10,10} minus a perfect cross matching, spider-like 9-edge tree
        let mut edges = Vec::new();
        for u in 0..10 {
            for w in 0..10 {
                if u != w {
                    edges.push((u, 10 + w));
                }
            }
        }
        let g = Graph::from_edges(20, &edges).unwrap();
        let pair = BipartitePair::new((0..10).collect(), (10..20).collect()).unwrap();
        let tree = Tree::new(
            10,
            vec![
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 4),
                (2, 5),
                (3, 6),
                (4, 7),
                (5, 8),
                (6, 9),
            ],
        )
        .unwrap();
        let task = FillTask::bipartite(g.clone(), pair, tree.clone(), ratio(1, 9));
        let report = fill_bipartite(&task).unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&tree, &g, &report.outcome.map).complete_valid);
    }

    #[test]
    fn bipartite_plain_adversarial_sticks() {
        // two leaf parents whose images can only reach one shared B vertex
        let edges = vec![(0, 3), (1, 3), (2, 3), (2, 4), (0, 5), (1, 5)];
        let g = Graph::from_edges(6, &edges).unwrap();
        let pair = BipartitePair::new((0..3).collect(), (3..6).collect()).unwrap();
        // double star: centers 0,1 with two leaves each
        let tree = Tree::new(6, vec![(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)]).unwrap();
        let task = FillTask::bipartite(g, pair, tree, ratio(1, 5));
        let report = fill_bipartite(&task).unwrap();
        assert!(!report.is_success());
    }

    #[test]
    fn bipartite_spill_examples() {
        // complete bipartite host: no spill needed
        let g = Graph::complete_bipartite(9, 9);
        let pair = BipartitePair::new((0..9).collect(), (9..18).collect()).unwrap();
        let report = fill_bipartite_spill(&Tree::path(9), &g, &pair, 0, ratio(1, 25)).unwrap();
        assert!(report.is_success());
        assert!(validate_embedding(&Tree::path(9), &g, &report.outcome.map).complete_valid);
        assert_eq!(report.diagnostics.spilled, 0);

        // low degree v is a precondition error
        let g2 = Graph::complete_bipartite(3, 3);
        let pair2 = BipartitePair::new((0..3).collect(), (3..6).collect()).unwrap();
        assert!(fill_bipartite_spill(&Tree::path(9), &g2, &pair2, 0, ratio(1, 25)).is_err());
    }

    #[test]
    fn bipartite_spill_routes_outside() {
        // v = 0 in A with one A-side G-neighbor and a dense outside block
        let mut edges = Vec::new();
        for u in 0..3 {
            for w in 3..6 {
                edges.push((u, w));
            }
        }
        for u in 6..12 {
            edges.push((0, u));
            for w in u + 1..12 {
                edges.push((u, w));
            }
        }
        edges.push((0, 1));
        let g = Graph::from_edges(12, &edges).unwrap();
        let pair = BipartitePair::new((0..3).collect(), (3..6).collect()).unwrap();
        // spider with three 2-vertex legs: several component roots
        let tree = Tree::new(7, vec![(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]).unwrap();
        let report = fill_bipartite_spill(&tree, &g, &pair, 0, ratio(1, 5)).unwrap();
        if report.is_success() {
            assert!(validate_embedding(&tree, &g, &report.outcome.map).complete_valid);
        }
    }

    #[test]
    fn occupancy_matches_assignment_after_fill() {
        // conservative bookkeeping: success embeds every tree vertex once
        let task = FillTask::clique(Graph::complete(15), Tree::path(9), ratio(1, 25));
        let report = fill_almost_complete(&task, 4, 0).unwrap();
        assert!(report.is_success());
        let hosts: std::collections::HashSet<usize> = report.outcome.map.used_hosts().collect();
        assert_eq!(hosts.len(), 9);
    }
}
