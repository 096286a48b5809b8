//! The two end-to-end pipelines: the huge-max-degree procedure (biclique
//! case plus escape-set levelwise embedding) and the near-minimum-degree
//! dispatcher that works through the sparse, no-dense, decomposition and
//! filling branches in order. Every success is re-validated before it is
//! returned; a success with an invalid embedding is an internal error,
//! never an output.

use std::time::Instant;

use crate::constants::Constants;
use crate::dense::{dense_decomposition, embed_no_dense, find_biclique, DenseShape, DenseWitness};
use crate::embed::{
    embed_component, greedy_embed, star_heavy_embed, AnchorConstraint, EmbedOutcome, Occupancy,
    StuckEvidence, Traversal,
};
use crate::error::{Error, Result};
use crate::fill::{
    fill_almost_complete, fill_and_spill, fill_bipartite, fill_bipartite_spill, FillTask,
};
use crate::graph::{induced_subgraph, validate_embedding, Embedding, Graph, VertexSet};
use crate::num::{count_at_least, count_exceeding, ratio_to_f64, Ratio};
use crate::sparse::{
    embed_sparse, is_locally_sparse, SearchMode, SparsityVerdict, EXACT_SPARSITY_CAP,
};
use crate::tree::{leaf_profile, separator, split_at_threshold, Tree};

/// Outcome of a pipeline run plus which branch produced it and per-branch
/// timings (milliseconds).
#[derive(Debug)]
pub struct PipelineOutcome {
    pub outcome: EmbedOutcome,
    pub branch: String,
    pub branch_times_ms: Vec<(String, u128)>,
}

fn validated(t: &Tree, g: &Graph, outcome: EmbedOutcome) -> Result<EmbedOutcome> {
    if outcome.is_success() && !validate_embedding(t, g, &outcome.map).complete_valid {
        return Err(Error::internal(
            "pipeline produced a success that fails validation",
        ));
    }
    Ok(outcome)
}

/// Remaps host ids of an outcome produced on an induced subgraph.
fn remap_hosts(mut outcome: EmbedOutcome, map: &[usize]) -> EmbedOutcome {
    let mut remapped = Embedding::new(outcome.map.tree_n());
    for v in 0..outcome.map.tree_n() {
        if let Some(img) = outcome.map.get(v) {
            remapped.set(v, map[img]);
        }
    }
    outcome.map = remapped;
    outcome
}

// ---------------------------------------------------------------------------
// huge-max-degree pipeline
// ---------------------------------------------------------------------------

/// Embeds a tree into a host with one vertex of very large degree: either a
/// big complete bipartite pattern exists and a stable block of it seeds the
/// embedding, or escape sets around the used vertices steer a levelwise
/// greedy embedding of every component.
pub fn theorem1_embed(t: &Tree, g: &Graph, c: &Constants) -> Result<PipelineOutcome> {
    let m = c.m;
    if t.edge_count() > m {
        return Err(Error::invalid(format!(
            "tree has {} edges, above m = {m}",
            t.edge_count()
        )));
    }
    let mut warnings = Vec::new();
    match c.effective_g() {
        Some(gm) if (g.max_degree() as u128) < gm => {
            warnings.push(format!(
                "host max degree {} below the demand {gm}",
                g.max_degree()
            ));
        }
        None => warnings.push("degree demand g(m) overflows; set an override".into()),
        _ => {}
    }
    if g.min_degree() < 2 * m / 3 {
        warnings.push(format!(
            "host min degree {} below floor(2m/3) = {}",
            g.min_degree(),
            2 * m / 3
        ));
    }
    let t_cap = m + 1;
    let t_small = t_cap - 2 * m / 3;
    let mut times = Vec::new();

    if t_cap < 3 || t.n() <= 2 {
        let start = Instant::now();
        let mut out = greedy_embed(t, g, &AnchorConstraint::none(), Traversal::Bfs)?;
        times.push(("tiny-greedy".to_string(), start.elapsed().as_millis()));
        out.warnings.extend(warnings);
        return Ok(PipelineOutcome {
            outcome: validated(t, g, out)?,
            branch: "tiny-greedy".into(),
            branch_times_ms: times,
        });
    }

    // big complete bipartite pattern
    let start = Instant::now();
    let cube = (t_cap as u128).pow(3);
    let big_side = cube.min(g.n() as u128) as usize;
    let biclique = if big_side >= t_small && g.n() <= 40 && t_small <= 3 {
        match find_biclique(g, big_side, t_small) {
            Ok(found) => found,
            Err(e) => {
                warnings.push(format!("biclique search unavailable: {e}"));
                None
            }
        }
    } else {
        if t_small > 3 || g.n() > 40 {
            warnings.push("biclique search out of range; skipping that case".into());
        }
        None
    };
    if let Some(pair) = biclique {
        match biclique_case(t, g, &pair, t_cap, &mut warnings)? {
            Some(out) => {
                times.push(("biclique".to_string(), start.elapsed().as_millis()));
                let mut out = out;
                out.warnings.extend(warnings);
                return Ok(PipelineOutcome {
                    outcome: validated(t, g, out)?,
                    branch: "biclique".into(),
                    branch_times_ms: times,
                });
            }
            None => warnings.push("biclique case did not complete; using escape sets".into()),
        }
    }
    times.push(("biclique".to_string(), start.elapsed().as_millis()));

    // escape-set case
    let start = Instant::now();
    let out = escape_set_case(t, g, t_small, &mut warnings)?;
    times.push(("escape-sets".to_string(), start.elapsed().as_millis()));
    let mut out = out;
    out.warnings.extend(warnings);
    Ok(PipelineOutcome {
        outcome: validated(t, g, out)?,
        branch: "escape-sets".into(),
        branch_times_ms: times,
    })
}

/// The stable-block case: pick `t` vertices of the big side such that no
/// low-degree vertex sees two of them, embed a small subtree across the
/// pattern using more block vertices than small-side vertices, and finish
/// greedily.
fn biclique_case(
    t: &Tree,
    g: &Graph,
    pair: &crate::graph::BipartitePair,
    t_cap: usize,
    warnings: &mut Vec<String>,
) -> Result<Option<EmbedOutcome>> {
    let big = &pair.a;
    let small = &pair.b;
    let t_small = small.len();
    // stable block: no two chosen are adjacent or share a low-degree neighbor
    let mut block: Vec<usize> = Vec::new();
    'candidates: for b in big.iter() {
        if block.len() == t_cap {
            break;
        }
        for &chosen in &block {
            if g.has_edge(b, chosen) {
                continue 'candidates;
            }
            let share_low = g
                .neighbors(b)
                .iter()
                .any(|&v| g.degree(v) < t_cap && g.has_edge(v, chosen));
            if share_low {
                continue 'candidates;
            }
        }
        block.push(b);
    }
    if block.len() < t_cap {
        warnings.push(format!(
            "stable block reached only {} of {t_cap} vertices",
            block.len()
        ));
        return Ok(None);
    }
    let block_set = VertexSet::from_iter(block);

    // a subtree on up to 2 t' + 1 vertices, BFS from vertex 0
    let want = (2 * t_small + 1).min(t.n());
    let rooted = t.rooted(0);
    let mut sub = Vec::new();
    for &v in &rooted.bfs_order {
        if sub.len() == want {
            break;
        }
        sub.push(v);
    }
    let in_sub: std::collections::HashSet<usize> = sub.iter().copied().collect();
    let even: Vec<usize> = sub
        .iter()
        .copied()
        .filter(|&v| rooted.depth[v].is_multiple_of(2))
        .collect();
    let odd: Vec<usize> = sub
        .iter()
        .copied()
        .filter(|&v| rooted.depth[v] % 2 == 1)
        .collect();
    // the larger color class goes into the stable block
    let (to_block, to_small) = if even.len() >= odd.len() {
        (even, odd)
    } else {
        (odd, even)
    };
    if to_small.len() > small.len() {
        warnings.push("small side cannot hold the subtree's color class".into());
        return Ok(None);
    }
    let to_block_set: std::collections::HashSet<usize> = to_block.into_iter().collect();
    let mut f = Embedding::new(t.n());
    let mut occ = Occupancy::new(g.n());
    for &v in &sub {
        let side: Vec<usize> = if to_block_set.contains(&v) {
            block_set.iter().collect()
        } else {
            small.iter().collect()
        };
        match side.iter().copied().find(|&x| !occ.is_used(x)) {
            Some(x) => {
                occ.take(x);
                f.set(v, x);
            }
            None => {
                warnings.push("pattern sides exhausted while seeding".into());
                return Ok(None);
            }
        }
    }
    // greedy completion over the rest of the tree
    for &v in &rooted.bfs_order {
        if in_sub.contains(&v) {
            continue;
        }
        let p_img = f
            .get(rooted.parent[v])
            .expect("BFS order embeds parents first");
        match g
            .neighbors(p_img)
            .iter()
            .copied()
            .find(|&x| !occ.is_used(x))
        {
            Some(x) => {
                occ.take(x);
                f.set(v, x);
            }
            None => {
                let evidence = StuckEvidence {
                    vertex: v,
                    parent: Some(rooted.parent[v]),
                    parent_image: Some(p_img),
                    saturated: g
                        .neighbors(p_img)
                        .iter()
                        .copied()
                        .filter(|&x| occ.is_used(x))
                        .collect(),
                };
                return Ok(Some(EmbedOutcome::stuck(f, evidence)));
            }
        }
    }
    Ok(Some(EmbedOutcome::success(f)))
}

/// Escape sets around the used vertices: `A_0` is everything used so far
/// and `A_i` collects vertices with degree below `t'` into what is left.
/// Level `j` of a component may only use hosts outside `A_0 ∪ … ∪ A_{t'-j}`.
fn escape_sets(g: &Graph, used: &Occupancy, t_small: usize) -> Vec<VertexSet> {
    let mut sets = Vec::with_capacity(t_small + 1);
    let mut removed = vec![false; g.n()];
    let a0: Vec<usize> = (0..g.n()).filter(|&v| used.is_used(v)).collect();
    for &v in &a0 {
        removed[v] = true;
    }
    sets.push(VertexSet::from_iter(a0));
    for _ in 1..=t_small {
        let next: Vec<usize> = (0..g.n())
            .filter(|&v| !removed[v])
            .filter(|&v| g.neighbors(v).iter().filter(|&&w| !removed[w]).count() < t_small)
            .collect();
        for &v in &next {
            removed[v] = true;
        }
        if next.is_empty() {
            sets.push(VertexSet::new());
            continue;
        }
        sets.push(VertexSet::from_iter(next));
    }
    sets
}

fn escape_set_case(
    t: &Tree,
    g: &Graph,
    t_small: usize,
    warnings: &mut Vec<String>,
) -> Result<EmbedOutcome> {
    let sep = separator(t);
    let w_tree = if t_small >= 1 && 2 * t_small < t.n() {
        split_at_threshold(t, sep.z, t_small)?.unwrap_or(sep.z)
    } else {
        sep.z
    };
    let hub = g.max_degree_vertex();
    let rooted = t.rooted(w_tree);
    let comps = t.components_without(w_tree);
    let mut f = Embedding::new(t.n());
    let mut occ = Occupancy::new(g.n());
    f.set(w_tree, hub);
    occ.take(hub);

    // the largest component embeds greedily right away
    let mut iter = comps.iter();
    if let Some(largest) = iter.next() {
        if let Err(e) = embed_component(
            g,
            &rooted,
            largest,
            g.neighbors(hub),
            &mut f,
            &mut occ,
            None,
            None,
        ) {
            return Ok(EmbedOutcome::stuck(f, e));
        }
    }

    // each remaining component avoids the escape sets levelwise
    for comp in iter {
        let sets = escape_sets(g, &occ, t_small);
        let mut prefix_union: Vec<VertexSet> = Vec::with_capacity(sets.len());
        let mut acc = VertexSet::new();
        for s in &sets {
            acc = acc.union(s);
            prefix_union.push(acc.clone());
        }
        let full_union = prefix_union.last().cloned().unwrap_or_default();
        let root = *comp
            .iter()
            .find(|&&v| rooted.parent[v] == w_tree)
            .expect("component hangs off the split vertex");
        let root_pick = g
            .neighbors(hub)
            .iter()
            .copied()
            .find(|&x| !occ.is_used(x) && !full_union.contains(x));
        let Some(root_host) = root_pick else {
            warnings.push("no escape-free neighbor left for a component root".into());
            let evidence = StuckEvidence {
                vertex: root,
                parent: Some(w_tree),
                parent_image: Some(hub),
                saturated: g
                    .neighbors(hub)
                    .iter()
                    .copied()
                    .filter(|&x| occ.is_used(x) || full_union.contains(x))
                    .collect(),
            };
            return Ok(EmbedOutcome::stuck(f, evidence));
        };
        occ.take(root_host);
        f.set(root, root_host);
        // level j may use everything outside A_0 .. A_{t'-j}
        let comp_set: std::collections::HashSet<usize> = comp.iter().copied().collect();
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &ch in &rooted.children[u] {
                if comp_set.contains(&ch) {
                    order.push(ch);
                    queue.push_back(ch);
                }
            }
        }
        let root_depth = rooted.depth[root];
        for &u in &order {
            let level = rooted.depth[u] - root_depth;
            let forbidden = if level >= t_small {
                None
            } else {
                prefix_union.get(t_small - level).or(prefix_union.last())
            };
            let p_img = f.get(rooted.parent[u]).expect("parent first");
            let pick = g
                .neighbors(p_img)
                .iter()
                .copied()
                .find(|&x| !occ.is_used(x) && forbidden.is_none_or(|s| !s.contains(x)));
            match pick {
                Some(x) => {
                    occ.take(x);
                    f.set(u, x);
                }
                None => {
                    let evidence = StuckEvidence {
                        vertex: u,
                        parent: Some(rooted.parent[u]),
                        parent_image: Some(p_img),
                        saturated: g
                            .neighbors(p_img)
                            .iter()
                            .copied()
                            .filter(|&x| occ.is_used(x))
                            .collect(),
                    };
                    return Ok(EmbedOutcome::stuck(f, evidence));
                }
            }
        }
    }
    Ok(EmbedOutcome::success(f))
}

// ---------------------------------------------------------------------------
// near-minimum-degree pipeline
// ---------------------------------------------------------------------------

/// Dispatcher over the constructive branches, in order: the star-heavy
/// shortcut, the locally-sparse embedding, the no-dense-subgraph pipeline,
/// then the dense decomposition with its filling and cross-vertex branches.
/// The first validated success wins; an exhaustive STUCK reports every
/// branch it tried.
pub fn theorem2_embed(t: &Tree, g: &Graph, c: &Constants, seed: u64) -> Result<PipelineOutcome> {
    let m = c.m;
    if t.edge_count() > m {
        return Err(Error::invalid(format!(
            "tree has {} edges, above m = {m}",
            t.edge_count()
        )));
    }
    let mut warnings = Vec::new();
    if g.max_degree() < m {
        warnings.push(format!("host max degree {} below m", g.max_degree()));
    }
    let gamma_f = ratio_to_f64(c.gamma);
    if g.min_degree() < count_at_least((1.0 - gamma_f) * m as f64) {
        warnings.push(format!(
            "host min degree {} below (1-gamma)m",
            g.min_degree()
        ));
    }
    let alpha_f = ratio_to_f64(c.alpha);
    let mut times: Vec<(String, u128)> = Vec::new();
    let mut attempts: Vec<String> = Vec::new();

    macro_rules! branch {
        ($name:expr, $body:expr) => {{
            let start = Instant::now();
            #[allow(clippy::redundant_closure_call)]
            let result: Result<Option<EmbedOutcome>> = (|| $body)();
            times.push(($name.to_string(), start.elapsed().as_millis()));
            match result {
                Ok(Some(out)) if out.is_success() => {
                    let mut out = validated(t, g, out)?;
                    out.warnings.extend(warnings.clone());
                    return Ok(PipelineOutcome {
                        outcome: out,
                        branch: $name.to_string(),
                        branch_times_ms: times,
                    });
                }
                Ok(Some(out)) => {
                    attempts.push(format!("{}: stuck at {:?}", $name, out.stuck_at));
                }
                Ok(None) => attempts.push(format!("{}: not applicable", $name)),
                Err(e) => attempts.push(format!("{}: {e}", $name)),
            }
        }};
    }

    // star-heavy shortcut
    branch!("star-heavy", {
        if t.n() < 2 {
            return Ok(None);
        }
        let (_, max_leaf_children, s) = leaf_profile(t)?;
        let threshold = count_at_least(gamma_f * m as f64).max(1);
        if max_leaf_children >= threshold {
            Ok(Some(star_heavy_embed(t, g, s)?))
        } else {
            Ok(None)
        }
    });

    // locally sparse hosts
    branch!("sparse", {
        let mode = if g.n() <= EXACT_SPARSITY_CAP {
            SearchMode::Exact
        } else {
            SearchMode::Peeling
        };
        let report = is_locally_sparse(g, m, c.sparsity_ratio, mode)?;
        if report.verdict == SparsityVerdict::NotSparse {
            return Ok(None);
        }
        Ok(Some(embed_sparse(t, g, g.max_degree_vertex(), m)?))
    });

    // hosts without very dense subgraphs
    branch!("no-dense", {
        if t.n() < 2 {
            return Ok(None);
        }
        let out = embed_no_dense(t, g, m, c.alpha, seed, c.retries)?;
        Ok(Some(out.outcome))
    });

    // decomposition into dense expansions
    let decomposition = dense_decomposition(g, m, c.alpha)?;
    if !decomposition.witnesses.is_empty() {
        // big expansions take the whole tree by a direct fill
        for (i, witness) in decomposition.witnesses.iter().enumerate() {
            let name = format!("big-expansion-{i}");
            branch!(&name, { big_expansion_fill(t, g, witness, c) });
        }
        // cross-vertex branches for violated locality conditions
        for (i, witness) in decomposition.witnesses.iter().enumerate() {
            let name = format!("cross-into-{i}");
            branch!(&name, { cross_into_expansion(t, g, witness, c, alpha_f) });
            let name = format!("cross-out-of-{i}");
            branch!(&name, { cross_out_of_expansion(t, g, witness, c, alpha_f) });
        }
        branch!("cross-residual", {
            cross_residual(t, g, &decomposition.witnesses, c)
        });
        // embed inside the residual when it is big enough
        branch!("residual", {
            if decomposition.residual.len() < t.n() {
                return Ok(None);
            }
            let (rg, map) = induced_subgraph(g, &decomposition.residual)?;
            let mode = if rg.n() <= EXACT_SPARSITY_CAP {
                SearchMode::Exact
            } else {
                SearchMode::Peeling
            };
            let report = is_locally_sparse(&rg, m, c.sparsity_ratio, mode)?;
            let local = if report.verdict != SparsityVerdict::NotSparse {
                embed_sparse(t, &rg, rg.max_degree_vertex(), m)?
            } else {
                embed_no_dense(t, &rg, m, c.alpha, seed, c.retries)?.outcome
            };
            Ok(Some(remap_hosts(local, &map)))
        });
        // final fills around the maximum-degree vertex
        branch!("hub-fill", {
            let hub = g.max_degree_vertex();
            let Some(witness) = decomposition
                .witnesses
                .iter()
                .find(|w| w.expansion_vertices().contains(hub))
            else {
                return Ok(None);
            };
            hub_fill(t, g, witness, hub, c, alpha_f)
        });
    } else {
        attempts.push("decomposition: no dense cores".into());
    }

    let mut outcome = EmbedOutcome::stuck(
        Embedding::new(t.n()),
        StuckEvidence {
            vertex: 0,
            parent: None,
            parent_image: None,
            saturated: Vec::new(),
        },
    );
    outcome.warnings.extend(warnings);
    outcome.warnings.extend(attempts);
    Ok(PipelineOutcome {
        outcome,
        branch: "exhausted".into(),
        branch_times_ms: times,
    })
}

fn eps_from_float(value: f64) -> Ratio {
    Ratio::new(((value * 1e6).round() as i64).clamp(1, 250_000), 1_000_000)
}

/// When an expansion outgrew the bound that the direct fills need, the
/// whole tree fits inside it.
fn big_expansion_fill(
    t: &Tree,
    g: &Graph,
    witness: &DenseWitness,
    c: &Constants,
) -> Result<Option<EmbedOutcome>> {
    let m = c.m;
    let alpha_f = ratio_to_f64(c.alpha);
    let a15 = alpha_f.powf(1.0 / 15.0);
    match &witness.shape {
        DenseShape::CliqueDense { expansion, .. } => {
            let need = 1 + count_at_least(m as f64 / (1.0 - a15));
            if expansion.len() < need {
                return Ok(None);
            }
            let (hg, map) = induced_subgraph(g, expansion)?;
            let eps = eps_from_float(a15);
            let task = FillTask::clique(hg, t.clone(), eps);
            let z = separator(t).z;
            let report = fill_almost_complete(&task, z, 0)?;
            Ok(Some(remap_hosts(report.outcome, &map)))
        }
        DenseShape::BipartiteDense { expansion, .. } => {
            let need = count_at_least((1.0 + a15) * m as f64);
            if expansion.a.len().max(expansion.b.len()) < need {
                return Ok(None);
            }
            // the larger side plays B in the fill
            let (a_side, b_side) = if expansion.a.len() >= expansion.b.len() {
                (expansion.b.clone(), expansion.a.clone())
            } else {
                (expansion.a.clone(), expansion.b.clone())
            };
            let pair = crate::graph::BipartitePair::new(a_side, b_side)?;
            let eps = eps_from_float(a15);
            let task = FillTask::bipartite(g.clone(), pair, t.clone(), eps);
            let report = fill_bipartite(&task)?;
            Ok(Some(report.outcome))
        }
    }
}

/// Routes components between an expansion and the rest of the host around
/// an outside vertex with many neighbors inside.
fn cross_into_expansion(
    t: &Tree,
    g: &Graph,
    witness: &DenseWitness,
    c: &Constants,
    alpha_f: f64,
) -> Result<Option<EmbedOutcome>> {
    let m = c.m;
    let gamma_f = ratio_to_f64(c.gamma);
    let expansion = witness.expansion_vertices();
    let core = witness.core_vertices();
    let cap = count_exceeding(2.0 * gamma_f * m as f64);
    let candidate = (0..g.n())
        .filter(|&v| !expansion.contains(v))
        .map(|v| {
            let d = g
                .neighbors(v)
                .iter()
                .filter(|&&x| expansion.contains(x))
                .count();
            (v, d)
        })
        .filter(|&(_, d)| d >= cap)
        .max_by_key(|&(v, d)| (d, std::cmp::Reverse(v)));
    let Some((w, d)) = candidate else {
        return Ok(None);
    };
    let a15 = alpha_f.powf(1.0 / 15.0);
    let case1 = (d as f64) > (0.5 - a15 / 6.0) * m as f64;

    let sep_z = separator(t).z;
    if case1 {
        // small components leave, everything else goes inside
        let t_a = count_at_least(a15 * m as f64 / 3.0).max(1);
        let z = if 2 * t_a < t.n() {
            split_at_threshold(t, sep_z, t_a)?.unwrap_or(sep_z)
        } else {
            sep_z
        };
        let comps = t.components_without(z);
        let lo = t_a;
        let hi = count_at_least(2.0 * a15 * m as f64 / 3.0).max(lo);
        // singletons first, then small components until the window
        let mut outside: std::collections::HashSet<usize> = Default::default();
        let mut total = 0;
        for comp in comps.iter().rev() {
            if total >= lo {
                break;
            }
            if total + comp.len() <= hi {
                total += comp.len();
                outside.insert(comp[0]);
            }
        }
        route(t, g, z, w, &comps, &outside, &expansion, &core)
    } else {
        // a minimal batch of components fills the expansion instead
        let t_b = count_exceeding(d as f64 + gamma_f * m as f64);
        let z = if t_b >= 1 && 2 * t_b < t.n() {
            split_at_threshold(t, sep_z, t_b)?.unwrap_or(sep_z)
        } else {
            sep_z
        };
        let comps = t.components_without(z);
        let need = count_at_least(d as f64 + gamma_f * m as f64).max(1);
        let mut inside: std::collections::HashSet<usize> = Default::default();
        let mut total = 0;
        for comp in comps.iter().skip(1) {
            if total >= need {
                break;
            }
            total += comp.len();
            inside.insert(comp[0]);
        }
        let outside: std::collections::HashSet<usize> = comps
            .iter()
            .filter(|c| !inside.contains(&c[0]))
            .map(|c| c[0])
            .collect();
        route(t, g, z, w, &comps, &outside, &expansion, &core)
    }
}

/// Routing helper: `z` sits on `w`; components whose root is listed in
/// `outside` embed in the complement of the expansion, the others inside
/// it, roots first into the matching part of `N(w)` (core preferred
/// inside).
#[allow(clippy::too_many_arguments)]
fn route(
    t: &Tree,
    g: &Graph,
    z: usize,
    w: usize,
    comps: &[Vec<usize>],
    outside: &std::collections::HashSet<usize>,
    expansion: &VertexSet,
    core: &VertexSet,
) -> Result<Option<EmbedOutcome>> {
    let rooted = t.rooted(z);
    let mut f = Embedding::new(t.n());
    let mut occ = Occupancy::new(g.n());
    f.set(z, w);
    occ.take(w);
    let nw_out: Vec<usize> = g
        .neighbors(w)
        .iter()
        .copied()
        .filter(|&x| !expansion.contains(x))
        .collect();
    let nw_in: Vec<usize> = {
        let mut inside: Vec<usize> = g
            .neighbors(w)
            .iter()
            .copied()
            .filter(|&x| expansion.contains(x))
            .collect();
        // prefer core vertices for the roots placed inside
        inside.sort_by_key(|&x| (!core.contains(x), x));
        inside
    };
    for comp in comps.iter().filter(|c| outside.contains(&c[0])) {
        if let Err(e) = embed_component(
            g,
            &rooted,
            comp,
            &nw_out,
            &mut f,
            &mut occ,
            Some(expansion),
            None,
        ) {
            return Ok(Some(EmbedOutcome::stuck(f, e)));
        }
    }
    let not_expansion: VertexSet = (0..g.n()).filter(|&x| !expansion.contains(x)).collect();
    for comp in comps.iter().filter(|c| !outside.contains(&c[0])) {
        if let Err(e) = embed_component(
            g,
            &rooted,
            comp,
            &nw_in,
            &mut f,
            &mut occ,
            Some(&not_expansion),
            None,
        ) {
            return Ok(Some(EmbedOutcome::stuck(f, e)));
        }
    }
    Ok(Some(EmbedOutcome::success(f)))
}

/// The outward direction: a vertex of the expansion with many outside
/// neighbors hosts the separator; a minimal batch of components leaves.
fn cross_out_of_expansion(
    t: &Tree,
    g: &Graph,
    witness: &DenseWitness,
    c: &Constants,
    alpha_f: f64,
) -> Result<Option<EmbedOutcome>> {
    let m = c.m;
    let gamma_f = ratio_to_f64(c.gamma);
    let expansion = witness.expansion_vertices();
    let core = witness.core_vertices();
    let cap = count_exceeding(2.0 * gamma_f * m as f64);
    let candidate = expansion
        .iter()
        .map(|v| {
            let d = g
                .neighbors(v)
                .iter()
                .filter(|&&x| !expansion.contains(x))
                .count();
            (v, d)
        })
        .filter(|&(_, d)| d >= cap)
        .max_by_key(|&(v, d)| (d, std::cmp::Reverse(v)));
    let Some((w, d_out)) = candidate else {
        return Ok(None);
    };
    let d = d_out.min(count_at_least(alpha_f.powf(1.0 / 15.0) * m as f64).max(1));
    let z = separator(t).z;
    let comps = t.components_without(z);
    let need = count_at_least(d as f64 + gamma_f * m as f64).max(1);
    let mut outside: std::collections::HashSet<usize> = Default::default();
    let mut total = 0;
    for comp in &comps {
        if total >= need {
            break;
        }
        total += comp.len();
        outside.insert(comp[0]);
    }
    route(t, g, z, w, &comps, &outside, &expansion, &core)
}

/// The residual direction: a residual vertex seeing much of the union of
/// expansions hosts the separator and sends a minimal batch inside.
fn cross_residual(
    t: &Tree,
    g: &Graph,
    witnesses: &[DenseWitness],
    c: &Constants,
) -> Result<Option<EmbedOutcome>> {
    let m = c.m;
    let gamma_f = ratio_to_f64(c.gamma);
    let union: VertexSet = witnesses
        .iter()
        .map(|w| w.expansion_vertices())
        .fold(VertexSet::new(), |acc, s| acc.union(&s));
    let cap = count_exceeding(10.0 * gamma_f * m as f64);
    let candidate = (0..g.n())
        .filter(|&v| !union.contains(v))
        .map(|v| {
            let d = g
                .neighbors(v)
                .iter()
                .filter(|&&x| union.contains(x))
                .count();
            (v, d)
        })
        .filter(|&(_, d)| d >= cap)
        .max_by_key(|&(v, d)| (d, std::cmp::Reverse(v)));
    let Some((w, _)) = candidate else {
        return Ok(None);
    };
    let z = separator(t).z;
    let comps = t.components_without(z);
    let need = count_at_least(13.0 * gamma_f * m as f64).max(1);
    let mut inside: std::collections::HashSet<usize> = Default::default();
    let mut total = 0;
    for comp in &comps {
        if total >= need {
            break;
        }
        total += comp.len();
        inside.insert(comp[0]);
    }
    // here "outside" the expansion union means the residual side
    let outside: std::collections::HashSet<usize> = comps
        .iter()
        .filter(|c| !inside.contains(&c[0]))
        .map(|c| c[0])
        .collect();
    let empty_core = VertexSet::new();
    route(t, g, z, w, &comps, &outside, &union, &empty_core)
}

/// Final fills once the maximum-degree vertex sits inside an expansion.
fn hub_fill(
    t: &Tree,
    g: &Graph,
    witness: &DenseWitness,
    hub: usize,
    c: &Constants,
    alpha_f: f64,
) -> Result<Option<EmbedOutcome>> {
    let m = c.m;
    let gamma_f = ratio_to_f64(c.gamma);
    match &witness.shape {
        DenseShape::BipartiteDense { expansion, .. } => {
            let eps = eps_from_float(alpha_f.powf(1.0 / 15.0));
            // the hub must sit in the A side for the spill fill
            let pair = if expansion.a.contains(hub) {
                expansion.clone()
            } else {
                crate::graph::BipartitePair::new(expansion.b.clone(), expansion.a.clone())?
            };
            let report = fill_bipartite_spill(t, g, &pair, hub, eps)?;
            Ok(Some(report.outcome))
        }
        DenseShape::CliqueDense { expansion, .. } => {
            let spill_cap = 1 + count_at_least((1.0 + 3.0 * gamma_f) * m as f64);
            if expansion.len() <= spill_cap {
                let report = fill_and_spill(t, g, expansion, hub, c.gamma)?;
                Ok(Some(report.outcome))
            } else {
                let n1 = expansion.len() as i64 - 1;
                let eps = Ratio::new(n1 - m as i64, n1);
                if eps <= Ratio::from_integer(0) || eps > Ratio::new(1, 4) {
                    return Ok(None);
                }
                let (hg, map) = induced_subgraph(g, expansion)?;
                let task = FillTask::clique(hg, t.clone(), eps);
                let z = separator(t).z;
                let hub_local = map.iter().position(|&x| x == hub).unwrap_or(0);
                let report = fill_almost_complete(&task, z, hub_local)?;
                Ok(Some(remap_hosts(report.outcome, &map)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_extremal, spider_tree, ExtremalKind};
    use crate::oracle::{brute_force_embed, OracleVerdict};

    #[test]
    fn theorem1_small_examples() {
        // complete host, small tree
        let mut c = Constants::defaults(3);
        c.g_override = Some(6);
        let out = theorem1_embed(&Tree::path(4), &Graph::complete(7), &c).unwrap();
        assert!(out.outcome.is_success());

        // hub joined to two cliques forces the escape-set case
        let mut edges = Vec::new();
        for base in [0, 5] {
            for u in 0..5 {
                for w in u + 1..5 {
                    edges.push((base + u, base + w));
                }
            }
        }
        for v in 0..10 {
            edges.push((v, 10));
        }
        let host = Graph::from_edges(11, &edges).unwrap();
        let tree = Tree::new(5, vec![(0, 1), (0, 2), (1, 3), (1, 4)]).unwrap();
        let mut c = Constants::defaults(4);
        c.g_override = Some(8);
        let out = theorem1_embed(&tree, &host, &c).unwrap();
        assert!(out.outcome.is_success());
        assert!(validate_embedding(&tree, &host, &out.outcome.map).complete_valid);
    }

    #[test]
    fn theorem1_biclique_case() {
        // host contains K_{27,3} (t = 5, t' = 3 at m = 4), plus slack
        let mut edges = Vec::new();
        for u in 0..27 {
            for w in 27..30 {
                edges.push((u, w));
            }
        }
        // pad degrees a little so the greedy completion has room
        for u in 0..26 {
            edges.push((u, u + 1));
        }
        let host = Graph::from_edges(30, &edges).unwrap();
        let tree = spider_tree(1); // 4 vertices, 3 edges
        let mut c = Constants::defaults(4);
        c.g_override = Some(8);
        let out = theorem1_embed(&tree, &host, &c).unwrap();
        assert!(out.outcome.is_success());
        assert!(validate_embedding(&tree, &host, &out.outcome.map).complete_valid);
    }

    #[test]
    fn theorem2_on_complete_host() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let g = Graph::complete(13);
        for _ in 0..5 {
            let t = crate::gen::random_tree(13, &mut rng);
            let out = theorem2_embed(&t, &g, &Constants::defaults(12), 1).unwrap();
            assert!(out.outcome.is_success(), "branch {}", out.branch);
        }
    }

    #[test]
    fn theorem2_never_contradicts_the_oracle() {
        let inst = gen_extremal(2, ExtremalKind::TwinCliques).unwrap();
        assert!(brute_force_embed(&inst.tree, &inst.host, 10_000_000).is_none());
        let out = theorem2_embed(&inst.tree, &inst.host, &Constants::defaults(6), 3).unwrap();
        assert!(!out.outcome.is_success());
    }

    #[test]
    fn theorem2_fuzz_soundness() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for round in 0..30 {
            let m = rng.gen_range(3..=5);
            let n = rng.gen_range(m + 1..=9);
            let host = match crate::gen::gen_random_host(n, 2 * m / 3, m, rng.gen()) {
                Ok(h) => h,
                Err(_) => continue,
            };
            let tree = crate::gen::random_tree(m + 1, &mut rng);
            let out = theorem2_embed(&tree, &host, &Constants::defaults(m), round).unwrap();
            if out.outcome.is_success() {
                assert!(
                    validate_embedding(&tree, &host, &out.outcome.map).complete_valid,
                    "round {round} branch {}",
                    out.branch
                );
                // the oracle must agree something exists
                if brute_force_embed(&tree, &host, 10_000_000) == OracleVerdict::None {
                    panic!("pipeline found what the oracle refutes")
                }
            }
        }
    }
}
