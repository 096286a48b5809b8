//! Finite verification runs: every non-isomorphic tree with `m` edges
//! against a batch of sampled hosts meeting the degree bounds, decided by
//! the exhaustive oracle. Counterexamples are re-verified with a doubled
//! budget before they are reported.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gen::{gen_random_host, nonisomorphic_trees};
use crate::graph::Graph;
use crate::oracle::{brute_force_embed_counted, OracleVerdict};
use crate::tree::Tree;

pub const SCAN_TREE_EDGE_CAP: usize = 6;
pub const SCAN_HOST_CAP: usize = 9;

#[derive(Clone, Debug, Serialize)]
pub struct TreeTally {
    pub tree_index: usize,
    pub tree_text: String,
    pub embedded: usize,
    pub refuted: usize,
    pub budget_exceeded: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub tree_index: usize,
    pub tree_text: String,
    pub host_text: String,
}

/// One scan over `trees x hosts`; `search_nodes` is the deterministic cost
/// measure, wall time stays out of the serialized report so identical runs
/// produce identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub m: usize,
    pub hosts: usize,
    pub trees: usize,
    pub verdicts: usize,
    pub tallies: Vec<TreeTally>,
    pub counterexamples: Vec<Counterexample>,
    pub search_nodes: u64,
    #[serde(skip)]
    pub wall_ms: u128,
}

/// Runs the oracle on every (tree, host) pair: trees are all non-isomorphic
/// trees with `m` edges, hosts are sampled with min degree at least
/// `floor(2m/3)` and max degree at least `m` on at most nine vertices.
pub fn scan_conjecture(m: usize, hosts: usize, seed: u64, budget: u64) -> Result<ScanReport> {
    if !(1..=SCAN_TREE_EDGE_CAP).contains(&m) {
        return Err(Error::size(format!(
            "scan supports 1 <= m <= {SCAN_TREE_EDGE_CAP}, got {m}"
        )));
    }
    if m + 1 > SCAN_HOST_CAP {
        return Err(Error::size("tree larger than any admissible host"));
    }
    let started = std::time::Instant::now();
    let trees: Vec<Tree> = nonisomorphic_trees(m + 1);
    let delta_min = 2 * m / 3;
    let mut tallies: Vec<TreeTally> = trees
        .iter()
        .enumerate()
        .map(|(i, t)| TreeTally {
            tree_index: i,
            tree_text: t.to_text(),
            embedded: 0,
            refuted: 0,
            budget_exceeded: 0,
        })
        .collect();
    let mut counterexamples = Vec::new();
    let mut search_nodes = 0u64;
    for host_index in 0..hosts {
        let host = sample_host(m, delta_min, seed, host_index as u64)?;
        for (i, tree) in trees.iter().enumerate() {
            let (verdict, nodes) = brute_force_embed_counted(tree, &host, budget);
            search_nodes += nodes;
            match verdict {
                OracleVerdict::Found(_) => tallies[i].embedded += 1,
                OracleVerdict::BudgetExceeded => tallies[i].budget_exceeded += 1,
                OracleVerdict::None => {
                    // re-verify with a doubled budget before reporting
                    let (again, nodes2) = brute_force_embed_counted(tree, &host, budget * 2);
                    search_nodes += nodes2;
                    match again {
                        OracleVerdict::None => {
                            tallies[i].refuted += 1;
                            counterexamples.push(Counterexample {
                                tree_index: i,
                                tree_text: tree.to_text(),
                                host_text: host.to_edge_list(),
                            });
                        }
                        OracleVerdict::Found(_) => tallies[i].embedded += 1,
                        OracleVerdict::BudgetExceeded => tallies[i].budget_exceeded += 1,
                    }
                }
            }
        }
    }
    Ok(ScanReport {
        m,
        hosts,
        trees: trees.len(),
        verdicts: hosts * trees.len(),
        tallies,
        counterexamples,
        search_nodes,
        wall_ms: started.elapsed().as_millis(),
    })
}

/// Deterministic host sampler for a scan slot: the size cycles through the
/// admissible range and the seed mixes in the slot index.
fn sample_host(m: usize, delta_min: usize, seed: u64, index: u64) -> Result<Graph> {
    let lo = m + 1;
    let hi = SCAN_HOST_CAP;
    let span = (hi - lo + 1) as u64;
    let n = lo + (index % span) as usize;
    let host_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index);
    gen_random_host(n, delta_min, m, host_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_embed;

    #[test]
    fn small_scan_finds_no_counterexample() {
        let report = scan_conjecture(3, 50, 7, 1_000_000).unwrap();
        assert_eq!(report.trees, 2); // the path and the star with 3 edges
        assert_eq!(report.verdicts, 100);
        assert!(report.counterexamples.is_empty());
        for tally in &report.tallies {
            assert_eq!(tally.embedded, 50);
        }
    }

    #[test]
    fn scan_is_deterministic() {
        let a = scan_conjecture(4, 20, 99, 1_000_000).unwrap();
        let b = scan_conjecture(4, 20, 99, 1_000_000).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn below_threshold_host_shows_the_spider_counterexample() {
        // the twin-clique host sits one below the degree bound and the
        // spider tree shows the bound cannot be lowered
        let inst = crate::gen::gen_extremal(2, crate::gen::ExtremalKind::TwinCliques).unwrap();
        assert_eq!(inst.min_degree, 2 * inst.tree_edges / 3 - 1);
        assert!(brute_force_embed(&inst.tree, &inst.host, 10_000_000).is_none());
    }
}
