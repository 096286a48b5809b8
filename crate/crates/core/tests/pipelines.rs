//! Larger pipeline cross-checks against the exhaustive oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use treembed::constants::Constants;
use treembed::dense::embed_no_dense;
use treembed::gen::{low_leaf_tree, random_tree, spider_tree};
use treembed::graph::{validate_embedding, Graph};
use treembed::num::ratio;
use treembed::oracle::{brute_force_embed_counted, OracleVerdict};
use treembed::pipeline::theorem2_embed;

/// Host on 27 vertices: two complete 13-blocks plus a universal vertex.
fn two_blocks_plus_universal() -> Graph {
    let mut edges = Vec::new();
    for base in [0usize, 13] {
        for u in 0..13 {
            for w in u + 1..13 {
                edges.push((base + u, base + w));
            }
        }
    }
    for v in 0..26 {
        edges.push((v, 26));
    }
    Graph::from_edges(27, &edges).unwrap()
}

#[test]
fn two_blocks_cross_check() {
    let host = two_blocks_plus_universal();
    let tree = spider_tree(4); // 13 vertices, 12 edges
    let (oracle, _) = brute_force_embed_counted(&tree, &host, 100_000_000);
    let oracle_found = matches!(oracle, OracleVerdict::Found(_));
    // the spider fits: the hub takes the universal vertex, stars go to blocks
    assert!(oracle_found);

    let out = theorem2_embed(&tree, &host, &Constants::defaults(12), 3).unwrap();
    if out.outcome.is_success() {
        assert!(validate_embedding(&tree, &host, &out.outcome.map).complete_valid);
    } else {
        // a stuck pipeline is a completeness gap, never an error
        assert!(oracle_found);
    }
}

/// Quasi-random host on 40 vertices with min degree at least `(1-gamma)m`.
fn quasi_random_host(n: usize, delta_min: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for w in u + 1..n {
                if rng.gen_bool(0.55) {
                    edges.push((u, w));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).unwrap();
        if g.min_degree() >= delta_min {
            return g;
        }
    }
}

#[test]
fn quasi_random_forty_vertex_sweep() {
    let m = 12;
    let constants = Constants::defaults(m);
    let host = quasi_random_host(40, m, 2024);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut successes = 0;
    let mut gaps = 0;
    for round in 0..100u64 {
        let tree = random_tree(m + 1, &mut rng);
        let out = theorem2_embed(&tree, &host, &constants, round).unwrap();
        if out.outcome.is_success() {
            assert!(
                validate_embedding(&tree, &host, &out.outcome.map).complete_valid,
                "round {round} branch {}",
                out.branch
            );
            successes += 1;
        } else {
            // with min degree >= m the greedy certificate says an embedding
            // exists, so a stuck outcome can only be a completeness gap
            let (oracle, _) = brute_force_embed_counted(&tree, &host, 1_000_000);
            match oracle {
                OracleVerdict::Found(_) | OracleVerdict::BudgetExceeded => gaps += 1,
                OracleVerdict::None => panic!("round {round}: oracle refutes a dense host"),
            }
        }
    }
    println!("quasi-random sweep: {successes} successes, {gaps} completeness gaps");
    assert!(successes >= 90, "only {successes} of 100 succeeded");
}

#[test]
fn no_dense_on_quasi_random_host() {
    let m = 12;
    let host = quasi_random_host(36, 10, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut successes = 0;
    for round in 0..20u64 {
        let tree = low_leaf_tree(m + 1, &mut rng);
        let out = embed_no_dense(&tree, &host, m, ratio(1, 5), round, 32).unwrap();
        if out.outcome.is_success() {
            assert!(validate_embedding(&tree, &host, &out.outcome.map).complete_valid);
            successes += 1;
        }
    }
    println!("no-dense sweep: {successes}/20 succeeded");
    assert!(successes > 0);
}
