use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Kinds of clustered graphs on 1000 nodes (10 clusters of 100).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterKind {
    Hub,
    ScaleFree,
}

pub const CLUSTER_GRAPH_NODES: usize = 1000;
const CLUSTERS: usize = 10;
const CLUSTER_SIZE: usize = 100;
const CLUSTER_EDGES: usize = 90;
const INTER_PAIRS_PER_ADJACENCY: usize = 10;

/// Uniformly sampled distinct undirected edges, reproducible by seed.
/// Returned sorted with i < j.
pub fn gen_erdos_renyi(p: usize, num_edges: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let max = p * p.saturating_sub(1) / 2;
    if num_edges > max {
        return Err(Error::InfeasibleEdgeCount {
            requested: num_edges,
            nodes: p,
            max,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = BTreeSet::new();
    if num_edges * 2 > max {
        // dense request: enumerate all pairs and take a random subset
        let mut pairs: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
            .collect();
        for k in 0..num_edges {
            let pick = rng.random_range(k..pairs.len());
            pairs.swap(k, pick);
        }
        set.extend(pairs.into_iter().take(num_edges));
    } else {
        while set.len() < num_edges {
            let i = rng.random_range(0..p);
            let j = rng.random_range(0..p);
            if i != j {
                set.insert((i.min(j), i.max(j)));
            }
        }
    }
    Ok(set.into_iter().collect())
}

/// Clustered graph: 10 clusters of 100 nodes with exactly 90 internal
/// edges each (built per `kind`), plus 100 inter-cluster edges between
/// cyclically adjacent clusters. Always 1000 edges in total.
pub fn gen_cluster_graph(kind: ClusterKind, seed: u64) -> Result<Vec<(usize, usize)>> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = BTreeSet::new();
    for c in 0..CLUSTERS {
        let base = c * CLUSTER_SIZE;
        let cluster_seed: u64 = master.random();
        let local = match kind {
            ClusterKind::Hub => hub_cluster(cluster_seed)?,
            ClusterKind::ScaleFree => scale_free_cluster(cluster_seed)?,
        };
        debug_assert_eq!(local.len(), CLUSTER_EDGES);
        for (i, j) in local {
            edges.insert((base + i, base + j));
        }
    }
    // 10 random node pairs between each cyclically adjacent cluster pair.
    for c in 0..CLUSTERS {
        let next = (c + 1) % CLUSTERS;
        let mut chosen = BTreeSet::new();
        while chosen.len() < INTER_PAIRS_PER_ADJACENCY {
            let u = c * CLUSTER_SIZE + master.random_range(0..CLUSTER_SIZE);
            let v = next * CLUSTER_SIZE + master.random_range(0..CLUSTER_SIZE);
            chosen.insert((u.min(v), u.max(v)));
        }
        edges.extend(chosen);
    }
    Ok(edges.into_iter().collect())
}

/// One hub-network cluster on 100 local nodes: a 97-node, 45-edge random
/// graph plus 3 hub nodes added one at a time, each wired to 15 distinct
/// existing nodes. 45 + 3*15 = 90 edges.
fn hub_cluster(seed: u64) -> Result<Vec<(usize, usize)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let er_seed: u64 = rng.random();
    let mut edges: BTreeSet<(usize, usize)> =
        gen_erdos_renyi(97, 45, er_seed)?.into_iter().collect();
    for hub in 97..100 {
        for idx in sample(&mut rng, hub, 15).iter() {
            edges.insert((idx, hub));
        }
    }
    Ok(edges.into_iter().collect())
}

/// One scale-free cluster on 100 local nodes with exactly 90 edges:
/// degrees drawn from P(k) proportional to k^-2.3 truncated to [1, 30],
/// adjusted to total 180, then stub-matched rejecting self-loops and
/// multi-edges.
fn scale_free_cluster(seed: u64) -> Result<Vec<(usize, usize)>> {
    const EXPONENT: f64 = 2.3;
    const MAX_DEGREE: usize = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (1..=MAX_DEGREE).map(|k| (k as f64).powf(-EXPONENT)).collect();
    let total: f64 = weights.iter().sum();

    for _resample in 0..50 {
        let mut degrees: Vec<usize> = (0..CLUSTER_SIZE)
            .map(|_| {
                let mut u = rng.random::<f64>() * total;
                for (k, w) in weights.iter().enumerate() {
                    if u < *w {
                        return k + 1;
                    }
                    u -= w;
                }
                MAX_DEGREE
            })
            .collect();
        // nudge the degree sum to exactly twice the edge budget
        let target = 2 * CLUSTER_EDGES;
        loop {
            let sum: usize = degrees.iter().sum();
            if sum == target {
                break;
            }
            let at = rng.random_range(0..CLUSTER_SIZE);
            if sum > target && degrees[at] > 1 {
                degrees[at] -= 1;
            } else if sum < target && degrees[at] < MAX_DEGREE {
                degrees[at] += 1;
            }
        }

        let mut stubs: Vec<usize> = degrees
            .iter()
            .enumerate()
            .flat_map(|(node, &d)| std::iter::repeat(node).take(d))
            .collect();
        'matching: for _attempt in 0..200 {
            for k in (1..stubs.len()).rev() {
                let pick = rng.random_range(0..=k);
                stubs.swap(k, pick);
            }
            let mut edges = BTreeSet::new();
            for pair in stubs.chunks_exact(2) {
                let (a, b) = (pair[0], pair[1]);
                if a == b || !edges.insert((a.min(b), a.max(b))) {
                    continue 'matching;
                }
            }
            return Ok(edges.into_iter().collect());
        }
    }
    Err(Error::ConstraintUnsatisfiable {
        rounds: 50 * 200,
        context: "scale-free stub matching kept producing collisions".into(),
    })
}
