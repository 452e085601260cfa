//! Reference routines shared by the integration tests. Nothing here calls the
//! planners under test; paths are enumerated straight from the section list.

#![allow(dead_code)]

use fits_sim::pricing::snapshot;
use fits_sim::{generate_network, FlowParams, Network, NodeId, PlanningSnapshot, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-section reward written out independently of the library.
pub fn reference_reward(alpha: f64, t_ref: f64, lambda: f64, t: f64, price: f64) -> f64 {
    alpha * (price - 1.0) / 2.0 - (1.0 - alpha) * (t / t_ref) - lambda
}

/// Every simple path from `origin` to `destination`, as section indexes.
pub fn all_simple_paths(snap: &PlanningSnapshot, origin: NodeId, destination: NodeId) -> Vec<Vec<usize>> {
    fn walk(
        sections: &[fits_sim::RoadSection],
        at: NodeId,
        destination: NodeId,
        visited: &mut Vec<NodeId>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == destination {
            out.push(path.clone());
            return;
        }
        for (i, s) in sections.iter().enumerate() {
            if s.from_node == at && !visited.contains(&s.to_node) {
                visited.push(s.to_node);
                path.push(i);
                walk(sections, s.to_node, destination, visited, path, out);
                path.pop();
                visited.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(snap.network().sections(), origin, destination, &mut vec![origin], &mut Vec::new(), &mut out);
    out
}

/// Best score over all simple paths, summed left to right.
pub fn brute_force_max(
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
    edge_score: impl Fn(usize) -> f64,
) -> f64 {
    all_simple_paths(snap, origin, destination)
        .iter()
        .map(|p| p.iter().fold(0.0, |acc, &i| acc + edge_score(i)))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub struct Instance {
    pub net: Network,
    pub snap: PlanningSnapshot,
    pub origin: NodeId,
    pub destination: NodeId,
    pub alpha: f64,
}

/// Random strongly connected instance with 2..=max_nodes nodes, random
/// endpoints and preference weight.
pub fn random_instance(seed: u64, max_nodes: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let n_nodes = rng.gen_range(2..=max_nodes);
    let n_sections = rng.gen_range(n_nodes..=(3 * n_nodes).min(n_nodes * (n_nodes - 1)));
    let cfg = ScenarioConfig { n_nodes, n_sections, seed, ..Default::default() };
    let net = generate_network(&cfg).expect("valid config");
    let origin = rng.gen_range(0..n_nodes as u32);
    let mut destination = rng.gen_range(0..n_nodes as u32 - 1);
    if destination >= origin {
        destination += 1;
    }
    let alpha = rng.gen_range(0.0..=1.0);
    let snap = snapshot(&net, &FlowParams::default(), 0);
    Instance { net, snap, origin: NodeId(origin), destination: NodeId(destination), alpha }
}
