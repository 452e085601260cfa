//! Road-network graph, its invariants, and seeded scenario generation.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{substream, NETWORK_STREAM};

/// Intersection identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

/// Directed road-section identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SectionId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for SectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One directed road segment. Units are km, km/h and vehicles/km.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadSection {
    pub id: SectionId,
    #[serde(rename = "from")]
    pub from_node: NodeId,
    #[serde(rename = "to")]
    pub to_node: NodeId,
    pub length_km: f64,
    pub v_max_kmh: f64,
    pub k_max_vpk: f64,
    pub density_vpk: f64,
}

#[derive(Serialize, Deserialize)]
struct NetworkRecord {
    nodes: Vec<NodeId>,
    sections: Vec<RoadSection>,
}

/// Directed graph of intersections and road sections.
///
/// Adjacency and id lookups are derived from `sections` at construction and
/// never serialized. Only densities may be changed afterwards, which leaves
/// the derived indexes valid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "NetworkRecord", into = "NetworkRecord")]
pub struct Network {
    nodes: Vec<NodeId>,
    sections: Vec<RoadSection>,
    node_pos: HashMap<NodeId, usize>,
    section_pos: HashMap<SectionId, usize>,
    outgoing: Vec<Vec<usize>>,
}

impl From<NetworkRecord> for Network {
    fn from(record: NetworkRecord) -> Self {
        Network::new(record.nodes, record.sections)
    }
}

impl From<Network> for NetworkRecord {
    fn from(net: Network) -> Self {
        NetworkRecord {
            nodes: net.nodes,
            sections: net.sections,
        }
    }
}

impl Network {
    /// Builds a network; nodes are sorted and deduplicated. Sections whose
    /// tail is not a known node are kept (so `validate` can report them) but
    /// excluded from adjacency.
    pub fn new(mut nodes: Vec<NodeId>, sections: Vec<RoadSection>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        let node_pos: HashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut section_pos = HashMap::with_capacity(sections.len());
        let mut outgoing = vec![Vec::new(); nodes.len()];
        for (idx, s) in sections.iter().enumerate() {
            section_pos.entry(s.id).or_insert(idx);
            if let (Some(&from), true) = (node_pos.get(&s.from_node), node_pos.contains_key(&s.to_node)) {
                outgoing[from].push(idx);
            }
        }
        for out in &mut outgoing {
            out.sort_by_key(|&idx| sections[idx].id);
        }
        Network {
            nodes,
            sections,
            node_pos,
            section_pos,
            outgoing,
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn sections(&self) -> &[RoadSection] {
        &self.sections
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    pub fn node_index(&self, node: NodeId) -> Option<usize> {
        self.node_pos.get(&node).copied()
    }

    pub fn section_index(&self, id: SectionId) -> Option<usize> {
        self.section_pos.get(&id).copied()
    }

    pub fn section(&self, id: SectionId) -> Option<&RoadSection> {
        self.section_index(id).map(|idx| &self.sections[idx])
    }

    /// Section indexes leaving the node at position `node_idx`, ordered by section id.
    pub fn outgoing(&self, node_idx: usize) -> &[usize] {
        &self.outgoing[node_idx]
    }

    /// Node position of a section's head (`to_node`). Only valid for sections
    /// present in adjacency.
    pub(crate) fn head_index(&self, section_idx: usize) -> usize {
        self.node_pos[&self.sections[section_idx].to_node]
    }

    pub(crate) fn tail_index(&self, section_idx: usize) -> usize {
        self.node_pos[&self.sections[section_idx].from_node]
    }

    pub(crate) fn section_mut(&mut self, section_idx: usize) -> &mut RoadSection {
        &mut self.sections[section_idx]
    }

    /// Breadth-first hop counts from `start` along section directions.
    pub fn hop_distances(&self, start: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        let mut queue = VecDeque::new();
        dist[start] = Some(0);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &s in &self.outgoing[u] {
                let v = self.head_index(s);
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Nodes from which `target` can be reached.
    pub fn reaching(&self, target: usize) -> Vec<bool> {
        let mut incoming = vec![Vec::new(); self.nodes.len()];
        for (u, out) in self.outgoing.iter().enumerate() {
            for &s in out {
                incoming[self.head_index(s)].push(u);
            }
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![target];
        seen[target] = true;
        while let Some(v) = stack.pop() {
            for &u in &incoming[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        self.hop_distances(0).iter().all(Option::is_some) && self.reaching(0).iter().all(|&r| r)
    }

    /// The ordered node pair with the largest finite hop distance; ties go to
    /// the smallest `(origin, destination)`.
    pub fn farthest_pair(&self) -> Option<(NodeId, NodeId)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for u in 0..self.nodes.len() {
            for (v, d) in self.hop_distances(u).into_iter().enumerate() {
                if let Some(d) = d {
                    if u != v && best.is_none_or(|(bd, _, _)| d > bd) {
                        best = Some((d, u, v));
                    }
                }
            }
        }
        best.map(|(_, u, v)| (self.nodes[u], self.nodes[v]))
    }
}

/// Which invariant a [`Violation`] breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    NonPositiveLength,
    NonPositiveSpeedLimit,
    NonPositiveJamDensity,
    DensityOutOfRange,
    SelfLoop,
    UnknownEndpoint,
    DuplicateId,
    NotStronglyConnected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub section: Option<SectionId>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.section {
            Some(id) => write!(f, "section {id}: {}", self.detail),
            None => write!(f, "{}", self.detail),
        }
    }
}

/// Checks every network invariant; an empty list means the network is valid.
pub fn validate(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |section: Option<SectionId>, rule: Rule, detail: String| {
        out.push(Violation { section, rule, detail })
    };
    let mut seen = HashSet::new();
    for s in net.sections() {
        let id = Some(s.id);
        if !seen.insert(s.id) {
            push(id, Rule::DuplicateId, "duplicate section id".into());
        }
        if !(s.length_km > 0.0 && s.length_km.is_finite()) {
            push(id, Rule::NonPositiveLength, format!("length {} km is not positive", s.length_km));
        }
        if !(s.v_max_kmh > 0.0 && s.v_max_kmh.is_finite()) {
            push(id, Rule::NonPositiveSpeedLimit, format!("v_max {} km/h is not positive", s.v_max_kmh));
        }
        if !(s.k_max_vpk > 0.0 && s.k_max_vpk.is_finite()) {
            push(id, Rule::NonPositiveJamDensity, format!("k_max {} veh/km is not positive", s.k_max_vpk));
        }
        if !(s.density_vpk >= 0.0 && s.density_vpk <= s.k_max_vpk) {
            push(
                id,
                Rule::DensityOutOfRange,
                format!("density {} veh/km outside [0, {}]", s.density_vpk, s.k_max_vpk),
            );
        }
        if s.from_node == s.to_node {
            push(id, Rule::SelfLoop, format!("self-loop at node {}", s.from_node));
        }
        for node in [s.from_node, s.to_node] {
            if net.node_index(node).is_none() {
                push(id, Rule::UnknownEndpoint, format!("endpoint {node} is not a network node"));
            }
        }
    }
    if !net.is_strongly_connected() {
        push(None, Rule::NotStronglyConnected, "not strongly connected".into());
    }
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("node {0} is not in the network")]
    UnknownNode(NodeId),
}

/// Parameters of a generated scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    pub n_sections: usize,
    pub length_range_km: (f64, f64),
    pub v_max_kmh: f64,
    pub k_max_vpk: f64,
    pub density_fraction_max: f64,
    pub seed: u64,
    pub origin: Option<NodeId>,
    pub destination: Option<NodeId>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_nodes: 25,
            n_sections: 100,
            length_range_km: (1.0, 10.0),
            v_max_kmh: 110.0,
            k_max_vpk: 80.0,
            density_fraction_max: 0.9,
            seed: 42,
            origin: None,
            destination: None,
        }
    }
}

impl ScenarioConfig {
    pub fn check(&self) -> Result<(), NetworkError> {
        let bad = |msg: String| Err(NetworkError::InvalidConfig(msg));
        let n = self.n_nodes;
        if n < 2 {
            return bad(format!("n_nodes = {n}, need at least 2"));
        }
        if self.n_sections < n {
            return bad(format!(
                "n_sections = {} < n_nodes = {n}; a strongly connected backbone needs one section per node",
                self.n_sections
            ));
        }
        if self.n_sections > n * (n - 1) {
            return bad(format!(
                "n_sections = {} exceeds the {} possible directed sections on {n} nodes",
                self.n_sections,
                n * (n - 1)
            ));
        }
        if n > u32::MAX as usize || self.n_sections > u32::MAX as usize {
            return bad("graph too large".into());
        }
        let (lo, hi) = self.length_range_km;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("length range ({lo}, {hi}) must satisfy 0 < min <= max"));
        }
        if !(self.v_max_kmh > 0.0 && self.v_max_kmh.is_finite()) {
            return bad(format!("v_max_kmh = {} must be positive", self.v_max_kmh));
        }
        if !(self.k_max_vpk > 0.0 && self.k_max_vpk.is_finite()) {
            return bad(format!("k_max_vpk = {} must be positive", self.k_max_vpk));
        }
        if !(0.0..1.0).contains(&self.density_fraction_max) {
            return bad(format!("density_fraction_max = {} outside [0, 1)", self.density_fraction_max));
        }
        for node in [self.origin, self.destination].into_iter().flatten() {
            if node.0 as usize >= n {
                return bad(format!("node {node} outside 0..{n}"));
            }
        }
        if self.origin.is_some() && self.origin == self.destination {
            return bad("origin equals destination".into());
        }
        Ok(())
    }

    /// Resolves origin and destination: explicit values win; otherwise the
    /// endpoints farthest apart in hops are used.
    pub fn endpoints(&self, net: &Network) -> Result<(NodeId, NodeId), NetworkError> {
        let farthest_from = |start: NodeId| -> Result<NodeId, NetworkError> {
            let s = net.node_index(start).ok_or(NetworkError::UnknownNode(start))?;
            let dist = net.hop_distances(s);
            (0..dist.len())
                .filter(|&v| v != s)
                .max_by_key(|&v| (dist[v], std::cmp::Reverse(v)))
                .map(|v| net.nodes()[v])
                .ok_or(NetworkError::InvalidConfig("network has a single node".into()))
        };
        let farthest_to = |end: NodeId| -> Result<NodeId, NetworkError> {
            let e = net.node_index(end).ok_or(NetworkError::UnknownNode(end))?;
            (0..net.node_count())
                .filter(|&u| u != e)
                .max_by_key(|&u| (net.hop_distances(u)[e], std::cmp::Reverse(u)))
                .map(|u| net.nodes()[u])
                .ok_or(NetworkError::InvalidConfig("network has a single node".into()))
        };
        match (self.origin, self.destination) {
            (Some(o), Some(d)) => Ok((o, d)),
            (Some(o), None) => Ok((o, farthest_from(o)?)),
            (None, Some(d)) => Ok((farthest_to(d)?, d)),
            (None, None) => net
                .farthest_pair()
                .ok_or(NetworkError::InvalidConfig("network has no connected node pair".into())),
        }
    }
}

/// Builds a strongly connected random network: a shuffled Hamiltonian cycle
/// over all nodes, then uniformly drawn extra directed sections (no
/// self-loops, no parallel duplicates) until `n_sections` is reached.
pub fn generate_network(cfg: &ScenarioConfig) -> Result<Network, NetworkError> {
    cfg.check()?;
    let mut rng = substream(cfg.seed, NETWORK_STREAM);
    let n = cfg.n_nodes as u32;

    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(cfg.n_sections);
    let mut present = HashSet::with_capacity(cfg.n_sections);
    for i in 0..order.len() {
        let e = (order[i], order[(i + 1) % order.len()]);
        present.insert(e);
        edges.push(e);
    }
    while edges.len() < cfg.n_sections {
        let e = (rng.gen_range(0..n), rng.gen_range(0..n));
        if e.0 != e.1 && present.insert(e) {
            edges.push(e);
        }
    }

    let (lo, hi) = cfg.length_range_km;
    let k_cap = cfg.density_fraction_max * cfg.k_max_vpk;
    let sections = edges
        .into_iter()
        .enumerate()
        .map(|(i, (from, to))| RoadSection {
            id: SectionId(i as u32),
            from_node: NodeId(from),
            to_node: NodeId(to),
            length_km: rng.gen_range(lo..=hi),
            v_max_kmh: cfg.v_max_kmh,
            k_max_vpk: cfg.k_max_vpk,
            density_vpk: rng.gen_range(0.0..=k_cap),
        })
        .collect();
    Ok(Network::new((0..n).map(NodeId).collect(), sections))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn default_scenario_has_one_hundred_sections_in_range() {
        let cfg = ScenarioConfig::default();
        let net = generate_network(&cfg).unwrap();
        assert_eq!(net.section_count(), 100);
        assert_eq!(net.node_count(), 25);
        for s in net.sections() {
            assert!((1.0..=10.0).contains(&s.length_km), "{s:?}");
            assert!(s.density_vpk >= 0.0 && s.density_vpk <= 0.9 * 80.0);
            assert_eq!(s.v_max_kmh, 110.0);
            assert_eq!(s.k_max_vpk, 80.0);
        }
        assert!(validate(&net).is_empty());
    }

    #[test]
    fn two_node_scenario_is_a_cycle() {
        let cfg = ScenarioConfig { n_nodes: 2, n_sections: 2, ..Default::default() };
        let net = generate_network(&cfg).unwrap();
        let mut pairs: Vec<_> = net.sections().iter().map(|s| (s.from_node.0, s.to_node.0)).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        assert!(net.is_strongly_connected());
    }

    #[test]
    fn generation_is_deterministic_by_seed() {
        let cfg = ScenarioConfig::default();
        let a = serde_json::to_string(&generate_network(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_network(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = ScenarioConfig { seed: 43, ..cfg };
        assert_ne!(a, serde_json::to_string(&generate_network(&other).unwrap()).unwrap());
    }

    #[test]
    fn rejects_too_few_sections() {
        let cfg = ScenarioConfig { n_nodes: 10, n_sections: 9, ..Default::default() };
        assert!(matches!(generate_network(&cfg), Err(NetworkError::InvalidConfig(_))));
        let cfg = ScenarioConfig { n_nodes: 3, n_sections: 7, ..Default::default() };
        assert!(generate_network(&cfg).is_err());
        let cfg = ScenarioConfig { origin: Some(NodeId(1)), destination: Some(NodeId(1)), ..Default::default() };
        assert!(cfg.check().is_err());
    }

    #[test]
    fn complete_digraph_is_reachable() {
        let cfg = ScenarioConfig { n_nodes: 4, n_sections: 12, ..Default::default() };
        let net = generate_network(&cfg).unwrap();
        assert_eq!(net.section_count(), 12);
        assert!(validate(&net).is_empty());
    }

    #[test]
    fn density_breach_names_the_section() {
        let net = network(2, vec![section(0, 0, 1, 2.0, 10.0), section(1, 1, 0, 2.0, 81.0)]);
        let v = validate(&net);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].section, Some(SectionId(1)));
        assert_eq!(v[0].rule, Rule::DensityOutOfRange);
    }

    #[test]
    fn unreachable_node_is_reported() {
        let net = network(3, vec![section(0, 0, 1, 2.0, 0.0), section(1, 1, 0, 2.0, 0.0)]);
        let v = validate(&net);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::NotStronglyConnected);
        assert_eq!(v[0].to_string(), "not strongly connected");
    }

    #[test]
    fn structural_breaches_are_reported() {
        let net = network(
            2,
            vec![
                section(0, 0, 1, 0.0, 0.0),
                section(0, 1, 1, 2.0, 0.0),
                section(2, 1, 7, 2.0, 0.0),
                section(3, 1, 0, 2.0, -1.0),
            ],
        );
        let rules: Vec<Rule> = validate(&net).into_iter().map(|v| v.rule).collect();
        for rule in [
            Rule::NonPositiveLength,
            Rule::DuplicateId,
            Rule::SelfLoop,
            Rule::UnknownEndpoint,
            Rule::DensityOutOfRange,
        ] {
            assert!(rules.contains(&rule), "missing {rule:?} in {rules:?}");
        }
    }

    #[test]
    fn json_roundtrip_rebuilds_adjacency() {
        let net = generate_network(&ScenarioConfig { n_nodes: 6, n_sections: 14, ..Default::default() }).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        assert!(json.starts_with("{\"nodes\":[0,1,2,3,4,5],\"sections\":[{\"id\":0,\"from\":"));
        let back: Network = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn endpoints_default_to_farthest_pair() {
        // path 0 -> 1 -> 2 -> 3 closed by 3 -> 0
        let net = network(
            4,
            vec![
                section(0, 0, 1, 1.0, 0.0),
                section(1, 1, 2, 1.0, 0.0),
                section(2, 2, 3, 1.0, 0.0),
                section(3, 3, 0, 1.0, 0.0),
            ],
        );
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.endpoints(&net).unwrap(), (NodeId(0), NodeId(3)));
        let cfg = ScenarioConfig { origin: Some(NodeId(2)), ..Default::default() };
        assert_eq!(cfg.endpoints(&net).unwrap(), (NodeId(2), NodeId(1)));
        let cfg = ScenarioConfig { destination: Some(NodeId(2)), ..Default::default() };
        assert_eq!(cfg.endpoints(&net).unwrap(), (NodeId(3), NodeId(2)));
    }
}
