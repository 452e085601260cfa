//! Route planners that run on a vehicle against a broadcast snapshot.
//!
//! Every planner's output is scored by the same additive utility,
//! `sum over sections of alpha*(price-1)/2 - (1-alpha)*t/t_ref - lambda`,
//! so the preference-customized planner and the baselines are compared on
//! equal terms. All edge rewards are strictly negative for `lambda > 0`,
//! which keeps the optimum a finite simple path.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NodeId, SectionId};
use crate::pricing::PlanningSnapshot;

mod enumerate;
mod qlearning;
mod search;

pub use enumerate::simple_paths;
pub use qlearning::{plan_qlearning, QLearningConfig, QTable};
pub use search::{plan_mdc, plan_mns, plan_oracle, plan_sdt};

pub const DEFAULT_STEP_PENALTY: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("preference weight {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("invalid reward model: {0}")]
    InvalidRewardModel(String),
    #[error("node {0} is not in the network")]
    UnknownNode(NodeId),
    #[error("origin and destination are both node {0}")]
    SameEndpoints(NodeId),
    #[error("destination {destination} is unreachable from origin {origin}")]
    Unreachable { origin: NodeId, destination: NodeId },
    #[error("greedy policy did not reach the destination; blocked at node {node}")]
    NotConverged { node: NodeId },
    #[error("path is empty")]
    EmptyPath,
    #[error("section {0} is not in the network")]
    UnknownSection(SectionId),
    #[error("section {section} at position {position} does not continue the path")]
    BrokenChain { position: usize, section: SectionId },
    #[error("path revisits node {0}")]
    NotSimple(NodeId),
}

/// Preference-weighted per-section reward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    /// 1 values compensation only, 0 values driving time only.
    pub alpha: f64,
    /// Time normalizer, hours.
    pub t_ref_h: f64,
    /// Fixed cost per section traversed.
    pub lambda_step: f64,
}

impl RewardModel {
    pub fn new(alpha: f64, t_ref_h: f64, lambda_step: f64) -> Result<Self, PlanError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(PlanError::InvalidAlpha(alpha));
        }
        if !(t_ref_h > 0.0 && t_ref_h.is_finite()) {
            return Err(PlanError::InvalidRewardModel(format!("t_ref_h = {t_ref_h} must be positive")));
        }
        if !(lambda_step >= 0.0 && lambda_step.is_finite()) {
            return Err(PlanError::InvalidRewardModel(format!("lambda_step = {lambda_step} must be non-negative")));
        }
        Ok(RewardModel { alpha, t_ref_h, lambda_step })
    }

    /// Model normalized by the snapshot's slowest section, default step penalty.
    pub fn for_snapshot(alpha: f64, snap: &PlanningSnapshot) -> Result<Self, PlanError> {
        Self::new(alpha, snap.max_time(), DEFAULT_STEP_PENALTY)
    }

    pub fn edge_reward(&self, t_h: f64, price: f64) -> f64 {
        self.alpha * (price - 1.0) / 2.0 - (1.0 - self.alpha) * (t_h / self.t_ref_h) - self.lambda_step
    }

    pub(crate) fn section_reward(&self, snap: &PlanningSnapshot, section_idx: usize) -> f64 {
        self.edge_reward(snap.times()[section_idx], snap.prices()[section_idx])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Proposal,
    Sdt,
    Mdc,
    Mns,
    Oracle,
}

impl Scheme {
    pub const BASELINES: [Scheme; 3] = [Scheme::Sdt, Scheme::Mdc, Scheme::Mns];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Proposal => "PROPOSAL",
            Scheme::Sdt => "SDT",
            Scheme::Mdc => "MDC",
            Scheme::Mns => "MNS",
            Scheme::Oracle => "ORACLE",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "proposal" => Ok(Scheme::Proposal),
            "sdt" => Ok(Scheme::Sdt),
            "mdc" => Ok(Scheme::Mdc),
            "mns" => Ok(Scheme::Mns),
            "oracle" => Ok(Scheme::Oracle),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}

/// A simple origin-to-destination path with its score.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathPlan {
    pub scheme: Scheme,
    pub alpha: f64,
    pub sections: Vec<SectionId>,
    pub total_time_h: f64,
    pub total_price: f64,
    pub utility: f64,
}

impl PathPlan {
    /// Scores `sections` under `rm`, checking that they form a simple path.
    pub fn score(
        scheme: Scheme,
        rm: &RewardModel,
        snap: &PlanningSnapshot,
        sections: &[SectionId],
    ) -> Result<Self, PlanError> {
        let idxs = resolve_path(snap, sections)?;
        let net = snap.network();
        let mut visited = vec![false; net.node_count()];
        visited[net.tail_index(idxs[0])] = true;
        for &idx in &idxs {
            let head = net.head_index(idx);
            if std::mem::replace(&mut visited[head], true) {
                return Err(PlanError::NotSimple(net.nodes()[head]));
            }
        }
        Ok(Self::from_indexes(scheme, rm, snap, &idxs))
    }

    pub(crate) fn from_indexes(scheme: Scheme, rm: &RewardModel, snap: &PlanningSnapshot, idxs: &[usize]) -> Self {
        let sections = snap.network().sections();
        PathPlan {
            scheme,
            alpha: rm.alpha,
            sections: idxs.iter().map(|&i| sections[i].id).collect(),
            total_time_h: idxs.iter().map(|&i| snap.times()[i]).sum(),
            total_price: idxs.iter().map(|&i| snap.prices()[i]).sum(),
            utility: utility_of_indexes(rm, snap, idxs),
        }
    }

    /// Section ids joined by `-`.
    pub fn path_string(&self) -> String {
        let ids: Vec<String> = self.sections.iter().map(SectionId::to_string).collect();
        ids.join("-")
    }
}

fn utility_of_indexes(rm: &RewardModel, snap: &PlanningSnapshot, idxs: &[usize]) -> f64 {
    idxs.iter().fold(0.0, |acc, &i| acc + rm.section_reward(snap, i))
}

/// Maps section ids to indexes and checks they chain head to tail.
fn resolve_path(snap: &PlanningSnapshot, sections: &[SectionId]) -> Result<Vec<usize>, PlanError> {
    if sections.is_empty() {
        return Err(PlanError::EmptyPath);
    }
    let net = snap.network();
    let mut idxs: Vec<usize> = Vec::with_capacity(sections.len());
    for (position, &id) in sections.iter().enumerate() {
        let idx = net.section_index(id).ok_or(PlanError::UnknownSection(id))?;
        let s = &net.sections()[idx];
        if net.node_index(s.from_node).is_none() || net.node_index(s.to_node).is_none() {
            return Err(PlanError::UnknownSection(id));
        }
        if let Some(&prev) = idxs.last() {
            if net.sections()[prev].to_node != s.from_node {
                return Err(PlanError::BrokenChain { position, section: id });
            }
        }
        idxs.push(idx);
    }
    Ok(idxs)
}

/// Sum of edge rewards along a chained path.
pub fn path_utility(rm: &RewardModel, snap: &PlanningSnapshot, sections: &[SectionId]) -> Result<f64, PlanError> {
    resolve_path(snap, sections).map(|idxs| utility_of_indexes(rm, snap, &idxs))
}

/// Resolves and checks an origin/destination pair to node positions.
pub(crate) fn endpoint_indexes(
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
) -> Result<(usize, usize), PlanError> {
    let net = snap.network();
    let o = net.node_index(origin).ok_or(PlanError::UnknownNode(origin))?;
    let d = net.node_index(destination).ok_or(PlanError::UnknownNode(destination))?;
    if o == d {
        return Err(PlanError::SameEndpoints(origin));
    }
    Ok((o, d))
}

/// Runs the named scheme. `Proposal` is the Q-learning planner.
pub fn plan(
    scheme: Scheme,
    rm: &RewardModel,
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
    ql: &QLearningConfig,
    seed: u64,
) -> Result<PathPlan, PlanError> {
    match scheme {
        Scheme::Proposal => plan_qlearning(rm, snap, origin, destination, ql, seed),
        Scheme::Oracle => plan_oracle(rm, snap, origin, destination),
        Scheme::Sdt => plan_sdt(rm, snap, origin, destination),
        Scheme::Mdc => plan_mdc(rm, snap, origin, destination),
        Scheme::Mns => plan_mns(rm, snap, origin, destination),
    }
}

/// Writes `scheme,alpha,path,total_time_h,total_price,utility` rows.
pub fn write_plans_csv<'a, W: Write>(
    plans: impl IntoIterator<Item = &'a PathPlan>,
    out: W,
) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["scheme", "alpha", "path", "total_time_h", "total_price", "utility"])?;
    for p in plans {
        wtr.write_record([
            p.scheme.label().to_string(),
            p.alpha.to_string(),
            p.path_string(),
            p.total_time_h.to_string(),
            p.total_price.to_string(),
            p.utility.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::network::fixtures::{network, section};
    use crate::network::Network;
    use crate::pricing::{broadcast, PlanningSnapshot, PriceEntry, PriceTable};

    /// Snapshot over `net` with hand-set times and prices (section order).
    pub fn snapshot_with(net: &Network, times: &[f64], prices: &[f64]) -> PlanningSnapshot {
        let entries = net
            .sections()
            .iter()
            .zip(times.iter().zip(prices))
            .map(|(s, (&travel_time_h, &price))| PriceEntry { section_id: s.id, travel_time_h, price })
            .collect();
        broadcast(&PriceTable { epoch: 0, entries }, net).unwrap()
    }

    /// 0 -> {1, 2} -> 3 with a 1 -> 2 shortcut.
    ///
    /// | id | edge | t    | price |
    /// | 0  | 0->1 | 0.2  | 0.5   |
    /// | 1  | 0->2 | 0.1  | -0.5  |
    /// | 2  | 1->3 | 0.2  | 0.5   |
    /// | 3  | 2->3 | 0.1  | 0.0   |
    /// | 4  | 1->2 | 0.05 | 1.0   |
    pub fn diamond() -> PlanningSnapshot {
        let net = network(
            4,
            vec![
                section(0, 0, 1, 1.0, 0.0),
                section(1, 0, 2, 1.0, 0.0),
                section(2, 1, 3, 1.0, 0.0),
                section(3, 2, 3, 1.0, 0.0),
                section(4, 1, 2, 1.0, 0.0),
            ],
        );
        snapshot_with(&net, &[0.2, 0.1, 0.2, 0.1, 0.05], &[0.5, -0.5, 0.5, 0.0, 1.0])
    }
}
