//! Label-setting shortest-path planners: the exact utility oracle and the
//! SDT / MDC / MNS baselines.
//!
//! Labels are ordered by (cost, total time, section-id sequence), so ties
//! resolve to the faster path and then to the lexicographically smallest
//! one. Costs accumulate left to right from the origin, the same order
//! `path_utility` sums rewards in, so the oracle's cost is exactly the
//! negated utility of the path it returns.

use std::cmp::Ordering;

use crate::network::{NodeId, SectionId};
use crate::pricing::PlanningSnapshot;

use super::{endpoint_indexes, PathPlan, PlanError, RewardModel, Scheme};

#[derive(Clone)]
struct Label {
    cost: f64,
    time: f64,
    ids: Vec<SectionId>,
    idxs: Vec<usize>,
}

impl Label {
    fn cmp(&self, other: &Label) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.time.total_cmp(&other.time))
            .then_with(|| self.ids.cmp(&other.ids))
    }
}

/// Minimum-cost path for a non-negative per-section `weight`.
fn best_path(
    snap: &PlanningSnapshot,
    origin: usize,
    destination: usize,
    weight: impl Fn(usize) -> f64,
) -> Option<Vec<usize>> {
    let net = snap.network();
    let n = net.node_count();
    let mut labels: Vec<Option<Label>> = vec![None; n];
    let mut settled = vec![false; n];
    labels[origin] = Some(Label { cost: 0.0, time: 0.0, ids: Vec::new(), idxs: Vec::new() });

    loop {
        let next = (0..n)
            .filter(|&v| !settled[v])
            .filter_map(|v| labels[v].as_ref().map(|l| (v, l)))
            .min_by(|a, b| a.1.cmp(b.1))
            .map(|(v, _)| v)?;
        settled[next] = true;
        if next == destination {
            return labels[next].take().map(|l| l.idxs);
        }
        let current = labels[next].clone().expect("settled node has a label");
        for &s in net.outgoing(next) {
            let head = net.head_index(s);
            if settled[head] {
                continue;
            }
            let mut candidate = Label {
                cost: current.cost + weight(s),
                time: current.time + snap.times()[s],
                ids: current.ids.clone(),
                idxs: current.idxs.clone(),
            };
            candidate.ids.push(net.sections()[s].id);
            candidate.idxs.push(s);
            if labels[head].as_ref().is_none_or(|l| candidate.cmp(l) == Ordering::Less) {
                labels[head] = Some(candidate);
            }
        }
    }
}

fn plan_with(
    scheme: Scheme,
    rm: &RewardModel,
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
    weight: impl Fn(usize) -> f64,
) -> Result<PathPlan, PlanError> {
    let (o, d) = endpoint_indexes(snap, origin, destination)?;
    let idxs = best_path(snap, o, d, weight).ok_or(PlanError::Unreachable { origin, destination })?;
    Ok(PathPlan::from_indexes(scheme, rm, snap, &idxs))
}

/// Exact maximizer of the path utility: shortest path on `-edge_reward`.
pub fn plan_oracle(
    rm: &RewardModel,
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
) -> Result<PathPlan, PlanError> {
    plan_with(Scheme::Oracle, rm, snap, origin, destination, |s| -rm.section_reward(snap, s))
}

/// Shortest driving time. `rm` only scores the result.
pub fn plan_sdt(
    rm: &RewardModel,
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
) -> Result<PathPlan, PlanError> {
    plan_with(Scheme::Sdt, rm, snap, origin, destination, |s| snap.times()[s])
}

/// Maximum driving compensation, posed as minimizing `(1 - price)/2 + lambda`
/// per section so the problem stays a shortest-path problem.
pub fn plan_mdc(
    rm: &RewardModel,
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
) -> Result<PathPlan, PlanError> {
    plan_with(Scheme::Mdc, rm, snap, origin, destination, |s| {
        (1.0 - snap.prices()[s]) / 2.0 + rm.lambda_step
    })
}

/// Fewest sections; ties go to the faster path.
pub fn plan_mns(
    rm: &RewardModel,
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
) -> Result<PathPlan, PlanError> {
    plan_with(Scheme::Mns, rm, snap, origin, destination, |_| 1.0)
}
