//! Tabular Q-learning over intersections (states) and outgoing sections
//! (actions). Episodes start at the origin and end on reaching the
//! destination, which is absorbing with value 0. With undiscounted,
//! strictly negative rewards this is a stochastic-shortest-path problem
//! whose greedy policy converges to the utility-maximizing route.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::network::NodeId;
use crate::pricing::PlanningSnapshot;
use crate::rng::{substream, QLEARNING_STREAM};

use super::{endpoint_indexes, PathPlan, PlanError, RewardModel, Scheme};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QLearningConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub episodes: usize,
    /// Episode step cap as a multiple of the node count.
    pub max_steps_per_node: usize,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        QLearningConfig {
            learning_rate: 0.1,
            discount: 1.0,
            epsilon_start: 0.3,
            epsilon_end: 0.01,
            episodes: 10_000,
            max_steps_per_node: 4,
        }
    }
}

impl QLearningConfig {
    /// Exploration rate for `episode`, decaying geometrically from start to end.
    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.epsilon_start;
        }
        let frac = episode as f64 / (self.episodes - 1) as f64;
        self.epsilon_start * (self.epsilon_end / self.epsilon_start).powf(frac)
    }
}

/// Action values indexed by section; a section's state is its tail node.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    /// Per node position, the sections that keep the destination reachable.
    actions: Vec<Vec<usize>>,
    origin: usize,
    destination: usize,
}

impl QTable {
    fn new(snap: &PlanningSnapshot, origin: usize, destination: usize) -> Self {
        let net = snap.network();
        let can_finish = net.reaching(destination);
        let actions = (0..net.node_count())
            .map(|u| {
                if u == destination {
                    return Vec::new();
                }
                net.outgoing(u).iter().copied().filter(|&s| can_finish[net.head_index(s)]).collect()
            })
            .collect();
        QTable { values: vec![0.0; net.section_count()], actions, origin, destination }
    }

    /// Trains a fresh table by episodic epsilon-greedy Q-learning.
    pub fn train<R: Rng>(
        rm: &RewardModel,
        snap: &PlanningSnapshot,
        origin: NodeId,
        destination: NodeId,
        cfg: &QLearningConfig,
        rng: &mut R,
    ) -> Result<Self, PlanError> {
        let (o, d) = endpoint_indexes(snap, origin, destination)?;
        if !snap.network().reaching(d)[o] {
            return Err(PlanError::Unreachable { origin, destination });
        }
        let mut table = QTable::new(snap, o, d);
        let net = snap.network();
        let rewards: Vec<f64> = (0..net.section_count()).map(|s| rm.section_reward(snap, s)).collect();
        let max_steps = cfg.max_steps_per_node * net.node_count();

        for episode in 0..cfg.episodes {
            let epsilon = cfg.epsilon(episode);
            let mut state = o;
            for _ in 0..max_steps {
                let actions = &table.actions[state];
                if actions.is_empty() {
                    break;
                }
                let action = if rng.gen::<f64>() < epsilon {
                    actions[rng.gen_range(0..actions.len())]
                } else {
                    table.greedy_action(state).expect("non-empty action set")
                };
                let next = net.head_index(action);
                let future = if next == d { 0.0 } else { table.state_value(next) };
                let target = rewards[action] + cfg.discount * future;
                table.values[action] += cfg.learning_rate * (target - table.values[action]);
                state = next;
                if state == d {
                    break;
                }
            }
        }
        Ok(table)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Highest-valued action at `state`; ties go to the smallest section id.
    fn greedy_action(&self, state: usize) -> Option<usize> {
        self.actions[state]
            .iter()
            .copied()
            .reduce(|best, s| if self.values[s] > self.values[best] { s } else { best })
    }

    fn state_value(&self, state: usize) -> f64 {
        self.greedy_action(state).map_or(0.0, |s| self.values[s])
    }

    /// Follows the greedy policy from the origin, refusing to revisit a node.
    pub fn greedy_path(&self, snap: &PlanningSnapshot) -> Result<Vec<usize>, PlanError> {
        let net = snap.network();
        let limit = 2 * net.node_count();
        let mut visited = vec![false; net.node_count()];
        let mut state = self.origin;
        let mut path = Vec::new();
        visited[state] = true;
        while state != self.destination {
            let blocked = PlanError::NotConverged { node: net.nodes()[state] };
            if path.len() >= limit {
                return Err(blocked);
            }
            let action = self.greedy_action(state).ok_or(blocked.clone())?;
            let next = net.head_index(action);
            if std::mem::replace(&mut visited[next], true) {
                return Err(blocked);
            }
            path.push(action);
            state = next;
        }
        Ok(path)
    }
}

/// Preference-customized route from a freshly trained Q-table. The
/// learner's randomness comes from the `qlearning` substream of `seed`.
pub fn plan_qlearning(
    rm: &RewardModel,
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
    cfg: &QLearningConfig,
    seed: u64,
) -> Result<PathPlan, PlanError> {
    let mut rng = substream(seed, QLEARNING_STREAM);
    let table = QTable::train(rm, snap, origin, destination, cfg, &mut rng)?;
    let idxs = table.greedy_path(snap)?;
    Ok(PathPlan::from_indexes(Scheme::Proposal, rm, snap, &idxs))
}
