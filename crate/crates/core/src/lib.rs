//! Deterministic road-network simulator for price-guided, preference-weighted
//! route planning.
//!
//! The pipeline mirrors a cloud/edge/vehicle split: [`pricing`] turns the
//! Greenshields travel times from [`flow`] into compensation prices and
//! freezes them into a [`pricing::PlanningSnapshot`]; vehicles run a
//! [`planning`] scheme against that snapshot; [`fleet`] closes the loop by
//! feeding the resulting densities back into pricing; [`experiment`] sweeps
//! the preference weight and emits plot-ready tables.

pub mod experiment;
pub mod fleet;
pub mod flow;
pub mod network;
pub mod planning;
pub mod pricing;
pub mod rng;
pub mod selftest;

pub use flow::FlowParams;
pub use network::{generate_network, validate, Network, NodeId, RoadSection, ScenarioConfig, SectionId};
pub use planning::{PathPlan, PlanError, QLearningConfig, RewardModel, Scheme};
pub use pricing::{broadcast, compute_prices, PlanningSnapshot, PriceTable};
