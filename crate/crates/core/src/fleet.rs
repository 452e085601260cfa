//! Pricing-feedback fleet loop.
//!
//! Each round loads the network with the vehicles' current paths, reprices
//! it, and lets a damped random subset of vehicles replan against the new
//! snapshot with the exact utility oracle. The loop stops when a round
//! changes no path or the round budget runs out. No equilibrium is implied.

use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowParams;
use crate::network::{Network, NodeId, SectionId};
use crate::planning::{path_utility, plan_oracle, PlanError, RewardModel};
use crate::pricing::{snapshot, PlanningSnapshot};
use crate::rng::{substream, FLEET_DEMAND_STREAM, FLEET_STREAM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvSpec {
    pub origin: NodeId,
    pub destination: NodeId,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FleetSpec {
    pub avs: Vec<AvSpec>,
    /// Density each vehicle adds to every section on its path, veh/km.
    /// `None` spreads one vehicle over the section length (`1 / length_km`).
    pub av_density_vpk: Option<f64>,
    pub max_rounds: usize,
    /// Fraction of vehicles replanning per round after the first.
    pub damping: f64,
    pub seed: u64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        FleetSpec { avs: Vec::new(), av_density_vpk: None, max_rounds: 20, damping: 0.3, seed: 42 }
    }
}

impl FleetSpec {
    /// `n_avs` vehicles with distinct random endpoints and uniform preference
    /// weights, drawn from the fleet-demand substream of `seed`.
    pub fn random(net: &Network, n_avs: usize, seed: u64) -> Self {
        let mut rng = substream(seed, FLEET_DEMAND_STREAM);
        let nodes = net.nodes();
        let avs = (0..n_avs)
            .map(|_| {
                let pair = sample(&mut rng, nodes.len(), 2);
                AvSpec {
                    origin: nodes[pair.index(0)],
                    destination: nodes[pair.index(1)],
                    alpha: rng.gen_range(0.0..=1.0),
                }
            })
            .collect();
        FleetSpec { avs, seed, ..Default::default() }
    }
}

#[derive(Debug, Error)]
pub enum FleetError {
    #[error("fleet has no vehicles")]
    Empty,
    #[error("damping {0} outside (0, 1]")]
    InvalidDamping(f64),
    #[error("per-vehicle density {0} must be non-negative")]
    InvalidDensity(f64),
    #[error("vehicle {av}: {source}")]
    Vehicle { av: usize, source: PlanError },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundReport {
    /// 1-based.
    pub round: usize,
    /// Mean utility of every vehicle's current path under this round's prices.
    pub mean_utility: f64,
    pub max_density_vpk: f64,
    pub n_changed_paths: usize,
    /// Sections whose loaded density exceeded jam density and was cut to it.
    pub clamped_sections: Vec<SectionId>,
    /// Loaded densities this round was priced on, by section index.
    pub densities: Vec<f64>,
    /// Every vehicle's path after this round's replanning.
    pub paths: Vec<Vec<SectionId>>,
}

impl RoundReport {
    pub fn n_clamped_sections(&self) -> usize {
        self.clamped_sections.len()
    }
}

/// Background densities plus vehicle load, clamped to jam density.
fn load_network(
    background: &Network,
    paths: &[Vec<SectionId>],
    av_density_vpk: Option<f64>,
) -> (Network, Vec<SectionId>) {
    let mut counts = vec![0usize; background.section_count()];
    for path in paths {
        for id in path {
            counts[background.section_index(*id).expect("planned on this network")] += 1;
        }
    }
    let mut loaded = background.clone();
    let mut clamped = Vec::new();
    for (idx, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let s = loaded.section_mut(idx);
        let added = match av_density_vpk {
            Some(per_av) => count as f64 * per_av,
            None => count as f64 / s.length_km,
        };
        let density = s.density_vpk + added;
        if density > s.k_max_vpk {
            s.density_vpk = s.k_max_vpk;
            clamped.push(s.id);
        } else {
            s.density_vpk = density;
        }
    }
    (loaded, clamped)
}

fn replan(snap: &PlanningSnapshot, av: &AvSpec, index: usize) -> Result<Vec<SectionId>, FleetError> {
    let rm = RewardModel::for_snapshot(av.alpha, snap).map_err(|source| FleetError::Vehicle { av: index, source })?;
    plan_oracle(&rm, snap, av.origin, av.destination)
        .map(|plan| plan.sections)
        .map_err(|source| FleetError::Vehicle { av: index, source })
}

fn check(net: &Network, spec: &FleetSpec) -> Result<(), FleetError> {
    if spec.avs.is_empty() {
        return Err(FleetError::Empty);
    }
    if !(spec.damping > 0.0 && spec.damping <= 1.0) {
        return Err(FleetError::InvalidDamping(spec.damping));
    }
    if let Some(d) = spec.av_density_vpk {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(FleetError::InvalidDensity(d));
        }
    }
    for (i, av) in spec.avs.iter().enumerate() {
        let vehicle = |source| FleetError::Vehicle { av: i, source };
        if !(0.0..=1.0).contains(&av.alpha) {
            return Err(vehicle(PlanError::InvalidAlpha(av.alpha)));
        }
        let o = net.node_index(av.origin).ok_or(vehicle(PlanError::UnknownNode(av.origin)))?;
        let d = net.node_index(av.destination).ok_or(vehicle(PlanError::UnknownNode(av.destination)))?;
        if o == d {
            return Err(vehicle(PlanError::SameEndpoints(av.origin)));
        }
        if !net.reaching(d)[o] {
            return Err(vehicle(PlanError::Unreachable { origin: av.origin, destination: av.destination }));
        }
    }
    Ok(())
}

/// Runs the feedback loop. Round 1 plans every vehicle on the background
/// network; later rounds replan `ceil(damping * n)` randomly chosen ones.
pub fn run_fleet(net: &Network, spec: &FleetSpec, fp: &FlowParams) -> Result<Vec<RoundReport>, FleetError> {
    check(net, spec)?;
    let n = spec.avs.len();
    let per_round = ((spec.damping * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = substream(spec.seed, FLEET_STREAM);
    let mut paths: Vec<Vec<SectionId>> = vec![Vec::new(); n];
    let mut reports = Vec::new();

    for round in 1..=spec.max_rounds {
        let (loaded, clamped) = load_network(net, &paths, spec.av_density_vpk);
        let snap = snapshot(&loaded, fp, (round - 1) as u64);

        let mut movers: Vec<usize> = if round == 1 {
            (0..n).collect()
        } else {
            sample(&mut rng, n, per_round).into_vec()
        };
        movers.sort_unstable();
        let fresh: Vec<Vec<SectionId>> = movers
            .par_iter()
            .map(|&i| replan(&snap, &spec.avs[i], i))
            .collect::<Result<_, _>>()?;

        let mut changed = 0;
        for (&i, path) in movers.iter().zip(fresh) {
            if paths[i] != path {
                changed += 1;
                paths[i] = path;
            }
        }

        let mut total = 0.0;
        for (i, (av, path)) in spec.avs.iter().zip(&paths).enumerate() {
            let vehicle = |source| FleetError::Vehicle { av: i, source };
            let rm = RewardModel::for_snapshot(av.alpha, &snap).map_err(vehicle)?;
            total += path_utility(&rm, &snap, path).map_err(vehicle)?;
        }
        let densities: Vec<f64> = loaded.sections().iter().map(|s| s.density_vpk).collect();
        reports.push(RoundReport {
            round,
            mean_utility: total / n as f64,
            max_density_vpk: densities.iter().copied().fold(0.0, f64::max),
            n_changed_paths: changed,
            clamped_sections: clamped,
            densities,
            paths: paths.clone(),
        });
        if round > 1 && changed == 0 {
            break;
        }
    }
    Ok(reports)
}

/// Writes `round,mean_utility,max_density_vpk,n_changed_paths,n_clamped_sections` rows.
pub fn write_rounds_csv<W: Write>(reports: &[RoundReport], out: W) -> Result<(), FleetError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["round", "mean_utility", "max_density_vpk", "n_changed_paths", "n_clamped_sections"])?;
    for r in reports {
        wtr.write_record([
            r.round.to_string(),
            r.mean_utility.to_string(),
            r.max_density_vpk.to_string(),
            r.n_changed_paths.to_string(),
            r.n_clamped_sections().to_string(),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}
