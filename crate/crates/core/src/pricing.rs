//! Cloud-side pricing: per-section travel times mapped onto compensation
//! prices in [-1, 1], and the frozen snapshot that planners consume.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::flow::{travel_time, FlowParams};
use crate::network::{Network, SectionId};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriceEntry {
    pub section_id: SectionId,
    pub travel_time_h: f64,
    pub price: f64,
}

/// Prices for every section of one network, in the network's section order.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceTable {
    pub epoch: u64,
    pub entries: Vec<PriceEntry>,
}

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("price table has {table} entries but the network has {network} sections")]
    SizeMismatch { table: usize, network: usize },
    #[error("price table entry {position} is for section {found}, network has section {expected} there")]
    SectionMismatch { position: usize, expected: SectionId, found: SectionId },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Affine map of travel times onto prices: fastest section pays +1, slowest
/// is charged -1. Equal times map to 0.
pub fn prices_from_times(times: &[f64]) -> Vec<f64> {
    let t_min = times.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = t_max - t_min;
    times
        .iter()
        .map(|&t| {
            if span > 0.0 {
                (1.0 - 2.0 * ((t - t_min) / span)).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn compute_prices(net: &Network, fp: &FlowParams) -> PriceTable {
    compute_prices_at(net, fp, 0)
}

pub fn compute_prices_at(net: &Network, fp: &FlowParams, epoch: u64) -> PriceTable {
    let times: Vec<f64> = net.sections().iter().map(|s| travel_time(s, fp)).collect();
    let prices = prices_from_times(&times);
    let entries = net
        .sections()
        .iter()
        .zip(times)
        .zip(prices)
        .map(|((s, travel_time_h), price)| PriceEntry { section_id: s.id, travel_time_h, price })
        .collect();
    PriceTable { epoch, entries }
}

impl PriceTable {
    /// Writes `section_id,travel_time_h,price` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PricingError> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["section_id", "travel_time_h", "price"])?;
        for e in &self.entries {
            wtr.write_record([e.section_id.to_string(), e.travel_time_h.to_string(), e.price.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Immutable view of one pricing round: the network as it was when priced,
/// plus the per-section times and prices. Cloning is cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningSnapshot {
    network: Arc<Network>,
    times: Arc<[f64]>,
    prices: Arc<[f64]>,
    epoch: u64,
}

impl PlanningSnapshot {
    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Travel times by section index.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Prices by section index.
    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Largest section travel time; the time normalizer for rewards.
    pub fn max_time(&self) -> f64 {
        self.times.iter().copied().fold(0.0, f64::max)
    }
}

/// Freezes a price table together with the network it was computed from.
pub fn broadcast(pt: &PriceTable, net: &Network) -> Result<PlanningSnapshot, PricingError> {
    if pt.entries.len() != net.section_count() {
        return Err(PricingError::SizeMismatch { table: pt.entries.len(), network: net.section_count() });
    }
    for (position, (entry, section)) in pt.entries.iter().zip(net.sections()).enumerate() {
        if entry.section_id != section.id {
            return Err(PricingError::SectionMismatch { position, expected: section.id, found: entry.section_id });
        }
    }
    Ok(PlanningSnapshot {
        network: Arc::new(net.clone()),
        times: pt.entries.iter().map(|e| e.travel_time_h).collect(),
        prices: pt.entries.iter().map(|e| e.price).collect(),
        epoch: pt.epoch,
    })
}

/// Prices `net` and broadcasts the result in one step.
pub fn snapshot(net: &Network, fp: &FlowParams, epoch: u64) -> PlanningSnapshot {
    broadcast(&compute_prices_at(net, fp, epoch), net).expect("table computed from the same network")
}
