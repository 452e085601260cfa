//! Preference sweep: one priced scenario, every scheme planned at each
//! preference weight, all scored under the same reward model.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowParams;
use crate::network::{generate_network, NetworkError, NodeId, ScenarioConfig, SectionId};
use crate::planning::{
    plan_mdc, plan_mns, plan_oracle, plan_qlearning, plan_sdt, PathPlan, PlanError, QLearningConfig, RewardModel,
    Scheme,
};
use crate::pricing::{snapshot, PlanningSnapshot};

/// How the proposal column is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    Qlearning,
    Oracle,
}

impl FromStr for PlanMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qlearning" => Ok(PlanMode::Qlearning),
            "oracle" => Ok(PlanMode::Oracle),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanMode::Qlearning => "qlearning",
            PlanMode::Oracle => "oracle",
        })
    }
}

/// Schemes in every sweep row group, in output order.
pub const SWEEP_SCHEMES: [Scheme; 4] = [Scheme::Proposal, Scheme::Sdt, Scheme::Mdc, Scheme::Mns];

/// 0.0, 0.1, ..., 1.0.
pub fn default_alphas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub scheme: Scheme,
    pub utility: f64,
    pub total_time_h: f64,
    pub total_price: f64,
    pub path: Vec<SectionId>,
}

impl From<PathPlan> for SweepRow {
    fn from(p: PathPlan) -> Self {
        SweepRow {
            alpha: p.alpha,
            scheme: p.scheme,
            utility: p.utility,
            total_time_h: p.total_time_h,
            total_price: p.total_price,
            path: p.sections,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub origin: NodeId,
    pub destination: NodeId,
    pub mode: PlanMode,
    /// Sorted by (alpha, scheme).
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no preference weights to sweep")]
    NoAlphas,
    #[error("preference weight {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("planning failed at alpha = {alpha}: {source}")]
    Planner { alpha: f64, source: PlanError },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

fn plan_alpha(
    alpha: f64,
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
    ql: &QLearningConfig,
    mode: PlanMode,
    seed: u64,
) -> Result<Vec<SweepRow>, PlanError> {
    let rm = RewardModel::for_snapshot(alpha, snap)?;
    let proposal = match mode {
        PlanMode::Qlearning => plan_qlearning(&rm, snap, origin, destination, ql, seed)?,
        PlanMode::Oracle => PathPlan { scheme: Scheme::Proposal, ..plan_oracle(&rm, snap, origin, destination)? },
    };
    Ok(vec![
        proposal.into(),
        plan_sdt(&rm, snap, origin, destination)?.into(),
        plan_mdc(&rm, snap, origin, destination)?.into(),
        plan_mns(&rm, snap, origin, destination)?.into(),
    ])
}

/// Runs the sweep over one scenario built from `cfg`. Alpha points run in
/// parallel on the current rayon pool; the output order does not depend on it.
pub fn sweep_preference(
    cfg: &ScenarioConfig,
    alphas: &[f64],
    ql: &QLearningConfig,
    mode: PlanMode,
) -> Result<SweepTable, ExperimentError> {
    if alphas.is_empty() {
        return Err(ExperimentError::NoAlphas);
    }
    if let Some(&bad) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(ExperimentError::InvalidAlpha(bad));
    }
    let net = generate_network(cfg)?;
    let (origin, destination) = cfg.endpoints(&net)?;
    let snap = snapshot(&net, &FlowParams::default(), 0);

    let groups = alphas
        .par_iter()
        .map(|&alpha| {
            plan_alpha(alpha, &snap, origin, destination, ql, mode, cfg.seed)
                .map_err(|source| ExperimentError::Planner { alpha, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<SweepRow> = groups.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.scheme.cmp(&b.scheme)));
    Ok(SweepTable { origin, destination, mode, rows })
}

impl SweepTable {
    pub fn utility(&self, alpha: f64, scheme: Scheme) -> Option<f64> {
        self.rows.iter().find(|r| r.alpha == alpha && r.scheme == scheme).map(|r| r.utility)
    }

    pub fn alphas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.rows.iter().map(|r| r.alpha).collect();
        out.dedup();
        out
    }

    /// Writes `alpha,scheme,utility,total_time_h,total_price,path` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["alpha", "scheme", "utility", "total_time_h", "total_price", "path"])?;
        for r in &self.rows {
            let path: Vec<String> = r.path.iter().map(SectionId::to_string).collect();
            wtr.write_record([
                r.alpha.to_string(),
                r.scheme.label().to_string(),
                r.utility.to_string(),
                r.total_time_h.to_string(),
                r.total_price.to_string(),
                path.join("-"),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// One row per alpha, one utility column per scheme.
    pub fn write_wide_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["alpha".to_string()];
        header.extend(SWEEP_SCHEMES.iter().map(|s| s.label().to_string()));
        wtr.write_record(&header)?;
        for alpha in self.alphas() {
            let mut record = vec![alpha.to_string()];
            for scheme in SWEEP_SCHEMES {
                record.push(self.utility(alpha, scheme).map(|u| u.to_string()).unwrap_or_default());
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| ExperimentError::Write { path: path.display().to_string(), source })
}

/// Writes the long-form table to `path`.
pub fn emit(table: &SweepTable, path: &Path) -> Result<(), ExperimentError> {
    table.write_csv(create(path)?)?;
    Ok(())
}

/// Writes the alpha-by-scheme utility table to `path`.
pub fn emit_wide(table: &SweepTable, path: &Path) -> Result<(), ExperimentError> {
    table.write_wide_csv(create(path)?)?;
    Ok(())
}
