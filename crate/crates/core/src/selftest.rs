//! Invariant checks on small generated instances, run by `fits-sim selftest`.

use crate::fleet::{run_fleet, FleetSpec};
use crate::flow::{speed, travel_time, FlowParams};
use crate::network::{generate_network, validate, ScenarioConfig};
use crate::planning::{
    path_utility, plan_mdc, plan_mns, plan_oracle, plan_qlearning, plan_sdt, simple_paths, QLearningConfig,
    RewardModel,
};
use crate::pricing::snapshot;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn small_config(seed: u64) -> ScenarioConfig {
    let n_nodes = 3 + (seed % 5) as usize;
    ScenarioConfig {
        n_nodes,
        n_sections: (2 * n_nodes).min(n_nodes * (n_nodes - 1)),
        seed,
        ..Default::default()
    }
}

fn run(name: &'static str, body: impl FnOnce() -> Result<String, String>) -> Check {
    match body() {
        Ok(detail) => Check { name, passed: true, detail },
        Err(detail) => Check { name, passed: false, detail },
    }
}

pub fn run_selftest() -> Vec<Check> {
    let fp = FlowParams::default();
    let seeds = 0..20u64;
    vec![
        run("generated networks are valid", || {
            for seed in seeds.clone() {
                let net = generate_network(&small_config(seed)).map_err(|e| e.to_string())?;
                if let Some(v) = validate(&net).first() {
                    return Err(format!("seed {seed}: {v}"));
                }
            }
            Ok("20 seeds".into())
        }),
        run("greenshields speed and travel-time bounds", || {
            let net = generate_network(&ScenarioConfig::default()).map_err(|e| e.to_string())?;
            for s in net.sections() {
                let t = travel_time(s, &fp);
                let v = speed(s);
                if !(v >= 0.0 && v <= s.v_max_kmh && t >= s.length_km / s.v_max_kmh && t <= s.length_km / fp.v_floor_kmh) {
                    return Err(format!("section {}: v = {v}, t = {t}", s.id));
                }
            }
            Ok(format!("{} sections", net.section_count()))
        }),
        run("prices span [-1, 1]", || {
            for seed in seeds.clone() {
                let cfg = ScenarioConfig { seed, ..Default::default() };
                let net = generate_network(&cfg).map_err(|e| e.to_string())?;
                let snap = snapshot(&net, &fp, 0);
                let p = snap.prices();
                let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = p.iter().copied().fold(f64::INFINITY, f64::min);
                if max != 1.0 || min != -1.0 {
                    return Err(format!("seed {seed}: prices span [{min}, {max}]"));
                }
            }
            Ok("20 seeds".into())
        }),
        run("oracle matches simple-path enumeration and dominates baselines", || {
            for seed in seeds.clone() {
                let cfg = small_config(seed);
                let net = generate_network(&cfg).map_err(|e| e.to_string())?;
                let (o, d) = cfg.endpoints(&net).map_err(|e| e.to_string())?;
                let snap = snapshot(&net, &fp, 0);
                for alpha in [0.0, 0.5, 1.0] {
                    let rm = RewardModel::for_snapshot(alpha, &snap).map_err(|e| e.to_string())?;
                    let oracle = plan_oracle(&rm, &snap, o, d).map_err(|e| e.to_string())?;
                    let best = simple_paths(&snap, o, d)
                        .map_err(|e| e.to_string())?
                        .iter()
                        .map(|p| path_utility(&rm, &snap, p))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| e.to_string())?
                        .into_iter()
                        .fold(f64::NEG_INFINITY, f64::max);
                    if (oracle.utility - best).abs() > 1e-12 {
                        return Err(format!("seed {seed}, alpha {alpha}: oracle {} vs enumeration {best}", oracle.utility));
                    }
                    for plan in [plan_sdt(&rm, &snap, o, d), plan_mdc(&rm, &snap, o, d), plan_mns(&rm, &snap, o, d)] {
                        let plan = plan.map_err(|e| e.to_string())?;
                        if plan.utility > oracle.utility {
                            return Err(format!("seed {seed}, alpha {alpha}: {} beats the oracle", plan.scheme));
                        }
                    }
                }
            }
            Ok("20 seeds x 3 weights".into())
        }),
        run("q-learning reaches the oracle optimum", || {
            let ql = QLearningConfig::default();
            let mut hits = 0;
            for seed in 0..5u64 {
                let cfg = small_config(seed);
                let net = generate_network(&cfg).map_err(|e| e.to_string())?;
                let (o, d) = cfg.endpoints(&net).map_err(|e| e.to_string())?;
                let snap = snapshot(&net, &fp, 0);
                let rm = RewardModel::for_snapshot(0.5, &snap).map_err(|e| e.to_string())?;
                let oracle = plan_oracle(&rm, &snap, o, d).map_err(|e| e.to_string())?;
                if let Ok(plan) = plan_qlearning(&rm, &snap, o, d, &ql, seed) {
                    if (plan.utility - oracle.utility).abs() <= 1e-9 {
                        hits += 1;
                    }
                }
            }
            if hits >= 4 {
                Ok(format!("{hits}/5 matched"))
            } else {
                Err(format!("only {hits}/5 matched"))
            }
        }),
        run("fleet loop is reproducible and bounded", || {
            let cfg = small_config(3);
            let net = generate_network(&cfg).map_err(|e| e.to_string())?;
            let spec = FleetSpec::random(&net, 20, 3);
            let a = run_fleet(&net, &spec, &fp).map_err(|e| e.to_string())?;
            let b = run_fleet(&net, &spec, &fp).map_err(|e| e.to_string())?;
            if a != b {
                return Err("two runs differ".into());
            }
            if a.len() > spec.max_rounds {
                return Err(format!("{} rounds", a.len()));
            }
            for r in &a {
                if r.paths.len() != spec.avs.len() || r.paths.iter().any(Vec::is_empty) {
                    return Err(format!("round {}: vehicle without a path", r.round));
                }
                if r.densities.iter().zip(net.sections()).any(|(&k, s)| !(0.0..=s.k_max_vpk).contains(&k)) {
                    return Err(format!("round {}: density out of range", r.round));
                }
            }
            Ok(format!("{} rounds", a.len()))
        }),
    ]
}
