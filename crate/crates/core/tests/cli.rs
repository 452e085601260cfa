use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fits(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fits-sim"))
        .args(args)
        .env_remove("FITS_SIM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_one_hundred_sections() {
    let out = fits(&["generate", "--seed", "42", "--sections", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["sections"].as_array().unwrap().len(), 100);
    assert_eq!(json["nodes"].as_array().unwrap().len(), 25);
    let first = &json["sections"][0];
    for key in ["id", "from", "to", "length_km", "v_max_kmh", "k_max_vpk", "density_vpk"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn env_seed_is_the_fallback() {
    let with_env = |seed: &str, args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_fits-sim")).args(args).env("FITS_SIM_SEED", seed).output().unwrap().stdout
    };
    let explicit = fits(&["generate", "--seed", "7", "--nodes", "5", "--sections", "9"]).stdout;
    assert_eq!(with_env("7", &["generate", "--nodes", "5", "--sections", "9"]), explicit);
    assert_eq!(with_env("3", &["generate", "--seed", "7", "--nodes", "5", "--sections", "9"]), explicit);
    let bad = Command::new(env!("CARGO_BIN_EXE_fits-sim"))
        .args(["generate"])
        .env("FITS_SIM_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"seed": 7, "scenario": {"n_nodes": 5, "n_sections": 9}}"#).unwrap();
    let from_file = fits(&["generate", "--config", path_str(&cfg)]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, fits(&["generate", "--seed", "7", "--nodes", "5", "--sections", "9"]).stdout);
    let overridden = fits(&["generate", "--config", path_str(&cfg), "--sections", "12"]);
    let json: serde_json::Value = serde_json::from_slice(&overridden.stdout).unwrap();
    assert_eq!(json["sections"].as_array().unwrap().len(), 12);

    fs::write(&cfg, r#"{"sed": 7}"#).unwrap();
    assert_eq!(fits(&["generate", "--config", path_str(&cfg)]).status.code(), Some(1));
}

#[test]
fn invalid_scenarios_exit_with_one() {
    assert_eq!(fits(&["generate", "--nodes", "10", "--sections", "5"]).status.code(), Some(1));
    assert_eq!(fits(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fits(&["plan", "--bogus-flag"]).status.code(), Some(1));
    assert_eq!(fits(&["--help"]).status.code(), Some(0));
}

fn write_network(dir: &Path, json: &str) -> String {
    let p = dir.join("net.json");
    fs::write(&p, json).unwrap();
    path_str(&p).to_string()
}

const DIRECT_EDGE_NET: &str = r#"{"nodes":[0,1,2],"sections":[
 {"id":0,"from":0,"to":2,"length_km":9.0,"v_max_kmh":110,"k_max_vpk":80,"density_vpk":60},
 {"id":1,"from":0,"to":1,"length_km":1.0,"v_max_kmh":110,"k_max_vpk":80,"density_vpk":0},
 {"id":2,"from":1,"to":2,"length_km":1.0,"v_max_kmh":110,"k_max_vpk":80,"density_vpk":0},
 {"id":3,"from":2,"to":0,"length_km":1.0,"v_max_kmh":110,"k_max_vpk":80,"density_vpk":0}]}"#;

#[test]
fn plan_schemes_on_a_direct_edge_graph() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_network(dir.path(), DIRECT_EDGE_NET);
    let run = |scheme: &str| {
        let out = fits(&["plan", "--network", &net, "--scheme", scheme, "--origin", "0", "--destination", "2"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("scheme,alpha,path,total_time_h,total_price,utility"));
        lines.next().unwrap().split(',').nth(2).unwrap().to_string()
    };
    assert_eq!(run("mns"), "0");
    assert_eq!(run("sdt"), "1-2");
    assert_eq!(run("oracle"), "1-2");
    assert_eq!(run("proposal"), "1-2");
}

#[test]
fn planner_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_network(dir.path(), DIRECT_EDGE_NET);
    // untrained: greedy takes section 0 to node 2, whose only exit returns to 0
    let out = fits(&["plan", "--network", &net, "--scheme", "proposal", "--origin", "0", "--destination", "1", "--episodes", "0"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blocked at node"));

    let one_way = r#"{"nodes":[0,1],"sections":[
     {"id":0,"from":0,"to":1,"length_km":2.0,"v_max_kmh":110,"k_max_vpk":80,"density_vpk":0}]}"#;
    let dir2 = tempfile::tempdir().unwrap();
    let net2 = write_network(dir2.path(), one_way);
    let out = fits(&["plan", "--network", &net2, "--origin", "1", "--destination", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not strongly connected"));
}

#[test]
fn invalid_network_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = DIRECT_EDGE_NET.replace("\"density_vpk\":60", "\"density_vpk\":81");
    let net = write_network(dir.path(), &bad);
    let out = fits(&["price", "--network", &net]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("section 0: density 81"));
}

#[test]
fn price_csv() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_network(dir.path(), DIRECT_EDGE_NET);
    let out = fits(&["price", "--network", &net]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "section_id,travel_time_h,price");
    assert_eq!(lines.len(), 5);
    // 9 km at 27.5 km/h is the slowest section
    assert!(lines[1].ends_with(",-1"), "{}", lines[1]);
}

#[test]
fn sweep_is_byte_identical_and_has_a_wide_companion() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, w) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("w.csv"));
    for (out, jobs) in [(&a, "1"), (&b, "4")] {
        let res = fits(&["sweep", "--mode", "oracle", "--seed", "42", "--jobs", jobs, "--out", path_str(out), "--wide-out", path_str(&w)]);
        assert_eq!(res.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let wide = fs::read_to_string(&w).unwrap();
    assert_eq!(wide.lines().count(), 12);

    let custom = fits(&["sweep", "--mode", "qlearning", "--alphas", "0.2,0.8", "--nodes", "8", "--sections", "20"]);
    assert_eq!(custom.status.code(), Some(0));
    assert_eq!(stdout(&custom).lines().count(), 1 + 8);
    assert_eq!(fits(&["sweep", "--alphas", "1.5"]).status.code(), Some(1));
}

#[test]
fn fleet_csv() {
    let out = fits(&["fleet", "--avs", "40", "--nodes", "10", "--sections", "30", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("round,mean_utility,max_density_vpk,n_changed_paths,n_clamped_sections"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty() && rows.len() <= 20);
    assert!(rows[0].starts_with("1,") && rows[0].contains(",40,"));
    assert_eq!(fits(&["fleet", "--avs", "40", "--nodes", "10", "--sections", "30", "--seed", "3"]).stdout, out.stdout);
    assert_eq!(fits(&["fleet", "--avs", "5", "--damping", "0"]).status.code(), Some(1));
}

#[test]
fn fleet_from_config_with_explicit_vehicles() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_network(dir.path(), DIRECT_EDGE_NET);
    let cfg = dir.path().join("fleet.json");
    fs::write(
        &cfg,
        r#"{"fleet": {"avs": [{"origin": 0, "destination": 2, "alpha": 0.5}], "max_rounds": 5}}"#,
    )
    .unwrap();
    let out = fits(&["fleet", "--network", &net, "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn selftest_passes() {
    let out = fits(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}
