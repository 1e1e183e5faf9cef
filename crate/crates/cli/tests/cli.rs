use std::path::Path;
use std::process::Command;

fn ubac(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_ubac")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ubac-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn floor_bound_prints_csv() {
    let out = ubac(&["floor-bound", "--code", "1", "--tau-max", "1", "--k-max", "1"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let bound: f64 = row[5].parse().unwrap();
    assert!((bound - 0.8864).abs() < 2e-3, "{bound}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = scratch("sim");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "code = 2\nn = 256,512\ntau = 1\ntrials = 50\nseed = 3\n").unwrap();
    let d = dir.to_str().unwrap();
    ubac(&["simulate-fixed", "--config", cfg.to_str().unwrap(), "--trials", "20", "--out-dir", d]);
    let csv = std::fs::read_to_string(dir.join("bler_fixed_tau.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("code,n,tau_mode,tau_max,trials,block_errors,bler,bit_errors,ber,mean_iters,seed"));
    assert!(lines[1].starts_with("2,256,fixed,1,20,"));
    let manifest = std::fs::read_to_string(dir.join("bler_fixed_tau.manifest.txt")).unwrap();
    assert!(manifest.contains("trials = 20") && manifest.contains("graph_seed="));
    // Same config, same bytes.
    ubac(&["simulate-fixed", "--config", cfg.to_str().unwrap(), "--trials", "20", "--out-dir", d]);
    assert_eq!(std::fs::read_to_string(dir.join("bler_fixed_tau.csv")).unwrap(), csv);
}

#[test]
fn optimize_writes_a_loadable_spec() {
    let dir = scratch("opt");
    let d = dir.to_str().unwrap();
    ubac(&["optimize", "--code", "1", "--rounds", "3", "--out-dir", d]);
    let spec = ubac::codespec::CodeSpec::load(&dir.join("optimized.code")).unwrap();
    assert!(spec.ensemble.design_rate > 0.7);
    let audit = std::fs::read_to_string(dir.join("audit.csv")).unwrap();
    assert_eq!(audit.lines().next(), Some("round,rate,margin"));
    // The spec file feeds straight back in as a code.
    let code = dir.join("optimized.code");
    ubac(&["de-eval", "--code", code.to_str().unwrap(), "--out-dir", d]);
    assert!(Path::new(&dir.join("de.csv")).exists());
}

#[test]
fn expurgate_accepts_short_flags() {
    let dir = scratch("exp");
    let d = dir.to_str().unwrap();
    ubac(&["expurgate", "--code", "2", "--n", "2000", "--taumax", "1", "--K", "2", "--out-dir", d]);
    let g = ubac::tanner::TannerGraph::load(&dir.join("graph_n2000.txt")).unwrap();
    assert!(ubac::tanner::find_deg1_stopping_sets(&g, 1, 2).is_empty());
}
