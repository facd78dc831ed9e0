use std::path::Path;
use std::process::{Command, Output};

use orsched::SimConfig;

fn orsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orsched"))
        .args(args)
        .env("ORSCHED_LOG", "error")
        .output()
        .expect("spawn orsched")
}

fn tiny_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.network.num_cells = 2;
    cfg.network.embb_users_per_cell = 2;
    cfg.network.urllc_users_per_cell = 2;
    cfg.radio.num_rbs = 4;
    cfg.traffic.urllc_packet_bits = 32;
    cfg.traffic.eval_window_ttis = 10;
    cfg.learning.hidden_width = 8;
    cfg.learning.ensemble_size = 3;
    cfg.learning.batch_size = 8;
    cfg.learning.warmup_steps = 10;
    cfg.learning.train_phi_min = 2.0;
    cfg.learning.train_phi_max = 10.0;
    cfg.run.episode_len_ttis = 10;
    cfg.run.train_steps = 60;
    cfg.run.checkpoint_every = 0;
    cfg
}

fn train(dir: &Path, name: &str) -> Output {
    let cfg_path = dir.join("tiny.toml");
    tiny_config().save(&cfg_path).unwrap();
    let out = dir.join(name);
    orsched(&["train", cfg_path.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()])
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn missing_config_is_a_usage_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = orsched(&["train", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(orsched(&["selftest", "--bogus"]).status.code(), Some(2));
}

#[test]
fn training_writes_three_files_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = train(dir.path(), "a");
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    for f in ["checkpoint.bin", "metrics.csv", "config.toml"] {
        assert!(dir.path().join("a").join(f).is_file(), "{f} missing");
    }
    assert_eq!(train(dir.path(), "b").status.code(), Some(0));
    for f in ["metrics.csv", "checkpoint.bin"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    let metrics = std::fs::read_to_string(dir.path().join("a/metrics.csv")).unwrap();
    assert!(metrics.starts_with("# config_hash="));
    assert_eq!(data_rows(&metrics).len(), 60 * 2);
}

#[test]
fn sweep_and_cdf_produce_plot_ready_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(train(dir.path(), "run").status.code(), Some(0));
    let ckpt = dir.path().join("run/checkpoint.bin");
    let sweep = dir.path().join("sweep.csv");
    let out = orsched(&[
        "sweep-load",
        ckpt.to_str().unwrap(),
        "--phis",
        "0,40,80",
        "--episodes",
        "2",
        "--method",
        "thompson,eps:0.1,random",
        "--out",
        sweep.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&sweep).unwrap();
    assert!(text.starts_with("# config_hash="));
    assert!(text.contains("phi,mean_embb_rate_bps,mean_outage,method"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 9);
    for r in rows.iter().filter(|r| r.starts_with("0,")) {
        assert_eq!(r.split(',').nth(2), Some("0"), "{r}");
    }

    let cdf = dir.path().join("cdf.csv");
    let out = orsched(&[
        "cdf-error",
        ckpt.to_str().unwrap(),
        "--phi",
        "80",
        "--episodes",
        "4",
        "--out",
        cdf.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&cdf).unwrap();
    let fractions: Vec<f64> = data_rows(&text).iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(!fractions.is_empty());
    assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*fractions.last().unwrap(), 1.0);
}

#[test]
fn corrupted_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(train(dir.path(), "run").status.code(), Some(0));
    let ckpt = dir.path().join("run/checkpoint.bin");
    let mut bytes = std::fs::read(&ckpt).unwrap();
    let i = bytes.len() / 2;
    bytes[i] ^= 1;
    std::fs::write(&ckpt, bytes).unwrap();
    let out = orsched(&["cdf-error", ckpt.to_str().unwrap(), "--phi", "10", "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("checksum"));
}

#[test]
fn selftest_passes() {
    let out = orsched(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}
