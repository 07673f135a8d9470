use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use harness::run::csv_bytes;
use harness::sweep::sweep_csv_bytes;
use harness::{cmd_run, cmd_sweep, simulate, ExperimentConfig};
use logdet_ftrl::formats::parse_checkpoint;

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logdet-ftrl"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn planted(n: usize, horizon: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.n = n;
    c.horizon = Some(horizon);
    c.seed = seed;
    c
}

#[test]
fn planted_cut_run_converges() {
    let s = simulate(&planted(4, 100, 7), 7, None).unwrap();
    assert_eq!(s.rows.len(), 100);
    let mut sum = 0.0;
    for r in &s.rows {
        sum += r.payoff;
        assert_eq!(r.cumulative, sum);
    }
    let regret: Vec<f64> = s.rows.iter().map(|r| r.regret().unwrap()).collect();
    let inc: Vec<f64> = regret.windows(2).map(|w| w[1] - w[0]).collect();
    for pair in inc[50..].windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9, "{pair:?}");
    }
    assert!(s.rows.last().unwrap().payoff >= 0.9);
    assert_eq!(s.regret, regret.last().copied());
}

#[test]
fn identical_runs_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let mut c = planted(5, 60, 3);
        c.noise = 0.2;
        c.out = dir.path().join(name);
        cmd_run(&c).unwrap();
        bytes.push(fs::read(&c.out).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn replicates_get_consecutive_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = planted(4, 20, 40);
    c.adversary = "random".parse().unwrap();
    c.replicates = 8;
    c.out = dir.path().join("rep.csv");
    let runs = cmd_run(&c).unwrap();
    let seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, (40..48).collect::<Vec<_>>());
    let mut files: Vec<Vec<u8>> = (0..8)
        .map(|i| fs::read(dir.path().join(format!("rep_{i}.csv"))).unwrap())
        .collect();
    for (run, file) in runs.iter().zip(&files) {
        assert_eq!(&csv_bytes(run).unwrap(), file);
    }
    files.dedup();
    assert_eq!(files.len(), 8);
}

#[test]
fn checkpoints_hold_the_latest_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = planted(3, 30, 1);
    c.checkpoint_every = 10;
    c.out = dir.path().join("ck.csv");
    cmd_run(&c).unwrap();
    let ck = parse_checkpoint(&fs::read_to_string(dir.path().join("ck.checkpoint")).unwrap()).unwrap();
    assert_eq!((ck.round, ck.n, ck.k), (30, 3, 2));
}

#[test]
fn scripted_gambling_run() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("games.txt");
    fs::write(&script, "0 1 first\n1 2 first\n# rematch\n0 2 first\n2 1 second\n").unwrap();
    let mut c = ExperimentConfig::default();
    c.n = 3;
    c.k = 3;
    c.problem = "gambling".parse().unwrap();
    c.adversary = "scripted".parse().unwrap();
    c.script = Some(script);
    let s = simulate(&c, 0, None).unwrap();
    assert_eq!(s.rows.len(), 4);
    assert_eq!(s.opt_value, Some(4.0));
}

#[test]
fn sweep_rows_are_sorted_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.txt");
    fs::write(&script, "0 1 cut\n1 2 cut\n0 2 not-cut\n0 1 cut\n2 1 cut\n").unwrap();
    let mut c = ExperimentConfig::default();
    c.n = 3;
    c.adversary = "scripted".parse().unwrap();
    c.script = Some(script);
    let rows = cmd_sweep(&c, &[8, 5], &[2, 0, 1]).unwrap();
    let keys: Vec<(usize, u64)> = rows.iter().map(|r| (r.horizon, r.seed)).collect();
    assert_eq!(keys, vec![(5, 0), (5, 1), (5, 2), (8, 0), (8, 1), (8, 2)]);
    assert!(rows[..3].iter().all(|r| r.outcome.is_ok()));
    assert!(rows[3..].iter().all(|r| r.outcome.is_err()));
    let again = cmd_sweep(&c, &[8, 5], &[2, 0, 1]).unwrap();
    assert_eq!(sweep_csv_bytes(&rows).unwrap(), sweep_csv_bytes(&again).unwrap());
}

#[test]
fn opt_command_output_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tri.txt"), "3 2 3 maxcut\n0 1 cut\n1 2 cut\n0 2 cut\n").unwrap();
    let out = bin(&["opt", "tri.txt"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("value 1\nlabeling 0 0 1\n"), "{text}");

    fs::write(dir.path().join("empty.txt"), "4 2 0 maxcut\n").unwrap();
    let out = bin(&["opt", "empty.txt"], dir.path());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("value 0\n"));

    fs::write(dir.path().join("bad.txt"), "3 2 3 maxcut\n0 1 cut\n1 2 cat\n0 2 cut\n").unwrap();
    let out = bin(&["opt", "bad.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 3"));

    fs::write(dir.path().join("big.txt"), "30 2 0 maxcut\n").unwrap();
    assert_eq!(bin(&["opt", "big.txt"], dir.path()).status.code(), Some(3));
}

#[test]
fn run_command_respects_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.conf"), "n = 3\nT = 15\nadversary = random\nout = from-file.csv\n").unwrap();
    let out = bin(&["run", "--config", "exp.conf", "--n", "4", "--seed", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("from-file.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(csv.lines().skip(1).all(|l| l.split(',').take(3).skip(1).all(|v| v.parse::<usize>().unwrap() < 4)));

    fs::write(dir.path().join("broken.conf"), "n = 3\nT = many\n").unwrap();
    let out = bin(&["run", "--config", "broken.conf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));
    let out = bin(&["run", "--k", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("'k'"));
}

#[test]
fn verify_exit_status_follows_violations() {
    let dir = tempfile::tempdir().unwrap();
    let started = std::time::Instant::now();
    let out = bin(&["verify", "--suite", "all", "--trials", "1"], dir.path());
    assert!(out.status.success());
    assert!(started.elapsed().as_secs() < 10);
    let out = bin(&["verify", "--suite", "entropy", "--trials", "10000"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = bin(&["verify", "--suite", "logdet", "--trials", "2000", "--constant", "10"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(bin(&["verify", "--suite", "nope"], dir.path()).status.code(), Some(2));
}

#[test]
fn sweep_command_writes_sorted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--n", "3", "--T", "20,10", "--seed", "0..2", "--out", "agg.csv"];
    assert!(bin(&args, dir.path()).status.success());
    let csv = fs::read_to_string(dir.path().join("agg.csv")).unwrap();
    let keys: Vec<String> = csv.lines().skip(1).map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(keys, ["10,0", "10,1", "20,0", "20,1"]);
}
