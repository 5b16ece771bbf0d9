use std::fs;
use std::process::{Command, Output};

fn precise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_precise")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

const ADULT: &[&str] = &[
    "ppie",
    "--model",
    "bernoulli",
    "--n",
    "500",
    "--k",
    "108",
    "--alpha",
    "0.05",
    "--variant",
    "plus-mstar",
    "--seed",
    "7",
];

#[test]
fn ppie_is_deterministic() {
    let args: Vec<&str> = ADULT.iter().copied().chain(["--eps", "0.5"]).collect();
    let a = precise(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, precise(&args).stdout);
    let v = json(&a);
    for key in ["lower", "upper", "level", "variant", "epsilon_or_mu", "diagnostics"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["epsilon_or_mu"], 0.5);
    assert!(stderr(&a).contains("spent eps = 0.5"));
}

#[test]
fn ppie_noiseless_matches_beta_interval() {
    // central 95% interval of Beta(109, 393)
    let (lo, hi) = (0.18219521570734706, 0.25420221337785154);
    let h = 1e-3;
    let args: Vec<&str> = ADULT.iter().copied().chain(["--eps", "1e6", "--h", "0.001", "--m", "200000"]).collect();
    let o = precise(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let (l, u) = (v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    assert!((l - lo).abs() <= 2.0 * h && (u - hi).abs() <= 2.0 * h, "({l}, {u})");
}

#[test]
fn usage_errors_exit_two_with_one_line() {
    let cases: &[(&[&str], &str)] = &[
        (ADULT, "--eps"),
        (&["ppie", "--model", "bernoulli", "--n", "5", "--k", "1", "--eps", "1", "--wat"], "--wat"),
        (&["ppie", "--model", "bernoulli", "--n", "5", "--k", "1", "--eps", "abc"], "--eps"),
        (&["ppie", "--model", "bernoulli", "--n", "5", "--eps", "1"], "--k"),
        (&["ppie", "--model", "nope", "--n", "5", "--eps", "1"], "--model"),
        (&["convert", "--eps", "8", "--delta", "2"], "--delta"),
        (&["bench", "--repeats", "x"], "--repeats"),
    ];
    for (args, flag) in cases {
        let o = precise(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(err.contains(flag), "{args:?}: {err}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"], &["bench", "--help"], &["ppie", "-h"]] {
        let o = precise(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn degenerate_posterior_exits_three() {
    let o = precise(&["ppie", "--model", "gaussian_mean", "--n", "10", "--xbar", "0", "--s2", "0", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn convert_examples() {
    let v = json(&precise(&["convert", "--mu", "1", "--eps", "1"]));
    assert!((v["delta"].as_f64().unwrap() - 0.1269).abs() < 5e-5);
    let v = json(&precise(&["convert", "--eps", "8", "--delta", "0.01"]));
    assert!((v["mu"].as_f64().unwrap() - 2.45).abs() < 0.01);
    let v = json(&precise(&["convert", "--mu", "0.0001", "--eps", "1"]));
    assert!(v["delta"].as_f64().unwrap() < 1e-12);
}

#[test]
fn bench_smoke_reproducible_and_plotted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "bench",
        "--task",
        "gaussian-mean",
        "--n",
        "300",
        "--eps",
        "1",
        "--variants",
        "+m*",
        "--repeats",
        "10",
        "--no-baseline",
        "--seed",
        "3",
        "--out-dir",
        out,
    ];
    let start = std::time::Instant::now();
    let o = precise(&args);
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv_path = dir.path().join("bench_gaussian_mean.csv");
    let first = fs::read(&csv_path).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("task,n,notion,budget,variant,repeats,cp,mean_width,sd_width,crossed_count,mean_ms\n"));

    let again = precise(&args.iter().copied().chain(["--plot"]).collect::<Vec<_>>());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read(&csv_path).unwrap(), first);
    let svg = fs::read_to_string(dir.path().join("bench_gaussian_mean.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(r#"class="reference""#) && svg.contains(r#"data-value="0.95""#));
    assert_eq!(svg.matches(r#"class="series""#).count(), 2);

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bench_gaussian_mean.config.json")).unwrap()).unwrap();
    assert_eq!(sidecar["master_seed"], 3);
    assert!(sidecar["bounds"].is_object());
}

#[test]
fn bench_config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"task": {"task": "poisson", "lambda": 10.0}, "n_grid": [100, 200], "repeats": 4, "baseline": false, "variants": ["minus_m"]}"#).unwrap();
    let out = dir.path().to_str().unwrap();
    let o = precise(&["bench", "--config", cfg.to_str().unwrap(), "--n", "150", "--mu", "0.5,2", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("bench_poisson.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("poisson,150,mu,") && r.contains(",-m,4,")));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    let o = precise(&["bench", "--config", bad.to_str().unwrap(), "--out-dir", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn bench_unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = precise(&["bench", "--n", "100", "--repeats", "2", "--out-dir", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--out-dir"));
}

#[test]
fn sensitivity_and_quantile_commands() {
    let o = precise(&["sensitivity", "--task", "bernoulli", "--n", "100,1000", "--pairs", "5", "--grid", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("task,n,gn_numeric,g0_analytic,g0_upper_bound\n"));
    assert_eq!(text.lines().count(), 3);

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.txt");
    fs::write(&data, (1..=200).map(|i| format!("{}\n", i as f64 / 10.0)).collect::<String>()).unwrap();
    let o = precise(&[
        "quantile",
        "--model",
        "gaussian_mean",
        "--data",
        data.to_str().unwrap(),
        "--lx",
        "0",
        "--ux",
        "30",
        "--q",
        "0.5",
        "--eps",
        "5",
        "--method",
        "private",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!((0.0..=30.0).contains(&v["value"].as_f64().unwrap()));

    let o = precise(&[
        "quantile",
        "--model",
        "poisson",
        "--n",
        "100",
        "--sum-x",
        "1000",
        "--q",
        "0.5",
        "--mu",
        "1",
        "--method",
        "ppquantile",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = precise(&[
        "quantile", "--model", "poisson", "--n", "100", "--sum-x", "1000", "--q", "0.5", "--eps", "1e6", "--h", "0.01",
        "--m", "50000",
    ]);
    let v = json(&o);
    let got = v["value"].as_f64().unwrap();
    // scipy: gamma(1000.1, scale=1/100.1).median() = 9.987679185064822
    assert!((got - 9.988).abs() < 0.03, "{got}");
}

#[test]
fn thread_limit_from_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_precise"))
            .env("PRECISE_THREADS", threads)
            .args(["convert", "--mu", "1", "--eps", "1"])
            .output()
            .unwrap()
    };
    assert_eq!(run("2").status.code(), Some(0));
    let bad = run("0");
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("PRECISE_THREADS"));
}
