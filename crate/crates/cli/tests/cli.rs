use std::path::Path;
use std::process::{Command, Output};

fn scope(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scope"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

const SMALL: [&str; 8] = [
    "--trials",
    "2",
    "--generations",
    "10",
    "--population",
    "8",
    "--tournament",
    "4",
];

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let mut args = vec!["run", "--mode", "scope", "--seed", "7"];
    args.extend(SMALL);
    let o = scope(&args, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3);
    assert!(trials.lines().skip(1).all(|l| l.starts_with("scope,")));
    for f in ["curves.csv", "history.csv", "timing.csv", "config.toml"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(out.join("checkpoints/scope_trial1.json").exists());
    let echoed = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("seed = 7"));
    assert!(!out.join("report.json").exists());

    let again = dir.path().join("r2");
    assert_eq!(code(&scope(&args, &again)), 0);
    assert_eq!(
        trials,
        std::fs::read_to_string(again.join("trials.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&scope(&["run", "--k1", "7"], &dir.path().join("a"))),
        2
    );
    assert_eq!(
        code(&scope(&["run", "--tournament", "1"], &dir.path().join("b"))),
        2
    );
    assert_eq!(
        code(&scope(&["run", "--no-such-flag"], &dir.path().join("c"))),
        2
    );
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "generashuns = 3\n").unwrap();
    let o = scope(
        &["run", "--config", cfg.to_str().unwrap()],
        &dir.path().join("d"),
    );
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("a").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "mode = \"baseline\"\ntrials = 2\ngenerations = 6\npopulation = 8\ntournament = 4\nseed = 1\n").unwrap();
    let out = dir.path().join("o");
    let o = scope(
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--generations",
            "4",
        ],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let echoed = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("generations = 4"));
    assert!(echoed.contains("mode = \"baseline\""));
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert!(trials
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("baseline,0,1,4,"));
}

#[test]
fn compare_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("both");
    let mut args = vec!["run", "--mode", "both", "--seed", "2"];
    args.extend(SMALL);
    assert_eq!(code(&scope(&args, &out)), 0);
    assert!(out.join("report.json").exists());

    let trials = out.join("trials.csv");
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    assert_eq!(code(&scope(&["compare", trials.to_str().unwrap()], &r1)), 0);
    assert_eq!(code(&scope(&["compare", trials.to_str().unwrap()], &r2)), 0);
    let report = std::fs::read_to_string(&r1).unwrap();
    assert_eq!(report, std::fs::read_to_string(&r2).unwrap());
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    for key in [
        "scope",
        "baseline",
        "u_statistic",
        "p_value",
        "method",
        "alternative",
        "mean_curve",
    ] {
        assert!(json.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(json["mean_curve"].as_array().unwrap().len(), 10);

    let single = dir.path().join("single.csv");
    let text = std::fs::read_to_string(&trials).unwrap();
    let scope_only: String = text
        .lines()
        .filter(|l| !l.starts_with("baseline"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&single, scope_only).unwrap();
    assert_eq!(code(&scope(&["compare", single.to_str().unwrap()], &r1)), 2);
    std::fs::write(&single, "not,a,trials,file\n").unwrap();
    assert_eq!(code(&scope(&["compare", single.to_str().unwrap()], &r1)), 2);

    let ckpt = out.join("checkpoints/scope_trial0.json");
    let dump = dir.path().join("dump");
    let o = scope(&["inspect", ckpt.to_str().unwrap()], &dump);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let raw = read_matrix(&dump.join("raw.csv"));
    let dct = read_matrix(&dump.join("dct.csv"));
    let block = read_matrix(&dump.join("truncated.csv"));
    assert_eq!((raw.len(), raw[0].len()), (6, 450));
    assert_eq!((dct.len(), dct[0].len()), (6, 450));
    assert_eq!((block.len(), block[0].len()), (6, 9));
    let mean = raw.iter().flatten().sum::<f64>() / 2700.0;
    assert!((dct[0][0] - 2700f64.sqrt() * mean).abs() < 1e-9);
    let trace = std::fs::read_to_string(dump.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 470);
    assert!(trace.starts_with("frame,x,y,angle0,"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"layout\":\"scope\",\"genes\":[1]}").unwrap();
    assert_eq!(code(&scope(&["inspect", bad.to_str().unwrap()], &dump)), 2);
    assert_eq!(
        code(&scope(&["inspect", "/nonexistent/ckpt.json"], &dump)),
        2
    );
}
