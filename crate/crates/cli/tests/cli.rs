use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"
seed = 11
n_samples = 4000

[model]
k = 1
d = 1
epsilon = 1.0
beta = BETA

[box]
lo0 = [-4]
hi0 = [4]
lo1 = [-8]
hi1 = [8]
"#;

fn config(dir: &Path, name: &str, beta: f64, extra: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, BASE.replace("BETA", &beta.to_string()) + extra).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_percolab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn simulate_zero_beta_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let extra = "[simulate]\ntau = [\"0|0\", \"0|1\", \"1|0\", \"2|3\"]\nchi = true\nm = 0.5\ntm_sup = [1.0]\n";
    let cfg = config(dir.path(), "zero.toml", 0.0, extra);
    let out = run(&["simulate"], &cfg, &dir.path().join("a"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("a/simulate.csv"));
    let header = csv::Reader::from_path(dir.path().join("a/simulate.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["quantity", "k", "d", "epsilon", "beta", "x", "y", "L", "m", "mean", "stderr", "n_samples", "seed", "argmax"]
    );
    for r in rows.iter().filter(|r| r[0] == "tau") {
        let want = if r[6] == "0|0" { "1.0" } else { "0.0" };
        assert_eq!(r[9], want, "{r:?}");
    }
    let chi = rows.iter().find(|r| r[0] == "chi").unwrap();
    assert_eq!(chi[9], "1.0");

    let again = run(&["simulate"], &cfg, &dir.path().join("b"));
    assert!(again.status.success());
    assert_eq!(fs::read(dir.path().join("a/simulate.csv")).unwrap(), fs::read(dir.path().join("b/simulate.csv")).unwrap());

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["payload"]["command"], "simulate");
    assert!(manifest["runtime"]["wall_seconds"].is_number());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "s.toml", 0.3, "[simulate]\ntau = [\"0|1\", \"0|2\", \"1|1\"]\n");
    assert!(run(&["simulate"], &cfg, &dir.path().join("a")).status.success());
    assert!(run(&["simulate", "--seed", "12"], &cfg, &dir.path().join("b")).status.success());
    let (a, b) = (csv_rows(&dir.path().join("a/simulate.csv")), csv_rows(&dir.path().join("b/simulate.csv")));
    assert_ne!(a, b);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    fs::write(&missing, BASE.replace("BETA", "0.1").replace("n_samples = 4000", "")).unwrap();
    let out = run(&["simulate"], &missing, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_samples"));

    let typo = config(dir.path(), "typo.toml", 0.1, "[simulate]\ntaus = []\n");
    assert_eq!(run(&["simulate"], &typo, &dir.path().join("o")).status.code(), Some(2));

    let corrupted = config(
        dir.path(),
        "bad.toml",
        0.1,
        "[oracle]\nfixtures = [{ label = \"bad\", sites = 2, edges = [[0, 1, 1.5]], x = 0, y = 1 }]\n",
    );
    let out = run(&["oracle-check"], &corrupted, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));

    let outside = config(dir.path(), "outside.toml", 0.1, "[simulate]\ntau = [\"9|0\"]\n");
    assert_eq!(run(&["simulate"], &outside, &dir.path().join("o")).status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate"], &dir.path().join("nope.toml"), &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3));
    let cfg = config(dir.path(), "ok.toml", 0.1, "");
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(run(&["simulate"], &cfg, &blocker.join("sub")).status.code(), Some(3));
}

#[test]
fn oracle_check_fixtures_and_cap() {
    let dir = tempfile::tempdir().unwrap();
    let extra = r#"
[oracle]
random_instances = 20
model_instances = 5
mc_instances = 2
fixtures = [
    { label = "series", sites = 3, edges = [[0, 1, 0.3], [1, 2, 0.7]], x = 0, y = 2, expect = 0.21 },
    { label = "parallel", sites = 4, edges = [[0, 1, 0.3], [1, 3, 1.0], [0, 2, 0.7], [2, 3, 1.0]], x = 0, y = 3, expect = 0.79 },
]
"#;
    let cfg = config(dir.path(), "o.toml", 0.1, extra);
    let out = run(&["oracle-check"], &cfg, &dir.path().join("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("o/oracle.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2 + 20 + 5 + 2);
    assert!(lines.iter().all(|l| l["pass"] == true));
    assert!(lines.iter().filter(|l| l["kind"] == "random").all(|l| l["hsl"]["holds"] == true));

    let wrong = config(
        dir.path(),
        "w.toml",
        0.1,
        "[oracle]\nrandom_instances = 0\nmodel_instances = 0\nfixtures = [{ label = \"w\", sites = 2, edges = [[0, 1, 0.3]], x = 0, y = 1, expect = 0.4 }]\n",
    );
    assert_eq!(run(&["oracle-check"], &wrong, &dir.path().join("w")).status.code(), Some(1));

    let capped = Command::new(env!("CARGO_BIN_EXE_percolab"))
        .args(["oracle-check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("c"))
        .env("PERCOLAB_CAP", "1")
        .output()
        .unwrap();
    assert!(capped.status.success());
    let text = fs::read_to_string(dir.path().join("c/oracle.jsonl")).unwrap();
    assert!(text.contains("cap exceeded"));
}

#[test]
fn certify_degenerate_and_failing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "zero.toml", 0.0, "[certify]\nls = [1.0, 2.0, 4.0]\n");
    let out = run(&["certify"], &cfg, &dir.path().join("z"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("z/certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["certificate"]["chi_m"]["value"], 1.0);
    assert_eq!(cert["certificate"]["n0"]["value"], 1);
    assert_eq!(cert["certificate"]["m"]["provenance"], "derived");
    // beta = 0: C reduces to the tail term 2 (2 L0)^2 with L0 = 1
    assert_eq!(cert["certificate"]["C"]["value"], 8.0);
    let rows = csv_rows(&dir.path().join("z/verification.csv"));
    assert_eq!(rows.len(), 9 * 17);
    assert!(rows.iter().all(|r| r[9] == "true"));

    let small = config(dir.path(), "small.toml", 0.3, "[certify]\nlambda = 0.01\n");
    let out = run(&["certify"], &small, &dir.path().join("s"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage find_n0"));
}

#[test]
fn fit_from_csv_and_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("tau.csv");
    let mut text = String::from("quantity,k,d,epsilon,beta,x,y,L,m,mean,stderr,n_samples,seed,argmax\n");
    for a in 0..4 {
        for b in [0, 2, 5, 9, 17] {
            let tau = 0.4 * (-0.7 * a as f64).exp() / (1.0 + (b as f64).powi(2));
            text += &format!("tau,1,1,1,0.1,0|0,{a}|{b},,,{tau:e},{:e},1000,0,\n", tau * 0.01);
        }
    }
    fs::write(&csv_path, text).unwrap();
    let cfg = config(dir.path(), "fit.toml", 0.1, &format!("[fit]\ninput = {:?}\n", csv_path.to_str().unwrap()));
    let out = run(&["fit"], &cfg, &dir.path().join("f"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("f/fit.json")).unwrap()).unwrap();
    assert!((fit["m_hat"].as_f64().unwrap() - 0.7).abs() < 1e-6);
    assert!((fit["q_hat"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((fit["c_hat"].as_f64().unwrap() - 0.4).abs() < 1e-6);
    assert!(fs::read_to_string(dir.path().join("f/fit.txt")).unwrap().contains("q_hat"));

    let empty = config(dir.path(), "empty.toml", 0.1, "[fit]\n");
    let out = run(&["fit"], &empty, &dir.path().join("e"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient signal"));
}
