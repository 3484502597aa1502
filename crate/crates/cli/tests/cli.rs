use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seeds = [1]
sample_sizes = [3, 10]
workers = 2

[random_networks]
count = 2
min_variables = 3
max_variables = 4

[provider]
kind = "mock"
kappa = 50.0

[alpha]
kind = "fixed"
value = 10.0

[classification]
structures = ["naive-bayes"]
low_sizes = [10]
runs = 2

[classification.synthetic]
rows = 200
"#;

fn weather() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/weather.bif")
}

fn cptforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cptforge"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cptforge(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_every_violation() {
    assert_eq!(ok(&["validate", s(&weather())]), "ok\n");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"name":"x","variables":[{"name":"A","states":["a","b"],"parents":["B"],"cpt":[[0.5,0.4]]}]}"#,
    )
    .unwrap();
    let out = cptforge(&["validate", s(&bad)]);
    assert!(!out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2, "{text}");
}

#[test]
fn sample_elicit_fuse_kl_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (data, prior, fused) = (
        dir.path().join("d.csv"),
        dir.path().join("p.json"),
        dir.path().join("f.json"),
    );
    let w = weather();
    ok(&["sample", s(&w), "-n", "200", "--seed", "4", "--out", s(&data)]);
    let again = ok(&["sample", s(&w), "-n", "200", "--seed", "4"]);
    assert_eq!(std::fs::read_to_string(&data).unwrap(), again);
    assert_eq!(again.lines().count(), 201);

    ok(&["elicit", s(&w), "--method", "full-dist", "--out", s(&prior)]);
    ok(&[
        "fuse",
        s(&w),
        "--prior",
        s(&prior),
        "--data",
        s(&data),
        "--alpha",
        "5",
        "--out",
        s(&fused),
    ]);
    ok(&["validate", s(&fused)]);
    let kl: serde_json::Value = serde_json::from_str(&ok(&["kl", s(&w), s(&fused)])).unwrap();
    assert!(kl["bn_kl"].as_f64().unwrap() > 0.0);
    let zero: serde_json::Value = serde_json::from_str(&ok(&["kl", s(&w), s(&w)])).unwrap();
    assert_eq!(zero["bn_kl"].as_f64().unwrap(), 0.0);
}

#[test]
fn unknown_method_is_rejected() {
    let out = cptforge(&["elicit", s(&weather()), "--method", "psychic"]);
    assert!(!out.status.success());
}

#[test]
fn report_commands_write_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        for cmd in ["sweep", "kl", "classify"] {
            ok(&[cmd, "--config", s(&cfg), "--out", s(out)]);
        }
    }
    for f in [
        "sweep.csv",
        "sweep_summary.json",
        "kl.csv",
        "kl_summary.json",
        "classification.csv",
    ] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(std::fs::read_to_string(a.join("config.toml"))
        .unwrap()
        .contains("[random_networks]"));
    let sweep = std::fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn learn_structure_fits_a_valid_network() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    ok(&["sample", s(&weather()), "-n", "2000", "--out", s(&data)]);
    let net = dir.path().join("learned.json");
    ok(&["learn-structure", s(&data), "--out", s(&net)]);
    assert_eq!(ok(&["validate", s(&net)]), "ok\n");
    let nb = ok(&["learn-structure", s(&data), "--naive-bayes", "Traffic"]);
    assert!(nb.contains("\"parents\": [\"Traffic\"]"), "{nb}");
}
