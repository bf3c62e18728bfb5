use extcurv_cli::records::{read_csv, read_jsonl, ExperimentRecord};
use std::path::Path;
use std::process::{Command, Output};

fn extcurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extcurv")).args(args).env_remove("EXTCURV_WORKERS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const CIRCLE: &str = r#"
name = "t"
seed = 3
methods = ["quadrature_T"]

[manifold]
kind = "circle"
radius = 1.0

[base]
intrinsic = [0.0]

[schedule]
delta0 = 0.4
levels = 2
sigma = "0.25 * delta"
epsilon = "0.25 * delta"
"#;

const SAMPLED: &str = r#"
name = "sampled"
seed = 11
methods = ["discrete_exact", "point_cloud", "dual"]

[manifold]
kind = "ellipse"
a = 2.0
b = 1.0

[base]
intrinsic = [0.3]
direction_index = 0

[schedule]
delta0 = 0.4
levels = 2
sigma = "0.2 * delta"
epsilon = "0.25 * delta"

[budget]
order = 8
samples = 40
intensity = 2000.0
trials = 30
"#;

fn csv_without_runtime(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

fn circle_w1(r: f64, delta: f64, sigma: f64, eps: f64) -> f64 {
    2.0 * r * r * (delta / (2.0 * r)).sin() * (eps / r).sin() / eps * (1.0 + sigma * sigma / (3.0 * r * r))
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_config(dir.path(), "zero.toml", &CIRCLE.replace("levels = 2", "levels = 0"));
    let o = extcurv(&["run", &zero]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("0 levels"), "{}", stderr(&o));
    assert_eq!(code(&extcurv(&["validate", &zero])), 2);

    let cases = [
        CIRCLE.replace("radius = 1.0", "radius = 1.0\ncolour = \"red\""),
        CIRCLE.replace("seed = 3", "seed = 3\nsede = 4"),
        CIRCLE.replace("0.25 * delta\"\nepsilon", "0.3 * delta\"\nepsilon"),
        CIRCLE.replace("sigma = \"0.25 * delta\"", "sigma = \"0.25 * sigma\""),
        CIRCLE.replace("epsilon = \"0.25 * delta\"", "epsilon = \"0.25 * delta^-1\""),
        CIRCLE.replace("[\"quadrature_T\"]", "[]"),
        CIRCLE.replace("[\"quadrature_T\"]", "[\"quadrature_T\", \"quadrature_T\"]"),
        CIRCLE.replace("[\"quadrature_T\"]", "[\"simpson\"]"),
        CIRCLE.replace("intrinsic = [0.0]", "intrinsic = [0.0, 1.0]"),
        CIRCLE.replace("intrinsic = [0.0]", "intrinsic = [0.0]\ndirection = [1.0, 0.0]"),
        CIRCLE.replace("delta0 = 0.4", "delta0 = 1.5"),
        CIRCLE.replace("radius = 1.0", "radius = -1.0"),
        CIRCLE.replace("[\"quadrature_T\"]", "[\"point_cloud\"]") + "\n[budget]\ntrials = 5\n",
        CIRCLE.replace("kind = \"circle\"\nradius = 1.0", "kind = \"sphere\"\ndim = 2\nradius = 1.0")
            .replace("[0.0]", "[0.0, 0.0]")
            + "\n[criteria.circle_closed_form]\nrel_tol = 1e-6\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let p = write_config(dir.path(), &format!("bad{i}.toml"), text);
        let o = extcurv(&["validate", &p]);
        assert_eq!(code(&o), 2, "case {i} should be rejected:\n{text}");
        assert!(stderr(&o).starts_with("config error"), "case {i}: {}", stderr(&o));
    }
    assert_eq!(code(&extcurv(&["run", "no-such-config"])), 2);
}

#[test]
fn bundled_circle_config_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cc");
    let o = extcurv(&["run", "circle-closedform", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = read_csv(std::fs::File::open(out.join("records.csv")).unwrap()).unwrap();
    let quad: Vec<&ExperimentRecord> = recs.iter().filter(|r| r.method == "quadrature_T").collect();
    assert_eq!(quad.len(), 3);
    for r in quad {
        let exact = circle_w1(1.0, r.delta, r.sigma, r.epsilon);
        assert!((r.w1 - exact).abs() <= 1e-6 * exact, "δ={}: {} vs {exact}", r.delta, r.w1);
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
}

#[test]
fn bundled_pseudo_flat_config_is_cubically_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pf");
    let o = extcurv(&["run", "pseudoflat-surface.toml", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = read_csv(std::fs::File::open(out.join("records.csv")).unwrap()).unwrap();
    assert_eq!(recs.len(), 8);
    for r in &recs {
        assert!((r.epsilon / r.sigma - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(r.kappa.abs() < 1e-3 * r.delta.powi(3), "δ={}: κ={}", r.delta, r.kappa);
    }
}

#[test]
fn reruns_reproduce_the_csv_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SAMPLED);
    let runs: Vec<_> = [("1", "a"), ("3", "b"), ("1", "c")]
        .iter()
        .map(|(w, name)| {
            let out = dir.path().join(name);
            let o = extcurv(&["run", &cfg, "--workers", w, "--out", out.to_str().unwrap()]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
            out
        })
        .collect();
    let reference = csv_without_runtime(&runs[0].join("records.csv"));
    // 2 levels × (30 + 30 + 1) rows + header.
    assert_eq!(reference.len(), 1 + 2 * 61);
    for out in &runs[1..] {
        assert_eq!(csv_without_runtime(&out.join("records.csv")), reference);
    }
    let jsonl = read_jsonl(std::fs::File::open(runs[0].join("records.jsonl")).unwrap()).unwrap();
    let jsonl_b = read_jsonl(std::fs::File::open(runs[1].join("records.jsonl")).unwrap()).unwrap();
    let strip = |rs: Vec<ExperimentRecord>| rs.into_iter().map(|r| ExperimentRecord { runtime_ms: 0.0, ..r }).collect::<Vec<_>>();
    assert_eq!(strip(jsonl.clone()), strip(jsonl_b));

    // The CSV is the JSONL sorted by (level, method, trial).
    let mut sorted = jsonl;
    sorted.sort_by_key(|r| r.sort_key());
    assert_eq!(sorted, read_csv(std::fs::File::open(runs[0].join("records.csv")).unwrap()).unwrap());

    let env_run = dir.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_extcurv"))
        .args(["run", &cfg, "--out", env_run.to_str().unwrap()])
        .env("EXTCURV_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(csv_without_runtime(&env_run.join("records.csv")), reference);

    let reseeded = dir.path().join("reseeded");
    let o = extcurv(&["run", &cfg, "--seed", "12", "--out", reseeded.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let other = csv_without_runtime(&reseeded.join("records.csv"));
    assert_ne!(other, reference);
    // The deterministic rows do not depend on the seed beyond the echoed seed column.
    let dual = |rows: &[String]| -> Vec<String> {
        rows.iter().filter(|l| l.contains(",dual,")).map(|l| l.replace(",11,", ",").replace(",12,", ",")).collect()
    };
    assert_eq!(dual(&other), dual(&reference));
}

#[test]
fn sampled_rows_are_per_trial_and_check_mode_validates_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SAMPLED);
    let out = dir.path().join("o");
    assert_eq!(code(&extcurv(&["run", &cfg, "--out", out.to_str().unwrap()])), 0);
    let recs = read_csv(std::fs::File::open(out.join("records.csv")).unwrap()).unwrap();
    for method in ["discrete_exact", "point_cloud"] {
        for level in 0..2 {
            let trials: Vec<usize> = recs.iter().filter(|r| r.method == method && r.level == level).map(|r| r.trial).collect();
            assert_eq!(trials, (0..30).collect::<Vec<_>>());
        }
    }
    assert!(recs.iter().all(|r| r.stderr == 0.0 && r.validate().is_empty()));

    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let aggs = summary["aggregates"].as_array().unwrap();
    assert_eq!(aggs.len(), 6);
    for a in aggs {
        let stochastic = a["method"] != "dual";
        assert_eq!(a["trials"], if stochastic { 30 } else { 1 });
        assert_eq!(a["kappa_stderr"].as_f64().unwrap() > 0.0, stochastic);
    }

    for file in ["records.csv", "records.jsonl"] {
        let o = extcurv(&["check", out.join(file).to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    // Tampering with one κ value is caught on load.
    let text = std::fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[5].split(',').map(String::from).collect();
    fields[17] = format!("{:?}", fields[17].parse::<f64>().unwrap() + 1e-9);
    lines[5] = fields.join(",");
    std::fs::write(dir.path().join("bad.csv"), lines.join("\n") + "\n").unwrap();
    let o = extcurv(&["check", dir.path().join("bad.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("row 5"), "{}", stderr(&o));
}

#[test]
fn failed_criteria_exit_with_code_3_and_runtime_errors_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let strict = CIRCLE.to_string() + "\n[criteria.kappa_power_bound]\nc = 1e-3\npower = 3.0\n";
    let cfg = write_config(dir.path(), "strict.toml", &strict);
    let o = extcurv(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL kappa_power_bound"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], false);

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let plain = write_config(dir.path(), "plain.toml", CIRCLE);
    let o = extcurv(&["run", &plain, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn list_and_validate_describe_the_plan() {
    let o = extcurv(&["list-manifolds"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for kind in ["circle", "parabola", "helix", "sphere", "flat_torus", "graph_monkey_saddle", "circle-closedform"] {
        assert!(text.contains(kind), "{kind} missing");
    }
    let o = extcurv(&["validate", "circle-closedform"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).matches("level ").count(), 3);
}
