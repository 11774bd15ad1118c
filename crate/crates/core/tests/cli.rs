use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_net-adapt"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn records(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const SMALL: &str = "seed = 3\nprofile = \"two-moon\"\n[data]\nkind = \"two-moon\"\nn_per_class = 30\n";

#[test]
fn run_reports_accuracy_and_history() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), format!("algorithm = \"net\"\n{SMALL}")).unwrap();
    let out = bin(&["run", "--config", "c.toml", "--out", "r.jsonl"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("r.jsonl"));
    assert_eq!(recs[0]["kind"], "config");
    let result = recs.iter().find(|r| r["kind"] == "result").unwrap();
    assert!(result["target_accuracy"].as_f64().unwrap() > 0.5);
    assert_eq!(result["pseudo_label_accuracy"].as_array().unwrap().len(), 10);
    assert_eq!(result["objective_history"].as_array().unwrap().len(), 10);
    assert!(result["bandwidth"].as_f64().unwrap() > 0.0);
    assert_eq!(recs.last().unwrap()["kind"], "timing");
    assert!(dir.path().join("r.txt").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), format!("algorithm = \"tca\"\n{SMALL}")).unwrap();
    let a = bin(&["run", "--config", "c.toml", "--seed", "11", "--out", "a.jsonl"], dir.path());
    assert!(a.status.success());
    let recs = records(&dir.path().join("a.jsonl"));
    assert_eq!(recs[1]["seed"], 11);
}

#[test]
fn params_and_grid_together_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[data]\nkind = \"two-moon\"\n[params]\nalpha = 1.0\nbeta = 1.0\ngamma = 1.0\nk = 2\n[grid]\nk_values = [2]\nalpha = [1.0]\nbeta = [1.0]\ngamma = [1.0]\n",
    )
    .unwrap();
    let out = bin(&["run", "--config", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mutually exclusive"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(&["run", "--config", "missing.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(bin(&["--help"], dir.path()).status.code(), Some(0));

    // a malformed data file is a runtime failure in data-io
    std::fs::write(dir.path().join("s.csv"), "1,2,1\n3,4\n").unwrap();
    std::fs::write(dir.path().join("t.csv"), "1,2\n3,4\n").unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "profile = \"digit\"\n[data]\nkind = \"csv\"\nsource = \"s.csv\"\ntarget = \"t.csv\"\n",
    )
    .unwrap();
    let out = bin(&["run", "--config", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data-io"));

    // k larger than the data is a solver failure
    std::fs::write(dir.path().join("s.csv"), "1,2,1\n3,4,2\n").unwrap();
    let out = bin(&["run", "--config", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("adapt-solver"));
}

#[test]
fn kpca_on_source_only_has_no_adaptation_fields() {
    let dir = tempfile::tempdir().unwrap();
    let g = bin(&["gen-toy", "--out", "toy", "--n-per-class", "20"], dir.path());
    assert!(g.status.success());
    std::fs::write(
        dir.path().join("c.toml"),
        "algorithm = \"kpca\"\n[data]\nkind = \"csv\"\nsource = \"toy/source.csv\"\n[params]\nalpha = 1.0\nbeta = 1.0\ngamma = 1.0\nk = 3\n",
    )
    .unwrap();
    let out = bin(&["run", "--config", "c.toml", "--out", "k.jsonl"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("k.jsonl"));
    let r = recs.iter().find(|r| r["kind"] == "result").unwrap();
    for field in ["target", "target_accuracy", "objective_history", "pseudo_label_accuracy", "ridge"] {
        assert!(r.get(field).is_none(), "{field} present");
    }
    assert_eq!(r["eigenvalues"].as_array().unwrap().len(), 3);

    // source-only configs only accept kpca
    std::fs::write(
        dir.path().join("n.toml"),
        "algorithm = \"net\"\n[data]\nkind = \"csv\"\nsource = \"toy/source.csv\"\n[params]\nalpha = 1.0\nbeta = 1.0\ngamma = 1.0\nk = 3\n",
    )
    .unwrap();
    assert_eq!(bin(&["run", "--config", "n.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn csv_pair_round_trip_through_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bin(&["gen-toy", "--out", "toy", "--seed", "3", "--n-per-class", "30"], dir.path()).status.success());
    std::fs::write(
        dir.path().join("csv.toml"),
        "algorithm = \"net\"\nprofile = \"two-moon\"\n[data]\nkind = \"csv\"\nsource = \"toy/source.csv\"\ntarget = \"toy/target.csv\"\ntarget_has_labels = true\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("gen.toml"), format!("algorithm = \"net\"\n{SMALL}")).unwrap();
    let a = bin(&["run", "--config", "csv.toml", "--out", "a.jsonl"], dir.path());
    let b = bin(&["run", "--config", "gen.toml", "--out", "b.jsonl"], dir.path());
    assert!(a.status.success() && b.status.success());
    let acc = |p: &str| {
        records(&dir.path().join(p))
            .into_iter()
            .find(|r| r["kind"] == "result")
            .unwrap()["target_accuracy"]
            .as_f64()
            .unwrap()
    };
    // the CSVs hold the same draw as the generator at that seed
    assert_eq!(acc("a.jsonl"), acc("b.jsonl"));
}

#[test]
fn compare_marks_rows_and_duplicates_agree() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        format!("algorithms = [\"net\", \"jda\", \"net\"]\n{SMALL}"),
    )
    .unwrap();
    let out = bin(&["compare", "--config", "c.toml", "--out", "c.jsonl"], dir.path());
    assert!(out.status.success());
    let rows: Vec<_> = records(&dir.path().join("c.jsonl"))
        .into_iter()
        .filter(|r| r["kind"] == "row")
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["accuracy"], rows[2]["accuracy"]);
    assert!(rows.iter().any(|r| r["mark"] == "best"));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("accuracy %"));

    std::fs::write(dir.path().join("one.toml"), format!("algorithm = \"kpca\"\n{SMALL}")).unwrap();
    let out = bin(&["compare", "--config", "one.toml"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn grid_writes_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("g.toml"),
        "algorithm = \"jda\"\nseed = 1\n[data]\nkind = \"two-moon\"\nn_per_class = 20\n[grid]\nk_values = [2, 100]\nalpha = [1.0, 5.0]\nbeta = [1.0]\ngamma = [0.1, 1.0]\n",
    )
    .unwrap();
    let out = bin(&["grid", "--config", "g.toml", "--out", "g.jsonl"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("g.jsonl"));
    let cells: Vec<_> = recs.iter().filter(|r| r["kind"] == "grid_cell").collect();
    // jda collapses the alpha axis
    assert_eq!(cells.len(), 4);
    assert!(cells.iter().any(|c| !c["cell"]["error"].is_null()));
    let sel = recs.iter().find(|r| r["kind"] == "grid_selected").unwrap();
    assert_eq!(sel["params"]["alpha"], 1.0);
    assert_eq!(sel["params"]["beta"], 0.0);
}

#[test]
fn gen_toy_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for d in ["a", "b"] {
        let out = bin(&["gen-toy", "--out", d, "--seed", "9", "--rotation", "-45", "--translation", "0.5", "-1"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["source.csv", "target.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b);
    }
}
