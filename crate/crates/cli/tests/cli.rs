use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riesz-stein"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn temp_model(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn example_one_table_shows_exact_values() {
    let o = run(&["example", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    for v in ["1/4", "5/4", "0.418037", "0.055300"] {
        assert!(out.contains(v), "missing {v} in\n{out}");
    }
}

#[test]
fn example_json_is_versioned() {
    let o = run(&["example", "2", "--json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "v1");
    assert_eq!(v["blocks"].as_array().unwrap().len(), 2);
    assert_eq!(v["blocks"][1]["h"], "7/4");
}

#[test]
fn example_three_takes_pair_count() {
    let o = run(&["example", "3", "--K", "5", "--csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("block,set,descriptor,prob,poisson"));
    let blocks: std::collections::BTreeSet<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(blocks.len(), 5);

    let o = run(&["example", "3", "--K", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("error:"));
    assert_eq!(code(&run(&["example", "7"])), 2);
}

#[test]
fn verify_passes_on_independent_fixtures() {
    for name in ["example1.json", "example2.json"] {
        let path = fixture(name);
        let o = run(&["verify", path.to_str().unwrap(), "--json"]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["passed"], true);
        assert!(v["failures"].as_array().unwrap().is_empty());
    }
}

#[test]
fn verify_flags_dependent_family() {
    let path = fixture("dependent.json");
    let o = run(&["verify", path.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let failures: Vec<&str> = v["failures"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(failures.contains(&"family_conditionally_independent"), "{failures:?}");

    let o = run(&["verify", path.to_str().unwrap(), "--csv"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("FAILED family_conditionally_independent"));
}

#[test]
fn verify_single_named_set() {
    let path = fixture("example1.json");
    let o = run(&["verify", path.to_str().unwrap(), "--set", "one", "--csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    // the named set, plus the set attaining the total variation distance
    let names: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(names, ["one", "sup", "one", "sup"], "{out}");

    let o = run(&["verify", path.to_str().unwrap(), "--set", "missing"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn float_backend_agrees() {
    let path = fixture("example1.json");
    let exact = run(&["verify", path.to_str().unwrap(), "--csv"]);
    let float = run(&["verify", path.to_str().unwrap(), "--csv", "--backend", "float"]);
    assert_eq!(code(&float), 0, "{}", stderr(&float));
    let parse = |o: &Output| -> Vec<f64> {
        stdout(o)
            .lines()
            .skip(1)
            .flat_map(|l| {
                let cells: Vec<String> = l.split(',').map(String::from).collect();
                let n = cells.len();
                cells[n - 8..n - 2].iter().map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>()
            })
            .collect()
    };
    let (a, b) = (parse(&exact), parse(&float));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn sweep_outputs() {
    let path = fixture("example1.json");
    let o = run(&["sweep", path.to_str().unwrap(), "--lambdas", "1,1/2", "--csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("lambda,block,tv,sup_h,refined,ratio"));
    assert_eq!(out.lines().count(), 1 + 2 * 2);
    for l in out.lines().skip(1) {
        let c: Vec<f64> = l.split(',').skip(2).map(|x| x.parse().unwrap()).collect();
        assert!(c[0] <= c[1] + 1e-9 && c[0] <= c[2] + 1e-9, "{l}");
    }

    let o = run(&["sweep", path.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 8);

    // λ·p must stay a probability
    assert_eq!(code(&run(&["sweep", path.to_str().unwrap(), "--lambdas", "8"])), 2);
    assert_eq!(code(&run(&["sweep", path.to_str().unwrap(), "--lambdas", "1,x"])), 2);
}

#[test]
fn malformed_inputs_exit_two() {
    let truncated = temp_model("{\n  \"omega\": [\"a\",\n");
    let o = run(&["verify", truncated.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line "), "{}", stderr(&o));

    let bad_weights = temp_model(
        r#"{"omega": ["a", "b"], "weights": ["1/2", "2/3"], "partition": [["a", "b"]], "events": [["a"]]}"#,
    );
    let o = run(&["verify", bad_weights.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("weights"), "{}", stderr(&o));

    let unknown_field = temp_model(
        r#"{"omega": ["a"], "weights": ["1"], "partition": [["a"]], "events": [], "extra": 1}"#,
    );
    assert_eq!(code(&run(&["verify", unknown_field.path().to_str().unwrap()])), 2);

    assert_eq!(code(&run(&["verify", "/nonexistent/model.json"])), 2);
}

#[test]
fn tolerance_and_jmax_flags_are_accepted() {
    let path = fixture("example2.json");
    let o = run(&["verify", path.to_str().unwrap(), "--tolerance", "1e-12", "--jmax", "32"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
