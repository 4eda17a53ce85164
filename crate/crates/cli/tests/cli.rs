use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperfaith"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hyperfaith-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn parity_csv() -> PathBuf {
    let d = 1.0 / 24.0;
    let (lo, hi) = (0.125 - d, 0.125 + d);
    let rows: Vec<String> = [lo, hi, hi, lo, hi, lo, lo, hi].iter().map(|v| v.to_string()).collect();
    write_temp("parity.csv", &(rows.join("\n") + "\n"))
}

fn abc_abd_csv() -> PathBuf {
    let p = [
        0.022, 0.062, 0.063, 0.103, 0.103, 0.063, 0.062, 0.022, 0.103, 0.063, 0.062, 0.022, 0.022, 0.062, 0.063, 0.103,
    ];
    let mut text = String::from("A,B,C,D,prob\n");
    for (i, v) in p.iter().enumerate() {
        text.push_str(&format!("{},{},{},{},{v}\n", i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1));
    }
    write_temp("abc_abd.csv", &text)
}

fn gamma_rows(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let (s, g) = l.split_once(',').unwrap();
            (s.to_string(), g.parse().unwrap())
        })
        .collect()
}

#[test]
fn gamma_on_parity_table() {
    let t = parity_csv();
    let out = stdout(&["gamma", t.to_str().unwrap()]);
    assert!(out.starts_with("subset,gamma\n"));
    let rows = gamma_rows(&out);
    assert_eq!(rows.len(), 8);
    let abc = rows.iter().find(|(s, _)| s == "ABC").unwrap().1;
    assert!((abc - 4.0 * 2f64.ln()).abs() < 1e-12);
    assert!((abc - 2.77259).abs() < 1e-5);
}

#[test]
fn gamma_on_uniform() {
    let t = write_temp("uniform.csv", "A,B,C,count\n0,0,0,5\n0,0,1,5\n0,1,0,5\n0,1,1,5\n1,0,0,5\n1,0,1,5\n1,1,0,5\n1,1,1,5\n");
    let rows = gamma_rows(&stdout(&["gamma", t.to_str().unwrap()]));
    assert_eq!(rows[0].0, "");
    assert!(rows[1..].iter().all(|(_, g)| g.abs() < 1e-15));
}

#[test]
fn malformed_table_fails_with_line_number() {
    let t = write_temp("bad.csv", "A,B,count\n0,0,1\n0,7,2\n");
    let out = run(&["gamma", t.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    let t = write_temp("short.csv", "1\n2\n3\n");
    assert!(!run(&["gamma", t.to_str().unwrap()]).status.success());
    assert!(!run(&["gamma", "/nonexistent/table.csv"]).status.success());
}

#[test]
fn faithful_outputs() {
    let out = stdout(&["faithful", parity_csv().to_str().unwrap()]);
    assert_eq!(out.trim(), r#"{"vertices":["A","B","C"],"hyperedges":[["A","B","C"]]}"#);
    let t = write_temp("u2.csv", "1\n1\n1\n1\n");
    assert_eq!(stdout(&["faithful", t.to_str().unwrap()]).trim(), r#"{"vertices":["A","B"],"hyperedges":[]}"#);
    let out = stdout(&["faithful", abc_abd_csv().to_str().unwrap()]);
    assert!(out.contains(r#"["A","B","C"],["A","B","D"]"#), "{out}");
}

#[test]
fn fit_to_singletons() {
    let t = write_temp("two.csv", "40\n10\n10\n40\n");
    let out = stdout(&["fit", t.to_str().unwrap(), "--hypergraph", "A,B"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["converged"], true);
    for p in v["fitted"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 0.25).abs() < 1e-12);
    }
    let json = write_temp("h.json", r#"{"vertices":["A","B"],"hyperedges":[["A"],["B"]]}"#);
    let out2 = stdout(&["fit", t.to_str().unwrap(), "--hypergraph", json.to_str().unwrap()]);
    assert_eq!(out, out2);
    assert!(!run(&["fit", t.to_str().unwrap(), "--hypergraph", "AZ"]).status.success());
}

#[test]
fn lambda_star_multipliers() {
    let z = 1.959963984540054;
    for (h, mult) in [(1, 2.0), (2, 2f64.powf(1.5)), (3, 4.0), (4, 2f64.powf(2.5))] {
        let out = stdout(&["lambda-star", "--n", "10000", "--orders", &h.to_string()]);
        let v: f64 = out.trim().parse().unwrap();
        assert!((v / (z / 10.0) - mult).abs() < 1e-9, "h = {h}: {v}");
    }
    assert!(!run(&["lambda-star", "--n", "100", "--orders", "1", "--epsilon", "0.5"]).status.success());
}

#[test]
fn search_trace_format() {
    let t = write_temp("ind.csv", "1000\n1000\n1000\n1000\n1000\n1000\n1000\n1000\n");
    let out = stdout(&["search", t.to_str().unwrap(), "--alpha", "0.05", "--lambda", "0.1"]);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let last = lines.last().unwrap();
    assert_eq!(last["final"]["hyperedges"], serde_json::json!([["A"], ["B"], ["C"]]));
    // every main effect of uniform data is zero
    assert_eq!(last["strong_faithful"], false);
    assert!(last["min_abs_gamma"].as_f64().unwrap() < 1e-12);
    assert!(last["lambda_star"].as_f64().unwrap() > 0.0);
    for step in &lines[..lines.len() - 1] {
        for key in ["step", "model", "tested", "statistic", "p_value", "action"] {
            assert!(step.get(key).is_some(), "missing {key}");
        }
    }
    let sampled = |seed: &str| stdout(&["search", t.to_str().unwrap(), "--sample", "10000", "--seed", seed]);
    assert_eq!(sampled("3"), sampled("3"));
}

#[test]
fn volume_curves() {
    let out = stdout(&["volume", "nu", "--order", "1", "--lambda", "0,0.1"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "lambda,estimate,std_error,n_samples,method");
    assert_eq!(lines[1], "0,0,0,0,closed_form");
    let v: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.0333218).abs() < 1e-6);

    let out = stdout(&["volume", "bound", "--orders", "2", "--lambda", "0.2"]);
    assert!(out.contains("lower_bound"));

    let args = ["volume", "two-by-two", "--measure", "phi3", "--lambda", "0.1,0.2", "--samples", "50000", "--seed", "7"];
    let one = stdout(&[&args[..], &["--threads", "1"]].concat());
    let four = stdout(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(one, four);

    let out = stdout(&["volume", "decomposable", "--hypergraph", "AB,BC,CD", "--lambda", "0.5"]);
    assert!(out.contains("product_formula"));
    let bad = run(&["volume", "decomposable", "--hypergraph", "AB,BC,AC", "--lambda", "0.5"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("variation independent"));

    let out = stdout(&["volume", "projected", "--hypergraph", "AB,C", "--lambda", "0,0.5", "--samples", "2000"]);
    assert!(out.lines().nth(1).unwrap().starts_with("0,0,"));
}

#[test]
fn output_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("hyperfaith-out-{}.csv", std::process::id()));
    let out = run(&["volume", "nu", "--order", "1", "--lambda", "0.5", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().contains("closed_form"));
}

#[test]
fn help_documents_formats() {
    let out = stdout(&["--help"]);
    assert!(out.contains("last variable"));
    assert!(out.contains("hyperedges"));
}
