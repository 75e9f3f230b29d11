use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use exkit_core::interval::parse_decimal;
use exkit_core::rational::parse_rational;
use exkit_core::Rational;
use serde_json::{json, Value};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }

    fn error(&self) -> Value {
        serde_json::from_str(self.stderr.trim()).unwrap_or_else(|e| panic!("{e}: {}", self.stderr))
    }
}

fn exkit_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_exkit"));
    cmd.args(args).env_remove("EXKIT_PRECISION_BITS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn exkit(args: &[&str]) -> Run {
    exkit_env(args, &[])
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rat(v: &Value) -> Rational {
    parse_rational(v.as_str().expect("rational string")).unwrap()
}

fn words(d: usize, n: usize) -> Vec<Vec<usize>> {
    (0..d.pow(n as u32))
        .map(|mut i| {
            let mut w = vec![0; n];
            for slot in w.iter_mut().rev() {
                *slot = i % d;
                i /= d;
            }
            w
        })
        .collect()
}

fn text(w: &[usize]) -> String {
    w.iter().map(|l| char::from_digit(*l as u32 + 1, 10).unwrap()).collect()
}

fn chsh() -> Value {
    let mut v = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    if (a ^ b) == (x & y) {
                        v.push([x + 1, y + 1, a + 1, b + 1]);
                    }
                }
            }
        }
    }
    json!({ "X": 2, "Y": 2, "A": 2, "B": 2, "T": { "1,1": "1/4", "1,2": "1/4", "2,1": "1/4", "2,2": "1/4" }, "V": v })
}

#[test]
fn worked_example_class() {
    let run = exkit(&["classes", "--relation", "markov", "--d", "3", "--n", "8", "--filter-word", "11323122"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let out = run.json();
    let rows = out["classes"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["size"], "12");
    assert_eq!(rows[0]["alpha_tight"], "36/1");

    // Same first letter and same transition counts, by brute force.
    let key = |w: &[usize]| {
        let mut t = [[0; 3]; 3];
        for p in w.windows(2) {
            t[p[0]][p[1]] += 1;
        }
        (w[0], t)
    };
    let target = key(&[0, 0, 2, 1, 2, 0, 1, 1]);
    let expected: BTreeSet<String> = words(3, 8).iter().filter(|w| key(w) == target).map(|w| text(w)).collect();
    let run = exkit(&["size", "--word", "11323122", "--relation", "markov", "--d", "3", "--members"]);
    let out = run.json();
    let members: BTreeSet<String> =
        out["members"].as_array().unwrap().iter().map(|m| m.as_str().unwrap().to_string()).collect();
    assert_eq!(members, expected);
    assert_eq!(out["best"]["arborescences"], "3");
    assert_eq!(out["best"]["size"], "12");
    assert_eq!(out["graph"], json!({ "m": 3, "M": [[1, 1, 1], [0, 1, 1], [1, 1, 0]] }));
}

#[test]
fn size_accepts_type_json() {
    let t = r#"{"kind":"markov","start":1,"t":[[1,1,1],[0,1,1],[1,1,0]]}"#;
    let out = exkit(&["size", "--type", t]).json();
    assert_eq!((out["n"].as_u64(), out["size"].as_str()), (Some(8), Some("12")));
}

#[test]
fn exchangeable_and_lmarkov_tables() {
    let run = exkit(&["classes", "--relation", "exchangeable", "--d", "2", "--n", "3"]);
    let out = run.json();
    assert_eq!(out["classes"].as_array().unwrap().len(), 4);
    assert_eq!(out["total"], "8");
    let run = exkit(&["classes", "--relation", "lmarkov", "--ell", "2", "--d", "2", "--n", "8"]);
    let rows = run.json()["classes"].as_array().unwrap().clone();
    let filtered = exkit(&["classes", "--relation", "lmarkov(2)", "--d", "2", "--n", "8", "--filter-word", "11212211"]);
    let row = &filtered.json()["classes"][0];
    assert_eq!(row["size"], "2");
    assert!(rows.contains(row));
}

#[test]
fn csv_and_pretty_output() {
    let run = exkit(&["classes", "--relation", "exchangeable", "--d", "2", "--n", "3", "--format", "csv"]);
    let lines: Vec<&str> = run.stdout.lines().collect();
    assert_eq!(lines[0], "type,size,representative,alpha_tight,pi");
    assert_eq!(lines.len(), 5);
    let run = exkit(&["beta", "--d", "2", "--n", "2", "--format", "pretty"]);
    assert!(run.stdout.contains("exact"), "{}", run.stdout);
}

/// `P(w)` proportional to a fixed weight of the number of 2s in `w`.
fn exchangeable_input(n: usize) -> Value {
    let weight = |k: usize| (k * 7 + 3) % 5 + 1;
    let all = words(2, n);
    let total: usize = all.iter().map(|w| weight(w.iter().sum())).sum();
    let entries: serde_json::Map<String, Value> =
        all.iter().map(|w| (text(w), json!(format!("{}/{total}", weight(w.iter().sum()))))).collect();
    json!({ "d": 2, "n": n, "entries": entries })
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let iid = write(dir.path(), "iid.json", &json!({ "d": 2, "n": 2, "entries": { "11": "1/9", "12": "2/9", "21": "2/9", "22": "4/9" } }));
    for relation in ["exchangeable", "markov"] {
        let run = exkit(&["certify", path(&iid), "--relation", relation]);
        assert_eq!(run.code, 0, "{relation}: {}", run.stderr);
        assert_eq!(run.json()["verdict"]["status"], "holds");
    }
    let random = write(dir.path(), "random.json", &exchangeable_input(6));
    let run = exkit(&["certify", path(&random), "--relation", "exchangeable"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.json()["class_count"], 7);

    let skew = write(dir.path(), "skew.json", &json!({ "d": 2, "n": 2, "entries": { "12": "3/4", "21": "1/4" } }));
    let run = exkit(&["certify", path(&skew), "--relation", "exchangeable"]);
    assert_eq!(run.code, 4);
    let err = run.error();
    assert_eq!(err["error"], "not_exchangeable");
    assert_eq!(err["witness"], json!(["12", "21"]));

    let broken = write(dir.path(), "broken.json", &json!({ "d": 2, "n": 2, "entries": { "12": "3/4" } }));
    assert_eq!(exkit(&["certify", path(&broken), "--relation", "exchangeable"]).code, 5);
    assert_eq!(exkit(&["certify", path(&iid), "--relation", "exchangeable", "--cap", "2"]).code, 2);
}

#[test]
fn certificates_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", &exchangeable_input(4));
    let run = exkit(&["certify", path(&input), "--relation", "markov"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let cert = run.json();
    let cert_path = write(dir.path(), "cert.json", &cert);
    let check = exkit(&["certify", "--verify", path(&cert_path)]);
    assert_eq!(check.code, 0, "{}", check.stderr);
    assert_eq!(check.json()["verified"], true);

    // Re-ingested certificates still carry outward enclosures.
    for c in cert["classes"].as_array().unwrap() {
        let lo = parse_decimal(c["rhs"]["lo"].as_str().unwrap()).unwrap();
        assert!(rat(&c["value"]) <= lo);
    }

    let mut tampered = cert.clone();
    tampered["classes"][0]["weight"] = json!("1/2");
    let bad = write(dir.path(), "bad.json", &tampered);
    let run = exkit(&["certify", "--verify", path(&bad)]);
    assert_eq!(run.code, 5);
    assert!(run.stderr.contains("weight"), "{}", run.stderr);
}

#[test]
fn precision_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", &exchangeable_input(3));
    let run = exkit_env(&["certify", path(&input), "--relation", "exchangeable"], &[("EXKIT_PRECISION_BITS", "256")]);
    assert_eq!(run.json()["precision"], 256);
    assert_eq!(run.json()["alpha"]["value"]["bits"], 256);
    assert_eq!(exkit(&["--precision", "32", "beta", "--d", "2", "--n", "2"]).code, 5);
}

fn conditional_file() -> Value {
    let uniform = json!({ "11": "1/4", "12": "1/4", "21": "1/4", "22": "1/4" });
    let same = json!({ "11": "1/2", "22": "1/2" });
    json!({
        "A": 2, "X": 2, "n": 2,
        "slices": { "11": uniform, "12": same, "21": same, "22": { "12": "1/2", "21": "1/2" } }
    })
}

#[test]
fn conditional_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "c.json", &conditional_file());
    let run = exkit(&["conditional", path(&file)]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let cert = run.json();
    assert_eq!(cert["alpha_prime"], "1/1");
    assert_eq!(cert["universal"], true);
    let cert_path = write(dir.path(), "cert.json", &cert);
    assert_eq!(exkit(&["certify", "--verify", path(&cert_path)]).code, 0);

    let mut skew = conditional_file();
    skew["slices"]["22"] = json!({ "12": "1" });
    let file = write(dir.path(), "skew.json", &skew);
    let run = exkit(&["conditional", path(&file)]);
    assert_eq!(run.code, 4);
    assert_eq!(run.error()["error"], "not_conditionally_exchangeable");

    // The joint form of an i.i.d. uniform pair, certified directly.
    let entries: serde_json::Map<String, Value> = words(4, 2).iter().map(|w| (text(w), json!("1/16"))).collect();
    let joint = write(dir.path(), "joint.json", &json!({ "d": 4, "factors": [2, 2], "n": 2, "entries": entries }));
    let run = exkit(&["certify", path(&joint), "--conditional"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.json()["class_count"], 10);
}

#[test]
fn markov_counterexample() {
    let run = exkit(&["counterexample", "--max-n", "3"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let out = run.json();
    assert_eq!(out["marginal"], "1211");
    assert_eq!(out["partner"], "1121");
    assert_eq!(out["masses"], json!(["1/1", "0/1"]));
    assert_eq!(out["marginal_is_markov_exchangeable"], false);
    for row in out["exchangeable_sweep"].as_array().unwrap() {
        assert_eq!(row["classes"], row["extreme_marginals"]);
    }
}

#[test]
fn alpha_mp_and_beta() {
    let out = exkit(&["alpha", "--relation", "markov", "--d", "2", "--n", "4", "--n-max", "5"]).json();
    let rows = out["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["degree"] == 9 && r["valid"] == true));

    let out = exkit(&["mp", "--d", "2", "--n", "3"]).json();
    assert_eq!((out["symmetric"].as_bool(), out["doubly_stochastic"].as_bool()), (Some(true), Some(true)));
    let out = exkit(&["mp", "--d", "2", "--n", "2", "--type", "1,1"]).json();
    assert_eq!(out["total_mass"], "1/1");
    assert_eq!(out["cone"]["lambda_inverse"], "5/2");

    let out = exkit(&["beta", "--d", "2", "--n", "2", "--n-max", "4"]).json();
    let rows = out["rows"].as_array().unwrap();
    assert_eq!(rows[0]["exact"], "5/2");
    assert_eq!(rows[0]["maximizers"], json!([[1, 1]]));
    assert_eq!(rows[1]["analytic"], Value::Null);
    assert_eq!(rows[2]["within"], true);
}

/// Exhaustive classical value of CHSH played twice in parallel.
fn chsh_squared() -> Rational {
    let win = |x: usize, y: usize, a: usize, b: usize| (a ^ b) == (x & y);
    let mut best = 0;
    for alice in words(4, 4) {
        for bob in words(4, 4) {
            let mut wins = 0;
            for x in 0..4 {
                for y in 0..4 {
                    let (a, b) = (alice[x], bob[y]);
                    if win(x >> 1, y >> 1, a >> 1, b >> 1) && win(x & 1, y & 1, a & 1, b & 1) {
                        wins += 1;
                    }
                }
            }
            best = best.max(wins);
        }
    }
    Rational::new(best.into(), 16.into())
}

#[test]
fn chsh_values_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(dir.path(), "chsh.json", &chsh());
    let one = exkit(&["game", path(&game)]);
    assert_eq!(one.code, 0, "{}", one.stderr);
    assert_eq!(one.json()["classical_value"], "3/4");

    let run = exkit(&["game", path(&game), "--n", "2", "--emit-strategy"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let out = run.json();
    let repeated = rat(&out["repeated_value"]);
    assert_eq!(repeated, chsh_squared());
    assert!(repeated >= rat(&out["value_power"]));
    let achieved = rat(&out["achieved"]);
    assert_eq!(achieved, Rational::new(9.into(), 16.into()));
    assert!(parse_decimal(out["bound"]["lo"].as_str().unwrap()).unwrap() >= achieved);
    assert_eq!((out["d"].as_u64(), out["degree"].as_u64()), (Some(16), Some(30)));

    let strategy = write(dir.path(), "s.json", &out["symmetrized_strategy"]);
    let again = exkit(&["game", path(&game), "--n", "2", "--strategy", path(&strategy)]).json();
    assert_eq!(again["strategy_source"], "supplied");
    assert_eq!(again["achieved"], out["achieved"]);
    assert_eq!(again["bound"], out["bound"]);

    let seq = exkit(&["game", path(&game), "--n", "2", "--mode", "sequential"]).json();
    assert_eq!(seq["repeated_value"], out["repeated_value"]);
    assert_eq!(seq["relation"], "markov");
}

#[test]
fn trivial_game_is_won() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(dir.path(), "t.json", &json!({ "X": 1, "Y": 1, "A": 1, "B": 1, "T": { "1,1": "1" }, "V": [[1, 1, 1, 1]] }));
    for n in ["1", "3"] {
        let run = exkit(&["game", path(&game), "--n", n]);
        assert_eq!(run.code, 0, "{}", run.stderr);
        let out = run.json();
        for key in ["classical_value", "repeated_value", "strategy_value", "achieved"] {
            assert_eq!(out[key], "1/1", "{key}");
        }
        assert!(parse_decimal(out["bound"]["lo"].as_str().unwrap()).unwrap() >= Rational::from_integer(1.into()));
    }
}

#[test]
fn sequential_kernels_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(dir.path(), "chsh.json", &chsh());
    let cycle = json!({ "tau": { "1,1": { "1,2": "1" }, "1,2": { "2,1": "1" }, "2,1": { "2,2": "1" }, "2,2": { "1,1": "1" } } });
    let kernel = write(dir.path(), "k.json", &cycle);
    let run = exkit(&["game", path(&game), "--n", "2", "--mode", "sequential", "--kernel", path(&kernel)]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.json()["repeated_value"], "1/1");

    let lopsided = json!({ "tau": { "1,1": { "1,1": "1" }, "1,2": { "1,1": "1" }, "2,1": { "1,1": "1" }, "2,2": { "1,1": "1" } } });
    let kernel = write(dir.path(), "bad.json", &lopsided);
    assert_eq!(exkit(&["game", path(&game), "--n", "2", "--mode", "sequential", "--kernel", path(&kernel)]).code, 5);
}

#[test]
fn caps_and_bad_arguments() {
    let run = exkit(&["classes", "--relation", "markov", "--d", "3", "--n", "8", "--cap", "10"]);
    assert_eq!(run.code, 2);
    assert_eq!(run.error()["error"], "cap_exceeded");
    assert_eq!(exkit(&["classes", "--relation", "lmarkov", "--d", "2", "--n", "3"]).code, 5);
    assert_eq!(exkit(&["classes", "--relation", "markov", "--n", "3"]).code, 5);
    assert_eq!(exkit(&["no-such-command"]).code, 5);
    assert_eq!(exkit(&["--help"]).code, 0);
}

#[test]
fn threads_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(dir.path(), "chsh.json", &chsh());
    let a = exkit(&["game", path(&game), "--n", "2", "--threads", "1"]);
    let b = exkit(&["game", path(&game), "--n", "2", "--threads", "4"]);
    assert_eq!(a.stdout, b.stdout);
}
