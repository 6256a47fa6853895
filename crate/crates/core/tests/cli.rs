use std::fs;
use std::process::{Command, Output};

fn smd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smd")).args(args).output().expect("run smd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eval_prints_value() {
    let o = smd(&["eval", "--g", "t", "--u", "10", "--x", "1"]);
    assert!(o.status.success());
    let line = stdout(&o).lines().find(|l| l.starts_with("B*(g;x)")).unwrap().to_string();
    let v: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert!((v - 1.1).abs() < 1e-12);
}

#[test]
fn eval_from_rule_and_index() {
    let o = smd(&["eval", "--rule", "n2", "--n", "10", "--x", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("abs_error    1.46137"));
}

#[test]
fn divergent_parameter_is_an_error() {
    let o = smd(&["eval", "--u", "1.5", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("divergent"));
}

#[test]
fn table_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = smd(&["table", "--quiet", "--ns", "10,50", "--xs", "0.5,1.0,2.5", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,n,u_n,operator_value,g_value,abs_error");
    assert_eq!(lines.len(), 7);
    let keys: Vec<(String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    assert_eq!(keys[0].1, "10");
    assert_eq!(keys[1].1, "50");
    assert_eq!(keys[0].0, keys[1].0);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(f[5] >= 0.0 && f[5].is_finite());
        assert_eq!(f[5], (f[3] - f[4]).abs());
    }
}

#[test]
fn several_rules_write_one_file_each() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = smd(&["table", "--quiet", "--rule", "n", "--rule", "n2", "--ns", "10", "--xs", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(dir.path().join("t_1.csv").exists());
    assert!(dir.path().join("t_2.csv").exists());
}

#[test]
fn pretty_table_uses_six_digits() {
    let o = smd(&["table", "--ns", "100", "--xs", "1.0,2.5"]);
    let s = stdout(&o);
    assert!(s.contains("1.46137") && s.contains("226.689"), "{s}");
}

#[test]
fn reference_check_exit_codes() {
    let o = smd(&["table", "--quiet", "--paper-check", "--rule", "n", "--ns", "10,100,1000", "--xs", "0.1,1.0,2.5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 violations"));
    let o = smd(&["table", "--quiet", "--paper-check", "--g", "t2", "--rule", "n", "--ns", "10", "--xs", "1.0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn curve_csv() {
    let o = smd(&["curve", "--us", "15,50", "--J", "15,50", "--points", "6"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().next(), Some("label,u,J,x,value,tail_bound"));
    assert_eq!(s.lines().count(), 1 + 5 * 6);
}

#[test]
fn moments_listing() {
    let o = smd(&["moments", "--m", "2"]);
    assert!(stdout(&o).contains("Omega_2  = 2·x/u + 2/u^2"));
}

#[test]
fn bounds_subcommand() {
    let o = smd(&["bounds", "--kind", "dbv", "--g", "abs1", "--u", "400", "--x", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("holds               true"));
    let o = smd(&["bounds", "--kind", "lip-space", "--u", "10", "--x", "0", "--m1", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    assert!(smd(&["verify"]).status.success());
    let o = smd(&["verify", "--recurrence", "printed"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL  recurrence step m=1"));
}
