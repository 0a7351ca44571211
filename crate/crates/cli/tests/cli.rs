use std::process::{Command, Output};

fn vlcsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlcsync"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = vlcsync(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows of a CSV report as maps from column name to cell.
fn rows(csv: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == name).unwrap().1
}

#[test]
fn list_codes_has_nineteen_entries() {
    let r = rows(&stdout(&["list-codes"]));
    assert_eq!(r.len(), 19);
    assert_eq!(field(&r[4], "code"), "C5");
    assert_eq!(field(&r[4], "codewords"), "01 00 11 100 101");
    assert_eq!(field(&r[18], "symbols"), "26");
}

#[test]
fn analyze_c5_row() {
    let r = rows(&stdout(&["analyze", "--code", "C5", "--ls", "100", "--ebn0", "6", "--eta", "1e-6"]));
    assert_eq!(r.len(), 1);
    let get = |k| field(&r[0], k).parse::<f64>().unwrap();
    assert_eq!(field(&r[0], "d_eta"), "3");
    assert!((get("p_sync") - 0.9187).abs() < 1e-3);
    assert!((get("h_delta_s") - 0.497).abs() < 5e-3);
    assert!((get("mepl") / 1.71023 - 1.0).abs() < 1e-3);
    assert!((get("vepl") / 1.200 - 1.0).abs() < 1e-3);
}

#[test]
fn simulate_c13_parity_rows_match() {
    let r = rows(&stdout(&[
        "simulate", "--code", "C13", "--T", "1", "--T", "2", "--ebn0", "5", "--trials", "200", "--seed", "9",
    ]));
    assert_eq!(r.len(), 2);
    for k in ["fer", "ber", "nld"] {
        assert_eq!(field(&r[0], k), field(&r[1], k), "{k}");
    }
}

#[test]
fn identical_seed_gives_identical_bytes() {
    let dir = std::env::temp_dir().join(format!("vlcsync-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let paths = [dir.join("a.json"), dir.join("b.json")];
    for p in &paths {
        stdout(&[
            "simulate", "--code", "C7", "--T", "3", "--T", "bit/symbol", "--ebn0", "4", "--trials", "100",
            "--format", "json", "--out", p.to_str().unwrap(),
        ]);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert!(a.starts_with(b"{"));
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn entropy_curve_ends_with_limit() {
    let r = rows(&stdout(&["entropy-curve", "--code", "C13", "--tmax", "4"]));
    assert_eq!(r.len(), 5);
    assert_eq!(field(&r[1], "T"), "2");
    assert_eq!(field(&r[1], "h_mod_t"), "0");
    assert_eq!(field(&r[4], "T"), "");
}

#[test]
fn cost_curve_splits_target() {
    let out = stdout(&["cost-curve", "--code", "C7", "--T", "12", "--ebn0", "7", "--trials", "20"]);
    let r = rows(&out);
    assert_eq!((field(&r[0], "T1"), field(&r[0], "T2")), ("3", "4"));
    assert_eq!(field(&r[0], "rho_star"), "0.416667");
}

#[test]
fn config_errors_exit_nonzero() {
    for args in [
        vec!["analyze", "--code", "C99"],
        vec!["analyze", "--code", "C5", "--eta", "0.9"],
        vec!["simulate", "--code", "C5", "--trials", "0"],
        vec!["simulate", "--code", "C5", "--T", "0"],
        vec!["cost-curve", "--T", "9"],
        vec!["cost-curve", "--t1", "2", "--t2", "4"],
        vec!["analyze", "--format", "xml"],
    ] {
        let out = vlcsync(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}
