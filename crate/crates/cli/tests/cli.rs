use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn circdiff(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circdiff"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).expect("valid JSON")
}

/// Correlated daily log-normal prices from a small LCG, so the test needs no RNG crate.
fn price_csv(n: usize, rho: f64, seed: u64) -> String {
    let mut state = seed;
    let mut uniform = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    let mut normal = || {
        let (u, v) = (uniform(), uniform());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    };
    let (mut x1, mut x2) = (100f64.ln(), 50f64.ln());
    let sd = (1.0f64 / 252.0).sqrt();
    let mut out = String::from("date,price1,price2\n");
    let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    for i in 0..n {
        let date = start + chrono::Days::new(i as u64);
        out.push_str(&format!("{date},{:.6},{:.6}\n", x1.exp(), x2.exp()));
        let (z1, z2) = (normal(), normal());
        x1 += 0.2 * sd * z1;
        x2 += 0.3 * sd * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
    }
    out
}

const CBM: &str = "process = \"cbm\"\nsigma = 1.0\nn = 100\ndt = 0.01\n";

#[test]
fn simulate_writes_a_wrapped_path() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "sim.toml", CBM);
    let o = circdiff(
        dir.path(),
        &["simulate", "--config", "sim.toml", "--seed", "7"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,angle_radians"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, a) = l.split_once(',').unwrap();
            (t.parse().unwrap(), a.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 100);
    assert!(rows
        .iter()
        .all(|&(_, a)| a > -std::f64::consts::PI && a <= std::f64::consts::PI));
    assert!(rows.windows(2).all(|w| w[1].0 > w[0].0));

    let again = circdiff(
        dir.path(),
        &["simulate", "--config", "sim.toml", "--seed", "7"],
    );
    assert_eq!(o.stdout, again.stdout);
    let other = circdiff(
        dir.path(),
        &["simulate", "--config", "sim.toml", "--seed", "8"],
    );
    assert_ne!(o.stdout, other.stdout);
}

#[test]
fn replication_report_columns() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "rep.toml", &format!("{CBM}replications = 6\n"));
    let o = circdiff(
        dir.path(),
        &["simulate", "--config", "rep.toml", "--workers", "1"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let header = text.lines().next().unwrap();
    for col in ["E[λ−λ̂]", "√Var[λ−λ̂]", "E[σ−σ̂]", "√Var[σ−σ̂]", "failures"]
    {
        assert!(
            header.split(',').any(|h| h == col),
            "missing {col} in {header}"
        );
    }
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn degrees_and_radians_give_the_same_fit() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "vm.toml",
        "process = \"vm\"\nmu = 1.0\nlambda = 2.0\nsigma = 1.0\nn = 300\ndt = 0.05\n",
    );
    let rad = circdiff(
        dir.path(),
        &[
            "simulate", "--config", "vm.toml", "--seed", "3", "-o", "rad.csv",
        ],
    );
    assert!(rad.status.success(), "{}", stderr(&rad));
    // mu is read in the --units, so the degree run needs the same drift center in degrees
    write(
        dir.path(),
        "vmdeg.toml",
        &format!(
            "process = \"vm\"\nmu = {}\nlambda = 2.0\nsigma = 1.0\nn = 300\ndt = 0.05\n",
            1f64.to_degrees()
        ),
    );
    let deg = circdiff(
        dir.path(),
        &[
            "--units",
            "degrees",
            "simulate",
            "--config",
            "vmdeg.toml",
            "--seed",
            "3",
            "-o",
            "deg.csv",
        ],
    );
    assert!(deg.status.success(), "{}", stderr(&deg));
    assert!(fs::read_to_string(dir.path().join("deg.csv"))
        .unwrap()
        .starts_with("time,angle_degrees"));

    let fit_rad = circdiff(dir.path(), &["fit-circular", "rad.csv", "--process", "vm"]);
    let fit_deg = circdiff(dir.path(), &["fit-circular", "deg.csv", "--process", "vm"]);
    assert!(
        fit_rad.status.success() && fit_deg.status.success(),
        "{}{}",
        stderr(&fit_rad),
        stderr(&fit_deg)
    );
    let (r, d) = (json(&stdout(&fit_rad)), json(&stdout(&fit_deg)));
    assert_eq!(r["schema"], "circdiff.fit-circular/1");
    assert_eq!(d["units"], "degrees");
    let close =
        |a: &serde_json::Value, b: f64| (a.as_f64().unwrap() - b).abs() < 1e-6 * b.abs().max(1.0);
    assert!(close(&d["sigma_hat"], r["sigma_hat"].as_f64().unwrap()));
    assert!(close(&d["lambda_hat"], r["lambda_hat"].as_f64().unwrap()));
    assert!(close(
        &d["mu_hat"],
        r["mu_hat"].as_f64().unwrap().to_degrees()
    ));
    // recovers the generating model roughly
    assert!((r["sigma_hat"].as_f64().unwrap() - 1.0).abs() < 0.15);
    assert!((r["mu_hat"].as_f64().unwrap() - 1.0).abs() < 0.5);
}

#[test]
fn fit_circular_bootstrap_intervals_contain_the_estimate() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "sim.toml", CBM);
    circdiff(
        dir.path(),
        &[
            "simulate", "--config", "sim.toml", "--seed", "5", "-o", "p.csv",
        ],
    );
    let o = circdiff(
        dir.path(),
        &[
            "fit-circular",
            "p.csv",
            "--process",
            "cbm",
            "--bootstrap",
            "40",
            "--seed",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&stdout(&o));
    let s = v["sigma_hat"].as_f64().unwrap();
    let b = &v["bootstrap"];
    assert_eq!(b["samples"], 40);
    assert!(
        b["sigma"]["lower"].as_f64().unwrap() <= s && s <= b["sigma"]["upper"].as_f64().unwrap()
    );
}

#[test]
fn unit_header_conflicting_with_flag_is_rejected() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "p.csv",
        "time,angle_radians\n0,0.1\n1,0.2\n2,0.4\n3,0.1\n",
    );
    let o = circdiff(
        dir.path(),
        &[
            "--units",
            "degrees",
            "fit-circular",
            "p.csv",
            "--process",
            "cbm",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn constant_series_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.csv",
        "time,angle_radians\n0,1\n1,1\n2,1\n3,1\n",
    );
    let o = circdiff(dir.path(), &["fit-circular", "c.csv", "--process", "cbm"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("quadratic variation"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "neg.toml",
        "process = \"cbm\"\nsigma = -1.0\nn = 10\ndt = 0.01\n",
    );
    write(
        dir.path(),
        "typo.toml",
        "process = \"cbm\"\nsigmaa = 1.0\nn = 10\ndt = 0.01\n",
    );
    for cfg in ["neg.toml", "typo.toml", "missing.toml"] {
        let o = circdiff(dir.path(), &["simulate", "--config", cfg]);
        assert_eq!(o.status.code(), Some(2), "{cfg}: {}", stderr(&o));
    }
    let o = circdiff(dir.path(), &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    write(dir.path(), "p.csv", "time,angle\n0,0.1\n1,0.2\n2,0.4\n");
    let o = circdiff(dir.path(), &["fit-circular", "p.csv"]);
    assert_eq!(o.status.code(), Some(2), "process is required");
}

#[test]
fn failed_replications_exit_4() {
    let dir = TempDir::new().unwrap();
    // increments underflow to zero, so no replication can be fitted
    write(
        dir.path(),
        "tiny.toml",
        "process = \"cbm\"\nsigma = 1e-300\nn = 20\ndt = 0.01\nreplications = 3\n",
    );
    let o = circdiff(dir.path(), &["simulate", "--config", "tiny.toml"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn validate_tpd_single_cell() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "v.toml",
        "k = 16\nm = 50\ntimes = [0.1]\nmus = [0.5]\nparams = [{ sigma = 1.0, kappa = 1.0 }]\n",
    );
    let o = circdiff(dir.path(), &["validate-tpd", "--config", "v.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kappa,lambda,sigma,mu,t,hellinger");
    assert_eq!(lines.len(), 2);
    let h: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!((0.0..1.0).contains(&h));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));

    write(
        dir.path(),
        "both.toml",
        "times = [0.1]\nparams = [{ sigma = 1.0, kappa = 1.0, lambda = 0.5 }]\n",
    );
    let o = circdiff(dir.path(), &["validate-tpd", "--config", "both.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_stochcorr_writes_schema_and_bands() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "px.csv", &price_csv(80, 0.5, 4));
    write(dir.path(), "sc.toml", "max_rounds = 2\n");
    let o = circdiff(
        dir.path(),
        &[
            "fit-stochcorr",
            "px.csv",
            "--config",
            "sc.toml",
            "--bootstrap",
            "4",
            "--seed",
            "2",
            "--bands",
            "bands.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&stdout(&o));
    assert_eq!(v["schema"], "circdiff.fit-stochcorr/1");
    assert_eq!(v["process"], "circular-brownian");
    let rho = v["rho"].as_array().unwrap();
    assert_eq!(rho.len(), 80);
    assert!(rho
        .iter()
        .all(|r| r["rho_hat"].as_f64().unwrap().abs() < 1.0));
    let bands = fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    assert!(bands.starts_with("time,rho_hat,lower,upper"));
    assert_eq!(bands.lines().count(), 81);
    for line in bands.lines().skip(1) {
        let f: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|x| x.parse().unwrap())
            .collect();
        assert!(f[1] <= f[0] + 1e-12 && f[0] <= f[2] + 1e-12, "{line}");
    }
}

#[test]
fn fit_stochcorr_joins_two_files() {
    let dir = TempDir::new().unwrap();
    let joint = price_csv(60, -0.3, 9);
    let (mut a, mut b) = (String::from("date,price\n"), String::from("date,price\n"));
    for (i, line) in joint.lines().skip(1).enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        a.push_str(&format!("{},{}\n", f[0], f[1]));
        // drop one date from the second file
        if i != 30 {
            b.push_str(&format!("{},{}\n", f[0], f[2]));
        }
    }
    write(dir.path(), "a.csv", &a);
    write(dir.path(), "b.csv", &b);
    write(dir.path(), "sc.toml", "max_rounds = 1\n");
    let o = circdiff(
        dir.path(),
        &["fit-stochcorr", "a.csv", "b.csv", "--config", "sc.toml"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&stdout(&o))["n_obs"], 59);
}

#[test]
fn missing_cell_names_the_line() {
    let dir = TempDir::new().unwrap();
    let mut lines: Vec<String> = price_csv(40, 0.5, 1).lines().map(String::from).collect();
    let date = lines[16].split(',').next().unwrap().to_string();
    lines[16] = format!("{date},101.5,");
    write(dir.path(), "bad.csv", &(lines.join("\n") + "\n"));
    let o = circdiff(dir.path(), &["fit-stochcorr", "bad.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 17"), "{}", stderr(&o));
}

#[test]
fn identical_legs_warn_about_the_clamp() {
    let dir = TempDir::new().unwrap();
    let text: String = price_csv(50, 0.0, 3)
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if i == 0 {
                format!("{l}\n")
            } else {
                format!("{},{},{}\n", f[0], f[1], f[1])
            }
        })
        .collect();
    write(dir.path(), "same.csv", &text);
    write(dir.path(), "sc.toml", "max_rounds = 2\n");
    let o = circdiff(
        dir.path(),
        &["fit-stochcorr", "same.csv", "--config", "sc.toml"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("clamp"), "{}", stderr(&o));
    let v = json(&stdout(&o));
    assert!(!v["warnings"].as_array().unwrap().is_empty());
}
