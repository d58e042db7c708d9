use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tfreg_core::fock::read_binary;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tfreg"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn inner_writes_csv_json_and_summary_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("inner.toml");
    let o = run(&["inner", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv_path = dir.path().join("inner.csv");
    assert_eq!(stdout(&o).trim(), format!("OK inner rows=6 out={}", csv_path.display()));

    let rows = read_csv(&csv_path);
    assert_eq!(rows[0], ["f", "g", "re", "im", "lattice_re", "lattice_im", "closed_re", "closed_im", "rel_diff"]);
    for r in &rows[1..] {
        if r[0] == r[1] {
            assert!(num(&r[2]) > 0.0 && num(&r[3]) == 0.0, "{r:?}");
        }
        if !r[8].is_empty() {
            assert!(num(&r[8]) <= 1e-6, "{r:?}");
        }
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("inner.json")).unwrap()).unwrap();
    assert_eq!(json["provenance"]["command"], "inner");
    assert_eq!(json["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn identical_packets_give_hermitian_table() {
    let dir = tempfile::tempdir().unwrap();
    let toml = r#"
        [[functions]]
        kind = "packet"
        name = "p"
        k = [0.4]
        mu = 0.7
        center = [0.0, 0.0]
        amp = [0.3, 0.9]

        [[functions]]
        kind = "packet"
        name = "q"
        k = [0.4]
        mu = 0.7
        center = [0.0, 0.0]
        amp = [0.3, 0.9]
    "#;
    let cfg = dir.path().join("same.toml");
    fs::write(&cfg, toml).unwrap();
    let o = run(&["inner", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let rows = read_csv(&dir.path().join("inner.csv"));
    let (pp, pq, qq) = (&rows[1], &rows[2], &rows[3]);
    assert_eq!(pp[2], qq[2]);
    assert_eq!(pq[2], pp[2]);
    assert_eq!(num(&pq[3]), 0.0);
}

#[test]
fn empty_registry_and_unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["inner"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 2"));

    let cfg = config("inner.toml");
    let o = run(&["inner", "--config", cfg.to_str().unwrap(), "--set", "quadrature.cutof=3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["inner", "--config", cfg.to_str().unwrap(), "--set", "dimension=2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unresolvable_bump_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("inner.toml");
    // spacing 0.5 puts the grid Nyquist frequency below the shell cutoff
    let o = run(&["inner", "--config", cfg.to_str().unwrap(), "--set", "functions=[{kind=\"bump\",name=\"a\",center=[0.0,0.0],half_widths=[2.0,2.0],spacing=[0.5,0.5]},{kind=\"conj\",name=\"b\",of=\"a\"}]"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = config("inner.toml");
    let o = run(&["inner", "--config", cfg.to_str().unwrap()], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn overrides_change_the_result_and_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("inner.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["inner", "--config", cfg.to_str().unwrap()], &a).status.success());
    assert!(run(&["inner", "--config", cfg.to_str().unwrap(), "--set", "functions.0.mu=0.5"], &b).status.code() == Some(2));
    assert!(run(&["inner", "--config", cfg.to_str().unwrap(), "--set", "mass=1.2"], &b).status.success());
    assert_ne!(fs::read(a.join("inner.csv")).unwrap(), fs::read(b.join("inner.csv")).unwrap());
    let hash = |d: &Path| {
        let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("inner.json")).unwrap()).unwrap();
        j["provenance"]["config_sha256"].as_str().unwrap().to_string()
    };
    assert_ne!(hash(&a), hash(&b));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["inner", "vev", "xi"] {
        let cfg = config(&format!("{name}.toml"));
        let a = dir.path().join(format!("{name}_a"));
        let b = dir.path().join(format!("{name}_b"));
        assert!(run(&[name, "--config", cfg.to_str().unwrap(), "--seed", "7"], &a).status.success());
        assert!(run(&[name, "--config", cfg.to_str().unwrap(), "--seed", "7"], &b).status.success());
        let file = format!("{name}.csv");
        assert_eq!(fs::read(a.join(&file)).unwrap(), fs::read(b.join(&file)).unwrap());
    }
}

#[test]
fn vev_reproduces_the_three_pairing_sum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("vev.toml");
    let o = run(&["vev", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let rows = read_csv(&dir.path().join("vev.csv"));
    let matchings: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "matching").collect();
    assert_eq!(matchings.len(), 3);
    let (re, im): (f64, f64) = matchings.iter().fold((0.0, 0.0), |(a, b), r| (a + num(&r[2]), b + num(&r[3])));
    let get = |kind: &str| {
        let r = rows.iter().find(|r| r[0] == kind).unwrap();
        (num(&r[2]), num(&r[3]))
    };
    let scale = re.hypot(im);
    for kind in ["sum_pairings", "recursive", "fock"] {
        let (a, b) = get(kind);
        assert!((a - re).hypot(b - im) <= 1e-12 * scale, "{kind}: {a} {b} vs {re} {im}");
    }
}

#[test]
fn gns_reports_dimension_10_and_writes_number_operator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("gns.toml");
    let o = run(&["gns", "--config", cfg.to_str().unwrap(), "--set", "gns.write_number_operator=true"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "Fock dimension 10"), "{out}");
    let m = read_binary(fs::File::open(dir.path().join("gns_number.fockmat")).unwrap()).unwrap();
    assert_eq!(m.shape(), (10, 10));
    let trace: f64 = (0..10).map(|i| m[(i, i)].re).sum();
    // 0 + 3 * 1 + 6 * 2
    assert_eq!(trace, 15.0);
}

#[test]
fn envelope_table_has_unit_mass_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("envelope.toml");
    let o = run(&["envelope", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let rows = read_csv(&dir.path().join("envelope.csv"));
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        assert!((num(&r[2]) - 1.0).abs() < 1e-12, "{r:?}");
        assert!(num(&r[4]) > 0.0);
    }
}

#[test]
fn xi_with_past_centres_passes_the_retarded_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("xi.toml");
    let o = run(&["xi", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("xi.csv"));
    let r = rows.iter().find(|r| r[0] == "retarded_residual").expect("residual row");
    assert!(num(&r[2]) <= 1e-10);
    assert!(rows.iter().any(|r| r[0] == "xi" && r[1] == "a+(f)" && num(&r[2]) == 1.0));
}

#[test]
fn sweep_header_and_monotone_loop_scalar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("sweep.toml");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(text.starts_with("mu,observable,width,norm\n"));
    let rows = read_csv(&dir.path().join("sweep.csv"));
    let obs: Vec<f64> = rows[1..].iter().map(|r| num(&r[1])).collect();
    assert_eq!(obs.len(), 8);
    assert!(obs.windows(2).all(|w| w[1] > w[0]), "{obs:?}");

    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--set", "sweep.mu=[0.5, 0.7, 0.6]"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
