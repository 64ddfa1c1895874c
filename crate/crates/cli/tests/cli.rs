use std::path::Path;
use std::process::{Command, Output};

fn ris_mac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-mac"))
        .args(args)
        .output()
        .expect("spawn ris-mac")
}

fn ok(args: &[&str]) -> String {
    let out = ris_mac(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let j = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[j].clone()).collect()
}

#[test]
fn analyze_sweep_rows() {
    let (h, rows) = table(&ok(&["analyze", "--sweep", "K=10:100:10"]));
    assert_eq!(rows.len(), 10);
    assert_eq!(column(&h, &rows, "users")[9], "100");
    assert!(column(&h, &rows, "converged").iter().all(|c| c == "true"));
}

#[test]
fn analyze_empty_sweep_is_header_only() {
    let text = ok(&["analyze", "--sweep", "K="]);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("point,K,users"));
}

#[test]
fn analytic_throughput_nonincreasing_in_groups() {
    let (h, rows) = table(&ok(&["analyze", "--set", "K=300", "--sweep", "L=1,2,4,8,16"]));
    let thr: Vec<f64> = column(&h, &rows, "throughput").iter().map(|x| x.parse().unwrap()).collect();
    assert!(thr.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{thr:?}");
}

#[test]
fn simulate_rows_per_seed_plus_aggregate() {
    let (h, rows) = table(&ok(&["simulate", "--sweep", "K=5,10,20", "--seeds", "5", "--frames", "4"]));
    assert_eq!(rows.len(), 18);
    let seeds = column(&h, &rows, "seed");
    assert_eq!(seeds.iter().filter(|s| *s == "mean").count(), 3);
    assert_eq!(&seeds[..5], ["1", "2", "3", "4", "5"]);
    let se = column(&h, &rows, "throughput_se");
    assert!(se[0].is_empty() && !se[5].is_empty());
}

#[test]
fn surface_gain_shows_in_snr_column() {
    let args = |mode: &'static str| {
        vec![
            "simulate", "--mode", mode, "--seeds", "1", "--frames", "3", "--set", "K=5", "--set",
            "path_model=equal-paths", "--set", "phase_bits=continuous",
        ]
    };
    let snr = |mode| {
        let (h, rows) = table(&ok(&args(mode)));
        column(&h, &rows, "mean_snr_db")[0].parse::<f64>().unwrap()
    };
    let gain = snr("mdr-scmu") - snr("no-ris");
    assert!((gain - 42.2).abs() < 0.5, "{gain}");
}

#[test]
fn identical_invocations_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        ok(&[
            "simulate", "--sweep", "L=1,2", "--seeds", "2", "--frames", "3", "--out", p.to_str().unwrap(),
        ]);
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn figure_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["figures", "7a", "9b", "--seeds", "2", "--frames", "3", "--out-dir", d]);
    let manifest = std::fs::read_to_string(Path::new(d).join("manifest.csv")).unwrap();
    let (h, rows) = table(&manifest);
    let figs = column(&h, &rows, "figure");
    assert_eq!(figs.iter().filter(|f| *f == "7a").count(), 8);
    assert_eq!(figs.iter().filter(|f| *f == "9b").count(), 5);
    for f in column(&h, &rows, "file") {
        assert!(Path::new(d).join(&f).exists(), "{f}");
    }
    assert!(Path::new(d).join("config.txt").exists());
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    for args in [
        vec!["figures", "7d"],
        vec!["analyze", "--config", "/nonexistent/ris.cfg"],
        vec!["simulate", "--mode", "aloha"],
        vec!["analyze", "--sweep", "K=1:5:0"],
        vec!["simulate", "--set", "P_RIS=10 mW", "--frames", "1"],
    ] {
        let out = ris_mac(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("small.cfg");
    std::fs::write(&p, "# a small case\nusers = 7\nr_max = 5\n").unwrap();
    let (h, rows) = table(&ok(&["analyze", "--config", p.to_str().unwrap()]));
    assert_eq!(column(&h, &rows, "users"), ["7"]);
}
