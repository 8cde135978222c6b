use std::path::Path;
use std::process::{Command, Output};

fn lutqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lutqec"))
        .args(args)
        .env("LUTQEC_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn report_sizes_prints_table_rows() {
    let o = lutqec(&["report-sizes", "--distance", "3", "--rounds", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim_end(), "[d=3,m=2]\taddress 8\tentry 13\ttable 416 B\ttotal 832 B");
    let all = lutqec(&["report-sizes"]);
    assert_eq!(stdout(&all).lines().count(), 5);
    assert!(stdout(&all).contains("46 KB/192 KB"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lutqec(&["run", "--distance", "3"]).status.code(), Some(1));
    assert_eq!(lutqec(&["report-sizes", "--bogus"]).status.code(), Some(1));
    assert_eq!(lutqec(&[]).status.code(), Some(1));
    assert_eq!(lutqec(&["compress-lut"]).status.code(), Some(1));
    assert_eq!(lutqec(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    // Dense d=5 tables need the override.
    let o = lutqec(&["run", "--distance", "5", "--rounds", "2", "--pphys", "0.01", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lutqec(&["run", "--distance", "3", "--pphys", "0.7", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lutqec(&["compress-lut", "--in", "/nonexistent/table.lut"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ler.csv");
    let o = lutqec(&[
        "run", "--distance", "3", "--rounds", "2", "--pphys", "0.01", "--pphys", "0.02", "--trials", "3000", "--out",
        arg(&csv),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pts = lutqec::harness::read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(pts.len(), 2);
    assert!(pts.iter().all(|p| p.trials == 3000 && p.decoder_failures == 0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("p,d,m,cycles,trials,logical_errors,ler,stderr,decoder_failures"));
}

#[test]
fn build_compress_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d3m2.lut");
    let o = lutqec(&["build-lut", "--distance", "3", "--rounds", "2", "--out", arg(&out)]);
    assert!(o.status.success());
    let x = dir.path().join("d3m2.x.lut");
    let z = dir.path().join("d3m2.z.lut");
    assert!(x.exists() && z.exists());

    let clut = dir.path().join("d3m2.clut");
    let o = lutqec(&["compress-lut", "--in", arg(&z), "--out", arg(&clut)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("entries 140\tpayload 140 B"), "{}", stdout(&o));
    match lutqec::format::load(&clut).unwrap() {
        lutqec::format::Table::Compressed(c) => assert_eq!(c.stored_entries(), 140),
        other => panic!("unexpected {}", other.kind()),
    }

    // Large configurations default to a weight-bounded table.
    let big = dir.path().join("d4m3.lut");
    let o = lutqec(&["build-lut", "--distance", "4", "--rounds", "3", "--type", "z", "--out", arg(&big)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("sparse"));
    let o = lutqec(&["compress-lut", "--in", arg(&big)]);
    assert!(stdout(&o).contains("entries 27896"), "{}", stdout(&o));
}

#[test]
fn trace_replays_against_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let o = lutqec(&[
        "run", "--distance", "3", "--rounds", "2", "--pphys", "0.02", "--trials", "300", "--trace", arg(&trace),
    ]);
    assert!(o.status.success());
    for backend in ["lut", "clut"] {
        let o = lutqec(&["verify", "--in", arg(&trace), "--rounds", "2", "--backend", backend]);
        let text = stdout(&o);
        assert_eq!(text.lines().next(), Some("trial_index,logical_error,decoder_failures"));
        assert_eq!(text.lines().count(), 301);
        if backend == "lut" {
            assert!(o.status.success());
            assert!(String::from_utf8_lossy(&o.stderr).contains(" 0 mismatches"));
        }
    }
    // Trace needs a single error rate.
    let o = lutqec(&[
        "run", "--pphys", "0.01", "--pphys", "0.02", "--trials", "10", "--trace", arg(&trace),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_over_rounds() {
    let o = lutqec(&[
        "sweep", "--distance", "3", "--rounds", "1", "--rounds", "2", "--pphys", "0.02", "--trials", "2000",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("LER(m=1)/LER(m=2)"));
}
