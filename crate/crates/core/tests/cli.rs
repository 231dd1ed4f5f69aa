use std::path::PathBuf;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn trace(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("traces")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("pimdram-cli-{}-{name}", std::process::id()))
}

#[test]
fn copy_bench_passes_and_writes_csv() {
    let csv = tmp("copy.csv");
    let o = sim(&["copy", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("=> PASS"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("bench,digest,metric,value,unit,target,tolerance,criterion,status"));
    assert!(text.contains("fpm_copy_ns,90,ns,90,exact,C6,pass"));
    std::fs::remove_file(csv).unwrap();
}

#[test]
fn failing_check_sets_exit_code() {
    // a slower activate breaks the exact 90 ns FPM target
    let o = sim(&["copy", "--set", "t_ras=40"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn errors_exit_2_with_code() {
    let o = sim(&["copy", "--profile", "no-such-profile"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error (1)"));
    let bad = tmp("bad.ctrace");
    std::fs::write(&bad, "R 0x0\nBOGUS 1\n").unwrap();
    let o = sim(&["cache-trace", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    std::fs::remove_file(bad).unwrap();
}

#[test]
fn reports_are_deterministic() {
    let a = sim(&["htap", "--tuples", "1024", "--txns", "50", "--seed", "4"]);
    let b = sim(&["htap", "--tuples", "1024", "--txns", "50", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = sim(&["htap", "--tuples", "1024", "--txns", "50", "--seed", "5"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn rowclone_verbs() {
    let o = sim(&["rowclone", "copy", "--mode", "psm", "--size", "8192"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let fields: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    // two 4 KB rows, each 525 ns, no channel traffic
    assert_eq!((fields[0], fields[1], fields[2], fields[4]), ("psm", "8192", "1050", "0"));
    let o = sim(&["rowclone", "zero", "--size", "4096"]);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("fpm,4096,90,"));
    let o = sim(&["rowclone", "copy", "--mode", "auto", "--size", "5000", "--placement", "random"]);
    assert!(o.status.success());
}

#[test]
fn buddy_and_gsdram_verbs() {
    let o = sim(&["buddy", "throughput", "--banks", "4", "--kind", "and"]);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let gbps: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
    assert!((gbps - 4.0 * 38.92).abs() < 0.1, "{line}");
    let o = sim(&["buddy", "op", "--kind", "nor", "--rows", "4"]);
    assert!(o.status.success());
    let o = sim(&["gsdram", "gather", "--pattern", "7", "--col", "2"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[2, 10, 18, 26, 34, 42, 50, 58]"));
    let o = sim(&["gsdram", "htap", "--tuples", "2048"]);
    assert!(o.status.success());
    let rows: Vec<_> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    assert_eq!(rows, ["256", "2048"]);
    assert_eq!(sim(&["gsdram", "htap", "--fields", "4"]).status.code(), Some(2));
}

#[test]
fn trace_verbs() {
    let o = sim(&["--profile", "ddr3-1600-buddy", "trace", &trace("and_rows.trace")]);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("ns,energy,bus_bytes,commands\n196,25.32,0,4\n"), "{}", stdout(&o));
    let o = sim(&["trace", &trace("fpm_copy.trace")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("read "));
    let o = sim(&["cache-trace", &trace("small.ctrace"), "--policy", "min-dirty"]);
    assert_eq!(
        stdout(&o).lines().next().unwrap(),
        "reads,hits,writebacks,row_hits,dbi_lookups,tag_lookups"
    );
    let o = sim(&["dbi", "--trace", &trace("small.ctrace")]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn lists_profiles() {
    let o = sim(&["profiles"]);
    assert_eq!(stdout(&o), "ddr3-1066-rowclone\nddr3-1600-buddy\nddr3-1600-table\n");
}
