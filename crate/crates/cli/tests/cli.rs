//! End-to-end tests of the `empa` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn empa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_empa")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn program(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/programs").join(name)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn assembling_twice_gives_identical_objects() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.obj"), dir.path().join("b.obj"));
    let src = program("sum_sumup.eys");
    for out in [&a, &b] {
        let o = empa(&["asm", p(&src), "--out", p(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    // Re-assembling the emitted object's own round trip is stable too.
    let text = fs::read_to_string(&a).unwrap();
    let image = empa::isa::ObjectImage::parse(&text).unwrap();
    assert_eq!(image.to_text(), text);
}

#[test]
fn undefined_label_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("bad.eys");
    fs::write(&src, "irmovl $1, %eax\njmp Nowhere\n").unwrap();
    let o = empa(&["asm", p(&src)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Nowhere"), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn run_prints_clocks_and_cores() {
    let o = empa(&["run", p(&program("sum_no.eys")), "--veclen", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next(), Some("clocks=82 k=1"));
    assert!(stdout(&o).contains("eax=0x00000003"));
    let o = empa(&["run", p(&program("sum_sumup.eys")), "--veclen", "2"]);
    assert_eq!(stdout(&o).lines().next(), Some("clocks=34 k=3"));
}

#[test]
fn run_accepts_object_files() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("for.obj");
    let o = empa(&["asm", p(&program("sum_for.eys")), "--veclen", "6", "--out", p(&obj)]);
    assert!(o.status.success());
    let o = empa(&["run", p(&obj)]);
    assert_eq!(stdout(&o).lines().next(), Some("clocks=86 k=2"));
}

#[test]
fn trace_file_is_tab_separated_and_fifo_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let tr = dir.path().join("trace.tsv");
    let o = empa(&["run", p(&program("sum_sumup.eys")), "--veclen", "6", "--trace", p(&tr), "--invariants"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&tr).unwrap();
    let mut raised = std::collections::VecDeque::new();
    let mut last_clock = 0u64;
    for line in text.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(f.len(), 4, "{line}");
        let clock: u64 = f[0].parse().unwrap();
        assert!(clock >= last_clock);
        last_clock = clock;
        match f[2] {
            "meta" => raised.push_back(f[1].to_string()),
            "sv-op" => assert_eq!(raised.pop_front().as_deref(), Some(f[1])),
            _ => {}
        }
    }
    assert_eq!(text.lines().last().unwrap().split('\t').nth(2), Some("finish"));
    assert_eq!(last_clock, 38);
}

#[test]
fn bench_check_passes_with_shipped_timing() {
    let o = empa(&["bench", "--check"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn bench_csv_has_twelve_rows() {
    let o = empa(&["bench", "--format", "csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("length,mode,clocks,k,S,S_over_k,alpha_eff"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(r.len(), 7);
        for cell in &r[4..] {
            cell.parse::<f64>().unwrap();
        }
    }
    assert_eq!(rows[1], ["1", "FOR", "31", "2", "1.68", "0.84", "0.81"]);
}

#[test]
fn perturbed_timing_fails_the_check_with_named_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let timing = dir.path().join("slow.timing");
    fs::write(&timing, "mrmovl = 7\n").unwrap();
    let o = empa(&["bench", "--check", "--timing", p(&timing)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("length 1 NO clocks: expected 52, got 53"), "{err}");
    assert!(err.contains("length 6 SUMUP clocks"), "{err}");
}

#[test]
fn bad_timing_file_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let timing = dir.path().join("bad.timing");
    fs::write(&timing, "opl = 4\nwarp = 9\n").unwrap();
    let o = empa(&["bench", "--timing", p(&timing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn formats_carry_the_same_numbers() {
    let cells = |fmt: &str| -> Vec<String> {
        let o = empa(&["bench", "--format", fmt]);
        stdout(&o)
            .split(|c: char| c == ',' || c == '|' || c.is_whitespace())
            .filter(|t| t.parse::<f64>().is_ok())
            .map(str::to_string)
            .collect()
    };
    let csv = cells("csv");
    assert_eq!(csv.len(), 12 * 6);
    assert_eq!(cells("markdown"), csv);
    assert_eq!(cells("plain"), csv);
}

#[test]
fn sweep_emits_requested_modes() {
    let o = empa(&["sweep", "--lengths", "1..6", "--modes", "FOR,SUMUP"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 12);
    assert!(text.contains("\n6,SUMUP,38,7,5.32,0.76,0.95\n"));
    assert!(text.contains("\n5,FOR,75,2,2.29,1.15,1.13\n"), "{text}");
}

#[test]
fn empty_length_list_is_a_usage_error() {
    for arg in ["", ","] {
        let o = empa(&["sweep", "--lengths", arg]);
        assert_eq!(o.status.code(), Some(2), "{arg:?}");
    }
    let o = empa(&["run", "x.eys", "--pool", "65"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn faults_name_core_and_pc() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("f.eys");
    fs::write(&src, "QCreate C\nQWait\nhalt\nC: halt\n").unwrap();
    let o = empa(&["run", p(&src)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("core 1 at pc 0x0007"), "{}", stderr(&o));
}

#[test]
fn bench_output_and_traces_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for i in 0..2 {
        let tr = dir.path().join(format!("t{i}.tsv"));
        let o = empa(&["bench", "--format", "csv", "--trace", p(&tr)]);
        assert!(o.status.success());
        outs.push((o.stdout, fs::read(&tr).unwrap()));
    }
    assert_eq!(outs[0], outs[1]);
    assert!(!outs[0].1.is_empty());
}
