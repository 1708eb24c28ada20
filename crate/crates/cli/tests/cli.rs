//! End-to-end checks of the binary: output formats, file side effects and
//! the exit code contract (0 ok, 1 semantic rejection, 2 bad input,
//! 3 usage).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn cordon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cordon")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn run_fixture(args: &[&str], model: &str) -> Output {
    let path = fixture(model);
    let mut full: Vec<&str> = vec![args[0], path.to_str().unwrap()];
    full.extend(&args[1..]);
    cordon(&full)
}

#[test]
fn analyze_prints_the_solution() {
    let out = run_fixture(&["analyze"], "enc_ctr.xml");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("SATISFIABLE (16 atoms)\n"));
    assert!(text.contains("conf(enc.Key) = true\n"));
    assert!(text.contains("intg(enc.Ctr) = true\n"));
    assert!(text.contains("intg(enc.Cipher) = false\n"));
}

#[test]
fn analyze_reports_contradictions_with_the_core() {
    let dir = tempfile::tempdir().unwrap();
    let annotated = dir.path().join("annotated.xml");
    let out = run_fixture(&["analyze", "--out", annotated.to_str().unwrap()], "dh_conflict.xml");
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.starts_with("CONTRADICTION (7 constraints in minimal core)\n"));
    assert!(text.contains("env:ks.data.intg"));
    assert!(text.contains("env:net.rx.intg"));
    assert!(text.contains("chan:net.rx->unser.v"));
    let written = std::fs::read_to_string(&annotated).unwrap();
    assert!(written.contains("conflict=\"true\""));
}

#[test]
fn check_verdicts_and_exit_codes() {
    let ok = run_fixture(&["check"], "enc_ctr.xml");
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "ok: 1 assertions hold\n");

    let bad = run_fixture(&["check"], "dh_conflict.xml");
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("CONTRADICTION"));
}

#[test]
fn partition_lists_domains_and_policy() {
    let out = run_fixture(&["partition", "--strategy", "branch"], "dh.xml");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("K1: dhpub, dhsec, g, gbr, l, m, mbr, rng, xbr\n"));
    assert!(text.contains("K2: ks\n"));
    assert!(text.contains("K3: net, ser, unser\n"));
    assert!(text.contains("POLICY dhsec.ssec -> ks.data [K1 -> K2] conf=true intg=false\n"));
}

#[test]
fn merge_cap_limits_folding() {
    let capped = run_fixture(
        &["partition", "--strategy", "branch", "--merge-max-weight", "200"],
        "dh.xml",
    );
    assert_eq!(stdout(&capped).lines().filter(|l| l.starts_with('K')).count(), 6);

    let loose = run_fixture(
        &["partition", "--strategy", "branch", "--merge-max-weight", "250"],
        "dh.xml",
    );
    assert_eq!(stdout(&loose).lines().filter(|l| l.starts_with('K')).count(), 3);
}

#[test]
fn metrics_block_is_pinned() {
    let out = run_fixture(&["metrics"], "enc_ctr.xml");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with(
        "process_count=4\nipc_channels=3\ntcb_none=50\ntcb_intg=5\ntcb_conf_intg=160\n"
    ));
    assert!(text.contains("conf_intg             160          215      25.6%"));
    assert!(text.contains("total                 215          215       0.0%"));
}

#[test]
fn custom_weights_change_the_totals_and_warn_on_unknown_kinds() {
    let weights = fixture("weights.txt");
    let out = run_fixture(&["metrics", "--weights", weights.to_str().unwrap()], "enc_ctr.xml");
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("tcb_conf_intg=95\n"));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("keystore"));
}

#[test]
fn run_reports_steps_and_writes_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let out = run_fixture(&["run", "--trace", trace.to_str().unwrap()], "enc_roundtrip.xml");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "ok: 5 steps\n");
    let lines: Vec<String> =
        std::fs::read_to_string(&trace).unwrap().lines().map(String::from).collect();
    assert_eq!(lines.len(), 18);
    assert_eq!(lines[0], "1 iv.Const out ca358758");
    // decrypted output hashes identically to the injected plaintext
    assert!(lines[8].ends_with("8a43014e"));
    assert!(lines[17].ends_with("8a43014e"));
}

#[test]
fn render_colors_nodes_by_guarantee() {
    let out = run_fixture(&["render", "--solved"], "enc_ctr.xml");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("\"enc\" [label=\"enc\\nenc_ctr\", color=purple, style=\"dashed,dotted\"];"));
    assert!(text.contains("\"in\" [label=\"in\\ninternet\", color=gray, style=\"solid\"];"));
    assert!(text.contains("\"iv\" [label=\"iv\\nconst\", color=blue, style=\"dotted\"];"));
    assert!(text.contains("\"ks\" [label=\"ks\\nkeystore\", color=purple, style=\"dashed,dotted\"];"));
    assert!(text.contains("\"us\" [label=\"us\\nuser\", color=red, style=\"dashed\"];"));
}

#[test]
fn render_groups_partitions_into_clusters() {
    let out = run_fixture(&["render", "--partitions", "--strategy", "branch"], "dh.xml");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("subgraph cluster_K1 {"));
    assert!(text.contains("subgraph cluster_K3 {"));
    assert!(!text.contains("cluster_K4"));
}

#[test]
fn input_problems_exit_two() {
    let missing = cordon(&["analyze", "/no/such/model.xml"]);
    assert_eq!(missing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let garbled = dir.path().join("garbled.xml");
    std::fs::write(&garbled, "<model name='x'><bogus/></model>").unwrap();
    let parse = cordon(&["analyze", garbled.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(2));

    let weights = dir.path().join("weights.txt");
    std::fs::write(&weights, "enc_ctr = minus five\n").unwrap();
    let bad_weights = run_fixture(&["metrics", "--weights", weights.to_str().unwrap()], "enc_ctr.xml");
    assert_eq!(bad_weights.status.code(), Some(2));
}

#[test]
fn usage_problems_exit_three_and_help_exits_zero() {
    assert_eq!(cordon(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(cordon(&[]).status.code(), Some(3));
    let bad_strategy = run_fixture(&["partition", "--strategy", "bogus"], "dh.xml");
    assert_eq!(bad_strategy.status.code(), Some(3));

    let help = cordon(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("analyze"));
}
