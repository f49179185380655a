use std::fs;
use std::process::{Command, Output};

fn flowcost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowcost"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_builtin() {
    let o = flowcost(&[
        "analyze",
        "--model",
        "resnet50",
        "--layer",
        "conv1",
        "--dataflow",
        "nlr",
        "--bw",
        "12",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("roofline_macs_pc    3.0000"), "{out}");
    assert!(out.contains("utilized_pes        3 "), "{out}");
}

#[test]
fn analyze_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("tiny.txt");
    fs::write(
        &model,
        "a CONV2D 4 2 6 6 3 3 1 1\nb PWCONV 8 4 4 4 1 1 1 1\n",
    )
    .unwrap();
    let df = dir.path().join("os.df");
    fs::write(
        &df,
        "dataflow rows retention=stationary\nlevel\ntemporal K 1 1\ntemporal C 1 1\n\
         spatial Y |R| 1\ntemporal X |S| 1\ntemporal R |R| |R|\ntemporal S |S| |S|\n",
    )
    .unwrap();
    let o = flowcost(&[
        "analyze",
        "--model",
        model.to_str().unwrap(),
        "--layer",
        "a",
        "--dataflow",
        df.to_str().unwrap(),
        "--pes",
        "16",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("dataflow            rows"));
}

#[test]
fn input_errors_exit_1() {
    for args in [
        vec![
            "analyze",
            "--model",
            "resnet50",
            "--layer",
            "missing",
            "--dataflow",
            "nlr",
        ],
        vec![
            "analyze",
            "--model",
            "/no/such/file",
            "--layer",
            "x",
            "--dataflow",
            "nlr",
        ],
        vec![
            "analyze",
            "--model",
            "resnet50",
            "--layer",
            "conv1",
            "--dataflow",
            "bogus",
        ],
        vec![
            "analyze",
            "--model",
            "resnet50",
            "--layer",
            "conv1",
            "--dataflow",
            "nlr",
            "--bw",
            "0",
        ],
        vec!["frobnicate"],
    ] {
        let o = flowcost(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "bad CONV2D 64 3 5 5 7 7 1 1\n").unwrap();
    let o = flowcost(&[
        "analyze",
        "--model",
        bad.to_str().unwrap(),
        "--layer",
        "bad",
        "--dataflow",
        "nlr",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("R exceeds Y"));
}

#[test]
fn dataflows_lists_builtins() {
    let o = flowcost(&["dataflows"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for name in ["NLR", "WS", "ShiDiannao", "Eyeriss", "NVDLA"] {
        assert!(out.contains(name), "{name}");
    }
}

#[test]
fn oracle_check_passes() {
    let o = flowcost(&["oracle-check", "--seeds", "10", "--max-dim", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("50 of 50 cases match"));
}

#[test]
fn sweep_writes_csv_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("net.txt");
    fs::write(
        &model,
        "c1 CONV2D 16 3 18 18 3 3 1 1\npw PWCONV 32 16 16 16 1 1 1 1\nadd ADD 32 32 16 16 1 1 1 1\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let svg = dir.path().join("svg");
    let args = [
        "sweep",
        "--models",
        model.to_str().unwrap(),
        "--bw-list",
        "4,16,64",
        "--out-csv",
        csv.to_str().unwrap(),
        "--out-svg",
        svg.to_str().unwrap(),
        "--per-class",
    ];
    let o = flowcost(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read_to_string(&csv).unwrap();
    let mut lines = first.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,layer,class,dataflow,bw_Bpc,throughput_macs_pc,roofline_macs_pc,avg_bw_Bpc,peak_bw_Bpc,utilized_pes,total_cycles,bound"
    );
    // 3 layers + 3 classes, 5 dataflows, 3 bandwidths.
    assert_eq!(lines.count(), (3 + 3) * 5 * 3);
    for class in ["early", "pointwise", "residual"] {
        assert!(svg.join(format!("net_{class}.svg")).exists(), "{class}");
    }
    assert!(flowcost(&args).status.success());
    assert_eq!(fs::read_to_string(&csv).unwrap(), first);
}

#[test]
fn sweep_rejects_unsorted_bandwidths() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let o = flowcost(&[
        "sweep",
        "--bw-list",
        "8,4",
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
