use std::path::Path;
use std::process::{Command, Output};

use condsum::harness::REPORT_HEADER;

fn condsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condsum")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constant_run_writes_exact_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let o = condsum(&[
        "sum-monotone",
        "--generator",
        "constant:c=1",
        "--n",
        "100",
        "--epsilon",
        "0.5",
        "--seed",
        "3",
        "--trials",
        "5",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), REPORT_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(&r[6], "100.0");
        assert_eq!(&r[8], "0.0");
        assert_eq!(&r[9], "constant-universe");
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("rows.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["bands"][0]["rate"], 1.0);
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, extra) in [&[][..], &[][..], &["--parallel"][..]].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let mut args = vec![
            "sum-unimodal",
            "--generator",
            "strict-unimodal:profile=random",
            "--n",
            "3000",
            "--epsilon",
            "0.6",
            "--seed",
            "11",
            "--trials",
            "4",
            "--format",
            "json",
            "--out",
            path(&out),
        ];
        args.extend_from_slice(extra);
        assert!(condsum(&args).status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn generated_universe_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("u.json");
    let o = condsum(&[
        "generate",
        "--generator",
        "sparse-support:k=40",
        "--n",
        "100",
        "--seed",
        "5",
        "--out",
        path(&file),
    ]);
    assert!(o.status.success());
    let o = condsum(&[
        "support-size",
        "--universe",
        path(&file),
        "--epsilon",
        "0.5",
        "--seed",
        "1",
        "--c-S",
        "0.01",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(",support-size,union,100,0.5,1,"), "{row}");
    assert!(row.contains(",40.0,"), "exact support missing: {row}");
}

#[test]
fn exit_codes() {
    let ok = condsum(&["--help"]);
    assert_eq!(ok.status.code(), Some(0));

    let bad_eps = condsum(&[
        "sum-monotone",
        "--generator",
        "constant:c=1",
        "--n",
        "10",
        "--epsilon",
        "1.5",
        "--seed",
        "1",
    ]);
    assert_eq!(bad_eps.status.code(), Some(1));

    let bad_gen =
        condsum(&["sum-monotone", "--generator", "zigzag", "--n", "10", "--epsilon", "0.5", "--seed", "1"]);
    assert_eq!(bad_gen.status.code(), Some(1));

    let no_seed = condsum(&["sum-monotone", "--generator", "constant:c=1", "--n", "10", "--epsilon", "0.5"]);
    assert_eq!(no_seed.status.code(), Some(1));

    let single_n = condsum(&["audit-queries", "--grid-n", "1000", "--seed", "1"]);
    assert_eq!(single_n.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    let no_file = condsum(&["sum-monotone", "--universe", path(&missing), "--epsilon", "0.5", "--seed", "1"]);
    assert_eq!(no_file.status.code(), Some(2));

    let unwritable = dir.path().join("no/such/dir/out.csv");
    let no_dir = condsum(&[
        "sum-monotone",
        "--generator",
        "constant:c=1",
        "--n",
        "10",
        "--epsilon",
        "0.5",
        "--seed",
        "1",
        "--out",
        path(&unwritable),
    ]);
    assert_eq!(no_dir.status.code(), Some(2));
}

#[test]
fn verify_oracles_reports_json() {
    let o = condsum(&["verify-oracles", "--n", "10", "--samples", "2000", "--seed", "4"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tests"], 400);
    assert_eq!(o.status.code(), Some(if v["passed"] == true { 0 } else { 1 }));
}
