//! End-to-end CLI session against the built binary: generate, profile,
//! certify, run the gap pipeline, select blocks, and compare reports.

use std::path::Path;
use std::process::Command;

fn ghostbench(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ghostbench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &std::process::Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn full_session() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let out = ghostbench(
        dir,
        &[
            "gen", "--family", "random_regular", "--n", "20,40,80", "--d", "3", "--seed", "7",
            "--out", "boxes.json",
        ],
    );
    assert_ok(&out, "gen");

    let out = ghostbench(dir, &["space", "build", "--in", "boxes.json", "--out", "canon.json"]);
    assert_ok(&out, "space build");

    let out = ghostbench(
        dir,
        &["space", "profile", "--space", "boxes.json", "--radii", "1,2,4"],
    );
    assert_ok(&out, "space profile");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("r,n\n"), "profile output: {text}");
    assert!(text.contains("1,4")); // 3-regular: radius-1 balls have 4 points

    let out = ghostbench(
        dir,
        &["op", "laplacian", "--space", "boxes.json", "--R", "1", "--out", "op.json"],
    );
    assert_ok(&out, "op laplacian");

    let out = ghostbench(dir, &["op", "norm", "--op", "op.json"]);
    assert_ok(&out, "op norm");
    let norm: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(norm > 3.0 && norm <= 6.0, "norm {norm}");

    let out = ghostbench(
        dir,
        &["op", "truncate", "--op", "op.json", "--R", "0", "--out", "diag.json"],
    );
    assert_ok(&out, "op truncate");

    let out = ghostbench(
        dir,
        &[
            "certify", "we", "--box", "boxes.json", "--R", "1", "--S", "1,2", "--out-csv",
            "we.csv",
        ],
    );
    assert_ok(&out, "certify we");
    assert!(dir.join("we.csv").exists());

    let out = ghostbench(dir, &["certify", "onl", "--op", "op.json", "--S", "1,2,4"]);
    assert_ok(&out, "certify onl");
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("operator,s,loc,center"));

    let out = ghostbench(dir, &["certify", "decay", "--op", "op.json"]);
    assert_ok(&out, "certify decay");

    let out = ghostbench(dir, &["certify", "roe", "--op", "op.json", "--radii", "0,1,2"]);
    assert_ok(&out, "certify roe");

    let out = ghostbench(
        dir,
        &[
            "ghost", "gap", "--box", "boxes.json", "--R", "1", "--kappa", "2.0", "--eps",
            "0.01", "--out", "ghost.json", "--report", "decay.csv",
        ],
    );
    assert_ok(&out, "ghost gap");
    assert!(dir.join("ghost.json").exists());
    assert!(dir.join("decay.csv").exists());
    assert!(dir.join("decay.svg").exists());
    let decay = std::fs::read_to_string(dir.join("decay.csv")).unwrap();
    assert!(decay.starts_with("block,size,s_n,gap,g_n,e_n,top_eig,bound_2eps,applicable"));

    let out = ghostbench(
        dir,
        &["ghost", "select", "--ghost", "ghost.json", "--indices", "0,2", "--out", "sel.json"],
    );
    assert_ok(&out, "ghost select");

    // Identical reruns produce identical reports; compare confirms it.
    let out = ghostbench(
        dir,
        &[
            "ghost", "gap", "--box", "boxes.json", "--R", "1", "--kappa", "2.0", "--eps",
            "0.01", "--out", "ghost2.json", "--report", "decay2.csv",
        ],
    );
    assert_ok(&out, "ghost gap rerun");
    assert_eq!(
        std::fs::read(dir.join("decay.csv")).unwrap(),
        std::fs::read(dir.join("decay2.csv")).unwrap()
    );
    let out = ghostbench(dir, &["compare", "decay.csv", "decay2.csv"]);
    assert_ok(&out, "compare");
    assert!(String::from_utf8_lossy(&out.stdout).contains("identical"));
}

#[test]
fn run_config_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("config.json"),
        r#"{
            "generator": {"family": "cycle", "sizes": [8, 16, 32], "seed": 0},
            "pipeline": "certify_only",
            "r": 1.0,
            "s_grid": [1.0, 2.0],
            "svg": true
        }"#,
    )
    .unwrap();
    let out = ghostbench(dir, &["run", "--config", "config.json", "--out-dir", "reports"]);
    assert_ok(&out, "run");
    for name in ["config.json", "space.json", "we.csv", "we.json", "we.svg"] {
        assert!(dir.join("reports").join(name).exists(), "missing {name}");
    }

    // Byte-identical rerun.
    let out = ghostbench(dir, &["run", "--config", "config.json", "--out-dir", "reports2"]);
    assert_ok(&out, "run rerun");
    assert_eq!(
        std::fs::read(dir.join("reports/we.csv")).unwrap(),
        std::fs::read(dir.join("reports2/we.csv")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // Unknown family: precondition failure, exit 2.
    let out = ghostbench(
        dir,
        &["gen", "--family", "moebius", "--n", "4", "--out", "x.json"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // Schema mismatch in compare: exit 2.
    std::fs::write(dir.join("a.csv"), "x,y\n1,2\n").unwrap();
    std::fs::write(dir.join("b.csv"), "x,z\n1,2\n").unwrap();
    let out = ghostbench(dir, &["compare", "a.csv", "b.csv"]);
    assert_eq!(out.status.code(), Some(2));

    // Degree cap exhaustion: numerical non-convergence, exit 3.
    let out = ghostbench(
        dir,
        &["gen", "--family", "cycle", "--n", "8", "--out", "c8.json"],
    );
    assert_ok(&out, "gen cycle");
    let out = ghostbench(
        dir,
        &[
            "ghost", "gap", "--box", "c8.json", "--R", "1", "--kappa", "0.000001", "--eps",
            "0.005", "--out", "g.json",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
