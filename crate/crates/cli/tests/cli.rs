use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_green-growth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn dl_sphere_row_matches_bfs() {
    let out = stdout(&["sphere", "--group", "dl", "--q", "3", "--n", "2"]);
    assert_eq!(out, "n,bfs,formula\n2,22,22\n");
}

#[test]
fn bitree_phase_threshold() {
    let out = stdout(&["bitree-phase", "--l1", "6", "--l2", "4", "--a1", "0.5"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["kind"], "bitree-phase");
    assert!((v["r0"].as_f64().unwrap() - 1.1001627).abs() < 1e-7);
}

#[test]
fn tree_sphere_sums_are_four() {
    let out = stdout(&["hr", "--group", "tree", "--l", "4", "--r", "1", "--nmax", "10"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,H,tail,rigorous"));
    for line in lines.skip(1) {
        let h: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((h - 4.0).abs() < 1e-9, "{line}");
    }
    assert_eq!(
        out,
        stdout(&["hr", "--group", "tree", "--l", "4", "--r", "1", "--nmax", "10"])
    );
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["sphere", "--group", "tree", "--n", "3"]).status.code(), Some(1));
    assert_eq!(
        run(&["hr", "--group", "tree", "--l", "1", "--r", "1", "--nmax", "3"])
            .status
            .code(),
        Some(1)
    );
    let budget = run(&[
        "sphere", "--group", "free", "--rank", "3", "--n", "30", "--budget", "1000",
    ]);
    assert_eq!(budget.status.code(), Some(2));
}

#[test]
fn config_file_under_flags() {
    let dir = std::env::temp_dir().join(format!("gg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("phase.cfg");
    std::fs::write(&path, "# shared\nl1 = 6\nl2 = 4\na1 = 0.3\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file: serde_json::Value = serde_json::from_str(&stdout(&["bitree-phase", "--config", p])).unwrap();
    assert_eq!(from_file["params"]["alpha1"], 0.3);
    let flagged: serde_json::Value =
        serde_json::from_str(&stdout(&["bitree-phase", "--config", p, "--a1", "0.5"])).unwrap();
    assert_eq!(flagged["params"]["alpha1"], 0.5);
}

#[test]
fn brw_is_reproducible() {
    let args = [
        "brw",
        "--group",
        "tree",
        "--l",
        "4",
        "--runs",
        "4",
        "--generations",
        "30",
        "--seed",
        "7",
    ];
    assert_eq!(stdout(&args), stdout(&args));
}
