use std::process::{Command, Output};

fn locomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locomp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_cover_reports_sheets() {
    let o = locomp(&["check-cover", "--source", "r6", "--target", "r3", "--map", "mod3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "covering, 2 sheets");
    let o = locomp(&["check-cover", "--source", "r6", "--target", "r3", "--map", "mod2"]);
    assert!(!o.status.success());
    assert!(stdout(&o).starts_with("not a covering"));
}

#[test]
fn treesize_verifies_gtd() {
    let o = locomp(&["treesize", "--variant", "gtd", "--graph", "p5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "out=5 at all vertices; GTD verified");
}

#[test]
fn built_covers_check_out() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cover.graph");
    let f = file.to_str().unwrap();
    let o = locomp(&[
        "build-cover",
        "--kind",
        "reidemeister",
        "--base",
        "k4",
        "--sheets",
        "2",
        "--out",
        f,
    ]);
    assert!(o.status.success());
    let o = locomp(&["check-cover", "--source", f, "--target", "k4", "--map", "file"]);
    assert_eq!(stdout(&o).trim(), "covering, 2 sheets");
    let o = locomp(&[
        "build-cover",
        "--kind",
        "universal",
        "--base",
        "r3",
        "--radius",
        "4",
        "--out",
        f,
    ]);
    assert!(o.status.success());
    let o = locomp(&[
        "check-cover",
        "--source",
        f,
        "--target",
        "r3",
        "--map",
        "file",
        "--center",
        "0",
        "--radius",
        "4",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("quasi-covering of radius 4"));
}

#[test]
fn carto_prints_the_table() {
    let o = locomp(&["carto", "--family", "prime-rings7", "--graph", "r5", "--seed", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let table: Vec<&str> = out.lines().skip_while(|l| !l.starts_with("vertex number")).collect();
    assert_eq!(table.len(), 6);
    let mut numbers: Vec<u32> = table[1..]
        .iter()
        .map(|l| l.split(' ').nth(1).unwrap().parse().unwrap())
        .collect();
    numbers.sort();
    assert_eq!(numbers, [1, 2, 3, 4, 5]);
}

#[test]
fn classify_prints_a_signature() {
    let o = locomp(&[
        "classify",
        "--system",
        "election-universal",
        "--family",
        "prime-rings7",
        "--seeds",
        "3",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("graph"));
    assert!(out.trim_end().ends_with("signature: GTD"));
}

#[test]
fn failures_exit_nonzero() {
    assert!(
        !locomp(&["run", "--system", "nope", "--graph", "r3", "--out", "/dev/null"])
            .status
            .success()
    );
    assert!(!locomp(&["treesize", "--variant", "gtd", "--graph", "missing-graph"])
        .status
        .success());
    // Election on a ring with a tree algorithm cannot elect.
    assert!(
        !locomp(&["elect", "--algorithm", "tree", "--graph", "r4", "--seed", "1"])
            .status
            .success()
    );
}
