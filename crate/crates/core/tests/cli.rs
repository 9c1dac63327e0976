use std::fs;
use std::process::Command;

fn mqe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mqe"))
}

#[test]
fn generate_then_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let users = dir.path().join("users.txt");
    let st = mqe().args(["generate", "--n", "30", "--L", "0.5", "--seed", "4", "--out"]).arg(&users).status().unwrap();
    assert!(st.success());
    let text = fs::read_to_string(&users).unwrap();
    assert!(text.starts_with("L 5.0000000000000000e-1 lambda0 1.0000000000000000e0 seed 4"));
    assert_eq!(text.lines().count(), 31);

    let (edges, paths, json) = (dir.path().join("e.csv"), dir.path().join("p.csv"), dir.path().join("n.json"));
    let st = mqe()
        .args(["optimize", "--alpha", "0.3", "--users"])
        .arg(&users)
        .arg("--edges")
        .arg(&edges)
        .arg("--paths")
        .arg(&paths)
        .arg("--json")
        .arg(&json)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(fs::read_to_string(&edges).unwrap().starts_with("i,j,d,q\n"));
    assert_eq!(fs::read_to_string(&paths).unwrap().lines().count(), 1 + 30 * 29 / 2);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["n"], 30);
    assert_eq!(doc["seed"], 4);

    // Without outputs the edge list goes to stdout.
    let out = mqe().args(["optimize", "--alpha", "1", "--users"]).arg(&users).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 30 * 29 / 2);
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "L 1 lambda0 1\n0.5 0.5\n2.0 0.1\n").unwrap();
    let out = mqe().args(["optimize", "--alpha", "0.5", "--users"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = mqe().args(["generate", "--n", "1", "--L", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn theory_table_csv() {
    let out = mqe().args(["theory", "--L", "0.1,10", "--n", "1024", "--d-grid", "0.01,1,3"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,n,l_over_lambda,d_over_lambda,m,p,value"));
    assert!(text.contains("alpha_c_step,,,,1,0.6321205588285577,0.5"));
    let q_mst = text.lines().find(|l| l.starts_with("q_mst,1024,0.1,")).unwrap();
    let v: f64 = q_mst.rsplit(',').next().unwrap().parse().unwrap();
    assert!((v - 7.75).abs() < 0.01);
    assert_eq!(text.lines().filter(|l| l.starts_with("alpha_first")).count(), 3);
}

#[test]
fn sweep_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, "alpha = [0.5]\nn = [8]\nl_over_lambda = [1.0]\np = [0.3]\nrealizations = 2\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = mqe().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(out_dir.join("config")).unwrap(), fs::read_to_string(&cfg).unwrap());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("cell,alpha,n,"));

    fs::write(&cfg, "alpha = []\nn = [8]\nl_over_lambda = [1.0]\np = [0.3]\n").unwrap();
    let out = mqe().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o2")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
