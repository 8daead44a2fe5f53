use std::process::Command;

fn verify(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_verify")).args(args).output().expect("verify runs")
}

#[test]
fn json_report_and_success_exit() {
    let out = verify(&["star", "--p", "3", "--m", "2", "--sample", "20", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["check"], "star");
    assert_eq!(v["summary"]["pass"], 20);
    assert_eq!(v["summary"]["fail"], 0);
    assert_eq!(v["cases"].as_array().unwrap().len(), 20);
    assert_eq!(v["cases"][0]["lhs"], v["cases"][0]["rhs"]);
}

#[test]
fn tsv_report() {
    let out = verify(&["gauss", "--m", "2", "--format", "tsv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 2);
    assert!(text.lines().skip(1).filter(|l| !l.starts_with('#')).all(|l| l.split('\t').count() == 4));
    assert!(text.lines().last().unwrap().starts_with("# gauss: pass="));
}

#[test]
fn invalid_config_exits_with_two() {
    assert_eq!(verify(&["star", "--m", "2", "--pairs", "5:1"]).status.code(), Some(2));
    assert_eq!(verify(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn psi_scale_is_read_in_the_base_field() {
    assert_eq!(verify(&["star", "--psi-scale", "2", "--sample", "20"]).status.code(), Some(0));
    assert_eq!(verify(&["star", "--psi-scale", "3", "--sample", "20"]).status.code(), Some(2));
}
