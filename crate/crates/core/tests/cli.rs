use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BALL: &str = r#"{"schema":1,"norm":{"p":2,"dim":2},"shape":{"type":"ball","center":[0,0],"radius":1}}"#;
const SLIT: &str = r#"{"schema":1,"norm":{"p":2,"dim":2},"shape":{"type":"slit_disc","center":[0,0],"radius":1,"slits":[[0,1]]}}"#;
const BALL3: &str = r#"{"schema":1,"norm":{"p":2,"dim":3},"shape":{"type":"ball","center":[0,0,0],"radius":1}}"#;
const RADIUS: &str = r#"{"norm":{"p":2,"dim":2},"points":[[0.9,0],[0,0]]}"#;

fn qhlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhlab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("errors are JSON on stderr")
}

#[test]
fn dist_on_the_ball() {
    let tmp = tempfile::tempdir().unwrap();
    let ball = write(tmp.path(), "ball.json", BALL);
    let v = stdout_json(&qhlab(&["dist", "--domain", &ball, "--x", "0,0", "--y", "0.9,0"]));
    let value = v["value"].as_f64().unwrap();
    assert!((value - 10f64.ln()).abs() < 1e-2 * 10f64.ln(), "{value}");
    assert_eq!(v["kind"], "quasihyperbolic");

    let v = stdout_json(&qhlab(&["dist", "--domain", &ball, "--x", "0,0", "--y", "-0.5,0", "--inner"]));
    assert_eq!(v["value"].as_f64().unwrap(), 0.5);
}

#[test]
fn outside_point_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let ball = write(tmp.path(), "ball.json", BALL);
    let o = qhlab(&["dist", "--domain", &ball, "--x", "2,0", "--y", "0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let e = stderr_json(&o);
    assert_eq!(e["exit_code"], 2);
    assert!(e["message"].as_str().unwrap().contains("not in the domain"));

    let o = qhlab(&["dist", "--domain", &ball, "--x", "0,0,0", "--y", "0,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qhlab(&["dist", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "usage");
}

#[test]
fn slit_straddling_pair_goes_around_the_tip() {
    let tmp = tempfile::tempdir().unwrap();
    let slit = write(tmp.path(), "slit.json", SLIT);
    let v = stdout_json(&qhlab(&["dist", "--domain", &slit, "--x", "0.5,0.1", "--y", "0.5,-0.1", "--level", "0"]));
    let pts = v["path"]["points"].as_array().expect("a path");
    assert!(pts.len() > 2);
    let leftmost = pts.iter().map(|p| p[0].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    assert!(leftmost < 0.0, "the path must pass left of the slit tip");
}

#[test]
fn theorem1_without_a_mapping_fails_every_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(
        tmp.path(),
        "sc.json",
        &format!(r#"{{"schema":1,"domain":{BALL},"pairs":{{"budget":2,"seed":1}},"level":0,"c0":1.2}}"#),
    );
    let o = qhlab(&["theorem1", &sc]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "all_pairs_failed");
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["completed"], 0);
    assert_eq!(summary["failed"], 2);
}

#[test]
fn theorem1_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(
        tmp.path(),
        "sc.json",
        &format!(
            r#"{{"schema":1,"domain":{BALL},"mapping":{{"type":"identity"}},"pairs":{{"budget":3,"seed":5}},"level":0,"c0":1.2}}"#
        ),
    );
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = qhlab(&["theorem1", &sc, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
        (o.stdout, std::fs::read(out).unwrap())
    };
    let (s1, c1) = run("a.csv");
    let (s2, c2) = run("b.csv");
    assert_eq!(s1, s2);
    assert_eq!(c1, c2);
    let csv = String::from_utf8(c1).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    let summary: Value = serde_json::from_slice(&s1).unwrap();
    assert_eq!(summary["completed"], 3);
    assert_eq!(summary["all_within_b"], true);
}

#[test]
fn plot_marks_the_decomposition() {
    let tmp = tempfile::tempdir().unwrap();
    let ball = write(tmp.path(), "ball.json", BALL);
    let arc = write(tmp.path(), "arc.json", RADIUS);
    let dec_out = tmp.path().join("dec.json");
    let o = qhlab(&["decompose", "--domain", &ball, "--arc", &arc, "--out", dec_out.to_str().unwrap()]);
    assert!(o.status.success());
    let dec: Value = serde_json::from_str(&std::fs::read_to_string(&dec_out).unwrap()).unwrap();
    let m = dec["m"].as_u64().unwrap() as usize;
    assert_eq!(m, 3);

    let args = ["plot", "--domain", &ball, "--arc", &arc, "--decomposition", dec_out.to_str().unwrap()];
    let first = qhlab(&args);
    assert!(first.status.success());
    let svg = String::from_utf8(first.stdout.clone()).unwrap();
    assert_eq!(svg.matches(r#"<circle class="forward-marker""#).count(), m + 2);
    assert!(svg.starts_with("<svg"));
    assert_eq!(qhlab(&args).stdout, first.stdout);
}

#[test]
fn plot_rejects_three_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let ball = write(tmp.path(), "ball3.json", BALL3);
    let o = qhlab(&["plot", "--domain", &ball]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "unsupported");
}

#[test]
fn heinonen_without_pairs_prints_the_header() {
    let o = qhlab(&["heinonen", "--depths", "1", "--pairs", "0", "--level", "0"]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with("depth,"));
}

#[test]
fn constants_for_unit_inputs() {
    let v = stdout_json(&qhlab(&["constants", "--a", "1", "--c-prime", "1", "--c0", "1"]));
    assert_eq!(v["a0"], "104976");
    let o = qhlab(&["constants", "--a", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
