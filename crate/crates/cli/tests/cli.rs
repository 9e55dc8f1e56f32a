use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn crindex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crindex")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn temp_file(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("crindex-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn cz_of_reference_operator_is_zero() {
    let out = crindex(&["cz", &data("reference_strip.json"), "--nt", "32", "--ns", "8", "--L", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"]["cz"], 0);
    assert_eq!(r["results"]["direct"]["index"], 0);
    assert_eq!(r["results"]["agreement"], true);
    // both grids are reported for the integer
    assert_eq!(r["results"]["spectral_flow"]["grids"].as_array().unwrap().len(), 2);
    assert_eq!(r["results"]["direct"]["gap_ratios"].as_array().unwrap().len(), 2);
    assert_eq!(r["params"]["nt"], 32);
    assert_eq!(r["params"]["L"], 4.0);
}

#[test]
fn reports_are_byte_identical() {
    let args = ["cz", &data("reference_strip.json"), "--nt", "16", "--ns", "8", "--L", "4"];
    let a = crindex(&args);
    let b = crindex(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn disk_with_one_positive_and_two_negative_punctures() {
    let out = crindex(&["index", &data("disk_pmm.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let rep = &r["results"]["report"];
    assert_eq!(rep["x_term"], -1);
    assert_eq!(rep["maslov"], 0);
    assert_eq!(rep["assembled"], -1);
}

#[test]
fn local_models_give_the_six_row_table() {
    let out = crindex(&["local-models", "--L", "5", "--nt", "64"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let rows = r["results"]["models"].as_array().unwrap();
    let got: Vec<(String, u64, u64)> = rows
        .iter()
        .map(|m| (m["type"].as_str().unwrap().to_string(), m["kernel"].as_u64().unwrap(), m["cokernel"].as_u64().unwrap()))
        .collect();
    let want = [("interior+", 1, 0), ("interior-", 0, 1), ("(+,+)", 1, 0), ("(+,-)", 0, 0), ("(-,+)", 0, 0), ("(-,-)", 0, 1)];
    assert_eq!(got.len(), 6);
    for ((t, k, c), (wt, wk, wc)) in got.iter().zip(want) {
        assert_eq!((t.as_str(), *k, *c), (wt, wk, wc));
    }
    for m in rows {
        for g in m["grids"].as_array().unwrap() {
            assert!(g["gap_ratio"].as_f64().unwrap() >= 1e3);
        }
    }
}

#[test]
fn half_rotation_flips_parity() {
    let out = crindex(&["parity", &data("half_rotation_parity.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"]["parity_shift"], 1);
    assert_eq!(r["results"]["law_holds"], true);
}

#[test]
fn strip_index_and_gluing() {
    let out = crindex(&["index-strip", &data("theta_strip.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["index"], 1);
    let out = crindex(&["glue", &data("theta_strip.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"]["glued"]["index"], 2);
    assert_eq!(r["results"]["additive"], true);
}

#[test]
fn solve_reports_small_residual_and_profile_csv() {
    let csv = std::env::temp_dir().join(format!("crindex-solve-{}.csv", std::process::id()));
    let out = crindex(&["solve", &data("solve_reference.json"), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["results"]["relative_residual"].as_f64().unwrap() < 1e-5);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("s,norm\n"));
    assert_eq!(text.lines().count(), 1 + r["results"]["grid"]["cells"].as_u64().unwrap() as usize + 1);
}

#[test]
fn deformation_sweep_and_concentration() {
    let csv = std::env::temp_dir().join(format!("crindex-deform-{}.csv", std::process::id()));
    let out = crindex(&["deform", &data("single_zero.json"), "--sigma", "1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["results"]["sweep"][0]["index"], 1);
    assert_eq!(r["results"]["all_agree"], true);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("sigma,kernel,cokernel,index,count_sum,gap_ratio"));

    let out = crindex(&["concentrate", &data("single_zero.json"), "--sigma", "1,4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let prof = r["results"]["profile"].as_array().unwrap();
    assert_eq!(prof.len(), 2);
    assert!(prof[1]["fraction"].as_f64().unwrap() >= prof[0]["fraction"].as_f64().unwrap() - 0.02);
}

#[test]
fn degenerate_operator_exits_with_4() {
    let f = temp_file(
        "deg.json",
        r#"{"version": 1, "payload": {"asymptotic": {"n": 1, "domain": "strip",
            "coeff": {"kind": "scalar", "theta": 3.141592653589793}}}}"#,
    );
    let out = crindex(&["cz", &f, "--nt", "32"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(report(&out)["error"]["class"], "degenerate");
    let out = crindex(&["spectrum", &f, "--nt", "32"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(report(&out)["results"]["nondegenerate"], false);
}

#[test]
fn validation_errors_exit_with_2() {
    let unknown = temp_file("unknown.json", r#"{"version": 1, "payload": {"asymptotic": {"n": 1, "domain": "strip",
        "coeff": {"kind": "reference", "sigma": 1.0}, "extra": 0}}}"#);
    assert_eq!(crindex(&["spectrum", &unknown]).status.code(), Some(2));
    // a deformation payload cannot feed the cz command
    assert_eq!(crindex(&["cz", &data("single_zero.json")]).status.code(), Some(2));
    assert_eq!(crindex(&["cz"]).status.code(), Some(2));
    assert_eq!(crindex(&["cz", &data("reference_strip.json"), "--refine", "3"]).status.code(), Some(2));
    assert_eq!(crindex(&["cz", &data("reference_strip.json"), "--sigma", "-1"]).status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_crindex"))
            .args(["spectrum", &data("reference_strip.json"), "--nt", "16"])
            .env("CRINDEX_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(run("1").status.code(), Some(0));
    assert_eq!(run("0").status.code(), Some(2));
    assert_eq!(run("many").status.code(), Some(2));
}

#[test]
fn verify_runs_selected_criteria() {
    let out = crindex(&["verify", "--criteria", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["results"]["total"], 1);
    assert_eq!(r["results"]["all_passed"], true);
}
