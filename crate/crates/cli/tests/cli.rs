use std::fs;
use std::path::Path;
use std::process::Command;

use supremal::{
    builtin, envelope_levelsweep, sample, Branch, Certificate, Decision, EnvelopeMethod, EnvelopeResult,
    ExistenceVerdict, GridSpec, PiecewiseAffineFunction, SolveReport, ToleranceConfig,
};
use supremal_cli::commands::Outcome;
use supremal_cli::{SweepRow, VerifyReport};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn supremal(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_supremal"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Parses `text` and checks that re-serializing reproduces it byte for byte.
fn json_round_trip<T: serde::de::DeserializeOwned + serde::Serialize>(text: &str) -> T {
    let value: T = serde_json::from_str(text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&value).unwrap(), text);
    value
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn envelope_of_two_well_vanishes_at_origin_and_round_trips() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(tmp.path(), &["envelope", "--builtin", "example-4-5", "--grid", "65"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let out = tmp.path().join("out");
    let csv = read(&out, "envelope.csv");
    let origin = csv
        .lines()
        .skip(1)
        .find(|l| l.starts_with("0,0,"))
        .expect("node (0,0) present");
    let value: f64 = origin.rsplit(',').next().unwrap().parse().unwrap();
    assert!(value <= 1e-3, "envelope(0,0) = {value}");

    let grid = GridSpec::uniform(2, -2.0, 2.0, 65).unwrap();
    let mut parsed = EnvelopeResult::from_csv(&csv, grid.clone(), EnvelopeMethod::Levelsweep).unwrap();
    parsed.certificates = json_round_trip::<Option<Vec<Certificate>>>(&read(&out, "envelope.certificates.json"));
    let direct = envelope_levelsweep(&builtin("example-4-5").unwrap(), &grid, &ToleranceConfig::default()).unwrap();
    assert_eq!(parsed, direct);
    assert_eq!(parsed.to_csv(), csv);

    let dat = read(&out, "envelope.dat");
    let plotted: Vec<f64> = dat
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(plotted, direct.values);
    assert_eq!(dat.lines().filter(|l| l.is_empty()).count(), 64);
}

#[test]
fn envelope_of_abs_equals_the_field() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(tmp.path(), &["envelope", "--builtin", "abs", "--grid", "101"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = read(&tmp.path().join("out"), "envelope.csv");
    assert_eq!(csv.lines().count(), 102);
    assert_eq!(csv_column(&csv, 1), csv_column(&csv, 2));
}

#[test]
fn envelope_of_double_well_has_a_zero_plateau() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(
        tmp.path(),
        &["envelope", "--builtin", "double-well-1d", "--grid", "401"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = read(&tmp.path().join("out"), "envelope.csv");
    for (x, v) in csv_column(&csv, 0).into_iter().zip(csv_column(&csv, 2)) {
        if x.abs() <= 1.0 {
            assert_eq!(v, 0.0, "at {x}");
        } else {
            assert!(v > 0.0, "at {x}");
        }
    }
}

#[test]
fn decide_two_well_origin_is_not_exists_with_vertical_normal() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(tmp.path(), &["decide", "--builtin", "example-4-5", "--xi0", "0,0"]);
    assert_eq!(r.code, 10, "{}", r.stderr);
    assert!(r.stdout.starts_with("not-exists"), "{}", r.stdout);
    let v: ExistenceVerdict = json_round_trip(&read(&tmp.path().join("out"), "verdict.json"));
    match v.decision {
        Decision::NotExists { nu, .. } => {
            assert!(nu[0].abs() < 1e-12 && (nu[1].abs() - 1.0).abs() < 1e-12, "nu = {nu:?}")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn decide_abs_far_out_is_in_the_level_set() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(tmp.path(), &["decide", "--builtin", "abs", "--xi0", "3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: ExistenceVerdict = json_round_trip(&read(&tmp.path().join("out"), "verdict.json"));
    assert_eq!(
        v.decision,
        Decision::Exists {
            branch: Branch::InLevelSetOfF
        }
    );
}

#[test]
fn decide_double_well_inside_the_plateau_is_interior() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(tmp.path(), &["decide", "--builtin", "double-well-1d", "--xi0", "0.5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: ExistenceVerdict = json_round_trip(&read(&tmp.path().join("out"), "verdict.json"));
    assert_eq!(
        v.decision,
        Decision::Exists {
            branch: Branch::InteriorOfEnvelopeLevelSet
        }
    );
}

#[test]
fn unresolved_depth_exits_unknown() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(tmp.path(), &["decide", "--builtin", "example-4-5", "--xi0", "0,0.3"]);
    assert_eq!(r.code, 11, "{}{}", r.stdout, r.stderr);
    let v: ExistenceVerdict = json_round_trip(&read(&tmp.path().join("out"), "verdict.json"));
    assert!(v.decision.is_unknown());
}

#[test]
fn solve_then_verify_double_well() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(
        tmp.path(),
        &["solve", "--builtin", "double-well-1d", "--xi0", "0", "--pieces", "8"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let out = tmp.path().join("out");
    let mesh_text = read(&out, "mesh.json");
    let mesh = PiecewiseAffineFunction::from_json(&mesh_text).unwrap();
    assert_eq!(mesh.to_json().unwrap(), mesh_text);
    let report: SolveReport = json_round_trip(&read(&out, "solve_report.json"));
    assert_eq!(report.ess_sup_covered, 0.0);
    json_round_trip::<ExistenceVerdict>(&read(&out, "verdict.json"));
    let grads = read(&out, "gradients.csv");
    assert_eq!(grads, mesh.gradient_csv());
    let g = csv_column(&grads, 1);
    assert_eq!(g.len(), mesh.cell_count());
    assert!(g.iter().all(|s| s.abs() == 1.0), "{g:?}");

    let r = supremal(tmp.path(), &["verify", "--builtin", "double-well-1d"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let v: VerifyReport = json_round_trip(&read(&out, "verify.json"));
    assert!(v.pass && v.audit.pass);
    assert_eq!(v.audit.max_value, 0.0);
    assert!(v.jensen.expect("gradients inside the window").holds);
}

#[test]
fn verify_rejects_a_bound_below_the_ess_sup() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        supremal(tmp.path(), &["solve", "--builtin", "square-1d", "--xi0", "0.5"]).code,
        0
    );
    let r = supremal(tmp.path(), &["verify", "--builtin", "square-1d", "--claimed", "0.1"]);
    assert_eq!(r.code, 13, "{}{}", r.stdout, r.stderr);
    let v: VerifyReport = json_round_trip(&read(&tmp.path().join("out"), "verify.json"));
    assert!(!v.pass && (v.audit.max_value - 0.25).abs() < 1e-12);
}

#[test]
fn solve_in_two_dimensions_passes_its_audit() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(
        tmp.path(),
        &[
            "solve",
            "--builtin",
            "four-well",
            "--xi0",
            "0.2,0.1",
            "--residual-tol",
            "0.05",
            "--out",
            "fw",
        ],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report: SolveReport = json_round_trip(&read(&tmp.path().join("fw"), "solve_report.json"));
    assert!(report.residual_fraction <= 0.05 && !report.residual_too_large);
    let r = supremal(tmp.path(), &["verify", "--builtin", "four-well", "--out", "fw"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
}

#[test]
fn solve_after_not_exists_refuses_and_leaves_no_mesh() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        supremal(tmp.path(), &["solve", "--builtin", "example-4-5", "--xi0", "1.5,0"]).code,
        0
    );
    let out = tmp.path().join("out");
    assert!(out.join("mesh.json").exists());
    let r = supremal(tmp.path(), &["solve", "--builtin", "example-4-5", "--xi0", "0,0"]);
    assert_eq!(r.code, 12, "{}", r.stderr);
    for name in ["mesh.json", "solve_report.json", "gradients.csv"] {
        assert!(!out.join(name).exists(), "{name} survived a refusal");
    }
    let v: ExistenceVerdict = json_round_trip(&read(&out, "verdict.json"));
    assert!(v.decision.is_not_exists());
}

#[test]
fn sweep_two_well_separates_the_segment() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(
        tmp.path(),
        &[
            "sweep",
            "--builtin",
            "example-4-5",
            "--range",
            "-1.5:1.5",
            "--steps",
            "31",
        ],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = read(&tmp.path().join("out"), "sweep.csv");
    let rows = SweepRow::from_csv(&text).unwrap();
    assert_eq!(SweepRow::to_csv(&rows, 2), text);
    assert_eq!(rows.len(), 31 * 31);
    let h = 4.0 / 64.0;
    for row in &rows {
        let (s, t) = (row.xi0[0], row.xi0[1]);
        if t == 0.0 && s.abs() < 1.0 - h {
            assert_eq!(row.verdict, "not-exists", "at ({s},{t})");
        }
        if s.abs() > 1.0 + h {
            assert_eq!(row.verdict, "exists", "at ({s},{t})");
        }
        // Off the axis the whole strip |s| < 1 is non-existent as well; the
        // grid only resolves it where t is a grid level.
        if row.verdict == "not-exists" {
            assert!(s.abs() < 1.0, "at ({s},{t})");
        }
    }
}

#[test]
fn sweep_in_one_dimension_never_refutes_existence() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(
        tmp.path(),
        &["sweep", "--builtin", "double-well-1d", "--range=-2:2", "--steps", "41"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = read(&tmp.path().join("out"), "sweep.csv");
    let rows = SweepRow::from_csv(&text).unwrap();
    assert_eq!(SweepRow::to_csv(&rows, 1), text);
    assert!(rows.iter().all(|r| r.verdict == "exists"));
}

#[test]
fn identical_config_and_seed_give_identical_outputs() {
    let tmp = TempDir::new().unwrap();
    let args = |out: &'static str| {
        vec![
            "decide",
            "--builtin",
            "example-4-5",
            "--xi0",
            "0.5,0",
            "--grid",
            "33",
            "--oracle",
            "--seed",
            "7",
            "--out",
            out,
        ]
    };
    assert_eq!(supremal(tmp.path(), &args("a")).code, 10);
    assert_eq!(supremal(tmp.path(), &args("b")).code, 10);
    for name in ["verdict.json", "oracle.json"] {
        assert_eq!(
            read(&tmp.path().join("a"), name),
            read(&tmp.path().join("b"), name),
            "{name}"
        );
    }
    for out in ["c", "d"] {
        let r = supremal(
            tmp.path(),
            &[
                "sweep",
                "--builtin",
                "four-well",
                "--range=-1:1",
                "--steps",
                "9",
                "--out",
                out,
            ],
        );
        assert_eq!(r.code, 0);
    }
    assert_eq!(
        read(&tmp.path().join("c"), "sweep.csv"),
        read(&tmp.path().join("d"), "sweep.csv")
    );
}

#[test]
fn oracle_without_seed_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(
        tmp.path(),
        &["decide", "--builtin", "example-4-5", "--xi0", "0,0", "--oracle"],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("seed"), "{}", r.stderr);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn one_dimensional_oracle_matches_the_relaxed_value() {
    let tmp = TempDir::new().unwrap();
    let r = supremal(
        tmp.path(),
        &[
            "decide",
            "--builtin",
            "double-well-1d",
            "--xi0",
            "0.3",
            "--oracle",
            "--seed",
            "1",
        ],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let out = tmp.path().join("out");
    let oracle: serde_json::Value = serde_json::from_str(&read(&out, "oracle.json")).unwrap();
    let v: ExistenceVerdict = json_round_trip(&read(&out, "verdict.json"));
    assert_eq!(oracle["value"].as_f64().unwrap(), v.relaxed_value);
}

#[test]
fn config_file_drives_a_run_and_flags_override_it() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        r#"
out = "from-config"

[field]
builtin = "example-4-5"

[grid]
nodes = 33
window = [-2.0, 2.0]

[tolerances]
level = 1e-8

[datum]
xi0 = [0.0, 0.0]
"#,
    )
    .unwrap();
    let r = supremal(tmp.path(), &["decide", "--config", "run.toml"]);
    assert_eq!(r.code, 10, "{}", r.stderr);
    let v: ExistenceVerdict = json_round_trip(&read(&tmp.path().join("from-config"), "verdict.json"));
    assert_eq!(v.grid, GridSpec::uniform(2, -2.0, 2.0, 33).unwrap());
    assert_eq!(v.margins.level_tol, 1e-8);

    let r = supremal(
        tmp.path(),
        &["decide", "--config", "run.toml", "--xi0", "1.5,0", "--out", "flags"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: ExistenceVerdict = json_round_trip(&read(&tmp.path().join("flags"), "verdict.json"));
    assert_eq!(v.xi0, vec![1.5, 0.0]);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        "colour = 1\n[field]\nbuiltin = \"abs\"\n",
        "[field]\nbuiltin = \"abs\"\nshape = 2\n",
        "[field]\nbuiltin = \"abs\"\n[tolerances]\ngeometry = 1e-9\n",
        "[field]\nbuiltin = \"abs\"\n[solve.vitali]\nresidual = 0.1\n",
    ];
    for (k, text) in cases.iter().enumerate() {
        let name = format!("bad{k}.toml");
        fs::write(tmp.path().join(&name), text).unwrap();
        let r = supremal(tmp.path(), &["envelope", "--config", &name]);
        assert_eq!(r.code, 2, "case {k}: {}", r.stderr);
        assert!(r.stderr.contains("unknown field"), "case {k}: {}", r.stderr);
    }
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn invalid_inputs_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cases: [&[&str]; 9] = [
        &["decide", "--builtin", "no-such-field", "--xi0", "0"],
        &["decide", "--builtin", "example-4-5", "--xi0", "0"],
        &["decide", "--builtin", "abs"],
        &["envelope", "--builtin", "abs", "--grid", "1"],
        &["envelope", "--builtin", "abs", "--window", "2:-2"],
        &["solve", "--builtin", "abs", "--xi0", "0", "--pieces", "3"],
        &[
            "solve",
            "--builtin",
            "four-well",
            "--xi0",
            "0,0",
            "--residual-tol",
            "1.5",
        ],
        &["sweep", "--builtin", "abs", "--range", "0:1"],
        &["envelope", "--builtin", "abs", "--tol-geom", "-1"],
    ];
    for args in cases {
        let r = supremal(tmp.path(), args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
    }
    assert_eq!(supremal(tmp.path(), &["frobnicate"]).code, 2);
    assert_eq!(
        supremal(tmp.path(), &["envelope", "--builtin", "abs", "--field", "f.json"]).code,
        2
    );
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn computation_failures_exit_three() {
    let tmp = TempDir::new().unwrap();
    let grid = GridSpec::uniform(1, -1.0, 1.0, 21).unwrap();
    let field = sample(&builtin("square-1d").unwrap(), &grid).unwrap();
    fs::write(tmp.path().join("f.json"), serde_json::to_string_pretty(&field).unwrap()).unwrap();
    let r = supremal(tmp.path(), &["decide", "--field", "f.json", "--xi0", "0.25"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = supremal(tmp.path(), &["decide", "--field", "f.json", "--xi0", "5"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let r = supremal(tmp.path(), &["verify", "--builtin", "abs", "--mesh", "missing.json"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn exit_codes_are_a_function_of_the_verdict() {
    let exists = Decision::Exists {
        branch: Branch::InLevelSetOfF,
    };
    let unknown = Decision::Unknown { reason: String::new() };
    assert_eq!(Outcome::of(&exists).code(), 0);
    assert_eq!(Outcome::of(&unknown).code(), 11);
    let codes: Vec<u8> = [
        Outcome::Success,
        Outcome::NotExists,
        Outcome::Unknown,
        Outcome::Refused,
        Outcome::AuditFailed,
    ]
    .iter()
    .map(|o| o.code())
    .collect();
    assert_eq!(codes, vec![0, 10, 11, 12, 13]);
}
