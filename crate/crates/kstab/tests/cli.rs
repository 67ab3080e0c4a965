use std::fs;
use std::path::PathBuf;

use clap::Parser;
use kstab::archimedean::{FunctionalReport, ToricPotential};
use kstab::cli::{main_with, run, Cli};
use kstab::nonarchimedean::{make_config, NaFunctionalReport, PlConvexFunction};
use kstab::polytope::MomentPolytope;
use kstab::quadrature::Tolerance;
use kstab::rational::{decode, q, qi};
use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kstab-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn report(args: &[&str]) -> Value {
    let cli = Cli::try_parse_from(std::iter::once("kstab").chain(args.iter().copied())).unwrap();
    let out = run(&cli).unwrap();
    let text = serde_json::to_string(&out.json).unwrap();
    serde_json::from_str::<Value>(&text).unwrap()["report"].clone()
}

fn code(args: &[&str]) -> i32 {
    main_with(std::iter::once("kstab").chain(args.iter().copied()))
}

fn value(r: &Value, k: &str) -> f64 {
    r[k]["value"].as_f64().unwrap()
}

#[test]
fn fs_against_itself_is_zero() {
    let r = report(&[
        "functionals",
        "--polytope",
        &data("interval.json"),
        "--potential",
        &data("fs.json"),
    ]);
    for k in ["E", "I", "J", "R", "H", "M"] {
        assert!(value(&r, k).abs() < 1e-12, "{k}: {r}");
    }
}

#[test]
fn shifted_fs_moves_energy_only() {
    let r = report(&[
        "functionals",
        "--polytope",
        &data("interval.json"),
        "--potential",
        &data("fs_shift.json"),
    ]);
    assert!((value(&r, "E") - 0.75).abs() < 1e-10);
    assert!(value(&r, "J").abs() < 1e-10);
}

#[test]
fn kink_values_are_exact() {
    let r = report(&[
        "na",
        "--polytope",
        &data("interval.json"),
        "--pl",
        &data("kink.json"),
        "--delta",
        "1/2",
    ]);
    assert_eq!(decode(&r["E_NA"]).unwrap(), q(-1, 8));
    assert_eq!(decode(&r["J_NA"]).unwrap(), q(1, 8));
    assert_eq!(decode(&r["DF"]).unwrap(), q(1, 4));
    assert_eq!(decode(&r["slack"]).unwrap(), q(3, 16));
    let z = report(&["na", "--polytope", &data("interval.json"), "--pl", &data("zero.json")]);
    for (_, v) in z.as_object().unwrap() {
        assert_eq!(decode(v).unwrap(), qi(0));
    }
}

#[test]
fn exit_codes() {
    let bad = scratch("bad.json");
    fs::write(&bad, "{\"dim\": 1, ").unwrap();
    assert_eq!(
        code(&["na", "--polytope", bad.to_str().unwrap(), "--pl", &data("kink.json")]),
        2
    );
    assert_eq!(
        code(&[
            "na",
            "--polytope",
            &data("interval.json"),
            "--pl",
            &data("concave.json")
        ]),
        3
    );
    assert_eq!(
        code(&[
            "ray",
            "--polytope",
            &data("interval.json"),
            "--pl",
            &data("kink.json"),
            "--functional",
            "Q"
        ]),
        2
    );
    assert_eq!(code(&["snc", "--model", &data("snc_p1.json"), "--tau-max", "2"]), 2);
    assert_eq!(
        code(&["scan", "--polytope", &data("interval.json"), "--breakpoints", "3/2"]),
        2
    );
    let out = scratch("ok.json");
    assert_eq!(
        code(&[
            "na",
            "--polytope",
            &data("interval.json"),
            "--pl",
            &data("kink.json"),
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
}

#[test]
fn ray_slopes_from_the_command_line() {
    let r = report(&[
        "ray",
        "--polytope",
        &data("interval.json"),
        "--pl",
        &data("kink.json"),
        "--functional",
        "E",
    ]);
    assert_eq!(r["pass"], Value::Bool(true));
    let c = scratch("const.json");
    fs::write(
        &c,
        r#"{"cells": [{"vertices": [[0, 1], [1, 1]], "affine": [[0, 1], [1, 3]]}]}"#,
    )
    .unwrap();
    let r = report(&[
        "ray",
        "--polytope",
        &data("interval.json"),
        "--pl",
        c.to_str().unwrap(),
        "--functional",
        "M",
    ]);
    assert!(r["slope"].as_f64().unwrap().abs() < 1e-6, "{r}");
}

#[test]
fn scan_finds_zero_threshold() {
    let r = report(&["scan", "--polytope", &data("interval.json")]);
    assert_eq!(decode(&r["delta"]).unwrap(), qi(0));
    assert_eq!(r["semistable_certified"], Value::Bool(true));
    assert!(decode(&r["witness_j"]).unwrap() > qi(0));
    let cells = r["witness"]["cells"].as_array().unwrap();
    assert!(cells.windows(2).all(|w| w[0]["affine"] == w[1]["affine"]));
}

#[test]
fn snc_exponent_is_one() {
    let r = report(&["snc", "--model", &data("snc_p1.json")]);
    assert!((r["exponent"].as_f64().unwrap() - 1.0).abs() < 0.1);
    assert_eq!(r["pass"], Value::Bool(true));
}

#[test]
fn sl2_slope_is_minus_two() {
    let r = report(&["weights", "--input", &data("sl2.json"), "--lambda", "1"]);
    assert_eq!(decode(&r["f_na"]["f_na"]).unwrap(), qi(-2));
    assert_eq!(r["bounded"]["bounded"], Value::Bool(false));
    let r = report(&["weights", "--input", &data("sl2.json"), "--lambda", "-1"]);
    assert_eq!(decode(&r["f_na"]["f_na"]).unwrap(), qi(2));
    let r = report(&["weights", "--input", &data("sl2_polys.json"), "--trials", "4"]);
    assert_eq!(decode(&r["f_na"]["f_na"]).unwrap(), qi(-2));
    assert!(r["probe"]["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v == &Value::Bool(true)));
}

#[test]
fn reports_round_trip_exactly() {
    let p =
        MomentPolytope::from_json(&serde_json::from_str(&fs::read_to_string(data("interval.json")).unwrap()).unwrap())
            .unwrap();
    let lse: Value = serde_json::from_str(&fs::read_to_string(data("lse.json")).unwrap()).unwrap();
    let u = ToricPotential::from_json(&p, &lse).unwrap();
    let direct = FunctionalReport::compute(&u, &ToricPotential::fs(&p).unwrap(), Tolerance::default()).unwrap();
    let out = scratch("functionals.json");
    let args = [
        "functionals",
        "--polytope",
        &data("interval.json"),
        "--potential",
        &data("lse.json"),
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(code(&args), 0);
    let back: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for (k, e) in direct.entries() {
        assert_eq!(
            back["report"][k]["value"].as_f64().unwrap().to_bits(),
            e.value.to_bits(),
            "{k}"
        );
        assert_eq!(
            back["report"][k]["error"].as_f64().unwrap().to_bits(),
            e.error.to_bits(),
            "{k}"
        );
    }
    assert_eq!(
        back["config"]["tolerance"]["rel"].as_f64(),
        Some(Tolerance::default().rel)
    );

    let f = PlConvexFunction::from_json(
        p.clone(),
        &serde_json::from_str(&fs::read_to_string(data("kink.json")).unwrap()).unwrap(),
    )
    .unwrap();
    let na = NaFunctionalReport::compute(&make_config(&p, &f).unwrap()).unwrap();
    let r = report(&["na", "--polytope", &data("interval.json"), "--pl", &data("kink.json")]);
    for (k, v) in na.to_json().as_object().unwrap() {
        assert_eq!(decode(&r[k]).unwrap(), decode(v).unwrap());
    }
}

#[test]
fn csv_is_deterministic() {
    let runs = |name: &str, args: &[&str]| -> Vec<Vec<u8>> {
        (0..2)
            .map(|i| {
                let path = scratch(&format!("{name}{i}.csv"));
                let mut a: Vec<&str> = args.to_vec();
                let p = path.to_str().unwrap().to_string();
                a.extend(["--csv", &p, "--out", "/dev/null"]);
                assert_eq!(code(&a), 0);
                fs::read(&path).unwrap()
            })
            .collect()
    };
    for (name, args) in [
        (
            "weights",
            vec![
                "weights",
                "--input",
                &data("sl2_polys.json") as &str,
                "--trials",
                "6",
                "--seed",
                "9",
            ],
        ),
        ("snc", vec!["snc", "--model", &data("snc_p1.json"), "--seed", "9"]),
        (
            "ray",
            vec![
                "ray",
                "--polytope",
                &data("interval.json"),
                "--pl",
                &data("kink.json"),
                "--functional",
                "J",
            ],
        ),
    ] {
        let r = runs(name, &args);
        assert!(!r[0].is_empty());
        assert_eq!(r[0], r[1], "{name}");
    }
}
