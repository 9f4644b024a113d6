use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use fredholm_cli::config::{parse_config, ConfigError};
use fredholm_cli::expr::{Atom, Expr, ExprError, Var};
use fredholm_cli::run::Solution;
use fredholm_cli::{normalize, reproduce_example, run_problem, RunError, EXAMPLES};
use proptest::prelude::*;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str) -> String {
    fs::read_to_string(configs().join(name)).unwrap()
}

fn fredholm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fredholm"))
        .args(args)
        .output()
        .unwrap()
}

fn num() -> impl Strategy<Value = f64> {
    prop_oneof![(0u32..1000).prop_map(|n| n as f64 / 8.0), 0.0..1e6f64, 1e-12..1e-3f64]
}

fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        (0u32..9).prop_map(Atom::Monomial),
        Just(Atom::Sin),
        Just(Atom::Cos),
        num().prop_map(Atom::ExpQuad),
        Just(Atom::CauchySqrt),
        (num(), num()).prop_map(|(a, b)| Atom::Indicator(a.min(b), a.max(b))),
        num().prop_map(Atom::Geometric),
        num().prop_map(Atom::Constant),
        num().prop_map(Atom::InvShift),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        num().prop_map(Expr::Num),
        (1u32..6).prop_map(Expr::Param),
        (atom(), prop_oneof![Just(Var::Default), Just(Var::U), Just(Var::V)]).prop_map(|(a, v)| Expr::Atom(a, v)),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(e in expr()) {
        let text = e.to_string();
        let back: Expr = text.parse().map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e);
    }
}

#[test]
fn unknown_function_names_its_column() {
    let err = "s * tan(v)".parse::<Expr>().unwrap_err();
    assert_eq!(
        err,
        ExprError::UnknownFunction {
            column: 5,
            name: "tan".into()
        }
    );
    assert!("".parse::<Expr>().is_err());
    assert!("s +".parse::<Expr>().is_err());
}

#[test]
fn config_errors_carry_line_and_column() {
    let text = load("ex4_4.cfg").replace("g = monomial(2)", "g = tan");
    match parse_config(&text) {
        Err(ConfigError::UnknownFunction { line, column, name }) => {
            assert_eq!(name, "tan");
            assert_eq!(text.lines().nth(line - 1).unwrap().find("tan").unwrap() + 1, column);
        }
        other => panic!("{other:?}"),
    }
    let text = load("ex4_4.cfg").replace("lambda = 0.9", "lambda = nine");
    assert!(matches!(parse_config(&text), Err(ConfigError::Parse { .. })));
    assert!(matches!(
        parse_config(""),
        Err(ConfigError::Parse { line: 1, column: 1, .. })
    ));
    assert!(matches!(
        parse_config("[problem]\nlambda = 1\n"),
        Err(ConfigError::Missing { section: "kernel", .. })
    ));
}

#[test]
fn shipped_configs_have_a_stable_normal_form() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let cfg = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let once = normalize(&text).unwrap();
        assert_eq!(normalize(&once).unwrap(), once, "{}", path.display());
        assert_eq!(parse_config(&once).unwrap(), cfg, "{}", path.display());
    }
}

#[test]
fn tensor_example_runs_clean() {
    let report = run_problem(&parse_config(&load("ex4_4.cfg")).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 11);
    assert!(report.all_pass());
    for r in &report.rows {
        assert!(r.residual < 1e-8);
        assert_eq!(r.bound_checks_passed(), 4);
    }
}

#[test]
fn rank_one_coefficient_example_matches_formula() {
    let report = run_problem(&parse_config(&load("ex4_11.cfg")).unwrap()).unwrap();
    assert!(report.all_pass());
    for r in &report.rows {
        let Some(Solution::Coeff(c)) = &r.solution else {
            panic!("no coefficient solution")
        };
        for (i, got) in c.coeffs().iter().enumerate() {
            let m = (i + 1) as f64;
            let want = (5.0 / 44.0 + 2f64.powf(-m)) * r.s * r.s / 2f64.powf(m);
            assert!((got - want).abs() <= 1e-13, "s={} m={m}: {got} vs {want}", r.s);
        }
    }
}

#[test]
fn violated_hypotheses_stop_the_run_unless_forced() {
    let mut cfg = parse_config(&load("ex4_4_violated.cfg")).unwrap();
    assert!(matches!(run_problem(&cfg), Err(RunError::ConditionViolated(_))));
    cfg.force = true;
    let report = run_problem(&cfg).unwrap();
    assert!(report.rows.iter().all(|r| r.bound_checks.is_empty()));
}

#[test]
fn random_sweeps_repeat_under_a_seed() {
    let cfg = parse_config(&load("ex4_4_random.cfg")).unwrap();
    let a = run_problem(&cfg).unwrap().csv_string();
    let b = run_problem(&cfg).unwrap().csv_string();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 26);
}

#[test]
fn every_example_reproduces() {
    for name in EXAMPLES {
        let t = reproduce_example(name).unwrap();
        assert!(t.all_pass(), "{}", t.render());
        assert!(t.rows.iter().all(|r| r.tolerance.is_finite()));
        assert!(t.render().contains("tol"));
    }
    assert!(reproduce_example("ex9.9").is_err());
}

#[test]
fn binary_exit_codes() {
    let cfg = |n: &str| configs().join(n).to_string_lossy().into_owned();
    assert_eq!(fredholm(&["solve", &cfg("ex4_4.cfg")]).status.code(), Some(0));
    assert_eq!(fredholm(&["check", &cfg("ex4_4.cfg")]).status.code(), Some(0));
    assert_eq!(fredholm(&["solve", &cfg("ex4_4_violated.cfg")]).status.code(), Some(1));
    assert_eq!(fredholm(&["check", &cfg("ex4_4_violated.cfg")]).status.code(), Some(1));
    assert_eq!(
        fredholm(&["solve", "--force", &cfg("ex4_4_violated.cfg")])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(fredholm(&["reproduce", "ex3.3"]).status.code(), Some(0));
    assert_eq!(fredholm(&["reproduce", "nope"]).status.code(), Some(2));
    assert_eq!(fredholm(&["solve", "/definitely/missing.cfg"]).status.code(), Some(2));
    assert_eq!(fredholm(&["frobnicate"]).status.code(), Some(2));

    let dir = std::env::temp_dir().join(format!("fredholm-cli-test-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.cfg");
    fs::write(&bad, "[kernel]\ntype = tensor\ng = tan\n").unwrap();
    let out = fredholm(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tan"));
    fs::remove_dir_all(&dir).ok();
}
