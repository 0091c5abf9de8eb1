use wcsck::{parse_scenario, ExitStatus, HarnessError, Task};
use wcsck_core::forms::TwistPreset;
use wcsck_core::weights::Weight;

const EXPONENTIAL: &str = r#"
seed = 11

[grid]
n = 257

[weights.v]
preset = "exponential"
a = 0.3

[weights.w]
preset = "exponential"
a = 0.3
"#;

#[test]
fn minimal_scenario_fills_defaults() {
    let s = parse_scenario("").unwrap();
    assert_eq!(s.task, None);
    assert_eq!(s.grid.n, 1025);
    assert_eq!(s.grid.half_width, 12.0);
    assert_eq!(s.weights.v, Weight::unit());
    assert_eq!(s.twist, TwistPreset::Gauge);
    assert_eq!(s.tolerances.newton, 1e-8);
    assert_eq!(s.march.t_max, 1.0);
}

#[test]
fn unknown_keys_are_named() {
    for (text, key) in [("foo = 1\n", "foo"), ("[grid]\nn = 257\nfoo = 2\n", "foo"), ("[weights.v]\npreset = \"exponential\"\na = 0.3\nslope = 1\n", "slope")] {
        let err = parse_scenario(text).unwrap_err();
        match &err {
            HarnessError::Parse { key: Some(k), line: Some(_), .. } => assert_eq!(k, key),
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().contains(key));
        assert_eq!(err.exit_status(), ExitStatus::ConfigError);
    }
}

#[test]
fn exponential_preset_is_certified() {
    let s = parse_scenario(EXPONENTIAL).unwrap();
    assert!(s.weight_pair().unwrap().log_concave.is_certified());
    let cosh = parse_scenario("[weights.v]\npreset = \"cosh\"\nk = 2.0\ncenter = 0.5\n").unwrap();
    assert!(!cosh.weight_pair().unwrap().log_concave.is_certified());
}

#[test]
fn hash_ignores_field_order() {
    let reordered = r#"
seed = 11

[weights.w]
a = 0.3
preset = "exponential"

[weights.v]
a = 0.3
preset = "exponential"

[grid]
n = 257
"#;
    let a = parse_scenario(EXPONENTIAL).unwrap();
    let b = parse_scenario(reordered).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let mut c = a.clone();
    c.seed = 12;
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn tasks_parse_in_kebab_case() {
    let s = parse_scenario("task = \"verify-identities\"\n").unwrap();
    assert_eq!(s.task, Some(Task::VerifyIdentities));
    assert!(parse_scenario("task = \"verify_identities\"\n").is_err());
}

#[test]
fn validation_rejects_bad_values() {
    for text in [
        "[grid]\nn = 256\n",
        "[tolerances]\nnewton = 0.0\n",
        "[march]\nt0 = 0.5\nt_max = 0.4\n",
        "[solve]\nt = 0.0\n",
        "[polytope]\nmin = 1.0\nmax = 0.0\n",
        "[weights.v]\npreset = \"constant\"\nc = -1.0\n",
    ] {
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(err, HarnessError::Validation(_)), "{text}: {err:?}");
        assert_eq!(err.exit_status(), ExitStatus::ConfigError);
    }
}

#[test]
fn environment_overrides_tolerances() {
    let mut s = parse_scenario(EXPONENTIAL).unwrap();
    let vars = [("WCSCK_GRADIENT".to_string(), "2e-5".to_string()), ("PATH".to_string(), "/bin".to_string())];
    s.apply_overrides(vars).unwrap();
    assert_eq!(s.tolerances.gradient, 2e-5);
    for (name, value) in [("WCSCK_GRADIENT", "abc"), ("WCSCK_GRADIENT", "-1"), ("WCSCK_NOPE", "1e-3")] {
        let err = s.apply_overrides([(name.to_string(), value.to_string())]).unwrap_err();
        assert!(matches!(err, HarnessError::Override { .. }), "{err:?}");
        assert_eq!(err.exit_status(), ExitStatus::ConfigError);
    }
}

#[test]
fn shipped_scenarios_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            parse_scenario(&std::fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 4);
}
