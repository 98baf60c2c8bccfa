use std::path::PathBuf;
use std::process::Command;

use quantale_cli::{run, EXIT_EVAL, EXIT_INPUT, EXIT_OK};
use serde_json::{json, Value};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).to_string_lossy().into_owned()
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Out {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn quantale(args: &[&str]) -> Out {
    let mut argv = vec!["quantale".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Out { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn eval(world: &str, prop: &str, extra: &[&str]) -> Out {
    let (w, p) = (fixture(world), fixture(prop));
    quantale(&[&["eval", "--world", &w, "--prop", &p], extra].concat())
}

#[test]
fn eval_naive_and_exact_on_the_red_world() {
    let out = eval("red.world.json", "red_some.prop", &["--engine", "naive"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.json(), json!({"engine": "naive", "probability": 1.0}));

    let out = eval("red.world.json", "red_every.prop", &["--engine", "naive"]);
    assert_eq!(out.json()["probability"], json!(0.0));

    let out = eval("red.world.json", "red_every.prop", &["--engine", "exact"]);
    assert_eq!(out.json(), json!({"engine": "exact", "probability": 0.7, "scheme": "independent"}));
    assert!(out.stderr.is_empty());
}

#[test]
fn eval_csv_output() {
    let out = eval("red.world.json", "red_every.prop", &["--engine", "exact", "--output", "csv"]);
    assert_eq!(out.stdout, "probability,engine,ci_low,ci_high,samples,seed,scheme\n0.7,exact,,,,,independent\n");
}

#[test]
fn exact_is_the_default_engine() {
    let a = eval("picture.world.json", "picture_story.prop", &[]);
    let b = eval("picture.world.json", "picture_story.prop", &["--engine", "exact"]);
    assert_eq!(a.stdout, b.stdout);
    assert!((a.json()["probability"].as_f64().unwrap() - 0.9).abs() < 1e-12);
}

#[test]
fn mc_needs_samples_and_seed() {
    let out = eval("red.world.json", "red_some.prop", &["--engine", "mc"]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("--samples"));
    assert!(out.stdout.is_empty());

    let out = eval("red.world.json", "red_some.prop", &["--engine", "mc", "--samples", "2000", "--seed", "5"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = out.json();
    assert_eq!((v["engine"].clone(), v["samples"].clone(), v["seed"].clone()), (json!("mc"), json!(2000), json!(5)));
    let (lo, hi) = (v["ci"][0].as_f64().unwrap(), v["ci"][1].as_f64().unwrap());
    assert!(lo <= v["probability"].as_f64().unwrap() && v["probability"].as_f64().unwrap() <= hi);
}

#[test]
fn seed_can_come_from_the_environment() {
    let bin = env!("CARGO_BIN_EXE_quantale");
    let args = ["eval", "--world", &fixture("red.world.json"), "--prop", &fixture("red_some.prop")];
    let mc = ["--engine", "mc", "--samples", "500"];
    let from_env = Command::new(bin).args(args).args(mc).env("QUANTALE_SEED", "4").output().unwrap();
    let from_flag = Command::new(bin).args(args).args(mc).args(["--seed", "4"]).env_remove("QUANTALE_SEED").output().unwrap();
    assert_eq!(from_env.status.code(), Some(EXIT_OK));
    assert_eq!(from_env.stdout, from_flag.stdout);
    let missing = Command::new(bin).args(args).args(mc).env_remove("QUANTALE_SEED").output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_INPUT));
}

#[test]
fn scheme_is_ignored_with_a_warning_by_naive() {
    let out = eval("red.world.json", "red_some.prop", &["--engine", "naive", "--scheme", "coupled-threshold"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stderr.starts_with("warning:"), "{}", out.stderr);
    assert_eq!(out.json()["probability"], json!(1.0));
}

#[test]
fn coupled_scheme_changes_exact_results() {
    let out = eval("donkey_half.world.json", "donkey.prop", &["--scheme", "coupled-threshold"]);
    assert_eq!(out.json()["scheme"], json!("coupled-threshold"));
    assert!((out.json()["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn fast_path_on_a_precise_quantifier_is_an_engine_error() {
    let out = eval("red.world.json", "red_every.prop", &["--engine", "generic-fast"]);
    assert_eq!(out.code, EXIT_EVAL);
    assert!(out.stdout.is_empty());
    assert!(out.stderr.contains("`every` at node n2"), "{}", out.stderr);
}

#[test]
fn explosion_cap_is_an_engine_error() {
    let out = eval("donkey_half.world.json", "donkey.prop", &["--cap-configs", "2"]);
    assert_eq!(out.code, EXIT_EVAL, "{}", out.stderr);
    let out = eval("donkey_half.world.json", "donkey.prop", &["--cap-vague-nodes", "0"]);
    assert_eq!(out.code, EXIT_EVAL, "{}", out.stderr);
}

#[test]
fn open_root_is_an_input_error_with_a_location() {
    let out = eval("red.world.json", "open_root.prop", &[]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("free variables {x}"), "{}", out.stderr);
    assert!(out.stderr.contains("open_root.prop:1:1"), "{}", out.stderr);
}

#[test]
fn unreadable_and_malformed_inputs() {
    let out = quantale(&["eval", "--world", "no/such/world.json", "--prop", &fixture("red_some.prop")]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("no/such/world.json"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.world.json");
    std::fs::write(&bad, "{\n  \"pixies\": [\"a\"],\n  \"variables\": [\"x\"],\n  \"joint\": [{\"assign\": {\"x\": \"a\"}, \"prob\": 0.5}],\n  \"predicates\": {}\n}\n").unwrap();
    let out = quantale(&["eval", "--world", bad.to_str().unwrap(), "--prop", &fixture("red_some.prop")]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("joint mass"), "{}", out.stderr);
    assert!(out.stderr.contains("bad.world.json:"), "{}", out.stderr);
}

#[test]
fn usage_errors_exit_with_input_code() {
    assert_eq!(quantale(&["eval", "--bogus"]).code, EXIT_INPUT);
    assert_eq!(quantale(&[]).code, EXIT_INPUT);
    assert_eq!(quantale(&["curve", "--kind", "several"]).code, EXIT_INPUT);
    assert_eq!(quantale(&["--help"]).code, EXIT_OK);
}

#[test]
fn curves() {
    let out = quantale(&["curve", "--kind", "many", "--points", "3"]);
    assert_eq!(out.stdout, "ratio,value\n0,0\n0.5,0.5\n1,1\n");
    let out = quantale(&["curve", "--kind", "few", "--points", "3"]);
    assert_eq!(out.stdout, "ratio,value\n0,1\n0.5,0.5\n1,0\n");
    let out = quantale(&["curve", "--kind", "no", "--points", "3"]);
    assert_eq!(out.stdout, "ratio,value\n0,1\n0.5,0\n1,0\n");
    let out = quantale(&["curve", "--kind", "most", "--points", "3", "--output", "json"]);
    let values: Vec<f64> = out.json()["points"].as_array().unwrap().iter().map(|p| p["value"].as_f64().unwrap()).collect();
    assert_eq!(values, [0.0, 0.0, 1.0]);
    assert_eq!(quantale(&["curve", "--kind", "generic"]).stdout.lines().count(), 12);
}

#[test]
fn rsa_agents() {
    let scenario = fixture("prevalence.scenario.json");
    let rsa = |extra: &[&str]| quantale(&[&["rsa", "--scenario", scenario.as_str()], extra].concat());

    let out = rsa(&["--agent", "l0", "--utterance", "generic"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.json(), json!({"support": ["s0", "s1"], "probs": [0.0, 1.0]}));

    let out = rsa(&["--agent", "s1", "--state", "s1"]);
    assert_eq!(out.json(), json!({"support": ["generic", "silence"], "probs": [1.0, 0.0]}));

    let out = rsa(&["--agent", "l1", "--utterance", "generic"]);
    assert_eq!(out.json()["probs"], json!([0.0, 1.0]));

    let out = rsa(&["--agent", "l1", "--utterance", "generic", "--verbose"]);
    assert_eq!(out.json()["meanings"]["utterances"], json!(["generic", "silence"]));

    assert_eq!(rsa(&["--agent", "l0"]).code, EXIT_INPUT);
    assert_ne!(rsa(&["--agent", "l0", "--utterance", "shout"]).code, EXIT_OK);
}

#[test]
fn rsa_reading_report() {
    let scenario = fixture("donkey_proportion.scenario.json");
    let out = quantale(&["rsa", "--scenario", &scenario, "--agent", "reading", "--utterance", "donkey"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = out.json();
    assert_eq!(v["zero_param_mass"], json!(0.0));
    let pragmatic: Vec<f64> = v["states"].as_array().unwrap().iter().map(|s| s["pragmatic"].as_f64().unwrap()).collect();
    // literal listener: donkey gives (0, 1/3, 2/3), silence 1/3 each; speaker at alpha 4
    let speaker = |l0: f64| l0.powi(4) / (l0.powi(4) + (1.0f64 / 3.0).powi(4));
    let (a, b) = (speaker(1.0 / 3.0), speaker(2.0 / 3.0));
    assert!((pragmatic[1] - a / (a + b)).abs() < 1e-9, "{pragmatic:?}");
    assert!((pragmatic[2] - b / (a + b)).abs() < 1e-9, "{pragmatic:?}");
}

#[test]
fn check_reports_diagnostics_as_json() {
    let out = quantale(&["check", "--world", &fixture("picture.world.json"), "--prop", &fixture("picture_story.prop")]);
    assert_eq!((out.code, out.stdout.trim()), (EXIT_OK, "[]"));

    let out = quantale(&["check", "--world", &fixture("red.world.json"), "--prop", &fixture("open_root.prop")]);
    assert_eq!(out.code, EXIT_INPUT);
    let v = out.json();
    assert_eq!(v[0]["kind"], json!("open-root"));
    assert_eq!((v[0]["line"].clone(), v[0]["column"].clone()), (json!(1), json!(1)));

    let out = quantale(&["check", "--scenario", &fixture("donkey_proportion.scenario.json")]);
    assert_eq!((out.code, out.stdout.trim()), (EXIT_OK, "[]"));
}

#[test]
fn compare_reports_both_engines() {
    let out = quantale(&["compare", "--world", &fixture("dog.world.json"), "--prop", &fixture("dog_barks.prop")]);
    assert_eq!(out.code, EXIT_OK);
    let v = out.json();
    assert!((v["exact"].as_f64().unwrap() - 0.67595).abs() < 1e-12);
    assert!((v["fast"].as_f64().unwrap() - 0.6625).abs() < 1e-12);
}

#[test]
fn thread_count_does_not_change_output() {
    let base = ["--engine", "mc", "--samples", "1000", "--seed", "2"];
    let one = eval("donkey_half.world.json", "donkey.prop", &[&base[..], &["--threads", "1"]].concat());
    let many = eval("donkey_half.world.json", "donkey.prop", &[&base[..], &["--threads", "4"]].concat());
    assert_eq!(one.code, EXIT_OK, "{}", one.stderr);
    assert_eq!(one.stdout, many.stdout);
}
