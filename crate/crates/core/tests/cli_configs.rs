use std::path::PathBuf;

use clap::ValueEnum;
use fraclab::cli::{execute, Command};

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn name(cmd: Command) -> String {
    cmd.to_possible_value().unwrap().get_name().to_string()
}

#[test]
fn every_command_has_a_passing_sample_config() {
    for &cmd in Command::value_variants() {
        let path = config_dir().join(format!("{}.json", name(cmd)));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let out = execute(cmd, &text, None).unwrap();
        assert!(out.pass(), "{}: {:?}", name(cmd), out.summary.checks);
    }
}

#[test]
fn same_seed_same_summary() {
    for cmd in [Command::Lemma21, Command::Garding, Command::ContinuationPlan] {
        let text = std::fs::read_to_string(config_dir().join(format!("{}.json", name(cmd)))).unwrap();
        let a = serde_json::to_string(&execute(cmd, &text, Some(9)).unwrap().summary).unwrap();
        let b = serde_json::to_string(&execute(cmd, &text, Some(9)).unwrap().summary).unwrap();
        assert_eq!(a, b, "{}", name(cmd));
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let err = execute(Command::CaputoCheck, r#"{"alphas": [0.5], "n_steps": 8, "bogus": 1}"#, None).unwrap_err();
    assert!(err.to_string().contains("bogus"), "{err}");
}
