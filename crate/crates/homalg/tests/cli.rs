use std::path::PathBuf;
use std::process::Command;

use homalg::cli::workspace::{parse_workspace, serialize_workspace};

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn homalg(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_homalg")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn tor_of_z2_with_itself() {
    let ws = data("basic.cl");
    let (code, out, _) = homalg(&["--workspace", &ws, "--emit", "machine", "tor", "--a", "M", "--b", "M", "--max-degree", "2"]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let results = v["results"].as_array().unwrap();
    let vals: Vec<&str> = results.iter().map(|r| r["value"].as_str().unwrap()).collect();
    assert!(vals[0].starts_with("Z/2 ") && vals[1].starts_with("Z/2 "), "{out}");
    assert!(vals[2].starts_with("0"), "{out}");
}

#[test]
fn exit_codes() {
    let basic = data("basic.cl");
    let (code, out, _) = homalg(&["--workspace", &basic, "lift", "--problem", "sq"]);
    assert_eq!(code, 0, "{out}");

    let (code, out, _) = homalg(&["--workspace", &data("noncommuting.cl"), "lift", "--problem", "bad"]);
    assert_eq!(code, 2);
    assert!(out.contains("square does not commute"), "{out}");

    let (code, out, _) = homalg(&["--ring", "Z", "compat-check", "--pair", "mismatched"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("(Z/2, Z/2)"), "{out}");

    let (code, _, _) = homalg(&["--workspace", "/nonexistent.cl", "tensor", "--a", "M", "--b", "M"]);
    assert_eq!(code, 2);
    let (code, _, _) = homalg(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn model_check_is_deterministic() {
    let dir = std::env::temp_dir();
    let a = dir.join(format!("homalg-mc-a-{}.json", std::process::id()));
    let b = dir.join(format!("homalg-mc-b-{}.json", std::process::id()));
    let args = |p: &PathBuf| {
        vec![
            "--ring".to_string(),
            "Zmod4".into(),
            "--seed".into(),
            "7".into(),
            "--samples".into(),
            "3".into(),
            "--out".into(),
            p.to_string_lossy().into_owned(),
            "model-check".into(),
        ]
    };
    for p in [&a, &b] {
        let argv = args(p);
        let argv: Vec<&str> = argv.iter().map(|s| s.as_str()).collect();
        let (code, out, _) = homalg(&argv);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("wall time"));
    }
    let (ja, jb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ja, jb);
    assert!(!ja.contains("wall"));
    let v: serde_json::Value = serde_json::from_str(&ja).unwrap();
    assert_eq!(v["summary"]["failed"], 0);
    let _ = std::fs::remove_file(a);
    let _ = std::fs::remove_file(b);
}

#[test]
fn quiver_check() {
    let ws = data("quiver.cl");
    let (code, out, _) = homalg(&["--workspace", &ws, "quiver-check", "--repmodule", "fin"]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = homalg(&["--workspace", &ws, "quiver-check", "--repmodule", "good"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn workspace_files_round_trip() {
    let bad = std::fs::read_to_string(data("noncommuting.cl")).unwrap();
    assert!(parse_workspace(&bad).unwrap_err().to_string().contains("square does not commute"));
    for name in ["basic.cl", "quiver.cl"] {
        let text = std::fs::read_to_string(data(name)).unwrap();
        let ws = parse_workspace(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = serialize_workspace(&ws);
        let again = parse_workspace(&printed).unwrap();
        assert_eq!(ws, again, "{name}");
        assert_eq!(serialize_workspace(&again), printed, "{name}");
    }
}
