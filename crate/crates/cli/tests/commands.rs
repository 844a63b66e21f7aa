use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn drhai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drhai")).args(args).output().unwrap()
}

fn kb_args<'a>(r: &'a str, e: &'a str) -> Vec<&'a str> {
    vec!["--kb-r", r, "--kb-e", e]
}

#[test]
fn dialogue_prints_the_transcript_and_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let (r, e) = (data("illustrative_r.kb"), data("illustrative_e.kb"));
    let mut args = vec!["dialogue"];
    args.extend(kb_args(r.to_str().unwrap(), e.to_str().unwrap()));
    args.extend(["--topic", "c", "--trace", trace.to_str().unwrap()]);
    let out = drhai(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("1 | explainee | query | c | -\n2 | explainer | support | c | a, b, a & b -> c => c\n"));
    assert!(stdout.contains("9 | explainee | agree-to-disagree | - | -"));
    assert!(stdout.contains("sigma "));
    let records: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 9);
    assert_eq!(records[3]["target"], "e");
}

#[test]
fn explain_ssr_prints_the_single_shot_update() {
    let (r, e) = (data("illustrative_r.kb"), data("illustrative_e.kb"));
    let mut args = vec!["explain-ssr"];
    args.extend(kb_args(r.to_str().unwrap(), e.to_str().unwrap()));
    args.extend(["--query", "c"]);
    let out = drhai(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("add    {a, b, a & b -> c}\nremove {e}\n"), "{stdout}");
}

#[test]
fn bad_input_is_reported() {
    let r = data("illustrative_r.kb");
    let out = drhai(&["dialogue", "--kb-r", r.to_str().unwrap(), "--kb-e", "/nonexistent.kb", "--topic", "c"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent.kb"));
    let out = drhai(&["bench", "--kb-size", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("kb_size"));
}

#[test]
fn bench_writes_csv_to_stdout() {
    let out = drhai(&["bench", "--kb-size", "20", "--conflict-fraction", "0.5", "--seed", "3", "--reps", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("kb_size,c,alpha,seed,rep,T_seconds"));
    assert!(lines[2].starts_with("20,0.50,0.50,3,1,"));
}
