use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use harnacklab_core::field_io::read_binary;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_harnacklab"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(sub: &[&str], config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const EXAMPLE: &str = r#"
[params]
lambda = 1.0
Lambda = 1.0
p = 3.0
n = 1

[experiment]
c0 = 100.0
k = 200
"#;

#[test]
fn example_residual_passes_for_the_reference_parameters() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), EXAMPLE);
    let out = tmp.path().join("out");
    let o = run(&["verify-example"], &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["samples"], 10_000);
    assert!(report["max_relative_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["blow_up_value"], 2.0);
}

#[test]
fn failed_verification_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("{EXAMPLE}tol = 0.0\n"));
    let out = tmp.path().join("out");
    let o = run(&["verify-example"], &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("verification failed"));
    // artifacts are still written for inspection
    assert!(out.join("report.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn inverted_ellipticity_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &EXAMPLE.replace("Lambda = 1.0", "Lambda = 0.5"));
    let o = run(&["verify-example"], &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("EllipticityParams"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    for text in [
        format!("colour = 1\n{EXAMPLE}"),
        format!("{EXAMPLE}sample_count = 5\n"),
        EXAMPLE.replace("n = 1", "n = 1\nmu = 2.0"),
    ] {
        let cfg = write_config(tmp.path(), &text);
        let o = run(&["verify-example"], &cfg, &tmp.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));
    }
}

#[test]
fn missing_tables_and_wrong_kind_are_validation_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[experiment]\nc0 = 100.0\nk = 200\n");
    let o = run(&["verify-example"], &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[params]"));

    let cfg = write_config(tmp.path(), &format!("kind = \"cover\"\n{EXAMPLE}"));
    let o = run(&["verify-example"], &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["verify-example"], &tmp.path().join("missing.toml"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = bin().args(["verify-example"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["no-such-command"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bundled_cover_fixture_passes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = tmp.path().join("out");
    let o = run(&["cover"], &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["failed"], 0);
    let fam = &report["families"][0];
    assert_eq!(fam["size"], 1000);
    assert_eq!(fam["disjoint"], true);
    assert_eq!(fam["covered"], true);
    let selected = fam["selected"].as_u64().unwrap() as usize;
    let rows = fs::read_to_string(out.join("selected.csv")).unwrap().lines().count();
    assert_eq!(rows, selected + 1);
}

#[test]
fn cover_reads_a_family_file_relative_to_the_config() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("family.json"),
        r#"{"theta": 0.5, "p": 3.0, "members": [
            {"x": [0.0], "t": 0.0, "rho": 0.5},
            {"x": [0.1], "t": 0.0, "rho": 0.25},
            {"x": [0.9], "t": 0.5, "rho": 0.125}]}"#,
    )
    .unwrap();
    let cfg = write_config(tmp.path(), "[experiment]\nsource = \"file\"\npath = \"family.json\"\n");
    let out = tmp.path().join("out");
    let o = run(&["cover"], &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&out.join("report.json"))["families"][0]["selected"], 2);
}

fn files_except_manifest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn outputs_are_deterministic_across_runs_and_thread_counts() {
    let tmp = TempDir::new().unwrap();
    for (sub, name) in [
        (&["cover"][..], "cover_random.toml"),
        (&["verify-example"][..], "verify_example.toml"),
        (&["harnack", "barrier-scan"][..], "harnack_barrier_scan.toml"),
        (&["contact"][..], "contact.toml"),
    ] {
        let cfg = configs_dir().join(name);
        let a = tmp.path().join(format!("{name}-a"));
        let b = tmp.path().join(format!("{name}-b"));
        let oa = run(sub, &cfg, &a, &["--threads", "1"]);
        let ob = run(sub, &cfg, &b, &["--threads", "3"]);
        assert_eq!(oa.status.code(), Some(0), "{name}: {}", stderr(&oa));
        assert_eq!(ob.status.code(), Some(0), "{name}: {}", stderr(&ob));
        let (fa, fb) = (files_except_manifest(&a), files_except_manifest(&b));
        assert!(!fa.is_empty());
        assert!(fa == fb, "{name}: outputs differ between runs");
    }
}

#[test]
fn seed_flag_changes_random_families_and_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs_dir().join("cover_random.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["cover"], &cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run(&["cover"], &cfg, &b, &["--seed", "99"]).status.code(), Some(0));
    assert_ne!(fs::read(a.join("selected.csv")).unwrap(), fs::read(b.join("selected.csv")).unwrap());
    assert_eq!(json(&a.join("manifest.json"))["seed"], 3);
    assert_eq!(json(&b.join("manifest.json"))["seed"], 99);
}

#[test]
fn manifest_records_hash_outputs_and_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), EXAMPLE);
    let out = tmp.path().join("out");
    let o = run(&["verify-example"], &cfg, &out, &["--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = json(&out.join("manifest.json"));
    let digest: String = Sha256::digest(EXAMPLE.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(m["config_sha256"], digest);
    assert_eq!(m["command"], "verify-example");
    assert_eq!(m["threads"], 2);
    assert_eq!(m["outputs"], serde_json::json!(["report.json"]));
    assert_eq!(m["config"]["params"]["Lambda"], 1.0);
    assert_eq!(m["config"]["experiment"]["k"], 200);
    assert!(m["stages"].as_array().unwrap().iter().any(|s| s["name"] == "sample"));
}

#[test]
fn solve_writes_a_readable_field_and_step_log() {
    let tmp = TempDir::new().unwrap();
    let text = r#"
[params]
lambda = 1.0
Lambda = 1.0
p = 3.0
n = 1

[grid]
center = [0.0]
half_width = [4.0]
dx = 0.0625
t_start = 1.0
t_end = 1.5
dt = 0.125

[operator]
kind = "model"
q = 3.0
delta = 1e-8

[solution]
type = "barenblatt"

[experiment]
boundary = "exact"
compare = true
"#;
    let cfg = write_config(tmp.path(), text);
    let out = tmp.path().join("out");
    let o = run(&["solve"], &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let field = read_binary(fs::File::open(out.join("field.bin")).unwrap()).unwrap();
    assert_eq!(field.grid().n_time(), 5);
    assert_eq!(field.grid().space().shape(), &[129]);
    let summary = json(&out.join("summary.json"));
    let err = summary["final_error_linf"].as_f64().unwrap();
    assert!(err > 0.0 && err < 0.05, "{err}");
    let steps = fs::read_to_string(out.join("steps.csv")).unwrap();
    assert!(steps.starts_with("step,t,dt,max_abs_gradient"));
    assert_eq!(steps.lines().count(), summary["steps"].as_u64().unwrap() as usize + 1);
}

#[test]
fn nonpositive_scale_factor_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(configs_dir().join("verify_scaling.toml")).unwrap().replace("r = 2.0", "r = -2.0");
    let cfg = write_config(tmp.path(), &text);
    let o = run(&["verify-scaling"], &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn every_shipped_config_runs() {
    let tmp = TempDir::new().unwrap();
    let mut names: Vec<PathBuf> = fs::read_dir(configs_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert!(names.len() >= 13);
    for path in names {
        let text = fs::read_to_string(&path).unwrap();
        let kind = text
            .lines()
            .find_map(|l| l.strip_prefix("kind = \""))
            .and_then(|l| l.strip_suffix('"'))
            .expect("shipped configs name their command");
        let sub: Vec<&str> = match kind.strip_prefix("harnack-") {
            Some(rest) => vec!["harnack", rest],
            None => vec![kind],
        };
        let out = tmp.path().join(path.file_stem().unwrap());
        let o = run(&sub, &path, &out, &[]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
        let m = json(&out.join("manifest.json"));
        for f in m["outputs"].as_array().unwrap() {
            assert!(out.join(f.as_str().unwrap()).exists(), "{}: missing {f}", path.display());
        }
    }
}
