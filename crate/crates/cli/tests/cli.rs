use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_lieibvp");

fn lieibvp(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("LIEIBVP_THREADS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn small(pde: &str, kind: &str, extra: &str) -> String {
    format!(
        "pde = \"{pde}\"\n[initial]\nkind = \"{kind}\"\n[collocation]\npoints = 120\n[solver]\ncandidates = 20\nmax_terms = 2\n{extra}"
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn template_output_is_a_valid_config() {
    let o = lieibvp(&["template", "wave", "--initial", "gaussian-mix"]);
    assert_eq!(code(&o), 0);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.toml", &String::from_utf8(o.stdout).unwrap());
    let out = dir.path().join("out");
    let text = fs::read_to_string(&cfg).unwrap();
    fs::write(&cfg, text.replace("candidates = 1000", "candidates = 10").replace("max_terms = 80", "max_terms = 1")).unwrap();
    let o = lieibvp(&["solve", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_key_is_a_config_error_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &small("heat", "sine", "[reference]\nmode = 3\n"));
    let o = lieibvp(&["solve", &cfg]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("reference") && err.contains("mode"), "{err}");

    assert_eq!(code(&lieibvp(&["solve", "/nonexistent/config.toml"])), 1);
    assert_eq!(code(&lieibvp(&["frobnicate"])), 1);
}

#[test]
fn huge_tolerance_gives_an_empty_model_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small("heat", "sine", "mse_tol = 1e300\n"));
    let out = dir.path().join("out");
    let o = lieibvp(&["solve", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["terms"], 0);
    assert_eq!(report["parameters"], 0);
    for f in ["model.json", "trace.csv", "ibc_fit.csv", "field.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(out.join("trace.csv")).unwrap().lines().count(), 1);
}

#[test]
fn solve_then_export_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small("wave", "sine", ""));
    let out = dir.path().join("out");
    assert_eq!(code(&lieibvp(&["solve", &cfg, "--out", out.to_str().unwrap(), "-q"])), 0);
    let model = out.join("model.json");
    let field = dir.path().join("f.csv");
    let o = lieibvp(&["export-fields", model.to_str().unwrap(), "5x4", "--out", field.to_str().unwrap(), "-q"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&field).unwrap();
    assert_eq!(text.lines().next(), Some("x,t,value"));
    assert_eq!(text.lines().count(), 21);

    let o = lieibvp(&["export-fields", model.to_str().unwrap(), "5by4"]);
    assert_eq!(code(&o), 1);

    let reference = dir.path().join("r.csv");
    let o = lieibvp(&["export-reference", &cfg, "--out", reference.to_str().unwrap(), "-q"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(&reference).unwrap().lines().count(), 1 + 100 * 100);
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small("heat", "gaussian", ""));
    let a = lieibvp(&["solve", &cfg, "--out", dir.path().join("a").to_str().unwrap(), "-q", "--threads", "1"]);
    let b = lieibvp(&["solve", &cfg, "--out", dir.path().join("b").to_str().unwrap(), "-q", "--seed", "7"]);
    assert_eq!((code(&a), code(&b)), (0, 0));
    let ta = fs::read(dir.path().join("a/trace.csv")).unwrap();
    let tb = fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_ne!(ta, tb);
}

#[test]
fn solver_abort_exits_with_two() {
    // every point on the left edge, where every unshifted sine mode vanishes
    let catalog = "[[catalog]]\nfamily = \"pinned\"\nseed = \"heat_mode\"\ntransforms = [{ kind = \"heat_t4\", lower = -1.0, upper = 1.0 }]\n";
    let text = format!(
        "pde = \"heat\"\n[initial]\nkind = \"polynomial\"\ncoefficients = [1.0]\n[collocation]\npoints = 50\nallocation = [0.0, 1.0, 0.0]\n[solver]\ncandidates = 10\n{catalog}"
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &text);
    let o = lieibvp(&["solve", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn empty_suite_gives_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let suite = write(dir.path(), "suite.toml", "cases = []\n");
    let out = dir.path().join("out");
    let o = lieibvp(&["bench", &suite, "--out", out.to_str().unwrap(), "-q"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(out.join("bench.csv")).unwrap(),
        "name,pde,ibc_type,mse,l2re,n_base_terms,n_parameters\n"
    );
}

#[test]
fn failing_case_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let mut suite = String::new();
    let cases = [("heat", "sine"), ("heat", "polynomial"), ("heat", "gaussian"), ("heat", "sine_mix"), ("heat", "step")];
    for (i, (pde, kind)) in cases.iter().chain(&[("wave", "sine"), ("wave", "sine_mix"), ("wave", "gaussian"), ("wave", "gaussian_mix")]).enumerate() {
        write(dir.path(), &format!("c{i}.toml"), &small(pde, kind, ""));
        suite += &format!("[[cases]]\nconfig = \"c{i}.toml\"\n");
    }
    // a single jump cannot meet the clamped wave edges
    write(dir.path(), "bad.toml", &small("wave", "step", "").replace("kind = \"step\"", "kind = \"step\"\njumps = [0.5]"));
    suite += "[[cases]]\nconfig = \"bad.toml\"\n";
    let suite = write(dir.path(), "suite.toml", &suite);
    let out = dir.path().join("out");
    let o = lieibvp(&["bench", &suite, "--out", out.to_str().unwrap(), "-q"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(out.join("bench.csv")).unwrap().lines().count(), 1 + 9);
    let failures = fs::read_to_string(out.join("failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 2);
    assert!(failures.contains("bad"), "{failures}");
}

#[test]
fn verify_passes_on_defaults_and_reports_injected_faults() {
    let o = lieibvp(&["verify", "--draws", "5"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{text}");
    for kind in ["heat_t1", "heat_t2", "heat_t3", "heat_t4", "heat_t5", "heat_t6", "wave_t1", "wave_t2"] {
        assert!(text.lines().filter(|l| l.starts_with("PASS") && l.contains(kind)).count() >= 3, "{kind}");
    }

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &small("heat", "sine", "[[catalog]]\nfamily = \"heat_blob\"\nbounds = [{ lower = -10.0, sampling = \"uniform\" }, {}]\n"),
    );
    let o = lieibvp(&["verify", "--config", &cfg, "--draws", "5"]);
    assert_eq!(code(&o), 3);
    let text = String::from_utf8_lossy(&o.stdout);
    let line = text.lines().find(|l| l.starts_with("FAIL heat_blob pde residual")).expect("residual failure listed");
    assert!(line.contains("-10"), "{line}");
}
