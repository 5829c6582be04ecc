use std::path::Path;
use std::process::{Command, Output};

use mfsde::cli::RunConfig;

const BIN: &str = env!("CARGO_BIN_EXE_mfsde");

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn base(model: &str, extra: &str) -> String {
    format!("x = 1.0\nhorizon = 1.0\nsteps = 40\nparticles = 20000\nseed = 5\n{extra}\n[model]\n{model}\n")
}

fn read_nodes(path: &Path) -> Vec<(f64, f64, f64, f64)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            let f = |i: usize| rec[i].parse::<f64>().unwrap();
            (f(2), f(3), f(4), f(5))
        })
        .collect()
}

#[test]
fn zero_drift_nodes_match_brownian_moments() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", &base("name = \"zero\"", ""));
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let n = 20000f64;
    for (t, mean, se, var) in read_nodes(&out.join("simulate_nodes.csv")) {
        assert!((mean - 1.0).abs() <= 3.0 * se + 1e-15, "t={t}");
        assert!((var - t).abs() <= 3.0 * t * (2.0 / n).sqrt() + 1e-15, "t={t} var={var}");
    }
}

#[test]
fn ou_mean_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ou.toml", &base("name = \"ou\"\ntheta = 1.0\nkappa = 0.5", ""));
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let dt = 1.0 / 40.0;
    for (t, mean, se, _) in read_nodes(&out.join("simulate_nodes.csv")) {
        let target = (-0.5 * t).exp();
        // Euler bias of the linear mean is below Δ t (κ - θ)².
        assert!((mean - target).abs() <= 3.0 * se + dt * t * 0.25 + 1e-15, "t={t}");
    }
}

#[test]
fn csv_outputs_are_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "irr.toml",
        &base(
            "name = \"irregular\"\nalpha = 0.5\ntheta = 1.0\nkappa = 0.5",
            "[simulate]\nmethods = [\"picard\", \"direct\"]\n[delta.payoff]\nkind = \"call\"\nstrike = 0.0",
        )
        .replace("particles = 20000", "particles = 3000"),
    );
    let mut outputs = Vec::new();
    for workers in ["1", "2", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        for cmd in ["simulate", "delta"] {
            let o = run(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| !p.to_string_lossy().ends_with("_timings.csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 6);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    for (_, bytes) in &outputs[0] {
        assert!(!bytes.contains(&b'\r'));
    }
}

#[test]
fn seed_override_changes_results_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", &base("name = \"zero\"", "").replace("particles = 20000", "particles = 100"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "99"]).status.success());
    let ta = std::fs::read_to_string(a.join("simulate.csv")).unwrap();
    let tb = std::fs::read_to_string(b.join("simulate.csv")).unwrap();
    assert_ne!(ta, tb);
    assert!(ta.lines().next().unwrap().starts_with("quantity,estimate,std_error,particles,steps,seed,config_hash"));
    assert!(tb.lines().nth(1).unwrap().contains(",99,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let negative = write_config(dir.path(), "neg.toml", &base("name = \"zero\"", "").replace("particles = 20000", "particles = -3"));
    let o = run(&["simulate", "--config", negative.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("particles"));

    let unknown = write_config(dir.path(), "unk.toml", &base("name = \"zero\"", "partciles = 3"));
    let o = run(&["simulate", "--config", unknown.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("partciles"));

    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));

    let stuck = write_config(
        dir.path(),
        "stuck.toml",
        &base("name = \"ou\"\ntheta = 1.0\nkappa = 0.5", "[picard]\ntolerance = 1e-12\nmax_iterations = 2"),
    );
    let o = run(&["simulate", "--config", stuck.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));

    // A tolerance this loose stops Picard at the initial Dirac flow, so the
    // OU oracle checks fail.
    let loose = write_config(
        dir.path(),
        "loose.toml",
        &base("name = \"zero\"", "[picard]\ntolerance = 100.0").replace("particles = 20000", "particles = 5000"),
    );
    let o = run(&["selfcheck", "--config", loose.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(4));
    let table = std::fs::read_to_string(dir.path().join("out/selfcheck.csv")).unwrap();
    assert!(table.contains("ou.mean_T") && table.contains("FAIL"));

    let good = write_config(dir.path(), "good.toml", &base("name = \"zero\"", "").replace("particles = 20000", "particles = 5000"));
    let o = run(&["selfcheck", "--config", good.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", std::fs::read_to_string(dir.path().join("out/selfcheck.csv")).unwrap());
}

#[test]
fn convergence_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "conv.toml",
        &base(
            "name = \"irregular\"\nalpha = 0.5\ntheta = 1.0\nkappa = 0.5",
            "[convergence]\nmollifiers = [4, 16, 64]\nstep_list = [100, 200, 400, 800]\nparticle_list = [1000, 2000, 4000, 8000]\noracle_paths = 1000",
        )
        .replace("particles = 20000", "particles = 5000"),
    );
    let out = dir.path().join("out");
    let o = run(&["convergence", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fits = std::fs::read_to_string(out.join("convergence_fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 4);
    for line in fits.lines().skip(1) {
        assert!(line.ends_with("PASS"), "{line}");
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 1);
}
