use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "nx = 16\nnv = 33\ntau = 0.125\nT = 0.5\n";

fn svlasov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svlasov")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_ok(cmd: &str, cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = svlasov(&args);
    assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

#[test]
fn snapshot_files() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}scheme = additive\nnoise = half_sin_v3\nsnapshot_times = 0, 0.25, 0.5\n"));
    let out = dir.path().join("snap");
    run_ok("snapshot", &cfg, &out, &[]);
    for name in ["snapshot_t0.csv", "snapshot_t0.25.csv", "snapshot_t0.5.csv"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,v,f"));
        assert_eq!(lines.count(), 16 * 33);
        assert!(!text.contains('\r'));
    }
    let first = fs::read_to_string(out.join("snapshot_t0.csv")).unwrap();
    let row: Vec<&str> = first.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 3);
    // 17 significant digits.
    assert_eq!(row[1], "-6.2831853071795862e0");
}

#[test]
fn laws_file_and_rerun_is_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}scheme = mult_ito\nnoise = cos_sin_pair\nsamples = 20\nseed = 7\n"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok("laws", &cfg, &a, &["--threads", "1"]);
    run_ok("laws", &cfg, &b, &["--threads", "3"]);
    let text = fs::read_to_string(a.join("laws.csv")).unwrap();
    assert_eq!(text, fs::read_to_string(b.join("laws.csv")).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("t,mean_l2sq,stderr_l2sq,theory_l2sq,mean_mass,stderr_mass,theory_mass")
    );
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][2], 0.0);
    assert_eq!(rows[0][1], rows[0][3]);

    let c = dir.path().join("c");
    run_ok("laws", &cfg, &c, &["--seed", "8"]);
    assert_ne!(text, fs::read_to_string(c.join("laws.csv")).unwrap());
}

#[test]
fn single_sample_laws_have_nan_stderr() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}scheme = mult_strato\nnoise = sin_v3\n"));
    run_ok("laws", &cfg, dir.path(), &[]);
    let text = fs::read_to_string(dir.path().join("laws.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[2], "nan");
    // No closed-form law for this noise, and none for the Stratonovich mass.
    assert_eq!(row[3], "nan");
    assert_eq!(row[6], "nan");
}

#[test]
fn norms_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SMALL}scheme = transport\nnoise = transport_const(0.5)\nrealizations = 2\nextra_p = 3, 2\n"),
    );
    run_ok("norms", &cfg, dir.path(), &[]);
    let text = fs::read_to_string(dir.path().join("norms.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path,t,l1,l3,l55,l2,min"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 5);
    assert!(rows[0].starts_with("0,0.0000000000000000e0,"));
    assert!(rows[5].starts_with("1,0.0000000000000000e0,"));
}

#[test]
fn msconv_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SMALL}scheme = additive\nnoise = half_sin_v3\nsamples = 4\ntau_ref = 2^-6\ntau_set = 2^-3, 2^-4, 2^-5\n"),
    );
    let o = run_ok("msconv", &cfg, dir.path(), &[]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope"));
    let text = fs::read_to_string(dir.path().join("msconv.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,rms_error");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1.2500000000000000e-1,"));
    let slope: f64 = lines[4].strip_prefix("# slope = ").unwrap().parse().unwrap();
    assert!(slope.is_finite() && slope > 0.0);
}

#[test]
fn validate_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}scheme = mult_strato\nnoise = cos_sin_pair\n"));
    let o = run_ok("validate", &cfg, dir.path(), &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().count() >= 10);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    for body in ["tau = 0.3\nT = 1.0\n", "colour = red\n", "scheme = additive\n"] {
        let cfg = write_config(dir.path(), body);
        let o = svlasov(&["laws", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    }
    let o = svlasov(&["laws", "--config", "/nonexistent/exp.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), SMALL);
    let o = svlasov(&["laws", "--config", &cfg, "--samples", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
