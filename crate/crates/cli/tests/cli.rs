use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"
replications = 100
n_list = [16, 32, 64]

[driver]
beta = 1.5
scale = 1.0

[[kernels]]
family = "ou"
lambda = 1.0

[[kernels]]
family = "ou"
lambda = 2.0

[functional]
freqs = [[1.0, 0.0], [0.0, 1.0]]

[tolerance]
grid = 0.1

[rates]
n_list = [8, 16, 32]

[rho]
k_max = 64
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn stablema(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablema")).args(args).output().unwrap()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

#[test]
fn rho_writes_report_pair_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("out");
    let o = stablema(&["rho", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = files_with_ext(&out, "csv");
    let txt = files_with_ext(&out, "txt");
    assert_eq!((csv.len(), txt.len()), (1, 1));
    assert!(csv[0].file_name().unwrap().to_str().unwrap().starts_with("rho-"));
    assert!(std::fs::read_to_string(&csv[0]).unwrap().starts_with("i,j,k,rho\n"));
    assert!(std::fs::read_to_string(&txt[0]).unwrap().starts_with("timestamp: "));
}

#[test]
fn simulate_dumps_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = stablema(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&files_with_ext(dir.path(), "csv")[0]).unwrap();
    assert!(csv.starts_with("t,X1,X2\n"));
    assert_eq!(csv.lines().count(), 65);
}

#[test]
fn clt_csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let mut bytes = Vec::new();
    for (threads, sub) in [("1", "a"), ("3", "b"), ("3", "c")] {
        let out = dir.path().join(sub);
        let o = stablema(&[
            "clt",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--threads",
            threads,
            "--seed",
            "11",
        ]);
        assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&o.stderr));
        bytes.push(std::fs::read(&files_with_ext(&out, "csv")[0]).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[1], bytes[2]);
}

#[test]
fn seed_override_changes_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let mut csvs = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let o = stablema(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(o.status.code(), Some(0));
        csvs.push(std::fs::read(&files_with_ext(&out, "csv")[0]).unwrap());
    }
    assert_ne!(csvs[0], csvs[1]);
}

#[test]
fn acceptance_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &CONFIG.replace("n_list = [8, 16, 32]", "n_list = [8, 16, 32]\nslope_window = 1e-9\npairs = [[1, 2]]"),
    );
    let o = stablema(&["rates", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict: FAIL"));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = stablema(&["rho"]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = write_config(dir.path(), &CONFIG.replace("n_list = [16, 32, 64]", "n_list = [64, 32]"));
    let o = stablema(&["rho", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_list[1]"));
    let cfg = write_config(dir.path(), &CONFIG.replace("lambda = 2.0", "alpha = 1.2\nlambda = 2.0"));
    let o = stablema(&["clt", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}
