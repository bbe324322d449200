//! End-to-end tests driving the `nlcs` binary.

use std::path::Path;
use std::process::{Command, Output};

fn nlcs(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlcs"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) {
    std::fs::write(dir.join(name), content).unwrap();
}

const LINEAR_CONFIG: &str = r#"
[problem]
n = 64
m = 32
k = 4
noise_sigma = 0.0
seed = 11

[solver]
mu = "auto"
max_iterations = 500
residual_tolerance = 1e-9
iterate_change_tolerance = 1e-13
record_trace = true
rip_trials = 300
success_threshold = 1e-6

[report]
bounds = true
"#;

#[test]
fn solve_noiseless_linear_writes_record_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exp.toml", LINEAR_CONFIG);
    let out = nlcs(
        &["solve", "--config", "exp.toml", "--out", "record.txt"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let record = std::fs::read_to_string(dir.path().join("record.txt")).unwrap();
    assert!(record.contains("success=true"), "{record}");
    assert!(record.contains("stop_reason=residual_tolerance"), "{record}");

    let trace = std::fs::read_to_string(dir.path().join("record.txt.trace.csv")).unwrap();
    let last = trace.lines().last().unwrap();
    let final_residual: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(final_residual < 1e-8, "final residual {final_residual}");
}

#[test]
fn solve_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exp.toml", LINEAR_CONFIG);
    let run = |name: &str| {
        let out = nlcs(&["solve", "--config", "exp.toml", "--out", name], dir.path());
        assert!(out.status.success());
        std::fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("a.txt"), run("b.txt"));
    assert_eq!(
        std::fs::read(dir.path().join("a.txt.trace.csv")).unwrap(),
        std::fs::read(dir.path().join("b.txt.trace.csv")).unwrap()
    );
}

#[test]
fn infeasible_step_request_exits_2_and_cites_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let config = LINEAR_CONFIG.replace("mu = \"auto\"", "mu = 50.0");
    write(dir.path(), "exp.toml", &config);
    let out = nlcs(&["solve", "--config", "exp.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("beta <= 1/mu < 1.5*alpha - 4*C"),
        "stderr: {stderr}"
    );
}

#[test]
fn missing_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlcs(&["solve", "--config", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = nlcs(&["solve"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_config_exits_1_with_line_anchor() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.toml", "[problem\nn = 4\n");
    let out = nlcs(&["solve", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 1"), "stderr: {stderr}");
}

#[test]
fn unknown_flags_fail_closed_and_help_lists_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlcs(&["solve", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    for command in ["solve", "sweep", "rip", "bound", "check-jacobian", "counterexample"] {
        let out = nlcs(&[command, "--help"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{command} --help");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("--seed"), "{command} help misses --seed");
        assert!(text.contains("--out"), "{command} help misses --out");
    }
}

#[test]
fn rip_on_identity_model_reports_unit_constants() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "identity.txt",
        "4 4\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n",
    );
    write(
        dir.path(),
        "exp.toml",
        r#"
[problem]
n = 4
m = 4
k = 2
seed = 3

[problem.matrix]
ensemble = "explicit"
file = "identity.txt"
"#,
    );
    let out = nlcs(&["rip", "--config", "exp.toml", "--trials", "64"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("alpha_hat=1\n"), "{text}");
    assert!(text.contains("beta_hat=1\n"), "{text}");
    assert!(text.contains("estimate_kind=monte_carlo_inner"), "{text}");
}

#[test]
fn bound_command_reproduces_the_iteration_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlcs(
        &[
            "bound",
            "--formula",
            "niht",
            "--alpha",
            "1.0",
            "--mu",
            "0.8",
            "--residual-norms",
            "1,1,1",
            "--reference-norm",
            "2.6457513110645907",
            "--delta",
            "0.01",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("k_star=14"), "{text}");
    assert!(text.contains("epsilon_k=7"), "{text}");
}

#[test]
fn bound_variant_filter_selects_constant_families() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "bound",
        "--formula",
        "niht-limit",
        "--alpha",
        "1.0",
        "--mu",
        "1.0",
        "--c",
        "0.0",
        "--residual",
        "1.0",
    ];
    let both = nlcs(&base, dir.path());
    let text = String::from_utf8_lossy(&both.stdout).to_string();
    assert!(text.contains("printed_constant="));
    assert!(text.contains("derived_constant="));
    assert!(text.contains("printed_denominator_nonpositive=true"));

    let mut printed_args = base.to_vec();
    printed_args.extend(["--variant", "printed"]);
    let printed = nlcs(&printed_args, dir.path());
    let text = String::from_utf8_lossy(&printed.stdout).to_string();
    assert!(text.contains("printed_constant="));
    assert!(!text.contains("derived_constant="));
}

#[test]
fn check_jacobian_reports_small_deviation_on_linear_models() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "exp.toml",
        "[problem]\nn = 8\nm = 6\nk = 2\nseed = 5\n",
    );
    let out = nlcs(&["check-jacobian", "--config", "exp.toml"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let deviation: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_deviation="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(deviation < 1e-9, "deviation {deviation}");
}

#[test]
fn counterexample_finds_curved_witness_and_clears_affine() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "one.txt",
        "1 1\n1\n",
    );
    let curved = r#"
[problem]
n = 1
m = 1
k = 1
seed = 9

[problem.matrix]
ensemble = "explicit"
file = "one.txt"

[problem.nonlinearity]
kind = "sine"
scale = 0.5
"#;
    write(dir.path(), "curved.toml", curved);
    let out = nlcs(
        &["counterexample", "--config", "curved.toml", "--trials", "1000"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("found=true"));

    let affine = curved.replace("kind = \"sine\"", "kind = \"identity\"");
    write(dir.path(), "affine.toml", &affine);
    let out = nlcs(
        &["counterexample", "--config", "affine.toml", "--trials", "200"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("found=false"), "{text}");
    assert!(text.contains("budget_exhausted=true"), "{text}");
}

#[test]
fn sweep_writes_deterministic_csv_with_pinned_header() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "exp.toml",
        r#"
[problem]
n = 24
m = 16
k = 2
seed = 21

[solver]
rip_trials = 100
max_iterations = 300
residual_tolerance = 1e-10

[sweep]
m_values = [12, 16]
k_values = [1, 2]
trials = 3
"#,
    );
    let out = nlcs(
        &["sweep", "--config", "exp.toml", "--out", "sweep.csv", "--jobs", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with(
        "cell_id,N,M,k,h_kind,h_scale,noise_sigma,trials,success_rate,mean_rel_err,mean_iters,mu_used,alpha_hat,beta_hat,C_hat,skip_reason"
    ));
    assert_eq!(csv.lines().count(), 5);

    let out = nlcs(
        &["sweep", "--config", "exp.toml", "--out", "sweep2.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("sweep.csv")).unwrap(),
        std::fs::read(dir.path().join("sweep2.csv")).unwrap()
    );
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exp.toml", LINEAR_CONFIG);
    let run = |extra: &[&str], name: &str| {
        let mut args = vec!["solve", "--config", "exp.toml", "--out", name];
        args.extend_from_slice(extra);
        let out = nlcs(&args, dir.path());
        assert!(out.status.success());
        std::fs::read_to_string(dir.path().join(name)).unwrap()
    };
    let default = run(&[], "d.txt");
    let overridden = run(&["--seed", "999"], "o.txt");
    assert!(default.contains("seed=11"));
    assert!(overridden.contains("seed=999"));
    assert_ne!(default, overridden);
}
