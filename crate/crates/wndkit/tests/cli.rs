use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn wndkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wndkit"))
        .current_dir(dir)
        .args(args)
        .env_remove("WNDKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn with_config(dir: &Path, cmd: &str, name: &str, toml: &str) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{name}.toml"));
    fs::write(&cfg, toml).unwrap();
    let out = dir.join(name);
    let output = wndkit(
        dir,
        &[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
    );
    (output, out)
}

fn status(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(path: &Path) -> toml::Table {
    fs::read_to_string(path).unwrap().parse().unwrap()
}

fn float(t: &toml::Table, key: &str) -> f64 {
    t[key].as_float().unwrap_or_else(|| panic!("{key} is not a float"))
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records()
        .map(|r| r.unwrap()[idx].parse().unwrap())
        .collect()
}

#[test]
fn validate_reference_gas_succeeds() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = with_config(tmp.path(), "validate", "gas", "[system]\npreset = \"ideal-gas-2d\"\n");
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let rep = report(&out.join("entropy_report.toml"));
    assert_eq!(rep["passed"].as_bool(), Some(true));
    assert!(float(&rep, "min_diffusion_eigenvalue") >= -1e-12);
}

#[test]
fn validate_negative_diffusion_is_analysis_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = "\
[system.spec]
dim = 1
ncomp = 2
advection = [[[0.0, 1.0], [1.0, 0.0]]]
diffusion = [[[[-1.0, 0.0], [0.0, -1.0]]]]
";
    let (o, out) = with_config(tmp.path(), "validate", "neg", cfg);
    assert_eq!(status(&o), 1, "{}", stderr(&o));
    let rep = report(&out.join("entropy_report.toml"));
    assert_eq!(rep["passed"].as_bool(), Some(false));
    assert!(float(&rep, "min_diffusion_eigenvalue") < 0.0);
}

#[test]
fn malformed_config_reports_position() {
    let tmp = TempDir::new().unwrap();
    let (o, _) = with_config(tmp.path(), "validate", "bad", "lattice_k = 4\n[system\npreset = 1\n");
    assert_eq!(status(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("line 2") && msg.contains("column"), "{msg}");
}

#[test]
fn input_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    for (name, cfg) in [
        ("zero_k", "lattice_k = 0\n"),
        ("no_preset", "[system]\npreset = \"plasma\"\n"),
        ("neg_dt", "[simulation]\ndt = -0.1\n"),
    ] {
        let (o, _) = with_config(tmp.path(), "validate", name, cfg);
        assert_eq!(status(&o), 2, "{name}: {}", stderr(&o));
    }
    let missing = wndkit(tmp.path(), &["validate", "--config", "absent.toml"]);
    assert_eq!(status(&missing), 2);
    let (o, _) = with_config(
        tmp.path(),
        "wcns-report",
        "not_gas",
        "[system]\npreset = \"partially-dissipative-2x2\"\n",
    );
    assert_eq!(status(&o), 2, "{}", stderr(&o));
}

#[test]
fn dumped_spec_round_trips() {
    let tmp = TempDir::new().unwrap();
    let (o, first) = with_config(
        tmp.path(),
        "validate",
        "first",
        "[system]\npreset = \"ideal-gas-3d\"\nrho = 1.7\ntheta = 0.3\nd_micro = 5.0\n",
    );
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let dumped = first.join("spec.toml");
    let cfg = format!("[system]\nspec_file = {:?}\n", dumped.to_str().unwrap());
    let (o, second) = with_config(tmp.path(), "validate", "second", &cfg);
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(&dumped).unwrap(),
        fs::read(second.join("spec.toml")).unwrap()
    );
}

#[test]
fn operators_scalar_burgers() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = with_config(
        tmp.path(),
        "operators",
        "burgers",
        "lattice_k = 8\n[system]\npreset = \"scalar-advection-diffusion\"\n",
    );
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let rep = report(&out.join("operators_report.toml"));
    assert_eq!(rep["modes"].as_integer(), Some(17));
    let residuals = csv_column(&out.join("cyclic_residuals.csv"), "residual");
    assert_eq!(residuals.len(), 10);
    assert!(residuals.iter().all(|r| *r <= 1e-12), "{residuals:?}");
}

#[test]
fn operators_euler_has_no_averaged_diffusion() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = with_config(
        tmp.path(),
        "operators",
        "euler",
        "lattice_k = 3\n[system]\npreset = \"euler-2d\"\n",
    );
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let path = out.join("averaged_diffusion.csv");
    let re = csv_column(&path, "re");
    let im = csv_column(&path, "im");
    assert_eq!(re.len(), 49 * 16);
    assert!(re.iter().chain(&im).all(|x| *x == 0.0));
}

#[test]
fn operators_gas_resonances_match_exact_recount() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = with_config(
        tmp.path(),
        "operators",
        "gas",
        "lattice_k = 4\n[system]\npreset = \"ideal-gas-2d\"\n",
    );
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let rep = report(&out.join("operators_report.toml"));
    let recount = rep["recount"].as_table().unwrap();
    assert_eq!(recount["identical"].as_bool(), Some(true));
    assert_eq!(recount["triples"].as_integer(), rep["resonant_triples"].as_integer());
    let rows = csv::Reader::from_path(out.join("resonance_table.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(Some(rows as i64), rep["resonant_triples"].as_integer());
}

#[test]
fn dissipativity_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = with_config(
        tmp.path(),
        "dissipativity",
        "viscous",
        "lattice_k = 3\n[system]\npreset = \"ideal-gas-2d\"\nmu = 1.0\nkappa = 1.0\n",
    );
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    assert!(float(&report(&out.join("dissipativity_report.toml")), "delta") > 0.0);

    let (o, out) = with_config(
        tmp.path(),
        "dissipativity",
        "inviscid",
        "lattice_k = 3\n[system]\npreset = \"ideal-gas-2d\"\nmu = 0.0\nlambda = 0.0\nkappa = 0.0\n",
    );
    assert_eq!(status(&o), 1, "{}", stderr(&o));
    let rep = report(&out.join("dissipativity_report.toml"));
    assert_eq!(rep["criterion_found"].as_bool(), Some(false));
    assert_eq!(float(&rep, "delta"), 0.0);
}

#[test]
fn dissipativity_pair_beta_at_unit_alpha() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = with_config(
        tmp.path(),
        "dissipativity",
        "pair",
        "lattice_k = 2\n[system]\npreset = \"partially-dissipative-2x2\"\n[dissipativity]\nalphas = [1.0]\n",
    );
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let rep = report(&out.join("dissipativity_report.toml"));
    assert_eq!(float(&rep, "alpha"), 1.0);
    assert!((float(&rep, "beta") - 1.0).abs() < 1e-14);
    let betas = csv_column(&out.join("betas.csv"), "beta");
    assert_eq!(betas.len(), 1);
}

const SIM_BASE: &str = "\
lattice_k = 3
[system]
preset = \"ideal-gas-2d\"
[simulation]
t_end = 0.2
dt = 0.002
diagnostics_every = 10
";

#[test]
fn simulate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str, seed: &str| {
        let cfg = tmp.path().join("sim.toml");
        fs::write(&cfg, SIM_BASE).unwrap();
        let out = tmp.path().join(name);
        let o = wndkit(
            tmp.path(),
            &[
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                seed,
            ],
        );
        assert_eq!(status(&o), 0, "{}", stderr(&o));
        fs::read(out.join("diagnostics.csv")).unwrap()
    };
    let a = run("a", "11");
    let b = run("b", "11");
    let c = run("c", "12");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn simulate_thread_count_does_not_change_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("sim.toml");
    fs::write(&cfg, SIM_BASE).unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("t{threads}"));
        let o = wndkit(
            tmp.path(),
            &[
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                threads,
            ],
        );
        assert_eq!(status(&o), 0, "{}", stderr(&o));
        outputs.push(fs::read(out.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn simulate_zero_data_stays_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!("{SIM_BASE}[simulation.initial]\nkind = \"zero\"\n[outputs]\ntrajectory = true\n");
    let (o, out) = with_config(tmp.path(), "simulate", "zero", &cfg);
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let traj = out.join("trajectory.csv");
    let re = csv_column(&traj, "re");
    let im = csv_column(&traj, "im");
    assert_eq!(re.len(), 11 * 49 * 4);
    assert!(re.iter().chain(&im).all(|x| *x == 0.0));
    assert!(csv_column(&out.join("diagnostics.csv"), "energy").iter().all(|e| *e == 0.0));
}

#[test]
fn simulate_blow_up_exits_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!(
        "{SIM_BASE}diffusion = false\n[simulation.initial]\namplitude = 1e13\ndecay = 0.0\n"
    );
    let (o, out) = with_config(tmp.path(), "simulate", "boom", &cfg);
    assert_eq!(status(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("blow-up"));
    let rep = report(&out.join("simulation_report.toml"));
    assert_eq!(rep["status"].as_str(), Some("blow-up"));
    assert!(float(&rep, "magnitude") > 1e12);
}

#[test]
fn simulate_gas_energy_is_monotone() {
    let tmp = TempDir::new().unwrap();
    let cfg = "\
lattice_k = 8
[system]
preset = \"ideal-gas-2d\"
[simulation]
t_end = 5.0
diagnostics_every = 100
";
    let (o, out) = with_config(tmp.path(), "simulate", "long", cfg);
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let energy = csv_column(&out.join("diagnostics.csv"), "energy");
    assert_eq!(energy.len(), 51);
    assert!(energy.windows(2).all(|w| w[1] <= w[0]), "{energy:?}");
    let dat = fs::read_to_string(out.join("energy.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 51);
}

#[test]
fn wcns_report_constants() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = with_config(tmp.path(), "wcns-report", "wcns", "lattice_k = 3\n");
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let rep = report(&out.join("wcns_report.toml"));
    let c = (5.0f64 / 3.0).sqrt();
    assert!((float(&rep, "sound_speed") - c).abs() < 1e-14);
    assert!((float(&rep, "acoustic_diffusivity") - 0.8).abs() < 1e-14);
    let coupling = rep["coupling"].as_table().unwrap();
    assert!((coupling["c1"].as_float().unwrap() - 0.5).abs() < 1e-12);
    assert!((coupling["c2"].as_float().unwrap() - 0.5 * c).abs() < 1e-12);
}
