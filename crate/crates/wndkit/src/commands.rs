//! Subcommand pipelines. Each writes its files into the output directory and
//! returns an error whose exit code encodes the outcome.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wndkit_core::averaging::{
    averaged_diffusion, build_resonance_table, cyclic_residual, ResonanceTable, ResonanceTest,
};
use wndkit_core::directions::{fibonacci_directions, lattice_directions};
use wndkit_core::dissipativity::{dissipativity_report, DissipativityConfig};
use wndkit_core::navier_stokes::{
    interaction_coefficients, resonance_statistics, NsResonanceRule, ResonanceStatistics,
};
use wndkit_core::solver::{simulate, Formulation, Integrator, SimulationConfig, WndOperators};
use wndkit_core::spectral::DEFAULT_CLUSTER_TOL;
use wndkit_core::system::{validate_entropy_structure_with, EntropyTolerances};
use wndkit_core::{frequency_spectrum, FrequencyLattice, Spectrum, SystemSpec};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::export::{axis_columns, ints, num, write_toml, CsvOut};
use crate::initial::{initial_state, random_state};
use crate::presets::{resolve, ResolvedSystem};
use crate::spec_io::write_spec;

/// Number of random field triples checked by `operators`.
const CYCLIC_TRIALS: usize = 10;
const CYCLIC_TOL: f64 = 1e-10;

pub struct Run {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Run {
    pub fn new(config: RunConfig, out_override: Option<PathBuf>, seed_override: Option<u64>) -> CliResult<Self> {
        let out_dir = out_override.unwrap_or_else(|| config.outputs.directory.clone());
        std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
        let seed = seed_override.unwrap_or(config.simulation.initial.seed);
        Ok(Self {
            config,
            out_dir,
            seed,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn system(&self) -> CliResult<ResolvedSystem> {
        resolve(&self.config.system)
    }

    fn lattice(&self, spec: &SystemSpec) -> CliResult<FrequencyLattice> {
        Ok(FrequencyLattice::new(spec.dim(), self.config.lattice_k)?)
    }
}

fn resonance_test<'a>(run: &Run, sys: &ResolvedSystem, rule: &'a NsResonanceRule) -> CliResult<ResonanceTest<'a>> {
    if run.config.resonance.exact_rule {
        if sys.model.is_none() {
            return Err(CliError::Input(
                "resonance.exact_rule is available only for the ideal-gas and euler presets".into(),
            ));
        }
        Ok(ResonanceTest::Exact(rule))
    } else {
        Ok(ResonanceTest::Tolerance(run.config.resonance.tolerance))
    }
}

#[derive(Serialize)]
struct EntropyReportOut {
    system: String,
    passed: bool,
    min_eigenvalue_g: f64,
    max_asymmetry: f64,
    min_diffusion_eigenvalue: f64,
    diffusion_scale: f64,
    worst_direction: Vec<f64>,
    directions_sampled: usize,
    tol_sym: f64,
    tol_psd: f64,
}

pub fn validate(run: &Run) -> CliResult<()> {
    let sys = run.system()?;
    write_spec(&run.path("spec.toml"), sys.spec.data())?;
    let v = &run.config.validate;
    let rep = validate_entropy_structure_with(
        &sys.spec,
        v.directions,
        EntropyTolerances {
            tol_sym: v.tol_sym,
            tol_psd: v.tol_psd,
        },
    )?;
    write_toml(
        &run.path("entropy_report.toml"),
        &EntropyReportOut {
            system: sys.name,
            passed: rep.passed,
            min_eigenvalue_g: rep.min_eigenvalue_g,
            max_asymmetry: rep.max_asymmetry,
            min_diffusion_eigenvalue: rep.min_diffusion_eigenvalue,
            diffusion_scale: rep.diffusion_scale,
            worst_direction: rep.worst_direction,
            directions_sampled: rep.directions_sampled,
            tol_sym: rep.tol_sym,
            tol_psd: rep.tol_psd,
        },
    )?;
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::Analysis(format!(
            "entropy structure violated: min eigenvalue of G {:e}, asymmetry {:e}, min diffusion eigenvalue {:e}",
            rep.min_eigenvalue_g, rep.max_asymmetry, rep.min_diffusion_eigenvalue
        )))
    }
}

fn write_spectrum(path: &Path, spectrum: &Spectrum) -> CliResult<()> {
    let lat = spectrum.lattice();
    let mut header = axis_columns("xi", lat.dim());
    header.extend(["branch", "omega", "rank"].map(String::from));
    let mut csv = CsvOut::create(path, &header)?;
    for i in 0..lat.len() {
        let dec = spectrum.mode(i);
        for (j, w) in dec.frequencies().iter().enumerate() {
            let mut row: Vec<String> = ints(lat.mode(i)).collect();
            row.extend([j.to_string(), num(*w), dec.rank(j).to_string()]);
            csv.row(&row)?;
        }
    }
    csv.finish()
}

fn write_table(path: &Path, table: &ResonanceTable) -> CliResult<()> {
    let lat = table.lattice();
    let d = lat.dim();
    let mut header = axis_columns("k", d);
    header.push("j1".into());
    header.extend(axis_columns("l", d));
    header.push("j2".into());
    header.extend(axis_columns("m", d));
    header.extend(["j3", "defect"].map(String::from));
    let mut csv = CsvOut::create(path, &header)?;
    for t in table.triples() {
        let mut row: Vec<String> = ints(lat.mode(t.k)).collect();
        row.push(t.j1.to_string());
        row.extend(ints(lat.mode(t.l)));
        row.push(t.j2.to_string());
        row.extend(ints(lat.mode(t.m)));
        row.extend([t.j3.to_string(), num(t.defect)]);
        csv.row(&row)?;
    }
    csv.finish()
}

#[derive(Serialize)]
struct StatisticsOut {
    total: usize,
    in_in_in: usize,
    in_ac_ac: usize,
    ac_ac_ac: usize,
    ac_ac_in: usize,
    other: usize,
}

impl From<ResonanceStatistics> for StatisticsOut {
    fn from(s: ResonanceStatistics) -> Self {
        Self {
            total: s.total,
            in_in_in: s.in_in_in,
            in_ac_ac: s.in_ac_ac,
            ac_ac_ac: s.ac_ac_ac,
            ac_ac_in: s.ac_ac_in,
            other: s.other,
        }
    }
}

#[derive(Serialize)]
struct RecountOut {
    rule: String,
    triples: usize,
    identical: bool,
}

#[derive(Serialize)]
struct OperatorsReportOut {
    system: String,
    lattice_k: usize,
    modes: usize,
    resonance_rule: String,
    resonant_triples: usize,
    max_diffusion_block_norm: f64,
    max_cyclic_residual: f64,
    cyclic_trials: usize,
    seed: u64,
    elapsed_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    statistics: Option<StatisticsOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recount: Option<RecountOut>,
}

fn same_triples(a: &ResonanceTable, b: &ResonanceTable) -> bool {
    a.len() == b.len()
        && a
            .triples()
            .iter()
            .zip(b.triples())
            .all(|(x, y)| (x.k, x.j1, x.l, x.j2, x.m, x.j3) == (y.k, y.j1, y.l, y.j2, y.m, y.j3))
}

pub fn operators(run: &Run) -> CliResult<()> {
    let start = Instant::now();
    let sys = run.system()?;
    let spec = &sys.spec;
    let lat = run.lattice(spec)?;
    let rule = NsResonanceRule;
    let test = resonance_test(run, &sys, &rule)?;
    let spectrum = frequency_spectrum(spec, &lat, DEFAULT_CLUSTER_TOL)?;
    let avg = averaged_diffusion(spec, &spectrum)?;
    let table = build_resonance_table(&spectrum, test);

    write_spectrum(&run.path("spectrum.csv"), &spectrum)?;
    write_table(&run.path("resonance_table.csv"), &table)?;

    let n = spec.ncomp();
    let mut header = axis_columns("xi", lat.dim());
    header.extend(["row", "col", "re", "im"].map(String::from));
    let mut csv = CsvOut::create(&run.path("averaged_diffusion.csv"), &header)?;
    let mut max_block: f64 = 0.0;
    for i in 0..lat.len() {
        let block = avg.block(i);
        max_block = max_block.max(block.max_abs());
        for r in 0..n {
            for c in 0..n {
                let z = block[(r, c)];
                let mut row: Vec<String> = ints(lat.mode(i)).collect();
                row.extend([r.to_string(), c.to_string(), num(z.re), num(z.im)]);
                csv.row(&row)?;
            }
        }
    }
    csv.finish()?;

    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut csv = CsvOut::create(
        &run.path("cyclic_residuals.csv"),
        &["trial".to_string(), "residual".to_string()],
    )?;
    let mut worst: f64 = 0.0;
    for trial in 0..CYCLIC_TRIALS {
        let [w1, w2, w3] = [0, 1, 2].map(|_| random_state(&lat, n, 1.0, 2.0, rng.random()));
        let r = cyclic_residual(spec, &spectrum, &table, &w1, &w2, &w3)?;
        worst = worst.max(r);
        csv.row(&[trial.to_string(), num(r)])?;
    }
    csv.finish()?;

    let (statistics, recount) = match &sys.model {
        Some(_) => {
            let (other, name) = if run.config.resonance.exact_rule {
                (
                    build_resonance_table(&spectrum, ResonanceTest::Tolerance(run.config.resonance.tolerance)),
                    "tolerance",
                )
            } else {
                (build_resonance_table(&spectrum, ResonanceTest::Exact(&rule)), "exact")
            };
            let recount = RecountOut {
                rule: name.into(),
                triples: other.len(),
                identical: same_triples(&table, &other),
            };
            (Some(resonance_statistics(&spectrum, &table).into()), Some(recount))
        }
        None => (None, None),
    };
    let recount_ok = recount.as_ref().is_none_or(|r| r.identical);
    write_toml(
        &run.path("operators_report.toml"),
        &OperatorsReportOut {
            system: sys.name.clone(),
            lattice_k: lat.radius(),
            modes: lat.len(),
            resonance_rule: if run.config.resonance.exact_rule { "exact" } else { "tolerance" }.into(),
            resonant_triples: table.len(),
            max_diffusion_block_norm: max_block,
            max_cyclic_residual: worst,
            cyclic_trials: CYCLIC_TRIALS,
            seed: run.seed,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            statistics,
            recount,
        },
    )?;
    if worst > CYCLIC_TOL {
        return Err(CliError::Analysis(format!(
            "cyclic identity residual {worst:e} exceeds {CYCLIC_TOL:e}"
        )));
    }
    if !recount_ok {
        return Err(CliError::Analysis(
            "floating-point and exact resonance rules disagree".into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct WitnessOut {
    direction: Vec<f64>,
    frequency: f64,
    relative_residual: f64,
}

#[derive(Serialize)]
struct DissipativityReportOut {
    system: String,
    kawashima_ok: bool,
    criterion_found: bool,
    alpha: f64,
    beta: f64,
    c_a: f64,
    c_b: f64,
    epsilon: f64,
    delta: f64,
    delta_empirical: f64,
    delta_bound_holds: bool,
    directions_sampled: usize,
    witnesses: Vec<WitnessOut>,
}

pub fn dissipativity(run: &Run) -> CliResult<()> {
    let sys = run.system()?;
    let spec = &sys.spec;
    let lat = run.lattice(spec)?;
    let spectrum = frequency_spectrum(spec, &lat, DEFAULT_CLUSTER_TOL)?;
    let avg = averaged_diffusion(spec, &spectrum)?;
    let mut directions = lattice_directions(spec.dim(), run.config.lattice_k);
    directions.extend(fibonacci_directions(spec.dim(), run.config.dissipativity.directions));
    let cfg = DissipativityConfig {
        alphas: run.config.alphas(),
        directions,
        tol_null: run.config.dissipativity.tol_null,
    };
    let rep = dissipativity_report(spec, &avg, &cfg)?;

    let mut csv = CsvOut::create(&run.path("betas.csv"), &["alpha".to_string(), "beta".to_string()])?;
    for (a, b) in &rep.betas {
        csv.row(&[num(*a), num(*b)])?;
    }
    csv.finish()?;
    write_toml(
        &run.path("dissipativity_report.toml"),
        &DissipativityReportOut {
            system: sys.name,
            kawashima_ok: rep.kawashima_ok,
            criterion_found: rep.criterion_found,
            alpha: rep.alpha,
            beta: rep.beta,
            c_a: rep.c_a,
            c_b: rep.c_b,
            epsilon: rep.epsilon,
            delta: rep.delta,
            delta_empirical: rep.delta_empirical,
            delta_bound_holds: rep.delta_bound_holds,
            directions_sampled: rep.directions_sampled,
            witnesses: rep
                .witnesses
                .iter()
                .map(|w| WitnessOut {
                    direction: w.direction.clone(),
                    frequency: w.frequency,
                    relative_residual: w.relative_residual,
                })
                .collect(),
        },
    )?;
    if rep.delta > 0.0 {
        Ok(())
    } else {
        Err(CliError::Analysis(format!(
            "no decay rate certified (kawashima_ok = {}, best beta {:e})",
            rep.kawashima_ok, rep.beta
        )))
    }
}

#[derive(Serialize)]
struct SimulationReportOut {
    system: String,
    status: String,
    integrator: String,
    formulation: String,
    dt: f64,
    t_end: f64,
    steps: usize,
    seed: u64,
    initial_energy: f64,
    final_energy: f64,
    max_energy_increase: f64,
    max_budget_rate: f64,
    energy_monotone: bool,
    warnings: Vec<String>,
    elapsed_seconds: f64,
}

#[derive(Serialize)]
struct BlowUpOut {
    system: String,
    status: String,
    time: f64,
    mode: Vec<i64>,
    magnitude: f64,
    threshold: f64,
}

pub fn simulate_cmd(run: &Run) -> CliResult<()> {
    let start = Instant::now();
    let sys = run.system()?;
    let sim = &run.config.simulation;
    let spec = if sim.diffusion {
        sys.spec.clone()
    } else {
        let mut data = sys.spec.data().clone();
        data.diffusion.fill(0.0);
        SystemSpec::new(data)?
    };
    let lat = run.lattice(&spec)?;
    let rule = NsResonanceRule;
    let test = resonance_test(run, &sys, &rule)?;
    let ops = WndOperators::build(spec, &lat, test)?.with_nonlinearity(sim.nonlinear);
    let mut init = sim.initial.clone();
    init.seed = run.seed;
    let w0 = initial_state(&init, ops.spectrum(), ops.spec().ncomp())?;

    let integrator = Integrator::from_name(&sim.integrator)
        .ok_or_else(|| CliError::Input(format!("unknown integrator {}", sim.integrator)))?;
    let formulation = match sim.formulation.as_str() {
        "filtered" => Formulation::Filtered,
        _ => Formulation::Full,
    };
    let mut cfg = SimulationConfig::new(sim.t_end, sim.dt.unwrap_or_else(|| ops.default_dt()));
    cfg.diagnostics_every = sim.diagnostics_every;
    cfg.integrator = integrator;
    cfg.formulation = formulation;
    cfg.sobolev_orders = sim.sobolev_orders.clone();
    cfg.blowup_threshold = sim.blowup_threshold;
    cfg.keep_snapshots = run.config.outputs.trajectory;

    let result = match simulate(&ops, &w0, &cfg) {
        Ok(r) => r,
        Err(wndkit_core::Error::BlowUp {
            time,
            mode,
            magnitude,
        }) => {
            write_toml(
                &run.path("simulation_report.toml"),
                &BlowUpOut {
                    system: sys.name,
                    status: "blow-up".into(),
                    time,
                    mode: mode.clone(),
                    magnitude,
                    threshold: sim.blowup_threshold,
                },
            )?;
            return Err(CliError::BlowUp {
                time,
                mode,
                magnitude,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let diag = &result.diagnostics;

    let mut header: Vec<String> = ["time", "energy", "dissipation", "cumulative_dissipation"]
        .map(String::from)
        .to_vec();
    header.extend(diag.sobolev_orders.iter().map(|s| format!("h{s}_norm")));
    header.push("budget_residual".into());
    let mut csv = CsvOut::create(&run.path("diagnostics.csv"), &header)?;
    for r in 0..diag.times.len() {
        let mut row = vec![
            num(diag.times[r]),
            num(diag.energy[r]),
            num(diag.dissipation[r]),
            num(diag.cumulative_dissipation[r]),
        ];
        row.extend(diag.sobolev.iter().map(|col| num(col[r])));
        row.push(num(diag.budget_residual[r]));
        csv.row(&row)?;
    }
    csv.finish()?;

    let mut dat = String::from("# time energy\n");
    for (t, e) in diag.times.iter().zip(&diag.energy) {
        dat.push_str(&format!("{} {}\n", num(*t), num(*e)));
    }
    crate::export::write_text(&run.path("energy.dat"), &dat)?;

    if run.config.outputs.trajectory {
        let n = ops.spec().ncomp();
        let mut header = vec!["time".to_string()];
        header.extend(axis_columns("xi", lat.dim()));
        header.extend(["component", "re", "im"].map(String::from));
        let mut csv = CsvOut::create(&run.path("trajectory.csv"), &header)?;
        for snap in &result.snapshots {
            for i in 0..lat.len() {
                for (c, z) in snap.mode(i).iter().enumerate().take(n) {
                    let mut row = vec![num(snap.time)];
                    row.extend(ints(lat.mode(i)));
                    row.extend([c.to_string(), num(z.re), num(z.im)]);
                    csv.row(&row)?;
                }
            }
        }
        csv.finish()?;
    }

    let max_increase = diag.max_energy_increase();
    write_toml(
        &run.path("simulation_report.toml"),
        &SimulationReportOut {
            system: sys.name,
            status: "completed".into(),
            integrator: integrator.name().into(),
            formulation: sim.formulation.clone(),
            dt: result.dt,
            t_end: sim.t_end,
            steps: result.steps,
            seed: run.seed,
            initial_energy: diag.energy.first().copied().unwrap_or(0.0),
            final_energy: diag.energy.last().copied().unwrap_or(0.0),
            max_energy_increase: max_increase,
            max_budget_rate: diag.max_budget_rate(),
            energy_monotone: max_increase <= 0.0,
            warnings: result.warnings.clone(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
    )?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

#[derive(Serialize)]
struct CouplingOut {
    c1: f64,
    c2: f64,
    c3: f64,
    in_ac_samples: usize,
    in_ac_rms_residual: f64,
    in_ac_rms_value: f64,
    c4_mean: f64,
    c4_min: f64,
    c4_max: f64,
    ac_ac_samples: usize,
}

#[derive(Serialize)]
struct WcnsReportOut {
    system: String,
    lattice_k: usize,
    density: f64,
    temperature: f64,
    sound_speed: f64,
    acoustic_diffusivity: f64,
    specific_heat_pressure: f64,
    statistics: StatisticsOut,
    coupling: CouplingOut,
}

pub fn wcns_report(run: &Run) -> CliResult<()> {
    let sys = run.system()?;
    let model = sys.model.as_ref().ok_or_else(|| {
        CliError::Input("wcns-report needs a compressible Navier-Stokes preset".into())
    })?;
    let lat = run.lattice(&sys.spec)?;
    let rule = NsResonanceRule;
    let test = resonance_test(run, &sys, &rule)?;
    let spectrum = frequency_spectrum(&sys.spec, &lat, DEFAULT_CLUSTER_TOL)?;
    let table = build_resonance_table(&spectrum, test);
    let fit = interaction_coefficients(model, &spectrum, &table)?;
    write_toml(
        &run.path("wcns_report.toml"),
        &WcnsReportOut {
            system: sys.name.clone(),
            lattice_k: lat.radius(),
            density: model.density(),
            temperature: model.temperature(),
            sound_speed: model.sound_speed(),
            acoustic_diffusivity: model.acoustic_diffusivity(),
            specific_heat_pressure: model.specific_heat_pressure(),
            statistics: resonance_statistics(&spectrum, &table).into(),
            coupling: CouplingOut {
                c1: fit.c1,
                c2: fit.c2,
                c3: fit.c3,
                in_ac_samples: fit.in_ac_samples,
                in_ac_rms_residual: fit.in_ac_rms_residual,
                in_ac_rms_value: fit.in_ac_rms_value,
                c4_mean: fit.c4_mean,
                c4_min: fit.c4_min,
                c4_max: fit.c4_max,
                ac_ac_samples: fit.ac_ac_samples,
            },
        },
    )
}
