//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::spec_io::SpecFile;

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default = "default_lattice_k")]
    pub lattice_k: usize,
    #[serde(default)]
    pub resonance: ResonanceConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub dissipativity: DissipativityConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_lattice_k() -> usize {
    4
}

/// Either a named preset (optionally with ideal-gas overrides) or an explicit
/// spec, inline or in a separate file.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub preset: Option<String>,
    pub spec_file: Option<PathBuf>,
    pub spec: Option<SpecFile>,
    pub rho: Option<f64>,
    pub theta: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub d_micro: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    #[serde(default = "default_resonance_tol")]
    pub tolerance: f64,
    /// Use the integer resonance rule (compressible Navier-Stokes only).
    #[serde(default)]
    pub exact_rule: bool,
}

fn default_resonance_tol() -> f64 {
    wndkit_core::averaging::DEFAULT_RESONANCE_TOL
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        Self {
            tolerance: default_resonance_tol(),
            exact_rule: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_direction_count")]
    pub directions: usize,
    #[serde(default = "default_tol")]
    pub tol_sym: f64,
    #[serde(default = "default_tol")]
    pub tol_psd: f64,
}

fn default_direction_count() -> usize {
    wndkit_core::dissipativity::DEFAULT_FIBONACCI_DIRECTIONS
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            directions: default_direction_count(),
            tol_sym: default_tol(),
            tol_psd: default_tol(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DissipativityConfig {
    /// Explicit α values; when absent a log grid is used.
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "default_alpha_min")]
    pub alpha_min: f64,
    #[serde(default = "default_alpha_max")]
    pub alpha_max: f64,
    #[serde(default = "default_alpha_count")]
    pub alpha_count: usize,
    /// Size of the Fibonacci direction sample added to the lattice rays.
    #[serde(default = "default_direction_count")]
    pub directions: usize,
    #[serde(default = "default_tol")]
    pub tol_null: f64,
}

fn default_alpha_min() -> f64 {
    1e-2
}

fn default_alpha_max() -> f64 {
    1e2
}

fn default_alpha_count() -> usize {
    32
}

impl Default for DissipativityConfig {
    fn default() -> Self {
        Self {
            alphas: None,
            alpha_min: default_alpha_min(),
            alpha_max: default_alpha_max(),
            alpha_count: default_alpha_count(),
            directions: default_direction_count(),
            tol_null: default_tol(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Defaults to `min(1e-3, 0.1/ω_max)`.
    pub dt: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_integrator")]
    pub integrator: String,
    #[serde(default = "default_formulation")]
    pub formulation: String,
    #[serde(default = "default_diagnostics_every")]
    pub diagnostics_every: usize,
    #[serde(default = "default_sobolev_orders")]
    pub sobolev_orders: Vec<f64>,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    #[serde(default = "default_true")]
    pub diffusion: bool,
    #[serde(default)]
    pub initial: InitialConfig,
}

fn default_t_end() -> f64 {
    1.0
}

fn default_integrator() -> String {
    "if_rk4".into()
}

fn default_formulation() -> String {
    "full".into()
}

fn default_diagnostics_every() -> usize {
    100
}

fn default_sobolev_orders() -> Vec<f64> {
    vec![1.0]
}

fn default_blowup() -> f64 {
    wndkit_core::solver::DEFAULT_BLOWUP_THRESHOLD
}

fn default_true() -> bool {
    true
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: default_t_end(),
            integrator: default_integrator(),
            formulation: default_formulation(),
            diagnostics_every: default_diagnostics_every(),
            sobolev_orders: default_sobolev_orders(),
            blowup_threshold: default_blowup(),
            nonlinear: true,
            diffusion: true,
            initial: InitialConfig::default(),
        }
    }
}

/// Initial data: seeded random coefficients with power-law decay, an
/// explicit mode list, or zero.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "default_initial_kind")]
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    /// Coefficients scale like `amplitude · (1 + |ξ|²)^(−decay/2)`.
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_true")]
    pub zero_mean: bool,
    /// Keep only the zero-frequency (incompressible) part of the random data.
    #[serde(default)]
    pub incompressible_only: bool,
    #[serde(default)]
    pub modes: Vec<ModeInit>,
}

fn default_initial_kind() -> String {
    "random".into()
}

fn default_decay() -> f64 {
    2.0
}

fn default_amplitude() -> f64 {
    0.1
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: default_initial_kind(),
            seed: 0,
            decay: default_decay(),
            amplitude: default_amplitude(),
            zero_mean: true,
            incompressible_only: false,
            modes: Vec::new(),
        }
    }
}

/// `Ŵ(k) = re + i·im`; the conjugate mode is filled in automatically.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeInit {
    pub k: Vec<i64>,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub directory: PathBuf,
    /// Also write every snapshot's coefficients.
    #[serde(default)]
    pub trajectory: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("wndkit-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_out_dir(),
            trajectory: false,
        }
    }
}

impl RunConfig {
    /// Defaults: ideal-gas-2d on the radius-4 lattice.
    pub fn default_run() -> Self {
        Self {
            lattice_k: default_lattice_k(),
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str, origin: &Path) -> CliResult<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if let (Some(spec_file), Some(dir)) = (&cfg.system.spec_file, origin.parent()) {
            if spec_file.is_relative() {
                cfg.system.spec_file = Some(dir.join(spec_file));
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn check(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Input(m.to_string()));
        if self.lattice_k < 1 {
            return bad("lattice_k must be at least 1");
        }
        let sim = &self.simulation;
        if let Some(dt) = sim.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("simulation.dt must be positive");
            }
        }
        if !(sim.t_end >= 0.0 && sim.t_end.is_finite()) {
            return bad("simulation.t_end must be nonnegative");
        }
        if sim.diagnostics_every == 0 {
            return bad("simulation.diagnostics_every must be at least 1");
        }
        if wndkit_core::solver::Integrator::from_name(&sim.integrator).is_none() {
            return bad("simulation.integrator must be if_rk2 or if_rk4");
        }
        if !matches!(sim.formulation.as_str(), "full" | "filtered") {
            return bad("simulation.formulation must be full or filtered");
        }
        if !matches!(sim.initial.kind.as_str(), "random" | "modes" | "zero") {
            return bad("simulation.initial.kind must be random, modes or zero");
        }
        if !(self.resonance.tolerance >= 0.0) {
            return bad("resonance.tolerance must be nonnegative");
        }
        let d = &self.dissipativity;
        if let Some(a) = &d.alphas {
            if a.is_empty() || a.iter().any(|x| !(*x > 0.0)) {
                return bad("dissipativity.alphas must be positive and nonempty");
            }
        } else if !(d.alpha_min > 0.0 && d.alpha_max >= d.alpha_min && d.alpha_count >= 1) {
            return bad("dissipativity alpha grid must satisfy 0 < alpha_min <= alpha_max");
        }
        let sources = [
            self.system.preset.is_some(),
            self.system.spec.is_some(),
            self.system.spec_file.is_some(),
        ];
        if sources.iter().filter(|x| **x).count() > 1 {
            return bad("give at most one of system.preset, system.spec, system.spec_file");
        }
        Ok(())
    }

    /// α grid for the criterion search.
    pub fn alphas(&self) -> Vec<f64> {
        let d = &self.dissipativity;
        match &d.alphas {
            Some(a) => a.clone(),
            None => wndkit_core::dissipativity::log_grid(d.alpha_min, d.alpha_max, d.alpha_count),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("", Path::new("x.toml")).unwrap();
        assert_eq!(cfg.lattice_k, 4);
        assert_eq!(cfg.simulation.integrator, "if_rk4");
        assert_eq!(cfg.alphas().len(), 32);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = RunConfig::from_toml("lattice_k = [", Path::new("bad.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
        assert!(matches!(err, CliError::Parse { .. }));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("latice_k = 3", Path::new("x.toml")).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "lattice_k = 0",
            "[simulation]\ndt = -1.0",
            "[simulation]\nintegrator = \"euler\"",
        ] {
            assert!(matches!(
                RunConfig::from_toml(text, Path::new("x.toml")),
                Err(CliError::Input(_))
            ));
        }
    }
}
