//! Built-in systems and resolution of the `[system]` config section.

use wndkit_core::navier_stokes::CnsModel;
use wndkit_core::{SpecData, SystemSpec};

use crate::config::SystemConfig;
use crate::error::{CliError, CliResult};
use crate::spec_io;

pub const PRESET_NAMES: &[&str] = &[
    "ideal-gas-1d",
    "ideal-gas-2d",
    "ideal-gas-3d",
    "euler-2d",
    "partially-dissipative-2x2",
    "scalar-advection-diffusion",
];

const DEFAULT_PRESET: &str = "ideal-gas-2d";

/// A system ready for analysis. `model` is present for compressible
/// Navier-Stokes systems, which unlocks the exact resonance rule and the
/// WCNS report.
pub struct ResolvedSystem {
    pub name: String,
    pub spec: SystemSpec,
    pub model: Option<CnsModel>,
}

struct GasParams {
    rho: f64,
    theta: f64,
    mu: f64,
    lambda: f64,
    kappa: f64,
    d_micro: f64,
}

impl GasParams {
    fn with_overrides(mut self, sys: &SystemConfig) -> Self {
        self.rho = sys.rho.unwrap_or(self.rho);
        self.theta = sys.theta.unwrap_or(self.theta);
        self.mu = sys.mu.unwrap_or(self.mu);
        self.lambda = sys.lambda.unwrap_or(self.lambda);
        self.kappa = sys.kappa.unwrap_or(self.kappa);
        self.d_micro = sys.d_micro.unwrap_or(self.d_micro);
        self
    }

    fn build(&self, dim: usize) -> CliResult<CnsModel> {
        Ok(CnsModel::ideal_gas(
            dim,
            self.rho,
            self.theta,
            self.mu,
            self.lambda,
            self.kappa,
            self.d_micro,
        )?)
    }
}

fn reference_gas() -> GasParams {
    GasParams {
        rho: 1.0,
        theta: 1.0,
        mu: 1.0,
        lambda: 0.0,
        kappa: 1.0,
        d_micro: 3.0,
    }
}

fn has_gas_overrides(sys: &SystemConfig) -> bool {
    [sys.rho, sys.theta, sys.mu, sys.lambda, sys.kappa, sys.d_micro]
        .iter()
        .any(Option::is_some)
}

/// `∂_t u + ∂_x v = ∂_x² u`, `∂_t v + ∂_x u = 0`.
fn partially_dissipative_pair() -> SpecData {
    let mut d = SpecData::zeros(1, 2);
    d.advection = vec![0.0, 1.0, 1.0, 0.0];
    d.diffusion = vec![1.0, 0.0, 0.0, 0.0];
    d.labels = vec!["u".into(), "v".into()];
    d
}

/// Viscous Burgers on the circle: `∂_t u + ∂_x u + u ∂_x u = ∂_x² u`.
fn scalar_advection_diffusion() -> SpecData {
    let mut d = SpecData::zeros(1, 1);
    d.advection = vec![1.0];
    d.diffusion = vec![1.0];
    d.quadratic = vec![0.5];
    d.labels = vec!["u".into()];
    d
}

pub fn preset(name: &str, sys: &SystemConfig) -> CliResult<ResolvedSystem> {
    let gas_dim = match name {
        "ideal-gas-1d" => Some(1),
        "ideal-gas-2d" | "euler-2d" => Some(2),
        "ideal-gas-3d" => Some(3),
        _ => None,
    };
    if let Some(dim) = gas_dim {
        let mut base = reference_gas();
        if name == "euler-2d" {
            base.mu = 0.0;
            base.kappa = 0.0;
        }
        let model = base.with_overrides(sys).build(dim)?;
        return Ok(ResolvedSystem {
            name: name.to_string(),
            spec: model.spec().clone(),
            model: Some(model),
        });
    }
    if has_gas_overrides(sys) {
        return Err(CliError::Input(format!(
            "preset {name} does not accept gas parameters (rho, theta, mu, lambda, kappa, d_micro)"
        )));
    }
    let data = match name {
        "partially-dissipative-2x2" => partially_dissipative_pair(),
        "scalar-advection-diffusion" => scalar_advection_diffusion(),
        _ => {
            return Err(CliError::Input(format!(
                "unknown preset {name}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(ResolvedSystem {
        name: name.to_string(),
        spec: SystemSpec::new(data)?,
        model: None,
    })
}

/// Turns the `[system]` section into a spec. With nothing given the 2D
/// reference ideal gas is used.
pub fn resolve(sys: &SystemConfig) -> CliResult<ResolvedSystem> {
    if let Some(file) = &sys.spec_file {
        let data = spec_io::read_spec(file)?;
        return custom(file.display().to_string(), data, sys);
    }
    if let Some(inline) = &sys.spec {
        return custom("inline".to_string(), inline.to_data()?, sys);
    }
    preset(sys.preset.as_deref().unwrap_or(DEFAULT_PRESET), sys)
}

fn custom(name: String, data: SpecData, sys: &SystemConfig) -> CliResult<ResolvedSystem> {
    if has_gas_overrides(sys) {
        return Err(CliError::Input(
            "gas parameters apply only to the ideal-gas and euler presets".into(),
        ));
    }
    Ok(ResolvedSystem {
        name,
        spec: SystemSpec::new(data)?,
        model: None,
    })
}
