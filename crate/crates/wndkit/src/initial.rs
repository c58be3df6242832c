//! Initial data for `simulate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wndkit_core::{Complex64, FrequencyLattice, SpectralState, Spectrum};

use crate::config::InitialConfig;
use crate::error::{CliError, CliResult};

/// Seeded random real field: each coefficient is uniform in the square of
/// half-width `amplitude · (1 + |ξ|²)^(−decay/2)`, then made Hermitian.
pub fn random_state(
    lattice: &FrequencyLattice,
    ncomp: usize,
    amplitude: f64,
    decay: f64,
    seed: u64,
) -> SpectralState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = SpectralState::zeros(lattice, ncomp);
    for i in 0..lattice.len() {
        let scale = amplitude * (1.0 + lattice.norm_sq(i) as f64).powf(-0.5 * decay);
        for z in w.mode_mut(i) {
            *z = Complex64::new(
                scale * rng.random_range(-1.0..1.0),
                scale * rng.random_range(-1.0..1.0),
            );
        }
    }
    w.enforce_reality();
    w
}

/// Keeps only the zero-frequency eigenspace of every mode.
fn project_onto_null_spaces(w: &mut SpectralState, spectrum: &Spectrum) {
    for i in 0..spectrum.lattice().len() {
        let dec = spectrum.mode(i);
        let projected = match dec.null_index() {
            Some(j) => dec.projector(j).mul_vec(w.mode(i)),
            None => vec![Complex64::new(0.0, 0.0); w.ncomp()],
        };
        w.mode_mut(i).copy_from_slice(&projected);
    }
}

pub fn initial_state(cfg: &InitialConfig, spectrum: &Spectrum, ncomp: usize) -> CliResult<SpectralState> {
    let lattice = spectrum.lattice();
    let mut w = match cfg.kind.as_str() {
        "zero" => SpectralState::zeros(lattice, ncomp),
        "random" => {
            let mut w = random_state(lattice, ncomp, cfg.amplitude, cfg.decay, cfg.seed);
            if cfg.incompressible_only {
                project_onto_null_spaces(&mut w, spectrum);
            }
            w
        }
        "modes" => {
            let mut w = SpectralState::zeros(lattice, ncomp);
            for m in &cfg.modes {
                if m.re.len() != ncomp || !(m.im.is_empty() || m.im.len() == ncomp) {
                    return Err(CliError::Input(format!(
                        "initial mode {:?} needs {ncomp} real parts and 0 or {ncomp} imaginary parts",
                        m.k
                    )));
                }
                let v: Vec<Complex64> = (0..ncomp)
                    .map(|c| Complex64::new(m.re[c], m.im.get(c).copied().unwrap_or(0.0)))
                    .collect();
                w.set_mode_real(&m.k, &v)?;
            }
            w
        }
        other => return Err(CliError::Input(format!("unknown initial kind {other}"))),
    };
    if cfg.zero_mean && cfg.kind == "random" {
        let z = lattice.zero_index();
        w.mode_mut(z).iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    }
    Ok(w)
}
