//! Spectral Galerkin time integration of `∂ₜW + AW + Q̄(W,W) = D̄W` and of its
//! filtered form, with energy diagnostics.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::averaging::{
    apply_qbar_real, averaged_diffusion, build_resonance_table, AveragedDiffusion, ResonanceTable,
    ResonanceTest,
};
use crate::error::{Error, Result};
use crate::lattice::FrequencyLattice;
use crate::linalg::{expm, CMatrix};
use crate::math;
use crate::spectral::{frequency_spectrum, Spectrum, DEFAULT_CLUSTER_TOL};
use crate::state::{gradient_sobolev_norm, h_norm, inner_product, sobolev_norm, SpectralState};
use crate::system::SystemSpec;

/// Coefficient magnitude treated as blow-up.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e12;

/// Everything the time stepper needs: the spec, its spectrum, `D̄` and the
/// resonance table defining `Q̄`.
#[derive(Clone, Debug)]
pub struct WndOperators {
    spec: SystemSpec,
    spectrum: Spectrum,
    diffusion: AveragedDiffusion,
    table: ResonanceTable,
    nonlinear: bool,
}

impl WndOperators {
    pub fn new(
        spec: SystemSpec,
        spectrum: Spectrum,
        diffusion: AveragedDiffusion,
        table: ResonanceTable,
    ) -> Result<Self> {
        if spectrum.lattice() != diffusion.lattice() || spectrum.lattice() != table.lattice() {
            return Err(Error::LatticeMismatch);
        }
        if spectrum.lattice().dim() != spec.dim() {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self {
            spec,
            spectrum,
            diffusion,
            table,
            nonlinear: true,
        })
    }

    /// Builds spectrum, averaged diffusion and resonance table on `lattice`.
    pub fn build(spec: SystemSpec, lattice: &FrequencyLattice, test: ResonanceTest<'_>) -> Result<Self> {
        let spectrum = frequency_spectrum(&spec, lattice, DEFAULT_CLUSTER_TOL)?;
        let diffusion = averaged_diffusion(&spec, &spectrum)?;
        let table = build_resonance_table(&spectrum, test);
        Self::new(spec, spectrum, diffusion, table)
    }

    /// Switches the quadratic term on or off.
    pub fn with_nonlinearity(mut self, enabled: bool) -> Self {
        self.nonlinear = enabled;
        self
    }

    pub fn nonlinear(&self) -> bool {
        self.nonlinear
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn diffusion(&self) -> &AveragedDiffusion {
        &self.diffusion
    }

    pub fn table(&self) -> &ResonanceTable {
        &self.table
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        self.spectrum.lattice()
    }

    pub fn omega_max(&self) -> f64 {
        self.spectrum.omega_scale()
    }

    /// `min(1e-3, 0.1/ω_max)`.
    pub fn default_dt(&self) -> f64 {
        let w = self.omega_max();
        if w > 0.0 {
            f64::min(1e-3, 0.1 / w)
        } else {
            1e-3
        }
    }

    fn check_state(&self, w: &SpectralState) -> Result<()> {
        if w.lattice() != self.lattice() || w.ncomp() != self.spec.ncomp() {
            return Err(Error::LatticeMismatch);
        }
        Ok(())
    }

    /// `A W = Σ_j iω_j P_j Ŵ` per mode.
    pub fn advect(&self, w: &SpectralState) -> Result<SpectralState> {
        self.check_state(w)?;
        let n = self.spec.ncomp();
        let mut out = SpectralState::zeros(self.lattice(), n);
        out.time = w.time;
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..self.lattice().len() {
            let dec = self.spectrum.mode(i);
            let dst = out.mode_mut(i);
            for (omega, p) in dec.frequencies().iter().zip(dec.projectors()) {
                p.mul_vec_into(w.mode(i), &mut tmp);
                for (o, t) in dst.iter_mut().zip(&tmp) {
                    *o += Complex64::new(0.0, *omega) * t;
                }
            }
        }
        Ok(out)
    }

    /// `Q̄(W, W)` for a real state (zero when the nonlinearity is disabled).
    pub fn qbar(&self, w: &SpectralState) -> Result<SpectralState> {
        self.check_state(w)?;
        if !self.nonlinear {
            let mut z = SpectralState::zeros(self.lattice(), self.spec.ncomp());
            z.time = w.time;
            return Ok(z);
        }
        apply_qbar_real(&self.spec, &self.spectrum, &self.table, w)
    }

    /// `½‖W‖²_H`.
    pub fn energy(&self, w: &SpectralState) -> Result<f64> {
        let n = h_norm(&self.spec, w)?;
        Ok(0.5 * n * n)
    }

    /// `−(W | D̄W)_H`.
    pub fn dissipation(&self, w: &SpectralState) -> Result<f64> {
        self.diffusion.dissipation(&self.spec, w)
    }

    /// Linear generator of one mode: `−iΣω_jP_j + D̄`, or `D̄` alone for the
    /// filtered formulation.
    pub fn linear_generator(&self, mode: usize, formulation: Formulation) -> CMatrix {
        let mut l = self.diffusion.block(mode).clone();
        if formulation == Formulation::Full {
            let dec = self.spectrum.mode(mode);
            for (omega, p) in dec.frequencies().iter().zip(dec.projectors()) {
                l = &l - &p.scale(Complex64::new(0.0, *omega));
            }
        }
        l
    }
}

/// Tendency `−AW − Q̄(W,W) + D̄W`.
pub fn rhs(ops: &WndOperators, w: &SpectralState) -> Result<SpectralState> {
    let mut out = ops.diffusion.apply(w)?;
    out.axpy(Complex64::new(-1.0, 0.0), &ops.advect(w)?);
    out.axpy(Complex64::new(-1.0, 0.0), &ops.qbar(w)?);
    Ok(out)
}

/// Integrating-factor Runge-Kutta schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    IfRk2,
    IfRk4,
}

impl Integrator {
    pub fn order(self) -> u32 {
        match self {
            Integrator::IfRk2 => 2,
            Integrator::IfRk4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Integrator::IfRk2 => "if_rk2",
            Integrator::IfRk4 => "if_rk4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "if_rk2" => Some(Integrator::IfRk2),
            "if_rk4" => Some(Integrator::IfRk4),
            _ => None,
        }
    }
}

/// Which variable is advanced: `W` itself, or the filtered `Y = e^{tA}W`
/// whose linear part is `D̄` only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    Full,
    Filtered,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub integrator: Integrator,
    pub formulation: Formulation,
    pub blowup_threshold: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            integrator: Integrator::IfRk4,
            formulation: Formulation::Full,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }
}

/// Result of one step: the new state and `∫ −(W|D̄W)_H dt` over the step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: SpectralState,
    pub dissipated: f64,
}

/// Time stepper with cached per-mode propagators `e^{h L(ξ)}` and `e^{h L(ξ)/2}`.
pub struct Stepper<'a> {
    ops: &'a WndOperators,
    config: IntegratorConfig,
    dt: f64,
    full: Vec<CMatrix>,
    half: Vec<CMatrix>,
}

impl<'a> Stepper<'a> {
    pub fn new(ops: &'a WndOperators, config: IntegratorConfig, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let lat = ops.lattice();
        let m = lat.len();
        let zero = lat.zero_index();
        let n = ops.spec.ncomp();
        let mut full = vec![CMatrix::zeros(n, n); m];
        let mut half = vec![CMatrix::zeros(n, n); m];
        // Propagators of −ξ are conjugates of those of ξ; mirroring keeps
        // real states exactly real.
        for i in zero..m {
            let l = ops.linear_generator(i, config.formulation);
            let e_full = expm(&l.scale(Complex64::new(dt, 0.0)));
            let e_half = expm(&l.scale(Complex64::new(0.5 * dt, 0.0)));
            let j = lat.negated_index(i);
            if i == zero {
                full[i] = CMatrix::from_fn(n, n, |r, c| Complex64::new(e_full[(r, c)].re, 0.0));
                half[i] = CMatrix::from_fn(n, n, |r, c| Complex64::new(e_half[(r, c)].re, 0.0));
            } else {
                full[j] = e_full.conj();
                half[j] = e_half.conj();
                full[i] = e_full;
                half[i] = e_half;
            }
        }
        Ok(Self {
            ops,
            config,
            dt,
            full,
            half,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn config(&self) -> IntegratorConfig {
        self.config
    }

    fn propagate(&self, props: &[CMatrix], w: &SpectralState) -> SpectralState {
        let mut out = w.clone();
        for (i, p) in props.iter().enumerate() {
            p.mul_vec_into(w.mode(i), out.mode_mut(i));
        }
        out
    }

    /// `−Q̄(W, W)`.
    fn nonlinear(&self, w: &SpectralState) -> Result<SpectralState> {
        let mut q = self.ops.qbar(w)?;
        for z in q.coeffs_mut() {
            *z = -*z;
        }
        Ok(q)
    }

    fn lin_comb(base: &SpectralState, terms: &[(f64, &SpectralState)]) -> SpectralState {
        let mut out = base.clone();
        for (s, t) in terms {
            out.axpy(Complex64::new(*s, 0.0), t);
        }
        out
    }

    /// Advances `w` by one step of size `dt`.
    pub fn step(&self, w: &SpectralState) -> Result<StepOutcome> {
        self.ops.check_state(w)?;
        let h = self.dt;
        let diss = |s: &SpectralState| self.ops.dissipation(s);
        let mut next = match self.config.integrator {
            Integrator::IfRk2 => {
                let a = self.nonlinear(w)?;
                let wp = self.propagate(&self.full, &Self::lin_comb(w, &[(h, &a)]));
                let b = self.nonlinear(&wp)?;
                let mut next = self.propagate(&self.full, &Self::lin_comb(w, &[(0.5 * h, &a)]));
                next.axpy(Complex64::new(0.5 * h, 0.0), &b);
                let dissipated = 0.5 * h * (diss(w)? + diss(&wp)?);
                StepOutcome {
                    state: next,
                    dissipated,
                }
            }
            Integrator::IfRk4 => {
                let a = self.nonlinear(w)?;
                let e_half_w = self.propagate(&self.half, w);
                let e_full_w = self.propagate(&self.full, w);
                let wa = self.propagate(&self.half, &Self::lin_comb(w, &[(0.5 * h, &a)]));
                let b = self.nonlinear(&wa)?;
                let wb = Self::lin_comb(&e_half_w, &[(0.5 * h, &b)]);
                let c = self.nonlinear(&wb)?;
                let e_half_c = self.propagate(&self.half, &c);
                let wc = Self::lin_comb(&e_full_w, &[(h, &e_half_c)]);
                let d = self.nonlinear(&wc)?;
                let bc = Self::lin_comb(&b, &[(1.0, &c)]);
                let e_half_bc = self.propagate(&self.half, &bc);
                let e_full_a = self.propagate(&self.full, &a);
                let next = Self::lin_comb(
                    &e_full_w,
                    &[(h / 6.0, &e_full_a), (h / 3.0, &e_half_bc), (h / 6.0, &d)],
                );
                let dissipated = h / 6.0 * (diss(w)? + 2.0 * diss(&wa)? + 2.0 * diss(&wb)? + diss(&wc)?);
                StepOutcome {
                    state: next,
                    dissipated,
                }
            }
        };
        next.state.time = w.time + h;
        check_blowup(&next.state, self.config.blowup_threshold)?;
        Ok(next)
    }
}

fn check_blowup(w: &SpectralState, threshold: f64) -> Result<()> {
    let lat = w.lattice();
    for i in 0..lat.len() {
        let worst = w
            .mode(i)
            .iter()
            .fold(0.0, |m: f64, z| if z.norm().is_finite() { m.max(z.norm()) } else { f64::INFINITY });
        if !(worst <= threshold) {
            return Err(Error::BlowUp {
                time: w.time,
                mode: lat.mode(i).to_vec(),
                magnitude: worst,
            });
        }
    }
    Ok(())
}

/// Single step with freshly built propagators.
pub fn step(
    ops: &WndOperators,
    config: IntegratorConfig,
    w: &SpectralState,
    dt: f64,
) -> Result<SpectralState> {
    Ok(Stepper::new(ops, config, dt)?.step(w)?.state)
}

/// Time series recorded by [`simulate`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    /// `½‖W‖²_H`.
    pub energy: Vec<f64>,
    /// `−(W | D̄W)_H`.
    pub dissipation: Vec<f64>,
    /// Integrated dissipation since `t = 0`.
    pub cumulative_dissipation: Vec<f64>,
    pub sobolev_orders: Vec<f64>,
    /// `sobolev[o][i]` is `‖W(tᵢ)‖_{H^{s_o}}`.
    pub sobolev: Vec<Vec<f64>>,
    /// Change of `energy + cumulative_dissipation` over each recorded interval
    /// (zero for the first record).
    pub budget_residual: Vec<f64>,
}

impl DiagnosticsSeries {
    /// `energy(t) + ∫₀ᵗ dissipation − energy(0)` at every record.
    pub fn energy_identity_defect(&self) -> Vec<f64> {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        self.energy
            .iter()
            .zip(&self.cumulative_dissipation)
            .map(|(e, d)| e + d - e0)
            .collect()
    }

    /// Largest `|energy identity defect| / t` over records with `t > 0`.
    pub fn max_budget_rate(&self) -> f64 {
        let t0 = self.times.first().copied().unwrap_or(0.0);
        self.energy_identity_defect()
            .iter()
            .zip(&self.times)
            .filter(|(_, t)| **t > t0)
            .map(|(d, t)| math::abs(*d) / (t - t0))
            .fold(0.0, f64::max)
    }

    /// Largest increase of energy between consecutive records.
    pub fn max_energy_increase(&self) -> f64 {
        self.energy
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Record diagnostics and a snapshot every this many steps.
    pub diagnostics_every: usize,
    pub integrator: Integrator,
    pub formulation: Formulation,
    pub sobolev_orders: Vec<f64>,
    pub blowup_threshold: f64,
    pub keep_snapshots: bool,
}

impl SimulationConfig {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            diagnostics_every: 100,
            integrator: Integrator::IfRk4,
            formulation: Formulation::Full,
            sobolev_orders: vec![1.0],
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            keep_snapshots: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub snapshots: Vec<SpectralState>,
    pub diagnostics: DiagnosticsSeries,
    pub warnings: Vec<String>,
    pub steps: usize,
    /// Step actually used (`t_end` divided into whole steps).
    pub dt: f64,
}

/// Integrates from `w_in` to `t_end`, recording diagnostics every
/// `diagnostics_every` steps and at the final time.
pub fn simulate(ops: &WndOperators, w_in: &SpectralState, config: &SimulationConfig) -> Result<SimulationResult> {
    simulate_observed(ops, w_in, config, |_, _| Ok(()))
}

/// Like [`simulate`], calling `observe(state, dissipated_this_step)` after
/// every step.
pub fn simulate_observed(
    ops: &WndOperators,
    w_in: &SpectralState,
    config: &SimulationConfig,
    mut observe: impl FnMut(&SpectralState, f64) -> Result<()>,
) -> Result<SimulationResult> {
    ops.check_state(w_in)?;
    if !(config.t_end >= 0.0) || !(config.dt > 0.0) {
        return Err(Error::InvalidArgument("t_end must be nonnegative and dt positive".into()));
    }
    if config.diagnostics_every == 0 {
        return Err(Error::InvalidArgument("diagnostics_every must be at least 1".into()));
    }
    let scale = w_in.max_abs();
    if w_in.reality_defect() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(
            "initial state violates the reality condition".into(),
        ));
    }
    let steps = math::ceil(config.t_end / config.dt - 1e-9).max(0.0) as usize;
    let dt = if steps > 0 { config.t_end / steps as f64 } else { config.dt };
    let mut warnings = Vec::new();
    if ops.omega_max() * dt > 0.5 {
        warnings.push(format!(
            "time step {dt:e} under-resolves the fastest frequency (omega_max*dt = {:.3})",
            ops.omega_max() * dt
        ));
    }
    let stepper = Stepper::new(
        ops,
        IntegratorConfig {
            integrator: config.integrator,
            formulation: config.formulation,
            blowup_threshold: config.blowup_threshold,
        },
        dt,
    )?;
    let mut w = w_in.clone();
    w.enforce_reality();
    w.time = 0.0;
    check_blowup(&w, config.blowup_threshold)?;
    let mut diag = DiagnosticsSeries {
        sobolev_orders: config.sobolev_orders.clone(),
        sobolev: vec![Vec::new(); config.sobolev_orders.len()],
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    let mut cumulative = 0.0;
    let mut last_budget = 0.0;
    let mut record = |w: &SpectralState, cumulative: f64, diag: &mut DiagnosticsSeries, snaps: &mut Vec<SpectralState>| -> Result<()> {
        let energy = ops.energy(w)?;
        diag.times.push(w.time);
        diag.energy.push(energy);
        diag.dissipation.push(ops.dissipation(w)?);
        diag.cumulative_dissipation.push(cumulative);
        for (o, s) in config.sobolev_orders.iter().enumerate() {
            diag.sobolev[o].push(sobolev_norm(&ops.spec, w, *s)?);
        }
        let budget = energy + cumulative;
        diag.budget_residual
            .push(if diag.times.len() == 1 { 0.0 } else { budget - last_budget });
        last_budget = budget;
        if config.keep_snapshots {
            snaps.push(w.clone());
        }
        Ok(())
    };
    record(&w, cumulative, &mut diag, &mut snapshots)?;
    for s in 1..=steps {
        let out = stepper.step(&w)?;
        w = out.state;
        w.time = s as f64 * dt;
        cumulative += out.dissipated;
        observe(&w, out.dissipated)?;
        if s % config.diagnostics_every == 0 || s == steps {
            record(&w, cumulative, &mut diag, &mut snapshots)?;
        }
    }
    Ok(SimulationResult {
        snapshots,
        diagnostics: diag,
        warnings,
        steps,
        dt,
    })
}

/// Outcome of integrating both formulations side by side.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredReport {
    /// Largest `‖W(t) − e^{−tA}Y(t)‖_H / ‖W(t)‖_H` over the snapshots.
    pub defect: f64,
    /// Largest energy-identity defect per unit time of the full run.
    pub budget_residual: f64,
}

pub fn filtered_equivalence_check(
    ops: &WndOperators,
    w_in: &SpectralState,
    config: &SimulationConfig,
) -> Result<FilteredReport> {
    let mut full_cfg = config.clone();
    full_cfg.formulation = Formulation::Full;
    full_cfg.keep_snapshots = true;
    let mut filt_cfg = full_cfg.clone();
    filt_cfg.formulation = Formulation::Filtered;
    let full = simulate(ops, w_in, &full_cfg)?;
    let filt = simulate(ops, w_in, &filt_cfg)?;
    let mut defect: f64 = 0.0;
    for (w, y) in full.snapshots.iter().zip(&filt.snapshots) {
        let shifted = ops.spectrum.evolve_state(y.time, y)?;
        let diff = h_norm(&ops.spec, &w.sub(&shifted)?)?;
        let norm = h_norm(&ops.spec, w)?;
        if norm > 0.0 {
            defect = defect.max(diff / norm);
        } else {
            defect = defect.max(diff);
        }
    }
    Ok(FilteredReport {
        defect,
        budget_residual: full.diagnostics.max_budget_rate(),
    })
}

/// Two-trajectory stability experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakStrongReport {
    pub times: Vec<f64>,
    /// `‖U₂(t) − U₁(t)‖_H` at each snapshot.
    pub differences: Vec<f64>,
    /// `∫₀ᵗ ‖∇U₁‖_{H^s} dt'` at each snapshot.
    pub gradient_integrals: Vec<f64>,
    /// Smallest `Ĉ ≥ 0` making the envelope hold on `[0, t_end/2]`.
    pub c_hat: f64,
    /// `‖U₂_in − U₁_in‖_H · exp(Ĉ ∫‖∇U₁‖_{H^s})` at each snapshot.
    pub envelope: Vec<f64>,
    pub envelope_holds: bool,
    /// Largest energy-identity defect of the first trajectory.
    pub energy_equality_defect: f64,
    pub sobolev_order: f64,
}

/// Relative slack when comparing differences against the fitted envelope.
const ENVELOPE_SLACK: f64 = 1e-9;

pub fn weak_strong_experiment(
    ops: &WndOperators,
    u1_in: &SpectralState,
    u2_in: &SpectralState,
    config: &SimulationConfig,
    s: f64,
) -> Result<WeakStrongReport> {
    let spec = &ops.spec;
    let mut grad_steps: Vec<f64> = vec![gradient_sobolev_norm(spec, u1_in, s)?];
    let mut cfg = config.clone();
    cfg.keep_snapshots = true;
    let run1 = simulate_observed(ops, u1_in, &cfg, |w, _| {
        grad_steps.push(gradient_sobolev_norm(spec, w, s)?);
        Ok(())
    })?;
    let run2 = simulate(ops, u2_in, &cfg)?;
    let dt = run1.dt;
    // Trapezoidal running integral of the gradient norm at step resolution.
    let mut running = vec![0.0; grad_steps.len()];
    for i in 1..grad_steps.len() {
        running[i] = running[i - 1] + 0.5 * dt * (grad_steps[i] + grad_steps[i - 1]);
    }
    let d0 = h_norm(spec, &u2_in.sub(u1_in)?)?;
    let mut times = Vec::new();
    let mut differences = Vec::new();
    let mut gradient_integrals = Vec::new();
    for (a, b) in run1.snapshots.iter().zip(&run2.snapshots) {
        times.push(a.time);
        differences.push(h_norm(spec, &b.sub(a)?)?);
        let step_index = math::round(a.time / dt) as usize;
        gradient_integrals.push(running[step_index.min(running.len() - 1)]);
    }
    let half = 0.5 * config.t_end;
    let mut c_hat: f64 = 0.0;
    if d0 > 0.0 {
        for ((t, d), g) in times.iter().zip(&differences).zip(&gradient_integrals) {
            if *t <= half + 1e-12 && *g > 0.0 && *d > 0.0 {
                c_hat = c_hat.max(math::ln(d / d0) / g);
            }
        }
    }
    let envelope: Vec<f64> = gradient_integrals
        .iter()
        .map(|g| d0 * math::exp(c_hat * g))
        .collect();
    let envelope_holds = differences
        .iter()
        .zip(&envelope)
        .all(|(d, e)| *d <= e * (1.0 + ENVELOPE_SLACK) + 1e-300);
    let energy_equality_defect = run1
        .diagnostics
        .energy_identity_defect()
        .iter()
        .fold(0.0, |m: f64, x| m.max(math::abs(*x)));
    Ok(WeakStrongReport {
        times,
        differences,
        gradient_integrals,
        c_hat,
        envelope,
        envelope_holds,
        energy_equality_defect,
        sobolev_order: s,
    })
}

/// `(W | AW)_H`, zero up to rounding for entropic specs.
pub fn skew_pairing(ops: &WndOperators, w: &SpectralState) -> Result<Complex64> {
    inner_product(&ops.spec, w, &ops.advect(w)?)
}
