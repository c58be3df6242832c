//! Compressible Navier-Stokes about a fluid at rest, in primitive perturbation
//! variables `(ρ̃, ũ, θ̃)`: symbol data, acoustic basis, exact resonance rule and
//! the incompressible/acoustic splitting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::averaging::{ResonanceRule, ResonanceTable};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::math;
use crate::spectral::Spectrum;
use crate::state::SpectralState;
use crate::system::{change_of_variables, SpecData, SystemSpec};

/// Pressure and specific internal energy with first and second partials in
/// `(ρ, θ)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ThermoDerivatives {
    pub p: f64,
    pub eps: f64,
    pub p_rho: f64,
    pub p_theta: f64,
    pub eps_rho: f64,
    pub eps_theta: f64,
    pub p_rho_rho: f64,
    pub p_rho_theta: f64,
    pub p_theta_theta: f64,
    pub eps_rho_rho: f64,
    pub eps_rho_theta: f64,
    pub eps_theta_theta: f64,
}

/// Equation of state `p(ρ, θ)`, `ε(ρ, θ)`.
pub trait EquationOfState {
    fn evaluate(&self, rho: f64, theta: f64) -> ThermoDerivatives;
}

/// `p = ρθ`, `ε = (D/2)θ` with `D` microscopic degrees of freedom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealGas {
    pub d_micro: f64,
}

impl IdealGas {
    pub fn new(d_micro: f64) -> Self {
        Self { d_micro }
    }

    /// Specific entropy `ln(θ^{D/2}/ρ)` up to an additive constant.
    pub fn specific_entropy(&self, rho: f64, theta: f64) -> f64 {
        0.5 * self.d_micro * math::ln(theta) - math::ln(rho)
    }
}

impl EquationOfState for IdealGas {
    fn evaluate(&self, rho: f64, theta: f64) -> ThermoDerivatives {
        ThermoDerivatives {
            p: rho * theta,
            eps: 0.5 * self.d_micro * theta,
            p_rho: theta,
            p_theta: rho,
            eps_rho: 0.0,
            eps_theta: 0.5 * self.d_micro,
            p_rho_rho: 0.0,
            p_rho_theta: 1.0,
            p_theta_theta: 0.0,
            eps_rho_rho: 0.0,
            eps_rho_theta: 0.0,
            eps_theta_theta: 0.0,
        }
    }
}

/// Constant viscosities, conductivity and the microscopic dimension used in
/// the trace part of the viscous stress.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportCoefficients {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub d_micro: f64,
}

fn check_reference(eos: &dyn EquationOfState, rho: f64, theta: f64) -> Result<ThermoDerivatives> {
    if !(rho > 0.0 && theta > 0.0) {
        return Err(Error::InvalidEos(format!(
            "reference state must have positive density and temperature (got {rho}, {theta})"
        )));
    }
    let t = eos.evaluate(rho, theta);
    if !(t.eps_theta > 0.0) {
        return Err(Error::InvalidEos(format!(
            "specific heat must be positive (got {})",
            t.eps_theta
        )));
    }
    if !(t.p_rho > 0.0) {
        return Err(Error::InvalidEos(format!(
            "pressure must increase with density (got {})",
            t.p_rho
        )));
    }
    Ok(t)
}

fn sound_speed_sq(t: &ThermoDerivatives, rho: f64, theta: f64) -> f64 {
    t.p_rho + theta * t.p_theta * t.p_theta / (rho * rho * t.eps_theta)
}

/// `c² = p_ρ + θ p_θ² / (ρ² C_V)`; returns `c`.
pub fn sound_speed(eos: &dyn EquationOfState, rho: f64, theta: f64) -> Result<f64> {
    let t = check_reference(eos, rho, theta)?;
    let c2 = sound_speed_sq(&t, rho, theta);
    if !(c2 > 0.0) {
        return Err(Error::InvalidEos(format!("nonpositive squared sound speed {c2}")));
    }
    Ok(math::sqrt(c2))
}

/// Damping rate coefficient of sound waves:
/// `[2((D−1)/D)μ + λ]/(2ρ) + [κ/(2ρC_V)]·[θ p_θ² / (ρ² C_V c²)]`.
pub fn acoustic_diffusivity(
    eos: &dyn EquationOfState,
    transport: &TransportCoefficients,
    rho: f64,
    theta: f64,
) -> Result<f64> {
    let t = check_reference(eos, rho, theta)?;
    let c2 = sound_speed_sq(&t, rho, theta);
    if !(c2 > 0.0) {
        return Err(Error::InvalidEos(format!("nonpositive squared sound speed {c2}")));
    }
    let cv = t.eps_theta;
    let dm = transport.d_micro;
    let viscous = (2.0 * ((dm - 1.0) / dm) * transport.mu + transport.lambda) / (2.0 * rho);
    let thermal =
        transport.kappa / (2.0 * rho * cv) * (theta * t.p_theta * t.p_theta / (rho * rho * cv * c2));
    Ok(viscous + thermal)
}

/// Symmetric quadratic form on `R^n`, `x ↦ xᵀ M x`.
#[derive(Clone)]
struct QuadForm {
    n: usize,
    m: Vec<f64>,
}

impl QuadForm {
    fn new(n: usize) -> Self {
        Self { n, m: vec![0.0; n * n] }
    }

    /// Adds `coef · x_p x_q`.
    fn add(&mut self, p: usize, q: usize, coef: f64) {
        if p == q {
            self.m[p * self.n + p] += coef;
        } else {
            self.m[p * self.n + q] += 0.5 * coef;
            self.m[q * self.n + p] += 0.5 * coef;
        }
    }

    fn axpy(&mut self, s: f64, other: &QuadForm) {
        for (a, b) in self.m.iter_mut().zip(&other.m) {
            *a += s * b;
        }
    }
}

/// Compressible Navier-Stokes linearized about `(ρ_o, 0, θ_o)`.
#[derive(Clone, Debug)]
pub struct CnsModel {
    dim: usize,
    rho: f64,
    theta: f64,
    thermo: ThermoDerivatives,
    transport: TransportCoefficients,
    sound_speed: f64,
    acoustic_diffusivity: f64,
    spec: SystemSpec,
}

impl CnsModel {
    pub fn new(
        eos: &dyn EquationOfState,
        transport: TransportCoefficients,
        rho: f64,
        theta: f64,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("spatial dimension must be positive".into()));
        }
        if !(transport.mu >= 0.0 && transport.lambda >= 0.0 && transport.kappa >= 0.0) {
            return Err(Error::InvalidArgument(
                "transport coefficients must be nonnegative".into(),
            ));
        }
        if !(transport.d_micro >= (dim as f64).max(2.0)) {
            return Err(Error::InvalidArgument(format!(
                "microscopic dimension {} must be at least max(2, {dim})",
                transport.d_micro
            )));
        }
        let t = check_reference(eos, rho, theta)?;
        let maxwell = rho * rho * t.eps_rho + theta * t.p_theta - t.p;
        let mscale = t.p.abs().max(theta * t.p_theta.abs()).max(f64::MIN_POSITIVE);
        if math::abs(maxwell) > 1e-10 * mscale {
            return Err(Error::InvalidEos(format!(
                "energy and pressure are thermodynamically inconsistent (Maxwell residual {maxwell:e})"
            )));
        }
        let c = sound_speed(eos, rho, theta)?;
        let nu = acoustic_diffusivity(eos, &transport, rho, theta)?;
        let spec = assemble_spec(&t, &transport, rho, theta, dim)?;
        Ok(Self {
            dim,
            rho,
            theta,
            thermo: t,
            transport,
            sound_speed: c,
            acoustic_diffusivity: nu,
            spec,
        })
    }

    /// Ideal gas with `D` microscopic degrees of freedom.
    pub fn ideal_gas(
        dim: usize,
        rho: f64,
        theta: f64,
        mu: f64,
        lambda: f64,
        kappa: f64,
        d_micro: f64,
    ) -> Result<Self> {
        Self::new(
            &IdealGas::new(d_micro),
            TransportCoefficients {
                mu,
                lambda,
                kappa,
                d_micro,
            },
            rho,
            theta,
            dim,
        )
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn density(&self) -> f64 {
        self.rho
    }

    pub fn temperature(&self) -> f64 {
        self.theta
    }

    pub fn thermo(&self) -> &ThermoDerivatives {
        &self.thermo
    }

    pub fn transport(&self) -> &TransportCoefficients {
        &self.transport
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    pub fn acoustic_diffusivity(&self) -> f64 {
        self.acoustic_diffusivity
    }

    /// `C_P = C_V + θ p_θ² / (ρ² p_ρ)`.
    pub fn specific_heat_pressure(&self) -> f64 {
        let t = &self.thermo;
        t.eps_theta + self.theta * t.p_theta * t.p_theta / (self.rho * self.rho * t.p_rho)
    }

    /// Jacobian `∂U/∂W` of the conserved variables `(ρ, ρu, ρε + ½ρ|u|²)`
    /// with respect to the primitive ones at the reference state.
    pub fn conserved_jacobian(&self) -> RMatrix {
        let n = self.dim + 2;
        let t = &self.thermo;
        let mut r = RMatrix::zeros(n, n);
        r[(0, 0)] = 1.0;
        for b in 0..self.dim {
            r[(1 + b, 1 + b)] = self.rho;
        }
        r[(n - 1, 0)] = t.eps + self.rho * t.eps_rho;
        r[(n - 1, n - 1)] = self.rho * t.eps_theta;
        r
    }

    /// The same system in conserved perturbation variables.
    pub fn conserved_spec(&self) -> Result<SystemSpec> {
        let t = self.conserved_jacobian().inverse()?;
        change_of_variables(&self.spec, &t)
    }

    /// `G`-normalized eigenvectors of `A(k)` with frequencies `±c|k|`.
    pub fn acoustic_basis(&self, k: &[i64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
        self.acoustic_basis_f64(&kf)
    }

    fn acoustic_basis_f64(&self, k: &[f64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        if k.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "acoustic basis wavevector",
                expected: self.dim,
                got: k.len(),
            });
        }
        let norm = math::sqrt(k.iter().map(|x| x * x).sum());
        if norm == 0.0 {
            return Err(Error::InvalidArgument("acoustic basis needs k != 0".into()));
        }
        let c = self.sound_speed;
        let s = math::sqrt(self.theta / (2.0 * self.rho));
        let n = self.dim + 2;
        let build = |sign: f64| {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[0] = Complex64::new(s * self.rho / c, 0.0);
            for b in 0..self.dim {
                v[1 + b] = Complex64::new(s * sign * k[b] / norm, 0.0);
            }
            v[n - 1] = Complex64::new(
                s * self.theta * self.thermo.p_theta / (self.rho * self.thermo.eps_theta * c),
                0.0,
            );
            v
        };
        Ok((build(1.0), build(-1.0)))
    }

    /// Splits `W` into its `Null(A)` part and the acoustic remainder, mode by mode.
    pub fn decompose_wcns(
        &self,
        spectrum: &Spectrum,
        w: &SpectralState,
    ) -> Result<(SpectralState, SpectralState)> {
        if w.lattice() != spectrum.lattice() || w.ncomp() != self.dim + 2 {
            return Err(Error::LatticeMismatch);
        }
        let mut w_in = SpectralState::zeros(w.lattice(), w.ncomp());
        w_in.time = w.time;
        for i in 0..w.lattice().len() {
            let dec = spectrum.mode(i);
            if let Some(j) = dec.null_index() {
                dec.projector(j).mul_vec_into(w.mode(i), w_in.mode_mut(i));
            }
        }
        let w_ac = w.sub(&w_in)?;
        Ok((w_in, w_ac))
    }

    /// Exact resonance predicate for this model's branch labelling.
    pub fn resonance_rule(&self) -> NsResonanceRule {
        NsResonanceRule
    }
}

fn assemble_spec(
    t: &ThermoDerivatives,
    tr: &TransportCoefficients,
    rho: f64,
    theta: f64,
    dim: usize,
) -> Result<SystemSpec> {
    let n = dim + 2;
    let ith = n - 1;
    let iu = |b: usize| 1 + b;
    let mut data = SpecData::zeros(dim, n);
    data.state = vec![0.0; n];
    data.state[0] = rho;
    data.state[ith] = theta;
    data.labels = core::iter::once("rho".into())
        .chain((1..=dim).map(|b| format!("u{b}")))
        .chain(core::iter::once("theta".into()))
        .collect();

    let e_rho = t.eps + rho * t.eps_rho;
    let e_theta = rho * t.eps_theta;
    let e_rr = 2.0 * t.eps_rho + rho * t.eps_rho_rho;
    let e_rt = t.eps_theta + rho * t.eps_rho_theta;
    let e_tt = rho * t.eps_theta_theta;
    let energy = rho * t.eps;

    // Advection: primitive conjugation of the flux Jacobian.
    for a in 0..dim {
        let idx = |i, j| data.advection_index(a, i, j);
        let (i1, i2, i3, i4) = (idx(0, iu(a)), idx(iu(a), 0), idx(iu(a), ith), idx(ith, iu(a)));
        data.advection[i1] = rho;
        data.advection[i2] = t.p_rho / rho;
        data.advection[i3] = t.p_theta / rho;
        data.advection[i4] = (energy + t.p - e_rho * rho) / e_theta;
    }

    // Diffusion: viscous stress with trace convention 2/D, heat conduction.
    let mu_trace = tr.mu * (1.0 - 2.0 / tr.d_micro) + tr.lambda;
    let cv = t.eps_theta;
    for a in 0..dim {
        for c in 0..dim {
            for b in 0..dim {
                for e in 0..dim {
                    let mut v = 0.0;
                    if a == c && b == e {
                        v += tr.mu;
                    }
                    if a == b && c == e {
                        v += 0.5 * mu_trace;
                    }
                    if a == e && c == b {
                        v += 0.5 * mu_trace;
                    }
                    if v != 0.0 {
                        let idx = data.diffusion_index(a, c, iu(b), iu(e));
                        data.diffusion[idx] = v / rho;
                    }
                }
            }
            if a == c {
                let idx = data.diffusion_index(a, c, ith, ith);
                data.diffusion[idx] = tr.kappa / (rho * cv);
            }
        }
    }

    // Quadratic parts of the conserved variables, U(W_o + W) − U_o − R W.
    let mut u2 = vec![QuadForm::new(n); n];
    for b in 0..dim {
        u2[iu(b)].add(0, iu(b), 1.0);
        u2[ith].add(iu(b), iu(b), 0.5 * rho);
    }
    u2[ith].add(0, 0, 0.5 * e_rr);
    u2[ith].add(0, ith, e_rt);
    u2[ith].add(ith, ith, 0.5 * e_tt);

    let to_primitive = |c: &[QuadForm]| -> Vec<QuadForm> {
        let mut out = vec![QuadForm::new(n); n];
        out[0] = c[0].clone();
        for b in 0..dim {
            out[iu(b)].axpy(1.0 / rho, &c[iu(b)]);
        }
        out[ith].axpy(1.0 / e_theta, &c[ith]);
        out[ith].axpy(-e_rho / e_theta, &c[0]);
        out
    };
    let s2 = to_primitive(&u2);

    for a in 0..dim {
        // Quadratic part of the conserved flux F_a(U(W_o + W)).
        let mut phi = vec![QuadForm::new(n); n];
        phi[0].add(0, iu(a), 1.0);
        for b in 0..dim {
            phi[iu(b)].add(iu(a), iu(b), rho);
            if a == b {
                phi[iu(b)].add(0, 0, 0.5 * t.p_rho_rho);
                phi[iu(b)].add(0, ith, t.p_rho_theta);
                phi[iu(b)].add(ith, ith, 0.5 * t.p_theta_theta);
            }
        }
        phi[ith].add(0, iu(a), e_rho + t.p_rho);
        phi[ith].add(ith, iu(a), e_theta + t.p_theta);
        let mut q = to_primitive(&phi);
        let amat: Vec<f64> = data.advection[a * n * n..(a + 1) * n * n].to_vec();
        for i in 0..n {
            for j in 0..n {
                let aij = amat[i * n + j];
                if aij != 0.0 {
                    q[i].axpy(-aij, &s2[j]);
                }
            }
        }
        for (i, form) in q.iter().enumerate() {
            for p in 0..n {
                for r in 0..n {
                    let idx = data.quadratic_index(a, i, p, r);
                    data.quadratic[idx] = form.m[p * n + r];
                }
            }
        }
    }

    let mut g = vec![0.0; n * n];
    g[0] = t.p_rho / (rho * theta);
    for b in 0..dim {
        g[iu(b) * n + iu(b)] = rho / theta;
    }
    g[ith * n + ith] = rho * cv / (theta * theta);
    data.entropy_hessian = g;
    SystemSpec::new(data)
}

/// Sign of the frequency branch `j` at mode `k` (`−1, 0, +1`), following the
/// ascending order `−c|k|, 0, +c|k|` of the decomposition.
pub fn branch_sign(k: &[i64], j: usize) -> i64 {
    if k.iter().all(|&x| x == 0) {
        0
    } else {
        j as i64 - 1
    }
}

/// Decides `s₁√a + s₂√b = s₃√c` in exact integer arithmetic.
pub fn signed_root_sum_vanishes(s1: i64, a: i128, s2: i64, b: i128, s3: i64, c: i128) -> bool {
    let mut terms: [(i64, i128); 3] = [(0, 0); 3];
    let mut len = 0;
    for (s, r) in [(s1, a), (s2, b), (-s3, c)] {
        if s != 0 && r != 0 {
            terms[len] = (s.signum(), r);
            len += 1;
        }
    }
    match len {
        0 => true,
        1 => false,
        2 => terms[0].0 != terms[1].0 && terms[0].1 == terms[1].1,
        _ => {
            let plus = terms.iter().filter(|t| t.0 > 0).count();
            if plus == 0 || plus == 3 {
                return false;
            }
            let lone_sign = if plus == 1 { 1 } else { -1 };
            let lone = terms.iter().position(|t| t.0 == lone_sign).unwrap_or(0);
            let r = terms[lone].1;
            let others: Vec<i128> = terms
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != lone)
                .map(|(_, t)| t.1)
                .collect();
            let (p, q) = (others[0], others[1]);
            let diff = r - p - q;
            diff >= 0 && diff * diff == 4 * p * q
        }
    }
}

/// Exact resonance rule `s₁|k| + s₂|l| = s₃|k + l|` for the acoustic branches.
#[derive(Clone, Copy, Debug, Default)]
pub struct NsResonanceRule;

impl ResonanceRule for NsResonanceRule {
    fn is_resonant(&self, k: &[i64], j1: usize, l: &[i64], j2: usize, m: &[i64], j3: usize) -> bool {
        let sq = |v: &[i64]| v.iter().map(|&x| (x as i128) * (x as i128)).sum::<i128>();
        signed_root_sum_vanishes(
            branch_sign(k, j1),
            sq(k),
            branch_sign(l, j2),
            sq(l),
            branch_sign(m, j3),
            sq(m),
        )
    }
}

/// Counts of resonant triples by branch class (`in` = zero frequency).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResonanceStatistics {
    pub total: usize,
    pub in_in_in: usize,
    /// One acoustic and one incompressible input producing acoustic output.
    pub in_ac_ac: usize,
    pub ac_ac_ac: usize,
    pub ac_ac_in: usize,
    pub other: usize,
}

fn is_null_branch(spectrum: &Spectrum, mode: usize, j: usize) -> bool {
    spectrum.mode(mode).null_index() == Some(j)
}

pub fn resonance_statistics(spectrum: &Spectrum, table: &ResonanceTable) -> ResonanceStatistics {
    let mut s = ResonanceStatistics {
        total: table.len(),
        ..Default::default()
    };
    for t in table.triples() {
        let a = is_null_branch(spectrum, t.k, t.j1);
        let b = is_null_branch(spectrum, t.l, t.j2);
        let c = is_null_branch(spectrum, t.m, t.j3);
        match (a, b, c) {
            (true, true, true) => s.in_in_in += 1,
            (true, false, false) | (false, true, false) => s.in_ac_ac += 1,
            (false, false, false) => s.ac_ac_ac += 1,
            (false, false, true) => s.ac_ac_in += 1,
            _ => s.other += 1,
        }
    }
    s
}

/// Empirical interaction coefficients read off the computed resonances.
///
/// For acoustic-incompressible-acoustic triples the coupling
/// `2 (H_m | m̂·Q(H_k, b))_H`, with `b` running over a `G`-orthonormal basis of
/// `Null(A(l))`, is fitted by least squares to
/// `c₁[(b_u·m)(k·m̂) + (k·m)(b_u·m̂)]/(|k||m|) ± b_θ(c₂ k·m̂ + c₃|m|)/|m|`,
/// the sign being that of the acoustic branch. For acoustic triples
/// `±(H_m | m̂·Q(H_k, H_l))_H`, signed by the output branch, is summarized
/// as `c₄`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub in_ac_samples: usize,
    pub in_ac_rms_residual: f64,
    pub in_ac_rms_value: f64,
    pub c4_mean: f64,
    pub c4_min: f64,
    pub c4_max: f64,
    pub ac_ac_samples: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(H_m | m̂·Q(u, v))_H` with `Q` contracted along the unit output direction.
fn projected_coupling(
    model: &CnsModel,
    m_hat: &[f64],
    h_m: &[Complex64],
    u: &[Complex64],
    v: &[Complex64],
) -> Result<f64> {
    let spec = model.spec();
    let n = spec.ncomp();
    let q = spec.quadratic_contracted(m_hat)?;
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for (i, yi) in y.iter_mut().enumerate() {
        for p in 0..n {
            for r in 0..n {
                let c = q[(i * n + p) * n + r];
                if c != 0.0 {
                    *yi += u[p] * v[r] * c;
                }
            }
        }
    }
    Ok(spec.g_inner(h_m, &y).re)
}

pub fn interaction_coefficients(
    model: &CnsModel,
    spectrum: &Spectrum,
    table: &ResonanceTable,
) -> Result<CouplingFit> {
    let lat = spectrum.lattice();
    let d = model.dim();
    let ith = d + 1;
    let mut rows: Vec<([f64; 3], f64)> = Vec::new();
    let mut c4: Vec<f64> = Vec::new();
    let acoustic = |mode: usize, j: usize| -> Result<Vec<Complex64>> {
        let (plus, minus) = model.acoustic_basis(lat.mode(mode))?;
        Ok(if branch_sign(lat.mode(mode), j) > 0 { plus } else { minus })
    };
    for t in table.triples() {
        if t.k == lat.zero_index() || t.l == lat.zero_index() || t.m == lat.zero_index() {
            continue;
        }
        let null_k = is_null_branch(spectrum, t.k, t.j1);
        let null_l = is_null_branch(spectrum, t.l, t.j2);
        let null_m = is_null_branch(spectrum, t.m, t.j3);
        let mf = lat.mode_f64(t.m);
        let mnorm = math::sqrt(dot(&mf, &mf));
        let m_hat: Vec<f64> = mf.iter().map(|x| x / mnorm).collect();
        if null_m {
            continue;
        }
        let h_m = acoustic(t.m, t.j3)?;
        match (null_k, null_l) {
            (false, true) => {
                let kf = lat.mode_f64(t.k);
                let knorm = math::sqrt(dot(&kf, &kf));
                let h_k = acoustic(t.k, t.j1)?;
                let dec = spectrum.mode(t.l);
                let basis = dec.basis(t.j2);
                for col in 0..basis.cols() {
                    let b = basis.column(col);
                    let bu: Vec<f64> = (0..d).map(|i| b[1 + i].re).collect();
                    let bt = b[ith].re;
                    let y = 2.0 * projected_coupling(model, &m_hat, &h_m, &h_k, &b)?;
                    let f1 = (dot(&bu, &mf) * dot(&kf, &m_hat) + dot(&kf, &mf) * dot(&bu, &m_hat))
                        / (knorm * mnorm);
                    let sign = branch_sign(lat.mode(t.k), t.j1) as f64;
                    let f2 = sign * bt * dot(&kf, &m_hat) / mnorm;
                    let f3 = sign * bt;
                    rows.push(([f1, f2, f3], y));
                }
            }
            (false, false) => {
                let h_k = acoustic(t.k, t.j1)?;
                let h_l = acoustic(t.l, t.j2)?;
                let sign = branch_sign(lat.mode(t.m), t.j3) as f64;
                c4.push(sign * projected_coupling(model, &m_hat, &h_m, &h_k, &h_l)?);
            }
            _ => {}
        }
    }
    let (c1, c2, c3, rms_res, rms_val) = least_squares3(&rows);
    let (c4_mean, c4_min, c4_max) = if c4.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            c4.iter().sum::<f64>() / c4.len() as f64,
            c4.iter().copied().fold(f64::INFINITY, f64::min),
            c4.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    Ok(CouplingFit {
        c1,
        c2,
        c3,
        in_ac_samples: rows.len(),
        in_ac_rms_residual: rms_res,
        in_ac_rms_value: rms_val,
        c4_mean,
        c4_min,
        c4_max,
        ac_ac_samples: c4.len(),
    })
}

fn least_squares3(rows: &[([f64; 3], f64)]) -> (f64, f64, f64, f64, f64) {
    if rows.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    }
    let mut ata = RMatrix::zeros(3, 3);
    let mut atb = [0.0; 3];
    for (f, y) in rows {
        for i in 0..3 {
            atb[i] += f[i] * y;
            for j in 0..3 {
                ata[(i, j)] += f[i] * f[j];
            }
        }
    }
    // Columns that never appear (e.g. no thermal coupling) are pinned to zero.
    for i in 0..3 {
        if ata[(i, i)] == 0.0 {
            ata[(i, i)] = 1.0;
        }
    }
    let coef = match ata.inverse() {
        Ok(inv) => inv.mul_vec(&atb),
        Err(_) => vec![f64::NAN; 3],
    };
    let count = rows.len() as f64;
    let rms_res = math::sqrt(
        rows.iter()
            .map(|(f, y)| {
                let r = y - dot(f, &coef);
                r * r
            })
            .sum::<f64>()
            / count,
    );
    let rms_val = math::sqrt(rows.iter().map(|(_, y)| y * y).sum::<f64>() / count);
    (coef[0], coef[1], coef[2], rms_res, rms_val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_constants() {
        let gas = IdealGas::new(3.0);
        let c = sound_speed(&gas, 1.0, 1.0).unwrap();
        assert!((c * c - 5.0 / 3.0).abs() <= 1e-14 * 5.0 / 3.0);
        let tr = TransportCoefficients {
            mu: 1.0,
            lambda: 0.0,
            kappa: 1.0,
            d_micro: 3.0,
        };
        let nu = acoustic_diffusivity(&gas, &tr, 1.0, 1.0).unwrap();
        assert!((nu - 0.8).abs() <= 1e-14 * 0.8);
    }

    #[test]
    fn sign_rule_cases() {
        assert!(signed_root_sum_vanishes(1, 9, 1, 16, 1, 49));
        assert!(!signed_root_sum_vanishes(1, 1, 1, 1, 1, 2));
        assert!(signed_root_sum_vanishes(0, 5, 0, 7, 0, 12));
        assert!(signed_root_sum_vanishes(1, 4, -1, 1, 1, 1));
        assert!(!signed_root_sum_vanishes(-1, 9, -1, 16, 1, 49));
        assert!(signed_root_sum_vanishes(-1, 9, -1, 16, -1, 49));
        assert!(signed_root_sum_vanishes(1, 4, 0, 1, 1, 4));
        assert!(!signed_root_sum_vanishes(1, 4, 0, 1, -1, 4));
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            CnsModel::ideal_gas(2, -1.0, 1.0, 1.0, 0.0, 1.0, 3.0),
            Err(Error::InvalidEos(_))
        ));
        assert!(CnsModel::ideal_gas(3, 1.0, 1.0, 1.0, 0.0, 1.0, 2.0).is_err());
        assert!(CnsModel::ideal_gas(2, 1.0, 1.0, -1.0, 0.0, 1.0, 3.0).is_err());
    }
}
