//! Resonance-averaged diffusion and quadratic operators.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::FrequencyLattice;
use crate::linalg::{expm, CMatrix};
use crate::math;
use crate::par;
use crate::spectral::Spectrum;
use crate::state::{inner_product, SpectralState};
use crate::system::SystemSpec;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Per-mode blocks `D̄(ξ) = −Σ_j P_j(ξ) B(ξ) P_j(ξ)`.
#[derive(Clone, Debug)]
pub struct AveragedDiffusion {
    lattice: FrequencyLattice,
    blocks: Vec<CMatrix>,
}

impl AveragedDiffusion {
    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// `D̄ W` mode by mode.
    pub fn apply(&self, w: &SpectralState) -> Result<SpectralState> {
        if w.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch);
        }
        let mut out = w.clone();
        for i in 0..self.lattice.len() {
            self.blocks[i].mul_vec_into(w.mode(i), out.mode_mut(i));
        }
        Ok(out)
    }

    /// `−(W | D̄ W)_H`, the instantaneous dissipation rate.
    pub fn dissipation(&self, spec: &SystemSpec, w: &SpectralState) -> Result<f64> {
        let dw = self.apply(w)?;
        Ok(-inner_product(spec, w, &dw)?.re)
    }
}

/// Averaged diffusion over every mode of the spectrum.
pub fn averaged_diffusion(spec: &SystemSpec, spectrum: &Spectrum) -> Result<AveragedDiffusion> {
    let lattice = spectrum.lattice().clone();
    let blocks = par::map_indexed(lattice.len(), |i| averaged_diffusion_block(spec, spectrum, i))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(AveragedDiffusion { lattice, blocks })
}

fn averaged_diffusion_block(spec: &SystemSpec, spectrum: &Spectrum, i: usize) -> Result<CMatrix> {
    let xi = spectrum.lattice().mode_f64(i);
    let b = spec.symbol_diffusion(&xi)?.to_complex();
    let n = spec.ncomp();
    let mut out = CMatrix::zeros(n, n);
    for p in spectrum.mode(i).projectors() {
        out = &out - &p.matmul(&b).matmul(p);
    }
    Ok(out)
}

/// Trapezoidal time average of `e^{itA(ξ)} (−B(ξ)) e^{−itA(ξ)}` over `[−T, T]`.
///
/// The group is advanced by repeated multiplication with one-step matrix
/// exponentials marching outward from `t = 0`, so no eigendecomposition is used.
pub fn averaged_diffusion_oracle(
    spec: &SystemSpec,
    xi: &[f64],
    horizon: f64,
    n_steps: usize,
) -> Result<CMatrix> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("averaging horizon must be positive".into()));
    }
    if n_steps < 100 {
        return Err(Error::InvalidArgument("oracle needs at least 100 steps".into()));
    }
    let n_half = n_steps.div_ceil(2);
    let dt = horizon / n_half as f64;
    let a = spec.symbol_advection(xi)?.to_complex();
    let minus_b = spec.symbol_diffusion(xi)?.to_complex().scale(Complex64::new(-1.0, 0.0));
    let fwd = expm(&a.scale(Complex64::new(0.0, -dt)));
    let bwd = expm(&a.scale(Complex64::new(0.0, dt)));
    let n = spec.ncomp();
    let integrand = |e: &CMatrix, e_inv: &CMatrix| e_inv.matmul(&minus_b).matmul(e);
    let mut sum = minus_b.scale(Complex64::new(1.0, 0.0));
    for (step, step_inv) in [(&fwd, &bwd), (&bwd, &fwd)] {
        // e = e^{-itA}, e_inv = e^{itA}, for t marching away from zero.
        let mut e = CMatrix::identity(n);
        let mut e_inv = CMatrix::identity(n);
        for s in 1..=n_half {
            e = e.matmul(step);
            e_inv = step_inv.matmul(&e_inv);
            let w = if s == n_half { 0.5 } else { 1.0 };
            sum = &sum + &integrand(&e, &e_inv).scale(Complex64::new(w, 0.0));
        }
    }
    Ok(sum.scale(Complex64::new(1.0 / (2 * n_half) as f64, 0.0)))
}

/// Exact resonance predicate supplied in place of the floating-point test.
pub trait ResonanceRule: Sync {
    /// Decides `ω_{j1}(k) + ω_{j2}(l) = ω_{j3}(m)` for `m = k + l`.
    fn is_resonant(&self, k: &[i64], j1: usize, l: &[i64], j2: usize, m: &[i64], j3: usize) -> bool;
}

/// How frequency sums are compared when enumerating resonances.
#[derive(Clone, Copy)]
pub enum ResonanceTest<'a> {
    /// `|ω₁ + ω₂ − ω₃| ≤ tol · ω_scale`.
    Tolerance(f64),
    Exact(&'a dyn ResonanceRule),
}

/// Default relative resonance tolerance.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;

/// One resonant interaction `(k, j₁) + (l, j₂) → (m = k + l, j₃)`, lattice indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonantTriple {
    pub k: usize,
    pub j1: usize,
    pub l: usize,
    pub j2: usize,
    pub m: usize,
    pub j3: usize,
    /// `ω_{j1}(k) + ω_{j2}(l) − ω_{j3}(m)`.
    pub defect: f64,
}

/// All resonant triples, grouped by output mode and sorted by
/// `(m, j₃, k, j₁, l, j₂)`.
#[derive(Clone, Debug)]
pub struct ResonanceTable {
    lattice: FrequencyLattice,
    triples: Vec<ResonantTriple>,
    offsets: Vec<usize>,
    tolerance: Option<f64>,
    omega_scale: f64,
}

impl ResonanceTable {
    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn triples(&self) -> &[ResonantTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples whose output mode is `m`.
    pub fn group(&self, m: usize) -> &[ResonantTriple] {
        &self.triples[self.offsets[m]..self.offsets[m + 1]]
    }

    /// Relative tolerance used, or `None` when an exact rule decided.
    pub fn tolerance(&self) -> Option<f64> {
        self.tolerance
    }

    pub fn omega_scale(&self) -> f64 {
        self.omega_scale
    }

    pub fn contains(&self, k: usize, j1: usize, l: usize, j2: usize, j3: usize) -> bool {
        match self.lattice.sum_index(k, l) {
            Some(m) => self
                .group(m)
                .iter()
                .any(|t| t.k == k && t.j1 == j1 && t.l == l && t.j2 == j2 && t.j3 == j3),
            None => false,
        }
    }
}

/// Enumerates all `(k, l)` with `k + l` in the lattice and all branch
/// combinations whose frequencies add up.
pub fn build_resonance_table(spectrum: &Spectrum, test: ResonanceTest<'_>) -> ResonanceTable {
    let lattice = spectrum.lattice().clone();
    let scale = spectrum.omega_scale();
    if let ResonanceTest::Tolerance(tol) = test {
        debug_assert!(tol >= 0.0);
    }
    let groups = par::map_indexed(lattice.len(), |m| {
        let mut out = Vec::new();
        let fm = spectrum.mode(m).frequencies();
        for (j3, &w3) in fm.iter().enumerate() {
            for k in 0..lattice.len() {
                let Some(l) = lattice.difference_index(m, k) else {
                    continue;
                };
                let fk = spectrum.mode(k).frequencies();
                let fl = spectrum.mode(l).frequencies();
                for (j1, &w1) in fk.iter().enumerate() {
                    for (j2, &w2) in fl.iter().enumerate() {
                        let defect = w1 + w2 - w3;
                        let keep = match test {
                            ResonanceTest::Tolerance(tol) => math::abs(defect) <= tol * scale,
                            ResonanceTest::Exact(rule) => rule.is_resonant(
                                lattice.mode(k),
                                j1,
                                lattice.mode(l),
                                j2,
                                lattice.mode(m),
                                j3,
                            ),
                        };
                        if keep {
                            out.push(ResonantTriple {
                                k,
                                j1,
                                l,
                                j2,
                                m,
                                j3,
                                defect,
                            });
                        }
                    }
                }
            }
        }
        out
    });
    let mut offsets = Vec::with_capacity(lattice.len() + 1);
    let mut triples = Vec::with_capacity(groups.iter().map(|g| g.len()).sum());
    offsets.push(0);
    for g in groups {
        triples.extend(g);
        offsets.push(triples.len());
    }
    ResonanceTable {
        lattice,
        triples,
        offsets,
        tolerance: match test {
            ResonanceTest::Tolerance(t) => Some(t),
            ResonanceTest::Exact(_) => None,
        },
        omega_scale: scale,
    }
}

fn check_operands(
    spec: &SystemSpec,
    spectrum: &Spectrum,
    table: &ResonanceTable,
    states: &[&SpectralState],
) -> Result<()> {
    if table.lattice() != spectrum.lattice() {
        return Err(Error::LatticeMismatch);
    }
    for w in states {
        if w.lattice() != table.lattice() || w.ncomp() != spec.ncomp() {
            return Err(Error::LatticeMismatch);
        }
    }
    Ok(())
}

/// `P_j(ξ) Ŵ(ξ)` for every mode and branch, laid out `[mode][branch][comp]`.
struct Projected {
    data: Vec<Complex64>,
    stride: usize,
    n: usize,
}

impl Projected {
    fn new(spectrum: &Spectrum, w: &SpectralState) -> Self {
        let n = w.ncomp();
        let jmax = spectrum.max_branches();
        let stride = jmax * n;
        let mut data = vec![ZERO; spectrum.lattice().len() * stride];
        for (i, chunk) in data.chunks_exact_mut(stride).enumerate() {
            let v = w.mode(i);
            for (j, p) in spectrum.mode(i).projectors().iter().enumerate() {
                p.mul_vec_into(v, &mut chunk[j * n..(j + 1) * n]);
            }
        }
        Self { data, stride, n }
    }

    #[inline]
    fn get(&self, mode: usize, branch: usize) -> &[Complex64] {
        let off = mode * self.stride + branch * self.n;
        &self.data[off..off + self.n]
    }
}

/// Accumulates `S += weight · u ⊗ v`.
#[inline]
fn accumulate_outer(s: &mut [Complex64], u: &[Complex64], v: &[Complex64], weight: f64) {
    let n = u.len();
    for p in 0..n {
        let up = u[p] * weight;
        if up == ZERO {
            continue;
        }
        let row = &mut s[p * n..(p + 1) * n];
        for (r, &vq) in row.iter_mut().zip(v) {
            *r += up * vq;
        }
    }
}

/// `out += P · (i · Σ_{pq} Qm[·][p][q] S[p][q])`.
#[inline]
fn contract_and_project(qm: &[f64], s: &[Complex64], proj: Option<&CMatrix>, out: &mut [Complex64]) {
    let n = out.len();
    let mut y = [ZERO; 16];
    let mut y_heap;
    let y: &mut [Complex64] = if n <= 16 {
        &mut y[..n]
    } else {
        y_heap = vec![ZERO; n];
        &mut y_heap
    };
    for (i, yi) in y.iter_mut().enumerate() {
        let qi = &qm[i * n * n..(i + 1) * n * n];
        let mut acc = ZERO;
        for (q, sv) in qi.iter().zip(s) {
            if *q != 0.0 {
                acc += sv * *q;
            }
        }
        *yi = I * acc;
    }
    match proj {
        Some(p) => {
            for (i, o) in out.iter_mut().enumerate() {
                let row = p.row(i);
                let mut acc = ZERO;
                for (a, b) in row.iter().zip(y.iter()) {
                    acc += a * b;
                }
                *o += acc;
            }
        }
        None => {
            for (o, v) in out.iter_mut().zip(y.iter()) {
                *o += v;
            }
        }
    }
}

/// Evaluates one output mode from its triples. `pair_weight` decides how each
/// triple contributes (returning `0` skips it).
fn output_mode(
    spec: &SystemSpec,
    spectrum: &Spectrum,
    group: &[ResonantTriple],
    m: usize,
    v1: &Projected,
    v2: &Projected,
    pair_weight: impl Fn(&ResonantTriple) -> f64,
) -> Result<Vec<Complex64>> {
    let n = spec.ncomp();
    let mut out = vec![ZERO; n];
    if group.is_empty() {
        return Ok(out);
    }
    let qm = spec.quadratic_contracted(&spectrum.lattice().mode_f64(m))?;
    let mut s = vec![ZERO; n * n];
    let mut idx = 0;
    while idx < group.len() {
        let j3 = group[idx].j3;
        s.iter_mut().for_each(|x| *x = ZERO);
        let mut any = false;
        while idx < group.len() && group[idx].j3 == j3 {
            let t = &group[idx];
            let w = pair_weight(t);
            if w != 0.0 {
                accumulate_outer(&mut s, v1.get(t.k, t.j1), v2.get(t.l, t.j2), w);
                any = true;
            }
            idx += 1;
        }
        if any {
            contract_and_project(&qm, &s, Some(spectrum.mode(m).projector(j3)), &mut out);
        }
    }
    Ok(out)
}

/// `Q̄(W₁, W₂) = Σ P_{j3}(m) (i m)·Q(P_{j1}(k)Ŵ₁(k), P_{j2}(l)Ŵ₂(l))` over the table.
pub fn apply_qbar(
    spec: &SystemSpec,
    spectrum: &Spectrum,
    table: &ResonanceTable,
    w1: &SpectralState,
    w2: &SpectralState,
) -> Result<SpectralState> {
    check_operands(spec, spectrum, table, &[w1, w2])?;
    let lattice = table.lattice();
    let v1 = Projected::new(spectrum, w1);
    let v2 = Projected::new(spectrum, w2);
    let zero = lattice.zero_index();
    let modes = par::map_indexed(lattice.len(), |m| {
        if m == zero || !spec.has_quadratic() {
            return Ok(vec![ZERO; spec.ncomp()]);
        }
        output_mode(spec, spectrum, table.group(m), m, &v1, &v2, |_| 1.0)
    });
    let mut out = SpectralState::zeros(lattice, spec.ncomp());
    out.time = w1.time;
    for (i, v) in modes.into_iter().enumerate() {
        out.mode_mut(i).copy_from_slice(&v?);
    }
    Ok(out)
}

/// `Q̄(W, W)` for a real field, evaluating only half of the output modes and
/// each unordered input pair once. Agrees with [`apply_qbar`] for real `W`.
pub fn apply_qbar_real(
    spec: &SystemSpec,
    spectrum: &Spectrum,
    table: &ResonanceTable,
    w: &SpectralState,
) -> Result<SpectralState> {
    check_operands(spec, spectrum, table, &[w])?;
    let lattice = table.lattice();
    let mut out = SpectralState::zeros(lattice, spec.ncomp());
    out.time = w.time;
    if !spec.has_quadratic() {
        return Ok(out);
    }
    let v = Projected::new(spectrum, w);
    let zero = lattice.zero_index();
    let jmax = spectrum.max_branches();
    let upper = lattice.len() - zero - 1;
    let modes = par::map_indexed(upper, |u| {
        let m = zero + 1 + u;
        output_mode(spec, spectrum, table.group(m), m, &v, &v, |t| {
            let a = t.k * jmax + t.j1;
            let b = t.l * jmax + t.j2;
            match a.cmp(&b) {
                core::cmp::Ordering::Less => 2.0,
                core::cmp::Ordering::Equal => 1.0,
                core::cmp::Ordering::Greater => 0.0,
            }
        })
    });
    for (u, vals) in modes.into_iter().enumerate() {
        let m = zero + 1 + u;
        let vals = vals?;
        let neg = lattice.negated_index(m);
        out.mode_mut(m).copy_from_slice(&vals);
        for (o, x) in out.mode_mut(neg).iter_mut().zip(&vals) {
            *o = x.conj();
        }
    }
    Ok(out)
}

/// Plain Galerkin-truncated convolution `Σ_{k+l=m} (i m)·Q(Ŵ₁(k), Ŵ₂(l))`
/// with no resonance filtering.
pub fn apply_q_unaveraged(
    spec: &SystemSpec,
    w1: &SpectralState,
    w2: &SpectralState,
) -> Result<SpectralState> {
    w1.check_compatible(w2)?;
    if w1.ncomp() != spec.ncomp() || w1.lattice().dim() != spec.dim() {
        return Err(Error::LatticeMismatch);
    }
    let lattice = w1.lattice();
    let n = spec.ncomp();
    let zero = lattice.zero_index();
    let modes = par::map_indexed(lattice.len(), |m| -> Result<Vec<Complex64>> {
        let mut out = vec![ZERO; n];
        if m == zero {
            return Ok(out);
        }
        let mut s = vec![ZERO; n * n];
        for k in 0..lattice.len() {
            if let Some(l) = lattice.difference_index(m, k) {
                accumulate_outer(&mut s, w1.mode(k), w2.mode(l), 1.0);
            }
        }
        let qm = spec.quadratic_contracted(&lattice.mode_f64(m))?;
        contract_and_project(&qm, &s, None, &mut out);
        Ok(out)
    });
    let mut out = SpectralState::zeros(lattice, n);
    out.time = w1.time;
    for (i, v) in modes.into_iter().enumerate() {
        out.mode_mut(i).copy_from_slice(&v?);
    }
    Ok(out)
}

/// Normalized cyclic sum
/// `|(W₁|Q̄(W₂,W₃)) + (W₂|Q̄(W₃,W₁)) + (W₃|Q̄(W₁,W₂))| / max |term|`.
pub fn cyclic_residual(
    spec: &SystemSpec,
    spectrum: &Spectrum,
    table: &ResonanceTable,
    w1: &SpectralState,
    w2: &SpectralState,
    w3: &SpectralState,
) -> Result<f64> {
    let t1 = inner_product(spec, w1, &apply_qbar(spec, spectrum, table, w2, w3)?)?;
    let t2 = inner_product(spec, w2, &apply_qbar(spec, spectrum, table, w3, w1)?)?;
    let t3 = inner_product(spec, w3, &apply_qbar(spec, spectrum, table, w1, w2)?)?;
    let scale = t1.norm().max(t2.norm()).max(t3.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((t1 + t2 + t3).norm() / scale)
}
