//! Truncated Fourier coefficient fields and their entropy-weighted norms.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::FrequencyLattice;
use crate::math;
use crate::system::SystemSpec;

/// Fourier coefficients `Ŵ(ξ)` on every lattice mode, stored mode-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralState {
    lattice: FrequencyLattice,
    ncomp: usize,
    coeffs: Vec<Complex64>,
    pub time: f64,
}

impl SpectralState {
    pub fn zeros(lattice: &FrequencyLattice, ncomp: usize) -> Self {
        Self {
            lattice: lattice.clone(),
            ncomp,
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.len() * ncomp],
            time: 0.0,
        }
    }

    /// Wraps raw coefficients (mode-major, `len = modes × ncomp`).
    pub fn from_coeffs(lattice: &FrequencyLattice, ncomp: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.len() * ncomp {
            return Err(Error::DimensionMismatch {
                context: "spectral state coefficients",
                expected: lattice.len() * ncomp,
                got: coeffs.len(),
            });
        }
        Ok(Self {
            lattice: lattice.clone(),
            ncomp,
            coeffs,
            time: 0.0,
        })
    }

    #[inline]
    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn mode(&self, i: usize) -> &[Complex64] {
        &self.coeffs[i * self.ncomp..(i + 1) * self.ncomp]
    }

    #[inline]
    pub fn mode_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.coeffs[i * self.ncomp..(i + 1) * self.ncomp]
    }

    /// Sets `Ŵ(ξ) = v` and `Ŵ(−ξ) = conj(v)`.
    pub fn set_mode_real(&mut self, xi: &[i64], v: &[Complex64]) -> Result<()> {
        let i = self
            .lattice
            .index_of(xi)
            .ok_or_else(|| Error::InvalidArgument("wavevector outside lattice".into()))?;
        if v.len() != self.ncomp {
            return Err(Error::DimensionMismatch {
                context: "mode coefficient",
                expected: self.ncomp,
                got: v.len(),
            });
        }
        let j = self.lattice.negated_index(i);
        if i == j {
            for (c, x) in self.mode_mut(i).iter_mut().zip(v) {
                *c = Complex64::new(x.re, 0.0);
            }
        } else {
            self.mode_mut(i).copy_from_slice(v);
            for (c, x) in self.mode_mut(j).iter_mut().zip(v) {
                *c = x.conj();
            }
        }
        Ok(())
    }

    pub fn check_compatible(&self, other: &SpectralState) -> Result<()> {
        if self.lattice != other.lattice || self.ncomp != other.ncomp {
            return Err(Error::LatticeMismatch);
        }
        Ok(())
    }

    /// Projects onto real fields: `Ŵ(ξ) ← ½(Ŵ(ξ) + conj Ŵ(−ξ))`.
    pub fn enforce_reality(&mut self) {
        let m = self.lattice.len();
        let n = self.ncomp;
        for i in 0..=m / 2 {
            let j = m - 1 - i;
            for c in 0..n {
                let a = self.coeffs[i * n + c];
                let b = self.coeffs[j * n + c];
                let avg = 0.5 * (a + b.conj());
                self.coeffs[i * n + c] = avg;
                self.coeffs[j * n + c] = avg.conj();
            }
        }
    }

    /// Largest deviation from `Ŵ(−ξ) = conj Ŵ(ξ)`.
    pub fn reality_defect(&self) -> f64 {
        let m = self.lattice.len();
        let n = self.ncomp;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            let j = m - 1 - i;
            for c in 0..n {
                worst = worst.max((self.coeffs[i * n + c] - self.coeffs[j * n + c].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m: f64, z| m.max(z.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// `self + s·other` (shapes must agree; checked by the caller's lattice).
    pub fn axpy(&mut self, s: Complex64, other: &SpectralState) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> SpectralState {
        let mut out = self.clone();
        for z in &mut out.coeffs {
            *z *= s;
        }
        out
    }

    pub fn sub(&self, other: &SpectralState) -> Result<SpectralState> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        Ok(out)
    }

    pub fn add(&self, other: &SpectralState) -> Result<SpectralState> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other);
        Ok(out)
    }

    /// Restriction to a smaller lattice (modes outside it are dropped).
    pub fn restrict(&self, target: &FrequencyLattice) -> Result<SpectralState> {
        if target.dim() != self.lattice.dim() || target.radius() > self.lattice.radius() {
            return Err(Error::LatticeMismatch);
        }
        let mut out = SpectralState::zeros(target, self.ncomp);
        out.time = self.time;
        for i in 0..target.len() {
            let src = self.lattice.index_of(target.mode(i)).ok_or(Error::LatticeMismatch)?;
            out.mode_mut(i).copy_from_slice(self.mode(src));
        }
        Ok(out)
    }

    /// Zero-padding onto a larger lattice.
    pub fn extend(&self, target: &FrequencyLattice) -> Result<SpectralState> {
        if target.dim() != self.lattice.dim() || target.radius() < self.lattice.radius() {
            return Err(Error::LatticeMismatch);
        }
        let mut out = SpectralState::zeros(target, self.ncomp);
        out.time = self.time;
        for i in 0..self.lattice.len() {
            let dst = target.index_of(self.lattice.mode(i)).ok_or(Error::LatticeMismatch)?;
            out.mode_mut(dst).copy_from_slice(self.mode(i));
        }
        Ok(out)
    }
}

fn check_spec(spec: &SystemSpec, w: &SpectralState) -> Result<()> {
    if w.ncomp() != spec.ncomp() || w.lattice().dim() != spec.dim() {
        return Err(Error::LatticeMismatch);
    }
    Ok(())
}

/// `(W₁ | W₂)_H = Σ_ξ Ŵ₁(ξ)ᴴ G Ŵ₂(ξ)`.
pub fn inner_product(spec: &SystemSpec, w1: &SpectralState, w2: &SpectralState) -> Result<Complex64> {
    check_spec(spec, w1)?;
    w1.check_compatible(w2)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..w1.lattice().len() {
        acc += spec.g_inner(w1.mode(i), w2.mode(i));
    }
    Ok(acc)
}

/// `‖W‖_H`.
pub fn h_norm(spec: &SystemSpec, w: &SpectralState) -> Result<f64> {
    sobolev_norm(spec, w, 0.0)
}

/// `‖W‖_{H^s} = (Σ_ξ (1+|ξ|²)^s Ŵ(ξ)ᴴ G Ŵ(ξ))^{1/2}`.
pub fn sobolev_norm(spec: &SystemSpec, w: &SpectralState, s: f64) -> Result<f64> {
    check_spec(spec, w)?;
    let lat = w.lattice();
    let mut acc = 0.0;
    for i in 0..lat.len() {
        let weight = if s == 0.0 {
            1.0
        } else {
            math::powf(1.0 + lat.norm_sq(i) as f64, s)
        };
        acc += weight * spec.g_norm_sq(w.mode(i));
    }
    Ok(math::sqrt(acc.max(0.0)))
}

/// `‖∇W‖_{H^s} = (Σ_ξ |ξ|²(1+|ξ|²)^s Ŵ(ξ)ᴴ G Ŵ(ξ))^{1/2}`.
pub fn gradient_sobolev_norm(spec: &SystemSpec, w: &SpectralState, s: f64) -> Result<f64> {
    check_spec(spec, w)?;
    let lat = w.lattice();
    let mut acc = 0.0;
    for i in 0..lat.len() {
        let k2 = lat.norm_sq(i) as f64;
        if k2 == 0.0 {
            continue;
        }
        acc += k2 * math::powf(1.0 + k2, s) * spec.g_norm_sq(w.mode(i));
    }
    Ok(math::sqrt(acc.max(0.0)))
}
