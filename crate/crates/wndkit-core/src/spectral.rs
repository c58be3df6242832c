//! Eigenspace decomposition of the advection symbol and the unitary group it
//! generates.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::FrequencyLattice;
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::math;
use crate::par;
use crate::system::SystemSpec;

/// Default relative gap below which eigenvalues are merged into one frequency.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-9;

/// Distinct frequencies `ω_j` of `A(ξ)` with their `G`-orthogonal spectral
/// projectors `P_j` and `G`-orthonormal bases of the eigenspaces.
#[derive(Clone, Debug)]
pub struct ModeDecomposition {
    xi: Vec<f64>,
    frequencies: Vec<f64>,
    projectors: Vec<CMatrix>,
    bases: Vec<CMatrix>,
    cluster_tol: f64,
}

impl ModeDecomposition {
    /// Wavevector the symbol was evaluated at.
    pub fn wavevector(&self) -> &[f64] {
        &self.xi
    }

    /// Frequencies in ascending order.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn projector(&self, j: usize) -> &CMatrix {
        &self.projectors[j]
    }

    /// Columns form a `G`-orthonormal basis of the `j`-th eigenspace.
    pub fn basis(&self, j: usize) -> &CMatrix {
        &self.bases[j]
    }

    pub fn rank(&self, j: usize) -> usize {
        self.bases[j].cols()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// Index of the zero frequency, if present.
    pub fn null_index(&self) -> Option<usize> {
        let scale = self.max_frequency();
        self.frequencies
            .iter()
            .position(|&w| math::abs(w) <= self.cluster_tol * scale.max(f64::MIN_POSITIVE))
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies.iter().fold(0.0, |m: f64, w| m.max(math::abs(*w)))
    }

    /// `Σ_j ω_j P_j`, the symbol rebuilt from its decomposition.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.projectors[0].rows();
        let mut out = CMatrix::zeros(n, n);
        for (w, p) in self.frequencies.iter().zip(&self.projectors) {
            out = &out + &p.scale(Complex64::new(*w, 0.0));
        }
        out
    }

    /// `e^{-tA} v = Σ_j e^{-iω_j t} P_j v`.
    pub fn evolve(&self, t: f64, v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); n];
        let mut tmp = alloc::vec![Complex64::new(0.0, 0.0); n];
        for (w, p) in self.frequencies.iter().zip(&self.projectors) {
            let phase = math::cis_neg(w * t);
            p.mul_vec_into(v, &mut tmp);
            for (o, x) in out.iter_mut().zip(&tmp) {
                *o += phase * x;
            }
        }
        out
    }

    /// The group element `e^{-tA}` as a matrix.
    pub fn group_matrix(&self, t: f64) -> CMatrix {
        let n = self.projectors[0].rows();
        let mut out = CMatrix::zeros(n, n);
        for (w, p) in self.frequencies.iter().zip(&self.projectors) {
            out = &out + &p.scale(math::cis_neg(w * t));
        }
        out
    }
}

/// Decomposes `A(ξ)` at an integer wavevector.
pub fn decompose(spec: &SystemSpec, xi: &[i64], cluster_tol: f64) -> Result<ModeDecomposition> {
    let xf: Vec<f64> = xi.iter().map(|&x| x as f64).collect();
    decompose_symbol(spec, &xf, cluster_tol)
}

/// Decomposes `A(ξ)` at an arbitrary real point (e.g. a unit direction).
pub fn decompose_symbol(spec: &SystemSpec, xi: &[f64], cluster_tol: f64) -> Result<ModeDecomposition> {
    if !(cluster_tol >= 0.0) {
        return Err(Error::InvalidArgument("cluster_tol must be nonnegative".into()));
    }
    let metric = spec.metric()?;
    let a = spec.symbol_advection(xi)?;
    let h = metric.sqrt.matmul(&a).matmul(&metric.inv_sqrt).symmetric_part();
    let eig = hermitian_eigen(&h.to_complex())?;
    let n = spec.ncomp();
    let scale = eig.values.iter().fold(0.0, |m: f64, w| m.max(math::abs(*w)));
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || eig.values[i] - eig.values[i - 1] > cluster_tol * scale {
            clusters.push((start, i));
            start = i;
        }
    }
    let sqrt_c = metric.sqrt.to_complex();
    let inv_sqrt_c = metric.inv_sqrt.to_complex();
    let mut frequencies = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    let mut bases = Vec::with_capacity(clusters.len());
    for (lo, hi) in clusters {
        let r = hi - lo;
        let v = CMatrix::from_fn(n, r, |i, j| eig.vectors[(i, lo + j)]);
        let basis = inv_sqrt_c.matmul(&v);
        let proj = basis.matmul(&v.adjoint().matmul(&sqrt_c));
        let mean = eig.values[lo..hi].iter().sum::<f64>() / r as f64;
        frequencies.push(mean);
        projectors.push(proj);
        bases.push(basis);
    }
    Ok(ModeDecomposition {
        xi: xi.to_vec(),
        frequencies,
        projectors,
        bases,
        cluster_tol,
    })
}

/// `e^{-tA}` applied to one mode coefficient.
pub fn evolve_group(dec: &ModeDecomposition, t: f64, v: &[Complex64]) -> Vec<Complex64> {
    dec.evolve(t, v)
}

/// Decompositions at every lattice mode, in lattice order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    lattice: FrequencyLattice,
    modes: Vec<ModeDecomposition>,
    omega_scale: f64,
    cluster_tol: f64,
}

impl Spectrum {
    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn mode(&self, i: usize) -> &ModeDecomposition {
        &self.modes[i]
    }

    pub fn modes(&self) -> &[ModeDecomposition] {
        &self.modes
    }

    /// Largest `|ω|` over the lattice; resonance tolerances are relative to it.
    pub fn omega_scale(&self) -> f64 {
        self.omega_scale
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// Largest number of distinct frequencies at any mode.
    pub fn max_branches(&self) -> usize {
        self.modes.iter().map(|m| m.len()).max().unwrap_or(0)
    }

    /// `e^{-tA}` applied mode-wise to a whole state.
    pub fn evolve_state(
        &self,
        t: f64,
        w: &crate::state::SpectralState,
    ) -> Result<crate::state::SpectralState> {
        if w.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch);
        }
        let mut out = w.clone();
        for i in 0..self.lattice.len() {
            let v = self.modes[i].evolve(t, w.mode(i));
            out.mode_mut(i).copy_from_slice(&v);
        }
        Ok(out)
    }
}

/// Decomposes every mode of `lattice`.
pub fn frequency_spectrum(
    spec: &SystemSpec,
    lattice: &FrequencyLattice,
    cluster_tol: f64,
) -> Result<Spectrum> {
    if lattice.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            context: "lattice dimension",
            expected: spec.dim(),
            got: lattice.dim(),
        });
    }
    let modes = par::map_indexed(lattice.len(), |i| decompose(spec, lattice.mode(i), cluster_tol))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let omega_scale = modes.iter().fold(0.0, |m: f64, d| m.max(d.max_frequency()));
    Ok(Spectrum {
        lattice: lattice.clone(),
        modes,
        omega_scale,
        cluster_tol,
    })
}
