#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wndkit_core::linalg::RMatrix;
use wndkit_core::navier_stokes::CnsModel;
use wndkit_core::system::SpecData;
use wndkit_core::{Complex64, FrequencyLattice, SpectralState, SystemSpec};

/// Ideal gas about `ρ = θ = 1` with `μ = κ = 1`, `λ = 0`, `D = 3`.
pub fn reference_gas(dim: usize) -> CnsModel {
    CnsModel::ideal_gas(dim, 1.0, 1.0, 1.0, 0.0, 1.0, 3.0).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real field with coefficients of size `amplitude / (1 + |ξ|²)`.
pub fn random_real_state(
    lattice: &FrequencyLattice,
    ncomp: usize,
    amplitude: f64,
    rng: &mut impl Rng,
) -> SpectralState {
    let mut w = SpectralState::zeros(lattice, ncomp);
    for i in 0..lattice.len() {
        let decay = amplitude / (1.0 + lattice.norm_sq(i) as f64);
        for z in w.mode_mut(i) {
            *z = Complex64::new(
                decay * rng.random_range(-1.0..1.0),
                decay * rng.random_range(-1.0..1.0),
            );
        }
    }
    w.enforce_reality();
    w
}

/// Random complex field with no symmetry.
pub fn random_complex_state(
    lattice: &FrequencyLattice,
    ncomp: usize,
    rng: &mut impl Rng,
) -> SpectralState {
    let mut w = SpectralState::zeros(lattice, ncomp);
    for i in 0..lattice.len() {
        let decay = 1.0 / (1.0 + lattice.norm_sq(i) as f64);
        for z in w.mode_mut(i) {
            *z = Complex64::new(
                decay * rng.random_range(-1.0..1.0),
                decay * rng.random_range(-1.0..1.0),
            );
        }
    }
    w
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(id: u32, name: &str, passed: bool, detail: &str) -> bool {
    println!(
        "ACCEPTANCE {id:>2} {:<4} {name}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    passed
}

fn random_matrix(n: usize, m: usize, rng: &mut impl Rng) -> RMatrix {
    RMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}

/// Random system with the entropy structure: `G` positive definite, `G A[a]`
/// symmetric, `G B(ξ)` positive semidefinite and `G Q[a]` fully symmetric.
pub fn random_entropic_spec(dim: usize, n: usize, rng: &mut impl Rng) -> SystemSpec {
    let root = random_matrix(n, n, rng);
    let g = &root.matmul(&root.transpose()) + &RMatrix::identity(n).scale(0.5);
    let g_inv = g.inverse().unwrap();
    let mut d = SpecData::zeros(dim, n);
    d.entropy_hessian = g.as_slice().to_vec();
    let factors: Vec<RMatrix> = (0..dim).map(|_| random_matrix(n, n, rng).scale(0.6)).collect();
    for a in 0..dim {
        let s = random_matrix(n, n, rng).symmetric_part();
        let adv = g_inv.matmul(&s);
        for i in 0..n {
            for j in 0..n {
                let idx = d.advection_index(a, i, j);
                d.advection[idx] = adv[(i, j)];
            }
        }
        for b in 0..dim {
            let sym = (&factors[a].transpose().matmul(&factors[b])
                + &factors[b].transpose().matmul(&factors[a]))
                .scale(0.5);
            let dif = g_inv.matmul(&sym);
            for i in 0..n {
                for j in 0..n {
                    let idx = d.diffusion_index(a, b, i, j);
                    d.diffusion[idx] = dif[(i, j)];
                }
            }
        }
        let mut cubic = vec![0.0; n * n * n];
        for i in 0..n {
            for p in i..n {
                for q in p..n {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    for (x, y, z) in [(i, p, q), (i, q, p), (p, i, q), (p, q, i), (q, i, p), (q, p, i)] {
                        cubic[(x * n + y) * n + z] = v;
                    }
                }
            }
        }
        for i in 0..n {
            for p in 0..n {
                for q in 0..n {
                    let v: f64 = (0..n).map(|r| g_inv[(i, r)] * cubic[(r * n + p) * n + q]).sum();
                    let idx = d.quadratic_index(a, i, p, q);
                    d.quadratic[idx] = v;
                }
            }
        }
    }
    SystemSpec::new(d).unwrap()
}

/// Well-conditioned random change of variables `I + 0.3 M`.
pub fn random_transform(n: usize, rng: &mut impl Rng) -> RMatrix {
    &RMatrix::identity(n) + &random_matrix(n, n, rng).scale(0.3 / n as f64)
}
