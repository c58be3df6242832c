//! Kawashima condition, strict-dissipativity criterion search and the
//! constructive decay rate it certifies.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::averaging::AveragedDiffusion;
use crate::directions;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::math;
use crate::spectral::{decompose_symbol, DEFAULT_CLUSTER_TOL};
use crate::system::{min_generalized_eigenvalue, SystemSpec};

/// Relative threshold below which `‖B v‖` counts as annihilation.
pub const DEFAULT_TOL_NULL: f64 = 1e-10;
/// Size of the Fibonacci part of the direction sample.
pub const DEFAULT_FIBONACCI_DIRECTIONS: usize = 200;
/// Slack allowed when comparing the measured rate with the certified one.
pub const DELTA_CHECK_SLACK: f64 = 1e-9;

/// `count` logarithmically spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (math::ln(lo), math::ln(hi));
    (0..count)
        .map(|i| math::exp(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

/// 32 points spanning `[1e-2, 1e2]`.
pub fn default_alpha_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 32)
}

/// Lattice rays up to `radius` plus the Fibonacci sample.
pub fn default_directions(dim: usize, radius: usize) -> Vec<Vec<f64>> {
    let mut dirs = directions::lattice_directions(dim, radius);
    dirs.extend(directions::fibonacci_directions(dim, DEFAULT_FIBONACCI_DIRECTIONS));
    dirs
}

/// An eigenvector of `A(ξ̂)` annihilated by `B(ξ̂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KawashimaWitness {
    pub direction: Vec<f64>,
    pub frequency: f64,
    pub eigenvector: Vec<Complex64>,
    /// `‖B v‖_G / (‖B‖_G ‖v‖_G)` for the witness.
    pub relative_residual: f64,
}

fn check_directions(spec: &SystemSpec, directions: &[Vec<f64>]) -> Result<()> {
    if directions.is_empty() {
        return Err(Error::InvalidArgument("direction list is empty".into()));
    }
    for d in directions {
        if d.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                context: "direction",
                expected: spec.dim(),
                got: d.len(),
            });
        }
        let norm = math::sqrt(d.iter().map(|x| x * x).sum());
        if math::abs(norm - 1.0) > 1e-12 {
            return Err(Error::InvalidArgument(format!("direction {d:?} is not a unit vector")));
        }
    }
    Ok(())
}

/// Tests every eigenspace of `A(ξ̂)` for a vector in the null space of `B(ξ̂)`.
///
/// Within each eigenspace the least-damped unit vector is found by minimizing
/// `‖B v‖_G`, so annihilated combinations of basis vectors are detected too.
pub fn kawashima_check(
    spec: &SystemSpec,
    directions: &[Vec<f64>],
    tol_null: f64,
) -> Result<(bool, Vec<KawashimaWitness>)> {
    check_directions(spec, directions)?;
    let metric = spec.metric()?;
    let g_half = metric.sqrt.to_complex();
    let mut witnesses = Vec::new();
    for dir in directions {
        let dec = decompose_symbol(spec, dir, DEFAULT_CLUSTER_TOL)?;
        let b = spec.symbol_diffusion(dir)?;
        let b_norm = spec.g_operator_norm(&b)?;
        let gb = g_half.matmul(&b.to_complex());
        for j in 0..dec.len() {
            let basis = dec.basis(j);
            let y = gb.matmul(basis);
            let gram = y.adjoint().matmul(&y);
            let eig = hermitian_eigen(&gram)?;
            let smallest = math::sqrt(eig.values[0].max(0.0));
            if smallest <= tol_null * b_norm {
                let coeffs = eig.vectors.column(0);
                let v = basis.mul_vec(&coeffs);
                witnesses.push(KawashimaWitness {
                    direction: dir.clone(),
                    frequency: dec.frequencies()[j],
                    eigenvector: v,
                    relative_residual: if b_norm > 0.0 { smallest / b_norm } else { 0.0 },
                });
            }
        }
    }
    Ok((witnesses.is_empty(), witnesses))
}

/// `β(α)` at a single direction: smallest eigenvalue of
/// `(G B + α⁻² Aᵀ G B A, G)`.
pub fn beta_at_direction(spec: &SystemSpec, alpha: f64, dir: &[f64]) -> Result<f64> {
    let a = spec.symbol_advection(dir)?;
    let gb = spec.entropy_hessian().matmul(&spec.symbol_diffusion(dir)?);
    let corr = a.transpose().matmul(&gb).matmul(&a).scale(1.0 / (alpha * alpha));
    min_generalized_eigenvalue(spec, &(&gb + &corr))
}

/// `β(α)` for every direction in the sample.
pub fn beta_profile(spec: &SystemSpec, alpha: f64, directions: &[Vec<f64>]) -> Result<Vec<f64>> {
    directions.iter().map(|d| beta_at_direction(spec, alpha, d)).collect()
}

/// `C_A` and `C_B`: largest metric operator norms of the symbols over the sample.
pub fn symbol_bounds(spec: &SystemSpec, directions: &[Vec<f64>]) -> Result<(f64, f64)> {
    let mut ca: f64 = 0.0;
    let mut cb: f64 = 0.0;
    for d in directions {
        ca = ca.max(spec.g_operator_norm(&spec.symbol_advection(d)?)?);
        cb = cb.max(spec.g_operator_norm(&spec.symbol_diffusion(d)?)?);
    }
    Ok((ca, cb))
}

/// `ε` at its admissible cap and the decay rate `δ` it yields.
pub fn constructive_delta(alpha: f64, beta: f64, c_a: f64, c_b: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && beta > 0.0 && c_a > 0.0 && c_b > 0.0) {
        return Err(Error::InvalidArgument(
            "alpha, beta, C_A and C_B must all be positive".into(),
        ));
    }
    let a2 = alpha * alpha;
    let a4 = a2 * a2;
    let ca2 = c_a * c_a;
    let epsilon = a4 * beta / (a4 * beta + ca2 * ca2 * c_b) * beta / 4.0;
    let delta = a2 * beta * epsilon / (2.0 * ca2 * c_b + a2 * beta);
    Ok((epsilon, delta))
}

/// A successful point of the criterion search.
#[derive(Clone, Debug, PartialEq)]
pub struct StrictCriterion {
    pub alpha: f64,
    pub beta: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub epsilon: f64,
    pub delta: f64,
}

/// Result of scanning the α grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionSearch {
    /// The `(α, β)` pair with the largest `δ`, if any `β(α) > 0`.
    pub best: Option<StrictCriterion>,
    /// `(α, β(α))` for every grid point.
    pub betas: Vec<(f64, f64)>,
    pub c_a: f64,
    pub c_b: f64,
}

/// Scans `alphas` and keeps the pair maximizing the constructive `δ`.
pub fn strict_criterion_search(
    spec: &SystemSpec,
    alphas: &[f64],
    directions: &[Vec<f64>],
) -> Result<CriterionSearch> {
    check_directions(spec, directions)?;
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidArgument("alphas must be positive and nonempty".into()));
    }
    let (c_a, c_b) = symbol_bounds(spec, directions)?;
    let mut betas = Vec::with_capacity(alphas.len());
    let mut best: Option<StrictCriterion> = None;
    for &alpha in alphas {
        let beta = beta_profile(spec, alpha, directions)?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        betas.push((alpha, beta));
        if beta > 0.0 && c_a > 0.0 && c_b > 0.0 {
            let (epsilon, delta) = constructive_delta(alpha, beta, c_a, c_b)?;
            if best.as_ref().is_none_or(|b| delta > b.delta) {
                best = Some(StrictCriterion {
                    alpha,
                    beta,
                    c_a,
                    c_b,
                    epsilon,
                    delta,
                });
            }
        }
    }
    Ok(CriterionSearch {
        best,
        betas,
        c_a,
        c_b,
    })
}

/// Smallest generalized eigenvalue of `(−G D̄(ξ), |ξ|² G)` over the nonzero
/// modes of the lattice.
pub fn verify_delta(spec: &SystemSpec, avg: &AveragedDiffusion) -> Result<f64> {
    let metric = spec.metric()?;
    let g = spec.entropy_hessian().to_complex();
    let inv_sqrt = metric.inv_sqrt.to_complex();
    let lat = avg.lattice();
    let mut best = f64::INFINITY;
    for i in 0..lat.len() {
        let k2 = lat.norm_sq(i) as f64;
        if k2 == 0.0 {
            continue;
        }
        let m: CMatrix = g.matmul(avg.block(i)).scale(Complex64::new(-1.0 / k2, 0.0));
        let s = inv_sqrt.matmul(&m).matmul(&inv_sqrt);
        let eig = hermitian_eigen(&s)?;
        best = best.min(eig.values[0]);
    }
    Ok(best)
}

/// Settings for [`dissipativity_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct DissipativityConfig {
    pub alphas: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub tol_null: f64,
}

impl DissipativityConfig {
    /// Default α grid, lattice rays up to `radius` plus 200 Fibonacci points.
    pub fn for_lattice(dim: usize, radius: usize) -> Self {
        Self {
            alphas: default_alpha_grid(),
            directions: default_directions(dim, radius),
            tol_null: DEFAULT_TOL_NULL,
        }
    }
}

/// Combined Kawashima, criterion and measured-rate analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipativityReport {
    pub kawashima_ok: bool,
    pub witnesses: Vec<KawashimaWitness>,
    pub criterion_found: bool,
    pub alpha: f64,
    pub beta: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub epsilon: f64,
    /// Certified rate; zero when no `α` satisfies the criterion.
    pub delta: f64,
    pub delta_empirical: f64,
    /// `delta_empirical ≥ delta − 1e-9`.
    pub delta_bound_holds: bool,
    pub directions_sampled: usize,
    pub betas: Vec<(f64, f64)>,
}

pub fn dissipativity_report(
    spec: &SystemSpec,
    avg: &AveragedDiffusion,
    config: &DissipativityConfig,
) -> Result<DissipativityReport> {
    let (kawashima_ok, witnesses) = kawashima_check(spec, &config.directions, config.tol_null)?;
    let search = strict_criterion_search(spec, &config.alphas, &config.directions)?;
    let delta_empirical = verify_delta(spec, avg)?;
    let (criterion_found, alpha, beta, epsilon, delta) = match &search.best {
        Some(b) => (true, b.alpha, b.beta, b.epsilon, b.delta),
        None => {
            let (alpha, beta) = search
                .betas
                .iter()
                .copied()
                .fold((f64::NAN, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            (false, alpha, beta, 0.0, 0.0)
        }
    };
    Ok(DissipativityReport {
        kawashima_ok,
        witnesses,
        criterion_found,
        alpha,
        beta,
        c_a: search.c_a,
        c_b: search.c_b,
        epsilon,
        delta,
        delta_empirical,
        delta_bound_holds: delta_empirical >= delta - DELTA_CHECK_SLACK,
        directions_sampled: config.directions.len(),
        betas: search.betas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_inputs_give_closed_form() {
        let (e, d) = constructive_delta(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((e - 0.125).abs() < 1e-16);
        assert!((d - 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn nonpositive_inputs_rejected() {
        assert!(constructive_delta(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(constructive_delta(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn alpha_grid_endpoints() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 32);
        assert!((g[0] - 1e-2).abs() < 1e-15);
        assert!((g[31] - 1e2).abs() < 1e-10);
    }
}
