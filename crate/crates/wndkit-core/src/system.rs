//! Linearized symbol data of a hyperbolic-parabolic system at a constant state,
//! its entropy-structure checks, and linear changes of dependent variables.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::directions;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, spectral_norm, symmetric_eigen, RMatrix};
use crate::math;

/// Relative tolerance for the symmetry checks of the entropy structure.
pub const DEFAULT_TOL_SYM: f64 = 1e-10;
/// Relative tolerance for nonnegativity of the diffusion symbol.
pub const DEFAULT_TOL_PSD: f64 = 1e-10;
/// Largest condition number accepted for a change of variables.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

/// Raw tensor data of a system, laid out flat in row-major order.
///
/// * `advection`: `dim × ncomp × ncomp`
/// * `diffusion`: `dim × dim × ncomp × ncomp`
/// * `quadratic`: `dim × ncomp × ncomp × ncomp`, symmetric in the last two indices
/// * `entropy_hessian`: `ncomp × ncomp`
#[derive(Clone, Debug, PartialEq)]
pub struct SpecData {
    pub dim: usize,
    pub ncomp: usize,
    pub state: Vec<f64>,
    pub advection: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub quadratic: Vec<f64>,
    pub entropy_hessian: Vec<f64>,
    pub labels: Vec<String>,
}

impl SpecData {
    /// Zero tensors of the right shapes with an identity entropy Hessian.
    pub fn zeros(dim: usize, ncomp: usize) -> Self {
        let n = ncomp;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            g[i * n + i] = 1.0;
        }
        Self {
            dim,
            ncomp,
            state: vec![0.0; n],
            advection: vec![0.0; dim * n * n],
            diffusion: vec![0.0; dim * dim * n * n],
            quadratic: vec![0.0; dim * n * n * n],
            entropy_hessian: g,
            labels: Vec::new(),
        }
    }

    #[inline]
    pub fn advection_index(&self, a: usize, i: usize, j: usize) -> usize {
        (a * self.ncomp + i) * self.ncomp + j
    }

    #[inline]
    pub fn diffusion_index(&self, a: usize, b: usize, i: usize, j: usize) -> usize {
        ((a * self.dim + b) * self.ncomp + i) * self.ncomp + j
    }

    #[inline]
    pub fn quadratic_index(&self, a: usize, i: usize, p: usize, q: usize) -> usize {
        ((a * self.ncomp + i) * self.ncomp + p) * self.ncomp + q
    }
}

/// Symmetric square roots of the entropy Hessian.
#[derive(Clone, Debug)]
pub struct Metric {
    pub g: RMatrix,
    pub sqrt: RMatrix,
    pub inv_sqrt: RMatrix,
    pub min_eigenvalue: f64,
}

impl Metric {
    fn new(g: &RMatrix) -> Result<(Option<Metric>, f64)> {
        let sym = g.symmetric_part();
        let (vals, vecs) = symmetric_eigen(&sym)?;
        let min = vals.first().copied().unwrap_or(0.0);
        if !(min > 0.0) {
            return Ok((None, min));
        }
        let n = g.rows();
        let build = |f: &dyn Fn(f64) -> f64| {
            RMatrix::from_fn(n, n, |i, j| {
                (0..n).map(|k| vecs[(i, k)] * f(vals[k]) * vecs[(j, k)]).sum()
            })
        };
        let sqrt = build(&|x| math::sqrt(x));
        let inv_sqrt = build(&|x| 1.0 / math::sqrt(x));
        Ok((
            Some(Metric {
                g: sym,
                sqrt,
                inv_sqrt,
                min_eigenvalue: min,
            }),
            min,
        ))
    }
}

/// A hyperbolic-parabolic system linearized about a constant state, expressed
/// in working variables.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    data: SpecData,
    entropy_hessian: RMatrix,
    metric: Option<Metric>,
    g_min_eigenvalue: f64,
}

impl SystemSpec {
    /// Validates shapes, finiteness and the symmetry of the quadratic kernel.
    pub fn new(mut data: SpecData) -> Result<Self> {
        let d = data.dim;
        let n = data.ncomp;
        if d == 0 || n == 0 {
            return Err(Error::InvalidSpec("dim and ncomp must be positive".into()));
        }
        let check = |name: &str, got: usize, expected: usize| -> Result<()> {
            if got != expected {
                Err(Error::InvalidSpec(format!(
                    "{name} has {got} entries, expected {expected}"
                )))
            } else {
                Ok(())
            }
        };
        check("state", data.state.len(), n)?;
        check("advection", data.advection.len(), d * n * n)?;
        check("diffusion", data.diffusion.len(), d * d * n * n)?;
        check("quadratic", data.quadratic.len(), d * n * n * n)?;
        check("entropy_hessian", data.entropy_hessian.len(), n * n)?;
        if data.labels.is_empty() {
            data.labels = (0..n).map(|i| format!("w{i}")).collect();
        }
        check("labels", data.labels.len(), n)?;
        let all = data
            .state
            .iter()
            .chain(&data.advection)
            .chain(&data.diffusion)
            .chain(&data.quadratic)
            .chain(&data.entropy_hessian);
        if !all.clone().all(|x| x.is_finite()) {
            return Err(Error::InvalidSpec("non-finite tensor entry".into()));
        }
        let qscale = data.quadratic.iter().fold(0.0, |m: f64, x| m.max(math::abs(*x)));
        for a in 0..d {
            for i in 0..n {
                for p in 0..n {
                    for q in (p + 1)..n {
                        let x = data.quadratic[data.quadratic_index(a, i, p, q)];
                        let y = data.quadratic[data.quadratic_index(a, i, q, p)];
                        if math::abs(x - y) > 1e-12 * qscale {
                            return Err(Error::InvalidSpec(format!(
                                "quadratic kernel not symmetric at direction {a}, component {i}, indices ({p},{q})"
                            )));
                        }
                    }
                }
            }
        }
        let entropy_hessian = RMatrix::from_vec(n, n, data.entropy_hessian.clone());
        let (metric, g_min_eigenvalue) = Metric::new(&entropy_hessian)?;
        Ok(Self {
            data,
            entropy_hessian,
            metric,
            g_min_eigenvalue,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.dim
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.data.ncomp
    }

    pub fn state(&self) -> &[f64] {
        &self.data.state
    }

    pub fn labels(&self) -> &[String] {
        &self.data.labels
    }

    pub fn data(&self) -> &SpecData {
        &self.data
    }

    pub fn into_data(self) -> SpecData {
        self.data
    }

    pub fn entropy_hessian(&self) -> &RMatrix {
        &self.entropy_hessian
    }

    /// Square roots of the entropy Hessian; fails if it is not positive definite.
    pub fn metric(&self) -> Result<&Metric> {
        self.metric
            .as_ref()
            .ok_or(Error::NotPositiveDefinite(self.g_min_eigenvalue))
    }

    /// Advection matrix `A[a]` for a single coordinate direction.
    pub fn advection_matrix(&self, a: usize) -> RMatrix {
        let n = self.ncomp();
        RMatrix::from_fn(n, n, |i, j| self.data.advection[self.data.advection_index(a, i, j)])
    }

    /// Diffusion matrix `B[a][b]` for a pair of coordinate directions.
    pub fn diffusion_matrix(&self, a: usize, b: usize) -> RMatrix {
        let n = self.ncomp();
        RMatrix::from_fn(n, n, |i, j| {
            self.data.diffusion[self.data.diffusion_index(a, b, i, j)]
        })
    }

    /// Flat quadratic kernel `Q[a][i][p][q]`.
    pub fn quadratic(&self) -> &[f64] {
        &self.data.quadratic
    }

    pub fn has_quadratic(&self) -> bool {
        self.data.quadratic.iter().any(|&x| x != 0.0)
    }

    fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "wavevector",
                expected: self.dim(),
                got: xi.len(),
            });
        }
        Ok(())
    }

    /// Advection symbol `Σ_a ξ_a A[a]`.
    pub fn symbol_advection(&self, xi: &[f64]) -> Result<RMatrix> {
        self.check_xi(xi)?;
        let n = self.ncomp();
        let mut out = RMatrix::zeros(n, n);
        for (a, &x) in xi.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let base = a * n * n;
            for (o, &v) in out
                .as_mut_slice()
                .iter_mut()
                .zip(&self.data.advection[base..base + n * n])
            {
                *o += x * v;
            }
        }
        Ok(out)
    }

    /// Diffusion symbol `Σ_{a,b} ξ_a ξ_b B[a][b]`.
    pub fn symbol_diffusion(&self, xi: &[f64]) -> Result<RMatrix> {
        self.check_xi(xi)?;
        let n = self.ncomp();
        let d = self.dim();
        let mut out = RMatrix::zeros(n, n);
        for a in 0..d {
            for b in 0..d {
                let w = xi[a] * xi[b];
                if w == 0.0 {
                    continue;
                }
                let base = (a * d + b) * n * n;
                for (o, &v) in out
                    .as_mut_slice()
                    .iter_mut()
                    .zip(&self.data.diffusion[base..base + n * n])
                {
                    *o += w * v;
                }
            }
        }
        Ok(out)
    }

    /// Kernel contracted with a direction: `Σ_a ξ_a Q[a][i][p][q]`, flat `N³`.
    pub fn quadratic_contracted(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_xi(xi)?;
        let n3 = self.ncomp() * self.ncomp() * self.ncomp();
        let mut out = vec![0.0; n3];
        for (a, &x) in xi.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(&self.data.quadratic[a * n3..(a + 1) * n3]) {
                *o += x * v;
            }
        }
        Ok(out)
    }

    /// `(u | v)` in the entropy metric: `uᴴ G v`.
    pub fn g_inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let n = self.ncomp();
        let g = self.entropy_hessian.as_slice();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let mut gv = Complex64::new(0.0, 0.0);
            for j in 0..n {
                gv += v[j] * g[i * n + j];
            }
            acc += u[i].conj() * gv;
        }
        acc
    }

    /// `vᴴ G v` (real by symmetry of G).
    pub fn g_norm_sq(&self, v: &[Complex64]) -> f64 {
        self.g_inner(v, v).re
    }

    /// Operator norm induced by the entropy metric: `‖G^{1/2} X G^{-1/2}‖₂`.
    pub fn g_operator_norm(&self, x: &RMatrix) -> Result<f64> {
        let m = self.metric()?;
        let y = m.sqrt.matmul(x).matmul(&m.inv_sqrt);
        spectral_norm(&y.to_complex())
    }
}

/// Outcome of the entropy-structure checks.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    pub passed: bool,
    /// Sampled direction with the largest (tolerance-scaled) violation.
    pub worst_direction: Vec<f64>,
    pub min_eigenvalue_g: f64,
    /// Largest antisymmetric part of `G`, `G A(ξ̂)` and `G B(ξ̂)`, each relative to
    /// the operator norm of the matrix it was taken from.
    pub max_asymmetry: f64,
    /// Smallest eigenvalue of the symmetric part of `G B(ξ̂)` (not normalized).
    pub min_diffusion_eigenvalue: f64,
    /// Largest `‖G B(ξ̂)‖₂`; the nonnegativity tolerance is scaled by it.
    pub diffusion_scale: f64,
    pub directions_sampled: usize,
    pub tol_sym: f64,
    pub tol_psd: f64,
}

/// Tolerances used by [`validate_entropy_structure_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyTolerances {
    pub tol_sym: f64,
    pub tol_psd: f64,
}

impl Default for EntropyTolerances {
    fn default() -> Self {
        Self {
            tol_sym: DEFAULT_TOL_SYM,
            tol_psd: DEFAULT_TOL_PSD,
        }
    }
}

fn relative_asymmetry(m: &RMatrix) -> Result<f64> {
    let norm = spectral_norm(&m.to_complex())?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(spectral_norm(&m.antisymmetric_part().to_complex())? / norm)
}

/// Entropy-structure checks with default tolerances.
pub fn validate_entropy_structure(spec: &SystemSpec, n_directions: usize) -> Result<EntropyReport> {
    validate_entropy_structure_with(spec, n_directions, EntropyTolerances::default())
}

/// Samples `n_directions` Fibonacci directions plus the coordinate axes and
/// checks positivity of `G`, symmetry of `G A(ξ̂)` and `G B(ξ̂)`, and
/// nonnegativity of `G B(ξ̂)`.
pub fn validate_entropy_structure_with(
    spec: &SystemSpec,
    n_directions: usize,
    tol: EntropyTolerances,
) -> Result<EntropyReport> {
    if n_directions == 0 {
        return Err(Error::InvalidArgument("n_directions must be at least 1".into()));
    }
    let g = spec.entropy_hessian();
    let g_asym = relative_asymmetry(g)?;
    let dirs = directions::sample_with_axes(spec.dim(), n_directions);
    let mut max_asym = g_asym;
    let mut min_diff = f64::INFINITY;
    let mut diff_scale: f64 = 0.0;
    let mut per_direction = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        let ga = g.matmul(&spec.symbol_advection(dir)?);
        let gb = g.matmul(&spec.symbol_diffusion(dir)?);
        let asym = relative_asymmetry(&ga)?.max(relative_asymmetry(&gb)?);
        let (vals, _) = symmetric_eigen(&gb.symmetric_part())?;
        let lam = vals.first().copied().unwrap_or(0.0);
        diff_scale = diff_scale.max(spectral_norm(&gb.to_complex())?);
        max_asym = max_asym.max(asym);
        min_diff = min_diff.min(lam);
        per_direction.push((asym, lam));
    }
    let mut worst = 0usize;
    let mut worst_score = f64::NEG_INFINITY;
    for (i, &(asym, lam)) in per_direction.iter().enumerate() {
        let psd_score = if diff_scale > 0.0 {
            -lam / (tol.tol_psd * diff_scale)
        } else {
            0.0
        };
        let score = (asym / tol.tol_sym).max(psd_score);
        if score > worst_score {
            worst_score = score;
            worst = i;
        }
    }
    let min_eigenvalue_g = spec.g_min_eigenvalue;
    let passed = min_eigenvalue_g > 0.0
        && max_asym <= tol.tol_sym
        && min_diff >= -tol.tol_psd * diff_scale;
    Ok(EntropyReport {
        passed,
        worst_direction: dirs[worst].clone(),
        min_eigenvalue_g,
        max_asymmetry: max_asym,
        min_diffusion_eigenvalue: min_diff,
        diffusion_scale: diff_scale,
        directions_sampled: dirs.len(),
        tol_sym: tol.tol_sym,
        tol_psd: tol.tol_psd,
    })
}

/// Rewrites a spec in new working variables `W = T W'`, rejecting
/// transformations whose condition number exceeds [`DEFAULT_CONDITION_CAP`].
pub fn change_of_variables(spec: &SystemSpec, t: &RMatrix) -> Result<SystemSpec> {
    change_of_variables_with_cap(spec, t, DEFAULT_CONDITION_CAP)
}

pub fn change_of_variables_with_cap(
    spec: &SystemSpec,
    t: &RMatrix,
    condition_cap: f64,
) -> Result<SystemSpec> {
    let n = spec.ncomp();
    let d = spec.dim();
    if t.rows() != n || t.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "change of variables",
            expected: n,
            got: t.rows().max(t.cols()),
        });
    }
    let tinv = t.inverse()?;
    let cond = t.norm1() * tinv.norm1();
    if !(cond <= condition_cap) {
        return Err(Error::IllConditioned(cond));
    }
    let src = spec.data();
    let mut out = SpecData::zeros(d, n);
    out.state = src.state.clone();
    out.labels = src.labels.iter().map(|l| format!("{l}'")).collect();
    let conj = |m: &RMatrix| tinv.matmul(m).matmul(t);
    for a in 0..d {
        let am = conj(&spec.advection_matrix(a));
        for i in 0..n {
            for j in 0..n {
                let idx = out.advection_index(a, i, j);
                out.advection[idx] = am[(i, j)];
            }
        }
        for b in 0..d {
            let bm = conj(&spec.diffusion_matrix(a, b));
            for i in 0..n {
                for j in 0..n {
                    let idx = out.diffusion_index(a, b, i, j);
                    out.diffusion[idx] = bm[(i, j)];
                }
            }
        }
    }
    // Q'[a]_i(p,q) = Σ_r Tinv[i][r] Σ_{s,u} Q[a]_r(s,u) T[s][p] T[u][q]
    let q = spec.quadratic();
    let mut tmp = vec![0.0; n * n * n];
    for a in 0..d {
        let qa = &q[a * n * n * n..(a + 1) * n * n * n];
        // contract the last index: tmp[r][s][q] = Σ_u Q[r][s][u] T[u][q]
        for r in 0..n {
            for s in 0..n {
                for qq in 0..n {
                    tmp[(r * n + s) * n + qq] =
                        (0..n).map(|u| qa[(r * n + s) * n + u] * t[(u, qq)]).sum();
                }
            }
        }
        // contract the middle index: tmp2[r][p][q] = Σ_s T[s][p] tmp[r][s][q]
        let mut tmp2 = vec![0.0; n * n * n];
        for r in 0..n {
            for p in 0..n {
                for qq in 0..n {
                    tmp2[(r * n + p) * n + qq] =
                        (0..n).map(|s| t[(s, p)] * tmp[(r * n + s) * n + qq]).sum();
                }
            }
        }
        for i in 0..n {
            for p in 0..n {
                for qq in 0..n {
                    let v: f64 = (0..n).map(|r| tinv[(i, r)] * tmp2[(r * n + p) * n + qq]).sum();
                    let idx = out.quadratic_index(a, i, p, qq);
                    out.quadratic[idx] = v;
                }
            }
        }
        // Remove rounding asymmetry so the result passes the symmetry check.
        for i in 0..n {
            for p in 0..n {
                for qq in (p + 1)..n {
                    let i1 = out.quadratic_index(a, i, p, qq);
                    let i2 = out.quadratic_index(a, i, qq, p);
                    let avg = 0.5 * (out.quadratic[i1] + out.quadratic[i2]);
                    out.quadratic[i1] = avg;
                    out.quadratic[i2] = avg;
                }
            }
        }
    }
    let g_new = t.transpose().matmul(spec.entropy_hessian()).matmul(t);
    out.entropy_hessian = g_new.symmetric_part().into_vec();
    SystemSpec::new(out)
}

/// Smallest generalized eigenvalue of the pencil `(M, G)` for symmetric `M`
/// and the spec's positive definite `G`.
pub fn min_generalized_eigenvalue(spec: &SystemSpec, m: &RMatrix) -> Result<f64> {
    let metric = spec.metric()?;
    let s = metric.inv_sqrt.matmul(&m.symmetric_part()).matmul(&metric.inv_sqrt);
    let eig = hermitian_eigen(&s.to_complex())?;
    Ok(eig.values.first().copied().unwrap_or(0.0))
}
