//! Cross-checks of the compressible Navier-Stokes construction against
//! finite differences of the conservation-law fluxes and entropy.

mod common;

use common::reference_gas;
use wndkit_core::linalg::RMatrix;
use wndkit_core::navier_stokes::{
    acoustic_diffusivity, sound_speed, signed_root_sum_vanishes, CnsModel, EquationOfState,
    IdealGas, ThermoDerivatives, TransportCoefficients,
};
use wndkit_core::spectral::decompose;
use wndkit_core::system::validate_entropy_structure;
use wndkit_core::Error;

const D_MICRO: f64 = 3.0;

/// Ideal-gas conserved state `(ρ, ρu, ρε + ½ρ|u|²)` to temperature.
fn temperature(u: &[f64]) -> f64 {
    let n = u.len();
    let rho = u[0];
    let kinetic: f64 = u[1..n - 1].iter().map(|m| m * m).sum::<f64>() / (2.0 * rho);
    (u[n - 1] - kinetic) / (rho * 0.5 * D_MICRO)
}

fn flux(u: &[f64], a: usize) -> Vec<f64> {
    let n = u.len();
    let rho = u[0];
    let p = rho * temperature(u);
    let ma = u[1 + a];
    let mut f = vec![0.0; n];
    f[0] = ma;
    for b in 0..n - 2 {
        f[1 + b] = ma * u[1 + b] / rho + if a == b { p } else { 0.0 };
    }
    f[n - 1] = (u[n - 1] + p) * ma / rho;
    f
}

fn entropy(u: &[f64]) -> f64 {
    let rho = u[0];
    -rho * IdealGas::new(D_MICRO).specific_entropy(rho, temperature(u))
}

fn reference_conserved(dim: usize) -> Vec<f64> {
    let mut u = vec![0.0; dim + 2];
    u[0] = 1.0;
    u[dim + 1] = 0.5 * D_MICRO;
    u
}

fn shifted(u: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut v = u.to_vec();
    for &(i, h) in moves {
        v[i] += h;
    }
    v
}

fn max_rel(a: &RMatrix, b: &RMatrix) -> f64 {
    (a - b).max_abs() / b.max_abs().max(1e-300)
}

#[test]
fn entropy_hessian_matches_conserved_entropy() {
    for dim in 1..=3 {
        let model = reference_gas(dim);
        let cons = model.conserved_spec().unwrap();
        let u0 = reference_conserved(dim);
        let n = dim + 2;
        let h = 1e-4;
        let fd = RMatrix::from_fn(n, n, |p, q| {
            (entropy(&shifted(&u0, &[(p, h), (q, h)])) - entropy(&shifted(&u0, &[(p, h), (q, -h)]))
                - entropy(&shifted(&u0, &[(p, -h), (q, h)]))
                + entropy(&shifted(&u0, &[(p, -h), (q, -h)])))
                / (4.0 * h * h)
        });
        assert!(max_rel(cons.entropy_hessian(), &fd) < 1e-6, "dim {dim}");
    }
}

#[test]
fn advection_matches_flux_jacobian() {
    for dim in 1..=3 {
        let model = reference_gas(dim);
        let cons = model.conserved_spec().unwrap();
        let u0 = reference_conserved(dim);
        let n = dim + 2;
        let h = 1e-6;
        for a in 0..dim {
            let fd = RMatrix::from_fn(n, n, |i, j| {
                (flux(&shifted(&u0, &[(j, h)]), a)[i] - flux(&shifted(&u0, &[(j, -h)]), a)[i])
                    / (2.0 * h)
            });
            assert!(max_rel(&cons.advection_matrix(a), &fd) < 1e-8, "dim {dim} a {a}");
        }
    }
}

#[test]
fn quadratic_term_matches_half_flux_hessian() {
    for dim in 1..=3 {
        let model = reference_gas(dim);
        let cons = model.conserved_spec().unwrap();
        let u0 = reference_conserved(dim);
        let n = dim + 2;
        let h = 1e-4;
        let q = cons.quadratic();
        for a in 0..dim {
            for i in 0..n {
                for p in 0..n {
                    for r in 0..n {
                        let f = |mv: &[(usize, f64)]| flux(&shifted(&u0, mv), a)[i];
                        let fd = (f(&[(p, h), (r, h)]) - f(&[(p, h), (r, -h)]) - f(&[(p, -h), (r, h)])
                            + f(&[(p, -h), (r, -h)]))
                            / (4.0 * h * h);
                        let got = q[((a * n + i) * n + p) * n + r];
                        assert!(
                            (got - 0.5 * fd).abs() < 1e-6,
                            "dim {dim} a {a} i {i} p {p} r {r}: {got} vs {}",
                            0.5 * fd
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn diffusion_symbol_matches_viscous_and_heat_operators() {
    let (mu, lambda, kappa) = (0.7, 0.3, 1.3);
    let model = CnsModel::ideal_gas(3, 2.0, 1.5, mu, lambda, kappa, 5.0).unwrap();
    let xi = [0.3, -1.2, 0.8];
    let b = model.spec().symbol_diffusion(&xi).unwrap();
    let xi2: f64 = xi.iter().map(|x| x * x).sum();
    let mu_trace = mu * (1.0 - 2.0 / 5.0) + lambda;
    let rho = 2.0;
    let cv = 2.5;
    for r in 0..3 {
        for c in 0..3 {
            let expected = (mu * xi2 * if r == c { 1.0 } else { 0.0 } + mu_trace * xi[r] * xi[c]) / rho;
            assert!((b[(1 + r, 1 + c)] - expected).abs() < 1e-14);
        }
    }
    assert!((b[(4, 4)] - kappa * xi2 / (rho * cv)).abs() < 1e-14);
    assert_eq!(b[(0, 0)], 0.0);
}

#[test]
fn reference_constants() {
    let gas = IdealGas::new(3.0);
    let c = sound_speed(&gas, 1.0, 1.0).unwrap();
    assert!((c * c / (5.0 / 3.0) - 1.0).abs() <= 1e-14);
    let tr = TransportCoefficients {
        mu: 1.0,
        lambda: 0.0,
        kappa: 1.0,
        d_micro: 3.0,
    };
    assert!((acoustic_diffusivity(&gas, &tr, 1.0, 1.0).unwrap() / 0.8 - 1.0).abs() <= 1e-14);
    let model = reference_gas(2);
    assert!((model.specific_heat_pressure() - 2.5).abs() < 1e-15);
}

#[test]
fn isothermal_limit_reduces_to_pressure_slope() {
    struct Barotropic;
    impl EquationOfState for Barotropic {
        fn evaluate(&self, rho: f64, _theta: f64) -> ThermoDerivatives {
            ThermoDerivatives {
                p: rho * rho,
                eps: rho,
                p_rho: 2.0 * rho,
                eps_rho: 1.0,
                eps_theta: 1.0,
                p_rho_rho: 2.0,
                ..Default::default()
            }
        }
    }
    let c = sound_speed(&Barotropic, 1.5, 1.0).unwrap();
    assert!((c * c - 3.0).abs() < 1e-14);
}

#[test]
fn inconsistent_energy_is_rejected() {
    struct Broken;
    impl EquationOfState for Broken {
        fn evaluate(&self, rho: f64, theta: f64) -> ThermoDerivatives {
            ThermoDerivatives {
                p: rho * theta + rho * rho,
                eps: 1.5 * theta,
                p_rho: theta + 2.0 * rho,
                p_theta: rho,
                eps_theta: 1.5,
                p_rho_rho: 2.0,
                p_rho_theta: 1.0,
                ..Default::default()
            }
        }
    }
    let tr = TransportCoefficients {
        mu: 1.0,
        lambda: 0.0,
        kappa: 1.0,
        d_micro: 3.0,
    };
    assert!(matches!(
        CnsModel::new(&Broken, tr, 1.0, 1.0, 2),
        Err(Error::InvalidEos(_))
    ));
    struct Unstable;
    impl EquationOfState for Unstable {
        fn evaluate(&self, _rho: f64, _theta: f64) -> ThermoDerivatives {
            ThermoDerivatives {
                p_rho: -1.0,
                eps_theta: 1.0,
                ..Default::default()
            }
        }
    }
    assert!(matches!(sound_speed(&Unstable, 1.0, 1.0), Err(Error::InvalidEos(_))));
}

#[test]
fn acoustic_basis_is_normalized_eigenbasis() {
    let model = CnsModel::ideal_gas(3, 1.3, 0.7, 1.0, 0.2, 0.5, 4.0).unwrap();
    let spec = model.spec();
    let c = model.sound_speed();
    for k in [[1i64, 0, 0], [2, -1, 3], [0, 0, -5]] {
        let (hp, hm) = model.acoustic_basis(&k).unwrap();
        let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
        let knorm = kf.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = spec.symbol_advection(&kf).unwrap().to_complex();
        for (h, sign) in [(&hp, 1.0), (&hm, -1.0)] {
            let ah = a.mul_vec(h);
            for (x, y) in ah.iter().zip(h.iter()) {
                assert!((x - y * (sign * c * knorm)).norm() < 1e-12);
            }
            assert!((spec.g_norm_sq(h) - 1.0).abs() < 1e-13);
        }
        assert!(spec.g_inner(&hp, &hm).norm() < 1e-13);
        let dec = decompose(spec, &k, 1e-9).unwrap();
        let null = dec.null_index().unwrap();
        let p = dec.projector(null);
        assert!(p.mul_vec(&hp).iter().all(|z| z.norm() < 1e-12));
        assert_eq!(dec.rank(null), 3);
    }
}

#[test]
fn averaged_diffusion_damps_sound_at_predicted_rate() {
    let model = reference_gas(2);
    let spec = model.spec();
    let nu = model.acoustic_diffusivity();
    for k in [[1i64, 0], [3, 4], [-2, 5]] {
        let dec = decompose(spec, &k, 1e-9).unwrap();
        let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
        let k2: f64 = kf.iter().map(|x| x * x).sum();
        let b = spec.symbol_diffusion(&kf).unwrap().to_complex();
        let (hp, _) = model.acoustic_basis(&k).unwrap();
        let bh = b.mul_vec(&hp);
        let rate = spec.g_inner(&hp, &bh).re / k2;
        assert!((rate - nu).abs() < 1e-13, "{rate} vs {nu}");
        assert_eq!(dec.len(), 3);
    }
}

#[test]
fn entropy_structure_holds_for_several_states() {
    for (rho, theta, dim) in [(1.0, 1.0, 1), (0.5, 2.0, 2), (3.0, 0.4, 3)] {
        let model = CnsModel::ideal_gas(dim, rho, theta, 0.8, 0.1, 0.6, 3.0).unwrap();
        let report = validate_entropy_structure(model.spec(), 64).unwrap();
        assert!(report.passed, "{report:?}");
    }
}

#[test]
fn root_sum_rule_examples() {
    // 3-4-5 collinear: |(3,0)| + |(4,0)| = |(7,0)|.
    assert!(signed_root_sum_vanishes(1, 9, 1, 16, 1, 49));
    // Perpendicular legs never add up.
    assert!(!signed_root_sum_vanishes(1, 9, 1, 16, 1, 25));
    assert!(signed_root_sum_vanishes(1, 8, 1, 2, 1, 18));
    assert!(!signed_root_sum_vanishes(1, 8, 1, 2, 1, 17));
}

#[test]
fn interaction_coefficients_match_closed_forms() {
    use wndkit_core::averaging::{build_resonance_table, ResonanceTest};
    use wndkit_core::navier_stokes::{interaction_coefficients, resonance_statistics, NsResonanceRule};
    use wndkit_core::{frequency_spectrum, FrequencyLattice};

    // Ideal-gas values from a symbolic expansion of the resonant couplings.
    for (rho, theta, d_micro) in [(1.0f64, 1.0f64, 3.0f64), (2.0, 0.5, 5.0)] {
        let model = CnsModel::ideal_gas(2, rho, theta, 1.0, 0.0, 1.0, d_micro).unwrap();
        let lat = FrequencyLattice::new(2, 4).unwrap();
        let sp = frequency_spectrum(model.spec(), &lat, 1e-9).unwrap();
        let table = build_resonance_table(&sp, ResonanceTest::Exact(&NsResonanceRule));
        let stats = resonance_statistics(&sp, &table);
        assert_eq!(stats.total, table.len());
        assert!(stats.in_in_in > 0 && stats.in_ac_ac > 0 && stats.ac_ac_ac > 0);
        assert_eq!(stats.other, 0);
        let fit = interaction_coefficients(&model, &sp, &table).unwrap();
        let c2 = ((d_micro + 2.0) / d_micro).sqrt() / (2.0 * theta.sqrt());
        let c4 = (2.0 * theta / rho).sqrt() * (d_micro + 1.0) / (4.0 * d_micro);
        assert!(fit.in_ac_samples > 0 && fit.ac_ac_samples > 0);
        assert!(fit.in_ac_rms_residual <= 1e-12 * fit.in_ac_rms_value, "{fit:?}");
        assert!((fit.c1 - 0.5).abs() < 1e-12, "{fit:?}");
        assert!((fit.c2 - c2).abs() < 1e-12, "{fit:?}");
        assert!(fit.c3.abs() < 1e-12, "{fit:?}");
        assert!((fit.c4_min - c4).abs() < 1e-12 && (fit.c4_max - c4).abs() < 1e-12, "{fit:?}");
    }
}
