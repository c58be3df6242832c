//! Deterministic unit-vector samples of the sphere S^{d-1}.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Deterministic quasi-uniform sample of `n` unit vectors in `dim` dimensions.
///
/// In two dimensions the points are equally spaced angles, in three they form
/// a Fibonacci spiral, and in higher dimensions a Kronecker sequence is
/// normalized onto the sphere. In one dimension the sphere is `{-1, +1}`.
pub fn fibonacci_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|i| {
                let phi = core::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
                let (s, c) = math::sin_cos(phi);
                vec![c, s]
            })
            .collect(),
        3 => (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = math::sqrt((1.0 - z * z).max(0.0));
                let (s, c) = math::sin_cos(i as f64 * GOLDEN_ANGLE);
                vec![r * c, r * s, z]
            })
            .collect(),
        _ => kronecker_directions(dim, n),
    }
}

fn kronecker_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    // Generalized golden ratio: the unique positive root of x^{d+1} = x + 1.
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = math::powf(1.0 + phi, 1.0 / (dim as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=dim).map(|j| 1.0 / math::powf(phi, j as f64)).collect();
    let mut out = Vec::with_capacity(n);
    let mut i = 1usize;
    while out.len() < n {
        let v: Vec<f64> = alphas
            .iter()
            .map(|a| {
                let x = 0.5 + a * i as f64;
                2.0 * (x - math::floor(x)) - 1.0
            })
            .collect();
        i += 1;
        let norm = math::sqrt(v.iter().map(|x| x * x).sum());
        if norm > 0.25 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// The `2 d` signed coordinate axes.
pub fn coordinate_axes(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * dim);
    for a in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[a] = sign;
            out.push(v);
        }
    }
    out
}

/// Normalized nonzero integer vectors with max-norm at most `radius`, one per
/// ray (only primitive vectors, whose components have gcd one).
pub fn lattice_directions(dim: usize, radius: usize) -> Vec<Vec<f64>> {
    let r = radius as i64;
    let side = (2 * radius + 1) as i64;
    let total = (side as u64).pow(dim as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rem = idx as i64;
        let mut xi = vec![0i64; dim];
        for a in (0..dim).rev() {
            xi[a] = rem % side - r;
            rem /= side;
        }
        let g = xi.iter().fold(0i64, |g, &x| gcd(g, x.abs()));
        if g != 1 {
            continue;
        }
        let norm = math::sqrt(xi.iter().map(|&x| (x * x) as f64).sum());
        out.push(xi.iter().map(|&x| x as f64 / norm).collect());
    }
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Fibonacci sample plus signed coordinate axes.
pub fn sample_with_axes(dim: usize, n: usize) -> Vec<Vec<f64>> {
    let mut dirs = fibonacci_directions(dim, n);
    dirs.extend(coordinate_axes(dim));
    dirs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_unit(v: &[f64]) -> bool {
        (v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14
    }

    #[test]
    fn all_samples_are_unit_vectors() {
        for dim in 1..=5 {
            let dirs = sample_with_axes(dim, 50);
            assert!(!dirs.is_empty());
            assert!(dirs.iter().all(|v| v.len() == dim && is_unit(v)));
        }
    }

    #[test]
    fn lattice_directions_are_primitive() {
        let dirs = lattice_directions(2, 2);
        // primitive vectors in the 5x5 box: 24 nonzero minus (±2,0),(0,±2),(±2,±2)
        assert_eq!(dirs.len(), 16);
        assert!(dirs.iter().all(|v| is_unit(v)));
    }
}
