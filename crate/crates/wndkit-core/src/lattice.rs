//! Truncated Fourier lattices `{ξ ∈ Z^d : |ξ|_∞ ≤ K}`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest lattice the library will allocate.
pub const MAX_LATTICE_MODES: usize = 1 << 24;

/// Max-norm box of integer wavevectors in lexicographic order, first
/// component most significant. Cloning shares the mode table.
#[derive(Clone, Debug)]
pub struct FrequencyLattice {
    dim: usize,
    radius: usize,
    side: usize,
    modes: Arc<[i64]>,
}

impl PartialEq for FrequencyLattice {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.radius == other.radius
    }
}

impl Eq for FrequencyLattice {}

impl FrequencyLattice {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("lattice dimension must be positive".into()));
        }
        let side = 2 * radius + 1;
        let mut total: usize = 1;
        for _ in 0..dim {
            total = total
                .checked_mul(side)
                .filter(|&t| t <= MAX_LATTICE_MODES)
                .ok_or_else(|| Error::InvalidArgument("lattice too large".into()))?;
        }
        let r = radius as i64;
        let mut modes = Vec::with_capacity(total * dim);
        let mut xi = alloc::vec![0i64; dim];
        for idx in 0..total {
            let mut rem = idx;
            for a in (0..dim).rev() {
                xi[a] = (rem % side) as i64 - r;
                rem /= side;
            }
            modes.extend_from_slice(&xi);
        }
        Ok(Self {
            dim,
            radius,
            side,
            modes: modes.into(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.modes.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Wavevector of mode `i`.
    #[inline]
    pub fn mode(&self, i: usize) -> &[i64] {
        &self.modes[i * self.dim..(i + 1) * self.dim]
    }

    /// Wavevector of mode `i` as floats.
    pub fn mode_f64(&self, i: usize) -> Vec<f64> {
        self.mode(i).iter().map(|&x| x as f64).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> {
        self.modes.chunks_exact(self.dim)
    }

    pub fn contains(&self, xi: &[i64]) -> bool {
        xi.len() == self.dim && xi.iter().all(|x| x.unsigned_abs() as usize <= self.radius)
    }

    pub fn index_of(&self, xi: &[i64]) -> Option<usize> {
        if !self.contains(xi) {
            return None;
        }
        let r = self.radius as i64;
        let mut idx = 0usize;
        for &x in xi {
            idx = idx * self.side + (x + r) as usize;
        }
        Some(idx)
    }

    /// Index of `mode(i) + mode(j)`, if it lies in the box.
    #[inline]
    pub fn sum_index(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.radius as i64;
        let mut idx = 0usize;
        for a in 0..self.dim {
            let s = self.modes[i * self.dim + a] + self.modes[j * self.dim + a];
            if s.unsigned_abs() as usize > self.radius {
                return None;
            }
            idx = idx * self.side + (s + r) as usize;
        }
        Some(idx)
    }

    /// Index of `mode(i) - mode(j)`, if it lies in the box.
    #[inline]
    pub fn difference_index(&self, i: usize, j: usize) -> Option<usize> {
        self.sum_index(i, self.negated_index(j))
    }

    /// Index of `-mode(i)`.
    #[inline]
    pub fn negated_index(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Index of the zero wavevector.
    #[inline]
    pub fn zero_index(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// `|ξ|²` of mode `i`.
    pub fn norm_sq(&self, i: usize) -> i64 {
        self.mode(i).iter().map(|x| x * x).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_negation() {
        let lat = FrequencyLattice::new(2, 2).unwrap();
        assert_eq!(lat.len(), 25);
        assert_eq!(lat.mode(0), &[-2, -2]);
        assert_eq!(lat.mode(1), &[-2, -1]);
        assert_eq!(lat.mode(lat.zero_index()), &[0, 0]);
        for i in 0..lat.len() {
            let neg: alloc::vec::Vec<i64> = lat.mode(i).iter().map(|x| -x).collect();
            assert_eq!(lat.index_of(&neg), Some(lat.negated_index(i)));
            assert_eq!(lat.index_of(lat.mode(i)), Some(i));
        }
    }

    #[test]
    fn sums_leaving_the_box() {
        let lat = FrequencyLattice::new(1, 3).unwrap();
        let i = lat.index_of(&[2]).unwrap();
        let j = lat.index_of(&[1]).unwrap();
        let k = lat.index_of(&[3]).unwrap();
        assert_eq!(lat.sum_index(i, j), Some(k));
        assert_eq!(lat.sum_index(i, i), None);
        assert_eq!(lat.difference_index(i, j), lat.index_of(&[1]));
    }

    #[test]
    fn radius_zero() {
        let lat = FrequencyLattice::new(3, 0).unwrap();
        assert_eq!(lat.len(), 1);
        assert_eq!(lat.zero_index(), 0);
    }
}
