use serde::{Deserialize, Serialize};

use crate::error::{NsgError, Result};

/// Integer wavevector; axes beyond the grid dimension are zero.
pub type Wavevector = [i64; 3];

/// Uniform periodic grid on `[0, 2π)^dim`.
///
/// Lattice index `i` along an axis maps to the wavenumber `i` for `i <= n/2`
/// and `i - n` otherwise, so every axis covers `(-n/2, n/2]`. Flat indices are
/// row-major with axis 0 slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(NsgError::invalid(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(NsgError::invalid(format!("points per axis must be a power of two >= 8, got {n}")));
        }
        Ok(Grid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of lattice points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI
    }

    pub fn spacing(&self) -> f64 {
        self.period() / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `(2π)^dim`
    pub fn volume(&self) -> f64 {
        self.period().powi(self.dim as i32)
    }

    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn index_of_wavenumber(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    #[inline]
    pub fn axis_indices(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    #[inline]
    pub fn wavevector(&self, flat: usize) -> Wavevector {
        let idx = self.axis_indices(flat);
        let mut k = [0i64; 3];
        for (a, kk) in k.iter_mut().enumerate().take(self.dim) {
            *kk = self.wavenumber(idx[a]);
        }
        k
    }

    /// Flat index of a wavevector, aliased onto the lattice.
    #[inline]
    pub fn flat_index(&self, k: &Wavevector) -> usize {
        let mut flat = 0;
        for kk in k.iter().take(self.dim) {
            flat = flat * self.n + self.index_of_wavenumber(*kk);
        }
        flat
    }

    /// Flat index of `-k` (the lattice is closed under negation modulo `n`).
    #[inline]
    pub fn negated_index(&self, flat: usize) -> usize {
        let k = self.wavevector(flat);
        self.flat_index(&[-k[0], -k[1], -k[2]])
    }

    /// Whether `k` has a Nyquist component (`|k_j| = n/2`).
    #[inline]
    pub fn is_nyquist(&self, k: &Wavevector) -> bool {
        let half = (self.n / 2) as i64;
        k.iter().take(self.dim).any(|&kk| kk == half)
    }

    /// All wavevectors in flat order.
    pub fn wavevectors(&self) -> impl Iterator<Item = Wavevector> + '_ {
        (0..self.len()).map(move |i| self.wavevector(i))
    }

    /// Physical coordinates of a flat index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.axis_indices(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Largest Euclidean `|k|` on the lattice.
    pub fn max_wavenumber(&self) -> f64 {
        (self.n as f64 / 2.0) * (self.dim as f64).sqrt()
    }
}

#[inline]
pub fn norm_sq(k: &Wavevector) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
}

#[inline]
pub fn norm_l1(k: &Wavevector) -> i64 {
    k[0].abs() + k[1].abs() + k[2].abs()
}
