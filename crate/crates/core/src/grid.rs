use crate::error::{domain, Result};

/// Uniform 1D transverse sampling grid.
///
/// Sample `k` sits at `center + (k - n/2) * dx`. The grid is periodic for the
/// purpose of FFT propagation; its window is `[coord(0), coord(0) + n*dx)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    n: usize,
    dx: f64,
    center: f64,
}

impl Grid1D {
    pub fn new(n: usize, dx: f64, center: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return domain(format!("grid size {n} must be a power of two >= 2"));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return domain(format!("grid pitch {dx} must be positive and finite"));
        }
        if !center.is_finite() {
            return domain("grid center must be finite");
        }
        Ok(Self { n, dx, center })
    }

    /// Centered grid (`center = 0`).
    pub fn centered(n: usize, dx: f64) -> Result<Self> {
        Self::new(n, dx, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Window width `n * dx`.
    pub fn span(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Half-open window `[lo, hi)` covered by the samples.
    pub fn window(&self) -> (f64, f64) {
        let lo = self.coord(0);
        (lo, lo + self.span())
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        self.center + (k as f64 - (self.n / 2) as f64) * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.coord(k)).collect()
    }

    /// Nearest sample index of coordinate `x`, if it lies on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = ((x - self.center) / self.dx).round() + (self.n / 2) as f64;
        if k >= 0.0 && k < self.n as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Indices whose coordinate lies in the half-open interval `[lo, hi)`.
    ///
    /// Edges are compared with a tolerance of 1e-6 pitch so that intervals whose
    /// edges fall on sample coordinates classify those samples reproducibly.
    pub fn indices_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let tol = 1e-6;
        let first = ((lo - self.coord(0)) / self.dx - tol).ceil().max(0.0);
        let end = ((hi - self.coord(0)) / self.dx - tol).ceil().max(0.0);
        let first = (first as usize).min(self.n);
        let end = (end as usize).min(self.n);
        first..end.max(first)
    }

    /// Spatial frequencies (cycles per meter) in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        let dnu = 1.0 / self.span();
        (0..self.n)
            .map(|p| {
                let p = if p < self.n / 2 {
                    p as f64
                } else {
                    p as f64 - self.n as f64
                };
                p * dnu
            })
            .collect()
    }
}
