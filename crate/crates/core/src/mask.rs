use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::grid::Grid1D;

/// Transmittance threshold separating transparent from opaque samples.
pub const FEATURE_THRESHOLD: f64 = 0.5;

/// Complex transmittance `T(x)` of an object or aperture.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionMask {
    grid: Grid1D,
    t: Vec<Complex64>,
}

impl TransmissionMask {
    pub fn new(grid: Grid1D, t: Vec<Complex64>) -> Result<Self> {
        if t.len() != grid.n() {
            return domain(format!(
                "mask has {} samples, grid has {}",
                t.len(),
                grid.n()
            ));
        }
        if let Some(k) = t.iter().position(|v| !(v.norm() <= 1.0 + 1e-12)) {
            return domain(format!("|t| = {} > 1 at sample {k}", t[k].norm()));
        }
        Ok(Self { grid, t })
    }

    /// Binary mask from real transmittances.
    pub fn from_real(grid: Grid1D, t: &[f64]) -> Result<Self> {
        Self::new(grid, t.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Fully transparent mask (no object).
    pub fn open(grid: Grid1D) -> Self {
        Self {
            grid,
            t: vec![Complex64::new(1.0, 0.0); grid.n()],
        }
    }

    pub fn opaque(grid: Grid1D) -> Self {
        Self {
            grid,
            t: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn transmittance(&self) -> &[Complex64] {
        &self.t
    }

    fn is_open(&self, k: usize) -> bool {
        self.t[k].norm() > FEATURE_THRESHOLD
    }

    /// Disjoint transparent intervals `[lo, hi)` in grid order.
    pub fn features(&self) -> Vec<(f64, f64)> {
        let dx = self.grid.dx();
        let mut out = Vec::new();
        let mut start = None;
        for k in 0..self.grid.n() {
            match (self.is_open(k), start) {
                (true, None) => start = Some(k),
                (false, Some(s)) => {
                    out.push((self.grid.coord(s), self.grid.coord(k - 1) + dx));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((self.grid.coord(s), self.grid.coord(self.grid.n() - 1) + dx));
        }
        out
    }

    /// Number of transparent features `N`.
    pub fn feature_count(&self) -> usize {
        self.features().len()
    }

    /// Hull of all transparent features, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        let f = self.features();
        Some((f.first()?.0, f.last()?.1))
    }

    /// Mean intensity transmittance over the window, `sum |t|^2 / n`.
    pub fn open_fraction(&self) -> f64 {
        self.t.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.grid.n() as f64
    }

    /// Total intensity transmittance `sum |t|^2 dx` (meters).
    pub fn total_transmittance(&self) -> f64 {
        self.t.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Pointwise union of two masks (larger modulus wins).
    pub fn union(&self, other: &TransmissionMask) -> Result<TransmissionMask> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("cannot combine masks".into()));
        }
        let t = self
            .t
            .iter()
            .zip(&other.t)
            .map(|(a, b)| if b.norm() > a.norm() { *b } else { *a })
            .collect();
        Ok(Self { grid: self.grid, t })
    }

    /// The same transmittance translated by `shift` meters (nearest sample).
    pub fn shifted(&self, shift: f64) -> TransmissionMask {
        let n = self.grid.n() as isize;
        let s = (shift / self.grid.dx()).round() as isize;
        let mut t = vec![Complex64::new(0.0, 0.0); self.grid.n()];
        for (k, v) in self.t.iter().enumerate() {
            let j = k as isize + s;
            if (0..n).contains(&j) {
                t[j as usize] = *v;
            }
        }
        Self { grid: self.grid, t }
    }
}

/// Single slit transmitting `[center - width/2, center + width/2)`.
pub fn make_slit(grid: Grid1D, center: f64, width: f64) -> Result<TransmissionMask> {
    if !(width > 0.0) {
        return domain(format!("slit width {width} must be positive"));
    }
    let (lo, hi) = (center - width / 2.0, center + width / 2.0);
    let (wlo, whi) = grid.window();
    let tol = 1e-6 * grid.dx();
    if lo < wlo - tol || hi > whi + tol {
        return domain(format!(
            "slit [{lo:e}, {hi:e}) m lies outside the grid window [{wlo:e}, {whi:e}) m"
        ));
    }
    let idx = grid.indices_in(lo, hi);
    if idx.is_empty() {
        return domain(format!(
            "slit of width {width:e} m contains no grid sample (pitch {:e} m)",
            grid.dx()
        ));
    }
    let mut mask = TransmissionMask::opaque(grid);
    for k in idx {
        mask.t[k] = Complex64::new(1.0, 0.0);
    }
    Ok(mask)
}

/// 1D cross-section of a circular pinhole (e.g. a fiber tip).
pub fn make_pinhole(grid: Grid1D, center: f64, diameter: f64) -> Result<TransmissionMask> {
    make_slit(grid, center, diameter)
}

/// `centers.len()` identical slits. Neighbouring slits must leave at least one
/// grid pitch of opaque gap.
pub fn make_slits(grid: Grid1D, centers: &[f64], width: f64) -> Result<TransmissionMask> {
    if centers.is_empty() {
        return domain("at least one slit is required");
    }
    let mut sorted = centers.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        let gap = w[1] - w[0] - width;
        if gap < grid.dx() * (1.0 - 1e-9) {
            return domain(format!(
                "slits at {:e} m and {:e} m overlap (gap {gap:e} m below pitch {:e} m)",
                w[0],
                w[1],
                grid.dx()
            ));
        }
    }
    let mut mask = TransmissionMask::opaque(grid);
    for &c in &sorted {
        mask = mask.union(&make_slit(grid, c, width)?)?;
    }
    Ok(mask)
}

/// Two slits centred at `±separation/2`.
pub fn make_double_slit(grid: Grid1D, separation: f64, width: f64) -> Result<TransmissionMask> {
    if !(separation > width) {
        return domain(format!(
            "separation {separation:e} m must exceed slit width {width:e} m"
        ));
    }
    make_slits(grid, &[-separation / 2.0, separation / 2.0], width)
}
