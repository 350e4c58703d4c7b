use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::grid::Grid1D;

/// One classical realization of the transverse optical amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid1D,
    amplitude: Vec<Complex64>,
    wavelength: f64,
}

impl ComplexField {
    pub fn new(grid: Grid1D, amplitude: Vec<Complex64>, wavelength: f64) -> Result<Self> {
        if amplitude.len() != grid.n() {
            return domain(format!(
                "amplitude has {} samples, grid has {}",
                amplitude.len(),
                grid.n()
            ));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return domain(format!("wavelength {wavelength} must be positive"));
        }
        Ok(Self {
            grid,
            amplitude,
            wavelength,
        })
    }

    pub fn zeros(grid: Grid1D, wavelength: f64) -> Result<Self> {
        Self::new(grid, vec![Complex64::new(0.0, 0.0); grid.n()], wavelength)
    }

    /// Field sampled from a function of the transverse coordinate.
    pub fn from_fn(grid: Grid1D, wavelength: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amplitude = (0..grid.n()).map(|k| f(grid.coord(k))).collect();
        Self::new(grid, amplitude, wavelength)
    }

    /// Unit-amplitude field at a single sample.
    pub fn impulse(grid: Grid1D, wavelength: f64, k: usize) -> Result<Self> {
        if k >= grid.n() {
            return domain(format!("impulse index {k} outside grid of {}", grid.n()));
        }
        let mut f = Self::zeros(grid, wavelength)?;
        f.amplitude[k] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn amplitude_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitude
    }

    pub fn into_amplitude(self) -> Vec<Complex64> {
        self.amplitude
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Total power `sum |E|^2 dx`.
    pub fn power(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn scale(&mut self, s: f64) {
        self.amplitude.iter_mut().for_each(|a| *a *= s);
    }

    /// `||self - other|| / ||other||` over the samples.
    pub fn relative_l2_distance(&self, other: &ComplexField) -> Result<f64> {
        self.check_same_grid(other.grid())?;
        let num: f64 = self
            .amplitude
            .iter()
            .zip(&other.amplitude)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.amplitude.iter().map(|b| b.norm_sqr()).sum();
        Ok((num / den).sqrt())
    }

    pub(crate) fn check_same_grid(&self, grid: &Grid1D) -> Result<()> {
        if &self.grid != grid {
            return Err(Error::GridMismatch(format!(
                "field grid {:?} vs {:?}",
                self.grid, grid
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_must_match_grid() {
        let g = Grid1D::centered(8, 1e-6).unwrap();
        assert!(ComplexField::new(g, vec![Complex64::default(); 7], 633e-9).is_err());
        assert!(ComplexField::new(g, vec![Complex64::default(); 8], 0.0).is_err());
    }

    #[test]
    fn power_of_plane_wave() {
        let g = Grid1D::centered(16, 0.5).unwrap();
        let f = ComplexField::from_fn(g, 1.0, |_| Complex64::new(0.0, 2.0)).unwrap();
        assert_eq!(f.power(), 4.0 * 16.0 * 0.5);
    }
}
