//! Pseudo-thermal source: delta-correlated circular Gaussian amplitudes on a
//! top-hat aperture, one independent speckle cell per grid sample.
//!
//! Realization `k` draws from ChaCha8 stream `k` of the ensemble seed, so every
//! field is a pure function of `(seed, k)` and realizations can be generated in
//! any order by any number of workers.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::field::ComplexField;
use crate::geometry::SetupGeometry;
use crate::grid::Grid1D;
use crate::optics::{ArmPath, Optics};

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    pub seed: u64,
    pub geometry: SetupGeometry,
    pub grid: Grid1D,
}

impl EnsembleConfig {
    pub fn new(
        n_realizations: usize,
        seed: u64,
        geometry: SetupGeometry,
        grid: Grid1D,
    ) -> Result<Self> {
        let cfg = Self {
            n_realizations,
            seed,
            geometry,
            grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return domain("ensemble needs at least one realization");
        }
        self.geometry.validate()?;
        if self.source_indices().is_empty() {
            return domain(format!(
                "source diameter {:e} m covers no grid sample",
                self.geometry.source_diameter
            ));
        }
        Ok(())
    }

    pub fn with_realizations(&self, n_realizations: usize) -> Self {
        Self {
            n_realizations,
            ..self.clone()
        }
    }

    pub fn with_geometry(&self, geometry: SetupGeometry) -> Self {
        Self {
            geometry,
            ..self.clone()
        }
    }

    /// Grid samples inside the source aperture `[c - D/2, c + D/2)`.
    pub fn source_indices(&self) -> Range<usize> {
        let half = self.geometry.source_diameter / 2.0;
        let c = self.grid.center();
        self.grid.indices_in(c - half, c + half)
    }

    pub fn optics(&self) -> Optics {
        Optics::new(self.grid, self.geometry.wavelength)
    }
}

/// Writes realization `k` into `amplitude` (length `grid.n()`).
pub(crate) fn fill_source(config: &EnsembleConfig, k: usize, amplitude: &mut [Complex64]) {
    amplitude.fill(Complex64::new(0.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(k as u64);
    for j in config.source_indices() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        amplitude[j] = Complex64::new(re, im) * FRAC_1_SQRT_2;
    }
}

/// Realization `k` of the source field.
pub fn sample_source_field(config: &EnsembleConfig, k: usize) -> Result<ComplexField> {
    if k >= config.n_realizations {
        return domain(format!(
            "realization index {k} out of range (ensemble has {})",
            config.n_realizations
        ));
    }
    let mut amp = vec![Complex64::default(); config.grid.n()];
    fill_source(config, k, &mut amp);
    ComplexField::new(config.grid, amp, config.geometry.wavelength)
}

/// One coherent mode of the source (a single radiating sample) and its Green's
/// functions at the two detector planes.
#[derive(Clone, Debug)]
pub struct Mode {
    /// Position of the radiating source sample.
    pub source_x: f64,
    pub g1: ComplexField,
    pub g2: ComplexField,
}

/// Green's functions of every source sample through both arms.
pub fn mode_decomposition(
    config: &EnsembleConfig,
    arm1: &ArmPath,
    arm2: &ArmPath,
) -> Result<Vec<Mode>> {
    let optics = config.optics();
    let c1 = optics.compile(arm1)?;
    let c2 = optics.compile(arm2)?;
    let lambda = config.geometry.wavelength;
    config
        .source_indices()
        .into_par_iter()
        .map_init(
            || optics.workspace(),
            |ws, j| {
                let mut g1 = ComplexField::impulse(config.grid, lambda, j)?;
                let mut g2 = g1.clone();
                c1.apply_field(&mut g1, ws)?;
                c2.apply_field(&mut g2, ws)?;
                Ok(Mode {
                    source_x: config.grid.coord(j),
                    g1,
                    g2,
                })
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize) -> EnsembleConfig {
        EnsembleConfig::new(
            n,
            7,
            SetupGeometry::reference(),
            Grid1D::centered(8192, 2e-6).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn aperture_has_hundred_samples() {
        let c = config(1);
        assert_eq!(c.source_indices().len(), 100);
        let f = sample_source_field(&c, 0).unwrap();
        let nonzero = f.amplitude().iter().filter(|a| a.norm() > 0.0).count();
        assert_eq!(nonzero, 100);
    }

    #[test]
    fn deterministic_and_order_free() {
        let c = config(10);
        let a = sample_source_field(&c, 3).unwrap();
        let _ = sample_source_field(&c, 9).unwrap();
        let b = sample_source_field(&c, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_source_field(&c, 4).unwrap());
    }

    #[test]
    fn index_out_of_range() {
        let c = config(10);
        assert!(sample_source_field(&c, 10).is_err());
        assert!(EnsembleConfig::new(0, 1, SetupGeometry::reference(), c.grid).is_err());
    }

    #[test]
    fn identity_arms_return_basis() {
        let c = config(1);
        let modes = mode_decomposition(&c, &ArmPath::new(), &ArmPath::new()).unwrap();
        assert_eq!(modes.len(), 100);
        for (m, j) in modes.iter().zip(c.source_indices()) {
            let basis = ComplexField::impulse(c.grid, c.geometry.wavelength, j).unwrap();
            assert_eq!(m.g1, basis);
            assert_eq!(m.g2, basis);
            assert_eq!(m.source_x, c.grid.coord(j));
        }
    }
}
