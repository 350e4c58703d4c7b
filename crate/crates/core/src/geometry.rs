use crate::error::{domain, Result};

/// Angular emission profile of the diffuser-generated source.
///
/// Each source point radiates into spatial frequencies `|nu| < sin(half_angle)/lambda`
/// with a flat intensity profile that rolls off with a raised cosine over the
/// outer `taper` fraction of the band. `half_angle == 0` disables the cone and
/// lets every source sample radiate over the full grid band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterCone {
    pub half_angle: f64,
    pub taper: f64,
}

impl ScatterCone {
    pub const fn unbounded() -> Self {
        Self {
            half_angle: 0.0,
            taper: 0.0,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.half_angle > 0.0
    }

    /// Band edge in cycles per meter.
    pub fn cutoff(&self, wavelength: f64) -> f64 {
        self.half_angle.sin() / wavelength
    }

    /// Amplitude transfer at spatial frequency `nu`.
    pub fn amplitude(&self, nu: f64, wavelength: f64) -> f64 {
        if !self.is_bounded() {
            return 1.0;
        }
        let r = nu.abs() / self.cutoff(wavelength);
        let flat = 1.0 - self.taper;
        if r <= flat {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            // sqrt of a raised cosine in intensity
            (std::f64::consts::FRAC_PI_2 * (r - flat) / self.taper).cos()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.half_angle) {
            return domain(format!(
                "scatter half-angle {} rad must lie in [0, pi/2)",
                self.half_angle
            ));
        }
        if !(0.0..=1.0).contains(&self.taper) {
            return domain(format!("scatter taper {} must lie in [0, 1]", self.taper));
        }
        Ok(())
    }
}

/// Distances of the two-arm correlation setup, all in meters.
///
/// Arm 1 (reflected): source --a--> beam splitter --d_a--> object + bucket detector.
/// Arm 2 (transmitted): source --a--> beam splitter --d_b--> lens(f) --d_b_prime--> scanning detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetupGeometry {
    pub a: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub d_b_prime: f64,
    pub focal_length: f64,
    pub wavelength: f64,
    pub source_diameter: f64,
    pub scatter: ScatterCone,
}

impl SetupGeometry {
    /// Reference layout: a = 125 mm, d_A = 88 mm, d_B = 212 mm,
    /// d'_B = 268.5 mm, f = 85 mm, 200 um source, 633 nm (assumed He-Ne).
    pub fn reference() -> Self {
        Self {
            a: 125e-3,
            d_a: 88e-3,
            d_b: 212e-3,
            d_b_prime: 268.5e-3,
            focal_length: 85e-3,
            wavelength: 633e-9,
            source_diameter: 200e-6,
            scatter: ScatterCone {
                half_angle: 17e-3,
                taper: 0.2,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("a", self.a),
            ("d_A", self.d_a),
            ("d_B", self.d_b),
            ("d_B_prime", self.d_b_prime),
            ("f", self.focal_length),
            ("wavelength", self.wavelength),
            ("source_diameter", self.source_diameter),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return domain(format!("{name} = {v} must be strictly positive"));
            }
        }
        if !(self.d_b > self.d_a) {
            return domain(format!(
                "d_B ({}) must exceed d_A ({}) for a real pseudo-object",
                self.d_b, self.d_a
            ));
        }
        self.scatter.validate()
    }

    /// Two-photon object distance `s_o = d_B - d_A`.
    pub fn object_distance(&self) -> f64 {
        self.d_b - self.d_a
    }

    /// Source to object plane.
    pub fn arm1_length(&self) -> f64 {
        self.a + self.d_a
    }

    /// Source to imaging lens.
    pub fn arm2_to_lens(&self) -> f64 {
        self.a + self.d_b
    }

    /// Longest free-space path from the source to a detector.
    pub fn longest_path(&self) -> f64 {
        self.arm1_length().max(self.arm2_to_lens() + self.d_b_prime)
    }

    /// `M = d'_B / (d_B - d_A)`; the ghost image is inverted (`x2 = -M x1`).
    pub fn magnification(&self) -> f64 {
        self.d_b_prime / self.object_distance()
    }

    /// Width of one transverse coherence cell at the object plane
    /// (first zero of the source's mutual coherence, `lambda (a + d_A) / D`).
    pub fn coherence_width(&self) -> f64 {
        self.wavelength * self.arm1_length() / self.source_diameter
    }

    pub fn with_image_distance(&self, d_b_prime: f64) -> Self {
        Self { d_b_prime, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_layout() {
        let g = SetupGeometry::reference();
        g.validate().unwrap();
        assert!((g.object_distance() - 124e-3).abs() < 1e-15);
        assert!((g.magnification() - 2.165).abs() < 1e-3);
        assert!((g.longest_path() - 0.6055).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_layout() {
        let mut g = SetupGeometry::reference();
        g.d_b = 80e-3;
        assert!(g.validate().is_err());
        let mut g = SetupGeometry::reference();
        g.focal_length = 0.0;
        assert!(g.validate().is_err());
        let mut g = SetupGeometry::reference();
        g.scatter.taper = 1.5;
        assert!(g.validate().is_err());
    }

    #[test]
    fn cone_profile() {
        let c = ScatterCone {
            half_angle: 0.01,
            taper: 0.2,
        };
        let lam = 500e-9;
        let nc = c.cutoff(lam);
        assert_eq!(c.amplitude(0.0, lam), 1.0);
        assert_eq!(c.amplitude(0.79 * nc, lam), 1.0);
        assert!((c.amplitude(0.9 * nc, lam).powi(2) - 0.5).abs() < 1e-12);
        assert_eq!(c.amplitude(-nc, lam), 0.0);
        assert_eq!(ScatterCone::unbounded().amplitude(1e9, lam), 1.0);
    }
}
