use crate::grid::Grid1D;

/// Outcome of one sampling constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub passed: bool,
    /// The limiting value the constraint compares against.
    pub bound: f64,
    /// `bound / actual`; values >= 1 pass.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingReport {
    /// Pitch must satisfy `dx <= lambda z / (n dx)`.
    pub chirp: Constraint,
    /// Window must span at least four times the largest aperture.
    pub guard_band: Constraint,
    pub warnings: Vec<String>,
}

impl SamplingReport {
    pub fn passed(&self) -> bool {
        self.chirp.passed && self.guard_band.passed
    }
}

/// Checks that a grid supports discrete Fresnel propagation over `max_distance`
/// with apertures up to `largest_aperture` wide.
pub fn validate_sampling(
    grid: &Grid1D,
    wavelength: f64,
    max_distance: f64,
    largest_aperture: f64,
) -> SamplingReport {
    let dx = grid.dx();
    let span = grid.span();
    let mut warnings = Vec::new();

    let dx_max = wavelength * max_distance.abs() / span;
    let chirp = if max_distance == 0.0 {
        Constraint {
            passed: true,
            bound: 0.0,
            margin: f64::INFINITY,
        }
    } else {
        let passed = dx <= dx_max * (1.0 + 1e-12);
        if !passed {
            warnings.push(format!(
                "Fresnel chirp undersampled: pitch {dx:.3e} m exceeds lambda*z/L = {dx_max:.3e} m \
                 at z = {max_distance:.4} m; aliased components wrap around the window"
            ));
        }
        Constraint {
            passed,
            bound: dx_max,
            margin: dx_max / dx,
        }
    };

    let needed = 4.0 * largest_aperture;
    let guard_passed = span >= needed;
    if !guard_passed {
        warnings.push(format!(
            "window {span:.3e} m narrower than 4x the largest aperture ({needed:.3e} m); \
             diffracted light will wrap around"
        ));
    }
    let guard_band = Constraint {
        passed: guard_passed,
        bound: needed,
        margin: if needed > 0.0 {
            span / needed
        } else {
            f64::INFINITY
        },
    };

    SamplingReport {
        chirp,
        guard_band,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_passes_longest_path() {
        let g = Grid1D::centered(8192, 2e-6).unwrap();
        let r = validate_sampling(&g, 633e-9, 0.337, 200e-6);
        assert!(r.passed());
        // lambda z / L = 633e-9 * 0.337 / 0.016384
        let expected = 633e-9 * 0.337 / (8192.0 * 2e-6);
        assert!((r.chirp.bound - expected).abs() < 1e-18);
        assert!((r.chirp.bound - 13.02e-6).abs() < 0.01e-6);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn coarse_grid_fails_with_wraparound_warning() {
        let g = Grid1D::centered(64, 0.25e-3).unwrap();
        let r = validate_sampling(&g, 633e-9, 0.337, 200e-6);
        assert!(!r.passed());
        assert!(!r.chirp.passed);
        assert!(r.chirp.margin < 1.0);
        assert!(r.warnings.iter().any(|w| w.contains("wrap")));
    }

    #[test]
    fn zero_distance_passes() {
        let g = Grid1D::centered(64, 0.25e-3).unwrap();
        let r = validate_sampling(&g, 633e-9, 0.0, 200e-6);
        assert!(r.passed());
    }

    #[test]
    fn guard_band() {
        let g = Grid1D::centered(64, 1e-6).unwrap();
        let r = validate_sampling(&g, 633e-9, 0.0, 20e-6);
        assert!(!r.guard_band.passed);
        assert!(!r.passed());
    }
}
