//! Deterministic field transformations: Fresnel propagation, thin lens,
//! transmission masks, beam splitting, and arm paths composing them.
//!
//! Propagation uses the frequency-domain transfer function
//! `H(nu) = exp(i 2 pi z / lambda) exp(-i pi lambda z nu^2)` on the periodic grid,
//! which is unitary and composes exactly.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, Error, Result};
use crate::field::ComplexField;
use crate::geometry::ScatterCone;
use crate::grid::Grid1D;
use crate::mask::TransmissionMask;
use crate::sampling::validate_sampling;

/// What to do when a propagation distance fails the chirp sampling bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplingPolicy {
    #[default]
    Refuse,
    Warn,
}

/// One optical element of an arm, applied in list order.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    /// Free-space Fresnel propagation over a distance in meters.
    Propagate(f64),
    /// Infinite-aperture thin lens of the given focal length.
    Lens(f64),
    /// Transmission mask in the current plane.
    Mask(TransmissionMask),
    /// Angular emission profile of the source (a Fourier-plane amplitude filter).
    Scatter(ScatterCone),
}

/// Ordered list of elements from the source plane to a detector plane.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ArmPath {
    elements: Vec<Element>,
}

impl ArmPath {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn propagate(mut self, distance: f64) -> Self {
        self.elements.push(Element::Propagate(distance));
        self
    }

    pub fn lens(mut self, focal_length: f64) -> Self {
        self.elements.push(Element::Lens(focal_length));
        self
    }

    pub fn mask(mut self, mask: TransmissionMask) -> Self {
        self.elements.push(Element::Mask(mask));
        self
    }

    pub fn scatter(mut self, cone: ScatterCone) -> Self {
        self.elements.push(Element::Scatter(cone));
        self
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        for e in &self.elements {
            match e {
                Element::Propagate(z) if !(*z >= 0.0) || !z.is_finite() => {
                    return domain(format!("propagation distance {z} must be >= 0"));
                }
                Element::Lens(f) if *f == 0.0 || f.is_nan() => {
                    return domain("lens focal length must be nonzero");
                }
                Element::Mask(m) if m.grid() != grid => {
                    return Err(Error::GridMismatch(
                        "mask grid differs from arm grid".into(),
                    ));
                }
                Element::Scatter(c) => c.validate()?,
                _ => {}
            }
        }
        Ok(())
    }
}

/// Transfer function of Fresnel propagation over `distance`, in FFT order.
pub fn transfer_function(grid: &Grid1D, wavelength: f64, distance: f64) -> Vec<Complex64> {
    // reduce the carrier phase before scaling so long paths keep full precision
    let carrier = 2.0 * PI * (distance / wavelength).fract();
    grid.frequencies()
        .into_iter()
        .map(|nu| Complex64::from_polar(1.0, carrier - PI * wavelength * distance * nu * nu))
        .collect()
}

fn lens_phase(grid: &Grid1D, wavelength: f64, focal_length: f64) -> Vec<Complex64> {
    (0..grid.n())
        .map(|k| {
            let x = grid.coord(k);
            Complex64::from_polar(1.0, -PI * x * x / (wavelength * focal_length))
        })
        .collect()
}

/// FFT plans and sampling policy for one grid and wavelength.
///
/// Plans are shared (`Arc`) and thread-safe; per-call scratch lives in the
/// caller's [`Workspace`].
#[derive(Clone)]
pub struct Optics {
    grid: Grid1D,
    wavelength: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    policy: SamplingPolicy,
}

impl fmt::Debug for Optics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Optics")
            .field("grid", &self.grid)
            .field("wavelength", &self.wavelength)
            .field("policy", &self.policy)
            .finish()
    }
}

impl Optics {
    pub fn new(grid: Grid1D, wavelength: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            wavelength,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
            policy: SamplingPolicy::Refuse,
        }
    }

    pub fn with_policy(mut self, policy: SamplingPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn workspace(&self) -> Workspace {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        Workspace {
            scratch: vec![Complex64::default(); len],
        }
    }

    fn check_distance(&self, distance: f64) -> Result<()> {
        let report = validate_sampling(&self.grid, self.wavelength, distance, 0.0);
        if report.chirp.passed {
            return Ok(());
        }
        let msg = report.warnings.join("; ");
        match self.policy {
            SamplingPolicy::Refuse => Err(Error::Sampling(msg)),
            SamplingPolicy::Warn => {
                log::warn!("{msg}");
                Ok(())
            }
        }
    }

    /// Precomputes the stages of an arm. Consecutive spectral elements
    /// (propagation, scatter cone) collapse into a single FFT pair.
    pub fn compile(&self, path: &ArmPath) -> Result<CompiledArm> {
        path.validate(&self.grid)?;
        let n = self.grid.n();
        let mut stages = Vec::new();
        let mut spectral: Option<Vec<Complex64>> = None;
        let flush = |spectral: &mut Option<Vec<Complex64>>, stages: &mut Vec<Stage>| {
            if let Some(mut h) = spectral.take() {
                let norm = 1.0 / n as f64;
                h.iter_mut().for_each(|v| *v *= norm);
                stages.push(Stage::Spectral(h));
            }
        };
        for e in path.elements() {
            match e {
                Element::Propagate(z) => {
                    if *z == 0.0 {
                        continue;
                    }
                    self.check_distance(*z)?;
                    let h = transfer_function(&self.grid, self.wavelength, *z);
                    merge_spectral(&mut spectral, h);
                }
                Element::Scatter(cone) => {
                    if !cone.is_bounded() {
                        continue;
                    }
                    let h = self
                        .grid
                        .frequencies()
                        .into_iter()
                        .map(|nu| Complex64::new(cone.amplitude(nu, self.wavelength), 0.0))
                        .collect();
                    merge_spectral(&mut spectral, h);
                }
                Element::Lens(f) => {
                    flush(&mut spectral, &mut stages);
                    stages.push(Stage::Pointwise(lens_phase(
                        &self.grid,
                        self.wavelength,
                        *f,
                    )));
                }
                Element::Mask(m) => {
                    flush(&mut spectral, &mut stages);
                    stages.push(Stage::Pointwise(m.transmittance().to_vec()));
                }
            }
        }
        flush(&mut spectral, &mut stages);
        Ok(CompiledArm {
            grid: self.grid,
            wavelength: self.wavelength,
            stages,
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
        })
    }

    pub fn run_arm(&self, field: &ComplexField, path: &ArmPath) -> Result<ComplexField> {
        let arm = self.compile(path)?;
        let mut out = field.clone();
        arm.apply_field(&mut out, &mut self.workspace())?;
        Ok(out)
    }

    pub fn propagate(&self, field: &ComplexField, distance: f64) -> Result<ComplexField> {
        if !(distance >= 0.0) {
            return domain(format!("propagation distance {distance} must be >= 0"));
        }
        self.run_arm(field, &ArmPath::new().propagate(distance))
    }
}

fn merge_spectral(acc: &mut Option<Vec<Complex64>>, h: Vec<Complex64>) {
    match acc {
        Some(a) => a.iter_mut().zip(h).for_each(|(a, b)| *a *= b),
        None => *acc = Some(h),
    }
}

/// FFT scratch owned by one worker.
#[derive(Clone, Debug)]
pub struct Workspace {
    scratch: Vec<Complex64>,
}

#[derive(Clone, Debug)]
enum Stage {
    /// Forward FFT, multiply (normalization folded in), inverse FFT.
    Spectral(Vec<Complex64>),
    Pointwise(Vec<Complex64>),
}

/// An arm with all transfer functions and phase screens precomputed.
#[derive(Clone)]
pub struct CompiledArm {
    grid: Grid1D,
    wavelength: f64,
    stages: Vec<Stage>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CompiledArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompiledArm")
            .field("grid", &self.grid)
            .field("stages", &self.stages.len())
            .finish()
    }
}

impl CompiledArm {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Applies the arm in place to raw amplitudes on this arm's grid.
    pub fn apply(&self, amplitude: &mut [Complex64], ws: &mut Workspace) {
        debug_assert_eq!(amplitude.len(), self.grid.n());
        for stage in &self.stages {
            match stage {
                Stage::Spectral(h) => {
                    self.forward
                        .process_with_scratch(amplitude, &mut ws.scratch);
                    amplitude.iter_mut().zip(h).for_each(|(a, h)| *a *= h);
                    self.inverse
                        .process_with_scratch(amplitude, &mut ws.scratch);
                }
                Stage::Pointwise(t) => {
                    amplitude.iter_mut().zip(t).for_each(|(a, t)| *a *= t);
                }
            }
        }
    }

    pub fn apply_field(&self, field: &mut ComplexField, ws: &mut Workspace) -> Result<()> {
        field.check_same_grid(&self.grid)?;
        if field.wavelength() != self.wavelength {
            return domain("field wavelength differs from the arm's");
        }
        self.apply(field.amplitude_mut(), ws);
        Ok(())
    }
}

/// Fresnel propagation over `distance` (refuses undersampled distances).
pub fn fresnel_propagate(field: &ComplexField, distance: f64) -> Result<ComplexField> {
    Optics::new(*field.grid(), field.wavelength()).propagate(field, distance)
}

/// Thin lens: multiplies by `exp(-i pi x^2 / (lambda f))`.
pub fn apply_lens(field: &ComplexField, focal_length: f64) -> Result<ComplexField> {
    if focal_length == 0.0 || focal_length.is_nan() {
        return domain("lens focal length must be nonzero");
    }
    let phase = lens_phase(field.grid(), field.wavelength(), focal_length);
    let mut out = field.clone();
    out.amplitude_mut()
        .iter_mut()
        .zip(phase)
        .for_each(|(a, p)| *a *= p);
    Ok(out)
}

pub fn apply_mask(field: &ComplexField, mask: &TransmissionMask) -> Result<ComplexField> {
    if field.grid() != mask.grid() {
        return Err(Error::GridMismatch(
            "mask and field are sampled on different grids".into(),
        ));
    }
    let mut out = field.clone();
    out.amplitude_mut()
        .iter_mut()
        .zip(mask.transmittance())
        .for_each(|(a, t)| *a *= t);
    Ok(out)
}

/// 50/50 non-polarizing beam splitter: `(reflected, transmitted)`, each the
/// input scaled by `1/sqrt(2)`. No transverse flip is applied on reflection.
pub fn split_beam(field: &ComplexField) -> (ComplexField, ComplexField) {
    let mut reflected = field.clone();
    reflected.scale(FRAC_1_SQRT_2);
    let transmitted = reflected.clone();
    (reflected, transmitted)
}

/// Runs a field through an arm path, source side first.
pub fn run_arm(field: &ComplexField, path: &ArmPath) -> Result<ComplexField> {
    Optics::new(*field.grid(), field.wavelength()).run_arm(field, path)
}
