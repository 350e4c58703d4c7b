//! Imaging procedures: thin-lens conjugates, ghost-image and pseudo-object
//! scans, visibility, and defocus sweeps.

use crate::correlation::{
    accumulate_mc, analytic_map, siegert_normalize, CorrelationMap, Estimate, Layout,
};
use crate::error::{domain, Error, Result};
use crate::geometry::SetupGeometry;
use crate::mask::TransmissionMask;
use crate::optics::ArmPath;
use crate::source::EnsembleConfig;

/// Relative thin-lens residual `|1/s_o + 1/s_i - 1/f| * f` above which scans warn.
pub const LENS_RESIDUAL_TOLERANCE: f64 = 1e-3;
/// Default half-width of the D2 scan.
pub const DEFAULT_SCAN_HALF_WIDTH: f64 = 6e-3;

/// Two of the three thin-lens quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThinLensInput {
    ObjectImage { s_o: f64, s_i: f64 },
    ObjectFocal { s_o: f64, f: f64 },
    ImageFocal { s_i: f64, f: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThinLensSolution {
    pub object_distance: f64,
    pub image_distance: f64,
    pub focal_length: f64,
    /// `s_i / s_o`; image coordinates are `-M` times object coordinates.
    pub magnification: f64,
    /// `1/s_o + 1/s_i - 1/f` in 1/m.
    pub residual: f64,
}

impl ThinLensSolution {
    fn from_parts(s_o: f64, s_i: f64, f: f64) -> Self {
        Self {
            object_distance: s_o,
            image_distance: s_i,
            focal_length: f,
            magnification: s_i / s_o,
            residual: 1.0 / s_o + 1.0 / s_i - 1.0 / f,
        }
    }

    /// Focal length that would make the residual vanish.
    pub fn effective_focal_length(&self) -> f64 {
        1.0 / (1.0 / self.object_distance + 1.0 / self.image_distance)
    }

    pub fn relative_residual(&self) -> f64 {
        (self.residual * self.focal_length).abs()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} = {v} must be strictly positive"))
    }
}

/// Solves `1/s_o + 1/s_i = 1/f` for the missing quantity.
pub fn solve_thin_lens(input: ThinLensInput) -> Result<ThinLensSolution> {
    let (s_o, s_i, f) = match input {
        ThinLensInput::ObjectImage { s_o, s_i } => {
            positive("s_o", s_o)?;
            positive("s_i", s_i)?;
            (s_o, s_i, 1.0 / (1.0 / s_o + 1.0 / s_i))
        }
        ThinLensInput::ObjectFocal { s_o, f } => {
            positive("s_o", s_o)?;
            positive("f", f)?;
            if s_o <= f {
                return domain(format!(
                    "object distance {s_o} m inside the focal length {f} m: no real image"
                ));
            }
            (s_o, 1.0 / (1.0 / f - 1.0 / s_o), f)
        }
        ThinLensInput::ImageFocal { s_i, f } => {
            positive("s_i", s_i)?;
            positive("f", f)?;
            if s_i <= f {
                return domain(format!(
                    "image distance {s_i} m inside the focal length {f} m: no real object"
                ));
            }
            (1.0 / (1.0 / f - 1.0 / s_i), s_i, f)
        }
    };
    let mut sol = ThinLensSolution::from_parts(s_o, s_i, f);
    sol.residual = 0.0;
    Ok(sol)
}

/// Evaluates all three distances as given and reports the residual.
pub fn check_thin_lens(geometry: &SetupGeometry) -> ThinLensSolution {
    ThinLensSolution::from_parts(
        geometry.object_distance(),
        geometry.d_b_prime,
        geometry.focal_length,
    )
}

/// The geometry with `d'_B` replaced by the exact conjugate of `d_B - d_A`.
pub fn refocused(geometry: &SetupGeometry) -> Result<SetupGeometry> {
    let sol = solve_thin_lens(ThinLensInput::ObjectFocal {
        s_o: geometry.object_distance(),
        f: geometry.focal_length,
    })?;
    Ok(geometry.with_image_distance(sol.image_distance))
}

/// Ideal raw-mode visibility `1 / (2N + 1)` for `N` transparent features.
pub fn predicted_visibility(n_features: usize) -> Result<f64> {
    if n_features == 0 {
        return domain("predicted visibility needs at least one transparent feature");
    }
    Ok(1.0 / (2 * n_features + 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationMode {
    /// `g2 = <I1 I2> / (<I1><I2>)`.
    Raw,
    /// `g2 - 1`, the background-free fluctuation correlation.
    Fluctuation,
}

impl CorrelationMode {
    pub fn name(&self) -> &'static str {
        match self {
            CorrelationMode::Raw => "raw",
            CorrelationMode::Fluctuation => "fluctuation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    MonteCarlo,
    Analytic,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::MonteCarlo => "mc",
            Engine::Analytic => "analytic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanOptions {
    pub mode: CorrelationMode,
    pub engine: Engine,
    pub half_width: f64,
    /// Visibility window; `None` selects [`default_image_window`].
    pub window: Option<(f64, f64)>,
}

impl ScanOptions {
    pub fn new(mode: CorrelationMode, engine: Engine) -> Self {
        Self {
            mode,
            engine,
            half_width: DEFAULT_SCAN_HALF_WIDTH,
            window: None,
        }
    }
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self::new(CorrelationMode::Raw, Engine::Analytic)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceMetadata {
    pub geometry: SetupGeometry,
    pub object: String,
    pub n_realizations: usize,
    pub seed: u64,
    pub mode: CorrelationMode,
    pub engine: Engine,
    /// Signed object-to-detector coordinate scale (`-M` for the ghost image).
    pub image_scale: f64,
    pub image_window: (f64, f64),
}

/// Coincidence and singles versus the scanning-detector position.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTrace {
    pub x2: Vec<f64>,
    pub coincidence: Vec<f64>,
    /// Singles normalized to unit mean over the scan.
    pub singles1: Vec<f64>,
    pub singles2: Vec<f64>,
    /// Monte Carlo error bound per point, in coincidence units.
    pub coincidence_err: Option<Vec<f64>>,
    pub metadata: TraceMetadata,
}

impl ImageTrace {
    pub fn len(&self) -> usize {
        self.x2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x2.is_empty()
    }

    /// Visibility over the trace's declared image window.
    pub fn visibility(&self) -> Result<f64> {
        visibility(self, self.metadata.image_window)
    }

    pub fn peaks(&self) -> Vec<f64> {
        find_peaks(&self.x2, &self.coincidence)
    }
}

/// `(max - min) / (max + min)` of the coincidence trace over `window` (inclusive),
/// with negative values counted as zero.
pub fn visibility(trace: &ImageTrace, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let vals: Vec<f64> = trace
        .x2
        .iter()
        .zip(&trace.coincidence)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(_, v)| *v)
        .collect();
    if vals.is_empty() {
        return domain(format!(
            "visibility window [{lo:e}, {hi:e}] m contains no scan samples"
        ));
    }
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // a background-subtracted Monte Carlo trace can dip below zero by noise alone
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    if max + min == 0.0 {
        return Ok(0.0);
    }
    Ok((max - min) / (max + min))
}

/// Object support mapped by `scale`, padded by the larger of 25% of its width
/// and three coherence cells, and clipped to the scan range.
pub fn default_image_window(
    support: (f64, f64),
    scale: f64,
    cell: f64,
    scan: (f64, f64),
) -> (f64, f64) {
    let (a, b) = (support.0 * scale, support.1 * scale);
    let (lo, hi) = (a.min(b), a.max(b));
    let pad = (0.25 * (hi - lo)).max(3.0 * cell);
    ((lo - pad).max(scan.0), (hi + pad).min(scan.1))
}

/// One peak per contiguous run of samples above half height, located at the
/// run's maximum and refined by a three-point parabola.
pub fn find_peaks(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len().min(x.len());
    if n < 3 {
        return Vec::new();
    }
    let max = y[..n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = y[..n].iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= min {
        return Vec::new();
    }
    let half = min + 0.5 * (max - min);
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        if y[i] < half {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && y[i] >= half {
            i += 1;
        }
        let k = (start..i).max_by(|a, b| y[*a].total_cmp(&y[*b])).unwrap();
        let pos = if k > 0 && k + 1 < n {
            let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
            let denom = a - 2.0 * b + c;
            let off = if denom != 0.0 {
                0.5 * (a - c) / denom
            } else {
                0.0
            };
            x[k] + off * (x[k + 1] - x[k])
        } else {
            x[k]
        };
        peaks.push(pos);
    }
    peaks
}

/// Full width at half maximum of the tallest peak, measured between the trace
/// minimum and maximum with linear interpolation. `None` if the peak touches
/// the trace ends.
pub fn peak_fwhm(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = y.len().min(x.len());
    if n < 3 {
        return None;
    }
    let (imax, &max) = y[..n]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let min = y[..n].iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= min {
        return None;
    }
    let half = min + 0.5 * (max - min);
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) / (y[j] - y[i]) * (x[j] - x[i]);
    let left = (1..=imax)
        .rev()
        .find(|&i| y[i - 1] < half)
        .map(|i| cross(i - 1, i))?;
    let right = (imax..n - 1)
        .find(|&i| y[i + 1] < half)
        .map(|i| cross(i, i + 1))?;
    Some(right - left)
}

/// Arm 1 (object + bucket) and arm 2 (lens + scanning detector).
pub fn ghost_arms(geometry: &SetupGeometry, object: &TransmissionMask) -> (ArmPath, ArmPath) {
    let arm1 = ArmPath::new()
        .scatter(geometry.scatter)
        .propagate(geometry.arm1_length())
        .mask(object.clone());
    let arm2 = ArmPath::new()
        .scatter(geometry.scatter)
        .propagate(geometry.arm2_to_lens())
        .lens(geometry.focal_length)
        .propagate(geometry.d_b_prime);
    (arm1, arm2)
}

/// Arm 2 replaced by free propagation to the plane `d_A` past the splitter.
pub fn pseudo_object_arms(
    geometry: &SetupGeometry,
    object: &TransmissionMask,
) -> (ArmPath, ArmPath) {
    let (arm1, _) = ghost_arms(geometry, object);
    let arm2 = ArmPath::new()
        .scatter(geometry.scatter)
        .propagate(geometry.arm1_length());
    (arm1, arm2)
}

fn describe(object: &TransmissionMask) -> String {
    let parts: Vec<String> = object
        .features()
        .iter()
        .map(|(lo, hi)| format!("[{:.4}mm,{:.4}mm)", lo * 1e3, hi * 1e3))
        .collect();
    format!("{} feature(s) {}", parts.len(), parts.join(" "))
}

fn correlate(
    config: &EnsembleConfig,
    arm1: &ArmPath,
    arm2: &ArmPath,
    layout: &Layout,
    engine: Engine,
) -> Result<CorrelationMap> {
    match engine {
        Engine::MonteCarlo => accumulate_mc(config, arm1, arm2, layout),
        Engine::Analytic => analytic_map(config, arm1, arm2, layout),
    }
}

fn unit_mean(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x / mean).collect()
}

fn scan(
    config: &EnsembleConfig,
    object: &TransmissionMask,
    opts: &ScanOptions,
    arms: (ArmPath, ArmPath),
    scale: f64,
) -> Result<ImageTrace> {
    config.validate()?;
    if object.grid() != &config.grid {
        return Err(Error::GridMismatch(
            "object mask and ensemble use different grids".into(),
        ));
    }
    let support = object
        .support()
        .ok_or_else(|| Error::Degenerate("object transmits no light".into()))?;
    if !(opts.half_width > 0.0) {
        return domain("scan half-width must be positive");
    }
    let c = config.grid.center();
    let idx: Vec<usize> = config
        .grid
        .indices_in(c - opts.half_width, c + opts.half_width)
        .collect();
    let (arm1, arm2) = arms;
    let map = correlate(config, &arm1, &arm2, &Layout::bucket(idx), opts.engine)?;
    let norm = siegert_normalize(&map)?;
    let coincidence = match opts.mode {
        CorrelationMode::Raw => norm.g2,
        CorrelationMode::Fluctuation => norm.g2.iter().map(|g| g - 1.0).collect(),
    };
    let x2 = map.x2.clone();
    let scan_range = (x2[0], x2[x2.len() - 1]);
    let cell = scale.abs() * config.geometry.coherence_width();
    let window = opts
        .window
        .unwrap_or_else(|| default_image_window(support, scale, cell, scan_range));
    let n_realizations = match map.estimate {
        Estimate::MonteCarlo { realizations, .. } => realizations,
        Estimate::Analytic { .. } => 0,
    };
    Ok(ImageTrace {
        singles1: vec![1.0; x2.len()],
        singles2: unit_mean(&map.i2_mean),
        coincidence,
        coincidence_err: norm.mc_error,
        metadata: TraceMetadata {
            geometry: config.geometry,
            object: describe(object),
            n_realizations,
            seed: config.seed,
            mode: opts.mode,
            engine: opts.engine,
            image_scale: scale,
            image_window: window,
        },
        x2,
    })
}

/// Ghost image of `object` recorded by scanning D2 behind the lens.
pub fn ghost_image_scan(
    config: &EnsembleConfig,
    object: &TransmissionMask,
    opts: &ScanOptions,
) -> Result<ImageTrace> {
    let geometry = &config.geometry;
    let lens = check_thin_lens(geometry);
    if lens.relative_residual() > LENS_RESIDUAL_TOLERANCE {
        log::warn!(
            "geometry is off the thin-lens surface: residual {:.3e} 1/m (f_eff = {:.4} mm)",
            lens.residual,
            lens.effective_focal_length() * 1e3
        );
    }
    scan(
        config,
        object,
        opts,
        ghost_arms(geometry, object),
        -geometry.magnification(),
    )
}

/// Scan of the pseudo-object plane: unit magnification, upright.
pub fn pseudo_object_scan(
    config: &EnsembleConfig,
    object: &TransmissionMask,
    opts: &ScanOptions,
) -> Result<ImageTrace> {
    scan(
        config,
        object,
        opts,
        pseudo_object_arms(&config.geometry, object),
        1.0,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefocusPoint {
    pub delta: f64,
    pub visibility: f64,
    /// FWHM of the tallest coincidence peak, if it is resolved inside the scan.
    pub peak_width: Option<f64>,
    pub trace: ImageTrace,
}

/// Ghost-image scans with `d'_B` offset by each of `deltas`.
pub fn defocus_sweep(
    config: &EnsembleConfig,
    object: &TransmissionMask,
    opts: &ScanOptions,
    deltas: &[f64],
) -> Result<Vec<DefocusPoint>> {
    deltas
        .iter()
        .map(|&delta| {
            let geo = config
                .geometry
                .with_image_distance(config.geometry.d_b_prime + delta);
            let trace = ghost_image_scan(&config.with_geometry(geo), object, opts)?;
            Ok(DefocusPoint {
                delta,
                visibility: trace.visibility()?,
                peak_width: peak_fwhm(&trace.x2, &trace.coincidence),
                trace,
            })
        })
        .collect()
}

/// Index of the largest visibility in a sweep.
pub fn sweep_argmax(points: &[DefocusPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.visibility.total_cmp(&b.1.visibility))
        .map(|(i, _)| i)
}

/// Resolved correlation for identical arms propagated to the object plane.
pub fn identical_arm_map(
    config: &EnsembleConfig,
    samples: Vec<usize>,
    engine: Engine,
) -> Result<CorrelationMap> {
    let arm = ArmPath::new()
        .scatter(config.geometry.scatter)
        .propagate(config.geometry.arm1_length());
    correlate(
        config,
        &arm,
        &arm,
        &Layout::resolved(samples.clone(), samples),
        engine,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        let s = solve_thin_lens(ThinLensInput::ObjectFocal {
            s_o: 0.124,
            f: 0.085,
        })
        .unwrap();
        assert!((s.image_distance - 1.0 / (1.0 / 0.085 - 1.0 / 0.124)).abs() < 1e-15);
        assert_eq!(s.residual, 0.0);
        let s = solve_thin_lens(ThinLensInput::ObjectFocal {
            s_o: 0.17,
            f: 0.085,
        })
        .unwrap();
        assert!((s.image_distance - 0.17).abs() < 1e-14);
        assert!((s.magnification - 1.0).abs() < 1e-12);
        let s = solve_thin_lens(ThinLensInput::ImageFocal {
            s_i: 0.2703,
            f: 0.085,
        })
        .unwrap();
        assert!((s.object_distance - 0.124).abs() < 1e-4);
    }

    #[test]
    fn no_real_image() {
        assert!(solve_thin_lens(ThinLensInput::ObjectFocal {
            s_o: 0.05,
            f: 0.085
        })
        .is_err());
        assert!(solve_thin_lens(ThinLensInput::ObjectFocal {
            s_o: 0.085,
            f: 0.085
        })
        .is_err());
        assert!(solve_thin_lens(ThinLensInput::ImageFocal { s_i: 0.0, f: 0.085 }).is_err());
        assert!(solve_thin_lens(ThinLensInput::ObjectImage {
            s_o: -1.0,
            s_i: 1.0
        })
        .is_err());
    }

    #[test]
    fn nominal_distances_leave_residual() {
        let s = check_thin_lens(&SetupGeometry::reference());
        assert!((s.magnification - 0.2685 / 0.124).abs() < 1e-12);
        assert!(s.residual.abs() > 0.0);
        assert!((s.effective_focal_length() - 0.124 * 0.2685 / 0.3925).abs() < 1e-15);
        assert!((s.effective_focal_length() - 0.0848).abs() < 1e-4);
    }

    #[test]
    fn visibility_formula() {
        assert!((predicted_visibility(1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((predicted_visibility(2).unwrap() - 0.2).abs() < 1e-15);
        assert!(predicted_visibility(0).is_err());
        let v: Vec<f64> = (1..50).map(|n| predicted_visibility(n).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn peaks_and_width() {
        let x: Vec<f64> = (0..201).map(|i| i as f64 * 0.1 - 10.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|x| (-(x - 2.03_f64).powi(2)).exp() + (-(x + 3.0_f64).powi(2)).exp())
            .collect();
        let p = find_peaks(&x, &y);
        assert_eq!(p.len(), 2);
        assert!((p[0] + 3.0).abs() < 0.01);
        assert!((p[1] - 2.03).abs() < 0.01);
        let g: Vec<f64> = x.iter().map(|x| (-x * x).exp()).collect();
        let w = peak_fwhm(&x, &g).unwrap();
        assert!((w - 2.0 * 2f64.ln().sqrt()).abs() < 0.02);
    }

    #[test]
    fn window_padding_and_clip() {
        let w = default_image_window((1e-3, 2e-3), -2.0, 0.0, (-6e-3, 6e-3));
        assert!((w.0 + 4.5e-3).abs() < 1e-15 && (w.1 + 1.5e-3).abs() < 1e-15);
        let w = default_image_window((1e-3, 2e-3), -2.0, 1e-3, (-5e-3, 6e-3));
        assert_eq!(w.0, -5e-3);
    }
}
