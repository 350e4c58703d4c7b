//! Named scenarios. Each produces its files in memory; [`crate::run`] writes them.

use ghost_core::correlation::siegert_normalize;
use ghost_core::experiment::{
    defocus_sweep, ghost_image_scan, identical_arm_map, predicted_visibility, pseudo_object_scan,
    sweep_argmax, CorrelationMode, ImageTrace, ScanOptions,
};
use ghost_core::mask::{make_double_slit, make_pinhole, TransmissionMask};
use ghost_core::sampling::validate_sampling;
use ghost_core::source::EnsembleConfig;

use crate::config::RunConfig;
use crate::export::{columns_csv, pgm16, trace_csv, PgmScaling};
use crate::CliError;

pub const SCENARIOS: [&str; 5] = [
    "fig3-point",
    "fig4-doubleslit",
    "sigma-plane",
    "defocus",
    "siegert-baseline",
];

/// Measured double-slit visibility reported for the hardware experiment.
pub const REFERENCE_DOUBLE_SLIT_VISIBILITY: f64 = 0.12;
/// Measured single-feature visibility reported for the hardware experiment.
pub const REFERENCE_SINGLE_VISIBILITY: f64 = 0.26;

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    pub scaling: Option<PgmScaling>,
}

impl Artifact {
    pub fn text(name: &str, text: String) -> Self {
        Self {
            name: name.to_string(),
            bytes: text.into_bytes(),
            scaling: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<String>,
}

/// Checks every free-space distance and aperture of the configured layout.
pub fn check_sampling(cfg: &RunConfig) -> Result<(), CliError> {
    let geo = cfg.effective_geometry();
    let grid = cfg.grid();
    let max_shift = cfg
        .pinhole_shifts
        .iter()
        .fold(cfg.sigma_shift.abs(), |m, s| m.max(s.abs()));
    let aperture = geo
        .source_diameter
        .max(cfg.slit_separation + cfg.slit_width)
        .max(2.0 * max_shift + cfg.pinhole_diameter);
    let distances = [
        ("a + d_A", geo.arm1_length()),
        ("a + d_B", geo.arm2_to_lens()),
        ("d_B_prime", geo.d_b_prime),
        (
            "d_B_prime - defocus_range",
            geo.d_b_prime - cfg.defocus_range,
        ),
    ];
    for (name, z) in distances {
        if z <= 0.0 {
            return Err(CliError::Sampling(format!(
                "{name} = {z} m is not a forward distance"
            )));
        }
        let report = validate_sampling(&grid, geo.wavelength, z, aperture);
        if !report.passed() {
            return Err(CliError::Sampling(format!(
                "{name} = {z} m: {}",
                report.warnings.join("; ")
            )));
        }
    }
    Ok(())
}

pub fn run_scenario(name: &str, cfg: &RunConfig) -> Result<ScenarioOutput, CliError> {
    let ens = cfg.ensemble()?;
    let mut out = ScenarioOutput::default();
    let geo = ens.geometry;
    out.summary.push(format!("scenario = {name}"));
    out.summary.push(format!("engine = {}", cfg.engine.name()));
    out.summary
        .push(format!("magnification = {:.6}", geo.magnification()));
    match name {
        "fig3-point" => fig3(cfg, &ens, &mut out)?,
        "fig4-doubleslit" => fig4(cfg, &ens, &mut out)?,
        "sigma-plane" => sigma(cfg, &ens, &mut out)?,
        "defocus" => defocus(cfg, &ens, &mut out)?,
        "siegert-baseline" => siegert(cfg, &ens, &mut out)?,
        other => return Err(CliError::UnknownScenario(other.to_string())),
    }
    Ok(out)
}

fn options(cfg: &RunConfig, mode: CorrelationMode) -> ScanOptions {
    ScanOptions {
        half_width: cfg.scan_half_width,
        ..ScanOptions::new(mode, cfg.engine)
    }
}

fn mm(v: f64) -> String {
    format!("{:+.4} mm", v * 1e3)
}

fn peaks_line(trace: &ImageTrace) -> String {
    let p: Vec<String> = trace.peaks().iter().map(|p| mm(*p)).collect();
    format!("[{}]", p.join(", "))
}

/// Center of the transmitting samples of a single-feature mask.
fn sampled_center(mask: &TransmissionMask) -> f64 {
    let (lo, hi) = mask.features()[0];
    0.5 * (lo + hi - mask.grid().dx())
}

fn fig3(cfg: &RunConfig, ens: &EnsembleConfig, out: &mut ScenarioOutput) -> Result<(), CliError> {
    let m = ens.geometry.magnification();
    for &shift in &cfg.pinhole_shifts {
        let obj = make_pinhole(ens.grid, shift, cfg.pinhole_diameter)?;
        let trace = ghost_image_scan(ens, &obj, &options(cfg, CorrelationMode::Raw))?;
        out.summary.push(format!(
            "pinhole {}: peaks {} predicted {} visibility {:.6}",
            mm(shift),
            peaks_line(&trace),
            mm(-m * sampled_center(&obj)),
            trace.visibility()?
        ));
        out.artifacts.push(Artifact::text(
            &format!("fig3-point_shift{:+.3}mm.csv", shift * 1e3),
            trace_csv(&trace),
        ));
    }
    out.summary.push(format!(
        "reference_measured_visibility = {REFERENCE_SINGLE_VISIBILITY} (hardware, not simulated)"
    ));
    Ok(())
}

fn fig4(cfg: &RunConfig, ens: &EnsembleConfig, out: &mut ScenarioOutput) -> Result<(), CliError> {
    let obj = make_double_slit(ens.grid, cfg.slit_separation, cfg.slit_width)?;
    let raw = ghost_image_scan(ens, &obj, &options(cfg, CorrelationMode::Raw))?;
    let fluct = ghost_image_scan(ens, &obj, &options(cfg, CorrelationMode::Fluctuation))?;
    let peaks = raw.peaks();
    let separation = match peaks.as_slice() {
        [a, b] => mm(b - a),
        _ => "unresolved".to_string(),
    };
    out.summary.push(format!("peaks = {}", peaks_line(&raw)));
    out.summary.push(format!(
        "peak_separation = {separation} predicted {}",
        mm(ens.geometry.magnification() * cfg.slit_separation)
    ));
    out.summary.push(format!(
        "visibility = {:.6} predicted {:.6}",
        raw.visibility()?,
        predicted_visibility(obj.feature_count())?
    ));
    out.summary.push(format!(
        "fluctuation_visibility = {:.6}",
        fluct.visibility()?
    ));
    out.summary.push(format!(
        "reference_measured_visibility = {REFERENCE_DOUBLE_SLIT_VISIBILITY} (hardware, not simulated)"
    ));
    out.artifacts
        .push(Artifact::text("fig4-doubleslit.csv", trace_csv(&raw)));
    out.artifacts.push(Artifact::text(
        "fig4-doubleslit_fluctuation.csv",
        trace_csv(&fluct),
    ));
    let (bytes, scaling) = pgm16(raw.len(), 1, &raw.coincidence)
        .map_err(|m| CliError::Simulation(ghost_core::Error::Domain(m)))?;
    out.artifacts.push(Artifact {
        name: "fig4-doubleslit_strip.pgm".into(),
        bytes,
        scaling: Some(scaling),
    });
    Ok(())
}

fn sigma(cfg: &RunConfig, ens: &EnsembleConfig, out: &mut ScenarioOutput) -> Result<(), CliError> {
    let opts = options(cfg, CorrelationMode::Raw);
    let pinhole = make_pinhole(ens.grid, cfg.sigma_shift, cfg.pinhole_diameter)?;
    let t = pseudo_object_scan(ens, &pinhole, &opts)?;
    out.summary.push(format!(
        "pinhole {}: peaks {} predicted {}",
        mm(cfg.sigma_shift),
        peaks_line(&t),
        mm(sampled_center(&pinhole))
    ));
    out.artifacts
        .push(Artifact::text("sigma-plane_pinhole.csv", trace_csv(&t)));
    let ds = make_double_slit(ens.grid, cfg.slit_separation, cfg.slit_width)?;
    let t = pseudo_object_scan(ens, &ds, &opts)?;
    out.summary.push(format!(
        "double slit: peaks {} predicted [{}, {}] visibility {:.6}",
        peaks_line(&t),
        mm(-cfg.slit_separation / 2.0),
        mm(cfg.slit_separation / 2.0),
        t.visibility()?
    ));
    out.artifacts
        .push(Artifact::text("sigma-plane_doubleslit.csv", trace_csv(&t)));
    Ok(())
}

/// Offsets `-range, ..., 0, ..., +range` in whole steps.
pub fn defocus_deltas(range: f64, step: f64) -> Vec<f64> {
    let n = (range / step + 1e-9).floor() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

fn defocus(
    cfg: &RunConfig,
    ens: &EnsembleConfig,
    out: &mut ScenarioOutput,
) -> Result<(), CliError> {
    let obj = make_pinhole(ens.grid, 0.0, cfg.pinhole_diameter)?;
    let deltas = defocus_deltas(cfg.defocus_range, cfg.defocus_step);
    let sweep = defocus_sweep(ens, &obj, &options(cfg, CorrelationMode::Raw), &deltas)?;
    let vis: Vec<f64> = sweep.iter().map(|p| p.visibility).collect();
    let width: Vec<f64> = sweep
        .iter()
        .map(|p| p.peak_width.unwrap_or(f64::NAN))
        .collect();
    for p in &sweep {
        out.summary.push(format!(
            "delta {}: visibility {:.12} peak_width {}",
            mm(p.delta),
            p.visibility,
            p.peak_width.map_or("unresolved".into(), mm)
        ));
    }
    if let Some(i) = sweep_argmax(&sweep) {
        out.summary
            .push(format!("argmax_delta = {}", mm(sweep[i].delta)));
    }
    out.artifacts.push(Artifact::text(
        "defocus.csv",
        columns_csv(
            &["delta_m", "visibility", "peak_width_m"],
            &[&deltas, &vis, &width],
        ),
    ));
    Ok(())
}

fn siegert(
    cfg: &RunConfig,
    ens: &EnsembleConfig,
    out: &mut ScenarioOutput,
) -> Result<(), CliError> {
    let grid = ens.grid;
    let c = grid.center();
    let stride = ((cfg.baseline_step / grid.dx()).round() as usize).max(1);
    let samples: Vec<usize> = grid
        .indices_in(c - cfg.baseline_half_width, c + cfg.baseline_half_width)
        .step_by(stride)
        .collect();
    let map = identical_arm_map(ens, samples.clone(), cfg.engine)?;
    let norm = siegert_normalize(&map)?;
    let n = samples.len();
    let x: Vec<f64> = samples.iter().map(|&j| grid.coord(j)).collect();
    let diag: Vec<f64> = (0..n).map(|i| norm.g2[i * n + i]).collect();
    let min = norm.g2.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = norm.g2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.summary.push(format!("samples = {n} x {n}"));
    out.summary.push(format!(
        "diagonal_mean_g2 = {:.6}",
        diag.iter().sum::<f64>() / n as f64
    ));
    out.summary.push(format!("g2_range = [{min:.6}, {max:.6}]"));
    let csv = match &norm.mc_error {
        Some(eps) => {
            let e: Vec<f64> = (0..n).map(|i| eps[i * n + i]).collect();
            let worst = diag
                .iter()
                .zip(&e)
                .map(|(g, e)| (g - 2.0).abs() / e)
                .fold(0.0, f64::max);
            out.summary
                .push(format!("diagonal_max_deviation_in_eps = {worst:.3}"));
            columns_csv(&["x_m", "g2", "mc_error"], &[&x, &diag, &e])
        }
        None => columns_csv(&["x_m", "g2"], &[&x, &diag]),
    };
    out.artifacts
        .push(Artifact::text("siegert-baseline_diagonal.csv", csv));
    let (bytes, scaling) =
        pgm16(n, n, &norm.g2).map_err(|m| CliError::Simulation(ghost_core::Error::Domain(m)))?;
    out.artifacts.push(Artifact {
        name: "siegert-baseline_g2.pgm".into(),
        bytes,
        scaling: Some(scaling),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deltas_are_symmetric() {
        let d = defocus_deltas(50e-3, 10e-3);
        assert_eq!(d.len(), 11);
        assert_eq!(d[5], 0.0);
        assert!((d[0] + 50e-3).abs() < 1e-15);
    }

    #[test]
    fn short_grid_fails_sampling() {
        let cfg = RunConfig {
            grid_dx: 20e-6,
            ..RunConfig::default()
        };
        let e = check_sampling(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("lambda*z/L"));
    }
}
