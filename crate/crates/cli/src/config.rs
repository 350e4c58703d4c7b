//! Flat `key = value` run configuration with unit-suffixed numbers.
//!
//! ```text
//! # comment
//! d_A = 88mm
//! wavelength = 633nm
//! pinhole_shifts = -2mm, 0mm, 2mm
//! ```
//!
//! Lengths and angles must carry a unit. Unknown or repeated keys are errors.

use std::fmt;
use std::path::Path;

use ghost_core::experiment::{refocused, Engine};
use ghost_core::source::EnsembleConfig;
use ghost_core::{Grid1D, SetupGeometry};

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.origin, self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub geometry: SetupGeometry,
    /// Replace `d_B_prime` by the exact thin-lens conjugate before running.
    pub refocus: bool,
    pub grid_n: usize,
    pub grid_dx: f64,
    pub seed: u64,
    pub realizations: usize,
    pub engine: Engine,
    pub scan_half_width: f64,
    pub pinhole_diameter: f64,
    pub pinhole_shifts: Vec<f64>,
    pub sigma_shift: f64,
    pub slit_separation: f64,
    pub slit_width: f64,
    pub defocus_range: f64,
    pub defocus_step: f64,
    pub baseline_half_width: f64,
    pub baseline_step: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: SetupGeometry::reference(),
            refocus: true,
            grid_n: 8192,
            grid_dx: 2e-6,
            seed: 1,
            realizations: 10_000,
            engine: Engine::Analytic,
            scan_half_width: 6e-3,
            pinhole_diameter: 60e-6,
            pinhole_shifts: vec![-2e-3, 0.0, 2e-3],
            sigma_shift: 1e-3,
            slit_separation: 1e-3,
            slit_width: 0.2e-3,
            defocus_range: 50e-3,
            defocus_step: 10e-3,
            baseline_half_width: 3e-3,
            baseline_step: 20e-6,
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Length,
    Angle,
    Ratio,
}

/// Decimal exponent of each unit; `None` marks a non-decimal scale.
type Unit = (&'static str, Option<i32>, f64);

const LENGTH_UNITS: [Unit; 5] = [
    ("nm", Some(-9), 1e-9),
    ("um", Some(-6), 1e-6),
    ("µm", Some(-6), 1e-6),
    ("mm", Some(-3), 1e-3),
    ("m", Some(0), 1.0),
];
const ANGLE_UNITS: [Unit; 3] = [
    ("mrad", Some(-3), 1e-3),
    ("rad", Some(0), 1.0),
    ("deg", None, std::f64::consts::PI / 180.0),
];

fn parse_number(text: &str, kind: Kind) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+') && (i == 0 || text[..i].ends_with(['e', 'E'])))
                || ((c == 'e' || c == 'E')
                    && text[i + 1..]
                        .starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| format!("`{text}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    let unit = unit.trim();
    let table: &[Unit] = match kind {
        Kind::Length => &LENGTH_UNITS,
        Kind::Angle => &ANGLE_UNITS,
        Kind::Ratio => {
            if unit.is_empty() {
                return Ok(value);
            }
            return Err(format!("`{text}` takes no unit"));
        }
    };
    if unit.is_empty() {
        let names: Vec<&str> = table.iter().map(|(u, _, _)| *u).collect();
        return Err(format!("`{text}` needs a unit ({})", names.join(", ")));
    }
    let &(_, exp, scale) = table
        .iter()
        .find(|(u, _, _)| *u == unit)
        .ok_or_else(|| format!("unknown unit `{unit}` in `{text}`"))?;
    // shifting the decimal exponent keeps `200um` exactly equal to `0.0002m`
    Ok(match exp {
        Some(e) if !num.contains(['e', 'E']) => {
            format!("{num}e{e}").parse().unwrap_or(value * scale)
        }
        _ => value * scale,
    })
}

fn parse_count(text: &str) -> Result<u64, String> {
    text.trim()
        .parse()
        .map_err(|_| format!("`{}` is not a non-negative integer", text.trim()))
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("`{other}` is not true or false")),
    }
}

pub fn parse_engine(text: &str) -> Result<Engine, String> {
    match text.trim() {
        "mc" => Ok(Engine::MonteCarlo),
        "analytic" => Ok(Engine::Analytic),
        other => Err(format!(
            "unknown engine `{other}` (expected mc or analytic)"
        )),
    }
}

fn positive(v: f64, key: &str) -> Result<f64, String> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{key} must be positive"))
    }
}

/// Keys accepted in a configuration file, in echo order.
pub const KEYS: [&str; 25] = [
    "wavelength",
    "a",
    "d_A",
    "d_B",
    "d_B_prime",
    "f",
    "source_diameter",
    "scatter_angle",
    "scatter_taper",
    "refocus",
    "grid_n",
    "grid_dx",
    "seed",
    "realizations",
    "engine",
    "scan_half_width",
    "pinhole_diameter",
    "pinhole_shifts",
    "sigma_shift",
    "slit_separation",
    "slit_width",
    "defocus_range",
    "defocus_step",
    "baseline_half_width",
    "baseline_step",
];

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let len = |v: &str| parse_number(v, Kind::Length);
        let pos_len = |v: &str| len(v).and_then(|x| positive(x, key));
        let g = &mut self.geometry;
        match key {
            "wavelength" => g.wavelength = pos_len(value)?,
            "a" => g.a = pos_len(value)?,
            "d_A" => g.d_a = pos_len(value)?,
            "d_B" => g.d_b = pos_len(value)?,
            "d_B_prime" => g.d_b_prime = pos_len(value)?,
            "f" => g.focal_length = pos_len(value)?,
            "source_diameter" => g.source_diameter = pos_len(value)?,
            "scatter_angle" => {
                let v = parse_number(value, Kind::Angle)?;
                g.scatter.half_angle = if v == 0.0 { f64::INFINITY } else { v };
            }
            "scatter_taper" => g.scatter.taper = parse_number(value, Kind::Ratio)?,
            "refocus" => self.refocus = parse_bool(value)?,
            "grid_n" => self.grid_n = parse_count(value)? as usize,
            "grid_dx" => self.grid_dx = pos_len(value)?,
            "seed" => self.seed = parse_count(value)?,
            "realizations" => self.realizations = parse_count(value)? as usize,
            "engine" => self.engine = parse_engine(value)?,
            "scan_half_width" => self.scan_half_width = pos_len(value)?,
            "pinhole_diameter" => self.pinhole_diameter = pos_len(value)?,
            "pinhole_shifts" => {
                self.pinhole_shifts = value.split(',').map(len).collect::<Result<_, _>>()?;
                if self.pinhole_shifts.is_empty() {
                    return Err("pinhole_shifts needs at least one value".into());
                }
            }
            "sigma_shift" => self.sigma_shift = len(value)?,
            "slit_separation" => self.slit_separation = pos_len(value)?,
            "slit_width" => self.slit_width = pos_len(value)?,
            "defocus_range" => self.defocus_range = len(value)?.abs(),
            "defocus_step" => self.defocus_step = pos_len(value)?,
            "baseline_half_width" => self.baseline_half_width = pos_len(value)?,
            "baseline_step" => self.baseline_step = pos_len(value)?,
            _ => {
                return Err(format!(
                    "unknown key `{key}` (valid keys: {})",
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Cross-field checks that need the whole file.
    pub fn validate(&self) -> Result<(), String> {
        self.geometry.validate().map_err(|e| e.to_string())?;
        Grid1D::centered(self.grid_n, self.grid_dx).map_err(|e| e.to_string())?;
        if self.realizations == 0 {
            return Err("realizations must be at least 1".into());
        }
        if self.refocus {
            refocused(&self.geometry).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// Geometry actually simulated.
    pub fn effective_geometry(&self) -> SetupGeometry {
        if self.refocus {
            refocused(&self.geometry).unwrap_or(self.geometry)
        } else {
            self.geometry
        }
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::centered(self.grid_n, self.grid_dx).expect("validated grid")
    }

    pub fn ensemble(&self) -> ghost_core::Result<EnsembleConfig> {
        EnsembleConfig::new(
            self.realizations,
            self.seed,
            self.effective_geometry(),
            self.grid(),
        )
    }

    /// Every result-affecting parameter in the file format, one `key = value` per line.
    pub fn echo(&self) -> Vec<(String, String)> {
        let g = &self.geometry;
        let m = |v: f64| format!("{v}m");
        let angle = if g.scatter.is_bounded() {
            format!("{}rad", g.scatter.half_angle)
        } else {
            "0rad".to_string()
        };
        let shifts: Vec<String> = self.pinhole_shifts.iter().map(|v| m(*v)).collect();
        let values = [
            m(g.wavelength),
            m(g.a),
            m(g.d_a),
            m(g.d_b),
            m(g.d_b_prime),
            m(g.focal_length),
            m(g.source_diameter),
            angle,
            format!("{}", g.scatter.taper),
            self.refocus.to_string(),
            self.grid_n.to_string(),
            m(self.grid_dx),
            self.seed.to_string(),
            self.realizations.to_string(),
            self.engine.name().to_string(),
            m(self.scan_half_width),
            m(self.pinhole_diameter),
            shifts.join(", "),
            m(self.sigma_shift),
            m(self.slit_separation),
            m(self.slit_width),
            m(self.defocus_range),
            m(self.defocus_step),
            m(self.baseline_half_width),
            m(self.baseline_step),
        ];
        KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }
}

/// Parses configuration text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<(String, usize)> = Vec::new();
    let err = |line: usize, message: String| ConfigError {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
            return Err(err(line_no, format!("`{key}` already set on line {first}")));
        }
        cfg.set(key, value).map_err(|m| err(line_no, m))?;
        seen.push((key.to_string(), line_no));
    }
    cfg.validate().map_err(|m| err(last_line, m))?;
    Ok(cfg)
}

/// Reads a configuration file or the configuration part of a run manifest.
pub fn load_config(path: &Path) -> Result<RunConfig, crate::CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| crate::CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = crate::manifest::config_text_from_manifest(&text).unwrap_or(text);
    Ok(parse_config(&text, &path.display().to_string())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units() {
        assert_eq!(parse_number("633nm", Kind::Length).unwrap(), 633e-9);
        assert_eq!(parse_number("88mm", Kind::Length).unwrap(), 88e-3);
        assert_eq!(parse_number("200 um", Kind::Length).unwrap(), 200e-6);
        assert_eq!(parse_number("200µm", Kind::Length).unwrap(), 200e-6);
        assert_eq!(parse_number("-2.5e-3m", Kind::Length).unwrap(), -2.5e-3);
        assert_eq!(parse_number("17mrad", Kind::Angle).unwrap(), 17e-3);
        assert_eq!(parse_number("200um", Kind::Length).unwrap(), 0.0002);
        assert_eq!(parse_number("60um", Kind::Length).unwrap(), 0.00006);
        assert!(parse_number("88", Kind::Length)
            .unwrap_err()
            .contains("needs a unit"));
        assert!(parse_number("88ft", Kind::Length)
            .unwrap_err()
            .contains("unknown unit"));
        assert!(parse_number("0.2mm", Kind::Ratio).is_err());
        assert!(parse_number("abc", Kind::Length).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.geometry.d_a = 0.0881;
        cfg.pinhole_shifts = vec![-1.25e-3, 0.3e-3];
        cfg.engine = Engine::MonteCarlo;
        let text: String = cfg
            .echo()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        assert_eq!(parse_config(&text, "echo").unwrap(), cfg);
    }

    #[test]
    fn line_anchored_errors() {
        let e = parse_config("a = 125mm\n\nd_Z = 3mm\n", "x.cfg").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().starts_with("x.cfg:3: unknown key `d_Z`"));
        let e = parse_config("a = 1mm\na = 2mm\n", "x.cfg").unwrap_err();
        assert_eq!(e.to_string(), "x.cfg:2: `a` already set on line 1");
        let e = parse_config("a 1mm\n", "x.cfg").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_config("engine = fast\n", "x").is_err());
    }

    #[test]
    fn cross_field_validation() {
        assert!(parse_config("d_B = 50mm\n", "x").is_err());
        assert!(parse_config("grid_n = 1000\n", "x").is_err());
        assert!(parse_config("realizations = 0\n", "x").is_err());
    }
}
