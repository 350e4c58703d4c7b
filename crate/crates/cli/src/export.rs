//! Plain-text traces and 16-bit PGM images.

use std::fmt::Write as _;

use ghost_core::experiment::ImageTrace;

pub const TRACE_HEADER: &str = "x2_m,coincidence,singles1,singles2";

fn num(v: f64) -> String {
    // 17 significant digits reproduce every f64 exactly
    format!("{v:.16e}")
}

/// CSV with one row per scan point and LF line endings.
pub fn trace_csv(trace: &ImageTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for i in 0..trace.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(trace.x2[i]),
            num(trace.coincidence[i]),
            num(trace.singles1[i]),
            num(trace.singles2[i])
        );
    }
    out
}

/// Generic CSV with a caller-chosen header.
pub fn columns_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for r in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| num(c[r])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Columns of a trace CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceColumns {
    pub x2: Vec<f64>,
    pub coincidence: Vec<f64>,
    pub singles1: Vec<f64>,
    pub singles2: Vec<f64>,
}

pub fn parse_trace_csv(text: &str) -> Result<TraceColumns, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(TRACE_HEADER) => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let mut cols = TraceColumns::default();
    for (i, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("row {}: {e}", i + 1))?;
        if v.len() != 4 {
            return Err(format!(
                "row {}: expected 4 fields, found {}",
                i + 1,
                v.len()
            ));
        }
        cols.x2.push(v[0]);
        cols.coincidence.push(v[1]);
        cols.singles1.push(v[2]);
        cols.singles2.push(v[3]);
    }
    Ok(cols)
}

/// Linear scaling used for a PGM, recorded in the manifest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PgmScaling {
    pub min: f64,
    pub max: f64,
}

/// Binary P5 PGM, 16-bit big-endian, `min -> 0`, `max -> 65535`.
/// A constant image is written as all zeros.
pub fn pgm16(width: usize, height: usize, values: &[f64]) -> Result<(Vec<u8>, PgmScaling), String> {
    if values.len() != width * height || width == 0 {
        return Err(format!(
            "image of {width}x{height} needs {} values, got {}",
            width * height,
            values.len()
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("image contains non-finite values".into());
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(2 * values.len());
    let range = max - min;
    if range == 0.0 {
        log::warn!("constant image ({min}); writing all-zero PGM");
    }
    for v in values {
        let level = if range > 0.0 {
            ((v - min) / range * 65535.0).round() as u16
        } else {
            0
        };
        out.extend_from_slice(&level.to_be_bytes());
    }
    Ok((out, PgmScaling { min, max }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_scaling() {
        let (bytes, s) = pgm16(3, 1, &[1.0, 2.0, 3.0]).unwrap();
        let header = b"P5\n3 1\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 0, 0x80, 0x00, 0xff, 0xff]);
        assert_eq!(s, PgmScaling { min: 1.0, max: 3.0 });
    }

    #[test]
    fn constant_pgm_is_zero() {
        let (bytes, _) = pgm16(2, 2, &[5.0; 4]).unwrap();
        assert!(bytes[bytes.len() - 8..].iter().all(|b| *b == 0));
        assert!(pgm16(2, 2, &[1.0; 3]).is_err());
        assert!(pgm16(1, 1, &[f64::NAN]).is_err());
    }

    #[test]
    fn seventeen_digits() {
        for v in [
            0.1,
            1.0 / 3.0,
            -4.356745277028945e-3,
            f64::MIN_POSITIVE,
            1e300,
        ] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
