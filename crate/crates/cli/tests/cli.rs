use std::path::Path;
use std::process::Command;

use ghost_cli::export::{parse_trace_csv, trace_csv};
use ghost_core::experiment::{CorrelationMode, Engine, ImageTrace, TraceMetadata};
use ghost_core::SetupGeometry;

const PAPER_CFG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/paper.cfg");

fn ghost(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ghost"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_cfg(dir: &Path, extra: &str) -> String {
    let text = std::fs::read_to_string(PAPER_CFG).unwrap() + extra;
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn trace(n: usize) -> ImageTrace {
    let x: Vec<f64> = (0..n).map(|i| i as f64 * 1.0e-3 / 3.0).collect();
    ImageTrace {
        coincidence: x.iter().map(|v| 1.0 + v.sin()).collect(),
        singles1: vec![1.0; n],
        singles2: x.iter().map(|v| 1.0 - v / 7.0).collect(),
        x2: x,
        coincidence_err: None,
        metadata: TraceMetadata {
            geometry: SetupGeometry::reference(),
            object: "test".into(),
            n_realizations: 0,
            seed: 0,
            mode: CorrelationMode::Raw,
            engine: Engine::Analytic,
            image_scale: -2.0,
            image_window: (0.0, 1.0),
        },
    }
}

#[test]
fn csv_export_shapes_and_round_trip() {
    let three = trace_csv(&trace(3));
    assert_eq!(three.lines().count(), 4);
    assert!(three.starts_with("x2_m,coincidence,singles1,singles2\n"));
    assert!(!three.contains('\r'));
    assert_eq!(trace_csv(&trace(0)), "x2_m,coincidence,singles1,singles2\n");
    let t = trace(50);
    let back = parse_trace_csv(&trace_csv(&t)).unwrap();
    assert_eq!(back.x2, t.x2);
    assert_eq!(back.coincidence, t.coincidence);
    assert_eq!(back.singles2, t.singles2);
}

#[test]
fn list_and_validate() {
    let (code, out, _) = ghost(&["list-scenarios"]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().collect::<Vec<_>>(),
        [
            "fig3-point",
            "fig4-doubleslit",
            "sigma-plane",
            "defocus",
            "siegert-baseline"
        ]
    );
    let (code, out, _) = ghost(&["validate", "--config", PAPER_CFG]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o").display().to_string();

    let (code, _, err) = ghost(&["run", "fig9", "--config", PAPER_CFG, "--out", &out]);
    assert_eq!(code, 2);
    assert!(
        err.contains("fig3-point") && err.contains("siegert-baseline"),
        "{err}"
    );

    let bad = write_cfg(dir.path(), "focal = 85mm\n");
    let (code, _, err) = ghost(&["validate", "--config", &bad]);
    assert_eq!(code, 2);
    let n_lines = std::fs::read_to_string(&bad).unwrap().lines().count();
    assert!(
        err.contains(&format!("run.cfg:{n_lines}: unknown key `focal`")),
        "{err}"
    );

    let coarse = dir.path().join("coarse.cfg");
    let text = std::fs::read_to_string(PAPER_CFG)
        .unwrap()
        .replace("grid_dx = 2um", "grid_dx = 20um");
    std::fs::write(&coarse, text).unwrap();
    let (code, _, err) = ghost(&["validate", "--config", &coarse.display().to_string()]);
    assert_eq!(code, 3);
    assert!(err.contains("lambda*z/L"), "{err}");

    let (code, _, _) = ghost(&["validate", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(code, 4);
    let file = dir.path().join("file");
    std::fs::write(&file, "").unwrap();
    let (code, _, err) = ghost(&[
        "run",
        "sigma-plane",
        "--config",
        PAPER_CFG,
        "--out",
        &file.join("sub").display().to_string(),
    ]);
    assert_eq!(code, 4, "{err}");
}

fn read_pgm(path: &Path) -> (usize, usize, Vec<u16>) {
    let bytes = std::fs::read(path).unwrap();
    let header: Vec<&[u8]> = bytes.splitn(4, |b| *b == b'\n').collect();
    assert_eq!(header[0], b"P5");
    let dims: Vec<usize> = std::str::from_utf8(header[1])
        .unwrap()
        .split(' ')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(header[2], b"65535");
    let px = header[3]
        .chunks(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    (dims[0], dims[1], px)
}

#[test]
fn scenario_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3");
    let (code, _, err) = ghost(&[
        "run",
        "fig3-point",
        "--config",
        PAPER_CFG,
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 0, "{err}");
    for shift in ["-2.000", "+0.000", "+2.000"] {
        let csv =
            std::fs::read_to_string(out.join(format!("fig3-point_shift{shift}mm.csv"))).unwrap();
        assert_eq!(parse_trace_csv(&csv).unwrap().x2.len(), 6000);
    }
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(
        summary.contains("pinhole +2.0000 mm: peaks [-4.3567 mm] predicted -4.3568 mm"),
        "{summary}"
    );

    let out = dir.path().join("siegert");
    let (code, _, _) = ghost(&[
        "run",
        "siegert-baseline",
        "--config",
        PAPER_CFG,
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let (w, h, px) = read_pgm(&out.join("siegert-baseline_g2.pgm"));
    assert_eq!((w, h), (300, 300));
    for i in 0..w {
        assert_eq!(px[i * w + i], 65535);
    }

    let out = dir.path().join("fig4");
    let (code, _, _) = ghost(&[
        "run",
        "fig4-doubleslit",
        "--config",
        PAPER_CFG,
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let (w, h, px) = read_pgm(&out.join("fig4-doubleslit_strip.pgm"));
    assert_eq!((w, h), (6000, 1));
    let bands = px
        .windows(2)
        .filter(|p| p[0] < 32768 && p[1] >= 32768)
        .count();
    assert_eq!(bands, 2);
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("pgm.fig4-doubleslit_strip.pgm.min = "));
}

#[test]
fn manifest_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = ["--engine", "mc", "--realizations", "200", "--seed", "7"];
    let mut first = vec!["run", "sigma-plane", "--config", PAPER_CFG, "--out"];
    let a_str = a.display().to_string();
    first.push(&a_str);
    first.extend(args);
    assert_eq!(ghost(&first).0, 0);
    let manifest = a.join("manifest.txt").display().to_string();
    let b_str = b.display().to_string();
    let (code, _, err) = ghost(&[
        "run",
        "sigma-plane",
        "--config",
        &manifest,
        "--out",
        &b_str,
        "--threads",
        "3",
    ]);
    assert_eq!(code, 0, "{err}");
    for name in [
        "sigma-plane_pinhole.csv",
        "sigma-plane_doubleslit.csv",
        "summary.txt",
        "manifest.txt",
    ] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let text = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(text.contains("seed = 7\nrealizations = 200\nengine = mc\n"));
}
