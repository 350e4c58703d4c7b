use ghost_core::correlation::{accumulate_mc, g2_analytic, siegert_normalize, Layout};
use ghost_core::optics::ArmPath;
use ghost_core::source::{mode_decomposition, sample_source_field, EnsembleConfig};
use ghost_core::{Grid1D, SetupGeometry};
use num_complex::Complex64;

fn config(n: usize, seed: u64) -> EnsembleConfig {
    EnsembleConfig::new(
        n,
        seed,
        SetupGeometry::reference(),
        Grid1D::centered(8192, 2e-6).unwrap(),
    )
    .unwrap()
}

#[test]
fn aperture_and_moments() {
    let cfg = config(2000, 5);
    let idx = cfg.source_indices();
    assert_eq!(idx.len(), 100);
    let mut mean = vec![Complex64::default(); idx.len()];
    let mut power = 0.0;
    for k in 0..cfg.n_realizations {
        let f = sample_source_field(&cfg, k).unwrap();
        let a = f.amplitude();
        assert!(a[..idx.start]
            .iter()
            .chain(&a[idx.end..])
            .all(|v| v.norm_sqr() == 0.0));
        for (m, v) in mean.iter_mut().zip(&a[idx.clone()]) {
            *m += v;
        }
        power += a[idx.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    let samples = (cfg.n_realizations * idx.len()) as f64;
    let mean_intensity = power / samples;
    assert!(
        (mean_intensity - 1.0).abs() < 0.05,
        "<|E|^2> = {mean_intensity}"
    );
    // each sample mean has standard error 1/sqrt(2000)
    let worst = mean
        .iter()
        .map(|m| (m / cfg.n_realizations as f64).norm())
        .fold(0.0, f64::max);
    assert!(
        worst < 5.0 / (cfg.n_realizations as f64).sqrt(),
        "mean amplitude {worst}"
    );
}

#[test]
fn delta_correlated() {
    let cfg = config(4000, 8);
    let j = cfg.source_indices().start + 40;
    let mut c = [Complex64::default(); 4];
    for k in 0..cfg.n_realizations {
        let a = sample_source_field(&cfg, k).unwrap().into_amplitude();
        for (lag, acc) in c.iter_mut().enumerate() {
            *acc += a[j] * a[j + lag].conj();
        }
    }
    let n = cfg.n_realizations as f64;
    assert!((c[0].re / n - 1.0).abs() < 0.08);
    for acc in &c[1..] {
        assert!((acc / n).norm() < 4.0 / n.sqrt());
    }
}

#[test]
fn intensity_is_exponential() {
    let cfg = config(300, 3);
    let mut v: Vec<f64> = (0..cfg.n_realizations)
        .flat_map(|k| {
            let a = sample_source_field(&cfg, k).unwrap().into_amplitude();
            cfg.source_indices().map(move |j| a[j].norm_sqr())
        })
        .collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let ks = v
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let cdf = 1.0 - (-x).exp();
            (cdf - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS statistic {ks}");
}

#[test]
fn realizations_are_pure_functions_of_seed_and_index() {
    let a = config(10, 42);
    assert_eq!(
        sample_source_field(&a, 7).unwrap(),
        sample_source_field(&a, 7).unwrap()
    );
    assert_ne!(
        sample_source_field(&a, 7).unwrap(),
        sample_source_field(&a, 8).unwrap()
    );
    assert_ne!(
        sample_source_field(&a, 7).unwrap(),
        sample_source_field(&config(10, 43), 7).unwrap()
    );
    assert_eq!(
        sample_source_field(&a, 3).unwrap(),
        sample_source_field(&a.with_realizations(1000), 3).unwrap()
    );
}

#[test]
fn streams_are_uncorrelated() {
    let cfg = config(400, 1);
    let idx = cfg.source_indices();
    let mut cross = Complex64::default();
    let mut count = 0.0;
    for k in 0..cfg.n_realizations - 1 {
        let a = sample_source_field(&cfg, k).unwrap().into_amplitude();
        let b = sample_source_field(&cfg, k + 1).unwrap().into_amplitude();
        for j in idx.clone() {
            cross += a[j] * b[j].conj();
            count += 1.0;
        }
    }
    assert!((cross / count).norm() < 4.0 / count.sqrt());
}

#[test]
fn mode_sum_agrees_with_monte_carlo() {
    let mut geo = SetupGeometry::reference();
    geo.source_diameter = 40e-6;
    let grid = Grid1D::centered(256, 4e-6).unwrap();
    let cfg = EnsembleConfig::new(20000, 17, geo, grid).unwrap();
    let arm1 = ArmPath::new().propagate(0.05);
    let arm2 = ArmPath::new().propagate(0.05).lens(0.1).propagate(0.06);
    let layout = Layout::resolved(vec![100, 128, 150], (96..160).step_by(8).collect());
    let modes = mode_decomposition(&cfg, &arm1, &arm2).unwrap();
    let exact = siegert_normalize(&g2_analytic(&modes, &layout).unwrap()).unwrap();
    let mc = siegert_normalize(&accumulate_mc(&cfg, &arm1, &arm2, &layout).unwrap()).unwrap();
    let eps = mc.mc_error.unwrap();
    for ((a, m), e) in exact.g2.iter().zip(&mc.g2).zip(&eps) {
        assert!((a - m).abs() < 4.0 * e, "analytic {a} mc {m} eps {e}");
        assert!((1.0..=2.0 + 1e-12).contains(a));
    }
}
