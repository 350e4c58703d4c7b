//! Second-order intensity correlations `G2(x1, x2) = <I1(x1) I2(x2)>`.
//!
//! Two estimators share one output type:
//! * Monte Carlo over source realizations, accumulated in fixed 64-realization
//!   blocks that are merged pairwise in index order, so results are
//!   bit-identical for any number of worker threads;
//! * the analytic mode sum for Gaussian fields,
//!   `G2 = sum_q |g1|^2 sum_q' |g2|^2 + |sum_q g1* g2|^2`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::grid::Grid1D;
use crate::optics::{ArmPath, Element};
use crate::source::{fill_source, EnsembleConfig, Mode};

/// Realizations per deterministic accumulation block.
pub const BLOCK_SIZE: usize = 64;
/// Blocks evaluated concurrently before being merged.
const BLOCKS_PER_WAVE: usize = 16;

/// Detector D1: spatially integrating, or resolved at selected samples.
#[derive(Clone, Debug, PartialEq)]
pub enum Detector1 {
    Bucket,
    Points(Vec<usize>),
}

/// Which samples of the two detector planes are recorded.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub d1: Detector1,
    /// Sample indices of the scanning detector D2.
    pub x2: Vec<usize>,
}

impl Layout {
    pub fn bucket(x2: Vec<usize>) -> Self {
        Self {
            d1: Detector1::Bucket,
            x2,
        }
    }

    pub fn resolved(x1: Vec<usize>, x2: Vec<usize>) -> Self {
        Self {
            d1: Detector1::Points(x1),
            x2,
        }
    }

    fn rows(&self) -> usize {
        match &self.d1 {
            Detector1::Bucket => 1,
            Detector1::Points(p) => p.len(),
        }
    }

    fn validate(&self, grid: &Grid1D) -> Result<()> {
        let n = grid.n();
        let bad = |v: &[usize]| v.iter().any(|&k| k >= n);
        if self.x2.is_empty() {
            return domain("no scanning-detector samples selected");
        }
        if bad(&self.x2) {
            return domain("scanning-detector sample outside the grid");
        }
        if let Detector1::Points(p) = &self.d1 {
            if p.is_empty() || bad(p) {
                return domain("resolved D1 samples empty or outside the grid");
            }
        }
        Ok(())
    }
}

/// How a [`CorrelationMap`] was estimated.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimate {
    Analytic {
        modes: usize,
        /// The interference term `|sum_q g1* g2|^2` (bucket-integrated for a bucket D1).
        interference: Vec<f64>,
    },
    MonteCarlo {
        realizations: usize,
        /// `<(I1 I2)^2>` per map entry.
        product_sq_mean: Vec<f64>,
        i1_sq_mean: Vec<f64>,
        i2_sq_mean: Vec<f64>,
    },
}

/// Accumulated second-order correlation with first-order marginals.
///
/// Entries are row-major: one row per D1 sample (a single row for a bucket),
/// one column per D2 sample.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMap {
    /// D1 coordinates; `None` for a bucket detector.
    pub x1: Option<Vec<f64>>,
    pub x2: Vec<f64>,
    pub g2_raw: Vec<f64>,
    pub i1_mean: Vec<f64>,
    pub i2_mean: Vec<f64>,
    pub estimate: Estimate,
    /// Some marginal is identically zero; normalization is unavailable.
    pub degenerate: bool,
}

impl CorrelationMap {
    fn new(
        x1: Option<Vec<f64>>,
        x2: Vec<f64>,
        g2_raw: Vec<f64>,
        i1_mean: Vec<f64>,
        i2_mean: Vec<f64>,
        estimate: Estimate,
    ) -> Self {
        let degenerate = i1_mean.iter().chain(&i2_mean).any(|&v| v == 0.0);
        Self {
            x1,
            x2,
            g2_raw,
            i1_mean,
            i2_mean,
            estimate,
            degenerate,
        }
    }

    pub fn rows(&self) -> usize {
        self.i1_mean.len()
    }

    pub fn cols(&self) -> usize {
        self.x2.len()
    }

    pub fn is_bucket(&self) -> bool {
        self.x1.is_none()
    }

    /// Realizations accumulated; zero for the analytic estimator.
    pub fn n_accumulated(&self) -> usize {
        match &self.estimate {
            Estimate::MonteCarlo { realizations, .. } => *realizations,
            Estimate::Analytic { .. } => 0,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.estimate, Estimate::Analytic { .. })
    }

    /// `<I1><I2>` per entry.
    pub fn background(&self) -> Vec<f64> {
        let cols = self.cols();
        (0..self.g2_raw.len())
            .map(|i| self.i1_mean[i / cols] * self.i2_mean[i % cols])
            .collect()
    }

    /// Standard error of the `I1 I2` sample mean per entry (Monte Carlo only).
    pub fn product_std_err(&self) -> Option<Vec<f64>> {
        match &self.estimate {
            Estimate::MonteCarlo {
                realizations,
                product_sq_mean,
                ..
            } => {
                let n = *realizations as f64;
                Some(
                    self.g2_raw
                        .iter()
                        .zip(product_sq_mean)
                        .map(|(m, sq)| {
                            if *realizations < 2 {
                                f64::INFINITY
                            } else {
                                ((sq - m * m).max(0.0) / (n - 1.0)).sqrt()
                            }
                        })
                        .collect(),
                )
            }
            Estimate::Analytic { .. } => None,
        }
    }

    /// Monte Carlo error bound `eps_MC` in normalized `g2` units.
    pub fn mc_error(&self) -> Option<Vec<f64>> {
        let se = self.product_std_err()?;
        Some(
            se.iter()
                .zip(self.background())
                .map(|(s, b)| s / b)
                .collect(),
        )
    }

    /// Relative standard error of the D2 singles mean (Monte Carlo only).
    pub fn singles2_rel_error(&self) -> Option<Vec<f64>> {
        match &self.estimate {
            Estimate::MonteCarlo {
                realizations,
                i2_sq_mean,
                ..
            } => {
                let n = *realizations as f64;
                Some(
                    self.i2_mean
                        .iter()
                        .zip(i2_sq_mean)
                        .map(|(m, sq)| ((sq - m * m).max(0.0) / (n - 1.0)).sqrt() / m)
                        .collect(),
                )
            }
            Estimate::Analytic { .. } => None,
        }
    }
}

/// Accumulator for a contiguous run of realizations.
#[derive(Clone, Debug)]
struct Partial {
    i1: Vec<f64>,
    i1_sq: Vec<f64>,
    i2: Vec<f64>,
    i2_sq: Vec<f64>,
    prod: Vec<f64>,
    prod_sq: Vec<f64>,
}

impl Partial {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            i1: vec![0.0; rows],
            i1_sq: vec![0.0; rows],
            i2: vec![0.0; cols],
            i2_sq: vec![0.0; cols],
            prod: vec![0.0; rows * cols],
            prod_sq: vec![0.0; rows * cols],
        }
    }

    fn merge(mut self, other: &Partial) -> Self {
        let add = |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
        add(&mut self.i1, &other.i1);
        add(&mut self.i1_sq, &other.i1_sq);
        add(&mut self.i2, &other.i2);
        add(&mut self.i2_sq, &other.i2_sq);
        add(&mut self.prod, &other.prod);
        add(&mut self.prod_sq, &other.prod_sq);
        self
    }
}

/// Binary-counter pairwise reduction: the tree shape depends only on the
/// number of pushed items, never on how they were produced.
struct PairwiseStack {
    stack: Vec<(u32, Partial)>,
}

impl PairwiseStack {
    fn push(&mut self, mut item: Partial) {
        let mut level = 0;
        while let Some((top, _)) = self.stack.last() {
            if *top != level {
                break;
            }
            let (_, prev) = self.stack.pop().unwrap();
            item = prev.merge(&item);
            level += 1;
        }
        self.stack.push((level, item));
    }

    fn finish(mut self) -> Option<Partial> {
        let (_, mut acc) = self.stack.pop()?;
        while let Some((_, prev)) = self.stack.pop() {
            acc = prev.merge(&acc);
        }
        Some(acc)
    }
}

/// Monte Carlo estimate of `<I1 I2>` over `config.n_realizations` source fields.
///
/// A bucket D1 records `I1 = sum_x |E1(x)|^2 dx` over the whole grid.
pub fn accumulate_mc(
    config: &EnsembleConfig,
    arm1: &ArmPath,
    arm2: &ArmPath,
    layout: &Layout,
) -> Result<CorrelationMap> {
    config.validate()?;
    layout.validate(&config.grid)?;
    let optics = config.optics();
    let c1 = optics.compile(arm1)?;
    let c2 = optics.compile(arm2)?;
    let n = config.grid.n();
    let dx = config.grid.dx();
    let rows = layout.rows();
    let cols = layout.x2.len();
    let total = config.n_realizations;
    let n_blocks = total.div_ceil(BLOCK_SIZE);

    let run_block = |b: usize| -> Partial {
        let mut acc = Partial::zeros(rows, cols);
        let mut ws = optics.workspace();
        let mut e1 = vec![Complex64::default(); n];
        let mut e2 = vec![Complex64::default(); n];
        let mut i1 = vec![0.0; rows];
        let mut i2 = vec![0.0; cols];
        let end = ((b + 1) * BLOCK_SIZE).min(total);
        for k in b * BLOCK_SIZE..end {
            fill_source(config, k, &mut e1);
            e2.copy_from_slice(&e1);
            c1.apply(&mut e1, &mut ws);
            c2.apply(&mut e2, &mut ws);
            match &layout.d1 {
                Detector1::Bucket => i1[0] = e1.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx,
                Detector1::Points(p) => {
                    for (v, &j) in i1.iter_mut().zip(p) {
                        *v = e1[j].norm_sqr();
                    }
                }
            }
            for (v, &j) in i2.iter_mut().zip(&layout.x2) {
                *v = e2[j].norm_sqr();
            }
            for (r, &a) in i1.iter().enumerate() {
                acc.i1[r] += a;
                acc.i1_sq[r] += a * a;
                let row = r * cols;
                for (c, &b) in i2.iter().enumerate() {
                    let p = a * b;
                    acc.prod[row + c] += p;
                    acc.prod_sq[row + c] += p * p;
                }
            }
            for (c, &b) in i2.iter().enumerate() {
                acc.i2[c] += b;
                acc.i2_sq[c] += b * b;
            }
        }
        acc
    };

    let mut reducer = PairwiseStack { stack: Vec::new() };
    let mut start = 0;
    while start < n_blocks {
        let end = (start + BLOCKS_PER_WAVE).min(n_blocks);
        let wave: Vec<Partial> = (start..end).into_par_iter().map(run_block).collect();
        for p in wave {
            reducer.push(p);
        }
        start = end;
    }
    let sums = reducer.finish().expect("at least one block");
    let inv = 1.0 / total as f64;
    let mean = |v: Vec<f64>| v.into_iter().map(|s| s * inv).collect::<Vec<_>>();

    let x1 = match &layout.d1 {
        Detector1::Bucket => None,
        Detector1::Points(p) => Some(p.iter().map(|&j| config.grid.coord(j)).collect()),
    };
    let x2 = layout.x2.iter().map(|&j| config.grid.coord(j)).collect();
    Ok(CorrelationMap::new(
        x1,
        x2,
        mean(sums.prod),
        mean(sums.i1),
        mean(sums.i2),
        Estimate::MonteCarlo {
            realizations: total,
            product_sq_mean: mean(sums.prod_sq),
            i1_sq_mean: mean(sums.i1_sq),
            i2_sq_mean: mean(sums.i2_sq),
        },
    ))
}

/// Mode amplitudes restricted to the recorded samples.
/// `a` is D1-sample-major (`n1 x q`), `b` is D2-sample-major (`n2 x q`).
struct ModeRows {
    q: usize,
    x1_idx: Vec<usize>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

fn rows_from_modes(
    modes: &[(Vec<Complex64>, Vec<Complex64>)],
    x1_idx: Vec<usize>,
    x2_idx: &[usize],
) -> ModeRows {
    let q = modes.len();
    let mut a = vec![Complex64::default(); x1_idx.len() * q];
    let mut b = vec![Complex64::default(); x2_idx.len() * q];
    for (m, (g1, g2)) in modes.iter().enumerate() {
        for (i, &j) in x1_idx.iter().enumerate() {
            a[i * q + m] = g1[j];
        }
        for (i, &j) in x2_idx.iter().enumerate() {
            b[i * q + m] = g2[j];
        }
    }
    ModeRows { q, x1_idx, a, b }
}

fn analytic_from_rows(rows: ModeRows, layout: &Layout, grid: &Grid1D) -> CorrelationMap {
    let ModeRows { q, x1_idx, a, b } = rows;
    let dx = grid.dx();
    let n1 = x1_idx.len();
    let n2 = layout.x2.len();
    let row_power = |m: &[Complex64]| m.iter().map(|v| v.norm_sqr()).sum::<f64>();

    let i1_pts: Vec<f64> = (0..n1).map(|i| row_power(&a[i * q..(i + 1) * q])).collect();
    let i2: Vec<f64> = (0..n2).map(|i| row_power(&b[i * q..(i + 1) * q])).collect();
    let cross = |i1: usize, i2: usize| -> Complex64 {
        a[i1 * q..(i1 + 1) * q]
            .iter()
            .zip(&b[i2 * q..(i2 + 1) * q])
            .map(|(u, v)| u.conj() * v)
            .sum()
    };

    let (i1_mean, interference) = match layout.d1 {
        Detector1::Bucket => {
            let bucket = i1_pts.iter().sum::<f64>() * dx;
            let direct_cost = n1 * n2 * q;
            let gram_cost = q * q * (n1 + n2);
            let term2: Vec<f64> = if direct_cost <= gram_cost {
                (0..n2)
                    .into_par_iter()
                    .map(|j| (0..n1).map(|i| cross(i, j).norm_sqr()).sum::<f64>() * dx)
                    .collect()
            } else {
                // K(q, q') = sum_x g1(x, q) g1*(x, q') dx, then term2 = v^H K v
                let gram: Vec<Complex64> = (0..q)
                    .into_par_iter()
                    .flat_map_iter(|m| {
                        let a = &a;
                        (0..q).map(move |m2| {
                            (0..n1)
                                .map(|i| a[i * q + m] * a[i * q + m2].conj())
                                .sum::<Complex64>()
                                * dx
                        })
                    })
                    .collect();
                (0..n2)
                    .into_par_iter()
                    .map(|j| {
                        let v = &b[j * q..(j + 1) * q];
                        let mut total = Complex64::default();
                        for (m, vm) in v.iter().enumerate() {
                            let row = &gram[m * q..(m + 1) * q];
                            let kv: Complex64 = row.iter().zip(v).map(|(k, w)| k * w).sum();
                            total += vm.conj() * kv;
                        }
                        total.re.max(0.0)
                    })
                    .collect()
            };
            (vec![bucket], term2)
        }
        Detector1::Points(_) => {
            let term2: Vec<f64> = (0..n1 * n2)
                .into_par_iter()
                .map(|e| cross(e / n2, e % n2).norm_sqr())
                .collect();
            (i1_pts, term2)
        }
    };

    let cols = n2;
    let g2_raw = interference
        .iter()
        .enumerate()
        .map(|(e, t2)| i1_mean[e / cols] * i2[e % cols] + t2)
        .collect();
    let x1 = match &layout.d1 {
        Detector1::Bucket => None,
        Detector1::Points(p) => Some(p.iter().map(|&j| grid.coord(j)).collect()),
    };
    CorrelationMap::new(
        x1,
        layout.x2.iter().map(|&j| grid.coord(j)).collect(),
        g2_raw,
        i1_mean,
        i2,
        Estimate::Analytic {
            modes: q,
            interference,
        },
    )
}

/// Exact mode-sum evaluation of both correlation terms.
pub fn g2_analytic(modes: &[Mode], layout: &Layout) -> Result<CorrelationMap> {
    let first = modes
        .first()
        .ok_or_else(|| Error::Domain("mode list is empty".into()))?;
    let grid = *first.g1.grid();
    layout.validate(&grid)?;
    if modes
        .iter()
        .any(|m| m.g1.grid() != &grid || m.g2.grid() != &grid)
    {
        return Err(Error::GridMismatch(
            "modes sampled on different grids".into(),
        ));
    }
    let x1_idx = match &layout.d1 {
        Detector1::Bucket => (0..grid.n())
            .filter(|&j| modes.iter().any(|m| m.g1.amplitude()[j].norm_sqr() > 0.0))
            .collect(),
        Detector1::Points(p) => p.clone(),
    };
    let pairs: Vec<_> = modes
        .iter()
        .map(|m| (m.g1.amplitude().to_vec(), m.g2.amplitude().to_vec()))
        .collect();
    let rows = rows_from_modes(&pairs, x1_idx, &layout.x2);
    Ok(analytic_from_rows(rows, layout, &grid))
}

/// Analytic correlation computed directly from the arms without holding every
/// full-grid mode in memory.
pub fn analytic_map(
    config: &EnsembleConfig,
    arm1: &ArmPath,
    arm2: &ArmPath,
    layout: &Layout,
) -> Result<CorrelationMap> {
    config.validate()?;
    layout.validate(&config.grid)?;
    let optics = config.optics();
    let c1 = optics.compile(arm1)?;
    let c2 = optics.compile(arm2)?;
    let n = config.grid.n();
    // a bucket only sees light the final mask transmits
    let x1_idx: Vec<usize> = match &layout.d1 {
        Detector1::Points(p) => p.clone(),
        Detector1::Bucket => match arm1.elements().last() {
            Some(Element::Mask(m)) => (0..n)
                .filter(|&j| m.transmittance()[j].norm_sqr() > 0.0)
                .collect(),
            _ => (0..n).collect(),
        },
    };
    let pairs: Vec<(Vec<Complex64>, Vec<Complex64>)> = config
        .source_indices()
        .into_par_iter()
        .map_init(
            || optics.workspace(),
            |ws, j| {
                let mut e1 = vec![Complex64::default(); n];
                e1[j] = Complex64::new(1.0, 0.0);
                let mut e2 = e1.clone();
                c1.apply(&mut e1, ws);
                c2.apply(&mut e2, ws);
                let r1 = x1_idx.iter().map(|&i| e1[i]).collect::<Vec<_>>();
                let r2 = layout.x2.iter().map(|&i| e2[i]).collect::<Vec<_>>();
                (r1, r2)
            },
        )
        .collect();
    // rows_from_modes indexes by sample; the pairs are already restricted
    let q = pairs.len();
    let n1 = x1_idx.len();
    let n2 = layout.x2.len();
    let mut a = vec![Complex64::default(); n1 * q];
    let mut b = vec![Complex64::default(); n2 * q];
    for (m, (r1, r2)) in pairs.iter().enumerate() {
        for (i, v) in r1.iter().enumerate() {
            a[i * q + m] = *v;
        }
        for (i, v) in r2.iter().enumerate() {
            b[i * q + m] = *v;
        }
    }
    Ok(analytic_from_rows(
        ModeRows { q, x1_idx, a, b },
        layout,
        &config.grid,
    ))
}

/// Siegert-normalized correlation.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedMap {
    /// `g2 = G2 / (<I1><I2>)`.
    pub g2: Vec<f64>,
    /// Monte Carlo error bound per entry, in `g2` units.
    pub mc_error: Option<Vec<f64>>,
    /// `|g1_12|^2 = term2 / term1` (analytic only), so that `g2 = 1 + |g1_12|^2`.
    pub coherence_sq: Option<Vec<f64>>,
}

pub fn siegert_normalize(map: &CorrelationMap) -> Result<NormalizedMap> {
    if map.degenerate {
        return Err(Error::Degenerate(
            "a first-order marginal is zero; g2 is undefined".into(),
        ));
    }
    let bg = map.background();
    let coherence_sq = match &map.estimate {
        Estimate::Analytic { interference, .. } => Some(
            interference
                .iter()
                .zip(&bg)
                .map(|(t, b)| t / b)
                .collect::<Vec<_>>(),
        ),
        Estimate::MonteCarlo { .. } => None,
    };
    let g2 = match &coherence_sq {
        Some(c) => c.iter().map(|c| 1.0 + c).collect(),
        None => map.g2_raw.iter().zip(&bg).map(|(g, b)| g / b).collect(),
    };
    Ok(NormalizedMap {
        g2,
        mc_error: map.mc_error(),
        coherence_sq,
    })
}

/// Background-free correlation `<I1 I2> - <I1><I2>`.
pub fn fluctuation_correlation(map: &CorrelationMap) -> Result<Vec<f64>> {
    match &map.estimate {
        Estimate::Analytic { interference, .. } => Ok(interference.clone()),
        Estimate::MonteCarlo { realizations, .. } => {
            if *realizations < 2 {
                return domain("fluctuation correlation needs at least two realizations");
            }
            Ok(map
                .g2_raw
                .iter()
                .zip(map.background())
                .map(|(g, b)| g - b)
                .collect())
        }
    }
}
