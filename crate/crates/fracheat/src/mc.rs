//! Monte Carlo cross-validation of the subordination identity: sample the
//! position of a Brownian motion run at an independent one-sided-stable
//! time and compare the empirical law against the analytic kernel.
//!
//! Reproducibility: every sample owns a private generator keyed by
//! (master seed, sample index), so the stream is identical no matter how
//! the index range is split across workers.

use crate::exec;
use crate::special::chi_square_sf;
use crate::Error;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::PI;

/// One sampling run: stable index, time, dimension, count, master seed.
#[derive(Clone, Debug, Serialize)]
pub struct SamplerConfig {
    pub alpha: f64,
    pub t: f64,
    pub dim: usize,
    pub n_samples: usize,
    pub seed: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// private stream for sample `index`: a 256-bit ChaCha key derived from the
// master seed and the index
fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ index.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn open01(u: f64) -> f64 {
    u.clamp(1e-14, 1.0 - 1e-14)
}

// one-sided stable draw with Laplace transform e^{-lambda^rho}, by the
// Kanter transform of a (uniform, exponential) pair
fn stable_draw(rho: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u = open01(rng.random::<f64>()) * PI;
    let w = -open01(rng.random::<f64>()).ln();
    let s1 = (rho * u).sin() / u.sin().powf(1.0 / rho);
    let s2 = (((1.0 - rho) * u).sin() / w).powf((1.0 - rho) / rho);
    s1 * s2
}

/// i.i.d. samples of the one-sided stable law with Laplace transform
/// e^{-lambda^{alpha/2}}. alpha = 2 is the degenerate unit mass.
pub fn sample_subordinator(alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>, Error> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    if alpha == 2.0 {
        return Ok(vec![1.0; n]);
    }
    let rho = 0.5 * alpha;
    Ok(exec::map_range(n, move |i| {
        let mut rng = sample_rng(seed, i as u64);
        stable_draw(rho, &mut rng)
    }))
}

/// Position samples X = sqrt(2 t^{2/alpha} S) Z with Z standard normal in
/// `dim` coordinates; returned flat, sample-major. The variance 2s per
/// coordinate matches the Gaussian kernel normalized as
/// (4 pi s)^{-d/2} e^{-|x|^2/(4s)}.
pub fn sample_position(cfg: &SamplerConfig) -> Result<Vec<f64>, Error> {
    if !(cfg.alpha > 0.0 && cfg.alpha <= 2.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 2], got {}",
            cfg.alpha
        )));
    }
    if cfg.t <= 0.0 {
        return Err(Error::Domain(format!("t must be positive, got {}", cfg.t)));
    }
    if !(1..=3).contains(&cfg.dim) {
        return Err(Error::InvalidParams(format!("dim must be 1..3, got {}", cfg.dim)));
    }
    let rho = 0.5 * cfg.alpha;
    let big_t = cfg.t.powf(2.0 / cfg.alpha);
    let dim = cfg.dim;
    let alpha = cfg.alpha;
    let seed = cfg.seed;
    let chunks = exec::map_range(cfg.n_samples, move |i| {
        let mut rng = sample_rng(seed, i as u64);
        let s = if alpha == 2.0 {
            1.0
        } else {
            stable_draw(rho, &mut rng)
        };
        let sigma = (2.0 * big_t * s).sqrt();
        let mut out = [0.0f64; 3];
        for o in out.iter_mut().take(dim) {
            let z: f64 = rng.sample(StandardNormal);
            *o = sigma * z;
        }
        out
    });
    let mut flat = Vec::with_capacity(cfg.n_samples * dim);
    for c in chunks {
        flat.extend_from_slice(&c[..dim]);
    }
    Ok(flat)
}

/// Chi-square comparison of binned 1-d samples against a density.
#[derive(Clone, Debug, Serialize)]
pub struct HistogramReport {
    pub chi_square: f64,
    pub p_value: f64,
    pub dof: usize,
    pub cells: usize,
    pub merged_bins: usize,
    pub max_cell_deviation: f64,
}

/// Bin samples on [lo, hi] plus two open tail cells and compare with the
/// expected counts from the density. Cells under `min_expected` (default
/// floor 20) merge into their neighbour and are reported.
pub fn histogram_compare<F: Fn(f64) -> f64 + Sync>(
    samples: &[f64],
    density: F,
    bins: usize,
    lo: f64,
    hi: f64,
    min_expected: f64,
) -> Result<HistogramReport, Error> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples to bin".into()));
    }
    if bins < 3 || hi <= lo {
        return Err(Error::InvalidParams("need >= 3 bins and hi > lo".into()));
    }
    let n = samples.len() as f64;
    let width = (hi - lo) / bins as f64;
    // observed counts: interior bins plus two tails
    let mut observed = vec![0.0f64; bins + 2];
    for &x in samples {
        if x < lo {
            observed[0] += 1.0;
        } else if x >= hi {
            observed[bins + 1] += 1.0;
        } else {
            let idx = ((x - lo) / width) as usize;
            observed[1 + idx.min(bins - 1)] += 1.0;
        }
    }
    // expected counts by 5-point Gauss per bin; tails get the remainder
    let rule = crate::quad::gauss_legendre(5);
    let mut expected = vec![0.0f64; bins + 2];
    let mut interior_mass = 0.0;
    for b in 0..bins {
        let a = lo + b as f64 * width;
        let mass = crate::quad::gauss_panel(&|x: f64| density(x), a, a + width, &rule);
        expected[1 + b] = n * mass;
        interior_mass += mass;
    }
    let tail_mass = (1.0 - interior_mass).max(0.0);
    // symmetric densities split the tail evenly
    expected[0] = n * 0.5 * tail_mass;
    expected[bins + 1] = n * 0.5 * tail_mass;

    // merge underfilled cells into their left neighbour (tails merge inward)
    let mut cells_obs = Vec::new();
    let mut cells_exp = Vec::new();
    let mut merged = 0usize;
    for i in 0..observed.len() {
        if !cells_exp.is_empty() && (expected[i] < min_expected) {
            merged += 1;
            *cells_exp.last_mut().unwrap() += expected[i];
            *cells_obs.last_mut().unwrap() += observed[i];
        } else {
            cells_exp.push(expected[i]);
            cells_obs.push(observed[i]);
        }
    }
    // a leading underfilled run merges forward
    while cells_exp.len() > 1 && cells_exp[0] < min_expected {
        let e = cells_exp.remove(0);
        let o = cells_obs.remove(0);
        cells_exp[0] += e;
        cells_obs[0] += o;
        merged += 1;
    }
    if cells_exp.len() < 3 {
        return Err(Error::InsufficientData(
            "fewer than 3 usable cells after merging".into(),
        ));
    }
    let mut stat = 0.0;
    let mut worst = 0.0f64;
    for (o, e) in cells_obs.iter().zip(cells_exp.iter()) {
        let dev = (o - e) / e.sqrt();
        stat += dev * dev;
        worst = worst.max(dev.abs());
    }
    let dof = cells_exp.len() - 1;
    Ok(HistogramReport {
        chi_square: stat,
        p_value: chi_square_sf(stat, dof as f64),
        dof,
        cells: cells_exp.len(),
        merged_bins: merged,
        max_cell_deviation: worst,
    })
}

/// Kolmogorov-Smirnov statistic of samples against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        worst = worst.max((f - lo).abs()).max((hi - f).abs());
    }
    worst
}

/// Log-log regression slope of the empirical tail P(|X| > R) over the
/// given radii. For a stable law of index alpha the slope is -alpha.
pub fn tail_slope(samples: &[f64], radii: &[f64]) -> Result<f64, Error> {
    if radii.len() < 3 {
        return Err(Error::InvalidParams("need >= 3 radii".into()));
    }
    let n = samples.len() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in radii {
        let count = samples.iter().filter(|&&x| x.abs() > r).count();
        if count < 50 {
            continue; // too few exceedances for a stable estimate
        }
        xs.push(r.ln());
        ys.push((count as f64 / n).ln());
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(
            "too few radii with enough tail exceedances".into(),
        ));
    }
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| x * y).sum();
    Ok((m * sxy - sx * sy) / (m * sxx - sx * sx))
}
