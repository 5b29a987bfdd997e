//! Total-variation distance of `P_t(x, ·)` from the invariant law and a
//! fitted exponential envelope `K(x) e^{−λt}`.
//!
//! For Ornstein–Uhlenbeck models both laws are Gaussian and the distance is
//! computed exactly; otherwise endpoints are simulated and the transition
//! density is estimated with a Gaussian kernel (Scott's bandwidth).

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::grid::Grid;
use crate::measure::{stationary_density, InvariantMeasure};
use crate::model::DiffusionModel;
use crate::rewards::RewardSpec;
use crate::simulator::{EnsembleSpec, PathWalker};
use crate::stats::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TvMethod {
    GaussianClosedForm,
    KernelDensity,
}

/// Simulation settings for models without a closed-form transition law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KdeSettings {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for KdeSettings {
    fn default() -> Self {
        Self {
            paths: 100_000,
            dt: 1e-2,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicityProfile {
    pub starts: Vec<f64>,
    pub times: Vec<f64>,
    /// `tv[s][j]` = TV distance from start `s` at time `j`.
    pub tv: Vec<Vec<f64>>,
    /// Per-start fitted slope of `ln TV` against `t`.
    pub slopes: Vec<f64>,
    /// Per-start `R²` of that fit.
    pub r_squared: Vec<f64>,
    /// Common rate: the slowest per-start decay.
    pub rate: f64,
    /// `K(x)` per start, the smallest constant with `TV ≤ K e^{−λt}` at
    /// every tabulated time.
    pub envelope: Vec<f64>,
    pub method: TvMethod,
}

impl ErgodicityProfile {
    pub fn min_r_squared(&self) -> f64 {
        self.r_squared.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Rows `(t, x, tv)`.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for (s, &x) in self.starts.iter().enumerate() {
            for (j, &t) in self.times.iter().enumerate() {
                out.push((t, x, self.tv[s][j]));
            }
        }
        out
    }
}

/// Exact TV distance between `N(m1, v1)` and `N(m2, v2)`.
pub fn gaussian_tv(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    let rel = (v1 - v2).abs() / v1.max(v2);
    if rel < 1e-12 {
        let s = v1.sqrt();
        return erf((m1 - m2).abs() / (2.0 * std::f64::consts::SQRT_2 * s));
    }
    // log p1 − log p2 = a x² + b x + c vanishes at the two crossings
    let a = 0.5 / v2 - 0.5 / v1;
    let b = m1 / v1 - m2 / v2;
    let c = m2 * m2 / (2.0 * v2) - m1 * m1 / (2.0 * v1) - 0.5 * (v1 / v2).ln();
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // numerically stable roots
    let q = -0.5 * (b + b.signum() * disc);
    let (mut r1, mut r2) = if q != 0.0 { (q / a, c / q) } else { (-disc / (2.0 * a), disc / (2.0 * a)) };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let n1 = Normal::new(m1, v1.sqrt()).unwrap();
    let n2 = Normal::new(m2, v2.sqrt()).unwrap();
    let mass = |n: &Normal| n.cdf(r2) - n.cdf(r1);
    (mass(&n1) - mass(&n2)).abs()
}

/// Builds the TV table for each start and fits the envelope. Needs at least
/// four time points with a positive distance for every start.
pub fn ergodicity_profile(
    model: &DiffusionModel,
    grid: &Grid,
    starts: &[f64],
    times: &[f64],
    kde: KdeSettings,
) -> Result<ErgodicityProfile> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("times must be strictly ascending".into()));
    }
    if times.len() < 4 {
        return Err(Error::InsufficientData(format!("{} time points, need 4", times.len())));
    }
    if starts.is_empty() {
        return Err(Error::InsufficientData("no start points".into()));
    }
    let (tv, method) = match model.ou_stationary() {
        Some((m, v)) => {
            let tv = starts
                .iter()
                .map(|&x| {
                    times
                        .iter()
                        .map(|&t| {
                            let (mt, vt) = model.ou_transition(x, t).unwrap();
                            gaussian_tv(mt, vt, m, v)
                        })
                        .collect()
                })
                .collect();
            (tv, TvMethod::GaussianClosedForm)
        }
        None => {
            let measure = stationary_density(model, grid)?;
            let tv = starts
                .iter()
                .map(|&x| kde_tv_row(model, grid, &measure, x, times, kde))
                .collect::<Result<Vec<_>>>()?;
            (tv, TvMethod::KernelDensity)
        }
    };

    let mut slopes = Vec::with_capacity(starts.len());
    let mut r_squared = Vec::with_capacity(starts.len());
    for row in &tv {
        let (ts, ls): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(row)
            .filter(|(_, v)| **v > 0.0 && v.is_finite())
            .map(|(t, v)| (*t, v.ln()))
            .unzip();
        if ts.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "only {} usable TV values for a start point",
                ts.len()
            )));
        }
        let fit = linear_fit(&ts, &ls).ok_or_else(|| Error::InsufficientData("degenerate fit".into()))?;
        slopes.push(fit.slope);
        r_squared.push(fit.r_squared);
    }
    let rate = slopes.iter().map(|s| -s).fold(f64::INFINITY, f64::min).max(0.0);
    let envelope = tv
        .iter()
        .map(|row| {
            row.iter()
                .zip(times)
                .map(|(v, t)| v * (rate * t).exp())
                .fold(f64::MIN_POSITIVE, f64::max)
        })
        .collect();
    Ok(ErgodicityProfile {
        starts: starts.to_vec(),
        times: times.to_vec(),
        tv,
        slopes,
        r_squared,
        rate,
        envelope,
        method,
    })
}

fn kde_tv_row(
    model: &DiffusionModel,
    grid: &Grid,
    measure: &InvariantMeasure,
    x0: f64,
    times: &[f64],
    kde: KdeSettings,
) -> Result<Vec<f64>> {
    let rewards = RewardSpec::undiscounted(ScalarFn::zero(), ScalarFn::zero(), grid)?;
    let spec = EnsembleSpec {
        x0,
        horizon: *times.last().unwrap(),
        dt: kde.dt,
        paths: kde.paths,
        seed: kde.seed,
    };
    // validates the step size and start point
    crate::simulator::simulate_recorded(model, &rewards, EnsembleSpec { paths: 1, horizon: kde.dt, ..spec }, 1)?;
    let ks: Vec<usize> = times.iter().map(|t| (t / kde.dt).round() as usize).collect();
    let endpoints: Vec<Vec<f64>> = (0..kde.paths)
        .into_par_iter()
        .map(|i| {
            let mut w = PathWalker::new(model, &rewards, &spec, i);
            ks.iter()
                .map(|&k| {
                    while w.k < k {
                        w.step();
                    }
                    w.x
                })
                .collect()
        })
        .collect();
    let weights = grid.trapezoid_weights();
    Ok((0..times.len())
        .map(|j| {
            let sample: Vec<f64> = endpoints.iter().map(|e| e[j]).collect();
            let dens = kernel_density(grid, &sample);
            0.5 * dens
                .iter()
                .zip(measure.density())
                .zip(&weights)
                .map(|((p, q), w)| (p - q).abs() * w)
                .sum::<f64>()
        })
        .collect())
}

/// Gaussian KDE on the grid with Scott's bandwidth `σ̂ n^{−1/5}`, using
/// linear binning. Mass leaking past the ends is reflected back.
pub fn kernel_density(grid: &Grid, sample: &[f64]) -> Vec<f64> {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let sd = (sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let h = (sd * n.powf(-0.2)).max(grid.dx());
    let len = grid.len();
    let dx = grid.dx();
    let mut bins = vec![0.0; len];
    for &x in sample {
        let s = ((x - grid.lo()) / dx).clamp(0.0, (len - 1) as f64);
        let i = (s.floor() as usize).min(len - 2);
        let t = s - i as f64;
        bins[i] += 1.0 - t;
        bins[i + 1] += t;
    }
    let reach = ((5.0 * h) / dx).ceil() as isize;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|k| {
            let u = k as f64 * dx / h;
            (-0.5 * u * u).exp() / (h * (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect();
    let mut dens = vec![0.0; len];
    for (i, &c) in bins.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (kk, &kv) in kernel.iter().enumerate() {
            let mut j = i as isize + kk as isize - reach;
            // reflect at the ends
            if j < 0 {
                j = -j;
            }
            if j >= len as isize {
                j = 2 * (len as isize - 1) - j;
            }
            if (0..len as isize).contains(&j) {
                dens[j as usize] += c * kv / n;
            }
        }
    }
    dens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_of_identical_laws_is_zero() {
        assert!(gaussian_tv(0.3, 1.2, 0.3, 1.2).abs() < 1e-15);
    }

    #[test]
    fn tv_mean_shift_matches_formula() {
        // N(0,1) vs N(1,1): 2Φ(1/2) − 1
        let expect = 2.0 * Normal::new(0.0, 1.0).unwrap().cdf(0.5) - 1.0;
        assert!((gaussian_tv(0.0, 1.0, 1.0, 1.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn tv_matches_quadrature() {
        let pdf = |x: f64, m: f64, v: f64| {
            (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
        };
        for &(m1, v1, m2, v2) in &[(0.2, 0.5, 0.0, 1.0), (3.0, 0.9, 0.0, 1.0), (-1.0, 2.0, 0.5, 0.3)] {
            let h = 1e-4;
            let mut s = 0.0;
            let mut x = -20.0;
            while x < 20.0 {
                s += (pdf(x, m1, v1) - pdf(x, m2, v2)).abs() * h;
                x += h;
            }
            let quad = 0.5 * s;
            assert!((gaussian_tv(m1, v1, m2, v2) - quad).abs() < 1e-6, "{m1} {v1} {m2} {v2}");
        }
    }

    #[test]
    fn ou_profile_eventually_small_and_log_linear() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 1600).unwrap();
        let times: Vec<f64> = (1..=6).map(f64::from).collect();
        let p = ergodicity_profile(&m, &g, &[3.0], &times, KdeSettings::default()).unwrap();
        assert!(p.slopes[0] <= -0.9);
        assert!(p.r_squared[0] >= 0.95);
        let late = ergodicity_profile(&m, &g, &[3.0], &[5.0, 8.0, 10.0, 12.0], KdeSettings::default()).unwrap();
        assert!(*late.tv[0].last().unwrap() < 1e-3);
    }

    #[test]
    fn envelope_grows_with_distance_from_mean() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 2f64.sqrt(), -8.0, 8.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 1600).unwrap();
        let times: Vec<f64> = (1..=6).map(f64::from).collect();
        let p = ergodicity_profile(&m, &g, &[0.0, 1.0], &times, KdeSettings::default()).unwrap();
        assert!(p.envelope[0] < p.envelope[1]);
        for (s, row) in p.tv.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!(*v <= p.envelope[s] * (-p.rate * times[j]).exp() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn too_few_times() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 1.0, -8.0, 8.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 160).unwrap();
        assert!(matches!(
            ergodicity_profile(&m, &g, &[1.0], &[1.0, 2.0, 3.0], KdeSettings::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn double_well_kde_profile_decays() {
        let m = DiffusionModel::double_well(1.0, 1.0, -4.0, 4.0).unwrap();
        let g = Grid::new(-4.0, 4.0, 400).unwrap();
        let kde = KdeSettings { paths: 20_000, dt: 1e-2, seed: 3 };
        let p = ergodicity_profile(&m, &g, &[1.5], &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0], kde).unwrap();
        assert_eq!(p.method, TvMethod::KernelDensity);
        assert!(p.tv[0][0] > p.tv[0][3]);
        assert!(p.tv[0][5] < 0.05, "{:?}", p.tv);
    }
}
