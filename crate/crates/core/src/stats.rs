//! Small statistics helpers shared by the Monte Carlo estimators.

use serde::Serialize;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;
/// One-sided 99% normal quantile.
pub const Z99_ONE_SIDED: f64 = 2.326_347_874_040_841;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_err: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
            n,
        }
    }

    pub fn exact(value: f64) -> Self {
        Self { mean: value, std_err: 0.0, n: 1 }
    }

    /// Half-width of the interval at quantile `z`.
    pub fn half_width(&self, z: f64) -> f64 {
        z * self.std_err
    }

    /// 99% two-sided interval.
    pub fn ci99(&self) -> (f64, f64) {
        let h = self.half_width(Z99);
        (self.mean - h, self.mean + h)
    }

    pub fn contains99(&self, value: f64) -> bool {
        let (lo, hi) = self.ci99();
        value >= lo && value <= hi
    }

    pub fn sample_std(&self) -> f64 {
        self.std_err * (self.n as f64).sqrt()
    }
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
