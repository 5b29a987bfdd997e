use crate::error::{Error, Result};

/// Uniform grid `x_0 < ... < x_N` spanning `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    dx: f64,
    nodes: Vec<f64>,
}

impl Grid {
    /// Grid with `intervals` cells (so `intervals + 1` nodes).
    pub fn new(lo: f64, hi: f64, intervals: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidGrid(format!("bad interval [{lo}, {hi}]")));
        }
        if intervals < 2 {
            return Err(Error::InvalidGrid("need at least 2 intervals".into()));
        }
        let dx = (hi - lo) / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|i| lo + i as f64 * dx).collect();
        // pin the last node so the span is exact
        nodes[intervals] = hi;
        Ok(Self { lo, hi, dx, nodes })
    }

    /// Grid whose spacing does not exceed `max_dx`.
    pub fn with_max_spacing(lo: f64, hi: f64, max_dx: f64) -> Result<Self> {
        if !(max_dx > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {max_dx}")));
        }
        let n = ((hi - lo) / max_dx - 1e-9).ceil().max(2.0) as usize;
        Self::new(lo, hi, n)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.nodes.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Index of the node closest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let k = ((x - self.lo) / self.dx).round();
        k.clamp(0.0, (self.nodes.len() - 1) as f64) as usize
    }

    /// Indices of nodes inside `[a, b]`.
    pub fn window(&self, a: f64, b: f64) -> std::ops::RangeInclusive<usize> {
        let tol = 1e-9 * self.dx;
        let first = self.nodes.iter().position(|&x| x >= a - tol).unwrap_or(self.len());
        let last = self
            .nodes
            .iter()
            .rposition(|&x| x <= b + tol)
            .unwrap_or(0);
        first..=last
    }

    /// Trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut w = vec![self.dx; n];
        w[0] = 0.5 * self.dx;
        w[n - 1] = 0.5 * self.dx;
        w
    }

    /// Piecewise-linear interpolation of grid values at `x` (clamped).
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        if x <= self.lo {
            return values[0];
        }
        if x >= self.hi {
            return values[values.len() - 1];
        }
        let s = (x - self.lo) / self.dx;
        let i = (s.floor() as usize).min(self.len() - 2);
        let t = s - i as f64;
        values[i] * (1.0 - t) + values[i + 1] * t
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(())
    }
}
