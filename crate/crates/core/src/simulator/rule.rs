use serde::Serialize;

use crate::grid::Grid;

/// A stopping set built from a grid mask: `x` belongs to the set iff its
/// nearest grid node is masked. Runs of masked nodes are merged into closed
/// intervals extending half a cell beyond the outermost masked nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingRule {
    pub intervals: Vec<(f64, f64)>,
    pub slack: f64,
    pub tag: String,
}

impl StoppingRule {
    pub fn from_mask(grid: &Grid, mask: &[bool], slack: f64, tag: impl Into<String>) -> Self {
        let h = grid.dx();
        let nodes = grid.nodes();
        let mut intervals = Vec::new();
        let mut start: Option<usize> = None;
        for i in 0..=mask.len() {
            let on = i < mask.len() && mask[i];
            match (on, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    let a = (nodes[s] - 0.5 * h).max(grid.lo());
                    let b = (nodes[i - 1] + 0.5 * h).min(grid.hi());
                    intervals.push((a, b));
                    start = None;
                }
                _ => {}
            }
        }
        Self {
            intervals,
            slack,
            tag: tag.into(),
        }
    }

    pub fn whole(grid: &Grid) -> Self {
        Self {
            intervals: vec![(grid.lo(), grid.hi())],
            slack: f64::INFINITY,
            tag: "whole domain".into(),
        }
    }

    pub fn empty() -> Self {
        Self {
            intervals: Vec::new(),
            slack: 0.0,
            tag: "never stop".into(),
        }
    }

    /// `{x ≥ level}` restricted to the grid.
    pub fn threshold_above(grid: &Grid, level: f64) -> Self {
        let mask: Vec<bool> = grid.nodes().iter().map(|&x| x >= level).collect();
        Self::from_mask(grid, &mask, 0.0, format!("x >= {level}"))
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| x >= a && x <= b)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Mask of grid nodes inside the set.
    pub fn mask(&self, grid: &Grid) -> Vec<bool> {
        grid.nodes().iter().map(|&x| self.contains(x)).collect()
    }
}
