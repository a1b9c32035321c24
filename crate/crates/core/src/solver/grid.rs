use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular grid over the belief cube `[0, 1]^dims`, row-major with the last
/// axis varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: usize,
    pub points_per_axis: usize,
}

impl Grid {
    /// Grid whose spacing is `step` rounded so that it divides `[0, 1]` evenly.
    pub fn new(dims: usize, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 0.5) {
            return Err(Error::config("grid_step", format!("must lie in (0, 0.5], got {step}")));
        }
        let intervals = (1.0 / step).round().max(1.0) as usize;
        Ok(Grid {
            dims,
            points_per_axis: intervals + 1,
        })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points_per_axis - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        if i + 1 == self.points_per_axis {
            1.0
        } else {
            i as f64 * self.spacing()
        }
    }

    /// Belief vector at flat index `flat`.
    pub fn point(&self, flat: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.dims, 0.0);
        let mut rem = flat;
        for d in (0..self.dims).rev() {
            out[d] = self.coordinate(rem % self.points_per_axis);
            rem /= self.points_per_axis;
        }
    }

    /// Flat index of the grid point closest to `belief`.
    pub fn nearest(&self, belief: &[f64]) -> usize {
        let last = (self.points_per_axis - 1) as f64;
        belief.iter().fold(0, |acc, &x| {
            let i = (x.clamp(0.0, 1.0) * last).round() as usize;
            acc * self.points_per_axis + i
        })
    }

    /// Multilinear interpolation of grid values at `belief`.
    pub fn interpolate(&self, values: &[f64], belief: &[f64]) -> f64 {
        debug_assert_eq!(belief.len(), self.dims);
        let last = self.points_per_axis - 1;
        let mut lower = [0usize; 8];
        let mut frac = [0f64; 8];
        assert!(self.dims <= 8, "interpolation supports at most 8 axes");
        for (d, &x) in belief.iter().enumerate() {
            let pos = x.clamp(0.0, 1.0) * last as f64;
            let i = (pos.floor() as usize).min(last.saturating_sub(1));
            lower[d] = i;
            frac[d] = pos - i as f64;
        }
        if last == 0 {
            return values[0];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dims) {
            let mut weight = 1.0;
            let mut flat = 0;
            for d in 0..self.dims {
                let up = (corner >> (self.dims - 1 - d)) & 1 == 1;
                weight *= if up { frac[d] } else { 1.0 - frac[d] };
                flat = flat * self.points_per_axis + lower[d] + usize::from(up);
            }
            if weight != 0.0 {
                acc += weight * values[flat];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn step_validation() {
        assert!(Grid::new(1, 0.0).is_err());
        assert!(Grid::new(1, 0.6).is_err());
        assert_eq!(Grid::new(1, 0.01).unwrap().points_per_axis, 101);
        assert_eq!(Grid::new(2, 1e-3).unwrap().len(), 1001 * 1001);
    }

    #[test]
    fn points_round_trip_through_nearest() {
        let g = Grid::new(2, 0.1).unwrap();
        let mut p = Vec::new();
        for flat in 0..g.len() {
            g.point(flat, &mut p);
            assert_eq!(g.nearest(&p), flat);
        }
        g.point(g.len() - 1, &mut p);
        assert_eq!(p, vec![1.0, 1.0]);
    }

    #[test]
    fn interpolation_is_exact_for_multilinear_functions() {
        let g = Grid::new(2, 0.25).unwrap();
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y;
        let mut p = Vec::new();
        let values: Vec<f64> = (0..g.len())
            .map(|i| {
                g.point(i, &mut p);
                f(p[0], p[1])
            })
            .collect();
        for &(x, y) in &[(0.1, 0.9), (0.33, 0.71), (1.0, 0.0), (0.0, 1.0), (0.5, 0.5)] {
            assert_relative_eq!(g.interpolate(&values, &[x, y]), f(x, y), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_dimensional_grid() {
        let g = Grid::new(0, 0.1).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.nearest(&[]), 0);
        assert_eq!(g.interpolate(&[4.0], &[]), 4.0);
    }
}
