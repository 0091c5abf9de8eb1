use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moment polytope. Only intervals are fully supported; products are validated but rejected by the solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    intervals: Vec<(f64, f64)>,
}

impl Polytope {
    pub fn interval(min: f64, max: f64) -> Result<Self> {
        Self::product(vec![(min, max)])
    }

    pub fn product(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() || intervals.len() > 2 {
            return Err(Error::InvalidInput(format!("polytope dimension must be 1 or 2, got {}", intervals.len())));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidInput(format!("empty polytope side [{a}, {b}]")));
            }
        }
        Ok(Self { intervals })
    }

    pub fn unit() -> Self {
        Self { intervals: vec![(0.0, 1.0)] }
    }

    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }

    /// The interval of a one-dimensional polytope.
    pub fn as_interval(&self) -> Result<(f64, f64)> {
        match self.intervals.as_slice() {
            [side] => Ok(*side),
            _ => Err(Error::InvalidInput("only one-dimensional polytopes are supported here".into())),
        }
    }

    pub fn min(&self) -> f64 {
        self.intervals[0].0
    }

    pub fn max(&self) -> f64 {
        self.intervals[0].1
    }

    pub fn length(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.min() && y <= self.max()
    }

    /// `count` equally spaced points including both endpoints.
    pub fn samples(&self, count: usize) -> Vec<f64> {
        let (a, b) = (self.min(), self.max());
        (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_sides() {
        assert!(Polytope::interval(1.0, 1.0).is_err());
        assert!(Polytope::product(vec![(0.0, 1.0), (0.0, 2.0)]).unwrap().as_interval().is_err());
        let p = Polytope::interval(-1.0, 2.0).unwrap();
        assert_eq!(p.length(), 3.0);
        assert_eq!(p.samples(4), vec![-1.0, 0.0, 1.0, 2.0]);
    }
}
