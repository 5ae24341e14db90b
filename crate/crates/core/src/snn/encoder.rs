use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::types::{StateVector, STATE_DIM};
use crate::{Error, Result};

/// Default normalization range per observation dimension: position, quaternion
/// (w, x, y, z), force (N), torque (N·m).
pub const DEFAULT_STATE_BOUNDS: [(f64, f64); STATE_DIM] = [
    (-0.03, 0.03),
    (-0.03, 0.03),
    (-0.08, 0.02),
    (0.98, 1.0),
    (-0.05, 0.05),
    (-0.05, 0.05),
    (-0.05, 0.05),
    (-10.0, 10.0),
    (-10.0, 10.0),
    (-10.0, 10.0),
    (-1.0, 1.0),
    (-1.0, 1.0),
    (-1.0, 1.0),
];

/// Gaussian receptive fields, `pop` neurons per observation dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEncoder {
    /// dims × pop, ascending along each row.
    pub centers: Array2<f64>,
    /// dims × pop, strictly positive.
    pub widths: Array2<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl PopulationEncoder {
    /// Centres evenly spaced on [−1, 1], width equal to the spacing.
    pub fn new(bounds: &[(f64, f64)], pop: usize) -> Result<Self> {
        if pop < 2 {
            return Err(Error::Config(format!("need at least 2 neurons per dimension, got {pop}")));
        }
        let dims = bounds.len();
        let spacing = 2.0 / (pop - 1) as f64;
        let centers = Array2::from_shape_fn((dims, pop), |(_, j)| -1.0 + spacing * j as f64);
        let widths = Array2::from_elem((dims, pop), spacing);
        let enc = Self {
            centers,
            widths,
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
        };
        enc.validate()?;
        Ok(enc)
    }

    pub fn dims(&self) -> usize {
        self.centers.nrows()
    }

    pub fn pop(&self) -> usize {
        self.centers.ncols()
    }

    pub fn width(&self) -> usize {
        self.dims() * self.pop()
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.dim() != self.centers.dim()
            || self.lower.len() != self.dims()
            || self.upper.len() != self.dims()
        {
            return Err(Error::Shape("encoder tensors disagree on dims".into()));
        }
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            if !(hi - lo > 0.0) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("degenerate normalization bounds [{lo}, {hi}]")));
            }
        }
        if self.widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("receptive-field widths must be > 0".into()));
        }
        Ok(())
    }

    /// Maps each dimension onto [−1, 1] (clamped).
    pub fn normalize(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.dims() {
            return Err(crate::error::shape_err("state dims", self.dims(), state.len()));
        }
        state
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                if !s.is_finite() {
                    return Err(Error::RejectedInput(format!("state component {i} is {s}")));
                }
                let (lo, hi) = (self.lower[i], self.upper[i]);
                Ok((2.0 * (s - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0))
            })
            .collect()
    }

    /// Activation of neuron j for dimension i at normalized value `x`.
    #[inline]
    pub fn gaussian(&self, i: usize, j: usize, x: f64) -> f64 {
        let d = x - self.centers[[i, j]];
        let w = self.widths[[i, j]];
        (-(d * d) / (2.0 * w * w)).exp()
    }

    pub fn encode_normalized(&self, normalized: &[f64]) -> Array1<f64> {
        let pop = self.pop();
        Array1::from_shape_fn(self.width(), |k| self.gaussian(k / pop, k % pop, normalized[k / pop]))
    }
}

/// `A[i][j] = exp(−(ŝᵢ − μᵢⱼ)² / 2σᵢⱼ²)`, flattened dimension-major.
pub fn encode_state(state: &StateVector, enc: &PopulationEncoder) -> Result<Array1<f64>> {
    let x = enc.normalize(state.as_slice())?;
    Ok(enc.encode_normalized(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc() -> PopulationEncoder {
        PopulationEncoder::new(&DEFAULT_STATE_BOUNDS, 10).unwrap()
    }

    #[test]
    fn output_width_is_130() {
        let s = StateVector([0.01, -0.02, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 2.0, 0.0, 0.1, 0.0]);
        let a = encode_state(&s, &enc()).unwrap();
        assert_eq!(a.len(), 130);
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn peak_and_one_sigma() {
        let e = enc();
        let mu = e.centers[[0, 3]];
        let sigma = e.widths[[0, 3]];
        assert_eq!(e.gaussian(0, 3, mu), 1.0);
        let v = e.gaussian(0, 3, mu + sigma);
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.6065306597).abs() < 1e-9);
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut s = StateVector([0.0; 13]);
        s.0[8] = f64::NAN;
        assert!(matches!(encode_state(&s, &enc()), Err(Error::RejectedInput(_))));
    }

    #[test]
    fn degenerate_bounds_are_rejected() {
        let mut b = DEFAULT_STATE_BOUNDS;
        b[2] = (0.1, 0.1);
        assert!(PopulationEncoder::new(&b, 10).is_err());
    }
}
