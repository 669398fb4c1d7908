use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::sum::compensated_sum;

/// Discretized `(M, μ)`: `m ≥ 1` samples with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain")]
pub struct QuadratureDomain {
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<f64>>,
}

/// Unvalidated serde mirror of [`QuadratureDomain`].
#[derive(Deserialize)]
struct RawDomain {
    weights: Vec<f64>,
    #[serde(default)]
    coords: Option<Vec<f64>>,
}

impl TryFrom<RawDomain> for QuadratureDomain {
    type Error = GeomError;

    fn try_from(raw: RawDomain) -> Result<Self> {
        let domain = Self::new(raw.weights)?;
        match raw.coords {
            Some(c) => domain.with_coords(c),
            None => Ok(domain),
        }
    }
}

impl QuadratureDomain {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(GeomError::InvalidDomain("empty domain (m = 0)".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(GeomError::InvalidDomain(format!(
                "weight {i} is {w}, weights must be positive"
            )));
        }
        Ok(Self {
            weights,
            coords: None,
        })
    }

    /// Attaches a coordinate on M to each sample (provenance only).
    pub fn with_coords(mut self, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != self.weights.len() {
            return Err(GeomError::LengthMismatch {
                expected: self.weights.len(),
                got: coords.len(),
            });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    /// `m` samples of weight `1/m`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m])
    }

    /// Equispaced points `2πi/m` on the circle with equal weights of total 1.
    pub fn uniform_circle(m: usize) -> Result<Self> {
        let coords = (0..m)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / m as f64)
            .collect();
        Self::uniform(m)?.with_coords(coords)
    }

    /// Trapezoid rule on `[0, 1]` with `m ≥ 2` nodes.
    pub fn interval_trapezoid(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(GeomError::InvalidDomain(
                "trapezoid rule needs m >= 2".into(),
            ));
        }
        let h = 1.0 / (m - 1) as f64;
        let weights = (0..m)
            .map(|i| if i == 0 || i == m - 1 { 0.5 * h } else { h })
            .collect();
        let coords = (0..m).map(|i| i as f64 * h).collect();
        Self::new(weights)?.with_coords(coords)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[f64]> {
        self.coords.as_deref()
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    /// Rescales the weights to total 1.
    pub fn normalized(&self) -> Self {
        let total = self.total_weight();
        Self {
            weights: self.weights.iter().map(|w| w / total).collect(),
            coords: self.coords.clone(),
        }
    }
}
