//! Coordinate charts and sample-point generation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A single coordinate chart: a dimension, coordinate names, the sample
/// points declared with the chart, and an optional sampling box for seeded
/// random points. Every check in this crate is pointwise on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    dim: usize,
    coord_names: Vec<String>,
    sample_points: Vec<Vec<f64>>,
    sample_box: Option<(Vec<f64>, Vec<f64>)>,
}

impl Chart {
    pub fn new(coord_names: &[&str]) -> Self {
        Chart {
            dim: coord_names.len(),
            coord_names: coord_names.iter().map(|s| s.to_string()).collect(),
            sample_points: Vec::new(),
            sample_box: None,
        }
    }

    pub fn from_names(coord_names: Vec<String>) -> Result<Self> {
        if coord_names.is_empty() {
            return Err(Error::InvalidInput("chart dimension must be >= 1".into()));
        }
        for (i, a) in coord_names.iter().enumerate() {
            if coord_names[i + 1..].contains(a) {
                return Err(Error::InvalidInput(format!(
                    "duplicate coordinate name `{a}`"
                )));
            }
        }
        Ok(Chart {
            dim: coord_names.len(),
            coord_names,
            sample_points: Vec::new(),
            sample_box: None,
        })
    }

    pub fn with_points(mut self, points: &[&[f64]]) -> Self {
        for p in points {
            assert_eq!(p.len(), self.dim, "sample point has wrong dimension");
            self.sample_points.push(p.to_vec());
        }
        self
    }

    pub fn with_box(mut self, low: &[f64], high: &[f64]) -> Self {
        assert_eq!(low.len(), self.dim);
        assert_eq!(high.len(), self.dim);
        self.sample_box = Some((low.to_vec(), high.to_vec()));
        self
    }

    pub fn push_point(&mut self, point: Vec<f64>) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "sample point {point:?} has length {} in a {}-dimensional chart",
                point.len(),
                self.dim
            )));
        }
        self.sample_points.push(point);
        Ok(())
    }

    pub fn set_box(&mut self, low: Vec<f64>, high: Vec<f64>) -> Result<()> {
        if low.len() != self.dim || high.len() != self.dim {
            return Err(Error::InvalidInput("sample box has wrong dimension".into()));
        }
        if low.iter().zip(&high).any(|(l, h)| l >= h) {
            return Err(Error::InvalidInput(
                "sample box must have low < high in every coordinate".into(),
            ));
        }
        self.sample_box = Some((low, high));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn declared_points(&self) -> &[Vec<f64>] {
        &self.sample_points
    }

    pub fn sample_box(&self) -> Option<(&[f64], &[f64])> {
        self.sample_box
            .as_ref()
            .map(|(l, h)| (l.as_slice(), h.as_slice()))
    }

    /// Declared points plus `extra` seeded uniform points from the sample
    /// box (when one is declared). Deterministic for a given seed.
    pub fn sample(&self, extra: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut points = self.sample_points.clone();
        if let Some((low, high)) = &self.sample_box {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..extra {
                let p: Vec<f64> = low
                    .iter()
                    .zip(high)
                    .map(|(&l, &h)| rng.gen_range(l..h))
                    .collect();
                points.push(p);
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "chart declares no sample points and no sample box".into(),
            ));
        }
        Ok(points)
    }
}
