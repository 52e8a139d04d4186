use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeometryError, Result};

/// A coordinate box, the whole universe a computation lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    bounds: Vec<(f64, f64)>,
    periodic: Vec<bool>,
    names: Vec<String>,
}

impl Chart {
    pub fn new(bounds: Vec<(f64, f64)>, periodic: Vec<bool>, names: Vec<String>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(GeometryError::DimensionMismatch(
                "chart must have at least one coordinate".into(),
            ));
        }
        if bounds.len() != periodic.len() || bounds.len() != names.len() {
            return Err(GeometryError::DimensionMismatch(format!(
                "{} intervals, {} periodicity flags, {} names",
                bounds.len(),
                periodic.len(),
                names.len()
            )));
        }
        if let Some((i, _)) = bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(hi - lo > 0.0) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(GeometryError::InvalidParameter(format!(
                "interval for `{}` must have positive finite length",
                names[i]
            )));
        }
        Ok(Chart {
            bounds,
            periodic,
            names,
        })
    }

    /// Non-periodic box with coordinates named `x1..xm`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Chart::new(
            vec![(lo, hi); dim],
            vec![false; dim],
            (1..=dim).map(|i| format!("x{i}")).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn with_periodic(mut self, periodic: Vec<bool>) -> Result<Self> {
        if periodic.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch(format!(
                "{} periodicity flags for a chart of dimension {}",
                periodic.len(),
                self.dim()
            )));
        }
        self.periodic = periodic;
        Ok(self)
    }

    /// Builds a point, wrapping periodic coordinates into the box.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch(format!(
                "point has {} coordinates, chart has {}",
                coords.len(),
                self.dim()
            )));
        }
        let coords = coords
            .iter()
            .zip(&self.bounds)
            .zip(&self.periodic)
            .map(|((&x, &(lo, hi)), &wrap)| {
                if wrap {
                    lo + (x - lo).rem_euclid(hi - lo)
                } else {
                    x
                }
            })
            .collect::<Vec<_>>();
        for ((x, &(lo, hi)), name) in coords.iter().zip(&self.bounds).zip(&self.names) {
            if !(lo..=hi).contains(x) {
                return Err(GeometryError::InvalidParameter(format!(
                    "coordinate `{name}` = {x} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(Point { coords })
    }

    pub fn check_point(&self, pt: &Point) -> Result<()> {
        if pt.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch(format!(
                "point has {} coordinates, chart has {}",
                pt.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// A point not tied to any chart; callers check it with [`Chart::check_point`].
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_SEED: u64 = 42;
/// Fraction of each interval trimmed from both ends before sampling.
pub const BOUNDARY_SHRINK: f64 = 0.05;

/// Deterministic uniform sampling of the interior of a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    pub samples: usize,
    pub seed: u64,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

impl Sampler {
    pub fn new(samples: usize, seed: u64) -> Self {
        Sampler { samples, seed }
    }

    pub fn points(&self, chart: &Chart) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.samples)
            .map(|_| {
                let coords = chart
                    .bounds()
                    .iter()
                    .map(|&(lo, hi)| {
                        let pad = BOUNDARY_SHRINK * (hi - lo);
                        rng.gen_range(lo + pad..hi - pad)
                    })
                    .collect();
                Point { coords }
            })
            .collect()
    }

    /// Independent stream for per-sample auxiliary randomness.
    pub fn sample_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64 + 1);
        rng
    }
}
