//! Benchmark-side primitives: random Gaussian-mixture generation, sparse
//! grid histograms of samples, and the discretized total-variation distance
//! between relative empirical pdfs.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
// Resolves f64 math under no_std; std's inherent methods shadow it when
// std is anywhere in the crate graph, so the import can look unused.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixture::{GaussianComponent, GaussianMixture};

/// Covariance draws with a worse condition number are rejected and redrawn.
pub const MAX_CONDITION_NUMBER: f64 = 1e8;

const MAX_REDRAWS: u32 = 100;

/// Discretization grid: per-dimension interval cut into fixed-width cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dimension: usize,
    pub cell_width: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GridSpec {
    /// The benchmark default: `[-20, 20]` per dimension in 0.1-unit cells.
    pub fn default_for_dimension(dimension: usize) -> Self {
        GridSpec {
            dimension,
            cell_width: 0.1,
            lower: alloc::vec![-20.0; dimension],
            upper: alloc::vec![20.0; dimension],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.lower.len() != self.dimension || self.upper.len() != self.dimension {
            return Err(Error::InvalidParameter("grid bounds must match the dimension"));
        }
        if !(self.cell_width > 0.0) || !self.cell_width.is_finite() {
            return Err(Error::InvalidParameter("cell width must be positive and finite"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidParameter("grid bounds must be finite with lower < upper"));
        }
        Ok(())
    }

    fn cells_along(&self, axis: usize) -> i64 {
        let span = (self.upper[axis] - self.lower[axis]) / self.cell_width;
        (span.round() as i64).max(1)
    }

    /// Cell coordinates of a point: `floor((x − lower)/width)` per axis,
    /// clamped into the boundary cells so out-of-range samples still count.
    pub fn cell_of(&self, x: &[f64]) -> Vec<i64> {
        debug_assert_eq!(x.len(), self.dimension);
        x.iter()
            .enumerate()
            .map(|(axis, xi)| {
                let idx = ((xi - self.lower[axis]) / self.cell_width).floor() as i64;
                idx.clamp(0, self.cells_along(axis) - 1)
            })
            .collect()
    }
}

/// Sparse counts of samples per occupied cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHistogram {
    spec: GridSpec,
    counts: BTreeMap<Vec<i64>, u64>,
    total: u64,
}

impl GridHistogram {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(GridHistogram { spec, counts: BTreeMap::new(), total: 0 })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn occupied_cells(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.dimension {
            return Err(Error::DimensionMismatch { expected: self.spec.dimension, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        *self.counts.entry(self.spec.cell_of(x)).or_insert(0) += 1;
        self.total += 1;
        Ok(())
    }

    /// Relative mass of one cell (count / total).
    pub fn relative_mass(&self, cell: &[i64]) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        *self.counts.get(cell).unwrap_or(&0) as f64 / self.total as f64
    }

    /// Occupied cells with their relative masses, in lexicographic cell order.
    pub fn cells(&self) -> impl Iterator<Item = (&[i64], f64)> {
        let total = self.total as f64;
        self.counts.iter().map(move |(cell, count)| (cell.as_slice(), *count as f64 / total))
    }
}

/// Histogram of `samples` on `spec`. Errs on an empty sample list.
pub fn empirical_grid_pdf(samples: &[Vec<f64>], spec: &GridSpec) -> Result<GridHistogram> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut hist = GridHistogram::new(spec.clone())?;
    for s in samples {
        hist.add(s)?;
    }
    Ok(hist)
}

/// Discretized total-variation distance `½·Σ|pdf₁ − pdf₂|` over the union
/// of occupied cells; lies in `[0, 1]`, zero iff the histograms agree.
pub fn tv_distance(h1: &GridHistogram, h2: &GridHistogram) -> Result<f64> {
    if h1.spec != h2.spec {
        return Err(Error::InvalidParameter("histograms must share one grid"));
    }
    if h1.total == 0 || h2.total == 0 {
        return Err(Error::EmptyInput);
    }
    let t1 = h1.total as f64;
    let t2 = h2.total as f64;
    // Merge walk in cell order so the summation order (and therefore the
    // rounding) is identical no matter which histogram comes first.
    let mut it1 = h1.counts.iter().peekable();
    let mut it2 = h2.counts.iter().peekable();
    let mut sum = 0.0;
    loop {
        match (it1.peek(), it2.peek()) {
            (Some((c1, &n1)), Some((c2, &n2))) => match c1.cmp(c2) {
                core::cmp::Ordering::Less => {
                    sum += n1 as f64 / t1;
                    it1.next();
                }
                core::cmp::Ordering::Greater => {
                    sum += n2 as f64 / t2;
                    it2.next();
                }
                core::cmp::Ordering::Equal => {
                    sum += (n1 as f64 / t1 - n2 as f64 / t2).abs();
                    it1.next();
                    it2.next();
                }
            },
            (Some((_, &n1)), None) => {
                sum += n1 as f64 / t1;
                it1.next();
            }
            (None, Some((_, &n2))) => {
                sum += n2 as f64 / t2;
                it2.next();
            }
            (None, None) => break,
        }
    }
    Ok(0.5 * sum)
}

/// Recipe for random benchmark mixtures. Ranges are inclusive `(lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureGenConfig {
    pub num_components_range: (usize, usize),
    /// Means are uniform in `[-mean_bound, mean_bound]^d`.
    pub mean_bound: f64,
    /// Covariances are `c·A·Aᵀ` with `A` uniform in `[0,1]^{d×d}` and
    /// `c` uniform in `[0, cov_scale_bound]`.
    pub cov_scale_bound: f64,
    pub dimension_range: (usize, usize),
    /// Recorded so a failed generation can identify its run.
    pub seed: u64,
}

impl Default for MixtureGenConfig {
    fn default() -> Self {
        MixtureGenConfig {
            num_components_range: (1, 4),
            mean_bound: 20.0,
            cov_scale_bound: 4.0,
            dimension_range: (1, 3),
            seed: 0,
        }
    }
}

impl MixtureGenConfig {
    pub fn validate(&self) -> Result<()> {
        let (klo, khi) = self.num_components_range;
        let (dlo, dhi) = self.dimension_range;
        if klo == 0 || klo > khi {
            return Err(Error::InvalidParameter("component range must be non-empty and positive"));
        }
        if dlo == 0 || dlo > dhi {
            return Err(Error::InvalidParameter("dimension range must be non-empty and positive"));
        }
        if !(self.mean_bound > 0.0) || !(self.cov_scale_bound > 0.0) {
            return Err(Error::InvalidParameter("bounds must be positive"));
        }
        Ok(())
    }
}

/// Draws a random mixture: component count and dimension uniform over their
/// ranges, means uniform in the cube, covariances `c·A·Aᵀ` (rejecting draws
/// with condition number above [`MAX_CONDITION_NUMBER`]), and weights as
/// normalized uniform variates.
pub fn generate_random_mixture<R: Rng + ?Sized>(
    config: &MixtureGenConfig,
    rng: &mut R,
) -> Result<GaussianMixture> {
    config.validate()?;
    let (klo, khi) = config.num_components_range;
    let (dlo, dhi) = config.dimension_range;
    let k = rng.random_range(klo..=khi);
    let d = rng.random_range(dlo..=dhi);

    let mut components = Vec::with_capacity(k);
    for _ in 0..k {
        let mean: Vec<f64> =
            (0..d).map(|_| rng.random_range(-config.mean_bound..=config.mean_bound)).collect();
        let covariance = draw_covariance(d, config, rng)?;
        components.push(GaussianComponent::new(mean, covariance)?);
    }

    let mut weights = alloc::vec![0.0; k];
    for attempt in 0.. {
        if attempt >= MAX_REDRAWS {
            return Err(Error::MixtureGenerationFailed { seed: config.seed });
        }
        for w in weights.iter_mut() {
            *w = rng.random::<f64>();
        }
        if weights.iter().sum::<f64>() > 0.0 {
            break;
        }
    }
    GaussianMixture::new(components, &weights)
}

fn draw_covariance<R: Rng + ?Sized>(
    d: usize,
    config: &MixtureGenConfig,
    rng: &mut R,
) -> Result<Matrix> {
    for _ in 0..MAX_REDRAWS {
        let mut a = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                a.set(i, j, rng.random::<f64>());
            }
        }
        let gram = a.mul(&a.transpose());
        if gram.spd_condition_number() > MAX_CONDITION_NUMBER {
            continue;
        }
        let scale: f64 = rng.random_range(0.0..=config.cov_scale_bound);
        if scale <= 0.0 {
            continue;
        }
        return Ok(gram.scaled(scale));
    }
    Err(Error::MixtureGenerationFailed { seed: config.seed })
}
