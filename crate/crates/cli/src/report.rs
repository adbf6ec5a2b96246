//! Serializable report and mixture-description schemas.
//!
//! Reports are plain JSON with a `schema_version` field; maps use sorted
//! keys and timings are opt-in, so a fixed seed reproduces output files
//! byte for byte.

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use spreadnuts_core::evaluation::GridSpec;
use spreadnuts_core::linalg::Matrix;
use spreadnuts_core::mixture::{GaussianComponent, GaussianMixture};

/// Version of the JSON report and mixture schemas emitted by this crate.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One mixture component in the self-describing mixture schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentDescriptor {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

/// Self-describing Gaussian mixture: the target file format and the shape
/// embedded in trial reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureDescriptor {
    pub dimension: usize,
    pub components: Vec<ComponentDescriptor>,
}

impl MixtureDescriptor {
    pub fn from_mixture(mixture: &GaussianMixture) -> Self {
        MixtureDescriptor {
            dimension: mixture.dimension(),
            components: mixture
                .components()
                .iter()
                .zip(mixture.weights())
                .map(|(c, w)| ComponentDescriptor {
                    weight: *w,
                    mean: c.mean().to_vec(),
                    covariance: c.covariance().rows(),
                })
                .collect(),
        }
    }

    /// Builds the mixture, normalizing weights. Returns the absolute
    /// deviation of the raw weight sum from one so callers can warn.
    pub fn to_mixture(&self) -> anyhow::Result<(GaussianMixture, f64)> {
        if self.components.is_empty() {
            bail!("mixture has no components");
        }
        let mut components = Vec::with_capacity(self.components.len());
        let mut weights = Vec::with_capacity(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            if c.mean.len() != self.dimension {
                bail!("component {i}: mean length {} != dimension {}", c.mean.len(), self.dimension);
            }
            let cov = Matrix::from_nested(&c.covariance)
                .with_context(|| format!("component {i}: covariance is not square"))?;
            let comp = GaussianComponent::new(c.mean.clone(), cov)
                .with_context(|| format!("component {i} is invalid"))?;
            components.push(comp);
            weights.push(c.weight);
        }
        let raw_sum: f64 = weights.iter().sum();
        let mixture = GaussianMixture::new(components, &weights).context("invalid weights")?;
        Ok((mixture, (raw_sum - 1.0).abs()))
    }
}

/// Grid parameters echoed into each report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub cell_width: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GridDescriptor {
    pub fn from_spec(spec: &GridSpec) -> Self {
        GridDescriptor {
            cell_width: spec.cell_width,
            lower: spec.lower.clone(),
            upper: spec.upper.clone(),
        }
    }
}

/// Per-sampler results of a trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerReport {
    pub sampler: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_tv: Option<f64>,
    /// `ln(m_tv / baseline_m_tv)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_ratio_vs_baseline: Option<f64>,
    /// Fraction of retained samples nearest each mode (two-island runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_occupancy: Option<[f64; 2]>,
    /// Final leapfrog step size of the chain, when one was run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    /// Wall-clock run time; present only when timings were requested, since
    /// they break byte-for-byte reproducibility of the output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Results of one benchmark trial on one mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial_index: u64,
    pub seed: u64,
    pub dimension: usize,
    pub n_samples: usize,
    pub burn_in: usize,
    pub retained: usize,
    /// Mode separation for two-island runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_magnitude: Option<f64>,
    pub grid: GridDescriptor,
    pub mixture: MixtureDescriptor,
    /// m_TV between two independent direct resamples (the noise floor).
    pub baseline_m_tv: f64,
    pub samplers: Vec<SamplerReport>,
    /// `ln` of pairwise m_TV ratios, keyed `"a/b"`; includes the §-style
    /// sampler-vs-sampler and sampler-vs-baseline ratios.
    pub log_m_tv_ratios: BTreeMap<String, f64>,
}

impl TrialReport {
    pub fn sampler(&self, name: &str) -> Option<&SamplerReport> {
        self.samplers.iter().find(|s| s.sampler == name)
    }

    pub fn has_errors(&self) -> bool {
        self.samplers.iter().any(|s| s.error.is_some())
    }
}

/// Per-dimension aggregation over a bench sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub dimension: usize,
    pub trials: u64,
    pub mean_baseline_m_tv: f64,
    /// Mean m_TV per sampler name.
    pub mean_m_tv: BTreeMap<String, f64>,
    /// Mean log m_TV ratios per pair key.
    pub mean_log_m_tv_ratios: BTreeMap<String, f64>,
}

pub fn summarize_by_dimension(trials: &[TrialReport]) -> Vec<DimensionSummary> {
    let mut dims: Vec<usize> = trials.iter().map(|t| t.dimension).collect();
    dims.sort_unstable();
    dims.dedup();
    dims.into_iter()
        .map(|d| {
            let in_dim: Vec<&TrialReport> = trials.iter().filter(|t| t.dimension == d).collect();
            let n = in_dim.len() as f64;
            let mut mean_m_tv: BTreeMap<String, (f64, f64)> = BTreeMap::new();
            let mut mean_ratios: BTreeMap<String, (f64, f64)> = BTreeMap::new();
            for t in &in_dim {
                for s in &t.samplers {
                    if let Some(m) = s.m_tv {
                        let e = mean_m_tv.entry(s.sampler.clone()).or_insert((0.0, 0.0));
                        e.0 += m;
                        e.1 += 1.0;
                    }
                }
                for (k, v) in &t.log_m_tv_ratios {
                    let e = mean_ratios.entry(k.clone()).or_insert((0.0, 0.0));
                    e.0 += v;
                    e.1 += 1.0;
                }
            }
            DimensionSummary {
                dimension: d,
                trials: in_dim.len() as u64,
                mean_baseline_m_tv: in_dim.iter().map(|t| t.baseline_m_tv).sum::<f64>() / n,
                mean_m_tv: mean_m_tv.into_iter().map(|(k, (s, c))| (k, s / c)).collect(),
                mean_log_m_tv_ratios: mean_ratios
                    .into_iter()
                    .map(|(k, (s, c))| (k, s / c))
                    .collect(),
            }
        })
        .collect()
}
