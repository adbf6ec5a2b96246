//! Seeded benchmark trials: run each sampler on a mixture, histogram the
//! retained draws, and compare against direct sampling with the discretized
//! total-variation metric.
//!
//! Every random decision derives from the trial seed through fixed
//! substream indices, so any trial can be reproduced in isolation:
//!
//! | substream | use                          |
//! |-----------|------------------------------|
//! | 1         | mixture generation (bench)   |
//! | 2         | shared chain start point     |
//! | 3         | reference direct sample      |
//! | 4         | baseline direct resample     |
//! | 16 + i    | sampler `i`'s chain          |

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spreadnuts_core::evaluation::{empirical_grid_pdf, tv_distance, GridHistogram, GridSpec};
use spreadnuts_core::mixture::GaussianMixture;
use spreadnuts_core::nuts::{NutsChain, SamplerConfig};
use spreadnuts_core::rng::derive_seed;
use spreadnuts_core::spread::{SpreadChain, SpreadConfig};

use crate::report::{
    GridDescriptor, MixtureDescriptor, SamplerReport, TrialReport,
};
use crate::targets::two_island_mixture;

/// Substream indices of the per-trial seed derivation.
pub const SUBSTREAM_MIXTURE: u64 = 1;
pub const SUBSTREAM_START: u64 = 2;
pub const SUBSTREAM_REFERENCE: u64 = 3;
pub const SUBSTREAM_BASELINE: u64 = 4;
pub const SUBSTREAM_SAMPLER_BASE: u64 = 16;

/// The samplers a trial can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Nuts,
    #[value(name = "spreadnuts")]
    #[serde(rename = "spreadnuts")]
    SpreadNuts,
    Direct,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Nuts => "nuts",
            SamplerKind::SpreadNuts => "spreadnuts",
            SamplerKind::Direct => "direct",
        }
    }
}

/// Effective trial parameters, echoed verbatim into reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialSettings {
    pub n_samples: usize,
    pub burn_in: usize,
    pub samplers: Vec<SamplerKind>,
    pub max_depth: usize,
    pub divergence_threshold: f64,
    pub target_accept: f64,
    /// `None` auto-tunes by dual averaging over the burn-in draws.
    pub step_size: Option<f64>,
    pub max_total_points: u64,
    pub selection_bias: bool,
    /// Record wall-clock durations (breaks byte-identical outputs).
    pub record_timings: bool,
}

impl Default for TrialSettings {
    fn default() -> Self {
        TrialSettings {
            n_samples: 10_000,
            burn_in: 500,
            samplers: vec![SamplerKind::Nuts, SamplerKind::SpreadNuts, SamplerKind::Direct],
            max_depth: 10,
            divergence_threshold: 1000.0,
            target_accept: 0.8,
            step_size: None,
            max_total_points: 1024,
            selection_bias: true,
            record_timings: false,
        }
    }
}

impl TrialSettings {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_samples <= self.burn_in {
            anyhow::bail!("n_samples ({}) must exceed burn_in ({})", self.n_samples, self.burn_in);
        }
        if self.samplers.is_empty() {
            anyhow::bail!("at least one sampler must be selected");
        }
        if let Some(step) = self.step_size {
            if !(step > 0.0) || !step.is_finite() {
                anyhow::bail!("step_size must be positive and finite, got {step}");
            }
        }
        if self.max_depth == 0 {
            anyhow::bail!("max_depth must be at least 1");
        }
        if self.max_total_points == 0 {
            anyhow::bail!("max_total_points must be at least 1");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            anyhow::bail!("target_accept must lie in (0, 1), got {}", self.target_accept);
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.n_samples - self.burn_in
    }

    fn sampler_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            step_size: self.step_size,
            max_depth: self.max_depth,
            divergence_threshold: self.divergence_threshold,
            adapt_iterations: self.burn_in,
            target_accept: self.target_accept,
            seed,
        }
    }
}

/// A finished trial: the report plus the raw material behind it.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub report: TrialReport,
    /// Retained draws per sampler, in `settings.samplers` order.
    pub retained: Vec<(SamplerKind, Vec<Vec<f64>>)>,
    /// Histograms keyed by sampler name plus `"reference"` and `"baseline"`.
    pub histograms: BTreeMap<String, GridHistogram>,
}

fn run_sampler(
    kind: SamplerKind,
    mixture: &GaussianMixture,
    settings: &TrialSettings,
    seed: u64,
    start: &[f64],
) -> Result<(Vec<Vec<f64>>, Option<f64>), String> {
    match kind {
        SamplerKind::Direct => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draws = mixture.sample_direct(settings.n_samples, &mut rng);
            Ok((draws.split_off(settings.burn_in), None))
        }
        SamplerKind::Nuts => {
            let config = settings.sampler_config(seed);
            let mut chain = NutsChain::new(mixture, start.to_vec(), config)
                .map_err(|e| e.to_string())?;
            let samples = chain.run(settings.n_samples, settings.burn_in);
            Ok((samples, Some(chain.step_size())))
        }
        SamplerKind::SpreadNuts => {
            let config = SpreadConfig {
                base: settings.sampler_config(seed),
                max_total_points: settings.max_total_points,
                selection_bias_enabled: settings.selection_bias,
                force_binary: false,
            };
            let mut chain = SpreadChain::new(mixture, start.to_vec(), config)
                .map_err(|e| e.to_string())?;
            let samples = chain.run(settings.n_samples, settings.burn_in);
            Ok((samples, Some(chain.step_size())))
        }
    }
}

/// Runs one trial: every selected sampler draws `n_samples` from `mixture`
/// starting at a shared direct draw, the first `burn_in` are discarded, and
/// each retained set is compared by m_TV against a fresh direct sample. An
/// independent direct resample provides the baseline m_TV. A failing
/// sampler is recorded in its report entry; the others proceed.
pub fn run_trial(
    mixture: &GaussianMixture,
    settings: &TrialSettings,
    trial_index: u64,
    trial_seed: u64,
) -> TrialRun {
    let d = mixture.dimension();
    let grid = GridSpec::default_for_dimension(d);
    let retained_count = settings.retained();

    let start = {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, SUBSTREAM_START));
        mixture.sample_direct(1, &mut rng).pop().expect("one draw")
    };
    let reference = {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, SUBSTREAM_REFERENCE));
        let draws = mixture.sample_direct(retained_count, &mut rng);
        empirical_grid_pdf(&draws, &grid).expect("non-empty reference sample")
    };
    let baseline = {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, SUBSTREAM_BASELINE));
        let draws = mixture.sample_direct(retained_count, &mut rng);
        empirical_grid_pdf(&draws, &grid).expect("non-empty baseline sample")
    };
    let baseline_m_tv = tv_distance(&baseline, &reference).expect("matching grids");

    let mut histograms = BTreeMap::new();
    histograms.insert("reference".to_string(), reference.clone());
    histograms.insert("baseline".to_string(), baseline);

    let mut sampler_reports = Vec::new();
    let mut retained = Vec::new();
    let mut m_tv_by_name: BTreeMap<String, f64> = BTreeMap::new();
    for (i, &kind) in settings.samplers.iter().enumerate() {
        let seed = derive_seed(trial_seed, SUBSTREAM_SAMPLER_BASE + i as u64);
        let started = Instant::now();
        let outcome = run_sampler(kind, mixture, settings, seed, &start);
        let duration = started.elapsed().as_secs_f64();
        let mut entry = SamplerReport {
            sampler: kind.name().to_string(),
            m_tv: None,
            log_ratio_vs_baseline: None,
            mode_occupancy: None,
            step_size: None,
            duration_seconds: settings.record_timings.then_some(duration),
            error: None,
        };
        match outcome {
            Ok((samples, step_size)) => {
                let hist = empirical_grid_pdf(&samples, &grid).expect("retained non-empty");
                let m_tv = tv_distance(&hist, &reference).expect("matching grids");
                entry.m_tv = Some(m_tv);
                entry.log_ratio_vs_baseline = Some((m_tv / baseline_m_tv).ln());
                entry.step_size = step_size;
                m_tv_by_name.insert(kind.name().to_string(), m_tv);
                histograms.insert(kind.name().to_string(), hist);
                retained.push((kind, samples));
            }
            Err(message) => {
                entry.error = Some(message);
            }
        }
        sampler_reports.push(entry);
    }

    let mut log_ratios = BTreeMap::new();
    for (name, m_tv) in &m_tv_by_name {
        log_ratios.insert(format!("{name}/baseline"), (m_tv / baseline_m_tv).ln());
    }
    if let (Some(nuts), Some(spread)) =
        (m_tv_by_name.get("nuts"), m_tv_by_name.get("spreadnuts"))
    {
        log_ratios.insert("nuts/spreadnuts".to_string(), (nuts / spread).ln());
    }

    let report = TrialReport {
        trial_index,
        seed: trial_seed,
        dimension: d,
        n_samples: settings.n_samples,
        burn_in: settings.burn_in,
        retained: retained_count,
        mu_magnitude: None,
        grid: GridDescriptor::from_spec(&grid),
        mixture: MixtureDescriptor::from_mixture(mixture),
        baseline_m_tv,
        samplers: sampler_reports,
        log_m_tv_ratios: log_ratios,
    };
    TrialRun { report, retained, histograms }
}

/// Runs the two-island experiment at `μ = (magnitude, magnitude)`: a
/// standard trial on `½·N(+μ, I₂) + ½·N(−μ, I₂)` plus, per sampler, the
/// fraction of retained samples nearer each mode.
pub fn two_island_experiment(
    magnitude: f64,
    settings: &TrialSettings,
    trial_index: u64,
    trial_seed: u64,
) -> TrialRun {
    let mixture = two_island_mixture(magnitude);
    let mut run = run_trial(&mixture, settings, trial_index, trial_seed);
    run.report.mu_magnitude = Some(magnitude);
    let plus = [magnitude, magnitude];
    let minus = [-magnitude, -magnitude];
    for (kind, samples) in &run.retained {
        let mut near_plus = 0usize;
        for s in samples {
            let d_plus: f64 = s.iter().zip(&plus).map(|(a, b)| (a - b) * (a - b)).sum();
            let d_minus: f64 = s.iter().zip(&minus).map(|(a, b)| (a - b) * (a - b)).sum();
            if d_plus <= d_minus {
                near_plus += 1;
            }
        }
        let f_plus = near_plus as f64 / samples.len() as f64;
        if let Some(entry) =
            run.report.samplers.iter_mut().find(|s| s.sampler == kind.name())
        {
            entry.mode_occupancy = Some([f_plus, 1.0 - f_plus]);
        }
    }
    run
}
