//! Built-in named targets and the mixture specification file format.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use spreadnuts_core::linalg::Matrix;
use spreadnuts_core::mixture::{GaussianComponent, GaussianMixture};

use crate::report::MixtureDescriptor;

/// The two-component benchmark mixture `½·N(+μ, I₂) + ½·N(−μ, I₂)` with
/// `μ = (magnitude, magnitude)`.
pub fn two_island_mixture(magnitude: f64) -> GaussianMixture {
    let plus = GaussianComponent::new(vec![magnitude, magnitude], Matrix::identity(2))
        .expect("identity covariance");
    let minus = GaussianComponent::new(vec![-magnitude, -magnitude], Matrix::identity(2))
        .expect("identity covariance");
    GaussianMixture::new(vec![plus, minus], &[0.5, 0.5]).expect("equal weights")
}

/// Resolves a built-in target name, if `name` is one.
///
/// Known names: `std-normal-1d`, `std-normal-2d`, `std-normal-3d`, and
/// `two-island-<mu>` (e.g. `two-island-2.5`).
pub fn named_target(name: &str) -> Option<GaussianMixture> {
    match name {
        "std-normal-1d" => Some(GaussianMixture::standard_normal(1)),
        "std-normal-2d" => Some(GaussianMixture::standard_normal(2)),
        "std-normal-3d" => Some(GaussianMixture::standard_normal(3)),
        _ => {
            let magnitude: f64 = name.strip_prefix("two-island-")?.parse().ok()?;
            (magnitude > 0.0).then(|| two_island_mixture(magnitude))
        }
    }
}

/// Loads a mixture from a JSON specification file (the [`MixtureDescriptor`]
/// schema). Weights are normalized on load; a sum off by more than 1e-9
/// prints a warning to stderr.
pub fn mixture_from_file(path: &Path) -> anyhow::Result<GaussianMixture> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read target file {}", path.display()))?;
    let descriptor: MixtureDescriptor = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a valid mixture specification", path.display()))?;
    let (mixture, weight_deviation) = descriptor.to_mixture()?;
    if weight_deviation > 1e-9 {
        eprintln!(
            "warning: {}: weights summed to 1 {:+.3e}; normalized on load",
            path.display(),
            weight_deviation
        );
    }
    Ok(mixture)
}

/// Resolves a `--target` argument: a built-in name first, a file path
/// otherwise.
pub fn load_target(spec: &str) -> anyhow::Result<GaussianMixture> {
    if let Some(mixture) = named_target(spec) {
        return Ok(mixture);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("unknown target {spec:?}: not a built-in name and no such file");
    }
    mixture_from_file(path)
}
