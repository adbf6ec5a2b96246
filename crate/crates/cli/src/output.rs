//! Output-file plumbing: path resolution, JSON reports, and the CSV shapes
//! for sample streams and histograms.

use std::env;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use spreadnuts_core::evaluation::GridHistogram;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "SPREADNUTS_OUT_DIR";

/// Explicit `--out` wins; otherwise `default_name` inside `$SPREADNUTS_OUT_DIR`
/// (or the working directory).
pub fn resolve_output_path(explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    match explicit {
        Some(path) => path,
        None => {
            let dir = env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| ".".into());
            dir.join(default_name)
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    let file =
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Sample stream CSV: a `# config: {...}` comment, a header naming each
/// coordinate, then one row per retained draw.
pub fn write_samples_csv(
    path: &Path,
    samples: &[Vec<f64>],
    config_json: &str,
) -> anyhow::Result<()> {
    let file =
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# config: {config_json}")?;
    let dim = samples.first().map_or(0, Vec::len);
    let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in samples {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Histogram CSV: one row per occupied cell, cell indices first, then the
/// relative mass, in lexicographic cell order.
pub fn write_histogram_csv(path: &Path, hist: &GridHistogram) -> anyhow::Result<()> {
    let file =
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let dim = hist.spec().dimension;
    let mut header: Vec<String> = (0..dim).map(|i| format!("cell{i}")).collect();
    header.push("mass".to_string());
    writeln!(w, "{}", header.join(","))?;
    for (cell, mass) in hist.cells() {
        let mut cells: Vec<String> = cell.iter().map(|c| c.to_string()).collect();
        cells.push(format!("{mass}"));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
