//! Batch runs over a directory of configs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::report::Report;
use crate::run::{check_file, RunOptions};

/// Caps the worker count; `0` or unset means one per core.
pub const THREADS_ENV: &str = "GAUSS_HOLDER_THREADS";

pub struct SweepItem {
    pub config: PathBuf,
    pub output: PathBuf,
    pub report: Report,
}

/// `*.json` and `*.toml` files directly inside `dir`, sorted, skipping
/// reports written by earlier sweeps.
pub fn config_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "toml")))
        .filter(|p| !p.to_string_lossy().ends_with(".report.json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn report_path(config: &Path, out_dir: &Path) -> PathBuf {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out_dir.join(format!("{stem}.report.json"))
}

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

/// Runs every config in `dir` and writes each report into `out_dir`.
/// Results come back in file order.
pub fn sweep(dir: &Path, out_dir: &Path, opts: &RunOptions, threads: usize) -> io::Result<Vec<SweepItem>> {
    let files = config_files(dir)?;
    fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| io::Error::new(io::ErrorKind::Other, e))?;
    pool.install(|| {
        files
            .par_iter()
            .map(|config| {
                let report = check_file(config, opts);
                let output = report_path(config, out_dir);
                fs::write(&output, report.to_json())?;
                Ok(SweepItem { config: config.clone(), output, report })
            })
            .collect()
    })
}
