//! Files on disk: datasets, the synthetic benchmark and run configuration.

mod config;
mod csv;
mod synth;

use std::fs;
use std::path::Path;

pub use config::RunConfig;
pub use csv::{load_csv, parse_csv, write_csv, SeriesRecord};
pub use synth::{stationary_distribution, synth_generate, SynthConfig, SynthData, SynthSidecar, SIDECAR_VERSION};

use crate::error::Result;

/// Reads a whole file; the error names the path.
pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}
