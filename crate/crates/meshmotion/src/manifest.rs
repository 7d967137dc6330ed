//! Corpus manifest: the index of per-frame artifacts written by the phantom
//! generator and consumed by the tracking and reporting tools.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: usize,
    pub mesh: String,
    pub dv: String,
    pub sa: String,
    pub lax1: String,
    pub lax2: String,
    pub b_sa: String,
    pub b_lax1: String,
    pub b_lax2: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    /// Corpus root, relative to the manifest file.
    pub root: String,
    pub frames: Vec<FrameRecord>,
}

impl Manifest {
    pub const VERSION: &'static str = "1";

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    /// Load and validate: the version must be supported and every referenced
    /// file must exist. Returns the manifest and the resolved corpus root.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let file = std::fs::File::open(path)?;
        let manifest: Manifest = serde_json::from_reader(std::io::BufReader::new(file))?;
        if manifest.version != Self::VERSION {
            return Err(Error::Format(format!(
                "manifest version '{}' unsupported (reader supports '{}')",
                manifest.version,
                Self::VERSION
            )));
        }
        let root = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&manifest.root);
        for rec in &manifest.frames {
            for name in [
                &rec.mesh, &rec.dv, &rec.sa, &rec.lax1, &rec.lax2, &rec.b_sa, &rec.b_lax1,
                &rec.b_lax2,
            ] {
                let p = root.join(name);
                if !p.exists() {
                    return Err(Error::Format(format!(
                        "manifest references missing file: {}",
                        p.display()
                    )));
                }
                // Raw images come as a raw/json pair; require the sidecar.
                if p.extension().map(|e| e == "raw").unwrap_or(false)
                    && !p.with_extension("json").exists()
                {
                    return Err(Error::Format(format!(
                        "missing json sidecar for {}",
                        p.display()
                    )));
                }
            }
        }
        Ok((manifest, root))
    }
}
