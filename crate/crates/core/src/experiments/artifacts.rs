use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Writes files into an output directory, each behind a one-line header
/// `# driftwalk <version> config=<hash>`. Files appear atomically.
#[derive(Clone, Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    preamble: String,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, config_hash: &str) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), preamble: format!("# {} config={config_hash}\n", crate::VERSION), written: Vec::new() })
    }

    pub fn preamble(&self) -> &str {
        &self.preamble
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Paths written so far, in order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Render `body` after the header and move the result into place.
    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let mut buf = self.preamble.clone().into_bytes();
        body(&mut buf)?;
        let target = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&buf)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| Error::Io(e.error))?;
        self.written.push(target.clone());
        Ok(target)
    }
}
