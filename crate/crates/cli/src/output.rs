use std::path::{Path, PathBuf};

use jeaae_core::{Error, Result};

/// Output directory of one run. Files are only ever created, never
/// overwritten, unless `force` is set.
pub struct OutDir {
    root: PathBuf,
    force: bool,
    inputs: Vec<PathBuf>,
    written: Vec<String>,
}

fn canonical(p: &Path) -> Option<PathBuf> {
    std::fs::canonicalize(p).ok()
}

impl OutDir {
    pub fn create(root: &Path, force: bool, inputs: &[&Path]) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            force,
            inputs: inputs.iter().filter_map(|p| canonical(p)).collect(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Reserves `name` inside the directory and returns its path.
    pub fn file(&mut self, name: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        if let Some(c) = canonical(&path) {
            if self.inputs.contains(&c) {
                return Err(Error::Config(format!("output {} would overwrite an input", path.display())));
            }
            if !self.force {
                return Err(Error::Config(format!(
                    "output {} already exists (pass --force to replace it)",
                    path.display()
                )));
            }
        }
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_owned());
        }
        Ok(path)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.file(name)?;
        std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
        Ok(path)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

pub fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io(path, e))
}
