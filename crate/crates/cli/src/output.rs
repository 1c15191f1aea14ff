use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{config_err, CliError, SCHEMA};

/// Output directory plus the list of files written, in order.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| config_err(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn push_file(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    /// `manifest.json`: resolved configuration and every tolerance in force.
    ///
    /// Thread count and output directory are left out so that runs differing
    /// only in those produce identical files.
    pub fn finish<C: Serialize>(
        mut self,
        command: &str,
        config: &C,
        tolerances: Value,
    ) -> Result<(), CliError> {
        self.files.push("manifest.json".into());
        let manifest = json!({
            "schema": SCHEMA,
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "tolerances": tolerances,
            "outputs": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text)
            .map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))
    }
}
