use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::Common;

/// Written as `manifest.json` next to a command's outputs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub config: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub flags: serde_json::Value,
    /// Paths relative to `out_dir`.
    pub artifacts: Vec<String>,
}

pub struct RunDir {
    pub path: PathBuf,
    pub manifest: RunManifest,
}

impl RunDir {
    pub fn create(common: &Common, command: &str) -> Result<Self> {
        let run_id = common
            .run_id
            .clone()
            .unwrap_or_else(|| format!("{command}-{}", chrono::Utc::now().format("%Y%m%dT%H%M%SZ")));
        let path = common.out.join(&run_id);
        std::fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(RunDir {
            manifest: RunManifest {
                run_id,
                command: command.into(),
                out_dir: path.clone(),
                flags: serde_json::Value::Null,
                ..RunManifest::default()
            },
            path,
        })
    }

    pub fn artifact(&mut self, name: String) {
        self.manifest.artifacts.push(name);
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path.join(name);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        self.artifact(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_text(name, &format!("{}\n", text.trim_end()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.artifacts_sorted();
        let text = serde_json::to_string_pretty(&self.manifest)?;
        let p = self.path.join("manifest.json");
        std::fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))
    }

    fn artifacts_sorted(&mut self) {
        self.manifest.artifacts.sort();
        self.manifest.artifacts.dedup();
    }
}
