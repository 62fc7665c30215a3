use std::path::{Path, PathBuf};

use serde::Serialize;
use sparsecast_core::Result;

/// Record of one command invocation, written next to its outputs. Output
/// paths are relative to the output directory.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, A: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub args: &'a A,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl<'a, A: Serialize> Manifest<'a, A> {
    pub fn new(command: &'static str, args: &'a A) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            args,
            outputs: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    /// Joins `name` onto `dir` and records it as an output.
    pub fn output(&mut self, dir: &Path, name: impl Into<String>) -> PathBuf {
        let name = name.into();
        let path = dir.join(&name);
        self.outputs.push(name);
        path
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

/// Creates the output directory if needed.
pub fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
