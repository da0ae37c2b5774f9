//! Staged outputs: CSV files and the run manifest are collected in memory
//! and written only once the whole run has succeeded.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fdlbm::report::Csv;
use toml::{Table, Value};

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
    artifacts: Vec<Value>,
    derived: Table,
    resolved: Table,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, csv: &Csv, parameters: &[(String, String)]) {
        let file = format!("{name}.csv");
        let mut entry = Table::new();
        entry.insert("name".into(), name.into());
        entry.insert("file".into(), file.clone().into());
        entry.insert("rows".into(), (csv.len() as i64).into());
        let params: Table = parameters.iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect();
        entry.insert("parameters".into(), params.into());
        self.artifacts.push(entry.into());
        self.files.push((file, csv.to_string()));
    }

    pub fn derived(&mut self, key: &str, value: impl Into<Value>) {
        self.derived.insert(key.into(), value.into());
    }

    /// Fully resolved input of the run, e.g. an experiment spec.
    pub fn resolved<T: serde::Serialize>(&mut self, key: &str, value: &T) -> anyhow::Result<()> {
        self.resolved.insert(key.into(), Value::try_from(value).context("serialising the resolved input")?);
        Ok(())
    }

    /// Write every file and then `manifest.toml`, each through a temporary
    /// file renamed into place.
    pub fn commit(self, dir: &Path, command: &str, config: &impl serde::Serialize) -> anyhow::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (name, text) in &self.files {
            written.push(write_atomic(dir, name, text)?);
        }

        let mut run = Table::new();
        run.insert("command".into(), command.into());
        run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        run.insert("threads".into(), (rayon::current_num_threads() as i64).into());
        let mut manifest = Table::new();
        manifest.insert("run".into(), run.into());
        manifest.insert("config".into(), Value::try_from(config).context("serialising the configuration")?);
        if !self.resolved.is_empty() {
            manifest.insert("resolved".into(), self.resolved.into());
        }
        if !self.derived.is_empty() {
            manifest.insert("derived".into(), self.derived.into());
        }
        manifest.insert("artifacts".into(), Value::Array(self.artifacts));
        let text = toml::to_string(&manifest).context("rendering the manifest")?;
        written.push(write_atomic(dir, "manifest.toml", &text)?);
        Ok(written)
    }
}

fn write_atomic(dir: &Path, name: &str, text: &str) -> anyhow::Result<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("staging {}", target.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).with_context(|| format!("renaming into {}", target.display()))?;
    Ok(target)
}
