//! Run manifests: ordered `key = value` lines written next to every run's
//! outputs. The recorded arguments replay the run; the recorded hashes let a
//! replay notice that an input file changed.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.txt";
const HEADER: &str = "# shapfoil run manifest v1";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut m = RunManifest::default();
        m.set("tool_version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        m
    }

    /// Appends an entry. Repeated keys are kept in order (used for `arg`).
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        assert!(
            !key.contains('=') && !key.contains('\n'),
            "invalid manifest key `{key}`"
        );
        assert!(!value.contains('\n'), "manifest values are single-line");
        self.entries.push((key.to_string(), value));
        self
    }

    /// Replaces every entry for `key` with a single one, keeping the
    /// position of the first.
    pub fn replace(&mut self, key: &str, value: impl ToString) {
        match self.entries.iter().position(|(k, _)| k == key) {
            Some(i) => {
                self.entries[i].1 = value.to_string();
                let mut seen = 0;
                self.entries.retain(|(k, _)| {
                    if k == key {
                        seen += 1;
                        seen == 1
                    } else {
                        true
                    }
                });
            }
            None => {
                self.set(key, value);
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn set_file_hash(&mut self, key: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.set(key, sha256_hex(&bytes));
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\n");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once(" = ").or_else(|| line.split_once('=')) else {
                bail!("manifest line {}: expected `key = value`", i + 1);
            };
            entries.push((k.trim().to_string(), v.to_string()));
        }
        Ok(RunManifest { entries })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        std::fs::write(&path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
