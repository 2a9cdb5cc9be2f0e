//! Defaults file: `key = value` lines read from `--config` or the
//! `SHAPFOIL_CONFIG` environment variable. Flags given on the command line
//! win over the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub const ENV_VAR: &str = "SHAPFOIL_CONFIG";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Defaults {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub theta: Option<f64>,
    pub test_fraction: Option<f64>,
}

impl Defaults {
    pub fn parse(text: &str) -> Result<Self> {
        let mut d = Defaults::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`", i + 1);
            };
            let (key, value) = (key.trim(), value.trim());
            let ctx = || format!("config line {}: bad value for `{key}`", i + 1);
            match key {
                "out" => d.out = Some(PathBuf::from(value)),
                "threads" => d.threads = Some(value.parse().with_context(ctx)?),
                "seed" => d.seed = Some(value.parse().with_context(ctx)?),
                "theta" => d.theta = Some(value.parse().with_context(ctx)?),
                "test_fraction" => d.test_fraction = Some(value.parse().with_context(ctx)?),
                other => bail!("config line {}: unknown key `{other}`", i + 1),
            }
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Reads `explicit` if given, else the file named by [`ENV_VAR`], else
    /// returns empty defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(ENV_VAR) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Defaults::default()),
            },
        }
    }
}
