//! Flat `key = value` experiment configuration.
//!
//! Sources are layered: defaults, then a file, then environment variables
//! `SSLOD_<KEY>` (key upper-cased), then explicit overrides. Unknown keys are
//! errors in every layer. Lists are comma separated.

use super::Rhs;
use crate::error::{Error, Result};
use crate::field::{FieldLaw, Sampler};
use crate::slod::{ModelOptions, SamplingConfig, SeedScope, SourceKind};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const ENV_PREFIX: &str = "SSLOD_";

/// Every recognized key, in canonical order.
pub const KEYS: &[&str] = &[
    "d",
    "log_h",
    "log_coarse",
    "log_eps",
    "ell",
    "samples",
    "m_factor",
    "p",
    "r",
    "threshold_floor",
    "objective",
    "alpha",
    "beta",
    "sampler",
    "rhs",
    "m_reference",
    "seed",
    "source",
    "seed_scope",
    "reuse_translations",
    "common_random_numbers",
    "admit_coarse_le_eps",
    "threads",
    "output",
    "cache_dir",
];

/// Keys that do not influence results.
const EXECUTION_KEYS: &[&str] = &["threads", "output", "cache_dir"];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub log_h: u32,
    pub log_coarse: Vec<u32>,
    pub log_eps: Vec<u32>,
    pub ell: Vec<usize>,
    pub sampling: SamplingConfig,
    pub law: FieldLaw,
    pub rhs: Rhs,
    pub m_reference: usize,
    pub seed: u64,
    pub source: SourceKind,
    pub seed_scope: SeedScope,
    pub reuse_translations: bool,
    pub common_random_numbers: bool,
    /// Admit `H <= eps`; by default only `H > eps` is run.
    pub admit_coarse_le_eps: bool,
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 2,
            log_h: 10,
            log_coarse: vec![3, 4, 5, 6],
            log_eps: vec![5, 6, 7, 8, 9],
            ell: vec![1, 2, 3],
            sampling: SamplingConfig::default(),
            law: FieldLaw::default(),
            rhs: Rhs::SinPi,
            m_reference: 5000,
            seed: 0,
            source: SourceKind::Slod,
            seed_scope: SeedScope::PerPatch,
            reuse_translations: false,
            common_random_numbers: false,
            admit_coarse_le_eps: false,
            threads: 1,
            output: None,
            cache_dir: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for key '{key}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean '{v}' for key '{key}'"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Sets one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "d" => self.d = parse(key, v)?,
            "log_h" => self.log_h = parse(key, v)?,
            "log_coarse" => self.log_coarse = parse_list(key, v)?,
            "log_eps" => self.log_eps = parse_list(key, v)?,
            "ell" => self.ell = parse_list(key, v)?,
            "samples" => self.sampling.samples = parse(key, v)?,
            "m_factor" => self.sampling.m_factor = parse(key, v)?,
            "p" => self.sampling.p = parse(key, v)?,
            "r" => self.sampling.r = parse(key, v)?,
            "threshold_floor" => self.sampling.threshold_floor = parse(key, v)?,
            "objective" => self.sampling.objective = v.parse()?,
            "alpha" => self.law.alpha = parse(key, v)?,
            "beta" => self.law.beta = parse(key, v)?,
            "sampler" => {
                self.law.sampler = match v {
                    "pseudo" => Sampler::PseudoRandom,
                    "lowdisc" => Sampler::LowDiscrepancy,
                    _ => return Err(Error::Config(format!("unknown sampler '{v}'"))),
                }
            }
            "rhs" => self.rhs = v.parse()?,
            "m_reference" => self.m_reference = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "source" => self.source = v.parse()?,
            "seed_scope" => self.seed_scope = v.parse()?,
            "reuse_translations" => self.reuse_translations = parse_bool(key, v)?,
            "common_random_numbers" => self.common_random_numbers = parse_bool(key, v)?,
            "admit_coarse_le_eps" => self.admit_coarse_le_eps = parse_bool(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "output" => self.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            "cache_dir" => self.cache_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// The value of a key in the form accepted by [`set`](Self::set).
    pub fn get(&self, key: &str) -> Result<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        Ok(match key {
            "d" => self.d.to_string(),
            "log_h" => self.log_h.to_string(),
            "log_coarse" => join(&self.log_coarse),
            "log_eps" => join(&self.log_eps),
            "ell" => join(&self.ell),
            "samples" => self.sampling.samples.to_string(),
            "m_factor" => self.sampling.m_factor.to_string(),
            "p" => format!("{:?}", self.sampling.p),
            "r" => self.sampling.r.to_string(),
            "threshold_floor" => format!("{:?}", self.sampling.threshold_floor),
            "objective" => self.sampling.objective.as_str().into(),
            "alpha" => format!("{:?}", self.law.alpha),
            "beta" => format!("{:?}", self.law.beta),
            "sampler" => match self.law.sampler {
                Sampler::PseudoRandom => "pseudo".into(),
                Sampler::LowDiscrepancy => "lowdisc".into(),
            },
            "rhs" => self.rhs.to_string(),
            "m_reference" => self.m_reference.to_string(),
            "seed" => self.seed.to_string(),
            "source" => self.source.as_str().into(),
            "seed_scope" => self.seed_scope.as_str().into(),
            "reuse_translations" => self.reuse_translations.to_string(),
            "common_random_numbers" => self.common_random_numbers.to_string(),
            "admit_coarse_le_eps" => self.admit_coarse_le_eps.to_string(),
            "threads" => self.threads.to_string(),
            "output" => path(&self.output),
            "cache_dir" => path(&self.cache_dir),
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        })
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&std::fs::read_to_string(path)?)
    }

    /// Applies `SSLOD_*` variables from the given environment.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut found: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                k.as_ref()
                    .strip_prefix(ENV_PREFIX)
                    .map(|rest| (rest.to_ascii_lowercase(), v.as_ref().to_string()))
            })
            .collect();
        found.sort();
        for (k, v) in found {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Defaults, then the optional file, then the process environment, then
    /// `key=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        if let Some(f) = file {
            c.apply_file(f)?;
        }
        c.apply_env(std::env::vars())?;
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.d) {
            return Err(Error::Config(format!("d must be 1 or 2, got {}", self.d)));
        }
        self.sampling.validate()?;
        self.law.validate()?;
        if self.m_reference < 1 {
            return Err(Error::Config("m_reference must be at least 1".into()));
        }
        if self.ell.contains(&0) {
            return Err(Error::Config("ell must be at least 1".into()));
        }
        self.model_options().validate()
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions {
            source: self.source,
            scope: self.seed_scope,
            reuse_translations: self.reuse_translations,
            common_random_numbers: self.common_random_numbers,
            threads: self.threads,
            skip_responses: false,
            cache_dir: self.cache_dir.clone(),
        }
    }

    /// Canonical `key=value` lines of all result-relevant keys.
    pub fn canonical(&self) -> String {
        KEYS.iter()
            .filter(|k| !EXECUTION_KEYS.contains(k))
            .map(|k| format!("{k}={}\n", self.get(k).expect("known key")))
            .collect()
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
