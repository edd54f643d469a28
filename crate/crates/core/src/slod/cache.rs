//! Per-patch cache files.
//!
//! One CSV file `patch_<T>.csv` per coarse element:
//!
//! ```text
//! config_hash,<sha256 hex>
//! kind,<slod|lod>
//! center,<T>
//! sigma_t,<f64>
//! sigma_raw,<f64>
//! rayleigh,<f64>
//! candidates,<count>
//! samples,<count>
//! element,g,mean,m2
//! <K>,<g_K>,<mean_K>,<m2_K>
//! ...
//! ```
//!
//! Floats are written in shortest round-trip form, so a load reproduces the
//! stored basis bit for bit.

use super::{LocalBasis, LocalSourceTerm, MeanResponse, ModelOptions, PatchSampler, SamplingConfig};
use crate::error::{Error, Result};
use crate::field::{FieldLaw, Sampler};
use crate::grid::{GridSpec, Level, Patch};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Hash of every input that determines the basis of `patch`.
pub fn patch_hash(
    spec: &GridSpec,
    ell: usize,
    law: &FieldLaw,
    cfg: &SamplingConfig,
    opts: &ModelOptions,
    seed: u64,
    patch: &Patch,
) -> String {
    let sampler = match law.sampler {
        Sampler::PseudoRandom => "pseudo",
        Sampler::LowDiscrepancy => "lowdisc",
    };
    let stream = PatchSampler::stream(patch, opts.scope);
    let text = format!(
        "v{}|d={}|H={}|eps={}|h={}|ell={ell}|alpha={:?}|beta={:?}|sampler={sampler}|M={}|mf={}|p={:?}|r={}|floor={:?}|obj={}|kind={}|scope={}|crn={}|noresp={}|seed={seed}|patch={}|stream={stream:?}",
        env!("CARGO_PKG_VERSION"),
        spec.dim(),
        spec.log(Level::Coarse),
        spec.log(Level::Eps),
        spec.log(Level::Fine),
        law.alpha,
        law.beta,
        cfg.samples,
        cfg.m_factor,
        cfg.p,
        cfg.r,
        cfg.threshold_floor,
        cfg.objective.as_str(),
        opts.source.as_str(),
        opts.scope.as_str(),
        opts.common_random_numbers,
        opts.skip_responses,
        patch.center(),
    );
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn path(dir: &Path, center: usize) -> PathBuf {
    dir.join(format!("patch_{center}.csv"))
}

pub fn store(dir: &Path, basis: &LocalBasis, hash: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut s = String::new();
    let _ = writeln!(s, "config_hash,{hash}");
    let _ = writeln!(s, "kind,{}", basis.kind.as_str());
    let _ = writeln!(s, "center,{}", basis.center);
    let _ = writeln!(s, "sigma_t,{:?}", basis.sigma_t);
    let _ = writeln!(s, "sigma_raw,{:?}", basis.sigma_raw);
    let _ = writeln!(s, "rayleigh,{:?}", basis.rayleigh);
    let _ = writeln!(s, "candidates,{}", basis.candidates);
    let _ = writeln!(s, "samples,{}", basis.response.count);
    let _ = writeln!(s, "element,g,mean,m2");
    for (i, k) in basis.elements.iter().enumerate() {
        let _ = writeln!(
            s,
            "{k},{:?},{:?},{:?}",
            basis.source.values[i], basis.response.mean[i], basis.response.m2[i]
        );
    }
    let tmp = path(dir, basis.center).with_extension("csv.tmp");
    std::fs::write(&tmp, s)?;
    std::fs::rename(tmp, path(dir, basis.center))?;
    Ok(())
}

fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, name: &str) -> Result<&'a str> {
    let line = lines.next().ok_or_else(|| Error::Cache(format!("missing '{name}'")))?;
    line.strip_prefix(name)
        .and_then(|r| r.strip_prefix(','))
        .ok_or_else(|| Error::Cache(format!("expected '{name}', found '{line}'")))
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Cache(format!("bad number '{s}'")))
}

/// Loads a cached basis. `Ok(None)` when no file exists; an error when the
/// file is unreadable or was written for a different configuration.
pub fn load(dir: &Path, center: usize, hash: &str) -> Result<Option<LocalBasis>> {
    let p = path(dir, center);
    let text = match std::fs::read_to_string(&p) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut lines = text.lines();
    let stored = field(&mut lines, "config_hash")?;
    if stored != hash {
        return Err(Error::Cache(format!("config hash mismatch in {}", p.display())));
    }
    let kind = field(&mut lines, "kind")?.parse()?;
    let c: usize = num(field(&mut lines, "center")?)?;
    if c != center {
        return Err(Error::Cache(format!("center mismatch in {}", p.display())));
    }
    let sigma_t = num(field(&mut lines, "sigma_t")?)?;
    let sigma_raw = num(field(&mut lines, "sigma_raw")?)?;
    let rayleigh = num(field(&mut lines, "rayleigh")?)?;
    let candidates = num(field(&mut lines, "candidates")?)?;
    let count = num(field(&mut lines, "samples")?)?;
    if lines.next() != Some("element,g,mean,m2") {
        return Err(Error::Cache("missing table header".into()));
    }
    let (mut elements, mut g, mut mean, mut m2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Cache(format!("bad row '{line}'")));
        }
        elements.push(num(cols[0])?);
        g.push(num(cols[1])?);
        mean.push(num(cols[2])?);
        m2.push(num(cols[3])?);
    }
    Ok(Some(LocalBasis {
        center,
        kind,
        elements,
        source: LocalSourceTerm { center, values: g, normalized: true },
        sigma_t,
        sigma_raw,
        rayleigh,
        candidates,
        response: MeanResponse { mean, m2, count },
    }))
}
