//! Run configuration: flat `key = value` files, overridable from the CLI.
//!
//! ```text
//! # comments start with '#'
//! qp = 24, 28, 32, 36, 40
//! flavors = baseline, epm_om
//! tau = 4
//! epm.max_scale = 2
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::codec::{CodecConfig, MergeFlavor};
use crate::pipeline::{PipelineParams, DEFAULT_NORMAL_K};
use crate::projection::{ProjectionParams, SurfaceThickness};
use crate::{Error, Result};

/// Geometry QPs of the five common-test-condition rate points.
pub const CTC_GEOMETRY_QPS: [u8; 5] = [32, 28, 24, 20, 16];

/// Encoder tool combination under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    Baseline,
    Epm,
    Om,
    NonOm,
    EpmOm,
}

impl Flavor {
    pub const ALL: [Flavor; 5] = [Flavor::Baseline, Flavor::Epm, Flavor::Om, Flavor::NonOm, Flavor::EpmOm];

    pub fn name(self) -> &'static str {
        match self {
            Flavor::Baseline => "baseline",
            Flavor::Epm => "epm",
            Flavor::Om => "om",
            Flavor::NonOm => "non_om",
            Flavor::EpmOm => "epm_om",
        }
    }

    pub fn epm_rdo(self) -> bool {
        matches!(self, Flavor::Epm | Flavor::EpmOm)
    }

    pub fn merge(self) -> MergeFlavor {
        match self {
            Flavor::Om | Flavor::EpmOm => MergeFlavor::Om,
            Flavor::NonOm => MergeFlavor::NonOm,
            Flavor::Baseline | Flavor::Epm => MergeFlavor::Baseline,
        }
    }

    pub fn apply(self, cfg: &CodecConfig) -> CodecConfig {
        CodecConfig {
            epm_rdo: self.epm_rdo(),
            merge: self.merge(),
            ..cfg.clone()
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '+'], "_");
        Self::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .ok_or_else(|| format!("unknown flavor `{s}` (baseline, epm, om, non_om, epm_om)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub qps: Vec<u8>,
    pub flavors: Vec<Flavor>,
    pub tau: u16,
    pub frame_width: usize,
    pub bit_depth: u8,
    pub lambda_c: f64,
    pub min_cu: usize,
    pub epm_max_scale: f64,
    pub min_patch_size: usize,
    pub normal_k: usize,
    pub peak_factor: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let codec = CodecConfig::default();
        let proj = ProjectionParams::default();
        Self {
            qps: CTC_GEOMETRY_QPS.to_vec(),
            flavors: Flavor::ALL.to_vec(),
            tau: proj.tau.0,
            frame_width: proj.frame_width,
            bit_depth: codec.bit_depth,
            lambda_c: codec.lambda_c,
            min_cu: codec.min_cu,
            epm_max_scale: codec.epm.max_scale,
            min_patch_size: proj.min_patch_size,
            normal_k: DEFAULT_NORMAL_K,
            peak_factor: crate::metrics::DEFAULT_PEAK_FACTOR,
            seed: 7,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Parses `key = value` lines; later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "qp" | "qps" => self.qps = parse_list(key, value)?,
            "flavor" | "flavors" => {
                self.flavors = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(Error::Config))
                    .collect::<Result<_>>()?
            }
            "tau" => self.tau = parse(key, value)?,
            "frame_width" => self.frame_width = parse(key, value)?,
            "bit_depth" => self.bit_depth = parse(key, value)?,
            "lambda_c" => self.lambda_c = parse(key, value)?,
            "min_cu" => self.min_cu = parse(key, value)?,
            "epm.max_scale" | "epm_max_scale" => self.epm_max_scale = parse(key, value)?,
            "min_patch_size" => self.min_patch_size = parse(key, value)?,
            "normal_k" => self.normal_k = parse(key, value)?,
            "metrics.peak_factor" | "peak_factor" => self.peak_factor = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_str_config(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_key_values(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_str_config(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.qps.is_empty() {
            return Err(Error::Config("qp list is empty".into()));
        }
        if self.flavors.is_empty() {
            return Err(Error::Config("flavor list is empty".into()));
        }
        for &qp in &self.qps {
            self.codec(Flavor::Baseline, qp).validate()?;
        }
        if self.normal_k < 3 {
            return Err(Error::Config("normal_k must be at least 3".into()));
        }
        if !(self.peak_factor > 0.0) {
            return Err(Error::Config("peak_factor must be positive".into()));
        }
        Ok(())
    }

    pub fn codec(&self, flavor: Flavor, qp: u8) -> CodecConfig {
        let mut cfg = CodecConfig {
            qp,
            tau: SurfaceThickness(self.tau),
            lambda_c: self.lambda_c,
            min_cu: self.min_cu,
            bit_depth: self.bit_depth,
            ..Default::default()
        };
        cfg.epm.max_scale = self.epm_max_scale;
        flavor.apply(&cfg)
    }

    pub fn pipeline(&self, flavor: Flavor, qp: u8) -> PipelineParams {
        PipelineParams {
            projection: ProjectionParams {
                tau: SurfaceThickness(self.tau),
                frame_width: self.frame_width,
                min_patch_size: self.min_patch_size,
            },
            codec: self.codec(flavor, qp),
            normal_k: self.normal_k,
            peak_factor: self.peak_factor,
        }
    }
}
