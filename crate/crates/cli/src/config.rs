//! Layered run configuration: defaults, then config file, then environment,
//! then command-line flags. Every run dumps the fully resolved result next
//! to its outputs so it can be replayed byte-for-byte.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use warpeval_core::bias::{dataset_profile, ReferenceDataset};
use warpeval_core::metrics::VoidPolicy;
use warpeval_core::tps::{BorderMode, WarpConfig};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the worker count (flags still win).
pub const WORKERS_ENV: &str = "WARPEVAL_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolConfig {
    pub schema_version: u32,
    /// Root seed; every per-file draw derives a child seed from it.
    pub seed: u64,
    pub warp: WarpSection,
    pub perturb: PerturbSection,
    pub eval: EvalSection,
    pub io: IoSection,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            warp: WarpSection::default(),
            perturb: PerturbSection::default(),
            eval: EvalSection::default(),
            io: IoSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WarpSection {
    pub n_keypoints: usize,
    pub tau: f64,
    pub max_shift: f64,
    pub lambda_reg: f64,
    pub border: BorderChoice,
}

impl Default for WarpSection {
    fn default() -> Self {
        let d = WarpConfig::default();
        Self {
            n_keypoints: d.n_keypoints,
            tau: d.tau,
            max_shift: d.max_shift,
            lambda_reg: d.lambda_reg,
            border: BorderChoice::Clamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BorderChoice {
    #[default]
    Clamp,
    IgnoreFill,
}

impl From<BorderChoice> for BorderMode {
    fn from(c: BorderChoice) -> Self {
        match c {
            BorderChoice::Clamp => BorderMode::Clamp,
            BorderChoice::IgnoreFill => BorderMode::IgnoreFill,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbSection {
    /// Fill value of the constant scheme.
    pub c0: f64,
    /// Blur width; when absent it comes from `profile` (or 25.0).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    /// Dataset whose bundled blur width to use: coco-stuff, ade20k,
    /// cityscapes, or custom (custom requires an explicit sigma0).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    /// Include the lognormal scheme when running all schemes. An explicit
    /// `--scheme lognormal` always runs it.
    pub lognormal: bool,
}

impl Default for PerturbSection {
    fn default() -> Self {
        Self {
            c0: 0.0,
            sigma0: None,
            profile: None,
            lognormal: true,
        }
    }
}

impl PerturbSection {
    /// Blur width after profile resolution: explicit sigma0 wins, then the
    /// named dataset's bundled value, then 25.0.
    pub fn resolved_sigma0(&self) -> Result<f64> {
        if let Some(sigma0) = self.sigma0 {
            return Ok(sigma0);
        }
        match self.profile.as_deref() {
            None => Ok(25.0),
            Some("custom") => {
                bail!("perturb profile \"custom\" requires an explicit perturb.sigma0")
            }
            Some(name) => {
                let dataset: ReferenceDataset = name.parse()?;
                Ok(dataset_profile(dataset)?.sigma0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Class count; derived from the inputs when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ignore_id: Option<u8>,
    /// Bias threshold factor.
    pub delta: f64,
    pub void_policy: VoidChoice,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            n_classes: None,
            ignore_id: None,
            delta: 2.0 / 3.0,
            void_policy: VoidChoice::Reject,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VoidChoice {
    #[default]
    Reject,
    CountAsMiss,
}

impl From<VoidChoice> for VoidPolicy {
    fn from(c: VoidChoice) -> Self {
        match c {
            VoidChoice::Reject => VoidPolicy::Reject,
            VoidChoice::CountAsMiss => VoidPolicy::CountAsMiss,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    /// Worker threads; 0 picks the runtime default. Never affects output
    /// bytes, only wall time.
    pub workers: usize,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonOpts {
    /// Configuration file (TOML); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread override (also settable via WARPEVAL_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

impl ToolConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ToolConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            bail!(
                "{}: config schema version {} unsupported (expected {CONFIG_SCHEMA_VERSION})",
                path.display(),
                cfg.schema_version
            );
        }
        Ok(cfg)
    }

    /// Defaults, overlaid by the config file and the shared flags.
    pub fn resolve(common: &CommonOpts) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = common.workers {
            cfg.io.workers = workers;
        } else if let Ok(raw) = std::env::var(WORKERS_ENV) {
            cfg.io.workers = raw
                .parse()
                .with_context(|| format!("{WORKERS_ENV}={raw:?} is not a worker count"))?;
        }
        Ok(cfg)
    }

    /// Write the resolved configuration into `dir` for replayable runs.
    pub fn write_effective(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("effective_config.toml");
        let text = toml::to_string_pretty(self).context("serializing effective config")?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn warp_config(&self, seed: u64) -> WarpConfig {
        WarpConfig {
            n_keypoints: self.warp.n_keypoints,
            tau: self.warp.tau,
            max_shift: self.warp.max_shift,
            lambda_reg: self.warp.lambda_reg,
            seed,
            border: self.warp.border.into(),
        }
    }
}

/// Run `f` on a pool sized by the configuration.
pub fn with_worker_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(f))
}
