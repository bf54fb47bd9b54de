//! Run configuration: defaults, optional sectioned config file, flag
//! overrides. Unknown keys in the config file are rejected.

use std::path::Path;

use gbs_core::kernels::KernelConfig;
use gbs_core::samplers::McmcOptions;
use gbs_core::textcfg;

use crate::errors::AppError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdealSampler {
    Auto,
    Enumerate,
    Chain,
    Mcmc,
}

impl std::str::FromStr for IdealSampler {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(IdealSampler::Auto),
            "enum" | "enumerate" => Ok(IdealSampler::Enumerate),
            "chain" => Ok(IdealSampler::Chain),
            "mcmc" => Ok(IdealSampler::Mcmc),
            other => Err(format!("unknown ideal sampler '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    pub mcmc: McmcOptions,
    pub ideal_sampler: IdealSampler,
    /// Click band for hypothesis comparisons; None derives one from the data.
    pub band: Option<(usize, usize)>,
    pub curve_bins: usize,
    pub curve_reference: u64,
    /// Batch size for the heavy-output trajectories.
    pub hog_samples: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernel: KernelConfig::default(),
            mcmc: McmcOptions::default(),
            ideal_sampler: IdealSampler::Auto,
            band: None,
            curve_bins: 50,
            curve_reference: 4000,
            hog_samples: 200,
        }
    }
}

impl RunConfig {
    /// Load from an optional config file, then apply flag overrides.
    pub fn resolve(
        config_path: Option<&Path>,
        kernel_max_clicks: Option<usize>,
        band_flag: Option<&str>,
    ) -> Result<Self, AppError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)?;
            cfg.apply_file(&text)?;
        }
        if let Some(maxc) = kernel_max_clicks {
            cfg.kernel.max_clicks = maxc;
        }
        if let Some(band) = band_flag {
            cfg.band = Some(parse_band(band)?);
        }
        Ok(cfg)
    }

    fn apply_file(&mut self, text: &str) -> Result<(), AppError> {
        for section in textcfg::parse(text)? {
            match section.name.as_str() {
                "kernels" => {
                    if let Some(v) = section.parse::<usize>("max_clicks")? {
                        self.kernel.max_clicks = v;
                    }
                    if let Some(v) = section.parse::<usize>("chunks")? {
                        self.kernel.chunks = v;
                    }
                    if let Some(v) = section.parse::<bool>("gray_order")? {
                        self.kernel.gray_order = v;
                    }
                    section.finish()?;
                }
                "sampler" => {
                    if let Some(v) = section.parse::<u64>("burn_in")? {
                        self.mcmc.burn_in = v;
                    }
                    if let Some(v) = section.parse::<u64>("thinning")? {
                        self.mcmc.thinning = v;
                    }
                    if let Some(v) = section.parse::<String>("ideal")? {
                        self.ideal_sampler =
                            v.parse().map_err(AppError::Config)?;
                    }
                    section.finish()?;
                }
                "validation" => {
                    if let Some(v) = section.parse::<String>("band")? {
                        self.band = Some(parse_band(&v)?);
                    }
                    if let Some(v) = section.parse::<usize>("bins")? {
                        self.curve_bins = v;
                    }
                    if let Some(v) = section.parse::<u64>("curve_reference")? {
                        self.curve_reference = v;
                    }
                    if let Some(v) = section.parse::<u64>("hog_samples")? {
                        self.hog_samples = v;
                    }
                    section.finish()?;
                }
                other => {
                    return Err(AppError::config(format!(
                        "unknown config section [{other}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parse "LO..HI" (also accepts "LO-HI" and "LO HI").
pub fn parse_band(s: &str) -> Result<(usize, usize), AppError> {
    let normalized = s.replace("..", " ").replace('-', " ").replace(',', " ");
    let parts: Vec<&str> = normalized.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(AppError::config(format!(
            "click band must look like LO..HI, got '{s}'"
        )));
    }
    let lo: usize = parts[0]
        .parse()
        .map_err(|_| AppError::config(format!("bad band bound '{}'", parts[0])))?;
    let hi: usize = parts[1]
        .parse()
        .map_err(|_| AppError::config(format!("bad band bound '{}'", parts[1])))?;
    if lo > hi {
        return Err(AppError::config(format!("empty click band {lo}..{hi}")));
    }
    Ok((lo, hi))
}
