//! Optional TOML configuration. Precedence: command-line flag, then config
//! file, then built-in default.
//!
//! Recognised keys (all optional, top level):
//! `clamp_eps`, `band_lo`, `band_hi`, `kappa`, `d_over_l`, `symmetry_order`,
//! `n_eff_exponent`, `window_size`, `window_stride`, `mask_sigma_frac`,
//! `info_floor`, `envelope_window`, `seed`, `seeds`, `dims`, `blob_count`,
//! `noise_to_signal`, `band_ratio`, `band_limit_tol`, `corner_tol`,
//! `apodization_margin`, `apodization_tol`.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub clamp_eps: Option<f64>,
    pub band_lo: Option<f64>,
    pub band_hi: Option<f64>,
    pub kappa: Option<f64>,
    pub d_over_l: Option<f64>,
    pub symmetry_order: Option<u32>,
    pub n_eff_exponent: Option<f64>,
    pub window_size: Option<usize>,
    pub window_stride: Option<usize>,
    pub mask_sigma_frac: Option<f64>,
    pub info_floor: Option<f64>,
    pub envelope_window: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<usize>,
    pub dims: Option<usize>,
    pub blob_count: Option<usize>,
    pub noise_to_signal: Option<f64>,
    pub band_ratio: Option<f64>,
    pub band_limit_tol: Option<f64>,
    pub corner_tol: Option<f64>,
    pub apodization_margin: Option<f64>,
    pub apodization_tol: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Flag value if given, else config value, else default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick::<i32>(None, None, 3), 3);
    }

    #[test]
    fn parses_known_keys_and_rejects_unknown() {
        let c = Config::parse("clamp_eps = 1e-6\nwindow_size = 18\n").unwrap();
        assert_eq!(c.clamp_eps, Some(1e-6));
        assert_eq!(c.window_size, Some(18));
        assert!(Config::parse("nonsense = 1\n").is_err());
    }
}
