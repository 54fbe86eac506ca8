//! Optional JSON config file. Keys mirror the long flag names with dashes
//! replaced by underscores; a flag given on the command line always wins.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub loss: Option<f64>,
    pub latency: Option<u64>,
    pub noise: Option<f64>,
    pub attenuation: Option<f64>,
    pub pir_at: Option<u64>,
    pub no_pir: Option<bool>,
    pub pir_timeout: Option<u64>,
    pub window: Option<usize>,
    pub debounce: Option<usize>,
    pub appliance: Option<String>,
    pub on: Option<PathBuf>,
    pub off: Option<PathBuf>,
    pub margin_lo: Option<i64>,
    pub margin_hi: Option<i64>,
    pub noise_min: Option<f64>,
    pub noise_max: Option<f64>,
    pub points: Option<usize>,
    pub bits: Option<usize>,
    pub kind: Option<String>,
    pub samples: Option<usize>,
    pub name: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
