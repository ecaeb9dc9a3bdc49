//! Line-oriented `key = value` sweep files.
//!
//! ```text
//! # OP against RIS size
//! axis = ris_elements
//! values = 80, 105, 125
//! tx_power_dbm = 15
//! grid_n1 = 4
//! grid_n2 = 4
//! mc_trials = 1000000
//! ```
//!
//! Text after `#` is ignored. Every key may appear at most once and unknown
//! keys are rejected. Omitted keys keep their defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Axis, SweepSpec};
use crate::channel::SystemConfig;
use crate::geometry::PortGrid;
use crate::montecarlo::McRun;

/// Recognized keys with their units, in help order.
pub const CONFIG_KEYS: [(&str, &str); 23] = [
    ("axis", "tx_power_dbm | ris_elements | ports_n | aperture_w | bandwidth_hz | data_bits"),
    ("values", "comma-separated axis values, strictly monotone"),
    ("series", "label for the series column"),
    ("output_path", "CSV destination"),
    ("seed", "master seed (integer)"),
    ("mc_trials", "Monte Carlo trials per point; omit to skip simulation"),
    ("mc_batch", "Monte Carlo trials per block"),
    ("rqmc_samples", "lattice points per randomization"),
    ("rqmc_randomizations", "independent randomizations"),
    ("tx_power_dbm", "transmit power, dBm"),
    ("noise_dbm", "noise power, dBm"),
    ("pathloss_exp", "path-loss exponent, > 2"),
    ("d_bs_ris_m", "BS to RIS distance, m"),
    ("d_ris_mu_m", "RIS to user distance, m"),
    ("ris_elements", "RIS elements M"),
    ("grid_n1", "ports along the first axis"),
    ("grid_n2", "ports along the second axis"),
    ("grid_w1", "aperture length along the first axis, wavelengths"),
    ("grid_w2", "aperture length along the second axis, wavelengths"),
    ("snr_threshold_db", "SNR threshold, dB"),
    ("delay_threshold_s", "delay threshold, s"),
    ("data_bits", "payload, bits"),
    ("bandwidth_hz", "bandwidth, Hz"),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: `{key}`: {message}")]
    Key {
        line: usize,
        key: String,
        message: String,
    },

    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<SweepSpec, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut entries: HashMap<&str, (usize, &str)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let err = |message: String| ConfigError::Key {
            line,
            key: key.to_string(),
            message,
        };
        if !CONFIG_KEYS.iter().any(|(k, _)| *k == key) {
            return Err(err("unknown key".into()));
        }
        if value.is_empty() {
            return Err(err("missing value".into()));
        }
        if let Some((first, _)) = entries.insert(key, (line, value)) {
            return Err(err(format!("duplicate key (first set on line {first})")));
        }
    }
    build(&entries)
}

type Entries<'a> = HashMap<&'a str, (usize, &'a str)>;

fn key_error(entries: &Entries, key: &str, message: String) -> ConfigError {
    ConfigError::Key {
        line: entries[key].0,
        key: key.to_string(),
        message,
    }
}

fn real(entries: &Entries, key: &str) -> Result<Option<f64>, ConfigError> {
    let Some(&(_, v)) = entries.get(key) else {
        return Ok(None);
    };
    v.parse::<f64>()
        .map(Some)
        .map_err(|_| key_error(entries, key, format!("`{v}` is not a number")))
}

fn integer(entries: &Entries, key: &str) -> Result<Option<u64>, ConfigError> {
    let Some(&(_, v)) = entries.get(key) else {
        return Ok(None);
    };
    v.parse::<u64>()
        .map(Some)
        .map_err(|_| key_error(entries, key, format!("`{v}` is not a non-negative integer")))
}

fn build(entries: &Entries) -> Result<SweepSpec, ConfigError> {
    let axis = match entries.get("axis") {
        None => return Err(invalid("axis", "required key is missing")),
        Some(&(_, name)) => Axis::from_name(name).ok_or_else(|| {
            key_error(entries, "axis", format!("`{name}` is not a sweep axis"))
        })?,
    };
    let values = match entries.get("values") {
        None => return Err(invalid("values", "required key is missing")),
        Some(&(_, list)) => list
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .map_err(|_| key_error(entries, "values", format!("`{t}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?,
    };

    let mut base = SystemConfig::default();
    let reals: [(&str, &mut f64); 9] = [
        ("tx_power_dbm", &mut base.tx_power_dbm),
        ("noise_dbm", &mut base.noise_dbm),
        ("pathloss_exp", &mut base.pathloss_exp),
        ("d_bs_ris_m", &mut base.d_bs_ris_m),
        ("d_ris_mu_m", &mut base.d_ris_mu_m),
        ("snr_threshold_db", &mut base.snr_threshold_db),
        ("delay_threshold_s", &mut base.delay_threshold_s),
        ("data_bits", &mut base.data_bits),
        ("bandwidth_hz", &mut base.bandwidth_hz),
    ];
    for (key, slot) in reals {
        if let Some(v) = real(entries, key)? {
            *slot = v;
        }
    }
    if let Some(m) = integer(entries, "ris_elements")? {
        base.ris_elements = m as usize;
    }
    let g = base.grid;
    let n1 = integer(entries, "grid_n1")?.map_or(g.n1(), |v| v as usize);
    let n2 = integer(entries, "grid_n2")?.map_or(g.n2(), |v| v as usize);
    let w1 = real(entries, "grid_w1")?.unwrap_or(g.w1());
    let w2 = real(entries, "grid_w2")?.unwrap_or(g.w2());
    base.grid = PortGrid::new(n1, n2, w1, w2).map_err(|e| invalid("grid", e.to_string()))?;
    base.validate().map_err(|e| invalid(config_key_of(&e.to_string()), e.to_string()))?;

    let mut spec = SweepSpec::new(base, axis, values);
    if let Some(&(_, s)) = entries.get("series") {
        spec.series = s.to_string();
    }
    if let Some(&(_, p)) = entries.get("output_path") {
        spec.output_path = Some(PathBuf::from(p));
    }
    if let Some(n) = integer(entries, "rqmc_samples")? {
        spec.rqmc.samples = n as usize;
    }
    if let Some(n) = integer(entries, "rqmc_randomizations")? {
        spec.rqmc.randomizations = n as usize;
    }
    let seed = integer(entries, "seed")?.unwrap_or(spec.rqmc.seed);
    spec.rqmc.seed = seed;
    if let Some(trials) = integer(entries, "mc_trials")? {
        let mut run = McRun::new(trials, seed);
        if let Some(b) = integer(entries, "mc_batch")? {
            run.batch = b;
        }
        run.validate()
            .map_err(|e| invalid(if run.batch == 0 { "mc_batch" } else { "mc_trials" }, e.to_string()))?;
        spec.mc = Some(run);
    } else if entries.contains_key("mc_batch") {
        return Err(key_error(entries, "mc_batch", "requires mc_trials".into()));
    }
    spec.rqmc
        .validate()
        .map_err(|e| invalid("rqmc_samples", e.to_string()))?;
    spec.validate().map_err(|e| invalid("values", e.to_string()))?;
    Ok(spec)
}

/// The config key a validation message names, for error attribution.
fn config_key_of(message: &str) -> &'static str {
    CONFIG_KEYS
        .iter()
        .map(|(k, _)| *k)
        .find(|k| message.contains(k))
        .unwrap_or("config")
}
