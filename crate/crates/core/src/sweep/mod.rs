//! One-axis parameter sweeps, their configuration files and CSV output.

mod config;
mod output;
mod presets;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::SystemConfig;
use crate::copula::RqmcOptions;
use crate::error::{Error, Result};
use crate::geometry::{PortGrid, Regularization, SpatialCorrelation};
use crate::metrics::{delay_outage_rate, outage_probability, tas_baseline, SweepRecord};
use crate::montecarlo::{simulate_dor, simulate_op, McRun};

pub use config::{parse_config, parse_config_str, ConfigError, CONFIG_KEYS};
pub use output::{emit_csv, plot_script, write_csv, CSV_COLUMNS};
pub use presets::{preset, PRESETS};

/// The swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    TxPowerDbm,
    RisElements,
    /// Total port count `N`; must be a perfect square (square grid).
    PortsN,
    /// Aperture area in square wavelengths; the aperture stays square.
    ApertureW,
    BandwidthHz,
    DataBits,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::TxPowerDbm,
        Axis::RisElements,
        Axis::PortsN,
        Axis::ApertureW,
        Axis::BandwidthHz,
        Axis::DataBits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::TxPowerDbm => "tx_power_dbm",
            Axis::RisElements => "ris_elements",
            Axis::PortsN => "ports_n",
            Axis::ApertureW => "aperture_w",
            Axis::BandwidthHz => "bandwidth_hz",
            Axis::DataBits => "data_bits",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Delay outage is the natural metric for the rate axes, outage otherwise.
    pub fn plots_dor(self) -> bool {
        matches!(self, Axis::BandwidthHz | Axis::DataBits)
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = base.clone();
        match self {
            Axis::TxPowerDbm => c.tx_power_dbm = value,
            Axis::RisElements => c.ris_elements = positive_integer(self, value)?,
            Axis::PortsN => {
                let n = positive_integer(self, value)?;
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    return Err(Error::InvalidConfig(format!(
                        "ports_n = {n} is not a perfect square"
                    )));
                }
                let g = &base.grid;
                c.grid = PortGrid::new(side, side, g.w1(), g.w2())?;
            }
            Axis::ApertureW => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "aperture_w = {value} must be a positive area"
                    )));
                }
                let side = value.sqrt();
                c.grid = PortGrid::new(base.grid.n1(), base.grid.n2(), side, side)?;
            }
            Axis::BandwidthHz => c.bandwidth_hz = value,
            Axis::DataBits => c.data_bits = value,
        }
        c.validate()?;
        Ok(c)
    }
}

fn positive_integer(axis: Axis, value: f64) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value < 1e9 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidConfig(format!(
            "{} = {value} must be a positive integer",
            axis.name()
        )))
    }
}

/// A base configuration swept along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Label written to the `series` column.
    pub series: String,
    pub base: SystemConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub mc: Option<McRun>,
    pub rqmc: RqmcOptions,
    pub output_path: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(base: SystemConfig, axis: Axis, values: Vec<f64>) -> Self {
        Self {
            series: axis.name().to_string(),
            base,
            axis,
            values,
            mc: None,
            rqmc: RqmcOptions::default(),
            output_path: None,
        }
    }

    pub fn with_series(self, series: impl Into<String>) -> Self {
        Self {
            series: series.into(),
            ..self
        }
    }

    /// Master seed for both the integrator and the simulator.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rqmc.seed = seed;
        if let Some(mc) = &mut self.mc {
            mc.seed = seed;
        }
        self
    }

    pub fn with_mc(mut self, trials: u64) -> Self {
        let batch = self.mc.map_or(McRun::new(trials, 0).batch, |m| m.batch);
        self.mc = Some(McRun::new(trials, self.rqmc.seed).with_batch(batch));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("values must not be empty".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("values contains {v}")));
        }
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidConfig("values must be strictly monotone".into()));
        }
        self.rqmc.validate()?;
        if let Some(mc) = &self.mc {
            mc.validate()?;
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed used for point `index` of a sweep with master seed `seed`.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    mix(mix(seed) ^ index as u64)
}

/// Evaluates one configuration. Failures are recorded in `error`; whatever
/// succeeded before the failure is kept.
pub fn evaluate_point(
    series: &str,
    axis_value: f64,
    config: SystemConfig,
    rqmc: &RqmcOptions,
    mc: Option<&McRun>,
) -> SweepRecord {
    let mut rec = empty_record(series, axis_value, config);
    if let Err(e) = fill_point(&mut rec, rqmc, mc) {
        rec.error = Some(e.to_string());
    }
    rec
}

fn empty_record(series: &str, axis_value: f64, config: SystemConfig) -> SweepRecord {
    SweepRecord {
        series: series.to_string(),
        axis_value,
        config,
        op: None,
        dor: None,
        tas: None,
        mc_op: None,
        mc_dor: None,
        clt_warning: false,
        error: None,
    }
}

fn fill_point(rec: &mut SweepRecord, rqmc: &RqmcOptions, mc: Option<&McRun>) -> Result<()> {
    let c = &rec.config;
    c.validate()?;
    let tas = tas_baseline(c)?;
    rec.clt_warning = !tas.clt_reliable;
    rec.tas = Some(tas);
    let corr = SpatialCorrelation::build(&c.grid, Regularization::default())?;
    rec.op = Some(outage_probability(c, &corr, rqmc)?);
    rec.dor = Some(delay_outage_rate(c, &corr, rqmc)?);
    if let Some(run) = mc {
        rec.mc_op = Some(simulate_op(c, &corr, run)?);
        rec.mc_dor = Some(simulate_dor(c, &corr, run)?);
    }
    Ok(())
}

/// Progress callback: `(finished points, total points, record)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize, &SweepRecord) + Sync);

/// Evaluates every point; records come back in axis order.
///
/// Point `i` uses `point_seed(seed, i)` for the integrator and the simulator,
/// so results do not depend on scheduling.
pub fn run_sweep_with(spec: &SweepSpec, progress: Progress<'_>) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let total = spec.values.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let records = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let seed = point_seed(spec.rqmc.seed, i);
            let rqmc = spec.rqmc.with_seed(seed);
            let mc = spec.mc.map(|m| McRun { seed, ..m });
            let rec = match spec.axis.apply(&spec.base, v) {
                Ok(config) => evaluate_point(&spec.series, v, config, &rqmc, mc.as_ref()),
                Err(e) => SweepRecord {
                    error: Some(e.to_string()),
                    ..empty_record(&spec.series, v, spec.base.clone())
                },
            };
            let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(k, total, &rec);
            rec
        })
        .collect();
    Ok(records)
}

/// `run_sweep_with` reporting each finished point on standard error.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    let start = Instant::now();
    let axis = spec.axis.name();
    run_sweep_with(spec, &|k, total, rec| {
        let status = match (&rec.error, &rec.op) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(op)) => format!("log10 op = {:.3}", op.log10()),
            (None, None) => String::new(),
        };
        eprintln!(
            "[{}] {k}/{total} {axis} = {} {status} ({:.1} s)",
            rec.series,
            rec.axis_value,
            start.elapsed().as_secs_f64()
        );
    })
}

/// Runs several series back to back and concatenates their records.
pub fn run_series(specs: &[SweepSpec]) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::new();
    for s in specs {
        out.extend(run_sweep(s)?);
    }
    Ok(out)
}
