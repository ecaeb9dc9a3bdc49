//! CSV records and gnuplot companion scripts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::Axis;
use crate::error::{Error, Result};
use crate::metrics::SweepRecord;

/// Header row, in column order.
pub const CSV_COLUMNS: [&str; 40] = [
    "axis",
    "op",
    "op_se",
    "dor",
    "dor_se",
    "mc_op",
    "mc_op_lo",
    "mc_op_hi",
    "mc_dor",
    "mc_dor_lo",
    "mc_dor_hi",
    "mc_op_hits",
    "mc_dor_hits",
    "mc_trials",
    "log10_op",
    "op_rel_se",
    "log10_dor",
    "dor_rel_se",
    "tas_op",
    "tas_dor",
    "log10_tas_op",
    "log10_tas_dor",
    "series",
    "axis_name",
    "tx_power_dbm",
    "noise_dbm",
    "pathloss_exp",
    "d_bs_ris_m",
    "d_ris_mu_m",
    "ris_elements",
    "grid_n1",
    "grid_n2",
    "grid_w1",
    "grid_w2",
    "snr_threshold_db",
    "delay_threshold_s",
    "data_bits",
    "bandwidth_hz",
    "clt_warning",
    "error",
];

/// 17 significant digits; parses back to the same `f64`.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn row(r: &SweepRecord, axis_name: &str) -> Vec<String> {
    let c = &r.config;
    let ln10 = std::f64::consts::LN_10;
    let int = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
    vec![
        real(r.axis_value),
        opt(r.op.map(|e| e.value)),
        opt(r.op.map(|e| e.std_error)),
        opt(r.dor.map(|e| e.value)),
        opt(r.dor.map(|e| e.std_error)),
        opt(r.mc_op.map(|m| m.value)),
        opt(r.mc_op.map(|m| m.ci_low)),
        opt(r.mc_op.map(|m| m.ci_high)),
        opt(r.mc_dor.map(|m| m.value)),
        opt(r.mc_dor.map(|m| m.ci_low)),
        opt(r.mc_dor.map(|m| m.ci_high)),
        int(r.mc_op.map(|m| m.hits)),
        int(r.mc_dor.map(|m| m.hits)),
        int(r.mc_op.or(r.mc_dor).map(|m| m.trials)),
        opt(r.op.map(|e| e.log10())),
        opt(r.op.map(|e| e.relative_error())),
        opt(r.dor.map(|e| e.log10())),
        opt(r.dor.map(|e| e.relative_error())),
        opt(r.tas.map(|t| t.op)),
        opt(r.tas.map(|t| t.dor)),
        opt(r.tas.map(|t| t.ln_op / ln10)),
        opt(r.tas.map(|t| t.ln_dor / ln10)),
        r.series.clone(),
        axis_name.to_string(),
        real(c.tx_power_dbm),
        real(c.noise_dbm),
        real(c.pathloss_exp),
        real(c.d_bs_ris_m),
        real(c.d_ris_mu_m),
        c.ris_elements.to_string(),
        c.grid.n1().to_string(),
        c.grid.n2().to_string(),
        real(c.grid.w1()),
        real(c.grid.w2()),
        real(c.snr_threshold_db),
        real(c.delay_threshold_s),
        real(c.data_bits),
        real(c.bandwidth_hz),
        u8::from(r.clt_warning).to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

/// Writes the header and one row per record; `axis` fills `axis_name`.
pub fn write_csv<W: Write>(records: &[SweepRecord], axis: Axis, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in records {
        w.write_record(row(r, axis.name())).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn emit_csv(records: &[SweepRecord], axis: Axis, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if records.is_empty() {
        return Err(Error::InvalidConfig("no records to write".into()));
    }
    let with_path = |e: Error| Error::Io(format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(|e| with_path(Error::Io(e.to_string())))?;
    write_csv(records, axis, BufWriter::new(file)).map_err(with_path)
}

/// Gnuplot script plotting `log10` of the axis metric, one line per series,
/// with the fixed-antenna baseline dashed.
pub fn plot_script(records: &[SweepRecord], axis: Axis, csv_file: &str, title: &str) -> String {
    let metric = if axis.plots_dor() { "dor" } else { "op" };
    let mut series: Vec<&str> = Vec::new();
    for r in records {
        if !series.contains(&r.series.as_str()) {
            series.push(&r.series);
        }
    }
    let png = csv_file.strip_suffix(".csv").unwrap_or(csv_file);
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{png}.png'\n"));
    s.push_str(&format!("set title '{}'\n", title.replace('\'', "")));
    s.push_str(&format!("set xlabel '{}'\n", axis.name()));
    s.push_str(&format!("set ylabel 'log10 {metric}'\n"));
    s.push_str("set key outside right\nset grid\n");
    let mut clauses = Vec::new();
    for (i, name) in series.iter().enumerate() {
        let name = name.replace('\'', "");
        let pick = |col: &str| {
            format!("(strcol('series') eq '{name}' ? column('{col}') : NaN)")
        };
        clauses.push(format!(
            "'{csv_file}' using 'axis':{} with linespoints lc {} title '{name}'",
            pick(&format!("log10_{metric}")),
            i + 1
        ));
        clauses.push(format!(
            "'{csv_file}' using 'axis':{} with lines dt 2 lc {} title '{name} TAS'",
            pick(&format!("log10_tas_{metric}")),
            i + 1
        ));
    }
    s.push_str("plot ");
    s.push_str(&clauses.join(", \\\n     "));
    s.push('\n');
    s
}
