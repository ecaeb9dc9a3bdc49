//! Sweeps reproducing the published figure families.
//!
//! `fig2*` sweep transmit power, `fig3*` the port count, aperture and RIS
//! size, `fig4*` bandwidth and payload. Each preset is a list of series
//! sharing one axis.

use super::{Axis, SweepSpec};
use crate::channel::SystemConfig;
use crate::geometry::PortGrid;

pub const PRESETS: [&str; 10] = [
    "fig2a", "fig2b", "fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4b", "fig4c", "fig4d",
];

fn config(m: usize, side: usize, area: f64) -> SystemConfig {
    let w = area.sqrt();
    SystemConfig {
        ris_elements: m,
        grid: PortGrid::new(side, side, w, w).expect("preset grid"),
        ..Default::default()
    }
}

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Series over `(M, N)` at a 1x1 wavelength aperture.
fn by_ports(axis: Axis, values: &[f64], cases: &[(usize, usize)]) -> Vec<SweepSpec> {
    cases
        .iter()
        .map(|&(m, side)| {
            SweepSpec::new(config(m, side, 1.0), axis, values.to_vec())
                .with_series(format!("M={m} N={}", side * side))
        })
        .collect()
}

/// Series over `(M, W)` with 25 ports.
fn by_aperture(axis: Axis, values: &[f64], cases: &[(usize, f64)]) -> Vec<SweepSpec> {
    cases
        .iter()
        .map(|&(m, area)| {
            SweepSpec::new(config(m, 5, area), axis, values.to_vec())
                .with_series(format!("M={m} W={area}"))
        })
        .collect()
}

/// Series for a named preset, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<Vec<SweepSpec>> {
    let power = range(0.0, 14.0, 2.0);
    let ris = range(80.0, 125.0, 5.0);
    let bandwidth = range(0.5e6, 4e6, 0.5e6);
    let bits = range(1000.0, 6000.0, 1000.0);
    let mn = [(105, 2), (125, 2), (105, 4), (125, 4)];
    let mw = [(105, 1.0), (125, 1.0), (105, 9.0), (125, 9.0)];
    let specs = match name {
        "fig2a" => by_ports(Axis::TxPowerDbm, &power, &mn),
        "fig2b" => by_aperture(Axis::TxPowerDbm, &power, &mw),
        "fig3a" => by_ports(Axis::PortsN, &[1.0, 4.0, 9.0, 16.0, 25.0], &[(105, 1), (125, 1)]),
        "fig3b" => by_aperture(Axis::ApertureW, &range(1.0, 9.0, 1.0), &[(105, 1.0), (125, 1.0)]),
        "fig3c" => by_ports(Axis::RisElements, &ris, &[(125, 2), (125, 4)]),
        "fig3d" => by_aperture(Axis::RisElements, &ris, &[(125, 1.0), (125, 9.0)]),
        "fig4a" => by_ports(Axis::BandwidthHz, &bandwidth, &mn),
        "fig4b" => by_aperture(Axis::BandwidthHz, &bandwidth, &mw),
        "fig4c" => by_ports(Axis::DataBits, &bits, &mn),
        "fig4d" => by_aperture(Axis::DataBits, &bits, &mw),
        _ => return None,
    };
    Some(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in PRESETS {
            let specs = preset(name).unwrap();
            assert!(!specs.is_empty());
            let axis = specs[0].axis;
            for s in &specs {
                assert_eq!(s.axis, axis, "{name}");
                s.validate().unwrap_or_else(|e| panic!("{name}/{}: {e}", s.series));
            }
        }
        assert!(preset("fig5a").is_none());
    }

    #[test]
    fn ranges_are_exact() {
        assert_eq!(range(0.0, 14.0, 2.0).len(), 8);
        assert_eq!(*range(0.5e6, 4e6, 0.5e6).last().unwrap(), 4e6);
    }
}
