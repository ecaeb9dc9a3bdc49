//! Decibel conversions. Public configuration is in dB/dBm; all math is linear.

use std::f64::consts::LN_10;

/// `10^(x/10)`.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    (db * LN_10 / 10.0).exp()
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Natural log of the linear value, exact for dB values far outside `f64` range.
#[inline]
pub fn db_to_ln(db: f64) -> f64 {
    db * LN_10 / 10.0
}

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(3.0) - 1.995_262_314_968_879_6).abs() < 1e-15);
        assert!((db_to_linear(-120.0) / 1e-12 - 1.0).abs() < 1e-14);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(15.0) - 0.031_622_776_601_683_79).abs() < 1e-16);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
        assert!((db_to_ln(135.0) - 135.0 * LN_10 / 10.0).abs() == 0.0);
    }

    #[test]
    fn round_trip() {
        for k in -200..200 {
            let db = k as f64 * 0.7;
            assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-11);
        }
    }
}
