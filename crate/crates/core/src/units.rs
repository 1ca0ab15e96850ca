//! Decibel conversions and physical constants shared by the link-budget and
//! rate code.

/// log2(e), the nats-to-bits factor.
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise power spectral density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// dBm to watts.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Watts to dBm.
#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// Noise power spectral density in W/Hz for a receiver with the given noise figure.
#[inline]
pub fn noise_psd_w_per_hz(noise_figure_db: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_HZ + noise_figure_db)
}
