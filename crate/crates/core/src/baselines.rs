//! Reference rates for comparison with the pilot-based optimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::siso::{self, PowerDensity};
use crate::units::LOG2_E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    CsirInfiniteBw,
    CsirFiniteBw,
    PeakyFsk,
    NonPeakyMi,
    MiLowerBound,
    PilotPowerBoost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateUnit {
    #[serde(rename = "bit/s")]
    BitsPerSecond,
    #[serde(rename = "bit/s/Hz")]
    BitsPerSecondPerHz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineRate {
    pub scheme: Scheme,
    pub rate: f64,
    pub unit: RateUnit,
    /// The formula went negative and was clamped to zero.
    #[serde(default)]
    pub clamped: bool,
}

impl BaselineRate {
    fn bps(scheme: Scheme, rate: f64) -> Self {
        BaselineRate { scheme, rate, unit: RateUnit::BitsPerSecond, clamped: false }
    }

    fn se(scheme: Scheme, rate: f64) -> Self {
        BaselineRate { scheme, rate, unit: RateUnit::BitsPerSecondPerHz, clamped: false }
    }
}

/// Bandwidth argument of [`csir_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Infinite,
    Hz(f64),
}

/// Capacity with perfect receiver CSI. The infinite-bandwidth limit is
/// `Pr/N0 log2(e)`; at finite `W` it is `W E[log2(1 + rho |h|^2)]`.
pub fn csir_rate(pd: PowerDensity, w: Bandwidth, fading: &FadingModel) -> Result<BaselineRate> {
    match w {
        Bandwidth::Infinite => Ok(BaselineRate::bps(Scheme::CsirInfiniteBw, pd.get() * LOG2_E)),
        Bandwidth::Hz(w_hz) => {
            if !(w_hz.is_finite() && w_hz > 0.0) {
                return Err(Error::domain(format!("bandwidth {w_hz} Hz must be finite and > 0")));
            }
            let r = w_hz * fading.expected_log1p(pd.snr_at(w_hz))? * LOG2_E;
            Ok(BaselineRate::bps(Scheme::CsirFiniteBw, r))
        }
    }
}

/// Duty-cycled infinite-bandwidth FSK: `(1 - 1/Lc) Pr/N0 log2(e)`.
pub fn peaky_fsk_rate(pd: PowerDensity, lc: f64) -> Result<BaselineRate> {
    if !(lc.is_finite() && lc >= 1.0) {
        return Err(Error::domain(format!("coherence length {lc} must be >= 1")));
    }
    Ok(BaselineRate::bps(Scheme::PeakyFsk, (1.0 - 1.0 / lc) * pd.get() * LOG2_E))
}

/// Relative penalty `sqrt(kappa ln(pi) ln(Lc) / Lc)` of non-peaky signaling.
///
/// Both logarithms are natural; a base-2 reading would change the curve.
pub fn non_peaky_mi_penalty(lc: f64, kappa: f64) -> f64 {
    (kappa * std::f64::consts::PI.ln() * lc.ln() / lc).sqrt()
}

/// Non-peaky mutual-information rate `(1 - penalty) Pr/N0 log2(e)`, clamped at zero.
pub fn non_peaky_mi_rate(pd: PowerDensity, lc: f64, fading: &FadingModel) -> Result<BaselineRate> {
    if !(lc.is_finite() && lc >= 1.0) {
        return Err(Error::domain(format!("coherence length {lc} must be >= 1")));
    }
    let factor = 1.0 - non_peaky_mi_penalty(lc, fading.kurtosis());
    let mut out = BaselineRate::bps(Scheme::NonPeakyMi, factor.max(0.0) * pd.get() * LOG2_E);
    out.clamped = factor < 0.0;
    Ok(out)
}

/// `log2(1 + rho) - log2(1 + rho Lc) / Lc`, bits/s/Hz.
pub fn mi_lower_bound_se(rho: f64, lc: f64) -> Result<BaselineRate> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::domain(format!("snr {rho} must be finite and >= 0")));
    }
    if !(lc.is_finite() && lc >= 1.0) {
        return Err(Error::domain(format!("coherence length {lc} must be >= 1")));
    }
    let se = (rho.ln_1p() - (rho * lc).ln_1p() / lc) * LOG2_E;
    Ok(BaselineRate::se(Scheme::MiLowerBound, se.max(0.0)))
}

/// Pilot and data SNRs when a single pilot symbol carries the pilot energy:
/// `rho_pilot = alpha Lc rho`, `rho_data = (1 - alpha) rho Lc / (Lc - 1)`.
pub fn boosted_snrs(rho: f64, alpha: f64, lc: f64) -> (f64, f64) {
    (alpha * lc * rho, (1.0 - alpha) * rho * lc / (lc - 1.0))
}

/// Spectral efficiency with one boosted pilot per block, bits/s/Hz.
pub fn pilot_power_boost_se(
    rho: f64,
    alpha: f64,
    lc: f64,
    fading: &FadingModel,
) -> Result<BaselineRate> {
    siso::effective_snr(rho, alpha, lc)?;
    let (rp, rd) = boosted_snrs(rho, alpha, lc);
    let s = rd * (rp / (1.0 + rp)) / (1.0 + rd / (1.0 + rp));
    let se = (1.0 - 1.0 / lc) * fading.expected_log1p(s)? * LOG2_E;
    Ok(BaselineRate::se(Scheme::PilotPowerBoost, se))
}
