//! Beam-switching links with antenna arrays at either or both ends.
//!
//! The transmitter sweeps `Kt` candidate beams with pilots and the receiver
//! feeds back the hottest one. The mean gain of that beam, `G1`, is available
//! both while estimating and while sending data; receive combining adds `G2`
//! during data only. Substituting `rho~ = G1 G2 rho` and `Lc~ = Lc / (Kt G2)`
//! turns the problem back into the single-antenna one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::siso::{
    self, ClosedForm, CoherenceBlock, CoherenceLength, OperatingPoint, PowerDensity, Warning,
};
use crate::units::{linear_to_db, LOG2_E};

/// How `(Kt, G1, G2)` are derived from the antenna counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GainModel {
    /// Gains set directly.
    #[default]
    Explicit,
    /// Highly directional channel: `G1 = Kt = Nt Nr`, `G2 = 1`.
    IdealDirectional,
    /// i.i.d. channel matrix: `G1 = Nt + Nr`, `Kt = Nt Nr`, `G2 = 1`.
    RichScattering,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    nt: u32,
    nr: u32,
    kt: u32,
    g1: f64,
    g2: f64,
    gain_model: GainModel,
}

impl ArrayConfig {
    pub fn siso() -> Self {
        ArrayConfig { nt: 1, nr: 1, kt: 1, g1: 1.0, g2: 1.0, gain_model: GainModel::Explicit }
    }

    /// Arbitrary gains; `1 <= G1 <= Nt Nr` and `1 <= G2 <= Nr`.
    pub fn explicit(nt: u32, nr: u32, kt: u32, g1: f64, g2: f64) -> Result<Self> {
        if nt == 0 || nr == 0 || kt == 0 {
            return Err(Error::domain("antenna and beam counts must be >= 1"));
        }
        let full = nt as f64 * nr as f64;
        if !(g1 >= 1.0 && g1 <= full * (1.0 + 1e-12)) {
            return Err(Error::domain(format!("G1 = {g1} must lie in [1, Nt*Nr = {full}]")));
        }
        if !(g2 >= 1.0 && g2 <= nr as f64 * (1.0 + 1e-12)) {
            return Err(Error::domain(format!("G2 = {g2} must lie in [1, Nr = {nr}]")));
        }
        Ok(ArrayConfig { nt, nr, kt, g1, g2, gain_model: GainModel::Explicit })
    }

    pub fn ideal_directional(nt: u32, nr: u32) -> Result<Self> {
        let n = nt * nr;
        let mut cfg = Self::explicit(nt, nr, n, n as f64, 1.0)?;
        cfg.gain_model = GainModel::IdealDirectional;
        Ok(cfg)
    }

    pub fn rich_scattering(nt: u32, nr: u32) -> Result<Self> {
        let mut cfg = Self::explicit(nt, nr, nt * nr, (nt + nr).min(nt * nr) as f64, 1.0)?;
        cfg.gain_model = GainModel::RichScattering;
        Ok(cfg)
    }

    /// Receive array only: every channel is estimated from the same pilots.
    pub fn simo(nr: u32, g: f64) -> Result<Self> {
        Self::explicit(1, nr, 1, 1.0, g)
    }

    /// Transmit array with beam switching over `kt` beams of mean gain `g`.
    pub fn miso(nt: u32, kt: u32, g: f64) -> Result<Self> {
        Self::explicit(nt, 1, kt, g, 1.0)
    }

    /// Builds from a gain model; `Explicit` takes `(kt, g1, g2)` from the arguments.
    pub fn from_model(model: GainModel, nt: u32, nr: u32, kt: u32, g1: f64, g2: f64) -> Result<Self> {
        match model {
            GainModel::Explicit => Self::explicit(nt, nr, kt, g1, g2),
            GainModel::IdealDirectional => Self::ideal_directional(nt, nr),
            GainModel::RichScattering => Self::rich_scattering(nt, nr),
        }
    }

    pub fn nt(&self) -> u32 {
        self.nt
    }

    pub fn nr(&self) -> u32 {
        self.nr
    }

    pub fn kt(&self) -> u32 {
        self.kt
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn g2(&self) -> f64 {
        self.g2
    }

    pub fn gain_model(&self) -> GainModel {
        self.gain_model
    }

    /// `G1 G2`, the SNR scaling of the data stage.
    pub fn combined_gain(&self) -> f64 {
        self.g1 * self.g2
    }

    /// `Kt G2`, the factor by which the sweep shortens the coherence length.
    pub fn sweep_cost(&self) -> f64 {
        self.kt as f64 * self.g2
    }
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self::siso()
    }
}

/// The single-antenna problem equivalent to a beam-switching link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstitutedProblem {
    /// `G1 G2`; `rho~ = snr_scale * rho`.
    pub snr_scale: f64,
    /// `Kt G2`.
    pub sweep_cost: f64,
    pub lc_tilde: CoherenceLength,
}

impl SubstitutedProblem {
    pub fn rho_tilde(&self, rho: f64) -> f64 {
        self.snr_scale * rho
    }
}

/// `Lc~ = Lc / (Kt G2)`; fails when the sweep leaves fewer than two symbols.
pub fn substitute(cfg: &ArrayConfig, lc: f64) -> Result<SubstitutedProblem> {
    let lc_tilde = lc / cfg.sweep_cost();
    if !(lc_tilde >= 2.0 * (1.0 - 1e-9)) {
        return Err(Error::CoherenceExhausted(lc_tilde));
    }
    Ok(SubstitutedProblem {
        snr_scale: cfg.combined_gain(),
        sweep_cost: cfg.sweep_cost(),
        lc_tilde: CoherenceLength::new(lc_tilde)?,
    })
}

/// Effective data SNR of the selected beam:
/// `G2 (G1 rho)^2 alpha Lc/Kt / (1 + (G2 + alpha Lc/Kt) G1 rho)`.
pub fn effective_snr_mimo(rho: f64, alpha: f64, lc: f64, cfg: &ArrayConfig) -> Result<f64> {
    siso::effective_snr(rho, alpha, lc)?;
    let per_beam = alpha * lc / cfg.kt as f64;
    let g1r = cfg.g1 * rho;
    Ok(cfg.g2 * g1r * g1r * per_beam / (1.0 + (cfg.g2 + per_beam) * g1r))
}

/// Rate of the beam-switching link at bandwidth `w_hz` and pilot ratio `alpha`.
pub fn rate_mimo(
    pd: PowerDensity,
    w_hz: f64,
    alpha: f64,
    lc: f64,
    cfg: &ArrayConfig,
    fading: &FadingModel,
) -> Result<f64> {
    if !(w_hz.is_finite() && w_hz > 0.0) {
        return Err(Error::domain(format!("bandwidth {w_hz} Hz must be finite and > 0")));
    }
    let s = effective_snr_mimo(pd.snr_at(w_hz), alpha, lc, cfg)?;
    Ok((1.0 - alpha) * w_hz * fading.expected_log1p(s)? * LOG2_E)
}

/// Continuous optimum of a beam-switching link.
///
/// `pd` is referenced to a single element pair, so the returned `rho` is the
/// per-antenna SNR; `G1 G2 rho` is the post-beamforming SNR.
pub fn solve_mimo(
    pd: PowerDensity,
    cb: &CoherenceBlock,
    cfg: &ArrayConfig,
    fading: &FadingModel,
) -> Result<OperatingPoint> {
    let sub = substitute(cfg, cb.lc())?;
    let sol = siso::solve_snr(sub.lc_tilde, fading)?;
    let rho = sol.rho / sub.snr_scale;
    let alpha = sol.alpha;
    let w_hz = pd.get() / rho;
    let mut op = OperatingPoint {
        w_hz,
        alpha,
        rho,
        rho_eff: effective_snr_mimo(rho, alpha, cb.lc(), cfg)?,
        rate_bps: rate_mimo(pd, w_hz, alpha, cb.lc(), cfg, fading)?,
        pilots: None,
        warnings: Vec::new(),
    };
    if sol.lattice_only {
        op.warnings.push(Warning::LatticeOnly);
    }
    Ok(op)
}

/// `rho* ~ (4 Kt G2 / Lc)^(1/3) / (G1 G2)`, `alpha* ~ (Kt G2 / 2 Lc)^(1/3)`,
/// rate factor `(1 - (4 Kt G2 / Lc)^(1/3)) G1 G2 log2(e)`.
pub fn closed_form_mimo(cfg: &ArrayConfig, lc: f64) -> Result<ClosedForm> {
    let sub = substitute(cfg, lc)?;
    let base = siso::closed_form_first_order(sub.lc_tilde);
    Ok(ClosedForm {
        rho: base.rho / sub.snr_scale,
        alpha: base.alpha,
        rate_factor: base.rate_factor * sub.snr_scale,
    })
}

/// Post-beamforming SNR `G1 G2 rho` in dB.
pub fn gain_snr_db(op: &OperatingPoint, cfg: &ArrayConfig) -> f64 {
    linear_to_db(cfg.combined_gain() * op.rho)
}

/// Rate-maximizing lattice neighbor of a beam-switching optimum.
///
/// Bandwidth is rounded to multiples of `Bc`. Pilots stay on the original
/// block: every beam gets the same integer count, so the total is `Kt * p`
/// with `p` the floor or ceiling of `alpha Lc / Kt`.
pub fn discretize_mimo(
    op: &OperatingPoint,
    cb: &CoherenceBlock,
    cfg: &ArrayConfig,
    pd: PowerDensity,
    fading: &FadingModel,
) -> Result<OperatingPoint> {
    let kt = cfg.kt as u64;
    let lc = cb.lc();
    let max_total = cb.coherence_length().max_pilots();
    if kt > max_total {
        return Err(Error::CoherenceExhausted(lc / cfg.sweep_cost()));
    }
    let p_max = max_total / kt;
    let mw = op.w_hz / cb.bc();
    let invalid = mw < 1.0;
    let mut ms = vec![(mw.floor() as u64).max(1)];
    if !invalid && mw.ceil() != mw.floor() {
        ms.push(mw.ceil() as u64);
    }
    let per_beam = op.alpha * lc / kt as f64;
    let mut ps = vec![(per_beam.floor() as u64).clamp(1, p_max)];
    let up = (per_beam.ceil() as u64).clamp(1, p_max);
    if up != ps[0] {
        ps.push(up);
    }
    let mut best: Option<OperatingPoint> = None;
    for &m in &ms {
        for &p in &ps {
            let n = p * kt;
            let w_hz = m as f64 * cb.bc();
            let alpha = n as f64 / lc;
            let rho = pd.snr_at(w_hz);
            let rate_bps = rate_mimo(pd, w_hz, alpha, lc, cfg, fading)?;
            if best.as_ref().is_none_or(|b| rate_bps > b.rate_bps) {
                best = Some(OperatingPoint {
                    w_hz,
                    alpha,
                    rho,
                    rho_eff: effective_snr_mimo(rho, alpha, lc, cfg)?,
                    rate_bps,
                    pilots: Some(n),
                    warnings: Vec::new(),
                });
            }
        }
    }
    let mut out = best.expect("at least one lattice neighbor");
    out.warnings = op.warnings.clone();
    if invalid && !out.has_warning(Warning::RelaxationInvalid) {
        out.warnings.push(Warning::RelaxationInvalid);
    }
    Ok(out)
}

/// Best per-beam pilot count at fixed bandwidth. Returns the total pilot
/// count `Kt * p` and the rate.
pub fn best_pilots_mimo(
    pd: PowerDensity,
    w_hz: f64,
    cb: &CoherenceBlock,
    cfg: &ArrayConfig,
    fading: &FadingModel,
) -> Result<(u64, f64)> {
    let sub = substitute(cfg, cb.lc())?;
    let kt = cfg.kt as u64;
    let lc = cb.lc();
    let p_max = (cb.coherence_length().max_pilots() / kt).max(1);
    let eval = |p: u64| rate_mimo(pd, w_hz, (p * kt) as f64 / lc, lc, cfg, fading);
    let a = siso::optimal_alpha_at_snr(sub.rho_tilde(pd.snr_at(w_hz)), sub.lc_tilde.get(), fading)?;
    let mut p = ((a * lc / kt as f64).floor() as u64).clamp(1, p_max);
    let mut best = eval(p)?;
    for step in [1i64, -1] {
        loop {
            let next = p as i64 + step;
            if next < 1 || next as u64 > p_max {
                break;
            }
            let r = eval(next as u64)?;
            if r > best {
                best = r;
                p = next as u64;
            } else {
                break;
            }
        }
    }
    Ok((p * kt, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_model_encodings() {
        let i = ArrayConfig::ideal_directional(16, 4).unwrap();
        assert_eq!((i.kt(), i.g1(), i.g2()), (64, 64.0, 1.0));
        let r = ArrayConfig::rich_scattering(16, 4).unwrap();
        assert_eq!((r.kt(), r.g1(), r.g2()), (64, 20.0, 1.0));
        let s = ArrayConfig::simo(4, 4.0).unwrap();
        assert_eq!((s.kt(), s.g1(), s.g2()), (1, 1.0, 4.0));
        assert!(ArrayConfig::explicit(2, 2, 1, 5.0, 1.0).is_err());
        assert!(ArrayConfig::explicit(2, 2, 1, 1.0, 3.0).is_err());
        assert!(ArrayConfig::explicit(0, 2, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn substitution_examples() {
        let siso = substitute(&ArrayConfig::siso(), 5e4).unwrap();
        assert_eq!(siso.lc_tilde.get(), 5e4);
        let miso = substitute(&ArrayConfig::miso(64, 64, 64.0).unwrap(), 5e4).unwrap();
        assert_eq!(miso.lc_tilde.get(), 781.25);
        let both = substitute(&ArrayConfig::explicit(16, 4, 16, 16.0, 4.0).unwrap(), 5e4).unwrap();
        assert_eq!(both.lc_tilde.get(), 781.25);
        let err = substitute(&ArrayConfig::ideal_directional(64, 4).unwrap(), 300.0).unwrap_err();
        assert!(matches!(err, Error::CoherenceExhausted(_)));
    }

    #[test]
    fn ideal_closed_form() {
        let cfg = ArrayConfig::ideal_directional(16, 4).unwrap();
        let cf = closed_form_mimo(&cfg, 5e4).unwrap();
        assert!((cf.rho * 64.0 - (256.0f64 / 5e4).cbrt()).abs() < 1e-15);
        assert!((cf.alpha - (64.0f64 / 1e5).cbrt()).abs() < 1e-15);
        assert!((cf.rho * 64.0 - 0.1724).abs() < 1e-3);
        assert!((cf.alpha - 0.0862).abs() < 1e-3);
    }

    #[test]
    fn simo_closed_form() {
        let cf = closed_form_mimo(&ArrayConfig::simo(4, 4.0).unwrap(), 5e4).unwrap();
        assert!((cf.rho - (5e-6f64).cbrt()).abs() < 1e-15);
        assert!((cf.rho - 0.0171).abs() < 1e-4);
    }

    #[test]
    fn siso_config_reduces_to_siso_solver() {
        let pd = PowerDensity::new(1e8).unwrap();
        let cb = CoherenceBlock::new(5e-3, 1e7).unwrap();
        let f = FadingModel::Rayleigh;
        let a = solve_mimo(pd, &cb, &ArrayConfig::siso(), &f).unwrap();
        let b = siso::solve_continuous(pd, &cb, &f).unwrap();
        assert_eq!(a.rho, b.rho);
        assert_eq!(a.alpha, b.alpha);
        assert!((a.rate_bps / b.rate_bps - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mimo_lattice_pilots_are_per_beam_multiples() {
        let pd = PowerDensity::new(1e7).unwrap();
        let cb = CoherenceBlock::new(5e-3, 1e7).unwrap();
        let cfg = ArrayConfig::ideal_directional(16, 4).unwrap();
        let f = FadingModel::Deterministic;
        let op = solve_mimo(pd, &cb, &cfg, &f).unwrap();
        let d = discretize_mimo(&op, &cb, &cfg, pd, &f).unwrap();
        assert_eq!(d.pilots.unwrap() % 64, 0);
        assert!(d.rate_bps <= op.rate_bps * (1.0 + 1e-12));
        assert!(d.rate_bps > 0.99 * op.rate_bps);
    }

    #[test]
    fn fixed_bandwidth_pilots() {
        let pd = PowerDensity::new(1e8).unwrap();
        let cb = CoherenceBlock::new(5e-3, 1e7).unwrap();
        let f = FadingModel::Rayleigh;
        let a = best_pilots_mimo(pd, 1e9, &cb, &ArrayConfig::siso(), &f).unwrap();
        let b = siso::best_pilots(pd, 1e9, cb.coherence_length(), &f).unwrap();
        assert_eq!(a.0, b.0);
        assert!((a.1 / b.1 - 1.0).abs() < 1e-14);
        let cfg = ArrayConfig::ideal_directional(4, 2).unwrap();
        let (n, r) = best_pilots_mimo(pd, 1e9, &cb, &cfg, &f).unwrap();
        assert_eq!(n % 8, 0);
        for p in [n / 8 - 1, n / 8 + 1] {
            let other = rate_mimo(pd, 1e9, (p * 8) as f64 / cb.lc(), cb.lc(), &cfg, &f).unwrap();
            assert!(other <= r);
        }
    }
}
