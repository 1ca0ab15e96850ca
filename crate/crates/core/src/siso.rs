//! Single-antenna joint optimization of signaling bandwidth and pilot ratio.
//!
//! A link is described by its received power density `Pr/N0` (Hz) and a
//! coherence block of `Lc = Bc * Tc` symbols. Transmitting over bandwidth `W`
//! gives SNR `rho = (Pr/N0) / W`; a fraction `alpha` of every block is spent on
//! pilots and the rest carries data at the MMSE effective SNR.
//!
//! The optimum depends on `Pr/N0` only through `W* = (Pr/N0) / rho*`: the
//! optimal `(rho*, alpha*)` is a function of `Lc` and the fading model alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::units::LOG2_E;

/// Smallest coherence length that fits one pilot and one data symbol.
pub const LC_MIN: f64 = 2.0;

/// Residual bound certified by [`solve_snr`] for both optimality conditions.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Initial SNR bracket for the bisection; widened by decades when needed.
pub const SNR_BRACKET: (f64, f64) = (1e-6, 10.0);

/// Bisection stops once `hi - lo < SNR_REL_WIDTH * hi`.
pub const SNR_REL_WIDTH: f64 = 1e-10;

pub const MAX_BISECTIONS: usize = 200;

const LC_REL_SLACK: f64 = 1e-9;
const MAX_BRACKET_DECADES: usize = 40;

/// Coherence length `Lc`, guaranteed to be at least two.
///
/// Not required to be an integer: substituted beam-sweep problems produce
/// fractional lengths.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CoherenceLength(f64);

impl CoherenceLength {
    pub fn new(lc: f64) -> Result<Self> {
        if !lc.is_finite() {
            return Err(Error::domain(format!("coherence length {lc} is not finite")));
        }
        if lc < LC_MIN * (1.0 - LC_REL_SLACK) {
            return Err(Error::domain(format!(
                "coherence length {lc} < 2: no room for a pilot and a data symbol"
            )));
        }
        Ok(CoherenceLength(lc.max(LC_MIN)))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Largest integer pilot count that leaves at least one data symbol.
    pub fn max_pilots(self) -> u64 {
        ((self.0 - 1.0) * (1.0 + LC_REL_SLACK)).floor().max(1.0) as u64
    }

    /// True when the pilot lattice collapses to the single point `alpha = 1/2`.
    pub fn is_degenerate(self) -> bool {
        self.0 <= LC_MIN * (1.0 + LC_REL_SLACK)
    }
}

impl TryFrom<f64> for CoherenceLength {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        CoherenceLength::new(v)
    }
}

impl From<CoherenceLength> for f64 {
    fn from(v: CoherenceLength) -> f64 {
        v.0
    }
}

/// Time-frequency tile over which the channel stays constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceBlock {
    tc_s: f64,
    bc_hz: f64,
    lc: CoherenceLength,
}

impl CoherenceBlock {
    pub fn new(tc_s: f64, bc_hz: f64) -> Result<Self> {
        if !(tc_s.is_finite() && tc_s > 0.0) {
            return Err(Error::domain(format!("coherence time {tc_s} s must be > 0")));
        }
        if !(bc_hz.is_finite() && bc_hz > 0.0) {
            return Err(Error::domain(format!("coherence bandwidth {bc_hz} Hz must be > 0")));
        }
        let lc = CoherenceLength::new(tc_s * bc_hz)?;
        Ok(CoherenceBlock { tc_s, bc_hz, lc })
    }

    /// Block with the given coherence length and bandwidth.
    pub fn from_lc(lc: f64, bc_hz: f64) -> Result<Self> {
        if !(bc_hz.is_finite() && bc_hz > 0.0) {
            return Err(Error::domain(format!("coherence bandwidth {bc_hz} Hz must be > 0")));
        }
        Self::new(lc / bc_hz, bc_hz)
    }

    pub fn tc(&self) -> f64 {
        self.tc_s
    }

    pub fn bc(&self) -> f64 {
        self.bc_hz
    }

    pub fn lc(&self) -> f64 {
        self.lc.get()
    }

    pub fn coherence_length(&self) -> CoherenceLength {
        self.lc
    }
}

/// Received power over noise spectral density, `Pr/N0`, in Hz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerDensity(f64);

impl PowerDensity {
    pub fn new(pr_over_n0_hz: f64) -> Result<Self> {
        if !(pr_over_n0_hz.is_finite() && pr_over_n0_hz > 0.0) {
            return Err(Error::domain(format!(
                "power density {pr_over_n0_hz} Hz must be finite and > 0"
            )));
        }
        Ok(PowerDensity(pr_over_n0_hz))
    }

    pub fn from_db_hz(db_hz: f64) -> Result<Self> {
        Self::new(crate::units::db_to_linear(db_hz))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn db_hz(self) -> f64 {
        crate::units::linear_to_db(self.0)
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        Self::new(self.0 * factor)
    }

    /// SNR at bandwidth `w_hz`.
    pub fn snr_at(self, w_hz: f64) -> f64 {
        self.0 / w_hz
    }
}

impl TryFrom<f64> for PowerDensity {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        PowerDensity::new(v)
    }
}

impl From<PowerDensity> for f64 {
    fn from(v: PowerDensity) -> f64 {
        v.0
    }
}

/// Powers of the MMSE channel estimate and of its error; they sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationQuality {
    pub est_power: f64,
    pub err_power: f64,
}

impl EstimationQuality {
    /// Quality after `alpha * Lc` pilots at SNR `rho`.
    pub fn new(rho: f64, alpha: f64, lc: f64) -> Result<Self> {
        check_point(rho, alpha, lc)?;
        let p = alpha * lc * rho;
        Ok(EstimationQuality {
            est_power: p / (1.0 + p),
            err_power: 1.0 / (1.0 + p),
        })
    }
}

/// Non-fatal conditions attached to a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Warning {
    /// `Lc = 2`: only `alpha = 1/2` is feasible, the pilot ratio was not optimized.
    LatticeOnly,
    /// The continuous optimum lies below one coherence bandwidth; clamped to `W = Bc`.
    RelaxationInvalid,
    /// The best lattice point sits on the search boundary and the rate still grows beyond it.
    NotBracketed,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Warning::LatticeOnly => "lattice-only: Lc = 2 admits only alpha = 1/2",
            Warning::RelaxationInvalid => "relaxation invalid: W* below one coherence bandwidth",
            Warning::NotBracketed => "search range does not bracket the maximum",
        };
        f.write_str(s)
    }
}

/// Bandwidth, pilot ratio and the resulting SNRs and rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub w_hz: f64,
    pub alpha: f64,
    pub rho: f64,
    pub rho_eff: f64,
    pub rate_bps: f64,
    /// Integer pilot count per block for lattice points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilots: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl OperatingPoint {
    pub fn has_warning(&self, w: Warning) -> bool {
        self.warnings.contains(&w)
    }

    fn warn(&mut self, w: Warning) {
        if !self.has_warning(w) {
            self.warnings.push(w);
        }
    }
}

/// Residuals of the two necessary optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Bandwidth stationarity, proportional to dR/dW. Positive means more
    /// bandwidth would still help, i.e. `rho` is above its optimum.
    pub r_w: f64,
    /// `rho(alpha^2 Lc + 2 alpha - 1) - (1 - 3 alpha)`.
    pub r_alpha: f64,
}

/// Result of the bandwidth-free SNR problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSolution {
    pub rho: f64,
    pub alpha: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub lattice_only: bool,
}

/// First-order closed forms; `rate_factor * Pr/N0` approximates the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub rho: f64,
    pub alpha: f64,
    pub rate_factor: f64,
}

fn check_point(rho: f64, alpha: f64, lc: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::domain(format!("snr {rho} must be finite and > 0")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("pilot ratio {alpha} must lie in (0, 1)")));
    }
    CoherenceLength::new(lc)?;
    Ok(())
}

#[inline]
pub(crate) fn eff_snr(rho: f64, alpha: f64, lc: f64) -> f64 {
    let c = alpha * lc;
    c * rho * rho / (1.0 + (1.0 + c) * rho)
}

/// Effective SNR after MMSE estimation with `alpha * Lc` pilots:
/// `alpha Lc rho^2 / (1 + (1 + alpha Lc) rho)`.
pub fn effective_snr(rho: f64, alpha: f64, lc: f64) -> Result<f64> {
    check_point(rho, alpha, lc)?;
    Ok(eff_snr(rho, alpha, lc))
}

/// Achievable spectral efficiency `(1 - alpha) E[log2(1 + rho_eff |h|^2)]`, bits/s/Hz.
pub fn spectral_efficiency(rho: f64, alpha: f64, lc: f64, fading: &FadingModel) -> Result<f64> {
    check_point(rho, alpha, lc)?;
    let s = eff_snr(rho, alpha, lc);
    Ok((1.0 - alpha) * fading.expected_log1p(s)? * LOG2_E)
}

/// Achievable rate in bit/s at bandwidth `w_hz` and pilot ratio `alpha`.
pub fn rate(
    pd: PowerDensity,
    w_hz: f64,
    alpha: f64,
    cb: &CoherenceBlock,
    fading: &FadingModel,
) -> Result<f64> {
    rate_lc(pd, w_hz, alpha, cb.lc(), fading)
}

pub(crate) fn rate_lc(
    pd: PowerDensity,
    w_hz: f64,
    alpha: f64,
    lc: f64,
    fading: &FadingModel,
) -> Result<f64> {
    if !(w_hz.is_finite() && w_hz > 0.0) {
        return Err(Error::domain(format!("bandwidth {w_hz} Hz must be finite and > 0")));
    }
    Ok(w_hz * spectral_efficiency(pd.snr_at(w_hz), alpha, lc, fading)?)
}

fn residual_w(rho: f64, alpha: f64, lc: f64, fading: &FadingModel) -> Result<f64> {
    let c = alpha * lc;
    let d = 1.0 + (1.0 + c) * rho;
    let a = 2.0 + (1.0 + c) * rho;
    let s = c * rho * rho / d;
    Ok(fading.expected_log1p(s)? - a / d * fading.expected_snr_ratio(s)?)
}

#[inline]
fn residual_alpha(rho: f64, alpha: f64, lc: f64) -> f64 {
    rho * (alpha * alpha * lc + 2.0 * alpha - 1.0) - (1.0 - 3.0 * alpha)
}

/// Residuals of the bandwidth and pilot-ratio optimality conditions.
pub fn condition_residuals(
    rho: f64,
    alpha: f64,
    lc: f64,
    fading: &FadingModel,
) -> Result<Residuals> {
    check_point(rho, alpha, lc)?;
    Ok(Residuals {
        r_w: residual_w(rho, alpha, lc, fading)?,
        r_alpha: residual_alpha(rho, alpha, lc),
    })
}

#[inline]
fn alpha_of_rho(rho: f64, lc: f64) -> f64 {
    let b = 1.5 + rho;
    (1.0 + rho) / ((b * b + (1.0 + rho) * rho * lc).sqrt() + b)
}

/// Pilot ratio that zeroes `r_alpha` at SNR `rho`.
///
/// Uses the rationalized root `(1 + rho) / (sqrt((3/2 + rho)^2 + (1 + rho) rho Lc) + 3/2 + rho)`,
/// which has no cancellation as `rho -> 0`.
pub fn alpha_given_rho(rho: f64, lc: f64) -> Result<f64> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::domain(format!("snr {rho} must be finite and > 0")));
    }
    let lc = CoherenceLength::new(lc)?.get();
    Ok(alpha_of_rho(rho, lc))
}

/// Solves for `(rho*, alpha*)` at coherence length `lc`.
///
/// Bisects in `rho` on the sign of `r_w` along the curve `alpha(rho)`, then
/// certifies both residuals. At `Lc = 2` the pilot ratio is pinned to 1/2 and
/// only `r_w` is solved.
pub fn solve_snr(lc: CoherenceLength, fading: &FadingModel) -> Result<SnrSolution> {
    let l = lc.get();
    let lattice_only = lc.is_degenerate();
    let alpha_at = |rho: f64| if lattice_only { 0.5 } else { alpha_of_rho(rho, l) };
    let r_w = |rho: f64| residual_w(rho, alpha_at(rho), l, fading);

    let (mut lo, mut hi) = SNR_BRACKET;
    let mut widened = 0;
    while r_w(lo)? >= 0.0 {
        lo /= 10.0;
        widened += 1;
        if widened > MAX_BRACKET_DECADES {
            return Err(Error::solver(format!("no lower snr bracket found for Lc = {l}")));
        }
    }
    widened = 0;
    while r_w(hi)? <= 0.0 {
        hi *= 10.0;
        widened += 1;
        if widened > MAX_BRACKET_DECADES {
            return Err(Error::solver(format!("no upper snr bracket found for Lc = {l}")));
        }
    }

    let mut iterations = 0;
    while hi - lo >= SNR_REL_WIDTH * hi {
        if iterations == MAX_BISECTIONS {
            return Err(Error::solver(format!(
                "snr bisection did not converge in {MAX_BISECTIONS} iterations (Lc = {l})"
            )));
        }
        let mid = (lo * hi).sqrt();
        if r_w(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }

    let rho = (lo * hi).sqrt();
    let alpha = alpha_at(rho);
    let residuals = Residuals {
        r_w: residual_w(rho, alpha, l, fading)?,
        r_alpha: residual_alpha(rho, alpha, l),
    };
    let alpha_ok = lattice_only || residuals.r_alpha.abs() < RESIDUAL_TOLERANCE;
    if !alpha_ok || !(residuals.r_w.abs() < RESIDUAL_TOLERANCE) {
        return Err(Error::solver(format!(
            "optimality residuals not certified at Lc = {l}: r_w = {:e}, r_alpha = {:e}",
            residuals.r_w, residuals.r_alpha
        )));
    }
    Ok(SnrSolution {
        rho,
        alpha,
        residuals,
        iterations,
        lattice_only,
    })
}

/// Continuous-relaxation optimum of bandwidth and pilot ratio.
pub fn solve_continuous(
    pd: PowerDensity,
    cb: &CoherenceBlock,
    fading: &FadingModel,
) -> Result<OperatingPoint> {
    let sol = solve_snr(cb.coherence_length(), fading)?;
    let w_hz = pd.get() / sol.rho;
    let mut op = OperatingPoint {
        w_hz,
        alpha: sol.alpha,
        rho: sol.rho,
        rho_eff: eff_snr(sol.rho, sol.alpha, cb.lc()),
        rate_bps: w_hz * spectral_efficiency(sol.rho, sol.alpha, cb.lc(), fading)?,
        pilots: None,
        warnings: Vec::new(),
    };
    if sol.lattice_only {
        op.warn(Warning::LatticeOnly);
    }
    Ok(op)
}

/// `rho* ~ (4/Lc)^(1/3)`, `alpha* ~ (2 Lc)^(-1/3)`, rate `~ (1 - (4/Lc)^(1/3)) Pr/N0 log2(e)`.
pub fn closed_form_first_order(lc: CoherenceLength) -> ClosedForm {
    let l = lc.get();
    let rho = (4.0 / l).cbrt();
    ClosedForm {
        rho,
        alpha: (2.0 * l).cbrt().recip(),
        rate_factor: (1.0 - rho) * LOG2_E,
    }
}

/// Second-order corrected `(rho*, alpha*)`:
/// `rho ~ 2u + 1.5u^2`, `alpha ~ u + 0.625u^2` with `u = (2 Lc)^(-1/3)`.
pub fn closed_form_refined(lc: CoherenceLength) -> (f64, f64) {
    let u = (2.0 * lc.get()).cbrt().recip();
    (2.0 * u + 1.5 * u * u, u + 0.625 * u * u)
}

/// Derivative of the fixed-SNR rate in `alpha`, up to a positive factor.
fn alpha_slope(rho: f64, alpha: f64, lc: f64, fading: &FadingModel) -> Result<f64> {
    let c = alpha * lc;
    let d = 1.0 + (1.0 + c) * rho;
    let s = c * rho * rho / d;
    let gain = (1.0 - alpha) * (1.0 + rho) / (alpha * d);
    Ok(-fading.expected_log1p(s)? + gain * fading.expected_snr_ratio(s)?)
}

/// Rate-maximizing continuous pilot ratio at a fixed SNR.
pub fn optimal_alpha_at_snr(rho: f64, lc: f64, fading: &FadingModel) -> Result<f64> {
    optimal_alpha_bisect(rho, lc, fading, 1e-14, 0.0)
}

fn optimal_alpha_bisect(
    rho: f64,
    lc: f64,
    fading: &FadingModel,
    rel_width: f64,
    abs_width: f64,
) -> Result<f64> {
    check_point(rho, 0.5, lc)?;
    let (mut lo, mut hi) = (1e-12_f64, 1.0 - 1e-12);
    if alpha_slope(rho, lo, lc, fading)? <= 0.0 {
        return Ok(lo);
    }
    if alpha_slope(rho, hi, lc, fading)? >= 0.0 {
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo < rel_width * hi || hi - lo < abs_width {
            return Ok(0.5 * (lo + hi));
        }
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if alpha_slope(rho, mid, lc, fading)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::solver(format!("pilot-ratio bisection did not converge (rho = {rho}, Lc = {lc})")))
}

/// Best integer pilot count and its rate at fixed bandwidth.
pub fn best_pilots(
    pd: PowerDensity,
    w_hz: f64,
    lc: CoherenceLength,
    fading: &FadingModel,
) -> Result<(u64, f64)> {
    let l = lc.get();
    let n_max = lc.max_pilots();
    let eval = |n: u64| rate_lc(pd, w_hz, n as f64 / l, l, fading);
    if n_max == 1 {
        return Ok((1, eval(1)?));
    }
    // integer resolution is enough: the climb below settles the last step
    let a = optimal_alpha_bisect(pd.snr_at(w_hz), l, fading, 1e-14, 0.25 / l)?;
    let mut n = ((a * l).floor() as u64).clamp(1, n_max);
    let mut best = eval(n)?;
    // the rate is unimodal in n; climb from the floor of the continuous optimum
    for step in [1i64, -1] {
        loop {
            let next = n as i64 + step;
            if next < 1 || next as u64 > n_max {
                break;
            }
            let r = eval(next as u64)?;
            if r > best {
                best = r;
                n = next as u64;
            } else {
                break;
            }
        }
    }
    Ok((n, best))
}

/// Evaluates the lattice point `W = m Bc`, `alpha = n / Lc`.
pub fn lattice_point(
    pd: PowerDensity,
    cb: &CoherenceBlock,
    fading: &FadingModel,
    m: u64,
    n: u64,
) -> Result<OperatingPoint> {
    let lc = cb.lc();
    if m == 0 || n == 0 || n > cb.coherence_length().max_pilots() {
        return Err(Error::domain(format!("lattice point (m = {m}, n = {n}) outside Lc = {lc}")));
    }
    let w_hz = m as f64 * cb.bc();
    let alpha = n as f64 / lc;
    let rho = pd.snr_at(w_hz);
    Ok(OperatingPoint {
        w_hz,
        alpha,
        rho,
        rho_eff: eff_snr(rho, alpha, lc),
        rate_bps: rate_lc(pd, w_hz, alpha, lc, fading)?,
        pilots: Some(n),
        warnings: Vec::new(),
    })
}

fn clamp_pilots(x: f64, cb: &CoherenceBlock) -> u64 {
    (x.max(1.0) as u64).clamp(1, cb.coherence_length().max_pilots())
}

/// Nearest lattice point: `W` rounded to a multiple of `Bc`, `alpha Lc` to an integer.
pub fn round_to_lattice(
    op: &OperatingPoint,
    cb: &CoherenceBlock,
    pd: PowerDensity,
    fading: &FadingModel,
) -> Result<OperatingPoint> {
    let m = ((op.w_hz / cb.bc()).round() as u64).max(1);
    let n = clamp_pilots((op.alpha * cb.lc()).round(), cb);
    let mut out = lattice_point(pd, cb, fading, m, n)?;
    for &w in &op.warnings {
        out.warn(w);
    }
    if op.w_hz < cb.bc() {
        out.warn(Warning::RelaxationInvalid);
    }
    Ok(out)
}

/// Best of the (up to four) lattice neighbors of a continuous operating point.
pub fn discretize(
    op: &OperatingPoint,
    cb: &CoherenceBlock,
    pd: PowerDensity,
    fading: &FadingModel,
) -> Result<OperatingPoint> {
    let mw = op.w_hz / cb.bc();
    let invalid = mw < 1.0;
    let mut ms = vec![(mw.floor() as u64).max(1)];
    if !invalid && mw.ceil() != mw.floor() {
        ms.push(mw.ceil() as u64);
    }
    let na = op.alpha * cb.lc();
    let mut ns = vec![clamp_pilots(na.floor(), cb)];
    let hi = clamp_pilots(na.ceil(), cb);
    if hi != ns[0] {
        ns.push(hi);
    }
    let mut best: Option<OperatingPoint> = None;
    for &m in &ms {
        for &n in &ns {
            let cand = lattice_point(pd, cb, fading, m, n)?;
            if best.as_ref().is_none_or(|b| cand.rate_bps > b.rate_bps) {
                best = Some(cand);
            }
        }
    }
    let mut out = best.expect("at least one lattice neighbor");
    for &w in &op.warnings {
        out.warn(w);
    }
    if invalid {
        out.warn(Warning::RelaxationInvalid);
    }
    Ok(out)
}

fn best_in_column(
    pd: PowerDensity,
    cb: &CoherenceBlock,
    fading: &FadingModel,
    m: u64,
) -> Result<(u64, f64)> {
    let lc = cb.lc();
    let w_hz = m as f64 * cb.bc();
    let mut best = (0, f64::NEG_INFINITY);
    for n in 1..=cb.coherence_length().max_pilots() {
        let r = rate_lc(pd, w_hz, n as f64 / lc, lc, fading)?;
        if r > best.1 {
            best = (n, r);
        }
    }
    Ok(best)
}

/// Global maximizer over the full lattice `m in 1..=m_max`, `n in 1..=Lc-1`.
///
/// Columns are scanned in parallel; ties resolve to the smallest `m`, then `n`.
pub fn exhaustive_search(
    pd: PowerDensity,
    cb: &CoherenceBlock,
    fading: &FadingModel,
    m_max: u64,
) -> Result<OperatingPoint> {
    if m_max == 0 {
        return Err(Error::domain("exhaustive search needs m_max >= 1"));
    }
    let columns = (1..=m_max)
        .into_par_iter()
        .map(|m| best_in_column(pd, cb, fading, m).map(|b| (m, b)))
        .collect::<Result<Vec<_>>>()?;
    let (m, (n, r)) = columns
        .into_iter()
        .fold((0, (0, f64::NEG_INFINITY)), |acc, c| if c.1 .1 > acc.1 .1 { c } else { acc });
    let mut out = lattice_point(pd, cb, fading, m, n)?;
    if m == m_max && best_in_column(pd, cb, fading, m_max + 1)?.1 > r {
        out.warn(Warning::NotBracketed);
    }
    if cb.coherence_length().is_degenerate() {
        out.warn(Warning::LatticeOnly);
    }
    Ok(out)
}

/// A lattice bound comfortably past the continuous optimum.
pub fn default_m_max(op: &OperatingPoint, cb: &CoherenceBlock) -> u64 {
    ((2.0 * op.w_hz / cb.bc()).ceil() as u64).max(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lc(v: f64) -> CoherenceLength {
        CoherenceLength::new(v).unwrap()
    }

    #[test]
    fn coherence_block_checks() {
        let cb = CoherenceBlock::new(5e-3, 1e7).unwrap();
        assert!((cb.lc() - 5e4).abs() < 1e-6);
        assert!(CoherenceBlock::new(1e-7, 1e7).is_err());
        assert!(CoherenceBlock::new(-1.0, 1e7).is_err());
        assert!(CoherenceBlock::new(2e-7, 1e7).is_ok());
        assert_eq!(lc(5e4).max_pilots(), 49_999);
        assert_eq!(lc(2.0).max_pilots(), 1);
        assert_eq!(lc(2.5).max_pilots(), 1);
    }

    #[test]
    fn effective_snr_examples() {
        assert!((effective_snr(1.0, 0.5, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((effective_snr(0.1, 0.1, 100.0).unwrap() - 0.1 / 2.1).abs() < 1e-15);
        let hi = effective_snr(1e9, 0.5, 2.0).unwrap();
        assert!((hi / 5e8 - 1.0).abs() < 1e-8);
        assert!(effective_snr(0.0, 0.5, 2.0).is_err());
        assert!(effective_snr(1.0, 1.0, 2.0).is_err());
        assert!(effective_snr(1.0, 0.5, 1.5).is_err());
    }

    #[test]
    fn estimation_quality_sums_to_one() {
        let q = EstimationQuality::new(0.04, 0.02, 5e4).unwrap();
        assert!((q.est_power + q.err_power - 1.0).abs() < 1e-12);
        assert!((q.est_power - 40.0 / 41.0).abs() < 1e-12);
    }

    #[test]
    fn rate_example() {
        let pd = PowerDensity::new(1e6).unwrap();
        let cb = CoherenceBlock::from_lc(2.0, 1e6).unwrap();
        let r = rate(pd, 1e6, 0.5, &cb, &FadingModel::Deterministic).unwrap();
        assert!((r / (0.5e6 * (4.0f64 / 3.0).log2()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_pinned_by_lc_three() {
        for &rho in &[1e-3, 0.3, 1.0, 42.0] {
            let a = alpha_given_rho(rho, 3.0).unwrap();
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
            assert!(residual_alpha(rho, 1.0 / 3.0, 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn alpha_limits() {
        // rho -> 0 gives 1/3, rho -> inf approaches 1/(1 + sqrt(1 + Lc))
        let a0 = alpha_given_rho(1e-12, 1e4).unwrap();
        assert!((a0 - 1.0 / 3.0).abs() < 1e-9);
        let inf = alpha_given_rho(1e12, 1e4).unwrap();
        let bound = 1.0 / (1.0 + (1.0f64 + 1e4).sqrt());
        assert!((inf / bound - 1.0).abs() < 1e-9);
        let a = alpha_given_rho(0.0431, 5e4).unwrap();
        assert!((a - 0.021_296_4).abs() < 5e-8, "{a}");
    }

    #[test]
    fn alpha_zeroes_its_residual() {
        for &l in &[2.0, 2.7, 10.0, 5e4, 1e7] {
            for &rho in &[1e-5, 0.01, 1.0, 100.0] {
                let a = alpha_given_rho(rho, l).unwrap();
                assert!(a > 0.0 && a < 1.0);
                assert!(residual_alpha(rho, a, l).abs() < 1e-12 * (1.0 + rho));
            }
        }
    }

    #[test]
    fn closed_form_values() {
        let cf = closed_form_first_order(lc(4.0));
        assert!((cf.rho - 1.0).abs() < 1e-15);
        assert!((cf.alpha - 0.5).abs() < 1e-15);
        let cf = closed_form_first_order(lc(5e4));
        assert!((cf.rho - 0.043089).abs() < 5e-7);
        assert!((cf.alpha - 0.021544).abs() < 5e-7);
        assert!((cf.rate_factor - 1.38053).abs() < 5e-6);
        let (r, a) = closed_form_refined(lc(5e4));
        assert!((r - 0.043785).abs() < 5e-7);
        assert!((a - 0.021834).abs() < 5e-7);
    }

    #[test]
    fn solver_matches_reference_optimum() {
        // reference values from an independent two-dimensional maximization
        let d = solve_snr(lc(5e4), &FadingModel::Deterministic).unwrap();
        assert!((d.rho / 0.043_810_6 - 1.0).abs() < 1e-5, "{}", d.rho);
        assert!((d.alpha / 0.021_135_7 - 1.0).abs() < 1e-5, "{}", d.alpha);
        let r = solve_snr(lc(5e4), &FadingModel::Rayleigh).unwrap();
        assert!((r.rho / 0.028_579_6 - 1.0).abs() < 1e-5, "{}", r.rho);
        assert!((r.alpha / 0.025_780_7 - 1.0).abs() < 1e-5, "{}", r.alpha);
    }

    #[test]
    fn solver_lc_three_and_degenerate() {
        let s = solve_snr(lc(3.0), &FadingModel::Deterministic).unwrap();
        assert!((s.alpha - 1.0 / 3.0).abs() < 1e-12);
        let s = solve_snr(lc(2.0), &FadingModel::Rayleigh).unwrap();
        assert!(s.lattice_only);
        assert_eq!(s.alpha, 0.5);
        assert!(s.residuals.r_w.abs() < RESIDUAL_TOLERANCE);
    }

    #[test]
    fn continuous_point_is_consistent() {
        let pd = PowerDensity::new(1e8).unwrap();
        let cb = CoherenceBlock::new(5e-3, 1e7).unwrap();
        let op = solve_continuous(pd, &cb, &FadingModel::Rayleigh).unwrap();
        assert!((op.rho * op.w_hz / 1e8 - 1.0).abs() < 1e-12);
        assert!(op.rate_bps > 0.0 && op.rate_bps < 1e8 * LOG2_E);
    }

    #[test]
    fn fixed_snr_alpha_maximizes() {
        let f = FadingModel::Rayleigh;
        let a = optimal_alpha_at_snr(0.05, 5e4, &f).unwrap();
        let se = |x: f64| spectral_efficiency(0.05, x, 5e4, &f).unwrap();
        assert!(se(a) >= se(a * 1.01) && se(a) >= se(a * 0.99));
    }

    #[test]
    fn best_pilots_beats_neighbors() {
        let pd = PowerDensity::new(1e8).unwrap();
        let f = FadingModel::Rayleigh;
        let (n, r) = best_pilots(pd, 1e9, lc(1e3), &f).unwrap();
        for k in [n - 1, n + 1] {
            assert!(rate_lc(pd, 1e9, k as f64 / 1e3, 1e3, &f).unwrap() <= r);
        }
    }

    #[test]
    fn lattice_rounding() {
        let pd = PowerDensity::new(1e8).unwrap();
        let cb = CoherenceBlock::new(5e-3, 1e7).unwrap();
        let f = FadingModel::Deterministic;
        let op = OperatingPoint {
            w_hz: 6.2e9,
            alpha: 0.021544,
            rho: 1e8 / 6.2e9,
            rho_eff: 0.0,
            rate_bps: 0.0,
            pilots: None,
            warnings: vec![],
        };
        let r = round_to_lattice(&op, &cb, pd, &f).unwrap();
        assert_eq!(r.w_hz, 620.0 * 1e7);
        assert_eq!(r.pilots, Some(1077));
        let d = discretize(&op, &cb, pd, &f).unwrap();
        assert!((d.w_hz / 1e7 - 620.0).abs() < 1e-9);
        assert!(d.rate_bps >= r.rate_bps);
    }

    #[test]
    fn discretize_flags_sub_bc_optimum() {
        let pd = PowerDensity::new(1e5).unwrap();
        let cb = CoherenceBlock::new(1e-3, 1e6).unwrap();
        let f = FadingModel::Rayleigh;
        let op = solve_continuous(pd, &cb, &f).unwrap();
        assert!(op.w_hz < cb.bc());
        let d = discretize(&op, &cb, pd, &f).unwrap();
        assert_eq!(d.w_hz, cb.bc());
        assert!(d.has_warning(Warning::RelaxationInvalid));
    }

    #[test]
    fn exhaustive_single_point() {
        let cb = CoherenceBlock::from_lc(2.0, 1e6).unwrap();
        let pd = PowerDensity::new(1e6).unwrap();
        let op = exhaustive_search(pd, &cb, &FadingModel::Rayleigh, 1).unwrap();
        assert_eq!(op.pilots, Some(1));
        assert_eq!(op.alpha, 0.5);
        assert!(op.has_warning(Warning::LatticeOnly));
    }

    #[test]
    fn exhaustive_flags_short_range() {
        let cb = CoherenceBlock::from_lc(100.0, 1e6).unwrap();
        let pd = PowerDensity::new(1e8).unwrap();
        let op = exhaustive_search(pd, &cb, &FadingModel::Deterministic, 3).unwrap();
        assert!(op.has_warning(Warning::NotBracketed));
    }
}
