//! End-to-end evaluation of a scenario and the tables printed by the CLI.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::allocate::Allocation;
use crate::baselines::{self, Bandwidth, BaselineRate};
use crate::beamform::{self, best_pilots_mimo, closed_form_mimo, discretize_mimo, solve_mimo, substitute};
use crate::error::Result;
use crate::scenario::{Expectation, Metric, Preset, Scenario};
use crate::siso::{closed_form_refined, ClosedForm, OperatingPoint};
use crate::units::linear_to_db;

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowValues {
    #[serde(rename = "W_opt_hz")]
    pub w_opt_hz: f64,
    pub alpha_opt: f64,
    pub pilots: u64,
    pub rho_opt: f64,
    pub g_rho_db: f64,
    pub rate_bps: f64,
    #[serde(rename = "rate_fixed_1ghz_bps")]
    pub rate_fixed_bps: f64,
    pub rate_csir_bps: f64,
    pub rate_fsk_bps: f64,
    pub rate_mi_bps: f64,
}

/// Lattice operating point of a scenario, or the best-pilot point at a given
/// bandwidth, plus the comparison rates.
///
/// `rho_opt` is per element; `g_rho_db` is the post-beamforming SNR. The CSIR
/// rate is taken at the row's bandwidth with the full array gain.
pub fn evaluate_row(scn: &Scenario, w_hz: Option<f64>) -> Result<RowValues> {
    let pb = scn.power_budget()?;
    let (pd, cfg, cb, fading) = (pb.pd, &scn.array, &scn.cb, &scn.fading);
    let (w, pilots, rate) = match w_hz {
        Some(w) => {
            let (n, r) = best_pilots_mimo(pd, w, cb, cfg, fading)?;
            (w, n, r)
        }
        None => {
            let op = solve_mimo(pd, cb, cfg, fading)?;
            let lat = discretize_mimo(&op, cb, cfg, pd, fading)?;
            (lat.w_hz, lat.pilots.unwrap_or(0), lat.rate_bps)
        }
    };
    let rho = pd.snr_at(w);
    let g = cfg.combined_gain();
    let pd_bf = pd.scaled(g)?;
    Ok(RowValues {
        w_opt_hz: w,
        alpha_opt: pilots as f64 / cb.lc(),
        pilots,
        rho_opt: rho,
        g_rho_db: linear_to_db(g * rho),
        rate_bps: rate,
        rate_fixed_bps: best_pilots_mimo(pd, scn.w_fixed_hz, cb, cfg, fading)?.1,
        rate_csir_bps: baselines::csir_rate(pd_bf, Bandwidth::Hz(w), fading)?.rate,
        rate_fsk_bps: baselines::peaky_fsk_rate(pd_bf, cb.lc())?.rate,
        rate_mi_bps: baselines::non_peaky_mi_rate(pd_bf, cb.lc(), fading)?.rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub scenario: String,
    /// Per-element `Pr/N0`, dB-Hz.
    pub pd_db_hz: f64,
    /// `G1 G2 Pr/N0`, dB-Hz.
    pub beamformed_db_hz: f64,
    pub lc: f64,
    pub lc_effective: f64,
    pub continuous: OperatingPoint,
    pub lattice: OperatingPoint,
    pub g_rho_db: f64,
    pub closed_form: ClosedForm,
    /// Refined closed-form `(rho, alpha)`; `rho` per element.
    pub refined_rho: f64,
    pub refined_alpha: f64,
    pub w_fixed_hz: f64,
    pub rate_fixed_bps: f64,
    pub pilots_fixed: u64,
    /// Best-pilot rate at a tenth of the continuous optimum bandwidth.
    pub rate_tenth_bandwidth_bps: f64,
    pub baselines: Vec<BaselineRate>,
    pub warnings: Vec<String>,
}

impl OptimizeReport {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::WOptHz => self.continuous.w_hz,
            Metric::RateBps => self.continuous.rate_bps,
            Metric::RhoOpt => self.continuous.rho,
            Metric::AlphaOpt => self.continuous.alpha,
            Metric::RateFixedBps => self.rate_fixed_bps,
            Metric::TenthBandwidthRatio => self.rate_tenth_bandwidth_bps / self.continuous.rate_bps,
            Metric::BeamformedDbHz => self.beamformed_db_hz,
        }
    }

    /// `(quantity, value)` rows for the CSV form.
    pub fn table(&self) -> Vec<(String, String)> {
        let mut t: Vec<(String, String)> = vec![
            ("scenario".into(), self.scenario.clone()),
            ("pd_db_hz".into(), self.pd_db_hz.to_string()),
            ("beamformed_db_hz".into(), self.beamformed_db_hz.to_string()),
            ("lc".into(), self.lc.to_string()),
            ("lc_effective".into(), self.lc_effective.to_string()),
            ("w_opt_hz".into(), self.continuous.w_hz.to_string()),
            ("alpha_opt".into(), self.continuous.alpha.to_string()),
            ("rho_opt".into(), self.continuous.rho.to_string()),
            ("g_rho_db".into(), self.g_rho_db.to_string()),
            ("rate_bps".into(), self.continuous.rate_bps.to_string()),
            ("lattice_w_hz".into(), self.lattice.w_hz.to_string()),
            ("lattice_pilots".into(), self.lattice.pilots.unwrap_or(0).to_string()),
            ("lattice_rate_bps".into(), self.lattice.rate_bps.to_string()),
            ("closed_form_rho".into(), self.closed_form.rho.to_string()),
            ("closed_form_alpha".into(), self.closed_form.alpha.to_string()),
            ("refined_rho".into(), self.refined_rho.to_string()),
            ("refined_alpha".into(), self.refined_alpha.to_string()),
            ("w_fixed_hz".into(), self.w_fixed_hz.to_string()),
            ("rate_fixed_bps".into(), self.rate_fixed_bps.to_string()),
            ("pilots_fixed".into(), self.pilots_fixed.to_string()),
            ("rate_tenth_bandwidth_bps".into(), self.rate_tenth_bandwidth_bps.to_string()),
        ];
        for b in &self.baselines {
            let key = serde_json::to_value(b.scheme)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            t.push((format!("{key}_bps"), b.rate.to_string()));
        }
        t.push(("warnings".into(), self.warnings.join(";")));
        t
    }
}

/// Continuous and lattice optimum of a scenario with closed-form and
/// baseline comparisons.
pub fn optimize(scn: &Scenario) -> Result<OptimizeReport> {
    let pb = scn.power_budget()?;
    let (pd, cfg, cb, fading) = (pb.pd, &scn.array, &scn.cb, &scn.fading);
    let sub = substitute(cfg, cb.lc())?;
    let continuous = solve_mimo(pd, cb, cfg, fading)?;
    let lattice = discretize_mimo(&continuous, cb, cfg, pd, fading)?;
    let (r_rho, r_alpha) = closed_form_refined(sub.lc_tilde);
    let (pilots_fixed, rate_fixed_bps) = best_pilots_mimo(pd, scn.w_fixed_hz, cb, cfg, fading)?;
    let rate_tenth = best_pilots_mimo(pd, continuous.w_hz / 10.0, cb, cfg, fading)?.1;
    let pd_bf = pd.scaled(cfg.combined_gain())?;
    let baselines = vec![
        baselines::csir_rate(pd_bf, Bandwidth::Hz(continuous.w_hz), fading)?,
        baselines::csir_rate(pd_bf, Bandwidth::Infinite, fading)?,
        baselines::peaky_fsk_rate(pd_bf, cb.lc())?,
        baselines::non_peaky_mi_rate(pd_bf, cb.lc(), fading)?,
    ];
    let mut warnings: Vec<String> = lattice.warnings.iter().map(|w| w.to_string()).collect();
    if baselines[3].clamped {
        warnings.push("non-peaky MI rate clamped to zero".into());
    }
    Ok(OptimizeReport {
        scenario: scn.name.clone(),
        pd_db_hz: pd.db_hz(),
        beamformed_db_hz: pb.beamformed_db_hz(),
        lc: cb.lc(),
        lc_effective: sub.lc_tilde.get(),
        g_rho_db: beamform::gain_snr_db(&continuous, cfg),
        closed_form: closed_form_mimo(cfg, cb.lc())?,
        refined_rho: r_rho / sub.snr_scale,
        refined_alpha: r_alpha,
        continuous,
        lattice,
        w_fixed_hz: scn.w_fixed_hz,
        rate_fixed_bps,
        pilots_fixed,
        rate_tenth_bandwidth_bps: rate_tenth,
        baselines,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub preset: String,
    pub expectation: Expectation,
    pub value: f64,
    pub pass: bool,
}

/// Re-runs a preset and compares it against its recorded ranges.
pub fn verify_preset(p: &Preset) -> Result<Vec<CheckOutcome>> {
    let rep = optimize(&p.scenario()?)?;
    Ok(p.expect
        .iter()
        .map(|e| {
            let value = rep.metric(e.metric);
            CheckOutcome {
                preset: p.name.to_string(),
                expectation: *e,
                value,
                pass: value >= e.lo && value <= e.hi,
            }
        })
        .collect())
}

/// `scheme,rate,unit,clamped` table.
pub fn write_baselines_csv<W: Write>(rates: &[BaselineRate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "rate", "unit", "clamped"])?;
    for b in rates {
        let scheme = serde_json::to_value(b.scheme)?;
        let unit = serde_json::to_value(b.unit)?;
        w.write_record([
            scheme.as_str().unwrap_or_default(),
            &b.rate.to_string(),
            unit.as_str().unwrap_or_default(),
            &b.clamped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_optimize_csv<W: Write>(rep: &OptimizeReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "value"])?;
    for (k, v) in rep.table() {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per user and a closing `total` row. The `fair` column is true when
/// the user's rate is at least its equal-share rate.
pub fn write_allocation_csv<W: Write>(a: &Allocation, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "user",
        "power_w",
        "bandwidth_hz",
        "pilots",
        "rate_bps",
        "baseline_rate_bps",
        "rate_gain_pct",
        "fair",
    ])?;
    for (i, u) in a.users.iter().enumerate() {
        w.write_record([
            i.to_string(),
            u.power_w.to_string(),
            u.bandwidth_hz.to_string(),
            u.pilots.to_string(),
            u.rate_bps.to_string(),
            u.baseline_rate_bps.to_string(),
            u.rate_gain_pct().to_string(),
            (u.rate_bps >= u.baseline_rate_bps).to_string(),
        ])?;
    }
    let base: f64 = a.users.iter().map(|u| u.baseline_rate_bps).sum();
    w.write_record([
        "total".to_string(),
        a.total_power_w().to_string(),
        a.total_bandwidth_hz().to_string(),
        a.users.iter().map(|u| u.pilots).sum::<u64>().to_string(),
        a.sum_rate_bps.to_string(),
        base.to_string(),
        (100.0 * (a.sum_rate_bps / base - 1.0)).to_string(),
        a.users.iter().all(|u| u.rate_bps >= u.baseline_rate_bps).to_string(),
    ])?;
    w.flush()?;
    Ok(())
}
