//! Link budgets: path loss, transmit power and receiver noise folded into the
//! received power density `Pr/N0`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::beamform::ArrayConfig;
use crate::error::{Error, Result};
use crate::siso::PowerDensity;
use crate::units::{linear_to_db, SPEED_OF_LIGHT, THERMAL_NOISE_DBM_HZ};

/// Extra attenuation of the blocked line-of-sight model over free space, dB.
pub const BLOCKAGE_LOSS_DB: f64 = 25.0;

/// Minimum distance at which the path-loss models are valid, m.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathLossModel {
    /// Friis: `20 log10(4 pi d fc / c)`.
    FreeSpace,
    /// Free space plus 25 dB blockage.
    BlockedLos,
    /// 3GPP urban micro NLOS, `36.7 log10(d) + 22.7 + 26 log10(fc / 1 GHz)`,
    /// extrapolated in frequency.
    UmiNlos,
    /// Measured `(distance m, loss dB)` pairs, interpolated linearly in `log10(d)`.
    Custom(PathLossTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossTable {
    points: Vec<(f64, f64)>,
}

impl PathLossTable {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("path-loss table is empty"));
        }
        for &(d, l) in &points {
            if !(d.is_finite() && d > 0.0 && l.is_finite()) {
                return Err(Error::config(format!("bad path-loss table row ({d}, {l})")));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::config("path-loss table has duplicate distances"));
        }
        Ok(PathLossTable { points })
    }

    /// Two-column `meters,dB` CSV; a header row is optional.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        Self::new(crate::fading::read_two_column_csv(reader, "path-loss")?)
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn lookup(&self, d: f64) -> f64 {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if d <= first.0 {
            if d < first.0 {
                log::warn!("distance {d} m below path-loss table range; clamped to {} m", first.0);
            }
            return first.1;
        }
        if d >= last.0 {
            if d > last.0 {
                log::warn!("distance {d} m beyond path-loss table range; clamped to {} m", last.0);
            }
            return last.1;
        }
        let i = pts.partition_point(|p| p.0 <= d);
        let (a, b) = (pts[i - 1], pts[i]);
        let t = (d / a.0).log10() / (b.0 / a.0).log10();
        a.1 + t * (b.1 - a.1)
    }
}

/// Path loss in dB at carrier `fc_hz` and distance `d_m`.
pub fn path_loss_db(model: &PathLossModel, fc_hz: f64, d_m: f64) -> Result<f64> {
    if !(fc_hz.is_finite() && fc_hz > 0.0) {
        return Err(Error::domain(format!("carrier {fc_hz} Hz must be > 0")));
    }
    if !(d_m.is_finite() && d_m >= MIN_DISTANCE_M) {
        return Err(Error::domain(format!("distance {d_m} m must be >= {MIN_DISTANCE_M} m")));
    }
    let free = || 20.0 * (4.0 * std::f64::consts::PI * d_m * fc_hz / SPEED_OF_LIGHT).log10();
    Ok(match model {
        PathLossModel::FreeSpace => free(),
        PathLossModel::BlockedLos => free() + BLOCKAGE_LOSS_DB,
        PathLossModel::UmiNlos => 36.7 * d_m.log10() + 22.7 + 26.0 * (fc_hz / 1e9).log10(),
        PathLossModel::Custom(t) => t.lookup(d_m),
    })
}

/// How the transmit side is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TxPower {
    /// Power per transmit element, dBm. Total power is `+10 log10(Nt)`.
    Element { pt_element_dbm: f64 },
    /// Radiated EIRP, dBm, already including transmit element and array gain.
    Eirp { eirp_dbm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub fc_hz: f64,
    pub distance_m: f64,
    pub tx: TxPower,
    /// Ignored in EIRP mode.
    pub gt_element_dbi: f64,
    pub gr_element_dbi: f64,
    pub noise_figure_db: f64,
    pub path_loss: PathLossModel,
}

/// Optimizer input derived from a link budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    /// `Pr/N0` referenced to one transmit and one receive element.
    pub pd: PowerDensity,
    /// `G1 G2`.
    pub combined_gain: f64,
    /// `Kt G2`.
    pub sweep_cost: f64,
}

impl PowerBudget {
    /// `G1 G2 Pr/N0` in dB-Hz, the power density seen after beamforming.
    pub fn beamformed_db_hz(&self) -> f64 {
        self.pd.db_hz() + linear_to_db(self.combined_gain)
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc_hz.is_finite() && self.fc_hz > 0.0) {
            return Err(Error::config(format!("carrier {} Hz must be > 0", self.fc_hz)));
        }
        if !(self.distance_m.is_finite() && self.distance_m > 0.0) {
            return Err(Error::config(format!("distance {} m must be > 0", self.distance_m)));
        }
        if !(self.noise_figure_db.is_finite() && self.noise_figure_db >= 0.0) {
            return Err(Error::config(format!("noise figure {} dB must be >= 0", self.noise_figure_db)));
        }
        let tx = match self.tx {
            TxPower::Element { pt_element_dbm } => pt_element_dbm,
            TxPower::Eirp { eirp_dbm } => eirp_dbm,
        };
        if !tx.is_finite() || !self.gt_element_dbi.is_finite() || !self.gr_element_dbi.is_finite() {
            return Err(Error::config("transmit power and antenna gains must be finite"));
        }
        Ok(())
    }

    pub fn with_distance(&self, distance_m: f64) -> Self {
        LinkBudget { distance_m, ..self.clone() }
    }

    pub fn with_eirp(&self, eirp_dbm: f64) -> Self {
        LinkBudget { tx: TxPower::Eirp { eirp_dbm }, ..self.clone() }
    }
}

/// Per-element `Pr/N0` and the array gains the optimizer applies on top.
///
/// Element mode: `Pt_element + 10 log10(Nt) + Gt + Gr - PL + 174 - NF`.
///
/// EIRP mode: the EIRP already holds the transmit array gain, so the
/// beamformed density is `EIRP + Gr + 10 log10(Nr) - PL + 174 - NF`; it is
/// divided by `G1 G2` to keep the optimizer's per-element convention.
pub fn power_density(lb: &LinkBudget, cfg: &ArrayConfig) -> Result<PowerBudget> {
    lb.validate()?;
    let pl = path_loss_db(&lb.path_loss, lb.fc_hz, lb.distance_m)?;
    let rx = lb.gr_element_dbi - pl - THERMAL_NOISE_DBM_HZ - lb.noise_figure_db;
    let db_hz = match lb.tx {
        TxPower::Element { pt_element_dbm } => {
            pt_element_dbm + linear_to_db(cfg.nt() as f64) + lb.gt_element_dbi + rx
        }
        TxPower::Eirp { eirp_dbm } => {
            eirp_dbm + linear_to_db(cfg.nr() as f64) + rx - linear_to_db(cfg.combined_gain())
        }
    };
    Ok(PowerBudget {
        pd: PowerDensity::from_db_hz(db_hz)?,
        combined_gain: cfg.combined_gain(),
        sweep_cost: cfg.sweep_cost(),
    })
}

/// Rows of the achievable-EIRP table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EirpRow {
    /// 30 dBm split over `nt` elements of 8 dBi.
    SumPower { nt: u32 },
    /// 16 elements, 10 dBm each, 2 dBi.
    RfIc,
    /// 16 elements, 20 dBm each, 8 dBi.
    HydraChip,
    /// `nt` elements, 20 dBm each, 8 dBi.
    LargeArray { nt: u32 },
    /// Regulatory cap for bandwidth `w_hz`.
    Fcc { w_hz: f64 },
}

pub fn eirp_table(row: EirpRow) -> f64 {
    match row {
        EirpRow::SumPower { nt } => 38.0 + 10.0 * (nt as f64).log10(),
        EirpRow::RfIc => 36.0,
        EirpRow::HydraChip => 52.0,
        EirpRow::LargeArray { nt } => 28.0 + 20.0 * (nt as f64).log10(),
        EirpRow::Fcc { w_hz } => fcc_eirp_cap_dbm(w_hz),
    }
}

/// 75 dBm per 100 MHz.
pub fn fcc_eirp_cap_dbm(w_hz: f64) -> f64 {
    75.0 + 10.0 * (w_hz / 100e6).log10()
}
