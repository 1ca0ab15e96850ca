//! Scenario files and the built-in presets.
//!
//! A scenario is a flat TOML table. Every dimensioned key carries its unit in
//! the name (`tc_ms`, `bc_mhz`, `eirp_dbm`, ...) and unknown keys are
//! rejected. Optional keys fall back to the defaults listed on
//! [`ScenarioFile`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beamform::{ArrayConfig, GainModel};
use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::linkbudget::{power_density, LinkBudget, PathLossModel, PathLossTable, PowerBudget, TxPower};
use crate::siso::{CoherenceBlock, PowerDensity};
use crate::sweep::{Spacing, SweepSpec, SweepVariable};
use crate::units::linear_to_db;

pub const DEFAULT_TC_MS: f64 = 5.0;
pub const DEFAULT_BC_MHZ: f64 = 10.0;
pub const DEFAULT_GT_ELEMENT_DBI: f64 = 8.0;
pub const DEFAULT_GR_ELEMENT_DBI: f64 = 5.0;
pub const DEFAULT_NOISE_FIGURE_DB: f64 = 9.0;
pub const DEFAULT_FIXED_BANDWIDTH_MHZ: f64 = 1000.0;

/// Raw scenario document.
///
/// Defaults: `tc_ms = 5`, `bc_mhz = 10`, `gt_element_dbi = 8`,
/// `gr_element_dbi = 5`, `noise_figure_db = 9`, `path_loss = "umi-nlos"`,
/// `nt = nr = 1`, `gain_model = "ideal"`, `fading = "rayleigh"`,
/// `w_fixed_mhz = 1000`.
///
/// Exactly one of `pt_element_dbm`, `pt_total_dbm`, `eirp_dbm` and
/// `pr_n0_dbhz` sets the received power. `pr_n0_dbhz` skips the link budget
/// and is referenced to a single antenna element pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub description: Option<String>,

    pub fc_ghz: Option<f64>,
    pub distance_m: Option<f64>,
    pub pt_element_dbm: Option<f64>,
    pub pt_total_dbm: Option<f64>,
    pub eirp_dbm: Option<f64>,
    pub pr_n0_dbhz: Option<f64>,
    pub gt_element_dbi: Option<f64>,
    pub gr_element_dbi: Option<f64>,
    pub noise_figure_db: Option<f64>,
    /// `free-space`, `blocked-los`, `umi-nlos` or `custom`.
    pub path_loss: Option<String>,
    /// Two-column `meters,dB` table for `path_loss = "custom"`.
    pub path_loss_csv: Option<PathBuf>,

    pub nt: Option<u32>,
    pub nr: Option<u32>,
    pub kt: Option<u32>,
    /// `ideal`, `rich-scattering` or `explicit`.
    pub gain_model: Option<String>,
    pub g1_lin: Option<f64>,
    pub g2_lin: Option<f64>,

    pub tc_ms: Option<f64>,
    pub bc_mhz: Option<f64>,
    /// Coherence length in symbols, instead of `tc_ms`.
    pub lc: Option<f64>,

    /// `rayleigh`, `deterministic` or `tabulated`.
    pub fading: Option<String>,
    /// Two-column `value,weight` table for `fading = "tabulated"`.
    pub fading_csv: Option<PathBuf>,

    /// Fixed bandwidth used for the comparison column.
    pub w_fixed_mhz: Option<f64>,

    /// One of `distance_m`, `eirp_dbm`, `tc_ms`, `bandwidth_mhz`; start and
    /// stop are in that key's unit.
    pub sweep_key: Option<String>,
    pub sweep_start: Option<f64>,
    pub sweep_stop: Option<f64>,
    pub sweep_points: Option<usize>,
    /// `linear` or `log`.
    pub sweep_spacing: Option<String>,
}

/// Where the received power density comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerSource {
    Link(LinkBudget),
    /// Per-element `Pr/N0`.
    Density(PowerDensity),
}

/// A validated scenario with every quantity in linear SI units, except the
/// link budget, which keeps its dB terms until [`Scenario::power_budget`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub source: PowerSource,
    pub array: ArrayConfig,
    pub cb: CoherenceBlock,
    pub fading: FadingModel,
    pub w_fixed_hz: f64,
    pub sweep: Option<SweepSpec>,
}

impl Scenario {
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::config(format!("scenario: {e}")))?;
        file.resolve(base_dir)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::from_toml_str(&text, path.parent())?;
        if s.name.is_empty() {
            s.name = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(s)
    }

    pub fn power_budget(&self) -> Result<PowerBudget> {
        match &self.source {
            PowerSource::Link(lb) => power_density(lb, &self.array),
            PowerSource::Density(pd) => Ok(PowerBudget {
                pd: *pd,
                combined_gain: self.array.combined_gain(),
                sweep_cost: self.array.sweep_cost(),
            }),
        }
    }

    pub fn link(&self) -> Option<&LinkBudget> {
        match &self.source {
            PowerSource::Link(lb) => Some(lb),
            PowerSource::Density(_) => None,
        }
    }

    pub fn with_distance(&self, distance_m: f64) -> Result<Self> {
        let lb = self
            .link()
            .ok_or_else(|| Error::config("distance needs a link budget, not pr_n0_dbhz"))?;
        Ok(Scenario { source: PowerSource::Link(lb.with_distance(distance_m)), ..self.clone() })
    }

    pub fn with_eirp(&self, eirp_dbm: f64) -> Result<Self> {
        let lb = self.link().ok_or_else(|| Error::config("EIRP needs a link budget, not pr_n0_dbhz"))?;
        Ok(Scenario { source: PowerSource::Link(lb.with_eirp(eirp_dbm)), ..self.clone() })
    }

    pub fn with_tc(&self, tc_s: f64) -> Result<Self> {
        Ok(Scenario { cb: CoherenceBlock::new(tc_s, self.cb.bc())?, ..self.clone() })
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(format!("{name} = {v} must be finite and > 0")))
    }
}

fn resolve_path(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

impl ScenarioFile {
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Scenario> {
        let array = self.array()?;
        let cb = self.coherence_block()?;
        let fading = self.fading_model(base_dir)?;
        let source = self.source(base_dir)?;
        let w_fixed_hz =
            positive("w_fixed_mhz", self.w_fixed_mhz.unwrap_or(DEFAULT_FIXED_BANDWIDTH_MHZ))? * 1e6;
        let sweep = self.sweep_spec()?;
        if let (Some(s), PowerSource::Density(_)) = (&sweep, &source) {
            if matches!(s.variable, SweepVariable::Distance | SweepVariable::Eirp) {
                return Err(Error::config("distance and EIRP sweeps need a link budget, not pr_n0_dbhz"));
            }
        }
        Ok(Scenario {
            name: self.name.clone().unwrap_or_default(),
            description: self.description.clone().unwrap_or_default(),
            source,
            array,
            cb,
            fading,
            w_fixed_hz,
            sweep,
        })
    }

    fn array(&self) -> Result<ArrayConfig> {
        let nt = self.nt.unwrap_or(1);
        let nr = self.nr.unwrap_or(1);
        let model = match self.gain_model.as_deref().unwrap_or("ideal") {
            "ideal" | "ideal-directional" => GainModel::IdealDirectional,
            "rich-scattering" | "rich" => GainModel::RichScattering,
            "explicit" => GainModel::Explicit,
            other => return Err(Error::config(format!("unknown gain_model {other:?}"))),
        };
        if model != GainModel::Explicit
            && (self.kt.is_some() || self.g1_lin.is_some() || self.g2_lin.is_some())
        {
            return Err(Error::config("kt, g1_lin and g2_lin need gain_model = \"explicit\""));
        }
        ArrayConfig::from_model(
            model,
            nt,
            nr,
            self.kt.unwrap_or(nt * nr),
            self.g1_lin.unwrap_or(1.0),
            self.g2_lin.unwrap_or(1.0),
        )
        .map_err(|e| Error::config(e.to_string()))
    }

    fn coherence_block(&self) -> Result<CoherenceBlock> {
        let bc = positive("bc_mhz", self.bc_mhz.unwrap_or(DEFAULT_BC_MHZ))? * 1e6;
        match (self.tc_ms, self.lc) {
            (Some(_), Some(_)) => Err(Error::config("set tc_ms or lc, not both")),
            (_, Some(lc)) => CoherenceBlock::from_lc(lc, bc),
            (tc, None) => CoherenceBlock::new(positive("tc_ms", tc.unwrap_or(DEFAULT_TC_MS))? * 1e-3, bc),
        }
    }

    fn fading_model(&self, base: Option<&Path>) -> Result<FadingModel> {
        let name = self.fading.as_deref().unwrap_or("rayleigh");
        if name != "tabulated" && self.fading_csv.is_some() {
            return Err(Error::config("fading_csv needs fading = \"tabulated\""));
        }
        match name {
            "rayleigh" => Ok(FadingModel::Rayleigh),
            "deterministic" => Ok(FadingModel::Deterministic),
            "tabulated" => {
                let p = self
                    .fading_csv
                    .as_ref()
                    .ok_or_else(|| Error::config("fading = \"tabulated\" needs fading_csv"))?;
                FadingModel::from_csv_path(resolve_path(base, p))
            }
            other => Err(Error::config(format!("unknown fading {other:?}"))),
        }
    }

    fn source(&self, base: Option<&Path>) -> Result<PowerSource> {
        let set = [self.pt_element_dbm, self.pt_total_dbm, self.eirp_dbm, self.pr_n0_dbhz]
            .iter()
            .filter(|v| v.is_some())
            .count();
        if set != 1 {
            return Err(Error::config(
                "set exactly one of pt_element_dbm, pt_total_dbm, eirp_dbm, pr_n0_dbhz",
            ));
        }
        if let Some(db) = self.pr_n0_dbhz {
            let link_keys = [
                self.fc_ghz,
                self.distance_m,
                self.gt_element_dbi,
                self.gr_element_dbi,
                self.noise_figure_db,
            ];
            if link_keys.iter().any(Option::is_some) || self.path_loss.is_some() {
                return Err(Error::config("pr_n0_dbhz replaces the link budget; drop the link keys"));
            }
            return Ok(PowerSource::Density(PowerDensity::from_db_hz(db)?));
        }
        let nt = self.nt.unwrap_or(1) as f64;
        let tx = match (self.pt_element_dbm, self.pt_total_dbm, self.eirp_dbm) {
            (Some(p), _, _) => TxPower::Element { pt_element_dbm: p },
            (_, Some(p), _) => TxPower::Element { pt_element_dbm: p - linear_to_db(nt) },
            (_, _, Some(e)) => TxPower::Eirp { eirp_dbm: e },
            _ => unreachable!(),
        };
        if matches!(tx, TxPower::Eirp { .. }) && self.gt_element_dbi.is_some() {
            return Err(Error::config("gt_element_dbi is already part of eirp_dbm"));
        }
        let path_loss = match self.path_loss.as_deref().unwrap_or("umi-nlos") {
            "free-space" => PathLossModel::FreeSpace,
            "blocked-los" => PathLossModel::BlockedLos,
            "umi-nlos" => PathLossModel::UmiNlos,
            "custom" => {
                let p = self
                    .path_loss_csv
                    .as_ref()
                    .ok_or_else(|| Error::config("path_loss = \"custom\" needs path_loss_csv"))?;
                PathLossModel::Custom(PathLossTable::from_csv_path(resolve_path(base, p))?)
            }
            other => return Err(Error::config(format!("unknown path_loss {other:?}"))),
        };
        if !matches!(path_loss, PathLossModel::Custom(_)) && self.path_loss_csv.is_some() {
            return Err(Error::config("path_loss_csv needs path_loss = \"custom\""));
        }
        let lb = LinkBudget {
            fc_hz: self.fc_ghz.ok_or_else(|| Error::config("missing fc_ghz"))? * 1e9,
            distance_m: self.distance_m.ok_or_else(|| Error::config("missing distance_m"))?,
            tx,
            gt_element_dbi: self.gt_element_dbi.unwrap_or(DEFAULT_GT_ELEMENT_DBI),
            gr_element_dbi: self.gr_element_dbi.unwrap_or(DEFAULT_GR_ELEMENT_DBI),
            noise_figure_db: self.noise_figure_db.unwrap_or(DEFAULT_NOISE_FIGURE_DB),
            path_loss,
        };
        lb.validate()?;
        Ok(PowerSource::Link(lb))
    }

    fn sweep_spec(&self) -> Result<Option<SweepSpec>> {
        let Some(key) = self.sweep_key.as_deref() else {
            if self.sweep_start.is_some() || self.sweep_stop.is_some() || self.sweep_points.is_some() {
                return Err(Error::config("sweep_start/stop/points need sweep_key"));
            }
            return Ok(None);
        };
        let variable = match key {
            "distance_m" => SweepVariable::Distance,
            "eirp_dbm" => SweepVariable::Eirp,
            "tc_ms" => SweepVariable::CoherenceTime,
            "bandwidth_mhz" => SweepVariable::Bandwidth,
            other => {
                return Err(Error::config(format!(
                    "unknown sweep_key {other:?}; expected distance_m, eirp_dbm, tc_ms or bandwidth_mhz"
                )))
            }
        };
        let spacing = match self.sweep_spacing.as_deref().unwrap_or("linear") {
            "linear" | "lin" => Spacing::Linear,
            "log" => Spacing::Log,
            other => return Err(Error::config(format!("unknown sweep_spacing {other:?}"))),
        };
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Error::config(format!("sweep needs {k}")));
        SweepSpec::new(
            variable,
            need(self.sweep_start, "sweep_start")?,
            need(self.sweep_stop, "sweep_stop")?,
            self.sweep_points.ok_or_else(|| Error::config("sweep needs sweep_points"))?,
            spacing,
        )
        .map(Some)
    }
}

/// Scalar checked by a preset self-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Continuous optimal bandwidth.
    WOptHz,
    /// Continuous optimal rate.
    RateBps,
    RhoOpt,
    AlphaOpt,
    /// Rate at the scenario's fixed bandwidth.
    RateFixedBps,
    /// Rate at `W*/10` over the rate at `W*`.
    TenthBandwidthRatio,
    BeamformedDbHz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub metric: Metric,
    pub lo: f64,
    pub hi: f64,
}

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub toml: &'static str,
    pub expect: &'static [Expectation],
}

const fn ex(metric: Metric, lo: f64, hi: f64) -> Expectation {
    Expectation { metric, lo, hi }
}

impl Preset {
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = Scenario::from_toml_str(self.toml, None)?;
        s.name = self.name.to_string();
        if s.description.is_empty() {
            s.description = self.summary.to_string();
        }
        Ok(s)
    }
}

pub static PRESETS: &[Preset] = &[
    Preset {
        name: "fig4-left",
        summary: "28 GHz, 100 m, UMi NLOS, 1 W over 16x2 ideal beamforming",
        toml: r#"
fc_ghz = 28.0
distance_m = 100.0
pt_total_dbm = 30.0
nt = 16
nr = 2
path_loss = "umi-nlos"
fading = "deterministic"
sweep_key = "bandwidth_mhz"
sweep_start = 10.0
sweep_stop = 100000.0
sweep_points = 41
sweep_spacing = "log"
"#,
        expect: &[
            ex(Metric::BeamformedDbHz, 89.2, 89.4),
            ex(Metric::WOptHz, 5.4e9, 6.6e9),
            ex(Metric::TenthBandwidthRatio, 0.7, 1.0),
        ],
    },
    Preset {
        name: "abstract-28ghz",
        summary: "28 GHz, 52 dBm EIRP, 16x4 ideal, at 211 m",
        toml: r#"
fc_ghz = 28.0
distance_m = 211.0
eirp_dbm = 52.0
nt = 16
nr = 4
path_loss = "umi-nlos"
fading = "deterministic"
sweep_key = "distance_m"
sweep_start = 50.0
sweep_stop = 1000.0
sweep_points = 40
sweep_spacing = "log"
"#,
        expect: &[
            ex(Metric::WOptHz, 0.85e9, 1.1e9),
            ex(Metric::RateBps, 175e6, 237e6),
        ],
    },
    Preset {
        name: "abstract-39ghz",
        summary: "39 GHz, 52 dBm EIRP, 16x4 ideal, at 170 m",
        toml: r#"
fc_ghz = 39.0
distance_m = 170.0
eirp_dbm = 52.0
nt = 16
nr = 4
path_loss = "umi-nlos"
fading = "deterministic"
sweep_key = "distance_m"
sweep_start = 50.0
sweep_stop = 1000.0
sweep_points = 40
sweep_spacing = "log"
"#,
        expect: &[
            ex(Metric::WOptHz, 0.8e9, 1.05e9),
            ex(Metric::RateBps, 150e6, 237e6),
        ],
    },
    Preset {
        name: "fcc-28ghz",
        summary: "28 GHz at the 85 dBm EIRP ceiling, 1 GHz fixed, at 860 m",
        toml: r#"
fc_ghz = 28.0
distance_m = 860.0
eirp_dbm = 85.0
nt = 16
nr = 4
path_loss = "umi-nlos"
fading = "deterministic"
w_fixed_mhz = 1000.0
sweep_key = "distance_m"
sweep_start = 200.0
sweep_stop = 2000.0
sweep_points = 37
sweep_spacing = "log"
"#,
        expect: &[ex(Metric::RateFixedBps, 1.0e9, 1.6e9)],
    },
    Preset {
        name: "fig2",
        summary: "Pr/N0 = 20 dB-MHz, Bc = 10 MHz, sweep Tc over 0.1 to 100 ms",
        toml: r#"
pr_n0_dbhz = 80.0
bc_mhz = 10.0
tc_ms = 5.0
fading = "deterministic"
sweep_key = "tc_ms"
sweep_start = 0.1
sweep_stop = 100.0
sweep_points = 31
sweep_spacing = "log"
"#,
        expect: &[
            ex(Metric::RhoOpt, 0.0433, 0.0443),
            ex(Metric::AlphaOpt, 0.0209, 0.0214),
        ],
    },
    Preset {
        name: "fig3",
        summary: "Pr/N0 = 0 dB-MHz, Bc = 1 MHz, sweep Tc over 0.01 to 10 ms",
        toml: r#"
pr_n0_dbhz = 60.0
bc_mhz = 1.0
tc_ms = 1.0
fading = "deterministic"
sweep_key = "tc_ms"
sweep_start = 0.01
sweep_stop = 10.0
sweep_points = 31
sweep_spacing = "log"
"#,
        expect: &[
            ex(Metric::RhoOpt, 0.1670, 0.1700),
            ex(Metric::WOptHz, 5.9e6, 6.0e6),
        ],
    },
    Preset {
        name: "fig5a",
        summary: "60 GHz, 1 W, 32x4 ideal, blocked LOS, distance sweep",
        toml: r#"
fc_ghz = 60.0
distance_m = 200.0
pt_total_dbm = 30.0
nt = 32
nr = 4
path_loss = "blocked-los"
fading = "deterministic"
sweep_key = "distance_m"
sweep_start = 10.0
sweep_stop = 2000.0
sweep_points = 47
sweep_spacing = "log"
"#,
        expect: &[ex(Metric::RateBps, 0.95e9, 1.15e9)],
    },
    Preset {
        name: "fig5b",
        summary: "60 GHz, 1 W, 64x4 ideal, UMi NLOS, distance sweep",
        toml: r#"
fc_ghz = 60.0
distance_m = 140.0
pt_total_dbm = 30.0
nt = 64
nr = 4
path_loss = "umi-nlos"
fading = "deterministic"
sweep_key = "distance_m"
sweep_start = 10.0
sweep_stop = 1000.0
sweep_points = 41
sweep_spacing = "log"
"#,
        expect: &[ex(Metric::WOptHz, 0.85e9, 1.1e9)],
    },
    Preset {
        name: "fig6a",
        summary: "28 GHz, 70 dBm EIRP, 128x4 ideal, UMi NLOS, distance sweep",
        toml: r#"
fc_ghz = 28.0
distance_m = 530.0
eirp_dbm = 70.0
nt = 128
nr = 4
path_loss = "umi-nlos"
fading = "deterministic"
sweep_key = "distance_m"
sweep_start = 50.0
sweep_stop = 2000.0
sweep_points = 40
sweep_spacing = "log"
"#,
        expect: &[ex(Metric::WOptHz, 0.9e9, 1.1e9)],
    },
    Preset {
        name: "fig6b",
        summary: "39 GHz, 70 dBm EIRP, 128x4 ideal, UMi NLOS, distance sweep",
        toml: r#"
fc_ghz = 39.0
distance_m = 420.0
eirp_dbm = 70.0
nt = 128
nr = 4
path_loss = "umi-nlos"
fading = "deterministic"
sweep_key = "distance_m"
sweep_start = 50.0
sweep_stop = 2000.0
sweep_points = 40
sweep_spacing = "log"
"#,
        expect: &[ex(Metric::WOptHz, 0.9e9, 1.1e9)],
    },
];

pub fn preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        Error::config(format!("unknown preset {name:?}; known: {}", names.join(", ")))
    })
}
