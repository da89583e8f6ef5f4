//! Experiment configuration, seeded orchestration and CSV output.
//!
//! A configuration is a TOML document naming one experiment plus optional
//! parameter blocks; omitted keys take the defaults below.
//!
//! ```toml
//! experiment = "srs-mse"
//! seed = 7
//! drops = 64
//!
//! [srs]
//! snr_db = 10.0
//! inr_db = 10.0
//! ```
//!
//! Drop `i` (zero based) runs on seed [`drop_seed`]`(seed, i)`: the `i + 1`-th
//! output of a SplitMix64 generator started at `seed`.

use crate::beam::{BeamScenario, IndicationModel, Mechanism};
use crate::channel::{eigen_basis, synthesize_channel, ArrayConfig, BasisPair, ChannelSnapshot, ClusterModel, FrequencyGrid, ScatteringGeometry};
use crate::cjt::{occ_leakage_sweep, run_drop, upt, BurstRecord, DropLayout, DropScenario, Feedback, OccConfig, TransmissionMode};
use crate::codebook::power_ratio;
use crate::error::Error;
use crate::linalg::linear_to_db;
use crate::prediction::{run_prediction_drop, PredictionConfig, PredictionScenario};
use crate::srs::{run_srs_drop, CsMode, SrsScenario, TapSelection};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(master + (index + 1) · 0x9e3779b97f4a7c15)`, wrapping.
pub fn drop_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Run(#[from] Error),
}

impl ExperimentError {
    /// 1 for configuration problems, 2 for everything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 1,
            _ => 2,
        }
    }

    fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type ExperimentResult<T> = std::result::Result<T, ExperimentError>;

/// Attributes a library validation error to a key inside `block`.
fn in_block(block: &str, e: Error) -> ExperimentError {
    match e {
        Error::InvalidArgument { name, reason } => ExperimentError::config(format!("{block}.{name}"), reason),
        other => ExperimentError::config(block, other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PowerRatio,
    SrsMse,
    CjtSinr,
    Predict,
    BeamSim,
    Upt,
    Occ,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::PowerRatio,
        Self::SrsMse,
        Self::CjtSinr,
        Self::Predict,
        Self::BeamSim,
        Self::Upt,
        Self::Occ,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::PowerRatio => "power-ratio",
            Self::SrsMse => "srs-mse",
            Self::CjtSinr => "cjt-sinr",
            Self::Predict => "predict",
            Self::BeamSim => "beam-sim",
            Self::Upt => "upt",
            Self::Occ => "occ",
        }
    }

    /// Column names of the experiment's CSV output.
    pub fn header(&self) -> &'static [&'static str] {
        match self {
            Self::PowerRatio => &["drop", "basis", "k", "r"],
            Self::SrsMse => &["drop", "mode", "mse", "mse_db", "tap_errors", "selected_taps"],
            Self::CjtSinr => &["drop", "ue", "mode", "feedback", "sinr_db", "se", "serving_trp", "region", "rsrp_gap_db"],
            Self::Predict => &["drop", "nmse_predicted", "nmse_stale", "nmse_predicted_db", "nmse_stale_db"],
            Self::BeamSim => &["drop", "sample_index", "position_m", "mechanism", "serving_trp", "serving_beam", "sinr_db", "se", "ideal_se"],
            Self::Upt => &["drop", "mode", "feedback", "bursts", "total_bits", "total_time_s", "upt_bps"],
            Self::Occ => &["drop", "delay_spread_s", "mean_leakage", "max_leakage"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> ExperimentResult<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    Dft,
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsChoice {
    Fixed,
    Hopping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackChoice {
    Ideal,
    Type1,
    Etype2,
    CjtCodebook,
}

impl From<FeedbackChoice> for Feedback {
    fn from(f: FeedbackChoice) -> Self {
        match f {
            FeedbackChoice::Ideal => Feedback::Ideal,
            FeedbackChoice::Type1 => Feedback::Type1,
            FeedbackChoice::Etype2 => Feedback::EType2,
            FeedbackChoice::CjtCodebook => Feedback::CjtCodebook,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    SingleTrp,
    Cjt,
}

impl From<ModeChoice> for TransmissionMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::SingleTrp => TransmissionMode::SingleTrp,
            ModeChoice::Cjt => TransmissionMode::Cjt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismChoice {
    Dci,
    MacCe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerRatioParams {
    pub ports_vertical: usize,
    pub ports_horizontal: usize,
    pub polarizations: usize,
    pub units: usize,
    pub unit_spacing_hz: f64,
    pub clusters: usize,
    pub rays: usize,
    pub angle_spread_rad: f64,
    pub delay_spread_s: f64,
    pub k_values: Vec<usize>,
    pub bases: Vec<BasisChoice>,
}

impl Default for PowerRatioParams {
    fn default() -> Self {
        Self {
            ports_vertical: 4,
            ports_horizontal: 4,
            polarizations: 2,
            units: 13,
            unit_spacing_hz: 1.44e6,
            clusters: 6,
            rays: 20,
            angle_spread_rad: 0.1,
            delay_spread_s: 300e-9,
            k_values: vec![10, 20, 30, 40, 50, 60, 80, 100, 150, 200],
            bases: vec![BasisChoice::Dft, BasisChoice::Eigen],
        }
    }
}

impl PowerRatioParams {
    pub fn build(&self) -> crate::Result<(ArrayConfig, FrequencyGrid)> {
        let array = ArrayConfig::uniform(self.ports_vertical, self.ports_horizontal, self.polarizations)?;
        let grid = FrequencyGrid::new(self.units, self.unit_spacing_hz, 1)?;
        if self.clusters == 0 || self.rays == 0 {
            return Err(Error::invalid("clusters", "clusters and rays must be positive"));
        }
        if !(self.angle_spread_rad >= 0.0) {
            return Err(Error::invalid("angle_spread_rad", "must be non-negative"));
        }
        if !(self.delay_spread_s >= 0.0) {
            return Err(Error::invalid("delay_spread_s", "must be non-negative"));
        }
        let total = array.ports() * grid.units;
        if let Some(&k) = self.k_values.iter().find(|&&k| k == 0 || k > total) {
            return Err(Error::invalid("k_values", format!("{k} is outside 1..={total}")));
        }
        if self.bases.is_empty() {
            return Err(Error::invalid("bases", "at least one basis is needed"));
        }
        Ok((array, grid))
    }

    /// Scatterer geometry shared by every drop of a run.
    pub fn geometry(&self, master_seed: u64, grid: &FrequencyGrid) -> ScatteringGeometry {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        ScatteringGeometry::random(
            &mut rng,
            &ClusterModel::default(),
            grid,
            self.clusters,
            self.rays,
            self.angle_spread_rad,
            self.delay_spread_s,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrsParams {
    pub length: usize,
    pub target_root: usize,
    pub interferer_roots: Vec<usize>,
    pub transmissions: usize,
    pub target_paths: usize,
    pub interferer_paths: usize,
    pub max_delay_taps: usize,
    pub snr_db: f64,
    pub inr_db: f64,
    pub noise_power: f64,
    pub threshold_factor: f64,
    pub max_taps: usize,
    pub max_doppler_hz: f64,
    pub srs_period_s: f64,
    pub modes: Vec<CsChoice>,
}

impl Default for SrsParams {
    fn default() -> Self {
        let s = SrsScenario::default();
        Self {
            length: s.length,
            target_root: s.target_root,
            interferer_roots: s.interferer_roots,
            transmissions: 64,
            target_paths: s.target_paths,
            interferer_paths: s.interferer_paths,
            max_delay_taps: s.max_delay_taps,
            snr_db: s.snr_db,
            inr_db: s.inr_db,
            noise_power: s.noise_power,
            threshold_factor: s.selection.threshold_factor,
            max_taps: s.selection.max_taps,
            max_doppler_hz: s.max_doppler_hz,
            srs_period_s: s.srs_period_s,
            modes: vec![CsChoice::Fixed, CsChoice::Hopping],
        }
    }
}

impl SrsParams {
    pub fn build(&self) -> crate::Result<SrsScenario> {
        let s = SrsScenario {
            length: self.length,
            target_root: self.target_root,
            interferer_roots: self.interferer_roots.clone(),
            transmissions: self.transmissions,
            target_paths: self.target_paths,
            interferer_paths: self.interferer_paths,
            max_delay_taps: self.max_delay_taps,
            snr_db: self.snr_db,
            inr_db: self.inr_db,
            noise_power: self.noise_power,
            selection: TapSelection {
                threshold_factor: self.threshold_factor,
                max_taps: self.max_taps,
            },
            max_doppler_hz: self.max_doppler_hz,
            srs_period_s: self.srs_period_s,
        };
        s.validate()?;
        crate::srs::gen_sequence_for_allocation(self.target_root, self.length)?;
        for &r in &self.interferer_roots {
            crate::srs::gen_sequence_for_allocation(r, self.length).map_err(|_| Error::invalid("interferer_roots", format!("root {r} is invalid for length {}", self.length)))?;
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("modes", "at least one mode is needed"));
        }
        Ok(s)
    }
}

/// Parameters shared by `cjt-sinr` and `upt`, applied on top of the two-TRP layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CjtParams {
    pub ue_count: usize,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub shadowing_std_db: f64,
    pub coordination_threshold_db: f64,
    pub burst_bits: f64,
    pub feedback: Vec<FeedbackChoice>,
    pub modes: Vec<ModeChoice>,
}

impl Default for CjtParams {
    fn default() -> Self {
        let l = DropLayout::two_trp().expect("static preset");
        Self {
            ue_count: l.ue_count,
            tx_power_dbm: l.tx_power_dbm,
            noise_power_dbm: l.noise_power_dbm,
            shadowing_std_db: l.shadowing_std_db,
            coordination_threshold_db: l.coordination_threshold_db,
            burst_bits: l.burst_bits,
            feedback: vec![FeedbackChoice::Ideal, FeedbackChoice::Type1, FeedbackChoice::Etype2, FeedbackChoice::CjtCodebook],
            modes: vec![ModeChoice::SingleTrp, ModeChoice::Cjt],
        }
    }
}

impl CjtParams {
    pub fn build(&self) -> crate::Result<DropLayout> {
        let mut l = DropLayout::two_trp()?;
        l.ue_count = self.ue_count;
        l.tx_power_dbm = self.tx_power_dbm;
        l.noise_power_dbm = self.noise_power_dbm;
        l.shadowing_std_db = self.shadowing_std_db;
        l.coordination_threshold_db = self.coordination_threshold_db;
        l.burst_bits = self.burst_bits;
        l.validate()?;
        if self.feedback.is_empty() {
            return Err(Error::invalid("feedback", "at least one feedback type is needed"));
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("modes", "at least one mode is needed"));
        }
        Ok(l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictParams {
    pub ports_vertical: usize,
    pub ports_horizontal: usize,
    pub polarizations: usize,
    pub units: usize,
    pub unit_spacing_hz: f64,
    pub snapshots: usize,
    pub slot_gap_s: f64,
    pub future_m: usize,
    pub pairs_k: usize,
    pub doppler_oversampling: usize,
    pub min_paths: usize,
    pub max_paths: usize,
    pub normalized_doppler: f64,
}

impl Default for PredictParams {
    fn default() -> Self {
        Self {
            ports_vertical: 2,
            ports_horizontal: 8,
            polarizations: 2,
            units: 13,
            unit_spacing_hz: 360e3,
            snapshots: 16,
            slot_gap_s: 0.5e-3,
            future_m: 4,
            pairs_k: 208,
            doppler_oversampling: 8,
            min_paths: 2,
            max_paths: 4,
            normalized_doppler: 0.2,
        }
    }
}

impl PredictParams {
    pub fn build(&self) -> crate::Result<PredictionScenario> {
        let array = ArrayConfig::uniform(self.ports_vertical, self.ports_horizontal, self.polarizations)?;
        let grid = FrequencyGrid::new(self.units, self.unit_spacing_hz, 1)?;
        let mut config = PredictionConfig::new(self.snapshots, self.slot_gap_s, self.future_m)?;
        config.pairs_k = self.pairs_k;
        config.doppler_oversampling = self.doppler_oversampling;
        config.validate()?;
        if self.min_paths == 0 || self.max_paths < self.min_paths {
            return Err(Error::invalid("max_paths", "need 1 <= min_paths <= max_paths"));
        }
        let scenario = PredictionScenario {
            array,
            grid,
            model: ClusterModel {
                min_paths: self.min_paths,
                max_paths: self.max_paths,
                ..ClusterModel::default()
            },
            config,
            normalized_doppler: self.normalized_doppler,
        };
        if !(self.normalized_doppler >= 0.0) || scenario.max_doppler_hz() >= config.nyquist_hz() {
            return Err(Error::invalid("normalized_doppler", "must be non-negative and below the slot Nyquist rate"));
        }
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamParams {
    pub scenario: String,
    pub mechanisms: Vec<MechanismChoice>,
    pub dci_latency_s: f64,
    pub dci_bler: f64,
    pub mac_ce_latency_s: f64,
    pub mac_ce_bler: f64,
    pub application_delay_s: f64,
}

impl Default for BeamParams {
    fn default() -> Self {
        let (d, m) = (IndicationModel::dci(), IndicationModel::mac_ce());
        Self {
            scenario: "duh".into(),
            mechanisms: vec![MechanismChoice::Dci, MechanismChoice::MacCe],
            dci_latency_s: d.latency_s,
            dci_bler: d.bler,
            mac_ce_latency_s: m.latency_s,
            mac_ce_bler: m.bler,
            application_delay_s: 0.0,
        }
    }
}

impl BeamParams {
    pub fn build(&self) -> crate::Result<(BeamScenario, Vec<IndicationModel>)> {
        let scenario = BeamScenario::preset(&self.scenario)?;
        if self.mechanisms.is_empty() {
            return Err(Error::invalid("mechanisms", "at least one mechanism is needed"));
        }
        let models = self
            .mechanisms
            .iter()
            .map(|m| {
                let (mechanism, latency_s, bler, key_l, key_b) = match m {
                    MechanismChoice::Dci => (Mechanism::Dci, self.dci_latency_s, self.dci_bler, "dci_latency_s", "dci_bler"),
                    MechanismChoice::MacCe => (Mechanism::MacCe, self.mac_ce_latency_s, self.mac_ce_bler, "mac_ce_latency_s", "mac_ce_bler"),
                };
                let model = IndicationModel {
                    mechanism,
                    latency_s,
                    bler,
                    application_delay_s: self.application_delay_s,
                };
                model.validate().map_err(|e| match e {
                    Error::InvalidArgument { name: "latency_s", reason } => Error::invalid(key_l, reason),
                    Error::InvalidArgument { name: "bler", reason } => Error::invalid(key_b, reason),
                    other => other,
                })?;
                Ok(model)
            })
            .collect::<crate::Result<Vec<_>>>()?;
        Ok((scenario, models))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccParams {
    pub occ_length: usize,
    pub base_ports: usize,
    pub delay_spreads_s: Vec<f64>,
    pub re_spacing_hz: f64,
    pub resource_elements: usize,
    pub paths: usize,
    pub trials: usize,
}

impl Default for OccParams {
    fn default() -> Self {
        Self {
            occ_length: 4,
            base_ports: 12,
            delay_spreads_s: vec![0.0, 0.8e-6, 1.6e-6, 2.4e-6, 3.2e-6],
            re_spacing_hz: 60e3,
            resource_elements: 48,
            paths: 6,
            trials: 8,
        }
    }
}

impl OccParams {
    pub fn build(&self) -> crate::Result<OccConfig> {
        let cfg = OccConfig::new(self.occ_length, self.base_ports)?;
        if self.delay_spreads_s.is_empty() || self.delay_spreads_s.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::invalid("delay_spreads_s", "need at least one non-negative spread"));
        }
        if !(self.re_spacing_hz > 0.0) {
            return Err(Error::invalid("re_spacing_hz", "must be positive"));
        }
        if self.resource_elements == 0 || self.resource_elements % self.occ_length != 0 {
            return Err(Error::invalid("resource_elements", "must be a positive multiple of occ_length"));
        }
        if self.paths == 0 || self.trials == 0 {
            return Err(Error::invalid("trials", "paths and trials must be positive"));
        }
        Ok(cfg)
    }
}

/// With `bursts_csv` set, `upt` reports on measured bursts instead of simulated drops.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UptParams {
    pub bursts_csv: Option<PathBuf>,
}

fn default_drops() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_drops")]
    pub drops: usize,
    #[serde(default)]
    pub power_ratio: PowerRatioParams,
    #[serde(default)]
    pub srs: SrsParams,
    #[serde(default)]
    pub cjt: CjtParams,
    #[serde(default)]
    pub predict: PredictParams,
    #[serde(default)]
    pub beam: BeamParams,
    #[serde(default)]
    pub occ: OccParams,
    #[serde(default)]
    pub upt: UptParams,
}

impl ExperimentConfig {
    /// Defaults for `experiment` with seed 0.
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: 0,
            drops: default_drops(),
            power_ratio: PowerRatioParams::default(),
            srs: SrsParams::default(),
            cjt: CjtParams::default(),
            predict: PredictParams::default(),
            beam: BeamParams::default(),
            occ: OccParams::default(),
            upt: UptParams::default(),
        }
    }

    /// Checks the parameter block the selected experiment reads.
    pub fn validate(&self) -> ExperimentResult<()> {
        match self.experiment {
            ExperimentKind::PowerRatio => self.power_ratio.build().map(drop).map_err(|e| in_block("power_ratio", e)),
            ExperimentKind::SrsMse => self.srs.build().map(drop).map_err(|e| in_block("srs", e)),
            ExperimentKind::Upt if self.upt.bursts_csv.is_some() => Ok(()),
            ExperimentKind::CjtSinr | ExperimentKind::Upt => self.cjt.build().map(drop).map_err(|e| in_block("cjt", e)),
            ExperimentKind::Predict => self.predict.build().map(drop).map_err(|e| in_block("predict", e)),
            ExperimentKind::BeamSim => self.beam.build().map(drop).map_err(|e| in_block("beam", e)),
            ExperimentKind::Occ => self.occ.build().map(drop).map_err(|e| in_block("occ", e)),
        }
    }

    pub fn to_toml(&self) -> ExperimentResult<String> {
        toml::to_string(self).map_err(|e| ExperimentError::config("<document>", e.to_string()))
    }

    /// SHA-256 of the canonical serialisation, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("{self:?}").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> ExperimentResult<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| ExperimentError::config("<document>", e.to_string()))?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        ExperimentError::config(if key == "." { "<document>".to_string() } else { key }, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> ExperimentResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(&'static str),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

fn int(v: usize) -> Cell {
    Cell::Int(v as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Vec<(&'static str, String)>,
}

impl ResultTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Writes `# key=value` metadata lines followed by the CSV body.
    pub fn write_csv<W: Write>(&self, mut out: W) -> ExperimentResult<()> {
        let io = |source| ExperimentError::Io {
            path: PathBuf::from("<output>"),
            source,
        };
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}").map_err(io)?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> ExperimentResult<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Writes the table to `path`, creating or truncating it.
    pub fn write_to_path(&self, path: &Path) -> ExperimentResult<()> {
        let file = std::fs::File::create(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| match e {
            ExperimentError::Io { source, .. } => ExperimentError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }
}

/// Runs `f` on every drop in parallel and concatenates rows in drop order.
fn per_drop<F>(cfg: &ExperimentConfig, f: F) -> crate::Result<Vec<Vec<Cell>>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> crate::Result<Vec<Vec<Cell>>> + Sync,
{
    let chunks = (0..cfg.drops)
        .into_par_iter()
        .map(|i| f(i, &mut ChaCha8Rng::seed_from_u64(drop_seed(cfg.seed, i as u64))))
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Channel realisation of power-ratio drop `index`.
pub fn power_ratio_snapshot(cfg: &ExperimentConfig, geometry: &ScatteringGeometry, array: &ArrayConfig, grid: &FrequencyGrid, index: usize) -> crate::Result<ChannelSnapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(drop_seed(cfg.seed, index as u64));
    synthesize_channel(&geometry.realize(&mut rng, array), 0.0, array, grid)
}

fn run_power_ratio(cfg: &ExperimentConfig) -> crate::Result<Vec<Vec<Cell>>> {
    let p = &cfg.power_ratio;
    let (array, grid) = p.build()?;
    let geometry = p.geometry(cfg.seed, &grid);
    let snaps = (0..cfg.drops)
        .into_par_iter()
        .map(|i| power_ratio_snapshot(cfg, &geometry, &array, &grid, i))
        .collect::<crate::Result<Vec<_>>>()?;
    if snaps.is_empty() {
        return Ok(Vec::new());
    }
    let dft = BasisPair::dft(&array, grid.units);
    let eigen = if p.bases.contains(&BasisChoice::Eigen) { Some(eigen_basis(&snaps)?) } else { None };
    let chunks = snaps
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rows = Vec::new();
            for b in &p.bases {
                let (name, basis) = match b {
                    BasisChoice::Dft => ("dft", &dft),
                    BasisChoice::Eigen => ("eigen", eigen.as_ref().expect("built above")),
                };
                for &k in &p.k_values {
                    rows.push(vec![int(i), Cell::Text(name), int(k), Cell::Float(power_ratio(s, basis, k)?)]);
                }
            }
            Ok(rows)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn run_srs(cfg: &ExperimentConfig) -> crate::Result<Vec<Vec<Cell>>> {
    let scenario = cfg.srs.build()?;
    per_drop(cfg, |i, rng| {
        let seed = rand::Rng::random::<u64>(rng);
        cfg.srs
            .modes
            .iter()
            .map(|m| {
                let (name, mode) = match m {
                    CsChoice::Fixed => ("fixed", CsMode::Fixed),
                    CsChoice::Hopping => ("hopping", CsMode::Hopping),
                };
                let r = run_srs_drop(&scenario, mode, &mut ChaCha8Rng::seed_from_u64(seed))?;
                Ok(vec![int(i), Cell::Text(name), Cell::Float(r.mse), Cell::Float(linear_to_db(r.mse)), int(r.tap_err_count), int(r.selected.len())])
            })
            .collect()
    })
}

fn run_cjt(cfg: &ExperimentConfig, per_ue: bool) -> crate::Result<Vec<Vec<Cell>>> {
    let layout = cfg.cjt.build()?;
    per_drop(cfg, |i, rng| {
        let scenario = DropScenario::random(&layout, rng)?;
        let mut rows = Vec::new();
        for &m in &cfg.cjt.modes {
            let mode = TransmissionMode::from(m);
            for &f in &cfg.cjt.feedback {
                let fb = Feedback::from(f);
                let s = run_drop(&scenario, fb, mode)?;
                if per_ue {
                    for u in &s.ues {
                        rows.push(vec![
                            int(i),
                            int(u.ue),
                            Cell::Text(mode.name()),
                            Cell::Text(fb.name()),
                            Cell::Float(u.sinr_db),
                            Cell::Float(u.se),
                            int(u.serving_trp),
                            int(u.region as usize),
                            Cell::Float(u.rsrp_gap_db),
                        ]);
                    }
                } else {
                    let bursts = layout_bursts(&layout, &s)?;
                    rows.push(upt_row(i, mode.name(), fb.name(), &bursts)?);
                }
            }
        }
        Ok(rows)
    })
}

/// One burst of `burst_bits` per scheduled UE, delivered at its SE over the band.
fn layout_bursts(layout: &DropLayout, s: &crate::cjt::DropSummary) -> crate::Result<Vec<BurstRecord>> {
    let g = &layout.grid;
    let bandwidth = g.units as f64 * g.unit_spacing_hz * g.subcarriers_per_unit as f64;
    s.ues
        .iter()
        .filter(|u| u.se > 0.0)
        .map(|u| BurstRecord::new(layout.burst_bits, layout.burst_bits / (u.se * bandwidth)))
        .collect()
}

fn upt_row(drop: usize, mode: &'static str, feedback: &'static str, bursts: &[BurstRecord]) -> crate::Result<Vec<Cell>> {
    let bits: f64 = bursts.iter().map(|b| b.size_bits).sum();
    let time: f64 = bursts.iter().map(|b| b.duration_s).sum();
    let r = if bursts.is_empty() { 0.0 } else { upt(bursts)? };
    Ok(vec![int(drop), Cell::Text(mode), Cell::Text(feedback), int(bursts.len()), Cell::Float(bits), Cell::Float(time), Cell::Float(r)])
}

#[derive(Deserialize)]
struct BurstLine {
    size_bits: f64,
    duration_s: f64,
}

/// Reads `size_bits,duration_s` records with a header line.
pub fn read_bursts(path: &Path) -> ExperimentResult<Vec<BurstRecord>> {
    let file = std::fs::File::open(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for (line, rec) in reader.deserialize::<BurstLine>().enumerate() {
        let b = rec.map_err(|e| ExperimentError::config("upt.bursts_csv", format!("{}: record {}: {e}", path.display(), line + 1)))?;
        out.push(BurstRecord::new(b.size_bits, b.duration_s).map_err(|e| ExperimentError::config("upt.bursts_csv", format!("{}: record {}: {e}", path.display(), line + 1)))?);
    }
    Ok(out)
}

fn run_predict(cfg: &ExperimentConfig) -> crate::Result<Vec<Vec<Cell>>> {
    let scenario = cfg.predict.build()?;
    per_drop(cfg, |i, rng| {
        let (_, p, s) = run_prediction_drop(&scenario, rng)?;
        Ok(vec![vec![int(i), Cell::Float(p), Cell::Float(s), Cell::Float(linear_to_db(p)), Cell::Float(linear_to_db(s))]])
    })
}

fn run_beam(cfg: &ExperimentConfig) -> crate::Result<Vec<Vec<Cell>>> {
    let (scenario, models) = cfg.beam.build()?;
    per_drop(cfg, |i, rng| {
        let seed = rand::Rng::random::<u64>(rng);
        let mut rows = Vec::new();
        for m in &models {
            for s in scenario.run(m, seed)? {
                rows.push(vec![
                    int(i),
                    int(s.sample_index),
                    Cell::Float(s.position_m),
                    Cell::Text(m.mechanism.name()),
                    int(s.serving.0),
                    int(s.serving.1),
                    Cell::Float(s.sinr_db),
                    Cell::Float(s.se),
                    Cell::Float(s.ideal_se),
                ]);
            }
        }
        Ok(rows)
    })
}

fn run_occ(cfg: &ExperimentConfig) -> crate::Result<Vec<Vec<Cell>>> {
    let o = &cfg.occ;
    let occ = o.build()?;
    per_drop(cfg, |i, rng| {
        let sweep = occ_leakage_sweep(&occ, &o.delay_spreads_s, o.re_spacing_hz, o.resource_elements, o.paths, o.trials, rng)?;
        Ok(sweep
            .into_iter()
            .map(|p| vec![int(i), Cell::Float(p.delay_spread_s), Cell::Float(p.mean_leakage), Cell::Float(p.max_leakage)])
            .collect())
    })
}

/// Validates then executes `cfg`, producing a table in drop order.
pub fn run(cfg: &ExperimentConfig) -> ExperimentResult<ResultTable> {
    cfg.validate()?;
    if let (ExperimentKind::Upt, Some(path)) = (cfg.experiment, &cfg.upt.bursts_csv) {
        let bursts = read_bursts(path)?;
        return Ok(table(cfg, vec![upt_row(0, "measured", "measured", &bursts)?]));
    }
    let rows = match cfg.experiment {
        ExperimentKind::PowerRatio => run_power_ratio(cfg),
        ExperimentKind::SrsMse => run_srs(cfg),
        ExperimentKind::CjtSinr => run_cjt(cfg, true),
        ExperimentKind::Upt => run_cjt(cfg, false),
        ExperimentKind::Predict => run_predict(cfg),
        ExperimentKind::BeamSim => run_beam(cfg),
        ExperimentKind::Occ => run_occ(cfg),
    }?;
    Ok(table(cfg, rows))
}

fn table(cfg: &ExperimentConfig, rows: Vec<Vec<Cell>>) -> ResultTable {
    ResultTable {
        header: cfg.experiment.header().to_vec(),
        rows,
        metadata: vec![
            ("tool", format!("mimosim {TOOL_VERSION}")),
            ("experiment", cfg.experiment.name().to_string()),
            ("seed", cfg.seed.to_string()),
            ("drops", cfg.drops.to_string()),
            ("config_sha256", cfg.hash()),
        ],
    }
}

/// Strips `#` metadata lines, leaving the CSV body.
pub fn csv_body(text: &str) -> String {
    text.split_inclusive('\n').filter(|l| !l.starts_with('#')).collect()
}
