//! Run configuration: a JSON document in which every rate carries an
//! explicit unit tag.

use std::f64::consts::TAU;

use atomcluster_core::dynamics::PhysicalParams;
use atomcluster_core::protocol::{DetectorModel, FailurePolicy, ImperfectionModel};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateUnit {
    /// Value `v` means `2π·v` rad/µs.
    #[serde(rename = "MHz*2pi", alias = "2pi*MHz", alias = "×2π MHz")]
    MegahertzTimesTwoPi,
    #[serde(rename = "rad/us", alias = "rad/µs")]
    RadPerMicrosecond,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rate {
    pub value: f64,
    pub unit: RateUnit,
}

impl Rate {
    pub fn mhz(value: f64) -> Self {
        Rate { value, unit: RateUnit::MegahertzTimesTwoPi }
    }

    pub fn rad_per_us(&self) -> f64 {
        match self.unit {
            RateUnit::MegahertzTimesTwoPi => TAU * self.value,
            RateUnit::RadPerMicrosecond => self.value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub h: Rate,
    pub kappa: Rate,
    pub gamma: Rate,
}

impl CavityConfig {
    pub fn rubidium() -> Self {
        CavityConfig { h: Rate::mhz(27.0), kappa: Rate::mhz(2.4), gamma: Rate::mhz(6.0) }
    }

    pub fn params(&self, window: Option<f64>) -> CliResult<PhysicalParams> {
        let (h, k, g) = (self.h.rad_per_us(), self.kappa.rad_per_us(), self.gamma.rad_per_us());
        match window {
            Some(w) => PhysicalParams::new(h, k, g, w),
            None => PhysicalParams::with_default_window(h, k, g),
        }
        .map_err(config_err)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionMode {
    /// Each cavity leaks its photon with the probability set by its rates.
    #[default]
    Cavity,
    /// Every cavity emits with certainty; only the optics are imperfect.
    Forced,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsConfig {
    /// Per-photon loss `η` on every source rail.
    #[serde(default)]
    pub photon_loss: f64,
    /// Per-rail losses overriding `photon_loss`, in source-rail order.
    #[serde(default)]
    pub rail_loss: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub detector_efficiency: f64,
    #[serde(default)]
    pub dark_rate_hz: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig { photon_loss: 0.0, rail_loss: None, detector_efficiency: 1.0, dark_rate_hz: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    H,
    Kappa,
    Gamma,
    WindowUs,
    PhotonLoss,
    DetectorEfficiency,
    DarkRateHz,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::H => "h",
            SweepParam::Kappa => "kappa",
            SweepParam::Gamma => "gamma",
            SweepParam::WindowUs => "window_us",
            SweepParam::PhotonLoss => "photon_loss",
            SweepParam::DetectorEfficiency => "detector_efficiency",
            SweepParam::DarkRateHz => "dark_rate_hz",
        }
    }

    pub fn is_rate(self) -> bool {
        matches!(self, SweepParam::H | SweepParam::Kappa | SweepParam::Gamma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    /// Number of points, endpoints included.
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParam,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<Range>,
    /// Required for the rate parameters `h`, `kappa`, `gamma`.
    #[serde(default)]
    pub unit: Option<RateUnit>,
}

impl SweepAxis {
    pub fn len(&self) -> CliResult<u64> {
        match (&self.values, &self.range) {
            (Some(v), None) if !v.is_empty() => Ok(v.len() as u64),
            (None, Some(r)) if r.steps >= 1 => Ok(r.steps),
            _ => Err(CliError::Config(format!(
                "sweep axis `{}` needs exactly one of a non-empty `values` list or a `range` with steps >= 1",
                self.parameter.name()
            ))),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len().map_or(true, |n| n == 0)
    }

    pub fn value(&self, i: u64) -> f64 {
        match (&self.values, &self.range) {
            (Some(v), _) => v[i as usize],
            (None, Some(r)) if r.steps == 1 => r.from,
            (None, Some(r)) => r.from + (r.to - r.from) * i as f64 / (r.steps - 1) as f64,
            _ => f64::NAN,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyConfig {
    #[default]
    KeepTruncated,
    DiscardChain,
}

impl From<PolicyConfig> for FailurePolicy {
    fn from(p: PolicyConfig) -> Self {
        match p {
            PolicyConfig::KeepTruncated => FailurePolicy::KeepTruncated,
            PolicyConfig::DiscardChain => FailurePolicy::DiscardChain,
        }
    }
}

fn default_target() -> usize {
    8
}

fn default_layout() -> Vec<usize> {
    vec![2, 2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    /// Chain length to grow to (even, at least 4).
    #[serde(default = "default_target")]
    pub target: usize,
    #[serde(default)]
    pub policy: PolicyConfig,
    /// Rates of the two end-atom cavities; defaults to the shared cavity.
    #[serde(default)]
    pub cavities: Option<Vec<CavityConfig>>,
    /// Atoms per logical qubit of the two chains being fused.
    #[serde(default = "default_layout")]
    pub left_layout: Vec<usize>,
    #[serde(default = "default_layout")]
    pub right_layout: Vec<usize>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            target: default_target(),
            policy: PolicyConfig::default(),
            cavities: None,
            left_layout: default_layout(),
            right_layout: default_layout(),
        }
    }
}

fn default_sets() -> usize {
    100
}
fn default_tolerance() -> f64 {
    1e-9
}
fn default_rtol() -> f64 {
    1e-12
}
fn default_atol() -> f64 {
    1e-14
}
fn default_oracle_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_sets")]
    pub sets: usize,
    /// Largest accepted amplitude deviation between closed form and ODE.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_rtol")]
    pub integrator_rtol: f64,
    #[serde(default = "default_atol")]
    pub integrator_atol: f64,
    #[serde(default = "default_oracle_seed")]
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            sets: default_sets(),
            tolerance: default_tolerance(),
            integrator_rtol: default_rtol(),
            integrator_atol: default_atol(),
            seed: default_oracle_seed(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Four-atom cluster for four inputs, Bell pair for two, none otherwise.
    #[default]
    Auto,
    FourAtom,
    Bell,
    None,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Shared rates of every cavity.
    #[serde(default)]
    pub cavity: Option<CavityConfig>,
    /// Individual rates, one per source cavity.
    #[serde(default)]
    pub cavities: Option<Vec<CavityConfig>>,
    /// Detection window (µs); defaults to 3/κ of the first cavity.
    #[serde(default)]
    pub window_us: Option<f64>,
    #[serde(default)]
    pub emission: EmissionMode,
    #[serde(default)]
    pub optics: OpticsConfig,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Preset name, path to a network document, or an inline document.
    #[serde(default)]
    pub network: Option<serde_json::Value>,
    #[serde(default)]
    pub target: TargetKind,
    #[serde(default)]
    pub sweep: Option<Vec<SweepAxis>>,
    #[serde(default)]
    pub fusion: Option<FusionConfig>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
}

/// Parses a configuration document, naming the offending field and position
/// on failure.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!("line {}, column {}, field `{path}`: {inner}", inner.line(), inner.column()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn check_unit_interval(name: &str, v: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Config(format!("`{name}` must lie in [0, 1], got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.cavity.is_some() && self.cavities.is_some() {
            return Err(CliError::Config(String::from("give either `cavity` or `cavities`, not both")));
        }
        if let Some(c) = &self.cavities {
            if c.len() != 4 {
                return Err(CliError::Config(format!("`cavities` needs 4 entries, got {}", c.len())));
            }
        }
        if let Some(w) = self.window_us {
            if !(w > 0.0 && w.is_finite()) {
                return Err(CliError::Config(format!("`window_us` must be positive, got {w}")));
            }
        }
        check_unit_interval("optics.photon_loss", self.optics.photon_loss)?;
        check_unit_interval("optics.detector_efficiency", self.optics.detector_efficiency)?;
        if let Some(r) = &self.optics.rail_loss {
            if r.len() != 4 {
                return Err(CliError::Config(format!("`optics.rail_loss` needs 4 entries, got {}", r.len())));
            }
            for &v in r {
                check_unit_interval("optics.rail_loss", v)?;
            }
        }
        if !(self.optics.dark_rate_hz >= 0.0 && self.optics.dark_rate_hz.is_finite()) {
            return Err(CliError::Config(format!("`optics.dark_rate_hz` must be >= 0, got {}", self.optics.dark_rate_hz)));
        }
        if let Some(axes) = &self.sweep {
            for a in axes {
                a.len()?;
                if a.parameter.is_rate() && a.unit.is_none() {
                    return Err(CliError::Config(format!(
                        "sweep axis `{}` is a rate and needs a `unit` tag",
                        a.parameter.name()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cavity_configs(&self) -> Vec<CavityConfig> {
        match (&self.cavities, &self.cavity) {
            (Some(c), _) => c.clone(),
            (None, Some(c)) => vec![*c; 4],
            (None, None) => vec![CavityConfig::rubidium(); 4],
        }
    }

    /// Window shared by every cavity: explicit, or 3/κ of the first one.
    pub fn window(&self) -> CliResult<f64> {
        match self.window_us {
            Some(w) => Ok(w),
            None => Ok(self.cavity_configs()[0].params(None)?.window),
        }
    }

    pub fn cavity_params(&self) -> CliResult<Vec<PhysicalParams>> {
        let w = self.window()?;
        self.cavity_configs().iter().map(|c| c.params(Some(w))).collect()
    }

    pub fn rail_transmissions(&self) -> Vec<f64> {
        match &self.optics.rail_loss {
            Some(r) => r.iter().map(|l| 1.0 - l).collect(),
            None => vec![1.0 - self.optics.photon_loss; 4],
        }
    }

    /// Four-cavity generation model.
    pub fn generation_model(&self, detectors: usize) -> CliResult<ImperfectionModel> {
        let cavities = self.cavity_params()?;
        let model = ImperfectionModel {
            window: cavities[0].window,
            cavities,
            transmissions: self.rail_transmissions(),
            detectors: vec![
                DetectorModel { efficiency: self.optics.detector_efficiency, dark_rate_hz: self.optics.dark_rate_hz };
                detectors
            ],
            force_emission: self.emission == EmissionMode::Forced,
        };
        model.validate().map_err(config_err)?;
        Ok(model)
    }

    /// Two-cavity fusion model: the fusion section's cavities, or the first
    /// two generation cavities.
    pub fn fusion_model(&self) -> CliResult<ImperfectionModel> {
        let w = self.window()?;
        let cavities = match self.fusion.as_ref().and_then(|f| f.cavities.as_ref()) {
            Some(c) if c.len() == 2 => c.iter().map(|c| c.params(Some(w))).collect::<CliResult<Vec<_>>>()?,
            Some(c) => return Err(CliError::Config(format!("`fusion.cavities` needs 2 entries, got {}", c.len()))),
            None => self.cavity_params()?[..2].to_vec(),
        };
        let model = ImperfectionModel {
            window: w,
            cavities,
            transmissions: self.rail_transmissions()[..2].to_vec(),
            detectors: vec![
                DetectorModel { efficiency: self.optics.detector_efficiency, dark_rate_hz: self.optics.dark_rate_hz };
                2
            ],
            force_emission: self.emission == EmissionMode::Forced,
        };
        model.validate().map_err(config_err)?;
        Ok(model)
    }

    /// Copy with one sweep parameter set.
    pub fn with_param(&self, param: SweepParam, value: f64, unit: Option<RateUnit>) -> RunConfig {
        let mut c = self.clone();
        let rate = Rate { value, unit: unit.unwrap_or(RateUnit::MegahertzTimesTwoPi) };
        let mut cavities = c.cavity_configs();
        match param {
            SweepParam::H => cavities.iter_mut().for_each(|x| x.h = rate),
            SweepParam::Kappa => cavities.iter_mut().for_each(|x| x.kappa = rate),
            SweepParam::Gamma => cavities.iter_mut().for_each(|x| x.gamma = rate),
            SweepParam::WindowUs => c.window_us = Some(value),
            SweepParam::PhotonLoss => {
                c.optics.photon_loss = value;
                c.optics.rail_loss = None;
            }
            SweepParam::DetectorEfficiency => c.optics.detector_efficiency = value,
            SweepParam::DarkRateHz => c.optics.dark_rate_hz = value,
        }
        if param.is_rate() {
            c.cavity = None;
            c.cavities = Some(cavities);
        }
        c
    }
}
