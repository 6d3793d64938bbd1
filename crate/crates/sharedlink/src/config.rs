//! JSON run configuration.
//!
//! Units are fixed: hours, vehicles and vehicles per hour. Every file carries
//! a `schema` version. Parsing checks structure first (reporting the JSON
//! path of the offending field), then model invariants (reporting the field
//! and the inequality it violates).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sharedlink_core::lyapunov::Region;
use sharedlink_core::simulator::{EstimatorOptions, IntegratorOptions, SimConfig};
use sharedlink_core::stability::{SweepGrid, Template};
use sharedlink_core::{
    DivergeParams, FlowOptions, InflowChain, MergeParams, Mode, Network, NetworkState, PriorityVector, ProductChain,
    Topology,
};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("schema: unsupported version {found} (expected {SCHEMA_VERSION})")]
    Version { found: u32 },
    #[error("{field}: missing, required by `{command}`")]
    Missing { field: &'static str, command: &'static str },
    #[error("{field}: {violated}")]
    Invariant { field: String, violated: String },
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Read { .. } => "io",
            ConfigError::Schema { .. } | ConfigError::Version { .. } => "schema",
            ConfigError::Missing { .. } => "missing_field",
            ConfigError::Invariant { .. } => "invariant",
        }
    }

    pub fn field(&self) -> Option<String> {
        match self {
            ConfigError::Read { .. } => None,
            ConfigError::Schema { field, .. } | ConfigError::Invariant { field, .. } => Some(field.clone()),
            ConfigError::Version { .. } => Some("schema".into()),
            ConfigError::Missing { field, .. } => Some((*field).into()),
        }
    }
}

fn invariant(field: impl Into<String>, violated: impl Into<String>) -> ConfigError {
    ConfigError::Invariant {
        field: field.into(),
        violated: violated.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TopologyName {
    #[default]
    #[serde(rename = "merge")]
    Merge,
    #[serde(rename = "merge-diverge")]
    MergeDiverge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub a_plus: f64,
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeSection {
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    /// Defaults to F3 in the merge-diverge topology.
    #[serde(rename = "R3", default)]
    pub r3: Option<f64>,
    pub phi1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergeSection {
    /// Not needed by `sweep`, which takes its values from the grid.
    #[serde(rename = "F3", default)]
    pub f3: Option<f64>,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(rename = "R4")]
    pub r4: f64,
    #[serde(rename = "R5")]
    pub r5: f64,
}

fn default_theta() -> f64 {
    40.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub mode: Mode,
    #[serde(default)]
    pub q: [f64; 2],
    #[serde(default)]
    pub q3: [f64; 2],
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState {
            mode: Mode::Off,
            q: [0.0; 2],
            q3: [0.0; 2],
        }
    }
}

impl InitialState {
    fn state(&self) -> NetworkState {
        NetworkState::new(self.mode, self.q, self.q3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default = "default_estimate_horizon")]
    pub horizon: f64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default)]
    pub slope_threshold: Option<f64>,
    #[serde(default = "default_avg_tol")]
    pub avg_tol: f64,
    #[serde(default = "default_avg_floor")]
    pub avg_floor: f64,
    #[serde(default)]
    pub perturbed_initial: Option<InitialState>,
}

fn default_ensemble() -> usize {
    8
}
fn default_estimate_horizon() -> f64 {
    5000.0
}
fn default_checkpoints() -> usize {
    100
}
fn default_avg_tol() -> f64 {
    0.15
}
fn default_avg_floor() -> f64 {
    1.0
}

impl Default for EstimateSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Either an explicit list or `steps` equal intervals from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { from: f64, to: f64, steps: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { from, to, steps } => sharedlink_core::stability::grid_points(*from, *to, *steps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "F3")]
    pub f3: Axis,
    pub phi1: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateName {
    V1,
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRegion {
    #[serde(default = "default_region_bound")]
    pub bound: f64,
    #[serde(default = "default_region_warmup")]
    pub warmup: f64,
    #[serde(default = "default_region_horizon")]
    pub horizon: f64,
    #[serde(default = "default_region_runs")]
    pub runs: usize,
}

fn default_region_bound() -> f64 {
    50.0
}
fn default_region_warmup() -> f64 {
    5.0
}
fn default_region_horizon() -> f64 {
    200.0
}
fn default_region_runs() -> usize {
    8
}

impl Default for TrajectoryRegion {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    /// Defaults to V1 for the merge topology and V2 otherwise.
    #[serde(default)]
    pub certificate: Option<CertificateName>,
    /// Side of the sampled box for V1 (veh).
    #[serde(rename = "box", default = "default_box")]
    pub bound: f64,
    #[serde(default = "default_grid_divisions")]
    pub grid_divisions: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// States used to calibrate `d` for V2.
    #[serde(default = "default_calibration")]
    pub calibration_samples: usize,
    #[serde(default)]
    pub region: TrajectoryRegion,
}

fn default_box() -> f64 {
    1e4
}
fn default_grid_divisions() -> usize {
    200
}
fn default_samples() -> usize {
    10_000
}
fn default_calibration() -> usize {
    40_000
}

impl Default for DriftSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// The file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default)]
    pub topology: TopologyName,
    pub chains: [ChainSection; 2],
    pub merge: MergeSection,
    #[serde(default)]
    pub diverge: Option<DivergeSection>,
    /// Simulate merge-diverge configurations that break `R4, R5 < F3 < R4 + R5`.
    #[serde(default)]
    pub allow_standing_violation: bool,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    #[serde(default = "default_eps_q")]
    pub eps_q: f64,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub constant_inflow: Option<[f64; 2]>,
    /// Trajectory sampling interval (hr).
    #[serde(default = "default_output_interval")]
    pub output_interval: f64,
    #[serde(default)]
    pub estimate: Option<EstimateSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub drift: Option<DriftSection>,
}

fn default_max_step() -> f64 {
    1e-3
}
fn default_eps_q() -> f64 {
    1e-9
}
fn default_output_interval() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Classify,
    Sweep,
    DriftCheck,
    Estimate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::DriftCheck => "drift-check",
            Command::Estimate => "estimate",
        }
    }

    /// Commands that integrate the merge-diverge dynamics.
    fn simulates(self) -> bool {
        matches!(self, Command::Simulate | Command::Estimate | Command::DriftCheck)
    }
}

/// A configuration validated for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub file: ConfigFile,
    pub chain: ProductChain,
    pub priority: PriorityVector,
}

pub fn parse_config(path: &Path, command: Command) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text, command)
}

pub fn parse_config_str(text: &str, command: Command) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        ConfigError::Schema {
            field: if field == "." { "(root)".into() } else { field },
            message: e.into_inner().to_string(),
        }
    })?;
    RunConfig::new(file, command)
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invariant(field, format!("must be finite and > 0 (got {v})")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invariant(field, format!("must be finite and >= 0 (got {v})")))
    }
}

impl RunConfig {
    pub fn new(file: ConfigFile, command: Command) -> Result<Self, ConfigError> {
        if file.schema != SCHEMA_VERSION {
            return Err(ConfigError::Version { found: file.schema });
        }
        let mut links = Vec::with_capacity(2);
        for (k, c) in file.chains.iter().enumerate() {
            positive(&format!("chains[{k}].a_plus"), c.a_plus)?;
            positive(&format!("chains[{k}].lambda"), c.lambda)?;
            positive(&format!("chains[{k}].mu"), c.mu)?;
            links.push(InflowChain::new(c.a_plus, c.lambda, c.mu).expect("checked above"));
        }
        let chain = ProductChain::new(links[0], links[1]);
        let m = &file.merge;
        if !(0.0..=1.0).contains(&m.phi1) {
            return Err(invariant(
                "merge.phi1",
                format!(
                    "priority constraint phi1 >= 0, phi2 = 1 - phi1 >= 0 violated (phi1 = {})",
                    m.phi1
                ),
            ));
        }
        let priority = PriorityVector::new(m.phi1).expect("checked above");
        positive("merge.F1", m.f1)?;
        positive("merge.F2", m.f2)?;
        if let Some(r3) = m.r3 {
            positive("merge.R3", r3)?;
        }
        positive("max_step", file.max_step)?;
        non_negative("eps_q", file.eps_q)?;
        positive("output_interval", file.output_interval)?;
        if let Some(h) = file.horizon {
            non_negative("horizon", h)?;
        }
        for (k, q) in file.initial_state.q.iter().enumerate() {
            non_negative(&format!("initial_state.q[{k}]"), *q)?;
        }
        for (k, q) in file.initial_state.q3.iter().enumerate() {
            non_negative(&format!("initial_state.q3[{k}]"), *q)?;
        }
        if let Some(a) = file.constant_inflow {
            non_negative("constant_inflow[0]", a[0])?;
            non_negative("constant_inflow[1]", a[1])?;
        }

        match (file.topology, &file.diverge) {
            (TopologyName::MergeDiverge, None) => {
                return Err(ConfigError::Missing {
                    field: "diverge",
                    command: command.name(),
                })
            }
            (TopologyName::MergeDiverge, Some(d)) => {
                positive("diverge.theta", d.theta)?;
                positive("diverge.R4", d.r4)?;
                positive("diverge.R5", d.r5)?;
                if let Some(f3) = d.f3 {
                    positive("diverge.F3", f3)?;
                    let standing = d.r4 < f3 && d.r5 < f3 && f3 < d.r4 + d.r5;
                    if command.simulates() && !standing && !file.allow_standing_violation {
                        return Err(invariant(
                            "diverge.F3",
                            format!(
                                "standing assumption R4 < F3, R5 < F3, F3 < R4 + R5 violated \
                                 (F3 = {f3}, R4 = {}, R5 = {}); set allow_standing_violation to override",
                                d.r4, d.r5
                            ),
                        ));
                    }
                    let total = file.initial_state.q3[0] + file.initial_state.q3[1];
                    if total > d.theta {
                        return Err(invariant(
                            "initial_state.q3",
                            format!("q3_1 + q3_2 <= theta violated ({total} > {})", d.theta),
                        ));
                    }
                }
            }
            (TopologyName::Merge, _) => {
                if file.initial_state.q3 != [0.0; 2] {
                    return Err(invariant("initial_state.q3", "must be zero in the merge topology"));
                }
            }
        }

        let run = RunConfig {
            command,
            file,
            chain,
            priority,
        };
        run.check_command_fields()?;
        Ok(run)
    }

    fn missing(&self, field: &'static str) -> ConfigError {
        ConfigError::Missing {
            field,
            command: self.command.name(),
        }
    }

    fn check_command_fields(&self) -> Result<(), ConfigError> {
        match self.command {
            Command::Simulate => {
                self.file.horizon.ok_or_else(|| self.missing("horizon"))?;
                self.network()?;
            }
            Command::Classify | Command::Estimate => {
                self.network()?;
            }
            Command::DriftCheck => {
                self.network()?;
                let d = self.file.drift.unwrap_or_default();
                positive("drift.box", d.bound)?;
                if d.grid_divisions == 0 {
                    return Err(invariant("drift.grid_divisions", "must be >= 1"));
                }
                if d.samples == 0 {
                    return Err(invariant("drift.samples", "must be >= 1"));
                }
            }
            Command::Sweep => {
                if self.file.topology != TopologyName::MergeDiverge {
                    return Err(invariant("topology", "sweep requires \"merge-diverge\""));
                }
                self.file.sweep.as_ref().ok_or_else(|| self.missing("sweep"))?;
                self.sweep_grid()?;
            }
        }
        if let Some(e) = &self.file.estimate {
            if e.ensemble == 0 {
                return Err(invariant("estimate.ensemble", "must be >= 1"));
            }
            if e.checkpoints < 4 {
                return Err(invariant("estimate.checkpoints", "must be >= 4"));
            }
            positive("estimate.horizon", e.horizon)?;
            positive("estimate.avg_tol", e.avg_tol)?;
            positive("estimate.avg_floor", e.avg_floor)?;
            if let Some(s) = e.slope_threshold {
                positive("estimate.slope_threshold", s)?;
            }
        }
        Ok(())
    }

    pub fn topology(&self) -> Topology {
        match self.file.topology {
            TopologyName::Merge => Topology::Merge,
            TopologyName::MergeDiverge => Topology::MergeDiverge,
        }
    }

    fn options(&self) -> FlowOptions {
        FlowOptions {
            eps_q: self.file.eps_q,
            ..FlowOptions::default()
        }
    }

    pub fn network(&self) -> Result<Network, ConfigError> {
        let m = &self.file.merge;
        let net = match self.file.topology {
            TopologyName::Merge => {
                let r3 = m.r3.ok_or_else(|| self.missing("merge.R3"))?;
                Network::merge_only(MergeParams::new([m.f1, m.f2], r3, self.priority).expect("checked at parse"))
            }
            TopologyName::MergeDiverge => {
                let d = self.file.diverge.as_ref().ok_or_else(|| self.missing("diverge"))?;
                let f3 = d.f3.ok_or_else(|| self.missing("diverge.F3"))?;
                let r3 = m.r3.unwrap_or(f3);
                Network::merge_diverge(
                    MergeParams::new([m.f1, m.f2], r3, self.priority).expect("checked at parse"),
                    DivergeParams::new(f3, d.theta, [d.r4, d.r5]).expect("checked at parse"),
                )
            }
        };
        Ok(net.with_options(self.options()))
    }

    pub fn seed(&self) -> u64 {
        self.file.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.file.seed = seed;
    }

    pub fn sim_config(&self, horizon: f64) -> Result<SimConfig, ConfigError> {
        let mut config = SimConfig::new(
            self.network()?,
            self.chain,
            horizon,
            self.file.initial_state.state(),
            self.seed(),
        );
        config.integrator = IntegratorOptions {
            max_step: self.file.max_step,
            ..IntegratorOptions::default()
        };
        config.constant_inflow = self.file.constant_inflow;
        Ok(config)
    }

    pub fn estimator(&self) -> EstimatorOptions {
        let e = self.file.estimate.unwrap_or_default();
        EstimatorOptions {
            ensemble: e.ensemble,
            horizon: e.horizon,
            checkpoints: e.checkpoints,
            slope_threshold: e.slope_threshold,
            avg_tol: e.avg_tol,
            avg_floor: e.avg_floor,
            perturbed_initial: e.perturbed_initial.map(|s| s.state()),
        }
    }

    pub fn template(&self) -> Result<Template, ConfigError> {
        let d = self.file.diverge.as_ref().ok_or_else(|| self.missing("diverge"))?;
        Ok(Template {
            mean_inflow: self.chain.mean_inflow(),
            capacity: [self.file.merge.f1, self.file.merge.f2],
            downstream: [d.r4, d.r5],
        })
    }

    pub fn sweep_grid(&self) -> Result<SweepGrid, ConfigError> {
        let s = self.file.sweep.as_ref().ok_or_else(|| self.missing("sweep"))?;
        let grid = SweepGrid {
            common_capacity: s.f3.values(),
            phi1: s.phi1.values(),
            template: self.template()?,
        };
        grid.validate().map_err(|e| match e {
            sharedlink_core::Error::InvalidParameter { name, expected, .. } => invariant(name, expected),
            other => invariant("sweep", other.to_string()),
        })?;
        Ok(grid)
    }

    pub fn drift(&self) -> DriftSection {
        self.file.drift.unwrap_or_default()
    }

    pub fn region(&self) -> Region {
        let r = self.drift().region;
        Region::Trajectories {
            bound: r.bound,
            warmup: r.warmup,
            horizon: r.horizon,
            runs: r.runs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "chains": [{"a_plus": 3000, "lambda": 1, "mu": 1.5}, {"a_plus": 3000, "lambda": 1, "mu": 1.5}],
        "merge": {"F1": 1500, "F2": 1500, "R3": 2500, "phi1": 0.5},
        "horizon": 10, "seed": 3
    }"#;

    fn with(patch: &str) -> String {
        let mut base: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        let patch: serde_json::Value = serde_json::from_str(patch).unwrap();
        for (k, v) in patch.as_object().unwrap() {
            base[k] = v.clone();
        }
        base.to_string()
    }

    #[test]
    fn minimal_merge_config_gets_defaults() {
        let c = parse_config_str(MINIMAL, Command::Simulate).unwrap();
        assert_eq!(c.file.max_step, 1e-3);
        assert_eq!(c.file.eps_q, 1e-9);
        assert_eq!(c.chain.mean_inflow(), [1200.0, 1200.0]);
        let sim = c.sim_config(10.0).unwrap();
        assert_eq!(sim.integrator.max_step, 1e-3);
        assert_eq!(sim.network.options.eps_q, 1e-9);
        assert_eq!(sim.seed, 3);
    }

    #[test]
    fn priority_out_of_range_names_the_constraint() {
        let text = with(r#"{"merge": {"F1": 1500, "F2": 1500, "R3": 2500, "phi1": 1.2}}"#);
        let e = parse_config_str(&text, Command::Simulate).unwrap_err();
        assert_eq!(e.field().as_deref(), Some("merge.phi1"));
        assert!(e.to_string().contains("priority constraint"));
    }

    #[test]
    fn standing_assumption_is_enforced_for_simulation() {
        let text = with(
            r#"{"topology": "merge-diverge",
                "merge": {"F1": 1500, "F2": 1500, "phi1": 0.5},
                "diverge": {"F3": 2800, "theta": 40, "R4": 1400, "R5": 1400}}"#,
        );
        let e = parse_config_str(&text, Command::Simulate).unwrap_err();
        assert_eq!(e.field().as_deref(), Some("diverge.F3"));
        assert!(e.to_string().contains("standing assumption"));
        // Closed-form commands do not integrate the dynamics.
        assert!(parse_config_str(&text, Command::Classify).is_ok());
    }

    #[test]
    fn schema_errors_carry_the_field_path() {
        let text =
            with(r#"{"chains": [{"a_plus": 3000, "lambda": "x", "mu": 1.5}, {"a_plus": 1, "lambda": 1, "mu": 1}]}"#);
        let e = parse_config_str(&text, Command::Simulate).unwrap_err();
        assert_eq!(e.kind(), "schema");
        assert_eq!(e.field().as_deref(), Some("chains[0].lambda"));
        let e = parse_config_str(&with(r#"{"surprise": 1}"#), Command::Simulate).unwrap_err();
        assert_eq!(e.kind(), "schema");
        let e = parse_config_str(&with(r#"{"schema": 2}"#), Command::Simulate).unwrap_err();
        assert!(matches!(e, ConfigError::Version { found: 2 }));
    }

    #[test]
    fn command_specific_fields() {
        let text = MINIMAL.replace("\"horizon\": 10,", "");
        let e = parse_config_str(&text, Command::Simulate).unwrap_err();
        assert!(matches!(e, ConfigError::Missing { field: "horizon", .. }));
        assert!(parse_config_str(&text, Command::Classify).is_ok());
        let e = parse_config_str(MINIMAL, Command::Sweep).unwrap_err();
        assert_eq!(e.field().as_deref(), Some("topology"));
    }

    #[test]
    fn sweep_axes_accept_lists_and_ranges() {
        let text = with(
            r#"{"topology": "merge-diverge",
                "merge": {"F1": 1500, "F2": 1500, "phi1": 0.5},
                "diverge": {"theta": 40, "R4": 1400, "R5": 1400},
                "sweep": {"F3": [2500, 3000], "phi1": {"from": 0, "to": 1, "steps": 10}}}"#,
        );
        let grid = parse_config_str(&text, Command::Sweep).unwrap().sweep_grid().unwrap();
        assert_eq!(grid.common_capacity, vec![2500.0, 3000.0]);
        assert_eq!(grid.phi1.len(), 11);
        assert_eq!(grid.phi1[3], 0.3);
    }
}
