//! Run configuration: a JSON document, validated and completed with defaults.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays. A resolved config serializes back into the same schema, so
//! parsing its own output is a fixed point.

use dephasing_core::bloch::{alpha_grid, FieldPair, OptimizerSettings};
use dephasing_core::coherence::DEFAULT_DETECTION_TOL;
use dephasing_core::dephasing::{DephasingModel, QubitAmplitudes, TimeGrid};
use dephasing_core::spin_bath::{self, ZurekConfig, DEFAULT_COUPLINGS, MAX_SPINS};
use dephasing_core::{ComplexMatrix, HermitianOperator, StateVector, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Time samples used when the config gives no grid.
pub const DEFAULT_SAMPLES: usize = 100_000;
/// Horizon in units of the inverse smallest level gap.
pub const HORIZON_GAPS: f64 = 1e4;
pub const DEFAULT_SWEEP_POINTS: usize = 25;
pub const DEFAULT_FRAGILITY_SCALE: f64 = 1e-2;
pub const DEFAULT_FRAGILITY_SAMPLES: usize = 1000;

pub type Pair = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Analyze,
    Zurek,
    PrepError,
    Optimize,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Analyze => "analyze",
            Command::Zurek => "zurek",
            Command::PrepError => "prep-error",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    #[default]
    Unconstrained,
    Structured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct InlineModel {
    pub h_int: Vec<Vec<Pair>>,
    pub h_env: Vec<Vec<Pair>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ZurekParams {
    /// Defaults to the first `spins` built-in couplings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct TimeGridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudesConfig {
    pub a: Pair,
    pub b: Pair,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragilityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ProbeKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepErrorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct BlochParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_top: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_seeds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<InlineModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zurek: Option<ZurekParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<AmplitudesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragility: Option<FragilityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep_error: Option<PrepErrorParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<BlochParams>,
}

impl RunConfig {
    pub fn empty(command: Command) -> Self {
        Self {
            command: Some(command),
            model: None,
            zurek: None,
            time_grid: None,
            initial_state: None,
            amplitudes: None,
            output: None,
            seed: None,
            tolerances: None,
            fragility: None,
            prep_error: None,
            bloch: None,
        }
    }

    /// The command of a resolved config.
    pub fn command(&self) -> Command {
        self.command.expect("resolved config has a command")
    }

    pub fn format(&self) -> Format {
        self.output
            .as_ref()
            .and_then(|o| o.format)
            .unwrap_or_default()
    }

    pub fn out_path(&self) -> Option<&str> {
        self.output.as_ref().and_then(|o| o.path.as_deref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Reads the document without validating or defaulting anything.
pub fn parse_document(text: &str) -> Result<RunConfig, CliError> {
    // serde's message already carries the line and column
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Parses a document and resolves it. `command`, when given, must agree
/// with the document's own `command` field.
#[cfg(test)]
pub fn parse_config(text: &str, command: Option<Command>) -> Result<RunConfig, CliError> {
    let raw = parse_document(text)?;
    resolve(with_command(raw, command)?)
}

/// Sets the command, refusing to change one the document already names.
pub fn with_command(mut raw: RunConfig, command: Option<Command>) -> Result<RunConfig, CliError> {
    match (raw.command, command) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config(format!(
                "config is for `{}` but `{}` was requested",
                a.name(),
                b.name()
            )))
        }
        (None, None) => return Err(CliError::Config("no command given".into())),
        (None, Some(b)) => raw.command = Some(b),
        _ => {}
    }
    Ok(raw)
}

fn complex(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn pair(c: C64) -> Pair {
    [c.re, c.im]
}

fn matrix(rows: &[Vec<Pair>], name: &str) -> Result<HermitianOperator, CliError> {
    let n = rows.len();
    if n == 0 {
        return Err(CliError::Config(format!("model.{name}: matrix is empty")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(CliError::Config(format!(
            "model.{name}: row {i} has {} entries, expected {n}",
            rows[i].len()
        )));
    }
    let m = ComplexMatrix::from_fn(n, n, |i, j| complex(&rows[i][j]));
    HermitianOperator::new(m).map_err(|e| CliError::Validation(format!("model.{name}: {e}")))
}

/// Builds the dephasing model named by the config's model source, if any.
pub fn build_model(cfg: &RunConfig) -> Result<Option<DephasingModel>, CliError> {
    if let Some(m) = &cfg.model {
        let h_int = matrix(&m.h_int, "hInt")?;
        let h_env = matrix(&m.h_env, "hEnv")?;
        return Ok(Some(DephasingModel::new(h_int, h_env)?));
    }
    if let Some(z) = &cfg.zurek {
        return Ok(Some(spin_bath::build_zurek(&zurek_config(z)?)));
    }
    Ok(None)
}

/// The spin-bath parameters of a resolved `zurek` section.
pub fn zurek_config(z: &ZurekParams) -> Result<ZurekConfig, CliError> {
    let couplings = z.couplings.clone().expect("resolved couplings");
    Ok(ZurekConfig::new(couplings, z.lambda.unwrap_or(0.0))?)
}

pub fn initial_state(cfg: &RunConfig) -> Result<StateVector, CliError> {
    let amps: Vec<C64> = cfg
        .initial_state
        .as_ref()
        .expect("resolved initial state")
        .iter()
        .map(complex)
        .collect();
    StateVector::from_slice(&amps).map_err(|e| CliError::Validation(format!("initialState: {e}")))
}

pub fn amplitudes(cfg: &RunConfig) -> Result<QubitAmplitudes, CliError> {
    let a = cfg.amplitudes.as_ref().expect("resolved amplitudes");
    QubitAmplitudes::new(complex(&a.a), complex(&a.b))
        .map_err(|e| CliError::Validation(format!("amplitudes: {e}")))
}

pub fn time_grid(cfg: &RunConfig) -> Result<TimeGrid, CliError> {
    let g = cfg.time_grid.as_ref().expect("resolved time grid");
    Ok(TimeGrid::new(
        g.horizon.expect("resolved horizon"),
        g.samples.expect("resolved samples"),
    )?)
}

pub fn optimizer_settings(b: &BlochParams) -> OptimizerSettings {
    OptimizerSettings {
        sphere_samples: b.sphere_samples.expect("resolved"),
        time_samples: b.time_samples.expect("resolved"),
        refine_top: b.refine_top.expect("resolved"),
        analytic_seeds: b.analytic_seeds.expect("resolved"),
    }
}

fn reject(present: bool, section: &str, command: Command) -> Result<(), CliError> {
    if present {
        return Err(CliError::Config(format!(
            "`{section}` is not used by the `{}` command",
            command.name()
        )));
    }
    Ok(())
}

fn resolve_zurek(z: &mut ZurekParams, lambda_default: Option<f64>) -> Result<(), CliError> {
    match (&z.couplings, z.spins) {
        (Some(c), Some(n)) if c.len() != n => {
            return Err(CliError::Config(format!(
                "zurek.spins = {n} but {} couplings given",
                c.len()
            )))
        }
        (Some(c), None) => z.spins = Some(c.len()),
        (None, Some(n)) => {
            if n == 0 || n > MAX_SPINS {
                return Err(CliError::Config(format!(
                    "zurek.spins must be in 1..={MAX_SPINS}, got {n}"
                )));
            }
            z.couplings = Some(DEFAULT_COUPLINGS[..n].to_vec());
        }
        (None, None) => {
            return Err(CliError::Config(
                "zurek needs `couplings` or `spins`".into(),
            ))
        }
        _ => {}
    }
    if z.lambda.is_none() {
        z.lambda = lambda_default;
    }
    if z.lambda.is_none() {
        return Err(CliError::Config("zurek.lambda is required".into()));
    }
    Ok(())
}

fn resolve_grid(cfg: &mut RunConfig, default_horizon: f64) -> Result<(), CliError> {
    let g = cfg.time_grid.get_or_insert(TimeGridConfig {
        horizon: None,
        samples: None,
    });
    g.horizon.get_or_insert(default_horizon);
    g.samples.get_or_insert(DEFAULT_SAMPLES);
    time_grid(cfg)?;
    Ok(())
}

/// Validates a parsed document and fills in every default.
pub fn resolve(mut cfg: RunConfig) -> Result<RunConfig, CliError> {
    let command = cfg
        .command
        .ok_or_else(|| CliError::Config("no command given".into()))?;
    let needs_model = matches!(command, Command::Simulate | Command::Analyze | Command::Zurek);

    if cfg.model.is_some() && cfg.zurek.is_some() {
        return Err(CliError::Config(
            "give exactly one model source: `model` or `zurek`, not both".into(),
        ));
    }
    if needs_model {
        if cfg.model.is_none() && cfg.zurek.is_none() {
            return Err(CliError::Config(format!(
                "`{}` needs a model source: `model` or `zurek`",
                command.name()
            )));
        }
    } else {
        reject(cfg.model.is_some(), "model", command)?;
        reject(cfg.zurek.is_some(), "zurek", command)?;
    }
    if command == Command::Zurek && cfg.model.is_some() {
        return Err(CliError::Config("`zurek` needs a `zurek` model source".into()));
    }
    if command != Command::Analyze {
        reject(cfg.tolerances.is_some(), "tolerances", command)?;
        reject(cfg.fragility.is_some(), "fragility", command)?;
    }
    if command != Command::Simulate {
        reject(cfg.initial_state.is_some(), "initialState", command)?;
        reject(cfg.amplitudes.is_some(), "amplitudes", command)?;
    }
    if !matches!(command, Command::Simulate | Command::Zurek | Command::PrepError) {
        reject(cfg.time_grid.is_some(), "timeGrid", command)?;
    }
    if command != Command::PrepError {
        reject(cfg.prep_error.is_some(), "prepError", command)?;
    }
    if !matches!(command, Command::Optimize | Command::Sweep) {
        reject(cfg.bloch.is_some(), "bloch", command)?;
    }

    if let Some(z) = cfg.zurek.as_mut() {
        // a bath without the projector term is a valid default for simulate
        let lambda_default = (command != Command::Zurek).then_some(0.0);
        resolve_zurek(z, lambda_default)?;
    }
    cfg.seed.get_or_insert(0);
    let out = cfg.output.get_or_insert_with(OutputConfig::default);
    out.format.get_or_insert_with(Format::default);

    let model = build_model(&cfg)?;
    match command {
        Command::Simulate | Command::Zurek => {
            let model = model.expect("model source checked");
            let horizon = match &cfg.zurek {
                Some(z) => HORIZON_GAPS / zurek_config(z)?.min_gap(),
                None => model.dynamics().default_horizon(),
            };
            resolve_grid(&mut cfg, horizon)?;
            if command == Command::Simulate {
                let mut e0 = vec![[0.0, 0.0]; model.dim()];
                e0[0] = [1.0, 0.0];
                cfg.initial_state.get_or_insert(e0);
                let balanced = QubitAmplitudes::balanced();
                cfg.amplitudes.get_or_insert(AmplitudesConfig {
                    a: pair(balanced.a()),
                    b: pair(balanced.b()),
                });
                let psi = initial_state(&cfg)?;
                if psi.dim() != model.dim() {
                    return Err(CliError::Validation(format!(
                        "initialState has dimension {}, model has {}",
                        psi.dim(),
                        model.dim()
                    )));
                }
                amplitudes(&cfg)?;
            }
        }
        Command::Analyze => {
            let tol = cfg.tolerances.get_or_insert_with(Tolerances::default);
            let detection = *tol.detection.get_or_insert(DEFAULT_DETECTION_TOL);
            if !(detection > 0.0 && detection < 1.0) {
                return Err(CliError::Validation(format!(
                    "tolerances.detection must lie in (0, 1), got {detection}"
                )));
            }
            if let Some(f) = cfg.fragility.as_mut() {
                let scale = *f.scale.get_or_insert(DEFAULT_FRAGILITY_SCALE);
                let samples = *f.samples.get_or_insert(DEFAULT_FRAGILITY_SAMPLES);
                f.kind.get_or_insert_with(ProbeKind::default);
                if !(scale > 0.0 && scale.is_finite()) || samples == 0 {
                    return Err(CliError::Validation(
                        "fragility needs a positive scale and sample count".into(),
                    ));
                }
            }
        }
        Command::PrepError => {
            let p = cfg
                .prep_error
                .as_mut()
                .ok_or_else(|| CliError::Config("`prep-error` needs `prepError.epsilon` and `prepError.n`".into()))?;
            let epsilon = p
                .epsilon
                .ok_or_else(|| CliError::Config("prepError.epsilon is required".into()))?;
            let n = match (p.n, &p.couplings) {
                (Some(n), Some(c)) if c.len() != n => {
                    return Err(CliError::Config(format!(
                        "prepError.n = {n} but {} couplings given",
                        c.len()
                    )))
                }
                (Some(n), _) => n,
                (None, Some(c)) => c.len(),
                (None, None) => return Err(CliError::Config("prepError.n is required".into())),
            };
            p.n = Some(n);
            if n == 0 || n > MAX_SPINS {
                return Err(CliError::Validation(format!(
                    "prepError.n must be in 1..={MAX_SPINS}, got {n}"
                )));
            }
            let couplings = p.couplings.get_or_insert_with(|| DEFAULT_COUPLINGS[..n].to_vec()).clone();
            spin_bath::preparation_bound(epsilon, n)?;
            let gap = ZurekConfig::new(couplings, 0.0)?.min_gap();
            resolve_grid(&mut cfg, HORIZON_GAPS / gap)?;
        }
        Command::Optimize | Command::Sweep => {
            let b = cfg.bloch.get_or_insert_with(BlochParams::default);
            let defaults = OptimizerSettings::default();
            b.sphere_samples.get_or_insert(defaults.sphere_samples);
            b.time_samples.get_or_insert(defaults.time_samples);
            b.refine_top.get_or_insert(defaults.refine_top);
            b.analytic_seeds.get_or_insert(defaults.analytic_seeds);
            if command == Command::Optimize {
                if b.alphas.is_some() || b.sweep_points.is_some() {
                    return Err(CliError::Config(
                        "`optimize` takes `bloch.alpha`; use `sweep` for a grid".into(),
                    ));
                }
                let alpha = b
                    .alpha
                    .ok_or_else(|| CliError::Config("bloch.alpha is required".into()))?;
                FieldPair::unit(alpha)?;
            } else {
                if b.alpha.is_some() {
                    return Err(CliError::Config(
                        "`sweep` takes `bloch.alphas` or `bloch.sweepPoints`".into(),
                    ));
                }
                let points = *b.sweep_points.get_or_insert_with(|| {
                    b.alphas.as_ref().map_or(DEFAULT_SWEEP_POINTS, Vec::len)
                });
                let alphas = b.alphas.get_or_insert_with(|| alpha_grid(points));
                if alphas.len() != points {
                    return Err(CliError::Config(format!(
                        "bloch.sweepPoints = {points} but {} alphas given",
                        alphas.len()
                    )));
                }
                for &a in alphas.iter() {
                    FieldPair::unit(a)?;
                }
            }
            let settings = optimizer_settings(b);
            // surface budget errors at parse time
            if settings.sphere_samples < dephasing_core::bloch::MIN_SPHERE_SAMPLES
                || settings.time_samples < dephasing_core::bloch::MIN_TIME_SAMPLES
            {
                return Err(CliError::Validation(format!(
                    "optimizer budgets too small: need sphereSamples >= {} and timeSamples >= {}",
                    dephasing_core::bloch::MIN_SPHERE_SAMPLES,
                    dephasing_core::bloch::MIN_TIME_SAMPLES
                )));
            }
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        parse_config(text, None)
    }

    #[test]
    fn minimal_zurek_gets_default_grid() {
        let cfg = parse(r#"{"command": "zurek", "zurek": {"couplings": [0.95, 0.61, 0.37, 0.17], "lambda": 1e-3}}"#).unwrap();
        let g = cfg.time_grid.as_ref().unwrap();
        assert_eq!(g.samples, Some(100_000));
        let expect = 1e4 / 0.06;
        assert!((g.horizon.unwrap() - expect).abs() <= 1e-9 * expect);
        assert_eq!(cfg.seed, Some(0));
        assert_eq!(cfg.format(), Format::Csv);
        assert_eq!(cfg.zurek.as_ref().unwrap().spins, Some(4));
    }

    #[test]
    fn non_hermitian_matrix_names_entry() {
        let text = r#"{"command": "simulate", "model": {
            "hInt": [[[1, 0], [0, 1]], [[0, 0], [2, 0]]],
            "hEnv": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]}}"#;
        match parse(text) {
            Err(CliError::Validation(msg)) => {
                assert!(msg.contains("hInt"), "{msg}");
                assert!(msg.contains("(1, 0)") || msg.contains("(0, 1)"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(r#"{"command": "optimize", "bloch": {"alpha": 0.5}, "colour": 1}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("colour") && m.contains("line")));
        let err = parse(r#"{"command": "optimize", "bloch": {"alpah": 0.5}}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn model_source_rules() {
        let both = r#"{"command": "simulate", "zurek": {"spins": 2},
            "model": {"hInt": [[[1, 0]]], "hEnv": [[[1, 0]]]}}"#;
        assert!(matches!(parse(both), Err(CliError::Config(_))));
        assert!(matches!(parse(r#"{"command": "analyze"}"#), Err(CliError::Config(_))));
        let extra = r#"{"command": "optimize", "zurek": {"spins": 2}, "bloch": {"alpha": 0.5}}"#;
        assert!(matches!(parse(extra), Err(CliError::Config(_))));
    }

    #[test]
    fn degenerate_zurek_is_a_validation_error() {
        let text = r#"{"command": "zurek", "zurek": {"couplings": [0.5, 0.5], "lambda": 1e-3}}"#;
        assert!(matches!(parse(text), Err(CliError::Validation(_))));
    }

    #[test]
    fn bad_grid_is_rejected() {
        let text = r#"{"command": "zurek", "zurek": {"spins": 2, "lambda": 1e-3},
            "timeGrid": {"horizon": 10, "samples": 1}}"#;
        assert!(matches!(parse(text), Err(CliError::Validation(_))));
        let text = r#"{"command": "zurek", "zurek": {"spins": 2, "lambda": 1e-3},
            "timeGrid": {"horizon": -1}}"#;
        assert!(matches!(parse(text), Err(CliError::Validation(_))));
    }

    #[test]
    fn command_mismatch() {
        let text = r#"{"command": "optimize", "bloch": {"alpha": 0.5}}"#;
        assert!(matches!(parse_config(text, Some(Command::Sweep)), Err(CliError::Config(_))));
        assert!(parse_config(r#"{"bloch": {"alpha": 0.5}}"#, Some(Command::Optimize)).is_ok());
    }

    #[test]
    fn inline_model_round_trips() {
        let text = r#"{"command": "simulate", "model": {
            "hInt": [[[0.5, 0], [0.1, -0.2]], [[0.1, 0.2], [-0.5, 0]]],
            "hEnv": [[[1, 0], [0, 0]], [[0, 0], [2, 0]]]},
            "timeGrid": {"samples": 50}}"#;
        let once = parse(text).unwrap();
        let first = once.to_json();
        let twice = parse(&first).unwrap();
        assert_eq!(once, twice);
        assert_eq!(first, twice.to_json());
        assert_eq!(once.initial_state.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn sweep_defaults_fill_grid() {
        let cfg = parse(r#"{"command": "sweep"}"#).unwrap();
        let b = cfg.bloch.as_ref().unwrap();
        assert_eq!(b.sweep_points, Some(25));
        assert_eq!(b.alphas.as_ref().unwrap().len(), 25);
        assert_eq!(parse(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn prep_error_defaults() {
        let cfg = parse(r#"{"command": "prep-error", "prepError": {"epsilon": 0.01, "n": 5}}"#).unwrap();
        assert_eq!(cfg.prep_error.as_ref().unwrap().couplings.as_ref().unwrap().len(), 5);
        let bad = r#"{"command": "prep-error", "prepError": {"epsilon": 0.7, "n": 5}}"#;
        assert!(matches!(parse(bad), Err(CliError::Validation(_))));
    }
}
