//! Scenario documents: a single JSON object describing metric, mass model,
//! initial data, integrator, stop conditions and output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use contactrel::kinetic::Marginal;
use contactrel::{
    CoMomentum, ContactHamiltonianSystem, ExtendedState, InitialDensitySpec, IntegratorConfig,
    MassModel, Method, MetricField, Potential, ShellProjection, SpacetimePoint, StopCondition,
};

use crate::expr_metric::ExpressionMetric;
use crate::{CliError, Result};

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default = "default_c")]
    pub c: f64,
    pub metric: MetricSpec,
    pub mass: MassSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    pub stop: Vec<StopSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub allow_off_shell: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Minkowski,
    WeakField {
        potential: PotentialSpec,
    },
    /// Inverse metric `g^{μν}` as expressions in `t x y z q0..q3 phi c`.
    Custom {
        inverse: [[String; 4]; 4],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fd_step_q: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fd_step_phi: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    PointMass {
        #[serde(rename = "GM")]
        gm: f64,
        #[serde(default)]
        softening: f64,
    },
    UniformGradient {
        g_vec: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MassSpec {
    Constant {
        m0: f64,
    },
    /// `m(τ) = m0 e^{-α(τ - τ0)}` with τ = 0 at the initial state.
    ExpDecay {
        m0: f64,
        alpha: f64,
        #[serde(default)]
        tau0: f64,
    },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Single(SingleSpec),
    Ensemble(EnsembleSpec),
}

/// One particle. Exactly one of `p0` (full co-momentum), `v0` (coordinate
/// three-velocity) or `p_spatial` (p_0 solved from the shell) must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleSpec {
    pub q0: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_spatial: Option<[f64; 3]>,
    #[serde(default)]
    pub phi0: f64,
}

fn default_dlambda() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub spec: DensitySpec,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Spacing of the entropy time series.
    #[serde(default = "default_dlambda")]
    pub dlambda: f64,
}

fn fixed_zero() -> MarginalSpec {
    MarginalSpec::Fixed(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub q: [MarginalSpec; 4],
    pub p_spatial: [MarginalSpec; 3],
    /// Drawn independently when present; otherwise solved from the shell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<MarginalSpec>,
    #[serde(default = "fixed_zero")]
    pub phi: MarginalSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalSpec {
    Fixed(f64),
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sigma: f64 },
}

impl MarginalSpec {
    fn to_core(self) -> Marginal {
        match self {
            MarginalSpec::Fixed(v) => Marginal::Fixed(v),
            MarginalSpec::Uniform { lo, hi } => Marginal::Uniform { lo, hi },
            MarginalSpec::Gaussian { mean, sigma } => Marginal::Gaussian { mean, sigma },
        }
    }

    fn center(self) -> f64 {
        match self {
            MarginalSpec::Fixed(v) => v,
            MarginalSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            MarginalSpec::Gaussian { mean, .. } => mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Rk4,
    #[default]
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectionSpec {
    #[default]
    Off,
    EveryKSteps(usize),
}

fn default_rel_tol() -> f64 {
    1e-10
}
fn default_abs_tol() -> f64 {
    1e-12
}
fn default_min_step() -> f64 {
    1e-14
}
fn default_max_steps() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default)]
    pub method: MethodKind,
    /// Fixed step for `rk4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_min_step")]
    pub min_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub shell_projection: ProjectionSpec,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            method: MethodKind::Rk45,
            step: None,
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            min_step: default_min_step(),
            max_step: None,
            initial_step: None,
            max_steps: default_max_steps(),
            shell_projection: ProjectionSpec::Off,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StopSpec {
    LambdaReached(f64),
    PhiReached(f64),
    TauReached(f64),
    CoordinateBound { axis: usize, value: f64 },
    MassFloor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reparam {
    Phi,
    Tau,
}

fn default_stride() -> usize {
    1
}
fn default_grid_points() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Keep every `stride`-th sample (trajectories) or write a snapshot every
    /// `stride`-th time-series row (ensembles).
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Companion files on uniform φ or τ grids (single-particle runs).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reparametrize: Vec<Reparam>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl OutputSpec {
    pub fn new(path: impl Into<PathBuf>, format: Format) -> Self {
        Self {
            path: path.into(),
            format,
            stride: 1,
            reparametrize: Vec::new(),
            grid_points: default_grid_points(),
        }
    }
}

// ---------------------------------------------------------------------------
// loading

/// Parses and validates a scenario document.
pub fn load_scenario_str(text: &str) -> Result<Scenario> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let scenario: Scenario = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = field_path(e.path());
        let (field, reason) = split_serde_message(&path, &e.inner().to_string());
        CliError::Validation { field, reason }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_scenario_str(&text)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Dotted path with enum variant names left out, e.g. `metric.potential.GM`.
fn field_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Map { key } => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(key);
            }
            Segment::Seq { index } => out.push_str(&format!("[{index}]")),
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    out
}

/// Moves the offending key of "missing field" / "unknown field" messages into
/// the field path.
fn split_serde_message(path: &str, msg: &str) -> (String, String) {
    for (prefix, reason) in [
        ("missing field `", "missing field"),
        ("unknown field `", "unknown field"),
    ] {
        if let Some(rest) = msg.strip_prefix(prefix) {
            if let Some(end) = rest.find('`') {
                let key = &rest[..end];
                // unknown keys are already the last path segment
                let field = if path == key || path.ends_with(&format!(".{key}")) {
                    path.to_string()
                } else if path.is_empty() {
                    key.to_string()
                } else {
                    format!("{path}.{key}")
                };
                let tail = rest[end + 1..].trim_start_matches(',').trim();
                let reason = if tail.is_empty() {
                    reason.to_string()
                } else {
                    format!("{reason}; {tail}")
                };
                return (field, reason);
            }
        }
    }
    let field = if path.is_empty() {
        "(document)".to_string()
    } else {
        path.to_string()
    };
    (field, msg.to_string())
}

// ---------------------------------------------------------------------------
// validation and conversion

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(field, "must be finite"))
    }
}

fn all_finite(field: &str, vs: &[f64]) -> Result<()> {
    vs.iter().try_for_each(|v| finite(field, *v))
}

impl Scenario {
    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn is_ensemble(&self) -> bool {
        matches!(self.initial, InitialSpec::Ensemble(_))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(CliError::validation("c", "must be positive and finite"));
        }
        match &self.metric {
            MetricSpec::Minkowski => {}
            MetricSpec::WeakField { potential } => match potential {
                PotentialSpec::PointMass { gm, softening } => {
                    finite("metric.potential.GM", *gm)?;
                    if !(*softening >= 0.0 && softening.is_finite()) {
                        return Err(CliError::validation(
                            "metric.potential.softening",
                            "must be non-negative",
                        ));
                    }
                }
                PotentialSpec::UniformGradient { g_vec } => {
                    all_finite("metric.potential.g_vec", g_vec)?
                }
            },
            MetricSpec::Custom {
                inverse,
                fd_step_q,
                fd_step_phi,
            } => {
                for i in 0..4 {
                    for j in 0..i {
                        if inverse[i][j].trim() != inverse[j][i].trim() {
                            return Err(CliError::validation(
                                format!("metric.inverse[{i}][{j}]"),
                                format!(
                                    "must equal entry [{j}][{i}] (the inverse metric is symmetric)"
                                ),
                            ));
                        }
                    }
                }
                for (name, step) in [
                    ("metric.fd_step_q", fd_step_q),
                    ("metric.fd_step_phi", fd_step_phi),
                ] {
                    if let Some(h) = step {
                        if !(*h > 0.0 && h.is_finite()) {
                            return Err(CliError::validation(name, "must be positive"));
                        }
                    }
                }
                ExpressionMetric::compile(inverse, self.c).map_err(|(i, j, e)| {
                    CliError::validation(format!("metric.inverse[{i}][{j}]"), e)
                })?;
            }
        }
        match self.mass {
            MassSpec::Constant { m0 } => {
                if !(m0 > 0.0 && m0.is_finite()) {
                    return Err(CliError::validation(
                        "mass.m0",
                        "must be positive (use `zero` for photons)",
                    ));
                }
            }
            MassSpec::ExpDecay { m0, alpha, tau0 } => {
                if !(m0 > 0.0 && m0.is_finite()) {
                    return Err(CliError::validation(
                        "mass.m0",
                        "exp_decay needs a positive mass",
                    ));
                }
                finite("mass.alpha", alpha)?;
                finite("mass.tau0", tau0)?;
            }
            MassSpec::Zero => {}
        }
        if self.stop.is_empty() {
            return Err(CliError::validation(
                "stop",
                "at least one stop condition is required",
            ));
        }
        self.integrator_config()?
            .validate()
            .map_err(|e| CliError::validation("integrator", e.to_string()))?;
        match &self.initial {
            InitialSpec::Single(s) => {
                all_finite("initial.q0", &s.q0)?;
                finite("initial.phi0", s.phi0)?;
                let given = [s.p0.is_some(), s.v0.is_some(), s.p_spatial.is_some()];
                if given.iter().filter(|g| **g).count() != 1 {
                    return Err(CliError::validation(
                        "initial.p0",
                        "give exactly one of `p0`, `v0` or `p_spatial`",
                    ));
                }
                if s.v0.is_some() && matches!(self.mass, MassSpec::Zero) {
                    return Err(CliError::validation(
                        "initial.v0",
                        "a massless particle needs `p0` or `p_spatial`",
                    ));
                }
                for (name, v) in [
                    ("initial.p0", s.p0.as_ref().map(|p| &p[..])),
                    ("initial.v0", s.v0.as_ref().map(|p| &p[..])),
                    ("initial.p_spatial", s.p_spatial.as_ref().map(|p| &p[..])),
                ] {
                    if let Some(v) = v {
                        all_finite(name, v)?;
                    }
                }
            }
            InitialSpec::Ensemble(e) => {
                if e.n == 0 {
                    return Err(CliError::validation("initial.n", "must be positive"));
                }
                if !(e.dlambda > 0.0 && e.dlambda.is_finite()) {
                    return Err(CliError::validation("initial.dlambda", "must be positive"));
                }
                self.density_spec()
                    .and_then(|d| d.validate().map_err(CliError::from))
                    .map_err(|e| CliError::validation("initial.spec", e.to_string()))?;
                if !self
                    .stop
                    .iter()
                    .all(|s| matches!(s, StopSpec::LambdaReached(_)))
                {
                    return Err(CliError::validation(
                        "stop",
                        "ensemble runs stop on `lambda_reached` only",
                    ));
                }
                if self.lambda_end().unwrap_or(0.0) <= 0.0 {
                    return Err(CliError::validation(
                        "stop",
                        "ensemble runs need a positive `lambda_reached`",
                    ));
                }
            }
        }
        if let Some(out) = &self.output {
            if out.stride == 0 {
                return Err(CliError::validation("output.stride", "must be positive"));
            }
            if out.grid_points < 2 {
                return Err(CliError::validation(
                    "output.grid_points",
                    "must be at least 2",
                ));
            }
            if out.path.as_os_str().is_empty() {
                return Err(CliError::validation("output.path", "must not be empty"));
            }
        }
        Ok(())
    }

    /// φ at which τ = 0, used to anchor `exp_decay`.
    fn phi_reference(&self) -> f64 {
        match &self.initial {
            InitialSpec::Single(s) => s.phi0,
            InitialSpec::Ensemble(e) => e.spec.phi.center(),
        }
    }

    pub fn mass_model(&self) -> MassModel {
        match self.mass {
            MassSpec::Constant { m0 } => MassModel::Constant { m0 },
            // m(τ) = m0 e^{-α(τ-τ0)} is affine in φ; anchor τ = 0 at the initial φ
            MassSpec::ExpDecay { m0, alpha, tau0 } => MassModel::AffinePhi {
                m0: m0 * (alpha * tau0).exp(),
                alpha,
                phi0: self.phi_reference(),
            },
            MassSpec::Zero => MassModel::Zero,
        }
    }

    pub fn metric_field(&self) -> Result<MetricField> {
        Ok(match &self.metric {
            MetricSpec::Minkowski => MetricField::minkowski(),
            MetricSpec::WeakField { potential } => {
                let pot = match *potential {
                    PotentialSpec::PointMass { gm, softening } => {
                        Potential::PointMass { gm, softening }
                    }
                    PotentialSpec::UniformGradient { g_vec } => {
                        Potential::UniformGradient { g: g_vec }
                    }
                };
                MetricField::weak_field(pot, self.c)
            }
            MetricSpec::Custom {
                inverse,
                fd_step_q,
                fd_step_phi,
            } => {
                let m = ExpressionMetric::compile(inverse, self.c).map_err(|(i, j, e)| {
                    CliError::validation(format!("metric.inverse[{i}][{j}]"), e)
                })?;
                let field = MetricField::new(m);
                let (hq, hp) = (
                    fd_step_q.unwrap_or(field.fd_step_q),
                    fd_step_phi.unwrap_or(field.fd_step_phi),
                );
                field.with_fd_steps(hq, hp)
            }
        })
    }

    pub fn system(&self) -> Result<ContactHamiltonianSystem> {
        Ok(ContactHamiltonianSystem::new(
            self.metric_field()?,
            self.mass_model(),
            self.c,
        )?)
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig> {
        let i = &self.integrator;
        let method = match i.method {
            MethodKind::Rk4 => Method::Rk4 {
                step: i.step.ok_or_else(|| {
                    CliError::validation("integrator.step", "rk4 needs a fixed step")
                })?,
            },
            MethodKind::Rk45 => Method::Rk45 {
                rel_tol: i.rel_tol,
                abs_tol: i.abs_tol,
                min_step: i.min_step,
                max_step: i.max_step.unwrap_or(f64::INFINITY),
                initial_step: i.initial_step,
            },
        };
        let stop = self
            .stop
            .iter()
            .map(|s| match *s {
                StopSpec::LambdaReached(v) => StopCondition::LambdaReached(v),
                StopSpec::PhiReached(v) => StopCondition::PhiReached(v),
                StopSpec::TauReached(v) => StopCondition::TauReached(v),
                StopSpec::CoordinateBound { axis, value } => {
                    StopCondition::CoordinateBound { axis, value }
                }
                StopSpec::MassFloor(v) => StopCondition::MassFloor(v),
            })
            .collect();
        Ok(IntegratorConfig {
            method,
            max_steps: i.max_steps,
            shell_projection: match i.shell_projection {
                ProjectionSpec::Off => ShellProjection::Off,
                ProjectionSpec::EveryKSteps(k) => ShellProjection::EveryKSteps(k),
            },
            stop,
        })
    }

    pub fn lambda_end(&self) -> Option<f64> {
        self.stop
            .iter()
            .filter_map(|s| match s {
                StopSpec::LambdaReached(v) => Some(*v),
                _ => None,
            })
            .reduce(f64::min)
    }

    pub fn density_spec(&self) -> Result<InitialDensitySpec> {
        let InitialSpec::Ensemble(e) = &self.initial else {
            return Err(CliError::validation("initial", "expected an ensemble"));
        };
        let d = &e.spec;
        Ok(InitialDensitySpec {
            q: d.q.map(MarginalSpec::to_core),
            p_spatial: d.p_spatial.map(MarginalSpec::to_core),
            p0: d.p0.map(MarginalSpec::to_core),
            phi: d.phi.to_core(),
        })
    }

    /// Initial state of a single-particle scenario. A full `p0` off the mass
    /// shell is rejected unless `allow_off_shell` is set here or in the document.
    pub fn initial_state(
        &self,
        sys: &ContactHamiltonianSystem,
        allow_off_shell: bool,
    ) -> Result<ExtendedState> {
        let InitialSpec::Single(s) = &self.initial else {
            return Err(CliError::validation(
                "initial",
                "expected a single particle",
            ));
        };
        let q = SpacetimePoint(s.q0);
        let phi = s.phi0;
        let shell = |field: &str, e: contactrel::Error| {
            CliError::validation(field, format!("no on-shell momentum: {e}"))
        };
        let p = if let Some(p) = s.p0 {
            CoMomentum(p)
        } else if let Some(v) = s.v0 {
            sys.momentum_from_velocity(&q, phi, v)
                .map_err(|e| shell("initial.v0", e))?
        } else if let Some(sp) = s.p_spatial {
            sys.on_shell_momentum(&q, phi, sp)
                .map_err(|e| shell("initial.p_spatial", e))?
        } else {
            unreachable!("validated: one momentum source")
        };
        let state = ExtendedState { q, p, phi };
        if !(allow_off_shell || self.allow_off_shell) && !sys.is_on_shell(&state)? {
            return Err(CliError::validation(
                "initial.p0",
                format!(
                    "not on the mass shell (g^μν p_μ p_ν + m²c² = {:e}); pass --allow-off-shell to evolve it anyway",
                    sys.shell_residual(&state)?
                ),
            ));
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "metric": "minkowski",
        "mass": {"constant": {"m0": 1.0}},
        "initial": {"single": {"q0": [0, 0, 0, 0], "p_spatial": [1, 0, 0]}},
        "stop": [{"lambda_reached": 10}]
    }"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let s = load_scenario_str(MINIMAL).unwrap();
        assert_eq!(s.c, 1.0);
        assert_eq!(s.integrator.method, MethodKind::Rk45);
        assert_eq!(s.integrator.rel_tol, 1e-10);
        assert!(s.output.is_none());
        let sys = s.system().unwrap();
        let st = s.initial_state(&sys, false).unwrap();
        assert!((st.p.0[0] + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn absorbing_decay_is_accepted() {
        let doc = MINIMAL.replace(
            r#"{"constant": {"m0": 1.0}}"#,
            r#"{"exp_decay": {"m0": 1.0, "alpha": -0.1}}"#,
        );
        let s = load_scenario_str(&doc).unwrap();
        assert_eq!(
            s.mass_model(),
            MassModel::AffinePhi {
                m0: 1.0,
                alpha: -0.1,
                phi0: 0.0
            }
        );
    }

    #[test]
    fn zero_mass_decay_rejected() {
        let doc = MINIMAL.replace(
            r#"{"constant": {"m0": 1.0}}"#,
            r#"{"exp_decay": {"m0": 0.0, "alpha": 0.1}}"#,
        );
        match load_scenario_str(&doc) {
            Err(CliError::Validation { field, .. }) => assert_eq!(field, "mass.m0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_gm_names_the_field() {
        let doc = MINIMAL.replace(
            r#""minkowski""#,
            r#"{"weak_field": {"potential": {"point_mass": {"softening": 0.1}}}}"#,
        );
        match load_scenario_str(&doc) {
            Err(CliError::Validation { field, reason }) => {
                assert_eq!(field, "metric.potential.GM");
                assert_eq!(reason, "missing field");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = MINIMAL.replace(r#""stop""#, r#""colour": 3, "stop""#);
        match load_scenario_str(&doc) {
            Err(CliError::Validation { field, reason }) => {
                assert_eq!(field, "colour");
                assert!(reason.starts_with("unknown field"));
            }
            other => panic!("{other:?}"),
        }
        let doc = MINIMAL.replace(r#""m0": 1.0"#, r#""m0": 1.0, "m1": 2"#);
        assert!(
            matches!(load_scenario_str(&doc), Err(CliError::Validation { field, .. }) if field == "mass.m1")
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        match load_scenario_str("{\n  \"metric\": minkowski\n}") {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 13)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn off_shell_momentum_needs_opt_in() {
        let doc = MINIMAL.replace(r#""p_spatial": [1, 0, 0]"#, r#""p0": [-2, 0, 0, 0]"#);
        let s = load_scenario_str(&doc).unwrap();
        let sys = s.system().unwrap();
        assert!(
            matches!(s.initial_state(&sys, false), Err(CliError::Validation { field, .. }) if field == "initial.p0")
        );
        assert!(s.initial_state(&sys, true).is_ok());
    }

    #[test]
    fn exp_decay_anchor() {
        let doc = MINIMAL
            .replace(
                r#"{"constant": {"m0": 1.0}}"#,
                r#"{"exp_decay": {"m0": 2.0, "alpha": 0.1, "tau0": 1.0}}"#,
            )
            .replace(
                r#""p_spatial": [1, 0, 0]"#,
                r#""p_spatial": [1, 0, 0], "phi0": 0.5"#,
            );
        let s = load_scenario_str(&doc).unwrap();
        let sys = s.system().unwrap();
        // m(τ = 0) = m0 e^{α τ0}
        assert!((sys.mass(0.5) - 2.0 * 0.1f64.exp()).abs() < 1e-15);
        let m3 = sys.mass_from_tau(0.5, 3.0).unwrap();
        assert!((m3 - 2.0 * (-0.1f64 * 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn momentum_sources_are_exclusive() {
        let doc = MINIMAL.replace(
            r#""p_spatial": [1, 0, 0]"#,
            r#""p_spatial": [1, 0, 0], "v0": [0.1, 0, 0]"#,
        );
        assert!(
            matches!(load_scenario_str(&doc), Err(CliError::Validation { field, .. }) if field == "initial.p0")
        );
    }

    #[test]
    fn custom_metric_validated() {
        let doc = MINIMAL.replace(
            r#""minkowski""#,
            r#"{"custom": {"inverse": [["-1", "0.1", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]]}}"#,
        );
        assert!(
            matches!(load_scenario_str(&doc), Err(CliError::Validation { field, .. }) if field == "metric.inverse[1][0]")
        );
    }
}
