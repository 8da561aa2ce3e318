//! Integration of the evolution contact equations in the flow parameter λ.
//!
//! The integrated state carries, next to `(q, p, φ)`, two quadratures:
//! the proper time `τ` (from `dτ = -dφ / (m c²)`) and the log-density gain
//! `∫ 4 ∂H/∂φ dλ` used by the kinetic solver.

mod interp;
pub(crate) mod ode;

use crate::dynamics::{ContactHamiltonianSystem, ExtendedTangent, FourVelocity};
use crate::error::{Error, Result};
use crate::geometry::{quad_form, CoMomentum, ExtendedState, SpacetimePoint};

pub use interp::metric_proper_time;

use ode::{EventFn, Stop};

/// Number of integrated components: q, p, φ, τ and log-density gain.
pub(crate) const DIM: usize = 11;
const TAU: usize = 9;
pub(crate) const LOG_GAIN_INDEX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4 {
        step: f64,
    },
    /// Dormand-Prince 5(4) with an RMS error norm scaled per component by
    /// `abs_tol + rel_tol · |y_i|`.
    Rk45 {
        rel_tol: f64,
        abs_tol: f64,
        min_step: f64,
        max_step: f64,
        initial_step: Option<f64>,
    },
}

impl Method {
    pub fn rk45(rel_tol: f64, abs_tol: f64) -> Self {
        Method::Rk45 {
            rel_tol,
            abs_tol,
            min_step: 1e-14,
            max_step: f64::INFINITY,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShellProjection {
    #[default]
    Off,
    EveryKSteps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    LambdaReached(f64),
    PhiReached(f64),
    TauReached(f64),
    CoordinateBound { axis: usize, value: f64 },
    MassFloor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    LambdaReached,
    PhiReached,
    TauReached,
    CoordinateBound { axis: usize },
    MassFloor,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::LambdaReached => "lambda_reached",
            Termination::PhiReached => "phi_reached",
            Termination::TauReached => "tau_reached",
            Termination::CoordinateBound { .. } => "coordinate_bound",
            Termination::MassFloor => "mass_floor",
        }
    }
}

impl StopCondition {
    fn termination(&self) -> Termination {
        match *self {
            StopCondition::LambdaReached(_) => Termination::LambdaReached,
            StopCondition::PhiReached(_) => Termination::PhiReached,
            StopCondition::TauReached(_) => Termination::TauReached,
            StopCondition::CoordinateBound { axis, .. } => Termination::CoordinateBound { axis },
            StopCondition::MassFloor(_) => Termination::MassFloor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub max_steps: usize,
    pub shell_projection: ShellProjection,
    pub stop: Vec<StopCondition>,
}

impl IntegratorConfig {
    /// Adaptive RK45 with the given tolerances and a single λ stop.
    pub fn rk45(rel_tol: f64, abs_tol: f64, lambda_end: f64) -> Self {
        Self {
            method: Method::rk45(rel_tol, abs_tol),
            max_steps: 1_000_000,
            shell_projection: ShellProjection::Off,
            stop: vec![StopCondition::LambdaReached(lambda_end)],
        }
    }

    pub fn rk4(step: f64, lambda_end: f64) -> Self {
        Self {
            method: Method::Rk4 { step },
            max_steps: 10_000_000,
            shell_projection: ShellProjection::Off,
            stop: vec![StopCondition::LambdaReached(lambda_end)],
        }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        if let Method::Rk45 { max_step, .. } = &mut self.method {
            *max_step = h;
        }
        self
    }

    pub fn with_projection(mut self, p: ShellProjection) -> Self {
        self.shell_projection = p;
        self
    }

    pub fn with_stops(mut self, stop: Vec<StopCondition>) -> Self {
        self.stop = stop;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        match self.method {
            Method::Rk4 { step } if !(step > 0.0 && step.is_finite()) => {
                return bad("step must be positive")
            }
            Method::Rk45 {
                rel_tol,
                abs_tol,
                min_step,
                max_step,
                initial_step,
            } => {
                if !(rel_tol > 0.0 && abs_tol > 0.0) {
                    return bad("tolerances must be positive");
                }
                if !(min_step > 0.0 && max_step >= min_step) {
                    return bad("need 0 < min_step <= max_step");
                }
                if let Some(h) = initial_step {
                    if !(h > 0.0 && h.is_finite()) {
                        return bad("initial_step must be positive");
                    }
                }
            }
            _ => {}
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if let ShellProjection::EveryKSteps(0) = self.shell_projection {
            return bad("projection interval must be positive");
        }
        if self.stop.is_empty() {
            return Err(Error::NoStopCondition);
        }
        for s in &self.stop {
            let (v, axis_ok) = match *s {
                StopCondition::LambdaReached(v)
                | StopCondition::PhiReached(v)
                | StopCondition::TauReached(v)
                | StopCondition::MassFloor(v) => (v, true),
                StopCondition::CoordinateBound { axis, value } => (value, axis < 4),
            };
            if !v.is_finite() {
                return bad("stop thresholds must be finite");
            }
            if !axis_ok {
                return bad("coordinate axis must be in 0..4");
            }
        }
        Ok(())
    }

    fn lambda_end(&self) -> Option<f64> {
        self.stop
            .iter()
            .filter_map(|s| match s {
                StopCondition::LambdaReached(v) => Some(*v),
                _ => None,
            })
            .reduce(f64::min)
    }
}

/// Which variable a trajectory's samples are uniformly gridded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parameter {
    #[default]
    Lambda,
    Phi,
    Tau,
}

/// One stored point along a trajectory.
///
/// `tangent` and `dtau` are derivatives with respect to `lambda`, the
/// integration parameter of the run that produced the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub lambda: f64,
    pub state: ExtendedState,
    pub hamiltonian: f64,
    /// Proper time; NaN for massless particles.
    pub tau: f64,
    pub shell_residual: f64,
    pub tangent: ExtendedTangent,
    pub dtau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub parameter: Parameter,
    pub termination: Option<Termination>,
    pub description: String,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    /// `max |H - H(λ_0)|`.
    pub fn max_hamiltonian_drift(&self) -> f64 {
        let h0 = self.samples.first().map_or(0.0, |s| s.hamiltonian);
        self.samples
            .iter()
            .map(|s| (s.hamiltonian - h0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_shell_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.shell_residual.abs())
            .fold(0.0, f64::max)
    }

    pub fn reparametrize_by_phi(&self) -> Result<Trajectory> {
        interp::reparametrize(self, Parameter::Phi, self.samples.len())
    }

    /// Reparametrizes onto a uniform grid of `n` φ values.
    pub fn reparametrize_by_phi_with(&self, n: usize) -> Result<Trajectory> {
        interp::reparametrize(self, Parameter::Phi, n)
    }

    pub fn reparametrize_by_tau(&self) -> Result<Trajectory> {
        interp::reparametrize(self, Parameter::Tau, self.samples.len())
    }

    pub fn reparametrize_by_tau_with(&self, n: usize) -> Result<Trajectory> {
        interp::reparametrize(self, Parameter::Tau, n)
    }

    /// Cubic Hermite interpolation of the state at parameter `lambda`.
    pub fn state_at(&self, lambda: f64) -> Option<ExtendedState> {
        interp::state_at(self, lambda).map(|s| s.state)
    }

    /// State at proper time `tau`, or `None` outside the covered range.
    pub fn state_at_tau(&self, tau: f64) -> Option<ExtendedState> {
        interp::state_at_tau(self, tau).map(|s| s.state)
    }
}

struct Packed;

impl Packed {
    fn pack(s: &ExtendedState, tau: f64, log_gain: f64) -> [f64; DIM] {
        let mut y = [0.0; DIM];
        y[..9].copy_from_slice(&s.to_array());
        y[TAU] = tau;
        y[LOG_GAIN_INDEX] = log_gain;
        y
    }
}

/// Right-hand side of the augmented λ-system.
fn extended_rhs(sys: &ContactHamiltonianSystem, y: &[f64; DIM]) -> Result<[f64; DIM]> {
    let s = ExtendedState::from_slice(y);
    let x = sys.evolution_field(&s)?;
    let reeb = sys.dh_dphi(&s)?;
    let mut dy = [0.0; DIM];
    dy[..9].copy_from_slice(&x.to_array());
    dy[TAU] = tau_rate(sys, s.phi, x.dphi)?;
    dy[LOG_GAIN_INDEX] = 4.0 * reeb;
    Ok(dy)
}

fn tau_rate(sys: &ContactHamiltonianSystem, phi: f64, dphi: f64) -> Result<f64> {
    if sys.mass.is_massless() {
        return Ok(0.0);
    }
    let m = sys.mass(phi);
    if !(m > 0.0) {
        return Err(Error::TransversalityFailure {
            mass_sq_c2: m * m * sys.c * sys.c,
        });
    }
    Ok(-dphi / (m * sys.c * sys.c))
}

pub(crate) struct RunResult {
    pub samples: Vec<Sample>,
    pub final_y: [f64; DIM],
    pub termination: Option<Termination>,
    pub accepted: usize,
    pub rejected: usize,
}

/// Core λ-integration shared by [`integrate`] and the kinetic solver.
pub(crate) fn run(
    sys: &ContactHamiltonianSystem,
    s0: &ExtendedState,
    lambda0: f64,
    cfg: &IntegratorConfig,
    record: bool,
) -> Result<RunResult> {
    cfg.validate()?;
    if !s0.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let massless = sys.mass.is_massless();
    if massless
        && cfg
            .stop
            .iter()
            .any(|s| matches!(s, StopCondition::TauReached(_)))
    {
        return Err(Error::InvalidConfig(
            "proper time is undefined for massless particles".into(),
        ));
    }
    if massless && cfg.shell_projection != ShellProjection::Off {
        return Err(Error::MasslessProjection);
    }
    // φ must strictly decrease along massive flows that start on the shell.
    let check_monotone = !massless && sys.mass(s0.phi) > 0.0 && sys.is_on_shell(s0)?;

    let rhs = |_t: f64, y: &[f64; DIM]| extended_rhs(sys, y);
    let mut events: Vec<Box<EventFn<DIM>>> = Vec::new();
    let mut reasons = Vec::new();
    for s in &cfg.stop {
        let ev: Option<Box<EventFn<DIM>>> = match *s {
            StopCondition::LambdaReached(_) => None,
            StopCondition::PhiReached(v) => Some(Box::new(move |_, y: &[f64; DIM]| y[8] - v)),
            StopCondition::TauReached(v) => Some(Box::new(move |_, y: &[f64; DIM]| y[TAU] - v)),
            StopCondition::CoordinateBound { axis, value } => {
                Some(Box::new(move |_, y: &[f64; DIM]| y[axis] - value))
            }
            StopCondition::MassFloor(v) => {
                Some(Box::new(move |_, y: &[f64; DIM]| sys.mass(y[8]) - v))
            }
        };
        if let Some(e) = ev {
            events.push(e);
            reasons.push(s.termination());
        }
    }
    let event_refs: Vec<&EventFn<DIM>> = events.iter().map(|b| b.as_ref()).collect();

    let mut samples = Vec::new();
    let mut prev_phi = s0.phi;
    let mut final_y = Packed::pack(s0, 0.0, 0.0);
    let mut observer = |t: f64, y: &mut [f64; DIM], dy: &[f64; DIM], step: usize| -> Result<bool> {
        let mut modified = false;
        if let ShellProjection::EveryKSteps(k) = cfg.shell_projection {
            if step > 0 && step % k == 0 {
                let projected = sys.project_to_shell(&ExtendedState::from_slice(y))?;
                y[4..8].copy_from_slice(&projected.p.0);
                modified = true;
            }
        }
        if check_monotone && step > 0 {
            if !(y[8] < prev_phi) {
                return Err(Error::PhiNotDecreasing { lambda: t });
            }
            prev_phi = y[8];
        }
        final_y = *y;
        if record {
            let state = ExtendedState::from_slice(y);
            let (tangent, dtau) = if modified {
                let d = extended_rhs(sys, y)?;
                (tangent_of(&d), d[TAU])
            } else {
                (tangent_of(dy), dy[TAU])
            };
            let residual = sys.shell_residual(&state)?;
            samples.push(Sample {
                lambda: t,
                state,
                hamiltonian: 0.5 * residual,
                tau: if massless { f64::NAN } else { y[TAU] },
                shell_residual: residual,
                tangent,
                dtau: if massless { f64::NAN } else { dtau },
            });
        }
        Ok(modified)
    };
    let outcome = ode::solve(
        &rhs,
        lambda0,
        Packed::pack(s0, 0.0, 0.0),
        &cfg.method,
        cfg.max_steps,
        cfg.lambda_end().map(|l| l + lambda0),
        &event_refs,
        &mut observer,
    )?;
    let termination = match outcome.stop {
        Stop::End if cfg.lambda_end().is_some() => Some(Termination::LambdaReached),
        Stop::End => None,
        Stop::Event(i) => Some(reasons[i]),
    };
    Ok(RunResult {
        samples,
        final_y,
        termination,
        accepted: outcome.accepted,
        rejected: outcome.rejected,
    })
}

fn tangent_of(d: &[f64]) -> ExtendedTangent {
    ExtendedTangent {
        dq: [d[0], d[1], d[2], d[3]],
        dp: [d[4], d[5], d[6], d[7]],
        dphi: d[8],
    }
}

/// Integrates the evolution contact equations from `s0` at `λ = 0`.
pub fn integrate(
    sys: &ContactHamiltonianSystem,
    s0: &ExtendedState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let r = run(sys, s0, 0.0, cfg, true)?;
    Ok(Trajectory {
        samples: r.samples,
        parameter: Parameter::Lambda,
        termination: r.termination,
        description: format!("contact flow: mass {:?}, c = {}", sys.mass, sys.c),
        accepted_steps: r.accepted,
        rejected_steps: r.rejected,
    })
}

/// Integrates the φ-parametrized reduced equations directly, from `s0.phi`
/// down to `phi_end`.
///
/// The stored `lambda` is `s0.phi - φ` so that it increases along the run;
/// tangents are derivatives with respect to that variable.
pub fn integrate_reduced_phi(
    sys: &ContactHamiltonianSystem,
    s0: &ExtendedState,
    phi_end: f64,
    method: Method,
    max_steps: usize,
) -> Result<Trajectory> {
    if !(phi_end < s0.phi) {
        return Err(Error::InvalidConfig(
            "phi_end must lie below the initial φ".into(),
        ));
    }
    let phi_start = s0.phi;
    let rhs = |sigma: f64, y: &[f64; 8]| -> Result<[f64; 8]> {
        let s = ExtendedState::from_slice(&[
            y[0],
            y[1],
            y[2],
            y[3],
            y[4],
            y[5],
            y[6],
            y[7],
            phi_start - sigma,
        ]);
        let (dq, dp) = sys.reduced_field_phi(&s)?;
        let mut out = [0.0; 8];
        for i in 0..4 {
            out[i] = -dq[i];
            out[4 + i] = -dp[i];
        }
        Ok(out)
    };
    let mut y0 = [0.0; 8];
    y0.copy_from_slice(&s0.to_array()[..8]);
    let mut samples = Vec::new();
    let mut observer =
        |sigma: f64, y: &mut [f64; 8], dy: &[f64; 8], _step: usize| -> Result<bool> {
            let phi = phi_start - sigma;
            let state =
                ExtendedState::from_slice(&[y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7], phi]);
            let residual = sys.shell_residual(&state)?;
            let m = sys.mass(phi);
            samples.push(Sample {
                lambda: sigma,
                state,
                hamiltonian: 0.5 * residual,
                tau: sys.tau_from_phi(phi_start, phi)?,
                shell_residual: residual,
                tangent: ExtendedTangent {
                    dq: [dy[0], dy[1], dy[2], dy[3]],
                    dp: [dy[4], dy[5], dy[6], dy[7]],
                    dphi: -1.0,
                },
                dtau: 1.0 / (m * sys.c * sys.c),
            });
            Ok(false)
        };
    let out = ode::solve(
        &rhs,
        0.0,
        y0,
        &method,
        max_steps,
        Some(phi_start - phi_end),
        &[],
        &mut observer,
    )?;
    Ok(Trajectory {
        samples,
        parameter: Parameter::Phi,
        termination: Some(Termination::PhiReached),
        description: format!("reduced φ flow: mass {:?}, c = {}", sys.mass, sys.c),
        accepted_steps: out.accepted,
        rejected_steps: out.rejected,
    })
}

/// Integrates the velocity-form geodesic equations
/// `dq/dτ = u`, `du/dτ = -Γ^μ_{αβ} u^α u^β` in proper time, carrying φ along
/// with `dφ/dτ = -m(φ) c²` and reporting `p_μ = m(φ) g_{μν} u^ν`.
///
/// `LambdaReached` and `TauReached` both bound τ.
pub fn geodesic_reference(
    sys: &ContactHamiltonianSystem,
    u0: &FourVelocity,
    q0: &SpacetimePoint,
    phi0: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !sys.metric.is_phi_independent() {
        return Err(Error::PhiDependentMetric);
    }
    if !(sys.mass(phi0) > 0.0) {
        return Err(Error::MasslessProjection);
    }
    let c2 = sys.c * sys.c;
    let glow = sys.metric.lowered_metric(q0, phi0)?;
    let norm = quad_form(&glow, &u0.0, &u0.0);
    if (norm + c2).abs() > 1e-8 * c2 {
        return Err(Error::NotNormalized {
            norm,
            expected: -c2,
        });
    }

    let rhs = |_tau: f64, y: &[f64; 9]| -> Result<[f64; 9]> {
        let q = SpacetimePoint([y[0], y[1], y[2], y[3]]);
        let u = [y[4], y[5], y[6], y[7]];
        let gamma = sys.metric.christoffel(&q, y[8])?;
        let a = gamma.geodesic_acceleration(&u);
        Ok([
            u[0],
            u[1],
            u[2],
            u[3],
            a[0],
            a[1],
            a[2],
            a[3],
            -sys.mass(y[8]) * c2,
        ])
    };
    let mut t_end: Option<f64> = None;
    let mut events: Vec<Box<EventFn<9>>> = Vec::new();
    let mut reasons = Vec::new();
    for s in &cfg.stop {
        match *s {
            StopCondition::LambdaReached(v) | StopCondition::TauReached(v) => {
                t_end = Some(t_end.map_or(v, |t| t.min(v)));
            }
            StopCondition::PhiReached(v) => {
                events.push(Box::new(move |_, y: &[f64; 9]| y[8] - v));
                reasons.push(s.termination());
            }
            StopCondition::CoordinateBound { axis, value } => {
                events.push(Box::new(move |_, y: &[f64; 9]| y[axis] - value));
                reasons.push(s.termination());
            }
            StopCondition::MassFloor(v) => {
                events.push(Box::new(move |_, y: &[f64; 9]| sys.mass(y[8]) - v));
                reasons.push(s.termination());
            }
        }
    }
    let event_refs: Vec<&EventFn<9>> = events.iter().map(|b| b.as_ref()).collect();
    let mut samples = Vec::new();
    let mut observer = |tau: f64, y: &mut [f64; 9], _dy: &[f64; 9], _step: usize| -> Result<bool> {
        let q = SpacetimePoint([y[0], y[1], y[2], y[3]]);
        let phi = y[8];
        let m = sys.mass(phi);
        let p = sys
            .metric
            .lower_index(&q, phi, &[y[4], y[5], y[6], y[7]])?
            .map(|x| m * x);
        let state = ExtendedState {
            q,
            p: CoMomentum(p),
            phi,
        };
        let (dq, dp) = sys.proper_time_field(&state)?;
        let residual = sys.shell_residual(&state)?;
        samples.push(Sample {
            lambda: tau,
            state,
            hamiltonian: 0.5 * residual,
            tau,
            shell_residual: residual,
            tangent: ExtendedTangent {
                dq,
                dp,
                dphi: -m * c2,
            },
            dtau: 1.0,
        });
        Ok(false)
    };
    let mut y0 = [0.0; 9];
    y0[..4].copy_from_slice(&q0.0);
    y0[4..8].copy_from_slice(&u0.0);
    y0[8] = phi0;
    let out = ode::solve(
        &rhs,
        0.0,
        y0,
        &cfg.method,
        cfg.max_steps,
        t_end,
        &event_refs,
        &mut observer,
    )?;
    let termination = match out.stop {
        Stop::End if t_end.is_some() => Some(Termination::TauReached),
        Stop::End => None,
        Stop::Event(i) => Some(reasons[i]),
    };
    Ok(Trajectory {
        samples,
        parameter: Parameter::Tau,
        termination,
        description: format!("geodesic reference: mass {:?}, c = {}", sys.mass, sys.c),
        accepted_steps: out.accepted,
        rejected_steps: out.rejected,
    })
}
