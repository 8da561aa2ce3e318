//! Invariant battery behind `contactrel verify`.
//!
//! Every check measures one residual against a fixed threshold; failures
//! (including runtime errors) are reported, never propagated.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use contactrel::integrators::integrate;
use contactrel::kinetic::{sample_ensemble, Marginal};
use contactrel::{
    ContactHamiltonianSystem, EntropyFunctional, ExtendedState, InitialDensitySpec,
    IntegratorConfig, MassModel, MetricField, Potential, SpacetimePoint,
};

use crate::expr_metric::ExpressionMetric;
use crate::presets;
use crate::run::{run_ensemble, run_trajectory};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{tag} {:<48} measured {:.3e} (threshold {:.1e})",
            self.name, self.measured, self.threshold
        )?;
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub all_presets: bool,
    /// Test hook: scales the analytic divergence by 1.01 so the divergence
    /// check must fail.
    pub perturb_divergence: bool,
    pub scenario: Option<Scenario>,
}

type Measured = Result<(f64, String), String>;

fn record(name: impl Into<String>, threshold: f64, m: Measured) -> Check {
    record_with(name, threshold, m, |v, t| v < t)
}

fn record_with(
    name: impl Into<String>,
    threshold: f64,
    m: Measured,
    ok: impl Fn(f64, f64) -> bool,
) -> Check {
    let name = name.into();
    match m {
        Ok((measured, detail)) => Check {
            passed: ok(measured, threshold),
            name,
            measured,
            threshold,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            measured: f64::NAN,
            threshold,
            detail,
        },
    }
}

fn err(e: impl fmt::Display) -> String {
    format!("error: {e}")
}

// ---------------------------------------------------------------------------
// fixtures

const DECAY: MassModel = MassModel::AffinePhi {
    m0: 1.0,
    alpha: 0.1,
    phi0: 0.0,
};

fn wavy_metric() -> MetricField {
    let s = |x: &str| x.to_string();
    let inverse = [
        [
            s("-(1 + 0.1 * math::sin(x) + 0.02 * phi)"),
            s("0.05 * math::sin(z + 0.2 * phi)"),
            s("0"),
            s("0"),
        ],
        [
            s("0.05 * math::sin(z + 0.2 * phi)"),
            s("1 + 0.1 * math::cos(y)"),
            s("0"),
            s("0"),
        ],
        [
            s("0"),
            s("0"),
            s("1 + 0.05 * math::sin(x * z)"),
            s("0.03 * math::cos(x - y)"),
        ],
        [
            s("0"),
            s("0"),
            s("0.03 * math::cos(x - y)"),
            s("1 + 0.08 * math::cos(0.2 * t + y)"),
        ],
    ];
    MetricField::new(ExpressionMetric::compile(&inverse, 1.0).expect("fixture expressions compile"))
}

fn metrics() -> Vec<MetricField> {
    vec![
        MetricField::minkowski(),
        MetricField::weak_field(
            Potential::PointMass {
                gm: 0.3,
                softening: 0.5,
            },
            1.0,
        ),
        wavy_metric(),
    ]
}

fn system(metric: MetricField, mass: MassModel) -> ContactHamiltonianSystem {
    ContactHamiltonianSystem::new(metric, mass, 1.0).expect("c = 1 is valid")
}

fn random_state(rng: &mut ChaCha8Rng) -> ExtendedState {
    let q = [0.0; 4].map(|_| rng.random_range(-2.0..2.0));
    let mut p = [0.0; 4].map(|_| rng.random_range(-1.0..1.0));
    p[0] = rng.random_range(-3.0..-1.0);
    ExtendedState::new(q, p, rng.random_range(-1.0..1.0))
}

fn random_on_shell(
    sys: &ContactHamiltonianSystem,
    rng: &mut ChaCha8Rng,
) -> contactrel::Result<ExtendedState> {
    let s = random_state(rng);
    let p = sys.on_shell_momentum(&s.q, s.phi, [s.p.0[1], s.p.0[2], s.p.0[3]])?;
    Ok(ExtendedState { p, ..s })
}

/// Trace of the Jacobian of the evolution field by fourth-order central differences.
fn fd_trace(sys: &ContactHamiltonianSystem, s: &ExtendedState) -> contactrel::Result<f64> {
    let y = s.to_array();
    let mut trace = 0.0;
    for k in 0..9 {
        let h = 1e-3 * (1.0 + y[k].abs());
        let at = |t: f64| -> contactrel::Result<f64> {
            let mut z = y;
            z[k] += t * h;
            Ok(sys
                .evolution_field(&ExtendedState::from_slice(&z))?
                .to_array()[k])
        };
        trace += (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// the battery

fn contact_identities() -> Vec<Check> {
    let run = || -> Result<(f64, f64), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut r1, mut r2) = (0.0f64, 0.0f64);
        for metric in metrics() {
            let sys = system(metric, DECAY);
            for _ in 0..200 {
                let (a, b) = sys
                    .contact_identity_residuals(&random_state(&mut rng))
                    .map_err(err)?;
                r1 = r1.max(a);
                r2 = r2.max(b);
            }
        }
        Ok((r1, r2))
    };
    match run() {
        Ok((r1, r2)) => vec![
            record(
                "contact identity eta(X_H) = 0",
                1e-10,
                Ok((r1, "600 states, 3 metrics".into())),
            ),
            record(
                "contact identity i_X d(eta) = dH - R(H) eta",
                1e-8,
                Ok((r2, "600 states, 3 metrics".into())),
            ),
        ],
        Err(e) => vec![record("contact identities", 1e-10, Err(e))],
    }
}

fn divergence_formula(perturb: bool) -> Check {
    let factor = if perturb { 1.01 } else { 1.0 };
    let m = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst = 0.0f64;
        for metric in metrics() {
            let sys = system(metric, DECAY);
            for _ in 0..50 {
                let s = random_state(&mut rng);
                let div = factor * sys.divergence(&s).map_err(err)?;
                let tr = fd_trace(&sys, &s).map_err(err)?;
                worst = worst.max((div - tr).abs() / div.abs().max(1e-300));
            }
        }
        let note = if perturb {
            "divergence perturbed by 1%"
        } else {
            "150 states, relative"
        };
        Ok((worst, note.to_string()))
    })();
    record("divergence = -4 dH/dphi", 1e-6, m)
}

fn reduction_consistency() -> Check {
    let m = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst = 0.0f64;
        for metric in metrics() {
            let sys = system(metric, DECAY);
            for _ in 0..100 {
                let s = random_on_shell(&sys, &mut rng).map_err(err)?;
                let x = sys.evolution_field(&s).map_err(err)?;
                let (dq, dp) = sys.reduced_field_phi(&s).map_err(err)?;
                for mu in 0..4 {
                    let a = x.dq[mu] / x.dphi;
                    let b = x.dp[mu] / x.dphi;
                    worst = worst.max((dq[mu] - a).abs() / (1.0 + a.abs()));
                    worst = worst.max((dp[mu] - b).abs() / (1.0 + b.abs()));
                }
            }
        }
        Ok((worst, "300 on-shell states".to_string()))
    })();
    record("reduction = field / dphi", 1e-12, m)
}

fn decay_cancellation() -> Vec<Check> {
    let field = MetricField::weak_field(
        Potential::PointMass {
            gm: 0.3,
            softening: 0.5,
        },
        1.0,
    );
    let pointwise = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = system(field.clone(), DECAY);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let s = random_on_shell(&sys, &mut rng).map_err(err)?;
            let u = sys.four_velocity(&s).map_err(err)?;
            let want = field
                .christoffel(&s.q, s.phi)
                .map_err(err)?
                .geodesic_acceleration(&u.0);
            let got = sys.four_velocity_rate(&s).map_err(err)?;
            for mu in 0..4 {
                worst = worst.max((got[mu] - want[mu]).abs() / (1.0 + want[mu].abs()));
            }
        }
        Ok((worst, "du/dtau vs -Gamma u u, 100 states".to_string()))
    })();
    let worldline = (|| {
        let orbit = system(
            MetricField::weak_field(
                Potential::PointMass {
                    gm: 1e-3,
                    softening: 0.0,
                },
                1.0,
            ),
            MassModel::Constant { m0: 1.0 },
        );
        let decaying = system(orbit.metric.clone(), DECAY);
        let q = SpacetimePoint([0.0, 1.0, 0.0, 0.0]);
        let p = orbit
            .momentum_from_velocity(&q, 0.0, [0.0, 1e-3f64.sqrt(), 0.0])
            .map_err(err)?;
        let s0 = ExtendedState { q, p, phi: 0.0 };
        let tau_end = 5.0;
        let cfg = |l: f64| IntegratorConfig::rk45(1e-13, 1e-15, l).with_max_step(0.1);
        let a = integrate(&orbit, &s0, &cfg(tau_end)).map_err(err)?;
        let b =
            integrate(&decaying, &s0, &cfg(((0.1 * tau_end).exp() - 1.0) / 0.1)).map_err(err)?;
        let mut worst = 0.0f64;
        for s in b.samples.iter().filter(|s| s.tau <= tau_end) {
            let x = a.state_at_tau(s.tau).ok_or("tau outside reference run")?;
            for i in 0..4 {
                worst = worst.max((x.q.0[i] - s.state.q.0[i]).abs());
            }
        }
        Ok((
            worst,
            "decaying vs constant mass, tau in [0, 5]".to_string(),
        ))
    })();
    vec![
        record("decay cancellation (field level)", 1e-8, pointwise),
        record("decay cancellation (worldline)", 1e-8, worldline),
    ]
}

fn gas_spec() -> InitialDensitySpec {
    let u = Marginal::Uniform { lo: -1.0, hi: 1.0 };
    let g = Marginal::Gaussian {
        mean: 0.0,
        sigma: 0.3,
    };
    InitialDensitySpec {
        q: [Marginal::Fixed(0.0), u, u, u],
        p_spatial: [g; 3],
        p0: None,
        phi: Marginal::Fixed(0.0),
    }
}

fn entropy_sign_law() -> Check {
    const N: usize = 500;
    let tol = 0.01 + 3.0 / (N as f64).sqrt();
    let m = (|| {
        let sb = EntropyFunctional::ShannonBoltzmann;
        let cfg = IntegratorConfig::rk45(1e-10, 1e-12, 1.0);
        let rate = |mass: MassModel| -> Result<f64, String> {
            let e = sample_ensemble(&system(MetricField::minkowski(), mass), &gas_spec(), N, 5)
                .map_err(err)?;
            e.entropy_rate(&sb).map_err(err)
        };
        let e = sample_ensemble(&system(MetricField::minkowski(), DECAY), &gas_spec(), N, 5)
            .map_err(err)?;
        let (an, emp) = e.rate_consistency_check(&sb, 1e-3, &cfg).map_err(err)?;
        let absorbing = rate(MassModel::AffinePhi {
            m0: 1.0,
            alpha: -0.1,
            phi0: 0.0,
        })?;
        let constant = rate(MassModel::Constant { m0: 1.0 })?;
        let photon = rate(MassModel::Zero)?;
        let signs_ok = an < 0.0 && emp < 0.0 && absorbing > 0.0 && constant == 0.0 && photon == 0.0;
        let mismatch = (an - emp).abs() / an.abs();
        let detail = format!(
            "decay {an:.4} (fd {emp:.4}), absorbing {absorbing:.4}, constant {constant:.1e}, photon {photon:.1e}"
        );
        // a wrong sign fails the check regardless of the mismatch
        Ok((if signs_ok { mismatch } else { f64::INFINITY }, detail))
    })();
    record("entropy sign law and rate consistency", tol, m)
}

fn newtonian_limit() -> Check {
    let m = (|| {
        let c = 1e3;
        let pot = Potential::PointMass {
            gm: 1.0,
            softening: 0.0,
        };
        let sys = ContactHamiltonianSystem::new(
            MetricField::weak_field(pot, c),
            MassModel::Constant { m0: 1.0 },
            c,
        )
        .map_err(err)?;
        let q = SpacetimePoint([0.0, 1.0, 0.0, 0.0]);
        let p = sys
            .momentum_from_velocity(&q, 0.0, [0.0, 1.0, 0.0])
            .map_err(err)?;
        let span = 2.0 * std::f64::consts::PI / c;
        let (n, stride) = (4000usize, 25usize);
        let h = span / n as f64;
        let d = h * stride as f64;
        let traj = integrate(
            &sys,
            &ExtendedState { q, p, phi: 0.0 },
            &IntegratorConfig::rk4(h, span),
        )
        .map_err(err)?;
        let mut worst = 0.0f64;
        for k in 1..8 {
            let c0 = k * n / 8;
            let pts: Vec<[f64; 4]> = (0..5)
                .map(|j| traj.samples[c0 + j * stride - 2 * stride].state.q.0)
                .collect();
            let d1 =
                |i: usize| (pts[0][i] - 8.0 * pts[1][i] + 8.0 * pts[3][i] - pts[4][i]) / (12.0 * d);
            let d2 = |i: usize| {
                (-pts[0][i] + 16.0 * pts[1][i] - 30.0 * pts[2][i] + 16.0 * pts[3][i] - pts[4][i])
                    / (12.0 * d * d)
            };
            let (t1, t2) = (d1(0), d2(0));
            let grad = pot.gradient(&[pts[2][1], pts[2][2], pts[2][3]]);
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            for i in 0..3 {
                // t = q⁰/c
                let acc = c * c * (d2(i + 1) * t1 - d1(i + 1) * t2) / t1.powi(3);
                worst = worst.max((acc + grad[i]).abs() / gnorm);
            }
        }
        Ok((worst, "|phi_N|/c^2 = 1e-6, v/c = 1e-3".to_string()))
    })();
    record("newtonian limit d2x/dt2 = -grad phi_N", 1e-4, m)
}

fn photon_constancy() -> Check {
    let m = (|| {
        let sys = system(MetricField::minkowski(), MassModel::Zero);
        let s0 = ExtendedState::new([0.0; 4], [-1.0, 0.6, 0.8, 0.0], 0.5);
        let traj =
            integrate(&sys, &s0, &IntegratorConfig::rk45(1e-10, 1e-12, 10.0)).map_err(err)?;
        let drift = traj
            .samples
            .iter()
            .map(|s| (s.state.phi - 0.5).abs())
            .fold(0.0, f64::max);
        let rejected = traj.reparametrize_by_phi().is_err();
        let tau_undefined = traj.samples.iter().all(|s| s.tau.is_nan());
        let ok = rejected && tau_undefined;
        Ok((
            if ok { drift } else { f64::INFINITY },
            format!("phi-reparametrization rejected: {rejected}, tau undefined: {tau_undefined}"),
        ))
    })();
    record("photon phi constancy", 1e-12, m)
}

// ---------------------------------------------------------------------------
// presets and user scenarios

fn scenario_checks(sc: &Scenario) -> Vec<Check> {
    let name = sc.display_name();
    let mut out = Vec::new();
    if sc.is_ensemble() {
        let mut quiet = sc.clone();
        quiet.output = None;
        match run_ensemble(&quiet) {
            Ok((run, report)) => {
                let w0 = run.series[0].total_weight;
                let wdrift = run
                    .series
                    .iter()
                    .map(|r| (r.total_weight - w0).abs() / w0)
                    .fold(0.0, f64::max);
                out.push(record(
                    format!("{name}: total weight drift"),
                    1e-8,
                    Ok((wdrift, String::new())),
                ));
                out.push(record(
                    format!("{name}: H drift"),
                    1e-8,
                    Ok((report.max_h_drift, String::new())),
                ));
                let s: Vec<f64> = run.series.iter().map(|r| r.entropy).collect();
                let steps = s.windows(2).map(|w| w[1] - w[0]);
                match name {
                    "decay-gas" => out.push(record_with(
                        format!("{name}: entropy strictly decreasing"),
                        0.0,
                        Ok((
                            steps.fold(f64::NEG_INFINITY, f64::max),
                            "largest step".into(),
                        )),
                        |v, t| v < t,
                    )),
                    "absorbing-gas" => out.push(record_with(
                        format!("{name}: entropy strictly increasing"),
                        0.0,
                        Ok((steps.fold(f64::INFINITY, f64::min), "smallest step".into())),
                        |v, t| v > t,
                    )),
                    "photon-gas" => out.push(record(
                        format!("{name}: entropy constant"),
                        1e-10,
                        Ok((
                            s.iter().map(|x| (x - s[0]).abs()).fold(0.0, f64::max),
                            String::new(),
                        )),
                    )),
                    _ => {}
                }
            }
            Err(e) => out.push(record(format!("{name}: run"), 0.0, Err(err(e)))),
        }
        return out;
    }
    let mut quiet = sc.clone();
    quiet.output = None;
    match run_trajectory(&quiet, false) {
        Ok((traj, report)) => {
            out.push(record(
                format!("{name}: H drift"),
                1e-8,
                Ok((report.max_h_drift, String::new())),
            ));
            match name {
                "special-relativity-free" => {
                    let h = traj
                        .samples
                        .iter()
                        .map(|s| s.hamiltonian.abs())
                        .fold(0.0, f64::max);
                    out.push(record(
                        format!("{name}: |H|"),
                        1e-10,
                        Ok((h, String::new())),
                    ));
                }
                "newtonian-orbit" => {
                    let r = traj
                        .samples
                        .iter()
                        .map(|s| {
                            (s.state.q.0[1..].iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs()
                        })
                        .fold(0.0, f64::max);
                    out.push(record(
                        format!("{name}: radial drift over one period"),
                        1e-3,
                        Ok((r, String::new())),
                    ));
                }
                "photon-null" => {
                    let phi0 = traj.samples[0].state.phi;
                    let drift = traj
                        .samples
                        .iter()
                        .map(|s| (s.state.phi - phi0).abs())
                        .fold(0.0, f64::max);
                    let nan = traj.samples.iter().all(|s| s.tau.is_nan());
                    out.push(record(
                        format!("{name}: phi constant, tau undefined"),
                        1e-12,
                        Ok((if nan { drift } else { f64::INFINITY }, String::new())),
                    ));
                }
                "decaying-orbit" => {
                    let m = (|| {
                        let sys = quiet.system().map_err(err)?;
                        let mut worst = 0.0f64;
                        for s in &traj.samples {
                            let norm = (-sys.momentum_norm(&s.state).map_err(err)?).sqrt();
                            worst = worst.max((norm - (-0.1 * s.tau).exp()).abs());
                        }
                        Ok((worst, "|p| vs m0 exp(-alpha tau) c".to_string()))
                    })();
                    out.push(record(format!("{name}: momentum norm"), 1e-8, m));
                }
                _ => {
                    out.push(record(
                        format!("{name}: shell residual"),
                        1e-8,
                        Ok((report.max_shell_residual, String::new())),
                    ));
                }
            }
        }
        Err(e) => out.push(record(format!("{name}: run"), 0.0, Err(err(e)))),
    }
    out
}

pub fn run_battery(opts: &VerifyOptions) -> Vec<Check> {
    let mut checks = contact_identities();
    checks.push(divergence_formula(opts.perturb_divergence));
    checks.push(reduction_consistency());
    checks.extend(decay_cancellation());
    checks.push(entropy_sign_law());
    checks.push(newtonian_limit());
    checks.push(photon_constancy());
    if opts.all_presets {
        match presets::all() {
            Ok(all) => all.iter().for_each(|sc| checks.extend(scenario_checks(sc))),
            Err(e) => checks.push(record("presets", 0.0, Err(err(e)))),
        }
    }
    if let Some(sc) = &opts.scenario {
        checks.extend(scenario_checks(sc));
    }
    checks
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn new(checks: Vec<Check>) -> Self {
        Self {
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}
