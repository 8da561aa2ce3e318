mod common;

use common::{system, DECAY};
use contactrel::integrators::{
    geodesic_reference, integrate, integrate_reduced_phi, metric_proper_time,
};
use contactrel::{
    Error, ExtendedState, FourVelocity, IntegratorConfig, MassModel, Method, MetricField,
    ShellProjection, SpacetimePoint, StopCondition, Termination,
};

fn flat(mass: MassModel) -> contactrel::ContactHamiltonianSystem {
    system(MetricField::minkowski(), mass)
}

fn rest() -> ExtendedState {
    ExtendedState::new([0.0; 4], [-1.0, 0.0, 0.0, 0.0], 0.0)
}

#[test]
fn free_particle_moves_on_a_straight_line() {
    let sys = flat(MassModel::Constant { m0: 1.0 });
    let s0 = ExtendedState::new([0.0, 0.5, 0.0, 0.0], [-(2.0f64).sqrt(), 1.0, 0.0, 0.0], 0.0);
    let traj = integrate(&sys, &s0, &IntegratorConfig::rk45(1e-10, 1e-12, 10.0)).unwrap();
    assert_eq!(traj.termination, Some(Termination::LambdaReached));
    for s in &traj.samples {
        assert!((s.state.q.0[1] - 0.5 - s.lambda).abs() < 1e-12);
        assert!(s.hamiltonian.abs() < 1e-14);
    }
    assert!((traj.last().lambda - 10.0).abs() < 1e-12);
}

#[test]
fn momentum_norm_tracks_exponential_decay() {
    let sys = flat(DECAY);
    let traj = integrate(&sys, &rest(), &IntegratorConfig::rk45(1e-10, 1e-12, 10.0)).unwrap();
    for s in &traj.samples {
        let norm = (-sys.momentum_norm(&s.state).unwrap()).sqrt();
        assert!(
            (norm - (-0.1 * s.tau).exp()).abs() < 1e-8,
            "λ={} τ={}",
            s.lambda,
            s.tau
        );
    }
}

#[test]
fn decaying_rest_particle_matches_closed_form() {
    let sys = flat(DECAY);
    let traj = integrate(&sys, &rest(), &IntegratorConfig::rk45(1e-11, 1e-13, 10.0)).unwrap();
    for s in &traj.samples {
        let m = 1.0 / (1.0 + 0.1 * s.lambda);
        let t = 10.0 * (0.1 * s.lambda).ln_1p();
        assert!((s.state.p.0[0] + m).abs() < 1e-9);
        assert!((s.state.phi - (m - 1.0) / 0.1).abs() < 1e-9);
        assert!((s.state.q.0[0] - t).abs() < 1e-9);
        assert!((s.tau - t).abs() < 1e-9);
    }
}

#[test]
fn photon_keeps_phi_and_moves_on_null_line() {
    let sys = flat(MassModel::Zero);
    let s0 = ExtendedState::new([0.0; 4], [-1.0, 1.0, 0.0, 0.0], 0.3);
    let traj = integrate(&sys, &s0, &IntegratorConfig::rk45(1e-10, 1e-12, 10.0)).unwrap();
    for s in &traj.samples {
        assert!((s.state.phi - 0.3).abs() < 1e-12);
        assert!((s.state.q.0[0] - s.state.q.0[1]).abs() < 1e-12);
        assert!(s.tau.is_nan());
    }
    assert!(matches!(
        traj.reparametrize_by_phi(),
        Err(Error::NotMonotone)
    ));
    assert!(matches!(
        traj.reparametrize_by_tau(),
        Err(Error::MasslessProjection)
    ));
    assert!(matches!(
        metric_proper_time(&sys, &traj),
        Err(Error::MasslessProjection)
    ));
}

#[test]
fn photon_rejects_projection_and_tau_stop() {
    let sys = flat(MassModel::Zero);
    let s0 = ExtendedState::new([0.0; 4], [-1.0, 1.0, 0.0, 0.0], 0.0);
    let cfg =
        IntegratorConfig::rk45(1e-10, 1e-12, 1.0).with_projection(ShellProjection::EveryKSteps(1));
    assert!(integrate(&sys, &s0, &cfg).is_err());
    let cfg =
        IntegratorConfig::rk45(1e-10, 1e-12, 1.0).with_stops(vec![StopCondition::TauReached(1.0)]);
    assert!(integrate(&sys, &s0, &cfg).is_err());
}

#[test]
fn two_samples_cannot_be_reparametrized() {
    let sys = flat(MassModel::Constant { m0: 1.0 });
    let cfg = IntegratorConfig::rk4(1.0, 1.0);
    let traj = integrate(&sys, &rest(), &cfg).unwrap();
    assert_eq!(traj.samples.len(), 2);
    assert!(matches!(
        traj.reparametrize_by_phi(),
        Err(Error::InsufficientSamples { .. })
    ));
}

#[test]
fn phi_grid_derivative_matches_reduced_field() {
    let sys = flat(DECAY);
    let s0 = ExtendedState::new([0.0; 4], [-(1.25f64).sqrt(), 0.5, 0.0, 0.0], 0.0);
    let traj = integrate(&sys, &s0, &IntegratorConfig::rk45(1e-11, 1e-13, 5.0)).unwrap();
    let by_phi = traj.reparametrize_by_phi_with(400).unwrap();
    for w in by_phi.samples.windows(3) {
        let dphi = w[2].state.phi - w[0].state.phi;
        let grid = (w[2].state.q.0[0] - w[0].state.q.0[0]) / dphi;
        let s = &w[1].state;
        let m = sys.mass(s.phi);
        let want = s.p.0[0] / (m * m);
        assert!((grid - want).abs() < 1e-5 * want.abs(), "{grid} vs {want}");
    }
}

#[test]
fn tau_grid_of_rest_particle_is_coordinate_time() {
    let sys = flat(MassModel::Constant { m0: 1.0 });
    let traj = integrate(&sys, &rest(), &IntegratorConfig::rk45(1e-10, 1e-12, 4.0)).unwrap();
    for s in traj.reparametrize_by_tau().unwrap().samples {
        assert!((s.state.q.0[0] - s.tau).abs() < 1e-10);
    }
}

#[test]
fn lorentz_factor_at_six_tenths_c() {
    let sys = flat(MassModel::Constant { m0: 1.0 });
    let q = SpacetimePoint([0.0; 4]);
    let p = sys
        .momentum_from_velocity(&q, 0.0, [0.6, 0.0, 0.0])
        .unwrap();
    let s0 = ExtendedState { q, p, phi: 0.0 };
    let traj = integrate(&sys, &s0, &IntegratorConfig::rk45(1e-10, 1e-12, 3.0)).unwrap();
    let by_tau = traj.reparametrize_by_tau_with(50).unwrap();
    for w in by_tau.samples.windows(2) {
        let rate = (w[1].state.q.0[0] - w[0].state.q.0[0]) / (w[1].tau - w[0].tau);
        assert!((rate - 1.25).abs() < 1e-8, "{rate}");
    }
    let quad = metric_proper_time(&sys, &traj).unwrap();
    for (s, t) in traj.samples.iter().zip(quad) {
        assert!((s.tau - t).abs() <= 1e-10 * s.tau.max(1e-3));
    }
}

#[test]
fn per_step_projection_keeps_residual_tiny() {
    let sys = flat(DECAY);
    let s0 = ExtendedState::new([0.0; 4], [-(1.25f64).sqrt(), 0.5, 0.0, 0.0], 0.0);
    let cfg =
        IntegratorConfig::rk45(1e-10, 1e-12, 10.0).with_projection(ShellProjection::EveryKSteps(1));
    let traj = integrate(&sys, &s0, &cfg).unwrap();
    for s in &traj.samples {
        let m = sys.mass(s.state.phi);
        assert!(s.shell_residual.abs() < 1e-12 * m * m);
    }
}

#[test]
fn event_stops_land_on_threshold() {
    let sys = flat(DECAY);
    let stops = vec![
        StopCondition::LambdaReached(100.0),
        StopCondition::PhiReached(-2.0),
    ];
    let traj = integrate(
        &sys,
        &rest(),
        &IntegratorConfig::rk45(1e-10, 1e-12, 100.0).with_stops(stops),
    )
    .unwrap();
    assert_eq!(traj.termination, Some(Termination::PhiReached));
    assert!((traj.last().state.phi + 2.0).abs() < 1e-9);

    let stops = vec![StopCondition::MassFloor(0.5)];
    let traj = integrate(
        &sys,
        &rest(),
        &IntegratorConfig::rk45(1e-10, 1e-12, 0.0).with_stops(stops),
    )
    .unwrap();
    assert_eq!(traj.termination, Some(Termination::MassFloor));
    assert!((sys.mass(traj.last().state.phi) - 0.5).abs() < 1e-9);

    let stops = vec![StopCondition::TauReached(2.0)];
    let traj = integrate(
        &sys,
        &rest(),
        &IntegratorConfig::rk45(1e-10, 1e-12, 0.0).with_stops(stops),
    )
    .unwrap();
    assert_eq!(traj.termination, Some(Termination::TauReached));
    assert!((traj.last().tau - 2.0).abs() < 1e-9);

    let s0 = ExtendedState::new([0.0; 4], [-(2.0f64).sqrt(), 1.0, 0.0, 0.0], 0.0);
    let stops = vec![StopCondition::CoordinateBound {
        axis: 1,
        value: 3.0,
    }];
    let traj = integrate(
        &flat(MassModel::Constant { m0: 1.0 }),
        &s0,
        &IntegratorConfig::rk45(1e-10, 1e-12, 0.0).with_stops(stops),
    )
    .unwrap();
    assert_eq!(
        traj.termination,
        Some(Termination::CoordinateBound { axis: 1 })
    );
    assert!((traj.last().state.q.0[1] - 3.0).abs() < 1e-9);
}

#[test]
fn config_errors() {
    let sys = flat(MassModel::Constant { m0: 1.0 });
    let cfg = IntegratorConfig::rk45(1e-10, 1e-12, 1.0).with_stops(vec![]);
    assert!(matches!(
        integrate(&sys, &rest(), &cfg),
        Err(Error::NoStopCondition)
    ));
    let mut cfg = IntegratorConfig::rk45(1e-10, 1e-12, 100.0);
    cfg.max_steps = 3;
    assert!(matches!(
        integrate(&sys, &rest(), &cfg),
        Err(Error::MaxStepsExceeded { .. })
    ));
    let cfg = IntegratorConfig::rk45(-1.0, 1e-12, 1.0);
    assert!(matches!(
        integrate(&sys, &rest(), &cfg),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn trajectory_invariants_hold() {
    let sys = system(MetricField::weak_field(common::point_mass(), 1.0), DECAY);
    let q = SpacetimePoint([0.0, 1.5, 0.0, 0.0]);
    let p = sys
        .momentum_from_velocity(&q, 0.0, [0.0, 0.3, 0.0])
        .unwrap();
    let traj = integrate(
        &sys,
        &ExtendedState { q, p, phi: 0.0 },
        &IntegratorConfig::rk45(1e-10, 1e-12, 10.0),
    )
    .unwrap();
    for w in traj.samples.windows(2) {
        assert!(w[1].lambda > w[0].lambda);
        assert!(w[1].tau >= w[0].tau);
        assert!(w[1].state.phi < w[0].state.phi);
    }
    assert!(traj.max_hamiltonian_drift() < 1e-8);
}

#[test]
fn geodesic_reference_in_flat_space_is_straight() {
    let sys = flat(MassModel::Constant { m0: 1.0 });
    let u = FourVelocity([1.25, 0.75, 0.0, 0.0]);
    let traj = geodesic_reference(
        &sys,
        &u,
        &SpacetimePoint([0.0; 4]),
        0.0,
        &IntegratorConfig::rk45(1e-10, 1e-12, 5.0),
    )
    .unwrap();
    for s in &traj.samples {
        assert!((s.state.q.0[0] - 1.25 * s.tau).abs() < 1e-12);
        assert!((s.state.q.0[1] - 0.75 * s.tau).abs() < 1e-12);
    }
    let bad = FourVelocity([1.0, 0.5, 0.0, 0.0]);
    assert!(matches!(
        geodesic_reference(
            &sys,
            &bad,
            &SpacetimePoint([0.0; 4]),
            0.0,
            &IntegratorConfig::rk45(1e-10, 1e-12, 5.0)
        ),
        Err(Error::NotNormalized { .. })
    ));
    let wavy = system(
        MetricField::new(common::Wavy),
        MassModel::Constant { m0: 1.0 },
    );
    assert!(matches!(
        geodesic_reference(
            &wavy,
            &u,
            &SpacetimePoint([0.0; 4]),
            0.0,
            &IntegratorConfig::rk45(1e-10, 1e-12, 5.0)
        ),
        Err(Error::PhiDependentMetric)
    ));
}

#[test]
fn reduced_integration_agrees_with_contact_flow() {
    let sys = flat(DECAY);
    let s0 = ExtendedState::new([0.0; 4], [-(1.25f64).sqrt(), 0.5, 0.0, 0.0], 0.0);
    let red = integrate_reduced_phi(&sys, &s0, -3.0, Method::rk45(1e-11, 1e-13), 100_000).unwrap();
    let last = red.last();
    assert!((last.state.phi + 3.0).abs() < 1e-12);
    // flat space: spatial momentum scales with the mass
    let m = sys.mass(-3.0);
    assert!((last.state.p.0[1] - 0.5 * m).abs() < 1e-9);
}
