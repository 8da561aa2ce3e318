//! Shared fixtures and independent finite-difference oracles.
#![allow(dead_code)]

use contactrel::{
    ContactHamiltonianSystem, ExtendedState, MassModel, Mat4, Metric, MetricField, Potential,
    SpacetimePoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth φ-dependent metric with off-diagonal terms and no analytic
/// derivatives, so every derivative goes through the finite-difference path.
#[derive(Debug, Clone, Copy)]
pub struct Wavy;

impl Metric for Wavy {
    fn inverse(&self, q: &SpacetimePoint, phi: f64) -> Mat4 {
        let [t, x, y, z] = q.0;
        let mut g = [[0.0; 4]; 4];
        g[0][0] = -(1.0 + 0.1 * x.sin() + 0.05 * (0.3 * phi).cos());
        g[1][1] = 1.0 + 0.1 * y.cos() + 0.02 * (0.5 * phi).sin();
        g[2][2] = 1.0 + 0.05 * (x * z).sin();
        g[3][3] = 1.0 + 0.08 * (0.2 * t + y).cos();
        let a = 0.05 * (z + 0.2 * phi).sin();
        let b = 0.03 * (x - y).cos();
        g[0][1] = a;
        g[1][0] = a;
        g[2][3] = b;
        g[3][2] = b;
        g
    }
}

pub fn point_mass() -> Potential {
    Potential::PointMass {
        gm: 0.3,
        softening: 0.5,
    }
}

pub fn metrics() -> Vec<(&'static str, MetricField)> {
    vec![
        ("minkowski", MetricField::minkowski()),
        ("weak-field", MetricField::weak_field(point_mass(), 1.0)),
        ("wavy", MetricField::new(Wavy)),
    ]
}

pub const DECAY: MassModel = MassModel::AffinePhi {
    m0: 1.0,
    alpha: 0.1,
    phi0: 0.0,
};

pub fn system(metric: MetricField, mass: MassModel) -> ContactHamiltonianSystem {
    ContactHamiltonianSystem::new(metric, mass, 1.0).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generic state, not necessarily on the shell.
pub fn random_state(rng: &mut ChaCha8Rng) -> ExtendedState {
    let q = [0.0; 4].map(|_| rng.random_range(-2.0..2.0));
    let mut p = [0.0; 4].map(|_| rng.random_range(-1.0..1.0));
    p[0] = rng.random_range(-3.0..-1.0);
    ExtendedState::new(q, p, rng.random_range(-1.0..1.0))
}

/// On-shell state with spatial momentum in `[-1, 1]^3`.
pub fn random_on_shell(sys: &ContactHamiltonianSystem, rng: &mut ChaCha8Rng) -> ExtendedState {
    let s = random_state(rng);
    let p = sys
        .on_shell_momentum(&s.q, s.phi, [s.p.0[1], s.p.0[2], s.p.0[3]])
        .unwrap();
    ExtendedState { p, ..s }
}

fn field(sys: &ContactHamiltonianSystem, y: &[f64; 9]) -> [f64; 9] {
    sys.evolution_field(&ExtendedState::from_slice(y))
        .unwrap()
        .to_array()
}

/// Trace of the Jacobian of `X_H` by fourth-order central differences.
pub fn fd_jacobian_trace(sys: &ContactHamiltonianSystem, s: &ExtendedState) -> f64 {
    let y = s.to_array();
    let mut trace = 0.0;
    for k in 0..9 {
        let h = 1e-3 * (1.0 + y[k].abs());
        let at = |t: f64| {
            let mut z = y;
            z[k] += t * h;
            field(sys, &z)[k]
        };
        trace += (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
    }
    trace
}

/// `dH/dλ` along `X_H` by a central difference in the flow direction.
pub fn fd_hamiltonian_rate(sys: &ContactHamiltonianSystem, s: &ExtendedState) -> f64 {
    let y = s.to_array();
    let x = field(sys, &y);
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let eps = 1e-4 / scale;
    let at = |t: f64| {
        let z: Vec<f64> = (0..9).map(|i| y[i] + t * eps * x[i]).collect();
        sys.hamiltonian(&ExtendedState::from_slice(&z)).unwrap()
    };
    (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * eps)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}
