mod common;

use common::{point_mass, rng, Wavy};
use contactrel::geometry::{invert_checked, MetricDerivatives};
use contactrel::{MetricField, Potential, SpacetimePoint};
use proptest::prelude::*;
use rand::Rng;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// Forces the finite-difference route by hiding the analytic derivatives.
#[derive(Debug)]
struct NoDerivatives(contactrel::WeakField);

impl contactrel::Metric for NoDerivatives {
    fn inverse(&self, q: &SpacetimePoint, phi: f64) -> contactrel::Mat4 {
        contactrel::Metric::inverse(&self.0, q, phi)
    }
}

#[test]
fn finite_differences_agree_with_analytic_weak_field() {
    let wf = contactrel::WeakField {
        potential: point_mass(),
        c: 1.0,
    };
    let analytic = MetricField::new(wf);
    let mut r = rng(11);
    for _ in 0..50 {
        let q = SpacetimePoint([0.0; 4].map(|_| r.random_range(-2.0..2.0)));
        let fd_step = 1e-5;
        let numeric = MetricField::new(NoDerivatives(wf)).with_fd_steps(fd_step, fd_step);
        let a: MetricDerivatives = analytic.metric_derivatives(&q, 0.2).unwrap();
        let n = numeric.metric_derivatives(&q, 0.2).unwrap();
        for alpha in 0..4 {
            for mu in 0..4 {
                for nu in 0..4 {
                    let (x, y) = (n.dq[alpha][mu][nu], a.dq[alpha][mu][nu]);
                    if y.abs() > 1e-8 {
                        assert!(rel_err(x, y) < 1e-6, "α={alpha} μ={mu} ν={nu}: {x} vs {y}");
                    } else {
                        assert!(x.abs() < 1e-9);
                    }
                }
            }
        }
    }
}

#[test]
fn weak_field_time_derivative_matches_potential_gradient() {
    let pot = point_mass();
    let m = MetricField::weak_field(pot, 1.0);
    let q = SpacetimePoint([0.0, 0.7, -0.4, 1.1]);
    let d = m.metric_derivatives(&q, 0.0).unwrap();
    // independent central difference of the potential itself
    let h = 1e-5;
    for i in 0..3 {
        let mut xp = [0.7, -0.4, 1.1];
        let mut xm = xp;
        xp[i] += h;
        xm[i] -= h;
        let grad = (pot.value(&xp) - pot.value(&xm)) / (2.0 * h);
        assert!(rel_err(d.dq[i + 1][0][0], 2.0 * grad) < 1e-8);
    }
}

#[test]
fn christoffel_weak_field_leading_order() {
    // Γ^i_00 ≈ ∂φ_N/∂q^i for small potentials.
    let pot = Potential::PointMass {
        gm: 1e-6,
        softening: 0.0,
    };
    let m = MetricField::weak_field(pot, 1.0);
    let x = [1.0, 0.5, -0.3];
    let q = SpacetimePoint([0.0, x[0], x[1], x[2]]);
    let gamma = m.christoffel(&q, 0.0).unwrap();
    let h = 1e-4;
    for i in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[i] += h;
        xm[i] -= h;
        let grad = (pot.value(&xp) - pot.value(&xm)) / (2.0 * h);
        assert!(rel_err(gamma.gamma[i + 1][0][0], grad) < 1e-5, "{i}");
    }
}

#[test]
fn christoffel_matches_finite_differenced_lowered_metric() {
    // Independent route: differentiate g_{μν} (obtained by inversion) directly.
    let m = MetricField::new(Wavy);
    let q = SpacetimePoint([0.3, 0.2, -0.5, 0.8]);
    let phi = 0.4;
    let gamma = m.christoffel(&q, phi).unwrap();
    let ginv = m.inverse_metric(&q, phi).unwrap();
    let h = 1e-4;
    let mut dlow = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        let at = |t: f64| {
            let mut z = q;
            z.0[a] += t * h;
            m.lowered_metric(&z, phi).unwrap()
        };
        let (p2, p1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
        for i in 0..4 {
            for j in 0..4 {
                dlow[a][i][j] =
                    (-p2[i][j] + 8.0 * p1[i][j] - 8.0 * m1[i][j] + m2[i][j]) / (12.0 * h);
            }
        }
    }
    for mu in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for sg in 0..4 {
                    s += 0.5 * ginv[mu][sg] * (dlow[a][sg][b] + dlow[b][sg][a] - dlow[sg][a][b]);
                }
                assert!((gamma.gamma[mu][a][b] - s).abs() < 1e-8);
            }
        }
    }
}

fn coords() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-3.0f64..3.0)
}

proptest! {
    #[test]
    fn inverse_metric_symmetric_with_lorentzian_signature(q in coords(), phi in -2.0f64..2.0) {
        for (_, m) in common::metrics() {
            let g = m.inverse_metric(&SpacetimePoint(q), phi).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((g[i][j] - g[j][i]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices(q in coords(), phi in -2.0f64..2.0) {
        let gamma = MetricField::new(Wavy).christoffel(&SpacetimePoint(q), phi).unwrap();
        for mu in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    prop_assert_eq!(gamma.gamma[mu][a][b], gamma.gamma[mu][b][a]);
                }
            }
        }
    }

    #[test]
    fn raise_lower_round_trip(q in coords(), phi in -2.0f64..2.0, v in prop::array::uniform4(-5.0f64..5.0)) {
        for (_, m) in common::metrics() {
            let q = SpacetimePoint(q);
            let back = m.raise_index(&q, phi, &m.lower_index(&q, phi, &v).unwrap()).unwrap();
            for i in 0..4 {
                prop_assert!((back[i] - v[i]).abs() < 1e-12 * (1.0 + v[i].abs()));
            }
            let ginv = m.inverse_metric(&q, phi).unwrap();
            let glow = invert_checked(&ginv).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let d: f64 = (0..4).map(|k| ginv[i][k] * glow[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - want).abs() < 1e-12);
                }
            }
        }
    }
}
