mod common;

use common::{system, DECAY};
use contactrel::kinetic::{sample_ensemble, Marginal};
use contactrel::{
    Ensemble, EntropyFunctional, Error, ExtendedState, InitialDensitySpec, IntegratorConfig,
    Marker, MassModel, MetricField,
};
use proptest::prelude::*;

const SB: EntropyFunctional = EntropyFunctional::ShannonBoltzmann;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::rk45(1e-10, 1e-12, 1.0)
}

fn gas(sigma_p: f64) -> InitialDensitySpec {
    let u = Marginal::Uniform { lo: -1.0, hi: 1.0 };
    let g = Marginal::Gaussian {
        mean: 0.0,
        sigma: sigma_p,
    };
    InitialDensitySpec {
        q: [Marginal::Fixed(0.0), u, u, u],
        p_spatial: [g; 3],
        p0: None,
        phi: Marginal::Fixed(0.0),
    }
}

#[test]
fn uniform_box_has_unit_density() {
    let sys = system(MetricField::minkowski(), MassModel::Constant { m0: 1.0 });
    let u = Marginal::Uniform { lo: 0.0, hi: 1.0 };
    let spec = InitialDensitySpec {
        q: [u; 4],
        p_spatial: [u; 3],
        p0: None,
        phi: Marginal::Fixed(0.0),
    };
    let e = sample_ensemble(&sys, &spec, 1000, 3).unwrap();
    assert_eq!(e.len(), 1000);
    assert!(e.markers.iter().all(|m| m.f == 1.0));
    assert!((e.total_weight() - 1.0).abs() < 1e-14);
    assert_eq!(e.entropy(&SB).unwrap(), 0.0);
}

#[test]
fn sampled_markers_are_on_shell_and_deterministic() {
    let sys = system(MetricField::weak_field(common::point_mass(), 1.0), DECAY);
    let a = sample_ensemble(&sys, &gas(0.3), 500, 42).unwrap();
    let b = sample_ensemble(&sys, &gas(0.3), 500, 42).unwrap();
    for (x, y) in a.markers.iter().zip(&b.markers) {
        assert_eq!(x.state, y.state);
        assert!(sys.shell_residual(&x.state).unwrap().abs() < 1e-10);
    }
    assert!(matches!(
        sample_ensemble(&sys, &gas(0.3), 0, 1),
        Err(Error::EmptyEnsemble)
    ));
    let mut bad = gas(0.3);
    bad.q[1] = Marginal::Uniform { lo: 1.0, hi: 1.0 };
    assert!(matches!(
        sample_ensemble(&sys, &bad, 10, 1),
        Err(Error::UnnormalizableSpec(_))
    ));
}

#[test]
fn two_marker_entropy() {
    let sys = system(MetricField::minkowski(), MassModel::Constant { m0: 1.0 });
    let st = ExtendedState::new([0.0; 4], [-1.0, 0.0, 0.0, 0.0], 0.0);
    let e = Ensemble {
        markers: vec![
            Marker {
                state: st,
                w: 0.5,
                f: std::f64::consts::E
            };
            2
        ],
        sys,
        lambda: 0.0,
    };
    assert!((e.entropy(&SB).unwrap() + 1.0).abs() < 1e-15);
    let mut z = e.clone();
    z.markers[1].f = 0.0;
    assert!(matches!(
        z.entropy(&SB),
        Err(Error::NonPositiveDensity { index: 1, .. })
    ));
}

#[test]
fn entropy_estimator_matches_grid_quadrature() {
    let sigma = 0.4;
    let g = Marginal::Gaussian { mean: 0.0, sigma };
    let spec = InitialDensitySpec {
        q: [Marginal::Fixed(0.0); 4],
        p_spatial: [g, g, Marginal::Fixed(0.0)],
        p0: None,
        phi: Marginal::Fixed(0.0),
    };
    let sys = system(MetricField::minkowski(), MassModel::Constant { m0: 1.0 });
    let e = sample_ensemble(&sys, &spec, 100_000, 9).unwrap();
    let est = e.entropy(&SB).unwrap();

    // coarse midpoint grid over ±6σ in both momentum axes
    let n = 120;
    let (lo, hi) = (-6.0 * sigma, 6.0 * sigma);
    let h = (hi - lo) / n as f64;
    let mut grid = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h);
            let f = g.density(x) * g.density(y);
            grid += SB.sigma(f) * h * h;
        }
    }
    assert!((est - grid).abs() < 0.02 * grid.abs(), "{est} vs {grid}");
}

#[test]
fn density_follows_closed_form_along_decay() {
    // rest marker in flat space: ∂H/∂φ = 0.1/(1 + 0.1λ) so f grows like (1 + 0.1λ)⁴
    let sys = system(MetricField::minkowski(), DECAY);
    let st = ExtendedState::new([0.0; 4], [-1.0, 0.0, 0.0, 0.0], 0.0);
    let e = Ensemble {
        markers: vec![Marker {
            state: st,
            w: 1.0,
            f: 1.0,
        }],
        sys: sys.clone(),
        lambda: 0.0,
    };
    assert!((e.entropy_rate(&SB).unwrap() + 0.4).abs() < 1e-14);
    let out = e.propagate(5.0, &cfg()).unwrap();
    assert!((out.markers[0].f - 1.5f64.powi(4)).abs() < 1e-8);
    assert_eq!(out.lambda, 5.0);
}

#[test]
fn conservative_and_photon_gases_keep_density() {
    let flat_const = system(MetricField::minkowski(), MassModel::Constant { m0: 1.0 });
    let wf_const = system(
        MetricField::weak_field(common::point_mass(), 1.0),
        MassModel::Constant { m0: 1.0 },
    );
    let photons = system(MetricField::minkowski(), MassModel::Zero);
    for sys in [flat_const, wf_const, photons] {
        let e = sample_ensemble(&sys, &gas(0.5), 200, 1).unwrap();
        assert_eq!(e.entropy_rate(&SB).unwrap(), 0.0);
        let out = e.propagate(2.0, &cfg()).unwrap();
        for (a, b) in e.markers.iter().zip(&out.markers) {
            assert!((a.f - b.f).abs() < 1e-12 * a.f);
            if sys.mass.is_massless() {
                assert!((a.state.phi - b.state.phi).abs() < 1e-12);
            }
        }
        let (an, emp) = e.rate_consistency_check(&SB, 1e-3, &cfg()).unwrap();
        assert!(an.abs() < 1e-10 && emp.abs() < 1e-10);
    }
}

#[test]
fn absorbing_particles_gain_entropy() {
    let sys = system(
        MetricField::minkowski(),
        MassModel::AffinePhi {
            m0: 1.0,
            alpha: -0.1,
            phi0: 0.0,
        },
    );
    let e = sample_ensemble(&sys, &gas(0.3), 2000, 5).unwrap();
    let (an, emp) = e.rate_consistency_check(&SB, 1e-3, &cfg()).unwrap();
    assert!(an > 0.0 && emp > 0.0);
    assert!((an - emp).abs() < 0.01 * an.abs());
}

fn sigma_quad(f: f64) -> f64 {
    f - f * f
}
fn sigma_quad_prime(f: f64) -> f64 {
    1.0 - 2.0 * f
}

#[test]
fn custom_functional_rate_is_consistent() {
    let custom = EntropyFunctional::Custom {
        sigma: sigma_quad,
        sigma_prime: sigma_quad_prime,
    };
    let sys = system(MetricField::minkowski(), DECAY);
    let e = sample_ensemble(&sys, &gas(0.3), 2000, 8).unwrap();
    let (an, emp) = e.rate_consistency_check(&custom, 1e-4, &cfg()).unwrap();
    assert!(an < 0.0);
    assert!((an - emp).abs() < 0.01 * an.abs(), "{an} vs {emp}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sign_law(alpha in -0.3f64..0.3, seed in any::<u64>()) {
        let sys = system(MetricField::minkowski(), MassModel::AffinePhi { m0: 1.0, alpha, phi0: 0.0 });
        let e = sample_ensemble(&sys, &gas(0.4), 200, seed).unwrap();
        let rate = e.entropy_rate(&SB).unwrap();
        prop_assert!(rate * alpha <= 0.0);
    }

    #[test]
    fn weights_conserved_and_log_density_transported(seed in any::<u64>()) {
        let sys = system(MetricField::weak_field(common::point_mass(), 1.0), DECAY);
        let e = sample_ensemble(&sys, &gas(0.3), 20, seed).unwrap();
        let w0 = e.total_weight();
        let out = e.propagate(0.5, &cfg()).unwrap();
        prop_assert!((out.total_weight() - w0).abs() < 1e-12 * w0);
        // d ln f/dλ = 4 ∂H/∂φ, checked with the trapezoid rule over a short span
        for (a, b) in e.markers.iter().zip(&out.markers) {
            let rate = 4.0 * 0.5 * (sys.dh_dphi(&a.state).unwrap() + sys.dh_dphi(&b.state).unwrap());
            let got = (b.f / a.f).ln() / 0.5;
            prop_assert!((got - rate).abs() < 1e-3 * rate.abs());
        }
    }

    #[test]
    fn concavity_spot_check(a in 1e-6f64..10.0, b in 1e-6f64..10.0) {
        let mid = SB.sigma(0.5 * (a + b));
        prop_assert!(mid >= 0.5 * (SB.sigma(a) + SB.sigma(b)) - 1e-15);
        prop_assert_eq!(SB.sigma(0.0), 0.0);
    }
}
