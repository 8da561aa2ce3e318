//! Weighted-marker solver for the contact Liouville equation.
//!
//! Each marker carries a fixed weight `w` (its share of the conserved measure
//! `f Ω`) and the density value `f` transported along its characteristic,
//! `d ln f / dλ = 4 ∂H/∂φ`. With markers distributed according to `f Ω`,
//! `∫ σ(f) Ω ≈ Σ (w/f) σ(f)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::ContactHamiltonianSystem;
use crate::error::{Error, Result};
use crate::geometry::{CoMomentum, ExtendedState, SpacetimePoint};
use crate::integrators::{self, IntegratorConfig, StopCondition};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub state: ExtendedState,
    pub w: f64,
    pub f: f64,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub markers: Vec<Marker>,
    pub sys: ContactHamiltonianSystem,
    pub lambda: f64,
}

/// A concave entropy density `σ` with `σ(0) = 0`.
#[derive(Debug, Clone, Copy)]
pub enum EntropyFunctional {
    /// `σ(f) = -f ln f`.
    ShannonBoltzmann,
    Custom {
        sigma: fn(f64) -> f64,
        sigma_prime: fn(f64) -> f64,
    },
}

impl EntropyFunctional {
    pub fn sigma(&self, f: f64) -> f64 {
        match self {
            EntropyFunctional::ShannonBoltzmann => {
                if f == 0.0 {
                    0.0
                } else {
                    -f * f.ln()
                }
            }
            EntropyFunctional::Custom { sigma, .. } => sigma(f),
        }
    }

    pub fn sigma_prime(&self, f: f64) -> f64 {
        match self {
            EntropyFunctional::ShannonBoltzmann => -f.ln() - 1.0,
            EntropyFunctional::Custom { sigma_prime, .. } => sigma_prime(f),
        }
    }
}

/// One-dimensional marginal of the initial density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    /// Degenerate axis; contributes no density factor.
    Fixed(f64),
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        sigma: f64,
    },
}

impl Marginal {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: String| Err(Error::UnnormalizableSpec(m));
        match *self {
            Marginal::Fixed(v) if !v.is_finite() => bad(format!("{name}: non-finite value")),
            Marginal::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && hi > lo) => {
                bad(format!("{name}: empty or unbounded interval"))
            }
            Marginal::Gaussian { mean, sigma }
                if !(mean.is_finite() && sigma > 0.0 && sigma.is_finite()) =>
            {
                bad(format!("{name}: sigma must be positive"))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Marginal::Fixed(v) => v,
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Marginal::Gaussian { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Marginal::Fixed(_) => 1.0,
            Marginal::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Marginal::Gaussian { mean, sigma } => {
                let z = (x - mean) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }
}

/// Separable initial density over `(q, p_spatial, φ)`; `p_0` is either solved
/// from the mass shell (forward-in-time root) or drawn from its own marginal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDensitySpec {
    pub q: [Marginal; 4],
    pub p_spatial: [Marginal; 3],
    pub p0: Option<Marginal>,
    pub phi: Marginal,
}

impl InitialDensitySpec {
    fn axes(&self) -> impl Iterator<Item = (&'static str, &Marginal)> {
        const Q: [&str; 4] = ["q0", "q1", "q2", "q3"];
        const P: [&str; 3] = ["p1", "p2", "p3"];
        Q.into_iter()
            .zip(self.q.iter())
            .chain(P.into_iter().zip(self.p_spatial.iter()))
            .chain(self.p0.iter().map(|m| ("p0", m)))
            .chain(std::iter::once(("phi", &self.phi)))
    }

    pub fn validate(&self) -> Result<()> {
        self.axes().try_for_each(|(name, m)| m.validate(name))
    }

    /// Density value at a state, ignoring the on-shell `p_0` coordinate.
    pub fn density(&self, s: &ExtendedState) -> f64 {
        let mut f = self.phi.density(s.phi);
        for i in 0..4 {
            f *= self.q[i].density(s.q.0[i]);
        }
        for i in 0..3 {
            f *= self.p_spatial[i].density(s.p.0[i + 1]);
        }
        if let Some(m) = &self.p0 {
            f *= m.density(s.p.0[0]);
        }
        f
    }
}

/// Draws `n` markers with weights `1/n`, deterministically from `seed`.
pub fn sample_ensemble(
    sys: &ContactHamiltonianSystem,
    spec: &InitialDensitySpec,
    n: usize,
    seed: u64,
) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 1.0 / n as f64;
    let mut markers = Vec::with_capacity(n);
    for _ in 0..n {
        let q = SpacetimePoint(std::array::from_fn(|i| spec.q[i].draw(&mut rng)));
        let spatial: [f64; 3] = std::array::from_fn(|i| spec.p_spatial[i].draw(&mut rng));
        let p0 = spec.p0.map(|m| m.draw(&mut rng));
        let phi = spec.phi.draw(&mut rng);
        let p = match p0 {
            Some(p0) => CoMomentum([p0, spatial[0], spatial[1], spatial[2]]),
            None => sys.on_shell_momentum(&q, phi, spatial)?,
        };
        let state = ExtendedState { q, p, phi };
        let f = spec.density(&state);
        if !(f > 0.0) {
            return Err(Error::UnnormalizableSpec(
                "sampled density is not positive".into(),
            ));
        }
        markers.push(Marker { state, w, f });
    }
    Ok(Ensemble {
        markers,
        sys: sys.clone(),
        lambda: 0.0,
    })
}

/// Pairwise (fixed-tree) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        let w: Vec<f64> = self.markers.iter().map(|m| m.w).collect();
        pairwise_sum(&w)
    }

    fn check_densities(&self) -> Result<()> {
        match self
            .markers
            .iter()
            .position(|m| !(m.f > 0.0 && m.f.is_finite()))
        {
            Some(index) => Err(Error::NonPositiveDensity {
                index,
                value: self.markers[index].f,
            }),
            None => Ok(()),
        }
    }

    /// Advances every marker by `dlambda` along the evolution contact field.
    ///
    /// Stop conditions in `cfg` are replaced by the span `dlambda`; weights are
    /// left untouched and markers whose density drops to zero are removed.
    pub fn propagate(&self, dlambda: f64, cfg: &IntegratorConfig) -> Result<Ensemble> {
        if !(dlambda >= 0.0 && dlambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dλ must be finite and non-negative, got {dlambda}"
            )));
        }
        let mut out = self.clone();
        if dlambda == 0.0 {
            return Ok(out);
        }
        let cfg = cfg
            .clone()
            .with_stops(vec![StopCondition::LambdaReached(dlambda)]);
        let advanced: Result<Vec<Marker>> = self
            .markers
            .par_iter()
            .map(|m| {
                let r = integrators::run(&self.sys, &m.state, self.lambda, &cfg, false)?;
                Ok(Marker {
                    state: ExtendedState::from_slice(&r.final_y),
                    w: m.w,
                    f: m.f * r.final_y[integrators::LOG_GAIN_INDEX].exp(),
                })
            })
            .collect();
        out.markers = advanced?.into_iter().filter(|m| m.f > 0.0).collect();
        out.lambda = self.lambda + dlambda;
        Ok(out)
    }

    /// `S = Σ (w/f) σ(f)`.
    pub fn entropy(&self, functional: &EntropyFunctional) -> Result<f64> {
        self.check_densities()?;
        let terms: Vec<f64> = self
            .markers
            .iter()
            .map(|m| m.w / m.f * functional.sigma(m.f))
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// `dS/dλ = 4 Σ (w/f) [f σ'(f) - σ(f)] ∂H/∂φ`.
    pub fn entropy_rate(&self, functional: &EntropyFunctional) -> Result<f64> {
        self.check_densities()?;
        let terms: Result<Vec<f64>> = self
            .markers
            .iter()
            .map(|m| {
                let f = m.f;
                let k = f * functional.sigma_prime(f) - functional.sigma(f);
                Ok(4.0 * m.w / f * k * self.sys.dh_dphi(&m.state)?)
            })
            .collect();
        Ok(pairwise_sum(&terms?))
    }

    /// Analytic entropy rate against the forward difference of [`entropy`](Self::entropy)
    /// over one propagation step.
    pub fn rate_consistency_check(
        &self,
        functional: &EntropyFunctional,
        dlambda: f64,
        cfg: &IntegratorConfig,
    ) -> Result<(f64, f64)> {
        let analytic = self.entropy_rate(functional)?;
        let s0 = self.entropy(functional)?;
        let s1 = self.propagate(dlambda, cfg)?.entropy(functional)?;
        Ok((analytic, (s1 - s0) / dlambda))
    }
}
