//! The mass-shell contact Hamiltonian
//! `H = ½(g^{μν}(q, φ) p_μ p_ν + m(φ)² c²)` and the evolution contact
//! vector field it generates, plus the φ- and τ-parametrized reductions.

use crate::error::{Error, Result};
use crate::geometry::{
    dot, mat_vec, quad_form, CoMomentum, ExtendedState, Mat4, MetricDerivatives, MetricField,
    SpacetimePoint, Vec4,
};

/// Rest mass as a function of the contact coordinate φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassModel {
    Constant {
        m0: f64,
    },
    /// `m(φ) = m0 + (α/c²)(φ - φ0)`.
    ///
    /// This is exactly the exponential law `m(τ) = m0 e^{-α(τ-τ0)}` once
    /// `dφ = -m c² dτ` is integrated, with `φ0` the value of φ at `τ0`.
    AffinePhi {
        m0: f64,
        alpha: f64,
        phi0: f64,
    },
    Zero,
}

impl MassModel {
    pub fn value(&self, phi: f64, c: f64) -> f64 {
        match *self {
            MassModel::Constant { m0 } => m0,
            MassModel::AffinePhi { m0, alpha, phi0 } => m0 + alpha / (c * c) * (phi - phi0),
            MassModel::Zero => 0.0,
        }
    }

    /// `m'(φ)`.
    pub fn derivative(&self, _phi: f64, c: f64) -> f64 {
        match *self {
            MassModel::AffinePhi { alpha, .. } => alpha / (c * c),
            _ => 0.0,
        }
    }

    pub fn is_massless(&self) -> bool {
        matches!(self, MassModel::Zero)
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            MassModel::AffinePhi { alpha, .. } => alpha == 0.0,
            _ => true,
        }
    }
}

/// Default numerical tolerances; all are overridable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Shell tolerance relative to `m²c²` for massive particles.
    pub shell_rel: f64,
    /// Absolute shell tolerance for massless particles.
    pub shell_abs_massless: f64,
    /// `m²c²` below which φ is no longer a usable parameter.
    pub transversality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            shell_rel: 1e-10,
            shell_abs_massless: 1e-10,
            transversality: 1e-24,
        }
    }
}

/// Components `(dq^μ, dp_μ, dφ)` of the evolution contact vector field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtendedTangent {
    pub dq: Vec4,
    pub dp: Vec4,
    pub dphi: f64,
}

impl ExtendedTangent {
    /// `η(X) = dφ - p_μ dq^μ`; zero for every evolution contact field.
    pub fn eta(&self, p: &CoMomentum) -> f64 {
        self.dphi - dot(&p.0, &self.dq)
    }

    pub fn to_array(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[..4].copy_from_slice(&self.dq);
        out[4..8].copy_from_slice(&self.dp);
        out[8] = self.dphi;
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVelocity(pub Vec4);

#[derive(Debug, Clone)]
pub struct ContactHamiltonianSystem {
    pub metric: MetricField,
    pub mass: MassModel,
    pub c: f64,
    pub tol: Tolerances,
}

struct LocalGeometry {
    ginv: Mat4,
    d: MetricDerivatives,
}

impl ContactHamiltonianSystem {
    pub fn new(metric: MetricField, mass: MassModel, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "speed of light must be positive, got {c}"
            )));
        }
        Ok(Self {
            metric,
            mass,
            c,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn mass(&self, phi: f64) -> f64 {
        self.mass.value(phi, self.c)
    }

    pub fn mass_prime(&self, phi: f64) -> f64 {
        self.mass.derivative(phi, self.c)
    }

    fn c2(&self) -> f64 {
        self.c * self.c
    }

    fn local(&self, s: &ExtendedState) -> Result<LocalGeometry> {
        if !s.is_finite() {
            return Err(Error::NonFiniteState);
        }
        Ok(LocalGeometry {
            ginv: self.metric.eval(&s.q, s.phi)?,
            d: self.metric.metric_derivatives(&s.q, s.phi)?,
        })
    }

    /// `g^{μν} p_μ p_ν`.
    pub fn momentum_norm(&self, s: &ExtendedState) -> Result<f64> {
        let g = self.metric.eval(&s.q, s.phi)?;
        Ok(quad_form(&g, &s.p.0, &s.p.0))
    }

    pub fn hamiltonian(&self, s: &ExtendedState) -> Result<f64> {
        Ok(0.5 * self.shell_residual(s)?)
    }

    /// `g^{μν} p_μ p_ν + m(φ)² c²`, i.e. `2H`; zero exactly on the mass shell.
    pub fn shell_residual(&self, s: &ExtendedState) -> Result<f64> {
        let m = self.mass(s.phi);
        Ok(self.momentum_norm(s)? + m * m * self.c2())
    }

    /// Tolerance used to decide shell membership at `s`.
    pub fn shell_tolerance(&self, phi: f64) -> f64 {
        let m = self.mass(phi);
        if m == 0.0 {
            self.tol.shell_abs_massless
        } else {
            self.tol.shell_rel * m * m * self.c2()
        }
    }

    pub fn is_on_shell(&self, s: &ExtendedState) -> Result<bool> {
        Ok(self.shell_residual(s)?.abs() <= self.shell_tolerance(s.phi))
    }

    /// Rescales `p` onto the mass shell, keeping its direction.
    pub fn project_to_shell(&self, s: &ExtendedState) -> Result<ExtendedState> {
        let m = self.mass(s.phi);
        if m == 0.0 {
            return Err(Error::MasslessProjection);
        }
        let norm = self.momentum_norm(s)?;
        if !(norm < 0.0) {
            return Err(Error::NotTimelike { norm });
        }
        let beta = (m * m * self.c2() / -norm).sqrt();
        let mut out = *s;
        for pm in out.p.0.iter_mut() {
            *pm *= beta;
        }
        Ok(out)
    }

    /// Solves the shell condition for `p_0` given spatial momenta, taking the
    /// forward-in-time root `p_0 < 0`.
    pub fn on_shell_momentum(
        &self,
        q: &SpacetimePoint,
        phi: f64,
        spatial: [f64; 3],
    ) -> Result<CoMomentum> {
        let g = self.metric.inverse_metric(q, phi)?;
        let m = self.mass(phi);
        let a = g[0][0];
        let b = 2.0 * (1..4).map(|i| g[0][i] * spatial[i - 1]).sum::<f64>();
        let mut cc = m * m * self.c2();
        for i in 1..4 {
            for j in 1..4 {
                cc += g[i][j] * spatial[i - 1] * spatial[j - 1];
            }
        }
        let disc = b * b - 4.0 * a * cc;
        if !(disc >= 0.0) || a == 0.0 {
            return Err(Error::NotTimelike { norm: disc });
        }
        let sq = disc.sqrt();
        let p0 = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
            .into_iter()
            .filter(|r| *r < 0.0)
            .fold(f64::NAN, f64::min);
        if p0.is_nan() {
            return Err(Error::NotTimelike { norm: disc });
        }
        Ok(CoMomentum([p0, spatial[0], spatial[1], spatial[2]]))
    }

    /// On-shell momentum of a massive particle moving with coordinate
    /// three-velocity `v = dx/dt`.
    pub fn momentum_from_velocity(
        &self,
        q: &SpacetimePoint,
        phi: f64,
        v: [f64; 3],
    ) -> Result<CoMomentum> {
        let m = self.mass(phi);
        if !(m > 0.0) {
            return Err(Error::MasslessProjection);
        }
        let glow = self.metric.lowered_metric(q, phi)?;
        let dir = [self.c, v[0], v[1], v[2]];
        let norm = quad_form(&glow, &dir, &dir);
        if !(norm < 0.0) {
            return Err(Error::NotTimelike { norm });
        }
        let gamma = self.c / (-norm).sqrt();
        let u = dir.map(|x| gamma * x);
        let p = mat_vec(&glow, &u).map(|x| m * x);
        Ok(CoMomentum(p))
    }

    /// The evolution contact vector field `X_H` at `s`:
    ///
    /// - `dq^μ = g^{μν} p_ν`
    /// - `dp_μ = -½ ∂_μ g^{αβ} p_α p_β - p_μ ∂H/∂φ`
    /// - `dφ  = g^{μν} p_μ p_ν`
    pub fn evolution_field(&self, s: &ExtendedState) -> Result<ExtendedTangent> {
        let lg = self.local(s)?;
        let p = &s.p.0;
        let dq = mat_vec(&lg.ginv, p);
        let dh_dphi = self.dh_dphi_with(&lg, s);
        let mut dp = [0.0; 4];
        for (mu, dpm) in dp.iter_mut().enumerate() {
            *dpm = -0.5 * quad_form(&lg.d.dq[mu], p, p) - p[mu] * dh_dphi;
        }
        Ok(ExtendedTangent {
            dq,
            dp,
            dphi: dot(p, &dq),
        })
    }

    fn dh_dphi_with(&self, lg: &LocalGeometry, s: &ExtendedState) -> f64 {
        let m = self.mass(s.phi);
        0.5 * quad_form(&lg.d.dphi, &s.p.0, &s.p.0) + m * self.c2() * self.mass_prime(s.phi)
    }

    /// `R(H) = ∂H/∂φ = ½ ∂_φ g^{αβ} p_α p_β + m c² m'`.
    pub fn dh_dphi(&self, s: &ExtendedState) -> Result<f64> {
        let lg = self.local(s)?;
        Ok(self.dh_dphi_with(&lg, s))
    }

    /// Divergence of `X_H` with respect to the contact volume, `-4 ∂H/∂φ`.
    pub fn divergence(&self, s: &ExtendedState) -> Result<f64> {
        Ok(-4.0 * self.dh_dphi(s)?)
    }

    /// Residuals of the two defining identities of `X_H`:
    /// `r1 = |η(X_H)|` and `r2 = max |ι_{X_H}dη - dH + R(H) η|` over Darboux
    /// components, with `dH` taken by fourth-order central differences.
    pub fn contact_identity_residuals(&self, s: &ExtendedState) -> Result<(f64, f64)> {
        let x = self.evolution_field(s)?;
        let r1 = x.eta(&s.p).abs();
        let reeb = self.dh_dphi(s)?;
        let grad = self.hamiltonian_gradient_fd(s)?;
        let mut r2 = 0.0f64;
        for mu in 0..4 {
            // dq^μ coefficient: -X_{p_μ} - (∂H/∂q^μ + R(H) p_μ)
            r2 = r2.max((-x.dp[mu] - grad[mu] - reeb * s.p.0[mu]).abs());
            // dp_μ coefficient: X^{q^μ} - ∂H/∂p_μ
            r2 = r2.max((x.dq[mu] - grad[4 + mu]).abs());
        }
        // dφ coefficient: 0 - (∂H/∂φ - R(H))
        r2 = r2.max((grad[8] - reeb).abs());
        Ok((r1, r2))
    }

    fn hamiltonian_gradient_fd(&self, s: &ExtendedState) -> Result<[f64; 9]> {
        let y = s.to_array();
        let mut grad = [0.0; 9];
        for (k, gk) in grad.iter_mut().enumerate() {
            let h = 1e-3 * (1.0 + y[k].abs());
            let at = |t: f64| {
                let mut z = y;
                z[k] += t * h;
                self.hamiltonian(&ExtendedState::from_slice(&z))
            };
            *gk = (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h);
        }
        Ok(grad)
    }

    fn transversal_mass(&self, phi: f64) -> Result<f64> {
        let m = self.mass(phi);
        let mc2 = m * m * self.c2();
        if !(mc2 >= self.tol.transversality) {
            return Err(Error::TransversalityFailure { mass_sq_c2: mc2 });
        }
        Ok(m)
    }

    /// `(dq/dφ, dp/dφ)` of the φ-parametrized flow, evaluated with the shell
    /// substitution `-g^{αβ} p_α p_β = m² c²`.
    pub fn reduced_field_phi(&self, s: &ExtendedState) -> Result<(Vec4, Vec4)> {
        let m = self.transversal_mass(s.phi)?;
        let lg = self.local(s)?;
        let p = &s.p.0;
        let mc2 = m * m * self.c2();
        let up = mat_vec(&lg.ginv, p);
        let dq = up.map(|x| -x / mc2);
        let phi_term = 0.5 * quad_form(&lg.d.dphi, p, p);
        let rate = self.mass_prime(s.phi) / m;
        let mut dp = [0.0; 4];
        for (mu, dpm) in dp.iter_mut().enumerate() {
            *dpm = (0.5 * quad_form(&lg.d.dq[mu], p, p) + p[mu] * phi_term) / mc2 + p[mu] * rate;
        }
        Ok((dq, dp))
    }

    /// `(dq/dτ, dp/dτ)` in proper time, using `∂_τ = -m c² ∂_φ` for both the
    /// metric and the mass.
    pub fn proper_time_field(&self, s: &ExtendedState) -> Result<(Vec4, Vec4)> {
        let m = self.transversal_mass(s.phi)?;
        let lg = self.local(s)?;
        let p = &s.p.0;
        let c2 = self.c2();
        let dq = mat_vec(&lg.ginv, p).map(|x| x / m);
        // ∂g/∂τ pp and ṁ via the chain rule
        let dg_dtau_pp = -m * c2 * quad_form(&lg.d.dphi, p, p);
        let mdot = -m * c2 * self.mass_prime(s.phi);
        let mut dp = [0.0; 4];
        for (mu, dpm) in dp.iter_mut().enumerate() {
            *dpm = -0.5 / m * quad_form(&lg.d.dq[mu], p, p)
                + p[mu] / (2.0 * m * m * c2) * dg_dtau_pp
                + mdot / m * p[mu];
        }
        Ok((dq, dp))
    }

    /// `u^μ = g^{μν} p_ν / m`.
    pub fn four_velocity(&self, s: &ExtendedState) -> Result<FourVelocity> {
        let m = self.transversal_mass(s.phi)?;
        let g = self.metric.eval(&s.q, s.phi)?;
        Ok(FourVelocity(mat_vec(&g, &s.p.0).map(|x| x / m)))
    }

    /// `du^μ/dτ` implied by the proper-time equations and `u = g^{-1}p / m`.
    pub fn four_velocity_rate(&self, s: &ExtendedState) -> Result<Vec4> {
        let m = self.transversal_mass(s.phi)?;
        let lg = self.local(s)?;
        let p = &s.p.0;
        let (u, dp) = self.proper_time_field(s)?;
        let dphi_dtau = -m * self.c2();
        let mdot = self.mass_prime(s.phi) * dphi_dtau;
        let mut dg = [[0.0; 4]; 4];
        for (i, row) in dg.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..4).map(|a| lg.d.dq[a][i][j] * u[a]).sum::<f64>()
                    + lg.d.dphi[i][j] * dphi_dtau;
            }
        }
        let a = mat_vec(&dg, p);
        let b = mat_vec(&lg.ginv, &dp);
        let mut out = [0.0; 4];
        for mu in 0..4 {
            out[mu] = (a[mu] + b[mu]) / m - u[mu] * mdot / m;
        }
        Ok(out)
    }

    fn require_massive_on(&self, phi0: f64, phi1: f64) -> Result<()> {
        // Every supported mass model is affine in φ, so the endpoints decide.
        if self.mass.is_massless() || !(self.mass(phi0) > 0.0) || !(self.mass(phi1) > 0.0) {
            return Err(Error::MasslessProjection);
        }
        Ok(())
    }

    /// Proper time elapsed between φ0 and φ1: `-∫ dφ / (m(φ) c²)`.
    pub fn tau_from_phi(&self, phi0: f64, phi1: f64) -> Result<f64> {
        self.require_massive_on(phi0, phi1)?;
        if phi0 == phi1 {
            return Ok(0.0);
        }
        let c2 = self.c2();
        let k = self.mass_prime(phi0);
        if k == 0.0 {
            return Ok(-(phi1 - phi0) / (self.mass(phi0) * c2));
        }
        let m0 = self.mass(phi0);
        Ok(-(k * (phi1 - phi0) / m0).ln_1p() / (k * c2))
    }

    /// φ reached after proper time `dtau` starting from `phi0`, solving
    /// `dφ/dτ = -m(φ) c²`.
    pub fn phi_after_proper_time(&self, phi0: f64, dtau: f64) -> Result<f64> {
        self.require_massive_on(phi0, phi0)?;
        let c2 = self.c2();
        let m0 = self.mass(phi0);
        let k = self.mass_prime(phi0);
        if k == 0.0 {
            return Ok(phi0 - m0 * c2 * dtau);
        }
        // m(φ) is affine so dm/dτ = -k c² m.
        Ok(phi0 + m0 / k * (-k * c2 * dtau).exp_m1())
    }

    /// Mass after proper time `dtau` from a state at `phi0`.
    pub fn mass_from_tau(&self, phi0: f64, dtau: f64) -> Result<f64> {
        Ok(self.mass(self.phi_after_proper_time(phi0, dtau)?))
    }
}
