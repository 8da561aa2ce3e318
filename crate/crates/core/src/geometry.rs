//! Spacetime points, co-momenta and (inverse) metric fields.
//!
//! Metrics are supplied in contravariant form `g^{μν}(q, φ)`; the covariant
//! metric is always obtained by inverting it numerically. Coordinate 0 is `c·t`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix4, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

/// Condition number above which the metric is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpacetimePoint(pub Vec4);

/// Covariant four-momentum. Forward-in-time motion has `p_0 = -E/c < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoMomentum(pub Vec4);

/// A point `(q^μ, p_μ, φ)` of the extended phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtendedState {
    pub q: SpacetimePoint,
    pub p: CoMomentum,
    pub phi: f64,
}

impl SpacetimePoint {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl CoMomentum {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl ExtendedState {
    pub fn new(q: Vec4, p: Vec4, phi: f64) -> Self {
        Self {
            q: SpacetimePoint(q),
            p: CoMomentum(p),
            phi,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite() && self.phi.is_finite()
    }

    /// Flattens to `[q0..q3, p0..p3, φ]`.
    pub fn to_array(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[..4].copy_from_slice(&self.q.0);
        out[4..8].copy_from_slice(&self.p.0);
        out[8] = self.phi;
        out
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self::new([y[0], y[1], y[2], y[3]], [y[4], y[5], y[6], y[7]], y[8])
    }
}

/// A closed-form inverse metric `g^{μν}(q, φ)`.
///
/// Implementations must be pure; analytic derivatives are optional and fall
/// back to fourth-order central differences in [`MetricField`].
pub trait Metric: Send + Sync + fmt::Debug {
    fn inverse(&self, q: &SpacetimePoint, phi: f64) -> Mat4;

    /// `∂g^{μν}/∂q^α`, indexed `[α][μ][ν]`.
    fn inverse_dq(&self, _q: &SpacetimePoint, _phi: f64) -> Option<[Mat4; 4]> {
        None
    }

    /// `∂g^{μν}/∂φ`.
    fn inverse_dphi(&self, _q: &SpacetimePoint, _phi: f64) -> Option<Mat4> {
        None
    }

    /// Whether `g^{μν}` is known not to depend on φ.
    fn is_phi_independent(&self) -> bool {
        false
    }
}

/// Flat spacetime, `g^{μν} = diag(-1, 1, 1, 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Minkowski;

impl Metric for Minkowski {
    fn inverse(&self, _q: &SpacetimePoint, _phi: f64) -> Mat4 {
        diag([-1.0, 1.0, 1.0, 1.0])
    }

    fn inverse_dq(&self, _q: &SpacetimePoint, _phi: f64) -> Option<[Mat4; 4]> {
        Some([[[0.0; 4]; 4]; 4])
    }

    fn inverse_dphi(&self, _q: &SpacetimePoint, _phi: f64) -> Option<Mat4> {
        Some([[0.0; 4]; 4])
    }

    fn is_phi_independent(&self) -> bool {
        true
    }
}

/// Newtonian potential `φ_N(x)` of a weak-field metric, in units of velocity².
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// `-GM / sqrt(r² + ε²)`.
    PointMass { gm: f64, softening: f64 },
    /// `g · x`, a uniform field with acceleration `-g`.
    UniformGradient { g: [f64; 3] },
}

impl Potential {
    pub fn value(&self, x: &[f64; 3]) -> f64 {
        match *self {
            Potential::PointMass { gm, softening } => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + softening * softening;
                -gm / r2.sqrt()
            }
            Potential::UniformGradient { g } => g[0] * x[0] + g[1] * x[1] + g[2] * x[2],
        }
    }

    pub fn gradient(&self, x: &[f64; 3]) -> [f64; 3] {
        match *self {
            Potential::PointMass { gm, softening } => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + softening * softening;
                let k = gm / (r2 * r2.sqrt());
                [k * x[0], k * x[1], k * x[2]]
            }
            Potential::UniformGradient { g } => g,
        }
    }
}

/// Weak-field metric `g^{μν} = diag(-1 + 2φ_N/c², 1 - 2φ_N/c², ...)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakField {
    pub potential: Potential,
    pub c: f64,
}

impl WeakField {
    fn spatial(q: &SpacetimePoint) -> [f64; 3] {
        [q.0[1], q.0[2], q.0[3]]
    }
}

impl Metric for WeakField {
    fn inverse(&self, q: &SpacetimePoint, _phi: f64) -> Mat4 {
        let s = 2.0 * self.potential.value(&Self::spatial(q)) / (self.c * self.c);
        diag([-1.0 + s, 1.0 - s, 1.0 - s, 1.0 - s])
    }

    fn inverse_dq(&self, q: &SpacetimePoint, _phi: f64) -> Option<[Mat4; 4]> {
        let grad = self.potential.gradient(&Self::spatial(q));
        let k = 2.0 / (self.c * self.c);
        let mut out = [[[0.0; 4]; 4]; 4];
        for (i, gi) in grad.iter().enumerate() {
            let d = k * gi;
            out[i + 1] = diag([d, -d, -d, -d]);
        }
        Some(out)
    }

    fn inverse_dphi(&self, _q: &SpacetimePoint, _phi: f64) -> Option<Mat4> {
        Some([[0.0; 4]; 4])
    }

    fn is_phi_independent(&self) -> bool {
        true
    }
}

pub fn diag(d: Vec4) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        m[i][i] = d[i];
    }
    m
}

pub(crate) fn mat_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] + m[i][3] * v[3];
    }
    out
}

/// `Σ m^{μν} a_μ b_ν`.
pub(crate) fn quad_form(m: &Mat4, a: &Vec4, b: &Vec4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            s += m[i][j] * a[i] * b[j];
        }
    }
    s
}

pub(crate) fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn to_na(m: &Mat4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[i][j])
}

fn from_na(m: &Matrix4<f64>) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    out
}

/// `∂g^{μν}/∂q^α` (indexed `[α][μ][ν]`) and `∂g^{μν}/∂φ` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricDerivatives {
    pub dq: [Mat4; 4],
    pub dphi: Mat4,
}

/// Christoffel symbols `Γ^μ_{αβ}` indexed `[μ][α][β]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelSymbols {
    pub gamma: [Mat4; 4],
}

impl ChristoffelSymbols {
    /// `-Γ^μ_{αβ} u^α u^β`.
    pub fn geodesic_acceleration(&self, u: &Vec4) -> Vec4 {
        let mut a = [0.0; 4];
        for (mu, am) in a.iter_mut().enumerate() {
            *am = -quad_form(&self.gamma[mu], u, u);
        }
        a
    }
}

/// A metric together with its finite-difference fallback configuration.
///
/// Cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct MetricField {
    metric: Arc<dyn Metric>,
    /// Relative coordinate step; the absolute step is `fd_step_q · (1 + |q^α|)`.
    pub fd_step_q: f64,
    /// Relative φ step; the absolute step is `fd_step_phi · (1 + |φ|)`.
    pub fd_step_phi: f64,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("metric", &self.metric)
            .field("fd_step_q", &self.fd_step_q)
            .field("fd_step_phi", &self.fd_step_phi)
            .finish()
    }
}

impl MetricField {
    pub fn new<M: Metric + 'static>(metric: M) -> Self {
        Self::from_arc(Arc::new(metric))
    }

    pub fn from_arc(metric: Arc<dyn Metric>) -> Self {
        Self {
            metric,
            fd_step_q: 1e-4,
            fd_step_phi: 1e-4,
        }
    }

    pub fn minkowski() -> Self {
        Self::new(Minkowski)
    }

    pub fn weak_field(potential: Potential, c: f64) -> Self {
        Self::new(WeakField { potential, c })
    }

    pub fn with_fd_steps(mut self, fd_step_q: f64, fd_step_phi: f64) -> Self {
        self.fd_step_q = fd_step_q;
        self.fd_step_phi = fd_step_phi;
        self
    }

    pub fn metric(&self) -> &dyn Metric {
        self.metric.as_ref()
    }

    pub fn is_phi_independent(&self) -> bool {
        self.metric.is_phi_independent()
    }

    /// Evaluates `g^{μν}` checking only finiteness. Used on hot paths.
    pub(crate) fn eval(&self, q: &SpacetimePoint, phi: f64) -> Result<Mat4> {
        let g = self.metric.inverse(q, phi);
        if g.iter().flatten().all(|x| x.is_finite()) {
            Ok(g)
        } else {
            Err(Error::NonFiniteMetric)
        }
    }

    /// Validated `g^{μν}(q, φ)`: finite with signature (-,+,+,+).
    pub fn inverse_metric(&self, q: &SpacetimePoint, phi: f64) -> Result<Mat4> {
        let g = self.eval(q, phi)?;
        let eig = SymmetricEigen::new(to_na(&g));
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let zero = eig
            .eigenvalues
            .iter()
            .filter(|x| x.abs() <= scale * f64::EPSILON * 16.0)
            .count();
        let negative = eig
            .eigenvalues
            .iter()
            .filter(|x| **x < 0.0 && x.abs() > scale * f64::EPSILON * 16.0)
            .count();
        if negative != 1 || zero != 0 {
            return Err(Error::BadSignature { negative, zero });
        }
        Ok(g)
    }

    /// Covariant metric `g_{μν}`, by inverting `g^{μν}`.
    pub fn lowered_metric(&self, q: &SpacetimePoint, phi: f64) -> Result<Mat4> {
        let g = self.inverse_metric(q, phi)?;
        invert_checked(&g)
    }

    pub fn metric_derivatives(&self, q: &SpacetimePoint, phi: f64) -> Result<MetricDerivatives> {
        let dq = match self.metric.inverse_dq(q, phi) {
            Some(d) => d,
            None => self.fd_dq(q, phi)?,
        };
        let dphi = match self.metric.inverse_dphi(q, phi) {
            Some(d) => d,
            None if self.metric.is_phi_independent() => [[0.0; 4]; 4],
            None => self.fd_dphi(q, phi)?,
        };
        let finite = dq.iter().flatten().flatten().all(|x| x.is_finite())
            && dphi.iter().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFiniteDerivative);
        }
        Ok(MetricDerivatives { dq, dphi })
    }

    fn fd_dq(&self, q: &SpacetimePoint, phi: f64) -> Result<[Mat4; 4]> {
        let mut out = [[[0.0; 4]; 4]; 4];
        for (alpha, slot) in out.iter_mut().enumerate() {
            let h = self.fd_step_q * (1.0 + q.0[alpha].abs());
            let at = |k: f64| {
                let mut shifted = *q;
                shifted.0[alpha] += k * h;
                self.eval(&shifted, phi)
            };
            *slot = central_difference(at, h)?;
        }
        Ok(out)
    }

    fn fd_dphi(&self, q: &SpacetimePoint, phi: f64) -> Result<Mat4> {
        let h = self.fd_step_phi * (1.0 + phi.abs());
        central_difference(|k| self.eval(q, phi + k * h), h)
    }

    /// `Γ^μ_{αβ} = ½ g^{μσ}(∂_α g_{σβ} + ∂_β g_{σα} - ∂_σ g_{αβ})`.
    pub fn christoffel(&self, q: &SpacetimePoint, phi: f64) -> Result<ChristoffelSymbols> {
        let ginv = self.inverse_metric(q, phi)?;
        let glow = invert_checked(&ginv)?;
        let d = self.metric_derivatives(q, phi)?;
        // ∂_α g_{μν} = -g_{μρ} (∂_α g^{ρσ}) g_{σν}
        let mut dlow = [[[0.0; 4]; 4]; 4];
        for alpha in 0..4 {
            let a = to_na(&glow);
            dlow[alpha] = from_na(&(-(a * to_na(&d.dq[alpha]) * a)));
        }
        let mut gamma = [[[0.0; 4]; 4]; 4];
        for mu in 0..4 {
            for a in 0..4 {
                for b in a..4 {
                    let mut s = 0.0;
                    for sigma in 0..4 {
                        s += ginv[mu][sigma]
                            * (dlow[a][sigma][b] + dlow[b][sigma][a] - dlow[sigma][a][b]);
                    }
                    gamma[mu][a][b] = 0.5 * s;
                    gamma[mu][b][a] = 0.5 * s;
                }
            }
        }
        Ok(ChristoffelSymbols { gamma })
    }

    /// `v_μ = g_{μν} v^ν`.
    pub fn lower_index(&self, q: &SpacetimePoint, phi: f64, v: &Vec4) -> Result<Vec4> {
        Ok(mat_vec(&self.lowered_metric(q, phi)?, v))
    }

    /// `w^μ = g^{μν} w_ν`.
    pub fn raise_index(&self, q: &SpacetimePoint, phi: f64, w: &Vec4) -> Result<Vec4> {
        Ok(mat_vec(&self.inverse_metric(q, phi)?, w))
    }
}

/// Fourth-order central difference `(-f(2h) + 8f(h) - 8f(-h) + f(-2h)) / 12h`.
fn central_difference<F>(at: F, h: f64) -> Result<Mat4>
where
    F: Fn(f64) -> Result<Mat4>,
{
    let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (-p2[i][j] + 8.0 * p1[i][j] - 8.0 * m1[i][j] + m2[i][j]) / (12.0 * h);
        }
    }
    Ok(out)
}

/// Inverts a symmetric 4×4 matrix, rejecting ill-conditioned input.
pub fn invert_checked(m: &Mat4) -> Result<Mat4> {
    let a = to_na(m);
    let eig = SymmetricEigen::new(a);
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
            (lo.min(x.abs()), hi.max(x.abs()))
        });
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularMetric { condition });
    }
    let inv = a.try_inverse().ok_or(Error::SingularMetric { condition })?;
    // Symmetrize away round-off so the result is exactly symmetric.
    let inv = (inv + inv.transpose()) * 0.5;
    Ok(from_na(&inv))
}
