//! Cubic Hermite interpolation over trajectory samples, using the stored
//! λ-derivatives as node slopes.

use crate::dynamics::{ContactHamiltonianSystem, ExtendedTangent};
use crate::error::{Error, Result};
use crate::geometry::{quad_form, ExtendedState, SpacetimePoint};

use super::{Parameter, Sample, Trajectory};

const WIDTH: usize = 10;

fn values(s: &Sample) -> [f64; WIDTH] {
    let mut v = [0.0; WIDTH];
    v[..9].copy_from_slice(&s.state.to_array());
    v[9] = s.tau;
    v
}

fn slopes(s: &Sample) -> [f64; WIDTH] {
    let mut d = [0.0; WIDTH];
    d[..9].copy_from_slice(&s.tangent.to_array());
    d[9] = s.dtau;
    d
}

/// Value and derivative of the Hermite cubic through `a` and `b` at `lambda`.
fn hermite(a: &Sample, b: &Sample, lambda: f64) -> ([f64; WIDTH], [f64; WIDTH]) {
    let h = b.lambda - a.lambda;
    let s = (lambda - a.lambda) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let d00 = 6.0 * s2 - 6.0 * s;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = -d00;
    let d11 = 3.0 * s2 - 2.0 * s;
    let (ya, yb, da, db) = (values(a), values(b), slopes(a), slopes(b));
    let mut y = [0.0; WIDTH];
    let mut dy = [0.0; WIDTH];
    for i in 0..WIDTH {
        y[i] = h00 * ya[i] + h10 * h * da[i] + h01 * yb[i] + h11 * h * db[i];
        dy[i] = (d00 * ya[i] + d01 * yb[i]) / h + d10 * da[i] + d11 * db[i];
    }
    (y, dy)
}

fn sample_between(a: &Sample, b: &Sample, lambda: f64) -> Sample {
    let (y, dy) = hermite(a, b, lambda);
    let w = (lambda - a.lambda) / (b.lambda - a.lambda);
    let lerp = |x: f64, z: f64| x + w * (z - x);
    Sample {
        lambda,
        state: ExtendedState::from_slice(&y),
        hamiltonian: lerp(a.hamiltonian, b.hamiltonian),
        tau: y[9],
        shell_residual: lerp(a.shell_residual, b.shell_residual),
        tangent: ExtendedTangent {
            dq: [dy[0], dy[1], dy[2], dy[3]],
            dp: [dy[4], dy[5], dy[6], dy[7]],
            dphi: dy[8],
        },
        dtau: dy[9],
    }
}

/// Index `i` such that `key(i) <= x <= key(i+1)` for increasing keys.
fn bracket(n: usize, x: f64, key: impl Fn(usize) -> f64) -> Option<usize> {
    if n < 2 || x < key(0) || x > key(n - 1) {
        return None;
    }
    let (mut lo, mut hi) = (0, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if key(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

pub(super) fn state_at(traj: &Trajectory, lambda: f64) -> Option<Sample> {
    let s = &traj.samples;
    let i = bracket(s.len(), lambda, |i| s[i].lambda)?;
    Some(sample_between(&s[i], &s[i + 1], lambda))
}

fn component(param: Parameter) -> usize {
    match param {
        Parameter::Phi => 8,
        Parameter::Tau => 9,
        Parameter::Lambda => unreachable!("λ is not a reparametrization target"),
    }
}

/// Solves `v(λ) = target` on one interval of the Hermite interpolant.
fn solve_on_interval(a: &Sample, b: &Sample, comp: usize, target: f64) -> f64 {
    let va = values(a)[comp];
    let rising = values(b)[comp] > va;
    let (mut lo, mut hi) = (a.lambda, b.lambda);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = hermite(a, b, mid).0[comp];
        if (v < target) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn monotone_direction(vals: &[f64]) -> Result<f64> {
    let dir = (vals[1] - vals[0]).signum();
    let ok = vals.windows(2).all(|w| {
        let d = w[1] - w[0];
        d != 0.0 && d.signum() == dir
    });
    if ok && dir != 0.0 {
        Ok(dir)
    } else {
        Err(Error::NotMonotone)
    }
}

/// Position of `target` in the monotone sequence `vals` as an interval index.
fn locate(vals: &[f64], dir: f64, target: f64) -> Option<usize> {
    bracket(vals.len(), dir * target, |i| dir * vals[i])
}

pub(super) fn state_at_tau(traj: &Trajectory, tau: f64) -> Option<Sample> {
    let vals: Vec<f64> = traj.samples.iter().map(|s| s.tau).collect();
    if vals.len() < 2 || vals.iter().any(|t| t.is_nan()) {
        return None;
    }
    let dir = monotone_direction(&vals).ok()?;
    let i = locate(&vals, dir, tau)?;
    let (a, b) = (&traj.samples[i], &traj.samples[i + 1]);
    let lambda = solve_on_interval(a, b, 9, tau);
    let mut s = sample_between(a, b, lambda);
    s.tau = tau;
    Some(s)
}

pub(super) fn reparametrize(traj: &Trajectory, param: Parameter, n: usize) -> Result<Trajectory> {
    let samples = &traj.samples;
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidConfig(
            "reparametrization grid needs at least 2 points".into(),
        ));
    }
    let comp = component(param);
    let vals: Vec<f64> = samples.iter().map(|s| values(s)[comp]).collect();
    if param == Parameter::Tau && vals.iter().any(|t| t.is_nan()) {
        return Err(Error::MasslessProjection);
    }
    let dir = monotone_direction(&vals)?;
    let (first, last) = (vals[0], vals[vals.len() - 1]);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let target = if k == n - 1 {
            last
        } else {
            first + (last - first) * k as f64 / (n - 1) as f64
        };
        let i = locate(&vals, dir, target).ok_or(Error::NotMonotone)?;
        let (a, b) = (&samples[i], &samples[i + 1]);
        let mut s = if target == vals[i] {
            *a
        } else if target == vals[i + 1] {
            *b
        } else {
            sample_between(a, b, solve_on_interval(a, b, comp, target))
        };
        match param {
            Parameter::Phi => s.state.phi = target,
            Parameter::Tau => s.tau = target,
            Parameter::Lambda => {}
        }
        out.push(s);
    }
    Ok(Trajectory {
        samples: out,
        parameter: param,
        termination: traj.termination,
        description: traj.description.clone(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
    })
}

/// Proper time along the samples from the metric line element
/// `c² dτ² = -g_{μν} dq^μ dq^ν`, integrated with three-point Gauss-Legendre
/// on the Hermite interpolant of each interval. Starts from the first
/// sample's accumulated τ.
pub fn metric_proper_time(sys: &ContactHamiltonianSystem, traj: &Trajectory) -> Result<Vec<f64>> {
    let samples = &traj.samples;
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    if first.tau.is_nan() {
        return Err(Error::MasslessProjection);
    }
    let r = (0.6f64).sqrt();
    let nodes = [
        (0.5 - 0.5 * r, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + 0.5 * r, 5.0 / 18.0),
    ];
    let mut out = Vec::with_capacity(samples.len());
    let mut tau = first.tau;
    out.push(tau);
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let h = b.lambda - a.lambda;
        let mut acc = 0.0;
        for (x, wt) in nodes {
            let (y, dy) = hermite(a, b, a.lambda + x * h);
            let q = SpacetimePoint([y[0], y[1], y[2], y[3]]);
            let glow = sys.metric.lowered_metric(&q, y[8])?;
            let dq = [dy[0], dy[1], dy[2], dy[3]];
            acc += wt * (-quad_form(&glow, &dq, &dq)).max(0.0).sqrt();
        }
        tau += acc * h / sys.c;
        out.push(tau);
    }
    Ok(out)
}
