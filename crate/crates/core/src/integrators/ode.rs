//! Explicit Runge-Kutta engine over fixed-size state arrays.
//!
//! The parameter always increases. Stop events are scalar functions whose
//! sign change is located by bisection on the step size.

use crate::error::{Error, Result};

use super::Method;

pub(crate) type Rhs<'a, const N: usize> = dyn Fn(f64, &[f64; N]) -> Result<[f64; N]> + 'a;
pub(crate) type EventFn<'a, const N: usize> = dyn Fn(f64, &[f64; N]) -> f64 + 'a;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop {
    End,
    Event(usize),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcome {
    pub stop: Stop,
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Trial<const N: usize> {
    y: [f64; N],
    /// Derivative at the new point when the method provides it (FSAL).
    dy: Option<[f64; N]>,
    err: f64,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (w, k) in terms {
            s += w * k[i];
        }
        *o += h * s;
    }
    out
}

fn rk4_step<const N: usize>(
    rhs: &Rhs<N>,
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    h: f64,
) -> Result<Trial<N>> {
    let k1 = *dy;
    let k2 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &[(1.0, &k1)]))?;
    let k3 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &[(1.0, &k2)]))?;
    let k4 = rhs(t + h, &axpy(y, h, &[(1.0, &k3)]))?;
    let y_new = axpy(
        y,
        h / 6.0,
        &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)],
    );
    Ok(Trial {
        y: y_new,
        dy: None,
        err: 0.0,
    })
}

fn dopri_step<const N: usize>(
    rhs: &Rhs<N>,
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trial<N>> {
    let mut k = [[0.0; N]; 7];
    k[0] = *dy;
    for s in 1..7 {
        let terms: Vec<(f64, &[f64; N])> = (0..s).map(|j| (A[s][j], &k[j])).collect();
        let ys = axpy(y, h, &terms);
        k[s] = rhs(t + C[s] * h, &ys)?;
    }
    // The seventh stage is evaluated at the fifth-order solution.
    let y5 = axpy(y, h, &(0..6).map(|j| (B5[j], &k[j])).collect::<Vec<_>>());
    let mut acc = 0.0;
    for i in 0..N {
        let e: f64 = h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>();
        let sc = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
        acc += (e / sc).powi(2);
    }
    let err = (acc / N as f64).sqrt();
    Ok(Trial {
        y: y5,
        dy: Some(k[6]),
        err: if err.is_finite() && y5.iter().all(|x| x.is_finite()) {
            err
        } else {
            f64::INFINITY
        },
    })
}

fn trial<const N: usize>(
    method: &Method,
    rhs: &Rhs<N>,
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    h: f64,
) -> Result<Trial<N>> {
    match *method {
        Method::Rk4 { .. } => rk4_step(rhs, t, y, dy, h),
        Method::Rk45 {
            rel_tol, abs_tol, ..
        } => dopri_step(rhs, t, y, dy, h, rel_tol, abs_tol),
    }
}

fn initial_step<const N: usize>(
    rhs: &Rhs<N>,
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let norm = |v: &[f64; N], base: &[f64; N]| {
        let s: f64 = (0..N)
            .map(|i| (v[i] / (abs_tol + rel_tol * base[i].abs())).powi(2))
            .sum();
        (s / N as f64).sqrt()
    };
    let d0 = norm(y, y);
    let d1 = norm(dy, y);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = axpy(y, h0, &[(1.0, dy)]);
    let dy1 = rhs(t + h0, &y1)?;
    let diff: [f64; N] = std::array::from_fn(|i| dy1[i] - dy[i]);
    let d2 = norm(&diff, y) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` until `t_end` or the first event.
///
/// `observer` sees every accepted point (including the initial one) and may
/// modify the state in place, returning `true` when it did so.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve<const N: usize>(
    rhs: &Rhs<N>,
    t0: f64,
    y0: [f64; N],
    method: &Method,
    max_steps: usize,
    t_end: Option<f64>,
    events: &[&EventFn<N>],
    observer: &mut dyn FnMut(f64, &mut [f64; N], &[f64; N], usize) -> Result<bool>,
) -> Result<Outcome> {
    let mut t = t0;
    let mut y = y0;
    let mut dy = rhs(t, &y)?;
    if observer(t, &mut y, &dy, 0)? {
        dy = rhs(t, &y)?;
    }
    let mut out = Outcome {
        stop: Stop::End,
        accepted: 0,
        rejected: 0,
    };

    let g0: Vec<f64> = events.iter().map(|g| g(t, &y)).collect();
    if let Some(i) = g0.iter().position(|g| *g == 0.0) {
        out.stop = Stop::Event(i);
        return Ok(out);
    }
    if let Some(te) = t_end {
        if te <= t {
            return Ok(out);
        }
    }
    let crossed = |tn: f64, yn: &[f64; N]| -> Option<usize> {
        (0..events.len()).find(|&i| events[i](tn, yn) * g0[i].signum() <= 0.0)
    };

    let (mut h, min_step, max_step, adaptive) = match *method {
        Method::Rk4 { step } => (step, 0.0, f64::INFINITY, false),
        Method::Rk45 {
            rel_tol,
            abs_tol,
            min_step,
            max_step,
            initial_step: h0,
        } => {
            let h = match h0 {
                Some(h) => h,
                None => initial_step(rhs, t, &y, &dy, rel_tol, abs_tol)?,
            };
            (h.min(max_step).max(min_step), min_step, max_step, true)
        }
    };

    loop {
        if out.accepted >= max_steps {
            return Err(Error::MaxStepsExceeded { max_steps });
        }
        let mut last = false;
        let mut step = h;
        if let Some(te) = t_end {
            if t + step >= te || (te - t - step) <= 1e-12 * step {
                step = te - t;
                last = true;
            }
        }
        let tr = trial(method, rhs, t, &y, &dy, step)?;
        if adaptive {
            if tr.err > 1.0 {
                out.rejected += 1;
                let factor = (0.9 * tr.err.powf(-0.2)).clamp(0.2, 1.0);
                h = step * factor;
                if h < min_step || !h.is_finite() || t + h == t {
                    return Err(Error::StepSizeUnderflow { lambda: t, step: h });
                }
                continue;
            }
        } else if !tr.y.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteState);
        }

        let (mut t_new, mut y_new, mut dy_new) =
            (if last { t_end.unwrap() } else { t + step }, tr.y, tr.dy);
        let mut hit = crossed(t_new, &y_new);
        if hit.is_some() {
            // Bisect on the step length for the first crossing.
            let (mut lo, mut hi) = (0.0, step);
            let mut best = (t_new, y_new, dy_new);
            for _ in 0..200 {
                if hi - lo <= 4.0 * f64::EPSILON * (t.abs() + hi) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let tm = trial(method, rhs, t, &y, &dy, mid)?;
                if crossed(t + mid, &tm.y).is_some() {
                    hi = mid;
                    best = (t + mid, tm.y, tm.dy);
                } else {
                    lo = mid;
                }
            }
            t_new = best.0;
            y_new = best.1;
            dy_new = best.2;
            hit = crossed(t_new, &y_new);
        }

        let mut dyn_ = match dy_new {
            Some(d) => d,
            None => rhs(t_new, &y_new)?,
        };
        out.accepted += 1;
        if observer(t_new, &mut y_new, &dyn_, out.accepted)? {
            dyn_ = rhs(t_new, &y_new)?;
        }
        if adaptive {
            let factor = if tr.err == 0.0 {
                5.0
            } else {
                (0.9 * tr.err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (step * factor).min(max_step);
        }
        t = t_new;
        y = y_new;
        dy = dyn_;
        if let Some(i) = hit {
            out.stop = Stop::Event(i);
            return Ok(out);
        }
        if last {
            return Ok(out);
        }
    }
}
