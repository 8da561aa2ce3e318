//! Trajectory and ensemble runs with file output and a diagnostic report.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use contactrel::integrators::{integrate, Sample};
use contactrel::kinetic::sample_ensemble;
use contactrel::{Ensemble, EntropyFunctional, Trajectory};

use crate::output::{
    companion_path, TableWriter, SERIES_COLUMNS, SNAPSHOT_COLUMNS, TRAJECTORY_COLUMNS,
};
use crate::scenario::{InitialSpec, OutputSpec, Reparam, Scenario};
use crate::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub kind: &'static str,
    pub termination: String,
    /// Accepted integrator steps (trajectories) or time-series steps (ensembles).
    pub steps: usize,
    pub rejected_steps: usize,
    pub samples: usize,
    pub max_h_drift: f64,
    pub max_shell_residual: f64,
    pub wall_time_s: f64,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_initial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_final: Option<f64>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario:           {} ({})", self.scenario, self.kind)?;
        writeln!(f, "termination:        {}", self.termination)?;
        writeln!(
            f,
            "steps:              {} accepted, {} rejected",
            self.steps, self.rejected_steps
        )?;
        writeln!(f, "samples:            {}", self.samples)?;
        if let Some(n) = self.markers {
            writeln!(f, "markers:            {n}")?;
        }
        if let (Some(a), Some(b)) = (self.entropy_initial, self.entropy_final) {
            writeln!(f, "entropy:            {a:.9e} -> {b:.9e}")?;
        }
        writeln!(f, "max |H - H(0)|:     {:.3e}", self.max_h_drift)?;
        writeln!(f, "max shell residual: {:.3e}", self.max_shell_residual)?;
        writeln!(f, "wall time:          {:.3} s", self.wall_time_s)?;
        for p in &self.outputs {
            writeln!(f, "wrote               {}", p.display())?;
        }
        Ok(())
    }
}

fn sample_row(s: &Sample) -> [f64; 13] {
    let st = &s.state;
    [
        s.lambda,
        st.q.0[0],
        st.q.0[1],
        st.q.0[2],
        st.q.0[3],
        st.p.0[0],
        st.p.0[1],
        st.p.0[2],
        st.p.0[3],
        st.phi,
        s.hamiltonian,
        s.tau,
        s.shell_residual,
    ]
}

fn write_trajectory(
    traj: &Trajectory,
    out: &OutputSpec,
    path: &std::path::Path,
    stride: usize,
) -> Result<PathBuf> {
    let mut w = TableWriter::create(path, out.format, &TRAJECTORY_COLUMNS)?;
    let n = traj.samples.len();
    for (i, s) in traj.samples.iter().enumerate() {
        if i % stride == 0 || i + 1 == n {
            w.row(&sample_row(s))?;
        }
    }
    w.finish()
}

/// Integrates a single-particle scenario; writes the sample table (and any
/// requested φ/τ companions) when the scenario has an output section.
pub fn run_trajectory(sc: &Scenario, allow_off_shell: bool) -> Result<(Trajectory, RunReport)> {
    if sc.is_ensemble() {
        return Err(CliError::validation(
            "initial",
            "ensemble scenarios run with `contactrel ensemble`",
        ));
    }
    let start = Instant::now();
    let sys = sc.system()?;
    let s0 = sc.initial_state(&sys, allow_off_shell)?;
    let traj = integrate(&sys, &s0, &sc.integrator_config()?)?;
    let mut outputs = Vec::new();
    if let Some(out) = &sc.output {
        outputs.push(write_trajectory(&traj, out, &out.path, out.stride)?);
        for r in &out.reparametrize {
            let (tag, re) = match r {
                Reparam::Phi => ("phi", traj.reparametrize_by_phi_with(out.grid_points)?),
                Reparam::Tau => ("tau", traj.reparametrize_by_tau_with(out.grid_points)?),
            };
            outputs.push(write_trajectory(
                &re,
                out,
                &companion_path(&out.path, tag),
                1,
            )?);
        }
    }
    let report = RunReport {
        scenario: sc.display_name().to_string(),
        kind: "trajectory",
        termination: traj.termination.map_or("none", |t| t.as_str()).to_string(),
        steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        samples: traj.samples.len(),
        max_h_drift: traj.max_hamiltonian_drift(),
        max_shell_residual: traj.max_shell_residual(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        markers: None,
        entropy_initial: None,
        entropy_final: None,
    };
    Ok((traj, report))
}

/// One row of the ensemble time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub lambda: f64,
    pub total_weight: f64,
    pub entropy: f64,
    pub entropy_rate_analytic: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub series: Vec<SeriesRow>,
    pub initial: Ensemble,
    pub last: Ensemble,
}

fn write_snapshot(e: &Ensemble, out: &OutputSpec, index: usize) -> Result<PathBuf> {
    let path = companion_path(&out.path, &format!("snapshot-{index:06}"));
    let mut w = TableWriter::create(&path, out.format, &SNAPSHOT_COLUMNS)?;
    for m in &e.markers {
        let (q, p) = (m.state.q.0, m.state.p.0);
        w.row(&[
            e.lambda,
            q[0],
            q[1],
            q[2],
            q[3],
            p[0],
            p[1],
            p[2],
            p[3],
            m.state.phi,
            m.w,
            m.f,
        ])?;
    }
    w.finish()
}

/// Samples the ensemble, propagates it in steps of `dlambda` up to the λ stop
/// and records total weight, entropy and analytic entropy rate at every step.
/// With an output section the series goes to `output.path` and marker
/// snapshots to `<stem>.snapshot-NNNNNN.<ext>` every `stride` rows.
pub fn run_ensemble(sc: &Scenario) -> Result<(EnsembleRun, RunReport)> {
    let InitialSpec::Ensemble(spec) = &sc.initial else {
        return Err(CliError::validation(
            "initial",
            "single-particle scenarios run with `contactrel run`",
        ));
    };
    let start = Instant::now();
    let sys = sc.system()?;
    let cfg = sc.integrator_config()?;
    let functional = EntropyFunctional::ShannonBoltzmann;
    let lambda_end = sc
        .lambda_end()
        .ok_or_else(|| CliError::validation("stop", "needs `lambda_reached`"))?;
    let steps = ((lambda_end / spec.dlambda) - 1e-9).ceil().max(1.0) as usize;

    let initial = sample_ensemble(&sys, &sc.density_spec()?, spec.n, spec.seed)?;
    let h0: Vec<f64> = initial
        .markers
        .iter()
        .map(|m| sys.hamiltonian(&m.state))
        .collect::<contactrel::Result<_>>()?;
    let mut writer = match &sc.output {
        Some(out) => Some(TableWriter::create(&out.path, out.format, &SERIES_COLUMNS)?),
        None => None,
    };
    let mut outputs = Vec::new();
    let mut series = Vec::with_capacity(steps + 1);
    let (mut max_drift, mut max_shell) = (0.0f64, 0.0f64);
    let mut e = initial.clone();
    for k in 0..=steps {
        let row = SeriesRow {
            lambda: e.lambda,
            total_weight: e.total_weight(),
            entropy: e.entropy(&functional)?,
            entropy_rate_analytic: e.entropy_rate(&functional)?,
        };
        if e.markers.len() == h0.len() {
            for (m, h) in e.markers.iter().zip(&h0) {
                max_drift = max_drift.max((sys.hamiltonian(&m.state)? - h).abs());
            }
        }
        for m in &e.markers {
            max_shell = max_shell.max(sys.shell_residual(&m.state)?.abs());
        }
        if let Some(w) = writer.as_mut() {
            w.row(&[
                row.lambda,
                row.total_weight,
                row.entropy,
                row.entropy_rate_analytic,
            ])?;
        }
        if let Some(out) = &sc.output {
            if k % out.stride == 0 || k == steps {
                outputs.push(write_snapshot(&e, out, k)?);
            }
        }
        series.push(row);
        if k < steps {
            let target = if k + 1 == steps {
                lambda_end
            } else {
                (k + 1) as f64 * spec.dlambda
            };
            e = e.propagate(target - e.lambda, &cfg)?;
        }
    }
    if let Some(w) = writer {
        outputs.insert(0, w.finish()?);
    }
    let report = RunReport {
        scenario: sc.display_name().to_string(),
        kind: "ensemble",
        termination: "lambda_reached".to_string(),
        steps,
        rejected_steps: 0,
        samples: series.len(),
        max_h_drift: max_drift,
        max_shell_residual: max_shell,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        markers: Some(e.len()),
        entropy_initial: series.first().map(|r| r.entropy),
        entropy_final: series.last().map(|r| r.entropy),
    };
    Ok((
        EnsembleRun {
            series,
            initial,
            last: e,
        },
        report,
    ))
}
