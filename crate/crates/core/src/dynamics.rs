//! Fixed-step RK4 integration and ensemble volume-drift diagnostics.

use crate::linalg;
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DynamicsError {
    #[error("non-finite state at t = {time}")]
    BlowUp { time: f64, last_good: Vec<f64> },
    #[error("state left the admissible region at t = {time} after 20 step halvings")]
    LeftDomain { time: f64, last_good: Vec<f64> },
    #[error("vector field failed at t = {time}: {message}")]
    Rhs { time: f64, message: String },
    #[error("invalid integration request: {0}")]
    Invalid(String),
}

impl DynamicsError {
    /// Last time at which the state was valid.
    pub fn time(&self) -> Option<f64> {
        match self {
            DynamicsError::BlowUp { time, .. }
            | DynamicsError::LeftDomain { time, .. }
            | DynamicsError::Rhs { time, .. } => Some(*time),
            DynamicsError::Invalid(_) => None,
        }
    }
}

pub type Rhs<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>, String> + Sync + 'a;

pub fn rk4_step(rhs: &Rhs, x: &[f64], h: f64) -> Result<Vec<f64>, String> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    let k1 = rhs(x)?;
    let k2 = rhs(&axpy(x, 0.5 * h, &k1))?;
    let k3 = rhs(&axpy(x, 0.5 * h, &k2))?;
    let k4 = rhs(&axpy(x, h, &k3))?;
    Ok((0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub diagnostics: Vec<Vec<f64>>,
    pub state_names: Vec<String>,
    pub diagnostic_names: Vec<String>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    /// CSV with header `t, state components, diagnostics`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = std::iter::once("t")
            .chain(self.state_names.iter().map(String::as_str))
            .chain(self.diagnostic_names.iter().map(String::as_str))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for ((t, x), d) in self.times.iter().zip(&self.states).zip(&self.diagnostics) {
            let _ = write!(out, "{t:?}");
            for v in x.iter().chain(d) {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }
}

/// Options for [`rk4_integrate`].
pub struct Integration<'a> {
    pub h: f64,
    pub t_end: f64,
    /// States failing this test trigger step halving.
    pub admissible: &'a (dyn Fn(&[f64]) -> bool + Sync),
    pub diagnostics: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    /// Record every `record_every`-th nominal step (and always the last).
    pub record_every: usize,
    pub state_names: Vec<String>,
    pub diagnostic_names: Vec<String>,
}

impl<'a> Integration<'a> {
    pub fn plain(h: f64, t_end: f64, dim: usize) -> Self {
        Integration {
            h,
            t_end,
            admissible: &|_| true,
            diagnostics: &|_| Vec::new(),
            record_every: 1,
            state_names: (0..dim).map(|i| format!("x{i}")).collect(),
            diagnostic_names: Vec::new(),
        }
    }
}

/// One nominal step. A rejected substep (state outside the admissible
/// region, or a field that cannot be evaluated) is retried at half the size;
/// accepted progress is kept, and the step fails after 20 halvings.
fn guarded_step(rhs: &Rhs, x: &[f64], h: f64, t: f64, ok: &(dyn Fn(&[f64]) -> bool + Sync)) -> Result<Vec<f64>, DynamicsError> {
    const LEVELS: u32 = 20;
    // Progress is counted in units of h / 2^20 so substep sizes stay exact.
    let total: u64 = 1 << LEVELS;
    let mut done: u64 = 0;
    let mut level = 0u32;
    let mut y = x.to_vec();
    let mut last_err = None;
    while done < total {
        let ticks = (1u64 << (LEVELS - level)).min(total - done);
        let hs = h * ticks as f64 / total as f64;
        let now = t + h * done as f64 / total as f64;
        let accepted = match rk4_step(rhs, &y, hs) {
            Ok(z) if z.iter().any(|v| !v.is_finite()) => {
                return Err(DynamicsError::BlowUp { time: now, last_good: y });
            }
            Ok(z) if ok(&z) => Some(z),
            Ok(_) => None,
            Err(m) => {
                last_err = Some(m);
                None
            }
        };
        match accepted {
            Some(z) => {
                y = z;
                done += ticks;
            }
            None if level < LEVELS => level += 1,
            None => {
                return Err(match last_err {
                    Some(message) => DynamicsError::Rhs { time: now, message },
                    None => DynamicsError::LeftDomain { time: now, last_good: y },
                })
            }
        }
    }
    Ok(y)
}

pub fn rk4_integrate(rhs: &Rhs, x0: &[f64], opts: &Integration) -> Result<Trajectory, DynamicsError> {
    if !(opts.h > 0.0) || !(opts.t_end > 0.0) || !opts.h.is_finite() || !opts.t_end.is_finite() {
        return Err(DynamicsError::Invalid("h and T must be positive and finite".into()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::Invalid("initial state is not finite".into()));
    }
    let steps = (opts.t_end / opts.h).round().max(1.0) as usize;
    let h = opts.t_end / steps as f64;
    let every = opts.record_every.max(1);
    let mut traj = Trajectory {
        h,
        times: vec![0.0],
        states: vec![x0.to_vec()],
        diagnostics: vec![(opts.diagnostics)(x0)],
        state_names: opts.state_names.clone(),
        diagnostic_names: opts.diagnostic_names.clone(),
    };
    let mut x = x0.to_vec();
    for s in 1..=steps {
        let t_prev = (s - 1) as f64 * h;
        x = guarded_step(rhs, &x, h, t_prev, opts.admissible)?;
        if s % every == 0 || s == steps {
            traj.times.push(s as f64 * h);
            traj.diagnostics.push((opts.diagnostics)(&x));
            traj.states.push(x.clone());
        }
    }
    Ok(traj)
}

/// Final state after `T` with plain fixed steps.
pub fn flow(rhs: &Rhs, x0: &[f64], h: f64, t_end: f64) -> Result<Vec<f64>, DynamicsError> {
    let steps = (t_end / h).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut x = x0.to_vec();
    for s in 0..steps {
        x = rk4_step(rhs, &x, h).map_err(|message| DynamicsError::Rhs {
            time: s as f64 * h,
            message,
        })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::BlowUp {
                time: s as f64 * h,
                last_good: x0.to_vec(),
            });
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftSummary {
    /// `max |det DΦ_T − f(x₀)/f(x_T)| / (f(x₀)/f(x_T))` over the cloud.
    pub max_relative: f64,
    pub mean_relative: f64,
}

/// Compares the phase-volume growth of the flow (central-difference
/// variational Jacobian, edge `1e-4·max(1,|x|)`) with the density ratio.
pub fn ensemble_volume_drift(
    rhs: &Rhs,
    log_density: &(dyn Fn(&[f64]) -> f64 + Sync),
    cloud: &[Vec<f64>],
    h: f64,
    t_end: f64,
) -> Result<DriftSummary, DynamicsError> {
    if cloud.is_empty() {
        return Err(DynamicsError::Invalid("empty ensemble".into()));
    }
    let rel: Vec<f64> = cloud
        .par_iter()
        .map(|x0| {
            let d = x0.len();
            let xt = flow(rhs, x0, h, t_end)?;
            let mut jac = linalg::zeros::<f64>(d, d);
            for i in 0..d {
                let e = 1e-4 * x0[i].abs().max(1.0);
                let mut xp = x0.clone();
                let mut xm = x0.clone();
                xp[i] += e;
                xm[i] -= e;
                let yp = flow(rhs, &xp, h, t_end)?;
                let ym = flow(rhs, &xm, h, t_end)?;
                for r in 0..d {
                    jac[r][i] = (yp[r] - ym[r]) / (2.0 * e);
                }
            }
            let det = linalg::det(&jac);
            if det == 0.0 || !det.is_finite() {
                return Err(DynamicsError::Invalid("degenerate variational simplex".into()));
            }
            let want = (log_density(x0) - log_density(&xt)).exp();
            Ok(((det - want) / want).abs())
        })
        .collect::<Result<_, _>>()?;
    Ok(DriftSummary {
        max_relative: rel.iter().copied().fold(0.0, f64::max),
        mean_relative: rel.iter().sum::<f64>() / rel.len() as f64,
    })
}
