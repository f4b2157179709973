//! Liouville-equation checks `ḟ + f·div X = 0` for candidate densities.

use super::grid::Grid;
use super::omega::{base_values, omega_beta, omega_star};
use super::{ClosednessMethod, DResult, DetectError, DetectionReport};
use crate::expr::{scalar, Dual, Expr};
use crate::poisson::{hamilton_rhs, PhaseState};
use crate::reduction::{fd_step, RResult, ReducedStructure, ReductionError};
use crate::linalg;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use rand_chacha::ChaCha8Rng;

/// `σ̂` recovered by the detector, with what is needed to evaluate `ω` exactly.
#[derive(Clone, Debug)]
pub struct DetectedMeasure {
    pub grid: Grid,
    pub sigma: Vec<f64>,
    pub corank: usize,
    pub pick: Option<usize>,
    pub method: ClosednessMethod,
    pub lambda: Option<Vec<f64>>,
}

impl DetectedMeasure {
    /// `None` unless the report carries a reconstructed `σ̂`.
    pub fn from_report(r: &DetectionReport) -> Option<Self> {
        Some(DetectedMeasure {
            grid: r.grid.clone(),
            sigma: r.sigma.clone()?,
            corank: r.corank?,
            pick: r.annihilator_axis,
            method: r.closedness_method?,
            lambda: r.lambda.clone(),
        })
    }

    /// The closed member `ω = −dσ̂` at `q̂`.
    pub fn omega(&self, rs: &dyn ReducedStructure, qh: &[f64]) -> RResult<Vec<f64>> {
        let dependent = || ReductionError::Invalid(format!("anchor columns dependent at {qh:?}"));
        match (self.method, self.pick) {
            (ClosednessMethod::ContactElimination, Some(j)) => omega_star(rs, qh, j),
            (ClosednessMethod::LambdaSearch, Some(j)) => {
                let mp = rs.modular_point(qh)?;
                let b = base_values(&mp, rs.n_vertical());
                let (w, beta) = omega_beta(&mp.anchors, &b, Some(j)).ok_or_else(dependent)?;
                let lam = self
                    .lambda
                    .as_ref()
                    .map_or(0.0, |l| self.grid.interpolate(l, qh));
                let beta = beta.expect("pick given");
                Ok(w.iter().zip(&beta).map(|(a, b)| a + lam * b).collect())
            }
            _ => {
                let mp = rs.modular_point(qh)?;
                let b = base_values(&mp, rs.n_vertical());
                omega_beta(&mp.anchors, &b, None).map(|(w, _)| w).ok_or_else(dependent)
            }
        }
    }
}

/// Which fiber coordinates a density expression refers to. A density `f_v`
/// with respect to frame velocities `v = G p` equals `f_v / det T` with
/// respect to the momenta, `T = G⁻¹` being the frame Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Volume {
    Momentum,
    Velocity,
}

#[derive(Clone, Debug)]
pub enum MeasureCandidate {
    /// `f` as an expression over the shape coordinates followed by the momenta.
    Expression { expr: Expr, params: Vec<f64>, volume: Volume },
    Detected(DetectedMeasure),
}

impl MeasureCandidate {
    /// `f(x)` and `∇ ln f` over the flattened phase coordinates `(q̂, p)`.
    pub fn log_gradient(&self, rs: &dyn ReducedStructure, x: &PhaseState) -> DResult<(f64, Vec<f64>)> {
        let flat = x.to_vec();
        match self {
            MeasureCandidate::Expression { expr, params, volume } => {
                let (f, mut g) = expression_log_gradient(expr, params, &flat)?;
                if *volume == Volume::Momentum {
                    return Ok((f, g));
                }
                // ln f_p = ln f_v − ln det T, and ∂ ln det T = −tr(T ∂G).
                let dp = rs.dynamics_point(&x.qh)?;
                let l = linalg::cholesky(&dp.fiber_metric).ok_or_else(|| {
                    ReductionError::Invalid(format!("fiber metric not positive definite at {:?}", x.qh))
                })?;
                let t = linalg::chol_inverse(&l);
                let det_t = 1.0 / linalg::chol_det(&l);
                for (i, dg) in dp.fiber_metric_grad.iter().enumerate() {
                    let mut tr = 0.0;
                    for (a, row) in t.iter().enumerate() {
                        for (b, tab) in row.iter().enumerate() {
                            tr += tab * dg[b][a];
                        }
                    }
                    g[i] += tr;
                }
                Ok((f / det_t, g))
            }
            MeasureCandidate::Detected(d) => {
                let f = d.grid.interpolate(&d.sigma, &x.qh).exp();
                let w = d.omega(rs, &x.qh)?;
                let mut g = vec![0.0; flat.len()];
                for (gi, wi) in g.iter_mut().zip(&w) {
                    *gi = -wi;
                }
                Ok((f, g))
            }
        }
    }
}

fn expression_log_gradient(expr: &Expr, params: &[f64], x: &[f64]) -> DResult<(f64, Vec<f64>)> {
    let f = expr.eval(x, params).map_err(ReductionError::from)?;
    if !(f > 0.0) {
        return Err(DetectError::NonPositiveDensity { point: x.to_vec() });
    }
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let d: Dual<f64> = expr
            .eval_s(&scalar::seed_axis(x, i), params)
            .map_err(ReductionError::from)?;
        g.push(d.d / f);
    }
    Ok((f, g))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiouvilleResidual {
    pub density: f64,
    /// `ḟ + f·div X`.
    pub residual: f64,
    /// `residual / f`.
    pub relative: f64,
}

/// Divergence of a vector field on `ℝ^d` by central differences.
fn divergence<E>(rhs: &dyn Fn(&[f64]) -> Result<Vec<f64>, E>, x: &[f64]) -> Result<f64, E> {
    let mut div = 0.0;
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        div += (rhs(&xp)?[i] - rhs(&xm)?[i]) / (2.0 * h);
    }
    Ok(div)
}

pub fn liouville_residual(
    rs: &dyn ReducedStructure,
    cand: &MeasureCandidate,
    x: &PhaseState,
) -> DResult<LiouvilleResidual> {
    let mh = x.qh.len();
    let (f, glog) = cand.log_gradient(rs, x)?;
    let field = |y: &[f64]| hamilton_rhs(rs, &PhaseState::from_slice(mh, y));
    let xdot = field(&x.to_vec())?;
    let div = divergence(&field, &x.to_vec())?;
    let rel = crate::linalg::dot(&glog, &xdot) + div;
    Ok(LiouvilleResidual {
        density: f,
        residual: f * rel,
        relative: rel,
    })
}

/// Liouville residual of an expression density for an arbitrary vector field.
pub fn liouville_residual_vector(
    rhs: &dyn Fn(&[f64]) -> Vec<f64>,
    density: &Expr,
    params: &[f64],
    x: &[f64],
) -> DResult<LiouvilleResidual> {
    let (f, glog) = expression_log_gradient(density, params, x)?;
    let xdot = rhs(x);
    let div = divergence::<DetectError>(&|y| Ok(rhs(y)), x)?;
    let rel = crate::linalg::dot(&glog, &xdot) + div;
    Ok(LiouvilleResidual {
        density: f,
        residual: f * rel,
        relative: rel,
    })
}

/// Seeded random states: `q̂` uniform in the sampling box, `p` uniform in `[−1, 1]`.
pub fn sample_states(rs: &dyn ReducedStructure, n: usize, seed: u64) -> Vec<PhaseState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bx = rs.shape_chart().sample_box();
    (0..n)
        .map(|_| {
            let qh = bx.iter().map(|&(a, b)| rng.gen_range(a..=b)).collect();
            let p = (0..rs.n()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            PhaseState { qh, p }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifySummary {
    pub samples: usize,
    /// `max |ḟ + f div X| / |f|`.
    pub max_relative: f64,
    pub worst_state: Vec<f64>,
}

pub fn verify_measure(
    rs: &dyn ReducedStructure,
    cand: &MeasureCandidate,
    samples: usize,
    seed: u64,
) -> DResult<VerifySummary> {
    let mut worst = 0.0;
    let mut worst_state = Vec::new();
    for x in sample_states(rs, samples, seed) {
        let r = liouville_residual(rs, cand, &x)?;
        if r.relative.abs() >= worst {
            worst = r.relative.abs();
            worst_state = x.to_vec();
        }
    }
    Ok(VerifySummary {
        samples,
        max_relative: worst,
        worst_state,
    })
}
