//! Invariant-volume detection on a reduced linear almost-Poisson structure.
//!
//! The pipeline runs over a grid on the shape chart: vertical traces
//! (condition one), the affine family of 1-forms `ω` with `ω(Ŷ_α) = b_α`,
//! closedness of a member of that family, and reconstruction of the density
//! exponent `σ̂` with `ω = −dσ̂`.

pub mod grid;
pub mod liouville;
pub mod ll;
pub mod omega;
pub mod sigma;

pub use grid::Grid;
pub use liouville::{
    liouville_residual, liouville_residual_vector, sample_states, verify_measure, DetectedMeasure,
    LiouvilleResidual, MeasureCandidate, VerifySummary, Volume,
};

use crate::linalg::Mat;
use crate::reduction::{RResult, ReducedStructure, ReductionError};
use omega::{anchor_rank, base_values, best_pick, contact_point, exterior, first_order, omega_beta};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DetectError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("anchor rank changes across the grid ({min} to {max}); the 1-form family is rank-degenerate")]
    RankDegenerate { min: usize, max: usize },
    #[error("anchor columns are linearly dependent; the base values do not determine a 1-form family")]
    DependentAnchors,
    #[error("corank {0} is not supported (only 0 and 1 are)")]
    UnsupportedCorank(usize),
    #[error("density is not positive at {point:?}")]
    NonPositiveDensity { point: Vec<f64> },
}

pub type DResult<T> = Result<T, DetectError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub accept: f64,
    pub reject: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            accept: 1e-6,
            reject: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    MeasureExists,
    NoMeasure,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::MeasureExists => 0,
            Verdict::NoMeasure => 2,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::MeasureExists => "measure-exists",
            Verdict::NoMeasure => "no-measure",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Per-point residuals `C_aJ^J` over the grid.
pub fn condition_one(rs: &dyn ReducedStructure, grid: &Grid) -> RResult<Vec<Vec<f64>>> {
    let na = rs.n_vertical();
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let c = rs.structure_functions_at(&grid.point(k))?;
            Ok((0..na).map(|a| c.trace(a)).collect())
        })
        .collect()
}

fn max_abs(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
}

/// The affine family of 1-forms determined by `ω(Ŷ_α) = b_α`.
#[derive(Clone, Debug)]
pub struct OmegaFamily {
    pub grid: Grid,
    pub base: Vec<Vec<f64>>,
    pub anchors: Vec<Mat<f64>>,
    /// Per point, `k` annihilator covectors (unit length).
    pub annihilator: Vec<Vec<Vec<f64>>>,
    pub corank: usize,
    /// Axis used to build a smooth annihilator when the corank is one.
    pub pick: Option<usize>,
}

impl OmegaFamily {
    /// The minimum-norm member at grid node `k`.
    pub fn min_norm_member(&self, k: usize) -> Option<Vec<f64>> {
        omega_beta(&self.anchors[k], &self.base[k], None).map(|(w, _)| w)
    }
}

pub fn omega_family(rs: &dyn ReducedStructure, grid: &Grid) -> DResult<OmegaFamily> {
    let na = rs.n_vertical();
    let mh = grid.dim();
    let pts: Vec<(Vec<f64>, Mat<f64>, usize)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let mp = rs.modular_point(&grid.point(k))?;
            let r = anchor_rank(&mp.anchors);
            Ok((base_values(&mp, na), mp.anchors, r))
        })
        .collect::<RResult<_>>()?;
    let rmin = pts.iter().map(|p| p.2).min().unwrap_or(0);
    let rmax = pts.iter().map(|p| p.2).max().unwrap_or(0);
    if rmin != rmax {
        return Err(DetectError::RankDegenerate { min: rmin, max: rmax });
    }
    if rmax < rs.n_horizontal() {
        return Err(DetectError::DependentAnchors);
    }
    let corank = mh - rmax;
    let center = rs.anchors_at(&grid.center())?;
    let pick = if corank == 1 { best_pick(&center) } else { None };
    let mut base = Vec::with_capacity(pts.len());
    let mut anchors = Vec::with_capacity(pts.len());
    let mut annihilator = Vec::with_capacity(pts.len());
    for (b, a, _) in pts {
        let ann = match pick {
            Some(j) => {
                let (_, beta) = omega_beta(&a, &b, Some(j)).ok_or(DetectError::DependentAnchors)?;
                vec![beta.expect("pick given")]
            }
            None => annihilator_svd(&a, corank),
        };
        annihilator.push(ann);
        base.push(b);
        anchors.push(a);
    }
    Ok(OmegaFamily {
        grid: grid.clone(),
        base,
        anchors,
        annihilator,
        corank,
        pick,
    })
}

/// Left singular vectors of the anchor matrix beyond its rank.
fn annihilator_svd(a: &Mat<f64>, k: usize) -> Vec<Vec<f64>> {
    if k == 0 {
        return Vec::new();
    }
    let m = a.len();
    let c = a.first().map_or(0, Vec::len);
    // Pad to a square matrix so the full set of left singular vectors exists.
    let full = nalgebra::DMatrix::from_fn(m, m, |i, j| if j < c { a[i][j] } else { 0.0 });
    let svd = full.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    idx.iter()
        .take(k)
        .map(|&j| (0..m).map(|i| u[(i, j)]).collect())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosednessMethod {
    /// Corank zero: `dω` of the unique member.
    Pointwise,
    /// Corank one with `β∧dβ ≠ 0`: `λ` eliminated pointwise.
    ContactElimination,
    /// Corank one otherwise: least squares over grid values of `λ`.
    LambdaSearch,
}

#[derive(Clone, Debug)]
pub struct Closedness {
    pub residual: f64,
    pub worst_point: Vec<f64>,
    pub method: ClosednessMethod,
    /// Largest `|dω|` component at each node for the chosen member.
    pub pointwise: Vec<f64>,
    /// Grid values of `λ` (corank one).
    pub lambda: Option<Vec<f64>>,
    /// Residual of the least-squares `λ` search (corank one).
    pub lambda_search_residual: Option<f64>,
    /// The member `ω₀ + λβ` at each node.
    pub omega_nodes: Vec<Vec<f64>>,
}

fn max_entry(m: &Mat<f64>) -> f64 {
    m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
}

fn worst(grid: &Grid, values: &[f64]) -> (f64, Vec<f64>) {
    let (k, v) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    (v, grid.point(k))
}

/// Data needed by the `λ` search at one node.
struct LambdaNode {
    beta: Vec<f64>,
    dbeta: Mat<f64>,
    domega0: Mat<f64>,
}

pub fn closedness_residual(rs: &dyn ReducedStructure, fam: &OmegaFamily) -> DResult<Closedness> {
    let grid = &fam.grid;
    match fam.corank {
        0 => {
            let data: Vec<(Vec<f64>, f64)> = (0..grid.len())
                .into_par_iter()
                .map(|k| {
                    let fo = first_order(rs, &grid.point(k), None)?;
                    Ok((fo.omega0, max_entry(&exterior(&fo.jac_omega0))))
                })
                .collect::<RResult<_>>()?;
            let pointwise: Vec<f64> = data.iter().map(|d| d.1).collect();
            let (residual, worst_point) = worst(grid, &pointwise);
            Ok(Closedness {
                residual,
                worst_point,
                method: ClosednessMethod::Pointwise,
                pointwise,
                lambda: None,
                lambda_search_residual: None,
                omega_nodes: data.into_iter().map(|d| d.0).collect(),
            })
        }
        1 => {
            let pick = fam.pick.ok_or(DetectError::DependentAnchors)?;
            let fos: Vec<omega::FirstOrder> = (0..grid.len())
                .into_par_iter()
                .map(|k| first_order(rs, &grid.point(k), Some(pick)))
                .collect::<RResult<_>>()?;
            let nodes: Vec<LambdaNode> = fos
                .iter()
                .map(|fo| LambdaNode {
                    beta: fo.beta.clone().expect("pick given"),
                    dbeta: exterior(fo.jac_beta.as_ref().expect("pick given")),
                    domega0: exterior(&fo.jac_omega0),
                })
                .collect();
            let contact_min = nodes
                .iter()
                .map(|n| {
                    let w: f64 = omega::wedge_1_2(&n.beta, &n.dbeta).iter().map(|x| x * x).sum::<f64>().sqrt();
                    w / (1.0 + max_entry(&n.dbeta))
                })
                .fold(f64::INFINITY, f64::min);
            let (lam_grid, lam_res) = lambda_search(grid, &nodes);
            if contact_min > 1e-6 {
                let cps: Vec<omega::ContactPoint> = (0..grid.len())
                    .into_par_iter()
                    .map(|k| contact_point(rs, &grid.point(k), pick))
                    .collect::<RResult<_>>()?;
                let pointwise: Vec<f64> = cps.iter().map(|c| max_entry(&c.obstruction)).collect();
                let (residual, worst_point) = worst(grid, &pointwise);
                let omega_nodes = cps
                    .iter()
                    .map(|c| c.omega0.iter().zip(&c.beta).map(|(w, b)| w + c.lambda * b).collect())
                    .collect();
                Ok(Closedness {
                    residual,
                    worst_point,
                    method: ClosednessMethod::ContactElimination,
                    pointwise,
                    lambda: Some(cps.iter().map(|c| c.lambda).collect()),
                    lambda_search_residual: Some(lam_res),
                    omega_nodes,
                })
            } else {
                let pointwise = lambda_residuals(grid, &nodes, &lam_grid);
                let (residual, worst_point) = worst(grid, &pointwise);
                let omega_nodes = fos
                    .iter()
                    .zip(&lam_grid)
                    .map(|(fo, l)| {
                        let b = fo.beta.as_ref().expect("pick given");
                        fo.omega0.iter().zip(b).map(|(w, bb)| w + l * bb).collect()
                    })
                    .collect();
                Ok(Closedness {
                    residual,
                    worst_point,
                    method: ClosednessMethod::LambdaSearch,
                    pointwise,
                    lambda: Some(lam_grid),
                    lambda_search_residual: Some(lam_res),
                    omega_nodes,
                })
            }
        }
        k => Err(DetectError::UnsupportedCorank(k)),
    }
}

/// Sparse row-major matrix for the `λ` least-squares problem.
struct Sparse {
    rows: Vec<Vec<(usize, f64)>>,
    ncols: usize,
}

impl Sparse {
    fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect()
    }
    fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (r, &yi) in self.rows.iter().zip(y) {
            for &(j, v) in r {
                out[j] += v * yi;
            }
        }
        out
    }
}

/// Finite-difference stencil for `∂_a` at node `idx`: second-order central in
/// the interior and second-order one-sided at the boundary.
fn stencil(grid: &Grid, idx: &[usize], a: usize) -> Vec<(usize, f64)> {
    let n = grid.axes[a].len();
    let h = grid.spacing(a);
    let s = grid.strides()[a];
    let flat = grid.flat(idx);
    let i = idx[a];
    if n < 3 {
        return vec![(flat - i * s, -1.0 / h), (flat - i * s + s, 1.0 / h)];
    }
    if i == 0 {
        vec![(flat, -1.5 / h), (flat + s, 2.0 / h), (flat + 2 * s, -0.5 / h)]
    } else if i == n - 1 {
        vec![(flat, 1.5 / h), (flat - s, -2.0 / h), (flat - 2 * s, 0.5 / h)]
    } else {
        vec![(flat + s, 0.5 / h), (flat - s, -0.5 / h)]
    }
}

/// Rows `dλ∧β + λ dβ` and right-hand side `−dω₀` for every node and axis pair.
fn lambda_system(grid: &Grid, nodes: &[LambdaNode]) -> (Sparse, Vec<f64>) {
    let m = grid.dim();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (k, node) in nodes.iter().enumerate() {
        let idx = grid.multi(k);
        let st: Vec<Vec<(usize, f64)>> = (0..m).map(|a| stencil(grid, &idx, a)).collect();
        for i in 0..m {
            for j in (i + 1)..m {
                let mut row: Vec<(usize, f64)> = Vec::new();
                for &(c, v) in &st[i] {
                    row.push((c, v * node.beta[j]));
                }
                for &(c, v) in &st[j] {
                    row.push((c, -v * node.beta[i]));
                }
                row.push((k, node.dbeta[i][j]));
                rows.push(row);
                rhs.push(-node.domega0[i][j]);
            }
        }
    }
    (
        Sparse {
            rows,
            ncols: nodes.len(),
        },
        rhs,
    )
}

/// Conjugate gradients on the normal equations.
fn cgls(a: &Sparse, b: &[f64], max_iter: usize, tol: f64) -> Vec<f64> {
    let mut x = vec![0.0; a.ncols];
    let mut r = b.to_vec();
    let mut s = a.mul_t(&r);
    let mut p = s.clone();
    let mut gamma: f64 = s.iter().map(|v| v * v).sum();
    let gamma0 = gamma;
    for _ in 0..max_iter {
        if gamma <= tol * tol * gamma0 || gamma == 0.0 {
            break;
        }
        let q = a.mul(&p);
        let qq: f64 = q.iter().map(|v| v * v).sum();
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        s = a.mul_t(&r);
        let g_new: f64 = s.iter().map(|v| v * v).sum();
        let beta = g_new / gamma;
        gamma = g_new;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    x
}

fn lambda_search(grid: &Grid, nodes: &[LambdaNode]) -> (Vec<f64>, f64) {
    let (a, b) = lambda_system(grid, nodes);
    let lam = cgls(&a, &b, 4 * grid.len().max(100), 1e-12);
    let res = lambda_residuals(grid, nodes, &lam).into_iter().fold(0.0, f64::max);
    (lam, res)
}

fn lambda_residuals(grid: &Grid, nodes: &[LambdaNode], lam: &[f64]) -> Vec<f64> {
    let (a, b) = lambda_system(grid, nodes);
    let ax = a.mul(lam);
    let per = grid.dim() * (grid.dim() - 1) / 2;
    (0..nodes.len())
        .map(|k| {
            (0..per)
                .map(|r| (ax[k * per + r] - b[k * per + r]).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Machine-readable result of [`detect`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub system: Option<String>,
    pub thresholds: Thresholds,
    pub grid: Grid,
    pub n_vertical: usize,
    pub n_horizontal: usize,
    pub condition_one_residual: f64,
    pub corank: Option<usize>,
    pub annihilator_axis: Option<usize>,
    pub closedness_method: Option<ClosednessMethod>,
    pub closedness_residual: Option<f64>,
    pub closedness_worst_point: Option<Vec<f64>>,
    pub lambda_search_residual: Option<f64>,
    pub loop_residual: Option<f64>,
    pub path_discrepancy: Option<f64>,
    /// `ω(Ŷ_α)` at each node, row-major.
    pub omega_base: Vec<Vec<f64>>,
    /// Grid values of `λ` for corank-one families.
    pub lambda: Option<Vec<f64>>,
    /// `σ̂` at each node, row-major, `σ̂(first node) = 0`.
    pub sigma: Option<Vec<f64>>,
    pub verdict: Verdict,
    pub reason: Option<String>,
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Runs the full pipeline on `grid`.
pub fn detect(rs: &dyn ReducedStructure, grid: &Grid, thresholds: Thresholds) -> DResult<DetectionReport> {
    let cond = condition_one(rs, grid)?;
    let c1 = max_abs(&cond);
    let mut report = DetectionReport {
        system: None,
        thresholds,
        grid: grid.clone(),
        n_vertical: rs.n_vertical(),
        n_horizontal: rs.n_horizontal(),
        condition_one_residual: c1,
        corank: None,
        annihilator_axis: None,
        closedness_method: None,
        closedness_residual: None,
        closedness_worst_point: None,
        lambda_search_residual: None,
        loop_residual: None,
        path_discrepancy: None,
        omega_base: Vec::new(),
        lambda: None,
        sigma: None,
        verdict: Verdict::Inconclusive,
        reason: None,
    };
    let fam = match omega_family(rs, grid) {
        Ok(f) => f,
        Err(e @ (DetectError::RankDegenerate { .. } | DetectError::DependentAnchors)) => {
            report.verdict = if c1 >= thresholds.reject {
                Verdict::NoMeasure
            } else {
                Verdict::Inconclusive
            };
            report.reason = Some(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.corank = Some(fam.corank);
    report.annihilator_axis = fam.pick;
    report.omega_base = fam.base.clone();
    let closed = match closedness_residual(rs, &fam) {
        Ok(c) => c,
        Err(e @ DetectError::UnsupportedCorank(_)) => {
            report.verdict = if c1 >= thresholds.reject {
                Verdict::NoMeasure
            } else {
                Verdict::Inconclusive
            };
            report.reason = Some(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.closedness_method = Some(closed.method);
    report.closedness_residual = Some(closed.residual);
    report.closedness_worst_point = Some(closed.worst_point.clone());
    report.lambda_search_residual = closed.lambda_search_residual;
    if closed.method == ClosednessMethod::LambdaSearch {
        report.lambda = closed.lambda.clone();
    }

    if c1 <= thresholds.accept && closed.residual <= thresholds.accept {
        let s = match closed.method {
            ClosednessMethod::Pointwise => {
                let na = rs.n_vertical();
                sigma::integrate_sigma(grid, &|x: &[f64]| {
                    let mp = rs.modular_point(x)?;
                    let b = base_values(&mp, na);
                    omega_beta(&mp.anchors, &b, None)
                        .map(|(w, _)| w)
                        .ok_or_else(|| ReductionError::Invalid(format!("anchor columns dependent at {x:?}")))
                })?
            }
            ClosednessMethod::ContactElimination => {
                let pick = fam.pick.expect("corank one has a pick");
                sigma::integrate_sigma(grid, &|x: &[f64]| omega::omega_star(rs, x, pick))?
            }
            ClosednessMethod::LambdaSearch => {
                sigma::sigma_from_edges(grid, &sigma::edge_integrals_trapezoid(grid, &closed.omega_nodes))
            }
        };
        report.loop_residual = Some(s.loop_residual);
        report.path_discrepancy = Some(s.path_discrepancy);
        report.sigma = Some(s.sigma);
    }

    let loop_ok = report.loop_residual.is_some_and(|l| l <= thresholds.accept);
    report.verdict = if c1 <= thresholds.accept && closed.residual <= thresholds.accept && loop_ok {
        Verdict::MeasureExists
    } else if c1 >= thresholds.reject || closed.residual >= thresholds.reject {
        Verdict::NoMeasure
    } else {
        Verdict::Inconclusive
    };
    if report.verdict != Verdict::MeasureExists {
        let mut why = Vec::new();
        if c1 > thresholds.accept {
            why.push(format!("condition-one residual {c1:.3e}"));
        }
        if closed.residual > thresholds.accept {
            why.push(format!("closedness residual {:.3e}", closed.residual));
        }
        if let Some(l) = report.loop_residual.filter(|&l| l > thresholds.accept) {
            why.push(format!("loop residual {l:.3e}"));
        }
        report.reason = Some(why.join("; "));
    }
    Ok(report)
}
