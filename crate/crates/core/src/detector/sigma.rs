//! Potential reconstruction `σ̂ = −∫ω` on a grid from edge integrals.

use super::grid::Grid;
use crate::reduction::RResult;
use rayon::prelude::*;

const GL_NODES: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GL_WEIGHTS: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

/// `∫ ω_a` along every grid edge in direction `a`; entry `[a][flat]` belongs to
/// the edge leaving node `flat` (zero where no such edge exists).
pub type EdgeIntegrals = Vec<Vec<f64>>;

/// Edge integrals by 6-point Gauss–Legendre on each edge.
pub fn edge_integrals_gl(
    grid: &Grid,
    omega: &(dyn Fn(&[f64]) -> RResult<Vec<f64>> + Sync),
) -> RResult<EdgeIntegrals> {
    let shape = grid.shape();
    (0..grid.dim())
        .map(|a| {
            let h = grid.spacing(a);
            (0..grid.len())
                .into_par_iter()
                .map(|flat| {
                    let idx = grid.multi(flat);
                    if idx[a] + 1 >= shape[a] {
                        return Ok(0.0);
                    }
                    let mut x = grid.point(flat);
                    let x0 = x[a];
                    let mut s = 0.0;
                    for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                        x[a] = x0 + 0.5 * h * (1.0 + t);
                        s += w * omega(&x)?[a];
                    }
                    Ok(0.5 * h * s)
                })
                .collect::<RResult<Vec<f64>>>()
        })
        .collect()
}

/// Edge integrals by the trapezoid rule on node values.
pub fn edge_integrals_trapezoid(grid: &Grid, nodes: &[Vec<f64>]) -> EdgeIntegrals {
    let shape = grid.shape();
    let strides = grid.strides();
    (0..grid.dim())
        .map(|a| {
            let h = grid.spacing(a);
            (0..grid.len())
                .map(|flat| {
                    let idx = grid.multi(flat);
                    if idx[a] + 1 >= shape[a] {
                        0.0
                    } else {
                        0.5 * h * (nodes[flat][a] + nodes[flat + strides[a]][a])
                    }
                })
                .collect()
        })
        .collect()
}

/// `σ̂` along axis-ordered staircase paths from the first grid node, moving
/// along `order[0]` first.
pub fn staircase(grid: &Grid, edges: &EdgeIntegrals, order: &[usize]) -> Vec<f64> {
    let strides = grid.strides();
    let mut sigma = vec![0.0; grid.len()];
    for flat in 1..grid.len() {
        let idx = grid.multi(flat);
        let last = order
            .iter()
            .rev()
            .copied()
            .find(|&a| idx[a] > 0)
            .expect("non-base node has a nonzero index");
        let prev = flat - strides[last];
        sigma[flat] = sigma[prev] - edges[last][prev];
    }
    sigma
}

/// Maximum absolute circulation of `ω` around any elementary grid face.
pub fn loop_residual(grid: &Grid, edges: &EdgeIntegrals) -> f64 {
    let shape = grid.shape();
    let strides = grid.strides();
    let d = grid.dim();
    let mut worst: f64 = 0.0;
    for flat in 0..grid.len() {
        let idx = grid.multi(flat);
        for a in 0..d {
            if idx[a] + 1 >= shape[a] {
                continue;
            }
            for b in (a + 1)..d {
                if idx[b] + 1 >= shape[b] {
                    continue;
                }
                let c = edges[a][flat] + edges[b][flat + strides[a]]
                    - edges[a][flat + strides[b]]
                    - edges[b][flat];
                worst = worst.max(c.abs());
            }
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaResult {
    pub sigma: Vec<f64>,
    pub loop_residual: f64,
    /// Largest difference between the forward- and reverse-ordered staircases.
    pub path_discrepancy: f64,
}

pub fn sigma_from_edges(grid: &Grid, edges: &EdgeIntegrals) -> SigmaResult {
    let fwd: Vec<usize> = (0..grid.dim()).collect();
    let rev: Vec<usize> = (0..grid.dim()).rev().collect();
    let s1 = staircase(grid, edges, &fwd);
    let s2 = staircase(grid, edges, &rev);
    let disc = s1.iter().zip(&s2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    SigmaResult {
        sigma: s1,
        loop_residual: loop_residual(grid, edges),
        path_discrepancy: disc,
    }
}

/// Integrate a pointwise 1-form over the grid.
pub fn integrate_sigma(
    grid: &Grid,
    omega: &(dyn Fn(&[f64]) -> RResult<Vec<f64>> + Sync),
) -> RResult<SigmaResult> {
    Ok(sigma_from_edges(grid, &edge_integrals_gl(grid, omega)?))
}
