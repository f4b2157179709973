//! Hamiltonian dynamics of a linear almost-Poisson structure in the frame
//! coordinates `(q̂^ι, p_I)`:
//!
//! `{q̂^ι, p_I} = ρ_I^ι`, `{p_I, p_J} = −C_IJ^K p_K`, `{q̂^ι, q̂^κ} = 0`,
//! with `ρ_a = 0` on vertical indices and `ρ_α = Ŷ_α`.

use crate::linalg::{self, Mat};
use crate::reduction::{RResult, ReducedStructure};

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub qh: Vec<f64>,
    /// Momenta dual to the frame: verticals first, then horizontals.
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(qh: Vec<f64>, p: Vec<f64>) -> Self {
        PhaseState { qh, p }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.qh.iter().chain(&self.p).copied().collect()
    }

    pub fn from_slice(m_hat: usize, x: &[f64]) -> Self {
        PhaseState {
            qh: x[..m_hat].to_vec(),
            p: x[m_hat..].to_vec(),
        }
    }
}

/// `H(q̂, p) = ½ 𝒢^{JK}(q̂) p_J p_K`.
#[derive(Clone, Copy)]
pub struct KineticHamiltonian<'a> {
    pub rs: &'a dyn ReducedStructure,
}

impl<'a> KineticHamiltonian<'a> {
    pub fn new(rs: &'a dyn ReducedStructure) -> Self {
        KineticHamiltonian { rs }
    }

    pub fn energy(&self, x: &PhaseState) -> RResult<f64> {
        energy(self.rs, x)
    }

    pub fn rhs(&self, x: &PhaseState) -> RResult<Vec<f64>> {
        hamilton_rhs(self.rs, x)
    }
}

pub fn energy(rs: &dyn ReducedStructure, x: &PhaseState) -> RResult<f64> {
    let g = rs.fiber_metric_at(&x.qh)?;
    Ok(0.5 * linalg::bilinear(&g, &x.p, &x.p))
}

/// Time derivative of `(q̂, p)` under the kinetic Hamiltonian, flattened as
/// `[q̂̇, ṗ]`.
pub fn hamilton_rhs(rs: &dyn ReducedStructure, x: &PhaseState) -> RResult<Vec<f64>> {
    let na = rs.n_vertical();
    let n = rs.n();
    let mh = x.qh.len();
    let d = rs.dynamics_point(&x.qh)?;
    let v = linalg::mat_vec(&d.fiber_metric, &x.p);
    let dh_dq: Vec<f64> = d
        .fiber_metric_grad
        .iter()
        .map(|dg| 0.5 * linalg::bilinear(dg, &x.p, &x.p))
        .collect();

    let mut out = vec![0.0; mh + n];
    for i in 0..mh {
        out[i] = (0..n - na).map(|a| d.anchors[i][a] * v[na + a]).sum();
    }
    for ii in 0..n {
        let mut s = 0.0;
        if ii >= na {
            for (i, dh) in dh_dq.iter().enumerate() {
                s -= d.anchors[i][ii - na] * dh;
            }
        }
        for k in 0..n {
            let mut cp = 0.0;
            for j in 0..n {
                cp += d.c.get(ii, k, j) * x.p[j];
            }
            s -= cp * v[k];
        }
        out[mh + ii] = s;
    }
    Ok(out)
}

/// Components of the modular vector field of the frame volume
/// `⋀dq̂ ⋀dp`: `ℳ_I = ∂_ι ρ_I^ι + C_IJ^J`.
pub fn modular_components(rs: &dyn ReducedStructure, qh: &[f64]) -> RResult<Vec<f64>> {
    let na = rs.n_vertical();
    let mp = rs.modular_point(qh)?;
    Ok((0..rs.n())
        .map(|i| {
            let div = if i >= na { mp.anchor_div[i - na] } else { 0.0 };
            div + mp.c.trace(i)
        })
        .collect())
}

/// A quadratic test function `c + ⟨l, x⟩ + ½ xᵀ Q x` on the flattened phase
/// space `x = (q̂, p)`.
#[derive(Clone, Debug)]
pub struct QuadraticFunction {
    pub c: f64,
    pub lin: Vec<f64>,
    pub quad: Mat<f64>,
}

impl QuadraticFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.c + linalg::dot(&self.lin, x) + 0.5 * linalg::bilinear(&self.quad, x, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let qx = linalg::mat_vec(&self.quad, x);
        self.lin.iter().zip(&qx).map(|(a, b)| a + b).collect()
    }
}

/// `{f, g}` at `x` from the gradients of `f` and `g` over `(q̂, p)`.
pub fn bracket_from_gradients(
    rs: &dyn ReducedStructure,
    x: &PhaseState,
    df: &[f64],
    dg: &[f64],
) -> RResult<f64> {
    let na = rs.n_vertical();
    let n = rs.n();
    let mh = x.qh.len();
    let a = rs.anchors_at(&x.qh)?;
    let c = rs.structure_functions_at(&x.qh)?;
    let mut s = 0.0;
    for al in 0..n - na {
        let ip = mh + na + al;
        for i in 0..mh {
            s += a[i][al] * (df[i] * dg[ip] - df[ip] * dg[i]);
        }
    }
    // Pairs i < j only, so swapping f and g flips every term's sign exactly.
    for i in 0..n {
        for j in (i + 1)..n {
            let mut cp = 0.0;
            for k in 0..n {
                cp += c.get(i, j, k) * x.p[k];
            }
            s -= cp * (df[mh + i] * dg[mh + j] - df[mh + j] * dg[mh + i]);
        }
    }
    Ok(s)
}

/// `|{f, g} + {g, f}|` at `x`.
pub fn bracket_skewness_check(
    rs: &dyn ReducedStructure,
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    x: &PhaseState,
) -> RResult<f64> {
    let flat = x.to_vec();
    let df = f.gradient(&flat);
    let dg = g.gradient(&flat);
    let fg = bracket_from_gradients(rs, x, &df, &dg)?;
    let gf = bracket_from_gradients(rs, x, &dg, &df)?;
    Ok((fg + gf).abs())
}
