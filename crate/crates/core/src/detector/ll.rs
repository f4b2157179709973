//! Invariant-volume tests for left-invariant systems on a Lie group, stated
//! on the Lie algebra `𝔤` with inertia `𝕀` and constraint subspace `∂`.

use crate::linalg::{self, Mat};
use crate::reduction::StructureTable;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LlError {
    #[error("inertia is not symmetric positive definite")]
    Inertia,
    #[error("constraint basis is degenerate")]
    DegenerateSubspace,
    #[error("⟨β, 𝕀⁻¹β⟩ vanishes")]
    DegeneratePairing,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Structure constants `[e_i, e_j] = c_ij^k e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebra {
    pub c: StructureTable<f64>,
}

impl LieAlgebra {
    pub fn dim(&self) -> usize {
        self.c.n
    }

    pub fn so3() -> Self {
        let mut c = StructureTable::zeros(3);
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c.set(i, j, k, 1.0);
            c.set(j, i, k, -1.0);
        }
        LieAlgebra { c }
    }

    pub fn abelian(n: usize) -> Self {
        LieAlgebra {
            c: StructureTable::zeros(n),
        }
    }

    /// The two-dimensional algebra with `[e₁, e₂] = e₂`.
    pub fn affine_line() -> Self {
        let mut c = StructureTable::zeros(2);
        c.set(0, 1, 1, 1.0);
        c.set(1, 0, 1, -1.0);
        LieAlgebra { c }
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += xy * self.c.get(i, j, k);
                }
            }
        }
        out
    }

    /// `ℳ_𝔤(e_i) = tr ad_{e_i}`.
    pub fn modular_character(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.c.trace(i)).collect()
    }
}

/// `Σ_b ⟨e^b, 𝒫[e_a, e_b]⟩` for each `a`, where `𝒫` is the `𝕀`-orthogonal
/// projection onto `∂ = span{e_a}` and `{e^b}` is the dual basis of `∂`.
pub fn ll_check(alg: &LieAlgebra, inertia: &Mat<f64>, basis: &[Vec<f64>]) -> Result<Vec<f64>, LlError> {
    let n = alg.dim();
    if inertia.len() != n || basis.iter().any(|e| e.len() != n) {
        return Err(LlError::Dimension("inertia and basis must match the algebra".into()));
    }
    linalg::cholesky(inertia).ok_or(LlError::Inertia)?;
    let ie: Vec<Vec<f64>> = basis.iter().map(|e| linalg::mat_vec(inertia, e)).collect();
    let t: Mat<f64> = basis
        .iter()
        .map(|a| ie.iter().map(|b| linalg::dot(a, b)).collect())
        .collect();
    let l = linalg::cholesky(&t).ok_or(LlError::DegenerateSubspace)?;
    Ok((0..basis.len())
        .map(|a| {
            (0..basis.len())
                .map(|b| {
                    let w = alg.bracket(&basis[a], &basis[b]);
                    let rhs: Vec<f64> = ie.iter().map(|c| linalg::dot(c, &w)).collect();
                    linalg::chol_solve(&l, &rhs)[b]
                })
                .sum()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codim1Result {
    pub satisfied: bool,
    pub mu: f64,
    /// `|v − μβ|`.
    pub residual: f64,
    /// `v = ℳ_𝔤 + ad*_η β / ⟨β, η⟩`.
    pub v: Vec<f64>,
}

/// For `∂ = ker β`: tests `ad*_η β / ⟨β, η⟩ + ℳ_𝔤 = μβ` with `η = 𝕀⁻¹β`,
/// where `⟨ad*_η β, ξ⟩ = ⟨β, [η, ξ]⟩`.
pub fn ll_codim1_check(alg: &LieAlgebra, inertia: &Mat<f64>, beta: &[f64], tol: f64) -> Result<Codim1Result, LlError> {
    let n = alg.dim();
    if inertia.len() != n || beta.len() != n {
        return Err(LlError::Dimension("inertia and covector must match the algebra".into()));
    }
    let l = linalg::cholesky(inertia).ok_or(LlError::Inertia)?;
    let eta = linalg::chol_solve(&l, beta);
    let pair = linalg::dot(beta, &eta);
    let bb = linalg::dot(beta, beta);
    if pair.abs() <= 1e-14 * bb.max(f64::MIN_POSITIVE) {
        return Err(LlError::DegeneratePairing);
    }
    let m = alg.modular_character();
    let v: Vec<f64> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            m[i] + linalg::dot(beta, &alg.bracket(&eta, &e)) / pair
        })
        .collect();
    let mu = linalg::dot(&v, beta) / bb;
    let residual = v
        .iter()
        .zip(beta)
        .map(|(vi, bi)| (vi - mu * bi).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(Codim1Result {
        satisfied: residual <= tol,
        mu,
        residual,
        v,
    })
}

/// A basis of `ker β`, eliminating the largest component of `β`.
pub fn kernel_basis(beta: &[f64]) -> Vec<Vec<f64>> {
    let n = beta.len();
    let j = (0..n)
        .max_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()))
        .unwrap_or(0);
    (0..n)
        .filter(|&i| i != j)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e[j] = -beta[i] / beta[j];
            e
        })
        .collect()
}
