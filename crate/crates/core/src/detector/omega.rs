//! Pointwise evaluation of the 1-form family: the minimum-norm member `ω₀`,
//! the annihilator direction `β` when the corank is one, and their exterior
//! derivatives.

use crate::expr::{Dual, Scalar};
use crate::linalg::{self, Mat};
use crate::reduction::{ModularPoint, RResult, ReducedStructure, ReductionError};
use nalgebra::DMatrix;

/// `b_α = ∂_ι Ŷ_α^ι + C_αJ^J`.
pub fn base_values<S: Scalar>(mp: &ModularPoint<S>, na: usize) -> Vec<S> {
    mp.anchor_div
        .iter()
        .enumerate()
        .map(|(a, &d)| d + mp.c.trace(na + a))
        .collect()
}

/// `C_aJ^J` for each vertical index.
pub fn vertical_traces<S: Scalar>(mp: &ModularPoint<S>, na: usize) -> Vec<S> {
    (0..na).map(|a| mp.c.trace(a)).collect()
}

/// Numerical rank of the anchor matrix, threshold `1e-8·σ_max`.
pub fn anchor_rank(anchors: &Mat<f64>) -> usize {
    let r = anchors.len();
    let c = anchors.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(r, c, |i, j| anchors[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * smax).count()
}

/// Solves `Ŷᵀ ω = b` in the minimum-norm sense and, for the chosen unit
/// axis `pick`, returns the normalized annihilator `β ∝ (1 − Ŷ(ŶᵀŶ)⁻¹Ŷᵀ) e_pick`.
/// `None` if the anchor columns are dependent.
pub fn omega_beta<S: Scalar>(anchors: &Mat<S>, b: &[S], pick: Option<usize>) -> Option<(Vec<S>, Option<Vec<S>>)> {
    let m = anchors.len();
    let na = b.len();
    let n: Mat<S> = (0..na)
        .map(|a| (0..na).map(|c| (0..m).fold(S::zero(), |s, i| s + anchors[i][a] * anchors[i][c])).collect())
        .collect();
    let l = linalg::cholesky(&n)?;
    let y = linalg::chol_solve(&l, b);
    let omega: Vec<S> = (0..m).map(|i| linalg::dot(&anchors[i], &y)).collect();
    let beta = pick.map(|j| {
        let z = linalg::chol_solve(&l, &anchors[j]);
        let mut v: Vec<S> = (0..m).map(|i| -linalg::dot(&anchors[i], &z)).collect();
        v[j] = v[j] + S::one();
        let norm = linalg::dot(&v, &v).sqrt();
        v.into_iter().map(|x| x / norm).collect()
    });
    Some((omega, beta))
}

/// Unit axis along which the projector onto the anchor annihilator is
/// largest: `argmax_j (1 − Ŷ_jᵀ (ŶᵀŶ)⁻¹ Ŷ_j)` over rows `Ŷ_j`.
pub fn best_pick(anchors: &Mat<f64>) -> Option<usize> {
    let m = anchors.len();
    let na = anchors.first().map_or(0, Vec::len);
    let n: Mat<f64> = (0..na)
        .map(|a| (0..na).map(|c| (0..m).map(|i| anchors[i][a] * anchors[i][c]).sum()).collect())
        .collect();
    let l = linalg::cholesky(&n)?;
    (0..m)
        .map(|j| (j, 1.0 - linalg::dot(&anchors[j], &linalg::chol_solve(&l, &anchors[j]))))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(j, _)| j)
}

/// Exterior derivative `(dω)_{ij} = ∂_i ω_j − ∂_j ω_i` from a Jacobian `J[i][j] = ∂_i ω_j`.
pub fn exterior<S: Scalar>(jac: &Mat<S>) -> Mat<S> {
    let m = jac.len();
    let mut d = linalg::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            d[i][j] = jac[i][j] - jac[j][i];
        }
    }
    d
}

/// Components `(β∧γ)_{ijk}` over `i<j<k` for a 1-form `β` and 2-form `γ`.
pub fn wedge_1_2<S: Scalar>(beta: &[S], gamma: &Mat<S>) -> Vec<S> {
    let m = beta.len();
    let mut out = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                out.push(beta[i] * gamma[j][k] + beta[j] * gamma[k][i] + beta[k] * gamma[i][j]);
            }
        }
    }
    out
}

/// The multiplier that removes the `β∧dω` part: `λ* = −⟨β∧dω₀, β∧dβ⟩/|β∧dβ|²`.
pub fn lambda_star<S: Scalar>(beta: &[S], dbeta: &Mat<S>, domega0: &Mat<S>) -> S {
    let a = wedge_1_2(beta, domega0);
    let b = wedge_1_2(beta, dbeta);
    -linalg::dot(&a, &b) / linalg::dot(&b, &b)
}

/// First-order data at one point: `ω₀`, `β`, and their Jacobians.
#[derive(Clone, Debug)]
pub struct FirstOrder {
    pub base: Vec<f64>,
    pub omega0: Vec<f64>,
    pub jac_omega0: Mat<f64>,
    pub beta: Option<Vec<f64>>,
    pub jac_beta: Option<Mat<f64>>,
}

fn dependent(qh: &[f64]) -> ReductionError {
    ReductionError::Invalid(format!("anchor columns are linearly dependent at {qh:?}"))
}

/// `ω₀`, `β` and their coordinate Jacobians.
pub fn first_order(rs: &dyn ReducedStructure, qh: &[f64], pick: Option<usize>) -> RResult<FirstOrder> {
    let m = qh.len();
    let na = rs.n_vertical();
    let mut jw = linalg::zeros(m, m);
    let mut jb = linalg::zeros(m, m);
    let mut val: Option<(Vec<f64>, Vec<f64>, Option<Vec<f64>>)> = None;
    for (i, mp) in rs.modular_point_grad(qh)?.iter().enumerate() {
        let b = base_values(mp, na);
        let (w, beta) = omega_beta(&mp.anchors, &b, pick).ok_or_else(|| dependent(qh))?;
        for j in 0..m {
            jw[i][j] = w[j].d;
            if let Some(be) = &beta {
                jb[i][j] = be[j].d;
            }
        }
        if val.is_none() {
            val = Some((
                b.iter().map(|x| x.v).collect(),
                w.iter().map(|x| x.v).collect(),
                beta.map(|v| v.iter().map(|x| x.v).collect()),
            ));
        }
    }
    let (base, omega0, beta) = val.ok_or_else(|| ReductionError::Invalid("empty shape chart".into()))?;
    Ok(FirstOrder {
        base,
        omega0,
        jac_omega0: jw,
        jac_beta: beta.as_ref().map(|_| jb),
        beta,
    })
}

/// `ω* = ω₀ + λ*β` at one point (corank one, contact case).
pub fn omega_star(rs: &dyn ReducedStructure, qh: &[f64], pick: usize) -> RResult<Vec<f64>> {
    let fo = first_order(rs, qh, Some(pick))?;
    let beta = fo.beta.expect("pick given");
    let lam = lambda_star(&beta, &exterior(&fo.jac_beta.expect("pick given")), &exterior(&fo.jac_omega0));
    Ok(fo.omega0.iter().zip(&beta).map(|(w, b)| w + lam * b).collect())
}

/// Second-order data for the contact elimination at one point.
#[derive(Clone, Debug)]
pub struct ContactPoint {
    pub omega0: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: f64,
    /// `|β∧dβ|`.
    pub contact: f64,
    /// `dω*` with `ω* = ω₀ + λ*β`.
    pub obstruction: Mat<f64>,
}

/// Evaluates `dω*` exactly, using second derivatives of `ω₀` and `β`.
pub fn contact_point(rs: &dyn ReducedStructure, qh: &[f64], pick: usize) -> RResult<ContactPoint> {
    let m = qh.len();
    let na = rs.n_vertical();
    // hess[i][j][k] = ∂_i ∂_j (·)_k ; jac[j][k] = ∂_j (·)_k
    let mut w_val = vec![0.0; m];
    let mut b_val = vec![0.0; m];
    let mut w_jac = linalg::zeros(m, m);
    let mut b_jac = linalg::zeros(m, m);
    let mut w_hess = vec![linalg::zeros::<f64>(m, m); m];
    let mut b_hess = vec![linalg::zeros::<f64>(m, m); m];
    for i in 0..m {
        for j in i..m {
            let mut ei = vec![0.0; m];
            let mut ej = vec![0.0; m];
            ei[i] = 1.0;
            ej[j] = 1.0;
            let mp = rs.modular_point_d2(qh, &ei, &ej)?;
            let b = base_values(&mp, na);
            let (w, beta) = omega_beta(&mp.anchors, &b, Some(pick)).ok_or_else(|| dependent(qh))?;
            let beta = beta.expect("pick given");
            for k in 0..m {
                if i == 0 && j == 0 {
                    w_val[k] = w[k].v.v;
                    b_val[k] = beta[k].v.v;
                }
                if i == 0 {
                    w_jac[j][k] = w[k].v.d;
                    b_jac[j][k] = beta[k].v.d;
                }
                w_hess[i][j][k] = w[k].d.d;
                w_hess[j][i][k] = w[k].d.d;
                b_hess[i][j][k] = beta[k].d.d;
                b_hess[j][i][k] = beta[k].d.d;
            }
        }
    }
    // Carry the directional derivative along axis i through λ*.
    let mut grad_lambda = vec![0.0; m];
    let mut lambda = 0.0;
    for i in 0..m {
        let beta: Vec<Dual<f64>> = (0..m).map(|k| Dual::new(b_val[k], b_jac[i][k])).collect();
        let jb: Mat<Dual<f64>> = (0..m)
            .map(|j| (0..m).map(|k| Dual::new(b_jac[j][k], b_hess[i][j][k])).collect())
            .collect();
        let jw: Mat<Dual<f64>> = (0..m)
            .map(|j| (0..m).map(|k| Dual::new(w_jac[j][k], w_hess[i][j][k])).collect())
            .collect();
        let l = lambda_star(&beta, &exterior(&jb), &exterior(&jw));
        lambda = l.v;
        grad_lambda[i] = l.d;
    }
    let dw0 = exterior(&w_jac);
    let db = exterior(&b_jac);
    let mut obs = linalg::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            obs[i][j] = dw0[i][j] + grad_lambda[i] * b_val[j] - grad_lambda[j] * b_val[i] + lambda * db[i][j];
        }
    }
    let contact = wedge_1_2(&b_val, &db).iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(ContactPoint {
        omega0: w_val,
        beta: b_val,
        lambda,
        contact,
        obstruction: obs,
    })
}

/// `dω` of the unique family member when the corank is zero.
pub fn closedness_at(rs: &dyn ReducedStructure, qh: &[f64]) -> RResult<Mat<f64>> {
    let fo = first_order(rs, qh, None)?;
    Ok(exterior(&fo.jac_omega0))
}
