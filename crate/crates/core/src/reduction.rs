//! Reduction of a symmetric nonholonomic system to its linear almost-Poisson
//! data on the shape chart: structure functions `C_IJ^K`, anchors `Ŷ_α`, and
//! the fiber metric `𝒢^{IJ}`.
//!
//! Joint frame indices put the verticals `Z_a` first, then the horizontals `Y_α`.
//! All reduced quantities are composites through the declared section `s`.

use crate::expr::{scalar, Dual, Expr, Jet, Scalar};
use crate::geometry::{Chart, FrameSplit, GeometryError, MetricField};
use crate::linalg::{self, Mat};
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid system: {0}")]
    Invalid(String),
}

impl From<crate::expr::EvalError> for ReductionError {
    fn from(e: crate::expr::EvalError) -> Self {
        ReductionError::Geometry(GeometryError::Eval(e))
    }
}

pub type RResult<T> = Result<T, ReductionError>;

/// `C_IJ^K` stored densely, `data[(i*n + j)*n + k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTable<S> {
    pub n: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> StructureTable<S> {
    pub fn zeros(n: usize) -> Self {
        StructureTable {
            n,
            data: vec![S::zero(); n * n * n],
        }
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> S {
        self.data[(i * self.n + j) * self.n + k]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: S) {
        self.data[(i * self.n + j) * self.n + k] = v;
    }
    /// `Σ_J C_IJ^J`.
    pub fn trace(&self, i: usize) -> S {
        let mut s = S::zero();
        for j in 0..self.n {
            s = s + self.get(i, j, j);
        }
        s
    }
    pub fn to_f64(&self) -> StructureTable<f64> {
        StructureTable {
            n: self.n,
            data: self.data.iter().map(|x| x.re()).collect(),
        }
    }
}

/// The data entering the modular field at one shape point.
#[derive(Clone, Debug)]
pub struct ModularPoint<S> {
    pub c: StructureTable<S>,
    /// `m̂ × n_α`, column α is the anchor `Ŷ_α`.
    pub anchors: Mat<S>,
    /// `∂Ŷ_α^ι/∂q̂^ι` for each α.
    pub anchor_div: Vec<S>,
}

/// The data entering the Hamiltonian vector field at one shape point.
#[derive(Clone, Debug)]
pub struct DynamicsPoint {
    pub c: StructureTable<f64>,
    pub anchors: Mat<f64>,
    pub fiber_metric: Mat<f64>,
    /// `∂𝒢^{IJ}/∂q̂^ι`, one matrix per shape coordinate.
    pub fiber_metric_grad: Vec<Mat<f64>>,
}

/// Step used for central differences: `1e-5·max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

fn fd_scale(x: &[f64], dir: &[f64]) -> f64 {
    let n = x.iter().zip(dir).map(|(a, _)| a.abs()).fold(1.0, f64::max);
    let d = dir.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    1e-5 * n / d
}

fn shift(x: &[f64], dir: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, d)| a + h * d).collect()
}

fn combine_point<S: Scalar, T: Scalar>(
    a: &ModularPoint<S>,
    b: &ModularPoint<S>,
    f: impl Fn(S, S) -> T,
) -> ModularPoint<T> {
    ModularPoint {
        c: StructureTable {
            n: a.c.n,
            data: a.c.data.iter().zip(&b.c.data).map(|(&x, &y)| f(x, y)).collect(),
        },
        anchors: a
            .anchors
            .iter()
            .zip(&b.anchors)
            .map(|(r, s)| r.iter().zip(s).map(|(&x, &y)| f(x, y)).collect())
            .collect(),
        anchor_div: a
            .anchor_div
            .iter()
            .zip(&b.anchor_div)
            .map(|(&x, &y)| f(x, y))
            .collect(),
    }
}

fn map_point<S: Scalar, T: Scalar>(a: &ModularPoint<S>, f: impl Fn(S) -> T) -> ModularPoint<T> {
    ModularPoint {
        c: StructureTable {
            n: a.c.n,
            data: a.c.data.iter().map(|&x| f(x)).collect(),
        },
        anchors: a.anchors.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect(),
        anchor_div: a.anchor_div.iter().map(|&x| f(x)).collect(),
    }
}

fn grad_by_axes<R: ReducedStructure + ?Sized>(rs: &R, qh: &[f64]) -> RResult<Vec<ModularPoint<Dual<f64>>>> {
    (0..qh.len())
        .map(|i| {
            let mut e = vec![0.0; qh.len()];
            e[i] = 1.0;
            rs.modular_point_d1(qh, &e)
        })
        .collect()
}

/// Linear almost-Poisson data on a shape chart.
///
/// Only the three plain evaluators are required; derivative-bearing methods
/// default to central differences and may be overridden with exact versions.
pub trait ReducedStructure: Sync {
    fn shape_chart(&self) -> &Chart;
    fn n_vertical(&self) -> usize;
    fn n_horizontal(&self) -> usize;
    fn n(&self) -> usize {
        self.n_vertical() + self.n_horizontal()
    }

    fn structure_functions_at(&self, qh: &[f64]) -> RResult<StructureTable<f64>>;
    /// `m̂ × n_α` anchor matrix `Ŷ_α^ι`.
    fn anchors_at(&self, qh: &[f64]) -> RResult<Mat<f64>>;
    /// `𝒢^{IJ}`, the inverse frame Gram matrix.
    fn fiber_metric_at(&self, qh: &[f64]) -> RResult<Mat<f64>>;

    fn anchor_divergence_at(&self, qh: &[f64]) -> RResult<Vec<f64>> {
        let na = self.n_horizontal();
        let mut div = vec![0.0; na];
        for i in 0..qh.len() {
            let h = fd_step(qh[i]);
            let mut xp = qh.to_vec();
            let mut xm = qh.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let ap = self.anchors_at(&xp)?;
            let am = self.anchors_at(&xm)?;
            for (a, d) in div.iter_mut().enumerate() {
                *d += (ap[i][a] - am[i][a]) / (2.0 * h);
            }
        }
        Ok(div)
    }

    fn modular_point(&self, qh: &[f64]) -> RResult<ModularPoint<f64>> {
        Ok(ModularPoint {
            c: self.structure_functions_at(qh)?,
            anchors: self.anchors_at(qh)?,
            anchor_div: self.anchor_divergence_at(qh)?,
        })
    }

    /// Modular data with its derivative along `dir`.
    fn modular_point_d1(&self, qh: &[f64], dir: &[f64]) -> RResult<ModularPoint<Dual<f64>>> {
        let h = fd_scale(qh, dir);
        let v = self.modular_point(qh)?;
        let p = self.modular_point(&shift(qh, dir, h))?;
        let m = self.modular_point(&shift(qh, dir, -h))?;
        let d = combine_point(&p, &m, |a, b| (a - b) / (2.0 * h));
        Ok(combine_point(&v, &d, Dual::new))
    }

    /// Modular data differentiated along each coordinate axis in turn.
    fn modular_point_grad(&self, qh: &[f64]) -> RResult<Vec<ModularPoint<Dual<f64>>>> {
        grad_by_axes(self, qh)
    }

    /// Modular data with first derivatives along `d1`, `d2` and the mixed second
    /// derivative: `.v.d` is along `d2`, `.d.v` along `d1`, `.d.d` mixed.
    fn modular_point_d2(
        &self,
        qh: &[f64],
        d1: &[f64],
        d2: &[f64],
    ) -> RResult<ModularPoint<Dual<Dual<f64>>>> {
        let h = fd_scale(qh, d1);
        let v = self.modular_point_d1(qh, d2)?;
        let p = self.modular_point_d1(&shift(qh, d1, h), d2)?;
        let m = self.modular_point_d1(&shift(qh, d1, -h), d2)?;
        let d = combine_point(&p, &m, |a, b| (a - b) * Dual::cst(1.0 / (2.0 * h)));
        Ok(combine_point(&v, &d, Dual::new))
    }

    fn dynamics_point(&self, qh: &[f64]) -> RResult<DynamicsPoint> {
        let mut grad = Vec::with_capacity(qh.len());
        for i in 0..qh.len() {
            let h = fd_step(qh[i]);
            let mut xp = qh.to_vec();
            let mut xm = qh.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let gp = self.fiber_metric_at(&xp)?;
            let gm = self.fiber_metric_at(&xm)?;
            grad.push(
                gp.iter()
                    .zip(&gm)
                    .map(|(r, s)| r.iter().zip(s).map(|(a, b)| (a - b) / (2.0 * h)).collect())
                    .collect(),
            );
        }
        Ok(DynamicsPoint {
            c: self.structure_functions_at(qh)?,
            anchors: self.anchors_at(qh)?,
            fiber_metric: self.fiber_metric_at(qh)?,
            fiber_metric_grad: grad,
        })
    }
}

/// A symmetric nonholonomic system declared in one chart.
#[derive(Clone, Debug)]
pub struct SymmetricSystem {
    pub name: String,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub q_chart: Chart,
    pub metric: Arc<MetricField>,
    pub frame: FrameSplit,
    pub shape_chart: Chart,
    /// `p(q)`: one expression per shape coordinate, over Q coordinates.
    pub projection: Vec<Expr>,
    /// `s(q̂)`: one expression per Q coordinate, over shape coordinates.
    pub section: Vec<Expr>,
    /// Alternative sections through group-displaced points of the same orbits.
    pub fiber_samples: Vec<Vec<Expr>>,
}

fn eval_exprs<S: Scalar>(list: &[Expr], x: &[S], params: &[f64]) -> RResult<Vec<S>> {
    list.iter()
        .map(|e| e.eval_s(x, params).map_err(ReductionError::from))
        .collect()
}

fn degenerate<S: Scalar>(q: &[S]) -> ReductionError {
    ReductionError::Geometry(GeometryError::DegenerateFrame {
        point: q.iter().map(|v| v.re()).collect(),
    })
}

impl SymmetricSystem {
    pub fn m(&self) -> usize {
        self.q_chart.dim()
    }
    pub fn m_hat(&self) -> usize {
        self.shape_chart.dim()
    }

    /// Frame Gram matrix `T` at `s(q̂)` for a given section.
    pub fn frame_gram_s<S: Scalar>(&self, section: &[Expr], qh: &[S]) -> RResult<Mat<S>> {
        let q = eval_exprs(section, qh, &self.params)?;
        let fp = self.frame.eval_point(&self.metric, &q, &self.params)?;
        Ok(crate::geometry::gram_of(&fp.metric, &fp.frame))
    }

    /// `Tp · Y_α` at `s(q̂)`, as an `m̂ × n_α` matrix.
    pub fn anchors_s<S: Scalar>(&self, section: &[Expr], qh: &[S]) -> RResult<Mat<S>> {
        let q = eval_exprs(section, qh, &self.params)?;
        let fp = self.frame.eval_point(&self.metric, &q, &self.params)?;
        let na = self.frame.n_vertical();
        let mh = self.m_hat();
        let mut a = linalg::zeros(mh, self.frame.n_horizontal());
        for (alpha, y) in fp.frame[na..].iter().enumerate() {
            let x = scalar::seed(&q, y);
            let tp = eval_exprs::<Dual<S>>(&self.projection, &x, &self.params)?;
            for (i, v) in tp.iter().enumerate() {
                a[i][alpha] = v.d;
            }
        }
        Ok(a)
    }

    /// Structure functions at `s(q̂)`: `𝒫[s_I, s_J] = C_IJ^K s_K`, computed
    /// for `I < J` and antisymmetrized.
    pub fn structure_s<S: Scalar>(&self, section: &[Expr], qh: &[S]) -> RResult<StructureTable<S>> {
        let q = eval_exprs(section, qh, &self.params)?;
        let fp = self.frame.eval_point(&self.metric, &q, &self.params)?;
        let n = self.frame.len();
        // dir[i][j] = (D s_j)·s_i
        let mut dir: Vec<Vec<Vec<S>>> = Vec::with_capacity(n);
        for si in &fp.frame {
            let x = scalar::seed(&q, si);
            let fd = self.frame.eval_point::<Dual<S>>(&self.metric, &x, &self.params)?;
            dir.push(fd.frame.iter().map(|v| scalar::derivs(v)).collect());
        }
        let t = crate::geometry::gram_of(&fp.metric, &fp.frame);
        let l = linalg::cholesky(&t).ok_or_else(|| degenerate(&q))?;
        let gs: Vec<Vec<S>> = fp.frame.iter().map(|v| linalg::mat_vec(&fp.metric, v)).collect();
        let mut c = StructureTable::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let br: Vec<S> = dir[i][j].iter().zip(&dir[j][i]).map(|(&a, &b)| a - b).collect();
                let b: Vec<S> = gs.iter().map(|g| linalg::dot(g, &br)).collect();
                let y = linalg::chol_solve(&l, &b);
                for (k, &yk) in y.iter().enumerate() {
                    c.set(i, j, k, yk);
                    c.set(j, i, k, -yk);
                }
            }
        }
        Ok(c)
    }

    /// Anchor divergence `∂Ŷ_α^ι/∂q̂^ι`, exact via one extra dual level.
    pub fn anchor_div_s<S: Scalar>(&self, section: &[Expr], qh: &[S]) -> RResult<Vec<S>> {
        let nh = self.frame.n_horizontal();
        let mut div = vec![S::zero(); nh];
        for i in 0..qh.len() {
            let x = scalar::seed_axis(qh, i);
            let a = self.anchors_s::<Dual<S>>(section, &x)?;
            for (alpha, d) in div.iter_mut().enumerate() {
                *d = *d + a[i][alpha].d;
            }
        }
        Ok(div)
    }

    fn modular_grad_jet<const N: usize>(&self, qh: &[f64]) -> RResult<Vec<ModularPoint<Dual<f64>>>> {
        let mp = self.modular_s(&scalar::seed_jet::<N>(qh))?;
        Ok((0..N).map(|k| map_point(&mp, |x: Jet<N>| Dual::new(x.v, x.d[k]))).collect())
    }

    pub fn modular_s<S: Scalar>(&self, qh: &[S]) -> RResult<ModularPoint<S>> {
        Ok(ModularPoint {
            c: self.structure_s(&self.section, qh)?,
            anchors: self.anchors_s(&self.section, qh)?,
            anchor_div: self.anchor_div_s(&self.section, qh)?,
        })
    }

    /// `s(q̂)` in Q coordinates.
    pub fn lift(&self, qh: &[f64]) -> RResult<Vec<f64>> {
        eval_exprs(&self.section, qh, &self.params)
    }

    /// Checks the declared-structure invariants at the shape chart's probe
    /// points: `p∘s = id`, verticals project to zero, metric SPD, verticals
    /// orthogonal to horizontals, frame independent.
    pub fn validate(&self) -> RResult<()> {
        let m = self.m();
        let mh = self.m_hat();
        if self.metric.dim() != m {
            return Err(ReductionError::Invalid("metric dimension differs from Q chart".into()));
        }
        if self.projection.len() != mh {
            return Err(ReductionError::Invalid("projection needs one expression per shape coordinate".into()));
        }
        if self.section.len() != m || self.fiber_samples.iter().any(|s| s.len() != m) {
            return Err(ReductionError::Invalid("section needs one expression per Q coordinate".into()));
        }
        if self.frame.fields().any(|f| f.dim() != m) {
            return Err(ReductionError::Invalid("frame field with wrong number of components".into()));
        }
        if self.frame.n_horizontal() == 0 {
            return Err(ReductionError::Invalid("at least one horizontal field is required".into()));
        }
        for qh in self.shape_chart.probe_points() {
            let q = self.lift(&qh)?;
            let back = eval_exprs(&self.projection, &q, &self.params)?;
            let err = back.iter().zip(&qh).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if err > 1e-12 * (1.0 + qh.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                return Err(ReductionError::Invalid(format!(
                    "projection does not invert the section at {qh:?} (error {err:e})"
                )));
            }
            let fp = self.frame.eval_point(&self.metric, &q, &self.params)?;
            if linalg::cholesky(&fp.metric).is_none() {
                return Err(GeometryError::NotPositiveDefinite { point: q }.into());
            }
            let na = self.frame.n_vertical();
            for z in &fp.frame[..na] {
                let x = scalar::seed(&q, z);
                let tp = eval_exprs::<Dual<f64>>(&self.projection, &x, &self.params)?;
                let zn = z.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
                if tp.iter().any(|v| v.d.abs() > 1e-10 * zn) {
                    return Err(ReductionError::Invalid(format!(
                        "a vertical field is not tangent to the group orbit at {qh:?}"
                    )));
                }
            }
            let t = crate::geometry::gram_of(&fp.metric, &fp.frame);
            let scale = t.iter().enumerate().map(|(i, r)| r[i].abs()).fold(0.0, f64::max);
            for a in 0..na {
                for al in na..self.frame.len() {
                    if t[a][al].abs() > 1e-10 * scale.max(1.0) {
                        return Err(ReductionError::Invalid(format!(
                            "vertical field {a} is not orthogonal to horizontal field {} at {qh:?}",
                            al - na
                        )));
                    }
                }
            }
            if linalg::cholesky(&t).is_none() {
                return Err(degenerate(&q));
            }
        }
        Ok(())
    }
}

impl ReducedStructure for SymmetricSystem {
    fn shape_chart(&self) -> &Chart {
        &self.shape_chart
    }
    fn n_vertical(&self) -> usize {
        self.frame.n_vertical()
    }
    fn n_horizontal(&self) -> usize {
        self.frame.n_horizontal()
    }
    fn structure_functions_at(&self, qh: &[f64]) -> RResult<StructureTable<f64>> {
        self.structure_s(&self.section, qh)
    }
    fn anchors_at(&self, qh: &[f64]) -> RResult<Mat<f64>> {
        self.anchors_s(&self.section, qh)
    }
    fn fiber_metric_at(&self, qh: &[f64]) -> RResult<Mat<f64>> {
        let t = self.frame_gram_s::<f64>(&self.section, qh)?;
        let l = linalg::cholesky(&t).ok_or_else(|| degenerate(qh))?;
        Ok(linalg::chol_inverse(&l))
    }
    fn anchor_divergence_at(&self, qh: &[f64]) -> RResult<Vec<f64>> {
        self.anchor_div_s(&self.section, qh)
    }
    fn modular_point(&self, qh: &[f64]) -> RResult<ModularPoint<f64>> {
        self.modular_s(qh)
    }
    fn modular_point_d1(&self, qh: &[f64], dir: &[f64]) -> RResult<ModularPoint<Dual<f64>>> {
        self.modular_s(&scalar::seed(qh, dir))
    }
    fn modular_point_grad(&self, qh: &[f64]) -> RResult<Vec<ModularPoint<Dual<f64>>>> {
        match qh.len() {
            1 => self.modular_grad_jet::<1>(qh),
            2 => self.modular_grad_jet::<2>(qh),
            3 => self.modular_grad_jet::<3>(qh),
            4 => self.modular_grad_jet::<4>(qh),
            _ => grad_by_axes(self, qh),
        }
    }
    fn modular_point_d2(
        &self,
        qh: &[f64],
        d1: &[f64],
        d2: &[f64],
    ) -> RResult<ModularPoint<Dual<Dual<f64>>>> {
        let x: Vec<Dual<Dual<f64>>> = (0..qh.len())
            .map(|i| Dual::new(Dual::new(qh[i], d2[i]), Dual::new(d1[i], 0.0)))
            .collect();
        self.modular_s(&x)
    }
    fn dynamics_point(&self, qh: &[f64]) -> RResult<DynamicsPoint> {
        let t = self.frame_gram_s::<f64>(&self.section, qh)?;
        let l = linalg::cholesky(&t).ok_or_else(|| degenerate(qh))?;
        let ginv = linalg::chol_inverse(&l);
        let n = t.len();
        let mut grad = Vec::with_capacity(qh.len());
        for i in 0..qh.len() {
            let x = scalar::seed_axis(qh, i);
            let td = self.frame_gram_s::<Dual<f64>>(&self.section, &x)?;
            let dt: Mat<f64> = td.iter().map(|r| r.iter().map(|v| v.d).collect()).collect();
            // ∂(T⁻¹) = −T⁻¹ (∂T) T⁻¹
            let mut g = linalg::zeros::<f64>(n, n);
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for c in 0..n {
                        for d in 0..n {
                            s += ginv[a][c] * dt[c][d] * ginv[d][b];
                        }
                    }
                    g[a][b] = -s;
                }
            }
            grad.push(g);
        }
        Ok(DynamicsPoint {
            c: self.structure_s(&self.section, qh)?,
            anchors: self.anchors_s(&self.section, qh)?,
            fiber_metric: ginv,
            fiber_metric_grad: grad,
        })
    }
}

/// Outcome of [`check_invariance`].
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub max_discrepancy: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Recompute the reduced data through every fiber-sample section at `q̂` and
/// compare with the primary section.
pub fn check_invariance(sys: &SymmetricSystem, qh: &[f64], tol: f64) -> RResult<InvarianceReport> {
    let c0 = sys.structure_s::<f64>(&sys.section, qh)?;
    let a0 = sys.anchors_s::<f64>(&sys.section, qh)?;
    let t0 = sys.frame_gram_s::<f64>(&sys.section, qh)?;
    let mut worst: f64 = 0.0;
    for sec in &sys.fiber_samples {
        let c = sys.structure_s::<f64>(sec, qh)?;
        let a = sys.anchors_s::<f64>(sec, qh)?;
        let t = sys.frame_gram_s::<f64>(sec, qh)?;
        for (x, y) in c.data.iter().zip(&c0.data) {
            worst = worst.max((x - y).abs());
        }
        worst = worst.max(linalg::max_abs_diff(&a, &a0));
        let l0 = linalg::cholesky(&t0).ok_or_else(|| degenerate(qh))?;
        let l = linalg::cholesky(&t).ok_or_else(|| degenerate(qh))?;
        worst = worst.max(linalg::max_abs_diff(
            &linalg::chol_inverse(&l),
            &linalg::chol_inverse(&l0),
        ));
    }
    Ok(InvarianceReport {
        max_discrepancy: worst,
        tol,
        passed: worst <= tol,
    })
}

type TableFn = dyn Fn(&[f64]) -> RResult<StructureTable<f64>> + Send + Sync;
type MatFn = dyn Fn(&[f64]) -> RResult<Mat<f64>> + Send + Sync;

/// A reduced structure given directly by evaluators. Derivative-bearing
/// methods use the trait's finite-difference defaults.
pub struct FnStructure {
    pub chart: Chart,
    pub n_vertical: usize,
    pub n_horizontal: usize,
    pub structure: Box<TableFn>,
    pub anchors: Box<MatFn>,
    pub fiber_metric: Box<MatFn>,
}

impl FnStructure {
    /// Constant structure functions, anchors and fiber metric.
    pub fn constant(chart: Chart, n_vertical: usize, c: StructureTable<f64>, anchors: Mat<f64>, g: Mat<f64>) -> Self {
        let n_horizontal = anchors.first().map_or(0, |r| r.len());
        FnStructure {
            chart,
            n_vertical,
            n_horizontal,
            structure: Box::new(move |_| Ok(c.clone())),
            anchors: Box::new(move |_| Ok(anchors.clone())),
            fiber_metric: Box::new(move |_| Ok(g.clone())),
        }
    }
}

impl ReducedStructure for FnStructure {
    fn shape_chart(&self) -> &Chart {
        &self.chart
    }
    fn n_vertical(&self) -> usize {
        self.n_vertical
    }
    fn n_horizontal(&self) -> usize {
        self.n_horizontal
    }
    fn structure_functions_at(&self, qh: &[f64]) -> RResult<StructureTable<f64>> {
        (self.structure)(qh)
    }
    fn anchors_at(&self, qh: &[f64]) -> RResult<Mat<f64>> {
        (self.anchors)(qh)
    }
    fn fiber_metric_at(&self, qh: &[f64]) -> RResult<Mat<f64>> {
        (self.fiber_metric)(qh)
    }
}
