//! Charts, vector fields and metrics in coordinate form, together with Lie
//! brackets, Gram matrices and the metric-orthogonal projection onto a frame.
//!
//! Every evaluator is generic over [`Scalar`] so that derivatives of composite
//! quantities (orthogonalized fields, Gram solves) come out of the same code
//! by running it on dual numbers.

use crate::expr::{scalar, Dual, EvalError, Expr, Scalar};
use crate::linalg::{self, Mat};
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GeometryError {
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("degenerate frame at q = {point:?}")]
    DegenerateFrame { point: Vec<f64> },
    #[error("metric is not positive definite at q = {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type GResult<T> = Result<T, GeometryError>;

/// A coordinate chart with a per-coordinate domain and singular-set margin.
/// Sampling happens in the box `[lower + margin, upper - margin]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub margins: Vec<f64>,
}

impl Chart {
    pub fn new(
        names: Vec<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        margins: Vec<f64>,
    ) -> GResult<Self> {
        let m = names.len();
        if m == 0 {
            return Err(GeometryError::InvalidChart("chart needs at least one coordinate".into()));
        }
        if lower.len() != m || upper.len() != m || margins.len() != m {
            return Err(GeometryError::InvalidChart("bound and margin lists must match names".into()));
        }
        for i in 0..m {
            let (a, b) = (lower[i] + margins[i], upper[i] - margins[i]);
            if !(margins[i] >= 0.0) || !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(GeometryError::InvalidChart(format!(
                    "coordinate '{}' has an empty sampling box [{a}, {b}]",
                    names[i]
                )));
            }
        }
        Ok(Chart {
            names,
            lower,
            upper,
            margins,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn var_names(&self) -> Vec<&str> {
        self.names.iter().map(String::as_str).collect()
    }

    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        (0..self.dim())
            .map(|i| (self.lower[i] + self.margins[i], self.upper[i] - self.margins[i]))
            .collect()
    }

    /// True if `x` lies in the closed sampling box.
    pub fn in_sample_box(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .sample_box()
                .iter()
                .zip(x)
                .all(|(&(a, b), &v)| v >= a && v <= b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.sample_box().iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// A small deterministic set of interior points used for sanity checks.
    pub fn probe_points(&self) -> Vec<Vec<f64>> {
        let bx = self.sample_box();
        [0.5, 0.2, 0.8, 0.35, 0.65]
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                bx.iter()
                    .enumerate()
                    .map(|(i, &(a, b))| {
                        let s = if (i + k) % 2 == 0 { t } else { 1.0 - t };
                        a + s * (b - a)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Symmetric metric stored as an upper triangle, either directly in the
/// coordinate frame or as `Σ M_ab θ^a θ^b` over a coframe `θ^a = A_ai dq^i`.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricField {
    Components {
        dim: usize,
        /// Row-major upper triangle: (0,0), (0,1), .., (0,m-1), (1,1), ..
        upper: Vec<Expr>,
    },
    Coframe {
        dim: usize,
        rows: Vec<Vec<Expr>>,
        inner_upper: Vec<Expr>,
    },
}

pub fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

fn eval_upper<S: Scalar>(n: usize, upper: &[Expr], q: &[S], params: &[f64]) -> GResult<Mat<S>> {
    let mut m = linalg::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let e = &upper[upper_index(n, i, j)];
            let v = if e.is_zero_literal() {
                S::zero()
            } else {
                e.eval_s(q, params)?
            };
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

fn eval_list<S: Scalar>(list: &[Expr], q: &[S], params: &[f64]) -> GResult<Vec<S>> {
    list.iter()
        .map(|e| {
            if e.is_zero_literal() {
                Ok(S::zero())
            } else {
                e.eval_s(q, params).map_err(GeometryError::from)
            }
        })
        .collect()
}

impl MetricField {
    pub fn from_upper(dim: usize, upper: Vec<Expr>) -> GResult<Self> {
        if upper.len() != dim * (dim + 1) / 2 {
            return Err(GeometryError::Dimension(format!(
                "metric of dimension {dim} needs {} upper-triangle entries, got {}",
                dim * (dim + 1) / 2,
                upper.len()
            )));
        }
        Ok(MetricField::Components { dim, upper })
    }

    pub fn from_coframe(dim: usize, rows: Vec<Vec<Expr>>, inner_upper: Vec<Expr>) -> GResult<Self> {
        let r = rows.len();
        if rows.iter().any(|row| row.len() != dim) || inner_upper.len() != r * (r + 1) / 2 {
            return Err(GeometryError::Dimension("coframe metric has inconsistent sizes".into()));
        }
        Ok(MetricField::Coframe {
            dim,
            rows,
            inner_upper,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricField::Components { dim, .. } | MetricField::Coframe { dim, .. } => *dim,
        }
    }

    pub fn eval<S: Scalar>(&self, q: &[S], params: &[f64]) -> GResult<Mat<S>> {
        match self {
            MetricField::Components { dim, upper } => eval_upper(*dim, upper, q, params),
            MetricField::Coframe {
                dim,
                rows,
                inner_upper,
            } => {
                let r = rows.len();
                let a: Vec<Vec<S>> = rows
                    .iter()
                    .map(|row| eval_list(row, q, params))
                    .collect::<GResult<_>>()?;
                let m = eval_upper(r, inner_upper, q, params)?;
                // G = Aᵀ M A
                let ma: Mat<S> = (0..r)
                    .map(|x| {
                        (0..*dim)
                            .map(|i| {
                                let mut s = S::zero();
                                for (y, ay) in a.iter().enumerate() {
                                    s = s + m[x][y] * ay[i];
                                }
                                s
                            })
                            .collect()
                    })
                    .collect();
                let mut g = linalg::zeros(*dim, *dim);
                for i in 0..*dim {
                    for j in i..*dim {
                        let mut s = S::zero();
                        for x in 0..r {
                            s = s + a[x][i] * ma[x][j];
                        }
                        g[i][j] = s;
                        g[j][i] = s;
                    }
                }
                Ok(g)
            }
        }
    }

    /// The equivalent coordinate-component form (composite expressions).
    pub fn to_components(&self) -> MetricField {
        match self {
            MetricField::Components { .. } => self.clone(),
            MetricField::Coframe {
                dim,
                rows,
                inner_upper,
            } => {
                let r = rows.len();
                let mut upper = Vec::new();
                for i in 0..*dim {
                    for j in i..*dim {
                        let mut terms = Vec::new();
                        for x in 0..r {
                            for y in 0..r {
                                let m = &inner_upper[upper_index(r, x, y)];
                                if m.is_zero_literal()
                                    || rows[x][i].is_zero_literal()
                                    || rows[y][j].is_zero_literal()
                                {
                                    continue;
                                }
                                terms.push(Expr::product([
                                    m.clone(),
                                    rows[x][i].clone(),
                                    rows[y][j].clone(),
                                ]));
                            }
                        }
                        upper.push(Expr::sum(terms));
                    }
                }
                MetricField::Components { dim: *dim, upper }
            }
        }
    }
}

/// Vertical fields plus the metric they are orthogonalized against; shared by
/// every horizontal field produced by one [`orthogonalize_split`] call.
#[derive(Debug, PartialEq)]
pub struct VerticalBasis {
    pub verticals: Vec<Vec<Expr>>,
    pub metric: Arc<MetricField>,
}

impl VerticalBasis {
    fn eval<S: Scalar>(&self, q: &[S], params: &[f64]) -> GResult<(Mat<S>, Vec<Vec<S>>)> {
        let g = self.metric.eval(q, params)?;
        let z = self
            .verticals
            .iter()
            .map(|f| eval_list(f, q, params))
            .collect::<GResult<Vec<_>>>()?;
        Ok((g, z))
    }
}

/// `x − Σ_ab 𝒢(x, z_a) (𝒢_ZZ⁻¹)^{ab} z_b` at one point.
fn remove_vertical<S: Scalar>(g: &Mat<S>, z: &[Vec<S>], x: &[S], q: &[S]) -> GResult<Vec<S>> {
    if z.is_empty() {
        return Ok(x.to_vec());
    }
    let gzz: Mat<S> = z
        .iter()
        .map(|za| z.iter().map(|zb| linalg::bilinear(g, za, zb)).collect())
        .collect();
    let l = linalg::cholesky(&gzz).ok_or_else(|| GeometryError::DegenerateFrame {
        point: q.iter().map(|v| v.re()).collect(),
    })?;
    let b: Vec<S> = z.iter().map(|za| linalg::bilinear(g, x, za)).collect();
    let c = linalg::chol_solve(&l, &b);
    let mut y = x.to_vec();
    for (cb, zb) in c.iter().zip(z) {
        for (yi, &zi) in y.iter_mut().zip(zb) {
            *yi = *yi - *cb * zi;
        }
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq)]
pub enum VectorField {
    /// Components given directly as expressions in the chart coordinates.
    Components(Vec<Expr>),
    /// A candidate field with its metric-orthogonal vertical part removed.
    Orthogonalized {
        candidate: Vec<Expr>,
        basis: Arc<VerticalBasis>,
    },
}

impl VectorField {
    pub fn dim(&self) -> usize {
        match self {
            VectorField::Components(c) => c.len(),
            VectorField::Orthogonalized { candidate, .. } => candidate.len(),
        }
    }

    pub fn eval<S: Scalar>(&self, q: &[S], params: &[f64]) -> GResult<Vec<S>> {
        match self {
            VectorField::Components(c) => eval_list(c, q, params),
            VectorField::Orthogonalized { candidate, basis } => {
                let (g, z) = basis.eval(q, params)?;
                let x = eval_list(candidate, q, params)?;
                remove_vertical(&g, &z, &x, q)
            }
        }
    }

    /// Directional derivative `(D self)(q) · dir`.
    pub fn directional<S: Scalar>(&self, q: &[S], dir: &[S], params: &[f64]) -> GResult<Vec<S>> {
        let x = scalar::seed(q, dir);
        Ok(scalar::derivs(&self.eval::<Dual<S>>(&x, params)?))
    }

    /// Scale every component by a constant factor.
    pub fn scaled(&self, c: f64) -> VectorField {
        match self {
            VectorField::Components(v) => {
                VectorField::Components(v.iter().map(|e| Expr::num(c) * e.clone()).collect())
            }
            VectorField::Orthogonalized { candidate, basis } => VectorField::Orthogonalized {
                candidate: candidate.iter().map(|e| Expr::num(c) * e.clone()).collect(),
                basis: basis.clone(),
            },
        }
    }
}

/// `[X, Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i`, inner derivatives by dual numbers.
pub fn lie_bracket<S: Scalar>(
    x: &VectorField,
    y: &VectorField,
    q: &[S],
    params: &[f64],
) -> GResult<Vec<S>> {
    let xv = x.eval(q, params)?;
    let yv = y.eval(q, params)?;
    let dy_x = y.directional(q, &xv, params)?;
    let dx_y = x.directional(q, &yv, params)?;
    Ok(dy_x.iter().zip(&dx_y).map(|(&a, &b)| a - b).collect())
}

/// Gram matrix `𝒢(q)(v_i, v_j)` of already evaluated vectors.
pub fn gram_of<S: Scalar>(g: &Mat<S>, vs: &[Vec<S>]) -> Mat<S> {
    let n = vs.len();
    let gv: Vec<Vec<S>> = vs.iter().map(|v| linalg::mat_vec(g, v)).collect();
    let mut t = linalg::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s = linalg::dot(&vs[i], &gv[j]);
            t[i][j] = s;
            t[j][i] = s;
        }
    }
    t
}

pub fn gram_matrix(
    metric: &MetricField,
    fields: &[VectorField],
    q: &[f64],
    params: &[f64],
) -> GResult<Mat<f64>> {
    let g = metric.eval(q, params)?;
    let vs = fields
        .iter()
        .map(|f| f.eval(q, params))
        .collect::<GResult<Vec<_>>>()?;
    Ok(gram_of(&g, &vs))
}

/// Coefficients `y` of the metric-orthogonal projection of `v` onto the span
/// of already evaluated frame vectors: `T y = b`, `b_i = 𝒢(frame_i, v)`.
pub fn project_coefficients<S: Scalar>(
    g: &Mat<S>,
    frame: &[Vec<S>],
    v: &[S],
    q: &[S],
) -> GResult<Vec<S>> {
    let t = gram_of(g, frame);
    let l = linalg::cholesky(&t).ok_or_else(|| GeometryError::DegenerateFrame {
        point: q.iter().map(|x| x.re()).collect(),
    })?;
    let gv = linalg::mat_vec(g, v);
    let b: Vec<S> = frame.iter().map(|f| linalg::dot(f, &gv)).collect();
    Ok(linalg::chol_solve(&l, &b))
}

pub fn project_onto_frame(
    metric: &MetricField,
    frame: &[VectorField],
    q: &[f64],
    v: &[f64],
    params: &[f64],
) -> GResult<Vec<f64>> {
    let g = metric.eval(q, params)?;
    let vs = frame
        .iter()
        .map(|f| f.eval(q, params))
        .collect::<GResult<Vec<_>>>()?;
    project_coefficients(&g, &vs, v, q)
}

/// Verticals `{Z_a}` (joint indices first) and horizontals `{Y_α}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSplit {
    pub verticals: Vec<VectorField>,
    pub horizontals: Vec<VectorField>,
}

/// Metric and all frame vectors at one point.
#[derive(Clone, Debug)]
pub struct FramePoint<S> {
    pub metric: Mat<S>,
    pub frame: Vec<Vec<S>>,
}

impl FrameSplit {
    pub fn n_vertical(&self) -> usize {
        self.verticals.len()
    }
    pub fn n_horizontal(&self) -> usize {
        self.horizontals.len()
    }
    pub fn len(&self) -> usize {
        self.verticals.len() + self.horizontals.len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fields(&self) -> impl Iterator<Item = &VectorField> {
        self.verticals.iter().chain(self.horizontals.iter())
    }

    /// Evaluate the metric and all frame fields at `q`, sharing the metric and
    /// vertical evaluations between orthogonalized fields.
    pub fn eval_point<S: Scalar>(
        &self,
        metric: &Arc<MetricField>,
        q: &[S],
        params: &[f64],
    ) -> GResult<FramePoint<S>> {
        let g = metric.eval(q, params)?;
        let mut frame = Vec::with_capacity(self.len());
        let mut shared: Option<(*const VerticalBasis, Vec<Vec<S>>)> = None;
        for f in self.fields() {
            match f {
                VectorField::Orthogonalized { candidate, basis } if Arc::ptr_eq(&basis.metric, metric) => {
                    let key = Arc::as_ptr(basis);
                    if shared.as_ref().map(|(k, _)| *k) != Some(key) {
                        let z = basis
                            .verticals
                            .iter()
                            .map(|v| eval_list(v, q, params))
                            .collect::<GResult<Vec<_>>>()?;
                        shared = Some((key, z));
                    }
                    let z = &shared.as_ref().expect("just set").1;
                    let x = eval_list(candidate, q, params)?;
                    frame.push(remove_vertical(&g, z, &x, q)?);
                }
                other => frame.push(other.eval(q, params)?),
            }
        }
        Ok(FramePoint { metric: g, frame })
    }
}

/// Build a split whose horizontals are the candidates made 𝒢-orthogonal to
/// the verticals. The vertical Gram block is checked at the chart's probe points.
pub fn orthogonalize_split(
    metric: &Arc<MetricField>,
    verticals: Vec<Vec<Expr>>,
    candidates: Vec<Vec<Expr>>,
    chart: &Chart,
    params: &[f64],
) -> GResult<FrameSplit> {
    let basis = Arc::new(VerticalBasis {
        verticals: verticals.clone(),
        metric: metric.clone(),
    });
    for q in chart.probe_points() {
        let (g, z) = basis.eval::<f64>(&q, params)?;
        let gzz: Mat<f64> = z
            .iter()
            .map(|a| z.iter().map(|b| linalg::bilinear(&g, a, b)).collect())
            .collect();
        if !gzz.is_empty() && linalg::cholesky(&gzz).is_none() {
            return Err(GeometryError::DegenerateFrame { point: q });
        }
    }
    Ok(FrameSplit {
        verticals: verticals.into_iter().map(VectorField::Components).collect(),
        horizontals: candidates
            .into_iter()
            .map(|candidate| VectorField::Orthogonalized {
                candidate,
                basis: basis.clone(),
            })
            .collect(),
    })
}
