//! Small dense linear algebra over any [`Scalar`], so that Gram solves can be
//! carried through dual numbers. Matrices are row-major `Vec<Vec<S>>`; all
//! sizes in this crate are single digits.

use crate::expr::Scalar;

pub type Mat<S> = Vec<Vec<S>>;

pub fn zeros<S: Scalar>(r: usize, c: usize) -> Mat<S> {
    vec![vec![S::zero(); c]; r]
}

pub fn identity<S: Scalar>(n: usize) -> Mat<S> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = S::one();
    }
    m
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

pub fn mat_vec<S: Scalar>(m: &Mat<S>, v: &[S]) -> Vec<S> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn mat_mul<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Mat<S> {
    let bt = transpose(b);
    a.iter().map(|row| bt.iter().map(|col| dot(row, col)).collect()).collect()
}

/// `uᵀ M v`.
pub fn bilinear<S: Scalar>(m: &Mat<S>, u: &[S], v: &[S]) -> S {
    dot(u, &mat_vec(m, v))
}

pub fn transpose<S: Scalar>(m: &Mat<S>) -> Mat<S> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len())
        .map(|j| m.iter().map(|row| row[j]).collect())
        .collect()
}

/// Lower Cholesky factor, or `None` if the matrix is not numerically SPD.
pub fn cholesky<S: Scalar>(a: &Mat<S>) -> Option<Mat<S>> {
    let n = a.len();
    let mut l = zeros::<S>(n, n);
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d = d - l[j][k] * l[j][k];
        }
        let dr = d.re();
        if !(dr > 0.0) || !dr.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[j][j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            l[i][j] = s / ljj;
        }
    }
    Some(l)
}

pub fn chol_solve<S: Scalar>(l: &Mat<S>, b: &[S]) -> Vec<S> {
    let n = l.len();
    let mut y = vec![S::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

pub fn chol_inverse<S: Scalar>(l: &Mat<S>) -> Mat<S> {
    let n = l.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![S::zero(); n];
        e[j] = S::one();
        cols.push(chol_solve(l, &e));
    }
    // The inverse is symmetric; symmetrize to remove roundoff asymmetry.
    let mut inv = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv[i][j] = (cols[j][i] + cols[i][j]).scale(0.5);
        }
    }
    inv
}

pub fn chol_det<S: Scalar>(l: &Mat<S>) -> S {
    let mut d = S::one();
    for (i, row) in l.iter().enumerate() {
        d = d * row[i] * row[i];
    }
    d
}

/// Determinant by Gaussian elimination with partial pivoting (real parts pick pivots).
pub fn det<S: Scalar>(a: &Mat<S>) -> S {
    let n = a.len();
    let mut m = a.clone();
    let mut d = S::one();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].re().abs().total_cmp(&m[j][c].re().abs()))
            .unwrap_or(c);
        if m[p][c].re() == 0.0 {
            return S::zero();
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d = d * m[c][c];
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                let t = m[c][k];
                m[r][k] = m[r][k] - f * t;
            }
        }
    }
    d
}

/// Solve a general square system by partial pivoting; `None` if singular.
pub fn lu_solve<S: Scalar>(a: &Mat<S>, b: &[S]) -> Option<Vec<S>> {
    let n = a.len();
    let mut m = a.clone();
    let mut x: Vec<S> = b.to_vec();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].re().abs().total_cmp(&m[j][c].re().abs()))?;
        if m[p][c].re() == 0.0 {
            return None;
        }
        m.swap(p, c);
        x.swap(p, c);
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                let t = m[c][k];
                m[r][k] = m[r][k] - f * t;
            }
            let t = x[c];
            x[r] = x[r] - f * t;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s = s - m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    Some(x)
}

pub fn to_f64(m: &Mat<impl Scalar>) -> Mat<f64> {
    m.iter().map(|r| r.iter().map(|x| x.re()).collect()).collect()
}

pub fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}
