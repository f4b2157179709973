use crate::geometry::Chart;
use serde::{Deserialize, Serialize};

/// A tensor-product grid over a shape chart's sampling box. Flat indices are
/// row-major: the last axis varies fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub names: Vec<String>,
    pub axes: Vec<Vec<f64>>,
}

impl Grid {
    /// `n` equally spaced points per axis, endpoints included.
    pub fn new(chart: &Chart, n: usize) -> Self {
        let n = n.max(2);
        let axes = chart
            .sample_box()
            .into_iter()
            .map(|(a, b)| (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
            .collect();
        Grid {
            names: chart.names.clone(),
            axes,
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut s = vec![1; shape.len()];
        for i in (0..shape.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * shape[i + 1];
        }
        s
    }

    pub fn multi(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for i in (0..shape.len()).rev() {
            idx[i] = rest % shape[i];
            rest /= shape[i];
        }
        idx
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        self.strides().iter().zip(multi).map(|(s, i)| s * i).sum()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax[i])
            .collect()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let ax = &self.axes[axis];
        (ax[ax.len() - 1] - ax[0]) / (ax.len() - 1) as f64
    }

    pub fn center(&self) -> Vec<f64> {
        self.axes.iter().map(|ax| 0.5 * (ax[0] + ax[ax.len() - 1])).collect()
    }

    /// Multilinear interpolation of node values, clamped to the grid box.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let d = self.dim();
        let strides = self.strides();
        let mut base = 0usize;
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let ax = &self.axes[a];
            let h = self.spacing(a);
            let t = ((x[a] - ax[0]) / h).clamp(0.0, (ax.len() - 1) as f64);
            let i = (t.floor() as usize).min(ax.len() - 2);
            frac[a] = t - i as f64;
            base += i * strides[a];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut off = 0;
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    off += strides[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * values[base + off];
            }
        }
        acc
    }
}
