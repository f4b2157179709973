//! Scalar arithmetic shared by plain evaluation and forward-mode differentiation.
//!
//! Everything numeric in the crate is written against [`Scalar`], so a single
//! code path evaluates values (`f64`), first derivatives (`Dual<f64>`), and,
//! where an outer derivative of an already-differentiated quantity is needed,
//! nested duals such as `Dual<Dual<f64>>`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn cst(x: f64) -> Self;
    /// The underlying real value, stripped of all derivative parts.
    fn re(&self) -> f64;
    /// True when every derivative part (at every nesting level) is zero.
    fn is_constant(&self) -> bool;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// `self^e` for a strictly positive base.
    fn powf(self, e: Self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(x: f64) -> Self {
        x
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn is_constant(&self) -> bool {
        true
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn tan(self) -> Self {
        f64::tan(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
}

/// A dual number `v + ε d` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub v: S,
    pub d: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(v: S, d: S) -> Self {
        Dual { v, d }
    }
    pub fn constant(v: S) -> Self {
        Dual { v, d: S::zero() }
    }
    pub fn variable(v: S) -> Self {
        Dual { v, d: S::one() }
    }
}

/// Lift a point into dual numbers seeded along `dir`.
pub fn seed<S: Scalar>(x: &[S], dir: &[S]) -> Vec<Dual<S>> {
    x.iter().zip(dir).map(|(&v, &d)| Dual::new(v, d)).collect()
}

/// Lift a point into dual numbers seeded along coordinate axis `k`.
pub fn seed_axis<S: Scalar>(x: &[S], k: usize) -> Vec<Dual<S>> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| if i == k { Dual::variable(v) } else { Dual::constant(v) })
        .collect()
}

pub fn values<S: Scalar>(x: &[Dual<S>]) -> Vec<S> {
    x.iter().map(|z| z.v).collect()
}

pub fn derivs<S: Scalar>(x: &[Dual<S>]) -> Vec<S> {
    x.iter().map(|z| z.d).collect()
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.v, -self.d)
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    #[inline]
    fn cst(x: f64) -> Self {
        Dual::constant(S::cst(x))
    }
    #[inline]
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn is_constant(&self) -> bool {
        self.v.is_constant() && self.d.re() == 0.0 && self.d.is_constant()
    }
    fn sin(self) -> Self {
        Dual::new(self.v.sin(), self.v.cos() * self.d)
    }
    fn cos(self) -> Self {
        Dual::new(self.v.cos(), -(self.v.sin() * self.d))
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        Dual::new(t, (S::one() + t * t) * self.d)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, self.d / (s + s))
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, e * self.d)
    }
    fn ln(self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
    fn abs(self) -> Self {
        if self.v.re() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => {
                let pm1 = self.v.powi(n - 1);
                Dual::new(pm1 * self.v, pm1 * self.d.scale(n as f64))
            }
        }
    }
    fn powf(self, e: Self) -> Self {
        let r = self.v.powf(e.v);
        // d(x^y) = y x^(y-1) dx + x^y ln(x) dy
        let mut d = e.v * self.v.powf(e.v - S::one()) * self.d;
        if !(e.d.re() == 0.0 && e.d.is_constant()) {
            d = d + r * self.v.ln() * e.d;
        }
        Dual::new(r, d)
    }
}

/// A value with its gradient along `N` independent directions, so one
/// evaluation yields a full Jacobian row instead of `N` dual passes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        Jet { v, d: [0.0; N] }
    }
    /// The `k`-th coordinate variable with value `v`.
    pub fn axis(v: f64, k: usize) -> Self {
        let mut d = [0.0; N];
        d[k] = 1.0;
        Jet { v, d }
    }
    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        Jet {
            v: f,
            d: self.d.map(|x| df * x),
        }
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Jet {
            v: self.v + o.v,
            d: std::array::from_fn(|k| self.d[k] + o.d[k]),
        }
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Jet {
            v: self.v - o.v,
            d: std::array::from_fn(|k| self.d[k] - o.d[k]),
        }
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Jet {
            v: self.v * o.v,
            d: std::array::from_fn(|k| self.v * o.d[k] + self.d[k] * o.v),
        }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Jet {
            v: q,
            d: std::array::from_fn(|k| (self.d[k] - q * o.d[k]) / o.v),
        }
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Jet {
            v: -self.v,
            d: self.d.map(|x| -x),
        }
    }
}

impl<const N: usize> Scalar for Jet<N> {
    #[inline]
    fn cst(x: f64) -> Self {
        Jet::constant(x)
    }
    #[inline]
    fn re(&self) -> f64 {
        self.v
    }
    fn is_constant(&self) -> bool {
        self.d.iter().all(|&x| x == 0.0)
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s)
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        self.chain(t, 1.0 + t * t)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => {
                let pm1 = self.v.powi(n - 1);
                self.chain(pm1 * self.v, n as f64 * pm1)
            }
        }
    }
    fn powf(self, e: Self) -> Self {
        let r = self.v.powf(e.v);
        let dx = e.v * self.v.powf(e.v - 1.0);
        let mut out = self.chain(r, dx);
        if !e.is_constant() {
            let l = r * self.v.ln();
            for (o, de) in out.d.iter_mut().zip(e.d) {
                *o += l * de;
            }
        }
        out
    }
}

/// Lift a point into jets seeded along the coordinate axes.
pub fn seed_jet<const N: usize>(x: &[f64]) -> Vec<Jet<N>> {
    x.iter().enumerate().map(|(k, &v)| Jet::axis(v, k)).collect()
}
