//! Vector-form equations of motion in body variables, used as references
//! independent of the frame-based reduction.

use super::ExampleParams;
use crate::expr::{scalar, Dual, Scalar};

pub type V3 = [f64; 3];

pub fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot3(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec3(m: &[[f64; 3]; 3], v: &V3) -> V3 {
    [dot3(&m[0], v), dot3(&m[1], v), dot3(&m[2], v)]
}

fn solve3(m: &[[f64; 3]; 3], b: &V3) -> V3 {
    let rows: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
    let x = crate::linalg::lu_solve(&rows, b).expect("3x3 system is nonsingular");
    [x[0], x[1], x[2]]
}

fn axpy(a: &V3, s: f64, b: &V3) -> V3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Attitude matrix for x-convention Euler angles.
pub fn rotation<S: Scalar>(phi: S, theta: S, psi: S) -> [[S; 3]; 3] {
    let (sf, cf) = (phi.sin(), phi.cos());
    let (st, ct) = (theta.sin(), theta.cos());
    let (sp, cp) = (psi.sin(), psi.cos());
    [
        [cp * cf - ct * sf * sp, -sp * cf - ct * sf * cp, st * sf],
        [cp * sf + ct * cf * sp, -sp * sf + ct * cf * cp, -st * cf],
        [st * sp, st * cp, ct],
    ]
}

/// Body angular velocity from Euler angles and their rates, by the closed form.
pub fn body_angular_velocity(angles: &V3, rates: &V3) -> V3 {
    let [_, th, ps] = *angles;
    let [dphi, dth, dps] = *rates;
    [
        dth * ps.cos() + dphi * ps.sin() * th.sin(),
        -dth * ps.sin() + dphi * ps.cos() * th.sin(),
        dphi * th.cos() + dps,
    ]
}

/// Body angular velocity as the axial vector of `g⁻¹ ġ`, with `ġ` from dual numbers.
pub fn body_angular_velocity_from_matrix(angles: &V3, rates: &V3) -> V3 {
    let x = scalar::seed(angles, rates);
    let g: [[Dual<f64>; 3]; 3] = rotation(x[0], x[1], x[2]);
    // Ω̂ = gᵀ ġ
    let w = |i: usize, j: usize| (0..3).map(|k| g[k][i].v * g[k][j].d).sum::<f64>();
    [w(2, 1), w(0, 2), w(1, 0)]
}

/// Poisson vector `γ = g⁻¹ e₃` in terms of the spherical shape coordinates.
pub fn poisson_vector(theta: f64, psi: f64) -> V3 {
    [theta.sin() * psi.sin(), theta.sin() * psi.cos(), theta.cos()]
}

/// Inhomogeneous ball rolling on a plane, center of mass offset `ℓ` along the body axis.
#[derive(Clone, Copy, Debug)]
pub struct ChaplyginTop {
    pub p: ExampleParams,
}

impl ChaplyginTop {
    pub fn new(p: ExampleParams) -> Self {
        ChaplyginTop { p }
    }

    /// Contact point to center of mass, body frame.
    pub fn rho(&self, gamma: &V3) -> V3 {
        let r = self.p.radius;
        [r * gamma[0], r * gamma[1], r * gamma[2] + self.p.offset]
    }

    /// Inertia about the contact point, `𝕀 + m(|ρ|² 1 − ρρᵀ)`.
    pub fn contact_inertia(&self, gamma: &V3) -> [[f64; 3]; 3] {
        let rho = self.rho(gamma);
        let rr = dot3(&rho, &rho);
        let mut j = self.p.inertia;
        for (a, row) in j.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v += self.p.m * (if a == b { rr } else { 0.0 } - rho[a] * rho[b]);
            }
        }
        j
    }

    pub fn omega_from_k(&self, k: &V3, gamma: &V3) -> V3 {
        solve3(&self.contact_inertia(gamma), k)
    }

    pub fn k_from_omega(&self, omega: &V3, gamma: &V3) -> V3 {
        mat_vec3(&self.contact_inertia(gamma), omega)
    }

    /// State `(K, γ)`.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let k = [x[0], x[1], x[2]];
        let g = [x[3], x[4], x[5]];
        let w = self.omega_from_k(&k, &g);
        let rho = self.rho(&g);
        let kd = axpy(
            &cross(&k, &w),
            self.p.m * self.p.radius,
            &cross(&cross(&g, &w), &cross(&w, &rho)),
        );
        let gd = cross(&g, &w);
        vec![kd[0], kd[1], kd[2], gd[0], gd[1], gd[2]]
    }

    /// `½⟨K, Ω⟩`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let k = [x[0], x[1], x[2]];
        let g = [x[3], x[4], x[5]];
        0.5 * dot3(&k, &self.omega_from_k(&k, &g))
    }

    /// The same flow written in `(γ, Ω)`.
    pub fn rhs_gamma_omega(&self, x: &[f64]) -> Vec<f64> {
        let g = [x[0], x[1], x[2]];
        let w = [x[3], x[4], x[5]];
        let k = self.k_from_omega(&w, &g);
        let kx = self.rhs(&[k[0], k[1], k[2], g[0], g[1], g[2]]);
        let kd = [kx[0], kx[1], kx[2]];
        let gd = [kx[3], kx[4], kx[5]];
        // K̇ = J Ω̇ + J̇ Ω with J̇ = m(2⟨ρ,ρ̇⟩1 − ρ̇ρᵀ − ρρ̇ᵀ), ρ̇ = R γ̇.
        let rho = self.rho(&g);
        let rd = [self.p.radius * gd[0], self.p.radius * gd[1], self.p.radius * gd[2]];
        let m = self.p.m;
        let jd_w: V3 = std::array::from_fn(|a| {
            m * (2.0 * dot3(&rho, &rd) * w[a] - rd[a] * dot3(&rho, &w) - rho[a] * dot3(&rd, &w))
        });
        let wd = solve3(&self.contact_inertia(&g), &axpy(&kd, -1.0, &jd_w));
        vec![gd[0], gd[1], gd[2], wd[0], wd[1], wd[2]]
    }

    /// `(I₁₁ + m|ρ|²) √(I₁₁I₃₃ + m⟨ρ, 𝕀ρ⟩)` as an expression source over
    /// `g1 g2 g3 W1 W2 W3` with parameters `m R l I11 I22 I33 I12 I13 I23`.
    pub const DENSITY_GAMMA_OMEGA: &'static str = "(I11 + m*((R*g1)^2 + (R*g2)^2 + (R*g3 + l)^2))*sqrt(I11*I33 + m*(I11*(R*g1)^2 + I22*(R*g2)^2 + I33*(R*g3 + l)^2 + 2*I12*(R*g1)*(R*g2) + 2*I13*(R*g1)*(R*g3 + l) + 2*I23*(R*g2)*(R*g3 + l)))";
    pub const STATE_NAMES: [&'static str; 6] = ["g1", "g2", "g3", "W1", "W2", "W3"];
    pub const PARAM_NAMES: [&'static str; 9] = ["m", "R", "l", "I11", "I22", "I33", "I12", "I13", "I23"];

    pub fn param_values(&self) -> Vec<f64> {
        let i = &self.p.inertia;
        vec![
            self.p.m,
            self.p.radius,
            self.p.offset,
            i[0][0],
            i[1][1],
            i[2][2],
            i[0][1],
            i[0][2],
            i[1][2],
        ]
    }
}

/// Balanced ball rolling on a vertical cylinder (`r ≠ 0`) or wire (`r = 0`),
/// in the modified Poisson vectors `(α, β, γ)` and body angular velocity.
#[derive(Clone, Copy, Debug)]
pub struct RollingBall {
    pub p: ExampleParams,
    pub r: f64,
}

impl RollingBall {
    pub fn cylinder(p: ExampleParams) -> Self {
        RollingBall { p, r: p.cylinder }
    }

    pub fn wire(p: ExampleParams) -> Self {
        RollingBall { p, r: 0.0 }
    }

    /// State `(Ω, α, β, γ)` in `ℝ¹²`.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let w = [x[0], x[1], x[2]];
        let al = [x[3], x[4], x[5]];
        let be = [x[6], x[7], x[8]];
        let ga = [x[9], x[10], x[11]];
        let (m, rr) = (self.p.m, self.p.radius);
        let c = rr / (rr + self.r);
        let mut a = self.p.inertia;
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += m * rr * rr;
        }
        let iw = mat_vec3(&self.p.inertia, &w);
        let gw = dot3(&ga, &w);
        let base = axpy(&cross(&iw, &w), m * rr * rr * c * gw * dot3(&al, &w), &be);
        let ainv_al = solve3(&a, &al);
        let s = dot3(&base, &ainv_al) / (1.0 - m * rr * rr * dot3(&ainv_al, &al));
        let wd = solve3(&a, &axpy(&base, m * rr * rr * s, &al));
        let ad = axpy(&cross(&al, &w), c * gw, &be);
        let bd = axpy(&cross(&be, &w), -c * gw, &al);
        let gd = cross(&ga, &w);
        [wd, ad, bd, gd].concat()
    }

    /// `½⟨𝕀Ω, Ω⟩ + ½mR²(⟨γ,Ω⟩² + ⟨β,Ω⟩²)`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let w = [x[0], x[1], x[2]];
        let be = [x[6], x[7], x[8]];
        let ga = [x[9], x[10], x[11]];
        let (m, rr) = (self.p.m, self.p.radius);
        0.5 * dot3(&mat_vec3(&self.p.inertia, &w), &w)
            + 0.5 * m * rr * rr * (dot3(&ga, &w).powi(2) + dot3(&be, &w).powi(2))
    }

    /// Largest deviation of `(α, β, γ)` from an orthonormal triple.
    pub fn frame_defect(x: &[f64]) -> f64 {
        let v = [[x[3], x[4], x[5]], [x[6], x[7], x[8]], [x[9], x[10], x[11]]];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot3(&v[i], &v[j]) - want).abs());
            }
        }
        worst
    }

    /// `(α, β, γ)` for attitude angles and polar angle `vt`.
    pub fn poisson_frame(angles: &V3, vt: f64) -> [V3; 3] {
        let g = rotation(angles[0], angles[1], angles[2]);
        // g⁻¹ e_k is the k-th row of g.
        let e1 = g[0];
        let e2 = g[1];
        let alpha = axpy(&[vt.cos() * e1[0], vt.cos() * e1[1], vt.cos() * e1[2]], vt.sin(), &e2);
        let beta = axpy(&[-vt.sin() * e1[0], -vt.sin() * e1[1], -vt.sin() * e1[2]], vt.cos(), &e2);
        [alpha, beta, g[2]]
    }
}
