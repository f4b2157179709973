//! The four rolling systems, emitted as configuration text and compiled
//! through [`SystemConfig`], plus their vector-form reference ODEs.
//!
//! Configuration coordinates use x-convention Euler angles `(phi, theta, psi)`
//! for the attitude. The body angular velocity pairs with the 1-forms
//!
//! ```text
//! Ω1 = sin(psi) sin(theta) dphi + cos(psi) dtheta
//! Ω2 = cos(psi) sin(theta) dphi − sin(psi) dtheta
//! Ω3 = cos(theta) dphi + dpsi
//! ```

pub mod oracles;

use crate::config::{CompileError, ConfigError, SystemConfig};
use crate::reduction::SymmetricSystem;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ExampleError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Physical parameters shared by the examples. Lengths and masses are in
/// any consistent unit system; inertia entries are mass times length squared.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExampleParams {
    /// Inertia tensor about the center of mass in body axes.
    pub inertia: [[f64; 3]; 3],
    pub m: f64,
    /// Radius `R` of the rolling ball, or of the fixed sphere for the planar body.
    pub radius: f64,
    /// Offset `ℓ` of the center of mass.
    pub offset: f64,
    /// Cylinder parameter `r`: radius of the cylinder for `r > 0`, interior rolling for `r < −R`.
    pub cylinder: f64,
}

impl ExampleParams {
    pub fn diagonal(i1: f64, i2: f64, i3: f64) -> Self {
        ExampleParams {
            inertia: [[i1, 0.0, 0.0], [0.0, i2, 0.0], [0.0, 0.0, i3]],
            m: 1.0,
            radius: 1.0,
            offset: 0.0,
            cylinder: 1.0,
        }
    }

    pub fn with_offset(mut self, l: f64) -> Self {
        self.offset = l;
        self
    }

    pub fn with_mass(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.radius = r;
        self
    }

    pub fn with_cylinder(mut self, r: f64) -> Self {
        self.cylinder = r;
        self
    }

    /// Sets the symmetric entry `I_ij = I_ji` (zero-based indices).
    pub fn with_product(mut self, i: usize, j: usize, v: f64) -> Self {
        self.inertia[i][j] = v;
        self.inertia[j][i] = v;
        self
    }

    fn check_common(&self) -> Result<(), ExampleError> {
        let bad = |s: &str| Err(ExampleError::InvalidParams(s.into()));
        let i = &self.inertia;
        if (0..3).any(|a| (0..3).any(|b| (i[a][b] - i[b][a]).abs() > 0.0 || !i[a][b].is_finite())) {
            return bad("inertia tensor must be symmetric and finite");
        }
        let rows: Vec<Vec<f64>> = i.iter().map(|r| r.to_vec()).collect();
        if crate::linalg::cholesky(&rows).is_none() {
            return bad("inertia tensor must be positive definite");
        }
        if !(self.m > 0.0) || !(self.radius > 0.0) {
            return bad("mass and radius must be positive");
        }
        if !self.offset.is_finite() || !self.cylinder.is_finite() {
            return bad("offset and cylinder parameter must be finite");
        }
        Ok(())
    }

    fn check_i12(&self) -> Result<(), ExampleError> {
        if self.inertia[0][1] != 0.0 {
            return Err(ExampleError::InvalidParams(
                "body axes must be rotated about E3 so that I12 = 0".into(),
            ));
        }
        Ok(())
    }

    fn check_diagonal(&self) -> Result<(), ExampleError> {
        let i = &self.inertia;
        if i[0][1] != 0.0 || i[0][2] != 0.0 || i[1][2] != 0.0 {
            return Err(ExampleError::InvalidParams(
                "body axes must be principal axes (diagonal inertia)".into(),
            ));
        }
        Ok(())
    }

    fn i(&self, a: usize, b: usize) -> f64 {
        self.inertia[a - 1][b - 1]
    }
}

fn params_block(list: &[(&str, f64)]) -> String {
    let mut s = String::from("[parameters]\n");
    for (n, v) in list {
        let _ = writeln!(s, "{n} = {v:?}");
    }
    s
}

const EULER_COFRAME: &str = "\
w1 = sin(psi)*sin(theta), cos(psi), 0, 0, 0
w2 = cos(psi)*sin(theta), -sin(psi), 0, 0, 0
w3 = cos(theta), 0, 1, 0, 0
";

const PLANAR_BODY: &str = "\
[chart.config]
phi = 0, 2*pi, 0.05
theta = 0, pi, 0.1
psi = 0, 2*pi, 0.05
X1 = -2.5*R, 2.5*R, 0.5*R
X2 = -2.5*R, 2.5*R, 0.5*R

[chart.shape]
X1 = -2.5*R, 2.5*R, 0.5*R
X2 = -2.5*R, 2.5*R, 0.5*R

# Body angular velocity followed by the in-plane contact coordinates.
[metric.coframe]
{COFRAME}dX1 = 0, 0, 0, 1, 0
dX2 = 0, 0, 0, 0, 1

[metric.inner]
w1, w1 = I11 + m*(X2^2 + (R + l)^2)
w2, w2 = I22 + m*(X1^2 + (R + l)^2)
w3, w3 = I33 + m*(X1^2 + X2^2)
w1, w2 = -m*X1*X2
w1, w3 = I13 - m*X1*(R + l)
w2, w3 = I23 - m*X2*(R + l)
w2, dX1 = m*(R + l)
w3, dX1 = -m*X2
w3, dX2 = m*X1
w1, dX2 = -m*(R + l)
dX1, dX1 = m
dX2, dX2 = m

[frame]
orthogonalize = true

# Z1 is the third left-invariant field; the candidates are d/dX1 - e2/R and d/dX2 + e1/R.
[frame.vertical]
Z1 = 0, 0, 1, 0, 0

[frame.horizontal]
Y1 = -cos(psi)/(R*sin(theta)), sin(psi)/R, cos(psi)*cos(theta)/(R*sin(theta)), 1, 0
Y2 = sin(psi)/(R*sin(theta)), cos(psi)/R, -sin(psi)*cos(theta)/(R*sin(theta)), 0, 1

[projection]
X1 = X1
X2 = X2

[section]
phi = 0
theta = pi/2
psi = 0
X1 = X1
X2 = X2

[fiber.1]
phi = 0.7
theta = 1.1
psi = -0.4
X1 = X1
X2 = X2

[fiber.2]
phi = -1.3
theta = 2
psi = 2.2
X1 = X1
X2 = X2

[fiber.3]
phi = 2.5
theta = 0.6
psi = 1
X1 = X1
X2 = X2
";

const CHAPLYGIN_TOP: &str = "\
[chart.config]
phi = 0, 2*pi, 0.05
theta = 0, pi, 0.1
psi = 0, 2*pi, 0.05
x = -10, 10, 1
y = -10, 10, 1

[chart.shape]
theta = 0, pi, 0.1
psi = 0, 2*pi, 0.05

# Body angular velocity and the space velocity of the center of mass.
[metric.coframe]
{COFRAME}u1 = l*sin(theta)*cos(phi), l*cos(theta)*sin(phi), 0, 1, 0
u2 = l*sin(theta)*sin(phi), -l*cos(theta)*cos(phi), 0, 0, 1
u3 = 0, -l*sin(theta), 0, 0, 0

[metric.inner]
w1, w1 = I11
w2, w2 = I22
w3, w3 = I33
w1, w2 = I12
w1, w3 = I13
w2, w3 = I23
u1, u1 = m
u2, u2 = m
u3, u3 = m

[frame]
orthogonalize = true

[frame.vertical]
Z1 = 1, 0, 0, 0, 0

[frame.horizontal]
X1 = 0, 1, 0, R*sin(phi), -R*cos(phi)
X2 = 0, 0, 1, -R*cos(phi)*sin(theta), -R*sin(phi)*sin(theta)

[projection]
theta = theta
psi = psi

[section]
phi = 0
theta = theta
psi = psi
x = 0
y = 0

[fiber.1]
phi = 0.9
theta = theta
psi = psi
x = 1.5
y = -2

[fiber.2]
phi = -2.1
theta = theta
psi = psi
x = -0.3
y = 4.2

[fiber.3]
phi = 3
theta = theta
psi = psi
x = 2.7
y = 0.8
";

const BALL_SHAPE_AND_METRIC: &str = "\
[chart.config]
phi = 0, 2*pi, 0.05
theta = 0, pi, 0.1
psi = 0, 2*pi, 0.05
z = -10, 10, 1
vt = 0, 2*pi, 0.05

[chart.shape]
xi = 0, 2*pi, 0.05
theta = 0, pi, 0.1
psi = 0, 2*pi, 0.05

# Body angular velocity, then the polar angle and height of the center.
[metric.coframe]
{COFRAME}dvt = 0, 0, 0, 0, 1
dz = 0, 0, 0, 1, 0

[metric.inner]
w1, w1 = I1
w2, w2 = I2
w3, w3 = I3
dvt, dvt = {VT}
dz, dz = m
";

const BALL_ORBITS: &str = "\
[projection]
xi = phi - vt
theta = theta
psi = psi

[section]
phi = xi
theta = theta
psi = psi
z = 0
vt = 0

[fiber.1]
phi = xi + 0.9
theta = theta
psi = psi
z = 1.7
vt = 0.9

[fiber.2]
phi = xi - 2.3
theta = theta
psi = psi
z = -4.1
vt = -2.3

[fiber.3]
phi = xi + 4
theta = theta
psi = psi
z = 0.35
vt = 4
";

const CYLINDER_FRAME: &str = "\
[frame]
orthogonalize = false

[frame.horizontal]
Y1 = -cos(theta)*sin(phi - vt)/sin(theta), cos(phi - vt), sin(phi - vt)/sin(theta), 0, 0
Y2 = -cos(theta)*cos(phi - vt)/sin(theta), -sin(phi - vt), cos(phi - vt)/sin(theta), R, 0
Y3 = 1, 0, 0, 0, R/(R + r)
";

const WIRE_FRAME: &str = "\
[frame]
orthogonalize = true

[frame.vertical]
Z1 = 1, 0, 0, 0, 1

[frame.horizontal]
Y1 = -cos(theta)*sin(phi - vt)/sin(theta), cos(phi - vt), sin(phi - vt)/sin(theta), 0, 0
Y2 = -cos(theta)*cos(phi - vt)/sin(theta), -sin(phi - vt), cos(phi - vt)/sin(theta), R, 0
";

fn assemble(name: &str, params: &[(&str, f64)], body: &[&str], tail: &str) -> String {
    let mut s = format!("name = {name}\n\n{}\n", params_block(params));
    for b in body {
        s.push_str(&b.replace("{COFRAME}", EULER_COFRAME));
        s.push('\n');
    }
    s.push_str(tail);
    s
}

/// Configuration text for the body with a planar face rolling on a sphere.
pub fn planar_body_text(p: &ExampleParams) -> Result<String, ExampleError> {
    p.check_common()?;
    p.check_i12()?;
    if p.offset < 0.0 {
        return Err(ExampleError::InvalidParams("offset must be non-negative".into()));
    }
    let diag = p.i(1, 3) == 0.0 && p.i(2, 3) == 0.0;
    let density = if diag && p.offset == 0.0 {
        Some("(I11*I22 + m*I11*X1^2 + m*I22*X2^2)*sqrt(I33 + m*(X1^2 + X2^2))")
    } else if diag && p.i(1, 1) == p.i(2, 2) {
        Some("(I11 + m*(X1^2 + X2^2) + m*l^2)*sqrt(I11*(I33 + m*(X1^2 + X2^2)) + m*l^2*I33)")
    } else {
        None
    };
    let tail = density.map_or(String::new(), |f| {
        format!("\n# Density with respect to dX1 dX2 dOmega1 dOmega2 dOmega3.\n[density]\nvolume = velocity\nf = {f}\n")
    });
    Ok(assemble(
        "planar_body_on_sphere",
        &[
            ("m", p.m),
            ("R", p.radius),
            ("l", p.offset),
            ("I11", p.i(1, 1)),
            ("I22", p.i(2, 2)),
            ("I33", p.i(3, 3)),
            ("I13", p.i(1, 3)),
            ("I23", p.i(2, 3)),
        ],
        &[PLANAR_BODY],
        &tail,
    ))
}

pub fn chaplygin_top_text(p: &ExampleParams) -> Result<String, ExampleError> {
    p.check_common()?;
    if !(p.offset >= 0.0 && p.offset <= p.radius) {
        return Err(ExampleError::InvalidParams("offset must lie in [0, R]".into()));
    }
    Ok(assemble(
        "chaplygin_top",
        &[
            ("m", p.m),
            ("R", p.radius),
            ("l", p.offset),
            ("I11", p.i(1, 1)),
            ("I22", p.i(2, 2)),
            ("I33", p.i(3, 3)),
            ("I12", p.i(1, 2)),
            ("I13", p.i(1, 3)),
            ("I23", p.i(2, 3)),
        ],
        &[CHAPLYGIN_TOP],
        "\n[oracle]\nkind = chaplygin_top\n",
    ))
}

fn homogeneous(p: &ExampleParams) -> bool {
    p.i(1, 1) == p.i(2, 2) && p.i(2, 2) == p.i(3, 3)
}

pub fn ball_on_cylinder_text(p: &ExampleParams) -> Result<String, ExampleError> {
    p.check_common()?;
    p.check_diagonal()?;
    if p.cylinder == 0.0 {
        return Err(ExampleError::InvalidParams(
            "r = 0 is the ball on a wire; use the wire builder".into(),
        ));
    }
    if !(p.cylinder > 0.0 || p.cylinder < -p.radius) {
        return Err(ExampleError::InvalidParams("cylinder parameter must satisfy r > 0 or r < -R".into()));
    }
    let mut tail = String::new();
    if homogeneous(p) {
        tail.push_str("\n[density]\nvolume = momentum\nf = sin(theta)\n");
    }
    tail.push_str("\n[oracle]\nkind = ball_on_cylinder\n");
    let metric = BALL_SHAPE_AND_METRIC.replace("{VT}", "m*(R + r)^2");
    Ok(assemble(
        "ball_on_cylinder",
        &[
            ("m", p.m),
            ("R", p.radius),
            ("r", p.cylinder),
            ("I1", p.i(1, 1)),
            ("I2", p.i(2, 2)),
            ("I3", p.i(3, 3)),
        ],
        &[&metric, CYLINDER_FRAME, BALL_ORBITS],
        &tail,
    ))
}

pub fn ball_on_wire_text(p: &ExampleParams) -> Result<String, ExampleError> {
    p.check_common()?;
    p.check_diagonal()?;
    if p.i(1, 1) != p.i(2, 2) {
        return Err(ExampleError::InvalidParams(
            "the wire analysis needs an axially symmetric ball (I1 = I2)".into(),
        ));
    }
    let mut tail = String::new();
    if homogeneous(p) {
        tail.push_str("\n[density]\nvolume = momentum\nf = sin(theta)\n");
    }
    tail.push_str("\n[oracle]\nkind = ball_on_wire\n");
    let metric = BALL_SHAPE_AND_METRIC.replace("{VT}", "m*R^2");
    Ok(assemble(
        "ball_on_wire",
        &[
            ("m", p.m),
            ("R", p.radius),
            ("I1", p.i(1, 1)),
            ("I2", p.i(2, 2)),
            ("I3", p.i(3, 3)),
        ],
        &[&metric, WIRE_FRAME, BALL_ORBITS],
        &tail,
    ))
}

fn compile(text: Result<String, ExampleError>) -> Result<(SystemConfig, SymmetricSystem), ExampleError> {
    let cfg = SystemConfig::parse(&text?)?;
    let sys = cfg.compile()?;
    Ok((cfg, sys))
}

pub fn planar_body_config(p: &ExampleParams) -> Result<SystemConfig, ExampleError> {
    Ok(SystemConfig::parse(&planar_body_text(p)?)?)
}

pub fn chaplygin_top_config(p: &ExampleParams) -> Result<SystemConfig, ExampleError> {
    Ok(SystemConfig::parse(&chaplygin_top_text(p)?)?)
}

pub fn ball_on_cylinder_config(p: &ExampleParams) -> Result<SystemConfig, ExampleError> {
    Ok(SystemConfig::parse(&ball_on_cylinder_text(p)?)?)
}

pub fn ball_on_wire_config(p: &ExampleParams) -> Result<SystemConfig, ExampleError> {
    Ok(SystemConfig::parse(&ball_on_wire_text(p)?)?)
}

/// Shape `(X1, X2)`, one vertical and two horizontal fields.
pub fn build_planar_body_on_sphere(p: &ExampleParams) -> Result<SymmetricSystem, ExampleError> {
    Ok(compile(planar_body_text(p))?.1)
}

/// Shape `(theta, psi)`: the Poisson sphere in spherical coordinates.
pub fn build_chaplygin_top(p: &ExampleParams) -> Result<SymmetricSystem, ExampleError> {
    Ok(compile(chaplygin_top_text(p))?.1)
}

/// Shape `(xi, theta, psi)` with `xi = phi − vt`; no vertical fields.
pub fn build_ball_on_cylinder(p: &ExampleParams) -> Result<SymmetricSystem, ExampleError> {
    Ok(compile(ball_on_cylinder_text(p))?.1)
}

/// Shape `(xi, theta, psi)`, vertical field `d/dphi + d/dvt`. The anchors
/// span a plane in the three-dimensional shape, so the family of 1-forms
/// has one free multiplier.
pub fn build_ball_on_wire(p: &ExampleParams) -> Result<SymmetricSystem, ExampleError> {
    Ok(compile(ball_on_wire_text(p))?.1)
}

/// A shipped example: file stem, parameters and configuration text.
pub struct ShippedExample {
    pub file: &'static str,
    pub text: String,
}

/// Every configuration file distributed with the tool.
pub fn shipped_examples() -> Vec<ShippedExample> {
    let d = ExampleParams::diagonal;
    let entries: Vec<(&'static str, Result<String, ExampleError>)> = vec![
        ("planar_body_flat", planar_body_text(&d(1.0, 2.0, 3.0))),
        ("planar_body_axisymmetric", planar_body_text(&d(2.0, 2.0, 3.0).with_offset(0.3))),
        ("planar_body_generic", planar_body_text(&d(1.0, 2.0, 3.0).with_offset(0.3))),
        ("planar_body_tilted", planar_body_text(&d(1.0, 2.0, 3.0).with_product(0, 2, 0.5))),
        ("chaplygin_sphere", chaplygin_top_text(&d(1.0, 2.0, 3.0))),
        ("chaplygin_top_axisymmetric", chaplygin_top_text(&d(2.0, 2.0, 3.0).with_offset(0.1))),
        ("chaplygin_top_generic", chaplygin_top_text(&d(1.0, 2.0, 3.0).with_offset(0.1))),
        ("ball_on_cylinder_homogeneous", ball_on_cylinder_text(&d(1.0, 1.0, 1.0))),
        ("ball_on_cylinder_generic", ball_on_cylinder_text(&d(1.0, 2.0, 3.0))),
        ("ball_on_cylinder_axisymmetric", ball_on_cylinder_text(&d(1.0, 1.0, 2.0))),
        ("ball_on_wire_homogeneous", ball_on_wire_text(&d(1.0, 1.0, 1.0))),
        ("ball_on_wire_axisymmetric", ball_on_wire_text(&d(1.0, 1.0, 2.0))),
    ];
    entries
        .into_iter()
        .map(|(file, t)| ShippedExample {
            file,
            text: t.expect("shipped parameters are valid"),
        })
        .collect()
}
