//! Line-oriented system description files.
//!
//! A file is a sequence of `key = value` lines grouped under `[section]`
//! headers, with `#` starting a comment. The recognised sections are:
//!
//! ```text
//! name = ...                      (before any section)
//! [parameters]        m = 1.0
//! [chart.config]      theta = 0, pi, 0.1        (lower, upper, margin)
//! [chart.shape]       X1 = -2.5*R, 2.5*R, 0.5*R
//! [metric]            theta, theta = I1         (upper triangle, others zero)
//! [metric.coframe]    e1 = sin(psi), cos(psi), 0, 0, 0   (any number of 1-forms)
//! [metric.inner]      e1, e2 = -m*X1*X2
//! [frame]             orthogonalize = true
//! [frame.vertical]    Z1 = 0, 0, 1, 0, 0
//! [frame.horizontal]  Y1 = ...
//! [projection]        X1 = X1                   (one line per shape coordinate)
//! [section]           phi = 0                   (one line per configuration coordinate)
//! [fiber.1]           phi = 0.7                 (same keys as [section])
//! [density]           volume = velocity
//!                     f = (I11 + m*X1^2)*sqrt(I33)
//! [oracle]            kind = chaplygin_top
//! ```
//!
//! `pi` is available in every expression unless declared as a parameter.
//! Everything is parsed and name-checked before any numeric work happens.

use crate::detector::{MeasureCandidate, Volume};
use crate::expr::{self, Expr};
use crate::geometry::{self, Chart, FrameSplit, GeometryError, MetricField, VectorField};
use crate::reduction::{ReductionError, SymmetricSystem};
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CompileError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        column,
        message: message.into(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoordDecl {
    pub name: String,
    pub lower: Expr,
    pub upper: Expr,
    pub margin: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub components: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetricDecl {
    /// Upper triangle in the coordinate frame, row-major.
    Components(Vec<Expr>),
    /// Named coframe rows and the upper triangle of the inner matrix.
    Coframe {
        rows: Vec<FieldDecl>,
        inner_upper: Vec<Expr>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityDecl {
    pub volume: Volume,
    /// Over the shape coordinates followed by `p_<field>` for every frame field.
    pub f: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub q_coords: Vec<CoordDecl>,
    pub shape_coords: Vec<CoordDecl>,
    pub metric: MetricDecl,
    pub orthogonalize: bool,
    pub verticals: Vec<FieldDecl>,
    pub horizontals: Vec<FieldDecl>,
    /// One expression per shape coordinate, over configuration coordinates.
    pub projection: Vec<Expr>,
    /// One expression per configuration coordinate, over shape coordinates.
    pub section: Vec<Expr>,
    pub fibers: Vec<Vec<Expr>>,
    pub density: Option<DensityDecl>,
    pub oracle: Option<String>,
}

struct Entry {
    key: String,
    value: String,
    line: usize,
    key_col: usize,
    value_col: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn strip_comment(line: &str) -> &str {
    line.find('#').map_or(line, |i| &line[..i])
}

fn split_raw(src: &str) -> Result<(Vec<Entry>, Vec<Section>), ConfigError> {
    let mut head = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let ln = i + 1;
        let text = strip_comment(raw);
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = text.len() - text.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(ln, indent + 1, "section header is missing ']'");
            };
            let name = name.trim();
            if name.is_empty() {
                return err(ln, indent + 1, "empty section name");
            }
            if sections.iter().any(|s| s.name == name) {
                return err(ln, indent + 1, format!("section [{name}] appears twice"));
            }
            sections.push(Section {
                name: name.to_string(),
                line: ln,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = text.find('=') else {
            return err(ln, indent + 1, "expected 'key = value' or a [section] header");
        };
        let key_part = &text[..eq];
        let value_part = &text[eq + 1..];
        let key = key_part.trim();
        if key.is_empty() {
            return err(ln, indent + 1, "missing key before '='");
        }
        let value = value_part.trim();
        let value_col = eq + 2 + (value_part.len() - value_part.trim_start().len());
        if value.is_empty() {
            return err(ln, eq + 2, format!("missing value for '{key}'"));
        }
        let entry = Entry {
            key: key.to_string(),
            value: value.to_string(),
            line: ln,
            key_col: indent + 1,
            value_col,
        };
        match sections.last_mut() {
            Some(s) => s.entries.push(entry),
            None => head.push(entry),
        }
    }
    Ok((head, sections))
}

/// Splits `s` at commas outside parentheses, returning each piece with its
/// byte offset relative to `s` (leading whitespace skipped).
fn split_list(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((start, &s[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &s[start..]));
    out.into_iter()
        .map(|(o, piece)| {
            let lead = piece.len() - piece.trim_start().len();
            (o + lead, piece.trim())
        })
        .collect()
}

/// Names available to the expressions of one section.
struct Scope<'a> {
    vars: Vec<&'a str>,
    params: &'a [&'a str],
}

impl Scope<'_> {
    fn parse(&self, src: &str, line: usize, col: usize) -> Result<Expr, ConfigError> {
        if src.is_empty() {
            return err(line, col, "empty expression");
        }
        expr::parse(src, &self.vars, self.params).map_err(|e| ConfigError {
            line,
            column: col + e.span().start,
            message: e.to_string(),
        })
    }

    fn parse_list(&self, e: &Entry, expected: Option<usize>) -> Result<Vec<Expr>, ConfigError> {
        let items = split_list(&e.value);
        if let Some(n) = expected {
            if items.len() != n {
                return err(
                    e.line,
                    e.value_col,
                    format!("'{}' needs {n} comma-separated entries, found {}", e.key, items.len()),
                );
            }
        }
        items
            .iter()
            .map(|(off, piece)| self.parse(piece, e.line, e.value_col + off))
            .collect()
    }
}

fn is_identifier(s: &str) -> bool {
    let mut ch = s.chars();
    matches!(ch.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && ch.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

const SECTIONS: [&str; 12] = [
    "parameters",
    "chart.config",
    "chart.shape",
    "metric",
    "metric.coframe",
    "metric.inner",
    "frame",
    "frame.vertical",
    "frame.horizontal",
    "projection",
    "section",
    "density",
];

impl SystemConfig {
    pub fn parse(src: &str) -> Result<SystemConfig, ConfigError> {
        let (head, sections) = split_raw(src)?;
        for s in &sections {
            let known = SECTIONS.contains(&s.name.as_str())
                || s.name == "oracle"
                || s.name.strip_prefix("fiber.").is_some_and(|t| !t.is_empty());
            if !known {
                return err(s.line, 1, format!("unknown section [{}]", s.name));
            }
        }
        let get = |n: &str| sections.iter().find(|s| s.name == n);
        let require = |n: &str| {
            get(n).ok_or_else(|| ConfigError {
                line: sections.last().map_or(1, |s| s.line),
                column: 1,
                message: format!("missing section [{n}]"),
            })
        };

        let mut name = None;
        for e in &head {
            if e.key != "name" {
                return err(e.line, e.key_col, format!("unexpected top-level key '{}'", e.key));
            }
            name = Some(e.value.clone());
        }
        let name = name.ok_or_else(|| ConfigError {
            line: 1,
            column: 1,
            message: "missing 'name = ...' before the first section".into(),
        })?;

        // Parameters.
        let mut params: Vec<(String, f64)> = Vec::new();
        if let Some(s) = get("parameters") {
            for e in &s.entries {
                if !is_identifier(&e.key) {
                    return err(e.line, e.key_col, format!("'{}' is not a valid parameter name", e.key));
                }
                if params.iter().any(|(n, _)| *n == e.key) {
                    return err(e.line, e.key_col, format!("parameter '{}' declared twice", e.key));
                }
                let v: f64 = e.value.parse().map_err(|_| ConfigError {
                    line: e.line,
                    column: e.value_col,
                    message: format!("'{}' is not a number", e.value),
                })?;
                if !v.is_finite() {
                    return err(e.line, e.value_col, "parameter values must be finite");
                }
                params.push((e.key.clone(), v));
            }
        }
        let mut pnames: Vec<&str> = params.iter().map(|(n, _)| n.as_str()).collect();
        if !pnames.contains(&"pi") {
            pnames.push("pi");
        }
        let pscope = Scope {
            vars: Vec::new(),
            params: &pnames,
        };

        let coords = |sec: &Section| -> Result<Vec<CoordDecl>, ConfigError> {
            let mut out: Vec<CoordDecl> = Vec::new();
            for e in &sec.entries {
                if !is_identifier(&e.key) {
                    return err(e.line, e.key_col, format!("'{}' is not a valid coordinate name", e.key));
                }
                if out.iter().any(|c| c.name == e.key) || pnames.contains(&e.key.as_str()) {
                    return err(e.line, e.key_col, format!("name '{}' is already in use", e.key));
                }
                let v = pscope.parse_list(e, Some(3))?;
                let mut it = v.into_iter();
                out.push(CoordDecl {
                    name: e.key.clone(),
                    lower: it.next().expect("three entries"),
                    upper: it.next().expect("three entries"),
                    margin: it.next().expect("three entries"),
                });
            }
            if out.is_empty() {
                return err(sec.line, 1, format!("[{}] declares no coordinates", sec.name));
            }
            Ok(out)
        };
        let q_coords = coords(require("chart.config")?)?;
        let shape_coords = coords(require("chart.shape")?)?;
        let qnames: Vec<&str> = q_coords.iter().map(|c| c.name.as_str()).collect();
        let snames: Vec<&str> = shape_coords.iter().map(|c| c.name.as_str()).collect();
        let m = qnames.len();
        let qscope = Scope {
            vars: qnames.clone(),
            params: &pnames,
        };
        let sscope = Scope {
            vars: snames.clone(),
            params: &pnames,
        };

        // Metric.
        let pair = |e: &Entry, names: &[&str]| -> Result<(usize, usize), ConfigError> {
            let parts = split_list(&e.key);
            if parts.len() != 2 {
                return err(e.line, e.key_col, format!("metric key '{}' must be 'a, b'", e.key));
            }
            let idx = |(off, n): (usize, &str)| {
                names.iter().position(|x| *x == n).ok_or_else(|| ConfigError {
                    line: e.line,
                    column: e.key_col + off,
                    message: format!("unknown index '{n}'"),
                })
            };
            let (a, b) = (idx(parts[0])?, idx(parts[1])?);
            Ok((a.min(b), a.max(b)))
        };
        let fill_upper = |sec: &Section, names: &[&str], scope: &Scope| -> Result<Vec<Expr>, ConfigError> {
            let n = names.len();
            let mut upper: Vec<Option<Expr>> = vec![None; n * (n + 1) / 2];
            for e in &sec.entries {
                let (a, b) = pair(e, names)?;
                let k = geometry::upper_index(n, a, b);
                if upper[k].is_some() {
                    return err(e.line, e.key_col, format!("entry ({}, {}) given twice", names[a], names[b]));
                }
                upper[k] = Some(scope.parse(&e.value, e.line, e.value_col)?);
            }
            Ok(upper.into_iter().map(|x| x.unwrap_or_else(|| Expr::num(0.0))).collect())
        };
        let metric = match (get("metric"), get("metric.coframe"), get("metric.inner")) {
            (Some(s), None, None) => MetricDecl::Components(fill_upper(s, &qnames, &qscope)?),
            (None, Some(cf), Some(inner)) => {
                let rows = fields(cf, &qscope, m, &pnames, &qnames)?;
                if rows.is_empty() {
                    return err(cf.line, 1, "[metric.coframe] declares no 1-forms");
                }
                let rnames: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
                let inner_upper = fill_upper(inner, &rnames, &qscope)?;
                MetricDecl::Coframe { rows, inner_upper }
            }
            (Some(s), _, _) => return err(s.line, 1, "[metric] cannot be combined with a coframe metric"),
            (None, Some(s), None) => return err(s.line, 1, "[metric.coframe] needs a [metric.inner] section"),
            (None, None, Some(s)) => return err(s.line, 1, "[metric.inner] needs a [metric.coframe] section"),
            (None, None, None) => {
                return err(
                    sections.last().map_or(1, |s| s.line),
                    1,
                    "missing [metric] or [metric.coframe]/[metric.inner]",
                )
            }
        };

        // Frame.
        let mut orthogonalize = false;
        if let Some(s) = get("frame") {
            for e in &s.entries {
                match (e.key.as_str(), e.value.as_str()) {
                    ("orthogonalize", "true") => orthogonalize = true,
                    ("orthogonalize", "false") => orthogonalize = false,
                    ("orthogonalize", _) => return err(e.line, e.value_col, "expected true or false"),
                    _ => return err(e.line, e.key_col, format!("unknown key '{}' in [frame]", e.key)),
                }
            }
        }
        let verticals = match get("frame.vertical") {
            Some(s) => fields(s, &qscope, m, &pnames, &qnames)?,
            None => Vec::new(),
        };
        let hs = require("frame.horizontal")?;
        let horizontals = fields(hs, &qscope, m, &pnames, &qnames)?;
        if horizontals.is_empty() {
            return err(hs.line, 1, "at least one horizontal field is required");
        }
        if let Some(dup) = horizontals
            .iter()
            .find(|h| verticals.iter().any(|v| v.name == h.name))
        {
            return err(hs.line, 1, format!("field name '{}' used twice", dup.name));
        }

        // Projection and sections.
        let keyed = |sec: &Section, keys: &[&str], scope: &Scope| -> Result<Vec<Expr>, ConfigError> {
            let mut out: Vec<Option<Expr>> = vec![None; keys.len()];
            for e in &sec.entries {
                let Some(k) = keys.iter().position(|x| *x == e.key) else {
                    return err(e.line, e.key_col, format!("'{}' is not a coordinate here", e.key));
                };
                if out[k].is_some() {
                    return err(e.line, e.key_col, format!("'{}' given twice", e.key));
                }
                out[k] = Some(scope.parse(&e.value, e.line, e.value_col)?);
            }
            out.into_iter()
                .zip(keys)
                .map(|(x, k)| {
                    x.ok_or_else(|| ConfigError {
                        line: sec.line,
                        column: 1,
                        message: format!("[{}] is missing '{k}'", sec.name),
                    })
                })
                .collect()
        };
        let projection = keyed(require("projection")?, &snames, &qscope)?;
        let section = keyed(require("section")?, &qnames, &sscope)?;
        let mut fiber_secs: Vec<&Section> = sections.iter().filter(|s| s.name.starts_with("fiber.")).collect();
        fiber_secs.sort_by_key(|s| s.line);
        let fibers = fiber_secs
            .into_iter()
            .map(|s| keyed(s, &qnames, &sscope))
            .collect::<Result<Vec<_>, _>>()?;

        // Density and oracle.
        let density = match get("density") {
            None => None,
            Some(s) => {
                let mut volume = Volume::Momentum;
                let mut f = None;
                let mut dvars: Vec<String> = snames.iter().map(|s| s.to_string()).collect();
                dvars.extend(verticals.iter().chain(&horizontals).map(|fd| format!("p_{}", fd.name)));
                let dscope = Scope {
                    vars: dvars.iter().map(String::as_str).collect(),
                    params: &pnames,
                };
                for e in &s.entries {
                    match e.key.as_str() {
                        "volume" => {
                            volume = match e.value.as_str() {
                                "momentum" => Volume::Momentum,
                                "velocity" => Volume::Velocity,
                                _ => return err(e.line, e.value_col, "volume must be 'momentum' or 'velocity'"),
                            }
                        }
                        "f" => f = Some(dscope.parse(&e.value, e.line, e.value_col)?),
                        _ => return err(e.line, e.key_col, format!("unknown key '{}' in [density]", e.key)),
                    }
                }
                let f = f.ok_or_else(|| ConfigError {
                    line: s.line,
                    column: 1,
                    message: "[density] needs 'f = ...'".into(),
                })?;
                Some(DensityDecl { volume, f })
            }
        };
        let oracle = match get("oracle") {
            None => None,
            Some(s) => {
                let mut kind = None;
                for e in &s.entries {
                    if e.key != "kind" {
                        return err(e.line, e.key_col, format!("unknown key '{}' in [oracle]", e.key));
                    }
                    kind = Some(e.value.clone());
                }
                Some(kind.ok_or_else(|| ConfigError {
                    line: s.line,
                    column: 1,
                    message: "[oracle] needs 'kind = ...'".into(),
                })?)
            }
        };

        Ok(SystemConfig {
            name,
            params,
            q_coords,
            shape_coords,
            metric,
            orthogonalize,
            verticals,
            horizontals,
            projection,
            section,
            fibers,
            density,
            oracle,
        })
    }

    /// Parameter names as seen by expressions, including the implicit `pi`.
    pub fn param_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.params.iter().map(|(n, _)| n.clone()).collect();
        if !v.iter().any(|n| n == "pi") {
            v.push("pi".into());
        }
        v
    }

    pub fn param_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.params.iter().map(|(_, x)| *x).collect();
        if !self.params.iter().any(|(n, _)| n == "pi") {
            v.push(std::f64::consts::PI);
        }
        v
    }

    /// Replaces the value of a declared parameter.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        match self.params.iter_mut().find(|(n, _)| n == name) {
            Some(p) => {
                p.1 = value;
                Ok(())
            }
            None => err(0, 0, format!("unknown parameter '{name}'")),
        }
    }

    pub fn field_names(&self) -> Vec<&str> {
        self.verticals
            .iter()
            .chain(&self.horizontals)
            .map(|f| f.name.as_str())
            .collect()
    }

    fn chart(&self, decls: &[CoordDecl], pv: &[f64]) -> Result<Chart, CompileError> {
        let ev = |e: &Expr| e.eval(&[], pv).map_err(|x| CompileError::Geometry(x.into()));
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut mg = Vec::new();
        for d in decls {
            lo.push(ev(&d.lower)?);
            hi.push(ev(&d.upper)?);
            mg.push(ev(&d.margin)?);
        }
        Ok(Chart::new(decls.iter().map(|d| d.name.clone()).collect(), lo, hi, mg)?)
    }

    /// Builds and validates the symmetric system.
    pub fn compile(&self) -> Result<SymmetricSystem, CompileError> {
        let pv = self.param_values();
        let q_chart = self.chart(&self.q_coords, &pv)?;
        let shape_chart = self.chart(&self.shape_coords, &pv)?;
        let m = q_chart.dim();
        let metric = Arc::new(match &self.metric {
            MetricDecl::Components(upper) => MetricField::from_upper(m, upper.clone())?,
            MetricDecl::Coframe { rows, inner_upper } => MetricField::from_coframe(
                m,
                rows.iter().map(|r| r.components.clone()).collect(),
                inner_upper.clone(),
            )?,
        });
        let comps = |v: &[FieldDecl]| v.iter().map(|f| f.components.clone()).collect::<Vec<_>>();
        let frame = if self.orthogonalize {
            geometry::orthogonalize_split(&metric, comps(&self.verticals), comps(&self.horizontals), &q_chart, &pv)?
        } else {
            FrameSplit {
                verticals: comps(&self.verticals).into_iter().map(VectorField::Components).collect(),
                horizontals: comps(&self.horizontals).into_iter().map(VectorField::Components).collect(),
            }
        };
        let sys = SymmetricSystem {
            name: self.name.clone(),
            param_names: self.param_names(),
            params: pv,
            q_chart,
            metric,
            frame,
            shape_chart,
            projection: self.projection.clone(),
            section: self.section.clone(),
            fiber_samples: self.fibers.clone(),
        };
        sys.validate()?;
        Ok(sys)
    }

    /// The declared density as a measure candidate, if any.
    pub fn density_candidate(&self) -> Option<MeasureCandidate> {
        self.density.as_ref().map(|d| MeasureCandidate::Expression {
            expr: d.f.clone(),
            params: self.param_values(),
            volume: d.volume,
        })
    }

    /// Parses a density expression against this system's names.
    pub fn parse_density(&self, src: &str, volume: Volume) -> Result<MeasureCandidate, ConfigError> {
        let mut vars: Vec<String> = self.shape_coords.iter().map(|c| c.name.clone()).collect();
        vars.extend(self.field_names().iter().map(|n| format!("p_{n}")));
        let pn = self.param_names();
        let pr: Vec<&str> = pn.iter().map(String::as_str).collect();
        let scope = Scope {
            vars: vars.iter().map(String::as_str).collect(),
            params: &pr,
        };
        Ok(MeasureCandidate::Expression {
            expr: scope.parse(src.trim(), 1, 1)?,
            params: self.param_values(),
            volume,
        })
    }
}

fn fields(
    sec: &Section,
    scope: &Scope,
    m: usize,
    pnames: &[&str],
    qnames: &[&str],
) -> Result<Vec<FieldDecl>, ConfigError> {
    let mut out: Vec<FieldDecl> = Vec::new();
    for e in &sec.entries {
        if !is_identifier(&e.key) {
            return err(e.line, e.key_col, format!("'{}' is not a valid name", e.key));
        }
        if out.iter().any(|f| f.name == e.key) || pnames.contains(&e.key.as_str()) || qnames.contains(&e.key.as_str()) {
            return err(e.line, e.key_col, format!("name '{}' is already in use", e.key));
        }
        out.push(FieldDecl {
            name: e.key.clone(),
            components: scope.parse_list(e, Some(m))?,
        });
    }
    Ok(out)
}

fn join(v: &[Expr]) -> String {
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        if !self.params.is_empty() {
            s.push_str("\n[parameters]\n");
            for (n, v) in &self.params {
                let _ = writeln!(s, "{n} = {v:?}");
            }
        }
        for (title, decls) in [("chart.config", &self.q_coords), ("chart.shape", &self.shape_coords)] {
            let _ = writeln!(s, "\n[{title}]");
            for d in decls {
                let _ = writeln!(s, "{} = {}, {}, {}", d.name, d.lower, d.upper, d.margin);
            }
        }
        let upper_lines = |s: &mut String, names: &[&str], upper: &[Expr]| {
            let n = names.len();
            for a in 0..n {
                for b in a..n {
                    let e = &upper[geometry::upper_index(n, a, b)];
                    if !e.is_zero_literal() {
                        let _ = writeln!(s, "{}, {} = {e}", names[a], names[b]);
                    }
                }
            }
        };
        match &self.metric {
            MetricDecl::Components(upper) => {
                s.push_str("\n[metric]\n");
                let names: Vec<&str> = self.q_coords.iter().map(|c| c.name.as_str()).collect();
                upper_lines(&mut s, &names, upper);
            }
            MetricDecl::Coframe { rows, inner_upper } => {
                s.push_str("\n[metric.coframe]\n");
                for r in rows {
                    let _ = writeln!(s, "{} = {}", r.name, join(&r.components));
                }
                s.push_str("\n[metric.inner]\n");
                let names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
                upper_lines(&mut s, &names, inner_upper);
            }
        }
        let _ = writeln!(s, "\n[frame]\northogonalize = {}", self.orthogonalize);
        if !self.verticals.is_empty() {
            s.push_str("\n[frame.vertical]\n");
            for v in &self.verticals {
                let _ = writeln!(s, "{} = {}", v.name, join(&v.components));
            }
        }
        s.push_str("\n[frame.horizontal]\n");
        for h in &self.horizontals {
            let _ = writeln!(s, "{} = {}", h.name, join(&h.components));
        }
        s.push_str("\n[projection]\n");
        for (c, e) in self.shape_coords.iter().zip(&self.projection) {
            let _ = writeln!(s, "{} = {e}", c.name);
        }
        let keyed = |s: &mut String, title: &str, list: &[Expr]| {
            let _ = writeln!(s, "\n[{title}]");
            for (c, e) in self.q_coords.iter().zip(list) {
                let _ = writeln!(s, "{} = {e}", c.name);
            }
        };
        keyed(&mut s, "section", &self.section);
        for (i, fib) in self.fibers.iter().enumerate() {
            keyed(&mut s, &format!("fiber.{}", i + 1), fib);
        }
        if let Some(d) = &self.density {
            let vol = match d.volume {
                Volume::Momentum => "momentum",
                Volume::Velocity => "velocity",
            };
            let _ = writeln!(s, "\n[density]\nvolume = {vol}\nf = {}", d.f);
        }
        if let Some(k) = &self.oracle {
            let _ = writeln!(s, "\n[oracle]\nkind = {k}");
        }
        f.write_str(&s)
    }
}

/// Parameter values by name, for callers that know the parameter set.
pub fn param_map(cfg: &SystemConfig) -> BTreeMap<String, f64> {
    cfg.params.iter().cloned().collect()
}
