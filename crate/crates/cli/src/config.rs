//! Problem files.
//!
//! UTF-8 text, `#` starts a comment, `[section]` headers and `key = value`
//! lines. Sections and keys:
//!
//! ```text
//! [problem]  domain = a, b | truncation = L     lambda = x
//!            panels = 8    order = 8
//! [kernel]   type = tensor   g = <expr in u>   h = <expr in v>
//!            type = grid     k = <expr with @u/@v>
//!            type = coeff    n = N   g = <gen>   h = <gen>   a = <gen>
//! [noise]    omega = <expr in v and s>   (generators for coeff kernels)
//! [sweep]    range = lo, hi
//!            mode = grid    points = M
//!            mode = random  samples = M   seed = u64
//!            mode = list    values = s1, s2, ...
//! [solver]   method = closed-form | neumann | direct | family
//!            tol = 1e-10   max_iter = 10000   residual_tol = 1e-8
//!            cutoff = c (family only)   force = false
//! [bounds]   anchors = <expr>; <expr>; ...   alpha = midpoint | x
//! ```
//!
//! Unknown sections and keys are rejected. [`ProblemConfig`]'s `Display` is
//! the normal form: fixed section and key order, defaults written out.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{fmt_num, Expr, ExprError, Usage};

pub const DEFAULT_PANELS: usize = 8;
pub const DEFAULT_ORDER: usize = 8;
pub const DEFAULT_TRUNCATION: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown function `{name}`")]
    UnknownFunction { line: usize, column: usize, name: String },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("[{section}] is missing `{key}`")]
    Missing { section: &'static str, key: &'static str },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval(f64, f64),
    /// The real line cut to `[-L, L]`.
    Truncated(f64),
}

impl Domain {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Interval(a, b) => (a, b),
            Domain::Truncated(l) => (-l, l),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Tensor {
        g: Expr,
        h: Expr,
    },
    Grid {
        k: Expr,
    },
    /// Rank-one coefficient kernel `k_mn = g_m h_n` with multiplier `a`.
    Coeff {
        n: usize,
        g: Expr,
        h: Expr,
        a: Expr,
    },
}

impl KernelSpec {
    pub fn is_coeff(&self) -> bool {
        matches!(self, KernelSpec::Coeff { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    Grid { points: usize },
    Random { samples: usize, seed: u64 },
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpec {
    pub range: (f64, f64),
    pub sampling: Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverName {
    ClosedForm,
    Neumann,
    Direct,
    Family { cutoff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tol: f64,
    pub max_iter: usize,
    /// Rows whose residual exceeds this are flagged.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol: 1e-10,
            max_iter: 10_000,
            residual: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    Midpoint,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    /// Absent for coefficient kernels.
    pub domain: Option<Domain>,
    /// Absent for coefficient kernels, which use the multiplier `a`.
    pub lambda: Option<f64>,
    pub panels: usize,
    pub order: usize,
    pub kernel: KernelSpec,
    pub noise: Expr,
    pub parameter: ParameterSpec,
    pub solver: SolverName,
    pub tolerances: Tolerances,
    pub anchors: Vec<Expr>,
    pub alpha: AlphaChoice,
    pub force: bool,
}

struct Entry {
    line: usize,
    key_col: usize,
    value_col: usize,
    value: String,
}

const SECTIONS: [(&str, &[&str]); 6] = [
    ("problem", &["domain", "truncation", "lambda", "panels", "order"]),
    ("kernel", &["type", "g", "h", "k", "n", "a"]),
    ("noise", &["omega"]),
    ("sweep", &["range", "mode", "points", "samples", "seed", "values"]),
    (
        "solver",
        &["method", "tol", "max_iter", "residual_tol", "cutoff", "force"],
    ),
    ("bounds", &["anchors", "alpha"]),
];

type Sections = BTreeMap<&'static str, BTreeMap<&'static str, Entry>>;

fn perr(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn collect(text: &str) -> Result<Sections, ConfigError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    let mut any = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        any = true;
        let indent = body.chars().take_while(|c| c.is_whitespace()).count() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(perr(line, indent, "section header must end with `]`"));
            };
            let name = name.trim();
            let Some((known, _)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(perr(line, indent, format!("unknown section `[{name}]`")));
            };
            if sections.contains_key(known) {
                return Err(perr(line, indent, format!("duplicate section `[{name}]`")));
            }
            sections.insert(known, BTreeMap::new());
            current = Some(known);
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(perr(line, indent, "expected `key = value` or `[section]`"));
        };
        let Some(section) = current else {
            return Err(perr(line, indent, "key outside of any section"));
        };
        let key = body[..eq].trim();
        let keys = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        let Some(known_key) = keys.iter().find(|k| **k == key) else {
            return Err(perr(line, indent, format!("unknown key `{key}` in [{section}]")));
        };
        let after = &body[eq + 1..];
        let lead = after.chars().take_while(|c| c.is_whitespace()).count();
        let value_col = body[..eq].chars().count() + 2 + lead;
        let entries = sections.get_mut(section).expect("section registered");
        if entries.contains_key(known_key) {
            return Err(perr(line, indent, format!("duplicate key `{key}`")));
        }
        entries.insert(
            known_key,
            Entry {
                line,
                key_col: indent,
                value_col,
                value: after.trim().to_string(),
            },
        );
    }
    if !any {
        return Err(perr(1, 1, "empty configuration"));
    }
    Ok(sections)
}

struct Reader {
    sections: Sections,
}

impl Reader {
    fn get(&self, section: &'static str, key: &'static str) -> Option<&Entry> {
        self.sections.get(section)?.get(key)
    }

    fn require(&self, section: &'static str, key: &'static str) -> Result<&Entry, ConfigError> {
        self.get(section, key).ok_or(ConfigError::Missing { section, key })
    }

    fn reject(&self, section: &'static str, key: &'static str, why: &str) -> Result<(), ConfigError> {
        match self.get(section, key) {
            Some(e) => Err(perr(e.line, e.key_col, format!("`{key}` {why}"))),
            None => Ok(()),
        }
    }

    fn number(&self, e: &Entry) -> Result<f64, ConfigError> {
        parse_number(&e.value)
            .ok_or_else(|| perr(e.line, e.value_col, format!("expected a number, found `{}`", e.value)))
    }

    fn opt_number(&self, section: &'static str, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.get(section, key).map(|e| self.number(e)).transpose()
    }

    fn count(&self, e: &Entry) -> Result<usize, ConfigError> {
        e.value.parse().map_err(|_| {
            perr(
                e.line,
                e.value_col,
                format!("expected a nonnegative integer, found `{}`", e.value),
            )
        })
    }

    fn opt_count(&self, section: &'static str, key: &'static str) -> Result<Option<usize>, ConfigError> {
        self.get(section, key).map(|e| self.count(e)).transpose()
    }

    fn list(&self, e: &Entry) -> Result<Vec<f64>, ConfigError> {
        let mut out = Vec::new();
        let mut col = e.value_col;
        for part in e.value.split(',') {
            let lead = part.chars().take_while(|c| c.is_whitespace()).count();
            match parse_number(part.trim()) {
                Some(v) => out.push(v),
                None => {
                    return Err(perr(
                        e.line,
                        col + lead,
                        format!("expected a number, found `{}`", part.trim()),
                    ))
                }
            }
            col += part.chars().count() + 1;
        }
        Ok(out)
    }

    fn pair(&self, e: &Entry) -> Result<(f64, f64), ConfigError> {
        match self.list(e)?.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(perr(e.line, e.value_col, "expected two comma-separated numbers")),
        }
    }

    fn expr_at(&self, line: usize, col: usize, text: &str, usage: Usage, allow_s: bool) -> Result<Expr, ConfigError> {
        let e: Expr = text.parse().map_err(|err: ExprError| match err {
            ExprError::UnknownFunction { column, name } => ConfigError::UnknownFunction {
                line,
                column: col + column - 1,
                name,
            },
            ExprError::Syntax { column, message } => perr(line, col + column - 1, message),
        })?;
        e.validate(usage, allow_s).map_err(|m| perr(line, col, m))?;
        Ok(e)
    }

    fn expr(&self, e: &Entry, usage: Usage, allow_s: bool) -> Result<Expr, ConfigError> {
        self.expr_at(e.line, e.value_col, &e.value, usage, allow_s)
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(perr(e.line, e.value_col, "expected `true` or `false`")),
    }
}

/// Parses and validates a problem file.
pub fn parse_config(text: &str) -> Result<ProblemConfig, ConfigError> {
    let r = Reader {
        sections: collect(text)?,
    };
    let lambda = r.opt_number("problem", "lambda")?;

    let ty = r.require("kernel", "type")?;
    let kernel = match ty.value.as_str() {
        "tensor" => {
            r.reject("kernel", "k", "is only used by grid kernels")?;
            r.reject("kernel", "n", "is only used by coeff kernels")?;
            r.reject("kernel", "a", "is only used by coeff kernels")?;
            KernelSpec::Tensor {
                g: r.expr(r.require("kernel", "g")?, Usage::Function, false)?,
                h: r.expr(r.require("kernel", "h")?, Usage::Function, false)?,
            }
        }
        "grid" => {
            for key in ["g", "h", "n", "a"] {
                r.reject("kernel", key, "is not used by grid kernels")?;
            }
            KernelSpec::Grid {
                k: r.expr(r.require("kernel", "k")?, Usage::Kernel, false)?,
            }
        }
        "coeff" => {
            r.reject("kernel", "k", "is only used by grid kernels")?;
            let n = r.count(r.require("kernel", "n")?)?;
            if n == 0 {
                return Err(ConfigError::Invalid("coefficient truncation n must be positive".into()));
            }
            let a = match r.get("kernel", "a") {
                Some(e) => r.expr(e, Usage::Coefficients, false)?,
                None => Expr::Atom(crate::expr::Atom::Constant(1.0), crate::expr::Var::Default),
            };
            KernelSpec::Coeff {
                n,
                g: r.expr(r.require("kernel", "g")?, Usage::Coefficients, false)?,
                h: r.expr(r.require("kernel", "h")?, Usage::Coefficients, false)?,
                a,
            }
        }
        other => {
            return Err(perr(
                ty.line,
                ty.value_col,
                format!("unknown kernel type `{other}` (tensor, grid, coeff)"),
            ));
        }
    };
    let coeff = kernel.is_coeff();

    let domain = match (r.get("problem", "domain"), r.get("problem", "truncation")) {
        (Some(_), Some(t)) => {
            return Err(perr(
                t.line,
                t.key_col,
                "give either `domain` or `truncation`, not both",
            ))
        }
        (Some(e), None) => {
            let (a, b) = r.pair(e)?;
            if a >= b {
                return Err(ConfigError::InvalidDomain(format!("need a < b, got [{a}, {b}]")));
            }
            Some(Domain::Interval(a, b))
        }
        (None, Some(e)) => {
            let l = r.number(e)?;
            if l <= 0.0 {
                return Err(ConfigError::InvalidDomain(format!(
                    "truncation must be positive, got {l}"
                )));
            }
            Some(Domain::Truncated(l))
        }
        (None, None) if coeff => None,
        (None, None) => Some(Domain::Truncated(DEFAULT_TRUNCATION)),
    };
    if coeff && domain.is_some() {
        return Err(ConfigError::InvalidDomain(
            "coefficient kernels live on an abstract basis; drop `domain`".into(),
        ));
    }
    match (coeff, lambda) {
        (true, Some(_)) => r.reject("problem", "lambda", "is not used by coeff kernels; set [kernel] a")?,
        (false, None) => {
            return Err(ConfigError::Missing {
                section: "problem",
                key: "lambda",
            })
        }
        _ => {}
    }
    if lambda == Some(0.0) {
        return Err(ConfigError::Invalid("lambda must be nonzero".into()));
    }
    let panels = r.opt_count("problem", "panels")?.unwrap_or(DEFAULT_PANELS);
    let order = r.opt_count("problem", "order")?.unwrap_or(DEFAULT_ORDER);
    if panels == 0 || order == 0 {
        return Err(ConfigError::Invalid("panels and order must be positive".into()));
    }

    let usage = if coeff { Usage::Coefficients } else { Usage::Function };
    let noise = r.expr(r.require("noise", "omega")?, usage, true)?;

    let range_entry = r.require("sweep", "range")?;
    let range = r.pair(range_entry)?;
    if range.0 > range.1 {
        return Err(perr(
            range_entry.line,
            range_entry.value_col,
            "sweep range needs lo <= hi",
        ));
    }
    let mode = r.require("sweep", "mode")?;
    let sampling = match mode.value.as_str() {
        "grid" => {
            r.reject("sweep", "samples", "is only used in random mode")?;
            r.reject("sweep", "seed", "is only used in random mode")?;
            r.reject("sweep", "values", "is only used in list mode")?;
            Sampling::Grid {
                points: r.count(r.require("sweep", "points")?)?,
            }
        }
        "random" => {
            r.reject("sweep", "points", "is only used in grid mode")?;
            r.reject("sweep", "values", "is only used in list mode")?;
            let seed = r.require("sweep", "seed")?;
            Sampling::Random {
                samples: r.count(r.require("sweep", "samples")?)?,
                seed: seed
                    .value
                    .parse()
                    .map_err(|_| perr(seed.line, seed.value_col, "seed must be an unsigned 64-bit integer"))?,
            }
        }
        "list" => {
            r.reject("sweep", "points", "is only used in grid mode")?;
            r.reject("sweep", "samples", "is only used in random mode")?;
            r.reject("sweep", "seed", "is only used in random mode")?;
            let e = r.require("sweep", "values")?;
            let values = r.list(e)?;
            if let Some(bad) = values.iter().find(|v| !(range.0..=range.1).contains(*v)) {
                return Err(perr(
                    e.line,
                    e.value_col,
                    format!("value {bad} lies outside the sweep range"),
                ));
            }
            Sampling::List(values)
        }
        other => {
            return Err(perr(
                mode.line,
                mode.value_col,
                format!("unknown sweep mode `{other}` (grid, random, list)"),
            ))
        }
    };
    let count = match &sampling {
        Sampling::Grid { points } => *points,
        Sampling::Random { samples, .. } => *samples,
        Sampling::List(v) => v.len(),
    };
    if count == 0 {
        return Err(ConfigError::Invalid("the sweep has no parameter values".into()));
    }

    let method = r.require("solver", "method")?;
    let cutoff = r.opt_number("solver", "cutoff")?;
    let solver = match method.value.as_str() {
        "closed-form" => SolverName::ClosedForm,
        "neumann" => SolverName::Neumann,
        "direct" => SolverName::Direct,
        "family" => SolverName::Family {
            cutoff: cutoff.ok_or(ConfigError::Missing {
                section: "solver",
                key: "cutoff",
            })?,
        },
        other => {
            return Err(perr(
                method.line,
                method.value_col,
                format!("unknown solver `{other}` (closed-form, neumann, direct, family)"),
            ))
        }
    };
    if !matches!(solver, SolverName::Family { .. }) {
        r.reject("solver", "cutoff", "is only used by the family solver")?;
    }
    match (&kernel, solver) {
        (KernelSpec::Tensor { .. }, SolverName::ClosedForm) => {}
        (_, SolverName::ClosedForm) => return Err(ConfigError::Invalid("closed-form needs a tensor kernel".into())),
        (KernelSpec::Coeff { .. }, SolverName::Family { .. }) => {
            return Err(ConfigError::Invalid(
                "the family solver needs a grid or tensor kernel".into(),
            ))
        }
        (KernelSpec::Coeff { .. }, _) => {}
        (_, SolverName::Direct) => return Err(ConfigError::Invalid("direct needs a coeff kernel".into())),
        _ => {}
    }
    if let SolverName::Family { cutoff } = solver {
        let (a, b) = domain.expect("grid kernels have a domain").bounds();
        if !(a..=b).contains(&cutoff) || range.0 < cutoff || range.1 > b {
            return Err(ConfigError::Invalid(format!(
                "family needs a <= cutoff <= range within [cutoff, {b}]"
            )));
        }
    }
    let defaults = Tolerances::default();
    let tolerances = Tolerances {
        tol: r.opt_number("solver", "tol")?.unwrap_or(defaults.tol),
        max_iter: r.opt_count("solver", "max_iter")?.unwrap_or(defaults.max_iter),
        residual: r.opt_number("solver", "residual_tol")?.unwrap_or(defaults.residual),
    };
    let force = r.get("solver", "force").map(parse_bool).transpose()?.unwrap_or(false);

    let anchors = match r.get("bounds", "anchors") {
        None => Vec::new(),
        Some(e) => {
            let mut out = Vec::new();
            let mut col = e.value_col;
            for part in e.value.split(';') {
                let lead = part.chars().take_while(|c| c.is_whitespace()).count();
                if !part.trim().is_empty() {
                    out.push(r.expr_at(e.line, col + lead, part.trim(), usage, true)?);
                }
                col += part.chars().count() + 1;
            }
            out
        }
    };
    let alpha = match r.get("bounds", "alpha") {
        None => AlphaChoice::Midpoint,
        Some(e) if e.value == "midpoint" => AlphaChoice::Midpoint,
        Some(e) => AlphaChoice::Value(r.number(e)?),
    };

    Ok(ProblemConfig {
        domain,
        lambda,
        panels,
        order,
        kernel,
        noise,
        parameter: ParameterSpec { range, sampling },
        solver,
        tolerances,
        anchors,
        alpha,
        force,
    })
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for ProblemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[problem]")?;
        match self.domain {
            Some(Domain::Interval(a, b)) => writeln!(f, "domain = {}", join(&[a, b]))?,
            Some(Domain::Truncated(l)) => writeln!(f, "truncation = {}", fmt_num(l))?,
            None => {}
        }
        if let Some(l) = self.lambda {
            writeln!(f, "lambda = {}", fmt_num(l))?;
        }
        writeln!(f, "panels = {}", self.panels)?;
        writeln!(f, "order = {}", self.order)?;

        writeln!(f, "\n[kernel]")?;
        match &self.kernel {
            KernelSpec::Tensor { g, h } => writeln!(f, "type = tensor\ng = {g}\nh = {h}")?,
            KernelSpec::Grid { k } => writeln!(f, "type = grid\nk = {k}")?,
            KernelSpec::Coeff { n, g, h, a } => writeln!(f, "type = coeff\nn = {n}\ng = {g}\nh = {h}\na = {a}")?,
        }

        writeln!(f, "\n[noise]\nomega = {}", self.noise)?;

        writeln!(f, "\n[sweep]")?;
        writeln!(f, "range = {}", join(&[self.parameter.range.0, self.parameter.range.1]))?;
        match &self.parameter.sampling {
            Sampling::Grid { points } => writeln!(f, "mode = grid\npoints = {points}")?,
            Sampling::Random { samples, seed } => writeln!(f, "mode = random\nsamples = {samples}\nseed = {seed}")?,
            Sampling::List(v) => writeln!(f, "mode = list\nvalues = {}", join(v))?,
        }

        writeln!(f, "\n[solver]")?;
        match self.solver {
            SolverName::ClosedForm => writeln!(f, "method = closed-form")?,
            SolverName::Neumann => writeln!(f, "method = neumann")?,
            SolverName::Direct => writeln!(f, "method = direct")?,
            SolverName::Family { cutoff } => writeln!(f, "method = family\ncutoff = {}", fmt_num(cutoff))?,
        }
        writeln!(f, "tol = {}", fmt_num(self.tolerances.tol))?;
        writeln!(f, "max_iter = {}", self.tolerances.max_iter)?;
        writeln!(f, "residual_tol = {}", fmt_num(self.tolerances.residual))?;
        writeln!(f, "force = {}", self.force)?;

        writeln!(f, "\n[bounds]")?;
        let anchors: Vec<String> = self.anchors.iter().map(ToString::to_string).collect();
        writeln!(f, "anchors = {}", anchors.join("; "))?;
        match self.alpha {
            AlphaChoice::Midpoint => writeln!(f, "alpha = midpoint"),
            AlphaChoice::Value(a) => writeln!(f, "alpha = {}", fmt_num(a)),
        }
    }
}

/// `serialize(parse(text))`.
pub fn normalize(text: &str) -> Result<String, ConfigError> {
    Ok(parse_config(text)?.to_string())
}
