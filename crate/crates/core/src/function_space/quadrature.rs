use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// Per-panel order used when a rule name omits it.
pub const DEFAULT_ORDER: usize = 8;
/// Panel count of the default grid.
pub const DEFAULT_PANELS: usize = 8;

/// Quadrature rule applied on every panel of a composite grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    GaussLegendre { order: usize },
}

impl QuadRule {
    pub const fn gauss_legendre(order: usize) -> Self {
        QuadRule::GaussLegendre { order }
    }

    /// Highest polynomial degree integrated exactly on a single panel.
    pub fn exactness_degree(&self) -> usize {
        match *self {
            QuadRule::GaussLegendre { order } => 2 * order - 1,
        }
    }

    fn reference_rule(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            QuadRule::GaussLegendre { order } => gauss_legendre_reference(order),
        }
    }
}

impl Default for QuadRule {
    fn default() -> Self {
        QuadRule::GaussLegendre { order: DEFAULT_ORDER }
    }
}

impl fmt::Display for QuadRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadRule::GaussLegendre { order } => write!(f, "gauss-legendre-{order}"),
        }
    }
}

impl FromStr for QuadRule {
    type Err = Error;

    /// Accepts `gauss-legendre` (default order) or `gauss-legendre-<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "gauss-legendre" {
            return Ok(QuadRule::default());
        }
        match s.strip_prefix("gauss-legendre-").map(str::parse::<usize>) {
            Some(Ok(order)) if order >= 1 => Ok(QuadRule::GaussLegendre { order }),
            _ => Err(Error::UnknownRule(s.to_string())),
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
///
/// Newton iteration on `P_m` from the Tricomi initial guess; the rule is
/// mirrored so nodes are exactly antisymmetric and weights symmetric.
pub fn gauss_legendre_reference(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let m = order;
    let mut nodes = alloc::vec![0.0; m];
    let mut weights = alloc::vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        // Root i counted from the right end.
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(m, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[m - 1 - i] = x;
        nodes[i] = -x;
        weights[m - 1 - i] = w;
        weights[i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Composite quadrature grid on `[a_end, b_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid {
    a_end: f64,
    b_end: f64,
    panels: usize,
    rule: QuadRule,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadGrid {
    pub fn a_end(&self) -> f64 {
        self.a_end
    }

    pub fn b_end(&self) -> f64 {
        self.b_end
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn rule(&self) -> QuadRule {
        self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn width(&self) -> f64 {
        self.b_end - self.a_end
    }

    /// Quadrature of a function evaluated at the nodes.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Width of the widest panel; the scale of the cut error when an
    /// indicator jumps inside a panel.
    pub fn panel_width(&self) -> f64 {
        self.width() / self.panels as f64
    }
}

impl fmt::Display for QuadGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] x {} panels ({})",
            self.a_end, self.b_end, self.panels, self.rule
        )
    }
}

/// Builds a composite grid: `panels` equal panels each carrying `rule`.
pub fn make_grid(a_end: f64, b_end: f64, panels: usize, rule: QuadRule) -> Result<Arc<QuadGrid>> {
    if !(a_end.is_finite() && b_end.is_finite()) || a_end >= b_end {
        return Err(Error::InvalidInterval { a: a_end, b: b_end });
    }
    if panels == 0 {
        return Err(Error::NoPanels);
    }
    if let QuadRule::GaussLegendre { order: 0 } = rule {
        return Err(Error::UnknownRule(format!("{rule}")));
    }
    let (ref_nodes, ref_weights) = rule.reference_rule();
    let h = (b_end - a_end) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * ref_nodes.len());
    let mut weights = Vec::with_capacity(panels * ref_nodes.len());
    for p in 0..panels {
        let left = a_end + h * p as f64;
        let right = if p + 1 == panels {
            b_end
        } else {
            a_end + h * (p + 1) as f64
        };
        let mid = 0.5 * (left + right);
        let half = 0.5 * (right - left);
        for (&t, &w) in ref_nodes.iter().zip(&ref_weights) {
            nodes.push(mid + half * t);
            weights.push(half * w);
        }
    }
    Ok(Arc::new(QuadGrid {
        a_end,
        b_end,
        panels,
        rule,
        nodes,
        weights,
    }))
}

/// Default grid: 8 panels of 8-point Gauss–Legendre.
pub fn default_grid(a_end: f64, b_end: f64) -> Result<Arc<QuadGrid>> {
    make_grid(a_end, b_end, DEFAULT_PANELS, QuadRule::default())
}
