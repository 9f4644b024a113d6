//! Finite windows of infinite matrices acting on `l_p` by right
//! multiplication, `A(x) = xA`, together with Hölder norm bounds, diagonal
//! operators and the explicit solver for stochastic diagonal systems
//! `A σ(s) = B σ(s) + ω(s)`.
//!
//! Every quantity is computed at a declared truncation order `N`. Trends over
//! growing `N` are reported as such; infinite-dimensional limits are only
//! claimed when an analytic value is supplied.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::amz_verification::{BoundCheck, Reason};
use crate::linalg::{self, DenseMatrix, Lu};
use crate::{Error, Result};

const SINGULAR_TOL: f64 = 1e-12;
const SINGULAR_MAX_ITER: usize = 100_000;

/// `l_p` norm of a finite sequence.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return linalg::norm2(x);
    }
    if p.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    libm::pow(x.iter().map(|v| libm::pow(v.abs(), p)).sum::<f64>(), 1.0 / p)
}

/// Conjugate exponent `q = p/(p − 1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `N × N` window `(a_ij)` of an infinite matrix, acting on `l_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMatrix {
    entries: DenseMatrix,
    p: f64,
}

impl TruncatedMatrix {
    pub fn new(entries: DenseMatrix, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        if !entries.is_square() || entries.rows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.rows().max(1),
                found: entries.cols(),
            });
        }
        if !entries.is_finite() {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(TruncatedMatrix { entries, p })
    }

    /// Window `a_ij = f(i, j)` with 1-based indices.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, p: f64, mut f: F) -> Result<Self> {
        Self::new(DenseMatrix::from_fn(n, n, |i, j| f(i + 1, j + 1)), p)
    }

    pub fn order(&self) -> usize {
        self.entries.rows()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        conjugate_exponent(self.p)
    }

    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }
}

/// Row-vector product: `out_j = Σ_i a_ij x_i`.
pub fn apply_matrix(a: &TruncatedMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.entries.vec_mul(x)
}

/// `(Σ_j (Σ_i |a_ij|^q)^{p/q})^{1/p}`, a Hölder bound on `‖A‖_op` in `l_p`.
pub fn norm_upper_bound(a: &TruncatedMatrix) -> f64 {
    let (p, q) = (a.p(), a.q());
    let n = a.order();
    let total: f64 = (0..n)
        .map(|j| {
            let col: f64 = a.entries.column(j).map(|v| libm::pow(v.abs(), q)).sum();
            libm::pow(col, p / q)
        })
        .sum();
    libm::pow(total, 1.0 / p)
}

/// `(Σ_i (Σ_j |a_ij|^p)^{q/p})^{1/q}`, a Hölder bound on `‖Aᵀ‖_op` in `l_q`.
pub fn transpose_norm_upper_bound(a: &TruncatedMatrix) -> f64 {
    let (p, q) = (a.p(), a.q());
    let n = a.order();
    let total: f64 = (0..n)
        .map(|i| {
            let row: f64 = a.entries.row(i).iter().map(|v| libm::pow(v.abs(), p)).sum();
            libm::pow(row, q / p)
        })
        .sum();
    libm::pow(total, 1.0 / q)
}

/// `min_m ‖Aᵀ(s_m)‖_q` over the unit vectors `s_m`, `m ≤ N`.
///
/// `Aᵀ(s_m) = (a_1m, a_2m, …)` is column `m` of the window. The result is an
/// upper bound on the covering constant of `A`, never an estimate of it.
pub fn basis_vector_covering_upper_bound(a: &TruncatedMatrix) -> f64 {
    let q = a.q();
    (0..a.order())
        .map(|m| lp_norm(&a.entries.column(m).collect::<Vec<_>>(), q))
        .fold(f64::INFINITY, f64::min)
}

/// `inf_{‖y‖₂=1} ‖Aᵀ y‖₂`: square root of the smallest eigenvalue of `A Aᵀ`,
/// by unshifted inverse power iteration.
///
/// Returns 0 when `A Aᵀ` has an exactly zero pivot.
pub fn min_singular_estimate(a: &TruncatedMatrix) -> Result<f64> {
    if a.p() != 2.0 {
        return Err(Error::InvalidExponent(a.p()));
    }
    let m = &a.entries;
    let gram = m.matmul(&m.transpose())?;
    let lu = match Lu::factor_with_threshold(&gram, 0.0) {
        Ok(lu) => lu,
        Err(Error::SingularSystem) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let n = a.order();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * libm::sin(1.0 + i as f64)).collect();
    normalize(&mut v);
    let mut eig = rayleigh(&gram, &v)?;
    for _ in 0..SINGULAR_MAX_ITER {
        let mut w = lu.solve(&v)?;
        if !w.iter().all(|x| x.is_finite()) {
            return Ok(0.0);
        }
        normalize(&mut w);
        v = w;
        let next = rayleigh(&gram, &v)?;
        let done = (next - eig).abs() <= SINGULAR_TOL * next.abs().max(f64::MIN_POSITIVE);
        eig = next;
        if done {
            return Ok(libm::sqrt(eig.max(0.0)));
        }
    }
    Err(Error::NoConvergence {
        iterations: SINGULAR_MAX_ITER,
    })
}

fn normalize(v: &mut [f64]) {
    let n = linalg::norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn rayleigh(g: &DenseMatrix, v: &[f64]) -> Result<f64> {
    Ok(linalg::dot(v, &g.mul_vec(v)?))
}

/// Generator of diagonal entries `a_ii`, indexed from `i = 1`.
pub type DiagRule = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Diagonal operator `diag(a_11, a_22, …)` truncated at order `N`.
#[derive(Clone)]
pub struct DiagonalOperator {
    rule: DiagRule,
    entries: Vec<f64>,
    analytic_inf: Option<f64>,
    analytic_sup: Option<f64>,
}

impl fmt::Debug for DiagonalOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiagonalOperator")
            .field("order", &self.entries.len())
            .field("analytic_inf", &self.analytic_inf)
            .field("analytic_sup", &self.analytic_sup)
            .finish_non_exhaustive()
    }
}

impl DiagonalOperator {
    pub fn new<F>(rule: F, order: usize) -> Result<Self>
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self::from_rule(Arc::new(rule), order)
    }

    pub fn from_rule(rule: DiagRule, order: usize) -> Result<Self> {
        let entries: Vec<f64> = (1..=order).map(|i| rule(i)).collect();
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("diagonal entries"));
        }
        Ok(DiagonalOperator {
            rule,
            entries,
            analytic_inf: None,
            analytic_sup: None,
        })
    }

    /// Constant diagonal `c · I`.
    pub fn constant(c: f64, order: usize) -> Result<Self> {
        Ok(Self::new(move |_| c, order)?
            .with_analytic_inf(c.abs())
            .with_analytic_sup(c.abs()))
    }

    pub fn with_analytic_inf(mut self, v: f64) -> Self {
        self.analytic_inf = Some(v);
        self
    }

    pub fn with_analytic_sup(mut self, v: f64) -> Self {
        self.analytic_sup = Some(v);
        self
    }

    /// The same rule at another truncation order.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        let mut out = Self::from_rule(Arc::clone(&self.rule), order)?;
        out.analytic_inf = self.analytic_inf;
        out.analytic_sup = self.analytic_sup;
        Ok(out)
    }

    pub fn order(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn analytic_inf(&self) -> Option<f64> {
        self.analytic_inf
    }

    pub fn analytic_sup(&self) -> Option<f64> {
        self.analytic_sup
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::function_space::check_len(self.order(), x.len())?;
        Ok(self.entries.iter().zip(x).map(|(a, v)| a * v).collect())
    }

    pub fn to_matrix(&self, p: f64) -> Result<TruncatedMatrix> {
        TruncatedMatrix::new(DenseMatrix::diagonal(&self.entries), p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalStats {
    /// `min_{i≤N} |a_ii|`.
    pub min_abs: f64,
    /// `max_{i≤N} |a_ii|`, the exact operator norm of the window.
    pub max_abs: f64,
}

pub fn diagonal_stats(d: &DiagonalOperator) -> DiagonalStats {
    entry_stats(&d.entries)
}

pub(crate) fn entry_stats(entries: &[f64]) -> DiagonalStats {
    let (min_abs, max_abs) = entries.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    DiagonalStats {
        min_abs: if entries.is_empty() { 0.0 } else { min_abs },
        max_abs,
    }
}

/// Covering constant of a diagonal (or multiplication) operator: the infimum
/// of the absolute entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringEstimate {
    /// Minimum over the truncation; nonincreasing in `N`.
    pub truncated: f64,
    /// Supplied infimum over all indices, when known.
    pub analytic: Option<f64>,
}

impl CoveringEstimate {
    /// The analytic value if supplied, otherwise the truncated minimum.
    pub fn value(&self) -> f64 {
        self.analytic.unwrap_or(self.truncated)
    }
}

pub fn diagonal_covering_constant(d: &DiagonalOperator) -> CoveringEstimate {
    CoveringEstimate {
        truncated: diagonal_stats(d).min_abs,
        analytic: d.analytic_inf,
    }
}

/// Hypothesis check `0 < M_B < m_A ≤ M_A ≤ 1` for diagonal `A`, `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalConditions {
    pub m_a: f64,
    pub big_m_a: f64,
    pub big_m_b: f64,
    pub passes: bool,
    pub reasons: Vec<Reason>,
    /// Admissible `(α, λ)` range `(M_B, m_A]`; `None` when empty.
    pub admissible: Option<(f64, f64)>,
}

pub fn check_conditions_diagonal(a: &DiagonalOperator, b: &DiagonalOperator) -> DiagonalConditions {
    let sa = diagonal_stats(a);
    let sb = diagonal_stats(b);
    let m_a = a.analytic_inf.unwrap_or(sa.min_abs);
    let big_m_a = a.analytic_sup.unwrap_or(sa.max_abs);
    let big_m_b = b.analytic_sup.unwrap_or(sb.max_abs);
    let mut reasons = Vec::new();
    if big_m_b <= 0.0 {
        reasons.push(Reason::ZeroModulus);
    }
    if big_m_b >= m_a {
        reasons.push(Reason::DiagonalBNotBelowA);
    }
    if big_m_a > 1.0 {
        reasons.push(Reason::DiagonalAAboveOne);
    }
    DiagonalConditions {
        m_a,
        big_m_a,
        big_m_b,
        passes: reasons.is_empty(),
        reasons,
        admissible: (big_m_b < m_a).then_some((big_m_b, m_a)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSolveReport {
    pub s: f64,
    pub sigma: Vec<f64>,
    /// `max_i |a_ii σ_i − b_ii σ_i − ω_i| / max(1, |ω_i|)`.
    pub max_residual: f64,
    pub conditions: DiagonalConditions,
    /// Whether the a-posteriori distance bound is backed by the hypotheses.
    pub bound_guaranteed: bool,
}

/// Solves `A σ(s) = B σ(s) + ω(s)` componentwise: `σ_i = ω_i(s)/(a_ii − b_ii)`.
///
/// Components with `a_ii = b_ii` and `ω_i(s) = 0` get `σ_i = 0`. Without
/// `force`, a failed hypothesis check is an error; with it the solve runs and
/// the report marks the bound as not guaranteed.
pub fn solve_stochastic_diagonal<W>(
    a: &DiagonalOperator,
    b: &DiagonalOperator,
    omega: W,
    s: f64,
    force: bool,
) -> Result<DiagonalSolveReport>
where
    W: Fn(f64) -> Vec<f64>,
{
    let n = a.order();
    crate::function_space::check_len(n, b.order())?;
    let omega_s = omega(s);
    crate::function_space::check_len(n, omega_s.len())?;
    let conditions = check_conditions_diagonal(a, b);
    if !conditions.passes && !force {
        return Err(Error::ConditionViolated(Reason::join(&conditions.reasons)));
    }
    let mut sigma = Vec::with_capacity(n);
    for (i, ((&ai, &bi), &wi)) in a.entries.iter().zip(&b.entries).zip(&omega_s).enumerate() {
        let d = ai - bi;
        if d == 0.0 {
            if wi != 0.0 {
                return Err(Error::NoSolution { index: i + 1 });
            }
            sigma.push(0.0);
        } else {
            sigma.push(wi / d);
        }
    }
    let max_residual = a
        .entries
        .iter()
        .zip(&b.entries)
        .zip(sigma.iter().zip(&omega_s))
        .map(|((ai, bi), (si, wi))| (ai * si - bi * si - wi).abs() / wi.abs().max(1.0))
        .fold(0.0, f64::max);
    let bound_guaranteed = conditions.passes;
    Ok(DiagonalSolveReport {
        s,
        sigma,
        max_residual,
        conditions,
        bound_guaranteed,
    })
}

/// Distance bound `‖σ(s) − x‖_p ≤ ‖B(x) + ω(s) − A(x)‖_p / (α − M_B)` at
/// anchor `x`. `α` must lie in `(M_B, m_A)`.
pub fn diagonal_bound_check(
    a: &DiagonalOperator,
    b: &DiagonalOperator,
    omega_s: &[f64],
    sigma: &[f64],
    anchor: &[f64],
    alpha: f64,
    p: f64,
) -> Result<BoundCheck> {
    let c = check_conditions_diagonal(a, b);
    if !(alpha > c.big_m_b && alpha < c.m_a) {
        return Err(Error::AlphaOutOfRange {
            alpha,
            lo: c.big_m_b,
            hi: c.m_a,
        });
    }
    let ax = a.apply(anchor)?;
    let bx = b.apply(anchor)?;
    crate::function_space::check_len(anchor.len(), omega_s.len())?;
    crate::function_space::check_len(anchor.len(), sigma.len())?;
    let defect: Vec<f64> = bx.iter().zip(omega_s).zip(&ax).map(|((b, w), a)| b + w - a).collect();
    let diff: Vec<f64> = sigma.iter().zip(anchor).map(|(s, x)| s - x).collect();
    Ok(BoundCheck::new(
        alpha,
        lp_norm(&diff, p),
        lp_norm(&defect, p) / (alpha - c.big_m_b),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(values: &[f64]) -> TruncatedMatrix {
        TruncatedMatrix::new(DenseMatrix::diagonal(values), 2.0).unwrap()
    }

    #[test]
    fn apply_matrix_examples() {
        let id = TruncatedMatrix::new(DenseMatrix::identity(3), 2.0).unwrap();
        assert_eq!(apply_matrix(&id, &[1.0, -2.0, 3.0]).unwrap(), [1.0, -2.0, 3.0]);
        let a = diag(&[0.5, 1.0 / 3.0, 0.25]);
        assert_eq!(apply_matrix(&a, &[1.0, 1.0, 1.0]).unwrap(), [0.5, 1.0 / 3.0, 0.25]);
        let z = TruncatedMatrix::new(DenseMatrix::zeros(3, 3), 2.0).unwrap();
        assert_eq!(apply_matrix(&z, &[4.0, 5.0, 6.0]).unwrap(), [0.0; 3]);
        assert!(apply_matrix(&z, &[1.0]).is_err());
    }

    #[test]
    fn row_vector_convention() {
        // Upper-triangular window: out_j = Σ_i a_ij x_i.
        let a = TruncatedMatrix::new(
            DenseMatrix::from_rows(&[alloc::vec![1.0, 2.0], alloc::vec![0.0, 3.0]]).unwrap(),
            2.0,
        )
        .unwrap();
        assert_eq!(apply_matrix(&a, &[1.0, 1.0]).unwrap(), [1.0, 5.0]);
    }

    #[test]
    fn exponent_validation() {
        assert!(TruncatedMatrix::new(DenseMatrix::identity(2), 1.0).is_err());
        assert!(TruncatedMatrix::new(DenseMatrix::identity(2), f64::INFINITY).is_err());
        let a = TruncatedMatrix::new(DenseMatrix::identity(2), 3.0).unwrap();
        assert!((1.0 / a.p() + 1.0 / a.q() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn holder_bounds() {
        let z = TruncatedMatrix::new(DenseMatrix::zeros(4, 4), 2.0).unwrap();
        assert_eq!(norm_upper_bound(&z), 0.0);
        assert_eq!(transpose_norm_upper_bound(&z), 0.0);
        let id = TruncatedMatrix::new(DenseMatrix::identity(9), 2.0).unwrap();
        assert_relative_eq!(norm_upper_bound(&id), 3.0, max_relative = 1e-15);
        let e11 = TruncatedMatrix::new(
            DenseMatrix::from_rows(&[alloc::vec![1.0, 0.0], alloc::vec![0.0, 0.0]]).unwrap(),
            2.0,
        )
        .unwrap();
        assert_eq!(transpose_norm_upper_bound(&e11), 1.0);
        let sym = TruncatedMatrix::new(
            DenseMatrix::from_rows(&[alloc::vec![1.0, -2.0], alloc::vec![-2.0, 0.5]]).unwrap(),
            2.0,
        )
        .unwrap();
        assert_relative_eq!(norm_upper_bound(&sym), transpose_norm_upper_bound(&sym));
    }

    #[test]
    fn harmonic_diagonal_bound_below_one() {
        let a = TruncatedMatrix::from_fn(2000, 2.0, |i, j| if i == j { 1.0 / (i + 1) as f64 } else { 0.0 }).unwrap();
        let b = norm_upper_bound(&a);
        // Σ_{j≥1} 1/(j+1)² = π²/6 − 1 ≈ 0.645
        assert!(b < 1.0);
        assert!(b * b < core::f64::consts::PI.powi(2) / 6.0 - 1.0);
    }

    #[test]
    fn basis_vector_bound_examples() {
        let id = TruncatedMatrix::new(DenseMatrix::identity(5), 2.0).unwrap();
        assert_eq!(basis_vector_covering_upper_bound(&id), 1.0);
        let a = TruncatedMatrix::from_fn(10, 2.0, |i, j| if i == j { 1.0 / (i + 1) as f64 } else { 0.0 }).unwrap();
        assert_relative_eq!(basis_vector_covering_upper_bound(&a), 1.0 / 11.0, max_relative = 1e-15);
        // Columns, not rows: column 2 of ((3, 0), (4, 5)) has norm 5, column 1 has 5 too;
        // the rows would give 3.
        let b = TruncatedMatrix::new(
            DenseMatrix::from_rows(&[alloc::vec![3.0, 0.0], alloc::vec![4.0, 5.0]]).unwrap(),
            2.0,
        )
        .unwrap();
        assert_eq!(basis_vector_covering_upper_bound(&b), 5.0);
    }

    #[test]
    fn summable_class_bound_shrinks_with_order() {
        // a_ij = 2^{-(i+j)} satisfies both summability conditions.
        let mut prev = f64::INFINITY;
        for n in [5usize, 10, 20, 40] {
            let a = TruncatedMatrix::from_fn(n, 2.0, |i, j| libm::pow(0.5, (i + j) as f64)).unwrap();
            let b = basis_vector_covering_upper_bound(&a);
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-11);
    }

    #[test]
    fn min_singular_examples() {
        let id = TruncatedMatrix::new(DenseMatrix::identity(4), 2.0).unwrap();
        assert_relative_eq!(min_singular_estimate(&id).unwrap(), 1.0, max_relative = 1e-12);
        let d = diag(&[0.5, 1.0 / 3.0]);
        assert_relative_eq!(min_singular_estimate(&d).unwrap(), 1.0 / 3.0, max_relative = 1e-10);
        let z = TruncatedMatrix::new(DenseMatrix::zeros(3, 3), 2.0).unwrap();
        assert_eq!(min_singular_estimate(&z).unwrap(), 0.0);
        let p3 = TruncatedMatrix::new(DenseMatrix::identity(2), 3.0).unwrap();
        assert!(min_singular_estimate(&p3).is_err());
    }

    #[test]
    fn diagonal_stats_and_covering() {
        let d = DiagonalOperator::new(|i| 1.0 / (i + 1) as f64, 100).unwrap();
        let s = diagonal_stats(&d);
        assert_eq!(s.min_abs, 1.0 / 101.0);
        assert_eq!(s.max_abs, 0.5);
        let c = DiagonalOperator::constant(-0.4, 7).unwrap();
        let s = diagonal_stats(&c);
        assert_eq!((s.min_abs, s.max_abs), (0.4, 0.4));
        let ones = DiagonalOperator::new(|_| 1.0, 10).unwrap();
        assert_eq!(diagonal_covering_constant(&ones).truncated, 1.0);
        let stairs = DiagonalOperator::new(|i| [0.9, 0.8].get(i - 1).copied().unwrap_or(0.7), 12)
            .unwrap()
            .with_analytic_inf(0.7);
        let cov = diagonal_covering_constant(&stairs);
        assert_eq!((cov.truncated, cov.value()), (0.7, 0.7));
    }

    #[test]
    fn harmonic_covering_trend() {
        let base = DiagonalOperator::new(|i| 1.0 / (i + 1) as f64, 10).unwrap();
        let mut prev = f64::INFINITY;
        for n in [10usize, 20, 40, 80] {
            let c = diagonal_covering_constant(&base.truncated(n).unwrap()).truncated;
            assert_eq!(c, 1.0 / (n + 1) as f64);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn condition_check_examples() {
        let a = DiagonalOperator::constant(0.9, 20).unwrap();
        let b = DiagonalOperator::constant(0.1, 20).unwrap();
        let c = check_conditions_diagonal(&a, &b);
        assert!(c.passes);
        assert_eq!(c.admissible, Some((0.1, 0.9)));

        let a = DiagonalOperator::new(|i| 0.3 - 0.1 / (i + 1) as f64, 20).unwrap();
        let b = DiagonalOperator::new(|i| 0.8 + 0.1 / (i + 1) as f64, 20).unwrap();
        let c = check_conditions_diagonal(&a, &b);
        assert!(!c.passes);
        assert!(c.reasons.contains(&Reason::DiagonalBNotBelowA));
        assert_eq!(alloc::format!("{}", Reason::DiagonalBNotBelowA), "M_B ≥ m_A");

        let a = DiagonalOperator::constant(1.5, 5).unwrap();
        let c = check_conditions_diagonal(&a, &b.truncated(5).unwrap());
        assert!(c.reasons.contains(&Reason::DiagonalAAboveOne));
    }

    #[test]
    fn diagonal_solver_examples() {
        let id = DiagonalOperator::constant(1.0, 6).unwrap();
        let zero = DiagonalOperator::constant(0.0, 6).unwrap();
        let omega = |s: f64| (1..=6).map(|i| s / (1u64 << i) as f64).collect::<Vec<_>>();
        let r = solve_stochastic_diagonal(&id, &zero, omega, 0.7, true).unwrap();
        assert_eq!(r.sigma, omega(0.7));
        assert!(!r.bound_guaranteed);

        let a = DiagonalOperator::constant(0.9, 6).unwrap();
        let b = DiagonalOperator::constant(0.4, 6).unwrap();
        let r = solve_stochastic_diagonal(&a, &b, omega, 1.0, false).unwrap();
        for (s, w) in r.sigma.iter().zip(omega(1.0)) {
            assert_relative_eq!(*s, w / 0.5, max_relative = 1e-15);
        }
        assert!(r.bound_guaranteed);
    }

    #[test]
    fn degenerate_components() {
        let a = DiagonalOperator::new(|i| if i == 2 { 0.5 } else { 0.9 }, 3).unwrap();
        let b = DiagonalOperator::new(|i| if i == 2 { 0.5 } else { 0.1 }, 3).unwrap();
        let ok = solve_stochastic_diagonal(&a, &b, |_| alloc::vec![1.0, 0.0, 1.0], 0.0, true).unwrap();
        assert_eq!(ok.sigma[1], 0.0);
        let err = solve_stochastic_diagonal(&a, &b, |_| alloc::vec![1.0, 2.0, 1.0], 0.0, true);
        assert_eq!(err.unwrap_err(), Error::NoSolution { index: 2 });
    }

    #[test]
    fn failed_conditions_need_force() {
        let a = DiagonalOperator::constant(0.2, 4).unwrap();
        let b = DiagonalOperator::constant(0.8, 4).unwrap();
        let w = |_: f64| alloc::vec![1.0; 4];
        assert!(matches!(
            solve_stochastic_diagonal(&a, &b, w, 0.0, false),
            Err(Error::ConditionViolated(_))
        ));
        assert!(solve_stochastic_diagonal(&a, &b, w, 0.0, true).is_ok());
    }

    #[test]
    fn bound_check_rejects_alpha_outside_interval() {
        let a = DiagonalOperator::constant(0.9, 3).unwrap();
        let b = DiagonalOperator::constant(0.1, 3).unwrap();
        let z = [0.0; 3];
        assert!(diagonal_bound_check(&a, &b, &z, &z, &z, 0.05, 2.0).is_err());
        assert!(diagonal_bound_check(&a, &b, &z, &z, &z, 0.9, 2.0).is_err());
        let c = diagonal_bound_check(&a, &b, &z, &z, &z, 0.5, 2.0).unwrap();
        assert!(c.pass && c.lhs == 0.0);
    }
}
