//! Solvers for `λ σ(s) = K σ(s) + ω(s)`:
//!
//! - closed form for tensor kernels `k = g ⊗ h`, through the scalar moment
//!   `⟨h, σ(s)⟩ = ⟨h, ω(s)⟩ / (λ − ⟨g, h⟩)`;
//! - contraction (Neumann) iteration `σ ← (K σ + ω)/λ` for any kernel;
//! - the coefficient-space system `a_m σ_m = Σ_n k_mn σ_n + ω_m`, solved
//!   densely or by iteration, and its rank-one closed form;
//! - the cut-off family `λ σ(s) = ∫_a^s k(·, v) σ(s)(v) dv + ω(s)`.
//!
//! Every report carries a residual recomputed through
//! [`KernelOperand::apply_kernel_dense`], independent of how the solution was
//! produced.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::amz_verification::{
    check_conditions_coefficient, check_conditions_kernel, BoundCheck, ConditionDiagnostic, Reason,
};
use crate::function_space::{check_len, inner_product, same_grid, CoeffFunction, GridFunction, L2Element, QuadGrid};
use crate::kernel_operators::{hs_norm, truncate_kernel_param, Kernel, KernelOperand, MultiplicationOperator};
use crate::linalg::{self, DenseMatrix};
use crate::{Error, Result};

/// Denominators at or below this magnitude are treated as singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-12;
/// Tolerance of [`moment_check`].
pub const MOMENT_TOLERANCE: f64 = 1e-8;
/// Step sizes below this fraction of `max(1, ‖σ‖)` are dominated by rounding
/// and excluded from the measured contraction factor.
const RATIO_FLOOR: f64 = 1e-9;

/// A parameterized forcing term `s ↦ ω(s)` on a parameter interval.
#[derive(Clone)]
pub struct NoiseFamily<T> {
    eval: Arc<dyn Fn(f64) -> T + Send + Sync>,
    domain: (f64, f64),
}

impl<T> fmt::Debug for NoiseFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseFamily")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl<T: L2Element> NoiseFamily<T> {
    pub fn new<F>(domain: (f64, f64), eval: F) -> Self
    where
        F: Fn(f64) -> T + Send + Sync + 'static,
    {
        NoiseFamily {
            eval: Arc::new(eval),
            domain,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// `ω(s)`; rejects `s` outside the domain and non-finite norms.
    pub fn evaluate(&self, s: f64) -> Result<T> {
        let (lo, hi) = self.domain;
        if !(lo..=hi).contains(&s) {
            return Err(Error::ParameterOutOfRange { s, lo, hi });
        }
        let w = (self.eval)(s);
        if !w.l2_norm().is_finite() {
            return Err(Error::NonFinite("noise"));
        }
        Ok(w)
    }
}

impl NoiseFamily<GridFunction> {
    /// `ω(s)(v) = f(s, v)` sampled on `grid`.
    pub fn on_grid<F>(grid: &Arc<QuadGrid>, domain: (f64, f64), f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let grid = Arc::clone(grid);
        Self::new(domain, move |s| GridFunction::from_fn(&grid, |v| f(s, v)))
    }
}

impl NoiseFamily<CoeffFunction> {
    /// `(ω(s))_n = f(s, n)` for `n = 1..=len`.
    pub fn coefficients<F>(len: usize, domain: (f64, f64), f: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        Self::new(domain, move |s| CoeffFunction::from_generator(len, |n| f(s, n)))
    }
}

/// Result of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub solution: T,
    /// `‖λσ − Kσ − ω‖` (or `‖aσ − Kσ − ω‖`), recomputed independently.
    pub residual_norm: f64,
    /// 0 for closed forms and direct solves.
    pub iterations: usize,
    /// Largest measured ratio of successive step sizes.
    pub contraction_estimate: Option<f64>,
    pub condition: ConditionDiagnostic,
    pub bound_checks: Vec<BoundCheck>,
}

impl<T> SolveReport<T> {
    pub fn bound_checks_passed(&self) -> usize {
        self.bound_checks.iter().filter(|b| b.pass).count()
    }
}

/// `‖λσ − K_dense σ − ω‖₂`.
pub fn residual_norm<F: KernelOperand>(k: &Kernel, lambda: f64, sigma: &F, omega_s: &F) -> Result<f64> {
    let mut r = sigma.scaled(lambda);
    r.axpy(-1.0, &F::apply_kernel_dense(k, sigma)?)?;
    r.axpy(-1.0, omega_s)?;
    Ok(r.l2_norm())
}

/// `sqrt(Σ_m (a_m σ_m − Σ_n k_mn σ_n − ω_m)²)`.
pub fn coeff_residual_norm(
    a: &MultiplicationOperator,
    k: &Kernel,
    sigma: &CoeffFunction,
    omega: &CoeffFunction,
) -> Result<f64> {
    check_len(a.len(), sigma.len())?;
    let ks = CoeffFunction::apply_kernel_dense(k, sigma)?;
    check_len(ks.len(), omega.len())?;
    let sq: f64 = a
        .entries()
        .iter()
        .zip(sigma.coeffs())
        .zip(ks.coeffs().iter().zip(omega.coeffs()))
        .map(|((am, sm), (km, wm))| {
            let r = am * sm - km - wm;
            r * r
        })
        .sum();
    Ok(libm::sqrt(sq))
}

fn violated(diag: &ConditionDiagnostic) -> Error {
    Error::ConditionViolated(diag.reason_text())
}

/// Closed-form solution for `k(u, v) = g(u) h(v)`:
/// `σ(s) = (1/λ) · (⟨h, ω(s)⟩ / (λ − ⟨g, h⟩)) · g + (1/λ) · ω(s)`.
///
/// Requires `|λ| > ‖g‖₂ ‖h‖₂`; with `force` the check is skipped and only a
/// singular denominator is fatal.
pub fn solve_tensor_closed_form(
    g: &GridFunction,
    h: &GridFunction,
    lambda: f64,
    omega: &NoiseFamily<GridFunction>,
    s: f64,
    force: bool,
) -> Result<SolveReport<GridFunction>> {
    same_grid(g.grid(), h.grid())?;
    let kernel = Kernel::tensor(g.clone(), h.clone());
    let diag = check_conditions_kernel(&kernel, lambda);
    if diag.kernel_norm >= lambda.abs() && !force {
        return Err(violated(&diag));
    }
    if lambda.abs() <= SINGULAR_DENOMINATOR {
        return Err(Error::DenominatorSingular { value: lambda });
    }
    let denom = lambda - inner_product(g, h)?;
    if denom.abs() <= SINGULAR_DENOMINATOR {
        return Err(Error::DenominatorSingular { value: denom });
    }
    let omega_s = omega.evaluate(s)?;
    let moment = inner_product(h, &omega_s)? / denom;
    let mut sigma = omega_s.scaled(1.0 / lambda);
    sigma.axpy(moment / lambda, g)?;
    let residual = residual_norm(&kernel, lambda, &sigma, &omega_s)?;
    Ok(SolveReport {
        solution: sigma,
        residual_norm: residual,
        iterations: 0,
        contraction_estimate: None,
        condition: diag,
        bound_checks: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannOptions {
    /// Stop when `‖σ^{m+1} − σ^m‖ < tol · max(1, ‖σ^m‖)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        NeumannOptions {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Contraction iteration `σ⁰ = ω/λ`, `σ^{m+1} = (K σ^m + ω)/λ`.
///
/// Requires `‖k‖ < |λ|`. `|λ| > 1` is accepted with a warning since only the
/// ratio `‖k‖/|λ|` governs convergence.
pub fn solve_neumann<F: KernelOperand>(
    k: &Kernel,
    lambda: f64,
    omega_s: &F,
    opts: NeumannOptions,
) -> Result<SolveReport<F>> {
    let diag = check_conditions_kernel(k, lambda);
    if diag.kernel_norm >= lambda.abs() {
        return Err(violated(&diag));
    }
    if lambda.abs() > 1.0 {
        log::warn!(
            "|lambda| = {} > 1: iterating anyway, contraction ratio {}",
            lambda.abs(),
            diag.kernel_norm / lambda.abs()
        );
    }
    let inv = 1.0 / lambda;
    let mut sigma = omega_s.scaled(inv);
    let mut prev_step: Option<f64> = None;
    let mut ratio: Option<f64> = None;
    for m in 1..=opts.max_iter {
        let mut next = F::apply_kernel(k, &sigma)?;
        next.axpy(1.0, omega_s)?;
        next.scale(inv);
        let scale = sigma.l2_norm().max(1.0);
        let step = next.distance(&sigma)?;
        if !step.is_finite() {
            return Err(Error::NonFinite("Neumann iterate"));
        }
        if let Some(p) = prev_step {
            if p > RATIO_FLOOR * scale {
                let r = step / p;
                ratio = Some(ratio.map_or(r, |q: f64| q.max(r)));
            }
        }
        prev_step = Some(step);
        sigma = next;
        if step < opts.tol * scale {
            let residual = residual_norm(k, lambda, &sigma, omega_s)?;
            return Ok(SolveReport {
                solution: sigma,
                residual_norm: residual,
                iterations: m,
                contraction_estimate: ratio,
                condition: diag,
                bound_checks: Vec::new(),
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoeffMethod {
    /// Dense elimination with partial pivoting.
    Direct,
    /// `σ^{m+1} = diag(a)^{-1} (K σ^m + ω)`.
    Iterative(NeumannOptions),
}

/// Solves the truncated system `(diag(a) − K) σ = ω`.
///
/// Requires `‖k‖ < inf |a_n|`; with `force` any numerically nonsingular
/// system is solved.
pub fn solve_coefficient_system(
    a: &MultiplicationOperator,
    k: &Kernel,
    omega: &CoeffFunction,
    method: CoeffMethod,
    force: bool,
) -> Result<SolveReport<CoeffFunction>> {
    let Kernel::CoeffMatrix { k: km, .. } = k else {
        return Err(Error::RepresentationMismatch);
    };
    let n = a.len();
    check_len(n, km.rows())?;
    check_len(n, km.cols())?;
    check_len(n, omega.len())?;
    let diag = check_conditions_coefficient(a, k);
    if diag.kernel_norm >= diag.covering_constant && !force {
        return Err(violated(&diag));
    }
    let (sigma, iterations, ratio) = match method {
        CoeffMethod::Direct => {
            let system = DenseMatrix::from_fn(n, n, |i, j| {
                let d = if i == j { a.entries()[i] } else { 0.0 };
                d - km.get(i, j)
            });
            (linalg::solve(&system, omega.coeffs())?, 0, None)
        }
        CoeffMethod::Iterative(opts) => iterate_coefficients(a.entries(), km, omega.coeffs(), opts)?,
    };
    let sigma = CoeffFunction::new(sigma, 0.0)?;
    let residual = coeff_residual_norm(a, k, &sigma, omega)?;
    Ok(SolveReport {
        solution: sigma,
        residual_norm: residual,
        iterations,
        contraction_estimate: ratio,
        condition: diag,
        bound_checks: Vec::new(),
    })
}

fn iterate_coefficients(
    a: &[f64],
    k: &DenseMatrix,
    omega: &[f64],
    opts: NeumannOptions,
) -> Result<(Vec<f64>, usize, Option<f64>)> {
    if a.contains(&0.0) {
        return Err(Error::SingularSystem);
    }
    let mut sigma: Vec<f64> = omega.iter().zip(a).map(|(w, d)| w / d).collect();
    let mut prev_step: Option<f64> = None;
    let mut ratio: Option<f64> = None;
    for m in 1..=opts.max_iter {
        let ks = k.mul_vec(&sigma)?;
        let next: Vec<f64> = ks.iter().zip(omega).zip(a).map(|((x, w), d)| (x + w) / d).collect();
        let scale = linalg::norm2(&sigma).max(1.0);
        let step = libm::sqrt(next.iter().zip(&sigma).map(|(x, y)| (x - y) * (x - y)).sum());
        if !step.is_finite() {
            return Err(Error::NonFinite("coefficient iterate"));
        }
        if let Some(p) = prev_step {
            if p > RATIO_FLOOR * scale {
                let r = step / p;
                ratio = Some(ratio.map_or(r, |q: f64| q.max(r)));
            }
        }
        prev_step = Some(step);
        sigma = next;
        if step < opts.tol * scale {
            return Ok((sigma, m, ratio));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
    })
}

/// Rank-one closed form with `a ≡ 1` and `k_mn = g_m h_n`:
/// `σ_m = (⟨ω, h⟩ / (1 − ⟨g, h⟩)) g_m + ω_m`, inner products over the
/// truncation.
pub fn solve_rank_one_unit(g: &CoeffFunction, h: &CoeffFunction, omega: &CoeffFunction) -> Result<CoeffFunction> {
    let denom = 1.0 - g.dot(h)?;
    if denom.abs() <= SINGULAR_DENOMINATOR {
        return Err(Error::DenominatorSingular { value: denom });
    }
    let c = omega.dot(h)? / denom;
    let mut sigma = omega.clone();
    sigma.axpy(c, g)?;
    Ok(sigma)
}

/// One parameter value of a cut-off family solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyRow {
    pub s: f64,
    /// `‖k_s‖` of the cut-off kernel.
    pub kernel_norm: f64,
    pub report: SolveReport<GridFunction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub cutoff: f64,
    pub cutoff_norm: f64,
    pub full_norm: f64,
    pub rows: Vec<FamilyRow>,
    /// `s ↦ ‖k_s‖` is nondecreasing along the sorted rows and bounded by
    /// `‖k‖`.
    pub norms_monotone: bool,
}

/// Solves `λ σ(s) = ∫_a^s k(·, v) σ(s)(v) dv + ω(s)` for every `s` in
/// `s_grid ⊂ [c, b]` by Neumann iteration on the cut-off kernel.
///
/// Requires `‖k‖ < |λ|` and `‖k_c‖ > 0`. Rows come back sorted by `s`.
pub fn solve_parameterized_family(
    k: &Kernel,
    lambda: f64,
    omega: &NoiseFamily<GridFunction>,
    s_grid: &[f64],
    c: f64,
    opts: NeumannOptions,
) -> Result<FamilyReport> {
    let diag = check_conditions_kernel(k, lambda);
    if diag.kernel_norm >= lambda.abs() {
        return Err(violated(&diag));
    }
    let (_, v_grid) = k.grids().ok_or(Error::RepresentationMismatch)?;
    let b = v_grid.b_end();
    let cutoff_norm = hs_norm(&truncate_kernel_param(k, c)?);
    if cutoff_norm <= 0.0 {
        return Err(Error::ConditionViolated(format!("{}", Reason::CutoffKernelZero)));
    }
    let mut sorted = s_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(sorted.len());
    for s in sorted {
        if !(c..=b).contains(&s) {
            return Err(Error::ParameterOutOfRange { s, lo: c, hi: b });
        }
        let ks = truncate_kernel_param(k, s)?;
        let omega_s = omega.evaluate(s)?;
        let report = solve_neumann(&ks, lambda, &omega_s, opts)?;
        rows.push(FamilyRow {
            s,
            kernel_norm: hs_norm(&ks),
            report,
        });
    }
    let full_norm = diag.kernel_norm;
    let norms_monotone = rows.windows(2).all(|w| w[0].kernel_norm <= w[1].kernel_norm)
        && rows.iter().all(|r| r.kernel_norm <= full_norm * (1.0 + 1e-12));
    Ok(FamilyReport {
        cutoff: c,
        cutoff_norm,
        full_norm,
        rows,
        norms_monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `⟨h, σ(s)⟩` against `⟨h, ω(s)⟩ / (λ − ⟨g, h⟩)`.
pub fn moment_check(
    g: &GridFunction,
    h: &GridFunction,
    lambda: f64,
    omega_s: &GridFunction,
    sigma_s: &GridFunction,
) -> Result<MomentCheck> {
    let denom = lambda - inner_product(g, h)?;
    if denom.abs() <= SINGULAR_DENOMINATOR {
        return Err(Error::DenominatorSingular { value: denom });
    }
    let lhs = inner_product(h, sigma_s)?;
    let rhs = inner_product(h, omega_s)? / denom;
    Ok(MomentCheck {
        lhs,
        rhs,
        pass: (lhs - rhs).abs() < MOMENT_TOLERANCE * rhs.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::default_grid;
    use approx::assert_relative_eq;

    fn example_setup() -> (Arc<QuadGrid>, GridFunction, GridFunction) {
        let grid = default_grid(-1.0, 1.0).unwrap();
        let g = GridFunction::from_fn(&grid, |u| u * u);
        let h = GridFunction::from_fn(&grid, |v| v.powi(4));
        (grid, g, h)
    }

    #[test]
    fn closed_form_polynomial_noise() {
        let (grid, g, h) = example_setup();
        let lambda = 0.9;
        let omega = NoiseFamily::on_grid(&grid, (0.0, 1.0), |s, v| s * s * v * v);
        let s: f64 = 0.5;
        let r = solve_tensor_closed_form(&g, &h, lambda, &omega, s, false).unwrap();
        let expected = GridFunction::from_fn(&grid, |u| {
            (1.0 / lambda) * 2.0 * s * s * u * u / (7.0 * lambda - 2.0) + s * s * u * u / lambda
        });
        assert!(r.solution.max_abs_diff(&expected).unwrap() < 1e-10);
        assert!(r.residual_norm < 1e-13);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn closed_form_odd_noise() {
        let (grid, g, h) = example_setup();
        let omega = NoiseFamily::on_grid(&grid, (0.0, 1.0), |s, v| s * s * libm::sin(v));
        let r = solve_tensor_closed_form(&g, &h, 0.8, &omega, 0.7, false).unwrap();
        let expected = GridFunction::from_fn(&grid, |u| 0.49 * libm::sin(u) / 0.8);
        assert!(r.solution.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn closed_form_zero_noise_and_errors() {
        let (grid, g, h) = example_setup();
        let zero = NoiseFamily::on_grid(&grid, (0.0, 1.0), |_, _| 0.0);
        let r = solve_tensor_closed_form(&g, &h, 0.9, &zero, 0.3, false).unwrap();
        assert!(r.solution.values().iter().all(|&v| v == 0.0));
        assert!(matches!(
            solve_tensor_closed_form(&g, &h, 0.2, &zero, 0.3, false),
            Err(Error::ConditionViolated(_))
        ));
        // λ = ⟨g, h⟩ = 2/7 makes the denominator vanish even under force.
        let lam = inner_product(&g, &h).unwrap();
        assert!(matches!(
            solve_tensor_closed_form(&g, &h, lam, &zero, 0.3, true),
            Err(Error::DenominatorSingular { .. })
        ));
        assert!(solve_tensor_closed_form(&g, &h, 0.2, &zero, 0.3, true).is_ok());
        assert!(matches!(
            solve_tensor_closed_form(&g, &h, 0.9, &zero, 1.5, false),
            Err(Error::ParameterOutOfRange { .. })
        ));
    }

    #[test]
    fn neumann_matches_closed_form() {
        let (grid, g, h) = example_setup();
        let omega = NoiseFamily::on_grid(&grid, (0.0, 1.0), |s, v| s * s * v * v);
        let k = Kernel::tensor(g.clone(), h.clone());
        for s in [0.25, 0.5, 1.0] {
            let cf = solve_tensor_closed_form(&g, &h, 0.9, &omega, s, false).unwrap();
            let nm = solve_neumann(&k, 0.9, &omega.evaluate(s).unwrap(), NeumannOptions::default()).unwrap();
            assert!(nm.solution.distance(&cf.solution).unwrap() < 1e-8);
            let bound = hs_norm(&k) / 0.9;
            assert!(nm.contraction_estimate.unwrap() <= bound + 1e-6);
            assert!(nm.residual_norm < 1e-9);
        }
    }

    #[test]
    fn neumann_zero_kernel_single_step() {
        let (grid, _, _) = example_setup();
        let k = Kernel::zero_on(&grid);
        let w = GridFunction::from_fn(&grid, libm::cos);
        let r = solve_neumann(&k, 0.5, &w, NeumannOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.solution.max_abs_diff(&w.scaled(2.0)).unwrap() < 1e-15);
    }

    #[test]
    fn neumann_rejects_non_contraction_and_caps_iterations() {
        let (grid, g, h) = example_setup();
        let k = Kernel::tensor(g, h);
        let w = GridFunction::from_fn(&grid, |v| v * v);
        assert!(matches!(
            solve_neumann(&k, 0.25, &w, NeumannOptions::default()),
            Err(Error::ConditionViolated(_))
        ));
        let opts = NeumannOptions {
            tol: 1e-16,
            max_iter: 3,
        };
        assert_eq!(
            solve_neumann(&k, 0.9, &w, opts).unwrap_err(),
            Error::NoConvergence { iterations: 3 }
        );
    }

    #[test]
    fn coefficient_zero_kernel() {
        let n = 8;
        let a = MultiplicationOperator::from_generator(n, |i| 0.5 + 0.05 * i as f64).unwrap();
        let k = Kernel::coeff(DenseMatrix::zeros(n, n), 0.0).unwrap();
        let w = CoeffFunction::from_generator(n, |i| 1.0 / i as f64);
        let r = solve_coefficient_system(&a, &k, &w, CoeffMethod::Direct, true).unwrap();
        for ((s, wi), ai) in r.solution.coeffs().iter().zip(w.coeffs()).zip(a.entries()) {
            assert_relative_eq!(*s, wi / ai, max_relative = 1e-15);
        }
        let big = Kernel::coeff(DenseMatrix::identity(n), 0.0).unwrap();
        assert!(matches!(
            solve_coefficient_system(&a, &big, &w, CoeffMethod::Direct, false),
            Err(Error::ConditionViolated(_))
        ));
    }

    #[test]
    fn rank_one_closed_form_small_cases() {
        let n = 50;
        let g = CoeffFunction::from_generator(n, |m| libm::pow(2.0, -(m as f64)));
        let h = CoeffFunction::from_generator(n, |m| libm::pow(3.0, -(m as f64)));
        let zero = CoeffFunction::zeros(n);
        assert_eq!(solve_rank_one_unit(&g, &h, &zero).unwrap(), zero);
        let w = CoeffFunction::from_generator(n, |m| libm::pow(4.0, -(m as f64)));
        assert_eq!(solve_rank_one_unit(&g, &zero, &w).unwrap(), w);
        let unit = CoeffFunction::from_generator(1, |_| 1.0);
        assert!(matches!(
            solve_rank_one_unit(&unit, &unit, &unit),
            Err(Error::DenominatorSingular { .. })
        ));
    }

    #[test]
    fn coefficient_representation_checked() {
        let (_, g, h) = example_setup();
        let a = MultiplicationOperator::constant(1.0, 3);
        let w = CoeffFunction::zeros(3);
        assert_eq!(
            solve_coefficient_system(&a, &Kernel::tensor(g, h), &w, CoeffMethod::Direct, false).unwrap_err(),
            Error::RepresentationMismatch
        );
    }

    #[test]
    fn family_endpoints() {
        let (grid, g, h) = example_setup();
        let k = Kernel::tensor(g.clone(), h.clone());
        let omega = NoiseFamily::on_grid(&grid, (-1.0, 1.0), |s, v| s * s * v * v);
        let fam =
            solve_parameterized_family(&k, 0.9, &omega, &[1.0, 0.0, 0.5], 0.0, NeumannOptions::default()).unwrap();
        assert_eq!(fam.rows.iter().map(|r| r.s).collect::<Vec<_>>(), [0.0, 0.5, 1.0]);
        assert!(fam.norms_monotone);
        let full = solve_tensor_closed_form(&g, &h, 0.9, &omega, 1.0, false).unwrap();
        assert!(fam.rows[2].report.solution.distance(&full.solution).unwrap() < 1e-9);

        let zero = NoiseFamily::on_grid(&grid, (-1.0, 1.0), |_, _| 0.0);
        let fam = solve_parameterized_family(&k, 0.9, &zero, &[0.0, 0.5], 0.0, NeumannOptions::default()).unwrap();
        assert!(fam.rows.iter().all(|r| r.report.solution.l2_norm() == 0.0));

        assert!(matches!(
            solve_parameterized_family(&k, 0.9, &omega, &[0.5], -1.0, NeumannOptions::default()),
            Err(Error::ConditionViolated(_))
        ));
        assert!(matches!(
            solve_parameterized_family(&k, 0.9, &omega, &[-0.5], 0.0, NeumannOptions::default()),
            Err(Error::ParameterOutOfRange { .. })
        ));
    }

    #[test]
    fn moment_identity() {
        let (grid, g, h) = example_setup();
        let lambda = 0.9;
        let s: f64 = 0.5;
        let omega = NoiseFamily::on_grid(&grid, (0.0, 1.0), |s, v| s * s * v * v);
        let r = solve_tensor_closed_form(&g, &h, lambda, &omega, s, false).unwrap();
        let w = omega.evaluate(s).unwrap();
        let m = moment_check(&g, &h, lambda, &w, &r.solution).unwrap();
        let expected = (2.0 * s * s / 7.0) / (lambda - 2.0 / 7.0);
        assert!(m.pass);
        assert!((m.lhs - expected).abs() < 1e-9 && (m.rhs - expected).abs() < 1e-9);
        let zero = GridFunction::zeros(&grid);
        let m = moment_check(&g, &h, lambda, &zero, &zero).unwrap();
        assert_eq!((m.lhs, m.rhs, m.pass), (0.0, 0.0, true));
    }
}
