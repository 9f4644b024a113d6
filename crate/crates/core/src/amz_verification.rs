//! Hypothesis checks for the parameterized coincidence-point theorem, the
//! a-posteriori distance bounds it yields, and a sampled covering-rate
//! estimator for maps of the plane.
//!
//! The theorem needs a Lipschitz modulus of the perturbation strictly below
//! the covering constant of the principal map. For the linear problems here
//! both quantities have closed forms: the covering constant of `λI` is `|λ|`,
//! that of a multiplication operator is `inf |a_n|`, and the modulus is the
//! Hilbert–Schmidt norm of the kernel.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::function_space::{CoeffFunction, L2Element};
use crate::kernel_operators::{
    hs_norm, mult_apply, mult_covering_constant, Kernel, KernelOperand, MultiplicationOperator,
};
use crate::{Error, Result};

/// Absolute slack allowed when declaring a bound check passed.
pub const BOUND_TOLERANCE: f64 = 1e-12;

/// Why a hypothesis check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    /// The Lipschitz modulus (kernel norm, `M_B`) is zero; the strict lower
    /// inequality fails.
    ZeroModulus,
    /// The modulus is not strictly below the covering constant.
    ModulusNotBelowCovering,
    /// `|λ| > 1`.
    LambdaAboveOne,
    /// `‖A‖_op > 1` for a multiplication operator.
    OperatorNormAboveOne,
    /// `M_B ≥ m_A` for diagonal systems.
    DiagonalBNotBelowA,
    /// `M_A > 1` for diagonal systems.
    DiagonalAAboveOne,
    /// The kernel cut off at the lower sweep end vanishes.
    CutoffKernelZero,
}

impl Reason {
    pub fn code(&self) -> &'static str {
        match self {
            Reason::ZeroModulus => "zero kernel",
            Reason::ModulusNotBelowCovering => "modulus ≥ covering",
            Reason::LambdaAboveOne => "|λ| > 1",
            Reason::OperatorNormAboveOne => "‖A‖op > 1",
            Reason::DiagonalBNotBelowA => "M_B ≥ m_A",
            Reason::DiagonalAAboveOne => "M_A > 1",
            Reason::CutoffKernelZero => "‖k_c‖ = 0",
        }
    }

    pub fn join(reasons: &[Reason]) -> String {
        let mut out = String::new();
        for (i, r) in reasons.iter().enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            out.push_str(r.code());
        }
        out
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Outcome of a hypothesis check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionDiagnostic {
    pub kernel_norm: f64,
    /// `|λ|`, or `‖A‖_op` for coefficient problems.
    pub lambda_abs: f64,
    pub covering_constant: f64,
    pub lipschitz_modulus: f64,
    /// Open interval of admissible `α`; `None` when empty.
    pub admissible_alpha: Option<(f64, f64)>,
    pub passes: bool,
    pub reasons: Vec<Reason>,
    pub zero_kernel: bool,
}

impl ConditionDiagnostic {
    fn build(kernel_norm: f64, lambda_abs: f64, covering: f64, mut reasons: Vec<Reason>) -> Self {
        if kernel_norm <= 0.0 {
            reasons.insert(0, Reason::ZeroModulus);
        }
        if kernel_norm >= covering {
            reasons.push(Reason::ModulusNotBelowCovering);
        }
        ConditionDiagnostic {
            kernel_norm,
            lambda_abs,
            covering_constant: covering,
            lipschitz_modulus: kernel_norm,
            admissible_alpha: (kernel_norm < covering).then_some((kernel_norm, covering)),
            passes: reasons.is_empty(),
            reasons,
            zero_kernel: kernel_norm <= 0.0,
        }
    }

    /// Only the strict `0 < ‖k‖` fails: the problem is trivially solvable
    /// even though the theorem does not literally apply.
    pub fn degenerate_pass(&self) -> bool {
        self.zero_kernel && self.reasons.iter().all(|r| *r == Reason::ZeroModulus)
    }

    /// Midpoint of the admissible interval.
    pub fn midpoint_alpha(&self) -> Option<f64> {
        self.admissible_alpha.map(|(lo, hi)| 0.5 * (lo + hi))
    }

    pub fn reason_text(&self) -> String {
        Reason::join(&self.reasons)
    }
}

/// Covering constant of `λ I`: `|λ|`. Stated for `|λ| ≤ 1`; outside that
/// range the value is still returned with a warning.
pub fn scalar_identity_covering(lambda: f64) -> f64 {
    if lambda.abs() > 1.0 {
        log::warn!(
            "|lambda| = {} exceeds 1; identity covering value used outside its stated range",
            lambda.abs()
        );
    }
    lambda.abs()
}

/// Checks `0 < ‖k‖ < |λ| ≤ 1`.
pub fn check_conditions_kernel(k: &Kernel, lambda: f64) -> ConditionDiagnostic {
    let norm = hs_norm(k);
    let cov = lambda.abs();
    let mut reasons = Vec::new();
    if cov > 1.0 {
        reasons.push(Reason::LambdaAboveOne);
    }
    ConditionDiagnostic::build(norm, cov, cov, reasons)
}

/// Checks `0 < ‖k‖ < ‖A‖_inf ≤ ‖A‖_op ≤ 1` on the truncation.
pub fn check_conditions_coefficient(a: &MultiplicationOperator, k: &Kernel) -> ConditionDiagnostic {
    let norm = hs_norm(k);
    let cov = mult_covering_constant(a);
    let mut reasons = Vec::new();
    if !cov.sup_at_most_one {
        reasons.push(Reason::OperatorNormAboveOne);
    }
    ConditionDiagnostic::build(norm, cov.op_norm, cov.covering.value(), reasons)
}

/// One evaluation of a distance bound `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub anchor: String,
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(alpha: f64, lhs: f64, rhs: f64) -> Self {
        BoundCheck {
            anchor: String::new(),
            alpha,
            lhs,
            rhs,
            pass: lhs <= rhs + BOUND_TOLERANCE,
        }
    }

    pub fn with_anchor(mut self, label: impl Into<String>) -> Self {
        self.anchor = label.into();
        self
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

fn check_alpha(alpha: f64, lo: f64, hi: f64) -> Result<()> {
    if alpha > lo && alpha < hi {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange { alpha, lo, hi })
    }
}

/// `‖K(f) + ω(s) − λ f‖₂ / (α − ‖k‖)` for `‖k‖ < α < |λ|`.
pub fn error_bound_rhs<F: KernelOperand>(k: &Kernel, lambda: f64, omega_s: &F, anchor: &F, alpha: f64) -> Result<f64> {
    let norm = hs_norm(k);
    check_alpha(alpha, norm, lambda.abs())?;
    let mut defect = F::apply_kernel(k, anchor)?;
    defect.axpy(1.0, omega_s)?;
    defect.axpy(-lambda, anchor)?;
    Ok(defect.l2_norm() / (alpha - norm))
}

/// Coefficient form: `sqrt(Σ_m (Σ_n k_mn f_n + ω_m − a_m f_m)²) / (α − ‖k‖)`
/// for `‖k‖ < α < inf |a_n|`.
pub fn error_bound_rhs_coeff(
    a: &MultiplicationOperator,
    k: &Kernel,
    omega: &CoeffFunction,
    anchor: &CoeffFunction,
    alpha: f64,
) -> Result<f64> {
    let norm = hs_norm(k);
    check_alpha(alpha, norm, mult_covering_constant(a).covering.value())?;
    let mut defect = CoeffFunction::apply_kernel(k, anchor)?;
    defect.axpy(1.0, omega)?;
    defect.axpy(-1.0, &mult_apply(a, anchor)?)?;
    Ok(defect.l2_norm() / (alpha - norm))
}

/// `‖σ(s) − f‖₂` against [`error_bound_rhs`].
pub fn bound_check<F: KernelOperand>(
    k: &Kernel,
    lambda: f64,
    omega_s: &F,
    sigma: &F,
    anchor: &F,
    alpha: f64,
) -> Result<BoundCheck> {
    let rhs = error_bound_rhs(k, lambda, omega_s, anchor, alpha)?;
    Ok(BoundCheck::new(alpha, sigma.distance(anchor)?, rhs))
}

/// `‖σ − f‖` against [`error_bound_rhs_coeff`].
pub fn bound_check_coeff(
    a: &MultiplicationOperator,
    k: &Kernel,
    omega: &CoeffFunction,
    sigma: &CoeffFunction,
    anchor: &CoeffFunction,
    alpha: f64,
) -> Result<BoundCheck> {
    let rhs = error_bound_rhs_coeff(a, k, omega, anchor, alpha)?;
    Ok(BoundCheck::new(alpha, sigma.distance(anchor)?, rhs))
}

/// Points of the plane.
pub type Point = [f64; 2];

/// Samples per bin edge in each polar direction of the domain disk.
const OVERSAMPLE: usize = 4;
/// Smallest accepted polar resolution per axis.
pub const MIN_RESOLUTION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    pub r: f64,
    /// Largest radius whose disk around `F(center)` is covered by occupied bins.
    pub covered_radius: f64,
    /// One bin diagonal at `covered_radius`.
    pub margin: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
}

/// Sampled bracket on the covering rate `α` in
/// `F(x) + α r B ⊂ F(x + r B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringRateEstimate {
    pub center: Point,
    pub radii: Vec<f64>,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    /// `(radial bins, angular bins)`.
    pub grid_resolution: (usize, usize),
    pub per_radius: Vec<RadiusEstimate>,
}

/// Brackets the covering rate of `map` at `center` over the given radii.
///
/// The disk `B(center, r)` is sampled on a polar grid `OVERSAMPLE` times
/// finer than the occupancy grid; images are binned into a polar grid around
/// `map(center)` with `resolution.0` rings spanning the largest image
/// distance and `resolution.1` sectors. The covered radius is the outer edge
/// of the last ring such that it and every ring inside it are fully occupied.
/// The margin is one bin diagonal. A map whose image is a single point gets
/// the bracket `[0, 0]`.
///
/// Over several radii the rate is the infimum, so the bracket is
/// `[min lower_r, min upper_r]`.
pub fn covering_rate_estimate<F>(
    map: F,
    center: Point,
    radii: &[f64],
    resolution: (usize, usize),
) -> Result<CoveringRateEstimate>
where
    F: Fn(Point) -> Point,
{
    let (n_rad, n_ang) = resolution;
    if n_rad < MIN_RESOLUTION {
        return Err(Error::InvalidResolution(n_rad));
    }
    if n_ang < MIN_RESOLUTION {
        return Err(Error::InvalidResolution(n_ang));
    }
    if radii.is_empty() {
        return Err(Error::DegenerateMap("no radii given"));
    }
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::DegenerateMap("radius must be positive and finite"));
        }
        per_radius.push(estimate_one_radius(&map, center, r, n_rad, n_ang)?);
    }
    let alpha_lower = per_radius.iter().map(|e| e.alpha_lower).fold(f64::INFINITY, f64::min);
    let alpha_upper = per_radius.iter().map(|e| e.alpha_upper).fold(f64::INFINITY, f64::min);
    Ok(CoveringRateEstimate {
        center,
        radii: radii.to_vec(),
        alpha_lower,
        alpha_upper,
        grid_resolution: resolution,
        per_radius,
    })
}

fn estimate_one_radius<F>(map: &F, center: Point, r: f64, n_rad: usize, n_ang: usize) -> Result<RadiusEstimate>
where
    F: Fn(Point) -> Point,
{
    let y0 = map(center);
    if !(y0[0].is_finite() && y0[1].is_finite()) {
        return Err(Error::DegenerateMap("non-finite image of the center"));
    }
    let n_rs = OVERSAMPLE * n_rad;
    let n_as = OVERSAMPLE * n_ang;
    let mut images = Vec::with_capacity(n_rs * n_as);
    let mut reach: f64 = 0.0;
    for i in 1..=n_rs {
        let rho = r * i as f64 / n_rs as f64;
        for j in 0..n_as {
            let theta = 2.0 * PI * (j as f64 + 0.5) / n_as as f64;
            let x = [center[0] + rho * libm::cos(theta), center[1] + rho * libm::sin(theta)];
            let y = map(x);
            let d = [y[0] - y0[0], y[1] - y0[1]];
            let dist = libm::hypot(d[0], d[1]);
            if !dist.is_finite() {
                return Err(Error::DegenerateMap("non-finite image"));
            }
            reach = reach.max(dist);
            images.push((dist, libm::atan2(d[1], d[0])));
        }
    }
    if reach == 0.0 {
        return Ok(RadiusEstimate {
            r,
            covered_radius: 0.0,
            margin: 0.0,
            alpha_lower: 0.0,
            alpha_upper: 0.0,
        });
    }
    let ring = reach / n_rad as f64;
    let sector = 2.0 * PI / n_ang as f64;
    let mut occupied = alloc::vec![false; n_rad * n_ang];
    for (dist, angle) in images {
        let k = ((dist / ring) as usize).min(n_rad - 1);
        let a = if angle < 0.0 { angle + 2.0 * PI } else { angle };
        let l = ((a / sector) as usize).min(n_ang - 1);
        occupied[k * n_ang + l] = true;
    }
    let full_rings = occupied
        .chunks(n_ang)
        .take_while(|ring| ring.iter().all(|&o| o))
        .count();
    let covered = ring * full_rings as f64;
    let margin = libm::hypot(ring, covered.max(ring) * sector);
    Ok(RadiusEstimate {
        r,
        covered_radius: covered,
        margin,
        alpha_lower: (covered - margin).max(0.0) / r,
        alpha_upper: (covered + margin) / r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{default_grid, GridFunction};
    use crate::linalg::DenseMatrix;
    use alloc::string::ToString;
    use approx::assert_relative_eq;

    fn example_kernel() -> Kernel {
        let g = default_grid(-1.0, 1.0).unwrap();
        Kernel::tensor(
            GridFunction::from_fn(&g, |u| u * u),
            GridFunction::from_fn(&g, |v| v.powi(4)),
        )
    }

    #[test]
    fn kernel_conditions() {
        let d = check_conditions_kernel(&example_kernel(), 0.9);
        assert!(d.passes);
        let (lo, hi) = d.admissible_alpha.unwrap();
        assert_relative_eq!(lo, 2.0 / (3.0 * libm::sqrt(5.0)), max_relative = 1e-12);
        assert_eq!(hi, 0.9);
        assert_eq!(d.covering_constant, 0.9);

        let g = default_grid(-1.0, 1.0).unwrap();
        let k = Kernel::tensor(
            GridFunction::from_fn(&g, |_| 0.3 / libm::sqrt(2.0)),
            GridFunction::from_fn(&g, |_| 1.0 / libm::sqrt(2.0)),
        );
        assert_relative_eq!(hs_norm(&k), 0.3, max_relative = 1e-14);
        let d = check_conditions_kernel(&k, 0.1);
        assert!(!d.passes);
        assert_eq!(d.reasons, [Reason::ModulusNotBelowCovering]);
        assert_eq!(d.reason_text(), "modulus ≥ covering");
        assert_eq!(d.admissible_alpha, None);

        let d = check_conditions_kernel(&example_kernel(), 1.5);
        assert_eq!(d.reasons, [Reason::LambdaAboveOne]);
        assert_eq!(Reason::LambdaAboveOne.to_string(), "|λ| > 1");
    }

    #[test]
    fn coefficient_conditions() {
        let n = 50;
        let g = CoeffFunction::from_generator(n, |m| libm::pow(2.0, -(m as f64)));
        let h = CoeffFunction::from_generator(n, |m| libm::pow(3.0, -(m as f64)));
        let k = Kernel::coeff_rank_one(&g, &h, 0.0).unwrap();
        let ones = MultiplicationOperator::constant(1.0, n);
        assert!(check_conditions_coefficient(&ones, &k).passes);

        let mut failed_at_large_n = false;
        for len in [10usize, 100, 1000] {
            let a = MultiplicationOperator::from_generator(len, |i| 1.0 / (i + 1) as f64).unwrap();
            let kk = Kernel::coeff(
                DenseMatrix::from_fn(len, len, |i, j| if i == j && i == 0 { 0.05 } else { 0.0 }),
                0.0,
            )
            .unwrap();
            failed_at_large_n = !check_conditions_coefficient(&a, &kk).passes;
        }
        assert!(failed_at_large_n);

        let zero = Kernel::coeff(DenseMatrix::zeros(n, n), 0.0).unwrap();
        let d = check_conditions_coefficient(&ones, &zero);
        assert!(!d.passes && d.zero_kernel && d.degenerate_pass());
    }

    #[test]
    fn scalar_covering() {
        assert_eq!(scalar_identity_covering(0.9), 0.9);
        assert_eq!(scalar_identity_covering(0.0), 0.0);
        assert_eq!(scalar_identity_covering(-1.0), 1.0);
        assert_eq!(scalar_identity_covering(-2.5), 2.5);
    }

    #[test]
    fn bound_rhs_at_zero_anchor() {
        let k = example_kernel();
        let g = default_grid(-1.0, 1.0).unwrap();
        let s: f64 = 1.0;
        let omega = GridFunction::from_fn(&g, |v| s * s * v * v);
        let zero = GridFunction::zeros(&g);
        let rhs = error_bound_rhs(&k, 0.9, &omega, &zero, 0.6).unwrap();
        let expected = libm::sqrt(0.4) / (0.6 - 2.0 / (3.0 * libm::sqrt(5.0)));
        assert_relative_eq!(rhs, expected, max_relative = 1e-12);
        assert!(matches!(
            error_bound_rhs(&k, 0.9, &omega, &zero, 0.95),
            Err(Error::AlphaOutOfRange { .. })
        ));
        assert!(error_bound_rhs(&k, 0.9, &omega, &zero, 0.1).is_err());
    }

    #[test]
    fn covering_identity_and_constant() {
        let est = covering_rate_estimate(|x| x, [0.3, -0.2], &[1.0], (400, 400)).unwrap();
        assert!(est.alpha_lower >= 0.98 && est.alpha_upper <= 1.02, "{est:?}");
        assert!(est.alpha_lower <= 1.0 && 1.0 <= est.alpha_upper);
        let c = covering_rate_estimate(|_| [1.0, 2.0], [0.0, 0.0], &[1.0], (64, 64)).unwrap();
        assert_eq!((c.alpha_lower, c.alpha_upper), (0.0, 0.0));
    }

    #[test]
    fn covering_scalar_rotation_and_projection() {
        let half = covering_rate_estimate(|x| [0.5 * x[0], 0.5 * x[1]], [0.0, 0.0], &[1.0], (128, 128)).unwrap();
        assert!(half.alpha_lower <= 0.5 && 0.5 <= half.alpha_upper);
        let (c, s) = (libm::cos(0.7), libm::sin(0.7));
        let rot = covering_rate_estimate(
            |x| [c * x[0] - s * x[1], s * x[0] + c * x[1]],
            [1.0, 1.0],
            &[0.5],
            (128, 128),
        )
        .unwrap();
        assert!(rot.alpha_lower <= 1.0 && 1.0 <= rot.alpha_upper);
        let proj = covering_rate_estimate(|x| [x[0], 0.0], [0.0, 0.0], &[1.0], (64, 64)).unwrap();
        assert_eq!(proj.per_radius[0].covered_radius, 0.0);
    }

    #[test]
    fn finer_resolution_narrows_bracket() {
        let mut width = f64::INFINITY;
        for n in [64usize, 128, 256] {
            let e = covering_rate_estimate(|x| x, [0.0, 0.0], &[1.0], (n, n)).unwrap();
            let w = e.alpha_upper - e.alpha_lower;
            assert!(w < width);
            width = w;
        }
    }

    #[test]
    fn covering_input_validation() {
        assert_eq!(
            covering_rate_estimate(|x| x, [0.0, 0.0], &[1.0], (32, 64)).unwrap_err(),
            Error::InvalidResolution(32)
        );
        assert!(covering_rate_estimate(|x| x, [0.0, 0.0], &[0.0], (64, 64)).is_err());
        assert!(covering_rate_estimate(|_| [f64::NAN, 0.0], [0.0, 0.0], &[1.0], (64, 64)).is_err());
    }
}
