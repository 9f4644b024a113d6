//! Running a problem file over its parameter sweep.

use std::fmt::Write as _;
use std::io;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fredholm_core::amz_verification::{
    bound_check, bound_check_coeff, check_conditions_coefficient, check_conditions_kernel, BoundCheck,
    ConditionDiagnostic,
};
use fredholm_core::function_space::{make_grid, CoeffFunction, GridFunction, L2Element, QuadGrid, QuadRule};
use fredholm_core::kernel_operators::{truncate_kernel_param, Kernel, MultiplicationOperator};
use fredholm_core::solvers::{
    solve_coefficient_system, solve_neumann, solve_parameterized_family, solve_tensor_closed_form, CoeffMethod,
    NeumannOptions, NoiseFamily, SolveReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{AlphaChoice, KernelSpec, ProblemConfig, Sampling, SolverName};
use crate::expr::{Env, Expr};

pub const CSV_HEADER: &str = "s,residual,solution_norm,iterations,bound_checks_passed,bound_checks_total";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("conditions violated: {0} (use --force to solve anyway)")]
    ConditionViolated(String),
    #[error(transparent)]
    Core(#[from] fredholm_core::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Grid(GridFunction),
    Coeff(CoeffFunction),
}

impl Solution {
    pub fn l2_norm(&self) -> f64 {
        match self {
            Solution::Grid(f) => f.l2_norm(),
            Solution::Coeff(c) => c.l2_norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub s: f64,
    pub residual: f64,
    pub solution_norm: f64,
    pub iterations: usize,
    pub contraction_estimate: Option<f64>,
    pub bound_checks: Vec<BoundCheck>,
    /// Residual above tolerance, a failed bound check, or a solver error.
    pub flagged: bool,
    pub error: Option<String>,
    pub solution: Option<Solution>,
}

impl ReportRow {
    pub fn bound_checks_passed(&self) -> usize {
        self.bound_checks.iter().filter(|b| b.pass).count()
    }

    fn failed(s: f64, err: impl ToString) -> Self {
        ReportRow {
            s,
            residual: f64::NAN,
            solution_norm: f64::NAN,
            iterations: 0,
            contraction_estimate: None,
            bound_checks: Vec::new(),
            flagged: true,
            error: Some(err.to_string()),
            solution: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// Normal form of the configuration that was run.
    pub config_echo: String,
    pub seed: Option<u64>,
    pub condition: ConditionDiagnostic,
    /// `α` used for the bound checks, if any.
    pub alpha: Option<f64>,
    /// Sorted by `s`.
    pub rows: Vec<ReportRow>,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| !r.flagged)
    }

    /// Fixed columns, 17 significant digits; no timing, so repeated runs
    /// are byte-identical.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{},{},{}",
                r.s,
                r.residual,
                r.solution_norm,
                r.iterations,
                r.bound_checks_passed(),
                r.bound_checks.len()
            )?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn render_table(&self) -> String {
        let c = &self.condition;
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.config_echo.trim_end());
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "kernel norm {:.6e}, covering constant {:.6e}, conditions {}",
            c.kernel_norm,
            c.covering_constant,
            if c.passes {
                "pass".to_string()
            } else {
                format!("FAIL ({})", c.reason_text())
            }
        );
        match self.alpha {
            Some(a) => {
                let _ = writeln!(out, "bound checks at alpha = {a:.6e}");
            }
            None => {
                let _ = writeln!(out, "distance bound not guaranteed: no admissible alpha");
            }
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed {seed}");
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:>12}  {:>12}  {:>12}  {:>6}  {:>7}  status",
            "s", "residual", "norm", "iters", "bounds"
        );
        for r in &self.rows {
            let status = match (&r.error, r.flagged) {
                (Some(e), _) => format!("error: {e}"),
                (None, true) => "FLAGGED".to_string(),
                (None, false) => "ok".to_string(),
            };
            let _ = writeln!(
                out,
                "{:>12.6e}  {:>12.4e}  {:>12.6e}  {:>6}  {:>3}/{:<3}  {}",
                r.s,
                r.residual,
                r.solution_norm,
                r.iterations,
                r.bound_checks_passed(),
                r.bound_checks.len(),
                status
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{} of {} rows ok in {:.3} s",
            self.rows.iter().filter(|r| !r.flagged).count(),
            self.rows.len(),
            self.elapsed.as_secs_f64()
        );
        out
    }
}

/// Parameter values of the sweep, sorted.
pub fn sample_parameters(cfg: &ProblemConfig) -> Vec<f64> {
    let (lo, hi) = cfg.parameter.range;
    let mut s = match &cfg.parameter.sampling {
        Sampling::Grid { points: 1 } => vec![lo],
        Sampling::Grid { points } => (0..*points)
            .map(|i| {
                if i + 1 == *points {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (*points - 1) as f64
                }
            })
            .collect(),
        Sampling::Random { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..*samples).map(|_| rng.random_range(lo..=hi)).collect()
        }
        Sampling::List(v) => v.clone(),
    };
    s.sort_by(f64::total_cmp);
    s
}

enum Setup {
    Grid {
        kernel: Kernel,
        lambda: f64,
        noise: NoiseFamily<GridFunction>,
        grid: Arc<QuadGrid>,
        tensor: Option<(GridFunction, GridFunction)>,
    },
    Coeff {
        kernel: Kernel,
        a: MultiplicationOperator,
        noise: NoiseFamily<CoeffFunction>,
        n: usize,
    },
}

fn grid_fn(grid: &Arc<QuadGrid>, e: &Expr) -> GridFunction {
    GridFunction::from_fn(grid, |x| e.eval(&Env::at(0.0, x)))
}

fn coeff_fn(n: usize, s: f64, e: &Expr) -> CoeffFunction {
    CoeffFunction::from_generator(n, |m| e.eval(&Env::index(s, m)))
}

fn setup(cfg: &ProblemConfig) -> Result<Setup, RunError> {
    let range = cfg.parameter.range;
    if let KernelSpec::Coeff { n, g, h, a } = &cfg.kernel {
        let n = *n;
        let a = MultiplicationOperator::from_generator(n, |m| a.eval(&Env::index(0.0, m)))?;
        let kernel = Kernel::coeff_rank_one(&coeff_fn(n, 0.0, g), &coeff_fn(n, 0.0, h), 0.0)?;
        let noise_expr = cfg.noise.clone();
        let noise = NoiseFamily::coefficients(n, range, move |s, m| noise_expr.eval(&Env::index(s, m)));
        return Ok(Setup::Coeff { kernel, a, noise, n });
    }
    let (a, b) = cfg.domain.expect("validated: grid kernels have a domain").bounds();
    let grid = make_grid(a, b, cfg.panels, QuadRule::GaussLegendre { order: cfg.order })?;
    let lambda = cfg.lambda.expect("validated: grid kernels have lambda");
    let noise_expr = cfg.noise.clone();
    let noise = NoiseFamily::on_grid(&grid, range, move |s, v| noise_expr.eval(&Env::at(s, v)));
    let (kernel, tensor) = match &cfg.kernel {
        KernelSpec::Tensor { g, h } => {
            let (g, h) = (grid_fn(&grid, g), grid_fn(&grid, h));
            (Kernel::tensor(g.clone(), h.clone()), Some((g, h)))
        }
        KernelSpec::Grid { k } => (
            Kernel::grid_from_fn(&grid, &grid, |u, v| k.eval(&Env::pair(u, v)))?,
            None,
        ),
        KernelSpec::Coeff { .. } => unreachable!(),
    };
    Ok(Setup::Grid {
        kernel,
        lambda,
        noise,
        grid,
        tensor,
    })
}

/// Hypothesis check for the configured problem.
pub fn check_problem(cfg: &ProblemConfig) -> Result<ConditionDiagnostic, RunError> {
    Ok(match setup(cfg)? {
        Setup::Grid { kernel, lambda, .. } => check_conditions_kernel(&kernel, lambda),
        Setup::Coeff { kernel, a, .. } => check_conditions_coefficient(&a, &kernel),
    })
}

fn finish<T: L2Element>(
    s: f64,
    report: SolveReport<T>,
    wrap: fn(T) -> Solution,
    checks: Result<Vec<BoundCheck>, fredholm_core::Error>,
    residual_tol: f64,
) -> ReportRow {
    let (bound_checks, error) = match checks {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    // NaN residuals are flagged too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let flagged = error.is_some() || !(report.residual_norm <= residual_tol) || bound_checks.iter().any(|b| !b.pass);
    ReportRow {
        s,
        residual: report.residual_norm,
        solution_norm: report.solution.l2_norm(),
        iterations: report.iterations,
        contraction_estimate: report.contraction_estimate,
        bound_checks,
        flagged,
        error,
        solution: Some(wrap(report.solution)),
    }
}

#[allow(clippy::too_many_arguments)]
fn grid_checks(
    kernel: &Kernel,
    lambda: f64,
    omega_s: &GridFunction,
    sigma: &GridFunction,
    anchors: &[Expr],
    grid: &Arc<QuadGrid>,
    s: f64,
    alpha: Option<f64>,
) -> Result<Vec<BoundCheck>, fredholm_core::Error> {
    let Some(alpha) = alpha else {
        return Ok(Vec::new());
    };
    anchors
        .iter()
        .map(|e| {
            let f = GridFunction::from_fn(grid, |v| e.eval(&Env::at(s, v)));
            Ok(bound_check(kernel, lambda, omega_s, sigma, &f, alpha)?.with_anchor(e.to_string()))
        })
        .collect()
}

/// Solves every sampled `s`, recomputes residuals independently and checks
/// the distance bound at each anchor. Rows come back sorted by `s`.
pub fn run_problem(cfg: &ProblemConfig) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let setup = setup(cfg)?;
    let condition = match &setup {
        Setup::Grid { kernel, lambda, .. } => check_conditions_kernel(kernel, *lambda),
        Setup::Coeff { kernel, a, .. } => check_conditions_coefficient(a, kernel),
    };
    if !condition.passes && !cfg.force {
        return Err(RunError::ConditionViolated(condition.reason_text()));
    }
    let alpha = match cfg.alpha {
        AlphaChoice::Midpoint => condition.midpoint_alpha(),
        AlphaChoice::Value(a) => Some(a),
    };
    let s_values = sample_parameters(cfg);
    let opts = NeumannOptions {
        tol: cfg.tolerances.tol,
        max_iter: cfg.tolerances.max_iter,
    };
    let tol = cfg.tolerances.residual;
    let anchors = &cfg.anchors;

    let mut rows: Vec<ReportRow> = match (&setup, cfg.solver) {
        (
            Setup::Grid {
                kernel,
                lambda,
                noise,
                grid,
                ..
            },
            SolverName::Family { cutoff },
        ) => match solve_parameterized_family(kernel, *lambda, noise, &s_values, cutoff, opts) {
            Err(e) => s_values.iter().map(|&s| ReportRow::failed(s, &e)).collect(),
            Ok(fam) => fam
                .rows
                .into_par_iter()
                .map(|row| {
                    let s = row.s;
                    let checks = truncate_kernel_param(kernel, s).and_then(|ks| {
                        let w = noise.evaluate(s)?;
                        grid_checks(&ks, *lambda, &w, &row.report.solution, anchors, grid, s, alpha)
                    });
                    finish(s, row.report, Solution::Grid, checks, tol)
                })
                .collect(),
        },
        (
            Setup::Grid {
                kernel,
                lambda,
                noise,
                grid,
                tensor,
            },
            solver,
        ) => s_values
            .par_iter()
            .map(|&s| {
                let w = match noise.evaluate(s) {
                    Ok(w) => w,
                    Err(e) => return ReportRow::failed(s, e),
                };
                let solved = match (solver, tensor) {
                    (SolverName::ClosedForm, Some((g, h))) => {
                        solve_tensor_closed_form(g, h, *lambda, noise, s, cfg.force)
                    }
                    _ => solve_neumann(kernel, *lambda, &w, opts),
                };
                match solved {
                    Ok(report) => {
                        let checks = grid_checks(kernel, *lambda, &w, &report.solution, anchors, grid, s, alpha);
                        finish(s, report, Solution::Grid, checks, tol)
                    }
                    Err(e) => ReportRow::failed(s, e),
                }
            })
            .collect(),
        (Setup::Coeff { kernel, a, noise, n }, solver) => s_values
            .par_iter()
            .map(|&s| {
                let w = match noise.evaluate(s) {
                    Ok(w) => w,
                    Err(e) => return ReportRow::failed(s, e),
                };
                let method = match solver {
                    SolverName::Direct => CoeffMethod::Direct,
                    _ => CoeffMethod::Iterative(opts),
                };
                match solve_coefficient_system(a, kernel, &w, method, cfg.force) {
                    Ok(report) => {
                        let checks = match alpha {
                            None => Ok(Vec::new()),
                            Some(alpha) => anchors
                                .iter()
                                .map(|e| {
                                    let f = coeff_fn(*n, s, e);
                                    Ok(bound_check_coeff(a, kernel, &w, &report.solution, &f, alpha)?
                                        .with_anchor(e.to_string()))
                                })
                                .collect(),
                        };
                        finish(s, report, Solution::Coeff, checks, tol)
                    }
                    Err(e) => ReportRow::failed(s, e),
                }
            })
            .collect(),
    };
    rows.sort_by(|a, b| a.s.total_cmp(&b.s));

    Ok(RunReport {
        config_echo: cfg.to_string(),
        seed: match cfg.parameter.sampling {
            Sampling::Random { seed, .. } => Some(seed),
            _ => None,
        },
        condition,
        alpha,
        rows,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn grid_sampling_hits_both_ends() {
        let cfg = parse_config(
            "[problem]\ndomain = -1, 1\nlambda = 0.9\n[kernel]\ntype = tensor\ng = monomial(2)\nh = monomial(4)\n\
             [noise]\nomega = s\n[sweep]\nrange = 0, 1\nmode = grid\npoints = 11\n[solver]\nmethod = neumann\n",
        )
        .unwrap();
        let s = sample_parameters(&cfg);
        assert_eq!(s.len(), 11);
        assert_eq!((s[0], s[10]), (0.0, 1.0));
        assert!((s[3] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn random_sampling_is_seeded_and_sorted() {
        let text = "[problem]\ndomain = -1, 1\nlambda = 0.9\n[kernel]\ntype = tensor\ng = monomial(2)\nh = monomial(4)\n\
                    [noise]\nomega = s\n[sweep]\nrange = 0, 1\nmode = random\nsamples = 20\nseed = 7\n[solver]\nmethod = neumann\n";
        let cfg = parse_config(text).unwrap();
        let a = sample_parameters(&cfg);
        assert_eq!(a, sample_parameters(&cfg));
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.iter().all(|s| (0.0..=1.0).contains(s)));
        let other = parse_config(&text.replace("seed = 7", "seed = 8")).unwrap();
        assert_ne!(a, sample_parameters(&other));
    }
}
