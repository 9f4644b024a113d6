//! Hilbert–Schmidt kernels `k(u, v)` and the integral operators they induce,
//! `K(f)(u) = ∫ k(u, v) f(v) dv`, plus pointwise multiplication operators on
//! coefficient sequences.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::function_space::{
    check_len, inner_product, l2_norm, same_grid, CoeffFunction, GridFunction, L2Element, QuadGrid,
};
use crate::linalg::DenseMatrix;
use crate::lp_operators::{entry_stats, CoveringEstimate, DiagonalOperator};
use crate::{Error, Result};

/// A square-integrable kernel in one of three representations.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `k(u, v) = g(u) h(v)`; `g` lives on the output grid, `h` on the input grid.
    TensorProduct { g: GridFunction, h: GridFunction },
    /// `k(u, v) = Σ_m Σ_n k_mn e_m(u) e_n(v)`, truncated, with a declared bound
    /// on the Frobenius norm of the omitted entries.
    CoeffMatrix { k: DenseMatrix, tail_bound: f64 },
    /// Samples `values[(i, j)] = k(u_i, v_j)` at node pairs.
    GridSamples {
        u_grid: Arc<QuadGrid>,
        v_grid: Arc<QuadGrid>,
        values: DenseMatrix,
    },
}

impl Kernel {
    pub fn tensor(g: GridFunction, h: GridFunction) -> Self {
        Kernel::TensorProduct { g, h }
    }

    pub fn coeff(k: DenseMatrix, tail_bound: f64) -> Result<Self> {
        if !k.is_finite() || !tail_bound.is_finite() {
            return Err(Error::NonFinite("kernel coefficients"));
        }
        Ok(Kernel::CoeffMatrix {
            k,
            tail_bound: tail_bound.max(0.0),
        })
    }

    /// Rank-one coefficient kernel `k_mn = g_m h_n`.
    pub fn coeff_rank_one(g: &CoeffFunction, h: &CoeffFunction, tail_bound: f64) -> Result<Self> {
        let (gc, hc) = (g.coeffs(), h.coeffs());
        Self::coeff(
            DenseMatrix::from_fn(gc.len(), hc.len(), |m, n| gc[m] * hc[n]),
            tail_bound,
        )
    }

    /// Samples `k` at every node pair.
    pub fn grid_from_fn<F: FnMut(f64, f64) -> f64>(
        u_grid: &Arc<QuadGrid>,
        v_grid: &Arc<QuadGrid>,
        mut k: F,
    ) -> Result<Self> {
        let (un, vn) = (u_grid.nodes(), v_grid.nodes());
        let values = DenseMatrix::from_fn(un.len(), vn.len(), |i, j| k(un[i], vn[j]));
        if !values.is_finite() {
            return Err(Error::NonFinite("kernel samples"));
        }
        Ok(Kernel::GridSamples {
            u_grid: Arc::clone(u_grid),
            v_grid: Arc::clone(v_grid),
            values,
        })
    }

    pub fn zero_on(grid: &Arc<QuadGrid>) -> Self {
        Kernel::tensor(GridFunction::zeros(grid), GridFunction::zeros(grid))
    }

    /// `(output grid, input grid)` for grid-based kernels.
    pub fn grids(&self) -> Option<(&Arc<QuadGrid>, &Arc<QuadGrid>)> {
        match self {
            Kernel::TensorProduct { g, h } => Some((g.grid(), h.grid())),
            Kernel::GridSamples { u_grid, v_grid, .. } => Some((u_grid, v_grid)),
            Kernel::CoeffMatrix { .. } => None,
        }
    }

    /// Kernel value at node pair `(i, j)` (grid kernels) or entry `k_ij`.
    pub fn sample(&self, i: usize, j: usize) -> f64 {
        match self {
            Kernel::TensorProduct { g, h } => g.values()[i] * h.values()[j],
            Kernel::CoeffMatrix { k, .. } => k.get(i, j),
            Kernel::GridSamples { values, .. } => values.get(i, j),
        }
    }

    pub fn is_coeff(&self) -> bool {
        matches!(self, Kernel::CoeffMatrix { .. })
    }

    /// Multiplies the kernel by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Kernel::TensorProduct { g, h } => Kernel::tensor(g.scaled(c), h.clone()),
            Kernel::CoeffMatrix { k, tail_bound } => Kernel::CoeffMatrix {
                k: DenseMatrix::from_fn(k.rows(), k.cols(), |i, j| c * k.get(i, j)),
                tail_bound: tail_bound * c.abs(),
            },
            Kernel::GridSamples { u_grid, v_grid, values } => Kernel::GridSamples {
                u_grid: Arc::clone(u_grid),
                v_grid: Arc::clone(v_grid),
                values: DenseMatrix::from_fn(values.rows(), values.cols(), |i, j| c * values.get(i, j)),
            },
        }
    }
}

/// Hilbert–Schmidt norm `(∫∫ |k(u,v)|² dv du)^{1/2}`.
///
/// Tensor kernels use `‖g‖₂ ‖h‖₂`; coefficient kernels the Frobenius norm of
/// the truncated matrix; sampled kernels the tensorized double quadrature.
pub fn hs_norm(k: &Kernel) -> f64 {
    match k {
        Kernel::TensorProduct { g, h } => l2_norm(g) * l2_norm(h),
        Kernel::CoeffMatrix { k, .. } => k.frobenius_norm(),
        Kernel::GridSamples { u_grid, v_grid, values } => {
            let sum: f64 = u_grid
                .weights()
                .iter()
                .enumerate()
                .map(|(i, wu)| {
                    let row: f64 = values
                        .row(i)
                        .iter()
                        .zip(v_grid.weights())
                        .map(|(k, wv)| wv * k * k)
                        .sum();
                    wu * row
                })
                .sum();
            libm::sqrt(sum)
        }
    }
}

/// Upper bound on `‖K‖_op`; the Hilbert–Schmidt norm.
pub fn op_norm_bound(k: &Kernel) -> f64 {
    hs_norm(k)
}

/// Operands an integral operator can act on.
pub trait KernelOperand: L2Element {
    /// Structured application (rank-one shortcut for tensor kernels).
    fn apply_kernel(k: &Kernel, f: &Self) -> Result<Self>;
    /// Entrywise double loop over [`Kernel::sample`]; shares no code with
    /// [`KernelOperand::apply_kernel`] and is used for residual checks.
    fn apply_kernel_dense(k: &Kernel, f: &Self) -> Result<Self>;
}

impl KernelOperand for GridFunction {
    fn apply_kernel(k: &Kernel, f: &Self) -> Result<Self> {
        match k {
            Kernel::TensorProduct { g, h } => Ok(g.scaled(inner_product(h, f)?)),
            Kernel::GridSamples { u_grid, v_grid, values } => {
                same_grid(v_grid, f.grid())?;
                let weighted: Vec<f64> = f.values().iter().zip(v_grid.weights()).map(|(x, w)| x * w).collect();
                GridFunction::new(Arc::clone(u_grid), values.mul_vec(&weighted)?)
            }
            Kernel::CoeffMatrix { .. } => Err(Error::RepresentationMismatch),
        }
    }

    fn apply_kernel_dense(k: &Kernel, f: &Self) -> Result<Self> {
        let (u_grid, v_grid) = k.grids().ok_or(Error::RepresentationMismatch)?;
        same_grid(v_grid, f.grid())?;
        let w = v_grid.weights();
        let values = (0..u_grid.len())
            .map(|i| {
                let mut acc = 0.0;
                for (j, fj) in f.values().iter().enumerate() {
                    acc += w[j] * k.sample(i, j) * fj;
                }
                acc
            })
            .collect();
        GridFunction::new(Arc::clone(u_grid), values)
    }
}

impl KernelOperand for CoeffFunction {
    fn apply_kernel(k: &Kernel, f: &Self) -> Result<Self> {
        let Kernel::CoeffMatrix { k, .. } = k else {
            return Err(Error::RepresentationMismatch);
        };
        CoeffFunction::new(k.mul_vec(f.coeffs())?, 0.0)
    }

    fn apply_kernel_dense(k: &Kernel, f: &Self) -> Result<Self> {
        let Kernel::CoeffMatrix { k: m, .. } = k else {
            return Err(Error::RepresentationMismatch);
        };
        check_len(m.cols(), f.len())?;
        let out = (0..m.rows())
            .map(|i| {
                let mut acc = 0.0;
                for (j, fj) in f.coeffs().iter().enumerate() {
                    acc += k.sample(i, j) * fj;
                }
                acc
            })
            .collect();
        CoeffFunction::new(out, 0.0)
    }
}

/// `K(f)`: grid kernels act on [`GridFunction`], coefficient kernels on
/// [`CoeffFunction`]; anything else is a representation mismatch.
pub fn apply_kernel<F: KernelOperand>(k: &Kernel, f: &F) -> Result<F> {
    F::apply_kernel(k, f)
}

/// `k_s(u, v) = k(u, v) · 1[v ≤ s]`, sampled on the node pairs.
///
/// Nodes never move: columns with `v_j > s` are zeroed, which has the same
/// effect on every quadrature as zeroing their weights. When `s` falls inside
/// a panel this adds a cut error of order the panel width, see
/// [`cut_panel_width`].
pub fn truncate_kernel_param(k: &Kernel, s: f64) -> Result<Kernel> {
    let (u_grid, v_grid) = k.grids().ok_or(Error::RepresentationMismatch)?;
    let (lo, hi) = (v_grid.a_end(), v_grid.b_end());
    if !(lo..=hi).contains(&s) {
        return Err(Error::ParameterOutOfRange { s, lo, hi });
    }
    let nodes = v_grid.nodes();
    let values = DenseMatrix::from_fn(u_grid.len(), v_grid.len(), |i, j| {
        if nodes[j] <= s {
            k.sample(i, j)
        } else {
            0.0
        }
    });
    Ok(Kernel::GridSamples {
        u_grid: Arc::clone(u_grid),
        v_grid: Arc::clone(v_grid),
        values,
    })
}

/// Width of the panel strictly containing `s`, or 0 when `s` sits on a panel
/// boundary (the cut is then resolved exactly).
pub fn cut_panel_width(grid: &QuadGrid, s: f64) -> f64 {
    let h = grid.panel_width();
    let t = (s - grid.a_end()) / h;
    if (t - libm::round(t)).abs() <= 1e-12 * t.abs().max(1.0) {
        0.0
    } else {
        h
    }
}

/// Pointwise multiplication operator `A(f) = Σ a_n f_n e_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicationOperator {
    a: Vec<f64>,
    analytic_inf: Option<f64>,
    analytic_sup: Option<f64>,
}

impl MultiplicationOperator {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("multiplier entries"));
        }
        Ok(MultiplicationOperator {
            a,
            analytic_inf: None,
            analytic_sup: None,
        })
    }

    /// Entries `gen(n)`, `n = 1..=len`.
    pub fn from_generator<F: FnMut(usize) -> f64>(len: usize, gen: F) -> Result<Self> {
        Self::new((1..=len).map(gen).collect())
    }

    pub fn constant(c: f64, len: usize) -> Self {
        MultiplicationOperator {
            a: alloc::vec![c; len],
            analytic_inf: Some(c.abs()),
            analytic_sup: Some(c.abs()),
        }
    }

    pub fn with_analytic_inf(mut self, v: f64) -> Self {
        self.analytic_inf = Some(v);
        self
    }

    pub fn with_analytic_sup(mut self, v: f64) -> Self {
        self.analytic_sup = Some(v);
        self
    }

    pub fn entries(&self) -> &[f64] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn analytic_inf(&self) -> Option<f64> {
        self.analytic_inf
    }

    pub fn analytic_sup(&self) -> Option<f64> {
        self.analytic_sup
    }

    /// The same entries as a diagonal operator on sequences.
    pub fn to_diagonal(&self) -> Result<DiagonalOperator> {
        let a = self.a.clone();
        let n = a.len();
        let mut d = DiagonalOperator::new(move |i| a[i - 1], n)?;
        if let Some(v) = self.analytic_inf {
            d = d.with_analytic_inf(v);
        }
        if let Some(v) = self.analytic_sup {
            d = d.with_analytic_sup(v);
        }
        Ok(d)
    }
}

pub fn mult_apply(a: &MultiplicationOperator, f: &CoeffFunction) -> Result<CoeffFunction> {
    check_len(a.len(), f.len())?;
    let coeffs = a.a.iter().zip(f.coeffs()).map(|(x, y)| x * y).collect();
    CoeffFunction::new(coeffs, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierCovering {
    /// `inf |a_n|`, truncated and (when known) analytic.
    pub covering: CoveringEstimate,
    /// `‖A‖_op = max |a_n|` over the truncation.
    pub op_norm: f64,
    /// Whether `sup |a_n| ≤ 1`.
    pub sup_at_most_one: bool,
}

pub fn mult_covering_constant(a: &MultiplicationOperator) -> MultiplierCovering {
    let stats = entry_stats(&a.a);
    let op_norm = a.analytic_sup.unwrap_or(stats.max_abs);
    MultiplierCovering {
        covering: CoveringEstimate {
            truncated: stats.min_abs,
            analytic: a.analytic_inf,
        },
        op_norm,
        sup_at_most_one: op_norm <= 1.0,
    }
}
