//! Square-integrable functions in two representations: values at the nodes
//! of a quadrature grid, and truncated coefficient sequences with respect to
//! an orthonormal basis.

mod basis;
mod quadrature;

use alloc::sync::Arc;
use alloc::vec::Vec;

pub use basis::{coeff_expand, coeff_synth, Basis};
pub use quadrature::{
    default_grid, gauss_legendre_reference, make_grid, QuadGrid, QuadRule, DEFAULT_ORDER, DEFAULT_PANELS,
};

use crate::{Error, Result};

/// Vector-space operations shared by both function representations. The
/// solvers are written against this trait.
pub trait L2Element: Clone {
    /// The `L_2` norm (quadrature norm or square-sum of coefficients).
    fn l2_norm(&self) -> f64;
    /// `self += alpha * other`.
    fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()>;
    fn scale(&mut self, c: f64);
    fn zeros_like(&self) -> Self;

    /// `‖self − other‖`.
    fn distance(&self, other: &Self) -> Result<f64> {
        let mut d = self.clone();
        d.axpy(-1.0, other)?;
        Ok(d.l2_norm())
    }

    fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }
}

/// Function values at the nodes of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<QuadGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<QuadGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function values"));
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F: FnMut(f64) -> f64>(grid: &Arc<QuadGrid>, f: F) -> Self {
        let values = grid.nodes().iter().copied().map(f).collect();
        GridFunction {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn zeros(grid: &Arc<QuadGrid>) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: alloc::vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<QuadGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Quadrature value of `∫ f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.grid.weights()).map(|(v, w)| v * w).sum()
    }

    /// Pointwise product `f · m(x)`; used for indicator cut-offs.
    pub fn masked<F: FnMut(f64) -> f64>(&self, mut m: F) -> Self {
        let values = self
            .values
            .iter()
            .zip(self.grid.nodes())
            .map(|(v, &x)| v * m(x))
            .collect();
        GridFunction {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl L2Element for GridFunction {
    fn l2_norm(&self) -> f64 {
        l2_norm(self)
    }

    fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    fn zeros_like(&self) -> Self {
        GridFunction::zeros(&self.grid)
    }
}

pub(crate) fn same_grid(a: &Arc<QuadGrid>, b: &Arc<QuadGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `⟨f, g⟩ = Σ wᵢ fᵢ gᵢ`.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    same_grid(&f.grid, &g.grid)?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(f.grid.weights())
        .map(|((a, b), w)| w * a * b)
        .sum())
}

pub fn l2_norm(f: &GridFunction) -> f64 {
    let sq: f64 = f.values.iter().zip(f.grid.weights()).map(|(v, w)| w * v * v).sum();
    libm::sqrt(sq)
}

/// Truncated coefficient sequence `(f_1, …, f_N)`.
///
/// Indexing is 1-based in the generators (`f_n` for `n = 1..=N`), 0-based in
/// the backing slice.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffFunction {
    coeffs: Vec<f64>,
    tail_bound: f64,
}

impl CoeffFunction {
    pub fn new(coeffs: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) || !tail_bound.is_finite() {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(CoeffFunction {
            coeffs,
            tail_bound: tail_bound.max(0.0),
        })
    }

    /// Coefficients `gen(n)` for `n = 1..=len`, with no declared tail.
    pub fn from_generator<F: FnMut(usize) -> f64>(len: usize, gen: F) -> Self {
        CoeffFunction {
            coeffs: (1..=len).map(gen).collect(),
            tail_bound: 0.0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        CoeffFunction {
            coeffs: alloc::vec![0.0; len],
            tail_bound: 0.0,
        }
    }

    pub fn with_tail_bound(mut self, tail_bound: f64) -> Self {
        self.tail_bound = tail_bound.max(0.0);
        self
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `Σ f_n g_n` over the common truncation.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl L2Element for CoeffFunction {
    fn l2_norm(&self) -> f64 {
        libm::sqrt(self.coeffs.iter().map(|c| c * c).sum())
    }

    fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
        self.tail_bound += alpha.abs() * other.tail_bound;
        Ok(())
    }

    fn scale(&mut self, c: f64) {
        self.coeffs.iter_mut().for_each(|v| *v *= c);
        self.tail_bound *= c.abs();
    }

    fn zeros_like(&self) -> Self {
        CoeffFunction::zeros(self.len())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Arc<QuadGrid> {
        default_grid(-1.0, 1.0).unwrap()
    }

    #[test]
    fn moments_of_example_kernel_factors() {
        let g = grid();
        let u2 = GridFunction::from_fn(&g, |u| u * u);
        let v4 = GridFunction::from_fn(&g, |v| v.powi(4));
        let sin = GridFunction::from_fn(&g, libm::sin);
        assert_relative_eq!(inner_product(&u2, &v4).unwrap(), 2.0 / 7.0, max_relative = 1e-12);
        assert!(inner_product(&v4, &sin).unwrap().abs() < 1e-12);
    }

    #[test]
    fn norms_against_antiderivatives() {
        let g = grid();
        assert_eq!(l2_norm(&GridFunction::zeros(&g)), 0.0);
        // ∫ u⁴ = u⁵/5 |_{-1}^{1} = 2/5 ; ∫ v⁸ = v⁹/9 |_{-1}^{1} = 2/9
        let n2 = l2_norm(&GridFunction::from_fn(&g, |u| u * u));
        let n4 = l2_norm(&GridFunction::from_fn(&g, |v| v.powi(4)));
        assert_relative_eq!(n2, libm::sqrt(0.4), max_relative = 1e-13);
        assert_relative_eq!(n4, libm::sqrt(2.0 / 9.0), max_relative = 1e-13);
        assert_relative_eq!(n2 * n4, 2.0 / (3.0 * libm::sqrt(5.0)), max_relative = 1e-13);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = GridFunction::from_fn(&grid(), |x| x);
        let other = make_grid(-1.0, 1.0, 4, QuadRule::default()).unwrap();
        let b = GridFunction::from_fn(&other, |x| x);
        assert_eq!(inner_product(&a, &b), Err(Error::GridMismatch));
        // Structurally equal grids built separately are compatible.
        let c = GridFunction::from_fn(&grid(), |x| x);
        assert!(inner_product(&a, &c).is_ok());
    }

    #[test]
    fn inner_product_symmetric_and_bilinear() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut random = || {
                let c: [f64; 4] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
                GridFunction::from_fn(&g, move |x| {
                    c[0] + c[1] * x + c[2] * libm::sin(3.0 * x) + c[3] * libm::exp(-x * x)
                })
            };
            let (f, h, k) = (random(), random(), random());
            let (a, b) = (1.7, -0.3);
            let fh = inner_product(&f, &h).unwrap();
            assert_relative_eq!(fh, inner_product(&h, &f).unwrap(), max_relative = 1e-12);
            let mut comb = f.scaled(a);
            comb.axpy(b, &h).unwrap();
            let lhs = inner_product(&comb, &k).unwrap();
            let rhs = a * inner_product(&f, &k).unwrap() + b * inner_product(&h, &k).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn coeff_norm_and_dot() {
        let c = CoeffFunction::from_generator(3, |n| n as f64);
        assert_relative_eq!(c.l2_norm(), libm::sqrt(14.0));
        assert_eq!(c.dot(&c).unwrap(), 14.0);
        assert!(c.dot(&CoeffFunction::zeros(2)).is_err());
        assert!(CoeffFunction::new(alloc::vec![f64::NAN], 0.0).is_err());
    }
}
