use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{inner_product, l2_norm, same_grid, CoeffFunction, GridFunction, QuadGrid};
use crate::{Error, Result};

const GRAM_TOLERANCE: f64 = 1e-8;

/// Orthonormal family `e_1, e_2, …`.
#[derive(Debug, Clone)]
pub enum Basis {
    /// Members realized on a grid.
    Concrete {
        grid: Arc<QuadGrid>,
        members: Vec<GridFunction>,
    },
    /// Coefficients are manipulated directly; nothing can be synthesized.
    Abstract,
}

impl Basis {
    /// Normalized Legendre polynomials on `[a, b]`:
    /// `e_n(u) = sqrt((2n − 1)/(b − a)) · P_{n−1}(t)`, `t = (2u − a − b)/(b − a)`.
    ///
    /// Fails with [`Error::NotOrthonormal`] when the grid cannot resolve the
    /// Gram matrix to 1e-8 (the products reach degree `2N − 2`).
    pub fn legendre(grid: &Arc<QuadGrid>, len: usize) -> Result<Self> {
        let (a, b) = (grid.a_end(), grid.b_end());
        let mut members: Vec<GridFunction> = (0..len).map(|_| GridFunction::zeros(grid)).collect();
        for (i, &u) in grid.nodes().iter().enumerate() {
            let t = (2.0 * u - a - b) / (b - a);
            let (mut p_prev, mut p) = (0.0, 1.0);
            for (n, member) in members.iter_mut().enumerate() {
                member.values[i] = libm::sqrt((2 * n + 1) as f64 / (b - a)) * p;
                let k = (n + 1) as f64;
                let next = ((2.0 * k - 1.0) * t * p - (k - 1.0) * p_prev) / k;
                p_prev = p;
                p = next;
            }
        }
        let basis = Basis::Concrete {
            grid: Arc::clone(grid),
            members,
        };
        let deviation = basis.gram_deviation();
        if deviation > GRAM_TOLERANCE {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(basis)
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            Basis::Concrete { members, .. } => Some(members.len()),
            Basis::Abstract => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn member(&self, n: usize) -> Option<&GridFunction> {
        match self {
            Basis::Concrete { members, .. } => members.get(n.checked_sub(1)?),
            Basis::Abstract => None,
        }
    }

    /// `max |⟨e_m, e_n⟩ − δ_mn|`; zero for the abstract marker.
    pub fn gram_deviation(&self) -> f64 {
        let Basis::Concrete { members, .. } = self else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for (m, em) in members.iter().enumerate() {
            for (n, en) in members.iter().enumerate().skip(m) {
                let ip = inner_product(em, en).unwrap_or(f64::INFINITY);
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }

    fn concrete(&self, needed: usize) -> Result<(&Arc<QuadGrid>, &[GridFunction])> {
        match self {
            Basis::Concrete { grid, members } if members.len() >= needed => Ok((grid, members)),
            Basis::Concrete { members, .. } => Err(Error::InsufficientBasis {
                needed,
                available: members.len(),
            }),
            Basis::Abstract => Err(Error::InsufficientBasis { needed, available: 0 }),
        }
    }
}

/// `f_n = ⟨f, e_n⟩` for `n ≤ len`; the tail bound is
/// `sqrt(max(0, ‖f‖² − Σ f_n²))` (Bessel's inequality).
pub fn coeff_expand(f: &GridFunction, basis: &Basis, len: usize) -> Result<CoeffFunction> {
    let (grid, members) = basis.concrete(len)?;
    same_grid(f.grid(), grid)?;
    let coeffs: Vec<f64> = members[..len]
        .iter()
        .map(|e| inner_product(f, e))
        .collect::<Result<_>>()?;
    let norm_sq = {
        let n = l2_norm(f);
        n * n
    };
    let captured: f64 = coeffs.iter().map(|c| c * c).sum();
    let tail = libm::sqrt((norm_sq - captured).max(0.0));
    CoeffFunction::new(coeffs, tail)
}

/// `Σ c_n e_n` evaluated at the grid nodes.
pub fn coeff_synth(c: &CoeffFunction, basis: &Basis) -> Result<GridFunction> {
    let (grid, members) = basis.concrete(c.len())?;
    let mut values = alloc::vec![0.0; grid.len()];
    for (cn, e) in c.coeffs().iter().zip(members) {
        for (v, ev) in values.iter_mut().zip(e.values()) {
            *v += cn * ev;
        }
    }
    GridFunction::new(Arc::clone(grid), values)
}
