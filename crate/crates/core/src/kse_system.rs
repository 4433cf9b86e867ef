//! Semi-discrete Kuramoto–Sivashinsky system `U_t + L·U = F(U, t)`.
//!
//! `L = α·D2 + β·D4 = L₂⁻²(αL₂M₂ + βM₂²)` and `F(U) = −½·D1·(U∘U)`.
//!
//! Periodic systems evolve every grid value. Dirichlet systems evolve the
//! interior nodes only: the endpoint values are prescribed by the boundary
//! data, and their contribution through the linear operator, `L_IB·g(t)`,
//! is moved into the explicit term. Stage vectors are lifted back to full
//! length with [`SemiDiscreteKse::apply_boundary`] before `F` is evaluated.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compact_fd::{
    build_first_derivative, build_fourth_derivative, build_second_derivative, BoundaryScheme,
    DerivativeOperator, Grid,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Coefficients of `u_t + u·u_x + α·u_xx + β·u_xxxx = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KseParameters<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> KseParameters<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() || v == T::zero() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and nonzero, got {v}")));
            }
        }
        Ok(())
    }
}

type BoundaryFn<T> = dyn Fn(T) -> (T, T) + Send + Sync;

/// Time-dependent endpoint values `(u(a, t), u(b, t))`.
#[derive(Clone)]
pub struct BoundaryValues<T>(Arc<BoundaryFn<T>>);

impl<T: Real> BoundaryValues<T> {
    pub fn new(f: impl Fn(T) -> (T, T) + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn homogeneous() -> Self {
        Self::new(|_| (T::zero(), T::zero()))
    }

    pub fn at(&self, t: T) -> (T, T) {
        (self.0)(t)
    }
}

impl<T> fmt::Debug for BoundaryValues<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryValues(..)")
    }
}

#[derive(Debug, Clone)]
pub struct SemiDiscreteKse<T> {
    params: KseParameters<T>,
    grid: Grid<T>,
    d1: DerivativeOperator<T>,
    operator: DenseMatrix<T>,
    evolved: DenseMatrix<T>,
    /// `L_IB`: interior rows, endpoint columns (Dirichlet only).
    coupling: Option<DenseMatrix<T>>,
    boundary: Option<BoundaryValues<T>>,
}

impl<T: Real> SemiDiscreteKse<T> {
    /// Builds the system. Dirichlet grids require boundary data; periodic
    /// grids must not have any.
    pub fn assemble(params: KseParameters<T>, grid: Grid<T>, boundary: Option<BoundaryValues<T>>) -> Result<Self> {
        params.validate()?;
        match (grid.scheme(), &boundary) {
            (BoundaryScheme::Periodic, Some(_)) => {
                return Err(Error::Boundary("periodic systems take no boundary values".into()))
            }
            (BoundaryScheme::Dirichlet, None) => {
                return Err(Error::Boundary("Dirichlet systems need boundary values".into()))
            }
            _ => {}
        }
        let d1 = build_first_derivative(&grid)?;
        let d2 = build_second_derivative(&grid)?;
        let d4 = build_fourth_derivative(&grid)?;
        let operator = d2.matrix().combine(params.alpha, d4.matrix(), params.beta)?;

        let n = grid.n_points();
        let (evolved, coupling) = match grid.scheme() {
            BoundaryScheme::Periodic => (operator.clone(), None),
            BoundaryScheme::Dirichlet => {
                let interior: Vec<usize> = (1..n - 1).collect();
                (
                    operator.select(&interior, &interior),
                    Some(operator.select(&interior, &[0, n - 1])),
                )
            }
        };
        Ok(Self {
            params,
            grid,
            d1,
            operator,
            evolved,
            coupling,
            boundary,
        })
    }

    pub fn params(&self) -> &KseParameters<T> {
        &self.params
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn scheme(&self) -> BoundaryScheme {
        self.grid.scheme()
    }

    pub fn d1(&self) -> &DerivativeOperator<T> {
        &self.d1
    }

    /// Full `N×N` operator `L`.
    pub fn operator(&self) -> &DenseMatrix<T> {
        &self.operator
    }

    /// The block of `L` acting on the evolved unknowns.
    pub fn evolved_operator(&self) -> &DenseMatrix<T> {
        &self.evolved
    }

    pub fn boundary_values(&self) -> Option<&BoundaryValues<T>> {
        self.boundary.as_ref()
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    pub fn n_unknowns(&self) -> usize {
        self.evolved.rows()
    }

    /// `F(U, t) = −½·D1·(U∘U)` on the full grid vector.
    pub fn nonlinear_rhs(&self, u: &[T], _t: T) -> Result<Vec<T>> {
        check_len(self.n_points(), u.len())?;
        let sq: Vec<T> = u.iter().map(|&v| v * v).collect();
        let half = T::lit(-0.5);
        let mut out = self.d1.matrix().mat_vec(&sq)?;
        out.iter_mut().for_each(|v| *v *= half);
        Ok(out)
    }

    /// Overwrites the endpoint values with the boundary data at `t`.
    pub fn apply_boundary(&self, u: &[T], t: T) -> Result<Vec<T>> {
        let bv = self
            .boundary
            .as_ref()
            .ok_or_else(|| Error::Boundary("apply_boundary called on a periodic system".into()))?;
        check_len(self.n_points(), u.len())?;
        let (left, right) = bv.at(t);
        let mut out = u.to_vec();
        out[0] = left;
        *out.last_mut().expect("grid is non-empty") = right;
        Ok(out)
    }

    /// Extracts the evolved unknowns from a full grid vector.
    pub fn restrict(&self, u: &[T]) -> Result<Vec<T>> {
        check_len(self.n_points(), u.len())?;
        Ok(match self.scheme() {
            BoundaryScheme::Periodic => u.to_vec(),
            BoundaryScheme::Dirichlet => u[1..u.len() - 1].to_vec(),
        })
    }

    /// Full grid vector from the evolved unknowns at time `t`.
    pub fn lift(&self, v: &[T], t: T) -> Result<Vec<T>> {
        check_len(self.n_unknowns(), v.len())?;
        match &self.boundary {
            None => Ok(v.to_vec()),
            Some(bv) => {
                let (left, right) = bv.at(t);
                let mut out = Vec::with_capacity(v.len() + 2);
                out.push(left);
                out.extend_from_slice(v);
                out.push(right);
                Ok(out)
            }
        }
    }

    /// Explicit part of the evolved system: `F` restricted to the unknowns,
    /// minus `L_IB·g(t)` for Dirichlet systems.
    pub fn explicit_term(&self, v: &[T], t: T) -> Result<Vec<T>> {
        let u = self.lift(v, t)?;
        let f = self.nonlinear_rhs(&u, t)?;
        match (&self.coupling, &self.boundary) {
            (Some(c), Some(bv)) => {
                let (left, right) = bv.at(t);
                let lb = c.mat_vec(&[left, right])?;
                Ok(f[1..f.len() - 1].iter().zip(lb).map(|(&fi, li)| fi - li).collect())
            }
            _ => Ok(f),
        }
    }

    /// Full right-hand side `−L·U + F(U)` on the grid vector.
    pub fn vector_field(&self, u: &[T], t: T) -> Result<Vec<T>> {
        let lu = self.operator.mat_vec(u)?;
        let f = self.nonlinear_rhs(u, t)?;
        Ok(f.into_iter().zip(lu).map(|(fi, li)| fi - li).collect())
    }
}
