//! Fourth-order compact finite-difference operators on uniform grids.
//!
//! Each derivative is defined implicitly by a tridiagonal (cyclic for periodic
//! grids) system `L·U' = M·U`. The operators are materialized as dense
//! matrices `L⁻¹M` because the time stepper needs the explicit linear operator
//! to shift and factor it.
//!
//! Periodic grids hold `N` unknowns `x_i = a + i·h`, `h = (b − a)/N`, with the
//! node at `b` identified with the one at `a`. Dirichlet grids hold `N` nodes
//! including both endpoints, `h = (b − a)/(N − 1)`, and close the stencils with
//! one-sided formulas at the ends.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lu_factor, mat_product, DenseMatrix};
use crate::scalar::Real;

/// Fewest grid points for which the one-sided closures do not overlap.
pub const MIN_POINTS_FIRST: usize = 6;
pub const MIN_POINTS_SECOND: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryScheme {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    a: T,
    b: T,
    n_points: usize,
    h: T,
    scheme: BoundaryScheme,
}

impl<T: Real> Grid<T> {
    pub fn new(a: T, b: T, n_points: usize, scheme: BoundaryScheme) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!(
                "need finite endpoints with b > a, got [{a}, {b}]"
            )));
        }
        let intervals = match scheme {
            BoundaryScheme::Periodic => n_points,
            BoundaryScheme::Dirichlet => n_points.saturating_sub(1),
        };
        if intervals == 0 {
            return Err(Error::TooFewPoints {
                required: 2,
                found: n_points,
            });
        }
        let h = (b - a) / T::from_count(intervals);
        if !(h > T::zero()) {
            return Err(Error::InvalidGrid(format!("non-positive spacing {h}")));
        }
        Ok(Self {
            a,
            b,
            n_points,
            h,
            scheme,
        })
    }

    pub fn periodic(a: T, b: T, n: usize) -> Result<Self> {
        Self::new(a, b, n, BoundaryScheme::Periodic)
    }

    pub fn dirichlet(a: T, b: T, n: usize) -> Result<Self> {
        Self::new(a, b, n, BoundaryScheme::Dirichlet)
    }

    /// Grid with spacing `h`; `(b − a)/h` must be an integer to 1e-9 relative.
    pub fn with_spacing(a: T, b: T, h: T, scheme: BoundaryScheme) -> Result<Self> {
        if !(h > T::zero() && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-positive spacing {h}")));
        }
        let ratio = ((b - a) / h).to_f64_lossy();
        let intervals = ratio.round();
        if intervals < 1.0 || (ratio - intervals).abs() > 1e-9 * intervals.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing {h} does not divide [{a}, {b}] evenly"
            )));
        }
        let intervals = intervals as usize;
        let n = match scheme {
            BoundaryScheme::Periodic => intervals,
            BoundaryScheme::Dirichlet => intervals + 1,
        };
        Self::new(a, b, n, scheme)
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    /// Number of stored values (unknowns for periodic grids, nodes for Dirichlet).
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn scheme(&self) -> BoundaryScheme {
        self.scheme
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_points)
            .map(|i| self.a + T::from_count(i) * self.h)
            .collect()
    }

    fn require(&self, required: usize) -> Result<()> {
        if self.n_points < required {
            Err(Error::TooFewPoints {
                required,
                found: self.n_points,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeOrder {
    First = 1,
    Second = 2,
    Fourth = 4,
}

/// Dense realization of one compact derivative on a grid.
#[derive(Debug, Clone)]
pub struct DerivativeOperator<T> {
    order: DerivativeOrder,
    matrix: DenseMatrix<T>,
    grid: Grid<T>,
}

impl<T: Real> DerivativeOperator<T> {
    pub fn order(&self) -> DerivativeOrder {
        self.order
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.matrix
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn scheme(&self) -> BoundaryScheme {
        self.grid.scheme
    }

    pub fn apply(&self, u: &[T]) -> Result<Vec<T>> {
        crate::error::check_len(self.grid.n_points, u.len())?;
        Ok(self.matrix.mat_vec(u)?)
    }

    /// Row-major CSV dump at full precision.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_matrix_csv(&self.matrix, w)
    }
}

pub fn write_matrix_csv<T: Real, W: Write>(m: &DenseMatrix<T>, mut w: W) -> io::Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|x| format!("{:.17e}", x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Tridiagonal (cyclic when periodic) matrix with constant bands.
fn banded<T: Real>(n: usize, periodic: bool, lower: T, diag: T, upper: T) -> DenseMatrix<T> {
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag;
        if i > 0 {
            m[(i, i - 1)] = lower;
        } else if periodic {
            m[(i, n - 1)] = lower;
        }
        if i + 1 < n {
            m[(i, i + 1)] = upper;
        } else if periodic {
            m[(i, 0)] = upper;
        }
    }
    m
}

/// The pair `(L₁, M₁)` with `L₁·U' = M₁·U`.
pub fn first_derivative_system<T: Real>(grid: &Grid<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    grid.require(MIN_POINTS_FIRST)?;
    let n = grid.n_points;
    let periodic = grid.scheme == BoundaryScheme::Periodic;
    let one = T::one();
    let s = T::lit(3.0) / grid.h;
    let mut lhs = banded(n, periodic, one, T::lit(4.0), one);
    let mut rhs = banded(n, periodic, -s, T::zero(), s);
    if !periodic {
        // 4u'_1 + 12u'_2 = (3/h)(−34/9 u_1 + 2u_2 + 2u_3 − 2/9 u_4), mirrored at the right end.
        let closure = [T::lit(-34.0 / 9.0), T::lit(2.0), T::lit(2.0), T::lit(-2.0 / 9.0)];
        for r in [0, n - 1] {
            for j in 0..n {
                lhs[(r, j)] = T::zero();
                rhs[(r, j)] = T::zero();
            }
        }
        lhs[(0, 0)] = T::lit(4.0);
        lhs[(0, 1)] = T::lit(12.0);
        lhs[(n - 1, n - 1)] = T::lit(4.0);
        lhs[(n - 1, n - 2)] = T::lit(12.0);
        for (j, &c) in closure.iter().enumerate() {
            rhs[(0, j)] = s * c;
            rhs[(n - 1, n - 1 - j)] = -s * c;
        }
    }
    Ok((lhs, rhs))
}

/// The pair `(L₂, M₂)` with `L₂·U'' = M₂·U`.
pub fn second_derivative_system<T: Real>(grid: &Grid<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    grid.require(MIN_POINTS_SECOND)?;
    let n = grid.n_points;
    let periodic = grid.scheme == BoundaryScheme::Periodic;
    let one = T::one();
    let s = T::lit(12.0) / (grid.h * grid.h);
    let mut lhs = banded(n, periodic, one, T::lit(10.0), one);
    let mut rhs = banded(n, periodic, s, T::lit(-2.0) * s, s);
    if !periodic {
        // 10u''_1 + 100u''_2 = (12/h²)(725/72 u_1 − 190/9 u_2 + 145/12 u_3 − 10/9 u_4 + 5/72 u_5).
        let closure = [
            T::lit(725.0 / 72.0),
            T::lit(-190.0 / 9.0),
            T::lit(145.0 / 12.0),
            T::lit(-10.0 / 9.0),
            T::lit(5.0 / 72.0),
        ];
        for r in [0, n - 1] {
            for j in 0..n {
                lhs[(r, j)] = T::zero();
                rhs[(r, j)] = T::zero();
            }
        }
        lhs[(0, 0)] = T::lit(10.0);
        lhs[(0, 1)] = T::lit(100.0);
        lhs[(n - 1, n - 1)] = T::lit(10.0);
        lhs[(n - 1, n - 2)] = T::lit(100.0);
        for (j, &c) in closure.iter().enumerate() {
            rhs[(0, j)] = s * c;
            rhs[(n - 1, n - 1 - j)] = s * c;
        }
    }
    Ok((lhs, rhs))
}

/// `D1 = L₁⁻¹M₁`.
pub fn build_first_derivative<T: Real>(grid: &Grid<T>) -> Result<DerivativeOperator<T>> {
    let (lhs, rhs) = first_derivative_system(grid)?;
    let matrix = lu_factor(&lhs)?.solve_matrix(&rhs)?;
    Ok(DerivativeOperator {
        order: DerivativeOrder::First,
        matrix,
        grid: *grid,
    })
}

/// `D2 = L₂⁻¹M₂`.
pub fn build_second_derivative<T: Real>(grid: &Grid<T>) -> Result<DerivativeOperator<T>> {
    let (lhs, rhs) = second_derivative_system(grid)?;
    let matrix = lu_factor(&lhs)?.solve_matrix(&rhs)?;
    Ok(DerivativeOperator {
        order: DerivativeOrder::Second,
        matrix,
        grid: *grid,
    })
}

/// `D4 = L₂⁻²M₂²`, the fourth-derivative form that enters the KSE operator
/// `L = L₂⁻²(αL₂M₂ + βM₂²)`.
///
/// On periodic grids `L₂` and `M₂` are circulant and commute, so this equals
/// `(L₂⁻¹M₂)²` exactly. With Dirichlet closures they do not commute and the
/// two forms differ in the rows near the ends; see
/// [`build_fourth_derivative_composed`].
pub fn build_fourth_derivative<T: Real>(grid: &Grid<T>) -> Result<DerivativeOperator<T>> {
    let (lhs, rhs) = second_derivative_system(grid)?;
    let lu = lu_factor(&lhs)?;
    let rhs_sq = mat_product(&rhs, &rhs)?;
    let matrix = lu.solve_matrix(&lu.solve_matrix(&rhs_sq)?)?;
    Ok(DerivativeOperator {
        order: DerivativeOrder::Fourth,
        matrix,
        grid: *grid,
    })
}

/// `D4 = (L₂⁻¹M₂)²`, i.e. the second-derivative operator applied twice.
pub fn build_fourth_derivative_composed<T: Real>(grid: &Grid<T>) -> Result<DerivativeOperator<T>> {
    let d2 = build_second_derivative(grid)?;
    let matrix = mat_product(&d2.matrix, &d2.matrix)?;
    Ok(DerivativeOperator {
        order: DerivativeOrder::Fourth,
        matrix,
        grid: *grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    fn periodic_error(n: usize, build: fn(&Grid<f64>) -> Result<DerivativeOperator<f64>>, exact: fn(f64) -> f64) -> f64 {
        let g = Grid::<f64>::periodic(0.0, 2.0 * PI, n).unwrap();
        let x = g.nodes();
        let u: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let du = build(&g).unwrap().apply(&u).unwrap();
        let ex: Vec<f64> = x.iter().map(|&v| exact(v)).collect();
        max_err(&du, &ex)
    }

    #[test]
    fn grid_spacing_conventions() {
        let p = Grid::<f64>::periodic(0.0, 2.0, 8).unwrap();
        assert_eq!(p.h(), 0.25);
        assert_eq!(p.nodes().last().copied(), Some(1.75));
        let d = Grid::<f64>::dirichlet(0.0, 2.0, 9).unwrap();
        assert_eq!(d.h(), 0.25);
        assert_eq!(d.nodes()[8], 2.0);
        let s = Grid::<f64>::with_spacing(-50.0, 50.0, 4.0, BoundaryScheme::Dirichlet).unwrap();
        assert_eq!(s.n_points(), 26);
        assert!(Grid::<f64>::with_spacing(0.0, 1.0, 0.3, BoundaryScheme::Dirichlet).is_err());
        assert!(Grid::<f64>::periodic(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn too_few_points_rejected() {
        let g = Grid::<f64>::dirichlet(0.0, 1.0, 5).unwrap();
        assert!(matches!(build_first_derivative(&g), Err(Error::TooFewPoints { required: 6, .. })));
        let g = Grid::<f64>::dirichlet(0.0, 1.0, 6).unwrap();
        assert!(build_first_derivative(&g).is_ok());
        assert!(matches!(build_second_derivative(&g), Err(Error::TooFewPoints { required: 7, .. })));
        assert!(matches!(build_fourth_derivative(&g), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn constants_are_annihilated() {
        for scheme in [BoundaryScheme::Periodic, BoundaryScheme::Dirichlet] {
            let g = Grid::<f64>::new(-1.0, 3.0, 17, scheme).unwrap();
            let ones = vec![1.0; 17];
            for op in [
                build_first_derivative(&g).unwrap(),
                build_second_derivative(&g).unwrap(),
                build_fourth_derivative(&g).unwrap(),
                build_fourth_derivative_composed(&g).unwrap(),
            ] {
                let scale = op.matrix().norm_inf();
                let r = op.apply(&ones).unwrap();
                assert!(max_err(&r, &vec![0.0; 17]) <= 1e-11 * scale, "{scheme:?} {:?}", op.order());
            }
        }
    }

    #[test]
    fn dirichlet_first_derivative_exact_on_linears() {
        let g = Grid::<f64>::dirichlet(0.0, 1.0, 11).unwrap();
        let x = g.nodes();
        let d = build_first_derivative(&g).unwrap().apply(&x).unwrap();
        assert!(max_err(&d, &vec![1.0; 11]) <= 1e-12);
    }

    #[test]
    fn dirichlet_second_derivative_exact_on_quadratics() {
        let g = Grid::<f64>::dirichlet(0.0, 1.0, 11).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let d = build_second_derivative(&g).unwrap().apply(&u).unwrap();
        assert!(max_err(&d, &vec![2.0; 11]) <= 1e-10);
    }

    #[test]
    fn fourth_derivative_annihilates_linears_on_dirichlet() {
        let g = Grid::<f64>::dirichlet(0.0, 1.0, 15).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|x| 3.0 * x - 1.0).collect();
        for op in [build_fourth_derivative(&g).unwrap(), build_fourth_derivative_composed(&g).unwrap()] {
            let r = op.apply(&u).unwrap();
            assert!(max_err(&r, &vec![0.0; 15]) <= 1e-11 * op.matrix().norm_inf());
        }
    }

    #[test]
    fn periodic_refinement_is_fourth_order() {
        let cases: [(fn(&Grid<f64>) -> Result<DerivativeOperator<f64>>, fn(f64) -> f64); 3] = [
            (build_first_derivative, f64::cos),
            (build_second_derivative, |x| -x.sin()),
            (build_fourth_derivative, f64::sin),
        ];
        for (build, exact) in cases {
            let e32 = periodic_error(32, build, exact);
            let e64 = periodic_error(64, build, exact);
            let order = (e32 / e64).log2();
            assert!((3.7..=4.3).contains(&order), "order {order}");
        }
    }

    #[test]
    fn periodic_operators_are_circulant_with_parity() {
        let g = Grid::<f64>::periodic(0.0, 1.0, 12).unwrap();
        let d1 = build_first_derivative(&g).unwrap();
        let d2 = build_second_derivative(&g).unwrap();
        let (m1, m2) = (d1.matrix(), d2.matrix());
        for i in 0..12 {
            for j in 0..12 {
                let shift = (j + 12 - i) % 12;
                assert!((m1[(i, j)] - m1[(0, shift)]).abs() <= 1e-10 * m1.max_abs());
                assert!((m2[(i, j)] - m2[(0, shift)]).abs() <= 1e-10 * m2.max_abs());
                assert!((m1[(i, j)] + m1[(j, i)]).abs() <= 1e-10 * m1.max_abs());
                assert!((m2[(i, j)] - m2[(j, i)]).abs() <= 1e-10 * m2.max_abs());
            }
        }
    }

    #[test]
    fn periodic_column_sums_vanish() {
        let g = Grid::<f64>::periodic(0.0, 10.0, 20).unwrap();
        for op in [build_first_derivative(&g).unwrap(), build_second_derivative(&g).unwrap()] {
            let m = op.matrix();
            for j in 0..20 {
                let s: f64 = (0..20).map(|i| m[(i, j)]).sum();
                assert!(s.abs() <= 1e-11 * m.norm_inf());
            }
        }
    }

    #[test]
    fn fourth_derivative_forms_agree_on_periodic_grids_only() {
        let p = Grid::<f64>::periodic(0.0, 2.0 * PI, 24).unwrap();
        let a = build_fourth_derivative(&p).unwrap();
        let b = build_fourth_derivative_composed(&p).unwrap();
        let diff = a.matrix().combine(1.0, b.matrix(), -1.0).unwrap();
        assert!(diff.max_abs() <= 1e-9 * a.matrix().max_abs());

        let d = Grid::<f64>::dirichlet(0.0, 1.0, 24).unwrap();
        let a = build_fourth_derivative(&d).unwrap();
        let b = build_fourth_derivative_composed(&d).unwrap();
        let diff = a.matrix().combine(1.0, b.matrix(), -1.0).unwrap();
        assert!(diff.max_abs() > 1e-6 * a.matrix().max_abs());
    }

    #[test]
    fn composed_fourth_derivative_matches_solve_route() {
        for scheme in [BoundaryScheme::Periodic, BoundaryScheme::Dirichlet] {
            let g = Grid::<f64>::new(0.0, 4.0, 20, scheme).unwrap();
            let (l2, m2) = second_derivative_system(&g).unwrap();
            let lu = lu_factor(&l2).unwrap();
            let inner = lu.solve_matrix(&m2).unwrap();
            let via_solves = lu.solve_matrix(&mat_product(&m2, &inner).unwrap()).unwrap();
            let composed = build_fourth_derivative_composed(&g).unwrap();
            let diff = via_solves.combine(1.0, composed.matrix(), -1.0).unwrap();
            assert!(diff.max_abs() <= 1e-9 * composed.matrix().max_abs());
        }
    }

    #[test]
    fn closure_rows_as_printed() {
        let g = Grid::<f64>::dirichlet(0.0, 9.0, 10).unwrap();
        let (l1, m1) = first_derivative_system(&g).unwrap();
        assert_eq!((l1[(0, 0)], l1[(0, 1)], l1[(9, 8)], l1[(9, 9)]), (4.0, 12.0, 12.0, 4.0));
        assert!((m1[(0, 0)] - 3.0 * (-34.0 / 9.0)).abs() < 1e-14);
        assert!((m1[(9, 6)] - 3.0 * (2.0 / 9.0)).abs() < 1e-14);
        let (l2, m2) = second_derivative_system(&g).unwrap();
        assert_eq!((l2[(0, 1)], l2[(9, 8)]), (100.0, 100.0));
        assert!((m2[(9, 5)] - 12.0 * 5.0 / 72.0).abs() < 1e-13);
    }

    #[test]
    fn csv_dump_is_row_major() {
        let g = Grid::<f64>::periodic(0.0, 1.0, 6).unwrap();
        let op = build_first_derivative(&g).unwrap();
        let mut buf = Vec::new();
        op.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        let first: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(first, op.matrix()[(1, 2)]);
    }

    #[test]
    fn single_precision_operator() {
        let g = Grid::<f32>::periodic(0.0, 6.283_185_5, 32).unwrap();
        let u: Vec<f32> = g.nodes().iter().map(|x| x.sin()).collect();
        let du = build_first_derivative(&g).unwrap().apply(&u).unwrap();
        let err = du
            .iter()
            .zip(g.nodes())
            .fold(0.0_f32, |m, (d, x)| m.max((d - x.cos()).abs()));
        assert!(err < 1e-4);
    }
}
