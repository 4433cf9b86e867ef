//! Dense real and complex linear algebra.
//!
//! Everything the solver needs is dense: the compact operators are inverses
//! of (cyclic) tridiagonal matrices, so `L` and the shifted systems
//! `kL - cI` are full. Matrices are stored row-major.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{Float, Zero};
use thiserror::Error;

use crate::scalar::{Entry, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

fn check_dim(op: &'static str, expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { op, expected, found })
    }
}

/// Row-major dense matrix over a real or complex [`Entry`].
#[derive(Clone, PartialEq)]
pub struct DenseMatrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Entry> DenseMatrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![E::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<E>) -> Result<Self, LinalgError> {
        check_dim("from_row_major", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<E>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim("from_rows", cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [E] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn map<F: Entry>(&self, f: impl Fn(E) -> F) -> DenseMatrix<F> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: E) -> Self {
        self.map(|x| x * s)
    }

    /// `a·self + b·other`, entrywise.
    pub fn combine(&self, a: E, other: &Self, b: E) -> Result<Self, LinalgError> {
        check_dim("combine", self.rows, other.rows)?;
        check_dim("combine", self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    /// `self + s·I`.
    pub fn shift_diagonal(&self, s: E) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                op: "shift_diagonal",
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, i)] += s;
        }
        Ok(m)
    }

    /// Copy of the block with the given row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn mat_vec(&self, x: &[E]) -> Result<Vec<E>, LinalgError> {
        let mut y = vec![E::zero(); self.rows];
        self.mat_vec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn mat_vec_into(&self, x: &[E], y: &mut [E]) -> Result<(), LinalgError> {
        check_dim("mat_vec", self.cols, x.len())?;
        check_dim("mat_vec", self.rows, y.len())?;
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            let mut acc = E::zero();
            for (&a, &b) in row.iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        mat_product(self, other)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> E::Real {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.modulus()).sum::<E::Real>())
            .fold(E::Real::zero(), |m, s| m.max(s))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> E::Real {
        self.data
            .iter()
            .fold(E::Real::zero(), |m, x| m.max(x.modulus()))
    }

    pub fn check_finite(&self) -> Result<(), LinalgError> {
        match self.data.iter().position(|x| !x.finite()) {
            None => Ok(()),
            Some(p) => Err(LinalgError::NonFinite {
                row: p / self.cols,
                col: p % self.cols,
            }),
        }
    }
}

impl<T: Real> DenseMatrix<T> {
    pub fn to_complex(&self) -> DenseMatrix<Complex<T>> {
        self.map(|x| Complex::new(x, T::zero()))
    }
}

impl<E> Index<(usize, usize)> for DenseMatrix<E> {
    type Output = E;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for DenseMatrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.cols + j]
    }
}

impl<E: fmt::Debug> fmt::Debug for DenseMatrix<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// Plain triple-loop product `a·b` (i-k-j order for contiguous inner access).
pub fn mat_product<E: Entry>(a: &DenseMatrix<E>, b: &DenseMatrix<E>) -> Result<DenseMatrix<E>, LinalgError> {
    check_dim("mat_product", a.cols, b.rows)?;
    let mut c = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == E::zero() {
                continue;
            }
            let brow = b.row(k);
            for (cij, &bkj) in c.row_mut(i).iter_mut().zip(brow) {
                *cij += aik * bkj;
            }
        }
    }
    Ok(c)
}

/// `PA = LU` with partial pivoting. The unit lower factor and the upper factor
/// share one packed matrix.
#[derive(Clone, Debug)]
pub struct LuFactorization<E> {
    factors: DenseMatrix<E>,
    pivots: Vec<usize>,
}

impl<E: Entry> LuFactorization<E> {
    /// Factors `a`. A pivot is declared singular when its modulus is at most
    /// `n·eps` times the largest entry of its (original) row.
    pub fn factor(a: &DenseMatrix<E>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                op: "lu_factor",
                rows: a.rows,
                cols: a.cols,
            });
        }
        a.check_finite()?;
        let n = a.rows;
        let mut lu = a.clone();
        let mut pivots: Vec<usize> = (0..n).collect();
        let mut scale: Vec<E::Real> = (0..n)
            .map(|i| a.row(i).iter().fold(E::Real::zero(), |m, x| m.max(x.modulus())))
            .collect();
        let tol = E::Real::epsilon() * E::Real::from_count(n.max(1));

        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].modulus();
            for r in (k + 1)..n {
                let v = lu[(r, k)].modulus();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                pivots.swap(k, p);
                scale.swap(k, p);
            }
            if best == E::Real::zero() || best <= tol * scale[k] {
                return Err(LinalgError::Singular { pivot: k });
            }
            let inv_pivot = E::one() / lu[(k, k)];
            let (upper, lower) = lu.data.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..(k + 1) * n];
            for row in lower.chunks_exact_mut(n) {
                let m = row[k] * inv_pivot;
                row[k] = m;
                if m == E::zero() {
                    continue;
                }
                for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= m * u;
                }
            }
        }
        Ok(Self { factors: lu, pivots })
    }

    pub fn dim(&self) -> usize {
        self.factors.rows
    }

    pub fn factors(&self) -> &DenseMatrix<E> {
        &self.factors
    }

    /// Row permutation: row `i` of `PA` is row `pivots[i]` of `A`.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn solve(&self, b: &[E]) -> Result<Vec<E>, LinalgError> {
        check_dim("lu_solve", self.dim(), b.len())?;
        let mut x: Vec<E> = self.pivots.iter().map(|&p| b[p]).collect();
        self.substitute(&mut x);
        Ok(x)
    }

    /// Solves in place; `scratch` must have the same length as `b`.
    pub fn solve_in_place(&self, b: &mut [E], scratch: &mut [E]) -> Result<(), LinalgError> {
        check_dim("lu_solve", self.dim(), b.len())?;
        check_dim("lu_solve", self.dim(), scratch.len())?;
        for (s, &p) in scratch.iter_mut().zip(&self.pivots) {
            *s = b[p];
        }
        self.substitute(scratch);
        b.copy_from_slice(scratch);
        Ok(())
    }

    fn substitute(&self, x: &mut [E]) {
        let n = self.dim();
        let lu = &self.factors;
        for i in 0..n {
            let row = lu.row(i);
            let mut acc = x[i];
            for (&l, &xj) in row[..i].iter().zip(&x[..i]) {
                acc -= l * xj;
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = lu.row(i);
            let mut acc = x[i];
            for (&u, &xj) in row[i + 1..].iter().zip(&x[i + 1..]) {
                acc -= u * xj;
            }
            x[i] = acc / row[i];
        }
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix<E>) -> Result<DenseMatrix<E>, LinalgError> {
        check_dim("lu_solve", self.dim(), b.rows)?;
        let mut out = DenseMatrix::zeros(b.rows, b.cols);
        let mut col = vec![E::zero(); b.rows];
        let mut scratch = vec![E::zero(); b.rows];
        for j in 0..b.cols {
            for i in 0..b.rows {
                col[i] = b[(i, j)];
            }
            self.solve_in_place(&mut col, &mut scratch)?;
            for i in 0..b.rows {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> DenseMatrix<E> {
        self.solve_matrix(&DenseMatrix::identity(self.dim()))
            .expect("identity has matching dimension")
    }
}

impl<T: Real> LuFactorization<T> {
    /// Solves a complex right-hand side against a real factorization by
    /// treating real and imaginary parts separately.
    pub fn solve_complex(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>, LinalgError> {
        let re: Vec<T> = b.iter().map(|z| z.re).collect();
        let im: Vec<T> = b.iter().map(|z| z.im).collect();
        let xr = self.solve(&re)?;
        let xi = self.solve(&im)?;
        Ok(xr.into_iter().zip(xi).map(|(r, i)| Complex::new(r, i)).collect())
    }
}

/// Convenience wrapper for [`LuFactorization::factor`].
pub fn lu_factor<E: Entry>(a: &DenseMatrix<E>) -> Result<LuFactorization<E>, LinalgError> {
    LuFactorization::factor(a)
}

/// Solves `A X = B` for a matrix right-hand side.
pub fn lu_solve<E: Entry>(f: &LuFactorization<E>, b: &DenseMatrix<E>) -> Result<DenseMatrix<E>, LinalgError> {
    f.solve_matrix(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand::rngs::StdRng;

    fn random_matrix(rng: &mut StdRng, n: usize) -> DenseMatrix<f64> {
        // Diagonal boost keeps the condition number modest.
        DenseMatrix::from_fn(n, n, |i, j| {
            let v: f64 = rng.gen_range(-1.0..1.0);
            if i == j { v + 4.0 } else { v }
        })
    }

    fn rel_residual(a: &DenseMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mat_vec(x).unwrap();
        let num = ax.iter().zip(b).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
        num / b.iter().fold(0.0_f64, |m, q| m.max(q.abs()))
    }

    #[test]
    fn identity_solve_returns_input() {
        for n in [1, 3, 10] {
            let f = lu_factor(&DenseMatrix::<f64>::identity(n)).unwrap();
            let b: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
            assert_eq!(f.solve(&b).unwrap(), b);
        }
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let x = lu_factor(&a).unwrap().solve(&[1.0, 1.0]).unwrap();
        assert_eq!(x[0], 0.5);
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn random_system_recovers_known_solution() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 8);
        let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b = a.mat_vec(&x).unwrap();
        let got = lu_factor(&a).unwrap().solve(&b).unwrap();
        let err = got.iter().zip(&x).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(err / 2.0 <= 1e-10, "err {err}");
    }

    #[test]
    fn solve_self_gives_identity() {
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 12);
        let x = lu_solve(&lu_factor(&a).unwrap(), &a).unwrap();
        let diff = x.combine(1.0, &DenseMatrix::identity(12), -1.0).unwrap();
        assert!(diff.max_abs() <= 1e-10);
    }

    #[test]
    fn residual_bound_at_moderate_size() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 200);
        let f = lu_factor(&a).unwrap();
        let b: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = f.solve(&b).unwrap();
        assert!(rel_residual(&a, &x, &b) <= 1e-10);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x = lu_factor(&a).unwrap().solve(&[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_names_pivot() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![1.0, 0.0, 1.0],
        ])
        .unwrap();
        match lu_factor(&a) {
            Err(LinalgError::Singular { pivot }) => assert_eq!(pivot, 2),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn dimension_errors() {
        let a = DenseMatrix::<f64>::identity(3);
        let f = lu_factor(&a).unwrap();
        assert!(matches!(f.solve(&[1.0, 2.0]), Err(LinalgError::DimensionMismatch { .. })));
        assert!(matches!(
            lu_factor(&DenseMatrix::<f64>::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
        assert!(mat_product(&DenseMatrix::<f64>::zeros(2, 3), &a.select(&[0, 1], &[0, 1])).is_err());
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut a = DenseMatrix::<f64>::identity(2);
        a[(1, 0)] = f64::NAN;
        assert!(matches!(lu_factor(&a), Err(LinalgError::NonFinite { row: 1, col: 0 })));
    }

    #[test]
    fn product_with_identity_and_permutations() {
        let mut rng = StdRng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 5);
        assert_eq!(mat_product(&a, &DenseMatrix::identity(5)).unwrap(), a);

        let perm = |p: &[usize]| DenseMatrix::from_fn(p.len(), p.len(), |i, j| if p[i] == j { 1.0 } else { 0.0 });
        let p = [2, 0, 1, 3];
        let q = [1, 3, 0, 2];
        let composed: Vec<usize> = (0..4).map(|i| q[p[i]]).collect();
        assert_eq!(mat_product(&perm(&p), &perm(&q)).unwrap(), perm(&composed));
    }

    #[test]
    fn complex_factorization_of_real_matrix_is_real() {
        let mut rng = StdRng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 16);
        let fc = lu_factor(&a.to_complex()).unwrap();
        let b: Vec<Complex64> = (0..16).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let x = fc.solve(&b).unwrap();
        assert!(x.iter().all(|z| z.im.abs() <= 1e-12));
    }

    #[test]
    fn shifted_complex_solve_residual() {
        let mut rng = StdRng::seed_from_u64(13);
        let a = random_matrix(&mut rng, 24).to_complex();
        let shift = Complex64::new(3.0, -1.7320508075688772);
        let m = a.scaled(Complex64::new(0.1, 0.0)).shift_diagonal(-shift).unwrap();
        let f = lu_factor(&m).unwrap();
        for j in 0..24 {
            let mut e = vec![Complex64::new(0.0, 0.0); 24];
            e[j] = Complex64::new(1.0, 0.0);
            let x = f.solve(&e).unwrap();
            let back = m.mat_vec(&x).unwrap();
            let res = back.iter().zip(&e).fold(0.0_f64, |r, (p, q)| r.max((p - q).norm()));
            assert!(res <= 1e-10);
        }
    }

    #[test]
    fn real_factorization_solves_complex_rhs() {
        let mut rng = StdRng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 6);
        let f = lu_factor(&a).unwrap();
        let b: Vec<Complex64> = (0..6)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let x = f.solve_complex(&b).unwrap();
        let xc = lu_factor(&a.to_complex()).unwrap().solve(&b).unwrap();
        for (p, q) in x.iter().zip(&xc) {
            assert!((p - q).norm() <= 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = DenseMatrix::from_rows(&[vec![4.0_f32, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = lu_factor(&a).unwrap().solve(&[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-6);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop_assert, proptest};

        proptest! {
            #[test]
            fn solve_inverts_product(seed in 0u64..10_000, n in 1usize..24) {
                let mut rng = StdRng::seed_from_u64(seed);
                let a = random_matrix(&mut rng, n);
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let b = a.mat_vec(&x).unwrap();
                let got = lu_factor(&a).unwrap().solve(&b).unwrap();
                let scale = x.iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
                let err = got.iter().zip(&x).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
                prop_assert!(err / scale <= 1e-9);
            }
        }
    }
}
