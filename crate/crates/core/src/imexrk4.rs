//! Fourth-order IMEX Runge–Kutta integrator for `U_t + L·U = G(U, t)`.
//!
//! The scheme is ETDRK4-B with every φ-function replaced by a (2,2)-Padé
//! type rational of `kL`. The full-step rationals share the denominator
//! `q(z) = 12 + 6z + z²`, the half-step ones `q̃(z) = 48 + 12z + z²`, so each
//! expands into a conjugate pair of simple poles. For real `kL` and real data
//! the conjugate term is the complex conjugate of the first, and a stage costs
//! one complex solve against `kL − c·I` followed by `U + 2·Re(·)`.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{check_len, Error, Result};
use crate::kse_system::SemiDiscreteKse;
use crate::linalg::{DenseMatrix, LuFactorization};
use crate::scalar::{max_abs, Real};

/// Poles (upper half plane) and residues of the Padé rationals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImexCoefficients<T> {
    pub c1: Complex<T>,
    pub w1: Complex<T>,
    pub w11: Complex<T>,
    pub w21: Complex<T>,
    pub w31: Complex<T>,
    pub c1_tilde: Complex<T>,
    pub w1_tilde: Complex<T>,
    pub omega1_tilde: Complex<T>,
    pub omega2_tilde: Complex<T>,
}

impl<T: Real> ImexCoefficients<T> {
    pub fn as_array(&self) -> [(&'static str, Complex<T>); 9] {
        [
            ("c1", self.c1),
            ("w1", self.w1),
            ("w11", self.w11),
            ("w21", self.w21),
            ("w31", self.w31),
            ("c1_tilde", self.c1_tilde),
            ("w1_tilde", self.w1_tilde),
            ("omega1_tilde", self.omega1_tilde),
            ("omega2_tilde", self.omega2_tilde),
        ]
    }
}

fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Poles and weights as decimal constants.
pub fn coefficients<T: Real>() -> ImexCoefficients<T> {
    ImexCoefficients {
        c1: cplx(-3.0, 1.7320508075688772935),
        w1: cplx(-6.0, -10.39230484541326376),
        w11: cplx(0.0, -3.4641016151377545871),
        w21: cplx(0.5, -0.8660254037844386467),
        w31: cplx(1.0, -0.57735026918962576452),
        c1_tilde: cplx(-6.0, 3.4641016151377545871),
        w1_tilde: cplx(-12.0, -20.784609690826527522),
        omega1_tilde: cplx(0.0, -3.4641016151377545870),
        omega2_tilde: cplx(1.0, -1.7320508075688772935),
    }
}

/// Upper-half-plane root of `z² + p·z + q` (requires `p² < 4q`).
fn upper_root<T: Real>(p: T, q: T) -> Complex<T> {
    let two = T::lit(2.0);
    Complex::new(-p / two, (T::lit(4.0) * q - p * p).sqrt() / two)
}

/// Residue of `num(z) / ((z − c)(z − c̄))` at `c`.
fn residue<T: Real>(num: impl Fn(Complex<T>) -> Complex<T>, c: Complex<T>) -> Complex<T> {
    num(c) / (c - c.conj())
}

/// Recomputes the constants from the denominators' roots and the residues.
pub fn derive_coefficients<T: Real>() -> ImexCoefficients<T> {
    let r = |v: f64| Complex::from(T::lit(v));
    let c1 = upper_root(T::lit(6.0), T::lit(12.0));
    let ct = upper_root(T::lit(12.0), T::lit(48.0));
    ImexCoefficients {
        c1,
        w1: residue(|z| -r(12.0) * z, c1),
        w11: residue(|_| r(12.0), c1),
        w21: residue(|z| r(6.0) + z, c1),
        w31: residue(|z| r(2.0) * (r(4.0) + z), c1),
        c1_tilde: ct,
        w1_tilde: residue(|z| -r(24.0) * z, ct),
        omega1_tilde: residue(|_| r(24.0), ct),
        omega2_tilde: residue(|z| r(2.0) * (r(12.0) + z), ct),
    }
}

const PHI_SERIES_RADIUS: f64 = 0.25;
const PHI_SERIES_TERMS: usize = 24;

/// `φ_μ(z) = Σ_m (−z)^m / (m + μ)!`, so `φ₀(z) = e^{−z}`.
///
/// Near the origin the closed form cancels catastrophically and the Taylor
/// series is summed instead.
pub fn phi_scalar<T: Real>(mu: u32, z: Complex<T>) -> Complex<T> {
    if mu > 0 && z.norm() < T::lit(PHI_SERIES_RADIUS) {
        phi_series(mu, z)
    } else {
        phi_direct(mu, z)
    }
}

fn phi_series<T: Real>(mu: u32, z: Complex<T>) -> Complex<T> {
    let mut term = Complex::from(T::one());
    for j in 1..=mu {
        term = term / T::from_count(j as usize);
    }
    let mut sum = term;
    for m in 1..PHI_SERIES_TERMS {
        term = term * (-z) / T::from_count(m + mu as usize);
        sum += term;
    }
    sum
}

fn phi_direct<T: Real>(mu: u32, z: Complex<T>) -> Complex<T> {
    let mz = -z;
    let mut tail = mz.exp();
    let mut power = Complex::from(T::one());
    for j in 0..mu {
        if j > 0 {
            power = power * mz / T::from_count(j as usize);
        }
        tail -= power;
    }
    let mut denom = Complex::from(T::one());
    for _ in 0..mu {
        denom = denom * mz;
    }
    tail / denom
}

/// Dimensionless stage weights of one scheme step for a scalar linear part
/// `z = kL`: `r ≈ e^{−z}`, `p_i ≈ P_i/k`, and the half-step analogues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageWeights<T> {
    pub r: Complex<T>,
    pub p1: Complex<T>,
    pub p2: Complex<T>,
    pub p3: Complex<T>,
    pub r_half: Complex<T>,
    pub p1_half: Complex<T>,
    pub p2_half: Complex<T>,
}

/// The Padé rationals evaluated directly as quotients.
pub fn pade_weights<T: Real>(z: Complex<T>) -> StageWeights<T> {
    let r = |v: f64| Complex::from(T::lit(v));
    let q = r(12.0) + z * (r(6.0) + z);
    let qt = r(48.0) + z * (r(12.0) + z);
    StageWeights {
        r: (r(12.0) - z * (r(6.0) - z)) / q,
        p1: r(12.0) / q,
        p2: (r(6.0) + z) / q,
        p3: r(2.0) * (r(4.0) + z) / q,
        r_half: (r(48.0) - z * (r(12.0) - z)) / qt,
        p1_half: r(24.0) / qt,
        p2_half: r(2.0) * (r(12.0) + z) / qt,
    }
}

/// `w/(z − c) + w̄/(z − c̄)`; equals `2·Re(w/(z − c))` for real `z`.
pub fn two_pole<T: Real>(w: Complex<T>, c: Complex<T>, z: Complex<T>) -> Complex<T> {
    w / (z - c) + w.conj() / (z - c.conj())
}

fn pole_guard<T: Real>(z: Complex<T>, poles: &[Complex<T>]) -> Result<()> {
    let tol = T::lit(1e-10);
    for &c in poles {
        for p in [c, c.conj()] {
            if (z - p).norm() <= tol * p.norm() {
                return Err(Error::PoleProximity(format!("z = {} {:+}i", z.re, z.im)));
            }
        }
    }
    Ok(())
}

/// The same rationals through their partial-fraction expansions.
pub fn partial_fraction_weights<T: Real>(co: &ImexCoefficients<T>, z: Complex<T>) -> Result<StageWeights<T>> {
    pole_guard(z, &[co.c1, co.c1_tilde])?;
    let one = Complex::from(T::one());
    Ok(StageWeights {
        r: one + two_pole(co.w1, co.c1, z),
        p1: two_pole(co.w11, co.c1, z),
        p2: two_pole(co.w21, co.c1, z),
        p3: two_pole(co.w31, co.c1, z),
        r_half: one + two_pole(co.w1_tilde, co.c1_tilde, z),
        p1_half: two_pole(co.omega1_tilde, co.c1_tilde, z),
        p2_half: two_pole(co.omega2_tilde, co.c1_tilde, z),
    })
}

/// Unmodified ETDRK4-B weights built from the φ-functions.
pub fn phi_weights<T: Real>(z: Complex<T>) -> StageWeights<T> {
    let half = z * T::lit(0.5);
    StageWeights {
        r: phi_scalar(0, z),
        p1: phi_scalar(1, z),
        p2: phi_scalar(2, z),
        p3: phi_scalar(3, z) * T::lit(4.0),
        r_half: phi_scalar(0, half),
        p1_half: phi_scalar(1, half) * T::lit(0.5),
        p2_half: phi_scalar(2, half),
    }
}

/// One step of the scheme on the scalar problem `u' = −L·u + γ·u` with the
/// linear part absorbed in `w` and `x = kγ` treated explicitly.
pub fn scalar_step<T: Real>(w: &StageWeights<T>, u: Complex<T>, x: Complex<T>) -> Complex<T> {
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let f_n = x * u;
    let a = w.r_half * u + w.p1_half * f_n;
    let f_a = x * a;
    let b = a + w.p2_half * (f_a - f_n);
    let f_b = x * b;
    let c = w.r * u + w.p1 * f_n + w.p2 * (f_b - f_n) * two;
    let f_c = x * c;
    w.r * u
        + w.p1 * f_n
        + w.p2 * (f_a * two + f_b * two - f_n * three - f_c)
        + w.p3 * (f_n - f_a - f_b + f_c)
}

/// Factorizations and scratch space for stepping one system with one `k`.
#[derive(Debug, Clone)]
pub struct StepperWorkspace<'a, T: Real> {
    system: &'a SemiDiscreteKse<T>,
    coeffs: ImexCoefficients<T>,
    k: T,
    factor_full: LuFactorization<Complex<T>>,
    factor_half: LuFactorization<Complex<T>>,
    rhs: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

fn check_step<T: Real>(k: T) -> Result<()> {
    if k.is_finite() && k > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidTimeStep(k.to_f64_lossy()))
    }
}

fn shifted_factor<T: Real>(kl: &DenseMatrix<Complex<T>>, c: Complex<T>) -> Result<LuFactorization<Complex<T>>> {
    Ok(LuFactorization::factor(&kl.shift_diagonal(-c)?)?)
}

/// Factors `kL − c₁I` and `kL − c̃₁I` for the evolved block of `sys`.
pub fn prepare<T: Real>(sys: &SemiDiscreteKse<T>, k: T) -> Result<StepperWorkspace<'_, T>> {
    check_step(k)?;
    let coeffs = coefficients();
    let kl = sys.evolved_operator().scaled(k).to_complex();
    let n = sys.n_unknowns();
    Ok(StepperWorkspace {
        system: sys,
        coeffs,
        k,
        factor_full: shifted_factor(&kl, coeffs.c1)?,
        factor_half: shifted_factor(&kl, coeffs.c1_tilde)?,
        rhs: vec![Complex::zero(); n],
        scratch: vec![Complex::zero(); n],
    })
}

/// Builds `Σ coef_j · v_j` into `out`.
fn accumulate<T: Real>(out: &mut [Complex<T>], terms: &[(Complex<T>, &[T])]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = terms.iter().fold(Complex::zero(), |s, (c, v)| s + *c * v[i]);
    }
}

fn finite_or_unstable<T: Real>(v: &[T], prior: &[T], t: T) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Unstable {
            step: 0,
            time: t.to_f64_lossy(),
            max_abs: max_abs(prior).to_f64_lossy(),
        })
    }
}

impl<'a, T: Real> StepperWorkspace<'a, T> {
    pub fn k(&self) -> T {
        self.k
    }

    pub fn system(&self) -> &'a SemiDiscreteKse<T> {
        self.system
    }

    pub fn factor_full(&self) -> &LuFactorization<Complex<T>> {
        &self.factor_full
    }

    pub fn factor_half(&self) -> &LuFactorization<Complex<T>> {
        &self.factor_half
    }

    /// Re-factors for a new step size. Returns whether anything changed.
    pub fn rebuild(&mut self, k: T) -> Result<bool> {
        if k == self.k {
            return Ok(false);
        }
        *self = prepare(self.system, k)?;
        Ok(true)
    }

    /// Fails if the factorizations belong to a different step size.
    pub fn ensure_step(&self, k: T) -> Result<()> {
        if k == self.k {
            Ok(())
        } else {
            Err(Error::StaleWorkspace {
                prepared: self.k.to_f64_lossy(),
                requested: k.to_f64_lossy(),
            })
        }
    }

    /// `R = (kL − cI)⁻¹·rhs`, then `base + 2·Re(R)`.
    fn solve_stage(&mut self, half: bool, base: &[T], terms: &[(Complex<T>, &[T])]) -> Result<Vec<T>> {
        accumulate(&mut self.rhs, terms);
        let f = if half { &self.factor_half } else { &self.factor_full };
        f.solve_in_place(&mut self.rhs, &mut self.scratch)?;
        let two = T::lit(2.0);
        Ok(base.iter().zip(&self.rhs).map(|(&b, r)| b + two * r.re).collect())
    }

    /// One step on the evolved unknowns `V` from `t_n` to `t_n + k`.
    pub fn step_unknowns(&mut self, v: &[T], t_n: T) -> Result<Vec<T>> {
        let sys = self.system;
        check_len(sys.n_unknowns(), v.len())?;
        let co = self.coeffs;
        let k = Complex::from(self.k);
        let t_half = t_n + self.k * T::lit(0.5);
        let t_full = t_n + self.k;
        let two = T::lit(2.0);

        let f_n = sys.explicit_term(v, t_n)?;
        let a = self.solve_stage(true, v, &[(co.w1_tilde, v), (k * co.omega1_tilde, &f_n)])?;
        finite_or_unstable(&a, v, t_half)?;

        let f_a = sys.explicit_term(&a, t_half)?;
        let b = self.solve_stage(
            true,
            v,
            &[
                (co.w1_tilde, v),
                (k * (co.omega1_tilde - co.omega2_tilde), &f_n),
                (k * co.omega2_tilde, &f_a),
            ],
        )?;
        finite_or_unstable(&b, v, t_half)?;

        let f_b = sys.explicit_term(&b, t_half)?;
        let c = self.solve_stage(
            false,
            v,
            &[(co.w1, v), (k * (co.w11 - co.w21 * two), &f_n), (k * co.w21 * two, &f_b)],
        )?;
        finite_or_unstable(&c, v, t_full)?;

        let f_c = sys.explicit_term(&c, t_full)?;
        let f_ab: Vec<T> = f_a.iter().zip(&f_b).map(|(&p, &q)| p + q).collect();
        let next = self.solve_stage(
            false,
            v,
            &[
                (co.w1, v),
                (k * (co.w11 - co.w21 * T::lit(3.0) + co.w31), &f_n),
                (k * (co.w21 * two - co.w31), &f_ab),
                (-k * (co.w21 - co.w31), &f_c),
            ],
        )?;
        finite_or_unstable(&next, v, t_full)?;
        Ok(next)
    }

    /// One step on a full grid vector; Dirichlet endpoints of the result carry
    /// the boundary data at `t_n + k`.
    pub fn step(&mut self, u: &[T], t_n: T) -> Result<Vec<T>> {
        let v = self.system.restrict(u)?;
        let next = self.step_unknowns(&v, t_n)?;
        self.system.lift(&next, t_n + self.k)
    }
}

/// Evaluates the stage formulas with dense rational matrix functions of `kL`.
/// Meant as an independent check of [`StepperWorkspace::step`] on small systems.
pub fn step_dense_reference<T: Real>(sys: &SemiDiscreteKse<T>, u: &[T], t_n: T, k: T) -> Result<Vec<T>> {
    check_step(k)?;
    let v = sys.restrict(u)?;
    let n = v.len();
    let id = DenseMatrix::<T>::identity(n);
    let a_mat = sys.evolved_operator().scaled(k);
    let a2 = a_mat.matmul(&a_mat)?;
    let poly = |c0: f64, c1: f64| -> Result<DenseMatrix<T>> {
        Ok(id.scaled(T::lit(c0)).combine(T::one(), &a_mat, T::lit(c1))?.combine(T::one(), &a2, T::one())?)
    };
    let lin = |c0: f64, c1: f64| -> Result<DenseMatrix<T>> {
        Ok(id.scaled(T::lit(c0)).combine(T::one(), &a_mat, T::lit(c1))?)
    };
    let q_inv = LuFactorization::factor(&poly(12.0, 6.0)?)?.inverse();
    let qt_inv = LuFactorization::factor(&poly(48.0, 12.0)?)?.inverse();

    let r = q_inv.matmul(&poly(12.0, -6.0)?)?;
    let p1 = q_inv.scaled(T::lit(12.0) * k);
    let p2 = q_inv.matmul(&lin(6.0, 1.0)?)?.scaled(k);
    let p3 = q_inv.matmul(&lin(4.0, 1.0)?)?.scaled(T::lit(2.0) * k);
    let rt = qt_inv.matmul(&poly(48.0, -12.0)?)?;
    let pt1 = qt_inv.scaled(T::lit(24.0) * k);
    let pt2 = qt_inv.matmul(&lin(12.0, 1.0)?)?.scaled(T::lit(2.0) * k);

    let add = |x: &[T], y: &[T], s: T| -> Vec<T> { x.iter().zip(y).map(|(&p, &q)| p + s * q).collect() };
    let t_half = t_n + k * T::lit(0.5);
    let one = T::one();

    let f_n = sys.explicit_term(&v, t_n)?;
    let a = add(&rt.mat_vec(&v)?, &pt1.mat_vec(&f_n)?, one);
    let f_a = sys.explicit_term(&a, t_half)?;
    let b = add(&a, &pt2.mat_vec(&add(&f_a, &f_n, -one))?, one);
    let f_b = sys.explicit_term(&b, t_half)?;
    let ru = r.mat_vec(&v)?;
    let base = add(&ru, &p1.mat_vec(&f_n)?, one);
    let c = add(&base, &p2.mat_vec(&add(&f_b, &f_n, -one))?, T::lit(2.0));
    let f_c = sys.explicit_term(&c, t_n + k)?;

    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let combo2: Vec<T> = (0..n).map(|i| -three * f_n[i] + two * f_a[i] + two * f_b[i] - f_c[i]).collect();
    let combo3: Vec<T> = (0..n).map(|i| f_n[i] - f_a[i] - f_b[i] + f_c[i]).collect();
    let next = add(&add(&base, &p2.mat_vec(&combo2)?, one), &p3.mat_vec(&combo3)?, one);
    sys.lift(&next, t_n + k)
}

/// Number of steps `M` with `M·k = t_final`, up to rounding.
pub fn step_count<T: Real>(t_final: T, k: T) -> Result<usize> {
    check_step(k)?;
    let (tf, kk) = (t_final.to_f64_lossy(), k.to_f64_lossy());
    let m = (tf / kk).round();
    let tol = 1e-9 * tf.abs().max(kk);
    if !tf.is_finite() || tf < 0.0 || (m * kk - tf).abs() > tol {
        return Err(Error::StepCount { t_final: tf, k: kk });
    }
    Ok(m as usize)
}

/// Runs `M = t_final/k` steps from `u0` with a single factorization. The
/// observer sees every state `(t_j, U_j)`, `j = 0..=M`, as a full grid vector.
pub fn integrate<T: Real>(
    sys: &SemiDiscreteKse<T>,
    u0: &[T],
    k: T,
    t_final: T,
    observer: impl FnMut(T, &[T]),
) -> Result<Vec<T>> {
    let m = step_count(t_final, k)?;
    check_len(sys.n_points(), u0.len())?;
    if m == 0 {
        let mut observer = observer;
        observer(T::zero(), u0);
        return Ok(u0.to_vec());
    }
    prepare(sys, k)?.integrate(u0, t_final, observer)
}

impl<T: Real> StepperWorkspace<'_, T> {
    /// Time loop of [`integrate`] on an already prepared workspace.
    pub fn integrate(&mut self, u0: &[T], t_final: T, mut observer: impl FnMut(T, &[T])) -> Result<Vec<T>> {
        let sys = self.system;
        let k = self.k;
        let m = step_count(t_final, k)?;
        check_len(sys.n_points(), u0.len())?;
        observer(T::zero(), u0);
        let mut v = sys.restrict(u0)?;
        for j in 0..m {
            let t = T::from_count(j) * k;
            let t_next = T::from_count(j + 1) * k;
            v = self.step_unknowns(&v, t).map_err(|e| match e {
                Error::Unstable { max_abs, .. } => Error::Unstable { step: j + 1, time: t_next.to_f64_lossy(), max_abs },
                other => other,
            })?;
            observer(t_next, &sys.lift(&v, t_next)?);
        }
        sys.lift(&v, T::from_count(m) * k)
    }
}
