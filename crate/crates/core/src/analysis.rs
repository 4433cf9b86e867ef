//! Error norms, convergence orders and stability regions of the scheme.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::imexrk4::{coefficients, partial_fraction_weights, scalar_step};
use crate::scalar::Real;

/// Errors of one run, ready for serialization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub max_norm: Option<f64>,
    pub gre: Option<f64>,
    pub e_k: Option<f64>,
    pub observed_order: Option<f64>,
    pub cpu_seconds: f64,
}

/// `max_i |exact_i − numeric_i|`.
pub fn max_norm_error<T: Real>(exact: &[T], numeric: &[T]) -> Result<T> {
    check_len(exact.len(), numeric.len())?;
    Ok(exact.iter().zip(numeric).fold(T::zero(), |m, (&e, &n)| m.max((e - n).abs())))
}

/// Global relative error `Σ|exact − numeric| / Σ|exact|`.
pub fn gre<T: Real>(exact: &[T], numeric: &[T]) -> Result<T> {
    check_len(exact.len(), numeric.len())?;
    let denom: T = exact.iter().map(|v| v.abs()).sum();
    if denom <= T::zero() {
        return Err(Error::InvalidParameter("GRE undefined for an all-zero reference".into()));
    }
    let num: T = exact.iter().zip(numeric).map(|(&e, &n)| (e - n).abs()).sum();
    Ok(num / denom)
}

/// `log₂(e_coarse / e_fine)`.
pub fn observed_order<T: Real>(e_coarse: T, e_fine: T) -> Result<T> {
    if !(e_coarse > T::zero() && e_fine > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "orders need positive errors, got {e_coarse} and {e_fine}"
        )));
    }
    Ok((e_coarse / e_fine).log2())
}

/// `E_k = ‖U_k − U_{2k}‖∞`.
pub fn self_difference_error<T: Real>(u_k: &[T], u_2k: &[T]) -> Result<T> {
    max_norm_error(u_k, u_2k)
}

/// One scheme step on `u' = −L·u + R·u` from `u = 1`, with `R·u` explicit,
/// against `e^{(R−L)k}`. Returns `(k, |error|)` per step size.
pub fn linear_truncation_check<T: Real>(l: T, r: T, ks: &[T]) -> Result<Vec<(T, T)>> {
    if ks.iter().any(|&k| !(k > T::zero() && k.is_finite())) || ks.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("step sizes must be positive and decreasing".into()));
    }
    let co = coefficients::<T>();
    ks.iter()
        .map(|&k| {
            let w = partial_fraction_weights(&co, Complex::from(k * l))?;
            let u1 = scalar_step(&w, Complex::from(T::one()), Complex::from(k * r));
            Ok((k, (u1 - Complex::from(((r - l) * k).exp())).norm()))
        })
        .collect()
}

/// Growth factor `r(x, y)` on `u' = −c·u + γ·u` with `x = γk` explicit and
/// `y = −ck` inside the rational functions.
pub fn amplification_factor<T: Real>(x: Complex<T>, y: Complex<T>) -> Result<Complex<T>> {
    let w = partial_fraction_weights(&coefficients(), -y)?;
    Ok(scalar_step(&w, Complex::from(T::one()), x))
}

/// Taylor coefficients `[j][m]` of `r` in `xʲ yᵐ`, `j ≤ 4`, `m ≤ max_y_order`.
///
/// `r` is a quartic in `x`, so five samples on a circle give its coefficients
/// exactly; in `y` the coefficients are analytic inside `|y| < √12` and are
/// recovered by the trapezoidal rule on a circle of radius 1.
pub fn amplification_series(max_y_order: usize) -> Result<Vec<Vec<f64>>> {
    const NY: usize = 64;
    let tau = std::f64::consts::TAU;
    let mut out = vec![vec![0.0; max_y_order + 1]; 5];
    for p in 0..NY {
        let y = Complex::from_polar(1.0, tau * p as f64 / NY as f64);
        for q in 0..5 {
            let x = Complex::from_polar(1.0, tau * q as f64 / 5.0);
            let r = amplification_factor(x, y)?;
            for (j, row) in out.iter_mut().enumerate() {
                for (m, c) in row.iter_mut().enumerate() {
                    *c += (r * x.powi(-(j as i32)) * y.powi(-(m as i32))).re / (5 * NY) as f64;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    /// Scale used for real negative `y`.
    pub const REAL_Y: Window = Window {
        re_min: -20.0,
        re_max: 5.0,
        im_min: -15.0,
        im_max: 15.0,
    };
    /// Scale used for imaginary `y`.
    pub const IMAGINARY_Y: Window = Window {
        re_min: -8.0,
        re_max: 4.0,
        im_min: -8.0,
        im_max: 8.0,
    };

    fn validate(&self) -> Result<()> {
        let ok = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite())
            && self.re_min < self.re_max
            && self.im_min < self.im_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("degenerate window {self:?}")))
        }
    }
}

pub const MIN_RESOLUTION: usize = 16;
const LEVEL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityField {
    pub y: Complex<f64>,
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    /// `|r|` samples, row-major with `im` varying slowest.
    pub magnitudes: Vec<f64>,
    /// Pieces of the `|r| = 1` curve; closed loops repeat their first point.
    pub boundary: Vec<Vec<Complex<f64>>>,
}

impl StabilityField {
    pub fn point(&self, i: usize, j: usize) -> Complex<f64> {
        let w = &self.window;
        let dx = (w.re_max - w.re_min) / (self.nx - 1) as f64;
        let dy = (w.im_max - w.im_min) / (self.ny - 1) as f64;
        Complex::new(w.re_min + i as f64 * dx, w.im_min + j as f64 * dy)
    }

    pub fn magnitude(&self, i: usize, j: usize) -> f64 {
        self.magnitudes[j * self.nx + i]
    }

    /// True when no sample satisfies `|r| ≤ 1`.
    pub fn is_empty(&self) -> bool {
        self.inside_count() == 0
    }

    pub fn inside_count(&self) -> usize {
        self.magnitudes.iter().filter(|&&m| m <= 1.0).count()
    }

    /// Area of `{|r| ≤ 1}` by counting samples, each worth one grid cell.
    pub fn area(&self) -> f64 {
        let w = &self.window;
        let cell = (w.re_max - w.re_min) / (self.nx - 1) as f64 * (w.im_max - w.im_min) / (self.ny - 1) as f64;
        self.inside_count() as f64 * cell
    }

    pub fn write_samples_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re_x,im_x,abs_r")?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = self.point(i, j);
                writeln!(w, "{:e},{:e},{:e}", p.re, p.im, self.magnitude(i, j))?;
            }
        }
        Ok(())
    }

    pub fn write_boundary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "curve,re_x,im_x")?;
        for (c, curve) in self.boundary.iter().enumerate() {
            for p in curve {
                writeln!(w, "{c},{:e},{:e}", p.re, p.im)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKey {
    /// From node `(i, j)` to `(i + 1, j)`.
    H(usize, usize),
    /// From node `(i, j)` to `(i, j + 1)`.
    V(usize, usize),
}

/// Samples `|r(x, y)|` over the window and traces the `|r| = 1` level set.
pub fn stability_scan(y: Complex<f64>, window: Window, nx: usize, ny: usize) -> Result<StabilityField> {
    window.validate()?;
    if nx < MIN_RESOLUTION || ny < MIN_RESOLUTION {
        return Err(Error::InvalidParameter(format!(
            "resolution {nx}x{ny} is below {MIN_RESOLUTION} per axis"
        )));
    }
    // Fail early on a pole instead of inside the parallel loop.
    amplification_factor(Complex::new(0.0, 0.0), y)?;
    let mut field = StabilityField {
        y,
        window,
        nx,
        ny,
        magnitudes: Vec::new(),
        boundary: Vec::new(),
    };
    let rows: Vec<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            (0..nx)
                .map(|i| amplification_factor(field.point(i, j), y).map(|r| r.norm()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    field.magnitudes = rows.concat();
    field.boundary = trace_level_set(&field)?;
    Ok(field)
}

fn level(field: &StabilityField, p: Complex<f64>) -> Result<f64> {
    Ok(amplification_factor(p, field.y)?.norm() - 1.0)
}

/// Root of `|r| − 1` on a sign-changing edge by bisection.
fn refine_edge(field: &StabilityField, key: EdgeKey) -> Result<Complex<f64>> {
    let (mut a, mut b) = match key {
        EdgeKey::H(i, j) => (field.point(i, j), field.point(i + 1, j)),
        EdgeKey::V(i, j) => (field.point(i, j), field.point(i, j + 1)),
    };
    let mut fa = level(field, a)?;
    let fb = level(field, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut mid = (a + b) * 0.5;
    for _ in 0..80 {
        mid = (a + b) * 0.5;
        let fm = level(field, mid)?;
        if fm.abs() <= LEVEL_TOLERANCE {
            break;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(mid)
}

fn trace_level_set(field: &StabilityField) -> Result<Vec<Vec<Complex<f64>>>> {
    let f = |i: usize, j: usize| field.magnitude(i, j) - 1.0;
    let inside = |v: f64| v <= 0.0;
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..field.ny - 1 {
        for i in 0..field.nx - 1 {
            let v = [f(i, j), f(i + 1, j), f(i + 1, j + 1), f(i, j + 1)];
            let edges = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
            let cut: Vec<usize> = (0..4).filter(|&e| inside(v[e]) != inside(v[(e + 1) % 4])).collect();
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    let centre = level(field, (field.point(i, j) + field.point(i + 1, j + 1)) * 0.5)?;
                    if inside(centre) == inside(v[0]) {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut points: BTreeMap<EdgeKey, Complex<f64>> = BTreeMap::new();
    let mut adjacency: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (s, &(p, q)) in segments.iter().enumerate() {
        for key in [p, q] {
            adjacency.entry(key).or_default().push(s);
        }
    }
    let keys: Vec<EdgeKey> = adjacency.keys().copied().collect();
    let refined: Vec<Complex<f64>> = keys.par_iter().map(|&k| refine_edge(field, k)).collect::<Result<_>>()?;
    points.extend(keys.iter().copied().zip(refined));

    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    // Open curves start at edges touched once (the window border); the rest
    // are closed loops.
    let starts: Vec<EdgeKey> = adjacency
        .iter()
        .filter(|(_, s)| s.len() == 1)
        .map(|(k, _)| *k)
        .chain(segments.iter().map(|s| s.0))
        .collect();
    for start in starts {
        let Some(&first) = adjacency[&start].iter().find(|&&s| !used[s]) else {
            continue;
        };
        let mut curve = vec![points[&start]];
        let (mut seg, mut at) = (first, start);
        loop {
            used[seg] = true;
            let (p, q) = segments[seg];
            at = if p == at { q } else { p };
            curve.push(points[&at]);
            match adjacency[&at].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        curves.push(curve);
    }
    Ok(curves)
}
