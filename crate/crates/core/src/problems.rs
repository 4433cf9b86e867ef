//! The four benchmark configurations and the traveling-wave solution.

use std::fmt;
use std::sync::Arc;

use crate::compact_fd::{BoundaryScheme, Grid};
use crate::error::{Error, Result};
use crate::kse_system::{BoundaryValues, KseParameters, SemiDiscreteKse};
use crate::scalar::Real;

/// Traveling wave `u = μ + (15·tanh³ξ − 45·tanh ξ)/19^{3/2}`, `ξ = ν(x − μt − x₀)`.
/// Solves the equation with `α = −1`, `β = 1`.
pub fn example1_exact<T: Real>(x: T, t: T, mu: T, nu: T, x0: T) -> T {
    let th = (nu * (x - mu * t - x0)).tanh();
    let scale = T::lit(19.0).powf(T::lit(1.5));
    mu + (T::lit(15.0) * th * th * th - T::lit(45.0) * th) / scale
}

/// β values of the Example 4 sweep: 0.4/π², 0.6/π², 0.8/π².
pub fn example4_sweep_betas<T: Real>() -> [T; 3] {
    let pi2 = T::PI() * T::PI();
    [T::lit(0.4) / pi2, T::lit(0.6) / pi2, T::lit(0.8) / pi2]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemExtra<T> {
    TravelingWave { mu: T, nu: T, x0: T },
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProblemOverrides<T> {
    /// Only Example 4 accepts a β override.
    pub beta: Option<T>,
}

type Profile<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
type Field<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec<T> {
    pub id: u8,
    pub a: T,
    pub b: T,
    pub params: KseParameters<T>,
    pub scheme: BoundaryScheme,
    pub extra: ProblemExtra<T>,
    initial: Profile<T>,
    exact: Option<Field<T>>,
}

impl<T: Real> fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("domain", &(self.a, self.b))
            .field("params", &self.params)
            .field("scheme", &self.scheme)
            .field("extra", &self.extra)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl<T: Real> ProblemSpec<T> {
    pub fn initial_condition(&self, x: T) -> T {
        (self.initial)(x)
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact(&self, x: T, t: T) -> Option<T> {
        self.exact.as_ref().map(|f| f(x, t))
    }

    /// Endpoint data for Dirichlet problems.
    pub fn boundary_values(&self) -> Option<BoundaryValues<T>> {
        match self.scheme {
            BoundaryScheme::Periodic => None,
            BoundaryScheme::Dirichlet => Some(match &self.exact {
                Some(f) => {
                    let (f, a, b) = (f.clone(), self.a, self.b);
                    BoundaryValues::new(move |t| (f(a, t), f(b, t)))
                }
                None => BoundaryValues::homogeneous(),
            }),
        }
    }

    pub fn grid_with_points(&self, n: usize) -> Result<Grid<T>> {
        Grid::new(self.a, self.b, n, self.scheme)
    }

    pub fn grid_with_spacing(&self, h: T) -> Result<Grid<T>> {
        Grid::with_spacing(self.a, self.b, h, self.scheme)
    }

    pub fn system(&self, grid: Grid<T>) -> Result<SemiDiscreteKse<T>> {
        if grid.scheme() != self.scheme || grid.a() != self.a || grid.b() != self.b {
            return Err(Error::InvalidGrid(format!("grid does not match the domain of problem {}", self.id)));
        }
        SemiDiscreteKse::assemble(self.params, grid, self.boundary_values())
    }

    /// Initial grid vector; Dirichlet endpoints carry the boundary data exactly.
    pub fn initial_vector(&self, sys: &SemiDiscreteKse<T>) -> Result<Vec<T>> {
        let u: Vec<T> = sys.grid().nodes().into_iter().map(|x| self.initial_condition(x)).collect();
        match self.scheme {
            BoundaryScheme::Periodic => Ok(u),
            BoundaryScheme::Dirichlet => sys.apply_boundary(&u, T::zero()),
        }
    }

    pub fn exact_vector(&self, grid: &Grid<T>, t: T) -> Option<Vec<T>> {
        let f = self.exact.as_ref()?;
        Some(grid.nodes().into_iter().map(|x| f(x, t)).collect())
    }
}

pub fn make_problem<T: Real>(id: u8, overrides: ProblemOverrides<T>) -> Result<ProblemSpec<T>> {
    if overrides.beta.is_some() && id != 4 {
        return Err(Error::InvalidParameter(format!("problem {id} does not take a beta override")));
    }
    let one = T::one();
    let spec = match id {
        1 => {
            let mu = T::lit(5.0);
            let nu = one / (T::lit(2.0) * T::lit(19.0).sqrt());
            let x0 = T::lit(-25.0);
            ProblemSpec {
                id,
                a: T::lit(-50.0),
                b: T::lit(50.0),
                params: KseParameters::new(-one, one)?,
                scheme: BoundaryScheme::Dirichlet,
                extra: ProblemExtra::TravelingWave { mu, nu, x0 },
                initial: Arc::new(move |x| example1_exact(x, T::zero(), mu, nu, x0)),
                exact: Some(Arc::new(move |x, t| example1_exact(x, t, mu, nu, x0))),
            }
        }
        2 => {
            let s = T::lit(16.0);
            ProblemSpec {
                id,
                a: T::zero(),
                b: T::lit(32.0) * T::PI(),
                params: KseParameters::new(one, one)?,
                scheme: BoundaryScheme::Periodic,
                extra: ProblemExtra::None,
                initial: Arc::new(move |x| (x / s).cos() * (one + (x / s).sin())),
                exact: None,
            }
        }
        3 => ProblemSpec {
            id,
            a: T::lit(-30.0),
            b: T::lit(30.0),
            params: KseParameters::new(one, one)?,
            scheme: BoundaryScheme::Dirichlet,
            extra: ProblemExtra::None,
            initial: Arc::new(|x| (-x * x).exp()),
            exact: None,
        },
        4 => ProblemSpec {
            id,
            a: -one,
            b: one,
            params: KseParameters::new(one, overrides.beta.unwrap_or(T::lit(1.1)))?,
            scheme: BoundaryScheme::Dirichlet,
            extra: ProblemExtra::None,
            initial: Arc::new(|x| -(T::PI() * x).sin()),
            exact: None,
        },
        _ => return Err(Error::InvalidParameter(format!("unknown problem id {id}"))),
    };
    Ok(spec)
}
