//! Agent dynamics `ẋ = L x + G(x)` and the built-in Lü, Rössler and Chen systems.
//!
//! Each system is split into a maximal constant linear part `L` and a
//! residual map `G` that collects every state product and constant term:
//!
//! | system  | `L`                                   | `G(x, y, z)`        |
//! |---------|---------------------------------------|---------------------|
//! | Lü      | `[[-a, a, 0], [0, c, 0], [0, 0, -b]]` | `(0, -xz, xy)`      |
//! | Rössler | `[[0, -1, -1], [1, a, 0], [0, 0, -c]]`| `(0, 0, b + zx)`    |
//! | Chen    | `[[-a, a, 0], [c-a, c, 0], [0, 0, -b]]`| `(0, -xz, xy)`     |

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::linalg::{eigenvalues, Matrix};
use crate::scalar::Real;

/// Writes `G(x)` into the output slice.
pub type NonlinearFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;
/// Writes `J_G(x)` into the (pre-zeroed) output matrix.
pub type JacobianFn<T> = Arc<dyn Fn(&[T], &mut Matrix<T>) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinSystem {
    Lu,
    Rossler,
    Chen,
}

impl BuiltinSystem {
    pub const ALL: [BuiltinSystem; 3] = [BuiltinSystem::Lu, BuiltinSystem::Rossler, BuiltinSystem::Chen];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinSystem::Lu => "lu",
            BuiltinSystem::Rossler => "rossler",
            BuiltinSystem::Chen => "chen",
        }
    }

    /// Default `(a, b, c)` parameters.
    pub fn default_params(self) -> [f64; 3] {
        match self {
            BuiltinSystem::Lu => [36.0, 3.0, 20.0],
            BuiltinSystem::Rossler => [0.2, 0.2, 5.7],
            BuiltinSystem::Chen => [35.0, 3.0, 28.0],
        }
    }
}

impl FromStr for BuiltinSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lu" | "lü" => Ok(BuiltinSystem::Lu),
            "rossler" | "rössler" => Ok(BuiltinSystem::Rossler),
            "chen" => Ok(BuiltinSystem::Chen),
            other => invalid(format!("unknown system '{other}' (expected lu, rossler or chen)")),
        }
    }
}

impl fmt::Display for BuiltinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone)]
enum Nonlinearity<T> {
    /// `(0, -xz, xy)`, shared by Lü and Chen.
    Bilinear,
    /// `(0, 0, b + zx)`.
    Rossler {
        b: T,
    },
    Custom {
        g: NonlinearFn<T>,
        jacobian: JacobianFn<T>,
    },
}

/// A chaotic system split as `F(x) = L x + G(x)`. Immutable once built.
#[derive(Clone)]
pub struct SystemSpec<T> {
    name: String,
    dim: usize,
    linear_part: Matrix<T>,
    params: Vec<(String, T)>,
    nonlinearity: Nonlinearity<T>,
}

impl<T: Real> SystemSpec<T> {
    /// One of the three benchmark systems with its default parameters.
    pub fn builtin(which: BuiltinSystem) -> Self {
        let [a, b, c] = which.default_params();
        Self::builtin_with_params(which, T::lit(a), T::lit(b), T::lit(c))
    }

    pub fn builtin_with_params(which: BuiltinSystem, a: T, b: T, c: T) -> Self {
        let z = T::zero();
        let one = T::one();
        let (rows, nonlinearity) = match which {
            BuiltinSystem::Lu => ([[-a, a, z], [z, c, z], [z, z, -b]], Nonlinearity::Bilinear),
            BuiltinSystem::Rossler => ([[z, -one, -one], [one, a, z], [z, z, -c]], Nonlinearity::Rossler { b }),
            BuiltinSystem::Chen => ([[-a, a, z], [c - a, c, z], [z, z, -b]], Nonlinearity::Bilinear),
        };
        Self {
            name: which.name().to_string(),
            dim: 3,
            linear_part: Matrix::from_rows(&rows).expect("3x3 literal"),
            params: vec![("a".into(), a), ("b".into(), b), ("c".into(), c)],
            nonlinearity,
        }
    }

    /// A system with a user supplied nonlinear part and its analytic Jacobian.
    pub fn custom(
        name: impl Into<String>,
        linear_part: Matrix<T>,
        g: NonlinearFn<T>,
        jacobian: JacobianFn<T>,
    ) -> Result<Self> {
        if !linear_part.is_square() || linear_part.rows() == 0 {
            return invalid(format!(
                "linear part must be square with side >= 1, got {}x{}",
                linear_part.rows(),
                linear_part.cols()
            ));
        }
        Ok(Self {
            name: name.into(),
            dim: linear_part.rows(),
            linear_part,
            params: Vec::new(),
            nonlinearity: Nonlinearity::Custom { g, jacobian },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn linear_part(&self) -> &Matrix<T> {
        &self.linear_part
    }

    pub fn params(&self) -> &[(String, T)] {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<T> {
        self.params.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    /// Spectrum of `L`. Used to report whether the linear part is Hurwitz or
    /// has zero eigenvalues rather than assuming either.
    pub fn linear_spectrum(&self) -> Vec<Complex<T>> {
        eigenvalues(&self.linear_part).expect("finite square linear part")
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return invalid(format!(
                "state has dimension {}, system '{}' expects {}",
                x.len(),
                self.name,
                self.dim
            ));
        }
        Ok(())
    }

    pub fn eval_nonlinear(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        let mut out = vec![T::zero(); self.dim];
        self.nonlinear_into(x, &mut out);
        Ok(out)
    }

    pub fn eval_vector_field(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        let mut out = vec![T::zero(); self.dim];
        self.vector_field_into(x, &mut out);
        Ok(out)
    }

    pub fn jacobian_nonlinear(&self, x: &[T]) -> Result<Matrix<T>> {
        self.check_dim(x)?;
        let mut j = Matrix::zeros(self.dim, self.dim);
        self.jacobian_into(x, &mut j);
        Ok(j)
    }

    /// `out = G(x)` without dimension checks.
    #[inline]
    pub fn nonlinear_into(&self, x: &[T], out: &mut [T]) {
        match &self.nonlinearity {
            Nonlinearity::Bilinear => {
                out[0] = T::zero();
                out[1] = -(x[0] * x[2]);
                out[2] = x[0] * x[1];
            }
            Nonlinearity::Rossler { b } => {
                out[0] = T::zero();
                out[1] = T::zero();
                out[2] = *b + x[2] * x[0];
            }
            Nonlinearity::Custom { g, .. } => g(x, out),
        }
    }

    /// `out = L x + G(x)` without dimension checks.
    #[inline]
    pub fn vector_field_into(&self, x: &[T], out: &mut [T]) {
        self.nonlinear_into(x, out);
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.linear_part.row(i);
            let mut acc = T::zero();
            for (&l, &xi) in row.iter().zip(x) {
                acc += l * xi;
            }
            *o += acc;
        }
    }

    /// `J_G(x)`, overwriting `out`.
    pub fn jacobian_into(&self, x: &[T], out: &mut Matrix<T>) {
        out.as_mut_slice().iter_mut().for_each(|v| *v = T::zero());
        match &self.nonlinearity {
            Nonlinearity::Bilinear => {
                // d(-xz) = (-z, 0, -x); d(xy) = (y, x, 0)
                out[(1, 0)] = -x[2];
                out[(1, 2)] = -x[0];
                out[(2, 0)] = x[1];
                out[(2, 1)] = x[0];
            }
            Nonlinearity::Rossler { .. } => {
                out[(2, 0)] = x[2];
                out[(2, 2)] = x[0];
            }
            Nonlinearity::Custom { jacobian, .. } => jacobian(x, out),
        }
    }
}

impl<T: Real> fmt::Debug for SystemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("linear_part", &self.linear_part)
            .field("params", &self.params)
            .finish()
    }
}
