//! Material coefficients, initial data and the manufactured exact solution.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Named coefficient families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientFamily {
    Constant,
    QuasiPeriodic,
    LocallyPeriodic,
    RoughInt,
}

impl CoefficientFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::QuasiPeriodic => "quasi_periodic",
            Self::LocallyPeriodic => "locally_periodic",
            Self::RoughInt => "rough_int",
        }
    }

    /// Default oscillation scale for the family.
    pub fn default_epsilon(&self) -> f64 {
        match self {
            Self::QuasiPeriodic => 1.0 / 32.0,
            Self::LocallyPeriodic => 1.0 / 64.0,
            Self::Constant | Self::RoughInt => 1.0,
        }
    }
}

impl fmt::Display for CoefficientFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoefficientFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "quasi_periodic" => Ok(Self::QuasiPeriodic),
            "locally_periodic" => Ok(Self::LocallyPeriodic),
            "rough_int" => Ok(Self::RoughInt),
            other => Err(Error::InvalidParameter {
                name: "coefficient.family",
                reason: format!("unknown family `{other}`"),
            }),
        }
    }
}

/// Scalar coefficient field `kappa(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientField {
    pub family: CoefficientFamily,
    pub epsilon: f64,
    /// Multiplies the whole field; 1 for the named families.
    pub scale: f64,
}

impl CoefficientField {
    pub fn new(family: CoefficientFamily, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coefficient.epsilon",
                reason: format!("must be positive and finite, got {epsilon}"),
            });
        }
        Ok(Self {
            family,
            epsilon,
            scale: 1.0,
        })
    }

    pub fn constant() -> Self {
        Self {
            family: CoefficientFamily::Constant,
            epsilon: 1.0,
            scale: 1.0,
        }
    }

    pub fn with_default_epsilon(family: CoefficientFamily) -> Self {
        Self {
            family,
            epsilon: family.default_epsilon(),
            scale: 1.0,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            scale: self.scale * factor,
            ..self
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.scale * eval_coefficient(self.family, self.epsilon, x, y)
    }
}

/// Evaluates the named coefficient family at `(x, y)`.
pub fn eval_coefficient(family: CoefficientFamily, epsilon: f64, x: f64, y: f64) -> f64 {
    match family {
        CoefficientFamily::Constant => 1.0,
        CoefficientFamily::QuasiPeriodic => {
            let sx = (2.0 * PI * x / epsilon).sin();
            let sy = (2.0 * PI * y / epsilon).sin();
            let sy2 = (2.0 * 2f64.sqrt() * PI * y / epsilon).sin();
            (1.0 + 0.25 * sx) * (1.0 + 0.25 * sy + 0.25 * sy2)
        }
        CoefficientFamily::LocallyPeriodic => {
            let arg = -(2.0 * PI * (x + y) / epsilon).cos()
                + (2.0 * PI * x / epsilon).sin() * (2.0 * PI * y).cos();
            0.25 * arg.exp()
        }
        CoefficientFamily::RoughInt => (5.0 + 2.0 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()).floor(),
    }
}

/// Unnormalized bump profile; each component is a positive offset plus an
/// exponential of shifted cosines.
pub fn initial_bump_raw(x: f64, y: f64) -> [f64; 3] {
    let c = |s: f64| (2.0 * PI * s).cos();
    [
        0.6 + (-0.3 * (c(x - 0.25) + c(y - 0.12))).exp(),
        0.5 + (-0.4 * (c(x) + c(y - 0.4))).exp(),
        0.4 + (-0.2 * (c(x - 0.81) + c(y - 0.73))).exp(),
    ]
}

/// Normalized bump initial magnetization.
pub fn initial_bump(x: f64, y: f64) -> [f64; 3] {
    let v = initial_bump_raw(x, y);
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Closed-form space-time field together with its derivatives.
pub trait ExactSolution: Sync {
    fn value(&self, x: f64, y: f64, t: f64) -> [f64; 3];
    fn time_derivative(&self, x: f64, y: f64, t: f64) -> [f64; 3];
    /// `gradient[c] = [d/dx m_c, d/dy m_c]`.
    fn gradient(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 3];
    fn laplacian(&self, x: f64, y: f64, t: f64) -> [f64; 3];
}

/// `p(s) = s^2 (1 - s)^2` and its first two derivatives.
fn profile(s: f64) -> (f64, f64, f64) {
    let one = 1.0 - s;
    (
        s * s * one * one,
        2.0 * s * one * (1.0 - 2.0 * s),
        2.0 * (1.0 - 6.0 * s + 6.0 * s * s),
    )
}

/// The bubble `g = x^2 (1-x)^2 y^2 (1-y)^2` with gradient and Laplacian.
pub fn bubble(x: f64, y: f64) -> (f64, [f64; 2], f64) {
    let (px, dpx, ddpx) = profile(x);
    let (py, dpy, ddpy) = profile(y);
    (px * py, [dpx * py, px * dpy], ddpx * py + px * ddpy)
}

/// Manufactured solution `m = (cos g sin t, sin g sin t, cos t)`; lies on the
/// unit sphere and satisfies homogeneous Neumann conditions.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example1Solution;

pub fn exact_solution_example1() -> Example1Solution {
    Example1Solution
}

impl ExactSolution for Example1Solution {
    fn value(&self, x: f64, y: f64, t: f64) -> [f64; 3] {
        let (g, _, _) = bubble(x, y);
        let st = t.sin();
        [g.cos() * st, g.sin() * st, t.cos()]
    }

    fn time_derivative(&self, x: f64, y: f64, t: f64) -> [f64; 3] {
        let (g, _, _) = bubble(x, y);
        let ct = t.cos();
        [g.cos() * ct, g.sin() * ct, -t.sin()]
    }

    fn gradient(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 3] {
        let (g, dg, _) = bubble(x, y);
        let st = t.sin();
        let (sg, cg) = g.sin_cos();
        [
            [-sg * dg[0] * st, -sg * dg[1] * st],
            [cg * dg[0] * st, cg * dg[1] * st],
            [0.0, 0.0],
        ]
    }

    fn laplacian(&self, x: f64, y: f64, t: f64) -> [f64; 3] {
        let (g, dg, lg) = bubble(x, y);
        let st = t.sin();
        let (sg, cg) = g.sin_cos();
        let grad2 = dg[0] * dg[0] + dg[1] * dg[1];
        [
            st * (-cg * grad2 - sg * lg),
            st * (-sg * grad2 + cg * lg),
            0.0,
        ]
    }
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Forcing that makes `m_e` an exact solution of
/// `m_t - a Lap m + m x Lap m = a |grad m|^2 m + f`.
#[derive(Debug, Clone, Copy)]
pub struct Example1Forcing {
    pub alpha: f64,
}

impl Example1Forcing {
    pub fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 3] {
        forcing_example1(self.alpha, x, y, t)
    }
}

pub fn forcing_example1(alpha: f64, x: f64, y: f64, t: f64) -> [f64; 3] {
    let sol = Example1Solution;
    let m = sol.value(x, y, t);
    let dt = sol.time_derivative(x, y, t);
    let lap = sol.laplacian(x, y, t);
    let grad = sol.gradient(x, y, t);
    let grad2: f64 = grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum();
    let mxl = cross(m, lap);
    std::array::from_fn(|c| dt[c] - alpha * lap[c] + mxl[c] - alpha * grad2 * m[c])
}
