//! Experiment drivers shared by the command-line tool and the acceptance
//! suite. Everything here is deterministic and free of IO.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::analysis::{bn_projection, convergence_table, error_norms, modulus_deviation, ErrorReport, ErrorRow, Truth};
use crate::coefficients::{exact_solution_example1, forcing_example1, initial_bump, CoefficientField, ExactSolution};
use crate::error::{Error, Result};
use crate::fem::{FemSpace, MagnetizationField};
use crate::lod::{build_lod_basis_with, ritz_project, BilinearForm, Layers, LodBasis};
use crate::mesh::{build_uniform_trimesh, make_mesh_pair};
use crate::sparse::sparse_cholesky_solve;
use crate::stepper::{run_evolution, Discretization, EvolutionState, Observer, RunOutput, Scheme, SchemeConfig};

/// Initial magnetization of an LL run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    /// The manufactured solution at `t = 0`, i.e. `(0, 0, 1)`.
    Example1,
    Bump,
}

impl InitialData {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitialData::Example1 => "example1",
            InitialData::Bump => "bump",
        }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(InitialData::Example1),
            "bump" => Ok(InitialData::Bump),
            _ => Err(Error::InvalidParameter {
                name: "initial",
                reason: format!("unknown initial data `{s}` (expected example1 or bump)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingKind {
    None,
    /// Forcing that makes the manufactured solution exact.
    Example1,
}

impl ForcingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ForcingKind::None => "none",
            ForcingKind::Example1 => "example1",
        }
    }
}

impl fmt::Display for ForcingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForcingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ForcingKind::None),
            "example1" => Ok(ForcingKind::Example1),
            _ => Err(Error::InvalidParameter {
                name: "forcing",
                reason: format!("unknown forcing `{s}` (expected none or example1)"),
            }),
        }
    }
}

/// A fully specified Landau–Lifshitz run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlProblem {
    pub kappa: CoefficientField,
    pub alpha: f64,
    pub tau: f64,
    pub final_time: f64,
    pub scheme: Scheme,
    pub initial: InitialData,
    pub forcing: ForcingKind,
    pub fine_n: usize,
}

impl LlProblem {
    /// `T / tau`, which must be (numerically) an integer.
    pub fn n_steps(&self) -> Result<usize> {
        let n = self.final_time / self.tau;
        let r = n.round();
        if !(r >= 1.0) || (n - r).abs() > 1e-6 * r {
            return Err(Error::InvalidParameter {
                name: "final_time",
                reason: format!("T={} is not a positive multiple of tau={}", self.final_time, self.tau),
            });
        }
        Ok(r as usize)
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        let cfg = SchemeConfig::new(self.alpha, self.tau, self.scheme, self.kappa)?;
        Ok(match self.forcing {
            ForcingKind::None => cfg,
            ForcingKind::Example1 => {
                let alpha = self.alpha;
                cfg.with_forcing(move |x, y, t| forcing_example1(alpha, x, y, t))
            }
        })
    }

    pub fn initial_field(&self) -> Result<MagnetizationField> {
        let mesh = build_uniform_trimesh(self.fine_n)?;
        Ok(match self.initial {
            InitialData::Example1 => {
                let sol = exact_solution_example1();
                MagnetizationField::from_fn(&mesh, |x, y| sol.value(x, y, 0.0))
            }
            InitialData::Bump => MagnetizationField::from_fn(&mesh, initial_bump),
        })
    }

    /// Whether the closed-form solution applies.
    pub fn has_exact_solution(&self) -> bool {
        self.initial == InitialData::Example1 && self.forcing == ForcingKind::Example1 && self.kappa == CoefficientField::constant()
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }
}

/// Step-by-step P1 run on the fine mesh.
pub fn run_fine(problem: &LlProblem, observers: &mut [&mut dyn Observer]) -> Result<RunOutput> {
    let cfg = problem.scheme_config()?;
    run_evolution(
        EvolutionState::fine(problem.initial_field()?),
        Discretization::Fine,
        &cfg,
        problem.n_steps()?,
        observers,
    )
}

/// LOD run started from the Ritz projection of the initial field.
pub fn run_lod(problem: &LlProblem, basis: &LodBasis, observers: &mut [&mut dyn Observer]) -> Result<RunOutput> {
    if basis.pair().fine().n_sub() != problem.fine_n {
        return Err(Error::MeshMismatch {
            context: "run_lod",
            expected: problem.fine_n,
            actual: basis.pair().fine().n_sub(),
        });
    }
    let cfg = problem.scheme_config()?;
    let init = EvolutionState::lod_from_fine(basis, &problem.initial_field()?)?;
    run_evolution(init, Discretization::Lod(basis), &cfg, problem.n_steps()?, observers)
}

/// LOD basis for an LL problem: the corrector form is `(kappa grad, grad) + (., .)`.
pub fn ll_basis(problem: &LlProblem, coarse_n: usize, layers: Layers) -> Result<LodBasis> {
    let pair = make_mesh_pair(coarse_n, problem.fine_n)?;
    let space = FemSpace::new(pair.fine());
    build_lod_basis_with(&pair, &space, BilinearForm::new(problem.kappa), layers)
}

/// What LL errors are measured against.
#[derive(Clone, Copy)]
pub enum LlTruth<'a> {
    /// The manufactured solution at the final time.
    Exact,
    /// A fine reference field on the problem's fine mesh.
    Reference(&'a MagnetizationField),
}

/// Runs the LOD scheme for every coarse size and tabulates the final-time
/// errors.
pub fn ll_convergence(problem: &LlProblem, coarse_ns: &[usize], layers: Layers, truth: LlTruth<'_>) -> Result<ErrorReport> {
    let mesh = build_uniform_trimesh(problem.fine_n)?;
    let sol = exact_solution_example1();
    if matches!(truth, LlTruth::Exact) && !problem.has_exact_solution() {
        return Err(Error::InvalidParameter {
            name: "truth",
            reason: "the closed-form solution needs example1 initial data, example1 forcing and a constant coefficient"
                .into(),
        });
    }
    let mut rows = Vec::with_capacity(coarse_ns.len());
    for &n in coarse_ns {
        let basis = ll_basis(problem, n, layers)?;
        let out = run_lod(problem, &basis, &mut [])?;
        let field = &out.state.field;
        let (l2, h1) = match truth {
            LlTruth::Exact => error_norms(&mesh, field, Truth::Exact(&sol, out.state.time))?,
            LlTruth::Reference(r) => error_norms(&mesh, field, Truth::Field(r))?,
        };
        rows.push(ErrorRow {
            h: 1.0 / n as f64,
            l2,
            h1,
            modulus_dev: modulus_deviation(&mesh, field)?,
        });
    }
    convergence_table(rows)
}

/// Smooth manufactured elliptic solution `u = cos(pi x) cos(pi y)`.
pub fn elliptic_exact(x: f64, y: f64) -> f64 {
    (PI * x).cos() * (PI * y).cos()
}

/// Right-hand side of `-div grad u + u = f` for `elliptic_exact`.
pub fn elliptic_forcing(x: f64, y: f64) -> f64 {
    (2.0 * PI * PI + 1.0) * elliptic_exact(x, y)
}

/// Elliptic LOD errors against the fine P1 Galerkin solution of
/// `(kappa grad u, grad v) + (u, v) = (f, v)`.
pub fn elliptic_convergence(
    kappa: &CoefficientField,
    coarse_ns: &[usize],
    fine_n: usize,
    layers: Layers,
) -> Result<ErrorReport> {
    let mesh = build_uniform_trimesh(fine_n)?;
    let space = FemSpace::new(&mesh);
    let form = BilinearForm::new(*kappa);
    let a = form.assemble(&space);
    let rhs = space.load(|x, y| [elliptic_forcing(x, y), 0.0, 0.0]).into_iter().next().unwrap_or_default();
    let reference = sparse_cholesky_solve(&a, &rhs, "elliptic reference")?;
    let as_field = |u: Vec<f64>| {
        let zeros = vec![0.0; u.len()];
        MagnetizationField::new(&mesh, [u, zeros.clone(), zeros])
    };
    let reference = as_field(reference)?;
    let mut rows = Vec::with_capacity(coarse_ns.len());
    for &n in coarse_ns {
        let pair = make_mesh_pair(n, fine_n)?;
        let basis = build_lod_basis_with(&pair, &space, form, layers)?;
        let u = as_field(basis.lift(&ritz_project(&basis, &a, &rhs)?)?)?;
        let (l2, h1) = error_norms(&mesh, &u, Truth::Field(&reference))?;
        rows.push(ErrorRow {
            h: 1.0 / n as f64,
            l2,
            h1,
            modulus_dev: 0.0,
        });
    }
    convergence_table(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub layers: usize,
    /// Largest energy-norm distance between a localized and the global
    /// basis column.
    pub basis_distance: f64,
    /// L2 distance between the localized and the global Ritz solution of the
    /// manufactured elliptic problem.
    pub projection_error: f64,
}

/// Localization study: basis columns for each oversampling depth compared
/// against the global construction.
pub fn localization_decay(
    kappa: &CoefficientField,
    coarse_n: usize,
    fine_n: usize,
    layer_list: &[usize],
) -> Result<Vec<DecayRow>> {
    let pair = make_mesh_pair(coarse_n, fine_n)?;
    let space = FemSpace::new(pair.fine());
    let form = BilinearForm::new(*kappa);
    let a = form.assemble(&space);
    let mass = space.mass(None)?;
    let rhs = space.load(|x, y| [elliptic_forcing(x, y), 0.0, 0.0]).into_iter().next().unwrap_or_default();
    let global = build_lod_basis_with(&pair, &space, form, Layers::Global)?;
    let u_global = global.lift(&ritz_project(&global, &a, &rhs)?)?;
    let mut rows = Vec::with_capacity(layer_list.len());
    for &l in layer_list {
        let local = build_lod_basis_with(&pair, &space, form, Layers::Fixed(l))?;
        let mut worst: f64 = 0.0;
        for j in 0..global.dim() {
            let d: Vec<f64> = (0..global.fine_dim())
                .map(|i| local.columns()[(i, j)] - global.columns()[(i, j)])
                .collect();
            worst = worst.max(a.bilinear(&d, &d).max(0.0).sqrt());
        }
        let u = local.lift(&ritz_project(&local, &a, &rhs)?)?;
        let d: Vec<f64> = u.iter().zip(&u_global).map(|(x, y)| x - y).collect();
        rows.push(DecayRow {
            layers: l,
            basis_distance: worst,
            projection_error: mass.bilinear(&d, &d).max(0.0).sqrt(),
        });
    }
    Ok(rows)
}

/// Frozen field for the B-projection study.
pub fn bn_frozen_field(x: f64, y: f64) -> [f64; 3] {
    initial_bump(x, y)
}

/// Smooth target with homogeneous Neumann data.
pub fn bn_target(x: f64, y: f64) -> [f64; 3] {
    [(PI * x).cos() * (PI * y).cos(), (PI * x).cos(), (PI * y).cos()]
}

/// Projection error of `bn_target` through the frozen-field form on the
/// globally corrected basis with `kappa = 1`, against the fine P1 target.
pub fn bn_convergence(coarse_ns: &[usize], fine_n: usize, alpha: f64) -> Result<ErrorReport> {
    let mesh = build_uniform_trimesh(fine_n)?;
    let space = FemSpace::new(&mesh);
    let mn = MagnetizationField::from_fn(&mesh, bn_frozen_field);
    let target = MagnetizationField::from_fn(&mesh, bn_target);
    let mut rows = Vec::with_capacity(coarse_ns.len());
    for &n in coarse_ns {
        let pair = make_mesh_pair(n, fine_n)?;
        let basis = build_lod_basis_with(&pair, &space, BilinearForm::new(CoefficientField::constant()), Layers::Global)?;
        let c = bn_projection(&basis, &mn, &target, alpha)?;
        let comps = [basis.lift(&c[0])?, basis.lift(&c[1])?, basis.lift(&c[2])?];
        let approx = MagnetizationField::new(&mesh, comps)?;
        let (l2, h1) = error_norms(&mesh, &approx, Truth::Field(&target))?;
        rows.push(ErrorRow {
            h: 1.0 / n as f64,
            l2,
            h1,
            modulus_dev: 0.0,
        });
    }
    convergence_table(rows)
}
