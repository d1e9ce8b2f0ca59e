//! Linearized backward-Euler steps for the Landau–Lifshitz equation
//! `m_t - a div(k grad m) + m x div(k grad m) = a k |grad m|^2 m + f`,
//! in the fine P1 space or in the LOD space.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::{Mat, MatRef};

use crate::analysis::modulus_deviation;
use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::fem::{levi_civita, BlockOperator, FemSpace, MagnetizationField, ScalarOperator};
use crate::lod::{reduce_operator, reduce_symmetric_operator, ritz_project, LodBasis};
use crate::sparse::{block_csr, dense_lu_solve, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Implicit `a k |grad m^n|^2 m^{n+1}` on the left.
    Cimrak,
    /// Nonlinear term fully explicit.
    Gao,
    /// Linearized projection scheme followed by node-wise renormalization.
    An,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Cimrak, Scheme::Gao, Scheme::An];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Cimrak => "cimrak",
            Scheme::Gao => "gao",
            Scheme::An => "an",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "scheme",
                reason: format!("unknown scheme `{s}` (expected cimrak, gao or an)"),
            })
    }
}

pub type Forcing = Arc<dyn Fn(f64, f64, f64) -> [f64; 3] + Send + Sync>;

#[derive(Clone)]
pub struct SchemeConfig {
    pub alpha: f64,
    pub tau: f64,
    pub scheme: Scheme,
    pub forcing: Option<Forcing>,
    pub kappa: CoefficientField,
}

impl fmt::Debug for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchemeConfig")
            .field("alpha", &self.alpha)
            .field("tau", &self.tau)
            .field("scheme", &self.scheme)
            .field("forcing", &self.forcing.as_ref().map(|_| "<fn>"))
            .field("kappa", &self.kappa)
            .finish()
    }
}

impl SchemeConfig {
    pub fn new(alpha: f64, tau: f64, scheme: Scheme, kappa: CoefficientField) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be positive, got {alpha}"),
            });
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("must be positive, got {tau}"),
            });
        }
        Ok(Self {
            alpha,
            tau,
            scheme,
            forcing: None,
            kappa,
        })
    }

    pub fn with_forcing(mut self, f: impl Fn(f64, f64, f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        self.forcing = Some(Arc::new(f));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Fine,
    Lod,
}

/// Discrete magnetization at `t_n = n tau`. LOD states carry their
/// coefficients next to the fine realization used by every fine-space
/// computation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub step_index: usize,
    pub time: f64,
    pub field: MagnetizationField,
    pub coefficients: Option<[Vec<f64>; 3]>,
}

impl EvolutionState {
    pub fn fine(field: MagnetizationField) -> Self {
        Self {
            step_index: 0,
            time: 0.0,
            field,
            coefficients: None,
        }
    }

    pub fn lod(basis: &LodBasis, coefficients: [Vec<f64>; 3]) -> Result<Self> {
        let comps = [
            basis.lift(&coefficients[0])?,
            basis.lift(&coefficients[1])?,
            basis.lift(&coefficients[2])?,
        ];
        Ok(Self {
            step_index: 0,
            time: 0.0,
            field: MagnetizationField::new(basis.pair().fine(), comps)?,
            coefficients: Some(coefficients),
        })
    }

    /// Starts an LOD run from the Ritz projection (with the basis' own
    /// bilinear form) of a fine field.
    pub fn lod_from_fine(basis: &LodBasis, field: &MagnetizationField) -> Result<Self> {
        let space = FemSpace::new(basis.pair().fine());
        field.check_mesh(space.mesh(), "EvolutionState::lod_from_fine")?;
        let a = basis.form().assemble(&space);
        let mut coeffs: [Vec<f64>; 3] = Default::default();
        for c in 0..3 {
            let rhs = a.matvec(&field.comps[c]);
            coeffs[c] = ritz_project(basis, &a, &rhs)?;
        }
        Self::lod(basis, coeffs)
    }

    pub fn representation(&self) -> Representation {
        if self.coefficients.is_some() {
            Representation::Lod
        } else {
            Representation::Fine
        }
    }
}

/// How often each operator family was assembled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyCounts {
    pub mass: usize,
    pub stiffness: usize,
    pub cross: usize,
    pub weighted_mass: usize,
    pub coupling: usize,
    pub load: usize,
    pub factorizations: usize,
}

/// Operators shared by the fine and LOD steppers.
struct StepOperators {
    space: FemSpace,
    kappa: Vec<f64>,
    mass: ScalarOperator,
    stiffness: ScalarOperator,
    counts: AssemblyCounts,
}

impl StepOperators {
    fn new(space: FemSpace, cfg: &SchemeConfig) -> Result<Self> {
        let kappa = space.kappa_per_element(&cfg.kappa);
        let mass = space.mass(None)?;
        let stiffness = space.weighted_stiffness(&kappa)?;
        Ok(Self {
            space,
            kappa,
            mass,
            stiffness,
            counts: AssemblyCounts {
                mass: 1,
                stiffness: 1,
                ..Default::default()
            },
        })
    }

    /// Per-element `kappa |grad m|^2`.
    fn weight(&self, m: &MagnetizationField) -> Vec<f64> {
        self.space
            .gradient_norm_sq(m)
            .into_iter()
            .zip(&self.kappa)
            .map(|(g, k)| g * k)
            .collect()
    }

    fn load(&mut self, cfg: &SchemeConfig, t: f64) -> Option<[Vec<f64>; 3]> {
        cfg.forcing.as_ref().map(|f| {
            self.counts.load += 1;
            self.space.load(|x, y| f(x, y, t))
        })
    }

    /// Right-hand side `(1/tau) M m^n + f^{n+1}` plus the explicit Gao term.
    fn rhs(&mut self, cfg: &SchemeConfig, m: &MagnetizationField, t_next: f64) -> Result<[Vec<f64>; 3]> {
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|c| {
            let mut v = self.mass.matvec(&m.comps[c]);
            v.iter_mut().for_each(|x| *x /= cfg.tau);
            v
        });
        if let Some(load) = self.load(cfg, t_next) {
            for c in 0..3 {
                for (o, l) in out[c].iter_mut().zip(&load[c]) {
                    *o += l;
                }
            }
        }
        if cfg.scheme == Scheme::Gao {
            let w = self.space.mass(Some(&self.weight(m)))?;
            self.counts.weighted_mass += 1;
            for c in 0..3 {
                let wm = w.matvec(&m.comps[c]);
                for (o, x) in out[c].iter_mut().zip(wm) {
                    *o += cfg.alpha * x;
                }
            }
        }
        Ok(out)
    }

    /// Lagged pieces for the field `m`: the cross scalars, `a W` (Cimrak)
    /// and `a N` (An).
    fn lagged_parts(&mut self, cfg: &SchemeConfig, m: &MagnetizationField) -> Result<LaggedParts> {
        let cross = self.space.cross_scalars(&self.kappa, m)?;
        self.counts.cross += 1;
        let mut parts = LaggedParts {
            cross,
            weighted: None,
            coupling: None,
        };
        match cfg.scheme {
            Scheme::Cimrak => {
                parts.weighted = Some(self.space.mass(Some(&self.weight(m)))?.scaled(cfg.alpha));
                self.counts.weighted_mass += 1;
            }
            Scheme::Gao => {}
            Scheme::An => {
                let mut n = self.space.gradient_coupling(&self.kappa, m)?;
                self.counts.coupling += 1;
                for row in n.blocks.iter_mut() {
                    for b in row.iter_mut() {
                        *b = b.take().map(|b| b.scaled(cfg.alpha));
                    }
                }
                parts.coupling = Some(n);
            }
        }
        Ok(parts)
    }

    /// Lagged left-hand side `L_n` such that the system matrix is
    /// `I (x) ((1/tau) M + a S) - L_n`.
    fn lagged(&mut self, cfg: &SchemeConfig, m: &MagnetizationField) -> Result<BlockOperator> {
        let parts = self.lagged_parts(cfg, m)?;
        let mut op = BlockOperator::from_levi_civita(self.space.num_nodes(), parts.cross.into());
        if let Some(w) = &parts.weighted {
            for c in 0..3 {
                op.blocks[c][c] = Some(match op.blocks[c][c].take() {
                    Some(b) => b.add_scaled(1.0, w)?,
                    None => w.clone(),
                });
            }
        }
        if let Some(n) = parts.coupling {
            for (a, row) in n.blocks.into_iter().enumerate() {
                for (c, extra) in row.into_iter().enumerate() {
                    let Some(extra) = extra else { continue };
                    op.blocks[a][c] = Some(match op.blocks[a][c].take() {
                        Some(b) => b.add_scaled(1.0, &extra)?,
                        None => extra,
                    });
                }
            }
        }
        Ok(op)
    }
}

struct LaggedParts {
    cross: [ScalarOperator; 3],
    weighted: Option<ScalarOperator>,
    coupling: Option<BlockOperator>,
}

fn finish_field(cfg: &SchemeConfig, field: MagnetizationField) -> Result<MagnetizationField> {
    if !field.is_finite() {
        return Err(Error::NonFinite("time step solution"));
    }
    match cfg.scheme {
        Scheme::An => field.normalized(),
        _ => Ok(field),
    }
}

/// Stepper in the full fine P1 space. Mass and stiffness are assembled once;
/// the symbolic LU analysis is reused across steps.
pub struct FineStepper {
    ops: StepOperators,
    cfg: SchemeConfig,
    diagonal: ScalarOperator,
    zero: ScalarOperator,
    symbolic: Option<SymbolicLu<usize>>,
}

impl FineStepper {
    pub fn new(space: FemSpace, cfg: &SchemeConfig) -> Result<Self> {
        let ops = StepOperators::new(space, cfg)?;
        let diagonal = ops.mass.scaled(1.0 / cfg.tau).add_scaled(cfg.alpha, &ops.stiffness)?;
        let zero = ops.mass.zeros_like();
        Ok(Self {
            ops,
            cfg: cfg.clone(),
            diagonal,
            zero,
            symbolic: None,
        })
    }

    pub fn space(&self) -> &FemSpace {
        &self.ops.space
    }

    pub fn stiffness(&self) -> &ScalarOperator {
        &self.ops.stiffness
    }

    pub fn counts(&self) -> AssemblyCounts {
        self.ops.counts
    }

    /// Full `3N x 3N` system matrix for the lagged field `m` (component-major).
    pub fn system_matrix(&mut self, m: &MagnetizationField) -> Result<CsrMatrix> {
        let lagged = self.ops.lagged(&self.cfg, m)?;
        let blocks: Vec<Vec<CsrMatrix>> = (0..3)
            .map(|a| {
                (0..3)
                    .map(|c| {
                        let base = if a == c { &self.diagonal } else { &self.zero };
                        match &lagged.blocks[a][c] {
                            Some(l) => base.add_scaled(-1.0, l),
                            None => Ok(base.clone()),
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let refs: Vec<Vec<Option<&CsrMatrix>>> =
            blocks.iter().map(|row| row.iter().map(Some).collect()).collect();
        Ok(block_csr(&refs))
    }

    pub fn step(&mut self, state: &EvolutionState) -> Result<EvolutionState> {
        if state.representation() != Representation::Fine {
            return Err(Error::InvalidParameter {
                name: "state",
                reason: "step_fine needs a fine-space state".into(),
            });
        }
        let m = &state.field;
        m.check_mesh(self.ops.space.mesh(), "step_fine")?;
        let t_next = (state.step_index + 1) as f64 * self.cfg.tau;
        let k = self.system_matrix(m)?.to_faer_col()?;
        let rhs = self.ops.rhs(&self.cfg, m, t_next)?;
        if self.symbolic.is_none() {
            self.symbolic = Some(SymbolicLu::try_new(k.symbolic()).map_err(|e| Error::Factorization {
                context: "fine step symbolic analysis".into(),
                reason: format!("{e:?}"),
            })?);
        }
        let symbolic = self.symbolic.clone().expect("symbolic factorization");
        let lu = Lu::try_new_with_symbolic(symbolic, k.as_ref()).map_err(|e| Error::Factorization {
            context: "fine step (singular system)".into(),
            reason: format!("{e:?}"),
        })?;
        self.ops.counts.factorizations += 1;
        let n = m.num_nodes();
        let mut x = Mat::<f64>::from_fn(3 * n, 1, |i, _| rhs[i / n][i % n]);
        lu.solve_in_place(x.as_mut());
        let comps = std::array::from_fn(|c| (0..n).map(|i| x[(c * n + i, 0)]).collect());
        let field = finish_field(&self.cfg, MagnetizationField::new(self.ops.space.mesh(), comps)?)?;
        Ok(EvolutionState {
            step_index: state.step_index + 1,
            time: t_next,
            field,
            coefficients: None,
        })
    }
}

/// Stepper in `[V_LOD]^3`: fine operators are assembled with the current
/// fine realization and reduced with the basis every step.
pub struct LodStepper<'a> {
    basis: &'a LodBasis,
    ops: StepOperators,
    cfg: SchemeConfig,
    /// `B^T ((1/tau) M + a S) B`
    reduced_diagonal: Mat<f64>,
}

impl<'a> LodStepper<'a> {
    pub fn new(basis: &'a LodBasis, cfg: &SchemeConfig) -> Result<Self> {
        let space = FemSpace::new(basis.pair().fine());
        let ops = StepOperators::new(space, cfg)?;
        let diagonal = ops.mass.scaled(1.0 / cfg.tau).add_scaled(cfg.alpha, &ops.stiffness)?;
        let reduced_diagonal = reduce_symmetric_operator(basis, &diagonal)?;
        Ok(Self {
            basis,
            ops,
            cfg: cfg.clone(),
            reduced_diagonal,
        })
    }

    pub fn space(&self) -> &FemSpace {
        &self.ops.space
    }

    pub fn stiffness(&self) -> &ScalarOperator {
        &self.ops.stiffness
    }

    pub fn counts(&self) -> AssemblyCounts {
        self.ops.counts
    }

    /// Dense reduced system matrix for the lagged fine field `m`. Each
    /// distinct lagged scalar operator is reduced once.
    pub fn system_matrix(&mut self, m: &MagnetizationField) -> Result<Mat<f64>> {
        let parts = self.ops.lagged_parts(&self.cfg, m)?;
        let n = self.basis.dim();
        let mut diagonal = self.reduced_diagonal.clone();
        if let Some(w) = &parts.weighted {
            diagonal -= reduce_symmetric_operator(self.basis, w)?;
        }
        let mut k = Mat::<f64>::zeros(3 * n, 3 * n);
        for a in 0..3 {
            k.as_mut().submatrix_mut(a * n, a * n, n, n).copy_from(&diagonal);
        }
        for (b, s) in parts.cross.iter().enumerate() {
            let r = reduce_symmetric_operator(self.basis, s)?;
            for a in 0..3 {
                if a == b {
                    continue;
                }
                let c = 3 - a - b;
                let sign = levi_civita(a, b, c);
                let mut dst = k.as_mut().submatrix_mut(a * n, c * n, n, n);
                for j in 0..n {
                    for i in 0..n {
                        dst[(i, j)] -= sign * r[(i, j)];
                    }
                }
            }
        }
        if let Some(coupling) = &parts.coupling {
            for a in 0..3 {
                for c in 0..3 {
                    if let Some(block) = &coupling.blocks[a][c] {
                        let r = reduce_operator(self.basis, block)?;
                        let mut dst = k.as_mut().submatrix_mut(a * n, c * n, n, n);
                        for j in 0..n {
                            for i in 0..n {
                                dst[(i, j)] -= r[(i, j)];
                            }
                        }
                    }
                }
            }
        }
        Ok(k)
    }

    pub fn step(&mut self, state: &EvolutionState) -> Result<EvolutionState> {
        if state.representation() != Representation::Lod {
            return Err(Error::InvalidParameter {
                name: "state",
                reason: "step_lod needs an LOD state".into(),
            });
        }
        let m = &state.field;
        m.check_mesh(self.ops.space.mesh(), "step_lod")?;
        let t_next = (state.step_index + 1) as f64 * self.cfg.tau;
        let k = self.system_matrix(m)?;
        let rhs = self.ops.rhs(&self.cfg, m, t_next)?;
        let n = self.basis.dim();
        let mut b = Vec::with_capacity(3 * n);
        for r in &rhs {
            b.extend(self.basis.restrict(r)?);
        }
        let x = dense_lu_solve(k.as_ref(), MatRef::from_column_major_slice(&b, 3 * n, 1), "LOD step")?;
        self.ops.counts.factorizations += 1;
        let coeffs: [Vec<f64>; 3] = std::array::from_fn(|c| (0..n).map(|i| x[(c * n + i, 0)]).collect());
        let comps = [
            self.basis.lift(&coeffs[0])?,
            self.basis.lift(&coeffs[1])?,
            self.basis.lift(&coeffs[2])?,
        ];
        let field = finish_field(&self.cfg, MagnetizationField::new(self.ops.space.mesh(), comps)?)?;
        Ok(EvolutionState {
            step_index: state.step_index + 1,
            time: t_next,
            field,
            coefficients: Some(coeffs),
        })
    }
}

/// One step in the fine space.
pub fn step_fine(state: &EvolutionState, cfg: &SchemeConfig) -> Result<EvolutionState> {
    let mesh = crate::mesh::build_uniform_trimesh(state.field.n_sub())?;
    FineStepper::new(FemSpace::new(&mesh), cfg)?.step(state)
}

/// One step in the LOD space.
pub fn step_lod(state: &EvolutionState, basis: &LodBasis, cfg: &SchemeConfig) -> Result<EvolutionState> {
    LodStepper::new(basis, cfg)?.step(state)
}

/// Data handed to observers.
pub struct ObserverContext<'a> {
    pub space: &'a FemSpace,
    pub stiffness: &'a ScalarOperator,
}

pub trait Observer {
    /// Observe every `stride` steps (and always the initial state).
    fn stride(&self) -> usize {
        1
    }

    fn observe(&mut self, ctx: &ObserverContext<'_>, state: &EvolutionState) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub modulus_deviation: f64,
}

/// Records the exchange energy and the unit-modulus deviation.
#[derive(Debug, Clone, Default)]
pub struct EnergyObserver {
    pub stride: usize,
    pub records: Vec<StepRecord>,
}

impl EnergyObserver {
    pub fn new(stride: usize) -> Self {
        Self {
            stride: stride.max(1),
            records: Vec::new(),
        }
    }
}

impl Observer for EnergyObserver {
    fn stride(&self) -> usize {
        self.stride
    }

    fn observe(&mut self, ctx: &ObserverContext<'_>, state: &EvolutionState) -> Result<()> {
        self.records.push(StepRecord {
            step: state.step_index,
            time: state.time,
            energy: ctx.space.energy(ctx.stiffness, &state.field)?,
            modulus_deviation: modulus_deviation(ctx.space.mesh(), &state.field)?,
        });
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: EvolutionState,
    pub counts: AssemblyCounts,
}

/// Where a run lives.
#[derive(Debug, Clone, Copy)]
pub enum Discretization<'a> {
    Fine,
    Lod(&'a LodBasis),
}

pub fn run_evolution(
    initial: EvolutionState,
    discretization: Discretization<'_>,
    cfg: &SchemeConfig,
    n_steps: usize,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutput> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            reason: "must be at least 1".into(),
        });
    }
    enum Stepper<'b> {
        Fine(FineStepper),
        Lod(LodStepper<'b>),
    }
    let mut stepper = match discretization {
        Discretization::Fine => {
            let mesh = crate::mesh::build_uniform_trimesh(initial.field.n_sub())?;
            Stepper::Fine(FineStepper::new(FemSpace::new(&mesh), cfg)?)
        }
        Discretization::Lod(basis) => Stepper::Lod(LodStepper::new(basis, cfg)?),
    };
    let notify = |stepper: &Stepper<'_>, observers: &mut [&mut dyn Observer], state: &EvolutionState| -> Result<()> {
        let (space, stiffness) = match stepper {
            Stepper::Fine(s) => (s.space(), s.stiffness()),
            Stepper::Lod(s) => (s.space(), s.stiffness()),
        };
        let ctx = ObserverContext { space, stiffness };
        for o in observers.iter_mut() {
            if state.step_index % o.stride().max(1) == 0 || state.step_index == n_steps {
                o.observe(&ctx, state)?;
            }
        }
        Ok(())
    };
    notify(&stepper, observers, &initial)?;
    let mut state = initial;
    for _ in 0..n_steps {
        let wrap = |e| Error::Step {
            step: state.step_index + 1,
            source: Box::new(e),
        };
        let next = match &mut stepper {
            Stepper::Fine(s) => s.step(&state),
            Stepper::Lod(s) => s.step(&state),
        }
        .map_err(wrap)?;
        state = next;
        notify(&stepper, observers, &state)?;
    }
    let counts = match &stepper {
        Stepper::Fine(s) => s.counts(),
        Stepper::Lod(s) => s.counts(),
    };
    Ok(RunOutput { state, counts })
}
