//! LOD multiscale bases and linearized backward-Euler time stepping for the
//! Landau–Lifshitz equation on the unit square.

pub mod analysis;
pub mod coefficients;
pub mod error;
pub mod fem;
pub mod lod;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod stepper;
pub mod studies;

pub use coefficients::{
    eval_coefficient, exact_solution_example1, forcing_example1, initial_bump, CoefficientFamily,
    CoefficientField, ExactSolution,
};
pub use error::{Error, Result};
pub use fem::{
    assemble_cross_convection, assemble_load, assemble_mass, assemble_stiffness, ll_energy, BlockOperator,
    FemSpace, MagnetizationField, ScalarOperator,
};
pub use mesh::{build_uniform_trimesh, element_patch, make_mesh_pair, MeshPair, Patch, TriMesh};
pub use sparse::CsrMatrix;
pub use lod::{
    build_lod_basis, project_coarse, reduce_block_operator, reduce_operator, reduce_symmetric_operator, ritz_project, solve_corrector, BilinearForm, CoarseProjector,
    LodBasis, Layers,
};
pub use stepper::{
    run_evolution, step_fine, step_lod, Discretization, EnergyObserver, EvolutionState, Observer, Representation,
    Scheme, SchemeConfig,
};
pub use analysis::{
    bn_projection, convergence_table, cross_section, error_norms, modulus_deviation, Axis, CrossSection, ErrorReport,
    ErrorRow, Truth,
};
