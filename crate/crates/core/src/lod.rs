//! Localized orthogonal decomposition: coarse L2 projection, patch-local
//! correctors, the corrected basis and Galerkin reduction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::fem::{BlockOperator, ElementGeometry, FemSpace, ScalarOperator};
use crate::mesh::{MeshPair, Patch};
use crate::sparse::CsrMatrix;

/// Oversampling of the corrector patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layers {
    /// No localization: every corrector is solved on the whole domain.
    Global,
    Fixed(usize),
}

impl Layers {
    /// `ceil(2 log2(1/H))`.
    pub fn default_for(coarse_n: usize) -> Self {
        Layers::Fixed((2.0 * (coarse_n as f64).log2()).ceil().max(1.0) as usize)
    }
}

impl fmt::Display for Layers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layers::Global => f.write_str("global"),
            Layers::Fixed(l) => write!(f, "{l}"),
        }
    }
}

impl FromStr for Layers {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("global") {
            return Ok(Layers::Global);
        }
        s.parse::<usize>().map(Layers::Fixed).map_err(|_| Error::InvalidParameter {
            name: "layers",
            reason: format!("expected `global` or a non-negative integer, got `{s}`"),
        })
    }
}

/// `A(u, v) = (kappa grad u, grad v) + mass_weight (u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearForm {
    pub kappa: CoefficientField,
    pub mass_weight: f64,
}

impl BilinearForm {
    pub fn new(kappa: CoefficientField) -> Self {
        Self { kappa, mass_weight: 1.0 }
    }

    fn element_matrix(&self, g: &ElementGeometry, kappa_e: f64) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let m = if i == j { g.area / 6.0 } else { g.area / 12.0 };
                kappa_e * g.stiffness_entry(i, j) + self.mass_weight * m
            })
        })
    }

    pub fn assemble(&self, space: &FemSpace) -> ScalarOperator {
        let k = space.kappa_per_element(&self.kappa);
        let mut local = Vec::with_capacity(9 * space.num_elements());
        for (e, g) in space.geometry().iter().enumerate() {
            for row in self.element_matrix(g, k[e]) {
                local.extend_from_slice(&row);
            }
        }
        space.assemble(&local)
    }
}

/// L2 projection of fine P1 functions onto the coarse P1 space.
#[derive(Debug, Clone)]
pub struct CoarseProjector {
    pair: MeshPair,
    coarse_mass: ScalarOperator,
    /// `P^T M_h`: row `j` holds `(Lambda_j, phi_k)`.
    mixed_mass: CsrMatrix,
    factor: faer::linalg::solvers::Llt<f64>,
}

impl CoarseProjector {
    pub fn new(pair: &MeshPair, fine_space: &FemSpace) -> Result<Self> {
        let fine_mass = fine_space.mass(None)?;
        let p = pair.prolongation();
        let pt = p.transpose();
        let mixed_mass = sparse_product(&pt, &fine_mass);
        let coarse_mass = sparse_product(&mixed_mass, p);
        let factor = coarse_mass
            .to_dense()
            .llt(Side::Lower)
            .map_err(|e| Error::Factorization {
                context: "coarse mass".into(),
                reason: format!("{e:?}"),
            })?;
        Ok(Self {
            pair: pair.clone(),
            coarse_mass,
            mixed_mass,
            factor,
        })
    }

    pub fn pair(&self) -> &MeshPair {
        &self.pair
    }

    pub fn coarse_mass(&self) -> &ScalarOperator {
        &self.coarse_mass
    }

    pub fn mixed_mass(&self) -> &CsrMatrix {
        &self.mixed_mass
    }

    pub fn project(&self, v_fine: &[f64]) -> Result<Vec<f64>> {
        if v_fine.len() != self.mixed_mass.ncols() {
            return Err(Error::DimensionMismatch {
                context: "project_coarse",
                expected: self.mixed_mass.ncols(),
                actual: v_fine.len(),
            });
        }
        let rhs = self.mixed_mass.matvec(v_fine);
        let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.factor.solve_in_place(x.as_mut());
        Ok((0..rhs.len()).map(|i| x[(i, 0)]).collect())
    }

    /// Projects every column of a dense fine matrix.
    pub fn project_columns(&self, v: MatRef<'_, f64>) -> Mat<f64> {
        let mut x = self.mixed_mass.mul_dense(v);
        self.factor.solve_in_place(x.as_mut());
        x
    }
}

pub fn project_coarse(projector: &CoarseProjector, v_fine: &[f64]) -> Result<Vec<f64>> {
    projector.project(v_fine)
}

/// Sparse-sparse product, used only at setup time.
fn sparse_product(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    let mut triplets = Vec::new();
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    for r in 0..a.nrows() {
        acc.clear();
        for (k, av) in a.row(r) {
            for (c, bv) in b.row(k) {
                *acc.entry(c).or_insert(0.0) += av * bv;
            }
        }
        triplets.extend(acc.iter().map(|(&c, &v)| (r, c, v)));
    }
    CsrMatrix::from_triplets(a.nrows(), b.ncols(), triplets)
}

/// Factorized saddle-point system on one patch. Solves
/// `[A_P C^T; C 0] [q; mu] = [-r; 0]` through the Schur complement
/// `S = C A_P^{-1} C^T`.
struct PatchSolver {
    free: Vec<usize>,
    /// Position of each fine node in `free`, `usize::MAX` outside.
    local_index: Vec<usize>,
    constraints: CsrMatrix,
    a_factor: faer::sparse::linalg::solvers::Llt<usize, f64>,
    /// `A_P^{-1} C^T`
    y: Mat<f64>,
    s_factor: faer::linalg::solvers::Llt<f64>,
}

impl PatchSolver {
    fn new(a_fine: &CsrMatrix, projector: &CoarseProjector, patch: &Patch, fine_node_elements: &[Vec<usize>]) -> Result<Self> {
        let pair = projector.pair();
        let free = pair.patch_free_fine_nodes(patch, fine_node_elements);
        let rows = pair.patch_coarse_nodes(patch);
        if free.len() <= rows.len() {
            return Err(Error::Factorization {
                context: format!("corrector patch of element {}", patch.seed_element),
                reason: format!(
                    "{} free fine nodes cannot satisfy {} coarse constraints; refine the fine mesh",
                    free.len(),
                    rows.len()
                ),
            });
        }
        let mut local_index = vec![usize::MAX; a_fine.nrows()];
        for (l, &g) in free.iter().enumerate() {
            local_index[g] = l;
        }
        let a_patch = a_fine.submatrix(&free, &free);
        let a_factor = a_patch
            .to_faer_col()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization {
                context: format!("patch stiffness of element {}", patch.seed_element),
                reason: format!("{e:?}"),
            })?;
        let constraints = projector.mixed_mass().submatrix(&rows, &free);
        let mut y = constraints.transpose().to_dense();
        a_factor.solve_in_place(y.as_mut());
        let s = constraints.mul_dense(y.as_ref());
        let s_factor = s.llt(Side::Lower).map_err(|e| Error::Factorization {
            context: format!("constraint Schur complement of element {}", patch.seed_element),
            reason: format!("{e:?} (redundant constraints)"),
        })?;
        Ok(Self {
            free,
            local_index,
            constraints,
            a_factor,
            y,
            s_factor,
        })
    }

    /// Solves for each column of `rhs` (already restricted to free nodes and
    /// negated) and returns patch-local solutions.
    fn solve(&self, mut rhs: Mat<f64>) -> Mat<f64> {
        self.a_factor.solve_in_place(rhs.as_mut());
        let mut mu = self.constraints.mul_dense(rhs.as_ref());
        self.s_factor.solve_in_place(mu.as_mut());
        rhs - &self.y * &mu
    }
}

/// Element-restricted load `A_K(v_H, .)` for the three coarse hats of the
/// seed element, restricted to the free nodes of the patch.
fn seed_loads(
    solver: &PatchSolver,
    space: &FemSpace,
    form: &BilinearForm,
    kappa: &[f64],
    projector: &CoarseProjector,
    seed: usize,
    coarse_values: &[[f64; 3]],
) -> Mat<f64> {
    let pair = projector.pair();
    let coarse_tri = pair.coarse().elements()[seed];
    let mut rhs = Mat::<f64>::zeros(solver.free.len(), coarse_values.len());
    let fine = space.mesh();
    let p = pair.prolongation();
    for &e in pair.fine_elements_in(seed) {
        let tri = fine.elements()[e];
        let local = form.element_matrix(&space.geometry()[e], kappa[e]);
        for (col, vals) in coarse_values.iter().enumerate() {
            // fine nodal values of the coarse function on this element
            let v: [f64; 3] = std::array::from_fn(|a| {
                (0..3).map(|k| vals[k] * p.get(tri[a], coarse_tri[k])).sum()
            });
            for (i, &node) in tri.iter().enumerate() {
                let l = solver.local_index[node];
                if l == usize::MAX {
                    continue;
                }
                let r: f64 = (0..3).map(|j| local[i][j] * v[j]).sum();
                rhs[(l, col)] -= r;
            }
        }
    }
    rhs
}

fn global_patch(pair: &MeshPair) -> Patch {
    Patch {
        seed_element: 0,
        layers: 2 * pair.coarse().n_sub(),
        coarse_elements: (0..pair.coarse().num_elements()).collect(),
    }
}

/// Local correction `Q_K(v_H)` of the coarse function with nodal values
/// `coarse_fn` on the vertices of the seed element `patch.seed_element`.
/// The result is a full-length fine vector that vanishes outside the patch.
pub fn solve_corrector(pair: &MeshPair, kappa: &CoefficientField, patch: &Patch, coarse_fn: [f64; 3]) -> Result<Vec<f64>> {
    let space = FemSpace::new(pair.fine());
    let form = BilinearForm::new(*kappa);
    let a = form.assemble(&space);
    let projector = CoarseProjector::new(pair, &space)?;
    let seed = patch.seed_element;
    let wrap = |e| Error::Corrector { seed, source: Box::new(e) };
    if seed >= pair.coarse().num_elements() || !patch.contains(seed) {
        return Err(wrap(Error::InvalidElement {
            index: seed,
            count: pair.coarse().num_elements(),
        }));
    }
    let solver = PatchSolver::new(&a, &projector, patch, &space.mesh().node_elements()).map_err(wrap)?;
    let k = space.kappa_per_element(kappa);
    let rhs = seed_loads(&solver, &space, &form, &k, &projector, seed, &[coarse_fn]);
    let q = solver.solve(rhs);
    let mut out = vec![0.0; pair.fine().num_nodes()];
    for (l, &g) in solver.free.iter().enumerate() {
        out[g] = q[(l, 0)];
    }
    Ok(out)
}

/// Corrected coarse basis, one fine-space column per coarse node.
#[derive(Debug, Clone)]
pub struct LodBasis {
    pair: MeshPair,
    layers: Layers,
    form: BilinearForm,
    columns: Mat<f64>,
    /// `B^T`, kept so that row gathers in the reductions are contiguous.
    transposed: Mat<f64>,
}

impl LodBasis {
    /// Wraps precomputed columns (e.g. from a cache).
    pub fn from_columns(pair: &MeshPair, layers: Layers, form: BilinearForm, columns: Mat<f64>) -> Result<Self> {
        if columns.nrows() != pair.fine().num_nodes() || columns.ncols() != pair.coarse().num_nodes() {
            return Err(Error::DimensionMismatch {
                context: "LodBasis::from_columns",
                expected: pair.fine().num_nodes() * pair.coarse().num_nodes(),
                actual: columns.nrows() * columns.ncols(),
            });
        }
        let transposed = columns.transpose().to_owned();
        Ok(Self {
            pair: pair.clone(),
            layers,
            form,
            columns,
            transposed,
        })
    }

    pub fn pair(&self) -> &MeshPair {
        &self.pair
    }

    pub fn layers(&self) -> Layers {
        self.layers
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    pub fn columns(&self) -> MatRef<'_, f64> {
        self.columns.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn fine_dim(&self) -> usize {
        self.columns.nrows()
    }

    /// Fine nodal values of `sum_i c_i column_i`.
    pub fn lift(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "LodBasis::lift",
                expected: self.dim(),
                actual: coeffs.len(),
            });
        }
        let c = MatRef::from_column_major_slice(coeffs, coeffs.len(), 1);
        let v = &self.columns * c;
        Ok((0..v.nrows()).map(|i| v[(i, 0)]).collect())
    }

    /// `B^T v`.
    pub fn restrict(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.fine_dim() {
            return Err(Error::DimensionMismatch {
                context: "LodBasis::restrict",
                expected: self.fine_dim(),
                actual: v.len(),
            });
        }
        let m = MatRef::from_column_major_slice(v, v.len(), 1);
        let r = &self.transposed * m;
        Ok((0..r.nrows()).map(|i| r[(i, 0)]).collect())
    }

    /// Corrector parts `column_i - P lambda_i`.
    pub fn corrector_parts(&self) -> Mat<f64> {
        let mut out = self.columns.clone();
        let p = self.pair.prolongation();
        for r in 0..p.nrows() {
            for (c, v) in p.row(r) {
                out[(r, c)] -= v;
            }
        }
        out
    }
}

/// Builds the corrected basis `R(lambda_i) = P lambda_i + sum_K Q_K(lambda_i)`.
pub fn build_lod_basis(pair: &MeshPair, kappa: &CoefficientField, layers: Layers) -> Result<LodBasis> {
    let space = FemSpace::new(pair.fine());
    build_lod_basis_with(pair, &space, BilinearForm::new(*kappa), layers)
}

pub fn build_lod_basis_with(pair: &MeshPair, space: &FemSpace, form: BilinearForm, layers: Layers) -> Result<LodBasis> {
    if space.mesh().n_sub() != pair.fine().n_sub() {
        return Err(Error::MeshMismatch {
            context: "build_lod_basis",
            expected: pair.fine().n_sub(),
            actual: space.mesh().n_sub(),
        });
    }
    let a = form.assemble(space);
    let projector = CoarseProjector::new(pair, space)?;
    let kappa = space.kappa_per_element(&form.kappa);
    let node_elements = space.mesh().node_elements();
    let coarse = pair.coarse();

    // seeds sharing the same patch share one factorization
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for seed in 0..coarse.num_elements() {
        let patch = match layers {
            Layers::Global => global_patch(pair),
            Layers::Fixed(l) => pair.patch(seed, l)?,
        };
        groups.entry(patch.coarse_elements).or_default().push(seed);
    }

    let mut columns = pair.prolongation().to_dense();
    let unit: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for (elements, seeds) in groups {
        let patch = Patch {
            seed_element: seeds[0],
            layers: match layers {
                Layers::Global => 2 * coarse.n_sub(),
                Layers::Fixed(l) => l,
            },
            coarse_elements: elements,
        };
        let solver = PatchSolver::new(&a, &projector, &patch, &node_elements).map_err(|e| Error::Corrector {
            seed: seeds[0],
            source: Box::new(e),
        })?;
        for seed in seeds {
            let rhs = seed_loads(&solver, space, &form, &kappa, &projector, seed, &unit);
            let q = solver.solve(rhs);
            for (k, &node) in coarse.elements()[seed].iter().enumerate() {
                for (l, &g) in solver.free.iter().enumerate() {
                    columns[(g, node)] += q[(l, k)];
                }
            }
        }
    }
    for j in 0..columns.ncols() {
        for i in 0..columns.nrows() {
            if !columns[(i, j)].is_finite() {
                return Err(Error::NonFinite("build_lod_basis"));
            }
        }
    }
    LodBasis::from_columns(pair, layers, form, columns)
}

/// `(K B)^T`, gathering rows of `B` through the transposed copy.
fn basis_product_transposed(basis: &LodBasis, op: &ScalarOperator) -> Result<Mat<f64>> {
    if op.nrows() != basis.fine_dim() || op.ncols() != basis.fine_dim() {
        return Err(Error::DimensionMismatch {
            context: "reduce_operator",
            expected: basis.fine_dim(),
            actual: op.nrows(),
        });
    }
    let bt = &basis.transposed;
    let n = basis.dim();
    let mut yt = Mat::<f64>::zeros(n, op.nrows());
    for r in 0..op.nrows() {
        let dst = yt.col_mut(r).try_as_col_major_mut().expect("contiguous column").as_slice_mut();
        for (c, v) in op.row(r) {
            let src = bt.col(c).try_as_col_major().expect("contiguous column").as_slice();
            for (d, s) in dst.iter_mut().zip(src) {
                *d += v * s;
            }
        }
    }
    Ok(yt)
}

/// `B^T K B`.
pub fn reduce_operator(basis: &LodBasis, op: &ScalarOperator) -> Result<Mat<f64>> {
    let yt = basis_product_transposed(basis, op)?;
    Ok(&basis.transposed * yt.transpose())
}

/// `B^T K B` for a symmetric `K`: only the lower triangle is multiplied out
/// and then mirrored.
pub fn reduce_symmetric_operator(basis: &LodBasis, op: &ScalarOperator) -> Result<Mat<f64>> {
    use faer::linalg::matmul::triangular::{matmul, BlockStructure};
    let yt = basis_product_transposed(basis, op)?;
    let n = basis.dim();
    let mut out = Mat::<f64>::zeros(n, n);
    matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        faer::Accum::Replace,
        basis.transposed.as_ref(),
        BlockStructure::Rectangular,
        yt.transpose(),
        BlockStructure::Rectangular,
        1.0,
        faer::Par::Seq,
    );
    for j in 0..n {
        for i in 0..j {
            out[(i, j)] = out[(j, i)];
        }
    }
    Ok(out)
}

/// Block-wise reduction with the same scalar basis in every component; the
/// result acts on component-major coefficient vectors.
pub fn reduce_block_operator(basis: &LodBasis, op: &BlockOperator) -> Result<Mat<f64>> {
    let n = basis.dim();
    let mut out = Mat::<f64>::zeros(3 * n, 3 * n);
    for a in 0..3 {
        for c in 0..3 {
            if let Some(block) = &op.blocks[a][c] {
                let r = reduce_operator(basis, block)?;
                out.as_mut().submatrix_mut(a * n, c * n, n, n).copy_from(&r);
            }
        }
    }
    Ok(out)
}

/// Galerkin projection: solves `(B^T A B) c = B^T rhs` for a symmetric
/// positive definite fine operator `a`.
pub fn ritz_project(basis: &LodBasis, a: &ScalarOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let k = reduce_symmetric_operator(basis, a)?;
    let b = basis.restrict(rhs)?;
    let x = crate::sparse::dense_cholesky_solve(
        k.as_ref(),
        MatRef::from_column_major_slice(&b, b.len(), 1),
        "ritz_project (reduced matrix not SPD)",
    )?;
    Ok((0..x.nrows()).map(|i| x[(i, 0)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_mesh_pair;

    #[test]
    fn layers_parse_and_default() {
        assert_eq!("global".parse::<Layers>().unwrap(), Layers::Global);
        assert_eq!("3".parse::<Layers>().unwrap(), Layers::Fixed(3));
        assert!("-1".parse::<Layers>().is_err());
        assert_eq!(Layers::default_for(2), Layers::Fixed(2));
        assert_eq!(Layers::default_for(8), Layers::Fixed(6));
        assert_eq!(Layers::default_for(16), Layers::Fixed(8));
        assert_eq!(Layers::Global.to_string(), "global");
    }

    #[test]
    fn projector_reproduces_coarse_functions() {
        let pair = make_mesh_pair(2, 8).unwrap();
        let space = FemSpace::new(pair.fine());
        let proj = CoarseProjector::new(&pair, &space).unwrap();
        for i in 0..pair.coarse().num_nodes() {
            let mut hat = vec![0.0; pair.coarse().num_nodes()];
            hat[i] = 1.0;
            let p = proj.project(&pair.prolongate(&hat).unwrap()).unwrap();
            for (j, v) in p.iter().enumerate() {
                assert!((v - hat[j]).abs() < 1e-12);
            }
        }
        let ones = proj.project(&vec![1.0; pair.fine().num_nodes()]).unwrap();
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(proj.project(&[1.0; 3]).is_err());
    }

    #[test]
    fn global_corrector_is_in_kernel() {
        let pair = make_mesh_pair(2, 8).unwrap();
        let space = FemSpace::new(pair.fine());
        let proj = CoarseProjector::new(&pair, &space).unwrap();
        let patch = global_patch(&pair);
        let patch = Patch { seed_element: 3, ..patch };
        let q = solve_corrector(&pair, &CoefficientField::constant(), &patch, [1.0, 0.0, 0.0]).unwrap();
        assert!(q.iter().any(|v| v.abs() > 1e-6));
        for v in proj.project(&q).unwrap() {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn corrector_vanishes_outside_patch() {
        let pair = make_mesh_pair(4, 16).unwrap();
        let patch = pair.patch(0, 1).unwrap();
        let q = solve_corrector(&pair, &CoefficientField::constant(), &patch, [0.0, 1.0, 0.0]).unwrap();
        let inside: std::collections::BTreeSet<usize> = pair
            .patch_free_fine_nodes(&patch, &pair.fine().node_elements())
            .into_iter()
            .collect();
        for (i, v) in q.iter().enumerate() {
            if !inside.contains(&i) {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn too_coarse_fine_mesh_is_reported() {
        let pair = make_mesh_pair(2, 2).unwrap();
        let err = build_lod_basis(&pair, &CoefficientField::constant(), Layers::Fixed(0)).unwrap_err();
        assert!(matches!(err, Error::Corrector { .. }), "{err}");
    }

    #[test]
    fn reduced_symmetric_operator_is_symmetric() {
        let pair = make_mesh_pair(2, 8).unwrap();
        let basis = build_lod_basis(&pair, &CoefficientField::constant(), Layers::Global).unwrap();
        let k = crate::fem::assemble_stiffness(pair.fine(), &CoefficientField::constant());
        let r = reduce_operator(&basis, &k).unwrap();
        for i in 0..r.nrows() {
            for j in 0..r.ncols() {
                assert!((r[(i, j)] - r[(j, i)]).abs() < 1e-12);
            }
        }
    }
}
