//! P1 finite-element operators.
//!
//! Every operator is assembled from 3x3 element matrices. Contributions to a
//! matrix entry are summed in a canonical order (sorted by value), so the
//! assembled matrix does not depend on the order in which elements are
//! visited.

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::quadrature::{map_point, EDGE_MIDPOINT};
use crate::sparse::{block_csr, CsrMatrix};

/// Linear map on scalar nodal vectors.
pub type ScalarOperator = CsrMatrix;

/// Three nodal component vectors living on a mesh with `n_sub` cells per side.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationField {
    n_sub: usize,
    pub comps: [Vec<f64>; 3],
}

impl MagnetizationField {
    pub fn new(mesh: &TriMesh, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != mesh.num_nodes() {
                return Err(Error::DimensionMismatch {
                    context: "MagnetizationField::new",
                    expected: mesh.num_nodes(),
                    actual: c.len(),
                });
            }
        }
        Ok(Self {
            n_sub: mesh.n_sub(),
            comps,
        })
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: &TriMesh, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let mut comps = [
            Vec::with_capacity(mesh.num_nodes()),
            Vec::with_capacity(mesh.num_nodes()),
            Vec::with_capacity(mesh.num_nodes()),
        ];
        for &[x, y] in mesh.nodes() {
            let v = f(x, y);
            for c in 0..3 {
                comps[c].push(v[c]);
            }
        }
        Self {
            n_sub: mesh.n_sub(),
            comps,
        }
    }

    pub fn constant(mesh: &TriMesh, value: [f64; 3]) -> Self {
        Self::from_fn(mesh, |_, _| value)
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn num_nodes(&self) -> usize {
        self.comps[0].len()
    }

    pub fn node(&self, i: usize) -> [f64; 3] {
        [self.comps[0][i], self.comps[1][i], self.comps[2][i]]
    }

    pub fn check_mesh(&self, mesh: &TriMesh, context: &'static str) -> Result<()> {
        if self.n_sub != mesh.n_sub() || self.num_nodes() != mesh.num_nodes() {
            return Err(Error::MeshMismatch {
                context,
                expected: mesh.n_sub(),
                actual: self.n_sub,
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn nodal_moduli(&self) -> Vec<f64> {
        (0..self.num_nodes())
            .map(|i| {
                let v = self.node(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .collect()
    }

    /// Component-major concatenation `[m1; m2; m3]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.num_nodes());
        for c in &self.comps {
            out.extend_from_slice(c);
        }
        out
    }

    pub fn from_flat(mesh: &TriMesh, flat: &[f64]) -> Result<Self> {
        let n = mesh.num_nodes();
        if flat.len() != 3 * n {
            return Err(Error::DimensionMismatch {
                context: "MagnetizationField::from_flat",
                expected: 3 * n,
                actual: flat.len(),
            });
        }
        Ok(Self {
            n_sub: mesh.n_sub(),
            comps: [
                flat[..n].to_vec(),
                flat[n..2 * n].to_vec(),
                flat[2 * n..].to_vec(),
            ],
        })
    }

    /// Node-wise renormalization `m / |m|`.
    pub fn normalized(&self) -> Result<Self> {
        let mut out = self.clone();
        for i in 0..self.num_nodes() {
            let v = self.node(i);
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::ZeroModulus { node: i });
            }
            for c in 0..3 {
                out.comps[c][i] = v[c] / n;
            }
        }
        Ok(out)
    }
}

/// Geometry of one P1 element.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    /// Gradients of the three barycentric functions.
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(v: &[[f64; 2]; 3]) -> Self {
        let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let area = 0.5 * det;
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            grads[i] = [(v[j][1] - v[k][1]) / det, (v[k][0] - v[j][0]) / det];
        }
        Self { area, grads }
    }

    #[inline]
    pub fn stiffness_entry(&self, i: usize, j: usize) -> f64 {
        self.area * (self.grads[i][0] * self.grads[j][0] + self.grads[i][1] * self.grads[j][1])
    }

    /// Gradient of the P1 function with the given vertex values.
    #[inline]
    pub fn gradient(&self, vals: [f64; 3]) -> [f64; 2] {
        [
            vals[0] * self.grads[0][0] + vals[1] * self.grads[1][0] + vals[2] * self.grads[2][0],
            vals[0] * self.grads[0][1] + vals[1] * self.grads[1][1] + vals[2] * self.grads[2][1],
        ]
    }
}

#[inline]
fn mass_entry(area: f64, i: usize, j: usize) -> f64 {
    if i == j {
        area / 6.0
    } else {
        area / 12.0
    }
}

/// Element geometry plus the scatter plan from element matrices to the
/// compressed-row pattern of the mesh.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: TriMesh,
    geometry: Vec<ElementGeometry>,
    pattern: CsrMatrix,
    /// Contributions `(element * 9 + local)` grouped by CSR slot.
    slot_offsets: Vec<usize>,
    slot_sources: Vec<u32>,
}

impl FemSpace {
    pub fn new(mesh: &TriMesh) -> Self {
        let order: Vec<usize> = (0..mesh.num_elements()).collect();
        Self::build(mesh, &order)
    }

    /// Same space, but element contributions are gathered in `order`.
    pub fn with_traversal(mesh: &TriMesh, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; mesh.num_elements()];
        if order.len() != mesh.num_elements() {
            return Err(Error::DimensionMismatch {
                context: "FemSpace::with_traversal",
                expected: mesh.num_elements(),
                actual: order.len(),
            });
        }
        for &e in order {
            if e >= seen.len() || std::mem::replace(&mut seen[e], true) {
                return Err(Error::InvalidParameter {
                    name: "order",
                    reason: "must be a permutation of the element indices".into(),
                });
            }
        }
        Ok(Self::build(mesh, order))
    }

    fn build(mesh: &TriMesh, order: &[usize]) -> Self {
        let geometry: Vec<ElementGeometry> = (0..mesh.num_elements())
            .map(|e| ElementGeometry::new(&mesh.element_vertices(e)))
            .collect();
        let n = mesh.num_nodes();
        let mut triplets = Vec::with_capacity(9 * mesh.num_elements());
        for tri in mesh.elements() {
            for &a in tri {
                for &b in tri {
                    triplets.push((a, b, 0.0));
                }
            }
        }
        let pattern = CsrMatrix::from_triplets(n, n, triplets);

        let slot_of = |a: usize, b: usize| -> usize {
            let start = pattern.row_ptr()[a];
            let end = pattern.row_ptr()[a + 1];
            start + pattern.col_idx()[start..end].binary_search(&b).expect("pattern slot")
        };
        let mut counts = vec![0usize; pattern.nnz() + 1];
        let mut slots = Vec::with_capacity(9 * order.len());
        for &e in order {
            let tri = mesh.elements()[e];
            for (i, &a) in tri.iter().enumerate() {
                for (j, &b) in tri.iter().enumerate() {
                    let s = slot_of(a, b);
                    counts[s + 1] += 1;
                    slots.push((s, (e * 9 + i * 3 + j) as u32));
                }
            }
        }
        for s in 0..pattern.nnz() {
            counts[s + 1] += counts[s];
        }
        let slot_offsets = counts.clone();
        let mut cursor = counts;
        let mut slot_sources = vec![0u32; slots.len()];
        for (s, src) in slots {
            slot_sources[cursor[s]] = src;
            cursor[s] += 1;
        }
        Self {
            mesh: mesh.clone(),
            geometry,
            pattern,
            slot_offsets,
            slot_sources,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn geometry(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    /// Sums per-element 3x3 matrices (row-major, 9 values per element).
    pub fn assemble(&self, local: &[f64]) -> ScalarOperator {
        assert_eq!(local.len(), 9 * self.num_elements());
        let mut out = self.pattern.zeros_like();
        let mut buf: Vec<f64> = Vec::with_capacity(16);
        for (s, value) in out.values_mut().iter_mut().enumerate() {
            buf.clear();
            buf.extend(
                self.slot_sources[self.slot_offsets[s]..self.slot_offsets[s + 1]]
                    .iter()
                    .map(|&src| local[src as usize]),
            );
            buf.sort_by(f64::total_cmp);
            *value = buf.iter().sum();
        }
        out
    }

    fn assemble_with(&self, mut kernel: impl FnMut(usize, &ElementGeometry, usize, usize) -> f64) -> ScalarOperator {
        let mut local = vec![0.0; 9 * self.num_elements()];
        for (e, g) in self.geometry.iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    local[e * 9 + i * 3 + j] = kernel(e, g, i, j);
                }
            }
        }
        self.assemble(&local)
    }

    /// Coefficient sampled at each element barycenter.
    pub fn kappa_per_element(&self, kappa: &CoefficientField) -> Vec<f64> {
        (0..self.num_elements())
            .map(|e| {
                let [x, y] = self.mesh.barycenter(e);
                kappa.eval(x, y)
            })
            .collect()
    }

    pub fn mass(&self, weight: Option<&[f64]>) -> Result<ScalarOperator> {
        if let Some(w) = weight {
            check_len(w, self.num_elements(), "assemble_mass weight")?;
        }
        Ok(self.assemble_with(|e, g, i, j| {
            let w = weight.map_or(1.0, |w| w[e]);
            w * mass_entry(g.area, i, j)
        }))
    }

    /// Stiffness with a per-element weight multiplying `grad u . grad v`.
    pub fn weighted_stiffness(&self, weight: &[f64]) -> Result<ScalarOperator> {
        check_len(weight, self.num_elements(), "weighted_stiffness weight")?;
        Ok(self.assemble_with(|e, g, i, j| weight[e] * g.stiffness_entry(i, j)))
    }

    pub fn stiffness(&self, kappa: &CoefficientField) -> ScalarOperator {
        let k = self.kappa_per_element(kappa);
        self.assemble_with(|e, g, i, j| k[e] * g.stiffness_entry(i, j))
    }

    /// Element-wise mean of each component (the edge-midpoint quadrature
    /// average of a P1 field).
    pub fn element_means(&self, field: &MagnetizationField) -> [Vec<f64>; 3] {
        std::array::from_fn(|c| {
            self.mesh
                .elements()
                .iter()
                .map(|t| (field.comps[c][t[0]] + field.comps[c][t[1]] + field.comps[c][t[2]]) / 3.0)
                .collect()
        })
    }

    /// Per-element gradients `[component][element]`.
    pub fn element_gradients(&self, field: &MagnetizationField) -> [Vec<[f64; 2]>; 3] {
        std::array::from_fn(|c| {
            self.mesh
                .elements()
                .iter()
                .zip(&self.geometry)
                .map(|(t, g)| g.gradient([field.comps[c][t[0]], field.comps[c][t[1]], field.comps[c][t[2]]]))
                .collect()
        })
    }

    /// `|grad M|^2` per element (constant on each element for P1 fields).
    pub fn gradient_norm_sq(&self, field: &MagnetizationField) -> Vec<f64> {
        let grads = self.element_gradients(field);
        (0..self.num_elements())
            .map(|e| {
                (0..3)
                    .map(|c| grads[c][e][0] * grads[c][e][0] + grads[c][e][1] * grads[c][e][1])
                    .sum()
            })
            .collect()
    }

    /// Load vectors `(f, phi_i)` for each component, edge-midpoint rule.
    pub fn load(&self, f: impl Fn(f64, f64) -> [f64; 3]) -> [Vec<f64>; 3] {
        let mut out = [
            vec![0.0; self.num_nodes()],
            vec![0.0; self.num_nodes()],
            vec![0.0; self.num_nodes()],
        ];
        for (e, g) in self.geometry.iter().enumerate() {
            let tri = self.mesh.elements()[e];
            let v = self.mesh.element_vertices(e);
            for (l, w) in EDGE_MIDPOINT.iter() {
                let [x, y] = map_point(&v, l);
                let val = f(x, y);
                for (i, &node) in tri.iter().enumerate() {
                    let phi = l[i];
                    if phi != 0.0 {
                        for c in 0..3 {
                            out[c][node] += g.area * w * phi * val[c];
                        }
                    }
                }
            }
        }
        out
    }

    /// Cross-product convection `(M x kappa grad u, grad v)` as a 3x3 block
    /// operator. Block `(a, c)` is `sum_b eps_{abc} S[kappa * mean(M_b)]`.
    pub fn cross_convection(&self, kappa: &[f64], field: &MagnetizationField) -> Result<BlockOperator> {
        let weighted = self.cross_scalars(kappa, field)?;
        Ok(BlockOperator::from_levi_civita(self.num_nodes(), weighted.into()))
    }

    /// The three scalar operators `S[kappa * mean(M_b)]` behind the cross
    /// convection.
    pub fn cross_scalars(&self, kappa: &[f64], field: &MagnetizationField) -> Result<[ScalarOperator; 3]> {
        field.check_mesh(&self.mesh, "assemble_cross_convection")?;
        check_len(kappa, self.num_elements(), "cross_convection kappa")?;
        let means = self.element_means(field);
        let weighted = |b: usize| {
            let w: Vec<f64> = kappa.iter().zip(&means[b]).map(|(k, m)| k * m).collect();
            self.weighted_stiffness(&w)
        };
        Ok([weighted(0)?, weighted(1)?, weighted(2)?])
    }

    /// Linearized product `kappa (grad u : grad M) M` tested against `v`:
    /// block `(a, c)` has entries `sum_e kappa_e (grad phi_j . grad M_c)_e int_e M_a phi_i`.
    pub fn gradient_coupling(&self, kappa: &[f64], field: &MagnetizationField) -> Result<BlockOperator> {
        field.check_mesh(&self.mesh, "gradient_coupling")?;
        check_len(kappa, self.num_elements(), "gradient_coupling kappa")?;
        let grads = self.element_gradients(field);
        let mut blocks: [[Option<ScalarOperator>; 3]; 3] = Default::default();
        for (a, row) in blocks.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                let op = self.assemble_with(|e, g, i, j| {
                    let tri = self.mesh.elements()[e];
                    let mi: f64 = (0..3).map(|k| mass_entry(g.area, i, k) * field.comps[a][tri[k]]).sum();
                    let gm = grads[c][e];
                    kappa[e] * (g.grads[j][0] * gm[0] + g.grads[j][1] * gm[1]) * mi
                });
                *slot = Some(op);
            }
        }
        Ok(BlockOperator {
            n: self.num_nodes(),
            blocks,
        })
    }

    /// `1/2 sum_c m_c^T K m_c`.
    pub fn energy(&self, stiffness: &ScalarOperator, field: &MagnetizationField) -> Result<f64> {
        field.check_mesh(&self.mesh, "ll_energy")?;
        Ok(0.5 * field.comps.iter().map(|m| stiffness.bilinear(m, m)).sum::<f64>())
    }
}

fn check_len(v: &[f64], expected: usize, context: &'static str) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual: v.len(),
        });
    }
    Ok(())
}

/// Levi-Civita symbol.
pub fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// 3x3 grid of scalar operators acting on component-major vector fields.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    n: usize,
    pub blocks: [[Option<ScalarOperator>; 3]; 3],
}

impl BlockOperator {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            blocks: Default::default(),
        }
    }

    /// `I3 (x) op`.
    pub fn diagonal(op: ScalarOperator) -> Self {
        let n = op.nrows();
        let mut blocks: [[Option<ScalarOperator>; 3]; 3] = Default::default();
        for (c, row) in blocks.iter_mut().enumerate() {
            row[c] = Some(op.clone());
        }
        Self { n, blocks }
    }

    /// Block `(a, c) = sum_b eps_{abc} ops[b]`.
    pub fn from_levi_civita(n: usize, ops: Vec<ScalarOperator>) -> Self {
        let mut blocks: [[Option<ScalarOperator>; 3]; 3] = Default::default();
        for a in 0..3 {
            for c in 0..3 {
                if a != c {
                    let b = 3 - a - c;
                    let s = levi_civita(a, b, c);
                    blocks[a][c] = Some(ops[b].scaled(s));
                }
            }
        }
        Self { n, blocks }
    }

    /// Scalar dimension of each block.
    pub fn block_dim(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        3 * self.n
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), 3 * self.n);
        let mut out = vec![0.0; 3 * self.n];
        for a in 0..3 {
            for c in 0..3 {
                if let Some(op) = &self.blocks[a][c] {
                    let y = op.matvec(&v[c * self.n..(c + 1) * self.n]);
                    for (o, yi) in out[a * self.n..(a + 1) * self.n].iter_mut().zip(y) {
                        *o += yi;
                    }
                }
            }
        }
        out
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let rows: Vec<Vec<Option<&CsrMatrix>>> = self
            .blocks
            .iter()
            .map(|row| row.iter().map(|b| b.as_ref()).collect())
            .collect();
        if rows.iter().all(|r| r.iter().all(|b| b.is_none())) {
            return CsrMatrix::from_triplets(3 * self.n, 3 * self.n, Vec::new());
        }
        // make sure every block row and column has a known size
        let zero = CsrMatrix::from_triplets(self.n, self.n, Vec::new());
        let rows: Vec<Vec<Option<&CsrMatrix>>> = rows
            .into_iter()
            .enumerate()
            .map(|(a, r)| {
                r.into_iter()
                    .enumerate()
                    .map(|(c, b)| if a == c { Some(b.unwrap_or(&zero)) } else { b })
                    .collect()
            })
            .collect();
        block_csr(&rows)
    }
}

/// Consistent (optionally element-weighted) mass matrix.
pub fn assemble_mass(mesh: &TriMesh, weight: Option<&[f64]>) -> Result<ScalarOperator> {
    FemSpace::new(mesh).mass(weight)
}

/// `(kappa grad u, grad v)` with `kappa` sampled at barycenters.
pub fn assemble_stiffness(mesh: &TriMesh, kappa: &CoefficientField) -> ScalarOperator {
    FemSpace::new(mesh).stiffness(kappa)
}

pub fn assemble_cross_convection(
    mesh: &TriMesh,
    kappa: &CoefficientField,
    field: &MagnetizationField,
) -> Result<BlockOperator> {
    let space = FemSpace::new(mesh);
    let k = space.kappa_per_element(kappa);
    space.cross_convection(&k, field)
}

pub fn assemble_load(mesh: &TriMesh, f: impl Fn(f64, f64) -> [f64; 3]) -> [Vec<f64>; 3] {
    FemSpace::new(mesh).load(f)
}

/// Exchange energy `1/2 int kappa |grad m|^2`.
pub fn ll_energy(mesh: &TriMesh, kappa: &CoefficientField, field: &MagnetizationField) -> Result<f64> {
    let space = FemSpace::new(mesh);
    let k = space.stiffness(kappa);
    space.energy(&k, field)
}
