//! Structured right-triangle meshes of the unit square.
//!
//! Nodes are numbered row-major (`y` outer, `x` inner). Every unit cell is
//! split along its lower-left to upper-right diagonal; elements are numbered
//! cell-major with the lower triangle first, so element `2 * (j * n + i)` is
//! the lower triangle of cell `(i, j)` and `2 * (j * n + i) + 1` the upper one.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Uniform triangulation of `[0,1]^2` with `n_sub` cells per side.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    n_sub: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
}

impl TriMesh {
    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    /// Mesh width `1 / n_sub`.
    pub fn h(&self) -> f64 {
        1.0 / self.n_sub as f64
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.n_sub + 1) + i
    }

    pub fn element_vertices(&self, e: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area of element `e` (positive for counter-clockwise ordering).
    pub fn signed_area(&self, e: usize) -> f64 {
        let [p0, p1, p2] = self.element_vertices(e);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn barycenter(&self, e: usize) -> [f64; 2] {
        let [p0, p1, p2] = self.element_vertices(e);
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    /// For every node, the sorted list of elements that contain it.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (e, tri) in self.elements.iter().enumerate() {
            for &v in tri {
                adj[v].push(e);
            }
        }
        adj
    }

    /// Locate the element containing `(x, y)` together with the barycentric
    /// weights of its three vertices. Points on shared edges resolve to the
    /// element of the lower-left cell.
    pub fn locate(&self, x: f64, y: f64) -> (usize, [f64; 3]) {
        let n = self.n_sub as f64;
        let sx = (x.clamp(0.0, 1.0) * n).min(n);
        let sy = (y.clamp(0.0, 1.0) * n).min(n);
        let i = (sx.floor() as usize).min(self.n_sub - 1);
        let j = (sy.floor() as usize).min(self.n_sub - 1);
        let s = sx - i as f64;
        let t = sy - j as f64;
        let cell = 2 * (j * self.n_sub + i);
        if t <= s {
            (cell, [1.0 - s, s - t, t])
        } else {
            (cell + 1, [1.0 - t, s, t - s])
        }
    }
}

/// Builds the uniform mesh with `n_sub` cells per side.
pub fn build_uniform_trimesh(n_sub: usize) -> Result<TriMesh> {
    if n_sub == 0 {
        return Err(Error::InvalidMesh(
            "n_sub must be at least 1 (got 0)".to_string(),
        ));
    }
    let np = n_sub + 1;
    let step = 1.0 / n_sub as f64;
    let mut nodes = Vec::with_capacity(np * np);
    let mut boundary_nodes = Vec::new();
    for j in 0..np {
        for i in 0..np {
            // exact endpoints so that boundary coordinates are 0.0 and 1.0
            let x = if i == n_sub { 1.0 } else { i as f64 * step };
            let y = if j == n_sub { 1.0 } else { j as f64 * step };
            nodes.push([x, y]);
            if i == 0 || j == 0 || i == n_sub || j == n_sub {
                boundary_nodes.push(j * np + i);
            }
        }
    }
    let mut elements = Vec::with_capacity(2 * n_sub * n_sub);
    for j in 0..n_sub {
        for i in 0..n_sub {
            let ll = j * np + i;
            let lr = ll + 1;
            let ul = ll + np;
            let ur = ul + 1;
            elements.push([ll, lr, ur]);
            elements.push([ll, ur, ul]);
        }
    }
    Ok(TriMesh {
        n_sub,
        nodes,
        elements,
        boundary_nodes,
    })
}

/// Nested coarse/fine pair with the P1 prolongation between them.
#[derive(Debug, Clone)]
pub struct MeshPair {
    coarse: TriMesh,
    fine: TriMesh,
    prolongation: CsrMatrix,
    fine_to_coarse_element: Vec<usize>,
    coarse_to_fine_elements: Vec<Vec<usize>>,
}

impl MeshPair {
    pub fn coarse(&self) -> &TriMesh {
        &self.coarse
    }

    pub fn fine(&self) -> &TriMesh {
        &self.fine
    }

    /// `fine.num_nodes() x coarse.num_nodes()` interpolation matrix.
    pub fn prolongation(&self) -> &CsrMatrix {
        &self.prolongation
    }

    pub fn ratio(&self) -> usize {
        self.fine.n_sub / self.coarse.n_sub
    }

    /// Coarse element containing fine element `e`.
    pub fn coarse_element_of(&self, fine_element: usize) -> usize {
        self.fine_to_coarse_element[fine_element]
    }

    /// Fine elements inside coarse element `k`, in increasing order.
    pub fn fine_elements_in(&self, coarse_element: usize) -> &[usize] {
        &self.coarse_to_fine_elements[coarse_element]
    }

    pub fn prolongate(&self, coarse_values: &[f64]) -> Result<Vec<f64>> {
        if coarse_values.len() != self.coarse.num_nodes() {
            return Err(Error::DimensionMismatch {
                context: "prolongate",
                expected: self.coarse.num_nodes(),
                actual: coarse_values.len(),
            });
        }
        Ok(self.prolongation.matvec(coarse_values))
    }

    /// Samples a fine nodal vector at the coarse nodes (injection).
    pub fn restrict_by_injection(&self, fine_values: &[f64]) -> Vec<f64> {
        let r = self.ratio();
        let np = self.coarse.n_sub + 1;
        let mut out = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                out.push(fine_values[self.fine.node_index(i * r, j * r)]);
            }
        }
        out
    }

    /// The `layers`-layer patch around coarse element `seed`.
    pub fn patch(&self, seed: usize, layers: usize) -> Result<Patch> {
        element_patch(&self.coarse, seed, layers)
    }

    /// Fine nodes lying in the closure of the patch.
    pub fn patch_fine_nodes(&self, patch: &Patch) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for &k in &patch.coarse_elements {
            for &e in self.fine_elements_in(k) {
                set.extend(self.fine.elements[e].iter().copied());
            }
        }
        set.into_iter().collect()
    }

    /// Fine nodes whose every adjacent fine element lies inside the patch.
    /// These are the degrees of freedom of functions supported on the patch.
    pub fn patch_free_fine_nodes(&self, patch: &Patch, fine_node_elements: &[Vec<usize>]) -> Vec<usize> {
        let mut in_patch = vec![false; self.coarse.num_elements()];
        for &k in &patch.coarse_elements {
            in_patch[k] = true;
        }
        self.patch_fine_nodes(patch)
            .into_iter()
            .filter(|&v| {
                fine_node_elements[v]
                    .iter()
                    .all(|&e| in_patch[self.fine_to_coarse_element[e]])
            })
            .collect()
    }

    /// Coarse nodes that are vertices of patch elements.
    pub fn patch_coarse_nodes(&self, patch: &Patch) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for &k in &patch.coarse_elements {
            set.extend(self.coarse.elements[k].iter().copied());
        }
        set.into_iter().collect()
    }
}

/// Builds the nested pair `(coarse_n, fine_n)`.
pub fn make_mesh_pair(coarse_n: usize, fine_n: usize) -> Result<MeshPair> {
    if coarse_n == 0 || fine_n == 0 || fine_n % coarse_n != 0 {
        return Err(Error::NotNested {
            coarse: coarse_n,
            fine: fine_n,
        });
    }
    let coarse = build_uniform_trimesh(coarse_n)?;
    let fine = build_uniform_trimesh(fine_n)?;
    let r = fine_n / coarse_n;
    let cnp = coarse_n + 1;

    let mut triplets = Vec::with_capacity(fine.num_nodes() * 3);
    for fj in 0..=fine_n {
        for fi in 0..=fine_n {
            let row = fine.node_index(fi, fj);
            let ci = (fi / r).min(coarse_n - 1);
            let cj = (fj / r).min(coarse_n - 1);
            let p = fi - ci * r;
            let q = fj - cj * r;
            let s = p as f64 / r as f64;
            let t = q as f64 / r as f64;
            let ll = cj * cnp + ci;
            let lr = ll + 1;
            let ul = ll + cnp;
            let ur = ul + 1;
            let weights = if q <= p {
                [(ll, 1.0 - s), (lr, s - t), (ur, t)]
            } else {
                [(ll, 1.0 - t), (ur, s), (ul, t - s)]
            };
            for (col, w) in weights {
                if w != 0.0 {
                    triplets.push((row, col, w));
                }
            }
        }
    }
    let prolongation = CsrMatrix::from_triplets(fine.num_nodes(), coarse.num_nodes(), triplets);

    let mut fine_to_coarse_element = Vec::with_capacity(fine.num_elements());
    let mut coarse_to_fine_elements = vec![Vec::new(); coarse.num_elements()];
    for fj in 0..fine_n {
        for fi in 0..fine_n {
            let ci = fi / r;
            let cj = fj / r;
            let p = fi % r;
            let q = fj % r;
            let cell = 2 * (cj * coarse_n + ci);
            for upper in [false, true] {
                let e = fine_to_coarse_element.len();
                let k = if q < p || (q == p && !upper) {
                    cell
                } else {
                    cell + 1
                };
                fine_to_coarse_element.push(k);
                coarse_to_fine_elements[k].push(e);
            }
        }
    }

    Ok(MeshPair {
        coarse,
        fine,
        prolongation,
        fine_to_coarse_element,
        coarse_to_fine_elements,
    })
}

/// An `layers`-layer element patch around a seed element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub seed_element: usize,
    pub layers: usize,
    /// Sorted element indices.
    pub coarse_elements: Vec<usize>,
}

impl Patch {
    pub fn contains(&self, element: usize) -> bool {
        self.coarse_elements.binary_search(&element).is_ok()
    }

    pub fn len(&self) -> usize {
        self.coarse_elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coarse_elements.is_empty()
    }
}

/// Grows the patch one vertex-neighbourhood layer at a time, starting from
/// the seed element itself.
pub fn element_patch(mesh: &TriMesh, seed: usize, layers: usize) -> Result<Patch> {
    if seed >= mesh.num_elements() {
        return Err(Error::InvalidElement {
            index: seed,
            count: mesh.num_elements(),
        });
    }
    let node_elements = mesh.node_elements();
    let mut in_patch = vec![false; mesh.num_elements()];
    in_patch[seed] = true;
    let mut frontier = vec![seed];
    for _ in 0..layers {
        let mut next = Vec::new();
        for &e in &frontier {
            for &v in &mesh.elements[e] {
                for &nb in &node_elements[v] {
                    if !in_patch[nb] {
                        in_patch[nb] = true;
                        next.push(nb);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let coarse_elements = in_patch
        .iter()
        .enumerate()
        .filter_map(|(e, &inside)| inside.then_some(e))
        .collect();
    Ok(Patch {
        seed_element: seed,
        layers,
        coarse_elements,
    })
}
