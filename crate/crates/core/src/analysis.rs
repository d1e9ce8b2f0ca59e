//! Error norms, convergence rates, unit-modulus deviation, cross sections
//! and the B^n projection.

use faer::{Mat, MatRef};

use crate::coefficients::ExactSolution;
use crate::error::{Error, Result};
use crate::fem::{ElementGeometry, FemSpace, MagnetizationField};
use crate::lod::{reduce_operator, LodBasis};
use crate::mesh::{make_mesh_pair, TriMesh};
use crate::quadrature::{map_point, DEGREE5, EDGE_MIDPOINT};
use crate::sparse::dense_lu_solve;

/// What a numerical field is compared against.
#[derive(Clone, Copy)]
pub enum Truth<'a> {
    Exact(&'a dyn ExactSolution, f64),
    Field(&'a MagnetizationField),
}

/// `(L2, H1)` error with the full H1 norm `(|e|^2 + |grad e|^2)^(1/2)`.
///
/// Field-vs-field errors use the edge-midpoint rule, which is exact for P1
/// differences. Against a closed-form solution the degree-5 rule is used.
/// A field on a coarser nested mesh is prolonged to the finer one first.
pub fn error_norms(mesh: &TriMesh, numeric: &MagnetizationField, truth: Truth<'_>) -> Result<(f64, f64)> {
    match truth {
        Truth::Field(reference) => field_error(mesh, numeric, reference),
        Truth::Exact(sol, t) => {
            numeric.check_mesh(mesh, "error_norms")?;
            exact_error(mesh, numeric, sol, t)
        }
    }
}

fn field_error(mesh: &TriMesh, a: &MagnetizationField, b: &MagnetizationField) -> Result<(f64, f64)> {
    let n = a.n_sub().max(b.n_sub());
    if n != mesh.n_sub() {
        return Err(Error::MeshMismatch {
            context: "error_norms",
            expected: mesh.n_sub(),
            actual: n,
        });
    }
    let a = prolongate_field(a, n)?;
    let b = prolongate_field(b, n)?;
    let mut l2 = 0.0;
    let mut grad = 0.0;
    for (e, tri) in mesh.elements().iter().enumerate() {
        let g = ElementGeometry::new(&mesh.element_vertices(e));
        for c in 0..3 {
            let d: [f64; 3] = std::array::from_fn(|k| a.comps[c][tri[k]] - b.comps[c][tri[k]]);
            for (l, w) in EDGE_MIDPOINT.iter() {
                let v = l[0] * d[0] + l[1] * d[1] + l[2] * d[2];
                l2 += g.area * w * v * v;
            }
            let gd = g.gradient(d);
            grad += g.area * (gd[0] * gd[0] + gd[1] * gd[1]);
        }
    }
    Ok((l2.sqrt(), (l2 + grad).sqrt()))
}

fn exact_error(mesh: &TriMesh, m: &MagnetizationField, sol: &dyn ExactSolution, t: f64) -> Result<(f64, f64)> {
    let mut l2 = 0.0;
    let mut grad = 0.0;
    for (e, tri) in mesh.elements().iter().enumerate() {
        let v = mesh.element_vertices(e);
        let g = ElementGeometry::new(&v);
        let vals: [[f64; 3]; 3] = std::array::from_fn(|c| std::array::from_fn(|k| m.comps[c][tri[k]]));
        let grads: [[f64; 2]; 3] = std::array::from_fn(|c| g.gradient(vals[c]));
        for (l, w) in DEGREE5.iter() {
            let [x, y] = map_point(&v, l);
            let u = sol.value(x, y, t);
            let du = sol.gradient(x, y, t);
            for c in 0..3 {
                let mh = l[0] * vals[c][0] + l[1] * vals[c][1] + l[2] * vals[c][2];
                let d = mh - u[c];
                let gx = grads[c][0] - du[c][0];
                let gy = grads[c][1] - du[c][1];
                l2 += g.area * w * d * d;
                grad += g.area * w * (gx * gx + gy * gy);
            }
        }
    }
    Ok((l2.sqrt(), (l2 + grad).sqrt()))
}

/// Interpolates a field onto the nested mesh with `target_n` subdivisions.
pub fn prolongate_field(field: &MagnetizationField, target_n: usize) -> Result<MagnetizationField> {
    if field.n_sub() == target_n {
        return Ok(field.clone());
    }
    let pair = make_mesh_pair(field.n_sub(), target_n)?;
    let comps = [
        pair.prolongate(&field.comps[0])?,
        pair.prolongate(&field.comps[1])?,
        pair.prolongate(&field.comps[2])?,
    ];
    MagnetizationField::new(pair.fine(), comps)
}

/// `||1 - |m|^2||_{L2}`; the integrand is a polynomial of degree four on
/// each element, so the degree-5 rule is exact.
pub fn modulus_deviation(mesh: &TriMesh, field: &MagnetizationField) -> Result<f64> {
    field.check_mesh(mesh, "modulus_deviation")?;
    let mut acc = 0.0;
    for (e, tri) in mesh.elements().iter().enumerate() {
        let area = mesh.signed_area(e);
        for (l, w) in DEGREE5.iter() {
            let mut sq = 0.0;
            for c in 0..3 {
                let v = l[0] * field.comps[c][tri[0]] + l[1] * field.comps[c][tri[1]] + l[2] * field.comps[c][tri[2]];
                sq += v * v;
            }
            acc += area * w * (1.0 - sq) * (1.0 - sq);
        }
    }
    Ok(acc.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub h: f64,
    pub l2: f64,
    pub h1: f64,
    pub modulus_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub pair_rates_l2: Vec<f64>,
    pub pair_rates_h1: Vec<f64>,
    pub slope_l2: f64,
    pub slope_h1: f64,
}

/// `log(e_i / e_{i+1}) / log(H_i / H_{i+1})`.
pub fn pair_rates(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Least-squares slope of `log e` against `log H`.
pub fn ls_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn convergence_table(rows: Vec<ErrorRow>) -> Result<ErrorReport> {
    if rows.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "runs",
            reason: "need at least two mesh sizes".into(),
        });
    }
    if rows.windows(2).any(|w| !(w[1].h < w[0].h)) {
        return Err(Error::InvalidParameter {
            name: "runs",
            reason: "mesh sizes must be strictly decreasing".into(),
        });
    }
    if rows.iter().any(|r| !(r.l2 > 0.0 && r.h1 > 0.0 && r.h > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "runs",
            reason: "errors and mesh sizes must be positive".into(),
        });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2).collect();
    let h1: Vec<f64> = rows.iter().map(|r| r.h1).collect();
    Ok(ErrorReport {
        pair_rates_l2: pair_rates(&h, &l2),
        pair_rates_h1: pair_rates(&h, &h1),
        slope_l2: ls_slope(&h, &l2),
        slope_h1: ls_slope(&h, &h1),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Samples along `x = value`.
    XFixed,
    /// Samples along `y = value`.
    YFixed,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::XFixed => "x_fixed",
            Axis::YFixed => "y_fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub axis: Axis,
    pub value: f64,
    /// `(coordinate, m1, m2, m3)`, sorted by coordinate.
    pub samples: Vec<[f64; 4]>,
}

/// P1 evaluation along an axis-parallel line at `n_samples` equispaced points.
pub fn cross_section(
    mesh: &TriMesh,
    field: &MagnetizationField,
    axis: Axis,
    value: f64,
    n_samples: usize,
) -> Result<CrossSection> {
    field.check_mesh(mesh, "cross_section")?;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter {
            name: "value",
            reason: format!("line position {value} outside [0, 1]"),
        });
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            reason: "need at least two samples".into(),
        });
    }
    let samples = (0..n_samples)
        .map(|i| {
            let s = i as f64 / (n_samples - 1) as f64;
            let (x, y) = match axis {
                Axis::XFixed => (value, s),
                Axis::YFixed => (s, value),
            };
            let (e, l) = mesh.locate(x, y);
            let tri = mesh.elements()[e];
            let v: [f64; 3] =
                std::array::from_fn(|c| (0..3).map(|k| l[k] * field.comps[c][tri[k]]).sum());
            [s, v[0], v[1], v[2]]
        })
        .collect();
    Ok(CrossSection { axis, value, samples })
}

/// Dense reduced matrix of
/// `B(u, v) = a (k grad u, grad v) - (M^n x k grad u, grad v) + a (u, v)`
/// on `[V_LOD]^3`.
pub fn bn_reduced_matrix(basis: &LodBasis, mn: &MagnetizationField, alpha: f64) -> Result<Mat<f64>> {
    let (_, full) = bn_fine_operator(basis, mn, alpha)?;
    let n = basis.dim();
    let mut out = Mat::<f64>::zeros(3 * n, 3 * n);
    for a in 0..3 {
        for c in 0..3 {
            if let Some(b) = &full.blocks[a][c] {
                let r = reduce_operator(basis, b)?;
                out.as_mut().submatrix_mut(a * n, c * n, n, n).copy_from(&r);
            }
        }
    }
    Ok(out)
}

fn bn_fine_operator(
    basis: &LodBasis,
    mn: &MagnetizationField,
    alpha: f64,
) -> Result<(FemSpace, crate::fem::BlockOperator)> {
    let space = FemSpace::new(basis.pair().fine());
    mn.check_mesh(space.mesh(), "bn_projection")?;
    let kappa = space.kappa_per_element(&basis.form().kappa);
    let sym = space
        .weighted_stiffness(&kappa)?
        .scaled(alpha)
        .add_scaled(alpha, &space.mass(None)?)?;
    let mut op = space.cross_convection(&kappa, mn)?;
    for a in 0..3 {
        for c in 0..3 {
            op.blocks[a][c] = op.blocks[a][c].take().map(|b| b.scaled(-1.0));
        }
        op.blocks[a][a] = Some(sym.clone());
    }
    Ok((space, op))
}

/// Ritz-type projection of `target` onto `[V_LOD]^3` with the frozen-`M^n`
/// form `B`: returns component-wise LOD coefficients.
pub fn bn_projection(
    basis: &LodBasis,
    mn: &MagnetizationField,
    target: &MagnetizationField,
    alpha: f64,
) -> Result<[Vec<f64>; 3]> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive, got {alpha}"),
        });
    }
    let (space, op) = bn_fine_operator(basis, mn, alpha)?;
    target.check_mesh(space.mesh(), "bn_projection target")?;
    let rhs_fine = op.apply(&target.to_flat());
    let nf = space.num_nodes();
    let n = basis.dim();
    let mut rhs = Vec::with_capacity(3 * n);
    for c in 0..3 {
        rhs.extend(basis.restrict(&rhs_fine[c * nf..(c + 1) * nf])?);
    }
    let k = bn_reduced_matrix(basis, mn, alpha)?;
    let x = dense_lu_solve(k.as_ref(), MatRef::from_column_major_slice(&rhs, 3 * n, 1), "bn_projection")?;
    Ok(std::array::from_fn(|c| (0..n).map(|i| x[(c * n + i, 0)]).collect()))
}
