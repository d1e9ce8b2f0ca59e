use faer::Side;
use lodll_core::fem::{FemSpace, MagnetizationField};
use lodll_core::*;
use proptest::prelude::*;

/// Barycentric coordinates of `(x, y)` in triangle `v`.
fn barycentric(v: &[[f64; 2]; 3], x: f64, y: f64) -> [f64; 3] {
    let det = (v[1][1] - v[2][1]) * (v[0][0] - v[2][0]) + (v[2][0] - v[1][0]) * (v[0][1] - v[2][1]);
    let l0 = ((v[1][1] - v[2][1]) * (x - v[2][0]) + (v[2][0] - v[1][0]) * (y - v[2][1])) / det;
    let l1 = ((v[2][1] - v[0][1]) * (x - v[2][0]) + (v[0][0] - v[2][0]) * (y - v[2][1])) / det;
    [l0, l1, 1.0 - l0 - l1]
}

/// Brute-force integral over every element of `f(x, y, local_i, local_j)`
/// with a 6x6 collapsed Gauss rule (exact far beyond degree 5).
fn integrate_pairs(mesh: &TriMesh, mut f: impl FnMut(usize, [f64; 3], [f64; 2]) -> [[f64; 3]; 3]) -> Vec<Vec<f64>> {
    let gauss = [
        (-0.932_469_514_203_152, 0.171_324_492_379_170),
        (-0.661_209_386_466_265, 0.360_761_573_048_139),
        (-0.238_619_186_083_197, 0.467_913_934_572_691),
        (0.238_619_186_083_197, 0.467_913_934_572_691),
        (0.661_209_386_466_265, 0.360_761_573_048_139),
        (0.932_469_514_203_152, 0.171_324_492_379_170),
    ];
    let n = mesh.num_nodes();
    let mut out = vec![vec![0.0; n]; n];
    for (e, tri) in mesh.elements().iter().enumerate() {
        let v = mesh.element_vertices(e);
        let area = 0.5
            * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
        for &(a, wa) in &gauss {
            for &(b, wb) in &gauss {
                // Duffy map of the square onto the reference triangle
                let s = 0.5 * (a + 1.0);
                let t = 0.5 * (b + 1.0) * (1.0 - s);
                let jac = 0.25 * (1.0 - s);
                let x = v[0][0] + s * (v[1][0] - v[0][0]) + t * (v[2][0] - v[0][0]);
                let y = v[0][1] + s * (v[1][1] - v[0][1]) + t * (v[2][1] - v[0][1]);
                let l = barycentric(&v, x, y);
                let local = f(e, l, [x, y]);
                for i in 0..3 {
                    for j in 0..3 {
                        out[tri[i]][tri[j]] += 2.0 * area * wa * wb * jac * local[i][j];
                    }
                }
            }
        }
    }
    out
}

fn gradients(mesh: &TriMesh, e: usize) -> [[f64; 2]; 3] {
    let v = mesh.element_vertices(e);
    let eps = 1e-7;
    // finite-difference gradients of the barycentric map (exact for linear maps)
    let c = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
    let l0 = barycentric(&v, c[0], c[1]);
    let lx = barycentric(&v, c[0] + eps, c[1]);
    let ly = barycentric(&v, c[0], c[1] + eps);
    std::array::from_fn(|i| [(lx[i] - l0[i]) / eps, (ly[i] - l0[i]) / eps])
}

#[test]
fn mass_matches_quadrature_oracle() {
    let mesh = build_uniform_trimesh(1).unwrap();
    let oracle = integrate_pairs(&mesh, |_, l, _| std::array::from_fn(|i| std::array::from_fn(|j| l[i] * l[j])));
    let m = assemble_mass(&mesh, None).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert!((m.get(i, j) - oracle[i][j]).abs() < 1e-14, "({i},{j})");
        }
    }
}

#[test]
fn weighted_mass_of_linear_field_equals_mass() {
    let mesh = build_uniform_trimesh(4).unwrap();
    let space = FemSpace::new(&mesh);
    let field = MagnetizationField::from_fn(&mesh, |x, _| [x, 0.0, 0.0]);
    let w = space.gradient_norm_sq(&field);
    assert!(w.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    let a = space.mass(Some(&w)).unwrap();
    let b = space.mass(None).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() < 1e-15);
    }
}

#[test]
fn cross_operator_matches_oracle_for_vertical_field() {
    let mesh = build_uniform_trimesh(1).unwrap();
    let field = MagnetizationField::constant(&mesh, [0.0, 0.0, 1.0]);
    let op = assemble_cross_convection(&mesh, &CoefficientField::constant(), &field).unwrap();
    let dense = op.to_csr().to_dense();
    let n = mesh.num_nodes();
    // (e3 x grad(phi_j e_c)) : grad(phi_i e_a) = (e3 x e_c)_a grad phi_j . grad phi_i
    let cross = |c: usize| -> [f64; 3] {
        let mut e = [0.0; 3];
        e[c] = 1.0;
        [-e[1], e[0], 0.0]
    };
    for a in 0..3 {
        for c in 0..3 {
            let oracle = integrate_pairs(&mesh, |e, _, _| {
                let g = gradients(&mesh, e);
                std::array::from_fn(|i| {
                    std::array::from_fn(|j| cross(c)[a] * (g[j][0] * g[i][0] + g[j][1] * g[i][1]))
                })
            });
            for i in 0..n {
                for j in 0..n {
                    let got = dense[(a * n + i, c * n + j)];
                    assert!((got - oracle[i][j]).abs() < 1e-6, "block ({a},{c}) entry ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn load_of_linear_forcing_matches_quadrature_oracle() {
    let mesh = build_uniform_trimesh(2).unwrap();
    let load = assemble_load(&mesh, |x, _| [x, 0.0, 0.0]);
    let oracle = integrate_pairs(&mesh, |_, l, [x, _]| std::array::from_fn(|i| [x * l[i], 0.0, 0.0]));
    // only local column 0 is filled, so each row sum is the load entry
    for i in 0..mesh.num_nodes() {
        let expect: f64 = oracle[i].iter().sum();
        assert!((load[0][i] - expect).abs() < 1e-14, "node {i}");
        assert_eq!(load[1][i], 0.0);
        assert_eq!(load[2][i], 0.0);
    }
}

#[test]
fn energy_of_sine_profile_converges() {
    let exact = 0.25 + (2.0f64).sin() / 8.0;
    let mut prev = f64::INFINITY;
    for n in [16, 32, 64] {
        let mesh = build_uniform_trimesh(n).unwrap();
        let field = MagnetizationField::from_fn(&mesh, |x, _| [x.sin(), 0.0, 0.0]);
        let e = ll_energy(&mesh, &CoefficientField::constant(), &field).unwrap();
        let err = (e - exact).abs();
        assert!(err < 0.1 / (n * n) as f64, "n={n} err={err}");
        assert!(err < prev);
        prev = err;
    }
}

#[test]
fn mass_is_spd_and_stiffness_kernel_is_constants() {
    for n in 1..=4 {
        let mesh = build_uniform_trimesh(n).unwrap();
        let m = assemble_mass(&mesh, None).unwrap().to_dense();
        let ev = m.self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(ev.iter().all(|&v| v > 0.0), "n={n}");
        let kappa = CoefficientField::with_default_epsilon(CoefficientFamily::QuasiPeriodic);
        let k = assemble_stiffness(&mesh, &kappa).to_dense();
        let ev = k.self_adjoint_eigenvalues(Side::Lower).unwrap();
        let scale = ev.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let zeros = ev.iter().filter(|v| v.abs() < 1e-12 * scale).count();
        assert_eq!(zeros, 1, "n={n} eigenvalues {ev:?}");
        assert!(ev.iter().all(|&v| v > -1e-12 * scale));
    }
}

#[test]
fn assembly_is_independent_of_traversal_order() {
    let mesh = build_uniform_trimesh(6).unwrap();
    let kappa = CoefficientField::with_default_epsilon(CoefficientFamily::RoughInt);
    let field = MagnetizationField::from_fn(&mesh, |x, y| [(3.0 * x).sin(), (x * y).cos(), y - x * x]);
    let forward = FemSpace::new(&mesh);
    let order: Vec<usize> = (0..mesh.num_elements()).rev().collect();
    let reversed = FemSpace::with_traversal(&mesh, &order).unwrap();
    // a scrambled order as well
    let mut scrambled: Vec<usize> = (0..mesh.num_elements()).collect();
    scrambled.sort_by_key(|&e| (e * 7919) % mesh.num_elements());
    let scrambled = FemSpace::with_traversal(&mesh, &scrambled).unwrap();
    for other in [&reversed, &scrambled] {
        assert_eq!(forward.mass(None).unwrap(), other.mass(None).unwrap());
        assert_eq!(forward.stiffness(&kappa), other.stiffness(&kappa));
        let k = forward.kappa_per_element(&kappa);
        assert_eq!(
            forward.cross_convection(&k, &field).unwrap(),
            other.cross_convection(&k, &field).unwrap()
        );
        let w = forward.gradient_norm_sq(&field);
        assert_eq!(forward.mass(Some(&w)).unwrap(), other.mass(Some(&w)).unwrap());
        assert_eq!(
            forward.gradient_coupling(&k, &field).unwrap(),
            other.gradient_coupling(&k, &field).unwrap()
        );
    }
}

fn field_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3 * len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cross_form_is_skew(m in field_strategy(25), v in field_strategy(25)) {
        let mesh = build_uniform_trimesh(4).unwrap();
        let field = MagnetizationField::from_flat(&mesh, &m).unwrap();
        let kappa = CoefficientField::with_default_epsilon(CoefficientFamily::LocallyPeriodic);
        let op = assemble_cross_convection(&mesh, &kappa, &field).unwrap();
        let q = op.quadratic_form(&v);
        let vnorm: f64 = v.iter().map(|x| x * x).sum();
        let minf = m.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        prop_assert!(q.abs() <= 1e-12 * vnorm * minf.max(1.0), "q = {q}");
    }

    #[test]
    fn energy_is_non_negative(m in field_strategy(25)) {
        let mesh = build_uniform_trimesh(4).unwrap();
        let field = MagnetizationField::from_flat(&mesh, &m).unwrap();
        let kappa = CoefficientField::with_default_epsilon(CoefficientFamily::RoughInt);
        prop_assert!(ll_energy(&mesh, &kappa, &field).unwrap() >= 0.0);
    }
}
