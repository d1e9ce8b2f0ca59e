use faer::{Mat, Side};
use lodll_core::analysis::{bn_reduced_matrix, Truth};
use lodll_core::fem::MagnetizationField;
use lodll_core::lod::BilinearForm;
use lodll_core::*;

/// Collapsed 8x8 Gauss–Legendre rule on the reference triangle as
/// `(barycentric, weight)` with weights summing to 1.
fn duffy_rule() -> Vec<([f64; 3], f64)> {
    let nodes = [
        (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
        (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
        (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
        (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    ];
    let mut out = Vec::new();
    for &(a, wa) in &nodes {
        for &(b, wb) in &nodes {
            let s = 0.5 * (a + 1.0);
            let t = 0.5 * (b + 1.0) * (1.0 - s);
            // reference area 1/2, Jacobian (1 - s)/4
            out.push(([1.0 - s - t, s, t], 2.0 * wa * wb * 0.25 * (1.0 - s)));
        }
    }
    out
}

#[test]
fn published_table_slopes_are_reproduced() {
    let l2 = [3.0057e-04, 2.9370e-05, 3.7779e-06];
    let h = [0.5, 0.25, 0.125];
    let rows = h
        .iter()
        .zip(&l2)
        .map(|(&h, &l2)| analysis::ErrorRow { h, l2, h1: l2, modulus_dev: 0.0 })
        .collect();
    let rep = convergence_table(rows).unwrap();
    assert!((rep.slope_l2 - 3.157).abs() < 5e-4, "{}", rep.slope_l2);

    let h1 = [5.4159e-01, 1.7299e-01, 4.8023e-02, 9.4035e-03];
    let h = [0.5, 0.25, 0.125, 0.0625];
    let rows = h
        .iter()
        .zip(&h1)
        .map(|(&h, &h1)| analysis::ErrorRow { h, l2: h1, h1, modulus_dev: 0.0 })
        .collect();
    let rep = convergence_table(rows).unwrap();
    assert!((rep.slope_h1 - 1.9392).abs() < 5e-4, "{}", rep.slope_h1);
    assert_eq!(rep.pair_rates_h1.len(), 3);
}

#[test]
fn interpolant_error_matches_independent_quadrature() {
    let mesh = build_uniform_trimesh(64).unwrap();
    let ex = exact_solution_example1();
    let t = 0.5;
    let field = MagnetizationField::from_fn(&mesh, |x, y| ex.value(x, y, t));
    let (l2, h1) = error_norms(&mesh, &field, Truth::Exact(&ex, t)).unwrap();
    let rule = duffy_rule();
    let (mut o2, mut og) = (0.0, 0.0);
    for (e, tri) in mesh.elements().iter().enumerate() {
        let v = mesh.element_vertices(e);
        let area = mesh.signed_area(e);
        // P1 gradients from the nodal values
        let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        for (l, w) in &rule {
            let x = l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0];
            let y = l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1];
            let u = ex.value(x, y, t);
            let du = ex.gradient(x, y, t);
            for c in 0..3 {
                let f = [field.comps[c][tri[0]], field.comps[c][tri[1]], field.comps[c][tri[2]]];
                let d = l[0] * f[0] + l[1] * f[1] + l[2] * f[2] - u[c];
                let gx = ((f[1] - f[0]) * (v[2][1] - v[0][1]) - (f[2] - f[0]) * (v[1][1] - v[0][1])) / det;
                let gy = ((f[2] - f[0]) * (v[1][0] - v[0][0]) - (f[1] - f[0]) * (v[2][0] - v[0][0])) / det;
                o2 += area * w * d * d;
                og += area * w * ((gx - du[c][0]).powi(2) + (gy - du[c][1]).powi(2));
            }
        }
    }
    let (o2, oh1) = (o2.sqrt(), (o2 + og).sqrt());
    assert!((l2 - o2).abs() <= 1e-12, "L2 {l2} vs {o2}");
    assert!((h1 - oh1).abs() <= 1e-12, "H1 {h1} vs {oh1}");
    // and the interpolation error is second order
    let coarse = build_uniform_trimesh(32).unwrap();
    let cf = MagnetizationField::from_fn(&coarse, |x, y| ex.value(x, y, t));
    let (l2c, _) = error_norms(&coarse, &cf, Truth::Exact(&ex, t)).unwrap();
    let rate = (l2c / l2).log2();
    assert!((rate - 2.0).abs() < 0.1, "{rate}");
}

#[test]
fn error_norms_basic_identities() {
    let mesh = build_uniform_trimesh(8).unwrap();
    let a = MagnetizationField::from_fn(&mesh, |x, y| [x.sin(), y * y, x * y]);
    let (l2, h1) = error_norms(&mesh, &a, Truth::Field(&a)).unwrap();
    assert_eq!((l2, h1), (0.0, 0.0));
    let b = MagnetizationField::from_fn(&mesh, |x, y| [x.sin() + 0.3, y * y, x * y]);
    let (l2, h1) = error_norms(&mesh, &b, Truth::Field(&a)).unwrap();
    assert!((l2 - 0.3).abs() < 1e-14 && (h1 - 0.3).abs() < 1e-14);
    let c = MagnetizationField::from_fn(&mesh, |x, y| [x.cos(), y, 1.0 - x]);
    assert_eq!(
        error_norms(&mesh, &a, Truth::Field(&c)).unwrap(),
        error_norms(&mesh, &c, Truth::Field(&a)).unwrap()
    );
    let other = build_uniform_trimesh(16).unwrap();
    assert!(error_norms(&other, &a, Truth::Field(&c)).is_err());
}

#[test]
fn modulus_deviation_of_simple_fields() {
    let mesh = build_uniform_trimesh(4).unwrap();
    let unit = MagnetizationField::constant(&mesh, [0.0, 0.6, 0.8]);
    assert!(modulus_deviation(&mesh, &unit).unwrap() < 1e-15);
    let two = MagnetizationField::constant(&mesh, [2.0, 0.0, 0.0]);
    assert!((modulus_deviation(&mesh, &two).unwrap() - 3.0).abs() < 1e-13);
}

#[test]
fn cross_sections_follow_the_exact_profile() {
    let ex = exact_solution_example1();
    let t = 0.5;
    let mut prev = f64::INFINITY;
    for n in [16, 32, 64] {
        let mesh = build_uniform_trimesh(n).unwrap();
        let field = MagnetizationField::from_fn(&mesh, |x, y| ex.value(x, y, t));
        let cs = cross_section(&mesh, &field, Axis::YFixed, 0.5, 101).unwrap();
        let err = cs
            .samples
            .iter()
            .map(|s| {
                let u = ex.value(s[0], 0.5, t);
                (0..3).map(|c| (s[c + 1] - u[c]).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        assert!(err < prev / 3.0, "n={n}: {err}");
        prev = err;
    }
    // on mesh lines the samples are nodal values
    let mesh = build_uniform_trimesh(8).unwrap();
    let field = MagnetizationField::from_fn(&mesh, |x, y| [x * x, y.sin(), x * y]);
    let cs = cross_section(&mesh, &field, Axis::XFixed, 0.25, 9).unwrap();
    for (j, s) in cs.samples.iter().enumerate() {
        let node = mesh.node_index(2, j);
        for c in 0..3 {
            assert_eq!(s[c + 1], field.comps[c][node]);
        }
    }
    assert!(cross_section(&mesh, &field, Axis::XFixed, 1.5, 9).is_err());
}

#[test]
fn bn_projection_recovers_lod_members_at_zero_field() {
    let pair = make_mesh_pair(4, 16).unwrap();
    let kappa = CoefficientField::with_default_epsilon(CoefficientFamily::RoughInt);
    let basis = build_lod_basis(&pair, &kappa, Layers::Global).unwrap();
    let coeffs: [Vec<f64>; 3] =
        std::array::from_fn(|c| (0..basis.dim()).map(|i| ((i * (c + 2)) as f64 * 0.37).sin()).collect());
    let target = EvolutionState::lod(&basis, coeffs.clone()).unwrap().field;
    let zero = MagnetizationField::constant(pair.fine(), [0.0; 3]);
    let got = bn_projection(&basis, &zero, &target, 0.7).unwrap();
    for c in 0..3 {
        for (a, b) in coeffs[c].iter().zip(&got[c]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
    // with a nonzero frozen field the projection is still consistent
    let mn = MagnetizationField::from_fn(pair.fine(), initial_bump);
    let got = bn_projection(&basis, &mn, &target, 0.7).unwrap();
    for c in 0..3 {
        for (a, b) in coeffs[c].iter().zip(&got[c]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
    assert!(bn_projection(&basis, &mn, &target, 0.0).is_err());
}

#[test]
fn bn_reduced_matrix_is_coercive() {
    let pair = make_mesh_pair(2, 8).unwrap();
    let form = BilinearForm::new(CoefficientField::constant());
    let basis = lod::build_lod_basis_with(&pair, &fem::FemSpace::new(pair.fine()), form, Layers::Global).unwrap();
    for salt in 0..3 {
        let mn = MagnetizationField::from_fn(pair.fine(), |x, y| {
            let s = salt as f64;
            [(3.0 * x + s).sin() * 5.0, (2.0 * y - s).cos() * 5.0, x * y * s]
        });
        let k = bn_reduced_matrix(&basis, &mn, 0.5).unwrap();
        let sym = Mat::from_fn(k.nrows(), k.ncols(), |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
        let ev = sym.self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(ev.iter().all(|&v| v > 0.0), "{ev:?}");
    }
}
