use faer::Side;
use lodll_core::analysis::Truth;
use lodll_core::fem::{FemSpace, MagnetizationField};
use lodll_core::stepper::{FineStepper, LodStepper};
use lodll_core::*;

fn example1(alpha: f64, tau: f64, scheme: Scheme) -> SchemeConfig {
    SchemeConfig::new(alpha, tau, scheme, CoefficientField::constant())
        .unwrap()
        .with_forcing(move |x, y, t| forcing_example1(alpha, x, y, t))
}

fn exact_initial(mesh: &TriMesh) -> MagnetizationField {
    let ex = exact_solution_example1();
    MagnetizationField::from_fn(mesh, |x, y| ex.value(x, y, 0.0))
}

fn l2_distance(mesh: &TriMesh, a: &MagnetizationField, b: &MagnetizationField) -> f64 {
    error_norms(mesh, a, Truth::Field(b)).unwrap().0
}

#[test]
fn constant_unit_fields_are_stationary_for_every_scheme() {
    let pair = make_mesh_pair(2, 8).unwrap();
    let kappa = CoefficientField::with_default_epsilon(CoefficientFamily::RoughInt);
    let basis = build_lod_basis(&pair, &kappa, Layers::Global).unwrap();
    let s = 1.0 / 3f64.sqrt();
    for m0 in [[0.0, 0.0, 1.0], [s, -s, s], [0.6, 0.8, 0.0]] {
        for scheme in Scheme::ALL {
            let cfg = SchemeConfig::new(0.1, 1e-2, scheme, kappa).unwrap();
            let fine = EvolutionState::fine(MagnetizationField::constant(pair.fine(), m0));
            let lod = EvolutionState::lod_from_fine(&basis, &fine.field).unwrap();
            for next in [step_fine(&fine, &cfg).unwrap(), step_lod(&lod, &basis, &cfg).unwrap()] {
                for c in 0..3 {
                    let worst = next.field.comps[c].iter().fold(0.0f64, |m, v| m.max((v - m0[c]).abs()));
                    assert!(worst <= 1e-13, "{scheme} component {c}: {worst}");
                }
            }
        }
    }
}

#[test]
fn an_scheme_returns_unit_moduli() {
    let mesh = build_uniform_trimesh(16).unwrap();
    let cfg = example1(1.0, 1e-3, Scheme::An);
    let next = step_fine(&EvolutionState::fine(exact_initial(&mesh)), &cfg).unwrap();
    for r in next.field.nodal_moduli() {
        assert!((r - 1.0).abs() <= 1e-14, "{r}");
    }
}

#[test]
fn one_example1_step_is_accurate() {
    let mesh = build_uniform_trimesh(32).unwrap();
    let cfg = example1(1.0, 1e-3, Scheme::Cimrak);
    let next = step_fine(&EvolutionState::fine(exact_initial(&mesh)), &cfg).unwrap();
    assert_eq!(next.step_index, 1);
    let ex = exact_solution_example1();
    let (l2, _) = error_norms(&mesh, &next.field, Truth::Exact(&ex, 1e-3)).unwrap();
    assert!(l2 < 1e-2, "{l2}");
}

#[test]
fn lod_step_tracks_fine_step() {
    let pair = make_mesh_pair(4, 64).unwrap();
    let basis = build_lod_basis(&pair, &CoefficientField::constant(), Layers::Global).unwrap();
    let cfg = example1(1.0, 1e-3, Scheme::Cimrak);
    let m0 = exact_initial(pair.fine());
    let fine = step_fine(&EvolutionState::fine(m0.clone()), &cfg).unwrap();
    let lod = step_lod(&EvolutionState::lod_from_fine(&basis, &m0).unwrap(), &basis, &cfg).unwrap();
    assert_eq!(lod.representation(), Representation::Lod);
    let d = l2_distance(pair.fine(), &lod.field, &fine.field);
    assert!(d <= 1e-2, "{d}");
}

#[test]
fn reduced_system_at_zero_field_is_spd() {
    let pair = make_mesh_pair(2, 8).unwrap();
    let basis = build_lod_basis(&pair, &CoefficientField::constant(), Layers::Global).unwrap();
    let cfg = SchemeConfig::new(1.0, 1e-2, Scheme::Cimrak, CoefficientField::constant()).unwrap();
    let mut stepper = LodStepper::new(&basis, &cfg).unwrap();
    let k = stepper.system_matrix(&MagnetizationField::constant(pair.fine(), [0.0; 3])).unwrap();
    let asym = (0..k.nrows())
        .flat_map(|i| (0..k.ncols()).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max((k[(i, j)] - k[(j, i)]).abs()));
    assert!(asym < 1e-12, "{asym}");
    let ev = k.self_adjoint_eigenvalues(Side::Lower).unwrap();
    assert!(ev.iter().all(|&v| v > 0.0), "{ev:?}");
}

#[test]
fn schemes_agree_to_first_order() {
    let mesh = build_uniform_trimesh(32).unwrap();
    let ex = exact_solution_example1();
    let tau = 1e-3;
    let finals: Vec<MagnetizationField> = Scheme::ALL
        .iter()
        .map(|&s| {
            let out = run_evolution(
                EvolutionState::fine(exact_initial(&mesh)),
                Discretization::Fine,
                &example1(1.0, tau, s),
                10,
                &mut [],
            )
            .unwrap();
            out.state.field
        })
        .collect();
    let (cimrak_err, _) = error_norms(&mesh, &finals[0], Truth::Exact(&ex, 10.0 * tau)).unwrap();
    for i in 0..3 {
        for j in i + 1..3 {
            let d = l2_distance(&mesh, &finals[i], &finals[j]);
            assert!(d <= 10.0 * cimrak_err, "{} vs {}: {d} > 10 x {cimrak_err}", Scheme::ALL[i], Scheme::ALL[j]);
        }
    }
}

#[test]
fn unforced_energy_stays_bounded() {
    let mesh = build_uniform_trimesh(16).unwrap();
    let cfg = SchemeConfig::new(0.1, 1e-3, Scheme::Cimrak, CoefficientField::constant()).unwrap();
    let mut energy = EnergyObserver::new(1);
    run_evolution(
        EvolutionState::fine(MagnetizationField::from_fn(&mesh, initial_bump)),
        Discretization::Fine,
        &cfg,
        100,
        &mut [&mut energy],
    )
    .unwrap();
    assert_eq!(energy.records.len(), 101);
    let e0 = energy.records[0].energy;
    assert!(e0 > 0.0);
    for r in &energy.records {
        assert!(r.energy.is_finite() && r.energy <= 1.05 * e0, "step {}: {} vs {e0}", r.step, r.energy);
    }
}

#[test]
fn single_step_run_equals_step_call() {
    let mesh = build_uniform_trimesh(8).unwrap();
    let cfg = example1(1.0, 1e-3, Scheme::Gao);
    let init = EvolutionState::fine(exact_initial(&mesh));
    let run = run_evolution(init.clone(), Discretization::Fine, &cfg, 1, &mut []).unwrap();
    assert_eq!(run.state, step_fine(&init, &cfg).unwrap());
    assert!(run_evolution(init, Discretization::Fine, &cfg, 0, &mut []).is_err());
}

#[test]
fn runs_are_bit_identical() {
    let pair = make_mesh_pair(2, 16).unwrap();
    let kappa = CoefficientField::with_default_epsilon(CoefficientFamily::RoughInt);
    let basis = build_lod_basis(&pair, &kappa, Layers::Fixed(1)).unwrap();
    let cfg = SchemeConfig::new(1e-2, 1e-3, Scheme::Cimrak, kappa).unwrap();
    let run = || {
        let m0 = MagnetizationField::from_fn(pair.fine(), initial_bump);
        let init = EvolutionState::lod_from_fine(&basis, &m0).unwrap();
        run_evolution(init, Discretization::Lod(&basis), &cfg, 5, &mut []).unwrap().state
    };
    assert_eq!(run(), run());
}

#[test]
fn mass_and_stiffness_are_assembled_once() {
    let mesh = build_uniform_trimesh(8).unwrap();
    let m0 = MagnetizationField::from_fn(&mesh, initial_bump);
    for scheme in Scheme::ALL {
        let cfg = SchemeConfig::new(0.1, 1e-3, scheme, CoefficientField::constant()).unwrap();
        let out = run_evolution(EvolutionState::fine(m0.clone()), Discretization::Fine, &cfg, 4, &mut []).unwrap();
        assert_eq!(out.counts.mass, 1, "{scheme}");
        assert_eq!(out.counts.stiffness, 1, "{scheme}");
        assert_eq!(out.counts.cross, 4, "{scheme}");
    }
    // the LOD stepper shares the same bookkeeping
    let pair = make_mesh_pair(2, 8).unwrap();
    let basis = build_lod_basis(&pair, &CoefficientField::constant(), Layers::Global).unwrap();
    let cfg = SchemeConfig::new(0.1, 1e-3, Scheme::Cimrak, CoefficientField::constant()).unwrap();
    let mut st = LodStepper::new(&basis, &cfg).unwrap();
    let mut s = EvolutionState::lod_from_fine(&basis, &MagnetizationField::from_fn(pair.fine(), initial_bump)).unwrap();
    for _ in 0..3 {
        s = st.step(&s).unwrap();
    }
    assert_eq!((st.counts().mass, st.counts().stiffness, st.counts().cross), (1, 1, 3));
}

#[test]
fn fine_stepper_rejects_mismatched_state() {
    let mesh = build_uniform_trimesh(8).unwrap();
    let other = build_uniform_trimesh(4).unwrap();
    let cfg = SchemeConfig::new(0.1, 1e-3, Scheme::Cimrak, CoefficientField::constant()).unwrap();
    let mut st = FineStepper::new(FemSpace::new(&mesh), &cfg).unwrap();
    assert!(st.step(&EvolutionState::fine(MagnetizationField::constant(&other, [0.0, 0.0, 1.0]))).is_err());
    assert!(SchemeConfig::new(-1.0, 1e-3, Scheme::Cimrak, CoefficientField::constant()).is_err());
    assert!(SchemeConfig::new(1.0, 0.0, Scheme::Cimrak, CoefficientField::constant()).is_err());
}
