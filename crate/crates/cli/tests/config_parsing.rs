use lodll_cli::config::{parse_config, ConfigSources, Experiment, ExperimentConfig, RawConfig, TruthKind};
use lodll_cli::presets::{preset_names, PRESETS};
use lodll_cli::CliError;
use lodll_core::{CoefficientFamily, Layers, Scheme};

fn sources(preset: Option<&str>, overrides: &[&str]) -> ConfigSources {
    ConfigSources {
        preset: preset.map(String::from),
        file: None,
        overrides: overrides.iter().map(|s| s.to_string()).collect(),
    }
}

const FULL_FLAGS: &[&str] = &[
    "coefficient.family=constant",
    "alpha=1",
    "tau=0.001",
    "final_time=0.01",
    "mesh.coarse_n=2,4",
    "mesh.fine_n=32",
];

fn key_of(err: &CliError) -> String {
    match err {
        CliError::UnknownKey(k) | CliError::MissingKey(k) => k.clone(),
        CliError::Malformed { key, .. } | CliError::Invalid { key, .. } => key.clone(),
        other => panic!("not a key error: {other}"),
    }
}

#[test]
fn empty_file_plus_full_flags_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("empty.cfg");
    std::fs::write(&file, "").unwrap();
    let mut src = sources(None, FULL_FLAGS);
    src.file = Some(file);
    let cfg = parse_config(Some(Experiment::LlConvergence), &src).unwrap();
    assert_eq!(cfg.coarse_n, vec![2, 4]);
    assert_eq!(cfg.ll_problem().unwrap().n_steps().unwrap(), 10);
}

#[test]
fn errors_name_the_offending_key() {
    let cases: &[(&[&str], &str)] = &[
        (&["alpha=-1"], "alpha"),
        (&["alpha=fast"], "alpha"),
        (&["tau=0"], "tau"),
        (&["damping=1"], "damping"),
        (&["mesh.coarse_n=4,2"], "mesh.coarse_n"),
        (&["mesh.coarse_n=2,x"], "mesh.coarse_n"),
        (&["mesh.fine_n=30"], "mesh.fine_n"),
        (&["final_time=0.0105"], "final_time"),
        (&["scheme=euler"], "scheme"),
        (&["coefficient.family=marble"], "coefficient.family"),
        (&["coefficient.epsilon=-0.1"], "coefficient.epsilon"),
        (&["lod.layers=0"], "lod.layers"),
        (&["observer.stride=0"], "observer.stride"),
        (&["truth=exact", "initial=bump"], "truth"),
    ];
    for (extra, key) in cases {
        let mut flags: Vec<&str> = FULL_FLAGS.to_vec();
        flags.extend_from_slice(extra);
        let err = parse_config(Some(Experiment::LlConvergence), &sources(None, &flags)).unwrap_err();
        assert_eq!(err.category(), "config");
        assert_eq!(key_of(&err), *key, "{extra:?}: {err}");
        assert!(err.to_string().contains(key), "{err}");
    }
    // missing keys
    for missing in ["alpha", "tau", "final_time", "mesh.coarse_n", "coefficient.family"] {
        let flags: Vec<&str> = FULL_FLAGS.iter().copied().filter(|f| !f.starts_with(&format!("{missing}="))).collect();
        let err = parse_config(Some(Experiment::LlConvergence), &sources(None, &flags)).unwrap_err();
        assert!(matches!(&err, CliError::MissingKey(k) if k == missing), "{err}");
    }
    // the elliptic studies do not need the time parameters
    let flags = ["coefficient.family=constant", "mesh.coarse_n=2,4"];
    assert!(parse_config(Some(Experiment::EllipticConvergence), &sources(None, &flags)).is_ok());
    let err = RawConfig::default().apply_text("alpha 1").unwrap_err();
    assert!(matches!(err, CliError::Malformed { .. }));
}

#[test]
fn rough_preset_expands_to_the_published_parameters() {
    let cfg = parse_config(Some(Experiment::LlConvergence), &sources(Some("rough"), &[])).unwrap();
    let d = cfg.dynamics.unwrap();
    assert_eq!(d.final_time, 0.2);
    assert_eq!(d.alpha, 1e-2);
    assert_eq!(d.tau, 1e-4);
    assert_eq!(cfg.kappa.family, CoefficientFamily::RoughInt);
    assert_eq!(cfg.fine_n, 512);
    assert_eq!(cfg.coarse_n, vec![2, 4, 8, 16]);
    assert_eq!(cfg.truth, TruthKind::Reference);

    // the quasi-periodic example uses the same time parameters
    let quasi = parse_config(Some(Experiment::LlConvergence), &sources(Some("quasi"), &[])).unwrap();
    assert_eq!(quasi.dynamics, cfg.dynamics);
    assert_eq!(quasi.kappa.epsilon, 1.0 / 32.0);

    let local = parse_config(Some(Experiment::LlConvergence), &sources(Some("local"), &[])).unwrap();
    let d = local.dynamics.unwrap();
    assert_eq!((d.alpha, d.tau, d.final_time, local.fine_n), (0.1, 5e-4, 0.05, 512));

    let err = parse_config(None, &sources(Some("granite"), &[])).unwrap_err();
    assert!(matches!(err, CliError::UnknownPreset { .. }));
}

#[test]
fn precedence_is_preset_then_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, "# local tweaks\nalpha = 0.5\nscheme = gao\nlod.layers = 3\n").unwrap();
    let src = ConfigSources {
        preset: Some("constant-desk".into()),
        file: Some(file),
        overrides: vec!["scheme=an".into()],
    };
    let cfg = parse_config(Some(Experiment::LlConvergence), &src).unwrap();
    assert_eq!(cfg.dynamics.unwrap().alpha, 0.5);
    assert_eq!(cfg.scheme, Scheme::An);
    assert_eq!(cfg.layers, Some(Layers::Fixed(3)));
    assert_eq!(cfg.dynamics.unwrap().tau, 1e-4);
}

#[test]
fn every_preset_round_trips_for_every_applicable_experiment() {
    let mut checked = 0;
    for name in preset_names() {
        for exp in Experiment::ALL {
            let Ok(cfg) = parse_config(Some(exp), &sources(Some(name), &[])) else {
                continue;
            };
            let mut raw = RawConfig::default();
            raw.apply_text(&cfg.to_text()).unwrap();
            let back = ExperimentConfig::from_raw(&raw).unwrap();
            assert_eq!(back, cfg, "{name}/{exp}");
            assert_eq!(back.to_text(), cfg.to_text());
            checked += 1;
        }
    }
    assert!(checked >= PRESETS.len());
    // awkward floats survive too
    let flags = ["coefficient.family=quasi_periodic", "coefficient.epsilon=0.1", "alpha=0.3", "tau=0.1", "final_time=0.3", "mesh.coarse_n=2"];
    let cfg = parse_config(Some(Experiment::LlRun), &sources(None, &flags)).unwrap();
    let mut raw = RawConfig::default();
    raw.apply_text(&cfg.to_text()).unwrap();
    assert_eq!(ExperimentConfig::from_raw(&raw).unwrap(), cfg);
}

#[test]
fn desk_presets_cover_all_examples() {
    for name in ["constant", "quasi", "local", "rough"] {
        let full = parse_config(Some(Experiment::LlConvergence), &sources(Some(name), &[])).unwrap();
        let desk = parse_config(Some(Experiment::LlConvergence), &sources(Some(&format!("{name}-desk")), &[])).unwrap();
        assert_eq!(full.kappa, desk.kappa);
        assert!(desk.fine_n <= full.fine_n);
        assert!(desk.dynamics.unwrap().final_time <= full.dynamics.unwrap().final_time);
    }
}
