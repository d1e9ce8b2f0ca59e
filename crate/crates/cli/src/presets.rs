//! Named parameter sets for the four numerical examples, at full scale and
//! at desk scale. Desk presets are the ones exercised by the acceptance
//! suite.

const CONSTANT: &[(&str, &str)] = &[
    ("coefficient.family", "constant"),
    ("alpha", "1"),
    ("tau", "1e-5"),
    ("final_time", "0.5"),
    ("mesh.coarse_n", "2,4,8"),
    ("mesh.fine_n", "256"),
    ("lod.layers", "global"),
    ("initial", "example1"),
    ("forcing", "example1"),
    ("truth", "exact"),
];

const CONSTANT_DESK: &[(&str, &str)] = &[
    ("coefficient.family", "constant"),
    ("alpha", "1"),
    ("tau", "1e-4"),
    ("final_time", "0.1"),
    ("mesh.coarse_n", "2,4,8"),
    ("mesh.fine_n", "128"),
    ("lod.layers", "global"),
    ("initial", "example1"),
    ("forcing", "example1"),
    ("truth", "exact"),
];

const QUASI: &[(&str, &str)] = &[
    ("coefficient.family", "quasi_periodic"),
    ("coefficient.epsilon", "0.03125"),
    ("alpha", "0.01"),
    ("tau", "1e-4"),
    ("final_time", "0.2"),
    ("mesh.coarse_n", "2,4,8,16"),
    ("mesh.fine_n", "256"),
    ("lod.layers", "auto"),
    ("initial", "bump"),
    ("forcing", "none"),
    ("truth", "reference"),
];

const QUASI_DESK: &[(&str, &str)] = &[
    ("coefficient.family", "quasi_periodic"),
    ("coefficient.epsilon", "0.03125"),
    ("alpha", "0.01"),
    ("tau", "1e-4"),
    ("final_time", "0.02"),
    ("mesh.coarse_n", "2,4,8,16"),
    ("mesh.fine_n", "128"),
    ("lod.layers", "global"),
    ("initial", "bump"),
    ("forcing", "none"),
    ("truth", "reference"),
];

const LOCAL: &[(&str, &str)] = &[
    ("coefficient.family", "locally_periodic"),
    ("coefficient.epsilon", "0.015625"),
    ("alpha", "0.1"),
    ("tau", "5e-4"),
    ("final_time", "0.05"),
    ("mesh.coarse_n", "2,4,8,16"),
    ("mesh.fine_n", "512"),
    ("lod.layers", "auto"),
    ("initial", "bump"),
    ("forcing", "none"),
    ("truth", "reference"),
];

const LOCAL_DESK: &[(&str, &str)] = &[
    ("coefficient.family", "locally_periodic"),
    ("coefficient.epsilon", "0.015625"),
    ("alpha", "0.1"),
    ("tau", "5e-4"),
    ("final_time", "0.01"),
    ("mesh.coarse_n", "2,4,8,16"),
    ("mesh.fine_n", "128"),
    ("lod.layers", "global"),
    ("initial", "bump"),
    ("forcing", "none"),
    ("truth", "reference"),
];

const ROUGH: &[(&str, &str)] = &[
    ("coefficient.family", "rough_int"),
    ("alpha", "0.01"),
    ("tau", "1e-4"),
    ("final_time", "0.2"),
    ("mesh.coarse_n", "2,4,8,16"),
    ("mesh.fine_n", "512"),
    ("lod.layers", "auto"),
    ("initial", "bump"),
    ("forcing", "none"),
    ("truth", "reference"),
];

const ROUGH_DESK: &[(&str, &str)] = &[
    ("coefficient.family", "rough_int"),
    ("alpha", "0.01"),
    ("tau", "1e-4"),
    ("final_time", "0.02"),
    ("mesh.coarse_n", "2,4,8,16"),
    ("mesh.fine_n", "256"),
    ("lod.layers", "global"),
    ("initial", "bump"),
    ("forcing", "none"),
    ("truth", "reference"),
];

const ELLIPTIC_DESK: &[(&str, &str)] = &[
    ("coefficient.family", "constant"),
    ("mesh.coarse_n", "2,4,8,16"),
    ("mesh.fine_n", "128"),
    ("lod.layers", "global"),
];

const DECAY_DESK: &[(&str, &str)] = &[
    ("coefficient.family", "rough_int"),
    ("mesh.coarse_n", "8"),
    ("mesh.fine_n", "64"),
    ("decay.layers", "1,2,3,4"),
];

pub const PRESETS: &[(&str, &[(&str, &str)])] = &[
    ("constant", CONSTANT),
    ("constant-desk", CONSTANT_DESK),
    ("quasi", QUASI),
    ("quasi-desk", QUASI_DESK),
    ("local", LOCAL),
    ("local-desk", LOCAL_DESK),
    ("rough", ROUGH),
    ("rough-desk", ROUGH_DESK),
    ("elliptic-desk", ELLIPTIC_DESK),
    ("decay-desk", DECAY_DESK),
];

pub fn preset(name: &str) -> Option<&'static [(&'static str, &'static str)]> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
