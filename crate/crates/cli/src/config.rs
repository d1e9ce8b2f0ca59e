//! Experiment configuration: a plain `key=value` text format with dotted
//! keys. Values are layered preset → file → command-line overrides, then
//! resolved and validated into an [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lodll_core::studies::{ForcingKind, InitialData, LlProblem};
use lodll_core::{CoefficientFamily, CoefficientField, Layers, Scheme};

use crate::error::{CliError, Result};
use crate::presets;

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "experiment",
    "coefficient.family",
    "coefficient.epsilon",
    "alpha",
    "tau",
    "final_time",
    "mesh.coarse_n",
    "mesh.fine_n",
    "lod.layers",
    "decay.layers",
    "scheme",
    "initial",
    "forcing",
    "truth",
    "run.discretization",
    "observer.stride",
    "cross_section.samples",
    "output_dir",
    "cache_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    EllipticConvergence,
    LocalizationDecay,
    LlConvergence,
    LlRun,
    CrossSection,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::EllipticConvergence,
        Experiment::LocalizationDecay,
        Experiment::LlConvergence,
        Experiment::LlRun,
        Experiment::CrossSection,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::EllipticConvergence => "elliptic_convergence",
            Experiment::LocalizationDecay => "localization_decay",
            Experiment::LlConvergence => "ll_convergence",
            Experiment::LlRun => "ll_run",
            Experiment::CrossSection => "cross_section",
        }
    }

    /// Whether the experiment integrates the LL equation in time.
    pub fn is_dynamic(&self) -> bool {
        matches!(self, Experiment::LlConvergence | Experiment::LlRun | Experiment::CrossSection)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthKind {
    Exact,
    Reference,
}

impl TruthKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TruthKind::Exact => "exact",
            TruthKind::Reference => "reference",
        }
    }
}

impl FromStr for TruthKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(TruthKind::Exact),
            "reference" => Ok(TruthKind::Reference),
            _ => Err(format!("expected exact or reference, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunSpace {
    Fine,
    Lod,
}

impl RunSpace {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunSpace::Fine => "fine",
            RunSpace::Lod => "lod",
        }
    }
}

impl FromStr for RunSpace {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fine" => Ok(RunSpace::Fine),
            "lod" => Ok(RunSpace::Lod),
            _ => Err(format!("expected fine or lod, got `{s}`")),
        }
    }
}

/// Time-dependent parameters; absent for the elliptic studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dynamics {
    pub alpha: f64,
    pub tau: f64,
    pub final_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub kappa: CoefficientField,
    pub dynamics: Option<Dynamics>,
    /// Coarse subdivisions, strictly increasing (H strictly decreasing).
    pub coarse_n: Vec<usize>,
    pub fine_n: usize,
    /// `None` means `ceil(2 log2(1/H))` per coarse mesh.
    pub layers: Option<Layers>,
    pub decay_layers: Vec<usize>,
    pub scheme: Scheme,
    pub initial: InitialData,
    pub forcing: ForcingKind,
    pub truth: TruthKind,
    pub run_space: RunSpace,
    pub observer_stride: usize,
    pub samples: usize,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
}

/// Raw layered values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(CliError::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let entries = presets::preset(name).ok_or_else(|| CliError::UnknownPreset {
            name: name.to_string(),
            available: presets::preset_names().join(", "),
        })?;
        for (k, v) in entries {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Malformed {
                key: line.to_string(),
                reason: "expected `key=value`".into(),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(format!("reading config {}", path.display())))?;
        self.apply_text(&text)
    }

    /// `key=value` override as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| CliError::Malformed {
            key: assignment.to_string(),
            reason: "expected `key=value`".into(),
        })?;
        self.set(k.trim(), v)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| CliError::MissingKey(key.to_string()))
    }
}

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>().map_err(|e| CliError::Malformed {
        key: key.to_string(),
        reason: format!("`{raw}`: {e}"),
    })
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<usize>> {
    raw.split(',').map(|s| parse::<usize>(key, s.trim())).collect()
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Invalid {
            key: key.to_string(),
            reason: format!("must be positive, got {v}"),
        })
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let experiment: Experiment = parse("experiment", raw.required("experiment")?)?;
        let family: CoefficientFamily = parse("coefficient.family", raw.required("coefficient.family")?)?;
        let epsilon = match raw.get("coefficient.epsilon") {
            Some(v) => positive("coefficient.epsilon", parse("coefficient.epsilon", v)?)?,
            None => family.default_epsilon(),
        };
        let kappa = CoefficientField::new(family, epsilon).map_err(|e| invalid("coefficient.epsilon", e.to_string()))?;

        let dynamics = if experiment.is_dynamic() {
            let get = |key: &str| -> Result<f64> { positive(key, parse(key, raw.required(key)?)?) };
            Some(Dynamics {
                alpha: get("alpha")?,
                tau: get("tau")?,
                final_time: get("final_time")?,
            })
        } else {
            None
        };

        let coarse_n = parse_list("mesh.coarse_n", raw.required("mesh.coarse_n")?)?;
        if coarse_n.iter().any(|&n| n == 0) {
            return Err(invalid("mesh.coarse_n", "subdivisions must be positive"));
        }
        if coarse_n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("mesh.coarse_n", "H must be strictly decreasing (coarse_n strictly increasing)"));
        }
        let fine_n = match raw.get("mesh.fine_n") {
            Some(v) => parse::<usize>("mesh.fine_n", v)?,
            None => 16 * coarse_n.last().copied().unwrap_or(1),
        };
        if fine_n == 0 {
            return Err(invalid("mesh.fine_n", "must be positive"));
        }
        if let Some(&n) = coarse_n.iter().find(|&&n| fine_n % n != 0) {
            return Err(invalid("mesh.fine_n", format!("{fine_n} is not a multiple of coarse_n {n}")));
        }
        match experiment {
            Experiment::EllipticConvergence | Experiment::LlConvergence if coarse_n.len() < 2 => {
                return Err(invalid("mesh.coarse_n", "a convergence study needs at least two coarse meshes"));
            }
            Experiment::LocalizationDecay if coarse_n.len() != 1 => {
                return Err(invalid("mesh.coarse_n", "the decay study takes a single coarse mesh"));
            }
            _ => {}
        }

        let layers = match raw.get("lod.layers") {
            None | Some("auto") => None,
            Some(v) => {
                let l: Layers = parse("lod.layers", v)?;
                if l == Layers::Fixed(0) {
                    return Err(invalid("lod.layers", "must be positive, `global` or `auto`"));
                }
                Some(l)
            }
        };
        let decay_layers = parse_list("decay.layers", raw.get("decay.layers").unwrap_or("1,2,3,4"))?;
        if decay_layers.is_empty() || decay_layers.iter().any(|&l| l == 0) {
            return Err(invalid("decay.layers", "layer counts must be positive"));
        }

        let scheme: Scheme = parse("scheme", raw.get("scheme").unwrap_or("cimrak"))?;
        let initial: InitialData = parse("initial", raw.get("initial").unwrap_or("bump"))?;
        let forcing: ForcingKind = parse("forcing", raw.get("forcing").unwrap_or("none"))?;
        let truth: TruthKind = parse("truth", raw.get("truth").unwrap_or("reference"))?;
        let run_space: RunSpace = parse("run.discretization", raw.get("run.discretization").unwrap_or("lod"))?;
        let observer_stride: usize = parse("observer.stride", raw.get("observer.stride").unwrap_or("1"))?;
        if observer_stride == 0 {
            return Err(invalid("observer.stride", "must be positive"));
        }
        let samples: usize = parse("cross_section.samples", raw.get("cross_section.samples").unwrap_or("101"))?;
        if samples < 2 {
            return Err(invalid("cross_section.samples", "need at least two samples"));
        }
        let output_dir = PathBuf::from(raw.get("output_dir").unwrap_or("out"));
        let cache_dir = match raw.get("cache_dir") {
            Some(v) => PathBuf::from(v),
            None => output_dir.join("cache"),
        };

        let cfg = Self {
            experiment,
            kappa,
            dynamics,
            coarse_n,
            fine_n,
            layers,
            decay_layers,
            scheme,
            initial,
            forcing,
            truth,
            run_space,
            observer_stride,
            samples,
            output_dir,
            cache_dir,
        };
        if let Some(problem) = cfg.ll_problem() {
            problem.n_steps().map_err(|e| invalid("final_time", e.to_string()))?;
            if truth == TruthKind::Exact && experiment == Experiment::LlConvergence && !problem.has_exact_solution() {
                return Err(invalid(
                    "truth",
                    "`exact` needs initial=example1, forcing=example1 and coefficient.family=constant",
                ));
            }
        }
        Ok(cfg)
    }

    /// The LL problem on the configured fine mesh.
    pub fn ll_problem(&self) -> Option<LlProblem> {
        self.dynamics.map(|d| LlProblem {
            kappa: self.kappa,
            alpha: d.alpha,
            tau: d.tau,
            final_time: d.final_time,
            scheme: self.scheme,
            initial: self.initial,
            forcing: self.forcing,
            fine_n: self.fine_n,
        })
    }

    /// Oversampling depth used for a given coarse mesh.
    pub fn layers_for(&self, coarse_n: usize) -> Layers {
        self.layers.unwrap_or_else(|| Layers::default_for(coarse_n))
    }

    /// Canonical serialization; `from_raw` of the parsed text reproduces `self`.
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut lines = vec![
            ("experiment", self.experiment.to_string()),
            ("coefficient.family", self.kappa.family.to_string()),
            ("coefficient.epsilon", self.kappa.epsilon.to_string()),
        ];
        if let Some(d) = self.dynamics {
            lines.push(("alpha", d.alpha.to_string()));
            lines.push(("tau", d.tau.to_string()));
            lines.push(("final_time", d.final_time.to_string()));
        }
        lines.extend([
            ("mesh.coarse_n", join(&self.coarse_n)),
            ("mesh.fine_n", self.fine_n.to_string()),
            ("lod.layers", self.layers.map_or("auto".to_string(), |l| l.to_string())),
            ("decay.layers", join(&self.decay_layers)),
            ("scheme", self.scheme.to_string()),
            ("initial", self.initial.to_string()),
            ("forcing", self.forcing.to_string()),
            ("truth", self.truth.as_str().to_string()),
            ("run.discretization", self.run_space.as_str().to_string()),
            ("observer.stride", self.observer_stride.to_string()),
            ("cross_section.samples", self.samples.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("cache_dir", self.cache_dir.display().to_string()),
        ]);
        lines.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Where configuration values come from, lowest precedence first.
#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    /// `key=value` assignments, applied in order.
    pub overrides: Vec<String>,
}

/// Layers the sources and resolves them. `experiment`, when given, wins over
/// any file or preset value.
pub fn parse_config(experiment: Option<Experiment>, sources: &ConfigSources) -> Result<ExperimentConfig> {
    let mut raw = RawConfig::default();
    if let Some(p) = &sources.preset {
        raw.apply_preset(p)?;
    }
    if let Some(f) = &sources.file {
        raw.apply_file(f)?;
    }
    for o in &sources.overrides {
        raw.apply_override(o)?;
    }
    if let Some(e) = experiment {
        raw.set("experiment", e.as_str())?;
    }
    ExperimentConfig::from_raw(&raw)
}
