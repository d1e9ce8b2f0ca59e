use std::fs;
use std::path::{Path, PathBuf};

use lodll_core::analysis::{ErrorReport, ErrorRow, Truth};
use lodll_core::studies::{elliptic_convergence, ll_basis, ll_convergence, localization_decay, run_fine, run_lod, LlTruth};
use lodll_core::{
    build_uniform_trimesh, convergence_table, cross_section, error_norms, exact_solution_example1, modulus_deviation, Axis,
    EnergyObserver,
};

use crate::cache::{CacheOutcome, ReferenceCache};
use crate::config::{Experiment, ExperimentConfig, RunSpace, TruthKind};
use crate::csv::{fmt_h, fmt_sci, CsvTable};
use crate::error::{CliError, Result};

pub const SIDECAR: &str = "config.txt";

#[derive(Debug, Clone)]
pub struct RunReport {
    pub tables: Vec<(String, CsvTable)>,
    pub written: Vec<PathBuf>,
    /// Set when the experiment needed a fine reference run.
    pub reference: Option<CacheOutcome>,
}

/// Computes the experiment's tables without touching the output directory.
pub fn compute_tables(cfg: &ExperimentConfig) -> Result<(Vec<(String, CsvTable)>, Option<CacheOutcome>)> {
    let ctx = cfg.experiment.as_str();
    let num = |e| CliError::numerical(ctx)(e);
    match cfg.experiment {
        Experiment::EllipticConvergence => {
            let layers = cfg.layers_for(*cfg.coarse_n.last().unwrap());
            let rep = elliptic_convergence(&cfg.kappa, &cfg.coarse_n, cfg.fine_n, layers).map_err(num)?;
            Ok((vec![("elliptic_convergence.csv".into(), convergence_csv(&cfg.coarse_n, &rep, false))], None))
        }
        Experiment::LocalizationDecay => {
            let rows = localization_decay(&cfg.kappa, cfg.coarse_n[0], cfg.fine_n, &cfg.decay_layers).map_err(num)?;
            let mut t = CsvTable::new(&["layers", "basis_distance", "projection_error"]);
            for r in rows {
                t.push(vec![r.layers.to_string(), fmt_sci(r.basis_distance), fmt_sci(r.projection_error)]);
            }
            Ok((vec![("localization_decay.csv".into(), t)], None))
        }
        Experiment::LlConvergence => {
            let problem = cfg.ll_problem().expect("dynamic experiment");
            let (rep, outcome) = match cfg.truth {
                TruthKind::Exact => (ll_convergence_per_mesh(cfg, LlTruth::Exact)?, None),
                TruthKind::Reference => {
                    let (reference, outcome) = ReferenceCache::new(&cfg.cache_dir).reference(&problem)?;
                    (ll_convergence_per_mesh(cfg, LlTruth::Reference(&reference))?, Some(outcome))
                }
            };
            Ok((vec![("ll_convergence.csv".into(), convergence_csv(&cfg.coarse_n, &rep, true))], outcome))
        }
        Experiment::LlRun => {
            let problem = cfg.ll_problem().expect("dynamic experiment");
            let mut obs = EnergyObserver::new(cfg.observer_stride);
            match cfg.run_space {
                RunSpace::Fine => {
                    run_fine(&problem, &mut [&mut obs]).map_err(num)?;
                }
                RunSpace::Lod => {
                    let n = *cfg.coarse_n.last().unwrap();
                    let basis = ll_basis(&problem, n, cfg.layers_for(n)).map_err(num)?;
                    run_lod(&problem, &basis, &mut [&mut obs]).map_err(num)?;
                }
            }
            let mut t = CsvTable::new(&["step", "time", "energy", "modulus_deviation"]);
            for r in &obs.records {
                t.push(vec![r.step.to_string(), fmt_sci(r.time), fmt_sci(r.energy), fmt_sci(r.modulus_deviation)]);
            }
            Ok((vec![("ll_run.csv".into(), t)], None))
        }
        Experiment::CrossSection => {
            let problem = cfg.ll_problem().expect("dynamic experiment");
            let (reference, outcome) = ReferenceCache::new(&cfg.cache_dir).reference(&problem)?;
            let n = *cfg.coarse_n.last().unwrap();
            let basis = ll_basis(&problem, n, cfg.layers_for(n)).map_err(num)?;
            let lod = run_lod(&problem, &basis, &mut []).map_err(num)?.state.field;
            let mesh = basis.pair().fine();
            let mut tables = Vec::new();
            for (axis, name) in [(Axis::YFixed, "cross_section_y0.5.csv"), (Axis::XFixed, "cross_section_x0.5.csv")] {
                let a = cross_section(mesh, &reference, axis, 0.5, cfg.samples).map_err(num)?;
                let b = cross_section(mesh, &lod, axis, 0.5, cfg.samples).map_err(num)?;
                let mut t = CsvTable::new(&["coordinate", "fem_m1", "fem_m2", "fem_m3", "lod_m1", "lod_m2", "lod_m3"]);
                for (sa, sb) in a.samples.iter().zip(&b.samples) {
                    let mut row = vec![fmt_sci(sa[0])];
                    row.extend(sa[1..].iter().chain(&sb[1..]).map(|&v| fmt_sci(v)));
                    t.push(row);
                }
                tables.push((name.to_string(), t));
            }
            Ok((tables, Some(outcome)))
        }
    }
}

/// Runs each coarse mesh with its own oversampling depth (relevant for
/// `lod.layers=auto`).
fn ll_convergence_per_mesh(cfg: &ExperimentConfig, truth: LlTruth<'_>) -> Result<ErrorReport> {
    let problem = cfg.ll_problem().expect("dynamic experiment");
    let num = CliError::numerical("ll_convergence");
    if let Some(layers) = cfg.layers {
        return ll_convergence(&problem, &cfg.coarse_n, layers, truth).map_err(num);
    }
    let inner = || -> lodll_core::Result<ErrorReport> {
        let mesh = build_uniform_trimesh(problem.fine_n)?;
        let sol = exact_solution_example1();
        let mut rows = Vec::with_capacity(cfg.coarse_n.len());
        for &n in &cfg.coarse_n {
            let basis = ll_basis(&problem, n, cfg.layers_for(n))?;
            let state = run_lod(&problem, &basis, &mut [])?.state;
            let (l2, h1) = match truth {
                LlTruth::Exact => error_norms(&mesh, &state.field, Truth::Exact(&sol, state.time))?,
                LlTruth::Reference(r) => error_norms(&mesh, &state.field, Truth::Field(r))?,
            };
            rows.push(ErrorRow {
                h: 1.0 / n as f64,
                l2,
                h1,
                modulus_dev: modulus_deviation(&mesh, &state.field)?,
            });
        }
        convergence_table(rows)
    };
    inner().map_err(num)
}

fn convergence_csv(coarse_n: &[usize], rep: &ErrorReport, with_modulus: bool) -> CsvTable {
    let mut header = vec!["H", "l2_error", "h1_error"];
    if with_modulus {
        header.push("modulus_deviation");
    }
    header.extend(["rate_l2", "rate_h1"]);
    let mut t = CsvTable::new(&header);
    for (i, (n, r)) in coarse_n.iter().zip(&rep.rows).enumerate() {
        let mut row = vec![fmt_h(*n), fmt_sci(r.l2), fmt_sci(r.h1)];
        if with_modulus {
            row.push(fmt_sci(r.modulus_dev));
        }
        if i == 0 {
            row.extend(["-".to_string(), "-".to_string()]);
        } else {
            row.extend([fmt_sci(rep.pair_rates_l2[i - 1]), fmt_sci(rep.pair_rates_h1[i - 1])]);
        }
        t.push(row);
    }
    let mut footer = vec!["order".to_string(), fmt_sci(rep.slope_l2), fmt_sci(rep.slope_h1)];
    if with_modulus {
        footer.push("-".into());
    }
    footer.extend(["-".to_string(), "-".to_string()]);
    t.push(footer);
    t
}

/// Removes everything it wrote unless `commit` is called.
struct OutputGuard {
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    fn write(&mut self, path: PathBuf, text: &str) -> Result<()> {
        fs::write(&path, text).map_err(CliError::io(format!("writing {}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Runs the experiment and writes its tables plus the resolved config
/// sidecar to `cfg.output_dir`. On failure nothing from this run is left
/// behind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let (tables, reference) = compute_tables(cfg)?;
    let written = write_outputs(&cfg.output_dir, &cfg.to_text(), &tables)?;
    Ok(RunReport {
        tables,
        written,
        reference,
    })
}

pub fn write_outputs(dir: &Path, sidecar: &str, tables: &[(String, CsvTable)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let mut guard = OutputGuard {
        written: Vec::new(),
        committed: false,
    };
    guard.write(dir.join(SIDECAR), sidecar)?;
    for (name, table) in tables {
        guard.write(dir.join(name), &table.to_text())?;
    }
    Ok(guard.commit())
}
