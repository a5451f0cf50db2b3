use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use oscbath::coefficients::{cp_threshold_from, CpThreshold};
use oscbath::exact::{build_full_model, initial_covariance, EnergyComponents, ExactEvolution};
use oscbath::fock::{gaussian_state, lindblad_trajectory, OracleScheme};
use oscbath::gaussian::{lambda_c_closed_form, mixture_fidelity_lower_bound, moment_fidelity};
use oscbath::generator::{asymptotic_gap_first_order, global_closed_form};
use oscbath::spectral::{memory_time, recurrence_time};
use oscbath::{
    cg_redfield_generator, dissipator_coefficients, local_generator, mixture_moments, propagate, steady_state,
    AffineGenerator, CoefficientSet, ModelParams, MomentState, Scheme, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CliError, CliResult, GridSpec, RunConfig, SchemeSpec};

/// Largest Fock cutoff per mode the oracle check will attempt.
const ORACLE_MAX_CUTOFF: usize = 40;
const ORACLE_TOLERANCE: f64 = 1e-6;

fn run_err(scheme: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Run(format!("scheme {scheme}: {e}"))
}

/// Parameters and coefficients shared by all schemes of one run.
pub struct Setup {
    pub cfg: RunConfig,
    pub params: ModelParams,
    pub coefficients: CoefficientSet,
    pub threshold: CpThreshold,
    /// Requested output times.
    pub times: Vec<f64>,
    /// Output times with t = 0 prepended when the grid starts later.
    padded: Vec<f64>,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> CliResult<Self> {
        cfg.validate()?;
        let params = cfg.params()?;
        let full = dissipator_coefficients(&params).map_err(|e| CliError::Run(format!("coefficients: {e}")))?;
        let threshold = cp_threshold_from(&full);
        let coefficients = if cfg.lamb_shift { full } else { full.without_lamb_shift() };
        let times = cfg.grid.times();
        let mut padded = times.clone();
        if times[0] > 0.0 {
            padded.insert(0, 0.0);
        }
        Ok(Setup { cfg: cfg.clone(), params, coefficients, threshold, times, padded })
    }

    fn offset(&self) -> usize {
        self.padded.len() - self.times.len()
    }

    fn filter_value(&self, s: Option<f64>) -> f64 {
        s.or(self.cfg.model.s).unwrap_or(self.coefficients.s_offdiag)
    }

    /// Moment generator of a master-equation scheme.
    pub fn generator(&self, spec: SchemeSpec) -> Option<AffineGenerator> {
        let c = &self.coefficients;
        Some(match spec {
            SchemeSpec::Redfield => cg_redfield_generator(c, 1.0),
            SchemeSpec::CpRedfield => cg_redfield_generator(c, self.threshold.bound),
            SchemeSpec::CgRedfield(s) => cg_redfield_generator(c, self.filter_value(s)),
            SchemeSpec::Global => cg_redfield_generator(c, 0.0),
            SchemeSpec::Local => local_generator(c, self.cfg.lamb_shift),
            SchemeSpec::Exact | SchemeSpec::Mixture => return None,
        })
    }

    fn oracle_scheme(&self, spec: SchemeSpec) -> Option<OracleScheme> {
        Some(match spec {
            SchemeSpec::Redfield => OracleScheme::CgRedfield(1.0),
            SchemeSpec::CpRedfield => OracleScheme::CgRedfield(self.threshold.bound),
            SchemeSpec::CgRedfield(s) => OracleScheme::CgRedfield(self.filter_value(s)),
            SchemeSpec::Global => OracleScheme::Global,
            SchemeSpec::Local => OracleScheme::Local,
            SchemeSpec::Exact | SchemeSpec::Mixture => return None,
        })
    }

    fn trajectory(&self, spec: SchemeSpec) -> CliResult<Trajectory> {
        let gen = self.generator(spec).expect("master-equation scheme");
        let scheme = match spec {
            SchemeSpec::Redfield => Scheme::Redfield,
            SchemeSpec::CpRedfield => Scheme::CpRedfield,
            SchemeSpec::CgRedfield(s) => Scheme::CgRedfield(self.filter_value(s)),
            SchemeSpec::Global => Scheme::Global,
            _ => Scheme::Local,
        };
        propagate(&gen, MomentState::VACUUM, &self.padded, scheme).map_err(|e| run_err(&spec.label(), e))
    }
}

pub struct SchemeRun {
    pub spec: SchemeSpec,
    pub states: Vec<MomentState>,
    pub energies: Option<Vec<EnergyComponents>>,
}

fn exact_run(setup: &Setup) -> CliResult<SchemeRun> {
    info!("diagonalizing the full model with {} bath modes", setup.params.m);
    let model = build_full_model(&setup.params).map_err(|e| run_err("exact", e))?;
    let ev = ExactEvolution::new(&model, &initial_covariance(&setup.params));
    let samples = ev.trajectory(&setup.times).map_err(|e| run_err("exact", e))?;
    Ok(SchemeRun {
        spec: SchemeSpec::Exact,
        states: samples.iter().map(|s| s.moments).collect(),
        energies: Some(samples.iter().map(|s| s.energies).collect()),
    })
}

/// Runs the listed schemes; a mixture is assembled from the local and global runs.
pub fn run_schemes(setup: &Setup, specs: &[SchemeSpec]) -> CliResult<Vec<SchemeRun>> {
    let direct: Vec<SchemeSpec> = specs.iter().copied().filter(|s| *s != SchemeSpec::Mixture).collect();
    let mut trajectories: Vec<(SchemeSpec, Option<Trajectory>, SchemeRun)> = direct
        .par_iter()
        .map(|&spec| {
            if spec == SchemeSpec::Exact {
                return exact_run(setup).map(|r| (spec, None, r));
            }
            let tr = setup.trajectory(spec)?;
            let states = tr.states[setup.offset()..].to_vec();
            Ok((spec, Some(tr), SchemeRun { spec, states, energies: None }))
        })
        .collect::<CliResult<_>>()?;

    if specs.contains(&SchemeSpec::Mixture) {
        let find = |want: SchemeSpec| trajectories.iter().find(|t| t.0 == want).and_then(|t| t.1.as_ref());
        let (local, global) = (find(SchemeSpec::Local).unwrap(), find(SchemeSpec::Global).unwrap());
        let mix = mixture_moments(local, global, setup.params.mixture_rate).map_err(|e| run_err("mixture", e))?;
        let states = mix.states[setup.offset()..].to_vec();
        trajectories.push((SchemeSpec::Mixture, None, SchemeRun { spec: SchemeSpec::Mixture, states, energies: None }));
    }
    let mut runs: Vec<SchemeRun> = trajectories.into_iter().map(|t| t.2).collect();
    runs.sort_by_key(|r| specs.iter().position(|s| *s == r.spec));
    Ok(runs)
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, ",{v:.16e}");
}

fn scheme_csv(times: &[f64], run: &SchemeRun) -> String {
    let mut out = String::from("t,n_plus,n_minus,re_cross,im_cross,lambda_c,aa,bb,re_ab,im_ab");
    if run.energies.is_some() {
        out.push_str(",e_s0,e_sg,e_1,e_e");
    }
    out.push('\n');
    for (k, x) in run.states.iter().enumerate() {
        let _ = write!(out, "{:.16e}", times[k]);
        let l = x.to_local();
        for v in [x.n_plus, x.n_minus, x.cross.re, x.cross.im, lambda_c_closed_form(x), l.aa, l.bb, l.ab.re, l.ab.im] {
            num(&mut out, v);
        }
        if let Some(e) = &run.energies {
            let e = &e[k];
            for v in [e.system_free, e.system_coupling, e.interaction, e.bath] {
                num(&mut out, v);
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Moments {
    n_plus: f64,
    n_minus: f64,
    re_cross: f64,
    im_cross: f64,
}

impl From<&MomentState> for Moments {
    fn from(x: &MomentState) -> Self {
        Moments { n_plus: x.n_plus, n_minus: x.n_minus, re_cross: x.cross.re, im_cross: x.cross.im }
    }
}

#[derive(Serialize)]
pub struct OracleReport {
    pub cutoff: usize,
    /// Largest moment deviation per scheme.
    pub deviations: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    preset: Option<&'a str>,
    params: &'a ModelParams,
    n0: f64,
    lamb_shift: bool,
    grid: &'a GridSpec,
    cp_threshold: f64,
    cp_threshold_per_mode: [f64; 2],
    /// Steady value of ⟨a†a⟩ − ⟨b†b⟩ to first order at the CP threshold.
    steady_gap_first_order: Option<f64>,
    tau_e: f64,
    t_rec: f64,
    global_steady_state: Moments,
    steady_states: BTreeMap<String, Moments>,
    final_states: BTreeMap<String, Moments>,
    files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Run(format!("{}: {e}", dir.display())))
}

/// Runs a configuration and writes one CSV per scheme plus summary.json. Returns the file names.
pub fn run(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<String>> {
    let setup = Setup::new(cfg)?;
    let specs = cfg.scheme_specs()?;
    let runs = run_schemes(&setup, &specs)?;
    let oracle = if cfg.oracle_verify { Some(verify(&setup, &specs)?) } else { None };

    create_dir(dir)?;
    let mut files = Vec::new();
    for r in &runs {
        let name = format!("{}.csv", r.spec.label());
        write_file(dir, &name, &scheme_csv(&setup.times, r))?;
        files.push(name);
    }

    let p = &setup.params;
    let mut steady_states = BTreeMap::new();
    for &spec in &specs {
        let state = match spec {
            SchemeSpec::Exact => continue,
            // the mixture weight of the local solution decays to zero
            SchemeSpec::Mixture => setup.generator(SchemeSpec::Global),
            s => setup.generator(s),
        };
        let x = steady_state(&state.unwrap()).map_err(|e| run_err(&spec.label(), e))?;
        steady_states.insert(spec.label(), Moments::from(&x));
    }
    let final_states = runs.iter().map(|r| (r.spec.label(), Moments::from(r.states.last().unwrap()))).collect();
    let summary = Summary {
        preset: cfg.preset.as_deref(),
        params: p,
        n0: p.mean_occupation(),
        lamb_shift: cfg.lamb_shift,
        grid: &cfg.grid,
        cp_threshold: setup.threshold.bound,
        cp_threshold_per_mode: setup.threshold.raw,
        steady_gap_first_order: asymptotic_gap_first_order(setup.threshold.bound, p).ok(),
        tau_e: memory_time(p).map_err(|e| CliError::Run(format!("memory time: {e}")))?,
        t_rec: recurrence_time(p),
        global_steady_state: Moments::from(&global_closed_form(&setup.coefficients, f64::INFINITY)),
        steady_states,
        final_states,
        files: files.clone(),
        oracle,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Run(e.to_string()))?;
    write_file(dir, "summary.json", &(json + "\n"))?;
    files.push("summary.json".into());

    if let Some(report) = &summary.oracle {
        if !report.passed {
            return Err(CliError::Run(format!("oracle check failed: {:?}", report.deviations)));
        }
    }
    Ok(files)
}

/// Writes fidelity.csv: F² of each master-equation scheme against the reference.
pub fn fidelity(cfg: &RunConfig, dir: &Path) -> CliResult<PathBuf> {
    let setup = Setup::new(cfg)?;
    let reference = cfg.reference_spec()?;
    let mut specs = vec![SchemeSpec::Local, SchemeSpec::Global, SchemeSpec::CpRedfield, SchemeSpec::Redfield];
    if !specs.contains(&reference) {
        specs.push(reference);
    }
    let runs = run_schemes(&setup, &specs)?;
    let states = |spec: SchemeSpec| &runs.iter().find(|r| r.spec == spec).unwrap().states;
    let refs = states(reference);

    let mut out =
        String::from("t,f2_local,f2_global,f2_cp_redfield,re_f2_redfield,f2_mixture_lower_bound,redfield_physical\n");
    for (k, &t) in setup.times.iter().enumerate() {
        let f = |spec: SchemeSpec| {
            moment_fidelity(&states(spec)[k], &refs[k])
                .map_err(|e| CliError::Run(format!("{} at t = {t}: {e}", spec.label())))
        };
        let (loc, glob, cp, red) =
            (f(SchemeSpec::Local)?, f(SchemeSpec::Global)?, f(SchemeSpec::CpRedfield)?, f(SchemeSpec::Redfield)?);
        let root_bound = mixture_fidelity_lower_bound(loc.value(), glob.value(), setup.params.mixture_rate, t);
        let _ = write!(out, "{t:.16e}");
        for v in [loc.f2, glob.f2, cp.f2, red.f2, root_bound * root_bound] {
            num(&mut out, v);
        }
        let _ = writeln!(out, ",{}", u8::from(red.physical));
    }
    create_dir(dir)?;
    write_file(dir, "fidelity.csv", &out)?;
    Ok(dir.join("fidelity.csv"))
}

/// Smallest cutoff whose thermal tail at occupation `n` is below 1e-9.
fn cutoff_for(n: f64) -> usize {
    let r = n / (n + 1.0);
    if r <= 0.0 {
        return 2;
    }
    ((1e-9f64).ln() / r.ln()).ceil() as usize + 1
}

/// Propagates the listed master-equation schemes as truncated density matrices
/// from the vacuum and compares their moments with the moment equations.
pub fn verify(setup: &Setup, specs: &[SchemeSpec]) -> CliResult<OracleReport> {
    let sp = &setup.coefficients.spectrum;
    let d = cutoff_for(sp.n_plus.max(sp.n_minus));
    if d > ORACLE_MAX_CUTOFF {
        return Err(CliError::Config(format!(
            "occupations n+ = {:.3}, n- = {:.3} need a Fock cutoff of {d} > {ORACLE_MAX_CUTOFF}; \
             the oracle check is limited to low temperatures",
            sp.n_plus, sp.n_minus
        )));
    }
    let rho0 = gaussian_state(&MomentState::VACUUM, d).map_err(|e| CliError::Run(format!("oracle: {e}")))?;
    let checked: Vec<SchemeSpec> = specs.iter().copied().filter(|s| setup.oracle_scheme(*s).is_some()).collect();
    let deviations = checked
        .par_iter()
        .map(|&spec| {
            info!("oracle check of {} at cutoff {d}", spec.label());
            let oracle =
                lindblad_trajectory(setup.oracle_scheme(spec).unwrap(), &setup.coefficients, &rho0, &setup.padded)
                    .map_err(|e| run_err(&spec.label(), e))?;
            let tr = setup.trajectory(spec)?;
            let dev = tr.states.iter().zip(&oracle).map(|(x, rho)| x.max_abs_diff(&rho.moments())).fold(0.0, f64::max);
            Ok((spec.label(), dev))
        })
        .collect::<CliResult<BTreeMap<String, f64>>>()?;
    let passed = deviations.values().all(|&v| v <= ORACLE_TOLERANCE);
    Ok(OracleReport { cutoff: d, deviations, tolerance: ORACLE_TOLERANCE, passed })
}

#[derive(Serialize)]
struct IndexEntry {
    value: f64,
    dir: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Index<'a> {
    axis: &'a str,
    entries: Vec<IndexEntry>,
}

/// One run per value of a model parameter, each in its own subdirectory, plus index.json.
/// Returns the number of failed runs.
pub fn sweep(cfg: &RunConfig, axis: &str, values: &[f64], dir: &Path) -> CliResult<usize> {
    if values.is_empty() {
        return Err(CliError::Config("sweep: the value list is empty".into()));
    }
    let configs = values.iter().map(|&v| cfg.with_model_value(axis, v)).collect::<CliResult<Vec<_>>>()?;
    create_dir(dir)?;
    let entries: Vec<IndexEntry> = configs
        .par_iter()
        .zip(values)
        .enumerate()
        .map(|(i, (c, &value))| {
            let sub = format!("{axis}-{i:03}");
            let (status, error, files) = match run(c, &dir.join(&sub)) {
                Ok(files) => ("ok", None, files),
                Err(e) => ("error", Some(e.to_string()), Vec::new()),
            };
            IndexEntry { value, dir: sub, status, error, files }
        })
        .collect();
    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    let json = serde_json::to_string_pretty(&Index { axis, entries }).map_err(|e| CliError::Run(e.to_string()))?;
    write_file(dir, "index.json", &(json + "\n"))?;
    Ok(failed)
}
