//! Command dispatch, artifact writing and exit codes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fene_core::diagnostics::CSV_COLUMNS;
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::config::{parse_config, ExperimentConfig, OutputFormat};
use crate::experiments::{self, CoreError};
use crate::report::{self, Check, ReportError, Summary};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    /// Bad configuration, arguments or unwritable output.
    Validation = 2,
    /// Blow-up, CFL rejection or solver failure.
    Breakdown = 3,
    /// A verification or acceptance check failed.
    CheckFailed = 4,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyConstants,
    VerifyIdentities,
    Run,
    DecayStudy,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyConstants => "verify-constants",
            Command::VerifyIdentities => "verify-identities",
            Command::Run => "run",
            Command::DecayStudy => "decay-study",
            Command::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("output: {0}")]
    Output(#[from] ReportError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] crate::checkpoint::CheckpointError),
    #[error("{0}")]
    Core(#[from] CoreError),
}

impl CommandError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CommandError::Core(
                CoreError::Breakdown(_)
                | CoreError::BlowUp { .. }
                | CoreError::StepRejected { .. }
                | CoreError::Assembly(_)
                | CoreError::DegenerateInput,
            ) => ExitStatus::Breakdown,
            _ => ExitStatus::Validation,
        }
    }
}

/// Writes files into the output directory and remembers what it wrote.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CommandError> {
        fs::create_dir_all(root).map_err(ReportError::from)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> Result<(), CommandError>,
    ) -> Result<(), CommandError> {
        let file = File::create(self.root.join(name)).map_err(ReportError::from)?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(ReportError::from)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Best-effort list of the files that made it to disk.
    fn write_manifest(&self) {
        let text: String = self.written.iter().map(|n| format!("{n}\n")).collect();
        let _ = fs::write(self.root.join("manifest.txt"), text);
    }
}

pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CommandError> {
    let text = fs::read_to_string(path).map_err(|source| CommandError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

/// Runs one command end to end and returns the exit status.
pub fn dispatch(inv: &Invocation) -> ExitStatus {
    let mut cfg = match load_config(&inv.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.status();
        }
    };
    if let Some(seed) = inv.seed {
        cfg.initial.seed = seed;
    }
    if let Some(out) = &inv.out {
        cfg.outputs.directory = out.to_string_lossy().into_owned();
    }
    let mut out = match OutputDir::create(Path::new(&cfg.outputs.directory)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::Validation;
        }
    };
    match execute(inv.command, &cfg, &mut out) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CommandError::Output(_) | CommandError::Checkpoint(_)) {
                out.write_manifest();
                eprintln!("partial output: {}", out.written().join(", "));
            }
            e.status()
        }
    }
}

/// Twelve decimals with trailing zeros dropped: `6.0`, `0.25`.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

fn finish(out: &mut OutputDir, mut summary: Summary) -> Result<ExitStatus, CommandError> {
    for c in &summary.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    summary.files = out.written().to_vec();
    summary.files.push("summary.json".into());
    out.write("summary.json", |w| Ok(summary.write(w)?))?;
    Ok(if summary.passed() {
        ExitStatus::Success
    } else {
        ExitStatus::CheckFailed
    })
}

pub fn execute(command: Command, cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<ExitStatus, CommandError> {
    let echo = cfg.to_toml();
    out.write("config.toml", |w| {
        w.write_all(echo.as_bytes()).map_err(ReportError::from)?;
        Ok(())
    })?;
    match command {
        Command::VerifyConstants => {
            let mut ks = vec![1.5, 2.0, 3.0, 5.0];
            if !ks.contains(&cfg.model.k) {
                ks.push(cfg.model.k);
            }
            let (rows, checks) = experiments::verify_constants(&ks)?;
            for r in &rows {
                println!(
                    "k={} c1={} c2={} Ccoef={} ratio={}",
                    r.k,
                    short(r.c1),
                    short(r.c2),
                    short(r.ccoef),
                    short(r.ratio)
                );
            }
            finish(out, Summary::new(command.name(), checks, json!({ "constants": rows })))
        }
        Command::VerifyIdentities => {
            let model = experiments::build_model(cfg)?;
            let (report, checks) = experiments::verify_identities(&model, cfg.initial.seed, 20, 100)?;
            finish(out, Summary::new(command.name(), checks, json!({ "identities": report })))
        }
        Command::Run | Command::Spectrum => {
            let model = experiments::build_model(cfg)?;
            let spectra = command == Command::Spectrum;
            let traj = experiments::run_trajectory(cfg, &model, cfg.initial.seed, spectra)?;
            if cfg.wants(OutputFormat::Csv) {
                out.write("records.csv", |w| Ok(report::write_records_csv(w, &traj.records)?))?;
                out.write("aux.csv", |w| Ok(report::write_aux_csv(w, &traj.aux)?))?;
            }
            if cfg.wants(OutputFormat::Long) {
                out.write("long.csv", |w| Ok(report::write_long(w, &traj.records)?))?;
            }
            if spectra {
                out.write("spectrum.csv", |w| {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record(["t", "shell", "wavenumber", "u", "psi"]).map_err(ReportError::from)?;
                    for (t, u, p) in &traj.spectra {
                        for (n, (a, b)) in u.iter().zip(p).enumerate() {
                            c.write_record([
                                format!("{t:e}"),
                                n.to_string(),
                                format!("{:e}", n as f64 * model.grid.xi_min()),
                                format!("{a:e}"),
                                format!("{b:e}"),
                            ])
                            .map_err(ReportError::from)?;
                        }
                    }
                    c.flush().map_err(ReportError::from)?;
                    Ok(())
                })?;
            }
            if cfg.wants(OutputFormat::Checkpoint) {
                let ck = Checkpoint {
                    config: echo.clone(),
                    m: model.grid.m,
                    state: traj.final_state.clone(),
                };
                out.write("checkpoint.bin", |w| Ok(ck.write_to(w)?))?;
            }
            if let Err(e) = traj.outcome {
                if let CoreError::BlowUp { t, .. } = &e {
                    eprintln!("blow-up at t = {t}; {} records written", traj.records.len());
                }
                out.write_manifest();
                return Err(e.into());
            }
            let mut checks = report::validate_records(&traj.records);
            let mass = traj.records.iter().map(|r| r.mass_max).fold(0.0, f64::max);
            let div = traj.records.iter().map(|r| r.div_max).fold(0.0, f64::max);
            checks.push(Check::new("zero_mass", mass <= 1e-10, format!("max |c0| {mass:.3e}")));
            checks.push(Check::new("divergence_free", div <= 1e-10, format!("max |xi.u| {div:.3e}")));
            let last = traj.records.last().copied().unwrap_or_default();
            let data = json!({
                "columns": CSV_COLUMNS,
                "records": traj.records.len(),
                "a": traj.settings.a,
                "eta": traj.settings.eta,
                "final": last.values().to_vec(),
                "E1_alt_final": traj.aux.last().map(|a| a.e1_alt),
            });
            if cfg.wants(OutputFormat::Json) {
                finish(out, Summary::new(command.name(), checks, data))
            } else {
                let s = Summary::new(command.name(), checks, data);
                Ok(if s.passed() {
                    ExitStatus::Success
                } else {
                    ExitStatus::CheckFailed
                })
            }
        }
        Command::DecayStudy => {
            let model = experiments::build_model(cfg)?;
            let seeds: Vec<u64> = (0..cfg.decay.seeds as u64).map(|i| cfg.initial.seed + i).collect();
            let study = experiments::decay_study(cfg, &model, &seeds)?;
            out.write("fits.csv", |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(["seed", "alpha_u", "alpha_psi", "t0", "t1", "algebraic_u", "algebraic_psi"])
                    .map_err(ReportError::from)?;
                for f in &study.fits {
                    c.write_record([
                        f.seed.to_string(),
                        format!("{:e}", f.alpha_u),
                        format!("{:e}", f.alpha_psi),
                        format!("{:e}", f.window[0]),
                        format!("{:e}", f.window[1]),
                        f.algebraic_u.to_string(),
                        f.algebraic_psi.to_string(),
                    ])
                    .map_err(ReportError::from)?;
                }
                c.flush().map_err(ReportError::from)?;
                Ok(())
            })?;
            let [ul, uh] = cfg.decay.alpha_u_range;
            let [pl, ph] = cfg.decay.alpha_psi_range;
            let checks = vec![
                Check::new(
                    "alpha_u",
                    (ul..=uh).contains(&study.alpha_u_mean),
                    format!("{:.3} ± {:.3} over {} seeds", study.alpha_u_mean, study.alpha_u_std, study.fits.len()),
                ),
                Check::new(
                    "alpha_psi",
                    (pl..=ph).contains(&study.alpha_psi_mean),
                    format!("{:.3} ± {:.3} over {} seeds", study.alpha_psi_mean, study.alpha_psi_std, study.fits.len()),
                ),
            ];
            finish(out, Summary::new(command.name(), checks, json!({ "decay": study })))
        }
    }
}
