use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tripartite_dce::dynamics::{
    evolve_lindblad, evolve_schrodinger, fidelity_targets, pure_density, EvolveOptions, InitialState, Trajectory,
};
use tripartite_dce::experiments::{run_preset, verify_preset, PRESET_IDS};
use tripartite_dce::model::CONFIG_KEY_HELP;
use tripartite_dce::spectrum::{dressed_spectrum, scan_omega0, write_scan_csv, ScanOptions, StateSelector, Transition};
use tripartite_dce::SystemParams;

fn key_help() -> String {
    let mut s = String::from("Config keys (flat `key = value` lines, `#` comments; frequencies in units of nu):\n");
    for (key, text) in CONFIG_KEY_HELP {
        s.push_str(&format!("  {key:<11} {text}\n"));
    }
    s
}

#[derive(Parser)]
#[command(
    name = "tripartite-dce",
    version,
    about = "Dressed spectra, transition scans and dynamics of the modulated qubit-ancilla-cavity system"
)]
#[command(after_help = key_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the 20 lowest labeled dressed eigenpairs
    #[command(after_help = key_help())]
    Spectrum(Common),
    /// Transition rate and resonance frequency across an omega0 grid
    #[command(after_help = key_help())]
    Scan(ScanArgs),
    /// Time evolution under the modulated Hamiltonian
    #[command(after_help = key_help())]
    Evolve(EvolveArgs),
    /// Run a figure or table preset and write its CSV and SVG files
    #[command(after_help = key_help())]
    Reproduce(PresetArgs),
    /// Check preset outputs against the published values; exits with 2 on a mismatch
    #[command(after_help = key_help())]
    Verify(PresetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Config file with `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set omega0=0.95`; repeatable, last wins
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; results go to standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads for scans (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    /// Grid `start:stop:step` in units of nu
    #[arg(long, value_name = "START:STOP:STEP")]
    omega0: String,
    /// Transition `src:dst` with labels like `A0,0` or `phi2,3`; repeatable
    #[arg(long, value_name = "SRC:DST", required = true)]
    transition: Vec<String>,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    /// Final time in units of 1/nu
    #[arg(long)]
    t_end: f64,
    /// Sampling interval in units of 1/nu (default: t_end/1000)
    #[arg(long)]
    sample_dt: Option<f64>,
    /// Solve the master equation with the configured damping rates
    #[arg(long)]
    lindblad: bool,
    /// Initial state: dressed label (`A0,0`, `phi2,1`) or bare ket `q,qa,n` such as `g,ga,0`
    #[arg(long, default_value = "g,ga,0")]
    initial: String,
    /// Dressed state whose fidelity is recorded; repeatable
    #[arg(long, value_name = "LABEL")]
    fidelity: Vec<String>,
}

#[derive(Args)]
struct PresetArgs {
    /// Preset id (fig1..fig6, table1, table2) or `all`
    preset: String,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Invalid(String),
    Verification,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load_params(c: &Common) -> Result<SystemParams, Failure> {
    let mut p = SystemParams::default();
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        p.apply_config(&text)?;
    }
    for kv in &c.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        p.set(k.trim(), v)?;
    }
    p.validate()?;
    for w in p.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(p)
}

fn setup_jobs(c: &Common) -> Outcome {
    if let Some(n) = c.jobs {
        if n == 0 {
            return Err(Failure::Invalid("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Writes to `<out>/<name>` when an output directory is given, otherwise to standard output.
fn emit(c: &Common, name: &str, write: impl FnOnce(&mut dyn Write) -> Outcome) -> Outcome {
    match &c.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let path = dir.join(name);
            let mut f = io::BufWriter::new(fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?);
            write(&mut f)?;
            f.flush()?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn spectrum(c: &Common) -> Outcome {
    let p = load_params(c)?;
    let spec = dressed_spectrum(&p)?;
    let ground = spec.energies[0];
    let count = spec.dim().min(20);
    match c.format {
        Format::Csv => emit(c, "spectrum.csv", |w| {
            writeln!(w, "index,energy,above_ground,label,overlap,mixed")?;
            for l in 0..count {
                let label = &spec.labels[l];
                writeln!(
                    w,
                    "{l},{},{},{label},{},{}",
                    spec.energies[l],
                    spec.energies[l] - ground,
                    label.overlap,
                    label.is_mixed()
                )?;
            }
            Ok(())
        }),
        Format::Json => emit(c, "spectrum.json", |w| {
            let rows: Vec<_> = (0..count)
                .map(|l| {
                    let label = &spec.labels[l];
                    json!({
                        "index": l,
                        "energy": spec.energies[l],
                        "above_ground": spec.energies[l] - ground,
                        "label": label.to_string(),
                        "overlap": label.overlap,
                        "mixed": label.is_mixed(),
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)?;
            Ok(())
        }),
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("--omega0 expects start:stop:step, got '{s}'"))?;
    let [start, stop, step] = parts[..] else {
        return Err(Failure::Invalid(format!("--omega0 expects start:stop:step, got '{s}'")));
    };
    if !(step > 0.0) || !(stop >= start) {
        return Err(Failure::Invalid(format!("--omega0 needs step > 0 and stop >= start, got '{s}'")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn scan(a: &ScanArgs) -> Outcome {
    let p = load_params(&a.common)?;
    let grid = parse_grid(&a.omega0)?;
    let transitions: Vec<Transition> = a.transition.iter().map(|t| t.parse()).collect::<Result<_, _>>()?;
    let rows = scan_omega0(&p, &grid, &transitions, ScanOptions::default())?;
    match a.common.format {
        Format::Csv => emit(&a.common, "scan.csv", |w| Ok(write_scan_csv(&rows, w)?)),
        Format::Json => emit(&a.common, "scan.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)?;
            Ok(())
        }),
    }
}

fn trajectory_json(tr: &Trajectory) -> serde_json::Value {
    json!({
        "times": tr.times,
        "records": tr.records,
        "fidelity_labels": tr.fidelity_labels,
        "diagnostics": tr.diagnostics,
    })
}

fn evolve(a: &EvolveArgs) -> Outcome {
    let p = load_params(&a.common)?;
    if !(a.t_end > 0.0) {
        return Err(Failure::Invalid("--t-end must be positive".into()));
    }
    let sample_dt = a.sample_dt.unwrap_or(a.t_end / 1000.0);
    let initial: InitialState = a.initial.parse()?;
    let selectors: Vec<StateSelector> = a.fidelity.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    let spec = tripartite_dce::spectrum::DressedSpectrum::compute(&p, tripartite_dce::Coupling::Full)?;
    let psi0 = initial.vector(&spec)?;
    let targets = fidelity_targets(&spec, &selectors)?;
    let opts = EvolveOptions::default();
    let tr = if a.lindblad {
        evolve_lindblad(&p, &pure_density(&psi0), a.t_end, sample_dt, &targets, &[], &opts)?
    } else {
        evolve_schrodinger(&p, &psi0, a.t_end, sample_dt, &targets, &opts)?
    };
    let d = &tr.diagnostics;
    eprintln!("steps per sample interval {}, step {:e}, max drift {:e}", d.steps_per_interval, d.step, d.max_drift);
    match a.common.format {
        Format::Csv => emit(&a.common, "trajectory.csv", |w| Ok(tr.write_csv(w)?)),
        Format::Json => emit(&a.common, "trajectory.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &trajectory_json(&tr))?;
            writeln!(w)?;
            Ok(())
        }),
    }
}

fn preset_ids(a: &PresetArgs) -> Result<Vec<&str>, Failure> {
    if a.common.config.is_some() || !a.common.overrides.is_empty() {
        eprintln!("warning: presets carry their own parameters; --config and --set are ignored");
    }
    if a.preset == "all" {
        return Ok(PRESET_IDS.to_vec());
    }
    match PRESET_IDS.iter().find(|id| **id == a.preset) {
        Some(id) => Ok(vec![id]),
        None => Err(Failure::Invalid(format!(
            "unknown preset '{}' (expected one of {} or all)",
            a.preset,
            PRESET_IDS.join(", ")
        ))),
    }
}

fn out_dir(c: &Common) -> &Path {
    c.out.as_deref().unwrap_or(Path::new("results"))
}

fn reproduce(a: &PresetArgs) -> Outcome {
    for id in preset_ids(a)? {
        let manifest = run_preset(id, out_dir(&a.common))?;
        for f in &manifest.files {
            println!("{}", f.display());
        }
    }
    Ok(())
}

fn verify(a: &PresetArgs) -> Outcome {
    let mut report = Vec::new();
    for id in preset_ids(a)? {
        report.extend(verify_preset(id, out_dir(&a.common))?);
    }
    let stdout = io::stdout();
    let mut w = stdout.lock();
    match a.common.format {
        Format::Csv => {
            writeln!(w, "target,measured,tolerance,pass")?;
            for e in &report {
                writeln!(w, "\"{}\",{:e},\"{}\",{}", e.target, e.measured, e.tolerance, e.pass)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
        }
    }
    let failed = report.iter().filter(|e| !e.pass).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", report.len());
        return Err(Failure::Verification);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let common = match &cli.command {
        Command::Spectrum(c) => c,
        Command::Scan(a) => &a.common,
        Command::Evolve(a) => &a.common,
        Command::Reproduce(a) | Command::Verify(a) => &a.common,
    };
    let outcome = setup_jobs(common).and_then(|_| match &cli.command {
        Command::Spectrum(c) => spectrum(c),
        Command::Scan(a) => scan(a),
        Command::Evolve(a) => evolve(a),
        Command::Reproduce(a) => reproduce(a),
        Command::Verify(a) => verify(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => ExitCode::from(2),
    }
}
