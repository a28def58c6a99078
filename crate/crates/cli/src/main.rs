use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hotspot::dynamics::DynamicsError;
use hotspot::em::SolverStrategy;
use hotspot::scene::{
    load_scene, reproduce_figures, run_dynamics, run_fieldmap, run_sweep, FigureOptions, PanelStatus, PeakSelector, PresetKind,
    RunOptions, Scene, SceneError,
};

/// Angular frequencies on the command line are in units of 10¹² rad/s.
const THZ: f64 = 1e12;

/// Exit status for a refused request (weak coupling, no usable peak).
const EXIT_REFUSED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "hotspot", version, about = "Emitter coupling, entanglement dynamics and near fields in plasmonic sphere clusters")]
struct Cli {
    /// Multipole truncation order, overriding the scene and the built-in rule.
    #[arg(long, global = true)]
    lmax: Option<usize>,
    /// Worker threads for frequency sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Linear solver for the multiple-scattering system.
    #[arg(long, global = true, value_enum, default_value_t = Solver::Auto)]
    solver: Solver,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Auto,
    Dense,
    Axial,
    Iterative,
}

impl From<Solver> for SolverStrategy {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Auto => SolverStrategy::Auto,
            Solver::Dense => SolverStrategy::Dense,
            Solver::Axial => SolverStrategy::Axial,
            Solver::Iterative => SolverStrategy::Iterative,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decay-rate spectrum of every emitter over a frequency grid.
    Sweep(SweepArgs),
    /// Resonance fit and entanglement trace for one spectral peak.
    Dynamics(DynamicsArgs),
    /// |E| map on the xz plane under plane-wave illumination.
    Fieldmap(FieldmapArgs),
    /// Regenerate every figure data set and the manifest into a directory.
    Figures(FiguresArgs),
    /// Built-in cluster geometries.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Parse and check a scene file without running anything.
    Validate {
        #[arg(long)]
        scene: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Grid as LO:HI:N in 10¹² rad/s.
    #[arg(long = "omega-thz", value_parser = parse_grid)]
    omega_thz: Option<(f64, f64, usize)>,
    /// Skip the repeat of the strongest point at lmax + 5.
    #[arg(long)]
    no_convergence_check: bool,
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Zero-based peak index, ascending in frequency.
    #[arg(long, conflicts_with = "near_thz")]
    peak: Option<usize>,
    /// Use the detected peak closest to this frequency (10¹² rad/s).
    #[arg(long = "near-thz")]
    near_thz: Option<f64>,
    /// Grid as LO:HI:N in 10¹² rad/s.
    #[arg(long = "omega-thz", value_parser = parse_grid)]
    omega_thz: Option<(f64, f64, usize)>,
}

#[derive(Args, Debug)]
struct FieldmapArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Illumination frequency in 10¹² rad/s.
    #[arg(long = "omega-thz")]
    omega_thz: f64,
    /// Points per side.
    #[arg(long, default_value_t = 200)]
    resolution: usize,
}

#[derive(Args, Debug)]
struct FiguresArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    sweep_points: usize,
    #[arg(long, default_value_t = 200)]
    resolution: usize,
    #[arg(long, default_value_t = 10.0)]
    radius_nm: f64,
}

#[derive(Subcommand, Debug)]
enum PresetAction {
    /// Names and descriptions.
    List,
    /// Print (or write) the expanded scene JSON of a preset.
    Show {
        name: String,
        #[arg(long, default_value_t = 10.0)]
        radius_nm: f64,
        #[arg(long, default_value_t = 1.0)]
        gap_nm: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected LO:HI:N, got {s:?}"));
    };
    let lo: f64 = lo.trim().parse().map_err(|e| format!("LO: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("HI: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("N: {e}"))?;
    if !(lo > 0.0 && hi >= lo) || n == 0 || (n == 1 && hi != lo) {
        return Err(format!("bad grid {s:?}: need 0 < LO <= HI and N >= 1 (N = 1 only when LO = HI)"));
    }
    Ok((lo * THZ, hi * THZ, n))
}

fn run_options(cli: &Cli) -> RunOptions {
    let mut opts = RunOptions { l_max: cli.lmax, ..RunOptions::default() };
    opts.solver.strategy = cli.solver.into();
    opts
}

fn is_refusal(e: &SceneError) -> bool {
    matches!(
        e,
        SceneError::Refused(_)
            | SceneError::Dynamics(DynamicsError::WeakCoupling { .. } | DynamicsError::NoPeak | DynamicsError::PoorFit { .. })
    )
}

fn load(path: &Path) -> Result<Scene, SceneError> {
    let scene = load_scene(path)?;
    scene.validate()?;
    Ok(scene)
}

fn run(cli: &Cli) -> Result<(), SceneError> {
    let mut opts = run_options(cli);
    match &cli.command {
        Command::Sweep(a) => {
            let scene = load(&a.scene)?;
            opts.grid = a.omega_thz;
            opts.convergence_check = !a.no_convergence_check;
            let out = run_sweep(&scene, &opts, &a.out)?;
            let failed = out.sweep.rows.iter().filter(|r| r.result.is_err()).count();
            println!("{}: {} rows ({failed} failed), lmax {}, {:.1} s", scene.label(), out.sweep.rows.len(), out.l_max, out.wall_time_s);
            if let Some(c) = &out.convergence {
                println!(
                    "convergence at {:.1}: lmax {} -> {} changes Γ/Γ₀ by {:.2e}",
                    c.omega_rad_s / THZ,
                    c.l_max,
                    c.l_max_plus,
                    c.relative_change
                );
            }
            for (i, p) in out.peaks().iter().enumerate() {
                println!("peak {i}: ω = {:.1}, Γ/Γ₀ = {:.4e}, Γ_ab/Γ = {:+.3}", p.omega_rad_s / THZ, p.gamma_over_gamma0, p.gamma_ab_over_gamma);
            }
            println!("wrote {}", a.out.display());
        }
        Command::Dynamics(a) => {
            let scene = load(&a.scene)?;
            opts.grid = a.omega_thz;
            opts.convergence_check = false;
            let selector = match (a.peak, a.near_thz) {
                (Some(i), _) => PeakSelector::Index(i),
                (None, Some(w)) => PeakSelector::Nearest(w * THZ),
                (None, None) => PeakSelector::Strongest,
            };
            let d = run_dynamics(&scene, selector, &opts, &a.out)?;
            let rp = &d.resonance;
            println!(
                "ω_m = {:.2}, δω_m = {:.3}, Ω/δω_m = {:.2}, Γ_ab/Γ = {:+.3}, g = {:.3} ({:?})",
                rp.omega_m / THZ,
                rp.delta_omega_m / THZ,
                rp.coupling_ratio(),
                rp.gamma_ratio,
                d.mode.g,
                d.mode.kind
            );
            println!(
                "max P = {:.4}, max E_G = {:.4}, envelope lifetime × Γ₀ = {:.3e}",
                d.trace.max_p(),
                d.trace.max_e_g(),
                d.lifetime_over_free_decay()
            );
            println!("wrote {}", a.out.display());
        }
        Command::Fieldmap(a) => {
            let scene = load(&a.scene)?;
            let out = run_fieldmap(&scene, a.omega_thz * THZ, None, a.resolution, &opts, Some(&a.out))?;
            let s = &out.summary;
            println!(
                "max |E| = {:.3} at ({:.2}, {:.2}, {:.2}) nm in {:?}; gap max {:.3}, outside-gap max {:.3}",
                s.max_abs_e,
                s.max_point_m[0] * 1e9,
                s.max_point_m[1] * 1e9,
                s.max_point_m[2] * 1e9,
                s.max_region,
                s.gap_max_abs_e,
                s.outside_gap_max_abs_e
            );
            println!("wrote {}", a.out.display());
        }
        Command::Figures(a) => {
            let fo =
                FigureOptions { run: opts, sweep_points: a.sweep_points, field_resolution: a.resolution, radius_nm: a.radius_nm };
            let manifest = reproduce_figures(&a.out, &fo)?;
            for p in &manifest.panels {
                println!("{:<6} {:?}", p.id, p.status);
            }
            let failed = manifest.panels.iter().filter(|p| p.status == PanelStatus::Failed).count();
            println!("wrote {} panels to {} ({failed} failed)", manifest.panels.len(), a.out.display());
        }
        Command::Presets { action: PresetAction::List } => {
            for k in PresetKind::ALL {
                println!("{:<20} {} emitters  {}", k.name(), k.emitter_count(), k.description());
            }
        }
        Command::Presets { action: PresetAction::Show { name, radius_nm, gap_nm, out } } => {
            let kind = PresetKind::from_name(name).ok_or_else(|| {
                let names: Vec<&str> = PresetKind::ALL.iter().map(|k| k.name()).collect();
                SceneError::Invalid(format!("unknown preset {name:?}; expected one of {}", names.join(", ")))
            })?;
            let scene = Scene::preset(kind, *radius_nm, *gap_nm)?;
            match out {
                Some(path) => {
                    hotspot::scene::save_scene(&scene, path)?;
                    println!("wrote {}", path.display());
                }
                None => println!("{}", scene.to_json()),
            }
        }
        Command::Validate { scene } => {
            let s = load(scene)?;
            println!(
                "{}: {} spheres, {} emitters, lmax {}, hash {}",
                s.label(),
                s.spheres.len(),
                s.emitters.len(),
                opts.l_max_for(&s),
                s.hash()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_refusal(&e) => {
            eprintln!("refused: {}", e.to_string().trim_start_matches("refused: "));
            ExitCode::from(EXIT_REFUSED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
