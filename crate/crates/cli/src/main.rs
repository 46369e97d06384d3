//! `vdma` command-line tool.
//!
//! Exit codes: 0 on success, 1 on domain errors (message on stderr prefixed
//! with `error:`), 2 on usage errors.

mod eval;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use vdma::dataset::{self, AugmentationSpec, DatasetConfig, VerifyOptions, VfRange};
use vdma::homogenizer::{write_field, FieldKind, Homogenizer, SolverSettings};
use vdma::microstructure::io::{read_grid, write_grid};
use vdma::microstructure::{generate_rve, measure_vf, rasterize, RveConfig, VF_MAX, VF_MIN};
use vdma::{dma, plot, FrequencyGrid, MaterialPair};

type Error = Box<dyn std::error::Error + Send + Sync>;

#[derive(Parser, Debug)]
#[command(
    name = "vdma",
    version,
    about = "Virtual DMA laboratory: periodic fiber RVEs, FFT homogenization, datasets and metrics",
    after_help = "Defaults marked [env: VDMA_*] can be overridden through the environment."
)]
struct Cli {
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, default_value_t = 0, env = "VDMA_THREADS")]
    threads: usize,

    /// error | warn | info | debug | trace
    #[arg(long, global = true, default_value = "warn", env = "VDMA_LOG_LEVEL")]
    log_level: log::LevelFilter,

    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0, env = "VDMA_SEED")]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate one RVE and write its grid file
    Gen(GenArgs),
    /// Compute the storage/loss curve of a grid
    Sweep(SweepArgs),
    /// Generate, augment and split a dataset
    Dataset(DatasetArgs),
    /// Check a dataset's integrity and physics, recomputing a sample of curves
    Verify(VerifyArgs),
    /// Score predictions against ground truth
    Eval(eval::EvalArgs),
    /// Render a curve, a grid or a dumped field as SVG
    Plot(PlotArgs),
}

fn parse_vf(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(VF_MIN - 1e-9..=VF_MAX + 1e-9).contains(&v) {
        return Err(format!("volume fraction {v} outside [{VF_MIN}, {VF_MAX}]"));
    }
    Ok(v)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("{v} must be a positive number"));
    }
    Ok(v)
}

fn parse_split(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    let [a, b, c] = parts[..] else {
        return Err("expected three comma-separated fractions".into());
    };
    if [a, b, c].iter().any(|&x| !(x >= 0.0)) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(format!("fractions {a},{b},{c} must be non-negative and sum to 1"));
    }
    Ok([a, b, c])
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_parser = parse_vf)]
    vf: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=150))]
    fibers: u64,
    #[arg(long, default_value_t = 256, env = "VDMA_RESOLUTION")]
    resolution: usize,
    #[arg(long, default_value_t = 0.01)]
    vf_tolerance: f64,
    /// Also write a JSON description of the fiber centers and radius
    #[arg(long)]
    spec_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Material preset (`table1`) or TOML file
    #[arg(long, default_value = "table1", env = "VDMA_MATERIALS")]
    materials: String,
    #[arg(long, default_value_t = FrequencyGrid::DEFAULT_MIN, value_parser = parse_positive, env = "VDMA_OMEGA_MIN")]
    omega_min: f64,
    #[arg(long, default_value_t = FrequencyGrid::DEFAULT_MAX, value_parser = parse_positive, env = "VDMA_OMEGA_MAX")]
    omega_max: f64,
    #[arg(long, default_value_t = FrequencyGrid::DEFAULT_POINTS, env = "VDMA_POINTS")]
    points: usize,
    /// Relative equilibrium residual at which iterations stop
    #[arg(long, default_value_t = 1e-6, value_parser = parse_positive, env = "VDMA_TOLERANCE")]
    tolerance: f64,
    #[arg(long, default_value_t = 1000, env = "VDMA_MAX_ITERATIONS")]
    max_iterations: usize,
}

impl SolverArgs {
    fn materials(&self) -> Result<MaterialPair, Error> {
        Ok(MaterialPair::from_preset_or_file(&self.materials)?)
    }

    fn grid(&self) -> Result<FrequencyGrid, Error> {
        Ok(FrequencyGrid::log_spaced(self.omega_min, self.omega_max, self.points)?)
    }

    fn settings(&self) -> SolverSettings {
        SolverSettings {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    grid: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write converged strain and stress fields here, one file per pulsation
    #[arg(long)]
    dump_fields: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    #[arg(long, default_value_t = 100)]
    count_per_vf: usize,
    #[arg(long, default_value_t = VF_MIN, value_parser = parse_vf)]
    vf_min: f64,
    #[arg(long, default_value_t = VF_MAX, value_parser = parse_vf)]
    vf_max: f64,
    #[arg(long, default_value_t = 0.005, value_parser = parse_positive)]
    vf_step: f64,
    #[arg(long, default_value_t = 256, env = "VDMA_RESOLUTION")]
    resolution: usize,
    #[arg(long, default_value_t = 0.01)]
    vf_tolerance: f64,
    /// Periodic translations per sample (half horizontal, half vertical)
    #[arg(long, default_value_t = 4)]
    augment: usize,
    /// train,val,test fractions
    #[arg(long, default_value = "0.7,0.15,0.15", value_parser = parse_split)]
    split: [f64; 3],
    #[arg(long, default_value_t = 3)]
    max_retries: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Fraction of records whose curve is recomputed
    #[arg(long, default_value_t = 0.01)]
    recompute_fraction: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Component {
    Xx,
    Yy,
    Xy,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Part {
    Re,
    Im,
    Abs,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["curve", "grid", "field"])))]
struct PlotArgs {
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    field: Option<PathBuf>,
    /// Field component (with --field)
    #[arg(long, value_enum, default_value = "xy")]
    component: Component,
    /// Complex part (with --field)
    #[arg(long, value_enum, default_value = "re")]
    part: Part,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", display(path)).into())
}

fn read_input(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => format!("file not found: {}", display(path)).into(),
        _ => format!("cannot read {}: {e}", display(path)).into(),
    })
}

fn run_gen(args: &GenArgs, seed: u64) -> Result<(), Error> {
    let config = RveConfig::new(args.vf, args.fibers as usize, seed)
        .with_resolution(args.resolution)
        .with_tolerance(args.vf_tolerance);
    let spec = generate_rve(&config)?;
    let grid = rasterize(&spec, args.resolution);
    write_grid(&grid, &args.out)?;
    if let Some(path) = &args.spec_out {
        write_file(path, serde_json::to_string_pretty(&spec)? + "\n")?;
    }
    println!(
        "wrote {}: {} fibers, radius {:.6}, vf {:.6}",
        display(&args.out),
        spec.centers.len(),
        spec.radius,
        measure_vf(&grid)
    );
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), Error> {
    let grid = read_grid(&args.grid)?;
    let materials = args.solver.materials()?;
    let freq = args.solver.grid()?;
    let mut settings = args.solver.settings();
    settings.store_local_fields = args.dump_fields.is_some();
    let h = Homogenizer::new(grid.resolution());
    let solutions = dma::sweep_solutions(&h, &grid, &materials, &freq, &settings, dma::SHEAR_AMPLITUDE)?;
    let moduli: Vec<_> = solutions.iter().map(|s| s.mean_stress.xy / dma::SHEAR_AMPLITUDE).collect();
    let curve = vdma::DmaCurve {
        omegas: freq.omegas().to_vec(),
        storage: moduli.iter().map(|g| g.re).collect(),
        loss: moduli.iter().map(|g| g.im).collect(),
        converged: solutions.iter().map(|s| s.converged).collect(),
        metadata: dma::CurveMetadata {
            source: display(&args.grid),
            solver_digest: settings.digest(),
        },
    };
    write_file(&args.out, curve.to_csv())?;

    if let Some(dir) = &args.dump_fields {
        std::fs::create_dir_all(dir)?;
        for (i, (s, &w)) in solutions.iter().zip(freq.omegas()).enumerate() {
            for (kind, name, field) in [
                (FieldKind::Strain, "strain", &s.strain),
                (FieldKind::Stress, "stress", &s.stress),
            ] {
                if let Some(field) = field {
                    let path = dir.join(format!("{name}_{i:02}.vdmf"));
                    write_field(field, kind, w, &path)
                        .map_err(|e| format!("cannot write {}: {e}", display(&path)))?;
                }
            }
        }
    }

    let bad = curve.unconverged_indices();
    if !bad.is_empty() {
        let omegas: Vec<String> = bad.iter().map(|&i| format!("{:e}", curve.omegas[i])).collect();
        return Err(format!(
            "solver did not converge at omega = {} (curve written to {})",
            omegas.join(", "),
            display(&args.out)
        )
        .into());
    }
    println!("wrote {} ({} points)", display(&args.out), curve.len());
    Ok(())
}

fn run_dataset(args: &DatasetArgs, seed: u64) -> Result<(), Error> {
    if args.out.join(dataset::MANIFEST_FILE).exists() {
        return Err(format!("{} already contains a dataset", display(&args.out)).into());
    }
    let range = VfRange {
        min: args.vf_min,
        max: args.vf_max,
        step: args.vf_step,
    };
    let mut cfg = DatasetConfig::new(args.count_per_vf, range, seed);
    cfg.resolution = args.resolution;
    cfg.vf_tolerance = args.vf_tolerance;
    cfg.frequency_grid = args.solver.grid()?;
    cfg.solver = args.solver.settings();
    cfg.materials = args.solver.materials()?;
    cfg.max_retries = args.max_retries;
    log::info!("generating {} samples", cfg.sample_count()?);

    let (manifest, failure) = match dataset::generate_dataset(&cfg, &args.out) {
        Ok(m) => (m, None),
        Err(dataset::DatasetError::PartialDataset { slots, manifest }) => {
            let msg = format!("{} slot(s) failed after retries", slots.len());
            (*manifest, Some(msg))
        }
        Err(e) => return Err(e.into()),
    };
    let spec = AugmentationSpec {
        translations_per_sample: args.augment,
        stream: 0,
    };
    let manifest = dataset::augment(&manifest, &spec, &args.out)?;
    let manifest = dataset::split(&manifest, args.split, seed)?;
    manifest.write(&args.out)?;
    println!(
        "wrote {}: {} base samples, {} records",
        display(&args.out),
        manifest.base_records().count(),
        manifest.records.len()
    );
    match failure {
        Some(msg) => Err(msg.into()),
        None => Ok(()),
    }
}

fn run_verify(args: &VerifyArgs) -> Result<(), Error> {
    if !args.dataset.join(dataset::MANIFEST_FILE).exists() {
        return Err(format!("file not found: {}", display(&args.dataset.join(dataset::MANIFEST_FILE))).into());
    }
    let opts = VerifyOptions {
        recompute_fraction: args.recompute_fraction,
    };
    let report = dataset::verify_dataset(&args.dataset, &opts)?;
    for v in &report.violations {
        eprintln!("violation: {v}");
    }
    println!(
        "checked {} records, recomputed {}, {} violation(s)",
        report.records,
        report.recomputed.len(),
        report.violations.len()
    );
    if report.ok() {
        Ok(())
    } else {
        Err(format!("{} violation(s)", report.violations.len()).into())
    }
}

fn run_plot(args: &PlotArgs) -> Result<(), Error> {
    let svg = if let Some(path) = &args.curve {
        let curve = vdma::DmaCurve::read_csv(path)?;
        plot::curve_svg(&curve, args.title.as_deref().unwrap_or(&display(path)))
    } else if let Some(path) = &args.grid {
        let grid = read_grid(path)?;
        let title = args.title.clone().unwrap_or_else(|| {
            format!("{} (vf {:.4})", display(path), measure_vf(&grid))
        });
        plot::grid_svg(&grid, &title)
    } else {
        let path = args.field.as_ref().expect("clap enforces one input");
        let dump = vdma::homogenizer::decode_field(&read_input(path)?)
            .map_err(|e| format!("{}: {e}", display(path)))?;
        let comp = match args.component {
            Component::Xx => &dump.field.xx,
            Component::Yy => &dump.field.yy,
            Component::Xy => &dump.field.xy,
        };
        let values: Vec<f64> = comp
            .iter()
            .map(|z| match args.part {
                Part::Re => z.re,
                Part::Im => z.im,
                Part::Abs => z.norm(),
            })
            .collect();
        let title = args.title.clone().unwrap_or_else(|| {
            format!(
                "{:?} {:?} {:?}, omega = {:e} rad/s",
                dump.kind, args.component, args.part, dump.omega
            )
            .to_lowercase()
        });
        plot::heatmap_svg(&values, dump.field.resolution(), &title, false)
    };
    write_file(&args.out, svg)?;
    println!("wrote {}", display(&args.out));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("error: cannot start worker pool: {e}");
        return ExitCode::from(1);
    }

    let result = match &cli.command {
        Command::Gen(a) => run_gen(a, cli.seed),
        Command::Sweep(a) => run_sweep(a),
        Command::Dataset(a) => run_dataset(a, cli.seed),
        Command::Verify(a) => run_verify(a),
        Command::Eval(a) => eval::run(a),
        Command::Plot(a) => run_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
