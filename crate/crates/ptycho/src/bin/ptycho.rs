//! `ptycho`: simulate datasets, reconstruct them and run benchmark sweeps.
//!
//! Exit codes: 0 success, 2 configuration error, 3 diverged run, 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptycho::bench::{BenchSpec, Study, BLIND_OVERLAPS, KNOWN_PROBE_ALPHAS};
use ptycho::cimg::{self, Raster};
use ptycho::config::{self, Algo, PriorKind, RunConfig, SchemeKind};
use ptycho::output::{self, RunManifest, RUN_MANIFEST};
use ptycho::simulate::{self, ObjectSpec, ProbeSpec, ScanSpec, SimSpec, PROBE_AMPLITUDE};
use ptycho::{dataset, Error, RayonExecutor, Result};

#[derive(Parser)]
#[command(
    name = "ptycho",
    version,
    about = "Ptychographic phase retrieval by expectation propagation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Simulate(SimulateArgs),
    /// Reconstruct an object from a dataset directory.
    Reconstruct(ReconstructArgs),
    /// Sweep sampling ratios or overlaps over algorithms and trials.
    Benchmark(BenchmarkArgs),
    /// Describe a dataset, result directory or CIMG file.
    Info { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanKind {
    Fermat,
    Raster,
}

#[derive(Args)]
struct SimulateArgs {
    /// `synthetic` or a CIMG file.
    #[arg(long, default_value = "synthetic")]
    object: String,
    /// Side of the synthetic object in pixels.
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// `disk:D`, `smooth-disk:D` (diameter in pixels) or a CIMG file.
    #[arg(long, default_value = "disk:23")]
    probe: String,
    /// Side of the probe window for the built-in probes.
    #[arg(long, default_value_t = 32)]
    window: usize,
    /// Peak amplitude of the built-in probes.
    #[arg(long, default_value_t = PROBE_AMPLITUDE)]
    probe_amplitude: f64,
    #[arg(long, value_enum, default_value = "fermat")]
    scan: ScanKind,
    /// Fermat: tune the spiral to this sampling ratio.
    #[arg(long)]
    target_alpha: Option<f64>,
    /// Fermat: scan count (with --radius-scale, or fixed while tuning).
    #[arg(long)]
    n_scans: Option<usize>,
    #[arg(long)]
    radius_scale: Option<f64>,
    /// Fermat: move windows that would leave the object back inside it.
    #[arg(long)]
    clamp_spiral: bool,
    /// Raster step in pixels.
    #[arg(long)]
    step: Option<usize>,
    /// Raster grid `ROWSxCOLS`; defaults to as many as fit.
    #[arg(long, value_parser = parse_pair)]
    grid: Option<(usize, usize)>,
    /// Raster jitter bound in pixels.
    #[arg(long, default_value_t = 2)]
    max_dev: usize,
    /// Keep this fraction of object pixels and zero the rest.
    #[arg(long)]
    keep_fraction: Option<f64>,
    /// Measurement SNR in dB; `inf` for noiseless data.
    #[arg(long, default_value = "30")]
    snr_db: f64,
    /// Defaults to $PTYCHO_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Reconstruction flags; each one overrides the config file.
#[derive(Args)]
struct ReconstructArgs {
    /// Dataset directory.
    #[arg(long, required_unless_present = "manifest")]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Repeat the run recorded in this run manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    #[arg(long, value_enum)]
    prior: Option<PriorKind>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    em_updates: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Reconstruct the probe as well.
    #[arg(long)]
    blind: bool,
    #[arg(long)]
    probe_init: Option<PathBuf>,
    /// Defaults to the config file, then $PTYCHO_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the per-scan work (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Skip the PNG previews.
    #[arg(long)]
    no_previews: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    /// Known probe, Fermat spirals at several sampling ratios.
    Alpha,
    /// Blind, jittered rasters at several overlaps.
    Overlap,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, value_enum, default_value = "alpha")]
    study: StudyKind,
    /// Sampling ratios (alpha study).
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Overlap ratios in (0, 1) (overlap study).
    #[arg(long, value_delimiter = ',')]
    overlaps: Option<Vec<f64>>,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 32)]
    window: usize,
    /// Disk diameter; defaults to 23/32 of the window.
    #[arg(long)]
    probe_diameter: Option<f64>,
    #[arg(long, default_value_t = PROBE_AMPLITUDE)]
    probe_amplitude: f64,
    #[arg(long)]
    keep_fraction: Option<f64>,
    #[arg(long, default_value = "30")]
    snr_db: f64,
    #[arg(long, value_delimiter = ',', default_value = "ptycho-ep,pie")]
    algos: Vec<Algo>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long)]
    iters: Option<usize>,
    /// JSON run configuration shared by every cell.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    prior: Option<PriorKind>,
    #[arg(long)]
    rho: Option<f64>,
    /// Defaults to $PTYCHO_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent cells (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s}"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("PTYCHO_SEED") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::Config(format!(
                "PTYCHO_SEED must be an unsigned integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn probe_spec(arg: &str, window: usize, amplitude: f64) -> Result<ProbeSpec> {
    let window = (window, window);
    let diameter = |d: &str| {
        d.parse::<f64>()
            .ok()
            .filter(|d| *d > 0.0)
            .ok_or_else(|| Error::Config(format!("bad probe diameter {d:?}")))
    };
    Ok(if let Some(d) = arg.strip_prefix("disk:") {
        ProbeSpec::Disk {
            window,
            diameter: diameter(d)?,
            amplitude,
        }
    } else if let Some(d) = arg.strip_prefix("smooth-disk:") {
        ProbeSpec::SmoothDisk {
            window,
            diameter: diameter(d)?,
            blur: 2,
            curvature: 1.0,
            amplitude,
        }
    } else {
        ProbeSpec::File { path: arg.into() }
    })
}

/// Blind starting probe written next to simulated datasets.
const BLIND_START: &str = "probe_init.cimg";

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let object = match a.object.as_str() {
        "synthetic" => ObjectSpec::Synthetic {
            height: a.size,
            width: a.size,
        },
        path => ObjectSpec::File { path: path.into() },
    };
    let scan = match a.scan {
        ScanKind::Fermat => ScanSpec::Fermat {
            target_alpha: a.target_alpha,
            n_scans: a.n_scans,
            radius_scale: a.radius_scale,
            clamp: a.clamp_spiral,
        },
        ScanKind::Raster => ScanSpec::Raster {
            step: a
                .step
                .ok_or_else(|| Error::Config("a raster scan needs --step".into()))?,
            grid: a.grid,
            max_dev: a.max_dev,
        },
    };
    let spec = SimSpec {
        object,
        keep_fraction: a.keep_fraction,
        probe: probe_spec(&a.probe, a.window, a.probe_amplitude)?,
        scan,
        snr_db: (a.snr_db != f64::INFINITY).then_some(a.snr_db),
        seed: a.seed.or(env_seed()?).unwrap_or(0),
    };
    let s = simulate::simulate(&spec)?;
    dataset::save(&a.out, &s.data, Some(spec.clone()))?;
    if !matches!(spec.probe, ProbeSpec::File { .. }) {
        // Starting probe for blind reconstructions of this dataset.
        cimg::write_complex(
            a.out.join(BLIND_START),
            &simulate::blind_start(&spec.probe)?,
        )?;
    }
    let g = s.data.geometry();
    println!("scans: {}", g.n_scans());
    println!("sampling_ratio: {:.4}", s.sampling_ratio);
    if let Some(r) = s.overlap {
        println!("overlap_ratio: {r:.4}");
    }
    println!("covered_pixels: {}", s.covered_pixels);
    println!("sigma: {}", s.data.sigma());
    println!("noise_floor: {:.6e}", s.noise_floor);
    Ok(())
}

fn reconstruct_cmd(a: ReconstructArgs) -> Result<()> {
    let recorded = a.manifest.as_deref().map(RunManifest::load).transpose()?;
    let mut cfg = match (&a.config, &recorded) {
        (Some(path), _) => read_config(path)?,
        (None, Some(m)) => m.config.clone(),
        (None, None) => RunConfig {
            seed: env_seed()?.unwrap_or(0),
            ..RunConfig::default()
        },
    };
    apply_flags(&mut cfg, &a);
    let data_dir = match (&a.data, &recorded) {
        (Some(d), _) => d.clone(),
        (None, Some(m)) => m.dataset.clone(),
        (None, None) => unreachable!("clap requires --data or --manifest"),
    };
    let (data, _) = dataset::load(&data_dir)?;
    let exec = RayonExecutor::with_threads(a.jobs)?;
    let start = Instant::now();
    let outcome = config::run(&data, &cfg, &exec)?;
    let manifest = RunManifest::new(&data_dir, &cfg, start.elapsed().as_secs_f64() * 1e3);
    let summary = output::write_run(&a.out, &data, &outcome, &manifest, !a.no_previews)?;
    println!("algo: {}", summary.algo);
    println!("iterations: {}", summary.iterations);
    println!("fitness: {:.6e}", summary.fitness);
    println!("noise_floor: {:.6e}", summary.noise_floor);
    if let Some(db) = summary.nmse_db {
        println!("nmse_db: {db:.3}");
    }
    Ok(())
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    // A seed in the file wins over the environment fallback.
    if value.get("seed").is_none() {
        if let (Some(s), Some(obj)) = (env_seed()?, value.as_object_mut()) {
            obj.insert("seed".into(), s.into());
        }
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn apply_flags(cfg: &mut RunConfig, a: &ReconstructArgs) {
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = a.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    set!(algo, prior, rho, iters, em_updates, scheme, seed);
    if a.mu.is_some() {
        cfg.mu = a.mu;
    }
    if a.sigma.is_some() {
        cfg.sigma = a.sigma;
    }
    if a.alpha.is_some() {
        cfg.alpha = a.alpha;
    }
    if a.beta.is_some() {
        cfg.beta = a.beta;
    }
    if a.probe_init.is_some() {
        cfg.probe_init = a.probe_init.clone();
    }
    cfg.blind |= a.blind;
}

fn benchmark_cmd(a: BenchmarkArgs) -> Result<()> {
    let study = match a.study {
        StudyKind::Alpha => Study::SamplingRatio {
            alphas: a.alphas.clone().unwrap_or(KNOWN_PROBE_ALPHAS.to_vec()),
        },
        StudyKind::Overlap => Study::Overlap {
            overlaps: a.overlaps.clone().unwrap_or(BLIND_OVERLAPS.to_vec()),
            max_dev: 2,
        },
    };
    let mut run = match &a.config {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(i) = a.iters {
        run.iters = i;
    }
    if let Some(p) = a.prior {
        run.prior = p;
    }
    if let Some(r) = a.rho {
        run.rho = r;
    }
    let diameter = a.probe_diameter.unwrap_or(a.window as f64 * 23.0 / 32.0);
    let spec = BenchSpec {
        study,
        object_size: a.size,
        probe: probe_spec(&format!("disk:{diameter}"), a.window, a.probe_amplitude)?,
        keep_fraction: a.keep_fraction,
        snr_db: (a.snr_db != f64::INFINITY).then_some(a.snr_db),
        algos: a.algos.clone(),
        trials: a.trials,
        seed: a.seed.or(env_seed()?).unwrap_or(0),
        run,
        blind: matches!(a.study, StudyKind::Overlap),
    };
    let report = spec.run(a.jobs)?;
    report.write(&a.out, &spec)?;
    match a.study {
        StudyKind::Alpha => print!("{}", report.table(|r, c, al| r.median_nmse_db(c, al))),
        StudyKind::Overlap => print!("{}", report.table(|r, c, al| r.median_fitness(c, al))),
    }
    Ok(())
}

fn info_cmd(path: &Path) -> Result<()> {
    if path.is_dir() {
        if path.join(dataset::MANIFEST).exists() {
            let (data, m) = dataset::load(path)?;
            let g = data.geometry();
            println!("dataset: {}", path.display());
            println!("object: {}x{}", g.object_shape().0, g.object_shape().1);
            println!("window: {}x{}", g.window().0, g.window().1);
            println!("scans: {}", g.n_scans());
            println!("sampling_ratio: {:.4}", m.sampling_ratio);
            println!("covered_pixels: {}", g.covered_pixels());
            println!("sigma: {}", m.sigma);
            println!(
                "noise_floor: {:.6e}",
                ptycho_core::metrics::noise_floor(&data)?
            );
            println!(
                "probe: {}",
                if data.probe().is_some() {
                    "known"
                } else {
                    "absent"
                }
            );
            println!(
                "truth: {}",
                if data.truth().is_some() {
                    "present"
                } else {
                    "absent"
                }
            );
            return Ok(());
        }
        if path.join(RUN_MANIFEST).exists() {
            let summary = path.join("summary.json");
            let text = std::fs::read_to_string(&summary).map_err(|e| Error::Io {
                path: summary.clone(),
                source: e,
            })?;
            print!("{text}");
            return Ok(());
        }
        return Err(Error::Config(format!(
            "{} is neither a dataset nor a result directory",
            path.display()
        )));
    }
    let (kind, h, w, finite) = match cimg::read(path)? {
        Raster::Complex(c) => ("complex", c.height(), c.width(), c.is_finite()),
        Raster::Real(r) => ("real", r.height(), r.width(), r.is_finite()),
    };
    println!("{}: {kind} {h}x{w}, finite: {finite}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Benchmark(a) => benchmark_cmd(a),
        Command::Info { path } => info_cmd(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
