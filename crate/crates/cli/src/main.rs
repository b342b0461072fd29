use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use compact_fractal::bench::{self, BenchBackend, BenchConfig};
use compact_fractal::frame::{self, FrameFormat};
use compact_fractal::geometry::{self, EmbeddedCoord, Layout};
use compact_fractal::maps::{CompactCoord, FractalMap};
use compact_fractal::oracle;
use compact_fractal::stencil::{init_state, Backend, Engine, StencilRule};
use compact_fractal::{FractalDescriptor, MemoryCap, SimState};

/// Compact storage, coordinate maps and stencil simulation for NBB fractals.
#[derive(Parser)]
#[command(name = "compact-fractal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print sizes, dimension and compression of a fractal level.
    Info(InfoArgs),
    /// Translate one coordinate between embedded and compact space.
    Map(MapArgs),
    /// Check the maps exhaustively and optionally the stencil backends.
    Verify(VerifyArgs),
    /// Run a cellular automaton on the fractal.
    Simulate(SimulateArgs),
    /// Time the backends and write a CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct FractalArgs {
    /// Built-in name or `@path` to a descriptor file.
    #[arg(long, default_value = "sierpinski-triangle")]
    fractal: String,
}

impl FractalArgs {
    fn load(&self) -> anyhow::Result<FractalDescriptor> {
        match self.fractal.strip_prefix('@') {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                Ok(FractalDescriptor::parse(&text).with_context(|| format!("parsing {path}"))?)
            }
            None => Ok(FractalDescriptor::builtin(&self.fractal)?),
        }
    }
}

#[derive(Args)]
struct InfoArgs {
    #[command(flatten)]
    fractal: FractalArgs,
    #[arg(long)]
    level: u32,
}

#[derive(Args)]
#[group(id = "direction", required = true, multiple = false)]
struct MapArgs {
    #[command(flatten)]
    fractal: FractalArgs,
    #[arg(long)]
    level: u32,
    /// Embedded coordinate `x,y` to map with ν.
    #[arg(long, group = "direction", value_name = "X,Y")]
    to_compact: Option<EmbeddedCoord>,
    /// Compact coordinate `cx,cy` to map with λ.
    #[arg(long, group = "direction", value_name = "CX,CY")]
    to_embedded: Option<CompactCoord>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    fractal: FractalArgs,
    #[arg(long)]
    level: u32,
    /// Also run every backend in lockstep and compare cell by cell.
    #[arg(long)]
    stencil: bool,
    #[arg(long, default_value_t = 100)]
    steps: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value = "B3/S23")]
    rule: StencilRule,
    /// Replica numbering used for the map check.
    #[arg(long, value_enum, default_value = "lookup")]
    numbering: Numbering,
}

#[derive(Clone, Copy, ValueEnum)]
enum Numbering {
    /// Descriptor-order IDs via the replica table.
    Lookup,
    /// `bit(x) + bit(y)` for the triangle; not injective.
    LiteralTriangle,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Bb,
    Lambda,
    Compact,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    fractal: FractalArgs,
    #[arg(long)]
    level: u32,
    #[arg(long, value_enum, default_value = "compact")]
    backend: BackendArg,
    #[arg(long, default_value = "B3/S23")]
    rule: StencilRule,
    #[arg(long, default_value_t = 100)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Block side for the compact backend; omit for the linear layout.
    #[arg(long, value_name = "RHO")]
    block_size: Option<u64>,
    /// Directory for frames.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "pbm")]
    format: FrameFormat,
    /// Frame interval in iterations.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    every: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Per-grid memory cap in bytes.
    #[arg(long, default_value_t = MemoryCap::DEFAULT.0)]
    mem_cap: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    fractal: FractalArgs,
    /// Protocol defaults; explicit flags override them.
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    /// Inclusive level range `a..b`.
    #[arg(long)]
    levels: Option<String>,
    /// Comma-separated list of bb, lambda, compact.
    #[arg(long, value_delimiter = ',')]
    backends: Option<Vec<BenchBackend>>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    iters: Option<u32>,
    /// Comma-separated block sides for the compact backend, or `none`.
    #[arg(long, value_parser = parse_block_sizes)]
    block_sizes: Option<BlockSizes>,
    #[arg(long)]
    csv: PathBuf,
    /// Per-grid memory cap in bytes.
    #[arg(long)]
    mem_cap: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    density: Option<f64>,
}

#[derive(Clone)]
struct BlockSizes(Vec<u64>);

fn parse_block_sizes(text: &str) -> Result<BlockSizes, String> {
    if text.is_empty() || text == "none" {
        return Ok(BlockSizes(Vec::new()));
    }
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| format!("invalid block size {v:?}"))
        })
        .collect::<Result<_, _>>()
        .map(BlockSizes)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` signals a verification failure.
fn run(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Info(a) => info(a),
        Command::Map(a) => map(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => run_bench(a),
    }
}

fn info(a: InfoArgs) -> anyhow::Result<bool> {
    let desc = a.fractal.load()?;
    let map = FractalMap::new(&desc, a.level)?;
    let (w, h) = map.compact_dims();
    println!("fractal={}", desc.name());
    println!("k={}", desc.k());
    println!("s={}", desc.s());
    println!("level={}", a.level);
    println!("n={}", map.side());
    println!("cells={}", map.cell_count());
    println!("compact={w}x{h}");
    println!("hausdorff={:.4}", desc.hausdorff_dimension());
    println!(
        "compression={:.2}",
        geometry::compression_factor(&desc, a.level, Layout::Linear)?
    );
    Ok(true)
}

fn map(a: MapArgs) -> anyhow::Result<bool> {
    let desc = a.fractal.load()?;
    let map = FractalMap::new(&desc, a.level)?;
    match (a.to_compact, a.to_embedded) {
        (Some(e), _) => println!("{}", map.nu(e)?),
        (_, Some(c)) => println!("{}", map.lambda(c)?),
        _ => unreachable!("clap requires one direction"),
    }
    Ok(true)
}

fn verify(a: VerifyArgs) -> anyhow::Result<bool> {
    let desc = a.fractal.load()?;
    let maps = match a.numbering {
        Numbering::Lookup => oracle::verify_maps(&desc, a.level)?,
        Numbering::LiteralTriangle => {
            if !desc.is_canonical_triangle() {
                bail!("--numbering literal-triangle needs the sierpinski-triangle descriptor");
            }
            oracle::verify_maps_with(&desc, a.level, oracle::literal_triangle_replica_id)?
        }
    };
    print!("maps {maps}");
    let mut ok = maps.passed();
    if a.stencil {
        let report = oracle::verify_stencil(&desc, a.level, a.rule, a.seed, a.density, a.steps)?;
        print!("stencil {report}");
        ok &= report.passed();
    }
    Ok(ok)
}

fn backend(arg: BackendArg, block: Option<u64>) -> anyhow::Result<Backend> {
    Ok(match (arg, block) {
        (BackendArg::Compact, block) => Backend::Compact { block },
        (_, Some(_)) => bail!("--block-size applies only to the compact backend"),
        (BackendArg::Bb, None) => Backend::BoundingBox,
        (BackendArg::Lambda, None) => Backend::Lambda,
    })
}

fn simulate(a: SimulateArgs) -> anyhow::Result<bool> {
    let desc = a.fractal.load()?;
    let cap = MemoryCap(a.mem_cap);
    let backend = backend(a.backend, a.block_size)?;
    let mut engine = Engine::new(a.rule);
    if let Some(w) = a.workers {
        engine = engine.with_workers(w)?;
    }
    let mut state = init_state(&desc, a.level, backend, a.seed, a.density, cap)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let export = |state: &SimState, dir: &Path| -> anyhow::Result<()> {
        let path = dir.join(format!(
            "frame_{:06}.{}",
            state.iteration(),
            a.format.extension()
        ));
        frame::export_frame_with(state, &path, a.format, frame::DEFAULT_RENDER_CAP, cap)?;
        Ok(())
    };
    if let Some(dir) = &a.out {
        export(&state, dir)?;
    }
    let start = std::time::Instant::now();
    for _ in 0..a.steps {
        engine.step(&mut state)?;
        if let Some(dir) = &a.out {
            if state.iteration() % a.every == 0 || state.iteration() == a.steps {
                export(&state, dir)?;
            }
        }
    }
    let elapsed = start.elapsed();
    println!("backend={}", backend.name());
    println!("layout={}", backend.layout());
    println!("iterations={}", state.iteration());
    println!("alive={}", state.grid().alive_count());
    println!("hash={:016x}", state.state_hash());
    println!("mem_cells={}", state.grid().memory_footprint());
    println!("elapsed_ms={:.3}", elapsed.as_secs_f64() * 1e3);
    Ok(true)
}

fn run_bench(a: BenchArgs) -> anyhow::Result<bool> {
    let desc = a.fractal.load()?;
    let mut config = match a.preset {
        Preset::Desk => BenchConfig::desk(),
        Preset::Paper => BenchConfig::paper(),
    };
    if let Some(levels) = &a.levels {
        config.levels = bench::parse_level_range(levels)?;
    }
    if let Some(b) = a.backends {
        config.backends = b;
    }
    if let Some(BlockSizes(b)) = a.block_sizes {
        config.block_sizes = b;
    }
    config.reps = a.reps.unwrap_or(config.reps);
    config.iters = a.iters.unwrap_or(config.iters);
    config.cap = a.mem_cap.map_or(config.cap, MemoryCap);
    config.workers = a.workers.or(config.workers);
    config.seed = a.seed.unwrap_or(config.seed);
    config.density = a.density.unwrap_or(config.density);

    println!("{}", bench::CSV_HEADER.join(","));
    let records = bench::run_bench_with(&desc, &config, |r| println!("{r}"))?;
    let file = fs::File::create(&a.csv).with_context(|| format!("creating {}", a.csv.display()))?;
    bench::write_bench_csv(&records, file)?;
    Ok(true)
}
