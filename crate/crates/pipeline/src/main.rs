use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use diffstruct::stripes::StripeParams;
use diffstruct_pipeline::params::ParamsFile;
use diffstruct_pipeline::session::{self, extract_structure, obj_header};
use diffstruct_pipeline::timing::report_table;
use diffstruct_pipeline::{SessionBundle, SessionConfig};

#[derive(Parser)]
#[command(name = "diffstruct", version, about = "Stress-aligned stripe structures on triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Precomputed bundle.
    #[arg(long, conflicts_with = "config")]
    bundle: Option<PathBuf>,
    /// Session config; runs the precompute first.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh OBJ overriding the config's.
    #[arg(long, requires = "config")]
    mesh: Option<PathBuf>,
    /// Mode count.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct ParamsArgs {
    /// Stripe parameter JSON: one object or a table of named rows.
    #[arg(long)]
    params: PathBuf,
    /// Row name when `--params` is a table.
    #[arg(long)]
    row: Option<String>,
    #[arg(long)]
    max_depth: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the precompute chain and write a bundle.
    Precompute {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        max_depth: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the structure for one parameter set as OBJ.
    Extract {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: ParamsArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract every combination of the listed values into a directory.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: ParamsArgs,
        /// Sets both alphaU and alphaW.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        alpha_u: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        alpha_w: Vec<f64>,
        /// Sets both mU and mW.
        #[arg(long, value_delimiter = ',')]
        m: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        a: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        b: Vec<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Print stage timings of one or more bundles.
    Report {
        #[arg(required = true)]
        bundles: Vec<PathBuf>,
    },
}

fn load_bundle(input: &Input) -> Result<SessionBundle> {
    let bundle = match (&input.bundle, &input.config) {
        (Some(path), _) => SessionBundle::load(path)?,
        (None, Some(path)) => {
            let mut config = SessionConfig::load(path)?;
            if let Some(mesh) = &input.mesh {
                config.mesh = Some(mesh.clone());
            }
            if let Some(k) = input.k {
                config.k = k;
            }
            return Ok(session::precompute_from_file(&config)?);
        }
        (None, None) => bail!("give --bundle or --config"),
    };
    match input.k {
        Some(k) if k != bundle.k() => Ok(session::recompute_k(&bundle, k)?),
        _ => Ok(bundle),
    }
}

fn write_structure(bundle: &SessionBundle, params: StripeParams, max_depth: Option<u32>, out: &Path) -> Result<usize> {
    let mesh = extract_structure(bundle, params, max_depth)?;
    if mesh.is_empty() {
        log::warn!("empty structure: no face survives for {}", serde_json::to_string(&params)?);
    }
    if mesh.unresolved_faces > 0 {
        log::warn!("{} faces still multiply crossed at max depth", mesh.unresolved_faces);
    }
    mesh.write_obj_file(out, &obj_header(bundle, &mesh)).with_context(|| format!("writing {}", out.display()))?;
    Ok(mesh.face_count())
}

fn or_base<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

fn sweep_name(p: &StripeParams) -> String {
    format!("a{}-b{}-au{}-aw{}-mu{}-mw{}.obj", p.a, p.b, p.alpha_u, p.alpha_w, p.m_u, p.m_w)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Precompute { config, mesh, k, max_depth, out } => {
            let mut config = SessionConfig::load(&config)?;
            if let Some(mesh) = mesh {
                config.mesh = Some(mesh);
            }
            if let Some(k) = k {
                config.k = k;
            }
            if let Some(d) = max_depth {
                config.max_depth = d;
            }
            let bundle = session::precompute_from_file(&config)?;
            bundle.save(&out)?;
            println!(
                "wrote {} (|V| {}, |T| {}, k {}, {} anisotropic faces, {:.3} s)",
                out.display(),
                bundle.vertex_count(),
                bundle.face_count(),
                bundle.k(),
                bundle.header().anisotropic_faces,
                bundle.timings.total
            );
        }
        Command::Extract { input, params, out } => {
            let bundle = load_bundle(&input)?;
            let p = ParamsFile::load(&params.params)?.select(params.row.as_deref())?;
            let faces = write_structure(&bundle, p, params.max_depth, &out)?;
            println!("wrote {} ({faces} faces)", out.display());
        }
        Command::Sweep { input, params, alpha, alpha_u, alpha_w, m, a, b, out } => {
            let bundle = load_bundle(&input)?;
            let base = ParamsFile::load(&params.params)?.select(params.row.as_deref())?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut grid = Vec::new();
            // a shared list sets both families together
            let alphas: Vec<(f64, f64)> = if alpha.is_empty() {
                let (us, ws) = (or_base(&alpha_u, base.alpha_u), or_base(&alpha_w, base.alpha_w));
                us.iter().flat_map(|&u| ws.iter().map(move |&w| (u, w))).collect()
            } else {
                alpha.iter().map(|&x| (x, x)).collect()
            };
            let ms: Vec<(f64, f64)> =
                if m.is_empty() { vec![(base.m_u, base.m_w)] } else { m.iter().map(|&x| (x, x)).collect() };
            for &ai in &or_base(&a, base.a) {
                for &bi in &or_base(&b, base.b) {
                    for &(au, aw) in &alphas {
                        for &(mu, mw) in &ms {
                            grid.push(StripeParams {
                                a: ai,
                                b: bi,
                                alpha_u: au,
                                alpha_w: aw,
                                m_u: mu,
                                m_w: mw,
                                ..base
                            });
                        }
                    }
                }
            }
            for p in grid {
                let path = out.join(sweep_name(&p));
                let faces = write_structure(&bundle, p, params.max_depth, &path)?;
                println!("wrote {} ({faces} faces)", path.display());
            }
        }
        Command::Serve { port } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(diffstruct_pipeline::server::serve(port))?;
        }
        Command::Report { bundles } => {
            let mut rows = Vec::new();
            for path in &bundles {
                let bundle = SessionBundle::load(path)?;
                let name =
                    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                rows.push((name, bundle.vertex_count(), bundle.face_count(), bundle.timings));
            }
            print!("{}", report_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
