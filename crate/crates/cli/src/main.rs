use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brushfem::config::RunConfig;
use brushfem::direct::{solve_direct, source_pairing};
use brushfem::fem::CgOptions;
use brushfem::graph::decompose;
use brushfem::harness::{run_convergence, write_csv};
use brushfem::limit::{brush_trace_nodes, solve_limit_for_brush};
use brushfem::mesh::{mesh_brush, mesh_tooth_reference_aniso, BrushMesh};
use brushfem::unfolding::{trace_compat, unfold};
use brushfem::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brushfem", version, about = "Brush-domain FEM and graph limit driver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    h_base: Option<f64>,
    #[arg(long, global = true)]
    h_tooth: Option<f64>,
    #[arg(long, global = true)]
    h_y: Option<f64>,
    #[arg(long, global = true)]
    cg_tol: Option<f64>,
    /// Single worker thread.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Scale for single-scale commands (default: first entry of brush.epsilons).
    #[arg(long, global = true)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the tooth and every configured brush.
    Validate,
    /// Write the reference tooth mesh and the brush mesh.
    Mesh,
    /// Solve the Neumann problem on the brush.
    SolveDirect,
    /// Decompose the model tooth into its graph.
    Decompose,
    /// Solve the limit problem.
    SolveLimit,
    /// Unfold the direct solution and report the checks.
    UnfoldCheck,
    /// Run the epsilon sweep and write converge.csv.
    Converge,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.deterministic {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let path = cli.config.as_deref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(h) = cli.h_base {
        cfg.mesh.h_base = h;
    }
    if let Some(h) = cli.h_tooth {
        cfg.mesh.h_tooth = h;
    }
    if let Some(h) = cli.h_y {
        cfg.mesh.h_y = h;
    }
    if let Some(t) = cli.cg_tol {
        cfg.solver.cg_tol = t;
    }
    cfg.check()?;
    Ok(cfg)
}

fn scale(cli: &Cli, cfg: &RunConfig) -> Result<f64, Error> {
    match cli.eps {
        Some(e) if e > 0.0 => Ok(e),
        Some(e) => Err(Error::Config(format!("--eps must be positive, got {e}"))),
        None => cfg.brush.epsilons.first().copied().ok_or_else(|| Error::Config("brush.epsilons is empty".into())),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn opts(cfg: &RunConfig) -> CgOptions {
    CgOptions { tol: cfg.solver.cg_tol, max_iter: None }
}

fn brush_at(cli: &Cli, cfg: &RunConfig) -> Result<BrushMesh, Error> {
    let spec = cfg.build_spec(scale(cli, cfg)?)?;
    Ok(mesh_brush(&spec, cfg.mesh.params())?)
}

/// Exit code on success paths; a sweep with failing rows reports the first failure.
fn run(cli: &Cli) -> Result<u8, Error> {
    let cfg = load(cli)?;
    let out = cli.out.as_path();
    match cli.cmd {
        Cmd::Validate => {
            let tooth = cfg.tooth.build()?;
            tooth.validate()?;
            println!("tooth ok: |Y| = {:.6}, L = {}", tooth.area(), tooth.height);
            for &eps in &cfg.brush.epsilons {
                let spec = cfg.build_spec(eps)?;
                println!("eps {eps:e}: {} teeth, covered length {:.6}", spec.n_teeth(), spec.covered_length());
            }
        }
        Cmd::Mesh => {
            let brush = brush_at(cli, &cfg)?;
            brush.reference.mesh.write_text(create(out, "tooth_mesh.txt")?)?;
            brush.mesh.write_text(create(out, "mesh.txt")?)?;
            println!(
                "{} vertices, {} triangles, {} teeth",
                brush.mesh.n_vertices(),
                brush.mesh.triangles.len(),
                brush.spec.n_teeth()
            );
        }
        Cmd::SolveDirect => {
            let brush = brush_at(cli, &cfg)?;
            let (u, stats) = solve_direct(&brush, &cfg.source, opts(&cfg))?;
            u.write_text(create(out, "solution.txt")?)?;
            let e = source_pairing(&brush, &cfg.source, &u.values)?;
            println!("cg {} iterations, residual {:e}, energy {e:.12e}", stats.iterations, stats.residual);
        }
        Cmd::Decompose => {
            let tooth = cfg.tooth.build()?;
            let tm = mesh_tooth_reference_aniso(&tooth, cfg.mesh.h_tooth, cfg.mesh.h_y)?;
            let d = decompose(&tm)?;
            d.write_text(create(out, "graph.txt")?)?;
            d.write_p_table(create(out, "p_table.csv")?)?;
            println!("{} levels, {} edges, {} joints", d.levels.len(), d.edges.len(), d.joints.len());
        }
        Cmd::SolveLimit => {
            let brush = brush_at(cli, &cfg)?;
            let d = decompose(&brush.reference)?;
            let trace = brush_trace_nodes(&brush);
            let xs: Vec<f64> = trace.iter().map(|&v| brush.mesh.vertices[v][0]).collect();
            let theta = cfg.density(&brush.spec, &xs)?;
            theta.write_csv(create(out, "theta.csv")?)?;
            let lim = solve_limit_for_brush(&brush, &d, cfg.mesh.h_y, &theta, &cfg.source, opts(&cfg))?;
            lim.write_text(create(out, "limit.txt")?)?;
            let flux = lim.flux_residuals();
            println!(
                "cg {} iterations, energy {:.12e}, flux residuals joint {:e} top {:e} trace {:e}",
                lim.stats.iterations,
                lim.energy(),
                flux.joint,
                flux.top,
                flux.trace
            );
        }
        Cmd::UnfoldCheck => {
            let brush = brush_at(cli, &cfg)?;
            let (u, _) = solve_direct(&brush, &cfg.source, opts(&cfg))?;
            let unf = unfold(&brush, &u)?;
            unf.write_text(create(out, "unfolded.txt")?)?;
            let teeth_l2 = u.h1_norm_sq_subset(brush.tooth_triangles());
            let (_, gy) = unf.gradient_norms();
            let gx = unf.grad_x_norm();
            println!("trace mismatch {:e}", trace_compat(&brush, &u, &unf));
            println!("|tau u|^2 {:.12e}, |tau d_x u| {gx:.6e}, |tau d_y u| {gy:.6e}", unf.l2_norm_sq());
            println!("teeth H1 norm^2 {teeth_l2:.12e}, unfolded {:.12e}", unf.l2_norm_sq() + gx * gx + gy * gy);
        }
        Cmd::Converge => {
            let rows = run_convergence(&cfg);
            let mut w = create(out, "converge.csv")?;
            write_csv(&rows, &mut w)?;
            w.flush()?;
            let failed: Vec<_> = rows.iter().filter_map(|r| r.as_ref().err()).collect();
            for (eps, e) in &failed {
                eprintln!("eps {eps:e}: {e}");
            }
            println!("{} of {} rows ok", rows.len() - failed.len(), rows.len());
            if let Some((_, e)) = failed.first() {
                return Ok(e.exit_code() as u8);
            }
        }
    }
    Ok(0)
}
