//! Command-line front end: parse domain specs, run the
//! mesh → assemble → solve → analyze pipeline, and emit reports.
//!
//! Machine-readable results go to JSON files under the output
//! directory; human-readable tables go to stdout. Outputs carry no
//! timestamps, so identical configurations produce byte-identical
//! files. `HYPSPOTS_THREADS` caps the worker pool used by sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hypspots::analysis::{
    cutoff_rayleigh, ideal_polygon_sweep, interior_gradient_study, mixed_arc_experiment,
    solve_domain, verify_domain, write_contour_svg, AnalysisConfig,
};
use hypspots::domain::{DomainRegistry, DomainSpec};
use hypspots::eigen::{eigenvalue_convergence_study, SolverRegistry};
use hypspots::special::{disk_mu2, threshold_area, threshold_radius_with_tol};

#[derive(Parser)]
#[command(name = "hypspots", version, about = "Laplace spectra and hot-spots checks on hyperbolic domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Hyperbolic mesh size target.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Number of eigenpairs to compute.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Eigensolver residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Relative interior-gradient threshold for verdicts.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Eigensolver strategy (auto, dense, lanczos).
    #[arg(long, default_value = "auto")]
    solver: String,
    /// Output directory for JSON/VTK/SVG artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Write the mesh and eigenfunctions as legacy ASCII VTK.
    #[arg(long)]
    vtk: bool,
    /// Write eigenfunction contours as SVG.
    #[arg(long)]
    svg: bool,
    /// Skip writing the JSON report.
    #[arg(long)]
    no_json: bool,
}

impl RunOpts {
    fn validate(&self, neumann: bool) -> Result<(), String> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(format!("h must be positive, got {}", self.h));
        }
        if neumann && self.k < 2 {
            return Err(format!("k must be at least 2 for Neumann analyses, got {}", self.k));
        }
        if self.k < 1 {
            return Err("k must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(format!("tol must lie in (0, 1e-2], got {}", self.tol));
        }
        if !(self.tau > 0.0 && self.tau < 0.5) {
            return Err(format!("tau must lie in (0, 0.5), got {}", self.tau));
        }
        Ok(())
    }

    fn analysis_config(&self) -> AnalysisConfig {
        AnalysisConfig { tau: self.tau, ..AnalysisConfig::default() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the radius at which the disk's second Neumann eigenvalue
    /// is 1/4, and the corresponding area.
    Threshold {
        /// Root-refinement tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        no_json: bool,
    },
    /// Second Neumann eigenvalue of hyperbolic disks from the radial
    /// mode condition.
    Disk {
        /// Single radius.
        #[arg(long, conflicts_with = "radius_sweep")]
        radius: Option<f64>,
        /// Sweep a:b:step over radii.
        #[arg(long, value_name = "A:B:STEP")]
        radius_sweep: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        no_json: bool,
    },
    /// Mesh a domain spec and compute its low spectrum.
    Solve {
        /// Domain spec JSON file.
        #[arg(long)]
        domain: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Solve and scan an eigenfunction for hot-spots behaviour.
    Verify {
        #[arg(long)]
        domain: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
        /// Also run a 3-level refinement study of the interior gradient.
        #[arg(long)]
        study: bool,
    },
    /// Mixed problem with a shrinking Dirichlet arc.
    MixedSweep {
        #[arg(long)]
        domain: PathBuf,
        /// Longest arc length (hyperbolic); halved at every step.
        #[arg(long)]
        arc_start: f64,
        /// Number of halving steps.
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Second Neumann eigenvalue over truncated regular ideal polygons.
    IdealSweep {
        /// Vertex counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Truncation depths, comma separated.
        #[arg(long, value_delimiter = ',')]
        depth: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Energy and mass of the logarithmic cutoff against the closed
    /// form.
    Cutoff {
        #[arg(long)]
        domain: PathBuf,
        /// Cutoff parameters, comma separated.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Eigenvalue convergence study over a mesh-size sequence.
    Converge {
        #[arg(long)]
        domain: PathBuf,
        /// Mesh sizes, comma separated, coarse to fine.
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05])]
        h_levels: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("HYPSPOTS_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: invalid-config: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(err)) => {
            eprintln!("error: run-failed: {err}");
            ExitCode::FAILURE
        }
    }
}

enum CliError {
    Config(String),
    Run(anyhow::Error),
}

impl From<hypspots::Error> for CliError {
    fn from(e: hypspots::Error) -> Self {
        match e {
            hypspots::Error::SpecValidation(_)
            | hypspots::Error::InvalidConfig(_)
            | hypspots::Error::UnknownStrategy { .. }
            | hypspots::Error::DomainError(_) => CliError::Config(e.to_string()),
            other => CliError::Run(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Run(e)
    }
}

fn load_spec(path: &Path) -> Result<DomainSpec, CliError> {
    let registry = DomainRegistry::with_builtin();
    registry.load_file(path).map_err(CliError::from)
}

fn write_json(dir: &Path, name: &str, doc: &serde_json::Value) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Run(e.into()))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Run(e.into()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Run(e.into()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn meta(command: &str, config: serde_json::Value) -> serde_json::Value {
    json!({
        "tool": "hypspots",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Threshold { tol, out, no_json } => {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(CliError::Config(format!("tol must lie in (0, 1e-2], got {tol}")));
            }
            let r0 = threshold_radius_with_tol(tol)?;
            let area = threshold_area()?;
            println!("r0={r0:.9} A={area:.6}");
            if !no_json {
                let doc = json!({
                    "meta": meta("threshold", json!({ "tol": tol })),
                    "result": { "r0": r0, "area": area },
                });
                write_json(&out, "threshold.json", &doc)?;
            }
            Ok(())
        }
        Command::Disk { radius, radius_sweep, out, no_json } => {
            let radii: Vec<f64> = if let Some(r) = radius {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(CliError::Config(format!("radius must be positive, got {r}")));
                }
                vec![r]
            } else if let Some(sweep) = &radius_sweep {
                parse_sweep(sweep).map_err(CliError::Config)?
            } else {
                return Err(CliError::Config("pass --radius or --radius-sweep".into()));
            };
            println!("{:>10}  {:>14}", "R", "mu2");
            let mut rows = Vec::new();
            for &r in &radii {
                let mu = disk_mu2(r)?;
                println!("{r:>10.4}  {mu:>14.9}");
                rows.push(json!({ "radius": r, "mu2": mu }));
            }
            if !no_json {
                let doc = json!({
                    "meta": meta("disk", json!({ "radii": radii })),
                    "result": rows,
                });
                write_json(&out, "disk.json", &doc)?;
            }
            Ok(())
        }
        Command::Solve { domain, opts } => {
            let spec = load_spec(&domain)?;
            let neumann = spec.dirichlet_arc().is_none();
            opts.validate(neumann).map_err(CliError::Config)?;
            let solvers = SolverRegistry::with_builtin();
            let solver = solvers.get(&opts.solver)?;
            let sol = solve_domain(&spec, opts.h, opts.k, opts.tol, solver)?;
            println!(
                "mesh: {} vertices, {} triangles, area {:.6}, min angle {:.2} deg",
                sol.mesh.num_vertices(),
                sol.mesh.num_triangles(),
                sol.mesh.hyperbolic_area(),
                sol.mesh.min_angle_deg()
            );
            println!("{:>4}  {:>16}  {:>12}", "i", "eigenvalue", "residual");
            for i in 0..sol.pairs.len() {
                println!("{:>4}  {:>16.10}  {:>12.3e}", i + 1, sol.pairs.values[i], sol.pairs.residuals[i]);
            }
            let stem = domain.file_stem().and_then(|s| s.to_str()).unwrap_or("domain");
            if !opts.no_json {
                let doc = json!({
                    "meta": meta("solve", json!({
                        "domain": spec.to_json(),
                        "h": opts.h, "k": opts.k, "tol": opts.tol, "solver": opts.solver,
                    })),
                    "result": {
                        "eigenvalues": sol.pairs.values,
                        "residuals": sol.pairs.residuals,
                        "free_dofs": sol.dofs.num_free(),
                        "constrained_dofs": sol.dofs.num_constrained(),
                        "mesh": {
                            "vertices": sol.mesh.num_vertices(),
                            "triangles": sol.mesh.num_triangles(),
                            "hyperbolic_area": sol.mesh.hyperbolic_area(),
                            "min_angle_deg": sol.mesh.min_angle_deg(),
                        },
                    },
                });
                write_json(&opts.out, &format!("{stem}_solve.json"), &doc)?;
            }
            if opts.vtk {
                export_vtk(&opts.out, stem, &sol)?;
            }
            if opts.svg {
                export_svg(&opts.out, stem, &sol, if neumann { 1 } else { 0 })?;
            }
            Ok(())
        }
        Command::Verify { domain, opts, study } => {
            let spec = load_spec(&domain)?;
            let neumann = spec.dirichlet_arc().is_none();
            opts.validate(neumann).map_err(CliError::Config)?;
            let solvers = SolverRegistry::with_builtin();
            let solver = solvers.get(&opts.solver)?;
            let cfg = opts.analysis_config();
            let (report, sol) = verify_domain(&spec, opts.h, &cfg, opts.tol, solver)?;
            println!(
                "verdict: {}",
                match report.verdict {
                    hypspots::analysis::Verdict::Consistent => "consistent",
                    hypspots::analysis::Verdict::ViolationCandidate => "violation-candidate",
                    hypspots::analysis::Verdict::HypothesesNotMet => "hypotheses-not-met",
                }
            );
            println!(
                "eigenvalue {:.8}  extrema boundary distances {:.4} / {:.4}  interior |grad| rel {:.4}  nodal domains {}",
                report.eigenvalue,
                report.max_boundary_distance,
                report.min_boundary_distance,
                report.interior_grad_min_rel,
                report.nodal_domain_count
            );
            let stem = domain.file_stem().and_then(|s| s.to_str()).unwrap_or("domain");
            let study_rows = if study {
                let hs = [opts.h * 2.0, opts.h, opts.h / 2.0];
                let rows = interior_gradient_study(&spec, &hs, &cfg, opts.tol, solver)?;
                for row in &rows {
                    println!("study h={:<8.4} interior |grad| rel {:.4}", row.h, row.interior_grad_min_rel);
                }
                Some(rows)
            } else {
                None
            };
            if !opts.no_json {
                let doc = json!({
                    "meta": meta("verify", json!({
                        "domain": spec.to_json(),
                        "h": opts.h, "tol": opts.tol, "tau": opts.tau, "solver": opts.solver,
                    })),
                    "result": { "report": report, "study": study_rows },
                });
                write_json(&opts.out, &format!("{stem}_verify.json"), &doc)?;
            }
            if opts.vtk {
                export_vtk(&opts.out, stem, &sol)?;
            }
            if opts.svg {
                export_svg(&opts.out, stem, &sol, report.which - 1)?;
            }
            Ok(())
        }
        Command::MixedSweep { domain, arc_start, steps, opts } => {
            let spec = load_spec(&domain)?;
            opts.validate(false).map_err(CliError::Config)?;
            if !(arc_start > 0.0) || steps == 0 {
                return Err(CliError::Config("arc-start must be positive and steps >= 1".into()));
            }
            let arcs: Vec<f64> = (0..steps).map(|i| arc_start / 2f64.powi(i as i32)).collect();
            let solvers = SolverRegistry::with_builtin();
            let solver = solvers.get(&opts.solver)?;
            let cfg = opts.analysis_config();
            let rows = mixed_arc_experiment(&spec, &arcs, opts.h, &cfg, opts.tol, solver)?;
            println!("{:>12}  {:>14}  {:>20}", "arc length", "lambda1", "verdict");
            for row in &rows {
                println!(
                    "{:>12.5}  {:>14.9}  {:>20}",
                    row.arc_length,
                    row.lambda1,
                    format!("{:?}", row.report.verdict)
                );
            }
            if !opts.no_json {
                let doc = json!({
                    "meta": meta("mixed-sweep", json!({
                        "domain": spec.to_json(),
                        "arcs": arcs, "h": opts.h, "tol": opts.tol, "tau": opts.tau,
                    })),
                    "result": rows,
                });
                write_json(&opts.out, "mixed_sweep.json", &doc)?;
            }
            Ok(())
        }
        Command::IdealSweep { n, depth, opts } => {
            opts.validate(true).map_err(CliError::Config)?;
            if n.is_empty() || depth.is_empty() {
                return Err(CliError::Config("pass at least one --n and one --depth".into()));
            }
            let solvers = SolverRegistry::with_builtin();
            let solver = solvers.get(&opts.solver)?;
            let rows = ideal_polygon_sweep(&n, &depth, opts.h, opts.tol, solver)?;
            println!("{:>4}  {:>7}  {:>14}  {:>10}  {:>12}", "n", "depth", "mu2", "dofs", "area");
            for row in &rows {
                println!(
                    "{:>4}  {:>7.2}  {:>14.9}  {:>10}  {:>12.5}",
                    row.n, row.depth, row.mu2, row.free_dofs, row.mesh_area
                );
            }
            if !opts.no_json {
                let doc = json!({
                    "meta": meta("ideal-sweep", json!({
                        "n": n, "depth": depth, "h": opts.h, "tol": opts.tol,
                    })),
                    "result": rows,
                });
                write_json(&opts.out, "ideal_sweep.json", &doc)?;
            }
            Ok(())
        }
        Command::Cutoff { domain, eps, opts } => {
            let spec = load_spec(&domain)?;
            opts.validate(false).map_err(CliError::Config)?;
            if eps.is_empty() {
                return Err(CliError::Config("pass at least one --eps".into()));
            }
            println!("{:>10}  {:>12}  {:>12}  {:>12}", "eps", "energy", "closed form", "mass");
            let mut rows = Vec::new();
            for &e in &eps {
                let row = cutoff_rayleigh(e, &spec, opts.h)?;
                println!(
                    "{:>10.2e}  {:>12.6}  {:>12.6}  {:>12.6}",
                    e, row.energy, row.closed_form_energy, row.mass
                );
                rows.push(row);
            }
            if !opts.no_json {
                let doc = json!({
                    "meta": meta("cutoff", json!({
                        "domain": spec.to_json(), "eps": eps, "h": opts.h,
                    })),
                    "result": rows,
                });
                write_json(&opts.out, "cutoff.json", &doc)?;
            }
            Ok(())
        }
        Command::Converge { domain, h_levels, opts } => {
            let spec = load_spec(&domain)?;
            opts.validate(false).map_err(CliError::Config)?;
            if h_levels.len() < 3 {
                return Err(CliError::Config("need at least 3 h levels".into()));
            }
            let study = eigenvalue_convergence_study(&spec, &h_levels, opts.tol)?;
            println!("{:>8}  {:>10}  {:>16}", "h", "dofs", "eigenvalue");
            for l in &study.levels {
                println!("{:>8.4}  {:>10}  {:>16.10}", l.h, l.free_dofs, l.eigenvalue);
            }
            println!("extrapolated {:.10}  empirical order {:.3}", study.extrapolated, study.order);
            if !opts.no_json {
                let doc = json!({
                    "meta": meta("converge", json!({
                        "domain": spec.to_json(), "h_levels": h_levels, "tol": opts.tol,
                    })),
                    "result": study,
                });
                write_json(&opts.out, "converge.json", &doc)?;
            }
            Ok(())
        }
    }
}

fn parse_sweep(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("sweep must be A:B:STEP, got '{text}'"));
    }
    let a: f64 = parts[0].parse().map_err(|_| format!("bad sweep start '{}'", parts[0]))?;
    let b: f64 = parts[1].parse().map_err(|_| format!("bad sweep end '{}'", parts[1]))?;
    let step: f64 = parts[2].parse().map_err(|_| format!("bad sweep step '{}'", parts[2]))?;
    if !(a > 0.0 && b >= a && step > 0.0) {
        return Err(format!("sweep must satisfy 0 < A <= B with STEP > 0, got '{text}'"));
    }
    let mut radii = Vec::new();
    let mut r = a;
    while r <= b + 1e-12 {
        radii.push(r);
        r += step;
    }
    Ok(radii)
}

fn export_vtk(dir: &Path, stem: &str, sol: &hypspots::analysis::Solution) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Run(e.into()))?;
    let path = dir.join(format!("{stem}.vtk"));
    let mut buf = Vec::new();
    let named: Vec<(String, &[f64])> = sol
        .pairs
        .vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("u{}", i + 1), v.as_slice()))
        .collect();
    let fields: Vec<(&str, &[f64])> = named.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    sol.mesh.write_vtk(&mut buf, &fields).map_err(CliError::from)?;
    std::fs::write(&path, buf).map_err(|e| CliError::Run(e.into()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn export_svg(
    dir: &Path,
    stem: &str,
    sol: &hypspots::analysis::Solution,
    index: usize,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Run(e.into()))?;
    let path = dir.join(format!("{stem}.svg"));
    let mut buf = Vec::new();
    let u = sol
        .pairs
        .vectors
        .get(index)
        .ok_or_else(|| CliError::Config(format!("eigenfunction {index} not computed")))?;
    write_contour_svg(&mut buf, &sol.mesh, u, 9).map_err(CliError::from)?;
    std::fs::write(&path, buf).map_err(|e| CliError::Run(e.into()))?;
    println!("wrote {}", path.display());
    Ok(())
}
