//! Command-line front end for the de Sitter graph toolkit.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use desitter::estimates::{estimate_report, nonexistence_certificate};
use desitter::geometry::GraphFunction;
use desitter::grid::io::{read_scalar, write_fields};
use desitter::grid::{AtlasParams, Chart, ScalarField};
use desitter::preset::Preset;
use desitter::report::{to_json, write_json};
use desitter::solver::{
    default_initial_guess, lorentz_normalize, solve_axisymmetric, solve_sigma2, two_p2, AxisymConfig, RoundProfile,
};
use desitter::verify::refinement_study;
use desitter::{Atlas, Error, SurfaceGeometry};

pub use config::{parse_config, Basepoint, Command, ConfigError, Entries, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "desitter", version, about = "Spacelike graphs in de Sitter space: geometry, estimates, solvers")]
struct Cli {
    /// Configuration file (`key = value` lines, `[solver]`/`[axisym]` sections)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; beats DESITTER_OUT and the config file
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Dump the full surface geometry of a graph
    Geometry(Opts),
    /// Identity residuals and convergence slopes across resolutions
    Verify(Opts),
    /// Curvature window, mean curvature bound and tilt bound
    Estimate(Opts),
    /// Nonexistence certificate for a round target sphere
    Nonexist(Opts),
    /// Solve 2P2 = psi by damped Newton
    Solve(Opts),
    /// Embed a round sphere of radius r by axisymmetric shooting
    Axisym(Opts),
    /// Lorentz-normalize a graph at a basepoint
    Normalize(Opts),
}

impl Sub {
    fn split(self) -> (Command, Opts) {
        match self {
            Sub::Geometry(o) => (Command::Geometry, o),
            Sub::Verify(o) => (Command::Verify, o),
            Sub::Estimate(o) => (Command::Estimate, o),
            Sub::Nonexist(o) => (Command::Nonexist, o),
            Sub::Solve(o) => (Command::Solve, o),
            Sub::Axisym(o) => (Command::Axisym, o),
            Sub::Normalize(o) => (Command::Normalize, o),
        }
    }
}

#[derive(Args, Debug, Default)]
struct Opts {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    /// Comma-separated ascending resolutions
    #[arg(long = "res")]
    res: Option<String>,
    /// Finite-difference order (2 or 4)
    #[arg(long)]
    order: Option<usize>,
    /// Graph preset, e.g. constant:0.5, equator, bump:0.3,0.1, random:7,0.1,3
    #[arg(long)]
    preset: Option<String>,
    /// CSV dump to read the graph from
    #[arg(long)]
    input: Option<PathBuf>,
    /// Column of --input / --init-input holding u
    #[arg(long)]
    column: Option<String>,
    /// Prescribed psi: a preset, or manufactured:<preset>
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    psi_input: Option<PathBuf>,
    /// Initial guess preset for solve
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    init_input: Option<PathBuf>,
    /// Radius of the round target sphere
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    /// `center` or a node index
    #[arg(long)]
    basepoint: Option<String>,
    /// Comma-separated identity suites, or `all`
    #[arg(long)]
    suite: Option<String>,
    /// Skip Lorentz normalization in `estimate`
    #[arg(long)]
    no_normalize: bool,
    /// Newton or shooting tolerance
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// RK4 steps per half meridian
    #[arg(long)]
    steps: Option<usize>,
}

impl Opts {
    fn apply(self, cmd: Command, e: &mut Entries) {
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                e.set(k, v);
            }
        };
        put("command", Some(cmd.name().to_string()));
        put("n", self.n.map(|v| v.to_string()));
        put("rho", self.rho);
        put("resolutions", self.res);
        put("order", self.order.map(|v| v.to_string()));
        put("preset", self.preset);
        put("input", self.input.map(|p| p.display().to_string()));
        put("column", self.column);
        put("psi", self.psi);
        put("psi_input", self.psi_input.map(|p| p.display().to_string()));
        put("init", self.init);
        put("init_input", self.init_input.map(|p| p.display().to_string()));
        put("r", self.r);
        put("basepoint", self.basepoint);
        put("suite", self.suite);
        if self.no_normalize {
            put("normalize", Some("false".into()));
        }
        let tol_key = if cmd == Command::Axisym { "axisym.tolerance" } else { "solver.tolerance" };
        put(tol_key, self.tol);
        put("solver.max_iterations", self.max_iter.map(|v| v.to_string()));
        put("axisym.steps", self.steps.map(|v| v.to_string()));
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_hypothesis() {
        return EXIT_HYPOTHESIS;
    }
    match e {
        Error::NonConvergence { .. } | Error::Linear(_) => EXIT_NONCONVERGENCE,
        _ => EXIT_USAGE,
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    atlas: Vec<AtlasParams>,
    artifacts: Vec<String>,
    status: &'static str,
    exit_code: i32,
    error: Option<String>,
}

/// What a command hands back: the stdout summary, the files it wrote and
/// the atlases it used.
struct Outcome {
    summary: Value,
    artifacts: Vec<String>,
    atlas: Vec<AtlasParams>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match resolve(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    execute(&cfg)
}

fn resolve(cli: Cli) -> Result<RunConfig, String> {
    let mut entries = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Entries::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Entries::default(),
    };
    if let Some(sub) = cli.command {
        let (cmd, opts) = sub.split();
        opts.apply(cmd, &mut entries);
    }
    entries.resolve(cli.out).map_err(|e| e.to_string())
}

/// Runs a resolved configuration, writing artifacts and the manifest.
pub fn execute(cfg: &RunConfig) -> i32 {
    if let Err(e) = fs::create_dir_all(&cfg.output) {
        eprintln!("error: cannot create {}: {e}", cfg.output.display());
        return EXIT_USAGE;
    }
    let result = match cfg.command {
        Command::Geometry => geometry(cfg),
        Command::Verify => verify(cfg),
        Command::Estimate => estimate(cfg),
        Command::Nonexist => nonexist(cfg),
        Command::Solve => solve(cfg),
        Command::Axisym => axisym(cfg),
        Command::Normalize => normalize(cfg),
    };
    let (code, outcome, error) = match result {
        Ok(o) => (EXIT_OK, Some(o), None),
        Err(e) => (exit_code(&e), None, Some(e.to_string())),
    };
    let manifest = Manifest {
        tool: "desitter",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.name(),
        config: cfg,
        atlas: outcome.as_ref().map(|o| o.atlas.clone()).unwrap_or_default(),
        artifacts: outcome.as_ref().map(|o| o.artifacts.clone()).unwrap_or_default(),
        status: if code == EXIT_OK { "ok" } else { "error" },
        exit_code: code,
        error: error.clone(),
    };
    if let Err(e) = write_json(&cfg.output.join("manifest.json"), &manifest) {
        eprintln!("error: writing manifest: {e}");
        return EXIT_USAGE;
    }
    match (outcome, error) {
        (Some(o), _) => match to_json(&o.summary) {
            Ok(s) => {
                print!("{s}");
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        },
        (None, Some(msg)) => {
            eprintln!("error: {msg}");
            code
        }
        (None, None) => unreachable!(),
    }
}

fn preset(s: &str) -> desitter::Result<Preset> {
    s.parse()
}

fn atlas(cfg: &RunConfig) -> desitter::Result<Atlas> {
    Atlas::with_order(cfg.n, cfg.resolution(), cfg.order)
}

/// The input graph: a preset or a CSV dump.
fn load_graph(cfg: &RunConfig, atlas: &Atlas) -> desitter::Result<GraphFunction> {
    match (&cfg.preset, &cfg.input) {
        (Some(p), _) => GraphFunction::from_preset(atlas, &preset(p)?, cfg.rho),
        (None, Some(path)) => GraphFunction::new(read_scalar(path, atlas, &cfg.column)?, cfg.rho),
        (None, None) => Err(Error::Config("no graph given".into())),
    }
}

fn basepoint(cfg: &RunConfig, atlas: &Atlas) -> desitter::Result<usize> {
    match cfg.basepoint {
        Basepoint::Node(q) if q < atlas.len() => Ok(q),
        Basepoint::Node(q) => Err(Error::IndexOutOfRange {
            what: "basepoint",
            index: q,
            limit: atlas.len(),
        }),
        Basepoint::Center => {
            // north chart node closest to the pole
            let n = atlas.n;
            let best = (0..atlas.nodes_per_chart())
                .map(|k| atlas.node_index(Chart::North, k))
                .max_by(|&a, &b| atlas.sphere_point(a)[n].total_cmp(&atlas.sphere_point(b)[n]))
                .expect("non-empty chart");
            Ok(best)
        }
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn support_extent(atlas: &Atlas, f: &ScalarField) -> (f64, f64) {
    atlas
        .support()
        .map(|q| f.values[q])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn write_geometry(path: &Path, atlas: &Atlas, s: &SurfaceGeometry) -> desitter::Result<()> {
    let psi = desitter::estimates::psi(&s.scalar_curvature, s.rho, s.n);
    write_fields(
        path,
        atlas,
        &[
            ("u", &s.jet.u),
            ("tau", &s.tau),
            ("eta", &s.eta),
            ("H", &s.h),
            ("normA2", &s.norm_a2),
            ("R", &s.scalar_curvature),
            ("psi", &psi),
            ("margin", &s.margin),
            ("lambda", &s.lambda),
            ("g", &s.g),
            ("A", &s.a),
        ],
    )
}

fn geometry(cfg: &RunConfig) -> desitter::Result<Outcome> {
    let atlas = atlas(cfg)?;
    let f = load_graph(cfg, &atlas)?;
    let s = SurfaceGeometry::new(&atlas, &f)?;
    let path = cfg.output.join("geometry.csv");
    write_geometry(&path, &atlas, &s)?;
    let (tau_min, tau_max) = support_extent(&atlas, &s.tau);
    let (r_min, r_max) = support_extent(&atlas, &s.scalar_curvature);
    let (h_min, h_max) = support_extent(&atlas, &s.h);
    Ok(Outcome {
        summary: json!({
            "command": "geometry",
            "nodes": atlas.len(),
            "tau": [tau_min, tau_max],
            "H": [h_min, h_max],
            "R": [r_min, r_max],
            "frame_defect": s.frame_defect(),
            "output": path_str(&path),
        }),
        artifacts: vec![path_str(&path)],
        atlas: vec![atlas.params()],
    })
}

fn verify(cfg: &RunConfig) -> desitter::Result<Outcome> {
    let p = preset(cfg.preset.as_deref().unwrap_or_default())?;
    let reports = refinement_study(&p, cfg.rho, cfg.n, &cfg.resolutions, cfg.order, &cfg.suites)?;
    let path = cfg.output.join("residuals.json");
    let body = json!({ "preset": p.to_string(), "rho": cfg.rho, "n": cfg.n, "reports": reports });
    write_json(&path, &body)?;
    let atlas: desitter::Result<Vec<AtlasParams>> =
        cfg.resolutions.iter().map(|&r| Atlas::with_order(cfg.n, r, cfg.order).map(|a| a.params())).collect();
    let slopes: serde_json::Map<String, Value> =
        reports.iter().map(|r| (r.identity.clone(), json!(r.slope))).collect();
    Ok(Outcome {
        summary: json!({
            "command": "verify",
            "identities": reports.len(),
            "monotone": reports.iter().all(|r| r.monotone_decreasing()),
            "slopes": slopes,
            "output": path_str(&path),
        }),
        artifacts: vec![path_str(&path)],
        atlas: atlas?,
    })
}

fn estimate(cfg: &RunConfig) -> desitter::Result<Outcome> {
    let atlas = atlas(cfg)?;
    let f = load_graph(cfg, &atlas)?;
    let s = SurfaceGeometry::new(&atlas, &f)?;
    let original = estimate_report(&atlas, &s, None)?;
    let mut artifacts = Vec::new();
    let normalized = if cfg.normalize {
        let p = basepoint(cfg, &atlas)?;
        let norm = lorentz_normalize(&atlas, &f, p)?;
        let s2 = SurfaceGeometry::new(&atlas, &norm.f)?;
        let report = estimate_report(&atlas, &s2, Some(p))?;
        Some(json!({ "normalization": norm.report, "report": report }))
    } else {
        None
    };
    let path = cfg.output.join("estimates.json");
    write_json(&path, &json!({ "original": original, "normalized": normalized }))?;
    artifacts.push(path_str(&path));
    let tilt_holds = normalized
        .as_ref()
        .and_then(|v| v["report"]["tilt"]["holds"].as_bool());
    Ok(Outcome {
        summary: json!({
            "command": "estimate",
            "verdict": original.verdict,
            "window": original.window.holds,
            "admissible": original.admissible,
            "mean_curvature_holds": original.mean_curvature.as_ref().map(|m| m.holds),
            "tilt_holds": tilt_holds,
            "notes": original.notes,
            "output": path_str(&path),
        }),
        artifacts,
        atlas: vec![atlas.params()],
    })
}

fn nonexist(cfg: &RunConfig) -> desitter::Result<Outcome> {
    let r = cfg.r.expect("validated");
    let cert = nonexistence_certificate(r, cfg.rho, cfg.n)?;
    let path = cfg.output.join("certificate.json");
    write_json(&path, &cert)?;
    let mut summary = serde_json::to_value(&cert)?;
    summary["command"] = json!("nonexist");
    summary["output"] = json!(path_str(&path));
    Ok(Outcome {
        summary,
        artifacts: vec![path_str(&path)],
        atlas: Vec::new(),
    })
}

/// ψ on the atlas from a preset, `manufactured:<preset>` (2P₂ of that graph)
/// or a CSV column.
fn load_psi(cfg: &RunConfig, atlas: &Atlas) -> desitter::Result<ScalarField> {
    if let Some(path) = &cfg.psi_input {
        return read_scalar(path, atlas, "psi");
    }
    let spec = cfg.psi.as_deref().unwrap_or_default();
    match spec.strip_prefix("manufactured:") {
        Some(rest) => Ok(two_p2(atlas, &preset(rest)?.jet(atlas), cfg.rho)),
        None => Ok(preset(spec)?.sample(atlas)),
    }
}

fn solve(cfg: &RunConfig) -> desitter::Result<Outcome> {
    let atlas = atlas(cfg)?;
    let psi = load_psi(cfg, &atlas)?;
    let u0 = match (&cfg.init, &cfg.init_input) {
        (Some(p), _) => GraphFunction::from_preset(&atlas, &preset(p)?, cfg.rho)?,
        (None, Some(path)) => GraphFunction::new(read_scalar(path, &atlas, &cfg.column)?, cfg.rho)?,
        (None, None) => default_initial_guess(&atlas, &psi, cfg.rho)?,
    };
    let sol = solve_sigma2(&atlas, &psi, cfg.rho, &u0, &cfg.solver)?;
    let csv = cfg.output.join("solution.csv");
    write_fields(&csv, &atlas, &[("u", &sol.state.u), ("psi", &psi), ("residual", &sol.state.residual)])?;
    let hist = cfg.output.join("history.json");
    write_json(&hist, &sol.state.history)?;
    let (u_min, u_max) = support_extent(&atlas, &sol.state.u);
    let last = sol.state.history.last().expect("history has the initial guess");
    Ok(Outcome {
        summary: json!({
            "command": "solve",
            "converged": true,
            "iterations": sol.state.history.len() - 1,
            "residual_inf": last.residual_inf,
            "u": [u_min, u_max],
            "minP2": last.min_p2,
            "min_ellipticity": last.min_ellipticity,
            "output": path_str(&csv),
        }),
        artifacts: vec![path_str(&csv), path_str(&hist)],
        atlas: vec![atlas.params()],
    })
}

fn axisym(cfg: &RunConfig) -> desitter::Result<Outcome> {
    let a = &cfg.axisym;
    let ac = AxisymConfig {
        steps: a.steps,
        tolerance: a.tolerance,
        max_secant: a.max_secant,
        pole_offset: a.pole_offset,
    };
    let sol = solve_axisymmetric(&RoundProfile { r: cfg.r.expect("validated") }, cfg.rho, &ac)?;
    let csv = cfg.output.join("meridian.csv");
    let mut w = csv::Writer::from_path(&csv).map_err(Error::from)?;
    w.write_record(["s", "u", "theta", "beta", "eta"]).map_err(Error::from)?;
    let m = &sol.meridian;
    for k in 0..m.s.len() {
        let row = [m.s[k], m.u[k], m.theta[k], m.beta[k], m.eta[k]].map(|v| format!("{v:.16e}"));
        w.write_record(&row).map_err(Error::from)?;
    }
    w.flush()?;
    let js = cfg.output.join("axisym.json");
    let body = json!({
        "r": cfg.r,
        "rho": sol.rho,
        "pole_height": sol.pole_height,
        "closure_defect": sol.closure_defect,
        "constraint_defect": sol.constraint_defect,
        "secant_iterations": sol.secant_iterations,
        "u_range": [
            m.u.iter().copied().fold(f64::INFINITY, f64::min),
            m.u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ],
    });
    write_json(&js, &body)?;
    let mut summary = body;
    summary["command"] = json!("axisym");
    summary["output"] = json!(path_str(&csv));
    Ok(Outcome {
        summary,
        artifacts: vec![path_str(&csv), path_str(&js)],
        atlas: Vec::new(),
    })
}

fn normalize(cfg: &RunConfig) -> desitter::Result<Outcome> {
    let atlas = atlas(cfg)?;
    let f = load_graph(cfg, &atlas)?;
    let p = basepoint(cfg, &atlas)?;
    let norm = lorentz_normalize(&atlas, &f, p)?;
    let csv = cfg.output.join("normalized.csv");
    write_fields(&csv, &atlas, &[("u", &norm.f.u)])?;
    let js = cfg.output.join("normalize.json");
    write_json(&js, &norm.report)?;
    let r = &norm.report;
    Ok(Outcome {
        summary: json!({
            "command": "normalize",
            "basepoint": r.basepoint,
            "rapidity": r.rapidity,
            "tau_before": r.tau_before,
            "tau_after": r.tau_after,
            "eta_after": r.eta_after,
            "output": path_str(&csv),
        }),
        artifacts: vec![path_str(&csv), path_str(&js)],
        atlas: vec![atlas.params()],
    })
}
