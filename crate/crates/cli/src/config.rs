//! Run configuration: `key = value` files with `[section]` headers, merged
//! with command-line overrides and validated in one place.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use desitter::preset::Preset;
use desitter::solver::SolverConfig;
use desitter::verify::Suite;

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "DESITTER_OUT";
pub const DEFAULT_OUT: &str = "desitter-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Geometry,
    Verify,
    Estimate,
    Nonexist,
    Solve,
    Axisym,
    Normalize,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Geometry,
        Command::Verify,
        Command::Estimate,
        Command::Nonexist,
        Command::Solve,
        Command::Axisym,
        Command::Normalize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Geometry => "geometry",
            Command::Verify => "verify",
            Command::Estimate => "estimate",
            Command::Nonexist => "nonexist",
            Command::Solve => "solve",
            Command::Axisym => "axisym",
            Command::Normalize => "normalize",
        }
    }

    fn uses_surface(self) -> bool {
        matches!(self, Command::Geometry | Command::Verify | Command::Estimate | Command::Normalize)
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basepoint {
    /// Center of the north chart.
    Center,
    Node(usize),
}

impl FromStr for Basepoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "center" {
            return Ok(Basepoint::Center);
        }
        s.parse().map(Basepoint::Node).map_err(|_| format!("basepoint must be `center` or a node index, got `{s}`"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisymSettings {
    pub steps: usize,
    pub tolerance: f64,
    pub max_secant: usize,
    pub pole_offset: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub rho: f64,
    pub resolutions: Vec<usize>,
    pub order: usize,
    pub preset: Option<String>,
    pub input: Option<PathBuf>,
    pub column: String,
    pub psi: Option<String>,
    pub psi_input: Option<PathBuf>,
    pub init: Option<String>,
    pub init_input: Option<PathBuf>,
    pub r: Option<f64>,
    pub basepoint: Basepoint,
    pub suites: Vec<Suite>,
    pub normalize: bool,
    pub solver: SolverConfig,
    pub axisym: AxisymSettings,
    pub output: PathBuf,
}

impl RunConfig {
    /// Finest requested resolution; used by every command except `verify`.
    pub fn resolution(&self) -> usize {
        *self.resolutions.last().expect("validated non-empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed line in a configuration file.
    Parse { line: usize, message: String },
    /// Configuration is well formed but violates constraints.
    Invalid(Vec<String>),
    /// Nothing says which command to run.
    MissingCommand,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Invalid(v) => write!(f, "{}", v.join("; ")),
            ConfigError::MissingCommand => write!(f, "no command given (expected one of geometry, verify, estimate, nonexist, solve, axisym, normalize)"),
        }
    }
}

impl std::error::Error for ConfigError {}

const TOP_KEYS: &[&str] = &[
    "command", "n", "rho", "resolution", "resolutions", "order", "preset", "input", "column", "psi", "psi_input",
    "init", "init_input", "r", "basepoint", "suite", "normalize", "output",
];
const SOLVER_KEYS: &[&str] = &[
    "max_iterations", "tolerance", "max_step", "armijo", "backtrack", "min_damping", "admissibility_margin",
    "spacelike_floor", "linear_tolerance",
];
const AXISYM_KEYS: &[&str] = &["steps", "tolerance", "max_secant", "pole_offset"];

/// Raw settings: qualified key → (value, source line if from a file).
#[derive(Debug, Clone, Default)]
pub struct Entries(BTreeMap<String, (String, Option<usize>)>);

fn known(key: &str) -> bool {
    match key.split_once('.') {
        None => TOP_KEYS.contains(&key),
        Some(("solver", k)) => SOLVER_KEYS.contains(&k),
        Some(("axisym", k)) => AXISYM_KEYS.contains(&k),
        _ => false,
    }
}

impl Entries {
    /// Reads `key = value` lines. `#` starts a comment; `[solver]` and
    /// `[axisym]` open sections.
    pub fn parse(text: &str) -> Result<Entries, ConfigError> {
        let mut out = Entries::default();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let err = |message: String| ConfigError::Parse { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?.trim();
                if !matches!(name, "solver" | "axisym") {
                    return Err(err(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(err("empty key or value".into()));
            }
            let full = match &section {
                Some(s) => format!("{s}.{key}"),
                None => key.to_string(),
            };
            if !known(&full) {
                return Err(err(format!("unknown key `{full}`")));
            }
            if out.0.contains_key(&full) {
                return Err(err(format!("duplicate key `{full}`")));
            }
            out.0.insert(full, (value.to_string(), Some(line)));
        }
        Ok(out)
    }

    /// Command-line value; replaces any file entry.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(known(key), "{key}");
        self.0.insert(key.to_string(), (value.into(), None));
    }

    fn get(&self, key: &str) -> Option<&(String, Option<usize>)> {
        self.0.get(key)
    }

    /// Typed resolution with every violation collected.
    pub fn resolve(&self, out_override: Option<PathBuf>) -> Result<RunConfig, ConfigError> {
        let mut errs: Vec<String> = Vec::new();
        let whence = |line: &Option<usize>| line.map(|l| format!(" (line {l})")).unwrap_or_default();
        macro_rules! typed {
            ($key:expr, $ty:ty, $default:expr) => {
                match self.get($key) {
                    None => $default,
                    Some((v, line)) => match v.parse::<$ty>() {
                        Ok(x) => x,
                        Err(_) => {
                            errs.push(format!("{} has invalid value `{v}`{}", $key, whence(line)));
                            $default
                        }
                    },
                }
            };
        }
        let string = |key: &str| self.get(key).map(|(v, _)| v.clone());

        let command = match self.get("command") {
            None => return Err(ConfigError::MissingCommand),
            Some((v, line)) => match v.parse::<Command>() {
                Ok(c) => c,
                Err(e) => {
                    return Err(ConfigError::Invalid(vec![format!("{e}{}", whence(line))]));
                }
            },
        };
        let n = typed!("n", usize, 2);
        let rho = typed!("rho", f64, 1.0);
        let order = typed!("order", usize, 4);
        let r: Option<f64> = match self.get("r") {
            None => None,
            Some((v, line)) => match v.parse() {
                Ok(x) => Some(x),
                Err(_) => {
                    errs.push(format!("r has invalid value `{v}`{}", whence(line)));
                    None
                }
            },
        };
        let basepoint = match self.get("basepoint") {
            None => Basepoint::Center,
            Some((v, line)) => v.parse().unwrap_or_else(|e| {
                errs.push(format!("{e}{}", whence(line)));
                Basepoint::Center
            }),
        };
        let normalize = typed!("normalize", bool, true);

        let default_res = if command == Command::Verify { vec![32, 48, 64] } else { vec![32] };
        let res_entry = match (self.get("resolution"), self.get("resolutions")) {
            (Some(_), Some((_, line))) => {
                errs.push(format!("give only one of resolution and resolutions{}", whence(line)));
                None
            }
            (a, b) => a.or(b),
        };
        let resolutions: Vec<usize> = match res_entry {
            None => default_res,
            Some((v, line)) => {
                let parsed: Result<Vec<usize>, _> = v.split(',').map(|s| s.trim().parse::<usize>()).collect();
                match parsed {
                    Ok(r) if !r.is_empty() => r,
                    _ => {
                        errs.push(format!("resolutions must be a comma-separated list of integers{}", whence(line)));
                        vec![32]
                    }
                }
            }
        };
        let suites = match self.get("suite") {
            None => Suite::ALL.to_vec(),
            Some((v, line)) if v == "all" => {
                let _ = line;
                Suite::ALL.to_vec()
            }
            Some((v, line)) => {
                let mut s = Vec::new();
                for part in v.split(',') {
                    match Suite::parse(part.trim()) {
                        Ok(x) => s.push(x),
                        Err(e) => errs.push(format!("{e}{}", whence(line))),
                    }
                }
                s
            }
        };

        let d = SolverConfig::default();
        let solver = SolverConfig {
            max_iterations: typed!("solver.max_iterations", usize, d.max_iterations),
            tolerance: typed!("solver.tolerance", f64, d.tolerance),
            max_step: typed!("solver.max_step", f64, d.max_step),
            armijo: typed!("solver.armijo", f64, d.armijo),
            backtrack: typed!("solver.backtrack", f64, d.backtrack),
            min_damping: typed!("solver.min_damping", f64, d.min_damping),
            admissibility_margin: typed!("solver.admissibility_margin", f64, d.admissibility_margin),
            spacelike_floor: typed!("solver.spacelike_floor", f64, d.spacelike_floor),
            linear_tolerance: typed!("solver.linear_tolerance", f64, d.linear_tolerance),
        };
        let ad = desitter::solver::AxisymConfig::default();
        let axisym = AxisymSettings {
            steps: typed!("axisym.steps", usize, ad.steps),
            tolerance: typed!("axisym.tolerance", f64, ad.tolerance),
            max_secant: typed!("axisym.max_secant", usize, ad.max_secant),
            pole_offset: typed!("axisym.pole_offset", f64, ad.pole_offset),
        };

        // constraints
        if !(rho > 0.0 && rho.is_finite()) {
            errs.push("rho must be positive".into());
        }
        if resolutions.windows(2).any(|w| w[0] >= w[1]) {
            errs.push(format!("resolutions must be strictly ascending, got {resolutions:?}"));
        }
        if command != Command::Nonexist && command != Command::Axisym {
            if !matches!(n, 2 | 3) {
                errs.push(format!("n must be 2 or 3 for grid commands, got {n}"));
            }
            if resolutions.iter().any(|&r| r < 16) {
                errs.push("every resolution must be at least 16".into());
            }
            if !matches!(order, 2 | 4) {
                errs.push(format!("order must be 2 or 4, got {order}"));
            }
        }
        let preset = string("preset");
        let input = string("input").map(PathBuf::from);
        if preset.is_some() && input.is_some() {
            errs.push("preset and input are mutually exclusive".into());
        }
        if command.uses_surface() && preset.is_none() && input.is_none() {
            errs.push(format!("{} needs a preset or an input file", command.name()));
        }
        if command == Command::Verify && input.is_some() {
            errs.push("verify refines a preset across resolutions; input files are not accepted".into());
        }
        for key in ["preset", "init", "psi"] {
            if let Some((v, line)) = self.get(key) {
                let body = if key == "psi" { v.strip_prefix("manufactured:").unwrap_or(v) } else { v.as_str() };
                if let Err(e) = body.parse::<Preset>() {
                    errs.push(format!("{key}: {e}{}", whence(line)));
                }
            }
        }
        let psi = string("psi");
        let psi_input = string("psi_input").map(PathBuf::from);
        let init = string("init");
        let init_input = string("init_input").map(PathBuf::from);
        if command == Command::Solve {
            match (&psi, &psi_input) {
                (Some(_), Some(_)) => errs.push("psi and psi_input are mutually exclusive".into()),
                (None, None) => errs.push("solve needs psi or psi_input".into()),
                _ => {}
            }
            if init.is_some() && init_input.is_some() {
                errs.push("init and init_input are mutually exclusive".into());
            }
        }
        if matches!(command, Command::Nonexist | Command::Axisym) {
            match r {
                None => errs.push(format!("{} needs r", command.name())),
                Some(r) if !(r > 0.0 && r.is_finite()) => errs.push("r must be positive".into()),
                _ => {}
            }
            if command == Command::Nonexist && n < 2 {
                errs.push("n must be at least 2".into());
            }
            if command == Command::Axisym && n != 2 {
                errs.push("axisym is implemented for n = 2".into());
            }
        }
        if let Err(e) = solver.validate() {
            errs.push(e.to_string().trim_start_matches("configuration error: ").to_string());
        }
        if !(axisym.tolerance > 0.0 && axisym.pole_offset > 0.0 && axisym.pole_offset < 0.5 && axisym.steps > 0) {
            errs.push("axisym settings need positive tolerance and steps and 0 < pole_offset < 0.5".into());
        }
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }

        let output = out_override
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| string("output").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(RunConfig {
            command,
            n,
            rho,
            resolutions,
            order,
            preset,
            input,
            column: string("column").unwrap_or_else(|| "u".into()),
            psi,
            psi_input,
            init,
            init_input,
            r,
            basepoint,
            suites,
            normalize,
            solver,
            axisym,
            output,
        })
    }
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    Entries::parse(text)?.resolve(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rho() {
        let c = parse_config("command = geometry\npreset = equator\nrho = 1.0\n").unwrap();
        assert_eq!(c.rho, 1.0);
    }

    #[test]
    fn negative_rho_rejected() {
        let e = parse_config("command = geometry\npreset = equator\nrho = -1\n").unwrap_err();
        assert!(e.to_string().contains("rho must be positive"), "{e}");
    }

    #[test]
    fn missing_command() {
        assert_eq!(parse_config("rho = 1\n").unwrap_err(), ConfigError::MissingCommand);
    }

    #[test]
    fn unknown_key_has_line_number() {
        let e = parse_config("command = solve\n\nwobble = 3\n").unwrap_err();
        assert_eq!(e, ConfigError::Parse { line: 3, message: "unknown key `wobble`".into() });
    }

    #[test]
    fn sections_and_comments() {
        let c = parse_config(
            "# solve the constant branch\ncommand = solve\npsi = const:0.4\n[solver]\ntolerance = 1e-9 # tight\nmax_iterations = 7\n",
        )
        .unwrap();
        assert_eq!(c.solver.tolerance, 1e-9);
        assert_eq!(c.solver.max_iterations, 7);
        assert!(matches!(parse_config("[mystery]\n"), Err(ConfigError::Parse { line: 1, .. })));
    }

    #[test]
    fn violations_are_listed_together() {
        let e = parse_config("command = verify\nrho = 0\nresolutions = 48,32\npreset = equator\ninput = u.csv\n").unwrap_err();
        let ConfigError::Invalid(v) = e else { panic!("{e:?}") };
        assert!(v.len() >= 3, "{v:?}");
    }
}
