//! Run configuration read from a flat `key = value` file with sections.
//!
//! ```text
//! [run]
//! problem = lasso
//! solvers = pcg, pg, apg
//! seed = 1
//! out = results/lasso
//!
//! [solver]
//! max_iters = 2000
//!
//! [lasso]
//! n = 50
//! condition = 100
//! lambda_rel = 0.04
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use proxcg::SolverConfig;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Pcg,
    Pg,
    Apg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Pcg, SolverKind::Pg, SolverKind::Apg];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Pcg => "pcg",
            SolverKind::Pg => "pg",
            SolverKind::Apg => "apg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pcg" => Ok(SolverKind::Pcg),
            "pg" => Ok(SolverKind::Pg),
            "apg" => Ok(SolverKind::Apg),
            other => Err(BenchError::Config(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSpec {
    pub n: usize,
    pub condition: f64,
    pub lambda_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsMriSpec {
    pub side: usize,
    pub center_fraction: f64,
    pub p_outside: f64,
    /// `None` leaves the measurements noiseless.
    pub snr_db: Option<f64>,
    pub lambda: f64,
    pub a: f64,
    pub wavelet_levels: usize,
    /// Whitespace or comma separated pixel rows; the phantom is used when absent.
    pub image: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictLearnSpec {
    pub m: usize,
    pub r: usize,
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Lasso(LassoSpec),
    CsMri(CsMriSpec),
    DictLearn(DictLearnSpec),
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Lasso(_) => "lasso",
            ProblemSpec::CsMri(_) => "csmri",
            ProblemSpec::DictLearn(_) => "dictlearn",
        }
    }

    fn defaults(name: &str) -> Result<Self, BenchError> {
        match name {
            "lasso" => Ok(ProblemSpec::Lasso(LassoSpec { n: 50, condition: 100.0, lambda_rel: 0.04 })),
            "csmri" => Ok(ProblemSpec::CsMri(CsMriSpec {
                side: 64,
                center_fraction: 0.3,
                p_outside: 0.25,
                snr_db: Some(25.0),
                lambda: 0.05,
                a: 3.7,
                wavelet_levels: 3,
                image: None,
            })),
            "dictlearn" => Ok(ProblemSpec::DictLearn(DictLearnSpec { m: 25, r: 50, n: 100, k: 3 })),
            other => Err(BenchError::Config(format!("unknown problem `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverKind>,
    pub seed: u64,
    pub out: PathBuf,
    pub solver: SolverConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
}

fn parse<T: FromStr>(section: &str, key: &str, value: &str) -> Result<T, BenchError> {
    value
        .trim()
        .parse()
        .map_err(|_| BenchError::Config(format!("[{section}] {key}: cannot parse `{value}`")))
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool, BenchError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(BenchError::Config(format!("[{section}] {key}: expected a boolean, got `{value}`"))),
    }
}

fn optional<T: FromStr>(section: &str, key: &str, value: &str) -> Result<Option<T>, BenchError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "none" | "" => Ok(None),
        _ => parse(section, key, value).map(Some),
    }
}

fn unknown(section: &str, key: &str) -> BenchError {
    BenchError::Config(format!("[{section}] unknown key `{key}`"))
}

fn apply_solver_key(cfg: &mut SolverConfig, key: &str, v: &str) -> Result<(), BenchError> {
    const S: &str = "solver";
    match key {
        "delta" => cfg.delta = parse(S, key, v)?,
        "xi" => cfg.xi = parse(S, key, v)?,
        "c_min_factor" => cfg.c_min_factor = parse(S, key, v)?,
        "j_max" => cfg.j_max = optional(S, key, v)?,
        "mu_grid_factor" => cfg.mu_grid_factor = parse(S, key, v)?,
        "mu_floor" => cfg.mu_floor = parse(S, key, v)?,
        "max_iters" => cfg.max_iters = parse(S, key, v)?,
        "tol_gradmap" => cfg.tol_gradmap = parse(S, key, v)?,
        "time_limit_s" => cfg.time_limit_s = optional(S, key, v)?,
        "tau_tilde_cap" => cfg.tau_tilde_cap = parse(S, key, v)?,
        "pg_tau0" => cfg.pg_tau0 = parse(S, key, v)?,
        "stagnation_window" => cfg.stagnation_window = parse(S, key, v)?,
        "stepsize_safeguard" => cfg.stepsize_safeguard = parse_bool(S, key, v)?,
        _ => return Err(unknown(S, key)),
    }
    Ok(())
}

fn apply_problem_key(spec: &mut ProblemSpec, key: &str, v: &str, base: &Path) -> Result<(), BenchError> {
    let section = spec.name();
    match spec {
        ProblemSpec::Lasso(p) => match key {
            "n" => p.n = parse(section, key, v)?,
            "condition" => p.condition = parse(section, key, v)?,
            "lambda_rel" => p.lambda_rel = parse(section, key, v)?,
            _ => return Err(unknown(section, key)),
        },
        ProblemSpec::CsMri(p) => match key {
            "side" => p.side = parse(section, key, v)?,
            "center_fraction" => p.center_fraction = parse(section, key, v)?,
            "p_outside" => p.p_outside = parse(section, key, v)?,
            "snr_db" => p.snr_db = optional(section, key, v)?,
            "lambda" => p.lambda = parse(section, key, v)?,
            "a" => p.a = parse(section, key, v)?,
            "wavelet_levels" => p.wavelet_levels = parse(section, key, v)?,
            "image" => p.image = Some(base.join(v.trim())),
            _ => return Err(unknown(section, key)),
        },
        ProblemSpec::DictLearn(p) => match key {
            "m" => p.m = parse(section, key, v)?,
            "r" => p.r = parse(section, key, v)?,
            "n" => p.n = parse(section, key, v)?,
            "k" => p.k = parse(section, key, v)?,
            _ => return Err(unknown(section, key)),
        },
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse_str(&text, base)
    }

    /// Parses and validates a configuration; relative paths are joined to `base`.
    pub fn parse_str(text: &str, base: &Path) -> Result<Self, BenchError> {
        let ini = Ini::load_from_str(text).map_err(|e| BenchError::Config(format!("syntax: {e}")))?;
        let run = ini.section(Some("run")).ok_or_else(|| BenchError::Config("missing [run] section".into()))?;
        let problem_name = run.get("problem").ok_or_else(|| BenchError::Config("[run] needs `problem`".into()))?;
        let mut problem = ProblemSpec::defaults(problem_name.trim())?;
        let mut solvers = SolverKind::ALL.to_vec();
        let mut seed = 0;
        let mut out = base.join("results").join(problem.name());
        let mut solver = SolverConfig::default();

        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            for (key, v) in props.iter() {
                match section {
                    "run" => match key {
                        "problem" => {}
                        "solvers" => {
                            solvers = v.split(',').map(str::parse).collect::<Result<_, _>>()?;
                        }
                        "seed" => seed = parse("run", key, v)?,
                        "out" => out = base.join(v.trim()),
                        _ => return Err(unknown("run", key)),
                    },
                    "solver" => apply_solver_key(&mut solver, key, v)?,
                    s if s == problem.name() => apply_problem_key(&mut problem, key, v, base)?,
                    "" => return Err(BenchError::Config(format!("key `{key}` outside of any section"))),
                    other => {
                        return Err(BenchError::Config(format!(
                            "section [{other}] does not match problem `{}`",
                            problem.name()
                        )))
                    }
                }
            }
        }
        let cfg = RunConfig { problem, solvers, seed, out, solver: SolverConfig { seed, ..solver } };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), BenchError> {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.solver.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(m) = o.max_iters {
            self.solver.max_iters = m;
        }
        if let Some(t) = o.tol {
            self.solver.tol_gradmap = t;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.solvers.is_empty() {
            return bad("[run] solvers is empty".into());
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(s) {
                return bad(format!("[run] solver `{s}` listed twice"));
            }
        }
        self.solver.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        match &self.problem {
            ProblemSpec::Lasso(p) => {
                if p.n == 0 || !(p.condition >= 1.0) || !(p.lambda_rel >= 0.0) {
                    return bad(format!("[lasso] need n >= 1, condition >= 1, lambda_rel >= 0, got {p:?}"));
                }
            }
            ProblemSpec::CsMri(p) => {
                if p.side < 2 || !p.side.is_power_of_two() {
                    return bad(format!("[csmri] side must be a power of two, got {}", p.side));
                }
                if p.wavelet_levels == 0 || p.side % (1 << p.wavelet_levels) != 0 {
                    return bad(format!("[csmri] side {} does not allow {} Haar levels", p.side, p.wavelet_levels));
                }
                if !(0.0..=1.0).contains(&p.center_fraction) || !(0.0..=1.0).contains(&p.p_outside) {
                    return bad("[csmri] sampling fractions must lie in [0, 1]".into());
                }
                if !(p.lambda > 0.0) || !(p.a > 2.0) {
                    return bad(format!("[csmri] need lambda > 0 and a > 2, got {} and {}", p.lambda, p.a));
                }
                if let Some(snr) = p.snr_db {
                    if !snr.is_finite() {
                        return bad("[csmri] snr_db must be finite".into());
                    }
                }
                if let Some(img) = &p.image {
                    if !img.is_file() {
                        return bad(format!("[csmri] image {} does not exist", img.display()));
                    }
                }
            }
            ProblemSpec::DictLearn(p) => {
                if p.m == 0 || p.n == 0 || p.k == 0 || p.k > p.r {
                    return bad(format!("[dictlearn] need m, n >= 1 and 1 <= k <= r, got {p:?}"));
                }
            }
        }
        Ok(())
    }

    /// Every effective value in the file format, for reproduction.
    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        let names: Vec<&str> = self.solvers.iter().map(|k| k.name()).collect();
        let _ = writeln!(s, "[run]\nproblem = {}\nsolvers = {}\nseed = {}", self.problem.name(), names.join(", "), self.seed);
        let _ = writeln!(s, "out = {}\n", self.out.display());
        let c = &self.solver;
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let _ = writeln!(s, "[solver]");
        let _ = writeln!(s, "delta = {}\nxi = {}\nc_min_factor = {}", c.delta, c.xi, c.c_min_factor);
        let _ = writeln!(s, "j_max = {}", opt(c.j_max.map(|v| v.to_string())));
        let _ = writeln!(s, "mu_grid_factor = {}\nmu_floor = {}", c.mu_grid_factor, c.mu_floor);
        let _ = writeln!(s, "max_iters = {}\ntol_gradmap = {}", c.max_iters, c.tol_gradmap);
        let _ = writeln!(s, "time_limit_s = {}", opt(c.time_limit_s.map(|v| v.to_string())));
        let _ = writeln!(s, "tau_tilde_cap = {}\npg_tau0 = {}", c.tau_tilde_cap, c.pg_tau0);
        let _ = writeln!(s, "stagnation_window = {}\nstepsize_safeguard = {}\n", c.stagnation_window, c.stepsize_safeguard);
        match &self.problem {
            ProblemSpec::Lasso(p) => {
                let _ = writeln!(s, "[lasso]\nn = {}\ncondition = {}\nlambda_rel = {}", p.n, p.condition, p.lambda_rel);
            }
            ProblemSpec::CsMri(p) => {
                let _ = writeln!(s, "[csmri]\nside = {}\ncenter_fraction = {}", p.side, p.center_fraction);
                let _ = writeln!(s, "p_outside = {}\nsnr_db = {}", p.p_outside, opt(p.snr_db.map(|v| v.to_string())));
                let _ = writeln!(s, "lambda = {}\na = {}\nwavelet_levels = {}", p.lambda, p.a, p.wavelet_levels);
                if let Some(img) = &p.image {
                    let _ = writeln!(s, "image = {}", img.display());
                }
            }
            ProblemSpec::DictLearn(p) => {
                let _ = writeln!(s, "[dictlearn]\nm = {}\nr = {}\nn = {}\nk = {}", p.m, p.r, p.n, p.k);
            }
        }
        s
    }
}
