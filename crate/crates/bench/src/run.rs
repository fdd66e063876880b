//! Instance construction, solver execution and result files.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use proxcg::problems::{
    generate_synthetic_dl, make_csmri, make_dictionary_learning, phantom, psnr, synthetic_lasso, CsMriInstance,
    CsMriParams, DictLearnInstance, LassoInstance,
};
use proxcg::prox::ScadParams;
use proxcg::{apg_solve, pcg_solve, pg_solve, Point, ProxOperator, SmoothOracle, SolveResult, SolverConfig};

use crate::config::{ProblemSpec, RunConfig, SolverKind};
use crate::BenchError;

pub const TRACE_HEADER: [&str; 9] =
    ["k", "f", "gradmap_norm", "tau_k", "tau_tilde", "mu_star", "cg_steps", "hvp_count", "wall_time_s"];

pub enum Instance {
    Lasso(LassoInstance),
    CsMri(Box<CsMriInstance>),
    DictLearn(DictLearnInstance, Point),
}

/// Reads a square image: one row per line, entries separated by whitespace or commas.
pub fn read_image(path: &Path) -> Result<DMatrix<f64>, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()
        .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(BenchError::Config(format!("{}: image must be square", path.display())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl Instance {
    pub fn build(problem: &ProblemSpec, seed: u64) -> Result<Self, BenchError> {
        let invalid = |e: proxcg::Error| BenchError::Config(e.to_string());
        match problem {
            ProblemSpec::Lasso(p) => synthetic_lasso(p.n, p.condition, p.lambda_rel, seed).map(Instance::Lasso).map_err(invalid),
            ProblemSpec::CsMri(p) => {
                let clean = match &p.image {
                    Some(path) => read_image(path)?,
                    None => phantom(p.side),
                };
                let params = CsMriParams {
                    center_fraction: p.center_fraction,
                    p_outside: p.p_outside,
                    snr_db: p.snr_db,
                    scad: ScadParams::new(p.lambda, p.a).map_err(invalid)?,
                    wavelet_levels: p.wavelet_levels,
                    seed,
                };
                make_csmri(&clean, &params).map(|i| Instance::CsMri(Box::new(i))).map_err(invalid)
            }
            ProblemSpec::DictLearn(p) => {
                let data = generate_synthetic_dl(p.m, p.r, p.n, p.k, seed).map_err(invalid)?;
                let inst = make_dictionary_learning(&data.y, p.r, p.k).map_err(invalid)?;
                let x0 = inst.initial_point(seed.wrapping_add(1));
                Ok(Instance::DictLearn(inst, x0))
            }
        }
    }

    pub fn oracle(&self) -> &dyn SmoothOracle {
        match self {
            Instance::Lasso(i) => &i.oracle,
            Instance::CsMri(i) => &i.oracle,
            Instance::DictLearn(i, _) => &i.oracle,
        }
    }

    pub fn prox(&self) -> &dyn ProxOperator {
        match self {
            Instance::Lasso(i) => &i.prox,
            Instance::CsMri(i) => &i.prox,
            Instance::DictLearn(i, _) => &i.prox,
        }
    }

    pub fn initial_point(&self) -> Point {
        match self {
            Instance::Lasso(i) => i.initial_point(),
            Instance::CsMri(i) => i.initial_point(),
            Instance::DictLearn(_, x0) => x0.clone(),
        }
    }

    pub fn psnr(&self, x: &Point) -> Option<f64> {
        match self {
            Instance::CsMri(i) => psnr(&i.clean, &i.to_image(x)).ok(),
            _ => None,
        }
    }
}

pub struct SolverOutcome {
    pub kind: SolverKind,
    pub result: SolveResult,
    pub psnr: Option<f64>,
}

pub fn solve_one(kind: SolverKind, inst: &Instance, config: &SolverConfig) -> Result<SolverOutcome, BenchError> {
    let solve = match kind {
        SolverKind::Pcg => pcg_solve,
        SolverKind::Pg => pg_solve,
        SolverKind::Apg => apg_solve,
    };
    let result = solve(inst.oracle(), inst.prox(), &inst.initial_point(), config)
        .map_err(|e| BenchError::Solver(format!("{kind}: {e}")))?;
    let psnr = inst.psnr(&result.x_final);
    Ok(SolverOutcome { kind, result, psnr })
}

/// Value of `PROXCG_THREADS`, default 1.
pub fn thread_cap() -> Result<usize, BenchError> {
    match std::env::var("PROXCG_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(BenchError::Config(format!("PROXCG_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(1),
    }
}

/// Runs every configured solver on one shared instance, at most `threads` at a time.
/// Outcomes are returned in configuration order.
pub fn execute(cfg: &RunConfig, threads: usize) -> Result<(Instance, Vec<SolverOutcome>), BenchError> {
    let inst = Instance::build(&cfg.problem, cfg.seed)?;
    let mut outcomes = Vec::with_capacity(cfg.solvers.len());
    for chunk in cfg.solvers.chunks(threads.max(1)) {
        let inst_ref = &inst;
        let batch: Vec<Result<SolverOutcome, BenchError>> = std::thread::scope(|s| {
            let handles: Vec<_> =
                chunk.iter().map(|&kind| s.spawn(move || solve_one(kind, inst_ref, &cfg.solver))).collect();
            handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
        });
        for r in batch {
            outcomes.push(r?);
        }
    }
    Ok((inst, outcomes))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> BenchError + '_ {
    move |e| BenchError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Io(format!("{}: {e}", path.display()))
}

pub fn write_trace(path: &Path, result: &SolveResult) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    for r in &result.trace {
        w.write_record([
            r.k.to_string(),
            num(r.f),
            num(r.gradmap_norm),
            num(r.tau_k),
            num(r.tau_tilde),
            num(r.mu_star),
            r.cg_steps.to_string(),
            r.hvp_count.to_string(),
            num(r.wall_time_s),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_summary(path: &Path, outcomes: &[SolverOutcome], with_psnr: bool) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec![
        "solver",
        "termination",
        "final_f",
        "final_gradmap",
        "iterations",
        "total_hvps",
        "wall_time_s",
        "stepsize_fallbacks",
        "extrapolation_rejections",
    ];
    if with_psnr {
        header.push("psnr_db");
    }
    w.write_record(&header).map_err(csv_err(path))?;
    for o in outcomes {
        let last = o.result.trace.last().expect("trace has row 0");
        let mut row = vec![
            o.kind.to_string(),
            o.result.termination.to_string(),
            num(last.f),
            num(last.gradmap_norm),
            o.result.iterations().to_string(),
            o.result.stats.hvp_count.to_string(),
            num(last.wall_time_s),
            o.result.stats.stepsize_fallbacks.to_string(),
            o.result.stats.extrapolation_rejections.to_string(),
        ];
        if with_psnr {
            row.push(o.psnr.map_or_else(|| "-".into(), num));
        }
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `trace_<solver>.csv`, `summary.csv` and `resolved.ini` into `cfg.out`.
pub fn write_outputs(cfg: &RunConfig, inst: &Instance, outcomes: &[SolverOutcome]) -> Result<(), BenchError> {
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    for o in outcomes {
        write_trace(&cfg.out.join(format!("trace_{}.csv", o.kind)), &o.result)?;
    }
    write_summary(&cfg.out.join("summary.csv"), outcomes, matches!(inst, Instance::CsMri(_)))?;
    let resolved = cfg.out.join("resolved.ini");
    fs::write(&resolved, cfg.to_ini_string()).map_err(io_err(&resolved))
}

pub fn cmd_run(cfg: &RunConfig) -> Result<Vec<SolverOutcome>, BenchError> {
    let threads = thread_cap()?;
    let (inst, outcomes) = execute(cfg, threads)?;
    write_outputs(cfg, &inst, &outcomes)?;
    Ok(outcomes)
}
