//! Config-driven experiments: build the problem and graphs, pick the
//! stepsize, run, optionally verify, and write the trace, the effective
//! config and the report.
//!
//! Configs are TOML:
//!
//! ```toml
//! preset = "sensor-fusion-paper"   # optional
//! verify = true
//!
//! [problem]
//! kind = "sensor_fusion"           # or "custom_file" with `path`
//! n = 20
//! p = 20
//! s = 1
//! lambda = 0.01
//! seed = 1
//!
//! [graphs]
//! kind = "random_strongly_connected"
//! window = 1
//! horizon = 1000
//! seed = 7
//! edge_probability = 0.1
//!
//! [algorithm]
//! method = "ab_push_pull"          # or "push_diging"
//! alpha = "auto"                   # or a number
//! safety_factor = 1.0
//! sigma = "empirical"              # or "worst_case"
//!
//! [run]
//! horizon = 2000
//! trace_every = 1
//! output = "out"
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    bound_matrix, spectral_certificate, stepsize_upper_bound, verify_composite_relation, DiagnosticsError,
    ScheduleAnalysis, SigmaChoice, StepsizeBound, UniformConstants, VerificationReport, VerifyContext,
};
use crate::engine::{self, EngineError, NetworkState, RunConfig, Schedule, TraceRecord, Tracer};
use crate::graph::{generate_sequence, parse_rounds, DigraphSequence, GraphError, SequenceKind, Topology};
use crate::objectives::{make_sensor_fusion, ObjectiveError, ObjectiveFamily, QuadraticSensorFusion};

pub const BENCHMARK_PRESET: &str = "sensor-fusion-paper";
const PUSH_DIGING_PROBE_ROUNDS: usize = 50;
const VERIFY_CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("problem: {0}")]
    Problem(#[from] ObjectiveError),
    #[error("graphs: {0}")]
    Graphs(#[from] GraphError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("diagnostics: {0}")]
    Diagnostics(#[from] DiagnosticsError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    SensorFusion,
    #[serde(alias = "custom-file")]
    CustomFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    RandomStronglyConnected,
    StaticComplete,
    StaticRing,
    StaticRandom,
    Partitioned,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AbPushPull,
    PushDiging,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AbPushPull => "ab_push_pull",
            Method::PushDiging => "push_diging",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSetting {
    Empirical,
    WorstCase,
}

impl From<SigmaSetting> for SigmaChoice {
    fn from(s: SigmaSetting) -> Self {
        match s {
            SigmaSetting::Empirical => SigmaChoice::Empirical,
            SigmaSetting::WorstCase => SigmaChoice::WorstCase,
        }
    }
}

/// `"auto"` or an explicit positive stepsize.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaRepr", into = "AlphaRepr")]
pub enum AlphaSetting {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaRepr {
    Value(f64),
    Word(String),
}

impl TryFrom<AlphaRepr> for AlphaSetting {
    type Error = String;
    fn try_from(r: AlphaRepr) -> Result<Self, String> {
        match r {
            AlphaRepr::Value(v) => Ok(AlphaSetting::Fixed(v)),
            AlphaRepr::Word(w) if w == "auto" => Ok(AlphaSetting::Auto),
            AlphaRepr::Word(w) => Err(format!("alpha must be a number or \"auto\", got \"{w}\"")),
        }
    }
}

impl From<AlphaSetting> for AlphaRepr {
    fn from(a: AlphaSetting) -> Self {
        match a {
            AlphaSetting::Auto => AlphaRepr::Word("auto".into()),
            AlphaSetting::Fixed(v) => AlphaRepr::Value(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub lambda: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub window: usize,
    pub horizon: usize,
    pub seed: u64,
    pub edge_probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub method: Method,
    pub alpha: AlphaSetting,
    pub safety_factor: f64,
    pub sigma: SigmaSetting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: usize,
    pub trace_every: usize,
    pub output: String,
    pub x0_seed: u64,
}

/// A fully resolved experiment: every default applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub verify: bool,
    pub problem: ProblemConfig,
    pub graphs: GraphConfig,
    pub algorithm: AlgorithmConfig,
    pub run: RunSection,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    verify: Option<bool>,
    #[serde(default)]
    problem: RawProblem,
    #[serde(default)]
    graphs: RawGraphs,
    #[serde(default)]
    algorithm: RawAlgorithm,
    #[serde(default)]
    run: RawRun,
    /// Written by the echo; ignored on load.
    #[allow(dead_code)]
    resolved: Option<toml::Table>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: Option<ProblemKind>,
    n: Option<usize>,
    p: Option<usize>,
    s: Option<usize>,
    lambda: Option<f64>,
    seed: Option<u64>,
    path: Option<String>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraphs {
    kind: Option<GraphKind>,
    window: Option<usize>,
    horizon: Option<usize>,
    seed: Option<u64>,
    edge_probability: Option<f64>,
    path: Option<String>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    method: Option<Method>,
    alpha: Option<AlphaSetting>,
    safety_factor: Option<f64>,
    sigma: Option<SigmaSetting>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    horizon: Option<usize>,
    trace_every: Option<usize>,
    output: Option<String>,
    x0_seed: Option<u64>,
}

/// Values a preset supplies before explicit keys are applied.
struct PresetValues {
    problem: RawProblem,
    graphs: RawGraphs,
    run_horizon: usize,
}

fn preset_values(name: &str) -> Result<PresetValues, HarnessError> {
    match name {
        BENCHMARK_PRESET => Ok(PresetValues {
            problem: RawProblem {
                kind: Some(ProblemKind::SensorFusion),
                n: Some(20),
                p: Some(20),
                s: Some(1),
                lambda: Some(0.01),
                seed: Some(1),
                path: None,
            },
            graphs: RawGraphs {
                kind: Some(GraphKind::RandomStronglyConnected),
                window: Some(1),
                horizon: Some(1000),
                seed: Some(7),
                edge_probability: Some(0.1),
                path: None,
            },
            run_horizon: 2000,
        }),
        other => Err(HarnessError::Invalid(format!("unknown preset \"{other}\""))),
    }
}

fn required<T>(v: Option<T>, what: &str) -> Result<T, HarnessError> {
    v.ok_or_else(|| HarnessError::Invalid(format!("missing required key {what}")))
}

impl ExperimentConfig {
    /// Parses TOML text and applies presets and defaults.
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        Self::resolve(raw)
    }

    fn resolve(raw: RawConfig) -> Result<Self, HarnessError> {
        let preset = raw.preset.as_deref().map(preset_values).transpose()?;
        let (pp, pg, run_default) = match preset {
            Some(p) => (p.problem, p.graphs, p.run_horizon),
            None => (RawProblem::default(), RawGraphs::default(), 1000),
        };
        let rp = raw.problem;
        let rg = raw.graphs;
        let problem = ProblemConfig {
            kind: rp.kind.or(pp.kind).unwrap_or(ProblemKind::SensorFusion),
            n: required(rp.n.or(pp.n), "problem.n")?,
            p: required(rp.p.or(pp.p), "problem.p")?,
            s: rp.s.or(pp.s).unwrap_or(1),
            lambda: rp.lambda.or(pp.lambda).unwrap_or(0.01),
            seed: required(rp.seed.or(pp.seed), "problem.seed")?,
            path: rp.path.or(pp.path),
        };
        let graphs = GraphConfig {
            kind: rg.kind.or(pg.kind).unwrap_or(GraphKind::RandomStronglyConnected),
            window: rg.window.or(pg.window).unwrap_or(1),
            horizon: rg.horizon.or(pg.horizon).unwrap_or(1000),
            seed: required(rg.seed.or(pg.seed), "graphs.seed")?,
            edge_probability: rg.edge_probability.or(pg.edge_probability).unwrap_or(0.1),
            path: rg.path.or(pg.path),
        };
        let algorithm = AlgorithmConfig {
            method: raw.algorithm.method.unwrap_or(Method::AbPushPull),
            alpha: raw.algorithm.alpha.unwrap_or(AlphaSetting::Auto),
            safety_factor: raw.algorithm.safety_factor.unwrap_or(1.0),
            sigma: raw.algorithm.sigma.unwrap_or(SigmaSetting::Empirical),
        };
        let run = RunSection {
            horizon: raw.run.horizon.unwrap_or(run_default),
            trace_every: raw.run.trace_every.unwrap_or(1),
            output: raw.run.output.unwrap_or_else(|| "output".into()),
            x0_seed: raw.run.x0_seed.unwrap_or(0),
        };
        let cfg = ExperimentConfig { preset: raw.preset, verify: raw.verify.unwrap_or(true), problem, graphs, algorithm, run };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Invalid(msg));
        let p = &self.problem;
        if p.n == 0 || p.p == 0 || p.s == 0 {
            return bad(format!("problem dimensions must be positive (n={}, p={}, s={})", p.n, p.p, p.s));
        }
        if !(p.lambda > 0.0 && p.lambda.is_finite()) {
            return bad(format!("problem.lambda must be positive, got {}", p.lambda));
        }
        if p.kind == ProblemKind::CustomFile && p.path.is_none() {
            return bad("problem.kind = custom_file needs problem.path".into());
        }
        let g = &self.graphs;
        if g.window == 0 || g.horizon == 0 {
            return bad("graphs.window and graphs.horizon must be at least 1".into());
        }
        if g.window > g.horizon {
            return bad(format!("graphs.window {} exceeds graphs.horizon {}", g.window, g.horizon));
        }
        if !(0.0..=1.0).contains(&g.edge_probability) {
            return bad(format!("graphs.edge_probability {} outside [0, 1]", g.edge_probability));
        }
        if g.kind == GraphKind::File && g.path.is_none() {
            return bad("graphs.kind = file needs graphs.path".into());
        }
        if let AlphaSetting::Fixed(a) = self.algorithm.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("algorithm.alpha must be positive, got {a}"));
            }
        }
        if !(self.algorithm.safety_factor > 0.0 && self.algorithm.safety_factor.is_finite()) {
            return bad(format!("algorithm.safety_factor must be positive, got {}", self.algorithm.safety_factor));
        }
        if self.run.trace_every == 0 {
            return bad("run.trace_every must be at least 1".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ExperimentConfig::from_toml(&text)
}

fn resolve_path(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Problem instance, graph sequence and schedule analysis for a config.
pub struct Setup {
    pub problem: QuadraticSensorFusion,
    pub optimum: Vec<f64>,
    pub graphs: DigraphSequence,
    pub analysis: ScheduleAnalysis,
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig, base: &Path) -> Result<Self, HarnessError> {
        let p = &cfg.problem;
        let problem = match p.kind {
            ProblemKind::SensorFusion => make_sensor_fusion(p.n, p.p, p.s, p.lambda, p.seed)?,
            ProblemKind::CustomFile => {
                let path = resolve_path(base, p.path.as_deref().expect("validated"));
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                QuadraticSensorFusion::from_json(&text)?
            }
        };
        let n = problem.agents();
        let g = &cfg.graphs;
        let kind = match g.kind {
            GraphKind::RandomStronglyConnected => Some(SequenceKind::RandomStronglyConnected { edge_probability: g.edge_probability }),
            GraphKind::StaticComplete => Some(SequenceKind::Static(Topology::Complete)),
            GraphKind::StaticRing => Some(SequenceKind::Static(Topology::Ring)),
            GraphKind::StaticRandom => Some(SequenceKind::Static(Topology::Random { edge_probability: g.edge_probability })),
            GraphKind::Partitioned => Some(SequenceKind::Partitioned { edge_probability: g.edge_probability }),
            GraphKind::File => None,
        };
        let graphs = match kind {
            Some(kind) => generate_sequence(n, kind, g.horizon, g.window, g.seed)?,
            None => {
                let path = resolve_path(base, g.path.as_deref().expect("validated"));
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                DigraphSequence::new(parse_rounds(&text)?, g.window)?
            }
        };
        if graphs.node_count() != n {
            return Err(HarnessError::Invalid(format!("graphs have {} nodes, problem has {n} agents", graphs.node_count())));
        }
        let analysis = ScheduleAnalysis::new(Schedule::graphs(&graphs), cfg.run.horizon)?;
        let optimum = problem.optimum()?;
        Ok(Self { problem, optimum, graphs, analysis })
    }

    pub fn schedule(&self) -> Schedule<'_> {
        Schedule::graphs(&self.graphs)
    }

    /// Uniform constants and the admissible stepsize, when every round is
    /// strongly connected.
    pub fn bound(&self, sigma: SigmaSetting) -> Result<(UniformConstants, StepsizeBound), HarnessError> {
        let (l, mu) = self.problem.constants();
        let u = self.analysis.uniform_constants(l, mu, sigma.into())?;
        let b = stepsize_upper_bound(&u, l, mu, self.problem.agents())?;
        Ok((u, b))
    }
}

/// Halves `start` until Push-DIGing survives a short probe run.
pub fn probe_push_diging_alpha(setup: &Setup, start: f64, x0_seed: u64) -> Result<f64, HarnessError> {
    let mut alpha = start;
    for _ in 0..200 {
        let mut cfg = RunConfig::new(alpha, PUSH_DIGING_PROBE_ROUNDS);
        cfg.x0_seed = x0_seed;
        match engine::run_push_diging(&setup.problem, setup.schedule(), &cfg, |_| Ok(())) {
            Ok(_) => return Ok(alpha),
            Err(EngineError::Diverged { .. } | EngineError::SmallWeight { .. }) => alpha /= 2.0,
            Err(e) => return Err(e.into()),
        }
    }
    Err(HarnessError::Invalid(format!("no finite Push-DIGing stepsize found below {start}")))
}

/// Everything a run produces before anything is written.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub alpha: f64,
    pub bound: Option<StepsizeBound>,
    pub rho_bound: Option<f64>,
    pub records: Vec<TraceRecord>,
    pub report: Option<VerificationReport>,
}

impl ExperimentResult {
    /// `None` when verification was not requested or not applicable.
    pub fn verification_passed(&self) -> Option<bool> {
        self.report.as_ref().map(VerificationReport::passed)
    }

    pub fn trace_csv(&self) -> String {
        trace_csv(&self.records, self.rho_bound)
    }

    /// Effective config plus the resolved stepsize, as TOML. Loading it
    /// back yields the same effective config.
    pub fn config_echo(&self) -> String {
        let mut out = self.config.to_toml();
        let _ = writeln!(out, "\n[resolved]");
        let _ = writeln!(out, "alpha = {:e}", self.alpha);
        if let Some(b) = &self.bound {
            let _ = writeln!(out, "alpha_bound = {:e}", b.alpha);
            let _ = writeln!(out, "eta = {:e}", b.eta);
        }
        if let Some(r) = self.rho_bound {
            let _ = writeln!(out, "rho_bound = {r:e}");
        }
        out
    }
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

pub const TRACE_HEADER: &str = "k,relative_residual,opt_gap,x_dispersion,y_dispersion,max_agent_error,rho_bound";

pub fn trace_csv(records: &[TraceRecord], rho_bound: Option<f64>) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    let rho = fmt_float(rho_bound.unwrap_or(f64::NAN));
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{rho}",
            r.k,
            fmt_float(r.relative_residual),
            fmt_float(r.opt_gap),
            fmt_float(r.x_dispersion),
            fmt_float(r.y_dispersion),
            fmt_float(r.max_agent_error),
        );
    }
    out
}

/// Runs the configured experiment without writing anything.
pub fn execute(cfg: &ExperimentConfig, base: &Path) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let setup = Setup::build(cfg, base)?;
    let (l, mu) = setup.problem.constants();
    let n = setup.problem.agents();
    let bounded = setup.bound(cfg.algorithm.sigma);

    let alpha = match (cfg.algorithm.alpha, cfg.algorithm.method) {
        (AlphaSetting::Fixed(a), _) => a,
        (AlphaSetting::Auto, method) => {
            let (_, b) = bounded.as_ref().map_err(|e| {
                HarnessError::Invalid(format!("alpha = \"auto\" needs the stepsize bound, which is unavailable: {e}"))
            })?;
            let ab = b.alpha * cfg.algorithm.safety_factor;
            match method {
                Method::AbPushPull => ab,
                Method::PushDiging => probe_push_diging_alpha(&setup, ab, cfg.run.x0_seed)?,
            }
        }
    };
    let (bound, rho_bound) = match &bounded {
        Ok((u, b)) => {
            let rho = bound_matrix(u, l, mu, n, alpha).ok().map(|m| spectral_certificate(&m).rho);
            (Some(*b), rho)
        }
        Err(_) => (None, None),
    };

    let mut run_cfg = RunConfig::new(alpha, cfg.run.horizon);
    run_cfg.x0_seed = cfg.run.x0_seed;
    let mut tracer = Tracer::new(&setup.optimum, &setup.analysis.phi, &setup.analysis.pi);
    let every = cfg.run.trace_every;
    let horizon = cfg.run.horizon;
    let mut records = Vec::new();
    let mut keep = |s: &NetworkState| -> Result<(), String> {
        if s.k % every == 0 || s.k == horizon {
            records.push(tracer.record(s).map_err(|e| e.to_string())?);
        }
        Ok(())
    };

    let report = match cfg.algorithm.method {
        Method::AbPushPull => {
            let uniform = bounded.as_ref().ok().map(|(u, _)| *u);
            let mut chunk: Vec<NetworkState> = Vec::with_capacity(VERIFY_CHUNK + 1);
            let mut report: Option<VerificationReport> = None;
            let mut verify_err: Option<DiagnosticsError> = None;
            let mut flush = |chunk: &mut Vec<NetworkState>, report: &mut Option<VerificationReport>| {
                if chunk.len() < 2 {
                    return;
                }
                let ctx = VerifyContext { analysis: &setup.analysis, optimum: &setup.optimum, alpha, uniform: uniform.as_ref() };
                match verify_composite_relation(chunk, &setup.problem, ctx) {
                    Ok(r) => match report {
                        Some(acc) => acc.merge(r),
                        None => *report = Some(r),
                    },
                    Err(e) => verify_err = Some(e),
                }
                let last = chunk.pop().expect("non-empty");
                chunk.clear();
                chunk.push(last);
            };
            engine::run(&setup.problem, setup.schedule(), &run_cfg, |s| {
                keep(s)?;
                if cfg.verify {
                    chunk.push(s.clone());
                    if chunk.len() > VERIFY_CHUNK {
                        flush(&mut chunk, &mut report);
                    }
                }
                Ok(())
            })?;
            if cfg.verify {
                flush(&mut chunk, &mut report);
            }
            if let Some(e) = verify_err {
                return Err(e.into());
            }
            report
        }
        Method::PushDiging => {
            engine::run_push_diging(&setup.problem, setup.schedule(), &run_cfg, |s| keep(&s.as_network_state()))?;
            None
        }
    };

    Ok(ExperimentResult { config: cfg.clone(), alpha, bound, rho_bound, records, report })
}

/// Paths written by [`run_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFiles {
    pub trace: PathBuf,
    pub config: PathBuf,
    pub report: Option<PathBuf>,
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_outputs(result: &ExperimentResult, out_dir: &Path) -> Result<OutputFiles, HarnessError> {
    let trace = out_dir.join("trace.csv");
    let config = out_dir.join("config.toml");
    write_atomic(&trace, &result.trace_csv())?;
    write_atomic(&config, &result.config_echo())?;
    let report = match &result.report {
        Some(r) => {
            let path = out_dir.join("report.txt");
            write_atomic(&path, &r.to_string())?;
            Some(path)
        }
        None => None,
    };
    Ok(OutputFiles { trace, config, report })
}

/// Runs and writes outputs under `run.output` (relative to `base`).
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> Result<(ExperimentResult, OutputFiles), HarnessError> {
    let result = execute(cfg, base)?;
    let files = write_outputs(&result, &resolve_path(base, &cfg.run.output))?;
    Ok((result, files))
}

/// Relative-residual columns of several runs aligned on shared rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedTrace {
    pub labels: Vec<String>,
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl CombinedTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k");
        for l in &self.labels {
            let _ = write!(out, ",relative_residual_{l}");
        }
        out.push('\n');
        for (k, vals) in &self.rows {
            let _ = write!(out, "{k}");
            for v in vals {
                let _ = write!(out, ",{}", fmt_float(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every config and aligns their residuals. All configs must share the
/// problem and graph definitions, seeds included.
pub fn compare_methods(cfgs: &[ExperimentConfig], base: &Path) -> Result<CombinedTrace, HarnessError> {
    let first = cfgs.first().ok_or_else(|| HarnessError::Invalid("nothing to compare".into()))?;
    for (i, c) in cfgs.iter().enumerate().skip(1) {
        if c.problem != first.problem {
            return Err(HarnessError::Invalid(format!("config {i} uses a different problem (seed {} vs {})", c.problem.seed, first.problem.seed)));
        }
        if c.graphs != first.graphs {
            return Err(HarnessError::Invalid(format!("config {i} uses different graphs (seed {} vs {})", c.graphs.seed, first.graphs.seed)));
        }
    }
    let mut labels = Vec::new();
    let mut columns = Vec::new();
    for c in cfgs {
        let mut c = c.clone();
        c.verify = false;
        let result = execute(&c, base)?;
        let base_label = c.algorithm.method.name();
        let dup = labels.iter().filter(|l: &&String| l.starts_with(base_label)).count();
        labels.push(if dup == 0 { base_label.to_string() } else { format!("{base_label}_{}", dup + 1) });
        columns.push(result.records);
    }
    let rows = columns[0]
        .iter()
        .filter_map(|r| {
            let vals: Option<Vec<f64>> = columns
                .iter()
                .map(|col| col.iter().find(|o| o.k == r.k).map(|o| o.relative_residual))
                .collect();
            vals.map(|v| (r.k, v))
        })
        .collect();
    Ok(CombinedTrace { labels, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\nn = 4\np = 2\nseed = 3\n\n[graphs]\nseed = 5\nhorizon = 20\n";

    #[test]
    fn minimal_config_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.algorithm.alpha, AlphaSetting::Auto);
        assert_eq!(cfg.run.trace_every, 1);
        assert!(cfg.verify);
        assert_eq!(cfg.algorithm.safety_factor, 1.0);
        assert_eq!(cfg.algorithm.sigma, SigmaSetting::Empirical);
    }

    #[test]
    fn preset_fills_benchmark_problem() {
        let cfg = ExperimentConfig::from_toml("preset = \"sensor-fusion-paper\"\n").unwrap();
        let p = &cfg.problem;
        assert_eq!((p.n, p.p, p.s, p.lambda), (20, 20, 1, 0.01));
        let over = ExperimentConfig::from_toml("preset = \"sensor-fusion-paper\"\n[problem]\nn = 5\n").unwrap();
        assert_eq!(over.problem.n, 5);
        assert!(ExperimentConfig::from_toml("preset = \"nope\"\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let neg = format!("{MINIMAL}\n[algorithm]\nalpha = -0.1\n");
        assert!(matches!(ExperimentConfig::from_toml(&neg), Err(HarnessError::Invalid(_))));
        let wide = MINIMAL.replace("horizon = 20", "horizon = 2\nwindow = 3");
        assert!(matches!(ExperimentConfig::from_toml(&wide), Err(HarnessError::Invalid(_))));
        let word = format!("{MINIMAL}\n[algorithm]\nalpha = \"fast\"\n");
        assert!(matches!(ExperimentConfig::from_toml(&word), Err(HarnessError::Parse(_))));
        let unknown = format!("{MINIMAL}\n[run]\nhorizn = 3\n");
        assert!(matches!(ExperimentConfig::from_toml(&unknown), Err(HarnessError::Parse(_))));
    }

    #[test]
    fn parse_error_mentions_line() {
        let err = ExperimentConfig::from_toml("[problem]\nn = = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn effective_config_roundtrips() {
        let cfg = ExperimentConfig::from_toml(&format!("{MINIMAL}\n[algorithm]\nalpha = 0.0125\n")).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn trace_starts_at_unit_residual() {
        let cfg = ExperimentConfig::from_toml(
            "[problem]\nn = 3\np = 2\nseed = 1\n[graphs]\nkind = \"static_complete\"\nseed = 0\nhorizon = 1\n[run]\nhorizon = 30\ntrace_every = 7\n",
        )
        .unwrap();
        let result = execute(&cfg, Path::new(".")).unwrap();
        assert_eq!(result.records[0].relative_residual, 1.0);
        let ks: Vec<usize> = result.records.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![0, 7, 14, 21, 28, 30]);
        assert_eq!(result.verification_passed(), Some(true), "{}", result.report.as_ref().unwrap());
        let csv = result.trace_csv();
        assert!(csv.starts_with(TRACE_HEADER));
        assert!(csv.lines().nth(1).unwrap().starts_with("0,1e0,"));
    }
}
