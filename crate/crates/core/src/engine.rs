//! The AB/Push-Pull iteration and a Push-DIGing baseline.
//!
//! One round of AB/Push-Pull:
//!
//! ```text
//! x_i^{k+1} = sum_j A_ij x_j^k - alpha y_i^k
//! y_i^{k+1} = sum_j B_ij y_j^k + grad f_i(x_i^{k+1}) - grad f_i(x_i^k)
//! ```
//!
//! started from `y_i^0 = grad f_i(x_i^0)`.

use std::borrow::Cow;

use thiserror::Error;

use crate::graph::{Digraph, DigraphSequence};
use crate::mixing::{MixingError, MixingPair, StochasticVector, WeightScheme};
use crate::objectives::ObjectiveFamily;
use crate::rng::{derive_seed, gaussian_vec, seeded};
use crate::stack::{axpy, dist_sq, AgentStack};

/// Push-sum weights below this abort the baseline.
pub const MIN_PUSH_SUM_WEIGHT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite iterate at round {round}, agent {agent}; the stepsize is likely too large")]
    Diverged { round: usize, agent: usize },
    #[error("push-sum weight {value} of agent {agent} at round {round} is too small to de-bias")]
    SmallWeight { round: usize, agent: usize, value: f64 },
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("round {round}: {source}")]
    Mixing { round: usize, source: MixingError },
    #[error("trace callback failed at round {round}: {msg}")]
    Callback { round: usize, msg: String },
    #[error("round {round} has no weight vector (have {available})")]
    MissingWeights { round: usize, available: usize },
}

/// Stacked iterates at round `k`. `grad` caches `grad f_i(x_i^k)` so each
/// round evaluates every local gradient once.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub k: usize,
    pub x: AgentStack,
    pub y: AgentStack,
    pub grad: AgentStack,
}

fn gradients<F: ObjectiveFamily + ?Sized>(f: &F, x: &AgentStack) -> AgentStack {
    let mut g = AgentStack::zeros(x.agents(), x.dim());
    for i in 0..x.agents() {
        f.gradient_into(i, x.row(i), g.row_mut(i));
    }
    g
}

fn check_shape<F: ObjectiveFamily + ?Sized>(f: &F, x: &AgentStack) -> Result<(), EngineError> {
    if x.agents() != f.agents() || x.dim() != f.dim() {
        return Err(EngineError::DimensionMismatch(format!(
            "iterates are {}x{}, objective family is {}x{}",
            x.agents(),
            x.dim(),
            f.agents(),
            f.dim()
        )));
    }
    Ok(())
}

fn check_finite(round: usize, stacks: &[&AgentStack]) -> Result<(), EngineError> {
    for s in stacks {
        if let Some(agent) = s.first_non_finite() {
            return Err(EngineError::Diverged { round, agent });
        }
    }
    Ok(())
}

pub fn init<F: ObjectiveFamily + ?Sized>(f: &F, x0: AgentStack) -> Result<NetworkState, EngineError> {
    check_shape(f, &x0)?;
    check_finite(0, &[&x0])?;
    let grad = gradients(f, &x0);
    Ok(NetworkState { k: 0, y: grad.clone(), grad, x: x0 })
}

/// One synchronous round. The input state is left untouched.
pub fn step<F: ObjectiveFamily + ?Sized>(
    state: &NetworkState,
    pair: &MixingPair,
    f: &F,
    alpha: f64,
) -> Result<NetworkState, EngineError> {
    if pair.size() != state.x.agents() {
        return Err(EngineError::DimensionMismatch(format!(
            "{}x{} matrices for {} agents",
            pair.size(),
            pair.size(),
            state.x.agents()
        )));
    }
    let mut x = pair.row.mix(&state.x);
    for i in 0..x.agents() {
        axpy(-alpha, state.y.row(i), x.row_mut(i));
    }
    let grad = gradients(f, &x);
    let mut y = pair.col.mix(&state.y);
    for i in 0..y.agents() {
        let row = y.row_mut(i);
        axpy(1.0, grad.row(i), row);
        axpy(-1.0, state.grad.row(i), row);
    }
    let k = state.k + 1;
    check_finite(k, &[&x, &y])?;
    Ok(NetworkState { k, x, y, grad })
}

/// Where per-round matrices come from. Both variants cycle when the run is
/// longer than what they hold.
#[derive(Clone, Copy, Debug)]
pub enum Schedule<'a> {
    Graphs { graphs: &'a DigraphSequence, scheme: WeightScheme },
    Matrices(&'a [MixingPair]),
}

impl<'a> Schedule<'a> {
    pub fn graphs(graphs: &'a DigraphSequence) -> Self {
        Schedule::Graphs { graphs, scheme: WeightScheme::Uniform }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Schedule::Graphs { graphs, .. } => graphs.node_count(),
            Schedule::Matrices(pairs) => pairs.first().map_or(0, MixingPair::size),
        }
    }

    /// Number of distinct rounds before the schedule repeats.
    pub fn period(&self) -> usize {
        match self {
            Schedule::Graphs { graphs, .. } => graphs.len(),
            Schedule::Matrices(pairs) => pairs.len(),
        }
    }

    pub fn pair(&self, k: usize) -> Result<Cow<'a, MixingPair>, EngineError> {
        match *self {
            Schedule::Graphs { graphs, scheme } => MixingPair::for_graph(graphs.round(k), scheme)
                .map(Cow::Owned)
                .map_err(|source| EngineError::Mixing { round: k, source }),
            Schedule::Matrices(pairs) if pairs.is_empty() => {
                Err(EngineError::InvalidConfig("empty matrix schedule".into()))
            }
            Schedule::Matrices(pairs) => Ok(Cow::Borrowed(&pairs[k % pairs.len()])),
        }
    }

    pub fn graph(&self, k: usize) -> Result<Cow<'a, Digraph>, EngineError> {
        match *self {
            Schedule::Graphs { graphs, .. } => Ok(Cow::Borrowed(graphs.round(k))),
            Schedule::Matrices(_) => Ok(Cow::Owned(self.pair(k)?.graph())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub horizon: usize,
    /// Initial iterates; `None` draws standard normal rows from `x0_seed`.
    pub x0: Option<AgentStack>,
    pub x0_seed: u64,
    pub trace_every: usize,
}

impl RunConfig {
    pub fn new(alpha: f64, horizon: usize) -> Self {
        Self { alpha, horizon, x0: None, x0_seed: 0, trace_every: 1 }
    }

    fn validate(&self) -> Result<(), EngineError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(EngineError::InvalidConfig(format!("stepsize must be positive, got {}", self.alpha)));
        }
        if self.trace_every == 0 {
            return Err(EngineError::InvalidConfig("trace_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn initial_iterates(&self, n: usize, p: usize) -> AgentStack {
        match &self.x0 {
            Some(x0) => x0.clone(),
            None => {
                let mut rng = seeded(derive_seed(self.x0_seed, 0x7830));
                let data = (0..n).flat_map(|_| gaussian_vec(&mut rng, p)).collect();
                AgentStack::from_flat(n, p, data).expect("n * p entries")
            }
        }
    }
}

/// Runs `cfg.horizon` rounds, calling `on_round` at every multiple of
/// `trace_every` (round 0 included) and at the final round.
pub fn run<F, C>(f: &F, schedule: Schedule<'_>, cfg: &RunConfig, mut on_round: C) -> Result<NetworkState, EngineError>
where
    F: ObjectiveFamily + ?Sized,
    C: FnMut(&NetworkState) -> Result<(), String>,
{
    cfg.validate()?;
    if schedule.node_count() != f.agents() {
        return Err(EngineError::DimensionMismatch(format!(
            "schedule has {} nodes, objective family has {} agents",
            schedule.node_count(),
            f.agents()
        )));
    }
    let mut state = init(f, cfg.initial_iterates(f.agents(), f.dim()))?;
    let mut emit = |s: &NetworkState| on_round(s).map_err(|msg| EngineError::Callback { round: s.k, msg });
    emit(&state)?;
    for k in 0..cfg.horizon {
        let pair = schedule.pair(k)?;
        state = step(&state, &pair, f, cfg.alpha)?;
        if state.k % cfg.trace_every == 0 || state.k == cfg.horizon {
            emit(&state)?;
        }
    }
    Ok(state)
}

/// Push-DIGing iterates: push-sum numerators `u`, scalar weights `v`,
/// de-biased estimates `x = u / v` and tracking directions `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct PushDigingState {
    pub k: usize,
    pub u: AgentStack,
    pub v: Vec<f64>,
    pub x: AgentStack,
    pub y: AgentStack,
    pub grad: AgentStack,
}

impl PushDigingState {
    /// The same shape as an AB/Push-Pull state, for shared tracing.
    pub fn as_network_state(&self) -> NetworkState {
        NetworkState { k: self.k, x: self.x.clone(), y: self.y.clone(), grad: self.grad.clone() }
    }
}

pub fn init_push_diging<F: ObjectiveFamily + ?Sized>(f: &F, x0: AgentStack) -> Result<PushDigingState, EngineError> {
    check_shape(f, &x0)?;
    check_finite(0, &[&x0])?;
    let grad = gradients(f, &x0);
    Ok(PushDigingState { k: 0, u: x0.clone(), v: vec![1.0; x0.agents()], x: x0, y: grad.clone(), grad })
}

/// `u <- B (u - alpha y)`, `v <- B v`, `x = u / v`,
/// `y <- B y + grad f(x_new) - grad f(x_old)`, all with the column-stochastic
/// matrix of the round.
pub fn step_push_diging<F: ObjectiveFamily + ?Sized>(
    state: &PushDigingState,
    pair: &MixingPair,
    f: &F,
    alpha: f64,
) -> Result<PushDigingState, EngineError> {
    let n = state.u.agents();
    if pair.size() != n {
        return Err(EngineError::DimensionMismatch(format!("{} nodes for {n} agents", pair.size())));
    }
    let k = state.k + 1;
    let mut shifted = state.u.clone();
    for i in 0..n {
        axpy(-alpha, state.y.row(i), shifted.row_mut(i));
    }
    let u = pair.col.mix(&shifted);
    let v = pair.col.apply(&state.v);
    let mut x = u.clone();
    for (i, &w) in v.iter().enumerate() {
        if !(w >= MIN_PUSH_SUM_WEIGHT) {
            return Err(EngineError::SmallWeight { round: k, agent: i, value: w });
        }
        x.row_mut(i).iter_mut().for_each(|c| *c /= w);
    }
    let grad = gradients(f, &x);
    let mut y = pair.col.mix(&state.y);
    for i in 0..n {
        let row = y.row_mut(i);
        axpy(1.0, grad.row(i), row);
        axpy(-1.0, state.grad.row(i), row);
    }
    check_finite(k, &[&x, &y])?;
    Ok(PushDigingState { k, u, v, x, y, grad })
}

/// Push-DIGing over the same schedule, with the same callback contract as
/// [`run`].
pub fn run_push_diging<F, C>(
    f: &F,
    schedule: Schedule<'_>,
    cfg: &RunConfig,
    mut on_round: C,
) -> Result<PushDigingState, EngineError>
where
    F: ObjectiveFamily + ?Sized,
    C: FnMut(&PushDigingState) -> Result<(), String>,
{
    cfg.validate()?;
    if schedule.node_count() != f.agents() {
        return Err(EngineError::DimensionMismatch(format!(
            "schedule has {} nodes, objective family has {} agents",
            schedule.node_count(),
            f.agents()
        )));
    }
    let mut state = init_push_diging(f, cfg.initial_iterates(f.agents(), f.dim()))?;
    let mut emit = |s: &PushDigingState| on_round(s).map_err(|msg| EngineError::Callback { round: s.k, msg });
    emit(&state)?;
    for k in 0..cfg.horizon {
        let pair = schedule.pair(k)?;
        state = step_push_diging(&state, &pair, f, cfg.alpha)?;
        if state.k % cfg.trace_every == 0 || state.k == cfg.horizon {
            emit(&state)?;
        }
    }
    Ok(state)
}

/// One row of a run trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `|x^k - x*|^2 / |x^0 - x*|^2` over the stacked iterates.
    pub relative_residual: f64,
    /// `|x_hat^k - x*|` with the `phi_k`-weighted average.
    pub opt_gap: f64,
    pub x_dispersion: f64,
    pub y_dispersion: f64,
    pub max_agent_error: f64,
}

/// Turns states into trace records given the optimum and the weight
/// sequences indexed by round.
#[derive(Clone, Debug)]
pub struct Tracer<'a> {
    optimum: &'a [f64],
    phi: &'a [StochasticVector],
    pi: &'a [StochasticVector],
    initial_error: Option<f64>,
}

impl<'a> Tracer<'a> {
    pub fn new(optimum: &'a [f64], phi: &'a [StochasticVector], pi: &'a [StochasticVector]) -> Self {
        Self { optimum, phi, pi, initial_error: None }
    }

    fn weights(&self, k: usize) -> Result<(&StochasticVector, &StochasticVector), EngineError> {
        let available = self.phi.len().min(self.pi.len());
        match (self.phi.get(k), self.pi.get(k)) {
            (Some(phi), Some(pi)) => Ok((phi, pi)),
            _ => Err(EngineError::MissingWeights { round: k, available }),
        }
    }

    /// The first call fixes the residual denominator; it must be the round-0
    /// state.
    pub fn record(&mut self, state: &NetworkState) -> Result<TraceRecord, EngineError> {
        self.weights(state.k)?;
        let errors: Vec<f64> = state.x.rows().map(|r| dist_sq(r, self.optimum)).collect();
        let total: f64 = errors.iter().sum();
        let initial = *self.initial_error.get_or_insert(total);
        if initial == 0.0 {
            return Err(EngineError::InvalidConfig("initial iterates already equal the optimum".into()));
        }
        let (phi, pi) = self.weights(state.k)?;
        let v = crate::diagnostics::composite_vector(state, phi, pi, self.optimum)
            .map_err(|e| EngineError::DimensionMismatch(e.to_string()))?;
        Ok(TraceRecord {
            k: state.k,
            relative_residual: total / initial,
            opt_gap: v.opt_gap,
            x_dispersion: v.x_dispersion,
            y_dispersion: v.y_dispersion,
            max_agent_error: errors.iter().copied().fold(0.0, f64::max).sqrt(),
        })
    }
}

/// Runs AB/Push-Pull and collects trace records.
pub fn run_traced<F: ObjectiveFamily + ?Sized>(
    f: &F,
    schedule: Schedule<'_>,
    cfg: &RunConfig,
    tracer: &mut Tracer<'_>,
) -> Result<(NetworkState, Vec<TraceRecord>), EngineError> {
    let mut records = Vec::new();
    let state = run(f, schedule, cfg, |s| {
        records.push(tracer.record(s).map_err(|e| e.to_string())?);
        Ok(())
    })?;
    Ok((state, records))
}

/// Runs Push-DIGing and collects trace records.
pub fn run_push_diging_traced<F: ObjectiveFamily + ?Sized>(
    f: &F,
    schedule: Schedule<'_>,
    cfg: &RunConfig,
    tracer: &mut Tracer<'_>,
) -> Result<(PushDigingState, Vec<TraceRecord>), EngineError> {
    let mut records = Vec::new();
    let state = run_push_diging(f, schedule, cfg, |s| {
        records.push(tracer.record(&s.as_network_state()).map_err(|e| e.to_string())?);
        Ok(())
    })?;
    Ok((state, records))
}
