//! Per-schedule weight sequences and constants, and the round-by-round check
//! of every recursion along a recorded trajectory.

use std::fmt;

use crate::engine::{NetworkState, Schedule};
use crate::graph::GraphMetrics;
use crate::mixing::{StochasticVector, STOCHASTIC_TOL};
use crate::objectives::ObjectiveFamily;
use crate::stack::{dist, dist_sq, norm, AgentStack};

use super::{
    bound_matrix, composite_matrix, composite_matrix_with_gamma, composite_vector, dispersion_x, entrywise_le,
    mat_vec, per_round_alpha_limit, round_constants, uniform_alpha_limit, weighted_average, CompositeVector,
    DiagnosticsError, ProblemScalars, RoundConstantsOutcome, RoundWeights, UniformConstants,
};

/// Relative slack on every recursion inequality.
pub const RELATIVE_SLACK: f64 = 1e-8;
/// Absolute floor, as a multiple of the trajectory scale, below which
/// differences are treated as rounding.
pub const ABSOLUTE_FLOOR: f64 = 64.0 * f64::EPSILON;

/// How to pick `sigma <= min_k min(pi_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SigmaChoice {
    /// The observed minimum over the schedule horizon.
    #[default]
    Empirical,
    /// The a-priori bound `b^n / n`.
    WorstCase,
}

/// Everything about a schedule the analysis needs: weight sequences over
/// the horizon, entry lower bounds, and `D K` of each distinct round.
#[derive(Clone, Debug)]
pub struct ScheduleAnalysis {
    pub n: usize,
    pub horizon: usize,
    /// `phi_0 ..= phi_horizon`, pinned to uniform at the horizon.
    pub phi: Vec<StochasticVector>,
    /// `pi_0 ..= pi_horizon`.
    pub pi: Vec<StochasticVector>,
    pub a: f64,
    pub b: f64,
    /// `D K` per distinct round; `None` where the round is not strongly
    /// connected.
    shapes: Vec<Option<f64>>,
}

impl ScheduleAnalysis {
    pub fn new(schedule: Schedule<'_>, horizon: usize) -> Result<Self, DiagnosticsError> {
        let n = schedule.node_count();
        let distinct = schedule.period().min(horizon.max(1));
        let mut a = f64::INFINITY;
        let mut b = f64::INFINITY;
        let mut shapes = Vec::with_capacity(distinct);
        for k in 0..distinct {
            let pair = schedule.pair(k)?;
            a = a.min(pair.row.min_positive());
            b = b.min(pair.col.min_positive());
            let g = schedule.graph(k)?;
            shapes.push(GraphMetrics::compute(&g).ok().map(|m| m.diameter_times_utility()));
        }

        let mut pi = Vec::with_capacity(horizon + 1);
        pi.push(StochasticVector::uniform(n));
        for k in 0..horizon {
            let next = schedule.pair(k)?.col.apply(pi[k].values());
            pi.push(StochasticVector::new(renormalize_drift(next))?);
        }
        let mut phi = vec![StochasticVector::uniform(n); horizon + 1];
        for k in (0..horizon).rev() {
            let prev = schedule.pair(k)?.row.transpose_apply(phi[k + 1].values());
            phi[k] = StochasticVector::new(renormalize_drift(prev))?;
        }
        Ok(Self { n, horizon, phi, pi, a, b, shapes })
    }

    pub fn diameter_times_utility(&self, k: usize) -> Option<f64> {
        self.shapes[k % self.shapes.len()]
    }

    pub fn weights(&self, k: usize) -> Option<RoundWeights<'_>> {
        (k < self.horizon).then(|| RoundWeights {
            phi: &self.phi[k],
            phi_next: &self.phi[k + 1],
            pi: &self.pi[k],
            pi_next: &self.pi[k + 1],
        })
    }

    pub fn scalars(&self, lipschitz: f64, mu: f64) -> ProblemScalars {
        ProblemScalars { n: self.n, lipschitz, mu, a: self.a, b: self.b }
    }

    /// Constants of round `k < horizon`.
    pub fn round_constants(
        &self,
        k: usize,
        lipschitz: f64,
        mu: f64,
        alpha: f64,
    ) -> Result<RoundConstantsOutcome, DiagnosticsError> {
        let w = self
            .weights(k)
            .ok_or_else(|| DiagnosticsError::Trajectory(format!("round {k} is past the horizon {}", self.horizon)))?;
        match self.diameter_times_utility(k) {
            None => Ok(RoundConstantsOutcome::Disconnected),
            Some(dk) => round_constants(w, dk, self.scalars(lipschitz, mu), alpha).map(RoundConstantsOutcome::Defined),
        }
    }

    pub fn sigma(&self, choice: SigmaChoice) -> f64 {
        match choice {
            SigmaChoice::Empirical => self.pi.iter().map(StochasticVector::min).fold(f64::INFINITY, f64::min),
            SigmaChoice::WorstCase => self.b.powi(self.n as i32) / self.n as f64,
        }
    }

    /// Maxima of `c_k`, `tau_k`, `r_k`, `varphi_k` over the horizon. Fails
    /// if any round is disconnected, since then no finite bound exists.
    pub fn uniform_constants(&self, lipschitz: f64, mu: f64, sigma: SigmaChoice) -> Result<UniformConstants, DiagnosticsError> {
        let mut rounds = Vec::with_capacity(self.horizon);
        for k in 0..self.horizon {
            match self.round_constants(k, lipschitz, mu, 0.0)? {
                RoundConstantsOutcome::Defined(c) => rounds.push(c),
                RoundConstantsOutcome::Disconnected => {
                    return Err(DiagnosticsError::Degenerate(format!(
                        "round {k} is not strongly connected; uniform constants are undefined"
                    )))
                }
            }
        }
        UniformConstants::from_rounds(&rounds, self.sigma(sigma))
            .ok_or_else(|| DiagnosticsError::Degenerate("empty horizon".into()))
    }
}

/// Products of stochastic matrices drift off the simplex by a few ulps per
/// round; anything within tolerance is folded back so long horizons stay
/// valid. Larger errors are left for the validator to reject.
fn renormalize_drift(mut v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() <= STOCHASTIC_TOL {
        v.iter_mut().for_each(|x| *x /= sum);
    }
    v
}

/// Outcome of one inequality family over a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyResult {
    pub name: &'static str,
    pub checked: usize,
    /// Rounds where the family does not apply (disconnected round, stepsize
    /// outside its stated range).
    pub skipped: usize,
    pub violations: usize,
    /// Smallest `(rhs - lhs) / max(|rhs|, floor)`; negative means violated.
    pub worst_margin: f64,
    pub worst_round: Option<usize>,
    pub first_violation: Option<usize>,
}

impl FamilyResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            skipped: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst_round: None,
            first_violation: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn skip(&mut self) {
        self.skipped += 1;
    }

    /// `lhs <= rhs` up to relative slack plus the absolute floor.
    fn check(&mut self, round: usize, lhs: f64, rhs: f64, rel: f64, floor: f64) {
        self.checked += 1;
        let margin = (rhs - lhs) / rhs.abs().max(floor).max(f64::MIN_POSITIVE);
        let ok = lhs <= rhs + rel * rhs.abs() + floor;
        if margin < self.worst_margin || self.worst_round.is_none() {
            self.worst_margin = margin;
            self.worst_round = Some(round);
        }
        if !ok {
            self.violations += 1;
            self.first_violation.get_or_insert(round);
        }
    }
}

impl fmt::Display for FamilyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "{:<28} {status}  checked {:>6}  skipped {:>6}", self.name, self.checked, self.skipped)?;
        match self.worst_round {
            Some(r) => write!(f, "  worst margin {:.3e} at round {r}", self.worst_margin)?,
            None => write!(f, "  worst margin n/a")?,
        }
        if let Some(r) = self.first_violation {
            write!(f, "  first violation at round {r} ({} total)", self.violations)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub families: Vec<FamilyResult>,
}

impl VerificationReport {
    /// Folds in the report of a later chunk of the same trajectory.
    pub fn merge(&mut self, other: VerificationReport) {
        for theirs in other.families {
            match self.families.iter_mut().find(|f| f.name == theirs.name) {
                Some(ours) => {
                    ours.checked += theirs.checked;
                    ours.skipped += theirs.skipped;
                    ours.violations += theirs.violations;
                    if ours.first_violation.is_none() {
                        ours.first_violation = theirs.first_violation;
                    }
                    if theirs.worst_round.is_some() && (ours.worst_round.is_none() || theirs.worst_margin < ours.worst_margin) {
                        ours.worst_margin = theirs.worst_margin;
                        ours.worst_round = theirs.worst_round;
                    }
                }
                None => self.families.push(theirs),
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.families.iter().all(FamilyResult::passed)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyResult> {
        self.families.iter().find(|f| f.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fam in &self.families {
            writeln!(f, "{fam}")?;
        }
        Ok(())
    }
}

pub const CONSERVATION: &str = "gradient-sum conservation";
pub const NORM_IDENTITY: &str = "scaled-norm identity";
pub const AVERAGE_RECURSION: &str = "weighted-average recursion";
pub const OPTIMALITY_GAP: &str = "optimality-gap recursion";
pub const X_DISPERSION: &str = "x-dispersion recursion";
pub const Y_DISPERSION: &str = "y-dispersion recursion";
pub const COMPOSITE: &str = "composite relation";
pub const COMPOSITE_RELAXED: &str = "composite relation, gamma=1";
pub const UNIFORM_BOUND: &str = "uniform bound M_k <= M";
pub const UNIFORM_RELATION: &str = "uniform relation V <= M V";

/// Inputs of [`verify_composite_relation`].
#[derive(Clone, Copy, Debug)]
pub struct VerifyContext<'a> {
    pub analysis: &'a ScheduleAnalysis,
    pub optimum: &'a [f64],
    pub alpha: f64,
    /// Uniform constants for the bound-matrix families; skipped when `None`.
    pub uniform: Option<&'a UniformConstants>,
}

/// Checks every recursion between consecutive states. `states` must hold
/// consecutive rounds without gaps and must not run past the analysis
/// horizon; long runs can be checked in overlapping chunks and merged.
pub fn verify_composite_relation<F: ObjectiveFamily + ?Sized>(
    states: &[NetworkState],
    f: &F,
    ctx: VerifyContext<'_>,
) -> Result<VerificationReport, DiagnosticsError> {
    let an = ctx.analysis;
    let first = states.first().map_or(0, |s| s.k);
    for (i, s) in states.iter().enumerate() {
        if s.k != first + i {
            return Err(DiagnosticsError::Trajectory(format!("state {i} is round {}, expected {}", s.k, first + i)));
        }
    }
    if first + states.len() > an.horizon + 1 {
        return Err(DiagnosticsError::Trajectory(format!(
            "states reach round {} but weights only cover {} rounds",
            first + states.len() - 1,
            an.horizon
        )));
    }
    let (l, mu) = (f.lipschitz(), f.strong_convexity());
    let n = an.n;
    let alpha = ctx.alpha;
    let sn = (n as f64).sqrt();

    // rounding floor scaled to the size of the trajectory
    let scale = states
        .iter()
        .map(|s| s.x.frobenius_norm() + s.y.frobenius_norm() + s.grad.frobenius_norm())
        .fold(norm(ctx.optimum) * sn, f64::max)
        .max(1.0);
    let floor = ABSOLUTE_FLOOR * scale;

    let vs: Vec<CompositeVector> = states
        .iter()
        .map(|s| composite_vector(s, &an.phi[s.k], &an.pi[s.k], ctx.optimum))
        .collect::<Result<_, _>>()?;

    let mut conservation = FamilyResult::new(CONSERVATION);
    let mut norm_identity = FamilyResult::new(NORM_IDENTITY);
    let mut avg_rec = FamilyResult::new(AVERAGE_RECURSION);
    let mut gap = FamilyResult::new(OPTIMALITY_GAP);
    let mut xdisp = FamilyResult::new(X_DISPERSION);
    let mut ydisp = FamilyResult::new(Y_DISPERSION);
    let mut comp = FamilyResult::new(COMPOSITE);
    let mut relaxed = FamilyResult::new(COMPOSITE_RELAXED);
    let mut ubound = FamilyResult::new(UNIFORM_BOUND);
    let mut urel = FamilyResult::new(UNIFORM_RELATION);

    let per_round_ok = alpha > 0.0 && alpha < per_round_alpha_limit(n, l);
    let uniform_matrix = match ctx.uniform {
        Some(u) if alpha > 0.0 && alpha <= uniform_alpha_limit(n, l, mu) => Some(bound_matrix(u, l, mu, n, alpha)?),
        _ => None,
    };

    for (idx, s) in states.iter().enumerate() {
        // recompute gradients from the oracle rather than trusting the cache
        let mut grad_sum = vec![0.0; s.x.dim()];
        let mut g = vec![0.0; s.x.dim()];
        for i in 0..n {
            f.gradient_into(i, s.x.row(i), &mut g);
            crate::stack::axpy(1.0, &g, &mut grad_sum);
        }
        let y_sum = s.y.column_sum();
        conservation.check(s.k, dist(&y_sum, &grad_sum), 1e-9 * (1.0 + norm(&grad_sum)), 0.0, 0.0);

        let pi = an.pi[s.k].values();
        let inv = super::inverse_weighted_norm(&s.y, pi)?.powi(2);
        let v = vs[idx];
        let id_rhs = v.y_dispersion.powi(2) + y_sum.iter().map(|c| c * c).sum::<f64>();
        norm_identity.check(s.k, (inv - id_rhs).abs(), 1e-10 * inv.abs().max(id_rhs.abs()), 0.0, floor * floor);

        let Some(next) = states.get(idx + 1) else { continue };
        let k = s.k;
        let vn = vs[idx + 1];
        let phi_next = an.phi[k + 1].values();

        // x_hat^{k+1} = x_hat^k - alpha sum_i phi_{k+1,i} y_i^k
        let hat = weighted_average(&s.x, an.phi[k].values())?;
        let hat_next = weighted_average(&next.x, phi_next)?;
        let dir = weighted_average(&s.y, phi_next)?;
        let predicted: Vec<f64> = hat.iter().zip(&dir).map(|(h, d)| h - alpha * d).collect();
        avg_rec.check(k, dist(&hat_next, &predicted), 1e-10 * scale, 0.0, 0.0);

        // q_k is only meaningful inside the per-round stepsize range
        let outcome = an.round_constants(k, l, mu, if per_round_ok { alpha } else { 0.0 })?;
        let Some(&consts) = outcome.defined() else {
            for fam in [&mut gap, &mut xdisp, &mut ydisp, &mut comp, &mut relaxed, &mut ubound, &mut urel] {
                fam.skip();
            }
            continue;
        };

        // x-dispersion: D_{k+1} <= c_k D_k + alpha sqrt(sum phi_{k+1,i} |y_i - y_bar|^2)
        let y_spread = dispersion_x(&s.y, phi_next)?;
        xdisp.check(k, vn.x_dispersion, consts.c * v.x_dispersion + alpha * y_spread, RELATIVE_SLACK, floor);

        // y-dispersion: S_{k+1} <= tau S + alpha L r |y| + L r (c varphi_{k+1} + varphi) D
        let y_norm = s.y.frobenius_norm();
        let s_rhs = consts.tau * v.y_dispersion
            + alpha * l * consts.r * y_norm
            + l * consts.r * (consts.c * consts.varphi_next + consts.varphi) * v.x_dispersion;
        ydisp.check(k, vn.y_dispersion, s_rhs, RELATIVE_SLACK, floor);

        if !per_round_ok {
            for fam in [&mut gap, &mut comp, &mut relaxed] {
                fam.skip();
            }
        } else {
            // optimality gap
            let gap_rhs = consts.q * v.opt_gap + alpha * l * sn * consts.varphi * v.x_dispersion + alpha * v.y_dispersion;
            gap.check(k, vn.opt_gap, gap_rhs, RELATIVE_SLACK, floor);

            let m = composite_matrix(&consts, l, n, alpha)?;
            let m1 = composite_matrix_with_gamma(&consts, l, n, alpha, 1.0);
            let now = v.as_array();
            let after = vn.as_array();
            for (fam, mat) in [(&mut comp, m), (&mut relaxed, m1)] {
                let bound = mat_vec(&mat, &now);
                // one check per component, reported against the same round
                for c in 0..3 {
                    fam.check(k, after[c], bound[c], RELATIVE_SLACK, floor);
                }
            }
            match &uniform_matrix {
                Some(mu_mat) => {
                    ubound.checked += 1;
                    if !entrywise_le(&m, mu_mat, RELATIVE_SLACK) {
                        ubound.violations += 1;
                        ubound.first_violation.get_or_insert(k);
                    }
                    let worst = (0..3)
                        .flat_map(|i| (0..3).map(move |j| (i, j)))
                        .map(|(i, j)| (mu_mat[i][j] - m[i][j]) / mu_mat[i][j].abs().max(f64::MIN_POSITIVE))
                        .fold(f64::INFINITY, f64::min);
                    if worst < ubound.worst_margin || ubound.worst_round.is_none() {
                        ubound.worst_margin = worst;
                        ubound.worst_round = Some(k);
                    }
                    let bound = mat_vec(mu_mat, &now);
                    for c in 0..3 {
                        urel.check(k, after[c], bound[c], RELATIVE_SLACK, floor);
                    }
                }
                None => {
                    ubound.skip();
                    urel.skip();
                }
            }
        }
    }

    Ok(VerificationReport {
        families: vec![conservation, norm_identity, avg_rec, gap, xdisp, ydisp, comp, relaxed, ubound, urel],
    })
}

/// Largest ratio `w^T V_{k+1} / w^T V_k` over the trailing half of the
/// trajectory. Rounds where `w^T V_k` is zero are skipped.
pub fn trailing_contraction_ratio(vs: &[CompositeVector], w: &[f64; 3]) -> Option<f64> {
    let weighted: Vec<f64> = vs.iter().map(|v| v.as_array().iter().zip(w).map(|(a, b)| a * b).sum()).collect();
    let start = weighted.len() / 2;
    weighted[start..]
        .windows(2)
        .filter(|p| p[0] > 0.0)
        .map(|p| p[1] / p[0])
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
}

/// `|x^k - x*|^2` summed over agents.
pub fn stacked_error_sq(x: &AgentStack, optimum: &[f64]) -> f64 {
    x.rows().map(|r| dist_sq(r, optimum)).sum()
}
