//! Quantities from the convergence analysis: weighted averages and
//! dispersions, the per-round contraction constants, the composite matrix
//! `M_k(alpha)`, its uniform bound `M(alpha)`, the admissible stepsize range
//! and the spectral certificate.

mod inequalities;
mod spectral;
mod verify;

pub use inequalities::*;
pub use spectral::*;
pub use verify::*;

use thiserror::Error;

use crate::engine::NetworkState;
use crate::mixing::StochasticVector;
use crate::stack::{axpy, dist_sq, dot, AgentStack};

pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("weight {value} at index {index} must be positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("stepsize {alpha} outside the admissible range [0, {upper})")]
    StepsizeOutOfRange { alpha: f64, upper: f64 },
    #[error("degenerate constants: {0}")]
    Degenerate(String),
    #[error("trajectory: {0}")]
    Trajectory(String),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Mixing(#[from] crate::mixing::MixingError),
}

fn check_len(stack: &AgentStack, weights: &[f64]) -> Result<(), DiagnosticsError> {
    if stack.agents() != weights.len() {
        return Err(DiagnosticsError::DimensionMismatch(format!(
            "{} agents but {} weights",
            stack.agents(),
            weights.len()
        )));
    }
    Ok(())
}

fn check_positive(weights: &[f64]) -> Result<(), DiagnosticsError> {
    match weights.iter().position(|&w| !(w > 0.0)) {
        Some(index) => Err(DiagnosticsError::NonPositiveWeight { index, value: weights[index] }),
        None => Ok(()),
    }
}

/// `sum_i w_i x_i`.
pub fn weighted_average(x: &AgentStack, weights: &[f64]) -> Result<Vec<f64>, DiagnosticsError> {
    check_len(x, weights)?;
    let mut avg = vec![0.0; x.dim()];
    for (i, &w) in weights.iter().enumerate() {
        axpy(w, x.row(i), &mut avg);
    }
    Ok(avg)
}

/// `|x|_a = sqrt(sum_i a_i |x_i|^2)`.
pub fn weighted_norm(x: &AgentStack, weights: &[f64]) -> Result<f64, DiagnosticsError> {
    check_len(x, weights)?;
    Ok(x.rows().zip(weights).map(|(r, &w)| w * dot(r, r)).sum::<f64>().sqrt())
}

/// `|x|_{a^{-1}} = sqrt(sum_i |x_i|^2 / a_i)`.
pub fn inverse_weighted_norm(x: &AgentStack, weights: &[f64]) -> Result<f64, DiagnosticsError> {
    check_len(x, weights)?;
    check_positive(weights)?;
    Ok(x.rows().zip(weights).map(|(r, &w)| dot(r, r) / w).sum::<f64>().sqrt())
}

/// `D(x, phi) = sqrt(sum_j phi_j |x_j - x_hat|^2)` with `x_hat` the
/// `phi`-weighted average.
pub fn dispersion_x(x: &AgentStack, phi: &[f64]) -> Result<f64, DiagnosticsError> {
    check_positive(phi)?;
    let avg = weighted_average(x, phi)?;
    Ok(x.rows().zip(phi).map(|(r, &w)| w * dist_sq(r, &avg)).sum::<f64>().sqrt())
}

/// `S(y, pi) = sqrt(sum_i pi_i |y_i / pi_i - sum_l y_l|^2)`.
pub fn dispersion_y(y: &AgentStack, pi: &[f64]) -> Result<f64, DiagnosticsError> {
    check_len(y, pi)?;
    check_positive(pi)?;
    let total = y.column_sum();
    let mut acc = 0.0;
    for (r, &w) in y.rows().zip(pi) {
        let d: f64 = r.iter().zip(&total).map(|(v, t)| (v / w - t).powi(2)).sum();
        acc += w * d;
    }
    Ok(acc.sqrt())
}

/// `V_k = (|x_hat^k - x*|, D(x^k, phi_k), S(y^k, pi_k))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompositeVector {
    pub opt_gap: f64,
    pub x_dispersion: f64,
    pub y_dispersion: f64,
}

impl CompositeVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.opt_gap, self.x_dispersion, self.y_dispersion]
    }
}

pub fn composite_vector(
    state: &NetworkState,
    phi: &StochasticVector,
    pi: &StochasticVector,
    optimum: &[f64],
) -> Result<CompositeVector, DiagnosticsError> {
    if optimum.len() != state.x.dim() {
        return Err(DiagnosticsError::DimensionMismatch(format!(
            "optimum has dimension {}, iterates {}",
            optimum.len(),
            state.x.dim()
        )));
    }
    let avg = weighted_average(&state.x, phi.values())?;
    Ok(CompositeVector {
        opt_gap: dist_sq(&avg, optimum).sqrt(),
        x_dispersion: dispersion_x(&state.x, phi.values())?,
        y_dispersion: dispersion_y(&state.y, pi.values())?,
    })
}

/// Weight vectors adjacent to round `k`.
#[derive(Clone, Copy, Debug)]
pub struct RoundWeights<'a> {
    pub phi: &'a StochasticVector,
    pub phi_next: &'a StochasticVector,
    pub pi: &'a StochasticVector,
    pub pi_next: &'a StochasticVector,
}

/// Problem-wide scalars the constants depend on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemScalars {
    pub n: usize,
    pub lipschitz: f64,
    pub mu: f64,
    /// lower bound on positive entries of every `A_k`
    pub a: f64,
    /// lower bound on positive entries of every `B_k`
    pub b: f64,
}

/// Constants of one round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundConstants {
    pub q: f64,
    pub c: f64,
    pub tau: f64,
    pub r: f64,
    pub gamma: f64,
    /// `sqrt(1 / min(phi_k))`
    pub varphi: f64,
    /// `sqrt(1 / min(phi_{k+1}))`
    pub varphi_next: f64,
}

/// Largest stepsize for which the per-round relations are stated: `2 / (n L)`.
pub fn per_round_alpha_limit(n: usize, lipschitz: f64) -> f64 {
    2.0 / (n as f64 * lipschitz)
}

/// Largest stepsize for the uniform bound: `2 / (n (L + mu))`.
pub fn uniform_alpha_limit(n: usize, lipschitz: f64, mu: f64) -> f64 {
    2.0 / (n as f64 * (lipschitz + mu))
}

/// Evaluates every round constant literally. `diameter_times_utility` is
/// `D(G_k) K(G_k)` of a strongly connected round.
pub fn round_constants(
    w: RoundWeights<'_>,
    diameter_times_utility: f64,
    s: ProblemScalars,
    alpha: f64,
) -> Result<RoundConstants, DiagnosticsError> {
    let upper = per_round_alpha_limit(s.n, s.lipschitz);
    if !(alpha >= 0.0 && alpha < upper) {
        return Err(DiagnosticsError::StepsizeOutOfRange { alpha, upper });
    }
    for v in [w.phi, w.phi_next, w.pi, w.pi_next] {
        if v.len() != s.n {
            return Err(DiagnosticsError::DimensionMismatch(format!("weight vector of length {}", v.len())));
        }
        check_positive(v.values())?;
    }
    if !(diameter_times_utility >= 1.0) {
        return Err(DiagnosticsError::Degenerate(format!("D*K = {diameter_times_utility}")));
    }
    let n = s.n as f64;
    let min_pi = w.pi.min();
    let q = (1.0 - alpha * n * min_pi * s.mu).abs().max((1.0 - alpha * n * min_pi * s.lipschitz).abs());
    let c = (1.0 - w.phi_next.min() * s.a * s.a / (w.phi.max().powi(2) * diameter_times_utility)).sqrt();
    let tau = (1.0 - min_pi.powi(2) * s.b * s.b / (w.pi.max().powi(2) * w.pi_next.max() * diameter_times_utility)).sqrt();
    let r = n.sqrt() + 1.0 / w.pi_next.min().sqrt();
    let gamma = w
        .phi_next
        .values()
        .iter()
        .zip(w.pi.values())
        .map(|(f, p)| f * p)
        .fold(0.0, f64::max)
        .sqrt();
    Ok(RoundConstants {
        q,
        c,
        tau,
        r,
        gamma,
        varphi: (1.0 / w.phi.min()).sqrt(),
        varphi_next: (1.0 / w.phi_next.min()).sqrt(),
    })
}

/// Per-round constants, or the reason they do not exist.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RoundConstantsOutcome {
    Defined(RoundConstants),
    /// The round's graph is not strongly connected, so `D` and `K` (and
    /// with them `c_k`, `tau_k`) are undefined.
    Disconnected,
}

impl RoundConstantsOutcome {
    pub fn defined(&self) -> Option<&RoundConstants> {
        match self {
            RoundConstantsOutcome::Defined(c) => Some(c),
            RoundConstantsOutcome::Disconnected => None,
        }
    }
}

fn composite_matrix_with_gamma(k: &RoundConstants, lipschitz: f64, n: usize, alpha: f64, gamma: f64) -> Mat3 {
    let l = lipschitz;
    let sn = (n as f64).sqrt();
    let t = alpha * l * sn * k.varphi;
    [
        [k.q, t, alpha],
        [gamma * t, k.c + gamma * t, alpha * gamma],
        [
            alpha * l * l * k.r * sn * k.varphi,
            l * k.r * (k.c * k.varphi_next + k.varphi) + alpha * l * l * k.r * sn * k.varphi,
            k.tau + alpha * l * k.r,
        ],
    ]
}

/// `M_k(alpha)` with `V_{k+1} <= M_k(alpha) V_k`.
pub fn composite_matrix(k: &RoundConstants, lipschitz: f64, n: usize, alpha: f64) -> Result<Mat3, DiagnosticsError> {
    let upper = per_round_alpha_limit(n, lipschitz);
    if !(alpha >= 0.0 && alpha < upper) {
        return Err(DiagnosticsError::StepsizeOutOfRange { alpha, upper });
    }
    Ok(composite_matrix_with_gamma(k, lipschitz, n, alpha, k.gamma))
}

/// `M_k(alpha)` with `gamma_k` replaced by its upper bound 1.
pub fn composite_matrix_relaxed(
    k: &RoundConstants,
    lipschitz: f64,
    n: usize,
    alpha: f64,
) -> Result<Mat3, DiagnosticsError> {
    composite_matrix(k, lipschitz, n, alpha)?;
    Ok(composite_matrix_with_gamma(k, lipschitz, n, alpha, 1.0))
}

/// Upper bounds on the round constants over a whole schedule, plus
/// `sigma <= min_k min(pi_k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformConstants {
    pub c: f64,
    pub tau: f64,
    pub r: f64,
    pub varphi: f64,
    pub sigma: f64,
}

impl UniformConstants {
    /// Exact maxima over the given rounds.
    pub fn from_rounds<'a, I>(rounds: I, sigma: f64) -> Option<Self>
    where
        I: IntoIterator<Item = &'a RoundConstants>,
    {
        let mut it = rounds.into_iter().peekable();
        it.peek()?;
        let mut u = UniformConstants { c: 0.0, tau: 0.0, r: 0.0, varphi: 0.0, sigma };
        for k in it {
            u.c = u.c.max(k.c);
            u.tau = u.tau.max(k.tau);
            u.r = u.r.max(k.r);
            u.varphi = u.varphi.max(k.varphi).max(k.varphi_next);
        }
        Some(u)
    }

    fn validate(&self) -> Result<(), DiagnosticsError> {
        if !(self.c > 0.0 && self.c < 1.0 && self.tau > 0.0 && self.tau < 1.0) {
            return Err(DiagnosticsError::Degenerate(format!(
                "need c, tau in (0, 1), got c = {}, tau = {}; a round is likely not strongly connected",
                self.c, self.tau
            )));
        }
        if !(self.r > 0.0 && self.varphi > 0.0 && self.sigma > 0.0) {
            return Err(DiagnosticsError::Degenerate(format!(
                "need r, varphi, sigma > 0, got {}, {}, {}",
                self.r, self.varphi, self.sigma
            )));
        }
        Ok(())
    }
}

/// The uniform bound `M(alpha)` with `M_k(alpha) <= M(alpha)` entrywise.
pub fn bound_matrix(
    u: &UniformConstants,
    lipschitz: f64,
    mu: f64,
    n: usize,
    alpha: f64,
) -> Result<Mat3, DiagnosticsError> {
    u.validate()?;
    let upper = uniform_alpha_limit(n, lipschitz, mu);
    if !(alpha >= 0.0 && alpha <= upper) {
        return Err(DiagnosticsError::StepsizeOutOfRange { alpha, upper });
    }
    let l = lipschitz;
    let nf = n as f64;
    let sn = nf.sqrt();
    let t = alpha * l * sn * u.varphi;
    Ok([
        [1.0 - alpha * nf * u.sigma * mu, t, alpha],
        [t, u.c + t, alpha],
        [alpha * l * l * u.r * sn * u.varphi, l * u.r * (1.0 + u.c) * u.varphi + alpha * l * l * u.r * sn * u.varphi, u.tau + alpha * l * u.r],
    ])
}

/// The four candidates of the admissible stepsize range and their minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepsizeBound {
    /// `(1-c)/(L sqrt(n) varphi)`, `(1-tau)/(L r)`,
    /// `n sigma mu (1-tau)(1-c)/eta`, `2/(n(L+mu))`
    pub terms: [f64; 4],
    pub eta: f64,
    pub alpha: f64,
}

pub fn stepsize_upper_bound(
    u: &UniformConstants,
    lipschitz: f64,
    mu: f64,
    n: usize,
) -> Result<StepsizeBound, DiagnosticsError> {
    u.validate()?;
    if !(lipschitz > 0.0 && mu > 0.0 && n > 0) {
        return Err(DiagnosticsError::Degenerate(format!("L = {lipschitz}, mu = {mu}, n = {n}")));
    }
    let l = lipschitz;
    let nf = n as f64;
    let sn = nf.sqrt();
    let nsm = nf * u.sigma * mu;
    let eta = l
        * (nsm + l * sn * u.varphi)
        * ((1.0 + u.c) * u.r * u.varphi + (1.0 - u.c) * u.r + (1.0 - u.tau) * sn * u.varphi);
    let terms = [
        (1.0 - u.c) / (l * sn * u.varphi),
        (1.0 - u.tau) / (l * u.r),
        nsm * (1.0 - u.tau) * (1.0 - u.c) / eta,
        uniform_alpha_limit(n, l, mu),
    ];
    let alpha = terms.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StepsizeBound { terms, eta, alpha })
}

/// `det(M(alpha) - I) = alpha (alpha eta - n sigma mu (1-tau)(1-c))`.
pub fn bound_determinant_closed_form(u: &UniformConstants, mu: f64, n: usize, eta: f64, alpha: f64) -> f64 {
    alpha * (alpha * eta - n as f64 * u.sigma * mu * (1.0 - u.tau) * (1.0 - u.c))
}

/// Entrywise `m <= bound` with relative slack.
pub fn entrywise_le(m: &Mat3, bound: &Mat3, rel_slack: f64) -> bool {
    (0..3).all(|i| (0..3).all(|j| m[i][j] <= bound[i][j] + rel_slack * bound[i][j].abs()))
}

pub fn mat_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|j| m[i][j] * v[j]).sum())
}

/// Least-squares line through `(x, ln y)` with its coefficient of
/// determination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Returns `None` with fewer than two points or any non-positive `y`.
pub fn log_linear_fit(xs: &[f64], ys: &[f64]) -> Option<LogLinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let m = xs.len() as f64;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LogLinearFit { slope, intercept, r_squared })
}
