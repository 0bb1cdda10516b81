//! Both sides of the standalone inequalities and identities, evaluated on
//! concrete data so they can be checked against each other.

use crate::graph::{Digraph, GraphMetrics};
use crate::mixing::{ColumnStochasticMatrix, RowStochasticMatrix};
use crate::stack::{axpy, dist_sq, dot, AgentStack};

use super::{dispersion_x, weighted_average, DiagnosticsError};

/// `lhs <= rhs` (or `lhs == rhs` for identities).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sides {
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.lhs <= self.rhs + rel_slack * self.rhs.abs().max(self.lhs.abs())
    }

    pub fn equal(&self, rel_tol: f64) -> bool {
        (self.lhs - self.rhs).abs() <= rel_tol * self.lhs.abs().max(self.rhs.abs()).max(f64::MIN_POSITIVE)
    }
}

fn pair_sum(x: &AgentStack) -> f64 {
    let n = x.agents();
    (0..n).flat_map(|j| (j + 1..n).map(move |l| (j, l))).map(|(j, l)| dist_sq(x.row(j), x.row(l))).sum()
}

/// Edge dispersion versus pairwise dispersion:
/// `sum_{(j,l) in E} |x_j - x_l|^2 >= (1/(D K)) sum_{j<l} |x_j - x_l|^2`,
/// returned as `lhs = right-hand pair sum / (D K)`, `rhs = edge sum`.
pub fn edge_dispersion_bound(g: &Digraph, metrics: &GraphMetrics, x: &AgentStack) -> Sides {
    let edge_sum: f64 = g.edges().map(|(j, l)| dist_sq(x.row(j), x.row(l))).sum();
    Sides { lhs: pair_sum(x) / metrics.diameter_times_utility(), rhs: edge_sum }
}

/// Row-stochastic contraction. With `phi = A^T pi` and `z = A x`:
/// `sum_i pi_i |z_i - u|^2 <= sum_j phi_j |x_j - u|^2
///  - min(pi) min(A+)^2 / (max(phi)^2 D K) * sum_j phi_j |x_j - x_hat_phi|^2`.
pub fn row_contraction(
    a: &RowStochasticMatrix,
    metrics: &GraphMetrics,
    pi: &[f64],
    x: &AgentStack,
    u: &[f64],
) -> Result<Sides, DiagnosticsError> {
    let phi = a.transpose_apply(pi);
    let z = a.mix(x);
    let lhs: f64 = z.rows().zip(pi).map(|(r, &w)| w * dist_sq(r, u)).sum();
    let spread: f64 = x.rows().zip(&phi).map(|(r, &w)| w * dist_sq(r, u)).sum();
    let min_pi = pi.iter().copied().fold(f64::INFINITY, f64::min);
    let max_phi = phi.iter().copied().fold(0.0, f64::max);
    let factor = min_pi * a.min_positive().powi(2) / (max_phi * max_phi * metrics.diameter_times_utility());
    let disp = dispersion_x(x, &phi)?;
    Ok(Sides { lhs, rhs: spread - factor * disp * disp })
}

/// Column-stochastic contraction. With `pi = B nu` and `w = B y`:
/// `sqrt(sum_i pi_i |w_i/pi_i - sum y|^2) <= tau sqrt(sum_i nu_i |y_i/nu_i - sum y|^2)`
/// where `tau = sqrt(1 - min(nu)^2 min(B+)^2 / (max(nu)^2 max(pi) D K))`.
pub fn column_contraction(
    b: &ColumnStochasticMatrix,
    metrics: &GraphMetrics,
    nu: &[f64],
    y: &AgentStack,
) -> Result<Sides, DiagnosticsError> {
    let pi = b.apply(nu);
    let w = b.mix(y);
    let lhs = super::dispersion_y(&w, &pi)?;
    let min_nu = nu.iter().copied().fold(f64::INFINITY, f64::min);
    let max_nu = nu.iter().copied().fold(0.0, f64::max);
    let max_pi = pi.iter().copied().fold(0.0, f64::max);
    let tau = (1.0 - (min_nu * b.min_positive()).powi(2) / (max_nu * max_nu * max_pi * metrics.diameter_times_utility()))
        .sqrt();
    Ok(Sides { lhs, rhs: tau * super::dispersion_y(y, nu)? })
}

/// `|sum g_i u_i|^2 = (sum g_j) sum g_i |u_i|^2 - 1/2 sum_i sum_j g_i g_j |u_i - u_j|^2`.
pub fn norm_of_sum_identity(gammas: &[f64], u: &AgentStack) -> Sides {
    let mut s = vec![0.0; u.dim()];
    for (i, &g) in gammas.iter().enumerate() {
        axpy(g, u.row(i), &mut s);
    }
    let total: f64 = gammas.iter().sum();
    let weighted: f64 = u.rows().zip(gammas).map(|(r, &g)| g * dot(r, r)).sum();
    let mut cross = 0.0;
    for (i, &gi) in gammas.iter().enumerate() {
        for (j, &gj) in gammas.iter().enumerate() {
            cross += gi * gj * dist_sq(u.row(i), u.row(j));
        }
    }
    Sides { lhs: dot(&s, &s), rhs: total * weighted - 0.5 * cross }
}

/// For weights summing to one:
/// `1/2 sum_i sum_j g_i g_j |u_i - u_j|^2 = sum_i g_i |u_i - u_bar|^2`.
pub fn pairwise_dispersion_identity(gammas: &[f64], u: &AgentStack) -> Result<Sides, DiagnosticsError> {
    let avg = weighted_average(u, gammas)?;
    let mut cross = 0.0;
    for (i, &gi) in gammas.iter().enumerate() {
        for (j, &gj) in gammas.iter().enumerate() {
            cross += gi * gj * dist_sq(u.row(i), u.row(j));
        }
    }
    let spread: f64 = u.rows().zip(gammas).map(|(r, &g)| g * dist_sq(r, &avg)).sum();
    Ok(Sides { lhs: 0.5 * cross, rhs: spread })
}

/// For weights summing to one and any `v`:
/// `|u_bar - v|^2 = sum_i g_i |u_i - v|^2 - sum_i g_i |u_i - u_bar|^2`.
pub fn shifted_average_identity(gammas: &[f64], u: &AgentStack, v: &[f64]) -> Result<Sides, DiagnosticsError> {
    let avg = weighted_average(u, gammas)?;
    let to_v: f64 = u.rows().zip(gammas).map(|(r, &g)| g * dist_sq(r, v)).sum();
    let spread: f64 = u.rows().zip(gammas).map(|(r, &g)| g * dist_sq(r, &avg)).sum();
    Ok(Sides { lhs: dist_sq(&avg, v), rhs: to_v - spread })
}

/// `|x| <= sqrt(1/min(a)) |x|_a` for positive `a`.
pub fn weighted_norm_lower_bound(x: &AgentStack, a: &[f64]) -> Result<Sides, DiagnosticsError> {
    let plain = x.frobenius_norm();
    let min = a.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Sides { lhs: plain, rhs: (1.0 / min).sqrt() * super::weighted_norm(x, a)? })
}

/// `|x| <= |x|_{a^{-1}}` for stochastic `a`.
pub fn inverse_weighted_norm_bound(x: &AgentStack, a: &[f64]) -> Result<Sides, DiagnosticsError> {
    Ok(Sides { lhs: x.frobenius_norm(), rhs: super::inverse_weighted_norm(x, a)? })
}

/// `|y|_{pi^{-1}}^2 = S(y, pi)^2 + |sum y|^2`.
pub fn scaled_norm_identity(y: &AgentStack, pi: &[f64]) -> Result<Sides, DiagnosticsError> {
    let total = y.column_sum();
    let s = super::dispersion_y(y, pi)?;
    Ok(Sides { lhs: super::inverse_weighted_norm(y, pi)?.powi(2), rhs: s * s + dot(&total, &total) })
}
