//! Per-agent cost oracles.
//!
//! Everything here is quadratic: `f_i(x) = 1/2 x^T Q_i x - b_i^T x + c_i`,
//! which covers the regularized least-squares sensor-fusion benchmark and
//! gives exact smoothness and strong-convexity constants from small
//! symmetric eigensolves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, gaussian, gaussian_vec, seeded};
use crate::stack::{axpy, dist, dot, norm, sub};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("regularization must be positive, got {0}")]
    InvalidRegularization(f64),
    #[error("Hessian of agent {0} is not symmetric")]
    NotSymmetric(usize),
    #[error("summed Hessian is singular; no unique optimum")]
    Singular,
    #[error("{kind} condition violated at sample {sample}: lhs {lhs} vs rhs {rhs}")]
    ConditionViolated { kind: &'static str, sample: usize, lhs: f64, rhs: f64 },
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("problem file: {0}")]
    File(String),
}

/// `n` differentiable local costs on `R^p` with shared constants: every
/// `grad f_i` is `L`-Lipschitz and `f = (1/n) sum f_i` is `mu`-strongly convex.
pub trait ObjectiveFamily {
    fn agents(&self) -> usize;
    fn dim(&self) -> usize;
    /// Writes `grad f_i(x)` into `out`.
    fn gradient_into(&self, agent: usize, x: &[f64], out: &mut [f64]);
    fn value(&self, _agent: usize, _x: &[f64]) -> Option<f64> {
        None
    }
    fn lipschitz(&self) -> f64;
    fn strong_convexity(&self) -> f64;

    fn gradient(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(agent, x, &mut out);
        out
    }

    /// `sum_i grad f_i(x)`, accumulated in agent order.
    fn total_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; self.dim()];
        let mut g = vec![0.0; self.dim()];
        for i in 0..self.agents() {
            self.gradient_into(i, x, &mut g);
            axpy(1.0, &g, &mut total);
        }
        total
    }
}

/// Quadratic local costs with dense symmetric Hessians.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFamily {
    p: usize,
    hessians: Vec<Vec<f64>>,
    linear: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    lipschitz: f64,
    strong_convexity: f64,
}

impl QuadraticFamily {
    /// `hessians[i]` is `Q_i` row-major, `linear[i]` is `b_i`.
    pub fn new(p: usize, hessians: Vec<Vec<f64>>, linear: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self, ObjectiveError> {
        let n = hessians.len();
        if n == 0 || p == 0 {
            return Err(ObjectiveError::InvalidDimensions("need at least one agent and p >= 1".into()));
        }
        if linear.len() != n || offsets.len() != n {
            return Err(ObjectiveError::InvalidDimensions("per-agent term counts differ".into()));
        }
        for (i, (q, b)) in hessians.iter().zip(&linear).enumerate() {
            if q.len() != p * p || b.len() != p {
                return Err(ObjectiveError::InvalidDimensions(format!("agent {i} terms are not {p}-dimensional")));
            }
            let asym = (0..p).flat_map(|r| (0..r).map(move |c| (r, c))).any(|(r, c)| {
                let (u, v) = (q[r * p + c], q[c * p + r]);
                (u - v).abs() > 1e-12 * (1.0 + u.abs().max(v.abs()))
            });
            if asym {
                return Err(ObjectiveError::NotSymmetric(i));
            }
        }
        let (lipschitz, strong_convexity) = quadratic_constants(p, &hessians);
        Ok(Self { p, hessians, linear, offsets, lipschitz, strong_convexity })
    }

    /// `f_i(x) = curvature_i / 2 * |x - center_i|^2`.
    pub fn isotropic(curvatures: &[f64], centers: &[Vec<f64>]) -> Result<Self, ObjectiveError> {
        let p = centers.first().map_or(0, Vec::len);
        if curvatures.len() != centers.len() {
            return Err(ObjectiveError::InvalidDimensions("one curvature per center".into()));
        }
        let hessians = curvatures
            .iter()
            .map(|&k| {
                let mut q = vec![0.0; p * p];
                (0..p).for_each(|d| q[d * p + d] = k);
                q
            })
            .collect();
        let linear = curvatures.iter().zip(centers).map(|(&k, c)| c.iter().map(|v| k * v).collect()).collect();
        let offsets = curvatures.iter().zip(centers).map(|(&k, c)| 0.5 * k * dot(c, c)).collect();
        Self::new(p, hessians, linear, offsets)
    }

    /// Random family whose Hessians have eigenvalues drawn uniformly from
    /// `[lo, hi]` in random orthonormal bases, with Gaussian linear terms.
    pub fn random_well_conditioned(n: usize, p: usize, lo: f64, hi: f64, seed: u64) -> Result<Self, ObjectiveError> {
        if n == 0 || p == 0 || !(0.0 < lo && lo <= hi) {
            return Err(ObjectiveError::InvalidDimensions(format!("n={n}, p={p}, eigenvalue range [{lo}, {hi}]")));
        }
        let mut rng = seeded(derive_seed(seed, 0x7175_6164));
        let mut hessians = Vec::with_capacity(n);
        let mut linear = Vec::with_capacity(n);
        for _ in 0..n {
            let g = DMatrix::from_fn(p, p, |_, _| gaussian(&mut rng));
            let basis = g.qr().q();
            let eig = DVector::from_fn(p, |_, _| lo + (hi - lo) * rng.random::<f64>());
            let q = &basis * DMatrix::from_diagonal(&eig) * basis.transpose();
            let q = (&q + q.transpose()) * 0.5;
            hessians.push(row_major(&q));
            linear.push(gaussian_vec(&mut rng, p));
        }
        Self::new(p, hessians, linear, vec![0.0; n])
    }

    pub fn hessian(&self, agent: usize) -> &[f64] {
        &self.hessians[agent]
    }

    pub fn linear_term(&self, agent: usize) -> &[f64] {
        &self.linear[agent]
    }

    /// `x* = (sum Q_i)^{-1} sum b_i`.
    pub fn optimum(&self) -> Result<Vec<f64>, ObjectiveError> {
        let p = self.p;
        let mut q_sum = DMatrix::<f64>::zeros(p, p);
        let mut b_sum = DVector::<f64>::zeros(p);
        for (q, b) in self.hessians.iter().zip(&self.linear) {
            q_sum += DMatrix::from_row_slice(p, p, q);
            b_sum += DVector::from_column_slice(b);
        }
        let chol = q_sum.cholesky().ok_or(ObjectiveError::Singular)?;
        Ok(chol.solve(&b_sum).iter().copied().collect())
    }

    /// `(L, mu)`.
    pub fn constants(&self) -> (f64, f64) {
        (self.lipschitz, self.strong_convexity)
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect()
}

/// `L = max_i lambda_max(Q_i)`, `mu = lambda_min(mean Q_i)`.
fn quadratic_constants(p: usize, hessians: &[Vec<f64>]) -> (f64, f64) {
    let mut lipschitz = f64::NEG_INFINITY;
    let mut mean = DMatrix::<f64>::zeros(p, p);
    for q in hessians {
        let m = DMatrix::from_row_slice(p, p, q);
        let eig = SymmetricEigen::new(m.clone()).eigenvalues;
        lipschitz = lipschitz.max(eig.max());
        mean += m;
    }
    mean /= hessians.len() as f64;
    let mu = SymmetricEigen::new(mean).eigenvalues.min();
    (lipschitz, mu)
}

impl ObjectiveFamily for QuadraticFamily {
    fn agents(&self) -> usize {
        self.hessians.len()
    }

    fn dim(&self) -> usize {
        self.p
    }

    fn gradient_into(&self, agent: usize, x: &[f64], out: &mut [f64]) {
        let q = &self.hessians[agent];
        let b = &self.linear[agent];
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(&q[r * self.p..(r + 1) * self.p], x) - b[r];
        }
    }

    fn value(&self, agent: usize, x: &[f64]) -> Option<f64> {
        let q = &self.hessians[agent];
        let quad: f64 = (0..self.p).map(|r| x[r] * dot(&q[r * self.p..(r + 1) * self.p], x)).sum();
        Some(0.5 * quad - dot(&self.linear[agent], x) + self.offsets[agent])
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
}

/// Regularized least squares: `f_i(x) = |z_i - H_i x|^2 + lambda_i |x|^2`,
/// so `Q_i = 2 (H_i^T H_i + lambda_i I)` and `b_i = 2 H_i^T z_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticSensorFusion {
    s: usize,
    measurements: Vec<Vec<f64>>,
    observations: Vec<Vec<f64>>,
    regularization: Vec<f64>,
    seed: Option<u64>,
    quadratic: QuadraticFamily,
}

impl QuadraticSensorFusion {
    /// `measurements[i]` is `H_i` (s x p, row-major).
    pub fn new(
        p: usize,
        measurements: Vec<Vec<f64>>,
        observations: Vec<Vec<f64>>,
        regularization: Vec<f64>,
    ) -> Result<Self, ObjectiveError> {
        let n = measurements.len();
        if n == 0 || p == 0 || observations.len() != n || regularization.len() != n {
            return Err(ObjectiveError::InvalidDimensions("need matching H_i, z_i, lambda_i for n >= 1 agents".into()));
        }
        let s = observations[0].len();
        if s == 0 {
            return Err(ObjectiveError::InvalidDimensions("observations must be non-empty".into()));
        }
        if let Some(&bad) = regularization.iter().find(|&&l| !(l >= 0.0 && l.is_finite())) {
            return Err(ObjectiveError::InvalidRegularization(bad));
        }
        let mut hessians = Vec::with_capacity(n);
        let mut linear = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for i in 0..n {
            let (h, z) = (&measurements[i], &observations[i]);
            if h.len() != s * p || z.len() != s {
                return Err(ObjectiveError::InvalidDimensions(format!("agent {i}: H must be {s}x{p}, z length {s}")));
            }
            let hm = DMatrix::from_row_slice(s, p, h);
            let zv = DVector::from_column_slice(z);
            let mut q = hm.transpose() * &hm;
            for d in 0..p {
                q[(d, d)] += regularization[i];
            }
            hessians.push(row_major(&(q * 2.0)));
            linear.push((hm.transpose() * zv * 2.0).iter().copied().collect());
            offsets.push(dot(z, z));
        }
        let quadratic = QuadraticFamily::new(p, hessians, linear, offsets)?;
        Ok(Self { s, measurements, observations, regularization, seed: None, quadratic })
    }

    pub fn quadratic(&self) -> &QuadraticFamily {
        &self.quadratic
    }

    pub fn measurement_rows(&self) -> usize {
        self.s
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn optimum(&self) -> Result<Vec<f64>, ObjectiveError> {
        self.quadratic.optimum()
    }

    pub fn constants(&self) -> (f64, f64) {
        self.quadratic.constants()
    }

    pub fn to_file(&self) -> SensorFusionFile {
        SensorFusionFile {
            n: self.measurements.len(),
            p: self.quadratic.p,
            s: self.s,
            seed: self.seed,
            measurements: self.measurements.clone(),
            observations: self.observations.clone(),
            regularization: self.regularization.clone(),
        }
    }

    pub fn from_file(file: &SensorFusionFile) -> Result<Self, ObjectiveError> {
        if file.measurements.len() != file.n || file.observations.iter().any(|z| z.len() != file.s) {
            return Err(ObjectiveError::File("declared dimensions do not match the data".into()));
        }
        let mut out = Self::new(
            file.p,
            file.measurements.clone(),
            file.observations.clone(),
            file.regularization.clone(),
        )?;
        out.seed = file.seed;
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ObjectiveError> {
        let file: SensorFusionFile = serde_json::from_str(text).map_err(|e| ObjectiveError::File(e.to_string()))?;
        Self::from_file(&file)
    }
}

impl ObjectiveFamily for QuadraticSensorFusion {
    fn agents(&self) -> usize {
        self.quadratic.agents()
    }
    fn dim(&self) -> usize {
        self.quadratic.dim()
    }
    fn gradient_into(&self, agent: usize, x: &[f64], out: &mut [f64]) {
        self.quadratic.gradient_into(agent, x, out)
    }
    fn value(&self, agent: usize, x: &[f64]) -> Option<f64> {
        // evaluated from the residual form rather than the expanded quadratic
        let (s, p) = (self.s, self.quadratic.p);
        let h = &self.measurements[agent];
        let z = &self.observations[agent];
        let residual: f64 = (0..s).map(|r| (z[r] - dot(&h[r * p..(r + 1) * p], x)).powi(2)).sum();
        Some(residual + self.regularization[agent] * dot(x, x))
    }
    fn lipschitz(&self) -> f64 {
        self.quadratic.lipschitz()
    }
    fn strong_convexity(&self) -> f64 {
        self.quadratic.strong_convexity()
    }
}

/// Replayable problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorFusionFile {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub seed: Option<u64>,
    /// `H_i`, row-major `s x p` each.
    pub measurements: Vec<Vec<f64>>,
    pub observations: Vec<Vec<f64>>,
    pub regularization: Vec<f64>,
}

/// The benchmark instance: `H_i` with i.i.d. uniform `[0, 1)` entries,
/// rescaled so that `lambda_max(2 H_i^T H_i) = 1`; `z_i = H_i x_true + w_i`
/// with `x_true` and `w_i` standard normal; `lambda_i = lambda` for all agents.
pub fn make_sensor_fusion(n: usize, p: usize, s: usize, lambda: f64, seed: u64) -> Result<QuadraticSensorFusion, ObjectiveError> {
    if n == 0 || p == 0 || s == 0 {
        return Err(ObjectiveError::InvalidDimensions(format!("n={n}, p={p}, s={s}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ObjectiveError::InvalidRegularization(lambda));
    }
    let mut rng = seeded(derive_seed(seed, 0x7365_6e73));
    let x_true = gaussian_vec(&mut rng, p);
    let mut measurements = Vec::with_capacity(n);
    let mut observations = Vec::with_capacity(n);
    for _ in 0..n {
        let mut h: Vec<f64> = (0..s * p).map(|_| rng.random::<f64>()).collect();
        let hm = DMatrix::from_row_slice(s, p, &h);
        let top = SymmetricEigen::new(hm.transpose() * &hm).eigenvalues.max();
        let scale = if top > 0.0 { 1.0 / (2.0 * top).sqrt() } else { 1.0 };
        h.iter_mut().for_each(|v| *v *= scale);
        let z: Vec<f64> = (0..s).map(|r| dot(&h[r * p..(r + 1) * p], &x_true) + gaussian(&mut rng)).collect();
        measurements.push(h);
        observations.push(z);
    }
    let mut family = QuadraticSensorFusion::new(p, measurements, observations, vec![lambda; n])?;
    family.seed = Some(seed);
    Ok(family)
}

/// `q(alpha) = max(|1 - alpha mu|, |1 - alpha L|)`.
pub fn gradient_contraction_factor(alpha: f64, mu: f64, lipschitz: f64) -> f64 {
    (1.0 - alpha * mu).abs().max((1.0 - alpha * lipschitz).abs())
}

/// Largest observed ratios against each assumption, all `<= 1` on success.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub samples: usize,
    /// max `|grad f_i(x) - grad f_i(u)| / (L |x - u|)`
    pub lipschitz_ratio: f64,
    /// max `mu |x - u|^2 / <grad f(x) - grad f(u), x - u>`
    pub convexity_ratio: f64,
    /// max `|x - x* - alpha grad f(x)| / (q(alpha) |x - x*|)` over the grid,
    /// when an optimum was supplied
    pub contraction_ratio: Option<f64>,
}

const CONDITION_SLACK: f64 = 1e-10;

/// Samples random pairs and checks smoothness and strong convexity; if
/// `optimum` is given, also checks the gradient-step contraction of the
/// average `f` for each `alpha` in `alphas` (all inside `(0, 2/L)`).
pub fn check_lipschitz_and_convexity(
    f: &dyn ObjectiveFamily,
    optimum: Option<&[f64]>,
    alphas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<ConditionReport, ObjectiveError> {
    if trials == 0 {
        return Err(ObjectiveError::NoTrials);
    }
    let (n, p) = (f.agents(), f.dim());
    let (lip, mu) = (f.lipschitz(), f.strong_convexity());
    let scale = 1.0 + optimum.map_or(0.0, norm);
    let mut rng = seeded(derive_seed(seed, 0x6368_6b));
    let mut report = ConditionReport { samples: trials, lipschitz_ratio: 0.0, convexity_ratio: 0.0, contraction_ratio: None };

    let mut gx = vec![0.0; p];
    let mut gu = vec![0.0; p];
    for sample in 0..trials {
        let x: Vec<f64> = gaussian_vec(&mut rng, p).iter().map(|v| v * scale).collect();
        let u: Vec<f64> = gaussian_vec(&mut rng, p).iter().map(|v| v * scale).collect();
        let d = dist(&x, &u);
        let mut avg_diff = vec![0.0; p];
        for i in 0..n {
            f.gradient_into(i, &x, &mut gx);
            f.gradient_into(i, &u, &mut gu);
            let diff = sub(&gx, &gu);
            let lhs = norm(&diff);
            let rhs = lip * d;
            if lhs > rhs * (1.0 + CONDITION_SLACK) {
                return Err(ObjectiveError::ConditionViolated { kind: "Lipschitz gradient", sample, lhs, rhs });
            }
            report.lipschitz_ratio = report.lipschitz_ratio.max(lhs / rhs);
            axpy(1.0 / n as f64, &diff, &mut avg_diff);
        }
        let inner = dot(&avg_diff, &sub(&x, &u));
        let lower = mu * d * d;
        if inner < lower * (1.0 - CONDITION_SLACK) {
            return Err(ObjectiveError::ConditionViolated { kind: "strong convexity", sample, lhs: inner, rhs: lower });
        }
        report.convexity_ratio = report.convexity_ratio.max(lower / inner);

        if let Some(opt) = optimum {
            let mut avg_grad = f.total_gradient(&x);
            avg_grad.iter_mut().for_each(|g| *g /= n as f64);
            let gap = dist(&x, opt);
            for &alpha in alphas {
                let stepped: Vec<f64> = (0..p).map(|d| x[d] - opt[d] - alpha * avg_grad[d]).collect();
                let lhs = norm(&stepped);
                let rhs = gradient_contraction_factor(alpha, mu, lip) * gap;
                if lhs > rhs * (1.0 + CONDITION_SLACK) {
                    return Err(ObjectiveError::ConditionViolated { kind: "gradient contraction", sample, lhs, rhs });
                }
                if rhs > 0.0 {
                    let ratio = lhs / rhs;
                    report.contraction_ratio = Some(report.contraction_ratio.map_or(ratio, |r: f64| r.max(ratio)));
                }
            }
        }
    }
    Ok(report)
}

/// `k` equally spaced stepsizes strictly inside `(0, 2/L)`.
pub fn stepsize_grid(lipschitz: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|j| 2.0 * j as f64 / ((k + 1) as f64 * lipschitz)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_family(h: f64, z: f64, lambda: f64) -> QuadraticSensorFusion {
        QuadraticSensorFusion::new(1, vec![vec![h]], vec![vec![z]], vec![lambda]).unwrap()
    }

    #[test]
    fn single_scalar_agent() {
        let f = scalar_family(1.0, 0.0, 1.0);
        assert_eq!(f.value(0, &[3.0]), Some(18.0));
        assert_eq!(f.gradient(0, &[3.0]), vec![12.0]);
        assert_eq!(f.optimum().unwrap(), vec![0.0]);
    }

    #[test]
    fn identity_measurements_give_shrunk_observation() {
        // H = I, lambda = 0.01: x* = b / 1.01
        let p = 3;
        let mut h = vec![0.0; 9];
        (0..p).for_each(|d| h[d * p + d] = 1.0);
        let b = vec![1.0, -2.0, 0.5];
        let f = QuadraticSensorFusion::new(p, vec![h], vec![b.clone()], vec![0.01]).unwrap();
        let x = f.optimum().unwrap();
        for d in 0..p {
            assert!((x[d] - b[d] / 1.01).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_observations_give_zero_optimum() {
        let mut f = make_sensor_fusion(5, 4, 2, 0.1, 3).unwrap();
        f.observations.iter_mut().for_each(|z| z.iter_mut().for_each(|v| *v = 0.0));
        let g = QuadraticSensorFusion::new(4, f.measurements.clone(), f.observations.clone(), f.regularization.clone())
            .unwrap();
        assert!(g.optimum().unwrap().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn identity_hessian_constants() {
        // H_i = I, lambda = 0: Q_i = 2I so L = mu = 2
        let p = 2;
        let h = vec![1.0, 0.0, 0.0, 1.0];
        let f = QuadraticSensorFusion::new(p, vec![h.clone(); 4], vec![vec![0.3, 0.1]; 4], vec![0.0; 4]).unwrap();
        let (l, mu) = f.constants();
        assert!((l - 2.0).abs() < 1e-14 && (mu - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_unit_row_constants() {
        // 2 (h h^T + 0.01 I) with |h| = 1 has top eigenvalue 2.02
        let h = vec![0.6, 0.8, 0.0];
        let f = QuadraticSensorFusion::new(3, vec![h], vec![vec![1.0]], vec![0.01]).unwrap();
        assert!((f.constants().0 - 2.02).abs() < 1e-13);
        assert!((f.constants().1 - 0.02).abs() < 1e-13);
    }

    #[test]
    fn benchmark_normalization() {
        let f = make_sensor_fusion(20, 20, 1, 0.01, 1).unwrap();
        for i in 0..20 {
            let h = DMatrix::from_row_slice(1, 20, &f.measurements[i]);
            let top = SymmetricEigen::new(h.transpose() * &h * 2.0).eigenvalues.max();
            assert!((top - 1.0).abs() < 1e-12);
        }
        let (l, mu) = f.constants();
        assert!((l - 1.02).abs() < 1e-12);
        assert!(mu > 0.0 && mu <= l);
        assert_eq!(f.seed(), Some(1));
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(make_sensor_fusion(0, 2, 1, 0.1, 0), Err(ObjectiveError::InvalidDimensions(_))));
        assert!(matches!(make_sensor_fusion(2, 2, 1, 0.0, 0), Err(ObjectiveError::InvalidRegularization(_))));
        assert!(matches!(
            QuadraticFamily::new(2, vec![vec![1.0, 2.0, 0.0, 1.0]], vec![vec![0.0, 0.0]], vec![0.0]),
            Err(ObjectiveError::NotSymmetric(0))
        ));
        let singular = QuadraticSensorFusion::new(2, vec![vec![1.0, 0.0]], vec![vec![1.0]], vec![0.0]).unwrap();
        assert_eq!(singular.optimum(), Err(ObjectiveError::Singular));
    }

    #[test]
    fn half_square_contraction_examples() {
        // f(x) = x^2 / 2: L = mu = 1, q(alpha) = |1 - alpha|
        let f = QuadraticFamily::isotropic(&[1.0], &[vec![0.0]]).unwrap();
        assert_eq!(gradient_contraction_factor(1.0, 1.0, 1.0), 0.0);
        let rep = check_lipschitz_and_convexity(&f, Some(&[0.0]), &[1.0, 0.5], 50, 1).unwrap();
        assert!(rep.lipschitz_ratio <= 1.0 + 1e-12);
        // at alpha = 2/L the |1 - alpha L| term reaches 1 and dominates |1 - 2 mu / L|
        assert_eq!(gradient_contraction_factor(2.0 / 1.02, 0.02, 1.02), 1.0);
    }

    #[test]
    fn sensor_family_passes_checks_at_inverse_l() {
        let f = make_sensor_fusion(20, 20, 1, 0.01, 4).unwrap();
        let x_star = f.optimum().unwrap();
        let (l, mu) = f.constants();
        let rep = check_lipschitz_and_convexity(&f, Some(&x_star), &[1.0 / l], 1000, 9).unwrap();
        assert!(rep.contraction_ratio.unwrap() <= 1.0 + 1e-10);
        assert!((gradient_contraction_factor(1.0 / l, mu, l) - (1.0 - mu / l)).abs() < 1e-15);
    }

    #[test]
    fn overstated_convexity_is_reported() {
        let f = QuadraticFamily::isotropic(&[1.0, 3.0], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut bad = f.clone();
        bad.strong_convexity = 5.0;
        assert!(matches!(
            check_lipschitz_and_convexity(&bad, None, &[], 10, 0),
            Err(ObjectiveError::ConditionViolated { kind: "strong convexity", sample: 0, .. })
        ));
        assert!(matches!(check_lipschitz_and_convexity(&f, None, &[], 0, 0), Err(ObjectiveError::NoTrials)));
    }

    #[test]
    fn json_roundtrip_preserves_instance() {
        let f = make_sensor_fusion(3, 4, 2, 0.05, 8).unwrap();
        let g = QuadraticSensorFusion::from_json(&f.to_json()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn grid_is_inside_open_interval() {
        let grid = stepsize_grid(2.0, 10);
        assert_eq!(grid.len(), 10);
        assert!(grid.iter().all(|&a| a > 0.0 && a < 1.0));
    }
}
