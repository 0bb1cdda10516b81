//! Spectral radius of small nonnegative matrices.

use super::Mat3;

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn identity_minus(m: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| f64::from(u8::from(i == j)) - m[i][j]))
}

/// Largest real root of `t^3 + a t^2 + b t + c`.
fn largest_real_root(a: f64, b: f64, c: f64) -> f64 {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let t = if p.abs() < 1e-300 {
        (-q).cbrt()
    } else if disc > 0.0 {
        let s = disc.sqrt();
        (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        m * (arg.acos() / 3.0).cos()
    };
    let mut x = t - shift;
    // Newton polish on the unshifted polynomial
    for _ in 0..8 {
        let f = ((x + a) * x + b) * x + c;
        let df = (3.0 * x + 2.0 * a) * x + b;
        if df == 0.0 || !f.is_finite() {
            break;
        }
        let next = x - f / df;
        if !next.is_finite() || (next - x).abs() <= 1e-16 * x.abs().max(1.0) {
            if next.is_finite() {
                x = next;
            }
            break;
        }
        x = next;
    }
    x
}

/// Perron root of a nonnegative 3x3 matrix, from the characteristic cubic
/// of `M - I`. The shift keeps roots near 1 accurate when `M` is close to
/// the identity, where the unshifted cubic has a near-triple root.
pub fn spectral_radius(m: &Mat3) -> f64 {
    let n: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] - if i == j { 1.0 } else { 0.0 }));
    let tr = n[0][0] + n[1][1] + n[2][2];
    let minors = n[0][0] * n[1][1] - n[0][1] * n[1][0] + n[0][0] * n[2][2] - n[0][2] * n[2][0] + n[1][1] * n[2][2]
        - n[1][2] * n[2][1];
    (1.0 + largest_real_root(-tr, minors, -det3(&n))).max(0.0)
}

/// A nonnegative left eigenvector for the Perron root, normalized to sum 1:
/// `w^T M = rho w^T`.
pub fn left_perron_vector(m: &Mat3, rho: f64) -> [f64; 3] {
    // rows of M^T - rho I; w is orthogonal to all of them
    let rows: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| m[j][i] - if i == j { rho } else { 0.0 }));
    let cross = |u: &[f64; 3], v: &[f64; 3]| [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let candidates = [cross(&rows[0], &rows[1]), cross(&rows[0], &rows[2]), cross(&rows[1], &rows[2])];
    let best = candidates
        .iter()
        .max_by(|x, y| {
            let nx: f64 = x.iter().map(|v| v * v).sum();
            let ny: f64 = y.iter().map(|v| v * v).sum();
            nx.total_cmp(&ny)
        })
        .expect("three candidates");
    let scale: f64 = best.iter().map(|v| v.abs()).sum();
    let scale_m: f64 = m.iter().flatten().map(|v| v.abs()).sum::<f64>().max(1.0);
    if scale > 1e-10 * scale_m * scale_m {
        let sign = if best.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let w = best.map(|v| (sign * v / scale).max(0.0));
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return w.map(|v| v / total);
        }
    }
    power_left(m)
}

/// Power iteration on `M^T + I`, for matrices where the eigenspace is not
/// one-dimensional.
fn power_left(m: &Mat3) -> [f64; 3] {
    let mut w = [1.0 / 3.0; 3];
    for _ in 0..10_000 {
        let mut next: [f64; 3] = std::array::from_fn(|j| w[j] + (0..3).map(|i| w[i] * m[i][j]).sum::<f64>());
        let total: f64 = next.iter().sum();
        if total <= 0.0 {
            break;
        }
        next.iter_mut().for_each(|v| *v /= total);
        let delta: f64 = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum();
        w = next;
        if delta < 1e-15 {
            break;
        }
    }
    w
}

/// Sufficient condition for `rho(M) < 1` on a nonnegative matrix: every
/// diagonal entry below 1 and `det(I - M) > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralCertificate {
    pub rho: f64,
    pub det_identity_minus: f64,
    pub certified: bool,
}

pub fn spectral_certificate(m: &Mat3) -> SpectralCertificate {
    let det_identity_minus = det3(&identity_minus(m));
    let diag_ok = (0..3).all(|i| m[i][i] < 1.0);
    SpectralCertificate { rho: spectral_radius(m), det_identity_minus, certified: diag_ok && det_identity_minus > 0.0 }
}
