//! Linear stability analysis: R(z), A/L/algebraic stability, the maximum
//! stable explicit step along the imaginary axis, and stability-region
//! boundary sampling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::tableau::ButcherTableau;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("I - z*A is singular at z = {z} (pivot magnitude {pivot:e})")]
    SingularShift { z: Complex64, pivot: f64 },
}

/// Slack on `|R(iy)| <= 1` for the sampled A-stability check.
pub const A_STABILITY_TOL: f64 = 1e-9;

/// Number of geometrically spaced sample points on `y in [1e-3, 1e6]`.
pub const A_STABILITY_SAMPLES: usize = 4096;

/// `|R(infinity)|` below this counts as zero for L-stability.
pub const L_STABILITY_TOL: f64 = 1e-8;

/// Eigenvalues of the algebraic-stability matrix may undershoot zero by this.
pub const ALGEBRAIC_STABILITY_TOL: f64 = 1e-12;

/// Slack on `|P(iy)| <= 1` for the imaginary-axis scan: maximal methods sit
/// exactly on unit modulus over whole intervals.
pub const MAX_IMAG_SLACK: f64 = 1e-10;

/// Grid spacing and bisection tolerance of the imaginary-axis scan.
pub const MAX_IMAG_GRID: f64 = 1e-4;

/// Upper end of the imaginary-axis scan; no explicit method in the catalog
/// comes close to this.
pub const MAX_IMAG_CAP: f64 = 16.0;

/// Stability function `R(z) = 1 + z b^T (I - zA)^{-1} 1` of a (diagonally
/// implicit) tableau, by complex LU solve.
pub fn dirk_stability_function(
    t: &ButcherTableau,
    z: Complex64,
) -> Result<Complex64, StabilityError> {
    let s = t.stages();
    let mut m = DMatrix::<Complex64>::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            let delta = if i == j { 1.0 } else { 0.0 };
            m[(i, j)] = Complex64::new(delta, 0.0) - z * t.a()[i][j];
        }
    }
    // lower-triangular shifts are singular exactly when some 1 - z*a_ii = 0
    let min_pivot = (0..s)
        .map(|i| (Complex64::new(1.0, 0.0) - z * t.a()[i][i]).norm())
        .fold(f64::INFINITY, f64::min);
    let lu = m.lu();
    let rhs = DVector::<Complex64>::from_element(s, Complex64::new(1.0, 0.0));
    match lu.solve(&rhs) {
        Some(x) => {
            let bx: Complex64 = t.b().iter().zip(x.iter()).map(|(&bi, xi)| bi * xi).sum();
            Ok(Complex64::new(1.0, 0.0) + z * bx)
        }
        None => Err(StabilityError::SingularShift { z, pivot: min_pivot }),
    }
}

/// Explicit stability polynomial `P(z)` evaluated by the stage recursion
/// `u_i = 1 + z sum_{j<i} a_ij u_j`, `P = 1 + z sum_i b_i u_i`.
pub fn explicit_stability_polynomial(t: &ButcherTableau, z: Complex64) -> Complex64 {
    let s = t.stages();
    let one = Complex64::new(1.0, 0.0);
    let mut u = vec![Complex64::new(0.0, 0.0); s];
    for i in 0..s {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..i {
            acc += t.a()[i][j] * u[j];
        }
        u[i] = one + z * acc;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..s {
        acc += t.b()[i] * u[i];
    }
    one + z * acc
}

/// Sampled A-stability: `|R(iy)| <= 1 + 1e-9` on a geometric sample of
/// `y in [1e-3, 1e6]`. The maximum principle reduces the left-half-plane
/// bound to the imaginary axis for DIRK tableaux whose stability function is
/// analytic there (nonnegative diagonals put every pole in the right half
/// plane).
pub fn check_a_stability(t: &ButcherTableau) -> bool {
    let (lo, hi) = (1e-3_f64, 1e6_f64);
    let ratio = (hi / lo).ln();
    for k in 0..A_STABILITY_SAMPLES {
        let frac = k as f64 / (A_STABILITY_SAMPLES - 1) as f64;
        let y = lo * (ratio * frac).exp();
        match dirk_stability_function(t, Complex64::new(0.0, y)) {
            Ok(r) => {
                if r.norm() > 1.0 + A_STABILITY_TOL {
                    return false;
                }
            }
            Err(_) => return false,
        }
    }
    true
}

/// Value of `R` at infinity, or `Unbounded` when `|R(z)|` grows without
/// bound as `|z| -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RAtInfinity {
    Finite(f64),
    Unbounded,
}

fn det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

/// Sum of k-by-k principal minors of `m`, for k = 0..=s.
fn principal_minor_sums(m: &DMatrix<f64>) -> Vec<f64> {
    let s = m.nrows();
    let mut out = vec![0.0; s + 1];
    out[0] = 1.0;
    // enumerate index subsets by bitmask; s <= 8 for every catalog method
    for mask in 1u32..(1 << s) {
        let idx: Vec<usize> = (0..s).filter(|i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |r, c| m[(idx[r], idx[c])]);
        out[k] += det(&sub);
    }
    out
}

/// Evaluate `R(infinity)` exactly through the rational function's degree
/// structure: with `N(z) = det(I - zA + z 1 b^T)` and `D(z) = det(I - zA)`,
/// the coefficient of `z^k` is (up to sign) the sum of k-by-k principal
/// minors of `A - 1 b^T` resp. `A`. The denominator degree `d` equals the
/// number of nonzero diagonal entries (triangular `A`); structurally zero
/// first rows therefore reduce the degree rather than producing a singular
/// sub-block. `R(infinity) = n_d / d_d` when all higher numerator
/// coefficients vanish (below a tolerance scaled by the matrix magnitude),
/// and is unbounded otherwise.
pub fn stability_function_at_infinity(t: &ButcherTableau) -> RAtInfinity {
    let s = t.stages();
    let a = DMatrix::from_fn(s, s, |i, j| t.a()[i][j]);
    let n = DMatrix::from_fn(s, s, |i, j| t.a()[i][j] - t.b()[j]);
    let deg_d = t.nonzero_diagonal_count();
    let e_num = principal_minor_sums(&n);
    let scale = n.iter().fold(0.0_f64, |m, &x| m.max(x.abs())) + 1.0;
    for (k, &coeff) in e_num.iter().enumerate().skip(deg_d + 1) {
        if coeff.abs() > 1e-9 * scale.powi(k as i32) {
            return RAtInfinity::Unbounded;
        }
    }
    if deg_d == 0 {
        // R is the polynomial N(z): constant 1 only if all numerator
        // coefficients above degree 0 vanished, which the loop checked.
        return RAtInfinity::Finite(1.0);
    }
    let e_den = principal_minor_sums(&a);
    RAtInfinity::Finite(e_num[deg_d] / e_den[deg_d])
}

/// L-stability: A-stable and `R(infinity) = 0`.
pub fn check_l_stability(t: &ButcherTableau) -> bool {
    if !check_a_stability(t) {
        return false;
    }
    match stability_function_at_infinity(t) {
        RAtInfinity::Finite(r) => r.abs() <= L_STABILITY_TOL,
        RAtInfinity::Unbounded => false,
    }
}

/// Algebraic stability (sufficient for B-stability): `b >= 0` and
/// `M = diag(b) A + A^T diag(b) - b b^T` positive semidefinite.
pub fn check_algebraic_stability(t: &ButcherTableau) -> bool {
    let s = t.stages();
    if t.b().iter().any(|&bi| bi < -1e-13) {
        return false;
    }
    let m = DMatrix::from_fn(s, s, |i, j| {
        t.b()[i] * t.a()[i][j] + t.b()[j] * t.a()[j][i] - t.b()[i] * t.b()[j]
    });
    let eig = m.symmetric_eigen();
    eig.eigenvalues.iter().all(|&l| l >= -ALGEBRAIC_STABILITY_TOL)
}

fn unstable_at(t: &ButcherTableau, y: f64) -> bool {
    explicit_stability_polynomial(t, Complex64::new(0.0, y)).norm() > 1.0 + MAX_IMAG_SLACK
}

/// Largest `y >= 0` such that `|P(iy')| <= 1 + 1e-10` for all `y'` on a grid
/// of spacing 1e-4 in `[0, y]`, refined by bisection to absolute tolerance
/// 1e-4. Returns 0 when instability occurs arbitrarily close to the origin,
/// and [`MAX_IMAG_CAP`] if no violation is found below the cap.
pub fn max_imag_stable_step(t: &ButcherTableau) -> f64 {
    let n = (MAX_IMAG_CAP / MAX_IMAG_GRID).round() as usize;
    let mut last_ok = 0.0_f64;
    let mut first_bad = None;
    for k in 1..=n {
        let y = k as f64 * MAX_IMAG_GRID;
        if unstable_at(t, y) {
            first_bad = Some(y);
            break;
        }
        last_ok = y;
    }
    let Some(mut hi) = first_bad else {
        return MAX_IMAG_CAP;
    };
    let mut lo = last_ok;
    while hi - lo > MAX_IMAG_GRID / 4.0 {
        let mid = 0.5 * (lo + hi);
        if unstable_at(t, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Boundary samples of the stability regions of an ARK pair.
#[derive(Debug, Clone)]
pub struct StabilityBoundary {
    /// Points with `|P(z)| = 1` (within 1e-9), angle-parameterized.
    pub explicit_boundary: Vec<(f64, f64)>,
    /// Points with `|R(z)| = 1` (within 1e-9) for the implicit tableau.
    pub implicit_boundary: Vec<(f64, f64)>,
    /// `(y, |R(iy)|)` samples along the imaginary axis.
    pub implicit_axis: Vec<(f64, f64)>,
    /// Angles (radians) where boundary root-finding did not converge.
    pub failed_angles: Vec<f64>,
    pub resolution: usize,
}

/// Tolerance on `|P| - 1` at emitted boundary points.
pub const BOUNDARY_TOL: f64 = 1e-9;

fn boundary_along_ray<F>(modulus: F, theta: f64) -> Option<(f64, f64)>
where
    F: Fn(Complex64) -> f64,
{
    let dir = Complex64::new(theta.cos(), theta.sin());
    // march outward to bracket the outermost |.| = 1 crossing
    let mut lo = 0.0_f64;
    let mut hi = None;
    let mut r = 1e-3_f64;
    while r <= 64.0 {
        let v = modulus(dir * r);
        if v > 1.0 {
            hi = Some(r);
            break;
        }
        lo = r;
        r *= 1.05;
    }
    let mut hi = hi?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if modulus(dir * mid) > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (modulus(dir * lo) - 1.0).abs() <= BOUNDARY_TOL {
            let z = dir * lo;
            return Some((z.re, z.im));
        }
    }
    let z = dir * lo;
    if (modulus(z) - 1.0).abs() <= BOUNDARY_TOL {
        Some((z.re, z.im))
    } else {
        None
    }
}

/// Sample the explicit boundary `{z : |P(z)| = 1}` by angle-parameterized
/// root-finding, the implicit boundary `{z : |R(z)| = 1}`, and `|R(iy)|`
/// along the imaginary axis. Angles where no unit-modulus crossing is found
/// within the search radius are recorded in `failed_angles`, not fatal (an
/// A-stable implicit tableau has no boundary along left-half-plane rays).
pub fn stability_boundary(
    explicit: &ButcherTableau,
    implicit: Option<&ButcherTableau>,
    resolution: usize,
) -> StabilityBoundary {
    let mut out = StabilityBoundary {
        explicit_boundary: Vec::new(),
        implicit_boundary: Vec::new(),
        implicit_axis: Vec::new(),
        failed_angles: Vec::new(),
        resolution,
    };
    for k in 0..resolution {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
        match boundary_along_ray(|z| explicit_stability_polynomial(explicit, z).norm(), theta) {
            Some(p) => out.explicit_boundary.push(p),
            None => out.failed_angles.push(theta),
        }
        if let Some(imp) = implicit {
            if let Some(p) = boundary_along_ray(
                |z| dirk_stability_function(imp, z).map(|r| r.norm()).unwrap_or(f64::INFINITY),
                theta,
            ) {
                out.implicit_boundary.push(p);
            }
        }
    }
    if let Some(imp) = implicit {
        let n = resolution.max(2);
        for k in 0..n {
            let frac = k as f64 / (n - 1) as f64;
            let y = 1e-3 * (1e6_f64 / 1e-3).powf(frac);
            if let Ok(r) = dirk_stability_function(imp, Complex64::new(0.0, y)) {
                out.implicit_axis.push((y, r.norm()));
            }
        }
    }
    out
}
