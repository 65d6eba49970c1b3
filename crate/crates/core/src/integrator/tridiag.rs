//! Tridiagonal LU with partial pivoting, after LAPACK's DGTTRF/DGTTRS.
//!
//! Row interchanges between adjacent rows fill a second superdiagonal, which
//! the factorization stores alongside the multipliers so one factorization
//! serves any number of right-hand sides.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TridiagError {
    #[error("tridiagonal factorization hit an exact zero pivot at row {row}")]
    ZeroPivot { row: usize },
    #[error("tridiagonal system dimension mismatch: matrix {dim}, vector {len}")]
    Dimension { dim: usize, len: usize },
}

/// A tridiagonal matrix stored as three bands. `sub` and `sup` have length
/// `n - 1` (empty for `n = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty tridiagonal system");
        assert_eq!(sub.len() + 1, diag.len(), "subdiagonal length");
        assert_eq!(sup.len() + 1, diag.len(), "superdiagonal length");
        TridiagonalMatrix { sub, diag, sup }
    }

    pub fn identity(n: usize) -> Self {
        TridiagonalMatrix::new(vec![0.0; n - 1], vec![1.0; n], vec![0.0; n - 1])
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// LU factorization with partial pivoting. Fails only on an exact zero
    /// pivot, matching the LAPACK reference behavior.
    pub fn factor(&self) -> Result<TridiagonalLu, TridiagError> {
        let n = self.dim();
        let mut dl = self.sub.clone();
        let mut d = self.diag.clone();
        let mut du = self.sup.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                // no interchange
                if d[i] == 0.0 {
                    return Err(TridiagError::ZeroPivot { row: i });
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
                if i + 2 < n {
                    du2[i] = 0.0;
                }
            } else {
                // interchange rows i and i+1
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            return Err(TridiagError::ZeroPivot { row: n - 1 });
        }
        Ok(TridiagonalLu { dl, d, du, du2, swapped })
    }

    /// Convenience: factor once and solve one right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, TridiagError> {
        let lu = self.factor()?;
        let mut x = rhs.to_vec();
        lu.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Factored form; reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), TridiagError> {
        let n = self.dim();
        if b.len() != n {
            return Err(TridiagError::Dimension { dim: n, len: b.len() });
        }
        // forward elimination, replaying the row interchanges
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i + 1];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        // back substitution with the fill-in band
        b[n - 1] /= self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_solve(m: &TridiagonalMatrix, rhs: &[f64]) -> Vec<f64> {
        use nalgebra::{DMatrix, DVector};
        let n = m.dim();
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                m.diag()[i]
            } else if j + 1 == i {
                m.sub()[j]
            } else if i + 1 == j {
                m.sup()[i]
            } else {
                0.0
            }
        });
        let x = a.lu().solve(&DVector::from_column_slice(rhs)).unwrap();
        x.as_slice().to_vec()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn identity_returns_rhs() {
        let m = TridiagonalMatrix::identity(5);
        let rhs = vec![1.0, -2.0, 3.0, -4.0, 5.0];
        assert_eq!(m.solve(&rhs).unwrap(), rhs);
    }

    #[test]
    fn dim3_laplacian_solves_to_ones() {
        let m = TridiagonalMatrix::new(vec![-1.0, -1.0], vec![2.0, 2.0, 2.0], vec![-1.0, -1.0]);
        let x = m.solve(&[1.0, 0.0, 1.0]).unwrap();
        let dense = dense_solve(&m, &[1.0, 0.0, 1.0]);
        for (a, b) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in x.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_diagonal() {
        // first pivot is zero; partial pivoting must swap rather than fail
        let m = TridiagonalMatrix::new(vec![1.0], vec![0.0, 1.0], vec![1.0]);
        let x = m.solve(&[1.0, 2.0]).unwrap();
        // system: x2 = 1, x1 + x2 = 2
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_zero_pivot_reports_index() {
        let m = TridiagonalMatrix::new(vec![0.0], vec![0.0, 1.0], vec![0.0]);
        match m.factor() {
            Err(TridiagError::ZeroPivot { row }) => assert_eq!(row, 0),
            other => panic!("expected zero pivot, got {other:?}"),
        }
    }

    #[test]
    fn factorization_reusable_across_rhs() {
        let m = TridiagonalMatrix::new(vec![-1.0, -1.0, -1.0], vec![4.0; 4], vec![-1.0, -1.0, -1.0]);
        let lu = m.factor().unwrap();
        for rhs in [[1.0, 0.0, 0.0, 0.0], [0.5, -0.25, 8.0, 1.0]] {
            let mut x = rhs.to_vec();
            lu.solve_in_place(&mut x).unwrap();
            let r: Vec<f64> =
                m.apply(&x).iter().zip(rhs).map(|(ax, b)| ax - b).collect();
            assert!(norm(&r) <= 1e-12 * norm(&rhs));
        }
    }

    proptest! {
        #[test]
        fn random_diagonally_dominant_residual(seed in 0u64..200) {
            // deterministic pseudo-random diagonally dominant system, n = 50
            let n = 50;
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            };
            let sub: Vec<f64> = (0..n - 1).map(|_| next()).collect();
            let sup: Vec<f64> = (0..n - 1).map(|_| next()).collect();
            let diag: Vec<f64> = (0..n)
                .map(|i| {
                    let mut row = 0.0;
                    if i > 0 { row += sub[i - 1].abs(); }
                    if i + 1 < n { row += sup[i].abs(); }
                    row + 1.0 + next().abs()
                })
                .collect();
            let m = TridiagonalMatrix::new(sub, diag, sup);
            let rhs: Vec<f64> = (0..n).map(|_| next()).collect();
            let x = m.solve(&rhs).unwrap();
            let r: Vec<f64> = m.apply(&x).iter().zip(&rhs).map(|(ax, b)| ax - b).collect();
            prop_assert!(norm(&r) <= 1e-12 * norm(&rhs).max(1.0));
        }
    }
}
