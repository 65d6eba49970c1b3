//! Butcher tableaux and paired ARK methods.

use thiserror::Error;

/// Absolute tolerance for the row-sum consistency check `c_i = sum_j a_ij`.
pub const ROW_SUM_TOL: f64 = 1e-13;

/// Absolute tolerance for the stiffly-accurate check (last row of `a` equals `b`).
pub const STIFFLY_ACCURATE_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum TableauError {
    #[error("tableau has inconsistent dimensions (a: {a_rows} rows, b: {b_len}, c: {c_len})")]
    Dimensions { a_rows: usize, b_len: usize, c_len: usize },
    #[error("explicit tableau has nonzero entry on or above the diagonal at ({row}, {col})")]
    NotStrictlyLower { row: usize, col: usize },
    #[error("implicit tableau has nonzero entry above the diagonal at ({row}, {col})")]
    NotLowerTriangular { row: usize, col: usize },
    #[error("implicit tableau has negative diagonal entry {value} at stage {row}")]
    NegativeDiagonal { row: usize, value: f64 },
    #[error("row {row} sums to {sum} but c[{row}] = {c} (residual {residual:e} exceeds {ROW_SUM_TOL:e})")]
    RowSum { row: usize, sum: f64, c: f64, residual: f64 },
}

/// Which triangular form a tableau is required to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableauKind {
    /// `a` strictly lower triangular.
    Explicit,
    /// `a` lower triangular with nonnegative diagonal.
    DiagonallyImplicit,
}

/// One Runge-Kutta coefficient set `(a, b, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    kind: TableauKind,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// Build and validate a tableau. `a` is row-major, `s x s`.
    pub fn new(
        kind: TableauKind,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> Result<Self, TableauError> {
        let t = ButcherTableau { kind, a, b, c };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), TableauError> {
        let s = self.b.len();
        if self.c.len() != s || self.a.len() != s || self.a.iter().any(|r| r.len() != s) {
            return Err(TableauError::Dimensions {
                a_rows: self.a.len(),
                b_len: s,
                c_len: self.c.len(),
            });
        }
        for (i, row) in self.a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                match self.kind {
                    TableauKind::Explicit if j >= i && v != 0.0 => {
                        return Err(TableauError::NotStrictlyLower { row: i, col: j });
                    }
                    TableauKind::DiagonallyImplicit if j > i && v != 0.0 => {
                        return Err(TableauError::NotLowerTriangular { row: i, col: j });
                    }
                    _ => {}
                }
            }
            if self.kind == TableauKind::DiagonallyImplicit && row[i] < 0.0 {
                return Err(TableauError::NegativeDiagonal { row: i, value: row[i] });
            }
        }
        for i in 0..s {
            let sum: f64 = self.a[i].iter().sum();
            let residual = (sum - self.c[i]).abs();
            if residual > ROW_SUM_TOL {
                return Err(TableauError::RowSum { row: i, sum, c: self.c[i], residual });
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> TableauKind {
        self.kind
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Diagonal entries of `a`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.stages()).map(|i| self.a[i][i]).collect()
    }

    /// Number of stages with a nonzero diagonal entry, i.e. the number of
    /// implicit solves per step when this is the implicit tableau.
    pub fn nonzero_diagonal_count(&self) -> usize {
        self.diagonal().iter().filter(|&&d| d != 0.0).count()
    }

    /// Largest `|sum_j a_ij - c_i|` over rows.
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.stages())
            .map(|i| (self.a[i].iter().sum::<f64>() - self.c[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Whether the last row of `a` equals `b` within [`STIFFLY_ACCURATE_TOL`].
    pub fn is_stiffly_accurate(&self) -> bool {
        let s = self.stages();
        self.a[s - 1]
            .iter()
            .zip(&self.b)
            .all(|(aij, bj)| (aij - bj).abs() <= STIFFLY_ACCURATE_TOL)
    }

    /// True when every entry of `a` and `b` is zero (placeholder implicit
    /// tableau of a pure explicit method).
    pub fn is_zero(&self) -> bool {
        self.b.iter().all(|&x| x == 0.0)
            && self.a.iter().all(|r| r.iter().all(|&x| x == 0.0))
    }
}

#[derive(Debug, Error)]
pub enum MethodError {
    #[error("method {name}: {source}")]
    Tableau {
        name: String,
        #[source]
        source: TableauError,
    },
    #[error("method {name}: explicit tableau has {explicit} stages but implicit has {implicit}")]
    StageMismatch { name: String, explicit: usize, implicit: usize },
    #[error("method {name}: declares {declared} implicit solves but the implicit tableau has {actual} nonzero diagonal entries")]
    ImplicitSolveCount { name: String, declared: usize, actual: usize },
    #[error("method {name}: flagged pure-explicit but the implicit tableau is not identically zero")]
    NotPureExplicit { name: String },
}

/// A paired explicit/diagonally-implicit tableau with declared metadata.
#[derive(Debug, Clone)]
pub struct ArkMethod {
    pub name: String,
    pub explicit: ButcherTableau,
    pub implicit: ButcherTableau,
    /// Overall order of accuracy the method is declared to have.
    pub declared_order: u32,
    /// Declared number of stages requiring a nonlinear solve per step.
    pub declared_implicit_solves: u32,
    /// Declared number of stages requiring an explicit right-hand-side
    /// evaluation per step.
    pub declared_explicit_evals: u32,
    /// True for purely explicit entries stored with an all-zero implicit
    /// tableau so one stepper path serves every method.
    pub is_pure_explicit: bool,
}

impl ArkMethod {
    pub fn validate(&self) -> Result<(), MethodError> {
        if self.explicit.stages() != self.implicit.stages() {
            return Err(MethodError::StageMismatch {
                name: self.name.clone(),
                explicit: self.explicit.stages(),
                implicit: self.implicit.stages(),
            });
        }
        let actual = self.implicit.nonzero_diagonal_count();
        if actual != self.declared_implicit_solves as usize {
            return Err(MethodError::ImplicitSolveCount {
                name: self.name.clone(),
                declared: self.declared_implicit_solves as usize,
                actual,
            });
        }
        if self.is_pure_explicit && !self.implicit.is_zero() {
            return Err(MethodError::NotPureExplicit { name: self.name.clone() });
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.explicit.stages()
    }

    /// Bitwise equality of the two weight vectors.
    pub fn shares_b(&self) -> bool {
        self.explicit
            .b()
            .iter()
            .zip(self.implicit.b())
            .all(|(x, y)| x.to_bits() == y.to_bits())
    }

    /// Bitwise equality of the two abscissa vectors.
    pub fn shares_c(&self) -> bool {
        self.explicit
            .c()
            .iter()
            .zip(self.implicit.c())
            .all(|(x, y)| x.to_bits() == y.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forward_euler() -> ButcherTableau {
        ButcherTableau::new(TableauKind::Explicit, vec![vec![0.0]], vec![1.0], vec![0.0]).unwrap()
    }

    #[test]
    fn rejects_upper_entry_in_explicit() {
        let err = ButcherTableau::new(
            TableauKind::Explicit,
            vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        )
        .unwrap_err();
        assert!(matches!(err, TableauError::NotStrictlyLower { row: 0, col: 1 }));
    }

    #[test]
    fn rejects_row_sum_mismatch_naming_the_row() {
        let err = ButcherTableau::new(
            TableauKind::Explicit,
            vec![vec![0.0, 0.0], vec![0.6, 0.0]],
            vec![0.5, 0.5],
            vec![0.0, 0.5],
        )
        .unwrap_err();
        match err {
            TableauError::RowSum { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_implicit_diagonal() {
        let err = ButcherTableau::new(
            TableauKind::DiagonallyImplicit,
            vec![vec![-0.25]],
            vec![1.0],
            vec![-0.25],
        )
        .unwrap_err();
        assert!(matches!(err, TableauError::NegativeDiagonal { row: 0, .. }));
    }

    #[test]
    fn implicit_solve_count_invariant() {
        let m = ArkMethod {
            name: "euler-pair".into(),
            explicit: forward_euler(),
            implicit: ButcherTableau::new(
                TableauKind::DiagonallyImplicit,
                vec![vec![0.0]],
                vec![1.0],
                vec![0.0],
            )
            .unwrap(),
            declared_order: 1,
            declared_implicit_solves: 1,
            declared_explicit_evals: 1,
            is_pure_explicit: false,
        };
        assert!(matches!(m.validate(), Err(MethodError::ImplicitSolveCount { .. })));
    }
}
