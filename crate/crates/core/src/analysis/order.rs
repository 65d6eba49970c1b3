//! Algebraic order conditions for ARK pairs, through order 3.
//!
//! An additive pair must satisfy, besides each tableau's standalone
//! conditions, coupling conditions built from bi-colored trees: every
//! combination of weight vector, coefficient matrix, and abscissa vector
//! drawn from the two tableaux appears. Beyond order 3 the number of
//! coupling trees grows too quickly to be worth enumerating; higher declared
//! orders are certified empirically by the convergence harness.

use thiserror::Error;

use crate::tableau::{ArkMethod, ButcherTableau};

/// Residual tolerance below which a condition counts as satisfied.
pub const ORDER_CONDITION_TOL: f64 = 1e-12;

/// Highest order the algebraic checker covers.
pub const MAX_ALGEBRAIC_ORDER: u32 = 3;

#[derive(Debug, Error)]
pub enum OrderError {
    #[error("target order {0} not supported; algebraic conditions stop at {MAX_ALGEBRAIC_ORDER}")]
    UnsupportedOrder(u32),
}

/// One evaluated condition.
#[derive(Debug, Clone)]
pub struct ConditionResidual {
    /// Human-readable label, e.g. `b^E . (c^I*c^I) = 1/3`.
    pub label: String,
    pub order: u32,
    pub residual: f64,
}

/// Outcome of checking all conditions through a target order.
#[derive(Debug, Clone)]
pub struct OrderCheck {
    pub target_order: u32,
    pub passed: bool,
    pub max_residual: f64,
    pub residuals: Vec<ConditionResidual>,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

struct Side<'a> {
    tag: &'static str,
    a: &'a [Vec<f64>],
    b: &'a [f64],
    c: &'a [f64],
}

fn sides(m: &ArkMethod) -> [Side<'_>; 2] {
    [
        Side { tag: "E", a: m.explicit.a(), b: m.explicit.b(), c: m.explicit.c() },
        Side { tag: "I", a: m.implicit.a(), b: m.implicit.b(), c: m.implicit.c() },
    ]
}

fn conditions_at_order(m: &ArkMethod, order: u32) -> Vec<ConditionResidual> {
    let sd = sides(m);
    let mut out = Vec::new();
    match order {
        1 => {
            for s in &sd {
                out.push(ConditionResidual {
                    label: format!("sum b^{} = 1", s.tag),
                    order,
                    residual: (s.b.iter().sum::<f64>() - 1.0).abs(),
                });
            }
        }
        2 => {
            for s in &sd {
                for t in &sd {
                    out.push(ConditionResidual {
                        label: format!("b^{} . c^{} = 1/2", s.tag, t.tag),
                        order,
                        residual: (dot(s.b, t.c) - 0.5).abs(),
                    });
                }
            }
        }
        3 => {
            for s in &sd {
                for (i, t) in sd.iter().enumerate() {
                    for u in &sd[i..] {
                        let cc: Vec<f64> =
                            t.c.iter().zip(u.c).map(|(x, y)| x * y).collect();
                        out.push(ConditionResidual {
                            label: format!("b^{} . (c^{}*c^{}) = 1/3", s.tag, t.tag, u.tag),
                            order,
                            residual: (dot(s.b, &cc) - 1.0 / 3.0).abs(),
                        });
                    }
                }
            }
            for s in &sd {
                for t in &sd {
                    for u in &sd {
                        let ac = mat_vec(t.a, u.c);
                        out.push(ConditionResidual {
                            label: format!("b^{} . A^{} c^{} = 1/6", s.tag, t.tag, u.tag),
                            order,
                            residual: (dot(s.b, &ac) - 1.0 / 6.0).abs(),
                        });
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

/// Evaluate every ARK condition through `target_order` (standalone conditions
/// for each tableau plus all additive coupling conditions). The pair passes
/// when every residual is at most [`ORDER_CONDITION_TOL`].
pub fn check_order_conditions(m: &ArkMethod, target_order: u32) -> Result<OrderCheck, OrderError> {
    if !(1..=MAX_ALGEBRAIC_ORDER).contains(&target_order) {
        return Err(OrderError::UnsupportedOrder(target_order));
    }
    let mut residuals = Vec::new();
    for k in 1..=target_order {
        residuals.extend(conditions_at_order(m, k));
    }
    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(OrderCheck {
        target_order,
        passed: max_residual <= ORDER_CONDITION_TOL,
        max_residual,
        residuals,
    })
}

fn standalone_residual(t: &ButcherTableau, order: u32) -> f64 {
    let b = t.b();
    let c = t.c();
    match order {
        1 => (b.iter().sum::<f64>() - 1.0).abs(),
        2 => (dot(b, c) - 0.5).abs(),
        3 => {
            let cc: Vec<f64> = c.iter().map(|x| x * x).collect();
            let ac = mat_vec(t.a(), c);
            (dot(b, &cc) - 1.0 / 3.0).abs().max((dot(b, &ac) - 1.0 / 6.0).abs())
        }
        _ => f64::INFINITY,
    }
}

/// Largest order (up to 3) at which a single tableau satisfies its own
/// Runge-Kutta conditions.
pub fn standalone_order(t: &ButcherTableau) -> u32 {
    let mut order = 0;
    for k in 1..=MAX_ALGEBRAIC_ORDER {
        if standalone_residual(t, k) <= ORDER_CONDITION_TOL {
            order = k;
        } else {
            break;
        }
    }
    order
}

/// Largest order (up to 3) at which the full additive condition set passes.
pub fn coupled_order(m: &ArkMethod) -> u32 {
    let mut order = 0;
    for k in 1..=MAX_ALGEBRAIC_ORDER {
        let max = conditions_at_order(m, k)
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max);
        if max <= ORDER_CONDITION_TOL {
            order = k;
        } else {
            break;
        }
    }
    order
}

/// Stage-order residual tolerance.
pub const STAGE_ORDER_TOL: f64 = 1e-12;

/// Largest `q` such that `sum_j a_ij c_j^(k-1) = c_i^k / k` holds for every
/// stage and every `k <= q`. Zero is a valid answer. Capped at 9.
pub fn stage_order(t: &ButcherTableau) -> u32 {
    let s = t.stages();
    let mut q = 0;
    for k in 1..=9u32 {
        let mut ok = true;
        for i in 0..s {
            let lhs: f64 = (0..s)
                .map(|j| t.a()[i][j] * t.c()[j].powi(k as i32 - 1))
                .sum();
            let rhs = t.c()[i].powi(k as i32) / k as f64;
            if (lhs - rhs).abs() > STAGE_ORDER_TOL {
                ok = false;
                break;
            }
        }
        if ok {
            q = k;
        } else {
            break;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_method;
    use crate::tableau::TableauKind;

    fn forward_euler_pair() -> ArkMethod {
        let exp = ButcherTableau::new(TableauKind::Explicit, vec![vec![0.0]], vec![1.0], vec![0.0])
            .unwrap();
        let imp = ButcherTableau::new(
            TableauKind::DiagonallyImplicit,
            vec![vec![0.0]],
            vec![1.0],
            vec![0.0],
        )
        .unwrap();
        ArkMethod {
            name: "euler-pair".into(),
            explicit: exp,
            implicit: imp,
            declared_order: 1,
            declared_implicit_solves: 0,
            declared_explicit_evals: 1,
            is_pure_explicit: false,
        }
    }

    #[test]
    fn forward_euler_pair_is_first_order() {
        let m = forward_euler_pair();
        assert!(check_order_conditions(&m, 1).unwrap().passed);
        assert!(!check_order_conditions(&m, 2).unwrap().passed);
        assert_eq!(coupled_order(&m), 1);
    }

    #[test]
    fn dbm453_passes_order_three() {
        let m = get_method("DBM453").unwrap();
        let check = check_order_conditions(&m, 3).unwrap();
        assert!(check.passed, "max residual {:e}", check.max_residual);
        // order-3 set has 2 + 4 + 6 + 8 = 20 conditions
        assert_eq!(check.residuals.len(), 20);
    }

    #[test]
    fn ars232_is_second_order_not_third() {
        let m = get_method("ARS232").unwrap();
        assert!(check_order_conditions(&m, 2).unwrap().passed);
        assert!(!check_order_conditions(&m, 3).unwrap().passed);
    }

    #[test]
    fn passing_at_k_implies_passing_below_k() {
        for name in crate::catalog::REQUIRED_METHODS {
            let m = get_method(name).unwrap();
            if m.is_pure_explicit {
                continue;
            }
            let k = coupled_order(&m);
            for lower in 1..=k {
                assert!(
                    check_order_conditions(&m, lower).unwrap().passed,
                    "{name} fails at order {lower} though coupled order is {k}"
                );
            }
        }
    }

    #[test]
    fn stage_orders_match_known_cases() {
        let implicit_euler = ButcherTableau::new(
            TableauKind::DiagonallyImplicit,
            vec![vec![1.0]],
            vec![1.0],
            vec![1.0],
        )
        .unwrap();
        assert_eq!(stage_order(&implicit_euler), 1);
        assert_eq!(stage_order(&get_method("ARK324").unwrap().implicit), 2);
        assert_eq!(stage_order(&get_method("DBM453").unwrap().explicit), 1);
        assert_eq!(stage_order(&get_method("SSP2232").unwrap().implicit), 2);
    }

    #[test]
    fn rejects_order_above_three() {
        let m = forward_euler_pair();
        assert!(matches!(
            check_order_conditions(&m, 4),
            Err(OrderError::UnsupportedOrder(4))
        ));
    }
}
