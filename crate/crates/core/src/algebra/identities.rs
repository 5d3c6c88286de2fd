//! Deformed position/momentum algebra for the model `g = 1 + α x²`, `ḡ = 2α x²`,
//! expressed and checked exactly in the polynomial engine.

use std::fmt;

use serde::Serialize;

use super::polynomial::{Coefficient, OperatorPolynomial, OrderedMonomial, Truncation};
use crate::error::{Error, Result};

/// `x² = Σ_k x_k x_k`.
pub fn x_squared_poly() -> OperatorPolynomial {
    let t = Truncation::alpha(0);
    OperatorPolynomial::sum(
        &(0..3)
            .map(|k| OperatorPolynomial::x(k).mul_truncated(&OperatorPolynomial::x(k), t))
            .collect::<Vec<_>>(),
    )
}

/// `g(x²) = 1 + α x²`.
pub fn g_poly() -> OperatorPolynomial {
    let ax2 = OperatorPolynomial::alpha().mul_truncated(&x_squared_poly(), Truncation::alpha(1));
    &OperatorPolynomial::one() + &ax2
}

/// Physical momentum in symmetric ordering,
/// `p_i = P_i + α(½{x², P_i} + Σ_j {x_i x_j, P_j})`, truncated at `max_alpha_order`.
///
/// `axis` is 0-based.
pub fn physical_momentum_poly(axis: usize, max_alpha_order: u8) -> OperatorPolynomial {
    let t = Truncation::alpha(max_alpha_order);
    let p_i = OperatorPolynomial::p(axis);
    if max_alpha_order == 0 {
        return p_i;
    }
    let half = Coefficient::ratio(1, 2);
    let mut correction = x_squared_poly().anticommutator(&p_i, t).scale(half);
    for j in 0..3 {
        let xixj = OperatorPolynomial::x(axis).mul_truncated(&OperatorPolynomial::x(j), t);
        correction = &correction + &xixj.anticommutator(&OperatorPolynomial::p(j), t);
    }
    let correction = OperatorPolynomial::alpha().mul_truncated(&correction, t);
    &p_i + &correction
}

/// Levi-Civita symbol on 0-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// Physical orbital angular momentum `l_i = ε_ijk ½{x_j, p_k}`.
pub fn angular_momentum_poly(axis: usize, max_alpha_order: u8) -> OperatorPolynomial {
    let t = Truncation::alpha(max_alpha_order);
    let half = Coefficient::ratio(1, 2);
    let mut out = OperatorPolynomial::zero();
    for j in 0..3 {
        for k in 0..3 {
            let eps = levi_civita(axis, j, k);
            if eps == 0 {
                continue;
            }
            let term = OperatorPolynomial::x(j)
                .anticommutator(&physical_momentum_poly(k, max_alpha_order), t)
                .scale(half * Coefficient::real(eps));
            out = &out + &term;
        }
    }
    out
}

/// Undeformed generator `l_ji = x_j P_i - x_i P_j` multiplied by `x²`, graded at α-order 2.
fn theta_ansatz(i: usize, j: usize) -> OperatorPolynomial {
    let t = Truncation::alpha(2);
    let l_ji = &OperatorPolynomial::x(j).mul_truncated(&OperatorPolynomial::p(i), t)
        - &OperatorPolynomial::x(i).mul_truncated(&OperatorPolynomial::p(j), t);
    let alpha_sq = OperatorPolynomial::alpha().mul_truncated(&OperatorPolynomial::alpha(), t);
    alpha_sq
        .mul_truncated(&x_squared_poly(), t)
        .mul_truncated(&l_ji, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IdentityKind {
    /// `[x^i, p_j] x² - i(g x² δ_ij + ḡ x^i x_j)`.
    PositionMomentum,
    /// `[p_i, p_j]` at first order.
    MomentumMomentum,
    /// `[p_i,[p_j,x^k]] + [p_j,[x^k,p_i]] + [x^k,[p_i,p_j]]`.
    Jacobi,
    /// `[p_i, p_j]_{α²} - θ l_ji` with the fitted θ.
    ThetaClosure,
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IdentityKind::PositionMomentum => "[x,p]",
            IdentityKind::MomentumMomentum => "[p,p]",
            IdentityKind::Jacobi => "jacobi",
            IdentityKind::ThetaClosure => "theta",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub kind: IdentityKind,
    /// 1-based operator indices as they appear in the identity.
    pub indices: Vec<usize>,
    pub alpha_order: u8,
    pub required_zero: bool,
    pub residual: OperatorPolynomial,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        !self.required_zero || self.residual.is_zero()
    }
}

/// Fitted closure `[p_i, p_j] = θ(x²) l_ji` at second order with `θ = c α² x²`.
#[derive(Clone, Debug, Serialize)]
pub struct ThetaFit {
    pub coefficient: Coefficient,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraReport {
    pub max_alpha_order: u8,
    pub checks: Vec<IdentityCheck>,
    pub theta: Option<ThetaFit>,
}

impl AlgebraReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    pub fn checks_of(&self, kind: IdentityKind) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(move |c| c.kind == kind)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

impl fmt::Display for AlgebraReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "deformed algebra, truncated at alpha order {}",
            self.max_alpha_order
        )?;
        writeln!(
            f,
            "{:<8} {:<10} {:>5} {:>8} {:>7}",
            "identity", "indices", "order", "terms", "status"
        )?;
        for c in &self.checks {
            let idx = c
                .indices
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let status = match (c.required_zero, c.residual.is_zero()) {
                (_, true) => "zero",
                (true, false) => "FAIL",
                (false, false) => "nonzero",
            };
            writeln!(
                f,
                "{:<8} {:<10} {:>5} {:>8} {:>7}",
                c.kind.to_string(),
                idx,
                c.alpha_order,
                c.residual.len(),
                status
            )?;
        }
        if let Some(theta) = &self.theta {
            writeln!(
                f,
                "theta = {} alpha^2 x^2  (|c| = {})",
                theta.coefficient, theta.magnitude
            )?;
        }
        Ok(())
    }
}

/// Checks the deformed algebra exactly up to `max_alpha_order` (0, 1 or 2).
///
/// Position/momentum identities are written with the `x²` denominator cleared.
/// At order 2 the second-order part of `[p_i, p_j]` is fitted to `c α² x² l_ji`.
pub fn verify_deformed_algebra(max_alpha_order: u8) -> Result<AlgebraReport> {
    if max_alpha_order > 2 {
        return Err(Error::Usage(format!(
            "algebra verification supports alpha orders 0..=2, got {max_alpha_order}"
        )));
    }
    let t = Truncation::alpha(max_alpha_order);
    let first = Truncation::alpha(max_alpha_order.min(1));
    let p: Vec<_> = (0..3)
        .map(|i| physical_momentum_poly(i, max_alpha_order))
        .collect();
    let x: Vec<_> = (0..3).map(OperatorPolynomial::x).collect();
    let x_sq = x_squared_poly();
    let g_x2 = g_poly().mul_truncated(&x_sq, t);
    let two_alpha_x2 = OperatorPolynomial::alpha()
        .mul_truncated(&x_sq, t)
        .scale(Coefficient::real(2));

    let mut checks = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let lhs = x[i].commutator(&p[j], t).mul_truncated(&x_sq, t);
            let mut rhs = two_alpha_x2.mul_truncated(&x[i], t).mul_truncated(&x[j], t);
            if i == j {
                rhs = &rhs + &g_x2;
            }
            checks.push(IdentityCheck {
                kind: IdentityKind::PositionMomentum,
                indices: vec![i + 1, j + 1],
                alpha_order: max_alpha_order,
                required_zero: true,
                residual: &lhs - &rhs.scale(Coefficient::i()),
            });
        }
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            checks.push(IdentityCheck {
                kind: IdentityKind::MomentumMomentum,
                indices: vec![i + 1, j + 1],
                alpha_order: max_alpha_order.min(1),
                required_zero: true,
                residual: p[i].commutator(&p[j], first),
            });
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let a = p[i].commutator(&p[j].commutator(&x[k], t), t);
                let b = p[j].commutator(&x[k].commutator(&p[i], t), t);
                let c = x[k].commutator(&p[i].commutator(&p[j], t), t);
                checks.push(IdentityCheck {
                    kind: IdentityKind::Jacobi,
                    indices: vec![i + 1, j + 1, k + 1],
                    alpha_order: max_alpha_order,
                    required_zero: true,
                    residual: OperatorPolynomial::sum([&a, &b, &c]),
                });
            }
        }
    }

    let theta = if max_alpha_order >= 2 {
        let fit = fit_theta(&p[0].commutator(&p[1], t).alpha_part(2), 0, 1);
        for i in 0..3 {
            for j in (i + 1)..3 {
                let second = p[i].commutator(&p[j], t).alpha_part(2);
                let ansatz = theta_ansatz(i, j).scale(fit.coefficient);
                checks.push(IdentityCheck {
                    kind: IdentityKind::ThetaClosure,
                    indices: vec![i + 1, j + 1],
                    alpha_order: 2,
                    required_zero: true,
                    residual: &second - &ansatz,
                });
            }
        }
        Some(fit)
    } else {
        None
    };

    Ok(AlgebraReport {
        max_alpha_order,
        checks,
        theta,
    })
}

fn fit_theta(second_order: &OperatorPolynomial, i: usize, j: usize) -> ThetaFit {
    let ansatz = theta_ansatz(i, j);
    // Anchor on the monomial x_j^3 P_i, present in the ansatz with coefficient 1.
    let mut anchor = OrderedMonomial::IDENTITY;
    anchor.alpha_order = 2;
    anchor.x_powers[j] = 3;
    anchor.p_powers[i] = 1;
    let coefficient = second_order
        .coefficient(&anchor)
        .div(ansatz.coefficient(&anchor));
    let (re, im) = coefficient.to_f64();
    ThetaFit {
        coefficient,
        magnitude: re.hypot(im),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_limit() {
        assert_eq!(physical_momentum_poly(1, 0), OperatorPolynomial::p(1));
        let report = verify_deformed_algebra(0).unwrap();
        assert!(report.all_passed());
        assert!(report.checks.iter().all(|c| c.residual.is_zero()));
    }

    #[test]
    fn first_order_momentum_expansion() {
        // ½{x², P1} = x² P1 - i x1 ; {x1 x_j, P_j} summed = 2 x1 (x·P) - 4i x1
        let p1 = physical_momentum_poly(0, 1);
        let t = Truncation::alpha(1);
        let x_sq = x_squared_poly();
        let mut expected = &OperatorPolynomial::p(0)
            + &OperatorPolynomial::alpha()
                .mul_truncated(&x_sq, t)
                .mul_truncated(&OperatorPolynomial::p(0), t);
        for j in 0..3 {
            let term = OperatorPolynomial::alpha()
                .mul_truncated(&OperatorPolynomial::x(0), t)
                .mul_truncated(&OperatorPolynomial::x(j), t)
                .mul_truncated(&OperatorPolynomial::p(j), t)
                .scale(Coefficient::real(2));
            expected = &expected + &term;
        }
        let ax1 = OperatorPolynomial::alpha().mul_truncated(&OperatorPolynomial::x(0), t);
        expected = &expected - &ax1.scale(Coefficient::real(5) * Coefficient::i());
        assert_eq!(p1, expected);
    }

    #[test]
    fn physical_momentum_is_hermitian() {
        for axis in 0..3 {
            let p = physical_momentum_poly(axis, 1);
            assert_eq!(p.adjoint(), p);
        }
        for axis in 0..3 {
            let l = angular_momentum_poly(axis, 1);
            assert_eq!(l.adjoint(), l);
        }
    }

    #[test]
    fn first_order_algebra_is_exact() {
        let report = verify_deformed_algebra(1).unwrap();
        assert!(report.all_passed(), "{report}");
        assert_eq!(report.checks_of(IdentityKind::PositionMomentum).count(), 9);
        assert_eq!(report.checks_of(IdentityKind::MomentumMomentum).count(), 3);
        assert_eq!(report.checks_of(IdentityKind::Jacobi).count(), 27);
        assert!(report.theta.is_none());
    }

    #[test]
    fn second_order_theta_closure() {
        let report = verify_deformed_algebra(2).unwrap();
        assert!(report.all_passed(), "{report}");
        let theta = report.theta.unwrap();
        assert!(theta.coefficient.re == 0.into());
        assert_eq!(theta.magnitude, 4.0);
    }

    #[test]
    fn order_three_is_rejected() {
        assert!(matches!(verify_deformed_algebra(3), Err(Error::Usage(_))));
    }

    #[test]
    fn deformed_so3_at_first_order() {
        // [l_i, l_j] = i ε_ijk g l_k, exact at O(α)
        let t = Truncation::alpha(1);
        let l: Vec<_> = (0..3).map(|i| angular_momentum_poly(i, 1)).collect();
        let g = g_poly();
        for i in 0..3 {
            for j in 0..3 {
                let lhs = l[i].commutator(&l[j], t);
                let mut rhs = OperatorPolynomial::zero();
                for k in 0..3 {
                    let eps = levi_civita(i, j, k);
                    if eps != 0 {
                        rhs = &rhs
                            + &g.mul_truncated(&l[k], t)
                                .scale(Coefficient::real(eps) * Coefficient::i());
                    }
                }
                assert!((&lhs - &rhs).is_zero(), "[l{i}, l{j}]: {}", &lhs - &rhs);
                // g commutes with l_k at this order
                assert!(g.commutator(&l[i], t).is_zero());
            }
        }
    }

    #[test]
    fn report_serializes() {
        let report = verify_deformed_algebra(2).unwrap();
        let json = report.to_json();
        assert_eq!(json["max_alpha_order"], 2);
        assert!(json["checks"].as_array().unwrap().len() > 30);
        assert!(report.to_string().contains("theta"));
    }
}
