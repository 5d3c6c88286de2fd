//! Exact symbolic operator algebra used as the oracle for the deformed commutation relations.

mod identities;
mod polynomial;

pub use identities::{
    angular_momentum_poly, g_poly, levi_civita, physical_momentum_poly, verify_deformed_algebra,
    x_squared_poly, AlgebraReport, IdentityCheck, IdentityKind, ThetaFit,
};
pub use polynomial::{Coefficient, OperatorPolynomial, OrderedMonomial, Pauli, Truncation};

/// Canonically ordered product `lhs * rhs`, truncated at `max_alpha_order`.
pub fn normal_order_product(
    lhs: &OperatorPolynomial,
    rhs: &OperatorPolynomial,
    max_alpha_order: u8,
) -> OperatorPolynomial {
    lhs.mul_truncated(rhs, Truncation::alpha(max_alpha_order))
}

/// `lhs rhs - rhs lhs` in canonical form.
pub fn commutator_poly(
    lhs: &OperatorPolynomial,
    rhs: &OperatorPolynomial,
    max_alpha_order: u8,
) -> OperatorPolynomial {
    lhs.commutator(rhs, Truncation::alpha(max_alpha_order))
}
