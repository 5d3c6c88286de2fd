//! Operator polynomials in canonically ordered `x^a P^b` monomials.
//!
//! Each monomial additionally carries a deformation order (powers of the
//! formal parameter α), powers of three commuting external-field symbols
//! `B1, B2, B3` and one Pauli factor. Coefficients are exact Gaussian
//! rationals, so an identity that holds reduces to an empty polynomial.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Exact complex number with rational parts.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Coefficient {
    pub re: Rational64,
    pub im: Rational64,
}

impl Coefficient {
    pub fn new(re: Rational64, im: Rational64) -> Self {
        Self { re, im }
    }

    pub fn real(n: i64) -> Self {
        Self::new(Rational64::from_integer(n), Rational64::zero())
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(Rational64::new(num, den), Rational64::zero())
    }

    pub fn zero() -> Self {
        Self::real(0)
    }

    pub fn one() -> Self {
        Self::real(1)
    }

    pub fn i() -> Self {
        Self::new(Rational64::zero(), Rational64::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn norm_sqr(self) -> Rational64 {
        self.re * self.re + self.im * self.im
    }

    /// Panics on division by zero.
    pub fn div(self, rhs: Coefficient) -> Coefficient {
        let den = rhs.norm_sqr();
        assert!(!den.is_zero(), "division by a zero coefficient");
        let num = self * rhs.conj();
        Self::new(num.re / den, num.im / den)
    }

    pub fn to_f64(self) -> (f64, f64) {
        (ratio_to_f64(self.re), ratio_to_f64(self.im))
    }
}

fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl Add for Coefficient {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for Coefficient {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Coefficient {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Neg for Coefficient {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}i", self.im),
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                write!(f, "({}{}{}i)", self.re, sign, self.im.abs())
            }
        }
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Coefficient", 2)?;
        s.serialize_field("re", &self.re.to_string())?;
        s.serialize_field("im", &self.im.to_string())?;
        s.end()
    }
}

/// Spin factor of a monomial: identity or one Pauli matrix.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_axis(axis: usize) -> Pauli {
        [Pauli::X, Pauli::Y, Pauli::Z][axis]
    }

    fn index(self) -> usize {
        self as usize
    }

    /// `σ_a σ_b = δ_ab + i ε_abc σ_c`.
    pub fn product(self, rhs: Pauli) -> (Coefficient, Pauli) {
        use Pauli::*;
        match (self, rhs) {
            (I, p) | (p, I) => (Coefficient::one(), p),
            (a, b) if a == b => (Coefficient::one(), I),
            (a, b) => {
                let c = 6 - a.index() - b.index();
                let cyclic = (b.index() + 2 - a.index()) % 3 == 0;
                let phase = if cyclic {
                    Coefficient::i()
                } else {
                    -Coefficient::i()
                };
                (phase, [I, X, Y, Z][c])
            }
        }
    }
}

/// Canonical monomial `α^n B^f σ x^a P^b` with every `x` to the left of every `P`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OrderedMonomial {
    pub alpha_order: u8,
    pub field_powers: [u8; 3],
    pub pauli: Pauli,
    pub x_powers: [u8; 3],
    pub p_powers: [u8; 3],
}

impl OrderedMonomial {
    pub const IDENTITY: OrderedMonomial = OrderedMonomial {
        alpha_order: 0,
        field_powers: [0; 3],
        pauli: Pauli::I,
        x_powers: [0; 3],
        p_powers: [0; 3],
    };

    pub fn field_order(&self) -> u8 {
        self.field_powers.iter().sum()
    }

    pub fn momentum_degree(&self) -> u8 {
        self.p_powers.iter().sum()
    }
}

impl fmt::Display for OrderedMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let pow = |name: String, e: u8| if e == 1 { name } else { format!("{name}^{e}") };
        if self.alpha_order > 0 {
            parts.push(pow("α".into(), self.alpha_order));
        }
        for (k, &e) in self.field_powers.iter().enumerate() {
            if e > 0 {
                parts.push(pow(format!("B{}", k + 1), e));
            }
        }
        if self.pauli != Pauli::I {
            parts.push(format!("σ{}", self.pauli.index()));
        }
        for (k, &e) in self.x_powers.iter().enumerate() {
            if e > 0 {
                parts.push(pow(format!("x{}", k + 1), e));
            }
        }
        for (k, &e) in self.p_powers.iter().enumerate() {
            if e > 0 {
                parts.push(pow(format!("P{}", k + 1), e));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Orders above which products are dropped.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Truncation {
    pub max_alpha_order: u8,
    pub max_field_order: u8,
}

impl Truncation {
    pub fn alpha(max_alpha_order: u8) -> Self {
        Self {
            max_alpha_order,
            max_field_order: u8::MAX,
        }
    }

    pub fn new(max_alpha_order: u8, max_field_order: u8) -> Self {
        Self {
            max_alpha_order,
            max_field_order,
        }
    }

    fn keeps(&self, m: &OrderedMonomial) -> bool {
        m.alpha_order <= self.max_alpha_order && m.field_order() <= self.max_field_order
    }
}

/// Exact operator polynomial; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct OperatorPolynomial {
    terms: BTreeMap<OrderedMonomial, Coefficient>,
}

fn binomial(n: u8, k: u8) -> i64 {
    (0..k as i64).fold(1, |acc, j| acc * (n as i64 - j) / (j + 1))
}

fn factorial(n: u8) -> i64 {
    (1..=n as i64).product()
}

/// `(-i)^k`.
fn minus_i_pow(k: u8) -> Coefficient {
    match k % 4 {
        0 => Coefficient::one(),
        1 => -Coefficient::i(),
        2 => -Coefficient::one(),
        _ => Coefficient::i(),
    }
}

/// Single-axis reordering `P^b x^c = sum_k C(b,k) C(c,k) k! (-i)^k x^(c-k) P^(b-k)`,
/// the closed form of repeatedly applying `P x = x P - i`.
fn reorder_axis(p_pow: u8, x_pow: u8) -> Vec<(Coefficient, u8, u8)> {
    (0..=p_pow.min(x_pow))
        .map(|k| {
            let count = binomial(p_pow, k) * binomial(x_pow, k) * factorial(k);
            (
                Coefficient::real(count) * minus_i_pow(k),
                x_pow - k,
                p_pow - k,
            )
        })
        .collect()
}

impl OperatorPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Coefficient::one())
    }

    pub fn constant(c: Coefficient) -> Self {
        Self::monomial(OrderedMonomial::IDENTITY, c)
    }

    pub fn monomial(m: OrderedMonomial, c: Coefficient) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// Position component `x^axis` (axis 0-based).
    pub fn x(axis: usize) -> Self {
        let mut m = OrderedMonomial::IDENTITY;
        m.x_powers[axis] = 1;
        Self::monomial(m, Coefficient::one())
    }

    /// Auxiliary momentum `P_axis` (axis 0-based).
    pub fn p(axis: usize) -> Self {
        let mut m = OrderedMonomial::IDENTITY;
        m.p_powers[axis] = 1;
        Self::monomial(m, Coefficient::one())
    }

    /// The formal deformation parameter α.
    pub fn alpha() -> Self {
        let mut m = OrderedMonomial::IDENTITY;
        m.alpha_order = 1;
        Self::monomial(m, Coefficient::one())
    }

    /// External field component `B_axis`.
    pub fn field(axis: usize) -> Self {
        let mut m = OrderedMonomial::IDENTITY;
        m.field_powers[axis] = 1;
        Self::monomial(m, Coefficient::one())
    }

    pub fn pauli(p: Pauli) -> Self {
        let mut m = OrderedMonomial::IDENTITY;
        m.pauli = p;
        Self::monomial(m, Coefficient::one())
    }

    pub fn add_term(&mut self, m: OrderedMonomial, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Coefficient::zero);
        *entry = *entry + c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OrderedMonomial, &Coefficient)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &OrderedMonomial) -> Coefficient {
        self.terms.get(m).copied().unwrap_or_else(Coefficient::zero)
    }

    pub fn scale(&self, c: Coefficient) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(*m, *v * c);
        }
        out
    }

    /// Keeps only the terms selected by `keep`.
    pub fn filter(&self, keep: impl Fn(&OrderedMonomial) -> bool) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (*m, *c))
                .collect(),
        }
    }

    pub fn alpha_part(&self, order: u8) -> Self {
        self.filter(|m| m.alpha_order == order)
    }

    pub fn field_part(&self, order: u8) -> Self {
        self.filter(|m| m.field_order() == order)
    }

    pub fn truncated(&self, t: Truncation) -> Self {
        self.filter(|m| t.keeps(m))
    }

    pub fn max_alpha_order(&self) -> Option<u8> {
        self.terms.keys().map(|m| m.alpha_order).max()
    }

    /// Canonically ordered product `self * rhs`, dropping terms beyond the truncation.
    pub fn mul_truncated(&self, rhs: &Self, t: Truncation) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let alpha_order = ma.alpha_order + mb.alpha_order;
                let mut field_powers = ma.field_powers;
                for k in 0..3 {
                    field_powers[k] += mb.field_powers[k];
                }
                let probe = OrderedMonomial {
                    alpha_order,
                    field_powers,
                    ..OrderedMonomial::IDENTITY
                };
                if !t.keeps(&probe) {
                    continue;
                }
                let (spin_phase, pauli) = ma.pauli.product(mb.pauli);
                let base = *ca * *cb * spin_phase;
                // P^a from the left factor must move past x^b of the right factor, per axis.
                let per_axis: Vec<Vec<(Coefficient, u8, u8)>> = (0..3)
                    .map(|k| reorder_axis(ma.p_powers[k], mb.x_powers[k]))
                    .collect();
                for t0 in &per_axis[0] {
                    for t1 in &per_axis[1] {
                        for t2 in &per_axis[2] {
                            let parts = [t0, t1, t2];
                            let mut m = OrderedMonomial {
                                alpha_order,
                                field_powers,
                                pauli,
                                x_powers: [0; 3],
                                p_powers: [0; 3],
                            };
                            let mut c = base;
                            for k in 0..3 {
                                let (ck, xk, pk) = *parts[k];
                                c = c * ck;
                                m.x_powers[k] = ma.x_powers[k] + xk;
                                m.p_powers[k] = pk + mb.p_powers[k];
                            }
                            out.add_term(m, c);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, rhs: &Self, t: Truncation) -> Self {
        &self.mul_truncated(rhs, t) - &rhs.mul_truncated(self, t)
    }

    /// `AB + BA`.
    pub fn anticommutator(&self, rhs: &Self, t: Truncation) -> Self {
        &self.mul_truncated(rhs, t) + &rhs.mul_truncated(self, t)
    }

    /// Formal adjoint: conjugate coefficients and reverse `x^a P^b` to `P^b x^a`, then reorder.
    /// α and the field symbols are real; Pauli matrices are self-adjoint.
    pub fn adjoint(&self) -> Self {
        let t = Truncation::new(u8::MAX, u8::MAX);
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut ps = *m;
            ps.x_powers = [0; 3];
            let mut xs = OrderedMonomial::IDENTITY;
            xs.x_powers = m.x_powers;
            let lhs = Self::monomial(ps, c.conj());
            let rhs = Self::monomial(xs, Coefficient::one());
            out = &out + &lhs.mul_truncated(&rhs, t);
        }
        out
    }

    /// Sum of a slice of polynomials.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a OperatorPolynomial>) -> Self {
        items.into_iter().fold(Self::zero(), |acc, p| &acc + p)
    }
}

impl Add for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn add(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, *c);
        }
        out
    }
}

impl Sub for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn sub(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -*c);
        }
        out
    }
}

impl Neg for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn neg(self) -> OperatorPolynomial {
        self.scale(-Coefficient::one())
    }
}

impl fmt::Display for OperatorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if *m == OrderedMonomial::IDENTITY {
                    format!("{c}")
                } else if *c == Coefficient::one() {
                    format!("{m}")
                } else {
                    format!("{c} {m}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// One serialized term of a polynomial.
#[derive(Serialize)]
struct TermRecord<'a> {
    monomial: String,
    alpha_order: u8,
    field_order: u8,
    pauli: Pauli,
    x_powers: [u8; 3],
    p_powers: [u8; 3],
    coefficient: &'a Coefficient,
}

impl Serialize for OperatorPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let records: Vec<TermRecord<'_>> = self
            .terms
            .iter()
            .map(|(m, c)| TermRecord {
                monomial: m.to_string(),
                alpha_order: m.alpha_order,
                field_order: m.field_order(),
                pauli: m.pauli,
                x_powers: m.x_powers,
                p_powers: m.p_powers,
                coefficient: c,
            })
            .collect();
        records.serialize(serializer)
    }
}
