//! Laurent polynomials in the uniformizer `t`, the element type of every lattice basis.
//!
//! An element is stored as `t^t_order * (c_0 + c_1 t + ... + c_d t^d)` with `c_0 != 0`
//! and `c_d != 0`; zero has no coefficients and `t_order == 0`. Elements with
//! non-negative `t_order` lie in the local ring `R = k[t]_(t)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::field::{Field, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct LocalElement {
    t_order: i64,
    coeffs: Vec<Scalar>,
}

impl LocalElement {
    pub fn zero() -> Self {
        LocalElement::default()
    }

    pub fn constant(c: Scalar) -> Self {
        Self::from_coeffs(0, vec![c])
    }

    pub fn one(field: Field) -> Self {
        Self::constant(field.one())
    }

    /// `c * t^k`
    pub fn monomial(c: Scalar, k: i64) -> Self {
        Self::from_coeffs(k, vec![c])
    }

    /// `t^k`
    pub fn t_pow(field: Field, k: i64) -> Self {
        Self::monomial(field.one(), k)
    }

    /// Builds `t^t_order * sum coeffs[i] t^i`, normalizing leading and trailing zeros.
    pub fn from_coeffs(t_order: i64, mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        let lead = coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead == coeffs.len() {
            return Self::zero();
        }
        coeffs.drain(..lead);
        LocalElement {
            t_order: t_order + lead as i64,
            coeffs,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.t_order == 0 && self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// Exponent of the lowest term; `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.t_order)
    }

    /// Exponent of the highest term; `None` for zero.
    pub fn top_exponent(&self) -> Option<i64> {
        (!self.is_zero()).then(|| self.t_order + self.coeffs.len() as i64 - 1)
    }

    pub fn t_order(&self) -> i64 {
        self.t_order
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn field(&self) -> Option<Field> {
        self.coeffs.first().map(Scalar::field)
    }

    /// Coefficient of `t^exp`, or `None` when it is zero.
    pub fn coeff(&self, exp: i64) -> Option<&Scalar> {
        let i = exp - self.t_order;
        if i < 0 {
            return None;
        }
        self.coeffs.get(i as usize).filter(|c| !c.is_zero())
    }

    /// True when the element lies in `R`.
    pub fn is_integral(&self) -> bool {
        self.is_zero() || self.t_order >= 0
    }

    pub fn is_monomial(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// Multiplication by `t^d`.
    pub fn shift(&self, d: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        LocalElement {
            t_order: self.t_order + d,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() || self.is_zero() {
            return Self::zero();
        }
        Self::from_coeffs(self.t_order, self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Keeps only the terms with exponent `< bound`.
    pub fn truncate(&self, bound: i64) -> Self {
        match self.top_exponent() {
            None => Self::zero(),
            Some(top) if top < bound => self.clone(),
            Some(_) => {
                let keep = (bound - self.t_order).max(0) as usize;
                Self::from_coeffs(self.t_order, self.coeffs[..keep].to_vec())
            }
        }
    }

    /// Splits into the part with exponents `< bound` and the part with exponents `>= bound`.
    pub fn split_at(&self, bound: i64) -> (Self, Self) {
        if self.is_zero() {
            return (Self::zero(), Self::zero());
        }
        let cut = (bound - self.t_order).clamp(0, self.coeffs.len() as i64) as usize;
        (
            Self::from_coeffs(self.t_order, self.coeffs[..cut].to_vec()),
            Self::from_coeffs(self.t_order + cut as i64, self.coeffs[cut..].to_vec()),
        )
    }

    /// The factor `w` in `self = t^v * w`, a polynomial with nonzero constant term.
    pub fn unit_part(&self) -> Self {
        LocalElement {
            t_order: 0,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Power-series inverse of a unit of `R`, correct modulo `t^terms`.
    pub fn inverse_series(&self, terms: usize) -> Self {
        assert!(
            self.t_order == 0 && !self.is_zero(),
            "inverse_series of a non-unit"
        );
        let c0_inv = self.coeffs[0].inv();
        let field = c0_inv.field();
        let mut out: Vec<Scalar> = Vec::with_capacity(terms);
        for k in 0..terms {
            let mut acc = if k == 0 { field.one() } else { field.zero() };
            for j in 1..=k.min(self.coeffs.len() - 1) {
                if self.coeffs[j].is_zero() || out[k - j].is_zero() {
                    continue;
                }
                acc = &acc - &(&self.coeffs[j] * &out[k - j]);
            }
            out.push(&acc * &c0_inv);
        }
        Self::from_coeffs(0, out)
    }

    /// Substitutes `x -> u * t^e` for the variable of `self`.
    pub fn inflate(&self, e: u32, u: &Scalar) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let field = u.field();
        let e = e as i64;
        let mut coeffs = vec![field.zero(); (self.coeffs.len() - 1) * e as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let m = self.t_order + i as i64;
            coeffs[i * e as usize] = c * &u.pow(m);
        }
        Self::from_coeffs(self.t_order * e, coeffs)
    }

    /// Iterator over `(exponent, coefficient)` of nonzero terms.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Scalar)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.t_order + i as i64, c))
    }

    pub fn mul_truncated(&self, rhs: &Self, bound: i64) -> Self {
        mul_impl(self, rhs, Some(bound))
    }
}

fn add_impl(a: &LocalElement, b: &LocalElement, negate_b: bool) -> LocalElement {
    if b.is_zero() {
        return a.clone();
    }
    if a.is_zero() {
        return if negate_b { -b } else { b.clone() };
    }
    let lo = a.t_order.min(b.t_order);
    let hi = a.top_exponent().unwrap().max(b.top_exponent().unwrap());
    let field = a.coeffs[0].field();
    let mut coeffs = vec![field.zero(); (hi - lo + 1) as usize];
    for (i, c) in a.coeffs.iter().enumerate() {
        coeffs[(a.t_order - lo) as usize + i] = c.clone();
    }
    for (i, c) in b.coeffs.iter().enumerate() {
        let slot = &mut coeffs[(b.t_order - lo) as usize + i];
        *slot = if negate_b { &*slot - c } else { &*slot + c };
    }
    LocalElement::from_coeffs(lo, coeffs)
}

fn mul_impl(a: &LocalElement, b: &LocalElement, bound: Option<i64>) -> LocalElement {
    if a.is_zero() || b.is_zero() {
        return LocalElement::zero();
    }
    let lo = a.t_order + b.t_order;
    let mut len = a.coeffs.len() + b.coeffs.len() - 1;
    if let Some(bound) = bound {
        if bound <= lo {
            return LocalElement::zero();
        }
        len = len.min((bound - lo) as usize);
    }
    let field = a.coeffs[0].field();
    let mut coeffs = vec![field.zero(); len];
    for (i, x) in a.coeffs.iter().enumerate() {
        if i >= len {
            break;
        }
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.coeffs.iter().enumerate() {
            if i + j >= len {
                break;
            }
            if y.is_zero() {
                continue;
            }
            coeffs[i + j] = &coeffs[i + j] + &(x * y);
        }
    }
    LocalElement::from_coeffs(lo, coeffs)
}

impl<'a> Add for &'a LocalElement {
    type Output = LocalElement;
    fn add(self, rhs: &'a LocalElement) -> LocalElement {
        add_impl(self, rhs, false)
    }
}

impl<'a> Sub for &'a LocalElement {
    type Output = LocalElement;
    fn sub(self, rhs: &'a LocalElement) -> LocalElement {
        add_impl(self, rhs, true)
    }
}

impl<'a> Mul for &'a LocalElement {
    type Output = LocalElement;
    fn mul(self, rhs: &'a LocalElement) -> LocalElement {
        mul_impl(self, rhs, None)
    }
}

impl Neg for &LocalElement {
    type Output = LocalElement;
    fn neg(self) -> LocalElement {
        LocalElement {
            t_order: self.t_order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl fmt::Display for LocalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exp, c) in self.terms() {
            let text = c.to_string();
            let (sign, mag) = match text.strip_prefix('-') {
                Some(m) => ("-", m.to_string()),
                None => ("+", text),
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match exp {
                0 => write!(f, "{mag}")?,
                _ => {
                    if mag != "1" {
                        write!(f, "{mag}*")?;
                    }
                    if exp == 1 {
                        write!(f, "t")?;
                    } else {
                        write!(f, "t^{exp}")?;
                    }
                }
            }
        }
        Ok(())
    }
}
