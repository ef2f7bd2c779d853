//! Exact values as sparse Laurent polynomials in `1/N`, with an extra
//! nonnegative power of the aspect ratio `c = M/N` carried symbolically for
//! identity-weighted Wishart content.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

/// Exponent pair: power of `N` (any sign) and power of `c` (nonnegative).
pub type Monomial = (i64, u32);

/// A rational-coefficient Laurent polynomial in `N` and polynomial in `c`.
/// Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct LaurentValue {
    terms: BTreeMap<Monomial, BigRational>,
}

impl LaurentValue {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, BigRational::one())
    }

    pub fn constant(coeff: BigRational) -> Self {
        Self::monomial(0, 0, coeff)
    }

    pub fn monomial(n_exp: i64, c_exp: u32, coeff: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert((n_exp, c_exp), coeff);
        }
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, n_exp: i64, c_exp: u32) -> BigRational {
        self.terms
            .get(&(n_exp, c_exp))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, n_exp: i64, c_exp: u32, coeff: &BigRational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry((n_exp, c_exp))
            .or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&(n_exp, c_exp));
        }
    }

    pub fn add(&self, other: &LaurentValue) -> LaurentValue {
        let mut out = self.clone();
        for (&(n, c), coeff) in &other.terms {
            out.add_term(n, c, coeff);
        }
        out
    }

    pub fn sub(&self, other: &LaurentValue) -> LaurentValue {
        let mut out = self.clone();
        for (&(n, c), coeff) in &other.terms {
            out.add_term(n, c, &-coeff.clone());
        }
        out
    }

    pub fn mul(&self, other: &LaurentValue) -> LaurentValue {
        let mut out = LaurentValue::zero();
        for (&(n1, c1), a) in &self.terms {
            for (&(n2, c2), b) in &other.terms {
                out.add_term(n1 + n2, c1 + c2, &(a * b));
            }
        }
        out
    }

    pub fn scale(&self, factor: &BigRational) -> LaurentValue {
        let mut out = LaurentValue::zero();
        for (&(n, c), a) in &self.terms {
            out.add_term(n, c, &(a * factor));
        }
        out
    }

    /// Multiplies every term by `N^shift`.
    pub fn shift_n(&self, shift: i64) -> LaurentValue {
        LaurentValue {
            terms: self
                .terms
                .iter()
                .map(|(&(n, c), a)| ((n + shift, c), a.clone()))
                .collect(),
        }
    }

    /// Largest exponent of `N` present, if any term is nonzero.
    pub fn max_n_exponent(&self) -> Option<i64> {
        self.terms.keys().map(|&(n, _)| n).max()
    }

    /// The `N^0` part, as a polynomial in `c`.
    pub fn constant_term(&self) -> CPolynomial {
        let mut poly = CPolynomial::zero();
        for (&(n, c), coeff) in &self.terms {
            if n == 0 {
                poly.add_term(c, coeff);
            }
        }
        poly
    }

    /// Exact evaluation at a concrete matrix size and aspect ratio.
    pub fn eval(&self, n: &BigRational, c: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (&(n_exp, c_exp), coeff) in &self.terms {
            acc += coeff * rational_pow(n, n_exp) * rational_pow(c, c_exp as i64);
        }
        acc
    }
}

impl fmt::Display for LaurentValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // Highest power of N first.
        let mut first = true;
        for (&(n, c), coeff) in self.terms.iter().rev() {
            if first {
                first = false;
                if coeff.is_negative() {
                    write!(f, "-")?;
                }
            } else if coeff.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = coeff.abs();
            let mut vars = String::new();
            if c > 0 {
                vars.push('c');
                if c > 1 {
                    vars.push_str(&format!("^{c}"));
                }
            }
            if n != 0 {
                if !vars.is_empty() {
                    vars.push('*');
                }
                vars.push_str(&format!("N^{n}"));
            }
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{vars}")?;
            } else {
                write!(f, "{mag}*{vars}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A polynomial in `c` with rational coefficients: the shape of every
/// large-`N` limit produced by the enumerative formulas.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct CPolynomial {
    terms: BTreeMap<u32, BigRational>,
}

impl CPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(coeff: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(0, &coeff);
        p
    }

    pub fn monomial(c_exp: u32, coeff: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(c_exp, &coeff);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, c_exp: u32, coeff: &BigRational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(c_exp).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&c_exp);
        }
    }

    pub fn add(&self, other: &CPolynomial) -> CPolynomial {
        let mut out = self.clone();
        for (&c, coeff) in &other.terms {
            out.add_term(c, coeff);
        }
        out
    }

    pub fn sub(&self, other: &CPolynomial) -> CPolynomial {
        let mut out = self.clone();
        for (&c, coeff) in &other.terms {
            out.add_term(c, &-coeff.clone());
        }
        out
    }

    pub fn mul(&self, other: &CPolynomial) -> CPolynomial {
        let mut out = CPolynomial::zero();
        for (&c1, a) in &self.terms {
            for (&c2, b) in &other.terms {
                out.add_term(c1 + c2, &(a * b));
            }
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&u32, &BigRational)> {
        self.terms.iter()
    }

    /// The constant coefficient (exponent 0 of `c`).
    pub fn constant_coefficient(&self) -> BigRational {
        self.terms.get(&0).cloned().unwrap_or_else(BigRational::zero)
    }

    /// The value as a plain rational if no positive power of `c` is present.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.terms.keys().all(|&c| c == 0) {
            Some(self.constant_coefficient())
        } else {
            None
        }
    }

    pub fn eval(&self, c: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (&c_exp, coeff) in &self.terms {
            acc += coeff * rational_pow(c, c_exp as i64);
        }
        acc
    }
}

impl fmt::Display for CPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&c, coeff) in &self.terms {
            if first {
                first = false;
                if coeff.is_negative() {
                    write!(f, "-")?;
                }
            } else if coeff.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = coeff.abs();
            if c == 0 {
                write!(f, "{mag}")?;
            } else {
                if !mag.is_one() {
                    write!(f, "{mag}*")?;
                }
                write!(f, "c")?;
                if c > 1 {
                    write!(f, "^{c}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn rational_pow(base: &BigRational, exp: i64) -> BigRational {
    if exp == 0 {
        return BigRational::one();
    }
    let mut acc = BigRational::one();
    for _ in 0..exp.unsigned_abs() {
        acc *= base;
    }
    if exp < 0 {
        acc.recip()
    } else {
        acc
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_normalization() {
        let mut v = LaurentValue::zero();
        v.add_term(0, 0, &int(1));
        v.add_term(-1, 0, &int(1));
        v.add_term(-1, 0, &int(-1));
        assert_eq!(v.coefficient(-1, 0), int(0));
        assert!(!v.terms.contains_key(&(-1, 0)));
        assert_eq!(v, LaurentValue::one());
    }

    #[test]
    fn eval_at_concrete_size() {
        // 1 + 1/N at N = 3 is 4/3.
        let mut v = LaurentValue::one();
        v.add_term(-1, 0, &int(1));
        assert_eq!(v.eval(&int(3), &int(1)), rat(4, 3));
    }

    #[test]
    fn constant_term_keeps_c_powers() {
        let mut v = LaurentValue::zero();
        v.add_term(0, 2, &int(3));
        v.add_term(-1, 1, &int(5));
        let ct = v.constant_term();
        assert_eq!(ct, CPolynomial::monomial(2, int(3)));
    }

    #[test]
    fn display_formats() {
        let mut v = LaurentValue::zero();
        v.add_term(0, 0, &int(1));
        v.add_term(-1, 0, &int(1));
        assert_eq!(v.to_string(), "1 + N^-1");
        let w = LaurentValue::monomial(0, 1, int(2));
        assert_eq!(w.to_string(), "2*c");
    }
}
