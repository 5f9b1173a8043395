/*!
Multivariate polynomials with natural-number coefficients.

Kept permanently in expanded monomial normal form: a map from monomials
(variable-to-exponent maps) to nonzero big-integer coefficients.  Supported
operations are exactly what bound synthesis needs: addition, multiplication,
substitution of a polynomial for an indeterminate, and evaluation at
natural-number points.  Naturals are closed under all of them, so synthesized
bounds are monotone in every variable by construction.
*/

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;

pub type Monomial = BTreeMap<String, u32>;

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    /// Invariant: no zero coefficients, no zero exponents.
    terms: BTreeMap<Monomial, BigUint>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: u64) -> Poly {
        let mut p = Poly::zero();
        if c > 0 {
            p.terms.insert(Monomial::new(), BigUint::from(c));
        }
        p
    }

    pub fn var(name: &str) -> Poly {
        let mut m = Monomial::new();
        m.insert(name.to_string(), 1);
        let mut p = Poly::zero();
        p.terms.insert(m, BigUint::from(1u32));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: BigUint) {
        if c == BigUint::ZERO {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(|| BigUint::ZERO);
        *entry += c;
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (v, e) in mb {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: u64) -> Poly {
        self.mul(&Poly::constant(c))
    }

    fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::constant(1);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Substitute `replacement` for every occurrence of `var`.
    pub fn subst(&self, var: &str, replacement: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            match m.get(var) {
                None => out.add_term(m.clone(), c.clone()),
                Some(&e) => {
                    let mut rest = m.clone();
                    rest.remove(var);
                    let mut part = Poly::zero();
                    part.terms.insert(rest, c.clone());
                    out = out.add(&part.mul(&replacement.pow(e)));
                }
            }
        }
        out
    }

    /// Evaluate at a point; missing variables default to zero.
    pub fn eval(&self, point: &BTreeMap<String, BigUint>) -> BigUint {
        let mut total = BigUint::ZERO;
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (v, e) in m {
                let x = point.get(v).cloned().unwrap_or(BigUint::ZERO);
                term *= x.pow(*e);
            }
            total += term;
        }
        total
    }

    /// Variables occurring in the polynomial.
    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .terms
            .keys()
            .flat_map(|m| m.keys().cloned())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.values().sum::<u32>())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for Poly {
    /// Canonical form: monomials in descending total degree, ties broken by
    /// the lexicographic order of the monomial map; `0` for the zero
    /// polynomial.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut entries: Vec<(&Monomial, &BigUint)> = self.terms.iter().collect();
        entries.sort_by(|(ma, _), (mb, _)| {
            let da: u32 = ma.values().sum();
            let db: u32 = mb.values().sum();
            db.cmp(&da).then_with(|| ma.cmp(mb))
        });
        for (i, (m, c)) in entries.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let one = BigUint::from(1u32);
            if m.is_empty() || **c != one {
                write!(f, "{}", c)?;
                if !m.is_empty() {
                    write!(f, "*")?;
                }
            }
            for (j, (v, e)) in m.iter().enumerate() {
                if j > 0 {
                    write!(f, "*")?;
                }
                if *e == 1 {
                    write!(f, "{}", v)?;
                } else {
                    write!(f, "{}^{}", v, e)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(pairs: &[(&str, u64)]) -> BTreeMap<String, BigUint> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), BigUint::from(*v)))
            .collect()
    }

    #[test]
    fn arithmetic() {
        let x = Poly::var("x");
        let y = Poly::var("y");
        let p = x.mul(&x).add(&x.mul(&y).scale(2)).add(&Poly::constant(3));
        assert_eq!(p.to_string(), "2*x*y + x^2 + 3");
        assert_eq!(p.eval(&at(&[("x", 2), ("y", 5)])), BigUint::from(27u32));
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn substitution() {
        // (x^2 + x)[x := y + 1] = y^2 + 3y + 2
        let x = Poly::var("x");
        let p = x.mul(&x).add(&x);
        let q = p.subst("x", &Poly::var("y").add(&Poly::constant(1)));
        assert_eq!(q.to_string(), "y^2 + 3*y + 2");
        // Substituting an absent variable is the identity.
        assert_eq!(p.subst("z", &Poly::constant(9)), p);
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(Poly::zero().to_string(), "0");
        assert_eq!(Poly::constant(1).to_string(), "1");
        assert_eq!(Poly::var("n").to_string(), "n");
        let p = Poly::var("b").add(&Poly::var("a")).add(&Poly::constant(7));
        assert_eq!(p.to_string(), "a + b + 7");
    }
}
