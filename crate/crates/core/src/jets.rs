//! Truncated Taylor expansions over [`Rational`].
//!
//! A [`Jet`] of order `K` at base point `s` stores `h(s), h'(s), h''(s)/2!, ...,
//! h^(K)(s)/K!`. Arithmetic follows the truncated power-series rules, so any
//! rational function built from [`Jet::variable`] and [`Jet::constant`] yields
//! exact derivatives at `s`.

use thiserror::Error;

use num_bigint::BigInt;

use crate::exact_arith::{factorial, Rational, RationalSum};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("jets differ in base point or order")]
    MixedJets,
    #[error("jet division by a series with zero value coefficient")]
    DivisionByZeroJet,
    #[error("derivative of order {requested} requested from a jet of order {order}")]
    OrderExceeded { requested: usize, order: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jet {
    base_point: Rational,
    coefficients: Vec<Rational>,
}

impl Jet {
    pub fn constant(c: Rational, base_point: Rational, order: usize) -> Self {
        let mut coefficients = vec![Rational::zero(); order + 1];
        coefficients[0] = c;
        Jet {
            base_point,
            coefficients,
        }
    }

    /// The identity function `h(s) = s` expanded at `s`.
    pub fn variable(s: Rational, order: usize) -> Self {
        let mut coefficients = vec![Rational::zero(); order + 1];
        coefficients[0] = s.clone();
        if order >= 1 {
            coefficients[1] = Rational::one();
        }
        Jet {
            base_point: s,
            coefficients,
        }
    }

    pub fn base_point(&self) -> &Rational {
        &self.base_point
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn value(&self) -> &Rational {
        &self.coefficients[0]
    }

    fn check_compatible(&self, other: &Jet) -> Result<(), JetError> {
        if self.base_point != other.base_point || self.order() != other.order() {
            Err(JetError::MixedJets)
        } else {
            Ok(())
        }
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(&Rational, &Rational) -> Rational) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| op(a, b))
            .collect();
        Ok(Jet {
            base_point: self.base_point.clone(),
            coefficients,
        })
    }

    pub fn add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let a = &self.coefficients;
        let b = &other.coefficients;
        let coefficients = (0..a.len())
            .map(|i| {
                (0..=i)
                    .filter(|&j| !a[j].is_zero() && !b[i - j].is_zero())
                    .map(|j| &a[j] * &b[i - j])
                    .sum()
            })
            .collect();
        Ok(Jet {
            base_point: self.base_point.clone(),
            coefficients,
        })
    }

    /// Solves `self = q * other` for `q` term by term.
    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let b = &other.coefficients;
        let lead = b[0].checked_recip().map_err(|_| JetError::DivisionByZeroJet)?;
        let mut q: Vec<Rational> = Vec::with_capacity(b.len());
        for (i, a_i) in self.coefficients.iter().enumerate() {
            let mut acc = a_i.clone();
            for j in 1..=i {
                acc -= &(&b[j] * &q[i - j]);
            }
            q.push(acc * &lead);
        }
        Ok(Jet {
            base_point: self.base_point.clone(),
            coefficients: q,
        })
    }

    /// `sum_i c_i * jet_i`, each coefficient accumulated over a common
    /// denominator.
    pub fn linear_combination(base_point: Rational, order: usize, terms: &[(BigInt, Jet)]) -> Result<Jet, JetError> {
        let mut sums = vec![RationalSum::new(); order + 1];
        for (c, jet) in terms {
            if jet.base_point != base_point || jet.order() != order {
                return Err(JetError::MixedJets);
            }
            for (acc, coeff) in sums.iter_mut().zip(&jet.coefficients) {
                acc.add_scaled(c, coeff);
            }
        }
        Ok(Jet {
            base_point,
            coefficients: sums.into_iter().map(RationalSum::finish).collect(),
        })
    }

    pub fn scale(&self, factor: &Rational) -> Jet {
        Jet {
            base_point: self.base_point.clone(),
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
        }
    }

    /// Adds a constant to the value coefficient.
    pub fn shift(&self, c: &Rational) -> Jet {
        let mut out = self.clone();
        out.coefficients[0] += c;
        out
    }

    /// `h^(k)(s) = k! * coefficients[k]`.
    pub fn derivative(&self, k: usize) -> Result<Rational, JetError> {
        let coeff = self.coefficients.get(k).ok_or(JetError::OrderExceeded {
            requested: k,
            order: self.order(),
        })?;
        Ok(coeff * Rational::from(factorial(k as u64)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(text: &str) -> Rational {
        text.parse().unwrap()
    }

    fn qs(items: &[&str]) -> Vec<Rational> {
        items.iter().map(|t| q(t)).collect()
    }

    /// 1/(s+1) built in jet arithmetic.
    fn reciprocal_shifted(s: &str, order: usize) -> Jet {
        let one = Jet::constant(q("1"), q(s), order);
        let v = Jet::variable(q(s), order);
        one.div(&v.add(&one).unwrap()).unwrap()
    }

    #[test]
    fn constructors() {
        assert_eq!(Jet::constant(q("3"), q("1"), 2).coefficients(), qs(&["3", "0", "0"]));
        assert_eq!(Jet::constant(q("0"), q("1"), 0).coefficients(), qs(&["0"]));
        assert_eq!(Jet::constant(q("-1/2"), q("1"), 1).coefficients(), qs(&["-1/2", "0"]));
        assert_eq!(Jet::variable(q("2"), 2).coefficients(), qs(&["2", "1", "0"]));
        assert_eq!(Jet::variable(q("2"), 0).coefficients(), qs(&["2"]));
        assert_eq!(Jet::variable(q("1/3"), 1).coefficients(), qs(&["1/3", "1"]));
    }

    #[test]
    fn reciprocal_of_shifted_variable() {
        // 1/(s+1) at s=1: value 1/2, derivative -1/4, second derivative 2/8
        let jet = reciprocal_shifted("1", 2);
        assert_eq!(jet.coefficients(), qs(&["1/2", "-1/4", "1/8"]));
        assert_eq!(jet.derivative(0).unwrap(), q("1/2"));
        assert_eq!(jet.derivative(1).unwrap(), q("-1/4"));
        assert_eq!(jet.derivative(2).unwrap(), q("1/4"));
        assert_eq!(
            jet.derivative(3),
            Err(JetError::OrderExceeded { requested: 3, order: 2 })
        );
    }

    #[test]
    fn square_of_variable() {
        let x = Jet::variable(q("2"), 2);
        assert_eq!(x.mul(&x).unwrap().coefficients(), qs(&["4", "4", "1"]));
        let one = Jet::constant(q("1"), q("2"), 2);
        assert_eq!(x.mul(&one).unwrap(), x);
    }

    #[test]
    fn mismatched_and_singular_jets() {
        let a = Jet::variable(q("1"), 2);
        assert_eq!(a.add(&Jet::variable(q("2"), 2)), Err(JetError::MixedJets));
        assert_eq!(a.mul(&Jet::variable(q("1"), 3)), Err(JetError::MixedJets));
        let zero_valued = Jet::variable(q("0"), 2);
        assert_eq!(
            Jet::variable(q("0"), 2).div(&zero_valued),
            Err(JetError::DivisionByZeroJet)
        );
    }

    #[test]
    fn linear_combination_matches_repeated_addition() {
        let s = q("3/2");
        let v = Jet::variable(s.clone(), 3);
        let a = Jet::constant(q("1"), s.clone(), 3).div(&v.shift(&q("2"))).unwrap();
        let b = v.mul(&v).unwrap();
        let combo = Jet::linear_combination(
            s.clone(),
            3,
            &[(BigInt::from(3), a.clone()), (BigInt::from(-2), b.clone())],
        )
        .unwrap();
        let expected = a.scale(&q("3")).sub(&b.scale(&q("2"))).unwrap();
        assert_eq!(combo, expected);
        assert_eq!(
            Jet::linear_combination(q("1"), 3, &[(BigInt::from(1), a)]),
            Err(JetError::MixedJets)
        );
    }

    /// Product k/(s+k) for k = 1..n as a jet.
    fn product_jet(s: &Rational, n: u64, order: usize) -> Jet {
        let v = Jet::variable(s.clone(), order);
        (1..=n).fold(Jet::constant(Rational::one(), s.clone(), order), |acc, k| {
            let k = Rational::from(k);
            let factor = Jet::constant(k.clone(), s.clone(), order).div(&v.shift(&k)).unwrap();
            acc.mul(&factor).unwrap()
        })
    }

    #[test]
    fn product_derivative_matches_logarithmic_form() {
        let grid = ["1/7", "1/2", "1", "3/2", "2", "10", "1000/3"];
        for s in grid.iter().map(|t| q(t)) {
            for n in 0..=10u64 {
                let jet = product_jet(&s, n, 1);
                let g = jet.value().clone();
                let harmonic: Rational = (1..=n).map(|j| (&s + Rational::from(j)).checked_recip().unwrap()).sum();
                assert_eq!(jet.derivative(1).unwrap(), -(g * harmonic), "s={s} n={n}");
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let n = 6u64;
        let g = |s: f64| (1..=n).map(|k| k as f64 / (s + k as f64)).product::<f64>();
        for s in [0.5f64, 1.0, 2.0, 5.0] {
            let jet = product_jet(&Rational::from_f64(s).unwrap(), n, 2);
            let h = 1e-4;
            let d1 = (g(s + h) - g(s - h)) / (2.0 * h);
            let d2 = (g(s + h) - 2.0 * g(s) + g(s - h)) / (h * h);
            let e1 = jet.derivative(1).unwrap().to_f64();
            let e2 = jet.derivative(2).unwrap().to_f64();
            assert!(((d1 - e1) / e1).abs() <= 1e-6, "s={s}: {d1} vs {e1}");
            assert!(((d2 - e2) / e2).abs() <= 1e-6, "s={s}: {d2} vs {e2}");
        }
    }

    /// Random rational function jets: (a + b s) / (c + s) at a positive point.
    fn arb_jet(order: usize) -> impl Strategy<Value = Jet> {
        (-50i64..50, -50i64..50, 1i64..50, 1i64..20, 1i64..20).prop_map(move |(a, b, c, p, d)| {
            let s = Rational::new(p, d).unwrap();
            let v = Jet::variable(s.clone(), order);
            let num = v.scale(&Rational::from(b)).shift(&Rational::from(a));
            let den = v.shift(&Rational::from(c));
            num.div(&den).unwrap()
        })
    }

    fn rebase(j: &Jet, base: &Rational) -> Jet {
        Jet {
            base_point: base.clone(),
            coefficients: j.coefficients.clone(),
        }
    }

    proptest! {
        #[test]
        fn product_rule(a in arb_jet(3), b in arb_jet(3)) {
            let b = rebase(&b, a.base_point());
            let prod = a.mul(&b).unwrap();
            let expected = a.derivative(1).unwrap() * b.value() + a.value() * b.derivative(1).unwrap();
            prop_assert_eq!(prod.derivative(1).unwrap(), expected);
        }

        #[test]
        fn division_inverts_multiplication(a in arb_jet(4), b in arb_jet(4)) {
            let b = rebase(&b, a.base_point());
            prop_assume!(!b.value().is_zero());
            let quotient = a.div(&b).unwrap();
            prop_assert_eq!(quotient.mul(&b).unwrap(), a);
        }
    }
}
