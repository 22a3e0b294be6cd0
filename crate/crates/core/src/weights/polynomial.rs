use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: Complex64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// Holomorphic polynomial in n complex variables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Polynomial { terms }
    }

    /// `c · z_var` in n variables.
    pub fn linear(n: usize, var: usize, c: Complex64) -> Self {
        let mut powers = vec![0; n];
        powers[var] = 1;
        Polynomial { terms: vec![Monomial { coeff: c, powers }] }
    }

    /// One-variable polynomial from coefficients of `1, z, z², …`.
    pub fn univariate(coeffs: &[Complex64]) -> Self {
        Polynomial {
            terms: coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm_sqr() > 0.0)
                .map(|(k, c)| Monomial { coeff: *c, powers: vec![k as u32] })
                .collect(),
        }
    }

    /// Number of variables, or `None` when terms disagree.
    pub fn nvars(&self) -> Option<usize> {
        let mut it = self.terms.iter().map(|t| t.powers.len());
        let first = it.next()?;
        it.all(|l| l == first).then_some(first)
    }

    pub fn eval(&self, z: &Point) -> Complex64 {
        self.terms.iter().map(|t| t.powers.iter().zip(&z.0).fold(t.coeff, |acc, (&e, c)| acc * c.powu(e))).sum()
    }

    pub fn partial(&self, var: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.powers[var] > 0)
            .map(|t| {
                let mut powers = t.powers.clone();
                let e = powers[var];
                powers[var] -= 1;
                Monomial { coeff: t.coeff * e as f64, powers }
            })
            .collect();
        Polynomial { terms }
    }

    /// The polynomial `w ↦ self(x + w)`, with like terms merged.
    pub fn shifted(&self, x: &Point) -> Polynomial {
        let mut acc: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for t in &self.terms {
            // expand Π (x_j + w_j)^{e_j} one variable at a time
            let mut partial: Vec<(Vec<u32>, Complex64)> = vec![(Vec::new(), t.coeff)];
            for (j, &e) in t.powers.iter().enumerate() {
                let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                for (pows, c) in &partial {
                    for k in 0..=e {
                        let mut p = pows.clone();
                        p.push(k);
                        let factor = binomial(e, k) * x.0[j].powu(e - k);
                        next.push((p, c * factor));
                    }
                }
                partial = next;
            }
            for (p, c) in partial {
                *acc.entry(p).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        Polynomial { terms: acc.into_iter().map(|(powers, coeff)| Monomial { coeff, powers }).collect() }
    }

    /// Upper bound on `sup_{|w| ≤ R} |self(x + w) − self(x)|`.
    pub fn oscillation_bound(&self, x: &Point, radius: f64) -> f64 {
        self.shifted(x)
            .terms
            .iter()
            .filter(|t| t.degree() > 0)
            .map(|t| t.coeff.norm() * radius.powi(t.degree() as i32))
            .sum()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_and_derivative() {
        // z³ + 2z
        let p = Polynomial::univariate(&[c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let z = Point::c1(0.5, -1.0);
        let w = z.0[0];
        assert!((p.eval(&z) - (w * w * w + 2.0 * w)).norm() < 1e-14);
        assert!((p.partial(0).eval(&z) - (3.0 * w * w + 2.0)).norm() < 1e-14);
    }

    #[test]
    fn shift_preserves_values() {
        let p = Polynomial::new(vec![
            Monomial { coeff: c(1.0, 2.0), powers: vec![2, 1] },
            Monomial { coeff: c(-0.5, 0.0), powers: vec![0, 3] },
        ]);
        let x = Point(vec![c(0.3, 0.1), c(-0.2, 0.7)]);
        let w = Point(vec![c(0.05, -0.4), c(0.9, 0.2)]);
        let shifted = p.shifted(&x);
        assert!((shifted.eval(&w) - p.eval(&x.add(&w))).norm() < 1e-13);
    }

    #[test]
    fn oscillation_bound_is_exact_for_linear() {
        let p = Polynomial::linear(1, 0, c(0.0, 2.0));
        assert!((p.oscillation_bound(&Point::c1(5.0, 1.0), 0.25) - 0.5).abs() < 1e-15);
    }
}
