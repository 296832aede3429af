//! Sparse multivariate polynomials with canonical term order.
//!
//! Terms are kept sorted lexicographically by exponent vector, deduplicated,
//! and stripped of zero coefficients, so two equal polynomials compare equal
//! and compilation walks terms in a reproducible order.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::math::powi;
use crate::Result;

/// One monomial: coefficient times `prod_k x_k^{exps[k]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub exps: Vec<u32>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

/// Polynomial in `n_vars` variables, canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n_vars: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    /// Builds a polynomial from raw terms, merging duplicates and dropping
    /// zero coefficients. Every exponent vector must have length `n_vars`.
    pub fn new(n_vars: usize, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if t.exps.len() != n_vars {
                return Err(Error::Dimension(
                    "term exponent vector length differs from variable count".to_string(),
                ));
            }
            if !t.coeff.is_finite() {
                return Err(Error::Precondition(
                    "non-finite polynomial coefficient".to_string(),
                ));
            }
        }
        let mut terms = terms;
        terms.sort_by(|a, b| a.exps.cmp(&b.exps));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        Ok(Polynomial {
            n_vars,
            terms: merged,
        })
    }

    /// The zero polynomial.
    pub fn zero(n_vars: usize) -> Self {
        Polynomial {
            n_vars,
            terms: vec![],
        }
    }

    /// A constant.
    pub fn constant(n_vars: usize, c: f64) -> Self {
        Polynomial::new(
            n_vars,
            vec![Term {
                coeff: c,
                exps: vec![0; n_vars],
            }],
        )
        .expect("constant term is well formed")
    }

    /// The single variable `x_k`.
    pub fn variable(n_vars: usize, k: usize) -> Result<Self> {
        if k >= n_vars {
            return Err(Error::Dimension("variable index out of range".to_string()));
        }
        let mut exps = vec![0; n_vars];
        exps[k] = 1;
        Polynomial::new(
            n_vars,
            vec![Term { coeff: 1.0, exps }],
        )
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Terms in lexicographic exponent order.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_vars {
            return Err(Error::Dimension(
                "evaluation point length differs from variable count".to_string(),
            ));
        }
        let mut acc = 0.0;
        for t in &self.terms {
            let mut m = t.coeff;
            for (v, e) in x.iter().zip(t.exps.iter()) {
                if *e > 0 {
                    m *= powi(*v, *e);
                }
            }
            acc += m;
        }
        Ok(acc)
    }

    fn add_assign(&mut self, other: &Polynomial) {
        let sum = Polynomial::new(
            self.n_vars,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .cloned()
                .collect(),
        )
        .expect("canonical inputs stay well formed");
        *self = sum;
    }

    fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let exps = a
                    .exps
                    .iter()
                    .zip(b.exps.iter())
                    .map(|(x, y)| x + y)
                    .collect();
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    exps,
                });
            }
        }
        Polynomial::new(self.n_vars, terms).expect("canonical inputs stay well formed")
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::new(
            self.n_vars,
            self.terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * s,
                    exps: t.exps.clone(),
                })
                .collect(),
        )
        .expect("canonical inputs stay well formed")
    }

    /// Rewrites the polynomial under the per-axis substitution
    /// `x_k = a[k] * y_k + b[k]`, returning a polynomial in `y`.
    pub fn substitute_affine(&self, a: &[f64], b: &[f64]) -> Result<Polynomial> {
        if a.len() != self.n_vars || b.len() != self.n_vars {
            return Err(Error::Dimension(
                "substitution coefficient length differs from variable count".to_string(),
            ));
        }
        let mut result = Polynomial::zero(self.n_vars);
        for t in &self.terms {
            let mut factor = Polynomial::constant(self.n_vars, t.coeff);
            for k in 0..self.n_vars {
                if t.exps[k] == 0 {
                    continue;
                }
                // (a_k y_k + b_k)^e via repeated multiplication; exponents
                // here are tiny so no binomial shortcut is needed.
                let mut lin_exps = vec![0; self.n_vars];
                lin_exps[k] = 1;
                let lin = Polynomial::new(
                    self.n_vars,
                    vec![
                        Term {
                            coeff: a[k],
                            exps: lin_exps,
                        },
                        Term {
                            coeff: b[k],
                            exps: vec![0; self.n_vars],
                        },
                    ],
                )?;
                for _ in 0..t.exps[k] {
                    factor = factor.mul(&lin);
                }
            }
            result.add_assign(&factor);
        }
        Ok(result)
    }
}
