//! R-style model formulas over coded factors.
//!
//! `a + b` is a union of terms, `a:b` is a pure interaction and `a*b`
//! crosses its operands into every sub-term (`a*b*c` gives `a, b, c, a:b,
//! a:c, b:c, a:b:c`). `:` binds tighter than `*`, which binds tighter than
//! `+`. An optional `response ~` prefix is accepted and ignored.

use std::fmt;

use crate::{Error, Result};

/// A model term: the set of factor positions multiplied together. The empty
/// set is the intercept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Vec<usize>);

impl Term {
    pub fn intercept() -> Self {
        Term(Vec::new())
    }

    pub fn new(mut factors: Vec<usize>) -> Self {
        factors.sort_unstable();
        factors.dedup();
        Term(factors)
    }

    pub fn factors(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_intercept(&self) -> bool {
        self.0.is_empty()
    }

    /// Value of the term at a coded point.
    pub fn evaluate(&self, coded: &[f64]) -> f64 {
        self.0.iter().map(|&i| coded[i]).product()
    }

    /// `(Intercept)` or factor names joined by `:`.
    pub fn label(&self, names: &[String]) -> String {
        if self.is_intercept() {
            return INTERCEPT_LABEL.to_string();
        }
        self.0.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(":")
    }

    /// Inverse of [`Term::label`].
    pub fn parse_label(label: &str, names: &[String]) -> Result<Self> {
        if label == INTERCEPT_LABEL || label == "1" {
            return Ok(Term::intercept());
        }
        let factors = label
            .split(':')
            .map(|n| lookup(n.trim(), names))
            .collect::<Result<Vec<_>>>()?;
        Ok(Term::new(factors))
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Term, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0.label(self.1))
            }
        }
        D(self, names)
    }
}

pub const INTERCEPT_LABEL: &str = "(Intercept)";

fn lookup(name: &str, names: &[String]) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::Formula(format!("unknown factor `{name}`")))
}

/// Expands a formula into deduplicated terms: the intercept first, then the
/// rest ordered by interaction order and, within an order, by first
/// appearance.
pub fn expand_formula(spec: &str, names: &[String]) -> Result<Vec<Term>> {
    let rhs = match spec.split_once('~') {
        Some((_, rhs)) => rhs,
        None => spec,
    };
    if rhs.trim().is_empty() {
        return Err(Error::Formula("empty formula".into()));
    }
    let mut seen: Vec<Term> = Vec::new();
    for summand in rhs.split('+') {
        let summand = summand.trim();
        if summand.is_empty() {
            return Err(Error::Formula(format!("empty term in `{}`", spec.trim())));
        }
        if summand == "1" {
            continue;
        }
        let operands = summand
            .split('*')
            .map(|op| {
                let op = op.trim();
                if op.is_empty() {
                    return Err(Error::Formula(format!("dangling `*` in `{summand}`")));
                }
                op.split(':')
                    .map(|n| {
                        let n = n.trim();
                        if n.is_empty() {
                            Err(Error::Formula(format!("dangling `:` in `{summand}`")))
                        } else {
                            lookup(n, names)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for subset in subsets_by_size(operands.len()) {
            let term = Term::new(subset.iter().flat_map(|&i| operands[i].iter().copied()).collect());
            if !seen.contains(&term) {
                seen.push(term);
            }
        }
    }
    let mut terms = vec![Term::intercept()];
    seen.retain(|t| !t.is_intercept());
    // stable: keeps first-appearance order within an order
    seen.sort_by_key(Term::order);
    terms.extend(seen);
    Ok(terms)
}

/// Non-empty subsets of `0..n`, by size and then lexicographically.
fn subsets_by_size(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=n {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            out.push(combo.clone());
            // next combination
            let mut i = size;
            while i > 0 && combo[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// All `2^k` terms of a saturated model over `k` factors.
pub fn saturated_terms(k: usize) -> Vec<Term> {
    let mut terms = vec![Term::intercept()];
    terms.extend(subsets_by_size(k).into_iter().map(Term::new));
    terms
}

/// The formula crossing every factor, e.g. `a*b*c`.
pub fn saturated_formula(names: &[String]) -> String {
    names.join("*")
}
