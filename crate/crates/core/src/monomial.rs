//! Monomials and monomial ideals on a fixed set of chart variables.
//!
//! A [`MonomialIdeal`] always holds its minimal generating set, sorted in the
//! canonical order of [`Monomial`] (total degree ascending, then exponent
//! vectors in descending lexicographic order, so `x` precedes `y`). Equal
//! ideals therefore have identical representations and serialize to the same
//! bytes.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on any single exponent produced by substitution.
pub const DEFAULT_EXPONENT_CAP: u64 = 1 << 31;

/// Exponent vector of a monomial. The all-zero vector is the unit monomial.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    /// The coordinate function `x_index`.
    pub fn var(index: usize, arity: usize) -> Self {
        let mut e = vec![0; arity];
        e[index] = 1;
        Monomial(e)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| u64::from(e)).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Indices of variables with positive exponent.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
            .collect()
    }

    fn check_arity(&self, other: &Monomial) -> Result<()> {
        if self.arity() != other.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                found: other.arity(),
            });
        }
        Ok(())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.arity() == other.arity() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn lcm(&self, other: &Monomial) -> Result<Monomial> {
        self.check_arity(other)?;
        Ok(Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        ))
    }

    pub fn gcd(&self, other: &Monomial) -> Result<Monomial> {
        self.check_arity(other)?;
        Ok(Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.min(b))
                .collect(),
        ))
    }

    /// `self / gcd(self, other)`.
    pub fn quotient_by_gcd(&self, other: &Monomial) -> Result<Monomial> {
        self.check_arity(other)?;
        Ok(Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.saturating_sub(b))
                .collect(),
        ))
    }

    /// Exact division; `None` unless `divisor` divides `self`.
    pub fn checked_div(&self, divisor: &Monomial) -> Option<Monomial> {
        if !divisor.divides(self) {
            return None;
        }
        Some(Monomial(
            self.0
                .iter()
                .zip(&divisor.0)
                .map(|(&a, &b)| a - b)
                .collect(),
        ))
    }

    pub fn mul(&self, other: &Monomial, cap: u64) -> Result<Monomial> {
        self.check_arity(other)?;
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| capped(u64::from(a) + u64::from(b), cap))
            .collect::<Result<Vec<_>>>()
            .map(Monomial)
    }

    /// Image under the permutation sending variable `k` to `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Monomial {
        let mut out = vec![0; self.arity()];
        for (k, &e) in self.0.iter().enumerate() {
            out[perm[k]] = e;
        }
        Monomial(out)
    }
}

pub(crate) fn capped(value: u64, cap: u64) -> Result<u32> {
    if value > cap || value > u64::from(u32::MAX) {
        return Err(Error::ExponentOverflow { value, cap });
    }
    Ok(value as u32)
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            match NAMES.get(i) {
                Some(n) if self.arity() <= NAMES.len() => write!(f, "{n}")?,
                _ => write!(f, "x{}", i + 1)?,
            }
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A nonzero monomial ideal given by its minimal generators.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Monomial>", into = "Vec<Monomial>")]
pub struct MonomialIdeal {
    arity: usize,
    generators: Vec<Monomial>,
}

impl MonomialIdeal {
    /// Builds the ideal generated by `gens`, dropping redundant generators.
    pub fn minimalize<I>(gens: I) -> Result<Self>
    where
        I: IntoIterator<Item = Monomial>,
    {
        let mut gens: Vec<Monomial> = gens.into_iter().collect();
        let arity = gens.first().ok_or(Error::ZeroIdeal)?.arity();
        if let Some(bad) = gens.iter().find(|m| m.arity() != arity) {
            return Err(Error::Arity {
                expected: arity,
                found: bad.arity(),
            });
        }
        gens.sort();
        gens.dedup();
        // A proper divisor has strictly smaller degree, so it is already kept.
        let mut kept: Vec<Monomial> = Vec::with_capacity(gens.len());
        for g in gens {
            if !kept.iter().any(|k| k.divides(&g)) {
                kept.push(g);
            }
        }
        Ok(MonomialIdeal {
            arity,
            generators: kept,
        })
    }

    pub fn unit(arity: usize) -> Self {
        MonomialIdeal {
            arity,
            generators: vec![Monomial::one(arity)],
        }
    }

    pub fn principal(generator: Monomial) -> Self {
        MonomialIdeal {
            arity: generator.arity(),
            generators: vec![generator],
        }
    }

    /// Shorthand for tests and examples: one exponent vector per generator.
    pub fn from_exponents(rows: &[&[u32]]) -> Result<Self> {
        Self::minimalize(rows.iter().map(|r| Monomial::new(r.to_vec())))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn generators(&self) -> &[Monomial] {
        &self.generators
    }

    pub fn is_unit(&self) -> bool {
        self.generators.len() == 1 && self.generators[0].is_one()
    }

    fn check_arity(&self, other: &MonomialIdeal) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(())
    }

    pub fn sum(&self, other: &MonomialIdeal) -> Result<MonomialIdeal> {
        self.check_arity(other)?;
        Self::minimalize(self.generators.iter().chain(&other.generators).cloned())
    }

    pub fn intersect(&self, other: &MonomialIdeal) -> Result<MonomialIdeal> {
        self.check_arity(other)?;
        let mut lcms = Vec::with_capacity(self.generators.len() * other.generators.len());
        for a in &self.generators {
            for b in &other.generators {
                lcms.push(a.lcm(b)?);
            }
        }
        Self::minimalize(lcms)
    }

    /// The conductor `self : other = { m : m * other ⊆ self }`.
    pub fn colon(&self, other: &MonomialIdeal) -> Result<MonomialIdeal> {
        self.check_arity(other)?;
        let mut acc: Option<MonomialIdeal> = None;
        for f in &other.generators {
            let part = Self::minimalize(
                self.generators
                    .iter()
                    .map(|g| g.quotient_by_gcd(f))
                    .collect::<Result<Vec<_>>>()?,
            )?;
            acc = Some(match acc {
                None => part,
                Some(prev) => prev.intersect(&part)?,
            });
        }
        Ok(acc.expect("ideals have at least one generator"))
    }

    pub fn contains(&self, m: &Monomial) -> Result<bool> {
        if m.arity() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: m.arity(),
            });
        }
        Ok(self.generators.iter().any(|g| g.divides(m)))
    }

    /// Splits `self = g * R` where `g` is the gcd of the generators.
    pub fn gcd_and_residual(&self) -> (Monomial, MonomialIdeal) {
        let mut g = self.generators[0].clone();
        for m in &self.generators[1..] {
            g = g.gcd(m).expect("uniform arity");
        }
        let residual = Self::minimalize(
            self.generators
                .iter()
                .map(|m| m.checked_div(&g).expect("gcd divides every generator")),
        )
        .expect("nonempty");
        (g, residual)
    }

    pub fn is_locally_principal(&self) -> bool {
        self.generators.len() == 1
    }

    /// The single generator of a principal ideal.
    pub fn principal_generator(&self) -> Option<&Monomial> {
        match self.generators.as_slice() {
            [g] => Some(g),
            _ => None,
        }
    }

    pub fn permuted(&self, perm: &[usize]) -> MonomialIdeal {
        Self::minimalize(self.generators.iter().map(|m| m.permuted(perm))).expect("nonempty")
    }

    /// Product of the ideal with a monomial.
    pub fn scaled(&self, m: &Monomial, cap: u64) -> Result<MonomialIdeal> {
        Self::minimalize(
            self.generators
                .iter()
                .map(|g| g.mul(m, cap))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

impl TryFrom<Vec<Monomial>> for MonomialIdeal {
    type Error = Error;

    fn try_from(gens: Vec<Monomial>) -> Result<Self> {
        Self::minimalize(gens)
    }
}

impl From<MonomialIdeal> for Vec<Monomial> {
    fn from(ideal: MonomialIdeal) -> Self {
        ideal.generators
    }
}

impl fmt::Display for MonomialIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for MonomialIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
