#![allow(dead_code)]

use equiblow::io::{Mode, ProblemFile};
use equiblow::{GroupElement, Monomial, MonomialIdeal};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn m(e: &[u32]) -> Monomial {
    Monomial::new(e.to_vec())
}

pub fn ideal(gens: &[&[u32]]) -> MonomialIdeal {
    MonomialIdeal::from_exponents(gens).unwrap()
}

/// Exponent vector with every entry at most `max_exp`.
pub fn boxed_monomial(rng: &mut ChaCha8Rng, arity: usize, max_exp: u32) -> Monomial {
    Monomial::new((0..arity).map(|_| rng.gen_range(0..=max_exp)).collect())
}

/// Exponent vector of total degree at most `max_deg`.
pub fn graded_monomial(rng: &mut ChaCha8Rng, arity: usize, max_deg: u32) -> Monomial {
    let mut budget = rng.gen_range(0..=max_deg);
    let mut e = vec![0; arity];
    while budget > 0 {
        e[rng.gen_range(0..arity)] += 1;
        budget -= 1;
    }
    Monomial::new(e)
}

pub fn boxed_ideal(
    rng: &mut ChaCha8Rng,
    arity: usize,
    max_gens: usize,
    max_exp: u32,
) -> MonomialIdeal {
    let n = rng.gen_range(1..=max_gens);
    MonomialIdeal::minimalize((0..n).map(|_| boxed_monomial(rng, arity, max_exp))).unwrap()
}

pub fn graded_ideal(
    rng: &mut ChaCha8Rng,
    arity: usize,
    max_gens: usize,
    max_deg: u32,
) -> MonomialIdeal {
    let n = rng.gen_range(1..=max_gens);
    MonomialIdeal::minimalize((0..n).map(|_| graded_monomial(rng, arity, max_deg))).unwrap()
}

pub fn names(arity: usize) -> Vec<String> {
    ["x", "y", "z", "u", "v", "w"][..arity]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn simplify_problem(collection: &[MonomialIdeal], group: Vec<GroupElement>) -> ProblemFile {
    let arity = group
        .first()
        .map(|g| g.var_perm.len())
        .unwrap_or_else(|| collection[0].arity());
    ProblemFile {
        variables: names(arity),
        mode: Some(Mode::Simplify),
        ideals: collection
            .iter()
            .map(|i| {
                i.generators()
                    .iter()
                    .map(|g| g.exponents().to_vec())
                    .collect()
            })
            .collect(),
        group,
        map: None,
        max_steps: None,
    }
}

pub fn map_problem(coords: &[Monomial], group: Vec<GroupElement>) -> ProblemFile {
    ProblemFile {
        variables: names(coords[0].arity()),
        mode: Some(Mode::ResolveMap),
        ideals: Vec::new(),
        group,
        map: Some(coords.iter().map(|c| c.exponents().to_vec()).collect()),
        max_steps: None,
    }
}

/// Permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

pub fn three_cycle() -> GroupElement {
    GroupElement::vars(vec![1, 2, 0])
}

pub const WORKED_PAIR: &str = include_str!("../golden/worked_pair.json");
