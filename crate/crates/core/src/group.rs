//! Finite permutation groups acting on chart variables, on the members of an
//! ideal collection and on the coordinates of a rational map, together with
//! the induced action on blowup towers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::atlas::{BlowupTower, Center, ChartId};
use crate::error::{Error, Result};
use crate::monomial::{Monomial, MonomialIdeal};

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &i in p {
        if i >= p.len() || std::mem::replace(&mut seen[i], true) {
            return false;
        }
    }
    true
}

fn compose(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&i| outer[i]).collect()
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// A group element. Permutations are zero-based image lists: variable `k`
/// is sent to `var_perm[k]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "ElementJson", into = "ElementJson")]
pub struct GroupElement {
    pub var_perm: Vec<usize>,
    pub ideal_perm: Option<Vec<usize>>,
    pub coord_perm: Option<Vec<usize>>,
}

/// One-based wire form `{"vars": [...], "ideals": [...], "coords": [...]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementJson {
    vars: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ideals: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<usize>>,
}

fn from_one_based(p: Vec<usize>, what: &str) -> Result<Vec<usize>> {
    let p: Vec<usize> = p
        .into_iter()
        .map(|i| i.checked_sub(1))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InconsistentAction(format!("{what} image list contains 0")))?;
    if !is_permutation(&p) {
        return Err(Error::InconsistentAction(format!(
            "{what} image list is not a permutation"
        )));
    }
    Ok(p)
}

impl TryFrom<ElementJson> for GroupElement {
    type Error = Error;

    fn try_from(j: ElementJson) -> Result<Self> {
        Ok(GroupElement {
            var_perm: from_one_based(j.vars, "vars")?,
            ideal_perm: j.ideals.map(|p| from_one_based(p, "ideals")).transpose()?,
            coord_perm: j.coords.map(|p| from_one_based(p, "coords")).transpose()?,
        })
    }
}

impl From<GroupElement> for ElementJson {
    fn from(g: GroupElement) -> Self {
        let one = |p: Vec<usize>| p.into_iter().map(|i| i + 1).collect();
        ElementJson {
            vars: one(g.var_perm),
            ideals: g.ideal_perm.map(one),
            coords: g.coord_perm.map(one),
        }
    }
}

impl GroupElement {
    pub fn identity(arity: usize) -> Self {
        GroupElement {
            var_perm: (0..arity).collect(),
            ideal_perm: None,
            coord_perm: None,
        }
    }

    /// Element acting on variables only.
    pub fn vars(var_perm: Vec<usize>) -> Self {
        GroupElement {
            var_perm,
            ideal_perm: None,
            coord_perm: None,
        }
    }

    pub fn with_ideal_perm(mut self, p: Vec<usize>) -> Self {
        self.ideal_perm = Some(p);
        self
    }

    pub fn with_coord_perm(mut self, p: Vec<usize>) -> Self {
        self.coord_perm = Some(p);
        self
    }

    /// Transposition of two variables.
    pub fn swap(arity: usize, a: usize, b: usize) -> Self {
        let mut p: Vec<usize> = (0..arity).collect();
        p.swap(a, b);
        Self::vars(p)
    }

    pub fn arity(&self) -> usize {
        self.var_perm.len()
    }

    pub fn is_identity(&self) -> bool {
        self.var_perm.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let both = |a: &Option<Vec<usize>>, b: &Option<Vec<usize>>| match (a, b) {
            (Some(a), Some(b)) => Some(compose(a, b)),
            _ => None,
        };
        GroupElement {
            var_perm: compose(&self.var_perm, &other.var_perm),
            ideal_perm: both(&self.ideal_perm, &other.ideal_perm),
            coord_perm: both(&self.coord_perm, &other.coord_perm),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            var_perm: invert(&self.var_perm),
            ideal_perm: self.ideal_perm.as_deref().map(invert),
            coord_perm: self.coord_perm.as_deref().map(invert),
        }
    }

    pub fn act_on_monomial(&self, m: &Monomial) -> Result<Monomial> {
        if m.arity() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                found: m.arity(),
            });
        }
        Ok(m.permuted(&self.var_perm))
    }

    pub fn act_on_ideal(&self, ideal: &MonomialIdeal) -> Result<MonomialIdeal> {
        if ideal.arity() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                found: ideal.arity(),
            });
        }
        Ok(ideal.permuted(&self.var_perm))
    }

    pub fn act_on_center(&self, center: &Center) -> Center {
        center.permuted(&self.var_perm)
    }
}

/// A finite group of [`GroupElement`]s, closed under composition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAction {
    arity: usize,
    elements: Vec<GroupElement>,
    generators: Vec<GroupElement>,
}

impl GroupAction {
    pub fn trivial(arity: usize) -> Self {
        GroupAction {
            arity,
            elements: vec![GroupElement::identity(arity)],
            generators: Vec::new(),
        }
    }

    /// Breadth-first closure of `generators`. Elements are stored sorted by
    /// their variable permutation, so the identity comes first.
    pub fn closure(generators: Vec<GroupElement>, arity: usize) -> Result<Self> {
        let mut ideal_len = None;
        let mut coord_len = None;
        for (i, g) in generators.iter().enumerate() {
            if g.arity() != arity || !is_permutation(&g.var_perm) {
                return Err(Error::InconsistentAction(format!(
                    "generator {i} is not a permutation of {arity} variables"
                )));
            }
            check_side(i, &g.ideal_perm, &mut ideal_len, "ideal")?;
            check_side(i, &g.coord_perm, &mut coord_len, "coordinate")?;
        }
        if generators.iter().any(|g| g.ideal_perm.is_none()) && ideal_len.is_some() {
            return Err(Error::InconsistentAction(
                "ideal permutations given for some generators only".into(),
            ));
        }
        if generators.iter().any(|g| g.coord_perm.is_none()) && coord_len.is_some() {
            return Err(Error::InconsistentAction(
                "coordinate permutations given for some generators only".into(),
            ));
        }
        let identity = GroupElement {
            var_perm: (0..arity).collect(),
            ideal_perm: ideal_len.map(|n| (0..n).collect()),
            coord_perm: coord_len.map(|n| (0..n).collect()),
        };
        let mut by_vars: BTreeMap<Vec<usize>, GroupElement> = BTreeMap::new();
        by_vars.insert(identity.var_perm.clone(), identity.clone());
        let mut queue = VecDeque::from([identity]);
        while let Some(h) = queue.pop_front() {
            for g in &generators {
                let p = g.compose(&h);
                match by_vars.get(&p.var_perm) {
                    Some(existing) if *existing != p => {
                        return Err(Error::InconsistentAction(format!(
                            "variable permutation {:?} carries two different ideal or coordinate permutations",
                            p.var_perm
                        )));
                    }
                    Some(_) => {}
                    None => {
                        by_vars.insert(p.var_perm.clone(), p.clone());
                        queue.push_back(p);
                    }
                }
            }
        }
        Ok(GroupAction {
            arity,
            elements: by_vars.into_values().collect(),
            generators,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// Index of the element with the given variable permutation.
    pub fn index_of(&self, var_perm: &[usize]) -> Option<usize> {
        self.elements.iter().position(|g| g.var_perm == var_perm)
    }

    /// Replaces each element's ideal permutation.
    pub fn with_ideal_perms(mut self, perms: Vec<Vec<usize>>) -> Self {
        for (g, p) in self.elements.iter_mut().zip(perms) {
            g.ideal_perm = Some(p);
        }
        self
    }

    pub fn with_coord_perms(mut self, perms: Vec<Vec<usize>>) -> Self {
        for (g, p) in self.elements.iter_mut().zip(perms) {
            g.coord_perm = Some(p);
        }
        self
    }

    /// Finds, for every element `g`, the permutation `σ_g` with
    /// `g·I_k = I_{σ_g(k)}`, and checks `σ_{gh} = σ_g ∘ σ_h`.
    pub fn check_collection_invariant(
        &self,
        collection: &[MonomialIdeal],
    ) -> Result<Vec<Vec<usize>>> {
        for ideal in collection {
            if ideal.arity() != self.arity {
                return Err(Error::Arity {
                    expected: self.arity,
                    found: ideal.arity(),
                });
            }
        }
        self.invariant_assignment(
            collection,
            |g, i| g.act_on_ideal(i).expect("arity checked"),
            |g| g.ideal_perm.as_ref(),
        )
    }

    /// Same as [`Self::check_collection_invariant`] for the coordinates of a map.
    pub fn check_coordinates_invariant(&self, coordinates: &[Monomial]) -> Result<Vec<Vec<usize>>> {
        for m in coordinates {
            if m.arity() != self.arity {
                return Err(Error::Arity {
                    expected: self.arity,
                    found: m.arity(),
                });
            }
        }
        self.invariant_assignment(
            coordinates,
            |g, m| m.permuted(&g.var_perm),
            |g| g.coord_perm.as_ref(),
        )
    }

    fn invariant_assignment<T, A, E>(
        &self,
        items: &[T],
        act: A,
        explicit: E,
    ) -> Result<Vec<Vec<usize>>>
    where
        T: PartialEq,
        A: Fn(&GroupElement, &T) -> T,
        E: Fn(&GroupElement) -> Option<&Vec<usize>>,
    {
        let mut perms = Vec::with_capacity(self.elements.len());
        for (gi, g) in self.elements.iter().enumerate() {
            let images: Vec<T> = items.iter().map(|it| act(g, it)).collect();
            let sigma = match explicit(g) {
                Some(p) => {
                    if p.len() != items.len() {
                        return Err(Error::InconsistentAction(format!(
                            "element {gi} permutes {} items, the collection has {}",
                            p.len(),
                            items.len()
                        )));
                    }
                    if let Some(k) = (0..items.len()).find(|&k| images[k] != items[p[k]]) {
                        return Err(Error::NotInvariant {
                            element: gi,
                            index: k,
                        });
                    }
                    p.clone()
                }
                None => match_by_rank(items, &images).map_err(|k| Error::NotInvariant {
                    element: gi,
                    index: k,
                })?,
            };
            perms.push(sigma);
        }
        for (a, ga) in self.elements.iter().enumerate() {
            for (b, gb) in self.elements.iter().enumerate() {
                let gab = ga.compose(gb);
                let c = self
                    .index_of(&gab.var_perm)
                    .ok_or_else(|| Error::InconsistentAction("element set is not closed".into()))?;
                if perms[c] != compose(&perms[a], &perms[b]) {
                    return Err(Error::InconsistentAction(format!(
                        "index permutations of elements {a} and {b} do not compose"
                    )));
                }
            }
        }
        Ok(perms)
    }

    /// Lifts every element to the tower; entry `i` belongs to `elements()[i]`.
    pub fn transport_all(&self, tower: &BlowupTower) -> Result<Vec<ChartMap>> {
        self.elements
            .iter()
            .map(|g| transport_tower(g, tower))
            .collect()
    }
}

fn check_side(i: usize, p: &Option<Vec<usize>>, len: &mut Option<usize>, what: &str) -> Result<()> {
    if let Some(p) = p {
        if !is_permutation(p) || len.is_some_and(|n| n != p.len()) {
            return Err(Error::InconsistentAction(format!(
                "generator {i} has a malformed {what} permutation"
            )));
        }
        *len = Some(p.len());
    }
    Ok(())
}

/// Matches `images[k]` to the item with the same value and the same rank among
/// duplicates. Returns the first unmatched index on failure.
fn match_by_rank<T: PartialEq>(
    items: &[T],
    images: &[T],
) -> std::result::Result<Vec<usize>, usize> {
    let mut sigma = Vec::with_capacity(items.len());
    for k in 0..items.len() {
        let rank = (0..k).filter(|&i| items[i] == items[k]).count();
        let candidates: Vec<usize> = (0..items.len())
            .filter(|&j| items[j] == images[k])
            .collect();
        let class = (0..items.len()).filter(|&i| items[i] == items[k]).count();
        if candidates.len() != class {
            return Err(k);
        }
        sigma.push(candidates[rank]);
    }
    Ok(sigma)
}

/// Image of every chart under a lifted group element, indexed by chart id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChartMap(Vec<ChartId>);

impl ChartMap {
    pub fn identity(len: usize) -> Self {
        ChartMap((0..len).map(ChartId).collect())
    }

    pub fn image(&self, chart: ChartId) -> ChartId {
        self.0[chart.0]
    }

    pub fn images(&self) -> &[ChartId] {
        &self.0
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &ChartMap) -> ChartMap {
        ChartMap(other.0.iter().map(|c| self.0[c.0]).collect())
    }
}

/// Lifts `g` to a chart bijection of `tower` and verifies that every step's
/// centers form a `g`-stable set.
pub fn transport_tower(g: &GroupElement, tower: &BlowupTower) -> Result<ChartMap> {
    transport_between(g, tower, tower)
}

/// Lifts the variable relabeling `g` to a chart bijection from `source` onto
/// `target`. When both are the same tower, centers must also be mapped into
/// the same orbit group; otherwise orbit groups must correspond one to one.
pub fn transport_between(
    g: &GroupElement,
    source: &BlowupTower,
    target: &BlowupTower,
) -> Result<ChartMap> {
    if g.arity() != source.arity() || source.arity() != target.arity() {
        return Err(Error::Arity {
            expected: source.arity(),
            found: g.arity(),
        });
    }
    let same = std::ptr::eq(source, target);
    let perm = &g.var_perm;
    let group_key = |t: &BlowupTower, step: usize| -> (bool, usize) {
        match t.steps()[step].orbit_tag {
            Some(tag) => (true, tag as usize),
            None => (false, step),
        }
    };

    let mut order: Vec<(bool, usize)> = Vec::new();
    let mut members: BTreeMap<(bool, usize), Vec<usize>> = BTreeMap::new();
    for s in 0..source.steps().len() {
        let key = group_key(source, s);
        if !members.contains_key(&key) {
            order.push(key);
        }
        members.entry(key).or_default().push(s);
    }

    let mut phi: Vec<Option<ChartId>> = vec![None; source.charts().len()];
    phi[ChartId::ROOT.0] = Some(ChartId::ROOT);
    let mut group_map: BTreeMap<(bool, usize), (bool, usize)> = BTreeMap::new();

    for key in order {
        for &s in &members[&key] {
            for c in &source.steps()[s].centers {
                let broken = |reason: String| Error::EquivarianceBroken { step: s, reason };
                let image_chart = phi[c.chart.0]
                    .ok_or_else(|| broken(format!("chart {} has no image yet", c.chart)))?;
                let image_center = c.center.permuted(perm);
                let target_chart = target.chart(image_chart)?;
                let first_child = target_chart.children.first().ok_or_else(|| {
                    broken(format!(
                        "image center {image_center} on chart {image_chart} is never blown up"
                    ))
                })?;
                let found = target.chart(*first_child)?.center.as_ref();
                if found != Some(&image_center) {
                    return Err(broken(format!(
                        "chart {image_chart} is blown up along {} instead of {image_center}",
                        found.map_or("-".to_string(), Center::to_string)
                    )));
                }
                let target_step = target.born_in(*first_child).expect("non-root chart");
                let target_key = group_key(target, target_step);
                if same {
                    if target_key != key {
                        return Err(broken(format!(
                            "image center {image_center} on chart {image_chart} belongs to step {target_step}, outside this orbit"
                        )));
                    }
                } else if *group_map.entry(key).or_insert(target_key) != target_key {
                    return Err(broken("orbit groups do not correspond".into()));
                }
                for &child in &source.chart(c.chart)?.children {
                    let branch = source.chart(child)?.branch.expect("child has a branch");
                    let image = target_chart
                        .children
                        .iter()
                        .copied()
                        .find(|&t| target.chart(t).map(|tc| tc.branch) == Ok(Some(perm[branch])))
                        .ok_or_else(|| {
                            broken(format!(
                                "no child of chart {image_chart} for branch {}",
                                perm[branch] + 1
                            ))
                        })?;
                    phi[child.0] = Some(image);
                }
            }
        }
    }

    let last = source.steps().len().saturating_sub(1);
    let phi: Vec<ChartId> =
        phi.into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| Error::EquivarianceBroken {
                step: last,
                reason: "some chart was never reached".into(),
            })?;
    let distinct: BTreeSet<ChartId> = phi.iter().copied().collect();
    if distinct.len() != phi.len() || phi.len() != target.charts().len() {
        return Err(Error::EquivarianceBroken {
            step: last,
            reason: "chart map is not a bijection".into(),
        });
    }

    // g ∘ subst_c = subst_{φ(c)} ∘ g, for local and composite substitutions.
    for chart in source.charts() {
        let image = target.chart(phi[chart.id.0])?;
        for (local, mapped) in [
            (&chart.substitution, &image.substitution),
            (&chart.composite, &image.composite),
        ] {
            for (k, m) in local.images().iter().enumerate() {
                if mapped.images()[perm[k]] != m.permuted(perm) {
                    return Err(Error::EquivarianceBroken {
                        step: source.born_in(chart.id).unwrap_or(0),
                        reason: format!(
                            "substitutions of charts {} and {} do not commute",
                            chart.id, image.id
                        ),
                    });
                }
            }
        }
    }
    Ok(ChartMap(phi))
}
