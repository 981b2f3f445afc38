//! Toric charts, blowups along coordinate subspaces and the blowup tower.
//!
//! Every chart of the tower is an affine space with the same number of
//! coordinates as the root. Blowing up the center `V(x_i : i ∈ T)` of a chart
//! produces one child per `j ∈ T`; in child `j` the parent coordinates are
//! expressed as `x_j ↦ x_j`, `x_i ↦ x_j·x_i` for `i ∈ T∖{j}` and `x_k ↦ x_k`
//! otherwise. Charts are kept as a forest without gluing data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monomial::{capped, Monomial, MonomialIdeal, DEFAULT_EXPONENT_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChartId(pub usize);

impl ChartId {
    pub const ROOT: ChartId = ChartId(0);
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A coordinate-subspace center, as a sorted set of (zero-based) variable indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Center(Vec<usize>);

impl Center {
    pub fn new<I: IntoIterator<Item = usize>>(vars: I) -> Self {
        let set: BTreeSet<usize> = vars.into_iter().collect();
        Center(set.into_iter().collect())
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0.binary_search(&var).is_ok()
    }

    pub fn permuted(&self, perm: &[usize]) -> Center {
        Center::new(self.0.iter().map(|&v| perm[v]))
    }
}

impl fmt::Display for Center {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, "}}")
    }
}

/// Images of the parent's coordinates as monomials in a chart's coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Substitution(Vec<Monomial>);

impl Substitution {
    pub fn identity(arity: usize) -> Self {
        Substitution((0..arity).map(|k| Monomial::var(k, arity)).collect())
    }

    /// Chart substitution of the blowup of `center` seen from branch `branch`.
    pub fn blowup(arity: usize, center: &Center, branch: usize) -> Self {
        Substitution(
            (0..arity)
                .map(|k| {
                    let mut e = vec![0; arity];
                    e[k] = 1;
                    if k != branch && center.contains(k) {
                        e[branch] = 1;
                    }
                    Monomial::new(e)
                })
                .collect(),
        )
    }

    pub fn from_images(images: Vec<Monomial>) -> Self {
        Substitution(images)
    }

    pub fn images(&self) -> &[Monomial] {
        &self.0
    }

    pub fn apply(&self, m: &Monomial, cap: u64) -> Result<Monomial> {
        let arity = self.0.first().map_or(0, Monomial::arity);
        if m.arity() != self.0.len() {
            return Err(Error::Arity {
                expected: self.0.len(),
                found: m.arity(),
            });
        }
        let mut acc = vec![0u64; arity];
        for (image, &e) in self.0.iter().zip(m.exponents()) {
            if e == 0 {
                continue;
            }
            for (slot, &b) in acc.iter_mut().zip(image.exponents()) {
                *slot += u64::from(e) * u64::from(b);
            }
        }
        acc.into_iter()
            .map(|v| capped(v, cap))
            .collect::<Result<Vec<_>>>()
            .map(Monomial::new)
    }

    pub fn apply_ideal(&self, ideal: &MonomialIdeal, cap: u64) -> Result<MonomialIdeal> {
        MonomialIdeal::minimalize(
            ideal
                .generators()
                .iter()
                .map(|g| self.apply(g, cap))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// `self` followed by `inner`: maps outer coordinates to monomials in
    /// the coordinates of the chart `inner` lands in.
    pub fn then(&self, inner: &Substitution, cap: u64) -> Result<Substitution> {
        self.0
            .iter()
            .map(|m| inner.apply(m, cap))
            .collect::<Result<Vec<_>>>()
            .map(Substitution)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub id: ChartId,
    pub parent: Option<ChartId>,
    pub center: Option<Center>,
    pub branch: Option<usize>,
    /// Parent coordinates in terms of this chart's coordinates.
    pub substitution: Substitution,
    /// Root coordinates in terms of this chart's coordinates.
    pub composite: Substitution,
    pub exceptional: Vec<bool>,
    pub children: Vec<ChartId>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CenterOnChart {
    pub chart: ChartId,
    pub center: Center,
}

/// One step of the tower. Steps sharing an `orbit_tag` together realize a
/// single group orbit of centers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowupStep {
    pub centers: Vec<CenterOnChart>,
    pub orbit_tag: Option<u32>,
}

impl BlowupStep {
    pub fn single(chart: ChartId, center: Center, orbit_tag: Option<u32>) -> Self {
        BlowupStep {
            centers: vec![CenterOnChart { chart, center }],
            orbit_tag,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowupTower {
    arity: usize,
    variable_names: Vec<String>,
    charts: Vec<Chart>,
    steps: Vec<BlowupStep>,
    /// Step index that created each non-root chart.
    born_in: BTreeMap<ChartId, usize>,
    leaves: BTreeSet<ChartId>,
    exponent_cap: u64,
}

impl BlowupTower {
    pub fn new_root(arity: usize, variable_names: Vec<String>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Arity {
                expected: 1,
                found: 0,
            });
        }
        if variable_names.len() != arity {
            return Err(Error::Arity {
                expected: arity,
                found: variable_names.len(),
            });
        }
        let root = Chart {
            id: ChartId::ROOT,
            parent: None,
            center: None,
            branch: None,
            substitution: Substitution::identity(arity),
            composite: Substitution::identity(arity),
            exceptional: vec![false; arity],
            children: Vec::new(),
        };
        Ok(BlowupTower {
            arity,
            variable_names,
            charts: vec![root],
            steps: Vec::new(),
            born_in: BTreeMap::new(),
            leaves: BTreeSet::from([ChartId::ROOT]),
            exponent_cap: DEFAULT_EXPONENT_CAP,
        })
    }

    /// Root with default names `x1, x2, …`.
    pub fn with_arity(arity: usize) -> Result<Self> {
        Self::new_root(arity, (1..=arity).map(|i| format!("x{i}")).collect())
    }

    pub fn with_exponent_cap(mut self, cap: u64) -> Self {
        self.exponent_cap = cap;
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn exponent_cap(&self) -> u64 {
        self.exponent_cap
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, id: ChartId) -> Result<&Chart> {
        self.charts.get(id.0).ok_or(Error::ChartNotFound(id))
    }

    pub fn steps(&self) -> &[BlowupStep] {
        &self.steps
    }

    pub fn leaves(&self) -> &BTreeSet<ChartId> {
        &self.leaves
    }

    pub fn is_leaf(&self, id: ChartId) -> bool {
        self.leaves.contains(&id)
    }

    /// Index of the step that created `id` (`None` for the root).
    pub fn born_in(&self, id: ChartId) -> Option<usize> {
        self.born_in.get(&id).copied()
    }

    pub fn next_orbit_tag(&self) -> u32 {
        self.steps
            .iter()
            .filter_map(|s| s.orbit_tag)
            .max()
            .map_or(0, |t| t + 1)
    }

    /// Blows up a single center as its own untagged step.
    pub fn blow_up(&mut self, chart: ChartId, center: Center) -> Result<Vec<ChartId>> {
        self.apply_step(BlowupStep::single(chart, center, None))
    }

    /// Applies a step; returns the new chart ids in creation order.
    pub fn apply_step(&mut self, step: BlowupStep) -> Result<Vec<ChartId>> {
        let mut seen = BTreeSet::new();
        for c in &step.centers {
            self.chart(c.chart)?;
            if !self.is_leaf(c.chart) {
                return Err(Error::NotLeaf(c.chart));
            }
            if !seen.insert(c.chart) {
                return Err(Error::InvalidCenter {
                    chart: c.chart,
                    center: c.center.vars().to_vec(),
                    reason: "two centers of one step lie on the same chart",
                });
            }
            if c.center.len() < 2 {
                return Err(Error::InvalidCenter {
                    chart: c.chart,
                    center: c.center.vars().to_vec(),
                    reason: "centers must have codimension at least two",
                });
            }
            if c.center.vars().iter().any(|&v| v >= self.arity) {
                return Err(Error::InvalidCenter {
                    chart: c.chart,
                    center: c.center.vars().to_vec(),
                    reason: "variable index out of range",
                });
            }
        }
        let step_index = self.steps.len();
        let mut created = Vec::new();
        for c in &step.centers {
            for &branch in c.center.vars() {
                let id = ChartId(self.charts.len());
                let parent = &self.charts[c.chart.0];
                let substitution = Substitution::blowup(self.arity, &c.center, branch);
                let composite = parent.composite.then(&substitution, self.exponent_cap)?;
                let mut exceptional = parent.exceptional.clone();
                exceptional[branch] = true;
                self.charts.push(Chart {
                    id,
                    parent: Some(c.chart),
                    center: Some(c.center.clone()),
                    branch: Some(branch),
                    substitution,
                    composite,
                    exceptional,
                    children: Vec::new(),
                });
                self.charts[c.chart.0].children.push(id);
                self.leaves.insert(id);
                self.born_in.insert(id, step_index);
                created.push(id);
            }
            self.leaves.remove(&c.chart);
        }
        self.steps.push(step);
        Ok(created)
    }

    /// Chain of charts from `ancestor` (exclusive) down to `chart` (inclusive),
    /// or `None` when `ancestor` is not above `chart`.
    fn chain_from(&self, ancestor: ChartId, chart: ChartId) -> Result<Option<Vec<ChartId>>> {
        let mut chain = Vec::new();
        let mut cur = chart;
        while cur != ancestor {
            chain.push(cur);
            match self.chart(cur)?.parent {
                Some(p) => cur = p,
                None => return Ok(None),
            }
        }
        chain.reverse();
        Ok(Some(chain))
    }

    pub fn is_ancestor(&self, ancestor: ChartId, chart: ChartId) -> Result<bool> {
        Ok(self.chain_from(ancestor, chart)?.is_some())
    }

    /// Coordinates of `ancestor` in terms of the coordinates of `chart`.
    pub fn relative_substitution(&self, ancestor: ChartId, chart: ChartId) -> Result<Substitution> {
        let chain = self.chain_from(ancestor, chart)?.ok_or_else(|| {
            Error::Precondition(format!(
                "chart {ancestor} is not an ancestor of chart {chart}"
            ))
        })?;
        let mut acc = Substitution::identity(self.arity);
        for id in chain {
            acc = acc.then(&self.charts[id.0].substitution, self.exponent_cap)?;
        }
        Ok(acc)
    }

    /// Total transform of a root ideal on `chart`.
    pub fn total_transform(&self, chart: ChartId, ideal: &MonomialIdeal) -> Result<MonomialIdeal> {
        self.check_ideal_arity(ideal)?;
        self.chart(chart)?
            .composite
            .apply_ideal(ideal, self.exponent_cap)
    }

    /// Pullback of an ideal living on `ancestor` to its descendant `chart`.
    pub fn pullback_from(
        &self,
        ancestor: ChartId,
        chart: ChartId,
        ideal: &MonomialIdeal,
    ) -> Result<MonomialIdeal> {
        self.check_ideal_arity(ideal)?;
        self.relative_substitution(ancestor, chart)?
            .apply_ideal(ideal, self.exponent_cap)
    }

    fn check_ideal_arity(&self, ideal: &MonomialIdeal) -> Result<()> {
        if ideal.arity() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: ideal.arity(),
            });
        }
        Ok(())
    }

    /// Graphviz rendering: one node per chart labeled `id:center:branch`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tower {\n");
        for c in &self.charts {
            let center = c.center.as_ref().map_or("-".to_string(), Center::to_string);
            let branch = c.branch.map_or("-".to_string(), |b| (b + 1).to_string());
            let _ = writeln!(
                out,
                "  n{} [label=\"{}:{}:{}\"];",
                c.id, c.id, center, branch
            );
        }
        for c in &self.charts {
            for child in &c.children {
                let _ = writeln!(out, "  n{} -> n{};", c.id, child);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// An ideal sheaf given chart-wise on a set of charts covering the current top
/// of the tower.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IdealSheaf {
    sections: BTreeMap<ChartId, MonomialIdeal>,
}

impl IdealSheaf {
    pub fn new(sections: BTreeMap<ChartId, MonomialIdeal>) -> Self {
        IdealSheaf { sections }
    }

    /// Total transform of a root ideal on every current leaf.
    pub fn from_root(tower: &BlowupTower, ideal: &MonomialIdeal) -> Result<Self> {
        let sections = tower
            .leaves()
            .iter()
            .map(|&l| Ok((l, tower.total_transform(l, ideal)?)))
            .collect::<Result<_>>()?;
        Ok(IdealSheaf { sections })
    }

    pub fn sections(&self) -> &BTreeMap<ChartId, MonomialIdeal> {
        &self.sections
    }

    pub fn get(&self, chart: ChartId) -> Option<&MonomialIdeal> {
        self.sections.get(&chart)
    }

    pub fn insert(&mut self, chart: ChartId, ideal: MonomialIdeal) {
        self.sections.insert(chart, ideal);
    }

    /// The chart of this sheaf's domain lying above `chart`, if any.
    pub fn domain_ancestor(&self, tower: &BlowupTower, chart: ChartId) -> Result<Option<ChartId>> {
        let mut cur = Some(chart);
        while let Some(c) = cur {
            if self.sections.contains_key(&c) {
                return Ok(Some(c));
            }
            cur = tower.chart(c)?.parent;
        }
        Ok(None)
    }

    /// Section of the pulled-back sheaf on a descendant chart.
    pub fn section_on(&self, tower: &BlowupTower, chart: ChartId) -> Result<MonomialIdeal> {
        let anc = self.domain_ancestor(tower, chart)?.ok_or_else(|| {
            Error::Precondition(format!("chart {chart} lies outside the sheaf's domain"))
        })?;
        let ideal = &self.sections[&anc];
        if anc == chart {
            return Ok(ideal.clone());
        }
        tower.pullback_from(anc, chart, ideal)
    }

    /// Pulls the sheaf back to the current leaves of `tower`.
    pub fn pullback_to_leaves(&self, tower: &BlowupTower) -> Result<IdealSheaf> {
        let sections = tower
            .leaves()
            .iter()
            .map(|&l| Ok((l, self.section_on(tower, l)?)))
            .collect::<Result<_>>()?;
        Ok(IdealSheaf { sections })
    }

    pub fn is_locally_principal(&self) -> bool {
        self.sections
            .values()
            .all(MonomialIdeal::is_locally_principal)
    }
}
