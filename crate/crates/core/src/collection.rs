//! Simplification of an unordered, group-invariant collection of monomial
//! ideals by descending induction on the depth of intersections.
//!
//! At depth `i` every sum of `i` members is the unit ideal on every leaf. The
//! stage ideal `J` is the intersection of all sums of `i - 1` members; it is
//! principalized equivariantly and every member is replaced by its conductor
//! `(π*I_j) : (π*J)`. After the stage every sum of `i - 1` members is the unit
//! ideal. The last stage (`i = 2`) has pairwise coprime members, so making
//! their intersection principal makes each of them principal.

use std::collections::BTreeMap;

use crate::atlas::{BlowupTower, ChartId, IdealSheaf};
use crate::error::{Error, Result};
use crate::group::{ChartMap, GroupAction};
use crate::monomial::MonomialIdeal;
use crate::principalize::{
    certify_normal_crossing, principalize_sheaf, DefectRecord, NormalCrossingCertificate,
    DEFAULT_MAX_STEPS,
};

/// Members of the collection, chart by chart.
pub type LeafCollections = BTreeMap<ChartId, Vec<MonomialIdeal>>;

/// A leaf and a subset of members whose sum is a proper ideal there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthWitness {
    pub chart: ChartId,
    pub subset: Vec<usize>,
}

/// Every `size`-element subset of `0..n`, in lexicographic order.
pub fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for k in start..n {
            cur.push(k);
            go(k + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        go(0, n, size, &mut Vec::new(), &mut out);
    }
    out
}

fn subset_sum(members: &[MonomialIdeal], subset: &[usize]) -> Result<MonomialIdeal> {
    let mut acc = members[subset[0]].clone();
    for &k in &subset[1..] {
        acc = acc.sum(&members[k])?;
    }
    Ok(acc)
}

/// Tests that every sum of `depth` members is the unit ideal on every leaf.
pub fn check_depth_condition(
    leaves: &LeafCollections,
    depth: usize,
) -> Result<(bool, Vec<DepthWitness>)> {
    let mut witnesses = Vec::new();
    for (&chart, members) in leaves {
        for subset in subsets(members.len(), depth) {
            if !subset_sum(members, &subset)?.is_unit() {
                witnesses.push(DepthWitness { chart, subset });
            }
        }
    }
    Ok((witnesses.is_empty(), witnesses))
}

/// `J = ⋂_{|Ω| = depth-1} Σ_{j∈Ω} I_j`, leaf by leaf.
pub fn stage_ideal(leaves: &LeafCollections, depth: usize, arity: usize) -> Result<IdealSheaf> {
    let mut sheaf = IdealSheaf::default();
    for (&chart, members) in leaves {
        let mut acc = MonomialIdeal::unit(arity);
        for omega in subsets(members.len(), depth - 1) {
            acc = acc.intersect(&subset_sum(members, &omega)?)?;
        }
        sheaf.insert(chart, acc);
    }
    Ok(sheaf)
}

fn entry_ancestor(tower: &BlowupTower, entry: &LeafCollections, chart: ChartId) -> Result<ChartId> {
    let mut cur = chart;
    loop {
        if entry.contains_key(&cur) {
            return Ok(cur);
        }
        cur = tower.chart(cur)?.parent.ok_or_else(|| {
            Error::Precondition(format!("chart {chart} lies outside the stage's domain"))
        })?;
    }
}

/// Conductors `(π*I_j) : (π*J)` on every current leaf. `entry` and `stage`
/// live on the leaves the stage started from.
pub fn weak_transforms(
    tower: &BlowupTower,
    entry: &LeafCollections,
    stage: &IdealSheaf,
) -> Result<LeafCollections> {
    let mut out = LeafCollections::new();
    for &leaf in tower.leaves() {
        let anc = entry_ancestor(tower, entry, leaf)?;
        let j = tower.pullback_from(
            anc,
            leaf,
            stage.get(anc).expect("stage ideal on entry leaf"),
        )?;
        if !j.is_locally_principal() {
            return Err(Error::Precondition(format!(
                "stage ideal pulls back to the non-principal {j} on chart {leaf}"
            )));
        }
        let members = entry[&anc]
            .iter()
            .map(|i| tower.pullback_from(anc, leaf, i)?.colon(&j))
            .collect::<Result<_>>()?;
        out.insert(leaf, members);
    }
    Ok(out)
}

/// On every current leaf: the pullback of each weak transform is principal
/// exactly when the pullback of the member it came from is.
/// Returns the first `(leaf, member)` where the two disagree.
pub fn verify_stalk_formula(
    tower: &BlowupTower,
    before: &LeafCollections,
    after: &LeafCollections,
) -> Result<Option<(ChartId, usize)>> {
    for &leaf in tower.leaves() {
        let b = entry_ancestor(tower, before, leaf)?;
        let a = entry_ancestor(tower, after, leaf)?;
        for (k, (orig, weak)) in before[&b].iter().zip(&after[&a]).enumerate() {
            let p_orig = tower.pullback_from(b, leaf, orig)?.is_locally_principal();
            let p_weak = tower.pullback_from(a, leaf, weak)?.is_locally_principal();
            if p_orig != p_weak {
                return Ok(Some((leaf, k)));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub depth: usize,
    pub entry: LeafCollections,
    pub entry_witnesses: Vec<DepthWitness>,
    pub stage_ideal: IdealSheaf,
    pub first_step: usize,
    pub steps: usize,
    pub defect_trace: Vec<DefectRecord>,
    pub weak: LeafCollections,
    /// Depth condition at `depth - 1` after the stage.
    pub next_condition_holds: bool,
    /// Filled in once the whole tower is built.
    pub stalk_formula_holds: bool,
    /// Only meaningful at depth 2: every member became principal.
    pub base_case_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplifyOptions {
    pub max_steps: usize,
    pub variable_names: Option<Vec<String>>,
}

impl Default for SimplifyOptions {
    fn default() -> Self {
        SimplifyOptions {
            max_steps: DEFAULT_MAX_STEPS,
            variable_names: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollectionOutcome {
    pub tower: BlowupTower,
    pub stages: Vec<StageRecord>,
    /// `ideal_perms[g][k]`: the member that element `g` sends member `k` to.
    pub ideal_perms: Vec<Vec<usize>>,
    pub chart_maps: Vec<ChartMap>,
    /// Total transforms of the original members on every final leaf.
    pub pullbacks: LeafCollections,
    pub certificates: BTreeMap<ChartId, Vec<NormalCrossingCertificate>>,
}

impl CollectionOutcome {
    pub fn blowups(&self) -> usize {
        self.tower.steps().iter().map(|s| s.centers.len()).sum()
    }
}

pub fn simplify_collection(
    collection: &[MonomialIdeal],
    group: &GroupAction,
    options: &SimplifyOptions,
) -> Result<CollectionOutcome> {
    let arity = group.arity();
    let ideal_perms = group.check_collection_invariant(collection)?;
    let mut tower = match &options.variable_names {
        Some(names) => BlowupTower::new_root(arity, names.clone())?,
        None => BlowupTower::with_arity(arity)?,
    };
    let n = collection.len();
    let mut current = LeafCollections::from([(ChartId::ROOT, collection.to_vec())]);
    let mut stages = Vec::new();

    for depth in (2..=n + 1).rev() {
        let (_, entry_witnesses) = check_depth_condition(&current, depth)?;
        if let Some(w) = entry_witnesses.first() {
            return Err(Error::StageInvariant {
                depth,
                chart: w.chart,
                subset: w.subset.clone(),
            });
        }
        let j = stage_ideal(&current, depth, arity)?;
        let run = principalize_sheaf(&mut tower, &j, group, options.max_steps)?;
        let weak = weak_transforms(&tower, &current, &j)?;
        let (next_ok, next_witnesses) = check_depth_condition(&weak, depth - 1)?;
        if let Some(w) = next_witnesses.first() {
            return Err(Error::StageInvariant {
                depth: depth - 1,
                chart: w.chart,
                subset: w.subset.clone(),
            });
        }
        let base_case_holds = if depth == 2 {
            let mut all = true;
            for &leaf in tower.leaves() {
                let anc = entry_ancestor(&tower, &current, leaf)?;
                for i in &current[&anc] {
                    all &= tower.pullback_from(anc, leaf, i)?.is_locally_principal();
                }
            }
            Some(all)
        } else {
            None
        };
        stages.push(StageRecord {
            depth,
            entry: std::mem::take(&mut current),
            entry_witnesses,
            stage_ideal: j,
            first_step: run.first_step,
            steps: run.steps,
            defect_trace: run.defect_trace,
            weak: weak.clone(),
            next_condition_holds: next_ok,
            stalk_formula_holds: false,
            base_case_holds,
        });
        current = weak;
    }

    for stage in &mut stages {
        stage.stalk_formula_holds =
            verify_stalk_formula(&tower, &stage.entry, &stage.weak)?.is_none();
    }

    let mut pullbacks = LeafCollections::new();
    let mut certificates = BTreeMap::new();
    for &leaf in tower.leaves() {
        let members = collection
            .iter()
            .map(|i| tower.total_transform(leaf, i))
            .collect::<Result<Vec<_>>>()?;
        let mut certs = Vec::with_capacity(members.len());
        for (k, m) in members.iter().enumerate() {
            let g = m.principal_generator().ok_or_else(|| {
                Error::Precondition(format!("member {} is not principal on chart {leaf}", k + 1))
            })?;
            certs.push(certify_normal_crossing(&tower, leaf, g)?);
        }
        certificates.insert(leaf, certs);
        pullbacks.insert(leaf, members);
    }

    let chart_maps = group.transport_all(&tower)?;
    check_provenance(group, &ideal_perms, &chart_maps, &stages)?;

    Ok(CollectionOutcome {
        tower,
        stages,
        ideal_perms,
        chart_maps,
        pullbacks,
        certificates,
    })
}

/// `I'_{σ_g(j)}` on `φ_g(leaf)` equals `g·I'_j` on `leaf`, for every stage.
pub fn check_provenance(
    group: &GroupAction,
    ideal_perms: &[Vec<usize>],
    chart_maps: &[ChartMap],
    stages: &[StageRecord],
) -> Result<()> {
    for stage in stages {
        for (gi, g) in group.elements().iter().enumerate() {
            for (&leaf, members) in &stage.weak {
                let image = stage.weak.get(&chart_maps[gi].image(leaf)).ok_or_else(|| {
                    Error::EquivarianceBroken {
                        step: stage.first_step,
                        reason: format!("chart {leaf} has no image among the stage's leaves"),
                    }
                })?;
                for (k, m) in members.iter().enumerate() {
                    if image[ideal_perms[gi][k]] != g.act_on_ideal(m)? {
                        return Err(Error::EquivarianceBroken {
                            step: stage.first_step,
                            reason: format!(
                                "weak transform {} on chart {leaf} is not carried to its image",
                                k + 1
                            ),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;

    fn ideal(rows: &[&[u32]]) -> MonomialIdeal {
        MonomialIdeal::from_exponents(rows).unwrap()
    }

    fn at_root(members: Vec<MonomialIdeal>) -> LeafCollections {
        LeafCollections::from([(ChartId::ROOT, members)])
    }

    fn xyz() -> Vec<MonomialIdeal> {
        vec![
            ideal(&[&[1, 0, 0]]),
            ideal(&[&[0, 1, 0]]),
            ideal(&[&[0, 0, 1]]),
        ]
    }

    fn worked_pair() -> Vec<MonomialIdeal> {
        vec![ideal(&[&[1, 0], &[0, 2]]), ideal(&[&[2, 0], &[0, 1]])]
    }

    #[test]
    fn subsets_enumerate_lexicographically() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert!(subsets(2, 3).is_empty());
    }

    #[test]
    fn depth_condition_examples() {
        let (ok, w) = check_depth_condition(&at_root(xyz()), 3).unwrap();
        assert!(!ok);
        assert_eq!(
            w,
            vec![DepthWitness {
                chart: ChartId::ROOT,
                subset: vec![0, 1, 2]
            }]
        );
        let (ok, _) = check_depth_condition(
            &at_root(vec![MonomialIdeal::unit(2), ideal(&[&[1, 0], &[0, 1]])]),
            2,
        )
        .unwrap();
        assert!(ok);
        let (ok, w) = check_depth_condition(&at_root(worked_pair()), 3).unwrap();
        assert!(ok && w.is_empty());
    }

    #[test]
    fn stage_ideal_examples() {
        let j = stage_ideal(&at_root(xyz()), 3, 3).unwrap();
        assert_eq!(
            j.get(ChartId::ROOT).unwrap(),
            &ideal(&[&[1, 1, 0], &[1, 0, 1], &[0, 1, 1]])
        );
        let j = stage_ideal(&at_root(worked_pair()), 3, 2).unwrap();
        assert_eq!(j.get(ChartId::ROOT).unwrap(), &ideal(&[&[1, 0], &[0, 1]]));
        let units = vec![MonomialIdeal::unit(2), MonomialIdeal::unit(2)];
        assert!(stage_ideal(&at_root(units), 2, 2)
            .unwrap()
            .get(ChartId::ROOT)
            .unwrap()
            .is_unit());
    }

    #[test]
    fn weak_transform_examples() {
        let mut t = BlowupTower::with_arity(2).unwrap();
        let entry = at_root(worked_pair());
        let j = stage_ideal(&entry, 3, 2).unwrap();
        t.blow_up(ChartId::ROOT, crate::atlas::Center::new([0, 1]))
            .unwrap();
        let weak = weak_transforms(&t, &entry, &j).unwrap();
        // chart 1 (y ← xy): I'_1 = (1), I'_2 = (x, y)
        assert!(weak[&ChartId(1)][0].is_unit());
        assert_eq!(weak[&ChartId(1)][1], ideal(&[&[1, 0], &[0, 1]]));
        // chart 2 (x ← xy): I'_1 = (x, y), I'_2 = (1)
        assert_eq!(weak[&ChartId(2)][0], ideal(&[&[1, 0], &[0, 1]]));
        assert!(weak[&ChartId(2)][1].is_unit());
    }

    #[test]
    fn weak_transform_requires_principal_stage_ideal() {
        let t = BlowupTower::with_arity(2).unwrap();
        let entry = at_root(worked_pair());
        let j = stage_ideal(&entry, 3, 2).unwrap();
        assert!(matches!(
            weak_transforms(&t, &entry, &j),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn coprime_member_keeps_its_pullback() {
        let t = BlowupTower::with_arity(2).unwrap();
        let entry = at_root(vec![ideal(&[&[0, 3]])]);
        let mut j = IdealSheaf::default();
        j.insert(ChartId::ROOT, ideal(&[&[2, 0]]));
        let weak = weak_transforms(&t, &entry, &j).unwrap();
        assert_eq!(weak[&ChartId::ROOT][0], ideal(&[&[0, 3]]));
    }

    #[test]
    fn worked_pair_with_swap() {
        let swap = GroupElement::swap(2, 0, 1).with_ideal_perm(vec![1, 0]);
        let g = GroupAction::closure(vec![swap], 2).unwrap();
        let out = simplify_collection(&worked_pair(), &g, &SimplifyOptions::default()).unwrap();
        assert_eq!(out.blowups(), 3);
        assert_eq!(out.tower.leaves().len(), 4);
        assert_eq!(out.stages.len(), 2);
        assert_eq!(out.stages[0].steps, 1);
        assert_eq!(out.stages[1].steps, 2);
        // first branch: root x, root y ↦ x·y then the origin again
        assert_eq!(out.pullbacks[&ChartId(3)][1], ideal(&[&[2, 0]]));
        assert_eq!(out.pullbacks[&ChartId(4)][1], ideal(&[&[1, 2]]));
        assert!(out
            .stages
            .iter()
            .all(|s| s.next_condition_holds && s.stalk_formula_holds));
        assert_eq!(out.stages[1].base_case_holds, Some(true));
    }

    #[test]
    fn coordinate_axes_are_separated_by_one_blowup() {
        let out = simplify_collection(
            &[ideal(&[&[1, 0]]), ideal(&[&[0, 1]])],
            &GroupAction::trivial(2),
            &SimplifyOptions::default(),
        )
        .unwrap();
        assert_eq!(out.blowups(), 1);
        for leaf in [ChartId(1), ChartId(2)] {
            assert!(out.stages[0].weak[&leaf].iter().any(MonomialIdeal::is_unit));
        }
    }

    #[test]
    fn unit_collection_gives_the_empty_tower() {
        let units = vec![MonomialIdeal::unit(3); 3];
        let out = simplify_collection(
            &units,
            &GroupAction::trivial(3),
            &SimplifyOptions::default(),
        )
        .unwrap();
        assert_eq!(out.tower.charts().len(), 1);
    }

    #[test]
    fn non_invariant_collection_is_rejected() {
        let g = GroupAction::closure(vec![GroupElement::swap(2, 0, 1)], 2).unwrap();
        assert!(matches!(
            simplify_collection(&[ideal(&[&[1, 0]])], &g, &SimplifyOptions::default()),
            Err(Error::NotInvariant { .. })
        ));
    }
}
