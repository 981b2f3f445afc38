//! Group-stable principalization of a monomial ideal sheaf over the chart
//! forest.
//!
//! On each chart the selection rule looks at the residual ideal `R` (the
//! ideal with its monomial gcd removed) and the pair orders
//! `ν_ij = min over generators of R of (a_i + a_j)`. The chart with the
//! largest defect `max ν_ij` is served first (lowest id on ties), and its
//! center is the lexicographically first pair attaining the maximum. When
//! every pair order is zero the center is the support of `R`.
//!
//! Group stability: the chosen center must be fixed by the stabilizer of its
//! chart. When it is not, the union of its stabilizer orbit is blown up
//! instead (a separation step), after which the orbit members no longer
//! meet. The center is then carried to every chart of the orbit, one chart
//! per step, and all of these steps share one orbit tag.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::atlas::{BlowupStep, BlowupTower, Center, CenterOnChart, ChartId, IdealSheaf};
use crate::error::{Error, Result};
use crate::group::{transport_tower, ChartMap, GroupAction};
use crate::monomial::{Monomial, MonomialIdeal};

pub const DEFAULT_MAX_STEPS: usize = 50;

/// Pair orders of one chart's residual ideal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairInvariants {
    /// `((i, j), ν_ij)` for `i < j`, in lexicographic order of the pair.
    pub pairs: Vec<((usize, usize), u64)>,
    pub residual: MonomialIdeal,
}

impl PairInvariants {
    pub fn chart_defect(&self) -> u64 {
        self.pairs.iter().map(|&(_, v)| v).max().unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u64> {
        let key = (i.min(j), i.max(j));
        self.pairs.iter().find(|(p, _)| *p == key).map(|&(_, v)| v)
    }
}

pub fn pair_invariants(ideal: &MonomialIdeal) -> PairInvariants {
    let (_, residual) = ideal.gcd_and_residual();
    let n = ideal.arity();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let nu = residual
                .generators()
                .iter()
                .map(|g| u64::from(g.exponents()[i]) + u64::from(g.exponents()[j]))
                .min()
                .expect("nonempty");
            pairs.push(((i, j), nu));
        }
    }
    PairInvariants { pairs, residual }
}

/// The orbit of centers emitted by one selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitPlan {
    pub representative: ChartId,
    pub global_defect: u64,
    pub separation: bool,
    /// One center per chart, ordered by chart id.
    pub centers: Vec<CenterOnChart>,
}

/// Chooses the next orbit of centers. `sections` must hold the sheaf on every
/// current leaf; `maps[i]` is the lift of `group.elements()[i]`.
pub fn select_step(
    sections: &IdealSheaf,
    group: &GroupAction,
    maps: &[ChartMap],
) -> Result<OrbitPlan> {
    let mut best: Option<(u64, ChartId, PairInvariants)> = None;
    for (&chart, ideal) in sections.sections() {
        if ideal.is_locally_principal() {
            continue;
        }
        let inv = pair_invariants(ideal);
        let d = inv.chart_defect();
        if best.as_ref().is_none_or(|(bd, _, _)| d > *bd) {
            best = Some((d, chart, inv));
        }
    }
    let (global_defect, rep, inv) = best.ok_or(Error::NothingToDo)?;

    let first = if global_defect > 0 {
        let &((i, j), _) = inv
            .pairs
            .iter()
            .find(|&&(_, v)| v == global_defect)
            .expect("maximum is attained");
        Center::new([i, j])
    } else {
        let support: Vec<usize> = inv
            .residual
            .generators()
            .iter()
            .flat_map(Monomial::support)
            .collect();
        Center::new(support)
    };

    let stabilizer: Vec<usize> = (0..group.order())
        .filter(|&g| maps[g].image(rep) == rep)
        .collect();
    let mut union = first.vars().to_vec();
    for &g in &stabilizer {
        union.extend(group.elements()[g].act_on_center(&first).vars());
    }
    let center = Center::new(union);
    let separation = center != first;

    let rep_section = &sections.sections()[&rep];
    let mut per_chart: BTreeMap<ChartId, Center> = BTreeMap::new();
    for (gi, g) in group.elements().iter().enumerate() {
        let image = maps[gi].image(rep);
        let image_center = g.act_on_center(&center);
        match sections.get(image) {
            Some(section) if *section == g.act_on_ideal(rep_section)? => {}
            _ => {
                return Err(Error::NotInvariant {
                    element: gi,
                    index: rep.0,
                })
            }
        }
        if let Some(prev) = per_chart.insert(image, image_center.clone()) {
            if prev != image_center {
                return Err(Error::EquivarianceBroken {
                    step: usize::MAX,
                    reason: format!("orbit of {center} meets chart {image} twice"),
                });
            }
        }
    }
    Ok(OrbitPlan {
        representative: rep,
        global_defect,
        separation,
        centers: per_chart
            .into_iter()
            .map(|(chart, center)| CenterOnChart { chart, center })
            .collect(),
    })
}

/// One selection in the run log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectRecord {
    pub first_step: usize,
    pub orbit_tag: u32,
    pub global_defect: u64,
    pub chart: ChartId,
    /// One-based variable indices.
    pub center: Vec<usize>,
    pub separation: bool,
    pub orbit_size: usize,
}

/// State carried by a tripped termination guard.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardTrace {
    /// The chart whose section ran out of steps.
    pub section: ChartId,
    /// Steps already spent below `section` in this run.
    pub steps_taken: usize,
    pub max_steps: usize,
    pub defect_trace: Vec<DefectRecord>,
    pub open_leaves: Vec<(ChartId, MonomialIdeal)>,
}

/// A component of the divisor of a principal generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorComponent {
    /// One-based chart variable.
    pub var: usize,
    pub multiplicity: u32,
    pub exceptional: bool,
}

/// The generator is a monomial in the chart coordinates, so its divisor is
/// supported on coordinate hyperplanes, each exceptional or the strict
/// transform of a root coordinate hyperplane.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalCrossingCertificate {
    pub chart: ChartId,
    pub generator: Monomial,
    pub components: Vec<DivisorComponent>,
}

pub fn certify_normal_crossing(
    tower: &BlowupTower,
    chart: ChartId,
    generator: &Monomial,
) -> Result<NormalCrossingCertificate> {
    let flags = &tower.chart(chart)?.exceptional;
    Ok(NormalCrossingCertificate {
        chart,
        generator: generator.clone(),
        components: generator
            .support()
            .into_iter()
            .map(|v| DivisorComponent {
                var: v + 1,
                multiplicity: generator.exponents()[v],
                exceptional: flags[v],
            })
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrincipalizationRun {
    /// Steps `first_step..first_step + steps` of the tower belong to this run.
    pub first_step: usize,
    pub steps: usize,
    pub defect_trace: Vec<DefectRecord>,
    pub sections: IdealSheaf,
    pub certificates: Vec<NormalCrossingCertificate>,
}

impl PrincipalizationRun {
    /// Positions in the trace where the global defect went up.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.defect_trace
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].global_defect > w[0].global_defect)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Extends `tower` until the pullback of `sheaf` is locally principal on every
/// leaf, blowing up group orbits of coordinate centers. At most `max_steps`
/// blowups are spent below each chart where the sheaf has a section.
pub fn principalize_sheaf(
    tower: &mut BlowupTower,
    sheaf: &IdealSheaf,
    group: &GroupAction,
    max_steps: usize,
) -> Result<PrincipalizationRun> {
    if group.arity() != tower.arity() {
        return Err(Error::Arity {
            expected: tower.arity(),
            found: group.arity(),
        });
    }
    let first_step = tower.steps().len();
    let mut trace = Vec::new();
    let mut spent: BTreeMap<ChartId, usize> = BTreeMap::new();
    let mut current = sheaf.pullback_to_leaves(tower)?;
    while !current.is_locally_principal() {
        let maps = group.transport_all(tower)?;
        let plan = select_step(&current, group, &maps)?;
        let mut demand = spent.clone();
        for c in &plan.centers {
            let domain = sheaf.domain_ancestor(tower, c.chart)?.unwrap_or(c.chart);
            *demand.entry(domain).or_insert(0) += 1;
        }
        if let Some((&section, _)) = demand.iter().find(|(_, &n)| n > max_steps) {
            return Err(Error::TerminationGuard(Box::new(GuardTrace {
                section,
                steps_taken: spent.get(&section).copied().unwrap_or(0),
                max_steps,
                defect_trace: trace,
                open_leaves: current
                    .sections()
                    .iter()
                    .filter(|(_, i)| !i.is_locally_principal())
                    .map(|(&c, i)| (c, i.clone()))
                    .collect(),
            })));
        }
        spent = demand;
        let tag = tower.next_orbit_tag();
        let rep_center = plan
            .centers
            .iter()
            .find(|c| c.chart == plan.representative)
            .expect("representative is in its orbit")
            .center
            .clone();
        trace.push(DefectRecord {
            first_step: tower.steps().len(),
            orbit_tag: tag,
            global_defect: plan.global_defect,
            chart: plan.representative,
            center: rep_center.vars().iter().map(|v| v + 1).collect(),
            separation: plan.separation,
            orbit_size: plan.centers.len(),
        });
        for c in plan.centers {
            tower.apply_step(BlowupStep::single(c.chart, c.center, Some(tag)))?;
        }
        current = sheaf.pullback_to_leaves(tower)?;
    }
    for g in group.elements() {
        transport_tower(g, tower)?;
    }
    let certificates = current
        .sections()
        .iter()
        .map(|(&c, i)| certify_normal_crossing(tower, c, &i.generators()[0]))
        .collect::<Result<_>>()?;
    Ok(PrincipalizationRun {
        first_step,
        steps: tower.steps().len() - first_step,
        defect_trace: trace,
        sections: current,
        certificates,
    })
}

/// Principalizes the total transform of a root ideal.
pub fn principalize(
    tower: &mut BlowupTower,
    ideal: &MonomialIdeal,
    group: &GroupAction,
    max_steps: usize,
) -> Result<PrincipalizationRun> {
    let sheaf = IdealSheaf::from_root(tower, ideal)?;
    principalize_sheaf(tower, &sheaf, group, max_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;

    fn ideal(rows: &[&[u32]]) -> MonomialIdeal {
        MonomialIdeal::from_exponents(rows).unwrap()
    }

    #[test]
    fn pair_invariant_examples() {
        let inv = pair_invariants(&ideal(&[&[1, 0, 0], &[0, 1, 1]]));
        assert_eq!(inv.get(0, 1), Some(1));
        assert_eq!(inv.get(0, 2), Some(1));
        assert_eq!(inv.get(1, 2), Some(0));
        let p = pair_invariants(&ideal(&[&[2, 1, 3]]));
        assert!(p.pairs.iter().all(|&(_, v)| v == 0));
        assert_eq!(
            pair_invariants(&ideal(&[&[1, 0], &[0, 1]])).get(0, 1),
            Some(1)
        );
    }

    #[test]
    fn residual_unit_forces_zero_orders() {
        // (x, y, z) has all pair orders zero without being principal.
        let inv = pair_invariants(&ideal(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        assert_eq!(inv.chart_defect(), 0);
        assert!(!inv.residual.is_unit());
    }

    fn plan_for(rows: &[&[u32]], group: &GroupAction) -> OrbitPlan {
        let i = ideal(rows);
        let t = BlowupTower::with_arity(i.arity()).unwrap();
        let sheaf = IdealSheaf::from_root(&t, &i).unwrap();
        let maps = group.transport_all(&t).unwrap();
        select_step(&sheaf, group, &maps).unwrap()
    }

    #[test]
    fn select_step_examples() {
        let plan = plan_for(&[&[1, 0], &[0, 1]], &GroupAction::trivial(2));
        assert_eq!(
            plan.centers,
            vec![CenterOnChart {
                chart: ChartId::ROOT,
                center: Center::new([0, 1])
            }]
        );
        assert!(!plan.separation);

        let plan = plan_for(&[&[3, 1], &[2, 2]], &GroupAction::trivial(2));
        assert_eq!(plan.centers[0].center, Center::new([0, 1]));

        // (x, yz) under swap(y, z): pairs {1,2} and {1,3} tie and meet, so
        // the origin is blown up first.
        let g = GroupAction::closure(vec![GroupElement::swap(3, 1, 2)], 3).unwrap();
        let plan = plan_for(&[&[1, 0, 0], &[0, 1, 1]], &g);
        assert!(plan.separation);
        assert_eq!(plan.centers[0].center, Center::new([0, 1, 2]));

        let plan = plan_for(&[&[1, 0, 0], &[0, 1, 1]], &GroupAction::trivial(3));
        assert!(!plan.separation);
        assert_eq!(plan.centers[0].center, Center::new([0, 1]));
    }

    #[test]
    fn select_step_on_principal_input() {
        let t = BlowupTower::with_arity(2).unwrap();
        let sheaf = IdealSheaf::from_root(&t, &ideal(&[&[1, 2]])).unwrap();
        let g = GroupAction::trivial(2);
        assert_eq!(
            select_step(&sheaf, &g, &g.transport_all(&t).unwrap()),
            Err(Error::NothingToDo)
        );
    }

    #[test]
    fn principalize_examples() {
        let trivial = GroupAction::trivial(2);
        let mut t = BlowupTower::with_arity(2).unwrap();
        let run = principalize(&mut t, &ideal(&[&[1, 0], &[0, 1]]), &trivial, 50).unwrap();
        assert_eq!(run.steps, 1);
        assert_eq!(t.leaves().len(), 2);
        assert_eq!(run.sections.get(ChartId(1)).unwrap(), &ideal(&[&[1, 0]]));
        assert_eq!(run.sections.get(ChartId(2)).unwrap(), &ideal(&[&[0, 1]]));

        let mut t = BlowupTower::with_arity(2).unwrap();
        let run = principalize(&mut t, &ideal(&[&[2, 0], &[1, 1], &[0, 2]]), &trivial, 50).unwrap();
        assert_eq!(run.steps, 1);
        assert_eq!(run.sections.get(ChartId(1)).unwrap(), &ideal(&[&[2, 0]]));

        let mut t = BlowupTower::with_arity(2).unwrap();
        let run = principalize(&mut t, &ideal(&[&[1, 1]]), &trivial, 50).unwrap();
        assert_eq!(run.steps, 0);
        assert_eq!(t.leaves().len(), 1);
    }

    #[test]
    fn separation_then_codimension_two() {
        let g = GroupAction::closure(vec![GroupElement::swap(3, 1, 2)], 3).unwrap();
        let mut t = BlowupTower::with_arity(3).unwrap();
        let run = principalize(&mut t, &ideal(&[&[1, 0, 0], &[0, 1, 1]]), &g, 50).unwrap();
        assert!(run.defect_trace[0].separation);
        assert!(run.defect_trace[1..].iter().all(|r| !r.separation));
        assert_eq!(run.defect_trace[1].orbit_size, 2);
        for e in g.elements() {
            transport_tower(e, &t).unwrap();
        }
        assert!(run.sections.is_locally_principal());
    }

    #[test]
    fn guard_trips_with_a_trace() {
        let mut t = BlowupTower::with_arity(2).unwrap();
        let err = principalize(
            &mut t,
            &ideal(&[&[5, 0], &[0, 3]]),
            &GroupAction::trivial(2),
            1,
        )
        .unwrap_err();
        match err {
            Error::TerminationGuard(trace) => {
                assert_eq!(trace.steps_taken, 1);
                assert_eq!(trace.defect_trace.len(), 1);
                assert!(!trace.open_leaves.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn certificates_flag_exceptional_components() {
        let mut t = BlowupTower::with_arity(2).unwrap();
        let run = principalize(
            &mut t,
            &ideal(&[&[1, 0], &[0, 1]]),
            &GroupAction::trivial(2),
            50,
        )
        .unwrap();
        let cert = &run.certificates[0];
        assert_eq!(cert.chart, ChartId(1));
        assert_eq!(
            cert.components,
            vec![DivisorComponent {
                var: 1,
                multiplicity: 1,
                exceptional: true
            }]
        );
    }
}
