//! Resolution of indeterminacy for monomial rational maps `[f_0 : … : f_m]`
//! from affine space to projective space.
//!
//! The map is regular on a chart exactly when, after dividing the pulled-back
//! coordinates by their gcd, one of them becomes `1`. For monomial maps this
//! is the same as the pulled-back base ideal being principal, so the map is
//! resolved by principalizing the base ideal with group-stable centers.

use crate::atlas::{BlowupTower, ChartId};
use crate::error::{Error, Result};
use crate::group::{transport_tower, ChartMap, GroupAction};
use crate::monomial::{Monomial, MonomialIdeal};
use crate::principalize::{principalize, DefectRecord};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMapSpec {
    coordinates: Vec<Monomial>,
    group: GroupAction,
}

impl RationalMapSpec {
    /// Checks that the group permutes the coordinates and records how.
    pub fn new(coordinates: Vec<Monomial>, group: GroupAction) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::ZeroIdeal);
        }
        let perms = group.check_coordinates_invariant(&coordinates)?;
        Ok(RationalMapSpec {
            coordinates,
            group: group.with_coord_perms(perms),
        })
    }

    pub fn arity(&self) -> usize {
        self.group.arity()
    }

    pub fn coordinates(&self) -> &[Monomial] {
        &self.coordinates
    }

    pub fn group(&self) -> &GroupAction {
        &self.group
    }

    pub fn base_ideal(&self) -> MonomialIdeal {
        MonomialIdeal::minimalize(self.coordinates.iter().cloned())
            .expect("coordinates are nonempty")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafMap {
    pub chart: ChartId,
    pub pullback: Vec<Monomial>,
    pub common_factor: Monomial,
    pub reduced: Vec<Monomial>,
    pub regular: bool,
}

impl LeafMap {
    pub fn compute(tower: &BlowupTower, chart: ChartId, coordinates: &[Monomial]) -> Result<Self> {
        let composite = &tower.chart(chart)?.composite;
        let pullback = coordinates
            .iter()
            .map(|f| composite.apply(f, tower.exponent_cap()))
            .collect::<Result<Vec<_>>>()?;
        let mut common_factor = pullback[0].clone();
        for m in &pullback[1..] {
            common_factor = common_factor.gcd(m)?;
        }
        let reduced: Vec<Monomial> = pullback
            .iter()
            .map(|m| m.checked_div(&common_factor).expect("gcd divides"))
            .collect();
        let regular = reduced.iter().any(Monomial::is_one);
        Ok(LeafMap {
            chart,
            pullback,
            common_factor,
            reduced,
            regular,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedMap {
    pub tower: BlowupTower,
    pub leaves: Vec<LeafMap>,
    pub defect_trace: Vec<DefectRecord>,
    pub chart_maps: Vec<ChartMap>,
}

impl ResolvedMap {
    pub fn leaf(&self, chart: ChartId) -> Option<&LeafMap> {
        self.leaves.iter().find(|l| l.chart == chart)
    }

    pub fn blowups(&self) -> usize {
        self.tower.steps().iter().map(|s| s.centers.len()).sum()
    }
}

pub fn resolve(map: &RationalMapSpec, tower: BlowupTower, max_steps: usize) -> Result<ResolvedMap> {
    let mut tower = tower;
    if tower.arity() != map.arity() {
        return Err(Error::Arity {
            expected: map.arity(),
            found: tower.arity(),
        });
    }
    let run = principalize(&mut tower, &map.base_ideal(), map.group(), max_steps)?;
    let leaves = tower
        .leaves()
        .iter()
        .map(|&l| LeafMap::compute(&tower, l, map.coordinates()))
        .collect::<Result<_>>()?;
    let chart_maps = map.group().transport_all(&tower)?;
    Ok(ResolvedMap {
        tower,
        leaves,
        defect_trace: run.defect_trace,
        chart_maps,
    })
}

/// Outcome of an audit: `witnesses` is empty exactly when everything holds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Audit {
    pub witnesses: Vec<String>,
}

impl Audit {
    pub fn ok(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub(crate) fn fail(&mut self, what: impl Into<String>) {
        self.witnesses.push(what.into());
    }
}

/// Rechecks a resolution from the tower alone: recorded pullbacks, gcds,
/// regularity and the group action on leaf maps.
pub fn verify_resolution(map: &RationalMapSpec, resolved: &ResolvedMap) -> Audit {
    let mut audit = Audit::default();
    let tower = &resolved.tower;
    let leaf_ids: Vec<ChartId> = resolved.leaves.iter().map(|l| l.chart).collect();
    if leaf_ids != tower.leaves().iter().copied().collect::<Vec<_>>() {
        audit.fail("recorded leaves differ from the tower's leaves");
        return audit;
    }
    for leaf in &resolved.leaves {
        let at = format!("chart {}", leaf.chart);
        let fresh = match LeafMap::compute(tower, leaf.chart, map.coordinates()) {
            Ok(f) => f,
            Err(e) => {
                audit.fail(format!("{at}: {e}"));
                continue;
            }
        };
        if leaf.pullback != fresh.pullback {
            audit.fail(format!("{at}: pulled-back coordinates differ"));
        }
        if leaf.pullback.len() != leaf.reduced.len() {
            audit.fail(format!("{at}: wrong number of reduced coordinates"));
            continue;
        }
        for (k, (p, r)) in leaf.pullback.iter().zip(&leaf.reduced).enumerate() {
            match r.mul(&leaf.common_factor, tower.exponent_cap()) {
                Ok(prod) if prod == *p => {}
                _ => audit.fail(format!(
                    "{at}: coordinate {k} is not common factor times reduced"
                )),
            }
        }
        let reduced_gcd = leaf.reduced[1..]
            .iter()
            .try_fold(leaf.reduced[0].clone(), |acc, m| acc.gcd(m));
        if !reduced_gcd.is_ok_and(|g| g.is_one()) {
            audit.fail(format!("{at}: reduced coordinates share a factor"));
        }
        let has_unit = leaf.reduced.iter().any(Monomial::is_one);
        if leaf.regular != has_unit {
            audit.fail(format!(
                "{at}: regular flag disagrees with the reduced coordinates"
            ));
        }
        if !leaf.regular {
            audit.fail(format!("{at}: map is not regular"));
        }
        let principal = tower
            .total_transform(leaf.chart, &map.base_ideal())
            .map(|i| i.is_locally_principal())
            .unwrap_or(false);
        if principal != has_unit {
            audit.fail(format!(
                "{at}: regularity and principality of the base ideal disagree"
            ));
        }
    }
    for g in map.group().elements() {
        let phi = match transport_tower(g, tower) {
            Ok(phi) => phi,
            Err(e) => {
                audit.fail(format!("element {:?}: {e}", g.var_perm));
                continue;
            }
        };
        let sigma = g
            .coord_perm
            .as_ref()
            .expect("coordinate permutations are recorded");
        for leaf in &resolved.leaves {
            let Some(image) = resolved.leaf(phi.image(leaf.chart)) else {
                audit.fail(format!("chart {}: image chart is not a leaf", leaf.chart));
                continue;
            };
            for (k, r) in leaf.reduced.iter().enumerate() {
                if image.reduced.get(sigma[k]) != Some(&r.permuted(&g.var_perm)) {
                    audit.fail(format!(
                        "chart {}: reduced coordinate {k} is not carried to chart {} by {:?}",
                        leaf.chart, image.chart, g.var_perm
                    ));
                }
            }
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::Center;
    use crate::group::GroupElement;
    use crate::principalize::DEFAULT_MAX_STEPS;

    fn m(e: &[u32]) -> Monomial {
        Monomial::new(e.to_vec())
    }

    fn swap2() -> GroupAction {
        GroupAction::closure(vec![GroupElement::swap(2, 0, 1)], 2).unwrap()
    }

    fn run(coords: Vec<Monomial>, group: GroupAction) -> (RationalMapSpec, ResolvedMap) {
        let spec = RationalMapSpec::new(coords, group).unwrap();
        let t = BlowupTower::with_arity(spec.arity()).unwrap();
        let r = resolve(&spec, t, DEFAULT_MAX_STEPS).unwrap();
        (spec, r)
    }

    #[test]
    fn base_ideal_examples() {
        let t = GroupAction::trivial(2);
        let lin = RationalMapSpec::new(vec![m(&[1, 0]), m(&[0, 1])], t.clone()).unwrap();
        assert_eq!(lin.base_ideal().generators().len(), 2);
        let quad = RationalMapSpec::new(vec![m(&[2, 0]), m(&[1, 1]), m(&[0, 2])], t).unwrap();
        assert_eq!(quad.base_ideal().generators().len(), 3);
        let unit = RationalMapSpec::new(vec![m(&[0]), m(&[1])], GroupAction::trivial(1)).unwrap();
        assert!(unit.base_ideal().is_unit());
    }

    #[test]
    fn non_equivariant_maps_are_rejected() {
        assert!(matches!(
            RationalMapSpec::new(vec![m(&[1, 0]), m(&[1, 1])], swap2()),
            Err(Error::NotInvariant { .. })
        ));
        assert!(RationalMapSpec::new(vec![], swap2()).is_err());
    }

    #[test]
    fn projection_from_the_origin() {
        let (spec, r) = run(vec![m(&[1, 0]), m(&[0, 1])], swap2());
        assert_eq!(r.blowups(), 1);
        let a = r.leaf(ChartId(1)).unwrap();
        assert_eq!(a.pullback, vec![m(&[1, 0]), m(&[1, 1])]);
        assert_eq!(a.common_factor, m(&[1, 0]));
        assert_eq!(a.reduced, vec![m(&[0, 0]), m(&[0, 1])]);
        let b = r.leaf(ChartId(2)).unwrap();
        assert_eq!(b.reduced, vec![m(&[1, 0]), m(&[0, 0])]);
        assert!(verify_resolution(&spec, &r).ok());
    }

    #[test]
    fn conic_map() {
        let (spec, r) = run(vec![m(&[2, 0]), m(&[1, 1]), m(&[0, 2])], swap2());
        assert_eq!(r.blowups(), 1);
        let a = r.leaf(ChartId(1)).unwrap();
        assert_eq!(a.pullback, vec![m(&[2, 0]), m(&[2, 1]), m(&[2, 2])]);
        assert_eq!(a.common_factor, m(&[2, 0]));
        assert_eq!(a.reduced, vec![m(&[0, 0]), m(&[0, 1]), m(&[0, 2])]);
        assert!(verify_resolution(&spec, &r).ok());
    }

    #[test]
    fn regular_map_needs_nothing() {
        let (spec, r) = run(vec![m(&[0]), m(&[1])], GroupAction::trivial(1));
        assert_eq!(r.blowups(), 0);
        assert!(r.leaves[0].regular);
        assert!(verify_resolution(&spec, &r).ok());
    }

    #[test]
    fn audit_catches_tampering() {
        let (spec, mut r) = run(vec![m(&[1, 0]), m(&[0, 1])], swap2());
        r.leaves[0].common_factor = m(&[0, 0]);
        let audit = verify_resolution(&spec, &r);
        assert!(!audit.ok());
        assert!(audit.witnesses[0].starts_with("chart 1"));
    }

    #[test]
    fn further_blowups_keep_the_map_regular() {
        let (spec, r) = run(vec![m(&[1, 0]), m(&[0, 1])], GroupAction::trivial(2));
        let mut t = r.tower.clone();
        t.blow_up(ChartId(1), Center::new([0, 1])).unwrap();
        for &l in t.leaves() {
            assert!(LeafMap::compute(&t, l, spec.coordinates()).unwrap().regular);
        }
    }
}
