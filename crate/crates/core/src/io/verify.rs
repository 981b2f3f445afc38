//! Independent audit of a report against its problem. Nothing cached in the
//! report is trusted: the tower is replayed from its recorded steps and every
//! pullback, stage ideal, weak transform and chart map is derived again.

use crate::atlas::{BlowupStep, BlowupTower, Center, CenterOnChart, ChartId};
use crate::collection::{
    check_depth_condition, stage_ideal, verify_stalk_formula, weak_transforms, LeafCollections,
};
use crate::error::{Error, Result};
use crate::group::{transport_tower, ChartMap, GroupAction};
use crate::io::problem::{parse_problem, Mode, ProblemFile};
use crate::io::report::{members_report, tower_report, ChartReport, RunReport, StepReport};
use crate::map::{verify_resolution, Audit, LeafMap, RationalMapSpec, ResolvedMap};
use crate::monomial::MonomialIdeal;
use crate::principalize::certify_normal_crossing;

/// Parses both files and audits the report. A report for different input
/// is an error, not a failed audit.
pub fn verify(report: &[u8], problem: &[u8]) -> Result<Audit> {
    let problem =
        parse_problem(problem).map_err(|e| Error::Precondition(format!("problem: {e}")))?;
    let report =
        RunReport::from_json(report).map_err(|e| Error::Precondition(format!("report: {e}")))?;
    verify_report(&report, &problem)
}

pub fn verify_report(report: &RunReport, problem: &ProblemFile) -> Result<Audit> {
    let mut problem = problem.clone();
    problem.mode.get_or_insert(report.mode);
    let hash = problem.input_hash();
    if hash != report.input_hash {
        return Err(Error::StaleReport {
            expected: hash,
            found: report.input_hash.clone(),
        });
    }
    let mut audit = Audit::default();
    if problem.mode != Some(report.mode) {
        audit.fail("mode: differs from the problem");
    }
    if report.variables != problem.variables {
        audit.fail("variables: differ from the problem");
    }

    let tower = match report.replay() {
        Ok(t) => t,
        Err(e) => {
            audit.fail(format!("tower.steps: {e}"));
            return Ok(audit);
        }
    };
    compare_charts(&tower, &report.tower.charts, &mut audit);
    let summary_ok = report.summary.steps == tower.steps().len()
        && report.summary.blowups == tower.steps().iter().map(|s| s.centers.len()).sum::<usize>()
        && report.summary.charts == tower.charts().len()
        && report.summary.leaves == tower.leaves().len();
    if !summary_ok {
        audit.fail("summary: counts differ from the replayed tower");
    }
    let reported: Vec<ChartId> = report.leaves.iter().map(|l| l.chart).collect();
    if reported != tower.leaves().iter().copied().collect::<Vec<_>>() {
        audit.fail("leaves: charts differ from the replayed tower's leaves");
        return Ok(audit);
    }

    match report.mode {
        Mode::Simplify => audit_simplify(report, &problem, &tower, &mut audit)?,
        Mode::ResolveMap => audit_map(report, &problem, &tower, &mut audit)?,
    }
    Ok(audit)
}

fn replay_steps(
    tower: &mut BlowupTower,
    steps: &[StepReport],
    offset: usize,
    audit: &mut Audit,
) -> bool {
    for (k, s) in steps.iter().enumerate() {
        let mut centers = Vec::with_capacity(s.centers.len());
        for c in &s.centers {
            if c.center.contains(&0) {
                audit.fail(format!("tower.steps[{}]: center index 0", offset + k));
                return false;
            }
            centers.push(CenterOnChart {
                chart: c.chart,
                center: Center::new(c.center.iter().map(|v| v - 1)),
            });
        }
        let step = BlowupStep {
            centers,
            orbit_tag: s.orbit_tag,
        };
        if let Err(e) = tower.apply_step(step) {
            audit.fail(format!("tower.steps[{}]: {e}", offset + k));
            return false;
        }
    }
    true
}

fn compare_charts(tower: &BlowupTower, charts: &[ChartReport], audit: &mut Audit) {
    let fresh = tower_report(tower).charts;
    if fresh.len() != charts.len() {
        audit.fail(format!(
            "tower.charts: {} recorded, {} replayed",
            charts.len(),
            fresh.len()
        ));
    }
    for (i, (want, got)) in fresh.iter().zip(charts).enumerate() {
        let fields = [
            ("id", want.id == got.id),
            ("parent", want.parent == got.parent),
            ("center", want.center == got.center),
            ("branch", want.branch == got.branch),
            ("substitution", want.substitution == got.substitution),
            ("composite", want.composite == got.composite),
            ("exceptional", want.exceptional == got.exceptional),
        ];
        for (name, ok) in fields {
            if !ok {
                audit.fail(format!(
                    "tower.charts[{i}].{name}: differs from the replayed chart"
                ));
            }
        }
    }
}

fn check_leaf_pullbacks(
    report: &RunReport,
    tower: &BlowupTower,
    ideals: &[MonomialIdeal],
    audit: &mut Audit,
) -> Result<LeafCollections> {
    let mut all = LeafCollections::new();
    for (i, leaf) in report.leaves.iter().enumerate() {
        let pullbacks = ideals
            .iter()
            .map(|m| tower.total_transform(leaf.chart, m))
            .collect::<Result<Vec<_>>>()?;
        if leaf.pullbacks != pullbacks {
            audit.fail(format!(
                "leaves[{i}].pullbacks: differ from the recomputed pullbacks"
            ));
        }
        let mut gens = Vec::new();
        let mut certs = Vec::new();
        for (k, p) in pullbacks.iter().enumerate() {
            match p.principal_generator() {
                Some(g) => {
                    gens.push(g.clone());
                    certs.push(certify_normal_crossing(tower, leaf.chart, g)?);
                }
                None => audit.fail(format!(
                    "leaves[{i}].pullbacks[{k}]: not principal on chart {}",
                    leaf.chart
                )),
            }
        }
        if leaf.principal_generators != gens {
            audit.fail(format!(
                "leaves[{i}].principal_generators: differ from the recomputed generators"
            ));
        }
        if leaf.certificates != certs {
            audit.fail(format!(
                "leaves[{i}].certificates: differ from the recomputed certificates"
            ));
        }
        all.insert(leaf.chart, pullbacks);
    }
    Ok(all)
}

fn check_chart_maps(
    report: &RunReport,
    group: &GroupAction,
    tower: &BlowupTower,
    audit: &mut Audit,
) -> Vec<Option<ChartMap>> {
    if report.equivariance.len() != group.order() {
        audit.fail(format!(
            "equivariance: {} entries for a group of order {}",
            report.equivariance.len(),
            group.order()
        ));
    }
    let mut maps = Vec::new();
    for (i, g) in group.elements().iter().enumerate() {
        let entry = report.equivariance.get(i);
        if entry.map(|e| &e.element) != Some(g) {
            audit.fail(format!(
                "equivariance[{i}].element: differs from the recomputed group"
            ));
        }
        match transport_tower(g, tower) {
            Ok(phi) => {
                if entry.map(|e| &e.chart_map) != Some(&phi) {
                    audit.fail(format!(
                        "equivariance[{i}].chart_map: differs from the recomputed lift"
                    ));
                }
                maps.push(Some(phi));
            }
            Err(e) => {
                audit.fail(format!("equivariance[{i}]: {e}"));
                maps.push(None);
            }
        }
    }
    maps
}

fn audit_simplify(
    report: &RunReport,
    problem: &ProblemFile,
    tower: &BlowupTower,
    audit: &mut Audit,
) -> Result<()> {
    let collection = problem.collection()?;
    let n = collection.len();
    let arity = problem.arity();
    let pullbacks = check_leaf_pullbacks(report, tower, &collection, audit)?;

    // Stages, re-derived on a tower replayed one stage at a time.
    if report.stages.len() != n {
        audit.fail(format!(
            "stages: {} recorded, {n} expected",
            report.stages.len()
        ));
    }
    let mut prefix = BlowupTower::new_root(arity, problem.variables.clone())?;
    let mut current = LeafCollections::from([(ChartId::ROOT, collection.clone())]);
    let mut history = Vec::new();
    let mut cursor = 0;
    for (s, stage) in report.stages.iter().enumerate() {
        let at = format!("stages[{s}]");
        let depth = n + 1 - s;
        if stage.depth != depth {
            audit.fail(format!(
                "{at}.depth: {} recorded, {depth} expected",
                stage.depth
            ));
            return Ok(());
        }
        if stage.first_step != cursor {
            audit.fail(format!(
                "{at}.first_step: {} recorded, {cursor} expected",
                stage.first_step
            ));
            return Ok(());
        }
        let (entry_ok, _) = check_depth_condition(&current, depth)?;
        if !entry_ok || !stage.entry_witnesses.is_empty() {
            audit.fail(format!(
                "{at}: some sum of {depth} members is a proper ideal at entry"
            ));
        }
        let j = stage_ideal(&current, depth, arity)?;
        let sections: Vec<_> = j.sections().iter().map(|(&c, i)| (c, i.clone())).collect();
        let recorded: Vec<_> = stage
            .stage_ideal
            .iter()
            .map(|s| (s.chart, s.ideal.clone()))
            .collect();
        if sections != recorded {
            audit.fail(format!(
                "{at}.stage_ideal: differs from the recomputed intersection"
            ));
        }
        let end = cursor + stage.steps;
        if end > report.tower.steps.len()
            || !replay_steps(&mut prefix, &report.tower.steps[cursor..end], cursor, audit)
        {
            audit.fail(format!("{at}.steps: cannot replay the stage's steps"));
            return Ok(());
        }
        cursor = end;
        let weak = match weak_transforms(&prefix, &current, &j) {
            Ok(w) => w,
            Err(e) => {
                audit.fail(format!("{at}: {e}"));
                return Ok(());
            }
        };
        if members_report(&weak) != stage.weak_transforms {
            audit.fail(format!(
                "{at}.weak_transforms: differ from the recomputed conductors"
            ));
        }
        let (next_ok, witnesses) = check_depth_condition(&weak, depth - 1)?;
        if !next_ok || !stage.next_condition_holds {
            let first = witnesses
                .first()
                .map(|w| format!(" (chart {})", w.chart))
                .unwrap_or_default();
            audit.fail(format!(
                "{at}.next_condition_holds: fails after the stage{first}"
            ));
        }
        if depth == 2 {
            let fresh = base_case(&prefix, &current)?;
            if !fresh || stage.base_case_holds != Some(true) {
                audit.fail(format!(
                    "{at}.base_case_holds: some member is not principal after the last stage"
                ));
            }
        }
        history.push((current, weak.clone()));
        current = weak;
    }
    if cursor != report.tower.steps.len() {
        audit.fail(format!(
            "tower.steps: {} steps lie outside every stage",
            report.tower.steps.len() - cursor
        ));
    }
    for (s, (before, after)) in history.iter().enumerate() {
        let fresh = verify_stalk_formula(tower, before, after)?.is_none();
        if !fresh || !report.stages[s].stalk_formula_holds {
            audit.fail(format!(
                "stages[{s}].stalk_formula_holds: fails on the replayed tower"
            ));
        }
    }

    // Equivariance of the final data.
    let group = problem.group_action()?;
    let perms = match group.check_collection_invariant(&collection) {
        Ok(p) => p,
        Err(e) => {
            audit.fail(format!("group: {e}"));
            return Ok(());
        }
    };
    let group = group.with_ideal_perms(perms.clone());
    let maps = check_chart_maps(report, &group, tower, audit);
    for (gi, (g, phi)) in group.elements().iter().zip(&maps).enumerate() {
        let Some(phi) = phi else { continue };
        for (&leaf, members) in &pullbacks {
            let image = &pullbacks[&phi.image(leaf)];
            for (k, m) in members.iter().enumerate() {
                if image[perms[gi][k]] != g.act_on_ideal(m)? {
                    audit.fail(format!(
                        "equivariance[{gi}]: pullback {} on chart {leaf} is not carried to chart {}",
                        k + 1,
                        phi.image(leaf)
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Every member entering the last stage pulls back to a principal ideal on
/// every leaf.
fn base_case(tower: &BlowupTower, entry: &LeafCollections) -> Result<bool> {
    for &leaf in tower.leaves() {
        let mut anc = leaf;
        while !entry.contains_key(&anc) {
            anc = tower.chart(anc)?.parent.ok_or(Error::ChartNotFound(leaf))?;
        }
        for m in &entry[&anc] {
            if !tower.pullback_from(anc, leaf, m)?.is_locally_principal() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn audit_map(
    report: &RunReport,
    problem: &ProblemFile,
    tower: &BlowupTower,
    audit: &mut Audit,
) -> Result<()> {
    if !report.stages.is_empty() {
        audit.fail("stages: a map resolution has no stages");
    }
    let spec: RationalMapSpec = match problem.map_spec() {
        Ok(s) => s,
        Err(e) => {
            audit.fail(format!("map: {e}"));
            return Ok(());
        }
    };
    check_leaf_pullbacks(report, tower, &[spec.base_ideal()], audit)?;
    check_chart_maps(report, spec.group(), tower, audit);
    let resolved = ResolvedMap {
        tower: tower.clone(),
        leaves: report.map_leaves.iter().map(LeafMap::from).collect(),
        defect_trace: Vec::new(),
        chart_maps: Vec::new(),
    };
    for w in verify_resolution(&spec, &resolved).witnesses {
        audit.fail(format!("map_leaves: {w}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::report::{run, RunOptions};
    use crate::monomial::Monomial;

    const PAIR: &str = r#"{"variables":["x","y"],"mode":"simplify","ideals":[[[1,0],[0,2]],[[2,0],[0,1]]],"group":[{"vars":[2,1],"ideals":[2,1]}]}"#;
    const MAP: &str = r#"{"variables":["x","y"],"mode":"resolve-map","map":[[2,0],[1,1],[0,2]],"group":[{"vars":[2,1]}]}"#;

    fn fresh(src: &str) -> (RunReport, ProblemFile) {
        let p = parse_problem(src.as_bytes()).unwrap();
        (run(&p, &RunOptions::default()).unwrap(), p)
    }

    #[test]
    fn fresh_reports_verify() {
        for src in [PAIR, MAP] {
            let (r, _) = fresh(src);
            let audit = verify(r.to_json().as_bytes(), src.as_bytes()).unwrap();
            assert!(audit.ok(), "{:?}", audit.witnesses);
        }
    }

    #[test]
    fn edited_substitution_is_caught_with_its_path() {
        let (mut r, p) = fresh(PAIR);
        r.tower.charts[3].substitution = crate::atlas::Substitution::from_images(vec![
            Monomial::new(vec![1, 0]),
            Monomial::new(vec![0, 1]),
        ]);
        let audit = verify_report(&r, &p).unwrap();
        assert!(!audit.ok());
        assert!(audit
            .witnesses
            .iter()
            .any(|w| w.starts_with("tower.charts[3].substitution")));
    }

    #[test]
    fn older_engine_version_is_audited_on_content() {
        let (mut r, p) = fresh(PAIR);
        r.engine.version = "0.0.1".into();
        assert!(verify_report(&r, &p).unwrap().ok());
    }

    #[test]
    fn hash_mismatch_is_stale() {
        let (r, _) = fresh(PAIR);
        let other = parse_problem(MAP.as_bytes()).unwrap();
        assert!(matches!(
            verify_report(&r, &other),
            Err(Error::StaleReport { .. })
        ));
    }

    type Edit = Box<dyn Fn(&mut RunReport)>;

    #[test]
    fn tampering_anywhere_is_caught() {
        let (base, p) = fresh(PAIR);
        let mut edits: Vec<Edit> = vec![
            Box::new(|r| r.leaves[0].principal_generators[0] = Monomial::new(vec![9, 9])),
            Box::new(|r| r.stages[0].next_condition_holds = false),
            Box::new(|r| r.stages[1].weak_transforms.pop().map(|_| ()).unwrap_or(())),
            Box::new(|r| r.equivariance[1].chart_map = r.equivariance[0].chart_map.clone()),
            Box::new(|r| r.summary.leaves = 5),
            Box::new(|r| r.tower.steps[0].centers[0].center = vec![1]),
            Box::new(|r| r.stages[0].stage_ideal[0].ideal = MonomialIdeal::unit(2)),
        ];
        for (k, edit) in edits.iter_mut().enumerate() {
            let mut r = base.clone();
            edit(&mut r);
            assert!(
                !verify_report(&r, &p).unwrap().ok(),
                "edit {k} went unnoticed"
            );
        }
        let (mut m, mp) = fresh(MAP);
        m.map_leaves[0].reduced.swap(0, 1);
        assert!(!verify_report(&m, &mp).unwrap().ok());
    }

    #[test]
    fn missing_mode_is_taken_from_the_report() {
        let src = r#"{"variables":["x","y"],"ideals":[[[1,0],[0,1]]]}"#;
        let (r, _) = fresh(src);
        assert!(verify(r.to_json().as_bytes(), src.as_bytes()).unwrap().ok());
    }
}
