//! Run reports: everything needed to audit a run, in a fixed field order
//! with integers only.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::atlas::{BlowupStep, BlowupTower, Center, CenterOnChart, ChartId, Substitution};
use crate::collection::{
    simplify_collection, DepthWitness, LeafCollections, SimplifyOptions, StageRecord,
};
use crate::error::{Error, Result};
use crate::group::{ChartMap, GroupAction, GroupElement};
use crate::io::problem::{Mode, ProblemFile};
use crate::map::{resolve, LeafMap};
use crate::monomial::{Monomial, MonomialIdeal};
use crate::principalize::{
    certify_normal_crossing, DefectRecord, NormalCrossingCertificate, DEFAULT_MAX_STEPS,
};

pub const ENGINE_NAME: &str = "equiblow";
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub engine: Engine,
    pub input_hash: String,
    pub mode: Mode,
    pub variables: Vec<String>,
    pub max_steps: usize,
    pub summary: Summary,
    pub tower: TowerReport,
    pub stages: Vec<StageReport>,
    pub leaves: Vec<LeafReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub map_leaves: Vec<MapLeafReport>,
    pub defect_trace: Vec<DefectRecord>,
    pub equivariance: Vec<EquivarianceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Engine {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub steps: usize,
    pub blowups: usize,
    pub charts: usize,
    pub leaves: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerReport {
    pub charts: Vec<ChartReport>,
    pub steps: Vec<StepReport>,
}

/// Centers, branches and exceptional variables are one-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartReport {
    pub id: ChartId,
    pub parent: Option<ChartId>,
    pub center: Option<Vec<usize>>,
    pub branch: Option<usize>,
    pub substitution: Substitution,
    pub composite: Substitution,
    pub exceptional: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepReport {
    pub orbit_tag: Option<u32>,
    pub centers: Vec<StepCenter>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepCenter {
    pub chart: ChartId,
    pub center: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub chart: ChartId,
    pub ideal: MonomialIdeal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Members {
    pub chart: ChartId,
    pub members: Vec<MonomialIdeal>,
}

/// Subsets are one-based member indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witness {
    pub chart: ChartId,
    pub subset: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageReport {
    pub depth: usize,
    pub stage_ideal: Vec<Section>,
    pub entry_witnesses: Vec<Witness>,
    pub first_step: usize,
    pub steps: usize,
    pub weak_transforms: Vec<Members>,
    pub next_condition_holds: bool,
    pub stalk_formula_holds: bool,
    pub base_case_holds: Option<bool>,
}

/// In simplify mode `pullbacks` holds the total transform of every member;
/// in resolve-map mode it holds the base ideal's.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafReport {
    pub chart: ChartId,
    pub pullbacks: Vec<MonomialIdeal>,
    pub principal_generators: Vec<Monomial>,
    pub certificates: Vec<NormalCrossingCertificate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapLeafReport {
    pub chart: ChartId,
    pub pullback: Vec<Monomial>,
    pub common_factor: Monomial,
    pub reduced: Vec<Monomial>,
    pub regular: bool,
}

impl From<&LeafMap> for MapLeafReport {
    fn from(l: &LeafMap) -> Self {
        MapLeafReport {
            chart: l.chart,
            pullback: l.pullback.clone(),
            common_factor: l.common_factor.clone(),
            reduced: l.reduced.clone(),
            regular: l.regular,
        }
    }
}

impl From<&MapLeafReport> for LeafMap {
    fn from(l: &MapLeafReport) -> Self {
        LeafMap {
            chart: l.chart,
            pullback: l.pullback.clone(),
            common_factor: l.common_factor.clone(),
            reduced: l.reduced.clone(),
            regular: l.regular,
        }
    }
}

/// `chart_map[c]` is the chart that chart `c` is carried to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivarianceEntry {
    pub element: GroupElement,
    pub chart_map: ChartMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub elapsed_micros: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Takes precedence over the problem's own `max_steps`.
    pub max_steps: Option<usize>,
    pub timing: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<Self> {
        serde_json::from_slice(bytes)
    }

    /// Rebuilds the recorded tower from its steps alone.
    pub fn replay(&self) -> Result<BlowupTower> {
        let mut tower = BlowupTower::new_root(self.variables.len(), self.variables.clone())?;
        for s in &self.tower.steps {
            let mut centers = Vec::with_capacity(s.centers.len());
            for c in &s.centers {
                if c.center.contains(&0) {
                    return Err(Error::InvalidCenter {
                        chart: c.chart,
                        center: c.center.clone(),
                        reason: "one-based index 0",
                    });
                }
                centers.push(CenterOnChart {
                    chart: c.chart,
                    center: Center::new(c.center.iter().map(|v| v - 1)),
                });
            }
            tower.apply_step(BlowupStep {
                centers,
                orbit_tag: s.orbit_tag,
            })?;
        }
        Ok(tower)
    }

    pub fn leaf(&self, chart: ChartId) -> Option<&LeafReport> {
        self.leaves.iter().find(|l| l.chart == chart)
    }
}

pub fn one_based(vars: &[usize]) -> Vec<usize> {
    vars.iter().map(|v| v + 1).collect()
}

pub fn tower_report(tower: &BlowupTower) -> TowerReport {
    TowerReport {
        charts: tower
            .charts()
            .iter()
            .map(|c| ChartReport {
                id: c.id,
                parent: c.parent,
                center: c.center.as_ref().map(|z| one_based(z.vars())),
                branch: c.branch.map(|b| b + 1),
                substitution: c.substitution.clone(),
                composite: c.composite.clone(),
                exceptional: (0..tower.arity())
                    .filter(|&v| c.exceptional[v])
                    .map(|v| v + 1)
                    .collect(),
            })
            .collect(),
        steps: tower
            .steps()
            .iter()
            .map(|s| StepReport {
                orbit_tag: s.orbit_tag,
                centers: s
                    .centers
                    .iter()
                    .map(|c| StepCenter {
                        chart: c.chart,
                        center: one_based(c.center.vars()),
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn members_report(leaves: &LeafCollections) -> Vec<Members> {
    leaves
        .iter()
        .map(|(&chart, members)| Members {
            chart,
            members: members.clone(),
        })
        .collect()
}

pub fn witness_report(w: &[DepthWitness]) -> Vec<Witness> {
    w.iter()
        .map(|w| Witness {
            chart: w.chart,
            subset: one_based(&w.subset),
        })
        .collect()
}

fn stage_report(s: &StageRecord) -> StageReport {
    StageReport {
        depth: s.depth,
        stage_ideal: s
            .stage_ideal
            .sections()
            .iter()
            .map(|(&chart, ideal)| Section {
                chart,
                ideal: ideal.clone(),
            })
            .collect(),
        entry_witnesses: witness_report(&s.entry_witnesses),
        first_step: s.first_step,
        steps: s.steps,
        weak_transforms: members_report(&s.weak),
        next_condition_holds: s.next_condition_holds,
        stalk_formula_holds: s.stalk_formula_holds,
        base_case_holds: s.base_case_holds,
    }
}

fn leaf_report(
    tower: &BlowupTower,
    chart: ChartId,
    pullbacks: Vec<MonomialIdeal>,
) -> Result<LeafReport> {
    let mut principal_generators = Vec::with_capacity(pullbacks.len());
    let mut certificates = Vec::with_capacity(pullbacks.len());
    for (k, p) in pullbacks.iter().enumerate() {
        let g = p.principal_generator().ok_or_else(|| {
            Error::Precondition(format!(
                "pullback {} is not principal on chart {chart}",
                k + 1
            ))
        })?;
        certificates.push(certify_normal_crossing(tower, chart, g)?);
        principal_generators.push(g.clone());
    }
    Ok(LeafReport {
        chart,
        pullbacks,
        principal_generators,
        certificates,
    })
}

fn equivariance(group: &GroupAction, maps: &[ChartMap]) -> Vec<EquivarianceEntry> {
    group
        .elements()
        .iter()
        .zip(maps)
        .map(|(g, m)| EquivarianceEntry {
            element: g.clone(),
            chart_map: m.clone(),
        })
        .collect()
}

/// Step budget: the explicit override, then the problem's own value, then
/// the default.
pub fn effective_max_steps(problem: &ProblemFile, options: &RunOptions) -> usize {
    options
        .max_steps
        .or(problem.max_steps)
        .unwrap_or(DEFAULT_MAX_STEPS)
}

/// Runs the pipeline selected by the problem's mode (simplify when unset).
pub fn run(problem: &ProblemFile, options: &RunOptions) -> Result<RunReport> {
    let started = Instant::now();
    let mode = problem.mode.unwrap_or(Mode::Simplify);
    let max_steps = effective_max_steps(problem, options);
    let names = problem.variables.clone();

    let (tower, stages, leaves, map_leaves, defect_trace, equivariance) = match mode {
        Mode::Simplify => {
            let collection = problem.collection()?;
            let group = problem.group_action()?;
            let out = simplify_collection(
                &collection,
                &group,
                &SimplifyOptions {
                    max_steps,
                    variable_names: Some(names),
                },
            )?;
            let leaves = out
                .pullbacks
                .iter()
                .map(|(&chart, p)| leaf_report(&out.tower, chart, p.clone()))
                .collect::<Result<Vec<_>>>()?;
            let group = group.with_ideal_perms(out.ideal_perms.clone());
            let stages: Vec<StageReport> = out.stages.iter().map(stage_report).collect();
            let trace = out
                .stages
                .iter()
                .flat_map(|s| s.defect_trace.iter().cloned())
                .collect();
            let eq = equivariance(&group, &out.chart_maps);
            (out.tower, stages, leaves, Vec::new(), trace, eq)
        }
        Mode::ResolveMap => {
            let spec = problem.map_spec()?;
            let root = BlowupTower::new_root(problem.arity(), names)?;
            let resolved = resolve(&spec, root, max_steps)?;
            let base = spec.base_ideal();
            let leaves = resolved
                .leaves
                .iter()
                .map(|l| {
                    leaf_report(
                        &resolved.tower,
                        l.chart,
                        vec![resolved.tower.total_transform(l.chart, &base)?],
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let map_leaves = resolved.leaves.iter().map(MapLeafReport::from).collect();
            let eq = equivariance(spec.group(), &resolved.chart_maps);
            (
                resolved.tower,
                Vec::new(),
                leaves,
                map_leaves,
                resolved.defect_trace,
                eq,
            )
        }
    };

    Ok(RunReport {
        engine: Engine {
            name: ENGINE_NAME.into(),
            version: ENGINE_VERSION.into(),
        },
        input_hash: ProblemFile {
            mode: Some(mode),
            ..problem.clone()
        }
        .input_hash(),
        mode,
        variables: problem.variables.clone(),
        max_steps,
        summary: Summary {
            steps: tower.steps().len(),
            blowups: tower.steps().iter().map(|s| s.centers.len()).sum(),
            charts: tower.charts().len(),
            leaves: tower.leaves().len(),
        },
        tower: tower_report(&tower),
        stages,
        leaves,
        map_leaves,
        defect_trace,
        equivariance,
        timing: options.timing.then(|| Timing {
            elapsed_micros: started.elapsed().as_micros() as u64,
        }),
    })
}
