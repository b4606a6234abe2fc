//! JSON documents read and written by the command line. Every document has a
//! top-level `kind`; tables are listed in lexicographic order with the first
//! space slowest.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use teamdp::cases::PomdpSpec;
use teamdp::model::{
    CostTable, DecisionMaker, DeterministicPolicy, Distribution, FiniteSpace, Kernel, RandomizedPolicy, TeamSpec,
};
use teamdp::reduction::{ReducedDm, ReducedStaticTeam, ReferenceMeasures};
use teamdp::strategic::StrategicMeasure;

use crate::error::{CliError, CliResult};

/// Raw bytes of an input file and their SHA-256 digest.
pub struct Input {
    pub path: String,
    pub text: String,
    pub sha256: String,
}

pub fn read_input(path: &Path) -> CliResult<Input> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
    Ok(Input {
        path: path.display().to_string(),
        text,
        sha256,
    })
}

fn json_error(path: &str, e: &serde_json::Error) -> CliError {
    CliError::Input(format!("{path}:{}:{}: {e}", e.line(), e.column()))
}

/// The `kind` field of a document, read without checking the rest.
pub fn kind_of(input: &Input) -> CliResult<String> {
    let value: serde_json::Value = serde_json::from_str(&input.text).map_err(|e| json_error(&input.path, &e))?;
    value
        .get("kind")
        .and_then(|k| k.as_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::Input(format!("{}: missing string field `kind`", input.path)))
}

/// Parses `input` as a document of the given kind.
pub fn parse<T: DeserializeOwned>(input: &Input, kind: &str) -> CliResult<T> {
    let value: serde_json::Value = serde_json::from_str(&input.text).map_err(|e| json_error(&input.path, &e))?;
    match value.get("kind").and_then(|k| k.as_str()) {
        Some(k) if k == kind => {}
        Some(k) => {
            return Err(CliError::Input(format!(
                "{}: expected a `{kind}` document, found `{k}`",
                input.path
            )))
        }
        None => return Err(CliError::Input(format!("{}: missing string field `kind`", input.path))),
    }
    serde_json::from_str(&input.text).map_err(|e| json_error(&input.path, &e))
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceWithDist {
    pub labels: Vec<String>,
    pub dist: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DmFile {
    pub y_labels: Vec<String>,
    pub u_labels: Vec<String>,
    /// One row per history `(ω0, y^0, u^0, …)`.
    pub kernel: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TeamFile {
    pub kind: String,
    pub omega0: SpaceWithDist,
    pub dms: Vec<DmFile>,
    /// Over `(ω0, u^0, …, u^{N-1})`.
    pub cost: Vec<f64>,
}

fn rows_to_table(rows: &[Vec<f64>], width: usize, what: &str) -> CliResult<Vec<f64>> {
    let mut table = Vec::with_capacity(rows.len() * width);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(CliError::Domain(format!(
                "{what} row {r} has {} entries, expected {width}",
                row.len()
            )));
        }
        table.extend_from_slice(row);
    }
    Ok(table)
}

impl TeamFile {
    /// Builds the team without validating it.
    pub fn to_spec(&self) -> CliResult<TeamSpec> {
        let omega0 = FiniteSpace::from_labels_unchecked(self.omega0.labels.clone());
        let mut input = vec![omega0.len()];
        let mut dms = Vec::with_capacity(self.dms.len());
        for (n, dm) in self.dms.iter().enumerate() {
            let expected_rows: usize = input.iter().product();
            if dm.kernel.len() != expected_rows {
                return Err(CliError::Domain(format!(
                    "dm {n} kernel has {} rows, expected {expected_rows}",
                    dm.kernel.len()
                )));
            }
            let table = rows_to_table(&dm.kernel, dm.y_labels.len(), &format!("dm {n} kernel"))?;
            dms.push(DecisionMaker {
                y: FiniteSpace::from_labels_unchecked(dm.y_labels.clone()),
                u: FiniteSpace::from_labels_unchecked(dm.u_labels.clone()),
                kernel: Kernel::from_table(input.clone(), dm.y_labels.len(), table),
            });
            input.push(dm.y_labels.len());
            input.push(dm.u_labels.len());
        }
        let mut cost_dims = vec![omega0.len()];
        cost_dims.extend(self.dms.iter().map(|d| d.u_labels.len()));
        Ok(TeamSpec {
            omega0,
            prior: Distribution::from_probs_unchecked(self.omega0.dist.clone()),
            dms,
            cost: CostTable::new(cost_dims, self.cost.clone()),
        })
    }

    pub fn from_spec(spec: &TeamSpec) -> Self {
        Self {
            kind: "team".into(),
            omega0: SpaceWithDist {
                labels: spec.omega0.labels().to_vec(),
                dist: spec.prior.probs().to_vec(),
            },
            dms: spec
                .dms
                .iter()
                .map(|dm| DmFile {
                    y_labels: dm.y.labels().to_vec(),
                    u_labels: dm.u.labels().to_vec(),
                    kernel: (0..dm.kernel.row_count()).map(|r| dm.kernel.row(r).to_vec()).collect(),
                })
                .collect(),
            cost: spec.cost.values().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub kind: String,
    /// `[|Ω0|, |Y^0|, |U^0|, …]`.
    pub dims: Vec<usize>,
    pub probs: Vec<f64>,
}

impl MeasureFile {
    pub fn from_measure(m: &StrategicMeasure) -> Self {
        Self {
            kind: "measure".into(),
            dims: m.dims().to_vec(),
            probs: m.probs().to_vec(),
        }
    }

    pub fn to_measure(&self) -> CliResult<StrategicMeasure> {
        StrategicMeasure::new(self.dims.clone(), self.probs.clone()).map_err(|e| CliError::Input(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReducedDmFile {
    pub y_labels: Vec<String>,
    pub u_labels: Vec<String>,
    pub reference: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReducedFile {
    pub kind: String,
    pub omega0: SpaceWithDist,
    pub dms: Vec<ReducedDmFile>,
    /// Over `(ω0, y^0, …, y^{N-1}, u^0, …, u^{N-1})`.
    pub reduced_cost: Vec<f64>,
}

impl ReducedFile {
    pub fn from_team(t: &ReducedStaticTeam) -> Self {
        Self {
            kind: "reduced".into(),
            omega0: SpaceWithDist {
                labels: t.omega0.labels().to_vec(),
                dist: t.prior.probs().to_vec(),
            },
            dms: t
                .dms
                .iter()
                .map(|d| ReducedDmFile {
                    y_labels: d.y.labels().to_vec(),
                    u_labels: d.u.labels().to_vec(),
                    reference: d.reference.probs().to_vec(),
                })
                .collect(),
            reduced_cost: t.reduced_cost.clone(),
        }
    }

    pub fn to_team(&self) -> CliResult<ReducedStaticTeam> {
        let team = ReducedStaticTeam {
            omega0: FiniteSpace::new(self.omega0.labels.clone()).map_err(CliError::from)?,
            prior: Distribution::new(self.omega0.dist.clone()).map_err(CliError::from)?,
            dms: self
                .dms
                .iter()
                .map(|d| {
                    Ok(ReducedDm {
                        y: FiniteSpace::new(d.y_labels.clone())?,
                        u: FiniteSpace::new(d.u_labels.clone())?,
                        reference: Distribution::new(d.reference.clone())?,
                    })
                })
                .collect::<teamdp::Result<_>>()?,
            reduced_cost: self.reduced_cost.clone(),
        };
        team.validate()?;
        Ok(team)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReferencesFile {
    pub kind: String,
    pub per_dm: Vec<Vec<f64>>,
}

impl ReferencesFile {
    pub fn to_refs(&self) -> CliResult<ReferenceMeasures> {
        Ok(ReferenceMeasures {
            per_dm: self
                .per_dm
                .iter()
                .map(|q| Distribution::new(q.clone()))
                .collect::<teamdp::Result<_>>()?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PomdpFile {
    pub kind: String,
    pub states: Vec<String>,
    pub observations: Vec<String>,
    pub actions: Vec<String>,
    pub initial: Vec<f64>,
    /// One row per `(state, action)`, state slowest.
    pub transition: Vec<Vec<f64>>,
    /// One row per state.
    pub observation: Vec<Vec<f64>>,
    /// One row per state, one column per action.
    pub stage_cost: Vec<Vec<f64>>,
    pub horizon: usize,
}

impl PomdpFile {
    pub fn to_spec(&self) -> CliResult<PomdpSpec> {
        let (x, y, u) = (self.states.len(), self.observations.len(), self.actions.len());
        if self.transition.len() != x * u {
            return Err(CliError::Domain(format!(
                "transition has {} rows, expected {}",
                self.transition.len(),
                x * u
            )));
        }
        if self.observation.len() != x || self.stage_cost.len() != x {
            return Err(CliError::Domain(
                "observation and stage_cost need one row per state".into(),
            ));
        }
        let spec = PomdpSpec {
            states: FiniteSpace::new(self.states.clone())?,
            observations: FiniteSpace::new(self.observations.clone())?,
            actions: FiniteSpace::new(self.actions.clone())?,
            initial: Distribution::new(self.initial.clone())?,
            transition: Kernel::from_table(vec![x, u], x, rows_to_table(&self.transition, x, "transition")?),
            observation: Kernel::from_table(vec![x], y, rows_to_table(&self.observation, y, "observation")?),
            stage_cost: CostTable::new(vec![x, u], rows_to_table(&self.stage_cost, u, "stage_cost")?),
            horizon: self.horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(p: &PomdpSpec) -> Self {
        let rows = |k: &Kernel| (0..k.row_count()).map(|r| k.row(r).to_vec()).collect();
        let u = p.actions.len();
        Self {
            kind: "pomdp".into(),
            states: p.states.labels().to_vec(),
            observations: p.observations.labels().to_vec(),
            actions: p.actions.labels().to_vec(),
            initial: p.initial.probs().to_vec(),
            transition: rows(&p.transition),
            observation: rows(&p.observation),
            stage_cost: p.stage_cost.values().chunks(u).map(|c| c.to_vec()).collect(),
            horizon: p.horizon,
        }
    }
}

/// Either a deterministic policy, given as one action label per measurement
/// label, or a randomized one, given as one probability row per measurement.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub randomized: Option<Vec<Vec<Vec<f64>>>>,
}

pub enum LoadedPolicy {
    Deterministic(DeterministicPolicy),
    Randomized(RandomizedPolicy),
}

impl PolicyFile {
    pub fn from_deterministic(spec: &TeamSpec, p: &DeterministicPolicy) -> Self {
        Self {
            kind: "policy".into(),
            deterministic: Some(action_labels(spec, p)),
            randomized: None,
        }
    }

    pub fn to_policy(&self, spec: &TeamSpec) -> CliResult<LoadedPolicy> {
        match (&self.deterministic, &self.randomized) {
            (Some(labels), None) => {
                if labels.len() != spec.dm_count() {
                    return Err(CliError::Domain(format!(
                        "policy lists {} decision makers, team has {}",
                        labels.len(),
                        spec.dm_count()
                    )));
                }
                let mut tables = Vec::with_capacity(labels.len());
                for (n, (stage, dm)) in labels.iter().zip(&spec.dms).enumerate() {
                    if stage.len() != dm.y.len() {
                        return Err(CliError::Domain(format!(
                            "policy for dm {n} has {} actions, measurement space has {}",
                            stage.len(),
                            dm.y.len()
                        )));
                    }
                    let table = stage
                        .iter()
                        .map(|l| {
                            dm.u.position(l)
                                .ok_or_else(|| CliError::Domain(format!("dm {n} has no action `{l}`")))
                        })
                        .collect::<CliResult<Vec<_>>>()?;
                    tables.push(table);
                }
                Ok(LoadedPolicy::Deterministic(DeterministicPolicy::new(tables)))
            }
            (None, Some(rows)) => {
                let p = RandomizedPolicy::new(rows.clone());
                teamdp::model::Policy::check_shape(&p, spec)?;
                Ok(LoadedPolicy::Randomized(p))
            }
            _ => Err(CliError::Input(
                "policy document needs exactly one of `deterministic` and `randomized`".into(),
            )),
        }
    }
}

/// Action label chosen at each measurement, per decision maker.
fn action_labels(spec: &TeamSpec, p: &DeterministicPolicy) -> Vec<Vec<String>> {
    spec.dms
        .iter()
        .zip(p.tables())
        .map(|(dm, t)| t.iter().map(|&a| dm.u.label(a).to_string()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use teamdp::random::{random_randomized_policy, random_team, rng, RandomTeamConfig};
    use teamdp::strategic::induce_measure;

    fn reparse<T: Serialize + DeserializeOwned>(doc: &T, kind: &str) -> T {
        let input = Input {
            path: "mem".into(),
            text: to_json(doc),
            sha256: String::new(),
        };
        parse(&input, kind).unwrap()
    }

    #[test]
    fn team_round_trip() {
        let mut r = rng(4);
        for _ in 0..20 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(3, 3));
            let file = TeamFile::from_spec(&spec);
            let back = reparse(&file, "team");
            assert_eq!(back, file);
            assert_eq!(TeamFile::from_spec(&back.to_spec().unwrap()), file);
        }
    }

    #[test]
    fn measure_and_policy_round_trip() {
        let mut r = rng(5);
        let spec = random_team(&mut r, &RandomTeamConfig::small(2, 3));
        let p = random_randomized_policy(&mut r, &spec);
        let m = induce_measure(&spec, &p).unwrap();
        let file = MeasureFile::from_measure(&m);
        let back = reparse(&file, "measure").to_measure().unwrap();
        assert_eq!(back.probs(), m.probs());
        assert_eq!(back.dims(), m.dims());

        let d = DeterministicPolicy::zeros(&spec);
        let file = PolicyFile::from_deterministic(&spec, &d);
        match reparse(&file, "policy").to_policy(&spec).unwrap() {
            LoadedPolicy::Deterministic(q) => assert_eq!(q.tables(), d.tables()),
            LoadedPolicy::Randomized(_) => panic!("expected a deterministic policy"),
        }
    }

    #[test]
    fn pomdp_round_trip() {
        let p = teamdp::cases::tiger(3);
        let file = PomdpFile::from_spec(&p);
        let back = reparse(&file, "pomdp");
        assert_eq!(back, file);
        assert_eq!(PomdpFile::from_spec(&back.to_spec().unwrap()), file);
    }

    #[test]
    fn reduced_round_trip() {
        let mut r = rng(6);
        let spec = random_team(&mut r, &RandomTeamConfig::small(2, 2));
        let refs = teamdp::reduction::default_references(&spec);
        let reduced = teamdp::reduction::static_reduce(&spec, &refs).unwrap();
        let file = ReducedFile::from_team(&reduced);
        let back = reparse(&file, "reduced").to_team().unwrap();
        assert_eq!(back.reduced_cost, reduced.reduced_cost);
        assert_eq!(back.dims(), reduced.dims());
    }

    #[test]
    fn syntax_error_has_position() {
        let input = Input {
            path: "f.json".into(),
            text: "{\n  \"kind\": \"team\",\n  \"omega0\": [1,\n".into(),
            sha256: String::new(),
        };
        match parse::<TeamFile>(&input, "team") {
            Err(CliError::Input(msg)) => assert!(msg.starts_with("f.json:4:"), "{msg}"),
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }
}
