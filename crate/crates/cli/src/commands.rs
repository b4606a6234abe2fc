use std::path::{Path, PathBuf};

use serde_json::json;

use teamdp::cases::{
    belief_value_iteration, build_pomdp_team_with_cap, default_grid, refinement_sweep, run_gaussian_case,
    write_sweep_csv, GaussianBins, WitsenhausenGaussianConfig,
};
use teamdp::model::{expected_cost, DeterministicPolicy, RandomizedPolicy, TeamSpec, DEFAULT_TABLE_CAP};
use teamdp::oracle::brute_force;
use teamdp::par::Execution;
use teamdp::random::{random_deterministic_policy, random_randomized_policy, rng};
use teamdp::reduction::{check_absolute_continuity, default_references, reduced_expected_cost, static_reduce_with};
use teamdp::solver::{solve_exact, stagewise_iterate, verify_stagewise, SolveOptions};
use teamdp::strategic::{induce_measure, validate_la, validate_lr, MembershipReport};

use crate::error::{CliError, CliResult};
use crate::files::*;
use crate::report::{RunReport, StageActions};

/// A finished command: its report and exit status.
pub struct Outcome {
    pub report: RunReport,
    pub code: u8,
}

fn ok(report: RunReport) -> CliResult<Outcome> {
    Ok(Outcome { report, code: 0 })
}

fn load_team(path: &Path) -> CliResult<(Input, TeamSpec)> {
    let input = read_input(path)?;
    let file: TeamFile = parse(&input, "team")?;
    let spec = file.to_spec()?;
    Ok((input, spec))
}

fn load_valid_team(path: &Path) -> CliResult<(Input, TeamSpec)> {
    let (input, spec) = load_team(path)?;
    let report = spec.validate();
    if !report.is_valid() {
        return Err(CliError::Domain(format!("invalid team: {report}")));
    }
    Ok((input, spec))
}

fn stage_actions(spec: &TeamSpec, p: &DeterministicPolicy) -> Vec<StageActions> {
    spec.dms
        .iter()
        .zip(p.tables())
        .enumerate()
        .map(|(n, (dm, t))| StageActions {
            dm: n,
            actions: t
                .iter()
                .enumerate()
                .map(|(y, &a)| [dm.y.label(y).to_string(), dm.u.label(a).to_string()])
                .collect(),
        })
        .collect()
}

pub fn validate(path: &Path, seed: u64) -> CliResult<Outcome> {
    let input = read_input(path)?;
    if kind_of(&input)? == "reduced" {
        let team = parse::<ReducedFile>(&input, "reduced")?.to_team()?;
        let mut report = RunReport::new(&[&input], seed);
        report.values = json!({ "valid": true });
        report.diagnostics = json!({ "dims": team.dims(), "max_reduced_cost": team.max_cost() });
        return ok(report);
    }
    let spec = parse::<TeamFile>(&input, "team")?.to_spec()?;
    let v = spec.validate();
    let mut report = RunReport::new(&[&input], seed);
    report.values = json!({ "valid": v.is_valid() });
    report.diagnostics = json!({
        "violations": v.violations.iter().map(|x| json!({
            "kind": format!("{:?}", x.kind),
            "message": x.message,
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        report,
        code: if v.is_valid() { 0 } else { 1 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Algorithm {
    Exact,
    Stagewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Init {
    /// Action index 0 at every measurement.
    Zeros,
    /// A seeded random deterministic policy.
    Random,
}

pub struct SolveArgs {
    pub algorithm: Algorithm,
    pub init: Init,
    pub check_oracle: bool,
    pub sweeps: usize,
    pub state_cap: usize,
    pub stage_policy_cap: u128,
    pub oracle_cap: u128,
    pub execution: Execution,
    pub policy_out: Option<PathBuf>,
}

pub fn solve(path: &Path, args: &SolveArgs, seed: u64) -> CliResult<Outcome> {
    let (input, spec) = load_valid_team(path)?;
    let mut report = RunReport::new(&[&input], seed);
    let opts = SolveOptions {
        execution: args.execution,
        state_cap: args.state_cap,
        stage_policy_cap: args.stage_policy_cap,
        ..SolveOptions::default()
    };
    let result = match args.algorithm {
        Algorithm::Exact => solve_exact(&spec, &opts)?,
        Algorithm::Stagewise => {
            let init = match args.init {
                Init::Zeros => DeterministicPolicy::zeros(&spec),
                Init::Random => random_deterministic_policy(&mut rng(seed), &spec),
            };
            stagewise_iterate(&spec, &init, args.sweeps, 1e-12, args.execution)?
        }
    };
    let stagewise = verify_stagewise(&spec, &result.policy, 1e-9, args.execution)?;
    let mut values = json!({ "value": result.value });
    let mut diagnostics = json!({
        "algorithm": format!("{:?}", args.algorithm).to_lowercase(),
        "reachable_counts": result.reachable_counts,
        "dedup_hits": result.dedup_hits,
        "sweep_values": result.sweep_values,
        "stage_gaps": stagewise.per_stage_gap,
        "max_stage_gap": stagewise.max_gap,
    });
    let mut code = 0;
    if args.check_oracle {
        let oracle = brute_force(&spec, args.oracle_cap, args.execution)?;
        let diff = (result.value - oracle.value).abs();
        values["oracle_value"] = json!(oracle.value);
        values["oracle_difference"] = json!(diff);
        diagnostics["policies_evaluated"] = json!(oracle.policies_evaluated);
        let agrees = match args.algorithm {
            Algorithm::Exact => diff <= 1e-9,
            Algorithm::Stagewise => result.value >= oracle.value - 1e-9,
        };
        diagnostics["oracle_check_passed"] = json!(agrees);
        if !agrees {
            code = 1;
        }
    }
    report.values = values;
    report.diagnostics = diagnostics;
    if let Some(path) = &args.policy_out {
        write_file(path, &to_json(&PolicyFile::from_deterministic(&spec, &result.policy)))?;
    }
    report.policy = Some(stage_actions(&spec, &result.policy));
    Ok(Outcome { report, code })
}

pub fn brute(path: &Path, cap: u128, execution: Execution, seed: u64) -> CliResult<Outcome> {
    let (input, spec) = load_valid_team(path)?;
    let oracle = brute_force(&spec, cap, execution)?;
    let mut report = RunReport::new(&[&input], seed);
    report.values = json!({ "value": oracle.value });
    report.diagnostics = json!({ "policies_evaluated": oracle.policies_evaluated });
    report.policy = Some(stage_actions(&spec, &oracle.policy));
    ok(report)
}

pub fn reduce(
    path: &Path,
    references: Option<&Path>,
    out: Option<&Path>,
    probes: usize,
    execution: Execution,
    seed: u64,
) -> CliResult<Outcome> {
    let (input, spec) = load_valid_team(path)?;
    let mut inputs = vec![input];
    let refs = match references {
        Some(p) => {
            let i = read_input(p)?;
            let refs = parse::<ReferencesFile>(&i, "references")?.to_refs()?;
            inputs.push(i);
            refs
        }
        None => default_references(&spec),
    };
    let continuity = check_absolute_continuity(&spec, &refs)?;
    if !continuity.passed() {
        let cells: Vec<String> = continuity
            .violations
            .iter()
            .map(|v| format!("(dm {}, history {}, y {})", v.dm, v.history, v.y))
            .collect();
        return Err(CliError::Domain(format!(
            "absolute continuity fails at {} cell(s): {}",
            cells.len(),
            cells.join(", ")
        )));
    }
    let reduced = static_reduce_with(&spec, &refs, DEFAULT_TABLE_CAP, execution)?;
    let mut r = rng(seed);
    let mut max_discrepancy: f64 = 0.0;
    let mut probe_costs = Vec::with_capacity(probes);
    for _ in 0..probes {
        let p = random_randomized_policy(&mut r, &spec);
        let a = expected_cost(&spec, &p)?;
        let b = reduced_expected_cost(&reduced, &p)?;
        max_discrepancy = max_discrepancy.max((a - b).abs());
        probe_costs.push([a, b]);
    }
    if let Some(out) = out {
        write_file(out, &to_json(&ReducedFile::from_team(&reduced)))?;
    }
    let refs_in: Vec<&Input> = inputs.iter().collect();
    let mut report = RunReport::new(&refs_in, seed);
    report.values = json!({ "max_discrepancy": max_discrepancy, "max_reduced_cost": reduced.max_cost() });
    report.diagnostics = json!({
        "certificate": {
            "probes": probes,
            "probe_costs": probe_costs,
        },
        "references": refs.per_dm.iter().map(|q| q.probs().to_vec()).collect::<Vec<_>>(),
        "reduced_file": out.map(|p| p.display().to_string()),
    });
    ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InducedFrom {
    /// The exact optimum.
    Optimal,
    /// Uniform randomization at every measurement.
    Uniform,
    /// A seeded random deterministic policy.
    RandomDeterministic,
    /// A seeded random randomized policy.
    RandomRandomized,
}

pub fn induce(
    path: &Path,
    policy: Option<&Path>,
    from: InducedFrom,
    out: Option<&Path>,
    seed: u64,
) -> CliResult<Outcome> {
    let (input, spec) = load_valid_team(path)?;
    let mut inputs = vec![input];
    let measure = match policy {
        Some(p) => {
            let i = read_input(p)?;
            let m = match parse::<PolicyFile>(&i, "policy")?.to_policy(&spec)? {
                LoadedPolicy::Deterministic(d) => induce_measure(&spec, &d)?,
                LoadedPolicy::Randomized(r) => induce_measure(&spec, &r)?,
            };
            inputs.push(i);
            m
        }
        None => match from {
            InducedFrom::Optimal => induce_measure(&spec, &solve_exact(&spec, &SolveOptions::default())?.policy)?,
            InducedFrom::Uniform => induce_measure(&spec, &RandomizedPolicy::uniform(&spec))?,
            InducedFrom::RandomDeterministic => {
                induce_measure(&spec, &random_deterministic_policy(&mut rng(seed), &spec))?
            }
            InducedFrom::RandomRandomized => induce_measure(&spec, &random_randomized_policy(&mut rng(seed), &spec))?,
        },
    };
    let cost = teamdp::strategic::measure_expected_cost(&measure, &spec.cost)?;
    if let Some(out) = out {
        write_file(out, &to_json(&MeasureFile::from_measure(&measure)))?;
    }
    let refs_in: Vec<&Input> = inputs.iter().collect();
    let mut report = RunReport::new(&refs_in, seed);
    report.values = json!({ "expected_cost": cost });
    report.diagnostics = json!({
        "cells": measure.probs().len(),
        "measure_file": out.map(|p| p.display().to_string()),
    });
    ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MeasureClass {
    #[value(name = "LA", alias = "la")]
    La,
    #[value(name = "LR", alias = "lr")]
    Lr,
}

fn membership_json(spec: &TeamSpec, r: &MembershipReport) -> serde_json::Value {
    json!({
        "passed": r.passed,
        "prior_gap": r.prior_gap,
        "kernel_gap": r.kernel_gap,
        "ci_gap": r.ci_gap,
        "determinism_gap": r.determinism_gap,
        "witnesses": r.witnesses.iter().map(|w| json!({
            "kind": format!("{:?}", w.kind),
            "dm": w.dm,
            "indices": w.indices,
            "labels": witness_labels(spec, w.dm, &w.indices, w.kind),
            "gap": w.gap,
        })).collect::<Vec<_>>(),
    })
}

/// Labels for a witness's index tuple: history digits, then `y`, then `u`.
fn witness_labels(spec: &TeamSpec, dm: usize, indices: &[usize], kind: teamdp::strategic::GapKind) -> Vec<String> {
    use teamdp::strategic::GapKind;
    let mut spaces: Vec<&teamdp::model::FiniteSpace> = Vec::new();
    match kind {
        GapKind::Prior => spaces.push(&spec.omega0),
        GapKind::Determinism => spaces.extend([&spec.dms[dm].y, &spec.dms[dm].u]),
        GapKind::Kernel | GapKind::ConditionalIndependence => {
            spaces.push(&spec.omega0);
            for d in &spec.dms[..dm] {
                spaces.extend([&d.y, &d.u]);
            }
            spaces.extend([&spec.dms[dm].y, &spec.dms[dm].u]);
        }
    }
    indices
        .iter()
        .zip(spaces)
        .map(|(&i, s)| s.label(i).to_string())
        .collect()
}

pub fn check_measure(team: &Path, measure: &Path, class: MeasureClass, tol: f64, seed: u64) -> CliResult<Outcome> {
    let (team_in, spec) = load_valid_team(team)?;
    let measure_in = read_input(measure)?;
    let m = parse::<MeasureFile>(&measure_in, "measure")?.to_measure()?;
    let result = match class {
        MeasureClass::La => validate_la(&m, &spec, tol),
        MeasureClass::Lr => validate_lr(&m, &spec, tol),
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    let mut report = RunReport::new(&[&team_in, &measure_in], seed);
    report.values = json!({ "passed": result.passed, "tolerance": tol });
    report.diagnostics = membership_json(&spec, &result);
    Ok(Outcome {
        report,
        code: if result.passed { 0 } else { 1 },
    })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn case_wd(k: f64, eps: &[f64], csv: Option<&PathBuf>, execution: Execution, seed: u64) -> CliResult<Outcome> {
    let rows = refinement_sweep(k, eps, |e| (default_grid(e), default_grid(e)), execution)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).expect("writing to memory");
    if let Some(path) = csv {
        write_file(path, std::str::from_utf8(&buf).expect("utf-8 csv"))?;
    }
    let bound_holds = rows
        .iter()
        .all(|r| r.optimum <= k * r.parameter * r.parameter + 1e-12 && r.optimum > 0.0);
    let mut report = RunReport::new(&[], seed);
    report.values = json!({
        "rows": rows.iter().map(|r| json!({
            "parameter": r.parameter,
            "optimum": r.optimum,
            "baseline": r.baseline,
            "gap": r.gap,
        })).collect::<Vec<_>>(),
    });
    report.diagnostics = json!({
        "k": k,
        "optima_within_k_eps_squared": bound_holds,
        "csv_file": csv.map(|p| p.display().to_string()),
    });
    Ok(Outcome {
        report,
        code: if bound_holds { 0 } else { 1 },
    })
}

pub struct GaussianArgs {
    pub k: f64,
    pub sigma: f64,
    pub bins: usize,
    pub trunc: f64,
    pub sweeps: usize,
    pub normalize_likelihood: bool,
}

pub fn case_wg(a: &GaussianArgs, csv: Option<&PathBuf>, execution: Execution, seed: u64) -> CliResult<Outcome> {
    let cfg = WitsenhausenGaussianConfig {
        k: a.k,
        sigma: a.sigma,
        bins: GaussianBins::uniform(a.bins),
        trunc: a.trunc,
        normalize_likelihood: a.normalize_likelihood,
    };
    let out = run_gaussian_case(&cfg, a.sweeps, 1e-12, execution)?;
    let b = &out.baseline;
    let improved = out.iterate.value <= b.quantized_value + 1e-9;
    let row = teamdp::cases::SweepRow {
        parameter: a.k,
        optimum: out.iterate.value,
        baseline: b.quantized_value,
        gap: b.quantized_value - out.iterate.value,
    };
    if let Some(path) = csv {
        let mut buf = Vec::new();
        write_sweep_csv(&[row], &mut buf).expect("writing to memory");
        write_file(path, std::str::from_utf8(&buf).expect("utf-8 csv"))?;
    }
    let mut report = RunReport::new(&[], seed);
    report.values = json!({
        "iterate_value": out.iterate.value,
        "affine_a": b.a,
        "affine_b": b.b,
        "affine_continuous_value": b.continuous_value,
        "affine_quantized_value": b.quantized_value,
    });
    report.diagnostics = json!({
        "sweep_values": out.iterate.sweep_values,
        "iterate_not_above_baseline": improved,
        "normalize_likelihood": a.normalize_likelihood,
    });
    Ok(Outcome {
        report,
        code: if improved { 0 } else { 1 },
    })
}

pub fn case_pomdp(
    path: &Path,
    horizon: Option<usize>,
    state_cap: usize,
    execution: Execution,
    seed: u64,
) -> CliResult<Outcome> {
    let input = read_input(path)?;
    let mut p = parse::<PomdpFile>(&input, "pomdp")?.to_spec()?;
    if let Some(h) = horizon {
        p.horizon = h;
        p.validate()?;
    }
    let team = build_pomdp_team_with_cap(&p, DEFAULT_TABLE_CAP)?;
    let opts = SolveOptions {
        execution,
        state_cap,
        ..SolveOptions::default()
    };
    let solved = solve_exact(&team, &opts)?;
    let belief = belief_value_iteration(&p)?;
    let diff = (solved.value - belief).abs();
    let mut report = RunReport::new(&[&input], seed);
    report.values = json!({
        "team_value": solved.value,
        "belief_value": belief,
        "difference": diff,
    });
    report.diagnostics = json!({
        "horizon": p.horizon,
        "omega0_size": team.omega_len(),
        "reachable_counts": solved.reachable_counts,
        "dedup_hits": solved.dedup_hits,
        "agree_within_1e-9": diff <= 1e-9,
    });
    report.policy = Some(stage_actions(&team, &solved.policy));
    Ok(Outcome {
        report,
        code: if diff <= 1e-9 { 0 } else { 1 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExampleName {
    /// Two-state tiger POMDP with listen and open actions.
    Tiger,
    /// Binary-noise Witsenhausen team on the default grid.
    Witsenhausen,
    /// Seeded random team with two decision makers and binary spaces.
    Random,
}

/// Writes a bundled example document.
pub fn example(name: ExampleName, horizon: usize, eps: f64, out: &Path, seed: u64) -> CliResult<Outcome> {
    let text = match name {
        ExampleName::Tiger => to_json(&PomdpFile::from_spec(&teamdp::cases::tiger(horizon))),
        ExampleName::Witsenhausen => {
            let cfg = teamdp::cases::WitsenhausenDiscreteConfig::with_default_grid(1.0, eps);
            let w = teamdp::cases::build_discrete_witsenhausen(&cfg)?;
            to_json(&TeamFile::from_spec(&w.spec))
        }
        ExampleName::Random => {
            let cfg = teamdp::random::RandomTeamConfig {
                dms: 2,
                omega: (2, 2),
                y: (2, 2),
                u: (2, 2),
                zero_prob: 0.0,
                static_measurements: false,
            };
            to_json(&TeamFile::from_spec(&teamdp::random::random_team(&mut rng(seed), &cfg)))
        }
    };
    write_file(out, &text)?;
    let mut report = RunReport::new(&[], seed);
    report.values = json!({ "written": out.display().to_string() });
    ok(report)
}
