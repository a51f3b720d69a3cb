use std::fmt::Write as _;
use std::path::Path;

use dibi_core::ci::{decide, theorem_harness, CIQuery, Flavor};
use dibi_core::dibi::{parse, satisfies, SatStrategy};
use dibi_core::finrel::FinRel;
use dibi_core::finstoch::FinStoch;
use dibi_core::kernels::frames::evaluate;
use dibi_core::kernels::random::{random_finrel, random_finstoch, RandomCore, TrialRng};
use dibi_core::kernels::{embed, frame_check, par, seq, FrameCondition, Kernel, Outcome, SubkernelDecision};
use dibi_core::kfile::{to_file, FileInstance, KernelFile, Loaded, Model};
use dibi_core::synvar::{diag_equal, DiagGraph, SynVar};
use dibi_core::varspace::{VarName, VarSet};
use dibi_core::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{Mode, Op, RandomInstance};

/// A command's verdict with its JSON and text renderings.
pub struct Report {
    pub holds: bool,
    pub json: Value,
    pub text: String,
}

fn load(path: &Path) -> Result<Loaded> {
    KernelFile::read(path)?.load()
}

fn verdict(holds: bool, json: Value) -> Report {
    Report { holds, json, text: format!("{holds}\n") }
}

fn var_set(names: &[String]) -> Result<VarSet> {
    names.iter().filter(|n| !n.is_empty()).map(|n| VarName::new(n.as_str())).collect()
}

pub fn check(path: &Path, kernel: &str, formula: &str, mode: Mode, budget: Option<u64>) -> Result<Report> {
    let p = parse(formula)?;
    fn run<M: dibi_core::kernels::Decompose + SubkernelDecision>(m: &Model<M>, kernel: &str, p: &dibi_core::dibi::Formula, mode: Mode, budget: Option<u64>) -> Result<bool> {
        let mut strategy = match mode {
            Mode::Auto => SatStrategy::for_instance(&m.instance),
            Mode::Exact => SatStrategy::exact(),
            Mode::Bounded => SatStrategy::bounded(),
        };
        if let Some(b) = budget {
            strategy.budget = b;
        }
        satisfies(&m.instance, m.kernel(kernel)?, p, &strategy)
    }
    let holds = match load(path)? {
        Loaded::FinStoch(m) => run(&m, kernel, &p, mode, budget)?,
        Loaded::Gauss(m) => run(&m, kernel, &p, mode, budget)?,
        Loaded::SynVar(m, _) => run(&m, kernel, &p, mode, budget)?,
        Loaded::FinRel(_) => return Err(Error::Unsupported("finrel kernels cannot be decomposed for satisfaction".into())),
    };
    Ok(verdict(holds, json!({ "kernel": kernel, "formula": p.to_string(), "satisfied": holds })))
}

pub fn ci(path: &Path, kernel: &str, parts: [&Vec<String>; 4], flavor: Flavor) -> Result<Report> {
    let [w, x, y, u] = parts.map(|p| var_set(p));
    let q = CIQuery::new(w?, x?, y?, u?, flavor)?;
    let holds = match load(path)? {
        Loaded::FinStoch(m) => decide(&m.instance, m.kernel(kernel)?, &q)?,
        Loaded::FinRel(m) => decide(&m.instance, m.kernel(kernel)?, &q)?,
        Loaded::Gauss(m) => decide(&m.instance, m.kernel(kernel)?, &q)?,
        Loaded::SynVar(m, _) => decide(&m.instance, m.kernel(kernel)?, &q)?,
    };
    Ok(verdict(holds, json!({ "kernel": kernel, "query": q, "independent": holds })))
}

fn composite<M: FileInstance>(m: &Model<M>, left: &str, op: Op, right: &str, name: &str) -> Result<(KernelFile, VarSet, VarSet)> {
    let (f, g) = (m.kernel(left)?, m.kernel(right)?);
    let k = match op {
        Op::Seq => seq(&m.instance, f, g)?,
        Op::Par => par(&m.instance, f, g)?,
    };
    Ok((to_file(&m.instance, &[(name.to_string(), &k)], None)?, k.dom().clone(), k.cod().clone()))
}

pub fn compose(path: &Path, left: &str, op: Op, right: &str, output: &Path, name: &str) -> Result<Report> {
    let (file, dom, cod) = match load(path)? {
        Loaded::FinStoch(m) => composite(&m, left, op, right, name)?,
        Loaded::FinRel(m) => composite(&m, left, op, right, name)?,
        Loaded::Gauss(m) => composite(&m, left, op, right, name)?,
        Loaded::SynVar(m, _) => composite(&m, left, op, right, name)?,
    };
    std::fs::write(output, file.to_json() + "\n").map_err(|e| Error::File(format!("{}: {e}", output.display())))?;
    let json = json!({ "output": output.display().to_string(), "kernel": name, "dom": dom, "cod": cod });
    Ok(Report { holds: true, json, text: format!("{name} : {dom} -> {cod} written to {}\n", output.display()) })
}

fn outcome_json(cond: FrameCondition, o: &Outcome) -> Value {
    match o {
        Outcome::Pass => json!({ "condition": cond.name(), "outcome": "pass" }),
        Outcome::Vacuous => json!({ "condition": cond.name(), "outcome": "vacuous" }),
        Outcome::Fail(r) => json!({ "condition": cond.name(), "outcome": "fail", "reason": r }),
    }
}

/// Evaluates every condition whose role names are all kernels of the model,
/// or just the file's own condition when it names one.
fn conditions_of<M: SubkernelDecision>(m: &Model<M>) -> Result<Vec<(FrameCondition, Outcome)>> {
    let conds: Vec<FrameCondition> = match m.condition {
        Some(c) => vec![c],
        None => FrameCondition::ALL.into_iter().filter(|c| c.roles().iter().all(|r| m.kernels.contains_key(*r))).collect(),
    };
    conds
        .into_iter()
        .map(|c| {
            let ks: Vec<Kernel<M>> = c.roles().iter().map(|r| m.kernel(r).cloned()).collect::<Result<_>>()?;
            Ok((c, evaluate(&m.instance, c, &ks)?))
        })
        .collect()
}

pub fn frames_file(path: &Path) -> Result<Report> {
    let results = match load(path)? {
        Loaded::FinStoch(m) => conditions_of(&m)?,
        Loaded::FinRel(m) => conditions_of(&m)?,
        Loaded::Gauss(m) => conditions_of(&m)?,
        Loaded::SynVar(m, _) => conditions_of(&m)?,
    };
    if results.is_empty() {
        return Err(Error::File("no frame condition has all of its kernels in the file".into()));
    }
    let holds = results.iter().all(|(_, o)| !matches!(o, Outcome::Fail(_)));
    let mut text = String::new();
    for (c, o) in &results {
        let _ = match o {
            Outcome::Pass => writeln!(text, "{c}: pass"),
            Outcome::Vacuous => writeln!(text, "{c}: vacuous"),
            Outcome::Fail(r) => writeln!(text, "{c}: FAIL ({r})"),
        };
    }
    let json = json!({
        "file": path.display().to_string(),
        "results": results.iter().map(|(c, o)| outcome_json(*c, o)).collect::<Vec<_>>(),
        "ok": holds,
    });
    Ok(Report { holds, json, text })
}

struct ConditionRun {
    instance: &'static str,
    condition: FrameCondition,
    trials: u64,
    passed: u64,
    vacuous: u64,
    failed: u64,
    counterexample: Option<(u64, String, KernelFile)>,
}

fn run_condition<M, F>(label: &'static str, cond: FrameCondition, make: F, seed: u64, trials: u64, vars: usize) -> Result<ConditionRun>
where
    M: RandomCore + SubkernelDecision + FileInstance,
    F: Fn(&mut TrialRng, &[VarName]) -> M + Sync,
{
    let r = frame_check(cond, make, seed, trials, vars);
    let counterexample = match &r.counterexample {
        None => None,
        Some(c) => {
            let named: Vec<(String, &Kernel<M>)> = cond.roles().iter().map(|s| s.to_string()).zip(&c.kernels).collect();
            Some((c.trial, c.reason.clone(), to_file(&c.instance, &named, Some(cond))?))
        }
    };
    Ok(ConditionRun { instance: label, condition: cond, trials: r.trials, passed: r.passed, vacuous: r.vacuous, failed: r.failed, counterexample })
}

pub fn frames_random(seed: u64, trials: u64, vars: usize, which: RandomInstance, out: Option<&Path>) -> Result<Report> {
    if !(1..=8).contains(&vars) {
        return Err(Error::InvalidValue(format!("--vars must be between 1 and 8, got {vars}")));
    }
    let mut jobs: Vec<(&'static str, FrameCondition)> = Vec::new();
    let labels: &[&'static str] = match which {
        RandomInstance::Finstoch => &["finstoch"],
        RandomInstance::Finrel => &["finrel"],
        RandomInstance::All => &["finstoch", "finrel"],
    };
    for label in labels {
        jobs.extend(FrameCondition::ALL.iter().map(|c| (*label, *c)));
    }
    let runs: Vec<ConditionRun> = jobs
        .into_par_iter()
        .map(|(label, c)| match label {
            "finstoch" => run_condition::<FinStoch, _>(label, c, random_finstoch, seed, trials, vars),
            _ => run_condition::<FinRel, _>(label, c, random_finrel, seed, trials, vars),
        })
        .collect::<Result<_>>()?;
    let mut text = String::new();
    let mut rows = Vec::new();
    for r in &runs {
        let mut row = json!({
            "instance": r.instance,
            "condition": r.condition.name(),
            "trials": r.trials,
            "passed": r.passed,
            "vacuous": r.vacuous,
            "failed": r.failed,
        });
        let status = if r.failed == 0 { "ok" } else { "FAIL" };
        let _ = writeln!(text, "{:<8} {:<17} {status:<4} {} passed, {} vacuous, {} failed", r.instance, r.condition.name(), r.passed, r.vacuous, r.failed);
        if let Some((trial, reason, file)) = &r.counterexample {
            let mut ce = json!({ "trial": trial, "reason": reason, "file": file });
            if let Some(dir) = out {
                let p = dir.join(format!("{}-{}.json", r.instance, r.condition.name()));
                std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&p, file.to_json() + "\n")).map_err(|e| Error::File(format!("{}: {e}", p.display())))?;
                ce["path"] = json!(p.display().to_string());
                let _ = writeln!(text, "  counterexample (trial {trial}, {reason}) written to {}", p.display());
            } else {
                let _ = writeln!(text, "  counterexample at trial {trial}: {reason}");
            }
            row["counterexample"] = ce;
        }
        rows.push(row);
    }
    let passing = runs.iter().filter(|r| r.failed == 0).count();
    let holds = passing == runs.len();
    let _ = writeln!(text, "{passing}/{} conditions pass", runs.len());
    let json = json!({ "seed": seed, "trials": trials, "vars": vars, "conditions": rows, "passing": passing, "total": runs.len(), "ok": holds });
    Ok(Report { holds, json, text })
}

pub fn harness(seed: u64, trials: u64, out: Option<&Path>) -> Result<Report> {
    let report = theorem_harness(seed, trials);
    let mut text = String::new();
    for c in &report.checks {
        let _ = writeln!(text, "finstoch {:<26} {} checked, {} violations", c.name, c.checked, c.violations);
    }
    for c in &report.synvar_checks {
        let _ = writeln!(text, "synvar   {:<26} {} checked, {} violations", c.name, c.checked, c.violations);
    }
    for f in &report.fixed {
        let _ = writeln!(text, "fixed    {:<26} {}", f.name, if f.ok { "ok" } else { "FAIL" });
    }
    for e in &report.errors {
        let _ = writeln!(text, "error    {e}");
    }
    if let (Some(c), Some(p)) = (&report.counterexample, out) {
        std::fs::write(p, c.file.to_json() + "\n").map_err(|e| Error::File(format!("{}: {e}", p.display())))?;
        let _ = writeln!(text, "counterexample for {} written to {}", c.check, p.display());
    }
    let holds = report.ok();
    let json = serde_json::to_value(&report).map_err(|e| Error::InvalidValue(e.to_string()))?;
    Ok(Report { holds, json, text })
}

fn diagram(m: &Model<SynVar>, diagrams: &std::collections::BTreeMap<String, DiagGraph>, name: &str) -> Result<DiagGraph> {
    match diagrams.get(name) {
        Some(g) => Ok(g.clone()),
        None if m.kernels.contains_key(name) => embed(&SynVar, m.kernel(name)?),
        None => Err(Error::File(format!("no diagram or kernel named `{name}`"))),
    }
}

pub fn synvar_eq(path: &Path, left: &str, right: &str) -> Result<Report> {
    let Loaded::SynVar(m, diagrams) = load(path)? else {
        return Err(Error::File("synvar-eq needs a synvar file".into()));
    };
    let (a, b) = (diagram(&m, &diagrams, left)?, diagram(&m, &diagrams, right)?);
    let holds = diag_equal(&a, &b);
    Ok(verdict(holds, json!({ "left": left, "right": right, "equal": holds })))
}
