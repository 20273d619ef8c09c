use std::path::{Path, PathBuf};

use budgeval_core::budget::{build_curve, default_grid, parse_grid, CurveMetric, CurveSpec, UNIT_TEST_POLICY};
use budgeval_core::corpus::{load_generations, load_problems};
use budgeval_core::ranking::ranked_vectors;
use budgeval_core::{BudgetCurve, BudgetKind, BudgetUnit, CostModel, RankingPolicy, ResultMatrix};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::output::{file_safe, write_atomic, write_csv};
use crate::score::cap_policy;
use crate::{BudgetArgs, CurveArgs, RankCurveArgs};

pub const AXES_FILE: &str = "axes.json";
pub const CURVE_HEADER: [&str; 5] = ["point", "budget_value", "effective_k", "score", "clamped"];

pub fn curve_file_name(model: &str, policy_id: &str, kind: BudgetKind) -> String {
    format!("curve_{}_{}_{}.csv", file_safe(model), file_safe(policy_id), kind)
}

struct Setup {
    cost_model: CostModel,
    grid: Vec<f64>,
}

fn setup(args: &BudgetArgs) -> Result<Setup> {
    let cost_model = CostModel::load(&args.cost_model)?;
    let grid = match &args.grid {
        Some(text) => parse_grid(text)?,
        None => default_grid(),
    };
    crate::check_out_dir(&args.out)?;
    Ok(Setup { cost_model, grid })
}

fn spec(args: &BudgetArgs, model: &str, policy_id: &str, greedy_score: Option<f64>) -> CurveSpec {
    CurveSpec {
        model: model.to_string(),
        policy_id: policy_id.to_string(),
        kind: args.budget_kind,
        unit: args.unit,
        cap: cap_policy(args.no_cap),
        greedy_score,
    }
}

fn write_curve(out: &Path, curve: &BudgetCurve) -> Result<PathBuf> {
    let mut rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| {
            vec![
                "grid".to_string(),
                p.budget_value.to_string(),
                p.effective_k.to_string(),
                p.score.to_string(),
                p.clamped.to_string(),
            ]
        })
        .collect();
    if let Some(g) = curve.greedy_point {
        rows.push(vec![
            "greedy".to_string(),
            g.budget_value.to_string(),
            "1".to_string(),
            g.score.to_string(),
            "false".to_string(),
        ]);
    }
    let path = out.join(curve_file_name(&curve.model, &curve.policy_id, curve.kind));
    write_csv(&path, &CURVE_HEADER, &rows)?;
    if curve.points.is_empty() {
        log::warn!("{}: no grid budget affords a single generation", path.display());
    }
    Ok(path)
}

fn axis_label(kind: BudgetKind, unit: BudgetUnit, reference: &str) -> String {
    match (kind, unit) {
        (BudgetKind::Flops, BudgetUnit::Normalized) => format!("FLOPs budget (multiples of one {reference} generation)"),
        (BudgetKind::Time, BudgetUnit::Normalized) => format!("time budget (multiples of one {reference} generation)"),
        (BudgetKind::Flops, BudgetUnit::Absolute) => "FLOPs budget (TFLOPs)".to_string(),
        (BudgetKind::Time, BudgetUnit::Absolute) => "time budget (seconds)".to_string(),
    }
}

/// Plot description shared by every curve file in the output directory.
fn write_axes(args: &BudgetArgs, setup: &Setup, metric: &str, files: &[PathBuf]) -> Result<()> {
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let axes = json!({
        "x": {
            "label": axis_label(args.budget_kind, args.unit, setup.cost_model.reference_model()),
            "scale": "log2",
            "budget_kind": args.budget_kind.to_string(),
            "unit": args.unit.to_string(),
            "grid": setup.grid,
        },
        "y": {
            "label": metric,
            "unit": "percent",
            "range": [0.0, 100.0],
        },
        "series": names,
        "columns": CURVE_HEADER,
        "greedy_marker": "star",
    });
    let text = serde_json::to_string_pretty(&axes).expect("json values serialize");
    write_atomic(&args.out.join(AXES_FILE), |w| writeln!(w, "{text}"))
}

pub fn run_pass(args: &CurveArgs) -> Result<()> {
    let setup = setup(&args.budget)?;
    let mut files = Vec::new();
    for named in &args.verdicts {
        setup.cost_model.entry(&named.name)?;
        let matrix = ResultMatrix::load(&named.path)?;
        let counts = matrix.pass_counts();
        let spec = spec(&args.budget, &named.name, UNIT_TEST_POLICY, matrix.greedy_pass_at_1());
        let curve = build_curve(&setup.cost_model, &spec, CurveMetric::Pass(&counts), &setup.grid)?;
        files.push(write_curve(&args.budget.out, &curve)?);
    }
    write_axes(&args.budget, &setup, "pass@budget (%)", &files)?;
    for f in &files {
        println!("{}", f.display());
    }
    Ok(())
}

pub fn run_rank(args: &RankCurveArgs) -> Result<()> {
    let policies = args
        .policy
        .iter()
        .map(|p| RankingPolicy::parse(p, args.seed))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let setup = setup(&args.budget)?;
    let model = &args.verdicts.name;
    setup.cost_model.entry(model)?;

    let problems = load_problems(&args.problems)?;
    let mut generations = load_generations(&args.generations, &problems)?;
    for s in &args.scores {
        generations = generations.attach_scores(&s.path, &s.name)?;
    }
    let matrix = ResultMatrix::load(&args.verdicts.path)?;
    if let Some(stray) = matrix.problems().keys().find(|id| !problems.contains(id)) {
        return Err(CliError::validation(format!(
            "{}: verdicts for unknown problem `{stray}`",
            args.verdicts.path.display()
        )));
    }
    let greedy = matrix.greedy_pass_at_1();

    let mut files = Vec::new();
    for policy in &policies {
        let vectors = ranked_vectors(policy, &generations, &matrix)?;
        let spec = spec(&args.budget, model, &policy.id, greedy);
        let curve = build_curve(&setup.cost_model, &spec, CurveMetric::Rank(&vectors), &setup.grid)?;
        files.push(write_curve(&args.budget.out, &curve)?);
    }
    write_axes(&args.budget, &setup, "rank-score@budget (%)", &files)?;
    for f in &files {
        println!("{}", f.display());
    }
    Ok(())
}
