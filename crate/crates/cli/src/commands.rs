//! Subcommand definitions and handlers.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pcrrr::baselines::fit_method;
use pcrrr::experiment::run_study;
use pcrrr::metrics::{aggregate, EvalRecord, MeanSe, SummaryRow};
use pcrrr::selection::{cross_validate, refit_chosen, CvPlan, CvResult, LambdaGrid};
use pcrrr::simgen::{scenario_grid, Scenario};
use pcrrr::{predict, DataPair, GroupPartition, Hyperparameters, Matrix, Method, SolverConfig};

use crate::artifact::ModelArtifact;
use crate::error::{CliError, CliResult};
use crate::io::{read_groups, read_table, write_table, write_table_to, Table};

#[derive(Debug, Parser)]
#[command(name = "pcrrr", version, about = "Principal-component-guided sparse reduced-rank regression")]
pub struct Cli {
    /// Worker threads for cross-validation and simulation (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and save it. Runs cross-validation first when --lambda is
    /// omitted or any grid flag has several values.
    Fit(FitArgs),
    /// Predict responses for new predictors with a saved model.
    Predict(PredictArgs),
    /// Cross-validate a hyperparameter grid and report the table.
    Cv(FitArgs),
    /// Run simulation replications and write records and summary tables.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Estimator.
    #[arg(long, default_value = "proposed")]
    pub method: Method,
    /// Sparsity weight(s), comma separated. Omit for an automatic grid.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Principal-component weight(s).
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Elastic-net mixing value(s) for melastic and errr.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Rank(s) of the reduced-rank estimators.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub rank: Vec<usize>,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Points in the automatic λ grid.
    #[arg(long, default_value_t = 30)]
    pub lambda_grid_size: usize,
    /// Seed for fold assignment and initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum outer iterations per fit.
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// Relative objective change that stops the solver.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Predictor table (header row, one column per predictor).
    #[arg(long)]
    pub x: PathBuf,
    /// Response table (header row, one column per response).
    #[arg(long)]
    pub y: PathBuf,
    /// Group file with columns (predictor, group). Default: one group.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output path: the model file for `fit`, the CV table for `cv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Saved model.
    #[arg(long)]
    pub model: PathBuf,
    /// Predictor table with the model's predictor columns.
    #[arg(long)]
    pub x: PathBuf,
    /// Output table (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario labels or zero-based grid indices, comma separated, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "ungrouped-p200-n100-tau0.1")]
    pub scenario: Vec<String>,
    /// Replications per scenario.
    #[arg(long, default_value_t = 2)]
    pub replications: usize,
    /// Methods to compare (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<Method>,
    /// Principal-component weight grid.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Elastic-net mixing grid.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Points in the automatic λ grid.
    #[arg(long, default_value_t = 30)]
    pub lambda_grid_size: usize,
    /// Base seed; every replication derives its own.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for records.csv, summary.csv and summary.txt.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // a pool may already exist when called more than once in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Predict(args) => cmd_predict(&args),
        Command::Cv(args) => cmd_cv(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    }
}

struct Inputs {
    data: DataPair,
    x_names: Vec<String>,
    y_names: Vec<String>,
    groups: GroupPartition,
    group_labels: Vec<String>,
}

fn load_inputs(args: &FitArgs) -> CliResult<Inputs> {
    let Table { names: x_names, values: x } = read_table(&args.x)?;
    let Table { names: y_names, values: y } = read_table(&args.y)?;
    if x.nrows() != y.nrows() {
        return Err(CliError::Data(format!(
            "{} has {} rows but {} has {}",
            args.x.display(),
            x.nrows(),
            args.y.display(),
            y.nrows()
        )));
    }
    let data = DataPair::new(x, y)?;
    let (groups, group_labels) = match &args.groups {
        Some(path) => read_groups(path, &x_names)?,
        None => (GroupPartition::single(data.p()), vec!["all".into()]),
    };
    Ok(Inputs {
        data,
        x_names,
        y_names,
        groups,
        group_labels,
    })
}

fn solver_config(grid: &GridArgs) -> SolverConfig {
    SolverConfig {
        max_outer_iterations: grid.max_iterations,
        objective_tolerance: grid.tolerance,
        seed: grid.seed,
        ..SolverConfig::default()
    }
}

fn cv_plan(grid: &GridArgs) -> CvPlan {
    let defaults = CvPlan::default();
    CvPlan {
        folds: grid.folds,
        lambda_grid: if grid.lambda.is_empty() {
            LambdaGrid::Auto {
                size: grid.lambda_grid_size,
            }
        } else {
            LambdaGrid::Explicit(grid.lambda.clone())
        },
        theta_grid: if grid.theta.is_empty() {
            defaults.theta_grid
        } else {
            grid.theta.clone()
        },
        alpha_grid: if grid.alpha.is_empty() {
            defaults.alpha_grid
        } else {
            grid.alpha.clone()
        },
        rank_grid: grid.rank.clone(),
        seed: grid.seed,
        ..defaults
    }
}

fn needs_cv(grid: &GridArgs) -> bool {
    grid.lambda.len() != 1 || grid.theta.len() > 1 || grid.alpha.len() > 1 || grid.rank.len() > 1
}

fn run_cv(inputs: &Inputs, grid: &GridArgs) -> CliResult<(CvPlan, CvResult)> {
    let plan = cv_plan(grid);
    let cv = cross_validate(&inputs.data, &inputs.groups, &plan, grid.method, &solver_config(grid))?;
    if !cv.chosen_score().mean_error.is_finite() {
        let why = cv.chosen_score().failure.clone().unwrap_or_default();
        return Err(CliError::Numerical(format!("every grid cell failed ({why})")));
    }
    Ok((plan, cv))
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| CliError::Usage("fit needs --out for the model file".into()))?;
    let inputs = load_inputs(args)?;
    let config = solver_config(&args.grid);
    let (report, train) = if needs_cv(&args.grid) {
        let (plan, cv) = run_cv(&inputs, &args.grid)?;
        let cell = cv.chosen_cell();
        println!(
            "cross-validation chose lambda={} theta={} alpha={} rank={} (mean error {})",
            cell.lambda,
            cell.theta,
            cell.alpha,
            cell.rank,
            cv.chosen_score().mean_error
        );
        refit_chosen(&inputs.data, &inputs.groups, &plan, &cv, &config)?
    } else {
        let hp = Hyperparameters {
            lambda: args.grid.lambda[0],
            theta: args.grid.theta.first().copied().unwrap_or(0.0),
            alpha: args.grid.alpha.first().copied().unwrap_or(1.0),
            rank: args.grid.rank[0],
        };
        let train = inputs.data.center_columns();
        (fit_method(args.grid.method, &train, &inputs.groups, &hp, &config)?, train)
    };
    let artifact = ModelArtifact::new(
        &report,
        inputs.x_names,
        inputs.y_names,
        inputs.groups,
        inputs.group_labels,
        train.centering().cloned(),
    );
    artifact.save(out)?;
    println!(
        "method={} active_rows={} of {} objective={} iterations={} converged={}",
        report.method,
        report.active_rows.len(),
        train.p(),
        report.final_objective(),
        report.iterations,
        report.converged
    );
    Ok(())
}

/// Predictions of a saved model for the columns of `x`, which must carry
/// the model's predictor names in order.
pub fn predict_table(model: &ModelArtifact, x: &Table) -> CliResult<Matrix> {
    if x.names != model.predictors {
        return Err(CliError::Data(format!(
            "predictor columns {:?} do not match the model's {:?}",
            x.names, model.predictors
        )));
    }
    Ok(predict(&x.values, &model.factors()?, model.centering.as_ref())?)
}

pub fn cmd_predict(args: &PredictArgs) -> CliResult<()> {
    let model = ModelArtifact::load(&args.model)?;
    let x = read_table(&args.x)?;
    let predicted = predict_table(&model, &x)?;
    match &args.out {
        Some(path) => write_table(path, &model.responses, &predicted),
        None => write_table_to(&mut std::io::stdout().lock(), &model.responses, &predicted),
    }
}

fn cv_table_csv(cv: &CvResult, folds: usize) -> String {
    let mut s = String::from("lambda,theta,alpha,rank,mean_error,se");
    for f in 1..=folds {
        let _ = write!(s, ",fold{f}");
    }
    s.push_str(",chosen\n");
    for (i, row) in cv.table.iter().enumerate() {
        let c = &row.cell;
        let _ = write!(s, "{},{},{},{},{},{}", c.lambda, c.theta, c.alpha, c.rank, row.mean_error, row.se);
        for e in &row.fold_errors {
            let _ = write!(s, ",{e}");
        }
        let _ = writeln!(s, ",{}", i == cv.chosen);
    }
    s
}

pub fn cmd_cv(args: &FitArgs) -> CliResult<()> {
    let inputs = load_inputs(args)?;
    let (plan, cv) = run_cv(&inputs, &args.grid)?;
    let table = cv_table_csv(&cv, plan.folds);
    match &args.out {
        Some(path) => std::fs::write(path, table)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => print!("{table}"),
    }
    let cell = cv.chosen_cell();
    eprintln!(
        "chosen: lambda={} theta={} alpha={} rank={} mean_error={} se={}",
        cell.lambda,
        cell.theta,
        cell.alpha,
        cell.rank,
        cv.chosen_score().mean_error,
        cv.chosen_score().se
    );
    Ok(())
}

/// Resolves `all`, labels and zero-based indices against the scenario grid.
pub fn select_scenarios(filters: &[String]) -> CliResult<Vec<(usize, Scenario)>> {
    let grid = scenario_grid();
    if filters.iter().any(|f| f == "all") {
        return Ok(grid.into_iter().enumerate().collect());
    }
    let mut out: Vec<(usize, Scenario)> = Vec::new();
    for f in filters {
        let idx = match f.parse::<usize>() {
            Ok(i) if i < grid.len() => i,
            Ok(i) => {
                return Err(CliError::Usage(format!(
                    "scenario index {i} out of range (0..{})",
                    grid.len()
                )))
            }
            Err(_) => grid
                .iter()
                .position(|s| s.label() == *f)
                .ok_or_else(|| CliError::Usage(format!("unknown scenario {f:?}")))?,
        };
        if !out.iter().any(|(i, _)| *i == idx) {
            out.push((idx, grid[idx]));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no scenarios selected".into()));
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn records_csv(records: &[EvalRecord]) -> String {
    let mut s = String::from("scenario,method,replication,mse_b,mse_y,tpr,tnr,mspe\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.method,
            r.replication,
            opt(r.mse_b),
            opt(r.mse_y),
            opt(r.tpr),
            opt(r.tnr),
            opt(r.mspe)
        );
    }
    s
}

fn pair(m: Option<MeanSe>) -> [String; 2] {
    match m {
        Some(m) => [m.mean.to_string(), m.se.to_string()],
        None => [String::new(), String::new()],
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(
        "scenario,method,replications,mse_b,mse_b_se,mse_y,mse_y_se,tpr,tpr_se,tnr,tnr_se,mspe,mspe_se\n",
    );
    for r in rows {
        let cols: Vec<String> = [r.mse_b, r.mse_y, r.tpr, r.tnr, r.mspe]
            .into_iter()
            .flat_map(pair)
            .collect();
        let _ = writeln!(s, "{},{},{},{}", r.scenario, r.method, r.replications, cols.join(","));
    }
    s
}

/// Fixed-width text table per scenario: mean (SE) for each metric.
pub fn summary_text(rows: &[SummaryRow]) -> String {
    let cell = |m: Option<MeanSe>| match m {
        Some(m) => format!("{:.4} ({:.4})", m.mean, m.se),
        None => "-".into(),
    };
    let mut s = String::new();
    let mut current = "";
    for r in rows {
        if r.scenario != current {
            current = &r.scenario;
            let _ = writeln!(s, "\n{} ({} replications)", r.scenario, r.replications);
            let _ = writeln!(
                s,
                "{:<10} {:>17} {:>17} {:>17} {:>17} {:>17}",
                "method", "MSE_B", "MSE_Y", "TPR", "TNR", "MSPE"
            );
        }
        let _ = writeln!(
            s,
            "{:<10} {:>17} {:>17} {:>17} {:>17} {:>17}",
            r.method.name(),
            cell(r.mse_b),
            cell(r.mse_y),
            cell(r.tpr),
            cell(r.tnr),
            cell(r.mspe)
        );
    }
    s
}

fn write_file(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    if args.replications == 0 {
        return Err(CliError::Usage("--replications must be at least 1".into()));
    }
    let scenarios = select_scenarios(&args.scenario)?;
    let methods: Vec<Method> = if args.method.is_empty() {
        Method::ALL.to_vec()
    } else {
        let mut m = args.method.clone();
        m.sort();
        m.dedup();
        m
    };
    let defaults = CvPlan::default();
    let plan = CvPlan {
        folds: args.folds,
        lambda_grid: LambdaGrid::Auto {
            size: args.lambda_grid_size,
        },
        theta_grid: if args.theta.is_empty() {
            defaults.theta_grid.clone()
        } else {
            args.theta.clone()
        },
        alpha_grid: if args.alpha.is_empty() {
            defaults.alpha_grid.clone()
        } else {
            args.alpha.clone()
        },
        ..defaults
    };
    let records = run_study(
        &scenarios,
        args.replications,
        args.seed,
        &methods,
        &plan,
        &SolverConfig::default(),
    )
    .map_err(|f| {
        CliError::from(f.source.clone()).context(format!(
            "scenario {}, replication {}, method {}",
            f.scenario, f.replication, f.method
        ))
    })?;
    let summary = aggregate(&records)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    write_file(&args.out, "records.csv", &records_csv(&records))?;
    write_file(&args.out, "summary.csv", &summary_csv(&summary))?;
    let text = summary_text(&summary);
    write_file(&args.out, "summary.txt", text.trim_start())?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
    Ok(())
}
