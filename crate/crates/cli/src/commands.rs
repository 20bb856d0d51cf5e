//! Command implementations: `bounds`, `solve`, `oracle` and
//! `reproduce-paper`.

use serde::Serialize;

use ifolio::bounds::{self, AspirationBounds};
use ifolio::fuzzy::{self, IFGoal, ScalarizedProblem, ShapeKind};
use ifolio::market::{self, MarketModel};
use ifolio::objectives::{self, CriterionId};
use ifolio::oracle::{self, OracleFixture, SampleScheme};
use ifolio::solver::{SolveReport, SolverConfig};
use ifolio::Error;

use crate::config::{Mode, ObjectiveChoice, Problem, RunConfig};
use crate::report::{self, ConfigEcho, OracleSummary, PerformanceRow, RunReport};
use crate::CliError;

/// The bundled seven-stock reference instance.
pub const REFERENCE_INSTANCE: &str = include_str!("../data/example7.model");

/// Published solution rows of the reference study, one per cell.
pub mod reference {
    pub const MV_CRISP: ([f64; 7], f64, f64) = (
        [0.0287, 0.1150, 0.2274, 0.1857, 0.1111, 0.2653, 0.0668],
        0.02184,
        0.0022,
    );
    pub const MV_FUZZY: ([f64; 7], f64, f64) = (
        [0.1078, 0.1268, 0.1740, 0.1526, 0.1257, 0.1981, 0.1150],
        0.0230,
        0.0024,
    );
    pub const MVS_CRISP: ([f64; 7], f64, f64, f64) = (
        [0.0289, 0.1147, 0.2274, 0.1857, 0.1111, 0.2654, 0.0668],
        0.02183,
        0.0022,
        0.3562,
    );
    pub const MVS_FUZZY: ([f64; 7], f64, f64, f64) = (
        [0.1026, 0.3680, 0.1016, 0.1265, 0.1006, 0.1000, 0.1007],
        0.0302,
        0.0041,
        0.3938,
    );
}

pub fn load_input_model(cfg: &RunConfig) -> Result<MarketModel, CliError> {
    cfg.validate_sources()?;
    let model = if let Some(path) = &cfg.model {
        market::load_model(path)?
    } else {
        let series = market::ReturnSeries::from_csv_path(cfg.returns.as_ref().unwrap())?;
        let model = market::estimate_model(&series, cfg.rf.unwrap())?;
        if model.was_repaired() {
            eprintln!(
                "warning: sample covariance was marginally indefinite; \
                 negative eigenvalues clipped to zero"
            );
        }
        model
    };
    Ok(model)
}

fn goals_for(
    cfg: &RunConfig,
    bounds: &AspirationBounds,
    criteria: &[CriterionId],
) -> Result<Vec<IFGoal>, CliError> {
    criteria
        .iter()
        .map(|&c| {
            let (mu, nu) = match cfg.mode {
                // The crisp baseline is pinned to the linear normalization.
                Mode::Crisp => (ShapeKind::Linear, ShapeKind::Linear),
                Mode::Fuzzy => (
                    cfg.mu.kind_for(c.index())?,
                    cfg.nu.kind_for(c.index())?,
                ),
            };
            fuzzy::make_goal(c, bounds, mu, nu).map_err(CliError::Core)
        })
        .collect()
}

fn build_problem(
    model: MarketModel,
    cfg: &RunConfig,
) -> Result<(ScalarizedProblem, AspirationBounds), CliError> {
    let criteria = cfg.problem.criteria();
    let bounds = bounds::compute_bounds_for(&model, criteria)?;
    let goals = goals_for(cfg, &bounds, criteria)?;
    let problem = match cfg.mode {
        Mode::Crisp => ScalarizedProblem::chebyshev(model, goals)?,
        Mode::Fuzzy => ScalarizedProblem::intuitionistic(model, goals)?,
    };
    Ok((problem, bounds))
}

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        n_starts: cfg.starts,
        seed: cfg.seed,
        ..SolverConfig::default()
    }
}

fn config_echo(cfg: &RunConfig) -> ConfigEcho {
    let input = cfg
        .model
        .as_ref()
        .or(cfg.returns.as_ref())
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "embedded".into());
    ConfigEcho {
        input,
        problem: cfg.problem.as_str().into(),
        mode: cfg.mode.as_str().into(),
        mu: cfg.mu.echo(),
        nu: cfg.nu.echo(),
        seed: cfg.seed,
        starts: cfg.starts,
    }
}

fn performance_row(
    model: &MarketModel,
    report: &SolveReport,
    problem: Problem,
) -> Result<PerformanceRow, CliError> {
    let x = &report.x_star;
    let e = -objectives::eval(model, x, CriterionId::NegExpectedReturn)?;
    let v = objectives::eval(model, x, CriterionId::Variance)?;
    let sr = match problem {
        Problem::Mvs => Some(-objectives::eval(model, x, CriterionId::NegSharpe)?),
        Problem::Mv => None,
    };
    Ok(PerformanceRow {
        expected_return: e,
        variance: v,
        sharpe_ratio: sr,
    })
}

/// `bounds`: derive and print the aspiration intervals.
pub fn cmd_bounds(cfg: &RunConfig) -> Result<(), CliError> {
    let model = load_input_model(cfg)?;
    let bounds = bounds::compute_bounds_for(&model, cfg.problem.criteria())?;
    print!("{}", report::format_bounds(&bounds, model.labels()));
    if let Some(path) = &cfg.out {
        report::write_json(path, &bounds)?;
        println!("bounds written to {}", path.display());
    }
    Ok(())
}

/// `solve`: full pipeline from model to compromise portfolio.
pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let model = load_input_model(cfg)?;
    let labels = model.labels().to_vec();
    let (problem, bounds) = build_problem(model, cfg)?;

    let (mut solve, failure) = match fuzzy::solve_scalarized(&problem, &solver_config(cfg)) {
        Ok(report) => (report, false),
        Err(Error::SolverFailure { report }) => (*report, true),
        Err(other) => return Err(other.into()),
    };
    if cfg.problem == Problem::Mv {
        // The bi-criteria report does not carry a Sharpe column.
        solve.criterion_values = None;
    }

    let performance = performance_row(problem.model(), &solve, cfg.problem)?;
    let oracle_summary = if cfg.oracle_check {
        Some(run_oracle_check(&problem, &solve, cfg)?)
    } else {
        None
    };

    print!(
        "{}",
        report::format_solution(
            &labels,
            &solve.x_star.to_vec(),
            &performance,
            solve.objective,
            solve.converged,
        )
    );
    println!(
        "components at solution: [{}]",
        solve
            .membership_levels
            .as_ref()
            .map(|levels| levels
                .iter()
                .map(|l| format!("{l:.6}"))
                .collect::<Vec<_>>()
                .join(", "))
            .unwrap_or_default()
    );
    if let Some(o) = &oracle_summary {
        println!(
            "oracle: min {:.8} over {} samples (gap {:+.2e})",
            o.oracle_min, o.evaluated, o.gap
        );
    }

    let run = RunReport {
        config: config_echo(cfg),
        bounds,
        solve,
        performance,
        oracle: oracle_summary,
    };
    if let Some(path) = &cfg.out {
        report::write_json(path, &run)?;
        println!("report written to {}", path.display());
    }
    if failure {
        return Err(CliError::Core(Error::SolverFailure {
            report: Box::new(run.solve),
        }));
    }
    Ok(())
}

fn run_oracle_check(
    problem: &ScalarizedProblem,
    solve: &SolveReport,
    cfg: &RunConfig,
) -> Result<OracleSummary, CliError> {
    let scheme = SampleScheme::Dirichlet {
        count: cfg.samples,
        seed: cfg.seed,
    };
    let cloud = oracle::sample(scheme, problem.model().n_assets(), None)?;
    let sampled = oracle::oracle_min(|x| Ok(fuzzy::eval_phi(problem, x)?.value), &cloud)?;
    Ok(OracleSummary {
        scheme: format!("dirichlet:{}", cfg.samples),
        seed: cfg.seed,
        evaluated: sampled.evaluated,
        oracle_min: sampled.value,
        solver_value: solve.objective,
        gap: sampled.value - solve.objective,
    })
}

/// `oracle`: brute-force sweep of one objective, emitted as a fixture.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let model = load_input_model(cfg)?;
    let n = model.n_assets();
    let scheme = match cfg.grid {
        Some(resolution) => SampleScheme::Grid { resolution },
        None => SampleScheme::Dirichlet {
            count: cfg.samples,
            seed: cfg.seed,
        },
    };
    let cloud = oracle::sample(scheme, n, None)?;

    let result = match cfg.objective {
        ObjectiveChoice::Criterion(c) => {
            oracle::oracle_min(|x| objectives::eval(&model, x, c), &cloud)?
        }
        ObjectiveChoice::Phi => {
            let (problem, _) = build_problem(model, cfg)?;
            oracle::oracle_min(|x| Ok(fuzzy::eval_phi(&problem, x)?.value), &cloud)?
        }
    };
    let fixture = OracleFixture::new(&cloud, cfg.objective.label(), &result);
    println!(
        "oracle minimum of {} = {:.10} over {} points ({} skipped)",
        fixture.objective, fixture.best_value, fixture.evaluated, fixture.skipped
    );
    match &cfg.out {
        Some(path) => {
            report::write_json(path, &fixture)?;
            println!("fixture written to {}", path.display());
        }
        None => print!("{}", report::to_json(&fixture)?),
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceRow {
    pub expected_return: f64,
    pub variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sharpe_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub problem: String,
    pub mode: String,
    pub weights: Vec<f64>,
    pub objective: f64,
    pub performance: PerformanceRow,
    pub reference: ReferenceRow,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    pub cells: Vec<CellReport>,
    pub checks: Vec<CheckReport>,
}

/// `reproduce-paper`: solve all four cells of the reference experiment,
/// print them against the published rows and flag every tolerance check.
pub fn cmd_reproduce(out: Option<&std::path::Path>) -> Result<ReproduceReport, CliError> {
    let model = market::load_model_str(REFERENCE_INSTANCE)?;
    let mut checks: Vec<CheckReport> = Vec::new();

    // The bundled risk-free rate is inferred, not published; re-derive it
    // from both tri-criteria reference rows before trusting the instance.
    for (name, (_, e, v, sr)) in [
        ("rf-consistency-crisp", reference::MVS_CRISP),
        ("rf-consistency-fuzzy", reference::MVS_FUZZY),
    ]
    .iter()
    .map(|(n, row)| (*n, *row))
    {
        let implied = e - sr * v.sqrt();
        let gap = (implied - model.risk_free_rate()).abs();
        checks.push(CheckReport {
            name: name.into(),
            passed: gap < 6e-4,
            details: format!(
                "implied rf {implied:.5} vs bundled {:.5} (gap {gap:.1e})",
                model.risk_free_rate()
            ),
        });
    }

    let mut cells = Vec::new();
    let mut fuzzy_mvs: Option<(SolveReport, ScalarizedProblem)> = None;
    let mut crisp_mvs_performance: Option<PerformanceRow> = None;
    let mut crisp_mvs_weights: Option<Vec<f64>> = None;

    for problem_kind in [Problem::Mv, Problem::Mvs] {
        for mode in [Mode::Crisp, Mode::Fuzzy] {
            let cfg = RunConfig {
                problem: problem_kind,
                mode,
                ..RunConfig::default()
            };
            let (problem, _) = build_problem(model.clone(), &cfg)?;
            let solve = fuzzy::solve_scalarized(&problem, &solver_config(&cfg))?;
            let performance = performance_row(problem.model(), &solve, problem_kind)?;

            let reference = match (problem_kind, mode) {
                (Problem::Mv, Mode::Crisp) => {
                    let (_, e, v) = reference::MV_CRISP;
                    ReferenceRow {
                        expected_return: e,
                        variance: v,
                        sharpe_ratio: None,
                    }
                }
                (Problem::Mv, Mode::Fuzzy) => {
                    let (_, e, v) = reference::MV_FUZZY;
                    ReferenceRow {
                        expected_return: e,
                        variance: v,
                        sharpe_ratio: None,
                    }
                }
                (Problem::Mvs, Mode::Crisp) => {
                    let (_, e, v, sr) = reference::MVS_CRISP;
                    ReferenceRow {
                        expected_return: e,
                        variance: v,
                        sharpe_ratio: Some(sr),
                    }
                }
                (Problem::Mvs, Mode::Fuzzy) => {
                    let (_, e, v, sr) = reference::MVS_FUZZY;
                    ReferenceRow {
                        expected_return: e,
                        variance: v,
                        sharpe_ratio: Some(sr),
                    }
                }
            };

            if (problem_kind, mode) == (Problem::Mvs, Mode::Crisp) {
                crisp_mvs_performance = Some(performance.clone());
                crisp_mvs_weights = Some(solve.x_star.to_vec());
            }

            cells.push(CellReport {
                problem: problem_kind.as_str().into(),
                mode: mode.as_str().into(),
                weights: solve.x_star.to_vec(),
                objective: solve.objective,
                performance: performance.clone(),
                reference,
            });

            if (problem_kind, mode) == (Problem::Mvs, Mode::Fuzzy) {
                fuzzy_mvs = Some((solve, problem));
            }
        }
    }

    let (fuzzy_solve, fuzzy_problem) = fuzzy_mvs.expect("tri-criteria fuzzy cell ran");
    let fuzzy_perf = cells
        .iter()
        .find(|c| c.problem == "mvs" && c.mode == "fuzzy")
        .map(|c| c.performance.clone())
        .expect("cell recorded");

    // Reference-row tolerance bands for the fuzzy tri-criteria cell.
    let (_, ref_e, ref_v, ref_sr) = reference::MVS_FUZZY;
    checks.push(band_check(
        "fuzzy-mvs-return-band",
        fuzzy_perf.expected_return,
        ref_e,
        0.10,
    ));
    checks.push(band_check(
        "fuzzy-mvs-sharpe-band",
        fuzzy_perf.sharpe_ratio.unwrap(),
        ref_sr,
        0.05,
    ));
    checks.push(band_check(
        "fuzzy-mvs-variance-band",
        fuzzy_perf.variance,
        ref_v,
        0.25,
    ));

    // The published crisp compromise takes less risk than the fuzzy one.
    let crisp_perf = crisp_mvs_performance.expect("crisp cell ran");
    checks.push(CheckReport {
        name: "crisp-mvs-risk".into(),
        passed: crisp_perf.variance <= reference::MVS_FUZZY.2 + 1e-12,
        details: format!(
            "V(crisp) = {:.6}, reference fuzzy V = {:.4}",
            crisp_perf.variance,
            reference::MVS_FUZZY.2
        ),
    });

    // Soft goals can only improve attainment: Phi at the fuzzy solution is
    // no worse than Phi at the crisp compromise.
    let crisp_x = ifolio::PortfolioWeights::new(crisp_mvs_weights.expect("crisp cell ran"))
        .map_err(CliError::Core)?;
    let phi_at_crisp = fuzzy::eval_phi(&fuzzy_problem, &crisp_x)?.value;
    checks.push(CheckReport {
        name: "fuzzy-attainment".into(),
        passed: fuzzy_solve.objective <= phi_at_crisp + 1e-12,
        details: format!(
            "Phi(fuzzy) = {:.8} vs Phi(crisp) = {:.8}",
            fuzzy_solve.objective, phi_at_crisp
        ),
    });

    // Oracle cross-checks on the fuzzy tri-criteria cell.
    let cloud = oracle::sample(
        SampleScheme::Dirichlet {
            count: 1_000_000,
            seed: 42,
        },
        model.n_assets(),
        None,
    )?;
    let sampled = oracle::oracle_min(|x| Ok(fuzzy::eval_phi(&fuzzy_problem, x)?.value), &cloud)?;
    checks.push(CheckReport {
        name: "oracle-no-better-point".into(),
        passed: sampled.value >= fuzzy_solve.objective - 1e-9,
        details: format!(
            "sampled min {:.8} vs solver {:.8}",
            sampled.value, fuzzy_solve.objective
        ),
    });
    checks.push(CheckReport {
        name: "oracle-corroborates".into(),
        passed: sampled.value <= fuzzy_solve.objective + 1e-3,
        details: format!(
            "sampling gap {:+.2e} (tolerance 1e-3)",
            sampled.value - fuzzy_solve.objective
        ),
    });

    let pareto = oracle::check_weak_pareto(&model, &fuzzy_solve.x_star, &cloud, 1e-6)?;
    checks.push(CheckReport {
        name: "weak-pareto".into(),
        passed: pareto,
        details: format!("{} samples, eps 1e-6", cloud.points.len()),
    });

    let report = ReproduceReport { cells, checks };
    print_reproduce(&report, model.labels());
    if let Some(path) = out {
        report::write_json(path, &report)?;
        println!("report written to {}", path.display());
    }
    Ok(report)
}

fn band_check(name: &str, ours: f64, reference: f64, band: f64) -> CheckReport {
    let rel = (ours - reference).abs() / reference.abs();
    CheckReport {
        name: name.into(),
        passed: rel <= band,
        details: format!(
            "ours {ours:.4} vs reference {reference:.4} (off by {:.1}%, band {:.0}%)",
            rel * 100.0,
            band * 100.0
        ),
    }
}

fn print_reproduce(report: &ReproduceReport, labels: &[String]) {
    println!("reference experiment, four cells (linear shapes, seed 42):");
    println!();
    for cell in &report.cells {
        println!("[{} / {}]  objective = {:.8}", cell.problem, cell.mode, cell.objective);
        let rows: Vec<String> = labels
            .iter()
            .zip(cell.weights.iter())
            .map(|(l, w)| format!("{l}={w:.4}"))
            .collect();
        println!("  weights: {}", rows.join("  "));
        match cell.performance.sharpe_ratio {
            Some(sr) => println!(
                "  ours:      E = {:.5}  V = {:.5}  Sr = {:.5}",
                cell.performance.expected_return, cell.performance.variance, sr
            ),
            None => println!(
                "  ours:      E = {:.5}  V = {:.5}",
                cell.performance.expected_return, cell.performance.variance
            ),
        }
        match cell.reference.sharpe_ratio {
            Some(sr) => println!(
                "  reference: E = {:.5}  V = {:.5}  Sr = {:.5}",
                cell.reference.expected_return, cell.reference.variance, sr
            ),
            None => println!(
                "  reference: E = {:.5}  V = {:.5}",
                cell.reference.expected_return, cell.reference.variance
            ),
        }
        println!();
    }
    println!("checks:");
    for check in &report.checks {
        println!(
            "  [{}] {:<24} {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.details
        );
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        println!("\n{failed} check(s) failed");
    } else {
        println!("\nall checks passed");
    }
}
