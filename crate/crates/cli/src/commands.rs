use std::fs::File;
use std::path::Path;

use privacy_pricing::market::{compare_demand_modes, prob_buy_separate, BundleKind};
use privacy_pricing::oracle::{
    estimate_buy_probability, grid_maximize, simulate_market, DemandRegion, MarketPoint,
    ProfitSurface, SimulationSpec,
};
use privacy_pricing::sharing::core_interval_two;
use privacy_pricing::utility::read_samples;
use privacy_pricing::{
    core_check, fit_quality_curve, gross_profit_bundle, gross_profit_separate,
    optimal_fee_fixed_privacy, optimize_bundle, optimize_separate, shapley_allocation, BundleSpec,
    CharacteristicFunction, DemandMode, FitOptions, OptimizeOptions, OptimumBundle,
    SeparateScenario,
};

use crate::error::{CliError, Result};
use crate::report::{Cell, Table};
use crate::scenario::{NamedService, RawScenario, Scenario};
use crate::{row, Command, GlobalArgs, Market, Outcome};

pub const FIT_COLUMNS: &[&str] = &[
    "alpha1",
    "alpha2",
    "alpha3",
    "rss",
    "iterations",
    "converged",
    "samples",
];
pub const OPTIMIZE_COLUMNS: &[&str] = &[
    "target",
    "kind",
    "r1",
    "r2",
    "fee",
    "profit",
    "data_cost",
    "revenue",
    "interior",
    "method",
    "clamped",
    "oracle_delta",
];
pub const DECIDE_COLUMNS: &[&str] = &[
    "bundle",
    "kind",
    "bundle_profit",
    "first",
    "first_profit",
    "second",
    "second_profit",
    "separate_total",
    "recommend_bundle",
];
pub const SHARE_COLUMNS: &[&str] = &[
    "player",
    "standalone",
    "shapley",
    "core_lower",
    "core_upper",
    "in_core",
    "feasible_total",
];
pub const SIMULATE_COLUMNS: &[&str] = &[
    "target",
    "r1",
    "r2",
    "fee",
    "analytic_profit",
    "sim_mean",
    "std_error",
    "z_score",
    "draws",
    "noisy_reports",
    "noise_variance",
];
pub const VERIFY_COLUMNS: &[&str] = &[
    "target",
    "method",
    "r1",
    "r2",
    "fee",
    "profit",
    "oracle_profit",
    "oracle_r1",
    "oracle_r2",
    "oracle_fee",
    "delta",
    "cell_distance",
    "certified",
];
pub const SWEEP_COLUMNS: &[&str] = &[
    "value",
    "r1",
    "r2",
    "fee",
    "profit",
    "data_cost",
    "revenue",
    "status",
];
pub const DEMAND_COLUMNS: &[&str] = &[
    "kind",
    "fee",
    "u1",
    "u2",
    "gamma",
    "paper",
    "exact",
    "discrepancy",
    "modes_agree",
    "mc_estimate",
    "std_error",
    "draws",
];

/// Slack allowed below the lattice maximum when certifying.
const SEPARATE_TOLERANCE: f64 = 1e-3;
const BUNDLE_TOLERANCE: f64 = 1e-2;

pub fn execute(command: &Command, global: &GlobalArgs) -> Result<Outcome> {
    let mut fallback = None;
    let table = match command {
        Command::Fit { samples } => fit(samples)?,
        Command::Optimize {
            market,
            scenario,
            service,
        } => optimize(
            &Scenario::load(scenario)?,
            *market,
            service.as_deref(),
            global,
            &mut fallback,
        )?,
        Command::Decide { scenario } => decide(&Scenario::load(scenario)?, global, &mut fallback)?,
        Command::Share {
            scenario,
            profits,
            players,
            coalitions,
        } => match (scenario, profits, coalitions) {
            (Some(path), _, _) => share_scenario(&Scenario::load(path)?, global, &mut fallback)?,
            (None, Some(v), _) => share_profits(players, v)?,
            (None, None, Some(path)) => share_coalitions(path)?,
            (None, None, None) => {
                return Err(CliError::Usage(
                    "share needs a scenario, --profits or --coalitions".into(),
                ))
            }
        },
        Command::Simulate {
            scenario,
            service,
            draws,
        } => simulate(
            &Scenario::load(scenario)?,
            service.as_deref(),
            *draws,
            global,
            &mut fallback,
        )?,
        Command::Verify {
            scenario,
            grid,
            bundle_grid,
        } => verify(&Scenario::load(scenario)?, *grid, *bundle_grid, global)?,
        Command::Sweep {
            scenario,
            param,
            start,
            stop,
            steps,
            target,
        } => sweep(
            scenario,
            param,
            *start,
            *stop,
            *steps,
            target.as_deref(),
            global,
            &mut fallback,
        )?,
        Command::Demand {
            market,
            fee,
            u1,
            u2,
            gamma,
            draws,
        } => demand(*market, *fee, *u1, *u2, *gamma, *draws, global)?,
    };
    Ok(Outcome {
        command: command.name(),
        table,
        fallback,
    })
}

fn input_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn fit(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| input_error(path, e))?;
    let samples = read_samples(file).map_err(|e| input_error(path, e))?;
    let fit =
        fit_quality_curve(&samples, &FitOptions::default()).map_err(|e| input_error(path, e))?;
    let mut t = Table::new(FIT_COLUMNS);
    t.push(row![
        fit.params.alpha1(),
        fit.params.alpha2(),
        fit.params.alpha3(),
        fit.residual_sum_squares,
        fit.iterations,
        fit.converged,
        samples.len(),
    ]);
    Ok(t)
}

fn scenario_for(s: &Scenario, service: &NamedService) -> SeparateScenario {
    SeparateScenario::new(service.spec, s.market)
}

fn pick_services<'a>(s: &'a Scenario, only: Option<&str>) -> Result<Vec<&'a NamedService>> {
    match only {
        Some(name) => s
            .service(name)
            .map(|x| vec![x])
            .ok_or_else(|| CliError::Usage(format!("scenario has no service `{name}`"))),
        None if s.services.is_empty() => {
            Err(CliError::Usage("scenario defines no services".into()))
        }
        None => Ok(s.services.iter().collect()),
    }
}

fn bundle_of(s: &Scenario, market: Option<Market>) -> Result<(String, BundleSpec)> {
    let b = s
        .bundle
        .as_ref()
        .ok_or_else(|| CliError::Usage("scenario has no [bundle] section".into()))?;
    let expected = match market {
        Some(Market::Complement) => Some(BundleKind::Complement),
        Some(Market::Substitute) => Some(BundleKind::Substitute),
        _ => None,
    };
    if let Some(kind) = expected {
        if kind != b.spec.kind() {
            return Err(CliError::Usage(format!(
                "scenario bundle is {}, not {}",
                b.spec.kind().name(),
                kind.name()
            )));
        }
    }
    Ok((b.members.join("+"), b.spec))
}

/// Substitute optima are always certified: their closed form is unusable.
fn bundle_options(spec: &BundleSpec, global: &GlobalArgs) -> OptimizeOptions {
    OptimizeOptions {
        demand_mode: global.demand_mode,
        verify: global.verify || spec.kind() == BundleKind::Substitute,
        ..OptimizeOptions::default()
    }
}

fn solve_bundle(
    name: &str,
    spec: &BundleSpec,
    global: &GlobalArgs,
    fallback: &mut Option<String>,
) -> Result<OptimumBundle> {
    let opt = optimize_bundle(spec, &bundle_options(spec, global))?;
    if opt.fallback() && fallback.is_none() {
        *fallback = Some(format!(
            "bundle {name}: closed form infeasible ({} = {}), used numeric search",
            opt.closed_form.intermediate.name,
            crate::report::format_number(opt.closed_form.intermediate.value)
        ));
    }
    Ok(opt)
}

fn clamped_names(vars: &[privacy_pricing::Variable]) -> String {
    vars.iter().map(|v| v.name()).collect::<Vec<_>>().join(";")
}

fn optimize(
    s: &Scenario,
    market: Market,
    only: Option<&str>,
    global: &GlobalArgs,
    fallback: &mut Option<String>,
) -> Result<Table> {
    let mut t = Table::new(OPTIMIZE_COLUMNS);
    if market == Market::Separate {
        for service in pick_services(s, only)? {
            let sc = scenario_for(s, service);
            let opt = optimize_separate(&sc);
            let delta = if global.verify {
                let surface = ProfitSurface::Separate(&sc);
                let lattice = grid_maximize(&surface, &surface.default_grid(400)?)?;
                Some(opt.profit - lattice.value)
            } else {
                None
            };
            t.push(row![
                service.name.as_str(),
                "separate",
                opt.r_star,
                Cell::Empty,
                opt.p_star,
                opt.profit,
                sc.service.data_cost(opt.r_star),
                opt.revenue(&sc),
                opt.interior,
                "closed_form",
                clamped_names(&opt.clamped_variables),
                delta,
            ]);
        }
        return Ok(t);
    }
    if only.is_some() {
        return Err(CliError::Usage(
            "--service applies to separate markets only".into(),
        ));
    }
    let (name, spec) = bundle_of(s, Some(market))?;
    let opt = solve_bundle(&name, &spec, global, fallback)?;
    t.push(row![
        name,
        spec.kind().name(),
        opt.r1_star,
        opt.r2_star,
        opt.p_b_star,
        opt.profit,
        opt.data_cost(&spec),
        opt.revenue(&spec),
        opt.interior,
        opt.method.name(),
        clamped_names(&opt.clamped_variables),
        opt.oracle.as_ref().map(|o| o.delta),
    ]);
    Ok(t)
}

fn standalone_profit(s: &Scenario, member: &str) -> Result<f64> {
    let service = s
        .service(member)
        .ok_or_else(|| CliError::Usage(format!("scenario has no service `{member}`")))?;
    Ok(optimize_separate(&scenario_for(s, service)).profit)
}

fn decide(s: &Scenario, global: &GlobalArgs, fallback: &mut Option<String>) -> Result<Table> {
    let (name, spec) = bundle_of(s, None)?;
    let opt = solve_bundle(&name, &spec, global, fallback)?;
    let members = &s.bundle.as_ref().expect("bundle_of checked").members;
    let (v1, v2) = (
        standalone_profit(s, &members[0])?,
        standalone_profit(s, &members[1])?,
    );
    let mut t = Table::new(DECIDE_COLUMNS);
    t.push(row![
        name,
        spec.kind().name(),
        opt.profit,
        members[0].as_str(),
        v1,
        members[1].as_str(),
        v2,
        v1 + v2,
        privacy_pricing::bundle::recommend_bundle(opt.profit, (v1, v2)),
    ]);
    Ok(t)
}

fn share_scenario(
    s: &Scenario,
    global: &GlobalArgs,
    fallback: &mut Option<String>,
) -> Result<Table> {
    let (name, spec) = bundle_of(s, None)?;
    let opt = solve_bundle(&name, &spec, global, fallback)?;
    let members = s
        .bundle
        .as_ref()
        .expect("bundle_of checked")
        .members
        .clone();
    let v = [
        standalone_profit(s, &members[0])?,
        standalone_profit(s, &members[1])?,
        opt.profit,
    ];
    share_two(&members, v)
}

fn share_profits(players: &[String], v: &[f64]) -> Result<Table> {
    let [v1, v2, v12]: [f64; 3] = v.try_into().map_err(|_| {
        CliError::Usage(format!("--profits takes v1,v2,v12, got {} values", v.len()))
    })?;
    let players: [String; 2] = players
        .to_vec()
        .try_into()
        .map_err(|_| CliError::Usage("--players takes exactly two names".into()))?;
    share_two(&players, [v1, v2, v12])
}

fn share_two(players: &[String; 2], [v1, v2, v12]: [f64; 3]) -> Result<Table> {
    let game = CharacteristicFunction::two_player([&players[0], &players[1]], v1, v2, v12)?;
    let alloc = shapley_allocation(&game);
    let verdict = core_check(&game, &alloc)?;
    let interval = core_interval_two(v1, v2, v12);
    let mut t = Table::new(SHARE_COLUMNS);
    for (i, standalone) in [v1, v2].into_iter().enumerate() {
        // player two's bounds mirror player one's through efficiency
        let bounds = interval.map(|c| {
            if i == 0 {
                (c.lower, c.upper)
            } else {
                (v12 - c.upper, v12 - c.lower)
            }
        });
        t.push(row![
            players[i].as_str(),
            standalone,
            alloc.payoffs[i],
            bounds.map(|b| b.0),
            bounds.map(|b| b.1),
            verdict.in_core,
            v12,
        ]);
    }
    Ok(t)
}

fn share_coalitions(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| input_error(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers().map_err(|e| input_error(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "coalition" || &headers[1] != "value" {
        return Err(input_error(path, "expected header `coalition,value`"));
    }
    let mut players: Vec<String> = Vec::new();
    let mut entries: Vec<(Vec<String>, f64)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| input_error(path, e))?;
        let line = i + 2;
        let members: Vec<String> = record[0].split('+').map(|m| m.trim().to_string()).collect();
        if members.iter().any(String::is_empty) {
            return Err(input_error(
                path,
                format!("line {line}: empty player name in `{}`", &record[0]),
            ));
        }
        let value: f64 = record[1].parse().map_err(|_| {
            input_error(
                path,
                format!("line {line}: `{}` is not a number", &record[1]),
            )
        })?;
        for m in &members {
            if !players.contains(m) {
                players.push(m.clone());
            }
        }
        entries.push((members, value));
    }
    let game = CharacteristicFunction::from_coalitions(players.clone(), &entries)
        .map_err(|e| input_error(path, e))?;
    if players.len() == 2 {
        let v = [game.value(1), game.value(2), game.grand_value()];
        return share_two(&[players[0].clone(), players[1].clone()], v);
    }
    let alloc = shapley_allocation(&game);
    let verdict = core_check(&game, &alloc)?;
    let mut t = Table::new(SHARE_COLUMNS);
    for (i, player) in players.iter().enumerate() {
        t.push(row![
            player.as_str(),
            game.value(1 << i),
            alloc.payoffs[i],
            Cell::Empty,
            Cell::Empty,
            verdict.in_core,
            game.grand_value(),
        ]);
    }
    Ok(t)
}

fn simulation(s: &Scenario, draws: Option<u64>, global: &GlobalArgs) -> Result<SimulationSpec> {
    Ok(SimulationSpec::new(
        draws.unwrap_or(s.sim.draws),
        global.seed.unwrap_or(s.sim.seed),
        s.sim.sigma_z,
    )?)
}

fn z_score(analytic: f64, mean: f64, se: f64) -> f64 {
    if se > 0.0 {
        (mean - analytic) / se
    } else if mean == analytic {
        0.0
    } else {
        f64::INFINITY.copysign(mean - analytic)
    }
}

/// The simulated market draws reservation prices from the true region, so
/// the analytic reference for bundles is the exact-geometry profit.
fn simulate(
    s: &Scenario,
    only: Option<&str>,
    draws: Option<u64>,
    global: &GlobalArgs,
    fallback: &mut Option<String>,
) -> Result<Table> {
    let sim = simulation(s, draws, global)?;
    let mut t = Table::new(SIMULATE_COLUMNS);
    let services = match only {
        Some(_) => pick_services(s, only)?,
        None => s.services.iter().collect(),
    };
    for service in services {
        let sc = scenario_for(s, service);
        let opt = optimize_separate(&sc);
        let res = simulate_market(
            &MarketPoint::Separate {
                scenario: &sc,
                r: opt.r_star,
                fee: opt.p_star,
            },
            &sim,
        )?;
        t.push(row![
            service.name.as_str(),
            opt.r_star,
            Cell::Empty,
            opt.p_star,
            opt.profit,
            res.mean,
            res.std_error,
            z_score(opt.profit, res.mean, res.std_error),
            res.draws,
            res.noisy_reports,
            res.noise_variance,
        ]);
    }
    if only.is_none() {
        if let Some(b) = &s.bundle {
            let name = b.members.join("+");
            let opt = solve_bundle(&name, &b.spec, global, fallback)?;
            let analytic = gross_profit_bundle(
                &b.spec,
                opt.r1_star,
                opt.r2_star,
                opt.p_b_star,
                DemandMode::ExactGeometry,
            )?;
            let res = simulate_market(
                &MarketPoint::Bundle {
                    bundle: &b.spec,
                    r1: opt.r1_star,
                    r2: opt.r2_star,
                    fee: opt.p_b_star,
                },
                &sim,
            )?;
            t.push(row![
                name,
                opt.r1_star,
                opt.r2_star,
                opt.p_b_star,
                analytic,
                res.mean,
                res.std_error,
                z_score(analytic, res.mean, res.std_error),
                res.draws,
                res.noisy_reports,
                res.noise_variance,
            ]);
        }
    }
    Ok(t)
}

fn cell_distance(x: &[f64], argmax: &[f64], grid: &privacy_pricing::oracle::GridSpec) -> f64 {
    grid.axes
        .iter()
        .zip(x.iter().zip(argmax))
        .map(|(axis, (a, b))| (a - b).abs() / axis.step())
        .fold(0.0, f64::max)
}

fn verify(s: &Scenario, points: usize, bundle_points: usize, global: &GlobalArgs) -> Result<Table> {
    let mut t = Table::new(VERIFY_COLUMNS);
    for service in &s.services {
        let sc = scenario_for(s, service);
        let opt = optimize_separate(&sc);
        let surface = ProfitSurface::Separate(&sc);
        let grid = surface.default_grid(points)?;
        let lattice = grid_maximize(&surface, &grid)?;
        let delta = opt.profit - lattice.value;
        t.push(row![
            service.name.as_str(),
            "closed_form",
            opt.r_star,
            Cell::Empty,
            opt.p_star,
            opt.profit,
            lattice.value,
            lattice.argmax[0],
            Cell::Empty,
            lattice.argmax[1],
            delta,
            cell_distance(&[opt.r_star, opt.p_star], &lattice.argmax, &grid),
            delta >= -SEPARATE_TOLERANCE,
        ]);
    }
    if let Some(b) = &s.bundle {
        let opts = OptimizeOptions {
            demand_mode: global.demand_mode,
            verify: true,
            verify_points: bundle_points,
            verify_tolerance: BUNDLE_TOLERANCE,
            ..OptimizeOptions::default()
        };
        let opt = optimize_bundle(&b.spec, &opts)?;
        let check = opt.oracle.as_ref().expect("verification was requested");
        let grid =
            ProfitSurface::Bundle(&b.spec, global.demand_mode).default_grid(bundle_points)?;
        t.push(row![
            b.members.join("+"),
            opt.method.name(),
            opt.r1_star,
            opt.r2_star,
            opt.p_b_star,
            opt.profit,
            check.value,
            check.argmax[0],
            check.argmax[1],
            check.argmax[2],
            check.delta,
            cell_distance(
                &[opt.r1_star, opt.r2_star, opt.p_b_star],
                &check.argmax,
                &grid
            ),
            check.delta >= -BUNDLE_TOLERANCE,
        ]);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
enum SweepTarget {
    Service(String),
    Bundle,
}

fn sweep_target(s: &Scenario, param: &str, target: Option<&str>) -> Result<SweepTarget> {
    let resolve = |name: &str| -> Result<SweepTarget> {
        if name == "bundle" {
            if s.bundle.is_none() {
                return Err(CliError::Usage("scenario has no [bundle] section".into()));
            }
            Ok(SweepTarget::Bundle)
        } else if s.service(name).is_some() {
            Ok(SweepTarget::Service(name.to_string()))
        } else {
            Err(CliError::Usage(format!("unknown sweep target `{name}`")))
        }
    };
    if let Some(name) = target {
        return resolve(name);
    }
    if param.starts_with("bundle.") {
        return resolve("bundle");
    }
    if let Some(rest) = param.strip_prefix("service.") {
        let name = rest.rsplit_once('.').map_or(rest, |(n, _)| n);
        return resolve(name);
    }
    match (s.services.as_slice(), &s.bundle) {
        ([only], None) => Ok(SweepTarget::Service(only.name.clone())),
        (_, Some(_)) => Ok(SweepTarget::Bundle),
        _ => Err(CliError::Usage(
            "several services; pick one with --target".into(),
        )),
    }
}

/// Shortest text that parses back to `v`; integral values drop the fraction
/// so integer keys accept them.
fn sweep_text(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    path: &Path,
    param: &str,
    start: f64,
    stop: f64,
    steps: usize,
    target: Option<&str>,
    global: &GlobalArgs,
    fallback: &mut Option<String>,
) -> Result<Table> {
    if steps < 2 {
        return Err(CliError::Usage(format!(
            "--steps must be at least 2, got {steps}"
        )));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Usage("--start and --stop must be finite".into()));
    }
    let base = Scenario::load(path)?;
    let fixed_privacy = param.starts_with("service.") && param.ends_with(".r");
    let target = sweep_target(&base, param, target)?;
    if fixed_privacy && target == SweepTarget::Bundle {
        return Err(CliError::Usage(
            "fixed-privacy sweeps apply to a single service".into(),
        ));
    }
    if !fixed_privacy {
        // reject unknown parameter paths before running anything
        base.raw
            .clone()
            .set(param, "0".into())
            .map_err(CliError::Usage)?;
    }

    let mut t = Table::new(SWEEP_COLUMNS);
    for i in 0..steps {
        let value = start + (stop - start) * i as f64 / (steps - 1) as f64;
        let point = if fixed_privacy {
            fixed_privacy_point(&base, &target, value)
        } else {
            sweep_point(&base.raw, param, value, &target, global, fallback)
        };
        match point {
            Ok(p) => t.push(row![
                value,
                p.r1,
                p.r2,
                p.fee,
                p.profit,
                p.data_cost,
                p.revenue,
                p.status
            ]),
            Err(message) => t.push(row![
                value,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                format!("invalid: {message}"),
            ]),
        }
    }
    Ok(t)
}

struct SweepPoint {
    r1: f64,
    r2: Option<f64>,
    fee: f64,
    profit: f64,
    data_cost: f64,
    revenue: f64,
    status: &'static str,
}

fn fixed_privacy_point(
    s: &Scenario,
    target: &SweepTarget,
    r: f64,
) -> std::result::Result<SweepPoint, String> {
    let SweepTarget::Service(name) = target else {
        unreachable!("checked by the caller")
    };
    let sc = scenario_for(s, s.service(name).expect("target resolved"));
    let fee = optimal_fee_fixed_privacy(&sc, r).map_err(|e| e.to_string())?;
    let profit = gross_profit_separate(&sc, r, fee).map_err(|e| e.to_string())?;
    let data_cost = sc.service.data_cost(r);
    Ok(SweepPoint {
        r1: r,
        r2: None,
        fee,
        profit,
        data_cost,
        revenue: profit + data_cost,
        status: "ok",
    })
}

fn sweep_point(
    raw: &RawScenario,
    param: &str,
    value: f64,
    target: &SweepTarget,
    global: &GlobalArgs,
    fallback: &mut Option<String>,
) -> std::result::Result<SweepPoint, String> {
    let mut raw = raw.clone();
    raw.set(param, sweep_text(value))?;
    let s = Scenario::from_raw(raw).map_err(|e| e.to_string())?;
    match target {
        SweepTarget::Service(name) => {
            let sc = scenario_for(&s, s.service(name).expect("target resolved"));
            let opt = optimize_separate(&sc);
            Ok(SweepPoint {
                r1: opt.r_star,
                r2: None,
                fee: opt.p_star,
                profit: opt.profit,
                data_cost: sc.service.data_cost(opt.r_star),
                revenue: opt.revenue(&sc),
                status: "ok",
            })
        }
        SweepTarget::Bundle => {
            let b = s.bundle.as_ref().expect("target resolved");
            let opt = solve_bundle(&b.members.join("+"), &b.spec, global, fallback)
                .map_err(|e| e.to_string())?;
            Ok(SweepPoint {
                r1: opt.r1_star,
                r2: Some(opt.r2_star),
                fee: opt.p_b_star,
                profit: opt.profit,
                data_cost: opt.data_cost(&b.spec),
                revenue: opt.revenue(&b.spec),
                status: if opt.fallback() { "fallback" } else { "ok" },
            })
        }
    }
}

fn demand(
    market: Market,
    fee: f64,
    u1: f64,
    u2: Option<f64>,
    gamma: f64,
    draws: u64,
    global: &GlobalArgs,
) -> Result<Table> {
    let sim = SimulationSpec::new(draws, global.seed.unwrap_or(0), 1.0)?;
    let mut t = Table::new(DEMAND_COLUMNS);
    if market == Market::Separate {
        if u2.is_some() {
            return Err(CliError::Usage("--u2 applies to bundles only".into()));
        }
        let p = prob_buy_separate(fee, u1)?;
        let mc = estimate_buy_probability(&DemandRegion::Separate { fee, quality: u1 }, &sim)?;
        t.push(row![
            "separate",
            fee,
            u1,
            Cell::Empty,
            Cell::Empty,
            p,
            p,
            0.0,
            true,
            mc.mean,
            mc.std_error,
            mc.draws,
        ]);
        return Ok(t);
    }
    let u2 = u2.ok_or_else(|| CliError::Usage("bundle demand needs --u2".into()))?;
    let (kind, region) = match market {
        Market::Complement => (
            BundleKind::Complement,
            DemandRegion::Complement { fee, u1, u2, gamma },
        ),
        _ => (
            BundleKind::Substitute,
            DemandRegion::Substitute { fee, u1, u2, gamma },
        ),
    };
    kind.check_gamma(gamma)?;
    let cmp = compare_demand_modes(kind, fee, u1, u2, gamma)?;
    let mc = estimate_buy_probability(&region, &sim)?;
    t.push(row![
        kind.name(),
        fee,
        u1,
        u2,
        gamma,
        cmp.paper_form,
        cmp.exact_geometry,
        cmp.discrepancy,
        cmp.modes_agree,
        mc.mean,
        mc.std_error,
        mc.draws,
    ]);
    Ok(t)
}
