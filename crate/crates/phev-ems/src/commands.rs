//! Command implementations. Each is callable from tests; `main` only parses
//! arguments and maps errors to exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use phev_core::config::{KvConfig, Setup};
use phev_core::cycle::{synth_cycle, DriveCycle, SpeedUnit};
use phev_core::dp::{DpConfig, DpProblem};
use phev_core::env::{trace_to_csv, EmsEnv, RolloutResult, SocInit, TraceRow, Totals};
use phev_core::maps::linspace;
use phev_core::rules::CdcsController;
use phev_core::{rads_to_rpm, Result as CoreResult};
use phev_rl::agent::{learning_curve_csv, GreedyPolicy, Hyperparams, PdqnTd3Agent};
use phev_rl::checkpoint;

use crate::cli::{
    CommonArgs, CompareArgs, CycleInfoArgs, DpArgs, SimulateArgs, SocArg, TrainArgs,
};
use crate::report::ComparisonReport;
use crate::{CliError, Result};

/// Configuration resolved from flags + optional file.
pub struct Experiment {
    pub setup: Setup,
    pub agent_hp: Hyperparams,
    pub cycle: DriveCycle,
    pub out: PathBuf,
    pub seed: u64,
}

pub fn experiment(common: &CommonArgs) -> Result<Experiment> {
    let (setup, agent_hp) = match &common.config {
        Some(path) => {
            let mut kv = KvConfig::load(path).map_err(CliError::config)?;
            let agent_keys = kv.sections.remove("agent");
            let setup = Setup::from_kv(&kv).map_err(CliError::config)?;
            let hp = agent_hyperparams(agent_keys)?;
            (setup, hp)
        }
        None => (Setup::default(), Hyperparams::default()),
    };

    let cycle = load_cycle(common)?;
    let out = out_dir(common)?;
    Ok(Experiment {
        setup,
        agent_hp,
        cycle,
        out,
        seed: common.seed,
    })
}

fn agent_hyperparams(
    keys: Option<std::collections::BTreeMap<String, String>>,
) -> Result<Hyperparams> {
    let mut hp = Hyperparams::default();
    let Some(keys) = keys else {
        return Ok(hp);
    };
    for (k, v) in keys {
        let num = v
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("[agent] {k}: not a number: {v:?}")))?;
        match k.as_str() {
            "gamma" => hp.gamma = num,
            "tau" => hp.tau = num,
            "lr_actor" => hp.lr_actor = num,
            "lr_critic" => hp.lr_critic = num,
            "buffer_capacity" => hp.buffer_capacity = num as usize,
            "batch_size" => hp.batch_size = num as usize,
            "warmup" => hp.warmup = num as usize,
            "expl_noise" => hp.expl_noise = num,
            "target_noise" => hp.target_noise = num,
            "noise_clip" => hp.noise_clip = num,
            "policy_delay" => hp.policy_delay = num as u64,
            "eps_start" => hp.eps_start = num,
            "eps_end" => hp.eps_end = num,
            "eps_decay_steps" => hp.eps_decay_steps = num as u64,
            "hidden" => hp.hidden = num as usize,
            other => {
                return Err(CliError::Config(format!("unknown key [agent] {other}")));
            }
        }
    }
    hp.validate().map_err(CliError::config)?;
    Ok(hp)
}

fn load_cycle(common: &CommonArgs) -> Result<DriveCycle> {
    let base = if common.cycle == "synth" {
        synth_cycle(common.synth_seed)
    } else {
        let unit: SpeedUnit = common.unit.parse().map_err(CliError::config)?;
        DriveCycle::load_csv(Path::new(&common.cycle), unit).map_err(CliError::config)?
    };
    base.repeat(common.repeats.max(1)).map_err(CliError::config)
}

fn out_dir(common: &CommonArgs) -> Result<PathBuf> {
    let dir = match &common.out {
        Some(d) => d.clone(),
        None => std::env::var_os("PHEV_EMS_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out")),
    };
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn resolve_soc(soc: SocArg, seed: u64) -> f64 {
    match soc {
        SocArg::Fixed(s) => s,
        SocArg::Random => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xD1B54A32D192ED03);
            rng.random_range(0.3..=0.8)
        }
    }
}

fn summary_text(label: &str, cycle: &DriveCycle, seed: u64, t: &Totals) -> String {
    format!(
        "controller={label}\ncycle={}\nsamples={}\nseed={seed}\nsteps={}\n\
         soc_initial={}\nsoc_final={}\nfuel_g={}\nfuel_l={}\nelec_kwh={}\n\
         cost_cny={}\nviolation_penalty_cny={}\nsoc_penalty_cny={}\nreward_sum={}\n\
         engaged_steps={}\nengagement_pct={}\nviolations={}\n",
        cycle.name,
        cycle.len(),
        t.steps,
        t.soc_initial,
        t.soc_final,
        t.fuel_g,
        t.fuel_liters,
        t.elec_kwh,
        t.cost_cny,
        t.violation_penalty_cny,
        t.soc_penalty_cny,
        t.reward_sum,
        t.engaged_steps,
        t.engagement_pct,
        t.violations
    )
}

/// `t,soc` trajectory including the initial point.
fn soc_csv(rollout: &RolloutResult) -> String {
    let mut out = String::from("t,soc\n");
    out.push_str(&format!("0,{}\n", rollout.totals.soc_initial));
    for r in &rollout.rows {
        out.push_str(&format!("{},{}\n", r.t + 1, r.soc));
    }
    out
}

/// Engine operating points (`speed_rpm,torque_nm`) for map scatter plots.
fn engine_points_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("speed_rpm,torque_nm\n");
    for r in rows {
        if r.engine_torque > 0.0 && r.engine_speed > 0.0 {
            out.push_str(&format!(
                "{},{}\n",
                rads_to_rpm(r.engine_speed),
                r.engine_torque
            ));
        }
    }
    out
}

/// Motor operating points from vehicle speed and motor torque.
fn motor_points_csv(rows: &[TraceRow], gear_ev: f64, tyre_radius: f64) -> String {
    let mut out = String::from("speed_rpm,torque_nm\n");
    for r in rows {
        let w_m = r.v / tyre_radius * gear_ev;
        out.push_str(&format!("{},{}\n", rads_to_rpm(w_m), r.motor_torque));
    }
    out
}

fn rollout_cdcs(ex: &Experiment, soc: f64) -> Result<RolloutResult> {
    let mut env = EmsEnv::new(
        ex.cycle.clone(),
        ex.setup.models.clone(),
        ex.setup.reward.clone(),
        ex.seed,
    );
    env.reset(SocInit::Fixed(soc)).map_err(CliError::config)?;
    let mut controller = CdcsController::new(&ex.setup.models);
    env.rollout(&mut controller).map_err(CliError::runtime)
}

fn rollout_agent(ex: &Experiment, agent: &PdqnTd3Agent, soc: f64) -> Result<RolloutResult> {
    let mut env = EmsEnv::new(
        ex.cycle.clone(),
        ex.setup.models.clone(),
        ex.setup.reward.clone(),
        ex.seed,
    );
    env.reset(SocInit::Fixed(soc)).map_err(CliError::config)?;
    let mut policy = GreedyPolicy(agent);
    env.rollout(&mut policy).map_err(CliError::runtime)
}

fn dp_config(setup: &Setup, soc_points: Option<usize>, torque_points: Option<usize>) -> DpConfig {
    let mut cfg = setup.dp.clone();
    if let Some(n) = soc_points {
        let lo = cfg.soc_grid[0];
        let hi = *cfg.soc_grid.last().unwrap();
        cfg.soc_grid = linspace(lo, hi, n.max(2));
    }
    if let Some(n) = torque_points {
        let lo = cfg.torque_grid[0];
        let hi = *cfg.torque_grid.last().unwrap();
        cfg.torque_grid = linspace(lo, hi, n.max(2));
    }
    cfg
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let ex = experiment(&args.common)?;
    let soc = resolve_soc(args.soc, ex.seed);
    let (label, rollout) = if args.controller == "cdcs" {
        ("cdcs".to_string(), rollout_cdcs(&ex, soc)?)
    } else {
        let agent = checkpoint::load(Path::new(&args.controller)).map_err(CliError::config)?;
        ("agent".to_string(), rollout_agent(&ex, &agent, soc)?)
    };
    write(&ex.out.join("trace.csv"), &trace_to_csv(&rollout.rows))?;
    let summary = summary_text(&label, &ex.cycle, ex.seed, &rollout.totals);
    write(&ex.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn cmd_dp(args: &DpArgs) -> Result<()> {
    let ex = experiment(&args.common)?;
    let soc = resolve_soc(args.soc, ex.seed);
    let cfg = dp_config(&ex.setup, args.soc_points, args.torque_points);
    let problem = DpProblem::new(&ex.cycle, &ex.setup.models, &ex.setup.reward, cfg)
        .map_err(CliError::config)?;
    let sol = problem.solve();
    let rollout = problem.forward(&sol, soc).map_err(CliError::runtime)?;
    write(&ex.out.join("trace.csv"), &trace_to_csv(&rollout.rows))?;
    write(&ex.out.join("cost_to_go.csv"), &sol.cost_to_go_csv())?;
    let summary = summary_text("dp", &ex.cycle, ex.seed, &rollout.totals);
    write(&ex.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let ex = experiment(&args.common)?;
    let mut agent = match &args.resume {
        Some(path) => checkpoint::load(path).map_err(CliError::config)?,
        None => PdqnTd3Agent::new(ex.agent_hp.clone(), ex.seed, ex.setup.models.engine.max_torque)
            .map_err(CliError::config)?,
    };
    let mut env = EmsEnv::new(
        ex.cycle.clone(),
        ex.setup.models.clone(),
        ex.setup.reward.clone(),
        ex.seed ^ 0xA076_1D64_78BD_642F,
    );
    let mut log = Vec::new();
    let mut remaining = args.steps;
    let chunk = if args.checkpoint_every == 0 {
        args.steps.max(1)
    } else {
        args.checkpoint_every
    };
    while remaining > 0 {
        let n = remaining.min(chunk);
        agent
            .train_steps(&mut env, n, &mut log)
            .map_err(CliError::runtime)?;
        remaining -= n;
        if args.checkpoint_every > 0 && remaining > 0 {
            let path = ex.out.join(format!("agent_step_{}.ckpt", agent.env_steps));
            checkpoint::save(&agent, &path).map_err(CliError::runtime)?;
        }
        eprintln!(
            "trained {} / {} steps, {} episodes",
            args.steps - remaining,
            args.steps,
            log.len()
        );
    }
    checkpoint::save(&agent, &ex.out.join("agent.ckpt")).map_err(CliError::runtime)?;
    write(&ex.out.join("curve.csv"), &learning_curve_csv(&log))?;
    let tail = log.iter().rev().take(10).map(|r| r.return_cny).sum::<f64>()
        / log.len().min(10).max(1) as f64;
    println!(
        "episodes={} env_steps={} last10_mean_return={}",
        log.len(),
        agent.env_steps,
        tail
    );
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let ex = experiment(&args.common)?;
    let soc = resolve_soc(args.soc, ex.seed);
    let agent = checkpoint::load(&args.agent).map_err(CliError::config)?;

    let cfg = dp_config(&ex.setup, args.soc_points, args.torque_points);
    let problem = DpProblem::new(&ex.cycle, &ex.setup.models, &ex.setup.reward, cfg)
        .map_err(CliError::config)?;
    let sol = problem.solve();
    let dp_run = problem.forward(&sol, soc).map_err(CliError::runtime)?;
    let agent_run = rollout_agent(&ex, &agent, soc)?;
    let cdcs_run = rollout_cdcs(&ex, soc)?;

    let models = &ex.setup.models;
    for (name, run) in [("dp", &dp_run), ("agent", &agent_run), ("cdcs", &cdcs_run)] {
        write(
            &ex.out.join(format!("trace_{name}.csv")),
            &trace_to_csv(&run.rows),
        )?;
        write(&ex.out.join(format!("soc_{name}.csv")), &soc_csv(run))?;
        write(
            &ex.out.join(format!("engine_points_{name}.csv")),
            &engine_points_csv(&run.rows),
        )?;
        write(
            &ex.out.join(format!("motor_points_{name}.csv")),
            &motor_points_csv(&run.rows, models.vehicle.gear_ev, models.vehicle.tyre_radius),
        )?;
    }
    write(&ex.out.join("bsfc_grid.csv"), &models.engine.bsfc.to_csv())?;
    write(
        &ex.out.join("motor_eff_grid.csv"),
        &models.motor.efficiency.to_csv(),
    )?;
    write(&ex.out.join("cost_to_go.csv"), &sol.cost_to_go_csv())?;

    let report = ComparisonReport::new(vec![
        ("dp".into(), dp_run.totals),
        ("agent".into(), agent_run.totals),
        ("cdcs".into(), cdcs_run.totals),
    ]);
    write(&ex.out.join("report.csv"), &report.to_csv())?;
    print!("{}", report.table());
    Ok(())
}

pub fn cmd_cycle_info(args: &CycleInfoArgs) -> Result<()> {
    let ex = experiment(&args.common)?;
    let c = &ex.cycle;
    let max_a = (0..c.steps())
        .map(|t| c.accel(t).abs())
        .fold(0.0_f64, f64::max);
    println!(
        "name={}\nsamples={}\nduration_s={}\ndistance_km={:.3}\nmax_speed_ms={:.3}\n\
         max_speed_kmh={:.2}\nmax_abs_accel={:.3}\nrepeats={}",
        c.name,
        c.len(),
        c.len() - 1,
        c.distance() / 1000.0,
        c.max_speed(),
        c.max_speed() * 3.6,
        max_a,
        c.repeats
    );
    Ok(())
}

/// Shared by tests: run CDCS + DP + agent and return the three totals in
/// (dp, agent, cdcs) order without touching the filesystem.
pub fn compare_totals(
    ex: &Experiment,
    agent: &PdqnTd3Agent,
    soc: f64,
) -> Result<(Totals, Totals, Totals)> {
    let problem = DpProblem::new(
        &ex.cycle,
        &ex.setup.models,
        &ex.setup.reward,
        ex.setup.dp.clone(),
    )
    .map_err(CliError::config)?;
    let sol = problem.solve();
    let dp_run = problem.forward(&sol, soc).map_err(CliError::runtime)?;
    let agent_run = rollout_agent(ex, agent, soc)?;
    let cdcs_run = rollout_cdcs(ex, soc)?;
    Ok((dp_run.totals, agent_run.totals, cdcs_run.totals))
}

/// Re-export for tests needing direct cycle/setup resolution.
pub fn core_ok<T>(r: CoreResult<T>) -> Result<T> {
    r.map_err(CliError::runtime)
}
