use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qgate::agent::{train_with, LearnTiming, NetShape, TargetRule, TrainConfig};
use qgate::baselines::{brute_force_with_budget, de_optimize, ga_optimize, grape_restarts, DeConfig, DeMode, GaConfig, GrapeConfig, OptimizerResult, Solution, DEFAULT_BRUTE_FORCE_BUDGET};
use qgate::error::Result;
use qgate::harness::{self, AblationSpec, Algorithm, ExperimentSpec};
use qgate::quantum::{log_infidelity, ControlTask, Gate};

#[derive(Parser)]
#[command(name = "qgate", version, about = "Bang-bang quantum gate synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct TaskArgs {
    #[arg(long, default_value = "hadamard")]
    gate: Gate,
    /// Total evolution time.
    #[arg(short = 'T', long = "time", default_value_t = 1.0)]
    time: f64,
    /// Number of time steps; defaults to 28 (Hadamard) or 38 (CNOT).
    #[arg(short = 'N', long)]
    steps: Option<usize>,
}

impl TaskArgs {
    fn task(&self) -> Result<ControlTask> {
        self.gate.task(self.time, self.steps.unwrap_or(self.gate.default_steps()))
    }
}

#[derive(Args, Clone)]
struct NetArgs {
    #[arg(long)]
    encoder_layers: Option<usize>,
    #[arg(long)]
    head_layers: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
}

impl NetArgs {
    fn apply(&self, cfg: &mut TrainConfig) {
        if self.encoder_layers.is_some() || self.head_layers.is_some() || self.width.is_some() {
            let agg = cfg.network.aggregation;
            cfg.network = NetShape::uniform(
                self.encoder_layers.unwrap_or(3),
                self.head_layers.unwrap_or(4),
                self.width.unwrap_or(600),
            );
            cfg.network.aggregation = agg;
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Timing {
    EpisodeEnd,
    EveryStep,
}

#[derive(Subcommand)]
enum Command {
    /// Train the dueling double DQN on one task.
    Train {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        target_rule: Option<TargetRule>,
        #[arg(long, value_enum)]
        learn_timing: Option<Timing>,
        #[command(flatten)]
        net: NetArgs,
        /// TOML training config; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "QGATE_OUTPUT_DIR", default_value = "qgate-out")]
        out: PathBuf,
    },
    /// Sweep one algorithm over a grid of evolution times.
    Sweep {
        /// Experiment file (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        gate: Option<Gate>,
        #[arg(long)]
        algorithm: Option<Algorithm>,
        /// Comma separated evolution times.
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        #[arg(short = 'N', long)]
        steps: Option<usize>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "QGATE_OUTPUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long, env = "QGATE_WORKERS")]
        workers: Option<usize>,
    },
    /// Run one baseline optimizer on one task.
    Baseline {
        #[arg(value_enum)]
        method: Method,
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Iterations or generations.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
        /// DE only: optimize relaxed amplitudes instead of signs.
        #[arg(long)]
        continuous: bool,
        #[arg(long)]
        budget: Option<u64>,
        /// Write the best protocol here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Re-simulate a protocol file and print its fidelity.
    Verify {
        #[command(flatten)]
        task: TaskArgs,
        protocol: PathBuf,
    },
    /// Compare learning curves of several network shapes.
    Ablate {
        #[command(flatten)]
        task: TaskArgs,
        /// Shapes as `ENCODER+HEAD:WIDTH`, e.g. `3+4:600`.
        #[arg(long = "shape", required = true)]
        shapes: Vec<String>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "QGATE_OUTPUT_DIR", default_value = "qgate-out")]
        out: PathBuf,
    },
    /// Rebuild sweep tables and learning curves from earlier runs.
    Report {
        /// `records.jsonl` files; algorithms from all of them share one table.
        #[arg(long = "records")]
        records: Vec<PathBuf>,
        /// Episode series files for a learning-curve plot.
        #[arg(long = "series")]
        series: Vec<PathBuf>,
        #[arg(long, env = "QGATE_OUTPUT_DIR", default_value = "qgate-out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Grape,
    De,
    Ga,
    Brute,
}

fn parse_shape(s: &str) -> std::result::Result<NetShape, String> {
    let bad = || format!("shape `{s}` is not ENCODER+HEAD:WIDTH");
    let (layers, width) = s.split_once(':').ok_or_else(bad)?;
    let (enc, head) = layers.split_once('+').ok_or_else(bad)?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
    Ok(NetShape::uniform(num(enc)?, num(head)?, num(width)?))
}

fn print_result(task: &ControlTask, result: &OptimizerResult) -> Result<()> {
    println!("F = {}", result.fidelity);
    println!("L = {}", log_infidelity(result.fidelity)?);
    match &result.solution {
        Solution::Protocol(p) => println!("protocol = {:?}", p.actions()),
        Solution::Pulse(p) => {
            println!("pulse ({} steps x {} controls):", task.steps(), task.num_controls());
            for row in &p.values {
                println!("  {row:?}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train {
            task,
            episodes,
            seed,
            target_rule,
            learn_timing,
            net,
            config,
            out,
        } => {
            let t = task.task()?;
            let mut cfg = match config {
                Some(path) => toml::from_str(&std::fs::read_to_string(path)?)?,
                None => TrainConfig::for_gate(task.gate),
            };
            cfg.seed = seed;
            if let Some(e) = episodes {
                cfg.episodes = e;
            }
            if let Some(r) = target_rule {
                cfg.target_rule = r;
            }
            match learn_timing {
                Some(Timing::EpisodeEnd) => cfg.learn_timing = LearnTiming::EpisodeEnd,
                Some(Timing::EveryStep) => cfg.learn_timing = LearnTiming::EveryStep,
                None => {}
            }
            net.apply(&mut cfg);
            std::fs::create_dir_all(&out)?;
            let mut series = std::io::BufWriter::new(std::fs::File::create(out.join("episodes.jsonl"))?);
            let every = (cfg.episodes / 20).max(1);
            let report = train_with(&t, &cfg, Some(&out), |ep| {
                use std::io::Write;
                serde_json::to_writer(&mut series, ep)?;
                series.write_all(b"\n")?;
                series.flush()?;
                if ep.episode % every == 0 {
                    eprintln!("episode {:>7}  F = {:.6}  eps = {:.3}", ep.episode, ep.terminal_fidelity, ep.epsilon);
                }
                Ok(())
            })?;
            report.net.save_checkpoint(&out.join("net.json"))?;
            let header = vec![
                format!("gate={} T={} N={}", task.gate, t.total_time(), t.steps()),
                format!("F={} L={}", report.best_fidelity, report.best_log_infidelity),
            ];
            harness::write_protocol(&out.join("best.txt"), &t, &report.best_protocol, &header)?;
            println!("F = {}", report.best_fidelity);
            println!("L = {}", report.best_log_infidelity);
            println!("protocol = {:?}", report.best_protocol.actions());
            Ok(true)
        }
        Command::Sweep {
            config,
            gate,
            algorithm,
            t_grid,
            steps,
            repetitions,
            seed,
            out,
            workers,
        } => {
            let mut spec = match config {
                Some(path) => ExperimentSpec::load(&path)?,
                None => ExperimentSpec::new(gate.unwrap_or(Gate::Hadamard), algorithm.unwrap_or(Algorithm::Grape)),
            };
            if let Some(g) = gate {
                if g != spec.gate && t_grid.is_none() {
                    spec.t_grid = harness::default_t_grid(g);
                }
                spec.gate = g;
            }
            if let Some(a) = algorithm {
                spec.algorithm = a;
            }
            if let Some(g) = t_grid {
                spec.t_grid = g;
            }
            if steps.is_some() {
                spec.steps = steps;
            }
            if let Some(r) = repetitions {
                spec.repetitions = r;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(o) = out {
                spec.output_dir = o;
            }
            if workers.is_some() {
                spec.workers = workers;
            }
            let outcome = harness::run(&spec)?;
            print!("{}", outcome.table.to_csv());
            for r in outcome.failures() {
                eprintln!(
                    "failed: T={} rep={}: {}",
                    r.total_time,
                    r.repetition,
                    r.error.as_deref().unwrap_or("no result")
                );
            }
            eprintln!("wrote {}", outcome.output_dir.display());
            Ok(outcome.all_completed())
        }
        Command::Baseline {
            method,
            task,
            seed,
            iterations,
            restarts,
            population,
            continuous,
            budget,
            save,
        } => {
            let t = task.task()?;
            let result: OptimizerResult = match method {
                Method::Grape => {
                    let mut cfg = GrapeConfig { seed, ..GrapeConfig::default() };
                    cfg.iterations = iterations.unwrap_or(cfg.iterations);
                    cfg.restarts = restarts.unwrap_or(cfg.restarts);
                    grape_restarts(&t, &cfg)?.into()
                }
                Method::De => {
                    let mut cfg = DeConfig { seed, ..DeConfig::default() };
                    cfg.generations = iterations.unwrap_or(cfg.generations);
                    cfg.population = population.unwrap_or(cfg.population);
                    if continuous {
                        cfg.mode = DeMode::Continuous;
                    }
                    de_optimize(&t, &cfg)?
                }
                Method::Ga => {
                    let mut cfg = GaConfig { seed, ..GaConfig::default() };
                    cfg.generations = iterations.unwrap_or(cfg.generations);
                    cfg.population = population.unwrap_or(cfg.population);
                    ga_optimize(&t, &cfg)?
                }
                Method::Brute => {
                    let budget = budget.map_or(DEFAULT_BRUTE_FORCE_BUDGET, u128::from);
                    let (p, f) = brute_force_with_budget(&t, budget)?;
                    OptimizerResult {
                        solution: Solution::Protocol(p),
                        fidelity: f,
                        iterations: 1,
                        history: Vec::new(),
                    }
                }
            };
            print_result(&t, &result)?;
            if let (Some(path), Some(p)) = (save, result.solution.protocol()) {
                let header = vec![format!("gate={} T={} N={}", task.gate, t.total_time(), t.steps())];
                harness::write_protocol(&path, &t, p, &header)?;
            }
            Ok(true)
        }
        Command::Verify { task, protocol } => {
            let steps = task.steps.unwrap_or(task.gate.default_steps());
            let v = harness::verify_protocol(task.gate, task.time, steps, &protocol)?;
            println!("F = {}", v.fidelity);
            println!("L = {}", v.log_infidelity);
            Ok(true)
        }
        Command::Ablate {
            task,
            shapes,
            episodes,
            repetitions,
            seed,
            out,
        } => {
            let shapes = shapes
                .iter()
                .map(|s| parse_shape(s))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(qgate::error::Error::InvalidConfig)?;
            let mut train = TrainConfig::for_gate(task.gate);
            if let Some(e) = episodes {
                train.episodes = e;
            }
            let spec = AblationSpec {
                gate: task.gate,
                total_time: task.time,
                steps: task.steps.unwrap_or(task.gate.default_steps()),
                train,
                shapes,
                repetitions,
                seed,
                output_dir: out,
            };
            for r in harness::ablation(&spec)? {
                println!("{}\trep {}\tL = {}", r.label, r.repetition, r.best_log_infidelity);
            }
            Ok(true)
        }
        Command::Report { records, series, out } => {
            std::fs::create_dir_all(&out)?;
            if !records.is_empty() {
                let mut all = Vec::new();
                for path in &records {
                    all.extend(harness::load_records(path)?);
                }
                let table = harness::sweep_report(&all);
                std::fs::write(out.join("sweep.csv"), table.to_csv())?;
                std::fs::write(out.join("sweep.svg"), table.to_svg())?;
                print!("{}", table.to_csv());
            }
            if !series.is_empty() {
                let runs = series
                    .iter()
                    .map(|p| harness::load_series_fidelity(p))
                    .collect::<Result<Vec<_>>>()?;
                let curve = harness::learning_curve_report(&runs);
                if let Some(lens) = &curve.truncated_from {
                    eprintln!("series truncated to {} points (lengths {lens:?})", curve.mean.len());
                }
                std::fs::write(out.join("curve.csv"), curve.to_csv())?;
                std::fs::write(out.join("curve.svg"), curve.to_svg())?;
            }
            eprintln!("wrote {}", out.display());
            Ok(true)
        }
    }
}
