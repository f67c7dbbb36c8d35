//! Command-line front end: simulate worlds, build datasets, train rankers,
//! run interleaving/A-B tests, inspect tree structure, and chain the whole
//! pipeline with `repro`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use rankwin::event_log::{parse_event_log, write_events, VerticalLabelMap};
use rankwin::experiments::{
    assemble_variant_dataset, run_ab_test, run_interleaving_test, variant_feature_names,
    CreditRule, ExperimentPlan, ModelVariant, TestSetup,
};
use rankwin::features::PriorConfig;
use rankwin::ltr::{
    deserialize_model, ndcg_at_k, read_svmlight, serialize_model, train, write_svmlight,
    GBDTModel, TrainParams,
};
use rankwin::simulator::{generate_event_log, generate_world, ScenarioConfig};
use rankwin::tree_analysis::child_feature_distribution;

#[derive(Parser)]
#[command(name = "rankwin", version, about = "Lookback-window ranking laboratory")]
struct Cli {
    /// Seed for all randomness in the command (overrides config seeds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Upper bound on worker threads. Execution is currently single-threaded;
    /// the flag is accepted so callers can pin it without changing results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world and its logged event stream.
    Simulate(SimulateArgs),
    /// Build an SVMLight training dataset for one model variant.
    Features(FeaturesArgs),
    /// Train a LambdaRank GBDT on an SVMLight dataset.
    Train(TrainArgs),
    /// Score a dataset with a model and report mean NDCG@k.
    Eval(EvalArgs),
    /// Team-draft interleaving test between two models.
    Interleave(OnlineTestArgs),
    /// 50/50 A/B test between two models.
    Abtest(OnlineTestArgs),
    /// Parent/child split-feature adjacency of a trained model.
    Analyze(AnalyzeArgs),
    /// End-to-end standard-scenario reproduction (simulate, train all
    /// variants, run the three interleaving tests, analyze Model C).
    Repro,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML; defaults to the built-in standard scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of days to log; defaults to the configured horizon.
    #[arg(long)]
    days: Option<u32>,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Event log (JSONL).
    #[arg(long)]
    log: PathBuf,
    /// Query → vertical CSV.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    variant: String,
    /// Feature reference date (YYYY-MM-DD); labels come from the following
    /// window.
    #[arg(long)]
    ref_date: NaiveDate,
    /// Length of the label window after the reference date.
    #[arg(long, default_value_t = 7)]
    label_days: u32,
    /// Reject malformed or inconsistent log lines instead of clamping.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// SVMLight dataset.
    #[arg(long)]
    data: PathBuf,
    /// Feature-name sidecar CSV.
    #[arg(long)]
    sidecar: PathBuf,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 20)]
    min_leaf: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 10)]
    ndcg_k: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    sidecar: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 10)]
    ndcg_k: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum CreditArg {
    TeamExclusive,
    PerArm,
}

#[derive(Args)]
struct OnlineTestArgs {
    /// World snapshot (JSON) from `simulate`.
    #[arg(long)]
    world: PathBuf,
    /// Pre-test event log the feature pipeline aggregates.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    control: PathBuf,
    #[arg(long)]
    variant: PathBuf,
    /// First test day (index into the world's timeline).
    #[arg(long)]
    test_start: u32,
    #[arg(long, default_value_t = 14)]
    test_days: u32,
    /// Sessions per day per query per source.
    #[arg(long, default_value_t = 10)]
    sessions_per_day: u32,
    #[arg(long, value_enum, default_value = "team-exclusive")]
    credit: CreditArg,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated parent feature names; defaults to the model's
    /// `vertical_*` features, or all features when none exist.
    #[arg(long, value_delimiter = ',')]
    parents: Vec<String>,
    /// Optional comma-separated child filter.
    #[arg(long, value_delimiter = ',')]
    children: Vec<String>,
}

/// Failure with the exit code it maps to: 2 for usage/config problems, 1 for
/// runtime errors.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<rankwin::Error> for Failure {
    fn from(e: rankwin::Error) -> Failure {
        Failure::runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::runtime(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(&cli, args),
        Command::Features(args) => cmd_features(&cli, args),
        Command::Train(args) => cmd_train(&cli, args),
        Command::Eval(args) => cmd_eval(&cli, args),
        Command::Interleave(args) => cmd_online_test(&cli, args, OnlineTestKind::Interleave),
        Command::Abtest(args) => cmd_online_test(&cli, args, OnlineTestKind::Ab),
        Command::Analyze(args) => cmd_analyze(&cli, args),
        Command::Repro => cmd_repro(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Collected outputs plus the inputs that produced them; written last as
/// `manifest.json` so a complete manifest implies a complete run.
struct Manifest {
    command: &'static str,
    seed: Option<u64>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    out_dir: PathBuf,
}

impl Manifest {
    fn new(command: &'static str, cli: &Cli) -> Manifest {
        Manifest {
            command,
            seed: cli.seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            out_dir: cli.out_dir.clone(),
        }
    }

    fn input(&mut self, name: &str, value: impl ToString) {
        self.inputs.insert(name.to_string(), value.to_string());
    }

    /// Write one artifact into the output directory and record its checksum.
    fn emit(&mut self, file_name: &str, bytes: &[u8]) -> CmdResult {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(file_name);
        fs::write(&path, bytes)?;
        let digest = Sha256::digest(bytes);
        self.outputs
            .insert(file_name.to_string(), format!("{digest:x}"));
        Ok(())
    }

    fn finish(&self) -> CmdResult {
        let json = serde_json::json!({
            "command": self.command,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, format!("{:#}\n", json))?;
        Ok(())
    }
}

fn read_to_string(path: &Path, what: &str) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<GBDTModel, Failure> {
    let text = read_to_string(path, "model file")?;
    deserialize_model(&text).map_err(|e| Failure::runtime(e.to_string()))
}

fn csv_string<F>(write: F) -> Result<String, Failure>
where
    F: FnOnce(&mut Vec<u8>) -> rankwin::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("reports are UTF-8"))
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> CmdResult {
    let mut config = match &args.config {
        Some(path) => {
            let text = read_to_string(path, "scenario config")?;
            toml::from_str::<ScenarioConfig>(&text)
                .map_err(|e| Failure::usage(format!("bad scenario config: {e}")))?
        }
        None => ScenarioConfig::standard(cli.seed.unwrap_or(42)),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;
    let days = args.days.unwrap_or(config.horizon_days);
    if days > config.horizon_days {
        return Err(Failure::usage(format!(
            "--days {days} exceeds the configured horizon {}",
            config.horizon_days
        )));
    }

    let world = generate_world(&config)?;
    let log = generate_event_log(&world, 0..days);

    let mut manifest = Manifest::new("simulate", cli);
    manifest.seed = Some(config.seed);
    manifest.input("days", days);
    if let Some(path) = &args.config {
        manifest.input("config", path.display());
    }

    let mut events_buf = Vec::new();
    write_events(&log, &mut events_buf)?;
    manifest.emit("events.jsonl", &events_buf)?;
    manifest.emit(
        "world.json",
        format!("{}\n", serde_json::to_string_pretty(&world).expect("world serializes")).as_bytes(),
    )?;
    manifest.emit(
        "labels.csv",
        csv_string(|buf| world.vertical_labels().to_csv(buf))?.as_bytes(),
    )?;
    manifest.emit(
        "affinities.csv",
        csv_string(|buf| world.affinities_to_csv(buf))?.as_bytes(),
    )?;
    manifest.finish()?;
    println!(
        "simulated {} days, {} events -> {}",
        days,
        log.len(),
        cli.out_dir.display()
    );
    Ok(())
}

fn cmd_features(cli: &Cli, args: &FeaturesArgs) -> CmdResult {
    let variant = ModelVariant::parse(&args.variant).ok_or_else(|| {
        Failure::usage(format!(
            "unknown variant {:?}; expected one of Baseline, ModelA, ModelB, ModelC",
            args.variant
        ))
    })?;
    let log_text = read_to_string(&args.log, "event log")?;
    let (events, report) = parse_event_log(BufReader::new(log_text.as_bytes()), args.strict)?;
    for (line, reason) in &report.rejected {
        eprintln!("warning: rejected line {line}: {reason}");
    }
    for warning in &report.clamped {
        eprintln!("warning: clamped {warning}");
    }
    let labels_text = read_to_string(&args.labels, "labels file")?;
    let labels = VerticalLabelMap::from_csv(BufReader::new(labels_text.as_bytes()))?;

    // Candidate universe: every pair observed up to the reference date.
    let mut universe: Vec<(String, String)> = events
        .iter()
        .filter(|ev| ev.day <= args.ref_date)
        .map(|ev| (ev.query_id.clone(), ev.product_id.clone()))
        .collect();
    universe.sort();
    universe.dedup();

    let label_window = (
        args.ref_date + chrono::Days::new(1),
        args.ref_date + chrono::Days::new(args.label_days as u64),
    );
    let dataset = assemble_variant_dataset(
        &events,
        &labels,
        variant,
        args.ref_date,
        label_window,
        &universe,
        &PriorConfig::default(),
    )?;

    let mut data_buf = Vec::new();
    let mut sidecar_buf = Vec::new();
    write_svmlight(&dataset, &mut data_buf, &mut sidecar_buf)?;

    let mut manifest = Manifest::new("features", cli);
    manifest.input("log", args.log.display());
    manifest.input("labels", args.labels.display());
    manifest.input("variant", variant.name());
    manifest.input("ref_date", args.ref_date);
    manifest.input("label_days", args.label_days);
    manifest.emit("dataset.svmlight", &data_buf)?;
    manifest.emit("features.csv", &sidecar_buf)?;
    manifest.finish()?;
    println!(
        "{} groups x {} features -> {}",
        dataset.groups.len(),
        dataset.feature_names.len(),
        cli.out_dir.display()
    );
    Ok(())
}

fn read_dataset(data: &Path, sidecar: &Path) -> Result<rankwin::ltr::RankingDataset, Failure> {
    let data_text = read_to_string(data, "dataset")?;
    let sidecar_text = read_to_string(sidecar, "sidecar")?;
    read_svmlight(
        BufReader::new(data_text.as_bytes()),
        BufReader::new(sidecar_text.as_bytes()),
    )
    .map_err(|e| Failure::runtime(e.to_string()))
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> CmdResult {
    let dataset = read_dataset(&args.data, &args.sidecar)?;
    let params = TrainParams {
        num_trees: args.trees,
        max_depth: args.depth,
        min_samples_leaf: args.min_leaf,
        learning_rate: args.learning_rate,
        sigma: args.sigma,
        ndcg_k: args.ndcg_k,
        seed: cli.seed.unwrap_or(42),
    };
    let result = train(&dataset, &params)?;

    let mut manifest = Manifest::new("train", cli);
    manifest.seed = Some(params.seed);
    manifest.input("data", args.data.display());
    manifest.input("sidecar", args.sidecar.display());
    manifest.input("trees", args.trees);
    manifest.input("depth", args.depth);
    manifest.emit(
        "model.json",
        format!("{}\n", serialize_model(&result.model)).as_bytes(),
    )?;
    let mut ndcg_csv = String::from("round,train_ndcg\n");
    for (round, ndcg) in result.round_ndcg.iter().enumerate() {
        ndcg_csv.push_str(&format!("{},{ndcg}\n", round + 1));
    }
    manifest.emit("train_ndcg.csv", ndcg_csv.as_bytes())?;
    manifest.finish()?;
    println!(
        "trained {} trees, final train NDCG@{} = {:.4}",
        result.model.trees.len(),
        params.ndcg_k,
        result.round_ndcg.last().copied().unwrap_or(1.0)
    );
    Ok(())
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> CmdResult {
    let dataset = read_dataset(&args.data, &args.sidecar)?;
    let model = load_model(&args.model)?;
    if model.feature_names != dataset.feature_names {
        return Err(Failure::runtime(format!(
            "model features {:?} do not match dataset features {:?}",
            model.feature_names, dataset.feature_names
        )));
    }
    let mut total = 0.0;
    for group in &dataset.groups {
        let rows: Vec<Vec<f64>> = group.rows.iter().map(|r| r.features.clone()).collect();
        let order = model.rank(&rows)?;
        let ranked_grades: Vec<u8> = order.iter().map(|&i| group.rows[i].grade).collect();
        total += ndcg_at_k(&ranked_grades, args.ndcg_k)?;
    }
    let mean = total / dataset.groups.len().max(1) as f64;

    let mut manifest = Manifest::new("eval", cli);
    manifest.input("data", args.data.display());
    manifest.input("model", args.model.display());
    manifest.emit(
        "eval.csv",
        format!("metric,value\nmean_ndcg_at_{},{mean}\n", args.ndcg_k).as_bytes(),
    )?;
    manifest.finish()?;
    println!("mean NDCG@{} over {} groups: {mean:.6}", args.ndcg_k, dataset.groups.len());
    Ok(())
}

enum OnlineTestKind {
    Interleave,
    Ab,
}

fn cmd_online_test(cli: &Cli, args: &OnlineTestArgs, kind: OnlineTestKind) -> CmdResult {
    let world_text = read_to_string(&args.world, "world snapshot")?;
    let world: rankwin::simulator::World = serde_json::from_str(&world_text)
        .map_err(|e| Failure::usage(format!("bad world snapshot: {e}")))?;
    let log_text = read_to_string(&args.log, "event log")?;
    let (history, _) = parse_event_log(BufReader::new(log_text.as_bytes()), false)?;
    let control = load_model(&args.control)?;
    let variant = load_model(&args.variant)?;

    let priors = PriorConfig::default();
    let setup = TestSetup {
        world: &world,
        history: &history,
        priors: &priors,
        test_days: args.test_start..args.test_start + args.test_days,
        sessions_per_day: args.sessions_per_day,
        credit_rule: match args.credit {
            CreditArg::TeamExclusive => CreditRule::TeamExclusive,
            CreditArg::PerArm => CreditRule::PerArm,
        },
        seed: cli.seed.unwrap_or(world.config.seed),
    };

    let (name, csv, summary): (&str, String, String) = match kind {
        OnlineTestKind::Interleave => {
            let report = run_interleaving_test(&control, &variant, &setup)?;
            let overall = report.overall();
            (
                "interleave",
                csv_string(|buf| report.to_csv(buf))?,
                format!(
                    "Overall delta {:+.2}% ({}significant, credit rule {})",
                    overall.delta * 100.0,
                    if overall.significant { "" } else { "not " },
                    report.credit_rule
                ),
            )
        }
        OnlineTestKind::Ab => {
            let report = run_ab_test(&control, &variant, &setup)?;
            let lines: Vec<String> = report
                .metrics
                .iter()
                .map(|m| {
                    format!(
                        "{}: {:+.2}% ({}significant)",
                        m.name,
                        m.lift * 100.0,
                        if m.significant { "" } else { "not " }
                    )
                })
                .collect();
            (
                "abtest",
                csv_string(|buf| report.to_csv(buf))?,
                lines.join("; "),
            )
        }
    };

    let mut manifest = Manifest::new(
        match kind {
            OnlineTestKind::Interleave => "interleave",
            OnlineTestKind::Ab => "abtest",
        },
        cli,
    );
    manifest.seed = Some(setup.seed);
    manifest.input("world", args.world.display());
    manifest.input("log", args.log.display());
    manifest.input("control", args.control.display());
    manifest.input("variant", args.variant.display());
    manifest.input("test_start", args.test_start);
    manifest.input("test_days", args.test_days);
    manifest.input("sessions_per_day", args.sessions_per_day);
    manifest.emit(&format!("{name}.csv"), csv.as_bytes())?;
    manifest.finish()?;
    println!("{summary}");
    Ok(())
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> CmdResult {
    let model = load_model(&args.model)?;
    let parents: std::collections::BTreeSet<String> = if args.parents.is_empty() {
        let verticals: std::collections::BTreeSet<String> = model
            .feature_names
            .iter()
            .filter(|n| n.starts_with("vertical_"))
            .cloned()
            .collect();
        if verticals.is_empty() {
            model.feature_names.iter().cloned().collect()
        } else {
            verticals
        }
    } else {
        args.parents.iter().cloned().collect()
    };
    let children: Option<std::collections::BTreeSet<String>> = if args.children.is_empty() {
        None
    } else {
        Some(args.children.iter().cloned().collect())
    };

    let report = child_feature_distribution(&model, &parents, children.as_ref())?;
    let mut manifest = Manifest::new("analyze", cli);
    manifest.input("model", args.model.display());
    manifest.emit(
        "adjacency.csv",
        csv_string(|buf| report.to_csv(buf))?.as_bytes(),
    )?;
    manifest.finish()?;
    println!(
        "analyzed {} parent features -> {}",
        parents.len(),
        cli.out_dir.display()
    );
    Ok(())
}

fn cmd_repro(cli: &Cli) -> CmdResult {
    let seed = cli.seed.unwrap_or(42);
    let config = ScenarioConfig::standard(seed);
    let plan = ExperimentPlan::standard();
    let summary = rankwin::experiments::repro_standard_scenario(&config, &plan)?;

    let mut manifest = Manifest::new("repro", cli);
    manifest.seed = Some(seed);
    manifest.input("variants", {
        let names: Vec<&str> = ModelVariant::ALL.iter().map(|v| v.name()).collect();
        names.join(",")
    });
    manifest.input(
        "features_per_variant",
        ModelVariant::ALL
            .iter()
            .map(|&v| variant_feature_names(v).len().to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.emit(
        "summary.json",
        format!(
            "{}\n",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        )
        .as_bytes(),
    )?;
    manifest.emit("summary.txt", summary.to_text().as_bytes())?;
    for test in &summary.tests {
        let file = format!(
            "interleave_{}.csv",
            test.name.split_whitespace().next().unwrap_or("test")
        );
        manifest.emit(&file, csv_string(|buf| test.report.to_csv(buf))?.as_bytes())?;
    }
    manifest.emit(
        "adjacency.csv",
        csv_string(|buf| summary.adjacency.to_csv(buf))?.as_bytes(),
    )?;
    manifest.finish()?;
    print!("{}", summary.to_text());
    Ok(())
}
