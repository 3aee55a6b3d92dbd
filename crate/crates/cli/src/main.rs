//! `wzsafe`: simulate, analyse, assess and correct work-zone layouts.
//!
//! Exit codes: 0 on success, 1 for invalid input (arguments, configuration,
//! file contents), 2 for failures while running.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wzsafe::calibrate::{calibrate, CalibrationConfig, IndicatorMode, Observations};
use wzsafe::classify::corpus;
use wzsafe::classify::{BehaviorLabel, RuleConfig, TrainConfig};
use wzsafe::correction::{assess, correction_loop, recommend};
use wzsafe::density::{build_report, DensityGridSpec};
use wzsafe::io::{self, PipelineConfig};
use wzsafe::model::WorkZoneLayout;
use wzsafe::pipeline::{analyze_tracks, density_fields};
use wzsafe::sim::{run_replication, scenarios, ScenarioConfig};
use wzsafe::{Error, Execution};

#[derive(Parser)]
#[command(name = "wzsafe", version, about = "Work-zone safety assessment and correction")]
struct Cli {
    /// Print errors as one JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write one replication's trajectories.
    Simulate(SimulateArgs),
    /// Detect and classify unsafe segments, then map their density.
    Analyze(AnalyzeArgs),
    /// Turn density files into an assessment report with problem flags.
    Assess(AssessArgs),
    /// Simulate, assess and correct the layout until it is safe.
    CorrectLoop(LoopArgs),
    /// Fit driving parameters to observed speeds with the orthogonal design.
    Calibrate(CalibrateArgs),
    /// Train the linear classifier on a synthetic labelled corpus.
    TrainClassifier(TrainArgs),
    /// Draw a density CSV as a PGM heatmap with an SVG overlay.
    Render(RenderArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON; omitted fields take their defaults.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// One of the built-in scenarios 1 to 11.
    #[arg(long)]
    preset: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    replication: u32,
    /// Simulated time in seconds, overriding the scenario.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write detector crossings here.
    #[arg(long)]
    detectors: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Pipeline configuration supplying detection, classifier and grid.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AssessArgs {
    /// Directory of `density_<label>.csv` files.
    #[arg(long)]
    density: PathBuf,
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Pipeline configuration supplying thresholds, bounds and grid settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LoopArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 5)]
    max_iters: usize,
    /// History file; defaults to `history.json` in the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Literal,
    Absolute,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Observed speeds JSON; defaults to the bundled work-area observations.
    #[arg(long)]
    observations: Option<PathBuf>,
    /// Scenario template JSON.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "literal")]
    mode: Mode,
    /// Simulated time per run in seconds, overriding the scenario.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 250)]
    per_class: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Share of the corpus held out to measure agreement with the rules.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    density: PathBuf,
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Label of the field; inferred from a `density_<label>.csv` name otherwise.
    #[arg(long)]
    label: Option<String>,
    /// Output prefix; `.pgm` and `.svg` are appended.
    #[arg(long)]
    out: PathBuf,
}

fn exec(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(vec![msg.into()])
}

fn read_layout(path: Option<&Path>) -> wzsafe::Result<WorkZoneLayout> {
    let layout = match path {
        Some(p) => io::read_json(p)?,
        None => WorkZoneLayout::default(),
    };
    let problems = wzsafe::model::validate_layout(&layout);
    if problems.is_empty() {
        Ok(layout)
    } else {
        Err(Error::InvalidConfig(problems))
    }
}

fn read_pipeline(path: Option<&Path>) -> wzsafe::Result<PipelineConfig> {
    let cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.check()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> wzsafe::Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| invalid(format!("output directory {} is not writable: {e}", dir.display())))
}

fn label_from_name(path: &Path) -> Option<BehaviorLabel> {
    let stem = path.file_stem()?.to_str()?;
    BehaviorLabel::parse(stem.strip_prefix("density_")?)
}

fn simulate(a: &SimulateArgs) -> wzsafe::Result<()> {
    let mut cfg: ScenarioConfig = match (&a.scenario, a.preset) {
        (Some(p), _) => io::read_json(p)?,
        (None, Some(n)) => scenarios::scenario(n).ok_or_else(|| invalid(format!("no preset scenario {n}")))?,
        (None, None) => ScenarioConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.duration {
        cfg.sim_duration = d;
    }
    cfg.check()?;
    let out = run_replication(&cfg, a.replication)?;
    io::write_tracks(&a.out, &out.tracks)?;
    if let Some(p) = &a.detectors {
        io::write_detectors_csv(&out.detectors, io::create(p)?)?;
    }
    eprintln!(
        "{} vehicles entered, {} left; {} tracks written to {}",
        out.stats.injected,
        out.stats.exited,
        out.tracks.len(),
        a.out.display()
    );
    Ok(())
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> wzsafe::Result<()> {
    let cfg = read_pipeline(a.config.as_deref())?;
    let layout = match &a.layout {
        Some(_) => read_layout(a.layout.as_deref())?,
        None => cfg.scenario.effective_layout(),
    };
    let grid = cfg.grid_for(&layout);
    let problems = grid.validate(None);
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    let tracks = io::read_tracks(&a.tracks)?;
    let analysis = analyze_tracks(&tracks, &layout, &cfg.analysis()?, exec(cli))?;
    create_dir(&a.out)?;
    io::write_segments_csv(&analysis.segments, io::create(&a.out.join("segments.csv"))?)?;
    let fields = density_fields(&analysis, &grid, exec(cli));
    for f in &fields {
        let path = a.out.join(format!("density_{}.csv", f.label.slug()));
        io::write_density_csv(f, std::io::BufWriter::new(io::create(&path)?))?;
    }
    let report = build_report(&[fields], &layout, None)?;
    io::write_json(&a.out.join("report.json"), &report)?;
    eprintln!(
        "{} vehicles analysed ({} skipped), {} unsafe segments",
        analysis.vehicles,
        analysis.skipped,
        analysis.segments.len()
    );
    Ok(())
}

fn assess_cmd(a: &AssessArgs) -> wzsafe::Result<()> {
    let cfg = read_pipeline(a.config.as_deref())?;
    let layout = match &a.layout {
        Some(_) => read_layout(a.layout.as_deref())?,
        None => cfg.scenario.effective_layout(),
    };
    let base = cfg.grid_for(&layout);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&a.density)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| label_from_name(p).is_some())
        .collect();
    paths.sort();
    let mut fields = Vec::new();
    for p in &paths {
        let label = label_from_name(p).expect("filtered above");
        fields.push(io::read_density_csv(io::open(p)?, label, &base)?);
    }
    let report = build_report(&[fields], &layout, None)?;
    let flags = assess(&report, &cfg.thresholds);
    let recommendations = if flags.is_empty() {
        Vec::new()
    } else {
        match recommend(&flags, &layout, &cfg.bounds) {
            Ok(r) => r,
            Err(Error::NoApplicableAction) => Vec::new(),
            Err(e) => return Err(e),
        }
    };
    let out = serde_json::json!({
        "report": report,
        "flags": flags,
        "recommendations": recommendations,
        "safe": flags.is_empty(),
    });
    io::write_json(&a.out, &out)?;
    eprintln!("{} problem(s) flagged", flags.len());
    Ok(())
}

fn correct_loop(cli: &Cli, a: &LoopArgs) -> wzsafe::Result<()> {
    let cfg = read_pipeline(Some(&a.config))?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => {
            create_dir(&cfg.output_dir)?;
            cfg.output_dir.join("history.json")
        }
    };
    let history = correction_loop(&cfg.scenario, &cfg.loop_config()?, a.max_iters, exec(cli))?;
    io::write_json(&out, &history)?;
    eprintln!(
        "{:?} after {} iteration(s): {}",
        history.verdict,
        history.iterations.len(),
        history.reason
    );
    Ok(())
}

fn calibrate_cmd(cli: &Cli, a: &CalibrateArgs) -> wzsafe::Result<()> {
    let actual: Observations = match &a.observations {
        Some(p) => io::read_json(p)?,
        None => Observations::default(),
    };
    let mut template: ScenarioConfig = match &a.scenario {
        Some(p) => io::read_json(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(d) = a.duration {
        template.sim_duration = d;
    }
    let cfg = CalibrationConfig {
        mode: match a.mode {
            Mode::Literal => IndicatorMode::Literal,
            Mode::Absolute => IndicatorMode::Absolute,
        },
        ..CalibrationConfig::default()
    };
    let result = calibrate(&actual, &template, &cfg, exec(cli))?;
    io::write_json(&a.out, &result)?;
    eprintln!(
        "best {} ; {}/{} measures within {}%",
        result.best_label,
        result.validation.within,
        result.validation.measures.len(),
        cfg.tolerance_pct
    );
    Ok(())
}

fn train_classifier(a: &TrainArgs) -> wzsafe::Result<()> {
    if !(0.0..1.0).contains(&a.holdout) {
        return Err(invalid("holdout must lie in [0, 1)"));
    }
    let rules = RuleConfig::default();
    let data = corpus::generate(a.per_class, a.seed, &rules);
    let n_test = (data.len() as f64 * a.holdout).round() as usize;
    // interleaved split keeps every class in both parts
    let stride = data.len().checked_div(n_test).unwrap_or(usize::MAX);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, d) in data.into_iter().enumerate() {
        if n_test > 0 && i % stride == 0 && test.len() < n_test {
            test.push(d);
        } else {
            train.push(d);
        }
    }
    let model = wzsafe::classify::train(&train, &TrainConfig::default())?;
    std::fs::write(&a.out, model.to_text())?;
    if !test.is_empty() {
        let agree = test
            .iter()
            .filter(|(f, l)| wzsafe::classify::predict(&model, f) == *l)
            .count();
        eprintln!(
            "held-out agreement with rules: {:.2}% ({agree}/{})",
            100.0 * agree as f64 / test.len() as f64,
            test.len()
        );
    }
    Ok(())
}

fn render(a: &RenderArgs) -> wzsafe::Result<()> {
    let layout = read_layout(a.layout.as_deref())?;
    let label = match &a.label {
        Some(s) => BehaviorLabel::parse(s).ok_or_else(|| invalid(format!("unknown label {s}")))?,
        None => label_from_name(&a.density)
            .ok_or_else(|| invalid("pass --label or name the file density_<label>.csv"))?,
    };
    let field = io::read_density_csv(io::open(&a.density)?, label, &DensityGridSpec::default())?;
    let r = io::render_heatmap(&field, &layout);
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let with_ext = |ext: &str| {
        let mut s = a.out.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    std::fs::write(with_ext(".pgm"), &r.pgm)?;
    std::fs::write(with_ext(".svg"), &r.svg)?;
    Ok(())
}

fn run(cli: &Cli) -> wzsafe::Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(cli, a),
        Command::Assess(a) => assess_cmd(a),
        Command::CorrectLoop(a) => correct_loop(cli, a),
        Command::Calibrate(a) => calibrate_cmd(cli, a),
        Command::TrainClassifier(a) => train_classifier(a),
        Command::Render(a) => render(a),
    }
}

fn exit_code(e: &Error) -> u8 {
    let missing_input = matches!(e, Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound);
    if e.is_validation() || missing_input {
        1
    } else {
        2
    }
}

fn report_error(json: bool, kind: &str, message: &str, code: u8) {
    if json {
        let v = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
        eprintln!("{v}");
    } else {
        eprintln!("error: {message}");
    }
}

fn main() -> ExitCode {
    let json_errors = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if json_errors {
                report_error(true, "usage", e.render().to_string().trim(), 1);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == 1 { "validation" } else { "runtime" };
            report_error(cli.json_errors, kind, &e.to_string(), code);
            ExitCode::from(code)
        }
    }
}
