//! `nilm`: ingest REDD-style data, synthesize houses, train, evaluate and
//! tabulate state-change detectors.

mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nilm_core::data::{Alpha, ExperimentConfig};
use nilm_core::eval::{MetricsReport, ReportEntry};
use nilm_core::model::{load_checkpoint, save_checkpoint, Checkpoint, InputScaling, ModelConfig};
use nilm_core::pipeline::{evaluate, ingest_house, load_house, prepare_appliance, train_model, RunRecord};
use nilm_core::synth::{experiment_config, generate_house, reference_scenario, write_redd_layout};

use manifest::RunDir;

/// Aggregate minute counts other published work reports for the REDD houses.
const REFERENCE_TOTALS: [(u32, usize); 3] = [(1, 25946), (2, 19856), (6, 17605)];
const TOTAL_TOLERANCE: f64 = 0.02;

#[derive(Parser)]
#[command(
    name = "nilm",
    version,
    about = "Appliance state-change detection from aggregate power"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Directory that receives the run directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Name of the run directory; defaults to `<command>-<UTC timestamp>`.
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Resample every channel of a REDD house to one minute.
    Ingest {
        /// Root holding `house_<n>/` directories.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        house: u32,
        /// Longest gap, in minutes, bridged by resampling.
        #[arg(long, default_value_t = 3)]
        max_gap: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Write the reference synthetic house in REDD layout, with a matching config.
    Synth {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        house: u32,
        #[arg(long)]
        minutes: Option<usize>,
        /// Training prefix written into the generated config.
        #[arg(long, default_value_t = 6000)]
        training_samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Label, split, augment and train one model per appliance.
    Train(TrainArgs),
    /// Score checkpoints on their held-out test split.
    Eval {
        #[arg(long, required = true, num_args = 1..)]
        checkpoint: Vec<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Append published reference rows to the comparison tables.
        #[arg(long)]
        with_paper_reference: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Merge report.json files into comparison tables.
    Report {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        with_paper_reference: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Dnn,
    Rnn,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Root holding `house_<n>/` directories (raw or ingested).
    #[arg(long)]
    data: PathBuf,
    /// Overrides the config's house.
    #[arg(long)]
    house: Option<u32>,
    /// Appliance to train; all configured appliances when omitted.
    #[arg(long)]
    appliance: Option<String>,
    #[arg(long, value_enum, default_value_t = ModelKind::Dnn)]
    model: ModelKind,
    /// RNN window length.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=3))]
    window: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Target positive:negative ratio, e.g. `1:8` or `0.125`.
    #[arg(long)]
    alpha: Option<Alpha>,
    /// `training-std` or `none`.
    #[arg(long)]
    input_scaling: Option<InputScaling>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest {
            data,
            house,
            max_gap,
            common,
        } => cmd_ingest(&data, house, max_gap, &common),
        Command::Synth {
            seed,
            house,
            minutes,
            training_samples,
            common,
        } => cmd_synth(seed, house, minutes, training_samples, &common),
        Command::Train(args) => cmd_train(&args),
        Command::Eval {
            checkpoint,
            config,
            data,
            with_paper_reference,
            common,
        } => cmd_eval(&checkpoint, &config, &data, with_paper_reference, &common),
        Command::Report {
            input,
            with_paper_reference,
            common,
        } => cmd_report(&input, with_paper_reference, &common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_ingest(data: &Path, house: u32, max_gap: usize, common: &Common) -> Result<()> {
    let mut run = RunDir::create(common, "ingest")?;
    run.manifest.data = Some(data.to_path_buf());
    run.manifest.flags = json!({ "house": house, "max_gap": max_gap });
    let summary = ingest_house(data, house, &run.path, max_gap)?;
    run.artifact(format!("house_{house}"));
    for (ch, n) in &summary.channels {
        println!("channel {ch:>2}: {n} minutes");
    }
    println!(
        "house {house}: {} aggregate minutes in {} segment(s)",
        summary.aggregate_minutes, summary.aggregate_segments
    );
    if let Some(&(_, reference)) = REFERENCE_TOTALS.iter().find(|(h, _)| *h == house) {
        let rel = (summary.aggregate_minutes as f64 - reference as f64) / reference as f64;
        let verdict = if rel.abs() <= TOTAL_TOLERANCE {
            "within"
        } else {
            "outside"
        };
        println!(
            "reference total {reference}: {:+.2}% ({verdict} ±{:.0}%)",
            rel * 100.0,
            TOTAL_TOLERANCE * 100.0
        );
    }
    run.write_json("summary.json", &serde_json::to_string_pretty(&summary)?)?;
    run.finish()
}

fn cmd_synth(
    seed: Option<u64>,
    house: u32,
    minutes: Option<usize>,
    training_samples: usize,
    common: &Common,
) -> Result<()> {
    let mut spec = reference_scenario();
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(m) = minutes {
        spec.duration_minutes = m;
    }
    let mut run = RunDir::create(common, "synth")?;
    run.manifest.seed = Some(spec.seed);
    run.manifest.flags = json!({
        "house": house,
        "minutes": spec.duration_minutes,
        "training_samples": training_samples,
    });
    let generated = generate_house(&spec)?;
    write_redd_layout(&generated, &run.path, house)?;
    run.artifact(format!("house_{house}"));
    let cfg = experiment_config(&spec, house, training_samples);
    run.write_text("experiment.toml", &cfg.to_toml())?;
    for a in &generated.appliances {
        let positives = a.labels.iter().filter(|&&l| l == 1).count();
        println!(
            "{:<10} threshold {:>7.2} W, {positives} state changes",
            a.spec.name,
            a.spec.threshold()
        );
    }
    println!("wrote {}", run.path.display());
    run.finish()
}

fn model_config(args: &TrainArgs, cfg: &ExperimentConfig) -> Result<ModelConfig> {
    let mut settings = cfg.model.clone();
    settings.epochs = args.epochs.or(settings.epochs);
    settings.batch_size = args.batch_size.or(settings.batch_size);
    settings.hidden_width = args.hidden.or(settings.hidden_width);
    settings.input_scaling = args.input_scaling.or(settings.input_scaling);
    let model = match args.model {
        ModelKind::Dnn => {
            if args.window.is_some() {
                bail!("--window only applies to --model rnn");
            }
            ModelConfig::Dnn(settings.dnn_config(cfg.seed))
        }
        ModelKind::Rnn => ModelConfig::Rnn(settings.rnn_config(args.window.unwrap_or(2) as usize, cfg.seed)),
    };
    Ok(model)
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(h) = args.house {
        cfg.house = h;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let names = match &args.appliance {
        Some(name) => vec![cfg.appliance(name)?.name.clone()],
        None => cfg.appliance_names(),
    };
    let model = model_config(args, &cfg)?;

    let mut run = RunDir::create(&args.common, "train")?;
    run.manifest.config = Some(args.config.clone());
    run.manifest.data = Some(args.data.clone());
    run.manifest.seed = Some(cfg.seed);
    run.manifest.flags = json!({
        "house": cfg.house,
        "appliances": names,
        "alpha": cfg.alpha.0,
        "model": model,
    });

    let house = load_house(&args.data, &cfg)?;
    let mut records = Vec::new();
    for name in &names {
        let experiment = cfg.experiment(name)?;
        let prepared = prepare_appliance(&house, &experiment, model.window_length(), cfg.seed)
            .with_context(|| format!("preparing {name}"))?;
        let (net, history) = train_model(&prepared, &model, cfg.seed).with_context(|| format!("training {name}"))?;
        let stem = format!("house{}_{}_{}", cfg.house, name, model.label());

        let mut log = String::from("epoch,loss,batch_loss\n");
        log.push_str(&format!("0,{},\n", history.initial_loss));
        for (e, (l, b)) in history.epoch_loss.iter().zip(&history.epoch_batch_loss).enumerate() {
            log.push_str(&format!("{},{l},{b}\n", e + 1));
        }
        run.write_text(&format!("{stem}_loss.csv"), &log)?;

        let record = RunRecord {
            appliance: name.clone(),
            model: model.label(),
            training_rows: prepared.train_labels.len(),
            positives_before_augmentation: prepared.train.n_pos(),
            sigma: prepared.sigma,
            test_rows: prepared.test_labels.len(),
            final_loss: history.epoch_loss.last().copied(),
        };
        let initial_loss = history.initial_loss;
        let ckpt = Checkpoint::new(&net, cfg.seed, Some(experiment), Some(history));
        let ckpt_name = format!("{stem}.json");
        save_checkpoint(&run.path.join(&ckpt_name), &ckpt)?;
        run.artifact(ckpt_name.clone());
        println!(
            "{name}: {} rows ({} positives before augmentation, sigma {}), loss {initial_loss:.5} -> {}, wrote {ckpt_name}",
            record.training_rows,
            record.positives_before_augmentation,
            record.sigma,
            fmt_loss(record.final_loss),
        );
        records.push(record);
    }
    run.write_json("runs.json", &serde_json::to_string_pretty(&records)?)?;
    run.finish()
}

fn fmt_loss(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |l| format!("{l:.5}"))
}

fn cmd_eval(checkpoints: &[PathBuf], config: &Path, data: &Path, with_reference: bool, common: &Common) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let mut run = RunDir::create(common, "eval")?;
    run.manifest.config = Some(config.to_path_buf());
    run.manifest.data = Some(data.to_path_buf());
    run.manifest.flags = json!({
        "checkpoints": checkpoints,
        "with_paper_reference": with_reference,
    });

    let mut loaded = Vec::new();
    for path in checkpoints {
        let ckpt = load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
        let Some(stored) = ckpt.experiment.clone() else {
            bail!("{}: checkpoint records no experiment", path.display());
        };
        let expected = cfg.experiment(&stored.appliance)?;
        if expected != stored {
            bail!(
                "{}: checkpoint was trained for {:?}, config gives {:?}",
                path.display(),
                stored,
                expected
            );
        }
        loaded.push((ckpt, stored));
    }

    let house = load_house(data, &cfg)?;
    let mut report = MetricsReport::default();
    for (ckpt, experiment) in &loaded {
        let net = ckpt.network()?;
        let prepared = prepare_appliance(&house, experiment, ckpt.model.window_length(), ckpt.seed)?;
        let counts = evaluate(&net, &prepared)?;
        report.push(ReportEntry::new(
            cfg.house,
            &experiment.appliance,
            &ckpt.model.label(),
            counts,
        ));
    }
    write_report(&mut run, &report, with_reference)?;
    run.finish()
}

fn cmd_report(inputs: &[PathBuf], with_reference: bool, common: &Common) -> Result<()> {
    let mut run = RunDir::create(common, "report")?;
    run.manifest.flags = json!({ "inputs": inputs, "with_paper_reference": with_reference });
    let mut merged: BTreeMap<(u32, String, String), ReportEntry> = BTreeMap::new();
    for path in inputs {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let report = MetricsReport::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
        for e in report.entries {
            merged.insert((e.house, e.appliance.clone(), e.model.clone()), e);
        }
    }
    let mut report = MetricsReport::default();
    for e in merged.into_values() {
        report.push(e);
    }
    write_report(&mut run, &report, with_reference)?;
    run.finish()
}

fn write_report(run: &mut RunDir, report: &MetricsReport, with_reference: bool) -> Result<()> {
    let text = report.to_text(with_reference);
    print!("{text}");
    run.write_text("report.txt", &text)?;
    run.write_text("report.csv", &report.to_csv(with_reference))?;
    run.write_text("report_detail.csv", &report.to_detail_csv())?;
    run.write_json("report.json", &report.to_json())?;
    Ok(())
}
