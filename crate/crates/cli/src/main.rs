use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kbner::corpus::{format_corpus, Taxonomy};
use kbner::pipeline::{
    generate_synthetic, read_corpus, run_ablation, run_baseline, run_evaluate, run_predict,
    run_train, AblationSetting, PipelineConfig, SyntheticSpec,
};

#[derive(Parser)]
#[command(name = "kbner", version, about = "Knowledge-based fine-grained NER cascade")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train boundary, linking and classifier models.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Tag a corpus with the trained cascade.
    Predict {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        io: PredictIo,
        /// Write one JSON record per predicted span.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score a predicted corpus against gold.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Promote orphan I- tags instead of rejecting the files.
        #[arg(long)]
        repair: bool,
        /// Write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the confusion matrix as CSV.
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Gold-span classification under the six knowledge presets.
    Ablate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate a synthetic corpus and knowledge base.
    Synth {
        /// Output directory for train/dev/test.tsv and kb.jsonl.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SyntheticSpec::default().n_entities)]
        n_entities: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().n_train)]
        n_train: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().n_dev)]
        n_dev: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().n_test)]
        n_test: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().kb_fraction)]
        kb_fraction: f64,
        #[arg(long, default_value_t = SyntheticSpec::default().noise_rate)]
        noise_rate: f64,
        #[arg(long, default_value_t = SyntheticSpec::default().seed)]
        seed: u64,
    },
    /// Tag a corpus with the direct fine-grained baseline tagger.
    Baseline {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        io: PredictIo,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration (TOML).
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    model_dir: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Ablation preset, e.g. `all` or `context+arguments`.
    #[arg(long)]
    ablation: Option<String>,
}

#[derive(Args)]
struct PredictIo {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Promote orphan I- tags in the input instead of rejecting it.
    #[arg(long)]
    repair: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        let paths = &mut cfg.paths;
        for (slot, value) in [
            (&mut paths.train, &self.train),
            (&mut paths.dev, &self.dev),
            (&mut paths.kb, &self.kb),
            (&mut paths.model_dir, &self.model_dir),
        ] {
            if value.is_some() {
                slot.clone_from(value);
            }
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(a) = &self.ablation {
            cfg.ablation = AblationSetting::Preset(a.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let tax = Taxonomy::bundled();
    match cli.command {
        Command::Train { cfg } => {
            let cfg = cfg.load()?;
            let manifest = run_train(&cfg, &tax)?;
            print!("{}", manifest.to_json());
        }
        Command::Predict { cfg, io, trace } => {
            let cfg = cfg.load()?;
            let input = read_corpus(&io.input, io.repair, None)?;
            let pred = run_predict(&cfg, &input)?;
            write(&io.output, &format_corpus(&pred.dataset))?;
            if let Some(t) = trace {
                write(&t, &pred.traces_jsonl())?;
            }
        }
        Command::Evaluate {
            gold,
            pred,
            repair,
            json,
            confusion,
        } => {
            let g = read_corpus(&gold, repair, Some(&tax))?;
            let p = read_corpus(&pred, repair, Some(&tax))?;
            let report = run_evaluate(&g, &p, &tax)?;
            print!("{}", report.to_table());
            if let Some(j) = json {
                write(&j, &(report.to_json() + "\n"))?;
            }
            if let Some(c) = confusion {
                write(&c, &report.confusion_csv())?;
            }
        }
        Command::Ablate { cfg, json } => {
            let cfg = cfg.load()?;
            let report = run_ablation(&cfg, &tax)?;
            print!("{}", report.to_table());
            if let Some(j) = json {
                write(&j, &(report.to_json() + "\n"))?;
            }
        }
        Command::Synth {
            out,
            n_entities,
            n_train,
            n_dev,
            n_test,
            kb_fraction,
            noise_rate,
            seed,
        } => {
            let spec = SyntheticSpec {
                n_entities,
                n_train,
                n_dev,
                n_test,
                kb_fraction,
                noise_rate,
                seed,
            };
            let corpus = generate_synthetic(&spec)?;
            corpus.write(&out)?;
            println!(
                "wrote {} train, {} dev, {} test sentences and {} records to {}",
                corpus.train.len(),
                corpus.dev.len(),
                corpus.test.len(),
                corpus.kb.len(),
                out.display()
            );
        }
        Command::Baseline { cfg, io } => {
            let cfg = cfg.load()?;
            let input = read_corpus(&io.input, io.repair, None)?;
            let pred = run_baseline(&cfg, &tax, &input)?;
            write(&io.output, &format_corpus(&pred))?;
        }
    }
    Ok(())
}
