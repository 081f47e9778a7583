use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use usermodel::pipeline::{
    control_reference, emit_report, fuse_loso, ingest_corpus, parse_metadata, score_corpus, Corpus,
    DistanceMatrix, EvaluationReport, Family, PipelineConfig, SUMMARY_FILE,
};
use usermodel::synth::{generate_cohort, SynthConfig, METADATA_FILE};
use usermodel::{Error, FeatureSet};

const DISTANCE_FILE: &str = "distances.csv";

#[derive(Parser, Debug)]
#[command(
    name = "usermodel",
    version,
    about = "Healthy-reference user models for motor biosignals"
)]
struct Cli {
    /// Corpus root with one directory per subject.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Subject metadata CSV (defaults to <corpus>/metadata.csv).
    #[arg(long, global = true)]
    metadata: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "gmm")]
    model: Family,
    /// Comma-separated feature sets (default: all seven).
    #[arg(long, global = true, value_delimiter = ',')]
    features: Option<Vec<FeatureSet>>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` model settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the control reference (standardisation + UBM) of each feature set.
    TrainUbm,
    /// Score every patient and write the distance matrix.
    Score,
    /// Leave-one-subject-out fusion of a distance matrix.
    Fuse {
        /// Distance matrix CSV (defaults to <out>/distances.csv).
        #[arg(long)]
        distances: Option<PathBuf>,
    },
    /// Print a fusion summary.
    Report,
    /// Generate a synthetic cohort.
    Synth {
        #[arg(long, default_value_t = 10)]
        n_controls: usize,
        #[arg(long, default_value_t = 10)]
        n_patients: usize,
    },
}

impl Cli {
    fn out(&self) -> Result<&Path, Error> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("--out is required".into()))
    }

    fn metadata(&self) -> Result<PathBuf, Error> {
        match (&self.metadata, &self.corpus) {
            (Some(m), _) => Ok(m.clone()),
            (None, Some(c)) => Ok(c.join(METADATA_FILE)),
            (None, None) => Err(Error::InvalidInput("--metadata or --corpus is required".into())),
        }
    }

    fn corpus(&self) -> Result<Corpus, Error> {
        let root = self
            .corpus
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("--corpus is required".into()))?;
        let corpus = ingest_corpus(root, self.metadata()?)?;
        for (id, source) in &corpus.gaps {
            log::info!("{id}: no {source} files");
        }
        Ok(corpus)
    }

    fn sets(&self) -> Vec<FeatureSet> {
        self.features.clone().unwrap_or_else(|| FeatureSet::ALL.to_vec())
    }

    fn config(&self) -> Result<PipelineConfig, Error> {
        let cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        Ok(match self.seed {
            Some(seed) => cfg.with_seed(seed),
            None => cfg,
        })
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Synth {
            n_controls,
            n_patients,
        } => {
            let cfg = SynthConfig {
                n_controls: *n_controls,
                n_patients: *n_patients,
                seed: cli.seed.unwrap_or(0),
                ..SynthConfig::default()
            };
            let subjects = generate_cohort(&cfg, cli.out()?)?;
            println!("wrote {} subjects to {}", subjects.len(), cli.out()?.display());
        }
        Command::TrainUbm => {
            let corpus = cli.corpus()?;
            let cfg = cli.config()?;
            let out = cli.out()?;
            std::fs::create_dir_all(out)?;
            for set in cli.sets() {
                let reference = control_reference(&corpus, set, &cfg.em)?;
                let path = out.join(format!("{set}.ref"));
                std::fs::write(&path, reference.to_text())?;
                println!(
                    "{set}: {} components -> {}",
                    reference.ubm.n_components(),
                    path.display()
                );
            }
        }
        Command::Score => {
            let corpus = cli.corpus()?;
            let dm = score_corpus(&corpus, cli.model, &cli.sets(), &cli.config()?)?;
            let out = cli.out()?;
            std::fs::create_dir_all(out)?;
            let path = out.join(DISTANCE_FILE);
            dm.write_csv(std::fs::File::create(&path)?)?;
            println!(
                "{} patients x {} feature sets -> {}",
                dm.subjects.len(),
                dm.sets.len(),
                path.display()
            );
        }
        Command::Fuse { distances } => {
            let out = cli.out()?;
            let path = distances.clone().unwrap_or_else(|| out.join(DISTANCE_FILE));
            let dm = DistanceMatrix::read_csv(std::fs::File::open(&path)?, cli.model)?;
            let records = parse_metadata(std::fs::File::open(cli.metadata()?)?)?;
            let report = fuse_loso(&dm, &records)?;
            for file in emit_report(&report, out)? {
                println!("{}", file.display());
            }
        }
        Command::Report => {
            let report = EvaluationReport::load(cli.out()?.join(SUMMARY_FILE))?;
            print_report(&report);
        }
    }
    Ok(())
}

fn print_report(r: &EvaluationReport) {
    let corr = |c: Option<usermodel::pipeline::Correlation>| match c {
        Some(c) => format!("{:.3} (p = {:.2e})", c.coefficient, c.p_value),
        None => "undefined".to_string(),
    };
    println!("model      {}", r.family);
    println!("patients   {}", r.n_subjects);
    println!("pearson    {}", corr(r.pearson));
    println!("spearman   {}", corr(r.spearman));
    println!("mae        {:.3}", r.median_abs_error);
    println!();
    println!("{:<14} {:>12} {:>10}", "feature set", "coefficient", "alone rho");
    for c in &r.coefficients {
        let alone = c.column_spearman.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<14} {:>12.4} {:>10}",
            c.feature_set.tag(),
            c.coefficient,
            alone
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
