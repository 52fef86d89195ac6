use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use robust_grad::harness::config::parse_seeds;
use robust_grad::harness::{
    run_check_suite, study_rows, write_rows, ExperimentConfig, Format, Study,
};
use robust_grad::problems::NoiseSetting;

const EXIT_CONFIG: u8 = 1;
const EXIT_CHECK: u8 = 2;

/// Heavy-tailed gradient estimation studies: moments, estimate, optimize, check.
#[derive(Parser, Debug)]
#[command(name = "robust-grad", version)]
struct Cli {
    /// moments | estimate | optimize | check
    study: String,
    /// Stability indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Huber threshold.
    #[arg(long)]
    mu: Option<f64>,
    /// Momentum of clipped-SGD.
    #[arg(long)]
    beta: Option<f64>,
    /// Clip radius of clipped-SGD.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    /// Samples per iteration (moments: comma-separated grid).
    #[arg(long, value_delimiter = ',')]
    n_samples: Option<Vec<usize>>,
    /// `0..50` or `1,2,7`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// s1, s2, s3 (comma separated).
    #[arg(long, value_delimiter = ',')]
    setting: Option<Vec<String>>,
    /// Repetitions for the moments study.
    #[arg(long)]
    trials: Option<usize>,
    /// Reset the estimator to zero before every update.
    #[arg(long)]
    cold_start: bool,
    /// Emit every k-th trajectory record (the last one is always kept).
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | jsonl
    #[arg(long)]
    format: Option<String>,
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

impl Cli {
    fn overrides(&self) -> Result<ExperimentConfig, String> {
        let seeds = self
            .seeds
            .as_deref()
            .map(parse_seeds)
            .transpose()
            .map_err(|e| e.to_string())?;
        let setting = self
            .setting
            .as_ref()
            .map(|names| {
                names
                    .iter()
                    .map(|n| {
                        NoiseSetting::from_name(n).ok_or_else(|| format!("unknown setting `{n}`"))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        let format = self
            .format
            .as_deref()
            .map(|f| Format::from_name(f).ok_or_else(|| format!("unknown format `{f}`")))
            .transpose()?;
        Ok(ExperimentConfig {
            study: None,
            methods: self.methods.clone(),
            alpha: self.alpha.clone(),
            dim: self.dim,
            tau: self.tau,
            eta: self.eta,
            mu: self.mu,
            beta: self.beta,
            c: self.c,
            iters: self.iters,
            n_samples: self.n_samples.clone(),
            seeds,
            setting,
            trials: self.trials,
            cold_start: self.cold_start.then_some(true),
            geo_tolerance: None,
            geo_max_iters: None,
            record_every: self.record_every,
            out: self.out.clone(),
            format,
            jobs: self.jobs,
        })
    }
}

fn open_output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let Some(study) = Study::from_name(&cli.study) else {
        return config_error(format!("unknown study `{}`", cli.study));
    };
    let overrides = match cli.overrides() {
        Ok(o) => o,
        Err(e) => return config_error(e),
    };
    let base = match &cli.config {
        Some(path) => match ExperimentConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => return config_error(e),
        },
        None => ExperimentConfig::default(),
    };
    if let Some(file_study) = base.study {
        if file_study != study {
            return config_error(format!(
                "config file is for study {file_study:?}, not `{}`",
                cli.study
            ));
        }
    }
    let config = base.overridden_by(overrides);

    if study == Study::Check {
        let report = run_check_suite();
        let written = open_output(config.out.as_ref()).and_then(|mut out| {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
            out.flush()
        });
        if let Err(e) = written {
            return config_error(e);
        }
        for r in report.results.iter().filter(|r| !r.passed) {
            eprintln!("FAILED {}: {}", r.name, r.detail);
        }
        return if report.passed() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(EXIT_CHECK)
        };
    }

    let rows = match study_rows(study, &config) {
        Ok(rows) => rows,
        Err(e) => return config_error(e),
    };
    let written = open_output(config.out.as_ref()).and_then(|mut out| {
        write_rows(&mut out, &rows, config.format())?;
        out.flush()
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => config_error(e),
    }
}
