//! `onionprint` command-line tool.
//!
//! Exit codes: 0 on success, 2 for bad input (unreadable or malformed
//! files, invalid parameters, unusable datasets), 3 when an internal
//! invariant is violated.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use onionprint::alignment::match_minutiae_with;
use onionprint::evaluation::{
    default_thresholds, load_fingerprint, sweep, sweep_csv, write_reports, Dataset, Protocol,
    SweepGrid,
};
use onionprint::imgproc::{extract, minutiae_file, pgm};
use onionprint::scoring::{score_match, CSV_HEADER};
use onionprint::synth::{self, RenderConfig, SynthConfig};
use onionprint::{Error, MatchConfig};

#[derive(Parser)]
#[command(
    name = "onionprint",
    version,
    about = "Fingerprint matching with convex layers of minutiae"
)]
struct Cli {
    /// Worker threads (default: all cores). Never changes any output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract minutiae from a PGM image.
    Extract {
        image: PathBuf,
        /// Minutiae file to write; standard output if omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Compare two fingerprints (PGM images or minutiae files).
    Match {
        a: PathBuf,
        b: PathBuf,
        /// Print the breakdown as JSON.
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        /// Print the breakdown as a CSV row with header.
        #[arg(long)]
        csv: bool,
        /// Also write the matched pairs as CSV.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Score a dataset and write scores.csv, curves.csv and summary.txt.
    Evaluate {
        /// Directory of `FFF_I.pgm` / `FFF_I.min` files, or a manifest CSV.
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        params: Params,
    },
    /// Evaluate every combination of comma-separated parameter values.
    Sweep {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Base configuration file for the parameters not swept.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a synthetic dataset of minutiae files (or rendered images).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        fingers: u32,
        #[arg(long, default_value_t = 4)]
        impressions: u32,
        /// Write rendered PGM images instead of minutiae files.
        #[arg(long)]
        images: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fvc,
    AllPairs,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, value_enum, default_value = "fvc")]
    mode: Mode,
    /// Leave gated pairs out of the rates instead of scoring them 0.
    #[arg(long)]
    exclude_gated: bool,
}

impl ProtocolArgs {
    fn protocol(&self) -> Protocol {
        match self.mode {
            Mode::Fvc => Protocol::Fvc,
            Mode::AllPairs => Protocol::AllPairs,
        }
    }
}

/// Matching parameters; flags override the config file.
#[derive(Args)]
struct Params {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rm: Option<String>,
    #[arg(long)]
    r0: Option<String>,
    #[arg(long)]
    theta0: Option<String>,
    #[arg(long)]
    sim: Option<String>,
    /// Maximum layer-count difference, or `inf`.
    #[arg(long)]
    diff: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    border_margin: Option<String>,
    /// `otsu` or a fixed threshold 0..=255.
    #[arg(long)]
    binarize: Option<String>,
    #[arg(long)]
    strict_type: bool,
}

impl Params {
    fn config(&self) -> Result<MatchConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => MatchConfig::from_file(p)?,
            None => MatchConfig::default(),
        };
        let flags = [
            ("rm", &self.rm),
            ("r0", &self.r0),
            ("theta0", &self.theta0),
            ("sim", &self.sim),
            ("diff", &self.diff),
            ("p", &self.p),
            ("border_margin", &self.border_margin),
            ("binarize", &self.binarize),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.strict_type {
            cfg.strict_type = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_delimiter = ',')]
    rm: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    sim: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    diff: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    r0: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    theta0: Vec<String>,
}

impl GridArgs {
    /// Unswept parameters keep the base value.
    fn grid(&self, base: &MatchConfig) -> Result<SweepGrid, Error> {
        fn values<T>(
            raw: &[String],
            key: &str,
            base: &MatchConfig,
            get: impl Fn(&MatchConfig) -> T,
        ) -> Result<Vec<T>, Error> {
            if raw.is_empty() {
                return Ok(vec![get(base)]);
            }
            raw.iter()
                .map(|v| {
                    let mut c = *base;
                    c.set(key, v)?;
                    c.validate()?;
                    Ok(get(&c))
                })
                .collect()
        }
        Ok(SweepGrid {
            rm: values(&self.rm, "rm", base, |c| c.rm)?,
            sim: values(&self.sim, "sim", base, |c| c.sim)?,
            diff: values(&self.diff, "diff", base, |c| c.diff)?,
            r0: values(&self.r0, "r0", base, |c| c.r0)?,
            theta0: values(&self.theta0, "theta0", base, |c| c.theta0)?,
        })
    }
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition(_) | Error::DegeneratePolygon(_) => {
                Failure::Internal(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract { image, out, params } => {
            let cfg = params.config()?;
            let img = pgm::read(&image)?;
            let set = extract(&img, &cfg.extract_config())?;
            match out {
                Some(path) => {
                    minutiae_file::write(&path, &set)?;
                    println!("{} minutiae written to {}", set.len(), path.display());
                }
                None => {
                    print!("{}", minutiae_file::to_string(&set));
                    eprintln!("{} minutiae", set.len());
                }
            }
        }
        Command::Match {
            a,
            b,
            json,
            csv,
            pairs,
            params,
        } => {
            let cfg = params.config()?;
            let fa = load_fingerprint(&a)?;
            let fb = load_fingerprint(&b)?;
            let sa = fa.minutiae(&cfg)?;
            let sb = fb.minutiae(&cfg)?;
            let mr = match_minutiae_with(&sa, &sb, &cfg.tolerance());
            let breakdown = score_match(&sa, &sb, &mr, &cfg)?;
            if let Some(path) = pairs {
                write_file(&path, mr.to_csv(&sa, &sb))?;
            }
            let (ida, idb) = (a.display().to_string(), b.display().to_string());
            if json {
                let text = serde_json::to_string_pretty(&breakdown)
                    .map_err(|e| Failure::Internal(e.to_string()))?;
                println!("{text}");
            } else if csv {
                println!("{CSV_HEADER}");
                println!("{}", breakdown.csv_row(&ida, &idb));
            } else {
                print_breakdown(&breakdown);
            }
        }
        Command::Evaluate {
            dataset,
            out,
            protocol,
            params,
        } => {
            let cfg = params.config()?;
            let ds = Dataset::load(&dataset)?;
            let results = sweep(
                &ds,
                &SweepGrid::single(&cfg),
                &cfg,
                protocol.protocol(),
                &default_thresholds(),
                protocol.exclude_gated,
            )?;
            let r = &results[0];
            write_reports(&out, &r.table, &r.report, &cfg)?;
            print!("{}", r.report.summary());
        }
        Command::Sweep {
            dataset,
            out,
            protocol,
            grid,
            config,
        } => {
            let base = match config {
                Some(p) => MatchConfig::from_file(&p)?,
                None => MatchConfig::default(),
            };
            let grid = grid.grid(&base)?;
            let ds = Dataset::load(&dataset)?;
            let results = sweep(
                &ds,
                &grid,
                &base,
                protocol.protocol(),
                &default_thresholds(),
                protocol.exclude_gated,
            )?;
            std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
            for (i, r) in results.iter().enumerate() {
                write_reports(
                    &out.join(format!("config_{i:03}")),
                    &r.table,
                    &r.report,
                    &r.config,
                )?;
            }
            let index = sweep_csv(&results);
            write_file(&out.join("sweep.csv"), &index)?;
            print!("{index}");
        }
        Command::Synth {
            out,
            seed,
            fingers,
            impressions,
            images,
        } => {
            std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
            if images {
                let db =
                    synth::image_database(seed, fingers, impressions, &RenderConfig::default());
                for (id, img) in &db {
                    pgm::write(&out.join(format!("{id}.pgm")), img)?;
                }
                println!("{} images written to {}", db.len(), out.display());
            } else {
                let cfg = SynthConfig {
                    fingers,
                    impressions,
                    ..SynthConfig::default()
                };
                let db = synth::database(seed, &cfg);
                for (id, set) in &db {
                    minutiae_file::write(&out.join(format!("{id}.min")), set)?;
                }
                println!("{} minutiae files written to {}", db.len(), out.display());
            }
        }
    }
    Ok(())
}

fn print_breakdown(b: &onionprint::ScoreBreakdown) {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    println!("matched        {} of {} / {}", b.k, b.m, b.n);
    println!("minutiae score {:.6}", b.minutiae_score);
    println!("layers         {} / {}", b.layers_input, b.layers_template);
    let dists: Vec<String> = b
        .layer_distances
        .iter()
        .map(|d| format!("{d:.6}"))
        .collect();
    println!("distances      [{}]", dists.join(", "));
    println!("average        {}", opt(b.average));
    println!("alpha          {}", opt(b.alpha));
    println!("final score    {:.6}", b.final_score);
    if let Some(g) = b.gated {
        println!("gated          {g}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let outcome = run(cli);
    let _ = std::io::stdout().flush();
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
