//! `gml` command-line interface: run single episodes, generate synthetic
//! bundles and evaluate many episodes against the nearest-centroid baseline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gml_core::episode::{generate_synthetic, load_episode, save_report, write_bundle, SynthParams, MANIFEST_FILE};
use gml_core::eval::{evaluate_synthetic, evaluate_with, EpisodeOutcome, EvalSummary, SUMMARY_FORMAT};
use gml_core::graph::CcdFamilies;
use gml_core::influence::FitOptions;
use gml_core::{gradual_inference, GmlError, InferenceConfig, Result};

#[derive(Parser)]
#[command(name = "gml", version, about = "Gradual machine learning for transductive few-shot classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label the queries of one episode bundle.
    Run {
        bundle: PathBuf,
        #[command(flatten)]
        inference: InferenceArgs,
        /// Report path (default: <bundle>/report.json).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic Gaussian-cluster episode bundle.
    Synth {
        #[command(flatten)]
        generator: GeneratorArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate many episodes: SOURCE is a synthetic episode count or a glob of bundle directories.
    Eval {
        source: String,
        #[command(flatten)]
        inference: InferenceArgs,
        #[command(flatten)]
        generator: GeneratorArgs,
        /// Comma-separated query counts; evaluates one synthetic suite per count.
        #[arg(long, value_delimiter = ',')]
        sweep_queries: Vec<usize>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Summary path (default: eval_summary.json).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write every episode report into this directory.
        #[arg(long)]
        reports_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InferenceArgs {
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    batch: usize,
    #[arg(long)]
    update_centroids: bool,
    #[arg(long, default_value_t = 1)]
    refit_every: usize,
    /// Fit one CCD influence model per (backbone, class) instead of per backbone.
    #[arg(long)]
    ccd_per_class: bool,
    #[arg(long, default_value_t = 200)]
    fit_max_iterations: usize,
    #[arg(long, default_value_t = 100.0)]
    tau_max: f64,
}

impl InferenceArgs {
    fn config(&self, seed: u64) -> Result<InferenceConfig> {
        let config = InferenceConfig {
            k: self.k,
            m: self.m,
            n: self.n,
            batch: self.batch,
            refit_every: self.refit_every,
            update_centroids: self.update_centroids,
            seed,
            ccd_families: if self.ccd_per_class {
                CcdFamilies::PerClass
            } else {
                CcdFamilies::PerBackbone
            },
            fit: FitOptions {
                max_iterations: self.fit_max_iterations,
                tau_max: self.tau_max,
                ..FitOptions::default()
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Clone, Copy)]
struct GeneratorArgs {
    #[arg(long, default_value_t = 5)]
    ways: usize,
    #[arg(long, default_value_t = 1)]
    shots: usize,
    #[arg(long, default_value_t = 15)]
    queries: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    backbones: usize,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GeneratorArgs {
    fn params(&self) -> SynthParams {
        SynthParams {
            ways: self.ways,
            shots: self.shots,
            queries: self.queries,
            dim: self.dim,
            backbones: self.backbones,
            separation: self.separation,
            noise: self.noise,
            seed: self.seed,
        }
    }
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    format: &'static str,
    config: InferenceConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<SynthParams>,
    rows: &'a [EvalSummary],
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            bundle,
            inference,
            output,
        } => cmd_run(&bundle, &inference, output),
        Command::Synth { generator, output } => cmd_synth(&generator, &output),
        Command::Eval {
            source,
            inference,
            generator,
            sweep_queries,
            jobs,
            output,
            reports_dir,
        } => cmd_eval(&source, &inference, &generator, &sweep_queries, jobs, output, reports_dir),
    }
}

fn cmd_run(bundle: &Path, inference: &InferenceArgs, output: Option<PathBuf>) -> Result<()> {
    let config = inference.config(0)?;
    let episode = load_episode(bundle)?;
    let report = gradual_inference(&episode, &config)?;
    let path = output.unwrap_or_else(|| bundle.join("report.json"));
    save_report(&report, &path)?;
    println!(
        "labeled {} queries in {} iterations; report written to {}",
        report.predictions.len(),
        report.trace.iterations.len(),
        path.display()
    );
    if let Some(acc) = report.accuracy {
        let correct = (acc * report.scored() as f64).round() as usize;
        println!("accuracy: {acc:.4} ({correct}/{})", report.scored());
    }
    Ok(())
}

fn cmd_synth(generator: &GeneratorArgs, output: &Path) -> Result<()> {
    let episode = generate_synthetic(&generator.params())?;
    write_bundle(&episode, output)?;
    println!(
        "wrote {}-way {}-shot episode with {} samples to {}",
        episode.ways(),
        episode.shots(),
        episode.sample_count(),
        output.display()
    );
    Ok(())
}

fn bundle_dirs(pattern: &str) -> Result<Vec<PathBuf>> {
    let as_dir = Path::new(pattern);
    let mut dirs: Vec<PathBuf> = if as_dir.is_dir() && !as_dir.join(MANIFEST_FILE).is_file() {
        std::fs::read_dir(as_dir)
            .map_err(|e| GmlError::Io {
                path: as_dir.to_path_buf(),
                source: e,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect()
    } else {
        glob::glob(pattern)
            .map_err(|e| GmlError::InvalidParameter(format!("bad glob `{pattern}`: {e}")))?
            .filter_map(|p| p.ok())
            .collect()
    };
    dirs.retain(|d| d.join(MANIFEST_FILE).is_file());
    dirs.sort();
    Ok(dirs)
}

fn cmd_eval(
    source: &str,
    inference: &InferenceArgs,
    generator: &GeneratorArgs,
    sweep: &[usize],
    jobs: usize,
    output: Option<PathBuf>,
    reports_dir: Option<PathBuf>,
) -> Result<()> {
    let config = inference.config(generator.seed)?;
    let mut rows = Vec::new();
    let mut outcomes: Vec<EpisodeOutcome> = Vec::new();
    let synthetic = source.parse::<usize>().ok();
    match synthetic {
        Some(count) => {
            let base = generator.params();
            base.validate()?;
            let query_counts = if sweep.is_empty() { vec![base.queries] } else { sweep.to_vec() };
            for q in query_counts {
                let params = SynthParams { queries: q, ..base };
                let (summary, mut out) = evaluate_synthetic(&params, count, &config, jobs)?;
                rows.push(summary);
                outcomes.append(&mut out);
            }
        }
        None => {
            if !sweep.is_empty() {
                return Err(GmlError::InvalidParameter(
                    "--sweep-queries needs a synthetic episode count as SOURCE".into(),
                ));
            }
            let dirs = bundle_dirs(source)?;
            if dirs.is_empty() {
                return Err(GmlError::Manifest(format!("no episode bundles matched `{source}`")));
            }
            let (summary, out) = evaluate_with(
                dirs.len(),
                |i| Ok((dirs[i].display().to_string(), load_episode(&dirs[i])?)),
                &config,
                jobs,
                None,
            )?;
            rows.push(summary);
            outcomes = out;
        }
    }

    for row in &rows {
        let q = row.query_count.map_or_else(|| "-".to_string(), |q| q.to_string());
        println!(
            "queries={q} episodes={} gml={:.4}±{:.4} baseline={:.4}±{:.4} gap={:+.4}±{:.4}",
            row.episode_count,
            row.mean_accuracy,
            row.ci_half_width,
            row.baseline_mean_accuracy,
            row.baseline_ci_half_width,
            row.mean_gap,
            row.gap_ci_half_width
        );
    }
    let path = output.unwrap_or_else(|| PathBuf::from("eval_summary.json"));
    let file = SummaryFile {
        format: SUMMARY_FORMAT,
        config,
        generator: synthetic.map(|_| generator.params()),
        rows: &rows,
    };
    let text = serde_json::to_string_pretty(&file).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| GmlError::Io { path: path.clone(), source: e })?;
    if let Some(dir) = reports_dir {
        std::fs::create_dir_all(&dir).map_err(|e| GmlError::Io { path: dir.clone(), source: e })?;
        for o in &outcomes {
            let name = o.id.replace(['/', '\\'], "_");
            save_report(&o.report, dir.join(format!("{name}.json")))?;
        }
    }
    Ok(())
}
