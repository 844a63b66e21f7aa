use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use drhai_core::dialogue::{run_dialogue, transcript_lines, transcript_records};
use drhai_core::experiment::{run_experiment_with, CsvSink};
use drhai_core::reconcile::{similarity, single_shot_explanation, success_procedure};
use drhai_core::{load_kb, parse_formula, ExperimentConfig, Formula, KnowledgeBase, SolveContext, Strategies};
use drhai_service::{ServiceConfig, SessionConfig};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "drhai", version, about = "Dialectical reconciliation between an explainer and an explainee")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random knowledge-base pairs: dialogue against single-shot explanation, one CSV row per repetition.
    Bench {
        #[arg(long, default_value_t = 200)]
        kb_size: usize,
        #[arg(long, default_value_t = 0.2)]
        conflict_fraction: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Seconds per repetition before it is flagged as timed out.
        #[arg(long, default_value_t = 500.0)]
        time_limit: f64,
        /// Atoms per formula.
        #[arg(long, default_value_t = 0.25)]
        atom_ratio: f64,
        #[arg(long, default_value_t = 3)]
        max_premise_atoms: usize,
        /// CSV destination; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the automated dialogue between two knowledge-base files.
    Dialogue {
        #[arg(long)]
        kb_r: PathBuf,
        #[arg(long)]
        kb_e: PathBuf,
        /// Formulas separated by ';'.
        #[arg(long)]
        topic: String,
        /// Writes the moves as JSON records.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// The single-shot baseline: the smallest argument for the query and a minimum retraction.
    ExplainSsr {
        #[arg(long)]
        kb_r: PathBuf,
        #[arg(long)]
        kb_e: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Serves the HTTP API for human-played dialogues.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Persists sessions and uploaded scenarios here.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Menu entries besides agree-to-disagree.
        #[arg(long, default_value_t = 6)]
        menu_size: usize,
        /// Milliseconds the explainer may spend on a move.
        #[arg(long, default_value_t = 2000)]
        move_budget_ms: u64,
    },
}

fn read_kb(label: &str, path: &Path) -> Result<KnowledgeBase> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_kb(label, &text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_topic(text: &str) -> Result<Vec<Formula>> {
    let topic = text
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_formula(s).with_context(|| format!("topic formula '{}'", s.trim())))
        .collect::<Result<Vec<_>>>()?;
    if topic.is_empty() {
        bail!("the topic is empty");
    }
    Ok(topic)
}

fn bench(config: ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let writer: Box<dyn Write> = match &out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = CsvSink::new(writer)?;
    let rows = run_experiment_with(&config, |row| sink.write(row))?;
    sink.into_inner()?.flush()?;
    let done: Vec<_> = rows.iter().filter(|r| !r.timeout).collect();
    eprintln!(
        "{} repetitions, {} timed out, mean delta sigma: DR {:.2} / SSR {:.2}",
        rows.len(),
        rows.len() - done.len(),
        mean(done.iter().filter_map(|r| r.delta_sigma_dr)),
        mean(done.iter().filter_map(|r| r.delta_sigma_ssr)),
    );
    Ok(())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn dialogue(kb_r: &Path, kb_e: &Path, topic: &str, trace: Option<&Path>, alpha: f64) -> Result<()> {
    let kb_r = read_kb("KB_r", kb_r)?;
    let kb_e = read_kb("KB_e", kb_e)?;
    let topic = parse_topic(topic)?;
    let d = run_dialogue(&kb_r, &kb_e, &topic, &Strategies::default(), None)?;
    print!("{}", transcript_lines(d.history()));
    if let Some(path) = trace {
        let json = serde_json::to_string_pretty(&transcript_records(d.history()))?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    let mut ctx = SolveContext::default();
    let queried = d.queried_formulas();
    let pre = similarity(&mut ctx, &kb_e, &kb_r, alpha)?;
    match success_procedure(&mut ctx, &kb_e, d.cs_r(), &queried) {
        Ok((kb, updates)) => {
            let post = similarity(&mut ctx, &kb, &kb_r, alpha)?;
            println!();
            for u in &updates {
                let retracted: Vec<String> = u.retracted.iter().map(ToString::to_string).collect();
                println!("apply {}  retract {{{}}}", u.argument_applied, retracted.join(", "));
            }
            println!("updated KB_e: {kb}");
            println!("sigma {:.4} -> {:.4}", pre.sigma, post.sigma);
        }
        Err(e) => println!("\nnot reconciled: {e}"),
    }
    Ok(())
}

fn explain_ssr(kb_r: &Path, kb_e: &Path, query: &str, alpha: f64) -> Result<()> {
    let kb_r = read_kb("KB_r", kb_r)?;
    let kb_e = read_kb("KB_e", kb_e)?;
    let query = parse_formula(query).context("query")?;
    let mut ctx = SolveContext::default();
    let ssr = single_shot_explanation(&mut ctx, &kb_r, &kb_e, &query, 8)?;
    let list = |fs: &[Formula]| fs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
    println!("add    {{{}}}", list(&ssr.additions));
    println!("remove {{{}}}", list(&ssr.removals));
    let updated = ssr.apply(&kb_e);
    let pre = similarity(&mut ctx, &kb_e, &kb_r, alpha)?;
    let post = similarity(&mut ctx, &updated, &kb_r, alpha)?;
    println!("updated KB_e: {updated}");
    println!("sigma {:.4} -> {:.4}", pre.sigma, post.sigma);
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();
    match Cli::parse().command {
        Command::Bench {
            kb_size,
            conflict_fraction,
            alpha,
            seed,
            reps,
            time_limit,
            atom_ratio,
            max_premise_atoms,
            out,
        } => {
            if !(time_limit > 0.0 && time_limit.is_finite()) {
                bail!("--time-limit must be a positive number of seconds");
            }
            let config = ExperimentConfig {
                kb_size,
                conflict_fraction,
                alpha,
                seed,
                atom_ratio,
                max_premise_atoms,
                time_limit: Duration::from_secs_f64(time_limit),
                repetitions: reps,
            };
            bench(config, out)
        }
        Command::Dialogue {
            kb_r,
            kb_e,
            topic,
            trace,
            alpha,
        } => dialogue(&kb_r, &kb_e, &topic, trace.as_deref(), alpha),
        Command::ExplainSsr {
            kb_r,
            kb_e,
            query,
            alpha,
        } => explain_ssr(&kb_r, &kb_e, &query, alpha),
        Command::Serve {
            addr,
            data_dir,
            menu_size,
            move_budget_ms,
        } => {
            let config = ServiceConfig {
                session: SessionConfig {
                    menu_size,
                    move_budget: Duration::from_millis(move_budget_ms),
                    ..SessionConfig::default()
                },
                data_dir,
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(drhai_service::serve(addr, config))?;
            Ok(())
        }
    }
}
