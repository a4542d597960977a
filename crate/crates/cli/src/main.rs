//! `argx`: generate scenarios, run and check exchanges, simulate the
//! experiment grid, and serve live sessions.
//!
//! Exit codes: 0 success, 1 a failed run, violated property or replay
//! mismatch, 2 bad usage or unreadable input.

mod spec;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use argx_core::analysis::{check_all, metrics, ExpectedBiases, Property, RunSummary};
use argx_core::behaviours::{Behaviour, BiasPolicy};
use argx_core::dot::{exchange_dot, DotOptions};
use argx_core::exchange::AgentId;
use argx_core::runner::{run, Transcript};
use argx_core::scenario::{sample_scenario, GeneratorConfig, Scenario, SemanticsChoice};
use argx_core::semantics::SemanticsKind;
use argx_core::simulation::{run_experiment, write_csv_rows, CsvRow, ExperimentConfig, Hypothesis, Knobs, Mode};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "argx", version, about = "Argumentative exchanges between machine and human agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random scenario.
    Gen {
        #[arg(long, env = "ARGX_SEED", default_value_t = 0)]
        seed: u64,
        /// `random`, or one semantics for every agent (df-quad, quad, reb, qem).
        #[arg(long, default_value = "random")]
        semantics: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one exchange and write its transcript.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Machine behaviour, e.g. greedy, greedy:3, shallow:2, counterfactual.
        #[arg(long, default_value = "greedy")]
        mu: String,
        #[arg(long, default_value = "counterfactual")]
        eta: String,
        /// Machine bias for learnt arguments, e.g. constant:0.5.
        #[arg(long, default_value = "constant:0")]
        mu_bias: String,
        /// Human bias for learnt arguments, e.g. random:-0.2.
        #[arg(long, default_value = "random:0")]
        eta_bias: String,
        #[arg(long, env = "ARGX_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a preset experiment (or a custom one) and write one CSV row per cell.
    Simulate {
        #[arg(long, value_enum)]
        hypothesis: Which,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, env = "ARGX_SEED", default_value_t = 0)]
        seed: u64,
        /// Knob overrides for a preset, or the whole experiment for `custom`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every run's transcripts into this directory.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        /// Run on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Check the formal properties of a transcript and print its metrics row.
    Check {
        #[arg(long)]
        transcript: PathBuf,
        /// A property name, or `all`.
        #[arg(long, default_value = "all")]
        property: String,
        /// Shuffled replays for contributor irrelevance.
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, env = "ARGX_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Re-run a transcript and compare it line by line.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
    },
    /// Render the exchange at a timestep as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        transcript: PathBuf,
        /// Timestep to render; the last one by default.
        #[arg(long)]
        t: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve live sessions over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    H1,
    H2,
    H3,
    H4,
    H5,
    Custom,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn failed(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("argx: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Gen { seed, semantics, out } => gen(seed, &semantics, out.as_deref()),
        Command::Run {
            scenario,
            mu,
            eta,
            mu_bias,
            eta_bias,
            seed,
            out,
        } => {
            let mu = behaviour(&mu, &mu_bias)?;
            let eta = behaviour(&eta, &eta_bias)?;
            run_one(&scenario, mu, eta, seed, out.as_deref())
        }
        Command::Simulate {
            hypothesis,
            runs,
            seed,
            config,
            out,
            transcripts,
            serial,
        } => simulate(hypothesis, runs, seed, config.as_deref(), out.as_deref(), transcripts.as_deref(), serial),
        Command::Check {
            transcript,
            property,
            k,
            seed,
        } => check(&transcript, &property, k, seed),
        Command::Replay { transcript } => replay(&transcript),
        Command::ExportDot { transcript, t, out } => export_dot(&transcript, t, out.as_deref()),
        Command::Serve { addr } => serve(addr),
    }
}

fn behaviour(contribution: &str, bias: &str) -> Result<Behaviour, Failure> {
    Ok(Behaviour {
        contribution: spec::contribution(contribution).map_err(|e| usage(anyhow!(e)))?,
        bias: spec::bias(bias).map_err(|e| usage(anyhow!(e)))?,
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).map_err(usage)?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn read_transcript(path: &Path) -> Result<Transcript, Failure> {
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(usage)?;
    Transcript::read_jsonl(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)
}

fn gen(seed: u64, semantics: &str, out: Option<&Path>) -> Outcome {
    let semantics = match semantics {
        "random" => SemanticsChoice::Random,
        s => SemanticsChoice::Fixed(s.parse::<SemanticsKind>().map_err(|e| usage(anyhow!("{e}")))?),
    };
    let cfg = GeneratorConfig {
        semantics,
        ..GeneratorConfig::default()
    };
    let g = sample_scenario(seed, &cfg).map_err(failed)?;
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, &g.scenario).map_err(failed)?;
    writeln!(w).and_then(|_| w.flush()).map_err(failed)?;
    eprintln!("scenario from seed {seed} after {} rejected draws", g.rejections);
    Ok(ExitCode::SUCCESS)
}

fn run_one(scenario: &Path, mu: Behaviour, eta: Behaviour, seed: u64, out: Option<&Path>) -> Outcome {
    let scenario: Scenario = read_json(scenario)?;
    for id in [AgentId::machine(), AgentId::human()] {
        if !scenario.agents.contains_key(&id) {
            return Err(usage(anyhow!("scenario has no agent `{id}`")));
        }
    }
    let setup = scenario.setup(&BTreeMap::from([(AgentId::machine(), mu), (AgentId::human(), eta)]), seed);
    let state = run(&setup).map_err(failed)?;
    let transcript = Transcript::from_state(setup, &state);
    let mut w = output(out)?;
    transcript.write_jsonl(&mut w).and_then(|_| w.flush()).map_err(failed)?;
    eprintln!("{} after {} timesteps", state.status(), state.t());
    Ok(ExitCode::SUCCESS)
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_owned()
}

fn simulate(
    which: Which,
    runs: usize,
    seed: u64,
    config: Option<&Path>,
    out: Option<&Path>,
    transcripts: Option<&Path>,
    serial: bool,
) -> Outcome {
    let preset = match which {
        Which::H1 => Some(Hypothesis::H1),
        Which::H2 => Some(Hypothesis::H2),
        Which::H3 => Some(Hypothesis::H3),
        Which::H4 => Some(Hypothesis::H4),
        Which::H5 => Some(Hypothesis::H5),
        Which::Custom => None,
    };
    let cfg = match (preset, config) {
        (Some(h), None) => ExperimentConfig::preset(h, runs, seed),
        (Some(h), Some(path)) => {
            let knobs: Knobs = read_json(path)?;
            ExperimentConfig::from_knobs(h, &knobs, runs, seed)
        }
        (None, Some(path)) => read_json(path)?,
        (None, None) => return Err(usage(anyhow!("`--hypothesis custom` needs `--config`"))),
    };
    if cfg.runs == 0 {
        return Err(usage(anyhow!("--runs must be at least 1")));
    }
    #[cfg(feature = "parallel")]
    let mode = if serial { Mode::Serial } else { Mode::default() };
    #[cfg(not(feature = "parallel"))]
    let mode = {
        let _ = serial;
        Mode::Serial
    };
    let result = run_experiment(&cfg, mode, transcripts.is_some()).map_err(failed)?;
    let mut w = output(out)?;
    result.write_csv(&mut w, true).map_err(failed)?;
    w.flush().map_err(failed)?;
    if let (Some(dir), Some(all)) = (transcripts, &result.transcripts) {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(usage)?;
        for (i, per_run) in all.iter().enumerate() {
            for (cell, t) in cfg.cells.iter().zip(per_run) {
                let path = dir.join(format!("run{i:04}_{}.jsonl", slug(&cell.label)));
                let mut f = BufWriter::new(File::create(&path).map_err(failed)?);
                t.write_jsonl(&mut f).and_then(|_| f.flush()).map_err(failed)?;
            }
        }
    }
    for row in result.rows() {
        eprintln!(
            "{:<20} RR {:5.1}  CR {:5.2}  PR_mu {:5.1}  CA_mu {:5.1}",
            row.cell, row.rr, row.cr, row.pr_mu, row.ca_mu
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn check(path: &Path, property: &str, k: usize, seed: u64) -> Outcome {
    let transcript = read_transcript(path)?;
    let wanted: Option<Property> = match property {
        "all" => None,
        p => Some(p.parse().map_err(|e| usage(anyhow!("{e}")))?),
    };
    let state = transcript.rebuild().map_err(failed)?;
    let history = state.history();
    let reports = check_all(history, k, seed);
    let mut violated = false;
    for r in reports.iter().filter(|r| wanted.is_none_or(|w| w == r.property)) {
        println!("{r}");
        violated |= r.is_violated();
    }
    let setup = &transcript.setup;
    let model = ExpectedBiases(
        setup
            .agents
            .iter()
            .filter_map(|(id, a)| Some((id.clone(), a.behaviour?.bias)))
            .collect::<BTreeMap<AgentId, BiasPolicy>>(),
    );
    let summary = RunSummary::from_history(history, &model);
    let row = CsvRow::new(
        "transcript",
        &path.display().to_string(),
        setup.behaviour(&AgentId::machine()),
        setup.behaviour(&AgentId::human()),
        &metrics(&[summary]),
    );
    write_csv_rows(&[row], io::stdout().lock(), true).map_err(failed)?;
    Ok(if violated { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn replay(path: &Path) -> Outcome {
    let transcript = read_transcript(path)?;
    let rerun = transcript.rerun().map_err(failed)?;
    let ours: Vec<String> = transcript.lines().collect();
    let theirs: Vec<String> = rerun.lines().collect();
    match (0..ours.len().max(theirs.len())).find(|&i| ours.get(i) != theirs.get(i)) {
        None => {
            println!("ok: {} timesteps replay identically", ours.len());
            Ok(ExitCode::SUCCESS)
        }
        Some(i) => {
            println!("mismatch at timestep {i}");
            println!("recorded: {}", ours.get(i).map_or("<missing>", String::as_str));
            println!("replayed: {}", theirs.get(i).map_or("<missing>", String::as_str));
            Ok(ExitCode::from(1))
        }
    }
}

fn export_dot(path: &Path, t: Option<u32>, out: Option<&Path>) -> Outcome {
    let transcript = read_transcript(path)?;
    let last = transcript.final_record().t;
    let t = t.unwrap_or(last);
    if t > last {
        return Err(usage(anyhow!("transcript ends at timestep {last}")));
    }
    let dot = exchange_dot(&transcript.setup.explanandum, &transcript.records, t, DotOptions::default());
    let mut w = output(out)?;
    w.write_all(dot.as_bytes()).and_then(|_| w.flush()).map_err(failed)?;
    Ok(ExitCode::SUCCESS)
}

fn serve(addr: SocketAddr) -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(failed)?;
    eprintln!("listening on http://{addr}");
    rt.block_on(argx_session::serve(addr)).map_err(failed)?;
    Ok(ExitCode::SUCCESS)
}
