use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flocklab::harness::{self, list_presets, preset_source, run_scenario, ConfigError, ScenarioConfig, Status};

#[derive(Parser)]
#[command(
    name = "flocklab",
    version,
    about = "Run alignment-dynamics scenarios and check decay envelopes"
)]
struct Cli {
    /// Worker threads for the pairwise loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or bundled preset and write its outputs.
    Run {
        /// Path to a JSON scenario, or the name of a preset.
        config: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write trajectory.jsonl with a snapshot every this many steps.
        #[arg(long)]
        snapshot_every: Option<usize>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// List bundled presets.
    Presets {
        /// Print the JSON of one preset.
        #[arg(long)]
        show: Option<String>,
    },
    /// Parse and validate a scenario without running it.
    Validate { config: String },
}

enum LoadError {
    Read(String),
    Config(ConfigError),
}

fn load(arg: &str) -> Result<ScenarioConfig, LoadError> {
    let path = Path::new(arg);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| LoadError::Read(format!("{arg}: {e}")))?
    } else if let Some(src) = preset_source(arg) {
        src.to_string()
    } else {
        return Err(LoadError::Read(format!(
            "{arg}: no such file or preset (presets: {})",
            list_presets().join(", ")
        )));
    };
    harness::parse_config(&text).map_err(LoadError::Config)
}

fn report_load_error(e: LoadError) -> ExitCode {
    match e {
        LoadError::Read(msg) => eprintln!("error: {msg}"),
        LoadError::Config(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Presets { show: None } => {
            for name in list_presets() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Presets { show: Some(name) } => match preset_source(&name) {
            Some(src) => {
                print!("{src}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown preset {name}");
                ExitCode::from(2)
            }
        },
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("{}: ok", c.name);
                ExitCode::SUCCESS
            }
            Err(e) => report_load_error(e),
        },
        Command::Run {
            config,
            output_dir,
            seed,
            snapshot_every,
            quiet,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return report_load_error(e),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(k) = snapshot_every {
                cfg.outputs.trajectory = true;
                cfg.outputs.snapshot_every = Some(k);
            }
            if let Err(e) = cfg.validate() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            match run_scenario(&cfg, output_dir) {
                Ok(out) => {
                    let v = &out.verdict;
                    if !quiet {
                        println!(
                            "{}: {} steps, t = {}, output in {}",
                            v.name,
                            v.steps,
                            v.t_reached,
                            out.dir.display()
                        );
                        for e in &v.envelopes {
                            println!(
                                "  {:<24} {} max ratio {:.6e}",
                                serde_json::to_value(e.kind)
                                    .ok()
                                    .and_then(|k| k.as_str().map(String::from))
                                    .unwrap_or_default(),
                                if e.violated { "VIOLATED" } else { "ok      " },
                                e.max_ratio
                            );
                        }
                    }
                    if let Some(err) = &v.error {
                        eprintln!("error: {err}");
                    }
                    if !quiet {
                        let s = match v.status {
                            Status::Pass => "pass",
                            Status::Violation => "violation",
                            Status::Error => "error",
                        };
                        println!("verdict: {s}");
                    }
                    ExitCode::from(v.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
