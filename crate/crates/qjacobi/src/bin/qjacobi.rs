use clap::{Parser, Subcommand};
use qjacobi::checks::Suite;
use qjacobi::config::ExperimentConfig;
use qjacobi::scene::SCENE_NAMES;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qjacobi", version, about = "Q-valued sections on minimal submanifolds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run the built-in acceptance checks and print one line per check.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run only these criteria (1-12).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
    /// Built-in scenes.
    Scene {
        #[command(subcommand)]
        cmd: SceneCmd,
    },
}

#[derive(Subcommand)]
enum SceneCmd {
    List,
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { config } => {
            let loaded = match ExperimentConfig::load(&config) {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            match qjacobi::runner::run(&loaded) {
                Ok(rep) => {
                    for w in &rep.manifest.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("{}", serde_json::to_string_pretty(&rep.manifest.summary).unwrap_or_default());
                    println!("artifacts in {}", rep.output_dir.display());
                    if rep.success {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Cmd::Verify { seed, only } => {
            let suite = Suite::new(seed);
            let mut ok = true;
            for &(id, _) in qjacobi::checks::CRITERIA.iter() {
                if !only.is_empty() && !only.contains(&id) {
                    continue;
                }
                let out = suite.run(id);
                println!("{}", out.line());
                ok &= out.passed;
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Cmd::Scene { cmd: SceneCmd::List } => {
            for name in SCENE_NAMES {
                let params = match name {
                    "flat_disk" => "m (1..=3, default 2), k (default 1), trailing (default 0)",
                    _ => "m (default 2)",
                };
                println!("{name}\t{params}");
            }
            ExitCode::SUCCESS
        }
    }
}
