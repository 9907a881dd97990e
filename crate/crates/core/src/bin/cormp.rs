use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cormp::config::PlannerConfig;
use cormp::par::Execution;
use cormp::report::{write_comparison, write_run};
use cormp::scenario::{DriverProfile, Scenario};
use cormp::sim::{resolve_profile, run, run_batch, Job, PlannerKind};

#[derive(Parser)]
#[command(name = "cormp", version, about = "Run maneuver-planning scenarios and compare planners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario with one planner.
    Run {
        #[command(flatten)]
        common: Common,
        /// cor-mp, mobil or utility.
        #[arg(long, default_value = "cor-mp")]
        planner: PlannerKind,
    },
    /// Simulate one scenario with several planners and write a joint report.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "cor-mp,mobil,utility")]
        planners: Vec<PlannerKind>,
    },
}

#[derive(Args)]
struct Common {
    scenario: PathBuf,
    /// regular, aggressive or fuel-efficient.
    #[arg(long)]
    profile: Option<DriverProfile>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Planner config document; falls back to $CORMP_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load(common: &Common) -> Result<(Scenario, PlannerConfig, DriverProfile, String), String> {
    let scenario = Scenario::from_path(&common.scenario).map_err(|e| format!("{}: {e}", common.scenario.display()))?;
    let config = PlannerConfig::resolve(common.config.as_deref()).map_err(|e| format!("config: {e}"))?;
    let profile = resolve_profile(&scenario, &config, common.profile);
    let name = scenario_name(&common.scenario);
    Ok((scenario, config, profile, name))
}

fn scenario_name(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { common, planner } => load(common).and_then(|(scenario, config, profile, name)| {
            let log = run(&scenario, &config, *planner, profile);
            let m = write_run(&common.out, &name, &log).map_err(|e| format!("writing {}: {e}", common.out.display()))?;
            println!(
                "{name} {planner} {profile}: avg_speed {:.3} m/s, collisions {}, rule_violations {}",
                m.avg_speed, m.collisions, m.rule_violations
            );
            Ok(m.collisions + m.rule_violations)
        }),
        Command::Compare { common, planners } => load(common).and_then(|(scenario, config, profile, name)| {
            let jobs: Vec<Job> = planners
                .iter()
                .map(|&planner| Job {
                    scenario: &scenario,
                    planner,
                    profile,
                })
                .collect();
            let logs = run_batch(&jobs, &config, Execution::available());
            let ms = write_comparison(&common.out, &name, &logs)
                .map_err(|e| format!("writing {}: {e}", common.out.display()))?;
            let mut incidents = 0;
            for (l, m) in logs.iter().zip(&ms) {
                println!(
                    "{name} {} {profile}: avg_speed {:.3} m/s, collisions {}, rule_violations {}",
                    l.planner, m.avg_speed, m.collisions, m.rule_violations
                );
                incidents += m.collisions + m.rule_violations;
            }
            Ok(incidents)
        }),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
