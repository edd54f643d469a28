use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use stoch_slod::grid::GridSpec;
use stoch_slod::harness::{self, build_combination, ExperimentConfig, Study};
use stoch_slod::slod::{assemble_coarse_solution, compute_crb, sigma_overall};

/// Stochastic localized orthogonal decomposition for random diffusion
/// coefficients on the unit box.
#[derive(Parser)]
#[command(name = "stoch-slod", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable. Takes precedence over the file and
    /// `SSLOD_*` environment variables.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let overrides = self
            .set
            .iter()
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.to_string()))
                    .with_context(|| format!("expected KEY=VALUE, got '{kv}'"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentConfig::load(self.config.as_deref(), &overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build (and cache) the coarse model of every admissible combination.
    Basis(ConfigArgs),
    /// Coarse solution for the configured right-hand side, first admissible
    /// combination only.
    Solve(ConfigArgs),
    /// Localization indicators over all admissible combinations.
    SigmaStudy(ConfigArgs),
    /// Riesz constants over all admissible combinations.
    RieszStudy(ConfigArgs),
    /// Full error report against reference Monte-Carlo solutions.
    Convergence(ConfigArgs),
    /// Small oracle checks.
    Selftest,
    /// Print the resolved configuration.
    Config(ConfigArgs),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Basis(a) => basis(&a.load()?),
        Command::Solve(a) => solve(&a.load()?),
        Command::SigmaStudy(a) | Command::RieszStudy(a) => {
            print!("{}", harness::run_study(&a.load()?, Study::Indicators)?.csv);
            Ok(())
        }
        Command::Convergence(a) => {
            print!("{}", harness::run_experiment(&a.load()?)?.csv);
            Ok(())
        }
        Command::Selftest => {
            let checks = harness::selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                bail!("selftest failed");
            }
            Ok(())
        }
        Command::Config(a) => {
            let c = a.load()?;
            for k in harness::config::KEYS {
                println!("{k} = {}", c.get(k)?);
            }
            println!("# hash {}", c.hash());
            Ok(())
        }
    }
}

fn basis(config: &ExperimentConfig) -> Result<()> {
    println!("H,eps,ell,T,sigma_t,candidates");
    for c in harness::admissible(config) {
        let model = build_combination(config, c, Study::Indicators)?;
        for b in &model.bases {
            println!(
                "{:e},{:e},{},{},{:.16e},{}",
                (-(c.log_coarse as f64)).exp2(),
                (-(c.log_eps as f64)).exp2(),
                c.ell,
                b.center,
                b.sigma_t,
                b.candidates
            );
        }
        match compute_crb(&model) {
            Ok(crb) => log::info!("sigma={:e} C_rb={crb:e}", sigma_overall(&model)),
            Err(e) => log::warn!("{e}"),
        }
    }
    Ok(())
}

fn solve(config: &ExperimentConfig) -> Result<()> {
    let Some(c) = harness::admissible(config).into_iter().next() else {
        bail!("no admissible combination");
    };
    let model = build_combination(config, c, Study::Convergence)?;
    let spec = GridSpec::new(config.d, c.log_coarse, c.log_eps, config.log_h)?;
    let f = config.rhs.project(config.d, config.log_h, c.log_coarse)?;
    let sol = assemble_coarse_solution(&model, &f)?;
    log::info!("expansion residual {:e}", sol.expansion_residual);
    let n = spec.per_axis(stoch_slod::grid::Level::Coarse);
    let hsize = 1.0 / n as f64;
    if config.d == 1 {
        println!("x,ubar");
        for (i, v) in sol.ubar.values.iter().enumerate() {
            println!("{:.16e},{v:.16e}", (i as f64 + 0.5) * hsize);
        }
    } else {
        println!("x,y,ubar");
        for (k, v) in sol.ubar.values.iter().enumerate() {
            println!("{:.16e},{:.16e},{v:.16e}", (k / n) as f64 * hsize + 0.5 * hsize, (k % n) as f64 * hsize + 0.5 * hsize);
        }
    }
    Ok(())
}
