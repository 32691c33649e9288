use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lvcomp::config::{default_factor_count, RawConfig, RunConfig, SweepConfig};
use lvcomp::output;
use lvcomp::{analyze, run_sweep_parallel};
use lvcomp_core::presets::PRESETS;
use lvcomp_core::{run_to_equilibrium, steps_map, survival_summary, FieldState};

#[derive(Parser)]
#[command(
    name = "lvcomp",
    version,
    about = "Spatial Lotka-Volterra competition simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one parameter set until equilibrium.
    Run(ModelArgs),
    /// Monte Carlo sweep with survival statistics and factor analysis.
    Sweep(SweepArgs),
    /// Factor analysis of an existing records.csv.
    Analyze(AnalyzeArgs),
    /// List the built-in parameter sets.
    Presets,
}

#[derive(Args)]
struct ModelArgs {
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// 1d, 2da or 2db.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    species: Option<String>,
    /// Comma-separated growth rates.
    #[arg(long)]
    growth: Option<String>,
    /// Comma-separated diffusion coefficients D.
    #[arg(long)]
    diffusion: Option<String>,
    /// Competition matrix, rows separated by `;`.
    #[arg(long)]
    competition: Option<String>,
    /// Initial population, one value or one per species.
    #[arg(long)]
    initial: Option<String>,
    /// Cells per axis.
    #[arg(long)]
    grid: Option<String>,
    /// Domain side length.
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    eps_stop: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    /// regular (eps = D) or small (eps = D/10).
    #[arg(long)]
    diffusion_scale: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// random-diffusion, random-ic or full-random.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    factors: Option<String>,
    #[arg(long)]
    threads: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// records.csv produced by `sweep`.
    #[arg(long)]
    records: PathBuf,
    /// Defaults to 4 for two species and 7 for three.
    #[arg(long)]
    factors: Option<usize>,
    /// Defaults to the directory holding the records.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ModelArgs {
    fn raw(&self) -> Result<RawConfig> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display()))?;
                RawConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => RawConfig::default(),
        };
        let out = self.out.as_ref().map(|p| p.display().to_string());
        for (key, value) in [
            ("scenario", &self.scenario),
            ("preset", &self.preset),
            ("species", &self.species),
            ("growth", &self.growth),
            ("diffusion", &self.diffusion),
            ("competition", &self.competition),
            ("initial", &self.initial),
            ("grid", &self.grid),
            ("length", &self.length),
            ("tau", &self.tau),
            ("eps_stop", &self.eps_stop),
            ("theta", &self.theta),
            ("max_steps", &self.max_steps),
            ("diffusion_scale", &self.diffusion_scale),
            ("out", &out),
        ] {
            if let Some(v) = value {
                raw.set(key, v.as_str())?;
            }
        }
        Ok(raw)
    }
}

fn run(args: &ModelArgs) -> Result<()> {
    let cfg = RunConfig::from_raw(&args.raw()?)?;
    let m = &cfg.model;
    let grid = m.scenario.grid(m.cells_per_axis, m.length)?;
    let initial = FieldState::uniform(&grid, &m.initial, m.run.tau)?;
    let echo = cfg.echo();
    match run_to_equilibrium(&m.scaled_params(), &grid, &initial, &m.run) {
        Ok(res) => {
            output::write_run_outputs(&m.out, &grid, &res, &echo)?;
            let status = if res.converged {
                "converged"
            } else {
                "not converged"
            };
            println!(
                "survival code {} after {} steps ({status}); outputs in {}",
                res.survival_code,
                res.steps_to_equilibrium,
                m.out.display()
            );
            Ok(())
        }
        Err(err) => {
            if let Some(partial) = &err.partial {
                output::write_run_outputs(&m.out, &grid, partial, &echo)?;
                eprintln!("partial outputs written to {}", m.out.display());
            }
            Err(err.cause.into())
        }
    }
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut raw = args.model.raw()?;
    for (key, value) in [
        ("mode", &args.mode),
        ("runs", &args.runs),
        ("seed", &args.seed),
        ("factors", &args.factors),
        ("threads", &args.threads),
    ] {
        if let Some(v) = value {
            raw.set(key, v.as_str())?;
        }
    }
    let cfg = SweepConfig::from_raw(&raw)?;
    let spec = cfg.spec();
    let dir = &cfg.model.out;
    let records = run_sweep_parallel(&spec, cfg.threads)?;

    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("config.txt"), cfg.echo().to_text())
        .with_context(|| format!("cannot write {}", dir.join("config.txt").display()))?;
    output::write_records(&dir.join("records.csv"), &records)?;
    let summary = survival_summary(&records)?;
    output::write_survival_summary(&dir.join("survival_summary.csv"), &summary)?;
    output::write_steps_map(&dir.join("steps_map.csv"), &steps_map(cfg.mode, &records)?)?;

    for (code, count, pct) in summary.rounded_percentages() {
        println!("{code}  {count:>6}  {pct:>6.2}%");
    }
    if summary.non_converged > 0 {
        println!("nc  {:>6}", summary.non_converged);
    }

    if let Some(f) = cfg.factors {
        let a = analyze(&records, f)?;
        output::write_analysis(dir, &a.features, &a.report, &a.labels)?;
        print!("{}", output::factors_text(&a.report, &a.labels));
    }
    println!("outputs in {}", dir.display());
    Ok(())
}

fn analyze_cmd(args: &AnalyzeArgs) -> Result<()> {
    let records = output::read_records(&args.records)?;
    let m = records.first().map_or(0, |r| r.species_count());
    let f = match args.factors {
        Some(f) => f,
        None => default_factor_count(m)
            .with_context(|| format!("no default factor count for {m} species; pass --factors"))?,
    };
    let dir = args.out.clone().unwrap_or_else(|| {
        args.records
            .parent()
            .unwrap_or(Path::new("."))
            .to_path_buf()
    });
    let a = analyze(&records, f)?;
    output::write_analysis(&dir, &a.features, &a.report, &a.labels)?;
    print!("{}", output::factors_text(&a.report, &a.labels));
    Ok(())
}

fn presets() {
    for p in &PRESETS {
        let params = p.params();
        println!("{}  ({})", p.name, p.description);
        println!("    r     = {:?}", params.growth());
        println!("    D     = {:?}", params.diffusion());
        let a = params.competition();
        for i in 0..a.rows() {
            let label = if i == 0 { "alpha" } else { "" };
            println!("    {label:<5} | {:?}", a.row(i));
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Presets => {
            presets();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
