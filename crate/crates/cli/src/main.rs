use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convexpot::experiment::{
    fit_constants, map_table_csv, maps_csv, run, run_maps, run_zeros, zeros_csv, ExperimentConfig,
    ExperimentError, ExperimentKind, ExperimentReport, RunOptions,
};

/// Bergman polynomial zero-distribution experiments on convex domains.
#[derive(Parser)]
#[command(name = "convexpot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// largest degree (overrides the config)
    #[arg(long)]
    n_max: Option<usize>,
    /// worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// ignore and do not write the map/sequence cache
    #[arg(long)]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a config
    Validate(Common),
    /// Exterior/interior maps: capacity and boundary tables
    Map(Common),
    /// Orthonormal polynomials: λ_n, norms, Gram residuals
    Orthopoly(Common),
    /// Zeros of Q_n with their location flags
    Zeros(Common),
    /// Discrepancy sweep over n
    Sweep(Common),
    /// Discrepancy against the potential gap across domains
    Theorem2(Common),
    /// The V_δ sharpness example
    Example1(Common),
    /// Faber polynomial norms
    Faber(Common),
    /// Chebyshev polynomials by Lawson iteration
    Chebyshev(Common),
    /// Fit constants to the records of a saved JSON report
    Fit {
        /// report JSON written by `sweep`, `theorem2` or `orthopoly`
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(c: &Common, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::from_path(&c.config)?;
    if let Some(k) = kind {
        cfg.experiment = k;
    }
    if let Some(n) = c.n_max {
        cfg.n_max = n;
        if let Some(q) = cfg.grid.quadrature_n_max {
            cfg.grid.quadrature_n_max = Some(q.max(n));
        }
    }
    if let Some(o) = &c.out {
        cfg.output_dir = Some(o.clone());
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("out"));
    }
    if c.no_cache {
        cfg.cache = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), ExperimentError> {
    let io = |e: std::io::Error| ExperimentError::Stage {
        stage: "output",
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(io)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn experiment(c: &Common, kind: ExperimentKind) -> Result<(), ExperimentError> {
    let cfg = load(c, Some(kind))?;
    let opts = RunOptions::for_config(&cfg, c.jobs, c.no_cache);
    let report = run(&cfg, &opts)?;
    let (csv, json) = report.write(cfg.output_dir.as_deref().unwrap())?;
    println!("wrote {}\nwrote {}", csv.display(), json.display());
    for d in &report.domains {
        if let Some(k) = &d.constants {
            println!(
                "{}: cap = {:.12}, c1 = {:.4}, c2 = {:.4}, c3 = {:.4e}{}",
                d.label,
                d.capacity,
                k.c1,
                k.c2,
                k.c3,
                k.rate_c.map(|c| format!(", rate c = {c:.4}")).unwrap_or_default()
            );
        }
    }
    if let Some(c) = report.gap_c {
        println!("global gap C = {c:.4}");
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), ExperimentError> {
    match cmd {
        Command::Validate(c) => {
            let cfg = load(&c, None)?;
            println!("config ok ({}), hash {}", cfg.experiment.name(), cfg.hash());
            Ok(())
        }
        Command::Map(c) => {
            let cfg = load(&c, None)?;
            let maps = run_maps(&cfg, &RunOptions::for_config(&cfg, c.jobs, c.no_cache))?;
            let dir = cfg.output_dir.unwrap();
            write(&dir, "maps.csv", &maps_csv(&maps))?;
            for m in &maps {
                write(&dir, &format!("map-{}.csv", m.label), &map_table_csv(m))?;
            }
            Ok(())
        }
        Command::Zeros(c) => {
            let cfg = load(&c, None)?;
            let rows = run_zeros(&cfg, &RunOptions::for_config(&cfg, c.jobs, c.no_cache))?;
            write(&cfg.output_dir.unwrap(), "zeros.csv", &zeros_csv(&rows))
        }
        Command::Orthopoly(c) => experiment(&c, ExperimentKind::Orthopoly),
        Command::Sweep(c) => experiment(&c, ExperimentKind::DiscrepancySweep),
        Command::Theorem2(c) => experiment(&c, ExperimentKind::Theorem2Check),
        Command::Example1(c) => experiment(&c, ExperimentKind::Example1),
        Command::Faber(c) => experiment(&c, ExperimentKind::FaberSuite),
        Command::Chebyshev(c) => experiment(&c, ExperimentKind::ChebyshevSuite),
        Command::Fit { report, out } => {
            let text = fs::read_to_string(&report).map_err(|e| ExperimentError::Config(e.to_string()))?;
            let rep = ExperimentReport::from_json(&text)?;
            let mut fits = serde_json::Map::new();
            for d in &rep.domains {
                let recs: Vec<_> = rep.records.iter().filter(|r| r.domain == d.label).cloned().collect();
                let k = fit_constants(&recs)?;
                fits.insert(d.label.clone(), serde_json::to_value(k).expect("serializes"));
            }
            let text = serde_json::to_string_pretty(&fits).expect("serializes");
            match out {
                Some(dir) => write(&dir, "fit.json", &text),
                None => {
                    println!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
