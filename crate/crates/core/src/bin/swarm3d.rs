use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use swarm3d::harness::{self, presets, ScenarioConfig, StopKind};
use swarm3d::{geometry, Error, LatticeKind, Region};

/// Coverage, search and formation simulations for 3D sensor swarms.
#[derive(Parser)]
#[command(name = "swarm3d", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        config: PathBuf,
        /// Output directory for trajectory.csv, metrics.json and metadata.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Exit with status 3 if the horizon is reached before the stop rule fires.
        #[arg(long)]
        strict: bool,
    },
    /// Run one scenario file over a seed range and summarise steps.
    Batch {
        config: PathBuf,
        /// `a..b` or `a..=b`.
        #[arg(long)]
        seeds: String,
        /// Write per-seed metrics and the summary as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Run a named preset.
    Preset {
        name: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seeds 0..N; scenario presets default to one seed, tables to 20.
        #[arg(long)]
        seeds: Option<u64>,
        /// Print the preset's config as TOML instead of running it.
        #[arg(long)]
        print_config: bool,
        #[arg(long)]
        list: bool,
    },
    /// Covering-set statistics of a lattice in a box.
    GridStats {
        kind: LatticeKind,
        /// `x0,y0,z0,x1,y1,z1` or a single side length for a centred cube.
        #[arg(allow_hyphen_values = true)]
        region: String,
        #[arg(long, default_value_t = 1.0)]
        r_s: f64,
    },
}

enum Failure {
    Config(Error),
    Horizon(String),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Parse(_) | Error::InvalidParameter(_) | Error::InvalidRegion(_) => {
                Failure::Config(e)
            }
            Error::Trial { ref source, .. } if matches!(**source, Error::Config { .. }) => Failure::Config(e),
            e => Failure::Other(e),
        }
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run_one(cfg: &ScenarioConfig, out: &Path, strict: bool) -> Result<(), Failure> {
    let res = harness::run_scenario(cfg)?;
    warn_all(&res.warnings);
    harness::write_outputs(out, cfg, &res)?;
    let m = &res.metrics;
    println!(
        "{} seed {}: {} after {} steps ({} agents) -> {}",
        cfg.mode.name(),
        cfg.seed,
        m.stop_reason.name(),
        m.steps_to_stop,
        m.agents,
        out.display()
    );
    if let Some(f) = &m.formation {
        println!(
            "  ey {:.3} (peak {:.3}), ez {:.3} (peak {:.3}), constraints {}",
            f.final_ey,
            f.peak_ey,
            f.final_ez,
            f.peak_ez,
            if f.constraints_satisfied { "held" } else { "VIOLATED" }
        );
    }
    if strict && m.stop_reason == StopKind::Horizon && cfg.mode != harness::Mode::Formation {
        return Err(Failure::Horizon(format!("seed {} reached the horizon without stopping", cfg.seed)));
    }
    Ok(())
}

fn batch(cfg: &ScenarioConfig, seeds: &[u64], out: Option<&Path>, strict: bool) -> Result<(), Failure> {
    warn_all(&cfg.validate()?);
    let report = harness::batch_run(cfg, seeds)?;
    let s = &report.steps;
    println!(
        "{} runs, {} stopped: mean {:.2}, median {:.1}, q1 {:.1}, q3 {:.1}, iqr {:.1}, min {}, max {}",
        s.count, report.completed, s.mean, s.median, s.q1, s.q3, s.iqr, s.min, s.max
    );
    if let Some(p) = out {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
        }
        harness::write_batch_report(p, &report)?;
    }
    if strict && report.completed < report.runs.len() && cfg.mode != harness::Mode::Formation {
        return Err(Failure::Horizon(format!("{} of {} runs reached the horizon", report.runs.len() - report.completed, s.count)));
    }
    Ok(())
}

fn preset(name: Option<String>, out: &Path, seeds: Option<u64>, print_config: bool, list: bool) -> Result<(), Failure> {
    let Some(name) = name.filter(|_| !list) else {
        for n in presets::SCENARIO_PRESETS.iter().chain(presets::TABLE_PRESETS.iter()) {
            println!("{n:<22} {}", presets::describe(n).unwrap_or(""));
        }
        return Ok(());
    };
    if let Some(cfg) = presets::scenario(&name) {
        if print_config {
            print!("{}", cfg.to_toml()?);
            return Ok(());
        }
        let n = seeds.unwrap_or(1);
        for seed in 0..n {
            let dir = if n == 1 { out.to_path_buf() } else { out.join(format!("seed-{seed}")) };
            run_one(&cfg.with_seed(seed), &dir, false)?;
        }
        return Ok(());
    }
    if presets::TABLE_PRESETS.contains(&name.as_str()) {
        let seeds: Vec<u64> = (0..seeds.unwrap_or(20)).collect();
        let table = presets::table(&name, &seeds)?;
        print!("{}", table.render());
        std::fs::create_dir_all(out).map_err(Error::from)?;
        let path = out.join(format!("{name}.csv"));
        std::fs::write(&path, table.to_csv()).map_err(Error::from)?;
        println!("-> {}", path.display());
        return Ok(());
    }
    Err(Error::config("preset", format!("unknown preset `{name}`; try --list")).into())
}

fn parse_region(s: &str) -> Result<Region, Error> {
    let nums: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{t}` in region"))))
        .collect::<Result<_, _>>()?;
    match nums[..] {
        [side] => Region::cube(geometry::Vec3::ZERO, side),
        [a, b, c, d, e, f] => Region::new(geometry::Vec3::new(a, b, c), geometry::Vec3::new(d, e, f)),
        _ => Err(Error::Parse("region needs 1 or 6 numbers".into())),
    }
}

fn grid_stats(kind: LatticeKind, region: &str, r_s: f64) -> Result<(), Failure> {
    let region = parse_region(region)?;
    let spec = geometry::LatticeSpec::new(kind, region.center(), r_s)?;
    let set = geometry::covering_set(&spec, &region)?;
    let degrees: Vec<usize> = (0..set.len()).map(|i| set.neighbors(i).len()).collect();
    let mean_degree = degrees.iter().sum::<usize>() as f64 / degrees.len().max(1) as f64;
    println!("lattice              {kind}");
    println!("faces                {}", kind.face_count());
    println!("volumetric quotient  {:.4}", geometry::volumetric_quotient(kind));
    println!("min r_c / r_s        {:.4}", geometry::min_connectivity_ratio(kind));
    println!("covering vertices    {}", set.len());
    println!("mean grid degree     {mean_degree:.2}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, strict } => {
            ScenarioConfig::load(&config).map_err(Failure::from).and_then(|cfg| run_one(&cfg, &out, strict))
        }
        Command::Batch { config, seeds, out, strict } => ScenarioConfig::load(&config)
            .and_then(|cfg| Ok((cfg, harness::parse_seed_range(&seeds)?)))
            .map_err(Failure::from)
            .and_then(|(cfg, seeds)| batch(&cfg, &seeds, out.as_deref(), strict)),
        Command::Preset { name, out, seeds, print_config, list } => preset(name, &out, seeds, print_config, list),
        Command::GridStats { kind, region, r_s } => grid_stats(kind, &region, r_s),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Horizon(msg)) => {
            eprintln!("horizon: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
