use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use errcons_core::nullsim::{run_simulation_with, SamplingPath, SimOptions, TableCache};
use errcons_core::report::write_table;
use errcons_core::GridSpec;

use crate::exit;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Preset {
    #[value(name = "paper-160")]
    Paper160,
    #[value(name = "paper-1280")]
    Paper1280,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Sampling {
    CountLevel,
    PerTrial,
}

impl From<Sampling> for SamplingPath {
    fn from(s: Sampling) -> Self {
        match s {
            Sampling::CountLevel => SamplingPath::CountLevel,
            Sampling::PerTrial => SamplingPath::PerTrial,
        }
    }
}

/// Grid options shared by `simulate` and `analyze --simulate`. Unset values
/// fall back to the preset (paper-160 when none is given).
#[derive(Clone, Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Trials per simulated experiment.
    #[arg(long = "n")]
    pub n_trials: Option<usize>,
    /// Grid points per accuracy axis.
    #[arg(long)]
    pub axis: Option<usize>,
    /// Repetitions per grid cell.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Band quantiles as `lo,hi`.
    #[arg(long, value_parser = parse_quantiles)]
    pub quantiles: Option<(f64, f64)>,
    /// Fraction of axis points in each tail.
    #[arg(long)]
    pub tail_fraction: Option<f64>,
    /// Width of each tail region.
    #[arg(long)]
    pub tail_width: Option<f64>,
    #[arg(long, value_enum, default_value = "count-level")]
    pub sampling: Sampling,
    /// Directory of cached tables, reused when the grid matches.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

fn parse_quantiles(raw: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = raw.split_once(',').ok_or("expected `lo,hi`")?;
    let p = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad probability `{s}`"));
    Ok((p(lo)?, p(hi)?))
}

impl GridArgs {
    pub fn spec(&self, data_n: Option<usize>) -> anyhow::Result<GridSpec> {
        let mut spec = match self.preset {
            Some(Preset::Paper1280) => GridSpec::paper_1280(),
            Some(Preset::Paper160) | None => GridSpec::paper_160(),
        };
        if let Some(n) = data_n {
            if self.preset.is_some() && spec.n_trials != n {
                bail!("preset simulates {} trials but the data has {n}", spec.n_trials);
            }
            spec.n_trials = n;
        }
        if let Some(n) = self.n_trials {
            spec.n_trials = n;
        }
        if let Some(a) = self.axis {
            spec.axis_points = a;
        }
        if let Some(r) = self.reps {
            spec.reps_per_cell = r;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(q) = self.quantiles {
            spec.quantile_pair = q;
        }
        if let Some(f) = self.tail_fraction {
            spec.tail_fraction = f;
        }
        if let Some(w) = self.tail_width {
            spec.tail_width = w;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn options(&self) -> SimOptions {
        SimOptions {
            path: self.sampling.into(),
            ..SimOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output table file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: SimulateArgs) -> anyhow::Result<u8> {
    let spec = args.grid.spec(None)?;
    let opts = args.grid.options();
    let started = Instant::now();
    let (table, moments, cached) = match &args.grid.cache_dir {
        Some(dir) => {
            let (table, hit) = TableCache::new(dir).get_or_simulate(&spec, &opts)?;
            (table, None, hit)
        }
        None => {
            let out = run_simulation_with(&spec, &opts)?;
            (out.table, Some(out.moments), false)
        }
    };
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_table(&table, opts.path, BufWriter::new(file))?;

    println!("samples: {}", table.total_samples());
    println!("degenerate (kappa undefined): {}", table.degenerate_samples());
    if let Some(m) = moments {
        println!("mean kappa: {:.6}", m.mean_kappa());
        println!("corr(kappa, c_exp): {:.6}", m.correlation());
    }
    if cached {
        println!("table reused from cache");
    }
    println!("wall time: {:.2} s", started.elapsed().as_secs_f64());
    Ok(exit::OK)
}
