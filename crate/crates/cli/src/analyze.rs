use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use errcons_core::consistency::pairwise_matrix;
use errcons_core::ingest::{align, parse_files, AlignPolicy, ColumnMapping, MatchMode};
use errcons_core::nullsim::{run_simulation_with, TableCache};
use errcons_core::report::{
    accuracy_table, confusion, group_summary, read_table, scatter_report, write_accuracy_csv, write_confusion_json,
    write_scatter_csv, write_summary_json, Normalization,
};
use errcons_core::{ObserverId, PercentileTable};
use serde::Serialize;

use crate::exit;
use crate::simulate::GridArgs;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Profile {
    Canonical,
    PublishedBehavioral,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Policy {
    RequireComplete,
    Intersect,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Matching {
    Strict,
    CaseInsensitive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Norm {
    None,
    Row,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("band").multiple(false))]
pub struct AnalyzeArgs {
    /// Response CSV files.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "canonical")]
    pub profile: Profile,
    /// JSON column mapping; overrides the profile.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// JSON object mapping observer id to group label. Without it every
    /// observer is in group `all`.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "require-complete")]
    pub policy: Policy,
    /// How expected and response categories are compared.
    #[arg(long = "match", value_enum, default_value = "strict")]
    pub matching: Matching,
    #[arg(long, value_enum, default_value = "none")]
    pub confusion_norm: Norm,
    /// Percentile table for the null bands.
    #[arg(long, group = "band")]
    pub band_table: Option<PathBuf>,
    /// Simulate the null bands for the data's trial count.
    #[arg(long, group = "band")]
    pub simulate: bool,
    /// Emit no null bands (the default).
    #[arg(long, group = "band")]
    pub no_band: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct AlignmentReport<'a> {
    observers: usize,
    trials: usize,
    dropped: &'a BTreeMap<ObserverId, usize>,
    derived_from_categories: usize,
    na_responses: usize,
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn load_groups(path: Option<&Path>, observers: &[ObserverId]) -> anyhow::Result<BTreeMap<ObserverId, String>> {
    let Some(path) = path else {
        return Ok(observers.iter().map(|o| (o.clone(), "all".to_owned())).collect());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let groups: BTreeMap<ObserverId, String> =
        serde_json::from_str(&text).with_context(|| format!("parsing groups file {}", path.display()))?;
    Ok(groups)
}

fn band_table(args: &AnalyzeArgs, n: usize) -> anyhow::Result<Option<PercentileTable>> {
    if let Some(path) = &args.band_table {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let (table, _) = read_table(file).with_context(|| format!("reading table {}", path.display()))?;
        return Ok(Some(table));
    }
    if !args.simulate {
        return Ok(None);
    }
    let spec = args.grid.spec(Some(n))?;
    let opts = args.grid.options();
    let table = match &args.grid.cache_dir {
        Some(dir) => TableCache::new(dir).get_or_simulate(&spec, &opts)?.0,
        None => run_simulation_with(&spec, &opts)?.table,
    };
    Ok(Some(table))
}

pub fn run(args: AnalyzeArgs) -> anyhow::Result<u8> {
    let mapping = match (&args.mapping, args.profile) {
        (Some(path), _) => ColumnMapping::from_json_file(path)?,
        (None, Profile::Canonical) => ColumnMapping::canonical(),
        (None, Profile::PublishedBehavioral) => ColumnMapping::published_behavioral(),
    };
    let policy = match args.policy {
        Policy::RequireComplete => AlignPolicy::RequireComplete,
        Policy::Intersect => AlignPolicy::Intersect,
    };
    let mode = match args.matching {
        Matching::Strict => MatchMode::Strict,
        Matching::CaseInsensitive => MatchMode::CaseInsensitive,
    };

    let rows = parse_files(&args.input, &mapping)?;
    let alignment = align(&rows, policy, mode)?;
    let outcomes = &alignment.outcomes;
    if outcomes.observers().len() < 2 {
        bail!(errcons_core::Error::InsufficientData {
            needed: 2,
            got: outcomes.observers().len()
        });
    }
    let groups = load_groups(args.groups.as_deref(), outcomes.observers())?;
    let table = band_table(&args, outcomes.n_trials())?;

    let matrix = pairwise_matrix::<f64>(outcomes)?;
    let points = scatter_report(&matrix, &groups, table.as_ref())?;
    let summary = group_summary(&points)?;
    let accuracies = accuracy_table(outcomes);

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let flush = |mut w: BufWriter<File>| w.flush();
    let mut w = create(&args.out, "scatter.csv")?;
    write_scatter_csv(&points, &mut w)?;
    flush(w)?;
    let mut w = create(&args.out, "summary.json")?;
    write_summary_json(&summary, &mut w)?;
    flush(w)?;
    let mut w = create(&args.out, "accuracy.csv")?;
    write_accuracy_csv(&accuracies, &mut w)?;
    flush(w)?;

    let report = AlignmentReport {
        observers: outcomes.observers().len(),
        trials: outcomes.n_trials(),
        dropped: &alignment.dropped,
        derived_from_categories: alignment.derived_from_categories,
        na_responses: alignment.na_responses,
    };
    let mut w = create(&args.out, "alignment.json")?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    flush(w)?;

    if rows.iter().all(|r| r.expected.is_some() && r.response.is_some()) {
        let norm = match args.confusion_norm {
            Norm::None => Normalization::None,
            Norm::Row => Normalization::Row,
        };
        let matrices = outcomes
            .observers()
            .iter()
            .map(|o| confusion(&rows, o, norm))
            .collect::<Result<Vec<_>, _>>()?;
        let mut w = create(&args.out, "confusion.json")?;
        write_confusion_json(&matrices, &mut w)?;
        flush(w)?;
    }

    println!(
        "{} observers, {} trials, {} pairs",
        outcomes.observers().len(),
        outcomes.n_trials(),
        points.len()
    );
    Ok(exit::OK)
}
