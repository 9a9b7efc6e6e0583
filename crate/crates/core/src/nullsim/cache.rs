use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::sampler::SamplingPath;
use super::simulate::{run_simulation_with, SimOptions};
use crate::error::{Error, Result};
use crate::report::{format_float, read_table, write_table};
use crate::types::{GridSpec, PercentileTable};

/// Directory of simulated tables, one file per (spec, sampling path).
#[derive(Clone, Debug)]
pub struct TableCache {
    dir: PathBuf,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, spec: &GridSpec, path: SamplingPath) -> PathBuf {
        let name = format!(
            "table_n{}_axis{}_reps{}_tf{}_tw{}_seed{}_q{}-{}_{}.csv",
            spec.n_trials,
            spec.axis_points,
            spec.reps_per_cell,
            format_float(spec.tail_fraction),
            format_float(spec.tail_width),
            spec.seed,
            format_float(spec.quantile_pair.0),
            format_float(spec.quantile_pair.1),
            path.name(),
        );
        self.dir.join(name)
    }

    /// Loads the cached table for `spec`, simulating and storing it on a miss.
    /// The flag is true on a cache hit.
    pub fn get_or_simulate(&self, spec: &GridSpec, opts: &SimOptions) -> Result<(PercentileTable, bool)> {
        let file = self.path_for(spec, opts.path);
        if file.exists() {
            let (table, path) = read_table(File::open(&file).map_err(|e| Error::io(&file, e))?)?;
            if &table.spec == spec && path == opts.path {
                return Ok((table, true));
            }
        }
        let table = run_simulation_with(spec, opts)?.table;
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        store(&file, &table, opts.path)?;
        // reload so that hits and misses return the same (rounded) values
        let (table, _) = read_table(File::open(&file).map_err(|e| Error::io(&file, e))?)?;
        Ok((table, false))
    }
}

fn store(file: &Path, table: &PercentileTable, path: SamplingPath) -> Result<()> {
    let tmp = file.with_extension("tmp");
    let out = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    write_table(table, path, BufWriter::new(out))?;
    fs::rename(&tmp, file).map_err(|e| Error::io(file, e))
}
