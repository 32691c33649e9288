//! Multi-threaded sweep execution.

use anyhow::{Context, Result};
use lvcomp_core::{run_single, SweepRecord, SweepSpec};
use rayon::prelude::*;

/// Runs every index of `spec` on a pool of `threads` workers (all cores when
/// `None`). Records come back in run-index order whatever the worker count.
pub fn run_sweep_parallel(spec: &SweepSpec, threads: Option<usize>) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("cannot start worker pool")?;
    let records = pool.install(|| {
        (0..spec.run_count)
            .into_par_iter()
            .map(|i| run_single(spec, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(records)
}
