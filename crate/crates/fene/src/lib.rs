//! Configuration, checkpoints, reports and command dispatch for the FENE
//! micro-macro simulator in `fene-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod experiments;
pub mod report;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "FENE_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`] if it is set.
pub fn init_threads() -> Result<(), String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
            if n == 0 {
                return Err(format!("{THREADS_ENV} must be a positive integer, got 0"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}
