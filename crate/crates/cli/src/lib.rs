//! Config parsing, task dispatch and artifact writing behind the `catabird` binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{emit_config, load_config, parse_config, RunConfig};
pub use run::{run_task, Task};

/// Environment variable capping Monte Carlo worker threads.
pub const THREADS_ENV: &str = "CATABIRD_THREADS";

/// Runs `f` on a rayon pool sized by `CATABIRD_THREADS` when it is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}
