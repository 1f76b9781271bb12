//! Library backing the `spincavity` command-line tool: strict config
//! parsing and reproducible command execution.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_str, ConfigError, ConfigFormat, RunConfig};
pub use run::{execute, RunSummary};

/// Cap the rayon worker count from `SPINCAVITY_THREADS` when set.
pub fn init_thread_pool_from_env() {
    if let Ok(value) = std::env::var("SPINCAVITY_THREADS") {
        if let Ok(n) = value.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
