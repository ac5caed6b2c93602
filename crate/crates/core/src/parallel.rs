//! Thread-count control for the rayon pool.

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "CAMGRAPH_THREADS";

/// Thread cap from `CAMGRAPH_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Configures the global pool from the environment. Call once, early.
pub fn init_from_env() {
    if let Some(n) = thread_cap() {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not set thread count to {n}: {e}");
        }
    }
}
