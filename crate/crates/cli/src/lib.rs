//! Shared pieces of the `hoacs` command-line tool and the overhead benchmark.

pub mod bench;

use anyhow::{Context, Result};
use hoacs_core::ModuliSet;

/// Environment variable consulted when no seed is given explicitly.
pub const SEED_ENV: &str = "HOACS_SEED";

/// Keys from the published leakage experiment; the default key set for `audit`.
pub const SAMPLE_KEYS: [&str; 3] = [
    "2b7eaffccbaed2a6abf7cf8b09cf4fd3",
    "b3ee5ffccbaed2ccabf7cf8bb9cf4fd3",
    "fb4e9ffbcbaed2ccabf7cfbbb9cfbfdd",
];

/// First of `explicit`, `fallback`, `$HOACS_SEED`, then 0.
pub fn resolve_seed(explicit: Option<u64>, fallback: Option<u64>) -> Result<u64> {
    if let Some(s) = explicit.or(fallback) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

/// Comma-separated unsigned integers.
pub fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .with_context(|| format!("{x:?} is not an unsigned integer"))
        })
        .collect()
}

pub fn parse_moduli(s: &str) -> Result<ModuliSet> {
    Ok(ModuliSet::new(&parse_u64_list(s)?)?)
}
