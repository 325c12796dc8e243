//! Command-line laboratory around `dcl-core`: manifest-driven simulations,
//! verification suites and refinement studies with file artifacts.

pub mod artifact;
pub mod converge;
pub mod error;
pub mod manifest;
pub mod simulate;
pub mod verify;

pub use error::{LabError, Result};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "DCL_THREADS";

/// Size of the worker pool: `DCL_THREADS` when set, otherwise 1.
pub fn thread_count(value: Option<&str>) -> Result<usize> {
    match value {
        None => Ok(1),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(LabError::config(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_count_defaults_to_one() {
        assert_eq!(thread_count(None).unwrap(), 1);
        assert_eq!(thread_count(Some("4")).unwrap(), 4);
        assert!(thread_count(Some("0")).is_err());
        assert!(thread_count(Some("many")).is_err());
    }
}
